use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nhse_core::rug::{float::Constant, Float};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const BITS: u32 = 512;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

struct Ctx {
    root: tempfile::TempDir,
    results: Vec<Outcome>,
}

impl Ctx {
    fn record(&mut self, id: &'static str, pass: bool, detail: String) {
        println!("{} {id:>4}  {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push(Outcome { id, pass, detail });
    }

    fn dir(&self, leaf: &str) -> PathBuf {
        self.root.path().join(leaf)
    }
}

fn nhse(args: &[&str]) -> (Duration, String) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_nhse")).args(args).env_remove("NHSE_PRECISION_BITS").output().expect("spawn nhse");
    let elapsed = start.elapsed();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(out.status.success(), "nhse {args:?} failed: {stderr}");
    (elapsed, stderr)
}

fn recipe_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(format!("{name}.json"))
}

fn run_recipe(ctx: &Ctx, name: &str) -> (PathBuf, Duration) {
    let out = ctx.dir(name);
    let (t, _) = nhse(&["run", recipe_path(name).to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (out, t)
}

fn artifact(dir: &Path, run: &str, stem: &str) -> PathBuf {
    dir.join(run).join(format!("{run}_{stem}"))
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn hp(text: &str) -> Float {
    Float::with_val(BITS, Float::parse(text.trim()).unwrap_or_else(|e| panic!("{text:?}: {e}")))
}

fn hp_value(v: &Value) -> Float {
    match v {
        Value::Number(n) => hp(&n.to_string()),
        Value::String(s) => hp(s),
        other => panic!("not a number: {other}"),
    }
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn sci(x: f64) -> String {
    format!("{x:.2e}")
}

fn closed_form_spectrum(ctx: &mut Ctx, dir: &Path, elapsed: Duration) {
    let rows = read_csv(&artifact(dir, "solvers", "eigenvalues.csv"));
    let mut expected: Vec<Float> = (1..=40u32)
        .map(|n| {
            let angle = Float::with_val(BITS, Constant::Pi) * n / 41u32;
            Float::with_val(BITS, 8u32).sqrt() * angle.cos()
        })
        .collect();
    expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut got: Vec<(Float, Float)> = rows.iter().map(|r| (hp(&r[1]), hp(&r[2]))).collect();
    got.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut worst = 0f64;
    for ((re, im), e) in got.iter().zip(&expected) {
        let d = Float::with_val(BITS, re - e).abs().to_f64().max(im.clone().abs().to_f64());
        worst = worst.max(d);
    }
    let pass = got.len() == 40 && worst < 1e-25 && elapsed < Duration::from_secs(10);
    ctx.record(
        "1",
        pass,
        format!("OBC N=40 spectrum vs 2*sqrt(2)*cos(n pi/41): max error {} (< 1e-25), {:.2} s (< 10 s)", sci(worst), elapsed.as_secs_f64()),
    );
}

fn precision_contrast(ctx: &mut Ctx, dir: &Path) {
    let summary = read_json(&artifact(dir, "solvers", "summary.json"));
    let qr = f(&summary["qr_reference"]["max_abs_imag"]);
    let aberth = f(&summary["checks"]["max_abs_imag"]);
    ctx.record("2a", qr > 1e-4, format!("double-precision QR max |Im E| = {} (> 1e-4 required)", sci(qr)));
    ctx.record("2b", aberth < 1e-25, format!("256-bit Aberth max |Im E| = {} (< 1e-25)", sci(aberth)));
}

fn quantization(ctx: &mut Ctx, dir: &Path, elapsed: Duration) {
    for (id, run) in [("3a", "a_n20"), ("3b", "b_n40")] {
        let q = read_json(&artifact(dir, run, "quantize.json"));
        let worst = f(&q["max_residual_abs"]);
        let rows = read_csv(&artifact(dir, run, "quantization.csv"));
        ctx.record(
            id,
            worst < 1e-13 && !rows.is_empty(),
            format!("{run}: {} polished roots, max residual {} (< 1e-13)", rows.len(), sci(worst)),
        );
    }
    ctx.record("3c", elapsed < Duration::from_secs(30), format!("quantization recipe runtime {:.2} s (< 30 s)", elapsed.as_secs_f64()));
}

fn fragmentation(ctx: &mut Ctx, dir: &Path) {
    let j = read_json(&artifact(dir, "g_fragments", "fragcheck.json"));
    let dev = f(&j["max_deviation"]);
    let weight = f(&j["impurity_weight"]);
    let sizes = (j["left"].as_array().unwrap().len(), j["right"].as_array().unwrap().len());
    let pass = dev < 1e-3 && (weight - 1.0).abs() < 1e-3 && sizes == (4, 13);
    ctx.record(
        "4",
        pass,
        format!("fragments {sizes:?}: max relative deviation {} (< 1e-3), impurity weight {weight:.9} (|w-1| < 1e-3)", sci(dev)),
    );
}

fn linear_mode(ctx: &mut Ctx, dir: &Path) {
    let two_sqrt2 = Float::with_val(BITS, 8u32).sqrt();
    let mut worst_e = 0f64;
    let mut worst_v = 0f64;
    for run in ["a_ratio1", "a_ratio2", "a_ratio4"] {
        let modes = read_json(&artifact(dir, run, "modes.json"));
        let imp = modes["modes"].as_array().unwrap().iter().find(|m| m["select"] == "impurity").unwrap();
        let e = Float::with_val(BITS, hp_value(&imp["energy"][0]) - &two_sqrt2).abs().to_f64().max(f(&imp["energy"][1]).abs());
        worst_e = worst_e.max(e);
        let a = read_csv(&artifact(dir, run, "mode_impurity.csv"));
        let b = read_csv(&artifact(dir, run, "mode_linear_plus.csv"));
        let norm = |rows: &[Vec<String>]| {
            let mut s = Float::new(BITS);
            for r in rows {
                s += hp(&r[1]).square();
            }
            s.sqrt()
        };
        let (na, nb) = (norm(&a), norm(&b));
        for (ra, rb) in a.iter().zip(&b) {
            let d = Float::with_val(BITS, hp(&ra[1]) / &na - hp(&rb[1]) / &nb).abs().to_f64();
            worst_v = worst_v.max(d);
        }
        assert_eq!(a.len(), b.len());
    }
    ctx.record("5a", worst_e < 1e-10, format!("impurity energy at delta_c vs 2 sqrt(tL tR): max error {} (< 1e-10)", sci(worst_e)));
    ctx.record("5b", worst_v < 1e-8, format!("impurity mode vs linear-mode closed form, normalized: max error {} (< 1e-8)", sci(worst_v)));
}

fn mode_entry(dir: &Path, run: &str) -> Value {
    let modes = read_json(&artifact(dir, run, "modes.json"));
    modes["modes"].as_array().unwrap().iter().find(|m| m["select"] == "impurity").unwrap().clone()
}

fn icse(ctx: &mut Ctx, dir: &Path) {
    let m = mode_entry(dir, "b_icse");
    let flat = f(&m["tail_flatness"]);
    let e = f(&m["energy"][0]);
    let pass = flat <= 0.05 && (e - 5.0).abs() <= 0.05;
    ctx.record("6", pass, format!("N=40 l=5 tR=4 delta=3: tail flatness {flat:.4} (<= 0.05), energy {e:.5} (within 1% of 5)"));

    let on = f(&mode_entry(dir, "c_edge_icse")["tail_flatness"]);
    let off = f(&mode_entry(dir, "c_edge_bulk_delta")["tail_flatness"]);
    ctx.record("7", on <= 0.05 && off > 0.05, format!("l=1: delta=4 flatness {on:.4} (<= 0.05), delta=3 flatness {} (> 0.05)", sci(off)));
}

fn critical_ratios(ctx: &mut Ctx) {
    let mut runs = Vec::new();
    for n in 21..=40usize {
        for l in 1..=20usize {
            runs.push(json!({
                "name": format!("n{n}_l{l}"),
                "command": "modes",
                "modes": ["critical"],
                "formats": ["json"],
                "chain": {"N": n, "l": l, "tL": 1, "tR": 2, "delta": 1},
            }));
        }
    }
    runs.push(json!({
        "name": "n20_l6", "command": "modes", "modes": ["critical"], "formats": ["json"],
        "chain": {"N": 20, "l": 6, "tL": 1, "tR": 2, "delta": 1},
    }));
    let recipe = ctx.dir("critical.json");
    std::fs::write(&recipe, serde_json::to_string(&json!({ "runs": runs })).unwrap()).unwrap();
    let out = ctx.dir("critical");
    nhse(&["run", recipe.to_str().unwrap(), "--out", out.to_str().unwrap(), "--bits", "256"]);
    let mut worst = 0f64;
    for n in 21..=40usize {
        for l in 1..=20usize {
            let run = format!("n{n}_l{l}");
            let y = &read_json(&artifact(&out, &run, "modes.json"))["critical"]["y_c"];
            let prod = Float::with_val(BITS, hp_value(&y[0]) * hp_value(&y[1])) - 1u32;
            worst = worst.max(prod.abs().to_f64());
        }
    }
    ctx.record("8a", worst < 1e-30, format!("y_c+ * y_c- = 1 over N=21..40, l=1..20: max |product - 1| {} (< 1e-30)", sci(worst)));
    let y = &read_json(&artifact(&out, "n20_l6", "modes.json"))["critical"]["y_c"];
    let (p, m) = (f(&y[0]), f(&y[1]));
    let pass = (p - 1.2621).abs() < 1e-4 && (m - 0.7923).abs() < 1e-4;
    ctx.record("8b", pass, format!("N=20 l=6: y_c+ = {p:.6} (1.2621), y_c- = {m:.6} (0.7923), tolerance 1e-4"));
}

fn phase_diagram(ctx: &mut Ctx, dir: &Path) {
    let j = read_json(&artifact(dir, "a_forward", "phase_scan.json"));
    let yc = f(&j["y_c"][0]);
    let rows = read_csv(&artifact(dir, "a_forward", "scan.csv"));
    let deltas: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let mut uniq = deltas.clone();
    uniq.sort_by(f64::total_cmp);
    uniq.dedup();
    let cell = (uniq[uniq.len() - 1] - uniq[0]) / (uniq.len() - 1) as f64;
    let mut checked = 0;
    let mut missed = Vec::new();
    for m in j["minima"].as_array().unwrap() {
        let ratio = f(&m["ratio"]);
        if ratio <= yc {
            continue;
        }
        checked += 1;
        let target = ratio - 1.0;
        let mins: Vec<f64> = m["delta"].as_array().unwrap().iter().map(f).collect();
        let hit = |t: f64| mins.iter().any(|d| (d - t).abs() <= cell + 1e-9);
        if !(hit(target) && hit(-target)) {
            missed.push(ratio);
        }
    }
    let grid_ok = rows.len() == 41 * 41;
    ctx.record(
        "9a",
        grid_ok && checked > 0 && missed.is_empty(),
        format!(
            "41x41 scan: D+1 minima within one cell ({cell}) of delta = +-(tR - tL) in {}/{checked} rows above y_c+ = {yc:.4}",
            checked - missed.len()
        ),
    );
    let mut asym = 0;
    for (i, r) in rows.iter().enumerate() {
        let mirror = rows.iter().position(|s| s[0] == r[0] && (s[1].parse::<f64>().unwrap() + deltas[i]).abs() < 1e-9);
        match mirror {
            Some(k) if rows[k][2] == r[2] && rows[k][3] == r[3] => {}
            _ => asym += 1,
        }
    }
    ctx.record("9b", asym == 0, format!("delta -> -delta mirror: {asym} of {} cells differ (exact text equality)", rows.len()));
}

fn winding(ctx: &mut Ctx) {
    let out = ctx.dir("winding");
    let o = out.to_str().unwrap();
    nhse(&[
        "winding", "--N", "40", "--tL", "1", "--tR", "2", "--delta", "0", "--bc", "pbc", "--base", "0,0", "--base", "4,0", "--base", "0,2",
        "--base", "-3.5,0.5", "--out", o,
    ]);
    let j = read_json(&out.join("winding.json"));
    let w: Vec<i64> = j["results"].as_array().unwrap().iter().map(|r| r["winding"].as_i64().unwrap()).collect();
    let pass = w.len() == 4 && w[0].abs() == 1 && w[1..].iter().all(|&x| x == 0);
    ctx.record(
        "10",
        pass,
        format!("PBC tL=1 tR=2: winding about 0 = {} ({}), outside points {:?}", w[0], j["convention"].as_str().unwrap_or("?"), &w[1..]),
    );
}

fn ssh(ctx: &mut Ctx, topo: &Path, trivial: &Path) {
    let side = |dir: &Path, run: &str| {
        let s = read_json(&artifact(dir, run, "summary.json"));
        let m = &s["impurity_mode"];
        let l = m["left_flatness"].as_f64().unwrap_or(f64::INFINITY);
        let r = m["right_flatness"].as_f64().unwrap_or(f64::INFINITY);
        l.min(r)
    };
    for (id, dir, delta) in [("11a", topo, "0.595"), ("11b", trivial, "0.3715")] {
        let a = side(dir, "c_tuned_A");
        let b = side(dir, "c_tuned_B");
        let regime = if id == "11a" { "topological" } else { "trivial" };
        ctx.record(id, a <= 0.10 && b <= 0.10, format!("NR-SSH {regime} delta={delta}: best side flatness A {a:.4}, B {b:.4} (<= 0.10)"));
    }
    let ct = side(topo, "d_strong");
    let cv = side(trivial, "d_strong");
    ctx.record("11c", ct > 0.10 && cv > 0.10, format!("NR-SSH delta=10 control: best side flatness {} / {} (> 0.10)", sci(ct), sci(cv)));
}

fn walk(ctx: &mut Ctx, comparison: &Path, defects: &Path) {
    let rows = read_csv(&artifact(comparison, "unbiased_ring", "walk.csv"));
    let header = read_json(&artifact(comparison, "unbiased_ring", "walk.json"));
    let len = rows.len();
    let x0 = header["lattice"]["x0"].as_u64().unwrap() as usize;
    let p: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let asym = (0..len).map(|d| (p[(x0 + d) % len] - p[(x0 + len - d) % len]).abs()).fold(0f64, f64::max);
    ctx.record("12a", len == 80 && asym < 1e-10, format!("unbiased walk, L=80, 70 steps: max |p(x0+d) - p(x0-d)| {} (< 1e-10)", sci(asym)));
    let drift = f(&read_json(&artifact(comparison, "drift", "walk.json"))["mean_displacement"]);
    ctx.record("12b", drift > 0.0, format!("r=0.9 ell=0.3: normalized mean displacement {drift:.4} (> 0)"));
    let w0 = f(&read_json(&artifact(defects, "g_trap_phi0", "walk.json"))["impurity_weight"]);
    let wpi = f(&read_json(&artifact(defects, "g_trap_phipi", "walk.json"))["impurity_weight"]);
    ctx.record("12c", wpi > w0, format!("M2 at the start site: late-time weight phi=pi {} vs phi=0 {}", sci(wpi), sci(w0)));
}

fn oracle_suite(ctx: &mut Ctx) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut runs = Vec::new();
    let hop = |rng: &mut ChaCha8Rng| {
        let v = rng.gen_range(50..=200) as f64 / 100.0;
        if rng.gen_bool(0.2) {
            -v
        } else {
            v
        }
    };
    for i in 0..50 {
        let n = rng.gen_range(2..=24usize);
        let l = rng.gen_range(1..=n);
        let tl = hop(&mut rng);
        let tr = hop(&mut rng);
        let delta = rng.gen_range(-300..=300) as f64 / 100.0;
        let chain = json!({"N": n, "l": l, "tL": format!("{tl}"), "tR": format!("{tr}"), "delta": format!("{delta}"), "bc": "obc"});
        for command in ["spectrum", "quantize"] {
            runs.push(json!({"name": format!("s{i:02}_{command}"), "command": command, "formats": ["csv", "json"], "chain": chain}));
        }
    }
    let recipe = ctx.dir("oracle.json");
    std::fs::write(&recipe, serde_json::to_string(&json!({ "runs": runs })).unwrap()).unwrap();
    let out = ctx.dir("oracle");
    nhse(&["run", recipe.to_str().unwrap(), "--out", out.to_str().unwrap(), "--bits", "256", "--tol", "1e-30"]);
    let tol = 10.0 * 1e-30;
    let (mut cf, mut bi, mut tr, mut det, mut compared) = (0f64, 0f64, 0f64, 0f64, 0usize);
    for i in 0..50 {
        let q = read_json(&artifact(&out, &format!("s{i:02}_quantize"), "quantize.json"));
        for d in q["closed_form_distance"].as_array().unwrap() {
            cf = cf.max(f(d));
            compared += 1;
        }
        let s = read_json(&artifact(&out, &format!("s{i:02}_spectrum"), "summary.json"));
        bi = bi.max(f(&s["checks"]["biorthogonality_defect"]));
        tr = tr.max(f(&s["checks"]["trace_defect"]));
        det = det.max(f(&s["checks"]["determinant_defect"]));
    }
    ctx.record(
        "13a",
        compared > 0 && cf <= tol,
        format!("50 random specs: closed form vs eigenvector pair, {compared} modes, max distance {} (<= 1e-29)", sci(cf)),
    );
    let pass = bi <= tol && tr <= tol && det <= tol;
    ctx.record("13b", pass, format!("biorthogonality {}, trace {}, determinant {} (each <= 1e-29)", sci(bi), sci(tr), sci(det)));
}

fn main() {
    let start = Instant::now();
    let mut ctx = Ctx { root: tempfile::tempdir().unwrap(), results: Vec::new() };

    let (sf1, t1) = run_recipe(&ctx, "sf1");
    closed_form_spectrum(&mut ctx, &sf1, t1);
    precision_contrast(&mut ctx, &sf1);
    let (sf2, t2) = run_recipe(&ctx, "sf2");
    quantization(&mut ctx, &sf2, t2);
    let (fig1, _) = run_recipe(&ctx, "fig1");
    fragmentation(&mut ctx, &fig1);
    let (fig2, _) = run_recipe(&ctx, "fig2");
    linear_mode(&mut ctx, &fig2);
    let (sf3, _) = run_recipe(&ctx, "sf3");
    icse(&mut ctx, &sf3);
    critical_ratios(&mut ctx);
    let (fig3, _) = run_recipe(&ctx, "fig3");
    phase_diagram(&mut ctx, &fig3);
    winding(&mut ctx);
    let (sf5, _) = run_recipe(&ctx, "sf5");
    let (sf6, _) = run_recipe(&ctx, "sf6");
    ssh(&mut ctx, &sf5, &sf6);
    let (sf7, _) = run_recipe(&ctx, "sf7");
    let (sf8, _) = run_recipe(&ctx, "sf8");
    walk(&mut ctx, &sf7, &sf8);
    oracle_suite(&mut ctx);

    let total = start.elapsed();
    ctx.record("13c", total < Duration::from_secs(600), format!("acceptance suite runtime {:.1} s (< 600 s)", total.as_secs_f64()));

    let failed: Vec<&Outcome> = ctx.results.iter().filter(|o| !o.pass).collect();
    println!("acceptance: {} passed, {} failed", ctx.results.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        for o in &failed {
            println!("  failed {}: {}", o.id, o.detail);
        }
        std::process::exit(1);
    }
}
