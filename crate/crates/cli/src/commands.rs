use std::path::PathBuf;

use nhse_core::diagnostics::{
    find_impurity_mode, find_ssh_impurity_mode, fragmentation_check, head_flatness, nhse_profile_with, phase_scan, ssh_icse_delta,
    ssh_side_flatness, tail_flatness, winding_number, Aggregate,
};
use nhse_core::fibonacci::{
    closed_form_eigenvector, delta_critical, icse_delta, icse_energy_estimate, linear_mode, near_edge, quantization_residual_obc,
    quantization_residual_pbc, refine_wavevector, y_critical,
};
use nhse_core::io::{
    complex_json, eigenvalues_csv, fragmentation_json, profile_csv, quantization_csv, real_json, run_config_to_json, scan_csv,
    spectrum_to_json, ssh_spec_to_json, to_pretty, walk_csv, walk_header_json, Command, ModeSelect, RunConfig, RunInput, ScanConfig,
    WalkConfig,
};
use nhse_core::lattice::{
    build_hatano_nelson, build_nr_ssh, dispersion_obc, dispersion_pbc, ssh_bloch_spectrum, Boundary, ChainSpec, DenseMatrix, SSHSpec,
};
use nhse_core::numeric::{acos_c, pi, HPComplex, PrecisionConfig};
use nhse_core::profile::ModeProfile;
use nhse_core::spectral::{char_poly_eval, full_spectrum, qr_reference, Spectrum};
use nhse_core::svg::{heatmap, lines, scatter, Series};
use nhse_core::walk::{evolve, mean_displacement, position_distribution, WalkState};
use serde_json::{json, Map, Value};

use crate::{write_file, CliError, Report};

const CURVE_SAMPLES: usize = 256;

struct Out<'a> {
    run: &'a RunConfig,
    report: Report,
}

impl<'a> Out<'a> {
    fn new(run: &'a RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&run.output_dir).map_err(|e| CliError::Io { path: run.output_dir.clone(), source: e })?;
        Ok(Out { run, report: Report::default() })
    }

    fn path(&self, stem: &str, ext: &str) -> PathBuf {
        let file = match &self.run.name {
            Some(n) => format!("{n}_{stem}.{ext}"),
            None => format!("{stem}.{ext}"),
        };
        self.run.output_dir.join(file)
    }

    fn json(&mut self, stem: &str, v: &Value) -> Result<(), CliError> {
        if self.run.formats.json {
            let p = self.path(stem, "json");
            write_file(&p, &to_pretty(v), &mut self.report)?;
        }
        Ok(())
    }

    fn csv(&mut self, stem: &str, text: &str) -> Result<(), CliError> {
        if self.run.formats.csv {
            let p = self.path(stem, "csv");
            write_file(&p, text, &mut self.report)?;
        }
        Ok(())
    }

    fn svg(&mut self, stem: &str, make: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.run.formats.svg {
            let p = self.path(stem, "svg");
            write_file(&p, &make(), &mut self.report)?;
        }
        Ok(())
    }

    fn warn(&mut self, msg: impl Into<String>) {
        self.report.warnings.push(msg.into());
    }
}

/// Run one configuration and write its artifacts.
pub fn execute(run: &RunConfig) -> Result<Report, CliError> {
    let mut out = Out::new(run)?;
    out.json("config", &run_config_to_json(run))?;
    let cfg = &run.precision;
    match (&run.input, run.command) {
        (RunInput::Chain(spec), Command::Spectrum) => spectrum(&mut out, spec, cfg)?,
        (RunInput::Chain(spec), Command::Modes) => modes(&mut out, spec, cfg)?,
        (RunInput::Chain(spec), Command::Quantize) => quantize(&mut out, spec, cfg)?,
        (RunInput::Chain(spec), Command::Fragcheck) => fragcheck(&mut out, spec, cfg)?,
        (RunInput::Chain(spec), Command::Winding) => winding(&mut out, spec)?,
        (RunInput::Scan(scan), Command::PhaseScan) => scan_cmd(&mut out, scan, cfg)?,
        (RunInput::Walk(walk), Command::Walk) => walk_cmd(&mut out, walk)?,
        (RunInput::Ssh(spec), Command::Ssh) => ssh(&mut out, spec, cfg)?,
        (_, c) => return Err(CliError::Usage(format!("input does not match command {}", c.as_str()))),
    }
    Ok(out.report)
}

fn c64_pair(z: &HPComplex) -> (f64, f64) {
    let c = z.to_c64();
    (c.re, c.im)
}

fn f64_value(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// Accuracy checks of a decomposition against the matrix it came from.
fn spectrum_checks(matrix: &DenseMatrix, s: &Spectrum) -> Result<Value, CliError> {
    let bits = matrix.prec();
    let mut sum = HPComplex::zero(bits);
    let mut prod = HPComplex::one(bits);
    for e in &s.eigenvalues {
        sum += e;
        prod = &prod * e;
    }
    let trace = matrix.trace();
    let (det, _) = char_poly_eval(matrix, &HPComplex::zero(bits))?;
    let scale = |z: &HPComplex| z.abs_f64().max(1.0);
    let max_im = s.eigenvalues.iter().map(|e| e.im().to_f64().abs()).fold(0.0, f64::max);
    Ok(json!({
        "size": s.len(),
        "max_residual": real_json(&s.max_residual()),
        "biorthogonality_defect": real_json(&s.max_biorthogonality_defect()),
        "trace_defect": f64_value(sum.dist(&trace).to_f64() / scale(&trace)),
        "determinant_defect": f64_value(prod.dist(&det).to_f64() / scale(&det)),
        "clustered": s.clustered.iter().filter(|c| **c).count(),
        "max_abs_imag": f64_value(max_im),
    }))
}

fn qr_part(out: &mut Out, matrix: &DenseMatrix) -> Result<Value, CliError> {
    match qr_reference(matrix) {
        Ok(values) => {
            let mut text = String::from("index,re,im\n");
            for (i, z) in values.iter().enumerate() {
                let c = z.to_c64();
                text.push_str(&format!("{i},{:?},{:?}\n", c.re, c.im));
            }
            out.csv("qr_reference", &text)?;
            let max_im = values.iter().map(|z| z.to_c64().im.abs()).fold(0.0, f64::max);
            Ok(json!({ "converged": true, "max_abs_imag": f64_value(max_im) }))
        }
        Err(e) => {
            out.warn(format!("double-precision QR reference failed: {e}"));
            Ok(json!({ "converged": false, "error": e.to_string() }))
        }
    }
}

fn ring_curve(spec: &ChainSpec) -> Vec<(f64, f64)> {
    let bits = 64;
    let two_pi = pi(bits) * 2u32;
    let s = spec.with_prec(bits);
    (0..=CURVE_SAMPLES)
        .map(|k| {
            let q = HPComplex::from_real(rug_ratio(&two_pi, k, CURVE_SAMPLES));
            c64_pair(&dispersion_pbc(&q, &s))
        })
        .collect()
}

fn rug_ratio(span: &nhse_core::rug::Float, k: usize, n: usize) -> nhse_core::rug::Float {
    nhse_core::rug::Float::with_val(span.prec(), span * k as u32) / n as u32
}

fn spectrum(out: &mut Out, spec: &ChainSpec, cfg: &PrecisionConfig) -> Result<(), CliError> {
    let matrix = build_hatano_nelson(spec);
    let s = full_spectrum(&matrix, cfg)?;
    out.json("spectrum", &spectrum_to_json(&s))?;
    out.csv("eigenvalues", &eigenvalues_csv(&s))?;
    let qr = qr_part(out, &matrix)?;
    let mut summary = Map::new();
    summary.insert("checks".into(), spectrum_checks(&matrix, &s)?);
    summary.insert("qr_reference".into(), qr);
    out.json("summary", &Value::Object(summary))?;
    let points: Vec<(f64, f64)> = s.eigenvalues.iter().map(c64_pair).collect();
    let curve = ring_curve(spec);
    out.svg("spectrum", || {
        scatter(
            &format!("Spectrum, N = {}, {}", spec.n_sites(), spec.boundary().as_str()),
            "Re E",
            "Im E",
            &[Series::new("eigenvalues", points), Series::new("ring band", curve)],
        )
    })?;
    Ok(())
}

fn mode_summary(tag: &str, p: &ModeProfile, l: usize, index: Option<usize>) -> Value {
    let n = p.len();
    let tail = (l + 2 <= n.saturating_sub(2)).then(|| tail_flatness(p, l).ok()).flatten();
    let head = (l >= 6).then(|| head_flatness(p, l).ok()).flatten();
    json!({
        "select": tag,
        "index": index,
        "energy": p.energy.as_ref().map(complex_json),
        "tail_flatness": tail.map(f64_value),
        "head_flatness": head.map(f64_value),
    })
}

fn critical_values(spec: &ChainSpec) -> Value {
    let dc = delta_critical(spec.n_sites(), spec.impurity_site(), spec.t_left(), spec.t_right()).ok();
    let yc = y_critical(spec.n_sites(), spec.impurity_site(), spec.prec()).ok();
    let (ip, im) = icse_delta(spec);
    json!({
        "delta_c": dc.map(|(p, m)| json!([complex_json(&p), complex_json(&m)])),
        "y_c": yc.map(|(p, m)| json!([real_json(&p), real_json(&m)])),
        "icse_delta": [complex_json(&ip), complex_json(&im)],
        "near_edge": near_edge(spec),
    })
}

fn modes(out: &mut Out, spec: &ChainSpec, cfg: &PrecisionConfig) -> Result<(), CliError> {
    let l = spec.impurity_site();
    if near_edge(spec) {
        out.warn(format!(
            "impurity at site {l} of {} is near an edge: the bulk ICSE strength tR - tL does not apply (edge sites need delta = tR for l = 1, tL for l = N)",
            spec.n_sites()
        ));
    }
    let needs_spectrum = out.run.modes.iter().any(|m| {
        matches!(m, ModeSelect::Impurity | ModeSelect::Aggregate | ModeSelect::AggregateModulus | ModeSelect::All | ModeSelect::Index(_))
    });
    let s = if needs_spectrum { Some(full_spectrum(&build_hatano_nelson(spec), cfg)?) } else { None };
    let mut entries = Vec::new();
    let mut curves = Vec::new();
    let mut emit = |out: &mut Out, tag: String, p: &ModeProfile, index: Option<usize>| -> Result<(), CliError> {
        out.csv(&format!("mode_{tag}"), &profile_csv(p))?;
        entries.push(mode_summary(&tag, p, l, index));
        curves.push(Series::new(tag, p.magnitudes_f64().iter().enumerate().map(|(j, m)| ((j + 1) as f64, *m)).collect()));
        Ok(())
    };
    for sel in out.run.modes.clone() {
        match sel {
            ModeSelect::Impurity => {
                let (i, p) = find_impurity_mode(s.as_ref().expect("spectrum"), spec, cfg)?;
                emit(out, "impurity".into(), &p, Some(i))?;
            }
            ModeSelect::Aggregate => {
                let p = nhse_profile_with(s.as_ref().expect("spectrum"), Aggregate::Squared);
                emit(out, "aggregate".into(), &p, None)?;
            }
            ModeSelect::AggregateModulus => {
                let p = nhse_profile_with(s.as_ref().expect("spectrum"), Aggregate::Modulus);
                emit(out, "aggregate_abs".into(), &p, None)?;
            }
            ModeSelect::Linear(sign) => {
                let p = linear_mode(spec, sign, cfg)?;
                emit(out, if sign > 0 { "linear_plus".into() } else { "linear_minus".into() }, &p, None)?;
            }
            ModeSelect::IcseEstimate => {
                let sign = if spec.delta().re().is_sign_negative() { -1 } else { 1 };
                let e = icse_energy_estimate(spec.t_left(), spec.t_right(), sign);
                let two_s = spec.sqrt_lr().scale(&nhse_core::rug::Float::with_val(spec.prec(), 2));
                let kd = acos_c(&(&e / &two_s), cfg)?;
                let mut p = closed_form_eigenvector(spec, &kd)?;
                p.energy = Some(dispersion_obc(&kd, spec));
                emit(out, "icse_estimate".into(), &p, None)?;
            }
            ModeSelect::Fragments => {
                let r = fragmentation_check(spec, cfg)?;
                emit(out, "fragments_full".into(), &r.full, None)?;
                if let Some(p) = &r.left {
                    emit(out, "fragments_left".into(), p, None)?;
                }
                if let Some(p) = &r.right {
                    emit(out, "fragments_right".into(), p, None)?;
                }
            }
            ModeSelect::Critical => {}
            ModeSelect::All => {
                let s = s.as_ref().expect("spectrum");
                for (i, p) in s.right_vectors.iter().enumerate() {
                    emit(out, format!("index_{i}"), p, Some(i))?;
                }
            }
            ModeSelect::Index(i) => {
                let s = s.as_ref().expect("spectrum");
                let p = s.right_vectors.get(i).ok_or_else(|| CliError::Usage(format!("mode index {i} outside 0..{}", s.len())))?;
                emit(out, format!("index_{i}"), p, Some(i))?;
            }
        }
    }
    let summary = json!({ "modes": entries, "critical": critical_values(spec) });
    out.json("modes", &summary)?;
    if !curves.is_empty() {
        out.svg("modes", || lines(&format!("Mode profiles, N = {}, l = {l}", spec.n_sites()), "site j", "|psi_j|", &curves, true))?;
    }
    Ok(())
}

fn quantize(out: &mut Out, spec: &ChainSpec, cfg: &PrecisionConfig) -> Result<(), CliError> {
    let s = full_spectrum(&build_hatano_nelson(spec), cfg)?;
    let mut rows = Vec::with_capacity(s.len());
    let mut distances = Vec::with_capacity(s.len());
    for (i, e) in s.eigenvalues.iter().enumerate() {
        let (kd, _) = refine_wavevector(spec, e, cfg).map_err(|err| err.with_index(i))?;
        let row = match spec.boundary() {
            Boundary::Obc => quantization_residual_obc(spec, &kd)?,
            Boundary::Pbc => {
                let rp = &spec.sqrt_y() * &(&HPComplex::i(cfg.bits()) * &kd).exp();
                let mut q = quantization_residual_pbc(spec, &rp, cfg)?;
                q.kd = kd.clone();
                q
            }
        };
        let d = match spec.boundary() {
            Boundary::Obc if !s.clustered[i] => {
                closed_form_eigenvector(spec, &kd).ok().and_then(|p| p.aligned_distance(&s.right_vectors[i]).ok()).map(|d| real_json(&d))
            }
            _ => None,
        };
        distances.push(d.unwrap_or(Value::Null));
        rows.push(row);
    }
    out.csv("quantization", &quantization_csv(&rows))?;
    let max_res = rows.iter().map(|r| r.value.abs_f64()).fold(0.0, f64::max);
    let summary = json!({
        "boundary": spec.boundary().as_str(),
        "max_residual_abs": f64_value(max_res),
        "closed_form_distance": distances,
    });
    out.json("quantize", &summary)?;
    let pts: Vec<(f64, f64)> = rows.iter().enumerate().map(|(i, r)| (i as f64, r.value.abs_f64())).collect();
    out.svg("quantize", || lines("Quantization residuals", "eigenvalue index", "|residual|", &[Series::new("", pts)], true))?;
    Ok(())
}

fn fragcheck(out: &mut Out, spec: &ChainSpec, cfg: &PrecisionConfig) -> Result<(), CliError> {
    let r = fragmentation_check(spec, cfg)?;
    out.json("fragcheck", &fragmentation_json(&r))?;
    let series = |label: &str, p: &ModeProfile, offset: usize| {
        Series::new(label, p.magnitudes_f64().iter().enumerate().map(|(j, m)| ((j + 1 + offset) as f64, *m)).collect())
    };
    let mut curves = vec![series("full chain", &r.full, 0)];
    if let Some(p) = &r.left {
        curves.push(series("left fragment", p, 0));
    }
    if let Some(p) = &r.right {
        curves.push(series("right fragment", p, spec.impurity_site()));
    }
    out.svg("fragcheck", || lines("Aggregate profile and pristine fragments", "site j", "weight", &curves, true))?;
    Ok(())
}

fn winding(out: &mut Out, spec: &ChainSpec) -> Result<(), CliError> {
    let mut results = Vec::new();
    for b in &out.run.base_points {
        let w = winding_number(spec, b, out.run.samples)?;
        results.push(json!({ "base": complex_json(b), "winding": w }));
    }
    let v = json!({
        "curve": "E(qd) = (tL + tR) cos qd + i (tL - tR) sin qd, qd from 0 to 2 pi",
        "convention": "counter-clockwise positive",
        "results": results,
    });
    out.json("winding", &v)?;
    let curve = ring_curve(spec);
    let bases: Vec<(f64, f64)> = out.run.base_points.iter().map(c64_pair).collect();
    out.svg("winding", || {
        scatter("Ring band and base points", "Re E", "Im E", &[Series::new("ring band", curve), Series::new("base points", bases)])
    })?;
    Ok(())
}

fn scan_cmd(out: &mut Out, c: &ScanConfig, cfg: &PrecisionConfig) -> Result<(), CliError> {
    let threads = c.threads.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let scan = phase_scan(c.n_sites, c.l, c.ratio_range, c.delta_range, c.resolution, c.x, cfg, threads)?;
    if c.l <= 3 || c.l + 2 >= c.n_sites {
        out.warn(format!("impurity at site {} of {} is near an edge: expect the ICSE off the bulk lines", c.l, c.n_sites));
    }
    out.csv("scan", &scan_csv(&scan))?;
    let failed = scan.flags.iter().flatten().filter(|f| **f).count();
    let minima: Vec<Value> = (0..scan.ratio_axis.len())
        .map(|i| json!({ "ratio": f64_value(scan.ratio_axis[i]), "delta": scan.minima(i).iter().map(|&k| f64_value(scan.delta_axis[k])).collect::<Vec<_>>() }))
        .collect();
    let yc = y_critical(c.n_sites, c.l, cfg.bits()).ok();
    let summary = json!({
        "N": c.n_sites,
        "l": c.l,
        "x": c.x,
        "failed_cells": failed,
        "y_c": yc.map(|(p, m)| json!([real_json(&p), real_json(&m)])),
        "minima": minima,
    });
    out.json("phase_scan", &summary)?;
    out.svg("scan", || {
        heatmap(
            &format!("ln(1e-5 + |D_{}|), N = {}, l = {}", c.x, c.n_sites, c.l),
            "tR / tL",
            "delta / tL",
            &scan.ratio_axis,
            &scan.delta_axis,
            &scan.values,
            &scan.flags,
        )
    })?;
    Ok(())
}

fn walk_cmd(out: &mut Out, c: &WalkConfig) -> Result<(), CliError> {
    let start = match c.extended_bits {
        Some(bits) => WalkState::point_extended(c.len, c.start, c.coin_state, bits)?,
        None => WalkState::point(c.len, c.start, c.coin_state)?,
    };
    let run = evolve(&start, c.steps, &c.coin, &c.impurity, c.boundary)?;
    let raw = position_distribution(&run.state, false)?;
    let norm = position_distribution(&run.state, true)?;
    out.csv("walk", &walk_csv(&raw, &norm))?;
    let mut header = walk_header_json(c, &run.norm_trace);
    if let Value::Object(m) = &mut header {
        m.insert("mean_displacement".into(), f64_value(mean_displacement(&norm, c.start)));
        if let Some(site) = c.impurity.site() {
            m.insert("impurity_weight".into(), f64_value(norm[site]));
        }
    }
    out.json("walk", &header)?;
    let pts: Vec<(f64, f64)> = norm.iter().enumerate().map(|(x, p)| (x as f64, *p)).collect();
    out.svg("walk", || {
        lines(
            &format!("Walk after {} steps, r = {}, ell = {}, {}", c.steps, c.coin.r(), c.coin.ell(), c.impurity.model_name()),
            "x",
            "p(x)",
            &[Series::new("", pts)],
            false,
        )
    })?;
    Ok(())
}

fn ssh(out: &mut Out, spec: &SSHSpec, cfg: &PrecisionConfig) -> Result<(), CliError> {
    let matrix = build_nr_ssh(spec);
    let s = full_spectrum(&matrix, cfg)?;
    out.json("spectrum", &spectrum_to_json(&s))?;
    out.csv("eigenvalues", &eigenvalues_csv(&s))?;

    let bits = spec.prec();
    let two_pi = pi(bits) * 2u32;
    let mut bloch = String::from("kappa,plus_re,plus_im,minus_re,minus_im\n");
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for k in 0..=CURVE_SAMPLES {
        let kappa = rug_ratio(&two_pi, k, CURVE_SAMPLES) - pi(bits);
        let (a, b) = ssh_bloch_spectrum(&kappa, spec);
        let (pa, pb) = (c64_pair(&a), c64_pair(&b));
        bloch.push_str(&format!("{:?},{:?},{:?},{:?},{:?}\n", kappa.to_f64(), pa.0, pa.1, pb.0, pb.1));
        plus.push(pa);
        minus.push(pb);
    }
    out.csv("bloch", &bloch)?;

    let mut summary = Map::new();
    summary.insert("spec".into(), ssh_spec_to_json(spec));
    summary.insert("checks".into(), spectrum_checks(&matrix, &s)?);
    summary.insert(
        "matching_delta".into(),
        ssh_icse_delta(spec.t1(), spec.t2(), spec.gamma()).map(|d| complex_json(&d)).unwrap_or(Value::Null),
    );
    let mut curves = Vec::new();
    if !spec.delta().is_zero() {
        let (i, p) = find_ssh_impurity_mode(&s, spec, cfg)?;
        out.csv("impurity_mode", &profile_csv(&p))?;
        let (left, right) = ssh_side_flatness(&p, spec)?;
        summary.insert(
            "impurity_mode".into(),
            json!({
                "index": i,
                "site": spec.impurity_index(),
                "energy": complex_json(&s.eigenvalues[i]),
                "left_flatness": left.map(f64_value),
                "right_flatness": right.map(f64_value),
            }),
        );
        let mags = p.magnitudes_f64();
        for (label, offset) in [("A sites", 0), ("B sites", 1)] {
            curves.push(Series::new(label, (0..spec.n_cells()).map(|c| ((c + 1) as f64, mags[2 * c + offset])).collect()));
        }
    }
    out.json("summary", &Value::Object(summary))?;
    let points: Vec<(f64, f64)> = s.eigenvalues.iter().map(c64_pair).collect();
    out.svg("spectrum", || {
        scatter(
            &format!("NR-SSH spectrum, {} cells", spec.n_cells()),
            "Re E",
            "Im E",
            &[Series::new("eigenvalues", points), Series::new("Bloch +", plus), Series::new("Bloch -", minus)],
        )
    })?;
    if !curves.is_empty() {
        out.svg("impurity_mode", || lines("Impurity mode by sublattice", "cell", "|psi|", &curves, true))?;
    }
    Ok(())
}
