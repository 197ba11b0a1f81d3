use super::*;
use crate::diagnostics::{linspace, SCAN_SENTINEL};
use crate::lattice::build_hatano_nelson;
use crate::spectral::full_spectrum;

fn chain(bits: u32) -> ChainSpec {
    let c = |re: &str, im: &str| HPComplex::parse(bits, re, im).unwrap();
    ChainSpec::new(12, c("1", "0"), c("2.5", "0"), c("0.1", "-0.3"), 4, Boundary::Pbc).unwrap()
}

#[test]
fn chain_spec_round_trip_is_exact() {
    for bits in [53, 128, 512] {
        let spec = chain(bits);
        let text = to_pretty(&chain_spec_to_json(&spec));
        let back = parse_chain_spec(&text, bits).unwrap();
        assert_eq!(back, spec);
        assert_eq!(to_pretty(&chain_spec_to_json(&back)), text);
    }
}

#[test]
fn chain_spec_accepts_strings_and_bare_reals() {
    let text = r#"{"N": 5, "tL": 1, "tR": "2", "delta": ["0.5", 0], "l": 3}"#;
    let spec = parse_chain_spec(text, 128).unwrap();
    assert_eq!(spec.boundary(), Boundary::Obc);
    assert_eq!(spec.t_right().re().to_f64(), 2.0);
    assert_eq!(spec.delta().re().to_f64(), 0.5);
    // 0.1 parsed at the target precision, not via f64
    let spec = parse_chain_spec(r#"{"N":3,"tL":1,"tR":1,"delta":0.1,"l":1}"#, 256).unwrap();
    assert_eq!(spec.delta().re(), &parse_real("0.1", 256).unwrap());
}

#[test]
fn chain_spec_rejections() {
    for bad in [
        "[]",
        r#"{"N": 5, "tL": 1, "tR": 1, "delta": 1}"#,
        r#"{"N": 5, "tL": 1, "tR": 1, "delta": 0, "l": 9}"#,
        r#"{"N": -1, "tL": 1, "tR": 1, "delta": 0, "l": 1}"#,
        r#"{"N": 5, "tL": [1], "tR": 1, "delta": 0, "l": 1}"#,
        r#"{"N": 5, "tL": "nan", "tR": 1, "delta": 0, "l": 1}"#,
        r#"{"N": 5, "tL": 1, "tR": 1, "delta": 0, "l": 1, "bc": "twisted"}"#,
        "{",
    ] {
        assert!(parse_chain_spec(bad, 64).is_err(), "{bad}");
    }
    let clean = parse_chain_spec(r#"{"N": 5, "tL": 1, "tR": 1, "delta": 0}"#, 64).unwrap();
    assert_eq!(clean.impurity_site(), 1);
}

#[test]
fn ssh_round_trip() {
    let bits = 128;
    let c = |re: &str| HPComplex::parse(bits, re, "0").unwrap();
    let spec = SSHSpec::new(6, c("0.6"), c("1"), c("0.3"), c("-1.25"), 3, Sublattice::B).unwrap();
    let text = to_pretty(&ssh_spec_to_json(&spec));
    assert_eq!(parse_ssh_spec(&text, bits).unwrap(), spec);
}

#[test]
fn spectrum_round_trip() {
    let cfg = PrecisionConfig::new(128, "1e-25", 400).unwrap();
    let spec = ChainSpec::real(128, 6, 1.0, 2.0, 0.7, 3, Boundary::Obc).unwrap();
    let s = full_spectrum(&build_hatano_nelson(&spec), &cfg).unwrap();
    let text = to_pretty(&spectrum_to_json(&s));
    let back = spectrum_from_json(&text, 128).unwrap();
    assert_eq!(back.eigenvalues, s.eigenvalues);
    assert_eq!(back.residuals, s.residuals);
    for (a, b) in back.right_vectors.iter().zip(&s.right_vectors) {
        assert_eq!(a.amplitudes, b.amplitudes);
    }
    assert_eq!(to_pretty(&spectrum_to_json(&back)), text);
    assert!(spectrum_from_json(r#"{"eigenvalues":[1],"residuals":[],"right":[],"left":[]}"#, 64).is_err());
}

#[test]
fn walk_config_defaults_and_round_trip() {
    let v: Value = serde_json::from_str(
        r#"{"L": 81, "steps": 40, "r": 0.9, "ell": 0.3,
            "impurity": {"model": "M2", "site": 40, "phi": 3.14159}}"#,
    )
    .unwrap();
    let c = walk_config_from_json(&v).unwrap();
    assert_eq!(c.start, 40);
    assert_eq!(c.boundary, WalkBoundary::Absorbing);
    assert_eq!(c.coin_state, crate::walk::symmetric_coin_state());
    let again = walk_config_from_json(&walk_config_to_json(&c)).unwrap();
    assert_eq!(again, c);

    for bad in [
        r#"{"L": 10, "steps": 1, "r": 1.5, "ell": 0}"#,
        r#"{"L": 10, "steps": 1, "r": 0.5, "ell": 0, "x0": 10}"#,
        r#"{"L": 10, "steps": 1, "r": 0.5, "ell": 0, "impurity": {"model": "M1", "site": 12, "gamma": 0.5}}"#,
        r#"{"L": 10, "steps": 1, "r": 0.5, "ell": 0, "impurity": {"model": "M4", "site": 2}}"#,
        r#"{"L": 10, "steps": 1, "r": 0.5, "ell": 0, "coin_state": "up"}"#,
    ] {
        let v: Value = serde_json::from_str(bad).unwrap();
        assert!(walk_config_from_json(&v).is_err(), "{bad}");
    }
}

#[test]
fn run_config_round_trip() {
    let text = r#"{"command": "modes", "name": "fig", "output_dir": "o",
        "precision": {"bits": 160, "tol": "1e-35"},
        "chain": {"N": 8, "tL": 1, "tR": 2, "delta": 1.5, "l": 3},
        "formats": ["csv"], "modes": ["impurity", "linear-", "index:2"]}"#;
    let runs = parse_recipe(text, 256).unwrap();
    assert_eq!(runs.len(), 1);
    let r = &runs[0];
    assert_eq!(r.precision.bits(), 160);
    assert_eq!(r.modes, vec![ModeSelect::Impurity, ModeSelect::Linear(-1), ModeSelect::Index(2)]);
    assert_eq!(r.formats, Formats { csv: true, json: false, svg: false });
    let again = run_config_from_json(&run_config_to_json(r), 53).unwrap();
    assert_eq!(to_pretty(&run_config_to_json(&again)), to_pretty(&run_config_to_json(r)));

    let multi = format!(r#"{{"runs": [{text}, {text}]}}"#);
    assert_eq!(parse_recipe(&multi, 256).unwrap().len(), 2);
    let default_bits = parse_recipe(r#"{"command":"spectrum","chain":{"N":3,"tL":1,"tR":1,"delta":0,"l":1}}"#, 96).unwrap();
    assert_eq!(default_bits[0].precision.bits(), 96);
    assert!(parse_recipe(r#"{"command":"spectrum","name":"../x","chain":{"N":3,"tL":1,"tR":1,"delta":0,"l":1}}"#, 96).is_err());
    assert!(parse_recipe(r#"{"command":"bake"}"#, 96).is_err());
}

#[test]
fn scan_csv_round_trip() {
    let ratio_axis = linspace(0.5, 2.0, 3);
    let delta_axis = linspace(-1.0, 1.0, 4);
    let values = vec![vec![0.25, -1.5, SCAN_SENTINEL, 3.0]; 3];
    let flags = vec![vec![false, false, true, false]; 3];
    let scan = PhaseScan { ratio_axis, delta_axis, values, flags, x: 0 };
    let text = scan_csv(&scan);
    assert!(text.starts_with("ratio,delta,value,flag\n0.5,-1.0,0.25,0\n"));
    assert_eq!(parse_scan_csv(&text).unwrap(), scan);
    assert!(parse_scan_csv("ratio,delta,value,flag\n1,2,3,0\n1,3,3,0\n2,2,3,0\n").is_err());
    assert!(parse_scan_csv("a,b\n").is_err());
    assert!(parse_scan_csv("ratio,delta,value,flag\n1,2,inf,0\n").is_err());
}

#[test]
fn csv_tables() {
    let p = ModeProfile::aggregate(vec![Float::with_val(53, 0.5), Float::with_val(53, 0.25)]);
    let text = profile_csv(&p);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["j", "abs", "re", "im"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][0], "2");
    assert_eq!(parse_real(rows[2][1], 53).unwrap(), 0.25);
    assert_eq!(rows[1][3], "0");
    assert_eq!(walk_csv(&[0.5, 0.0], &[1.0, 0.0]), "x,p_raw,p_normalized\n0,0.5,1.0\n1,0.0,0.0\n");
}
