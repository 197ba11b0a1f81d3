use nhse_core::diagnostics::PhaseScan;
use nhse_core::io::{chain_spec_from_json, chain_spec_to_json, parse_scan_csv, scan_csv};
use nhse_core::lattice::{build_hatano_nelson, Boundary, ChainSpec};
use nhse_core::numeric::{parse_real, real_to_string, HPComplex, PrecisionConfig};
use nhse_core::spectral::full_spectrum;
use proptest::prelude::*;

fn hop() -> impl Strategy<Value = f64> {
    prop_oneof![(50i32..=250).prop_map(|v| v as f64 / 100.0), (50i32..=250).prop_map(|v| -(v as f64) / 100.0)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn real_strings_round_trip(mantissa in -10_000_000i64..10_000_000, exp in -40i32..40, bits in prop::sample::select(vec![53u32, 128, 256, 512])) {
        let text = format!("{mantissa}e{exp}");
        let x = parse_real(&text, bits).unwrap();
        let back = parse_real(&real_to_string(&x), bits).unwrap();
        prop_assert_eq!(x, back);
    }

    #[test]
    fn chain_json_round_trips(n in 2usize..30, pick in 0usize..30, tl in hop(), tr in hop(), delta in -500i32..500, pbc in any::<bool>()) {
        let l = 1 + pick % n;
        let bc = if pbc { Boundary::Pbc } else { Boundary::Obc };
        let spec = ChainSpec::real(256, n, tl, tr, delta as f64 / 7.0, l, bc).unwrap();
        let back = chain_spec_from_json(&chain_spec_to_json(&spec), 256).unwrap();
        prop_assert_eq!(chain_spec_to_json(&back), chain_spec_to_json(&spec));
        prop_assert_eq!(back.delta().re(), spec.delta().re());
    }

    #[test]
    fn spectrum_identities(n in 2usize..12, pick in 0usize..12, tl in hop(), tr in hop(), delta in -300i32..300) {
        let l = 1 + pick % n;
        let cfg = PrecisionConfig::new(128, "1e-30", 400).unwrap();
        let spec = ChainSpec::real(128, n, tl, tr, delta as f64 / 100.0, l, Boundary::Obc).unwrap();
        let m = build_hatano_nelson(&spec);
        let s = full_spectrum(&m, &cfg).unwrap();
        prop_assert_eq!(s.len(), n);
        let mut sum = HPComplex::zero(128);
        for e in &s.eigenvalues {
            sum += e.clone();
        }
        prop_assert!(sum.dist(spec.delta()).to_f64() < 1e-25);
        for i in 0..n {
            prop_assert!(s.residuals[i].to_f64() < 1e-25);
            if s.clustered[i] {
                continue;
            }
            for j in 0..n {
                if s.clustered[j] {
                    continue;
                }
                let o = s.overlap(i, j).abs_f64();
                if i == j {
                    prop_assert!(o > 1e-30, "self overlap {i} vanishes");
                } else {
                    prop_assert!(o < 1e-20, "overlap ({i}, {j}) = {o}");
                }
            }
        }
    }

    #[test]
    fn scan_csv_round_trips(values in prop::collection::vec(-20.0f64..1.0, 6), flags in prop::collection::vec(any::<bool>(), 6)) {
        let scan = PhaseScan {
            ratio_axis: vec![0.5, 1.5],
            delta_axis: vec![-1.0, 0.0, 1.0],
            values: values.chunks(3).map(<[f64]>::to_vec).collect(),
            flags: flags.chunks(3).map(<[bool]>::to_vec).collect(),
            x: 1,
        };
        let back = parse_scan_csv(&scan_csv(&scan)).unwrap();
        prop_assert_eq!(&back.ratio_axis, &scan.ratio_axis);
        prop_assert_eq!(&back.delta_axis, &scan.delta_axis);
        prop_assert_eq!(&back.values, &scan.values);
        prop_assert_eq!(&back.flags, &scan.flags);
    }
}
