use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::lattice::build_hatano_nelson;
use crate::spectral::{eigenvector_pair, full_spectrum};

fn cfg() -> PrecisionConfig {
    PrecisionConfig::default()
}

fn hp(re: f64, im: f64) -> HPComplex {
    HPComplex::new(256, re, im)
}

fn close(a: &HPComplex, b: &HPComplex, tol: f64) -> bool {
    a.dist(b) <= tol
}

fn ctx(x: HPComplex, y: HPComplex) -> FibContext {
    FibContext::new(&x, &y, &cfg()).unwrap()
}

#[test]
fn fib_poly_small_values() {
    let c = ctx(hp(0.7, -0.2), hp(1.3, 0.4));
    assert!(fib_poly(0, &c).is_zero());
    assert!(close(&fib_poly(1, &c), &hp(1.0, 0.0), 1e-70));
    assert!(close(&fib_poly(2, &c), &c.x, 1e-70));
    let f3 = &c.x.sqr() - &c.y;
    assert!(close(&fib_poly(3, &c), &f3, 1e-70));
    let fm1 = -(c.y.recip());
    assert!(close(&fib_poly(-1, &c), &fm1, 1e-70));
    // r+ r- = y, r+ + r- = x
    assert!(close(&(&c.r_plus * &c.r_minus), &c.y, 1e-70));
    assert!(close(&(&c.r_plus + &c.r_minus), &c.x, 1e-70));
    // E = 0, y = 2: F(3) = -2
    let c = ctx(hp(0.0, 0.0), hp(2.0, 0.0));
    assert!(close(&fib_poly(3, &c), &hp(-2.0, 0.0), 1e-70));
}

#[test]
fn recursion_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let c = ctx(hp(rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0)), hp(rng.gen_range(0.2..3.0), rng.gen_range(-1.0..1.0)));
        for j in -10i64..=50 {
            let rec = fib_poly(j, &c);
            let closed = &(&c.r_plus.powi(j as i32) - &c.r_minus.powi(j as i32)) / &(&c.r_plus - &c.r_minus);
            let scale = 1.0 + closed.abs_f64();
            assert!(rec.dist(&closed).to_f64() <= 10.0 * 1e-30 * scale, "j = {j}");
        }
    }
}

#[test]
fn large_index_branches() {
    // |r| = 1 keeps the values bounded across the switch at 1000
    let (x, y) = (hp(1.2, 0.1), hp(1.0, 0.0));
    let c = ctx(x.clone(), y.clone());
    let seq = three_term_sequence(&x, &y, 1200, &HPComplex::zero(256), &HPComplex::one(256)).unwrap();
    for j in [1001i64, 1100, 1200] {
        let a = fib_poly(j, &c);
        assert!(a.dist(&seq[j as usize]).to_f64() < 1e-40 * (1.0 + a.abs_f64()), "j = {j}");
    }
    // x^2 = 4y: F(j) = j r^(j-1) with r = 1
    let c = ctx(hp(2.0, 0.0), hp(1.0, 0.0));
    assert!(c.degenerate);
    assert!(close(&fib_poly(2000, &c), &hp(2000.0, 0.0), 1e-60));
    assert!(close(&fib_poly(7, &c), &hp(7.0, 0.0), 1e-60));
}

#[test]
fn kd_form_matches_energy_form() {
    let spec = ChainSpec::real(256, 10, 1.0, 2.5, 0.0, 1, Boundary::Obc).unwrap();
    let sy = spec.sqrt_y();
    for kd in [hp(0.3, 0.0), hp(1.1, 0.4), hp(2.9, -0.2)] {
        let e = dispersion_obc(&kd, &spec);
        let c = FibContext::at_energy(&e, &spec, &cfg()).unwrap();
        for j in -6i64..=25 {
            let a = fib_poly_kd(j, &kd, &sy);
            let b = fib_poly(j, &c);
            assert!(a.dist(&b).to_f64() <= 1e-28 * (1.0 + b.abs_f64()), "j = {j}");
        }
    }
    let half_pi = HPComplex::from_real(pi(256) / 2u32);
    assert!(fib_poly_kd(2, &half_pi, &sy).abs_f64() < 1e-70);
    assert!(close(&fib_poly_kd(1, &hp(0.77, 0.3), &sy), &hp(1.0, 0.0), 1e-70));
    // kd -> 0: j sqrt(y)^(j-1)
    let lim = fib_poly_kd(5, &HPComplex::zero(256), &sy);
    let expect = &sy.powi(4) * &hp(5.0, 0.0);
    assert!(close(&lim, &expect, 1e-60));
}

#[test]
fn obc_residual_examples() {
    let spec = ChainSpec::real(256, 12, 1.0, 3.0, 0.0, 4, Boundary::Obc).unwrap();
    let p = pi(256);
    for n in 1..=12u32 {
        let kd = HPComplex::from_real(Float::with_val(256, &p * n) / 13u32);
        assert!(quantization_residual_obc(&spec, &kd).unwrap().value.abs_f64() < 1e-60);
    }
    let off = HPComplex::from_real(Float::with_val(256, &p / 13u32) + 0.01);
    assert!(quantization_residual_obc(&spec, &off).unwrap().value.abs_f64() > 1e-3);

    // N = 2, l = 1: roots of E^2 - delta E - tL tR
    let spec = ChainSpec::real(256, 2, 1.0, 3.0, 0.7, 1, Boundary::Obc).unwrap();
    let disc = (0.49f64 + 12.0).sqrt();
    for e in [(0.7 + disc) / 2.0, (0.7 - disc) / 2.0] {
        let e = HPComplex::parse(256, &format!("{e:.17}"), "0").unwrap();
        let (kd, e_ref) = refine_wavevector(&spec, &e, &cfg()).unwrap();
        let r = quantization_residual_obc(&spec, &kd).unwrap();
        assert!(r.value.abs_f64() < 1e-60);
        let poly = &(&e_ref.sqr() - &(&hp(0.7, 0.0) * &e_ref)) - &hp(3.0, 0.0);
        assert!(poly.abs_f64() < 1e-60);
    }
}

#[test]
fn dense_eigenvalues_solve_both_conditions() {
    for bc in [Boundary::Obc, Boundary::Pbc] {
        let spec = ChainSpec::real(256, 20, 1.0, 2.0, 3.0, 6, bc).unwrap();
        let spectrum = full_spectrum(&build_hatano_nelson(&spec), &cfg()).unwrap();
        for e in &spectrum.eigenvalues {
            let (kd, e2) = refine_wavevector(&spec, e, &cfg()).unwrap();
            assert!(e.dist(&e2).to_f64() < 1e-50, "{bc:?} {e}");
            let re = kd.re().to_f64();
            assert!((0.0..=std::f64::consts::PI).contains(&re));
            if bc == Boundary::Pbc {
                let rp = &spec.sqrt_y() * &(&HPComplex::i(256) * &kd).exp();
                let q = quantization_residual_pbc(&spec, &rp, &cfg()).unwrap();
                assert!(q.value.abs_f64() < 1e-50);
                assert!(q.energy.dist(e).to_f64() < 1e-50);
            }
        }
    }
}

#[test]
fn pbc_pristine_roots_and_small_ring() {
    let spec = ChainSpec::real(256, 7, 1.0, 2.0, 0.0, 3, Boundary::Pbc).unwrap();
    let p = pi(256);
    for n in 0..7u32 {
        let q = Float::with_val(256, &p * (2 * n)) / 7u32;
        let rp = (&HPComplex::i(256) * &HPComplex::from_real(q)).exp();
        let r = quantization_residual_pbc(&spec, &rp, &cfg()).unwrap();
        assert!(r.value.abs_f64() < 1e-60, "n = {n}");
    }
    let spec = ChainSpec::real(256, 3, 1.0, 2.0, 0.0, 1, Boundary::Pbc).unwrap();
    let spectrum = full_spectrum(&build_hatano_nelson(&spec), &cfg()).unwrap();
    for e in &spectrum.eigenvalues {
        let c = FibContext::at_energy(e, &spec, &cfg()).unwrap();
        let r = quantization_residual_pbc(&spec, &c.r_plus, &cfg()).unwrap();
        assert!(r.value.abs_f64() < 1e-60);
    }
    assert!(quantization_residual_pbc(&spec, &HPComplex::zero(256), &cfg()).is_err());
}

#[test]
fn strong_impurity_ring_fragments() {
    // delta -> infinity: sin(kd N) = 0
    let spec = ChainSpec::real(256, 8, 1.0, 1.5, 1e6, 3, Boundary::Pbc).unwrap();
    let spectrum = full_spectrum(&build_hatano_nelson(&spec), &cfg()).unwrap();
    let p = pi(256).to_f64();
    let mut hits = 0;
    for e in &spectrum.eigenvalues {
        if e.abs_f64() > 100.0 {
            continue;
        }
        let (kd, _) = refine_wavevector(&spec, e, &cfg()).unwrap();
        let n = kd.re().to_f64() * 8.0 / p;
        assert!((n - n.round()).abs() < 1e-4 && kd.im().to_f64().abs() < 1e-4);
        hits += 1;
    }
    assert_eq!(hits, 7);
}

#[test]
fn refine_examples() {
    let spec = ChainSpec::real(256, 15, 1.0, 2.0, 0.0, 5, Boundary::Obc).unwrap();
    let kd0 = HPComplex::from_real(pi(256) / 16u32);
    let seed = dispersion_obc(&kd0, &spec);
    let (kd, _) = refine_wavevector(&spec, &seed, &cfg()).unwrap();
    assert!(kd.dist(&kd0).to_f64() < 1e-60);

    let spec = ChainSpec::real(256, 30, 1.0, 2.0, 8.0, 12, Boundary::Obc).unwrap();
    let (kd, e) = refine_wavevector(&spec, &hp(8.0, 0.0), &cfg()).unwrap();
    assert!(kd.im().to_f64() > 0.0);
    assert!((e.re().to_f64() - 8.0).abs() < 1.0);

    let spec = ChainSpec::real(256, 40, 1.0, 4.0, 3.0, 5, Boundary::Obc).unwrap();
    let seed = icse_energy_estimate(spec.t_left(), spec.t_right(), 1);
    assert!(close(&seed, &hp(5.0, 0.0), 1e-70));
    let (_, e) = refine_wavevector(&spec, &seed, &cfg()).unwrap();
    assert!((e.re().to_f64() - 5.0).abs() < 0.05, "{e}");
    assert!(close(&icse_energy_estimate(spec.t_left(), spec.t_right(), -1), &hp(-5.0, 0.0), 1e-70));
}

#[test]
fn sign_shift_symmetry() {
    let spec = ChainSpec::real(256, 14, 1.0, 1.7, 1.3, 4, Boundary::Obc).unwrap();
    let flipped = spec.with_delta(hp(-1.3, 0.0)).unwrap();
    let spectrum = full_spectrum(&build_hatano_nelson(&spec), &cfg()).unwrap();
    let p = HPComplex::from_real(pi(256));
    for e in &spectrum.eigenvalues {
        let (kd, _) = refine_wavevector(&spec, e, &cfg()).unwrap();
        let shifted = &kd + &p;
        let r = quantization_residual_obc(&flipped, &shifted).unwrap();
        assert!(r.value.abs_f64() < 1e-55);
    }
}

#[test]
fn closed_form_vectors() {
    // (1, 2, 1)/sqrt(6) at the kd -> 0 limit
    let spec = ChainSpec::real(256, 3, 1.0, 1.0, 1.0, 2, Boundary::Obc).unwrap();
    let v = closed_form_eigenvector(&spec, &HPComplex::zero(256)).unwrap();
    let s6 = Float::with_val(256, 6).sqrt();
    let expect = [1u32, 2, 1].map(|k| HPComplex::from_real(Float::with_val(256, k) / &s6));
    for (a, b) in v.amplitudes.iter().zip(&expect) {
        assert!(a.dist(b).to_f64() < 1e-70);
    }
    let lin = linear_mode(&spec, 1, &cfg()).unwrap();
    assert!(lin.aligned_distance(&v).unwrap().to_f64() < 1e-70);

    // delta = 0: the pristine chain
    let spec = ChainSpec::real(256, 9, 1.0, 2.0, 0.0, 3, Boundary::Obc).unwrap();
    let kd = HPComplex::from_real(Float::with_val(256, pi(256) * 2u32) / 10u32);
    let v = closed_form_eigenvector(&spec, &kd).unwrap();
    let raw: Vec<HPComplex> = (1..=9).map(|j| fib_poly_kd(j, &kd, &spec.sqrt_y())).collect();
    let w = ModeProfile::single(raw, None).unwrap();
    assert!(v.aligned_distance(&w).unwrap().to_f64() < 1e-60);
}

#[test]
fn node_at_the_impurity() {
    // U_2 vanishes at kd = pi/3, which makes both F(l) and F(l-N-1) zero
    // for N = 5, l = 3 and leaves a root for any delta
    for (n, l, kd) in [(5usize, 3usize, pi(256) / 3u32), (7, 6, pi(256) / 2u32)] {
        let spec = ChainSpec::real(256, n, 1.0, 2.0, 0.4, l, Boundary::Obc).unwrap();
        let kd = HPComplex::from_real(kd);
        let r = quantization_residual_obc(&spec, &kd).unwrap();
        assert!(r.value.abs_f64() < 1e-60);
        let v = closed_form_eigenvector(&spec, &kd).unwrap();
        assert!(v.amplitudes[l - 1].abs_f64() < 1e-60);
        let m = build_hatano_nelson(&spec);
        let mv = m.mul_vec(&v.amplitudes).unwrap();
        let e = dispersion_obc(&kd, &spec);
        for (a, b) in mv.iter().zip(&v.amplitudes) {
            assert!(a.dist(&(&e * b)).to_f64() < 1e-60);
        }
    }
}

#[test]
fn closed_form_matches_inverse_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tol = 1e-30;
    for _ in 0..6 {
        let n = rng.gen_range(4..=20);
        let l = rng.gen_range(1..=n);
        let spec = ChainSpec::real(256, n, rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(-10.0..10.0), l, Boundary::Obc)
            .unwrap();
        let m = build_hatano_nelson(&spec);
        let spectrum = full_spectrum(&m, &cfg()).unwrap();
        for e in &spectrum.eigenvalues {
            let (kd, _) = refine_wavevector(&spec, e, &cfg()).unwrap();
            let v = closed_form_eigenvector(&spec, &kd).unwrap();
            let pair = eigenvector_pair(&m, e, &cfg()).unwrap();
            let d = pair.right.aligned_distance(&v).unwrap().to_f64();
            assert!(d <= 10.0 * tol, "n={n} l={l} e={e} d={d}");
        }
    }
}

#[test]
fn critical_strengths_and_linear_modes() {
    let s2 = HPComplex::from_real(Float::with_val(256, 2).sqrt());
    let (p, m) = delta_critical(20, 10, &s2, &s2).unwrap();
    let expect = Float::with_val(256, 2).sqrt() * 21u32 / 110u32;
    assert!((Float::with_val(256, p.re() - &expect)).abs() < 1e-70);
    assert!(close(&m, &-&p, 0.0));
    let (p, _) = delta_critical(20, 1, &hp(1.0, 0.0), &hp(1.0, 0.0)).unwrap();
    assert!(close(&p, &hp(1.05, 0.0), 1e-15));
    assert!(delta_critical(5, 0, &hp(1.0, 0.0), &hp(1.0, 0.0)).is_err());

    for (tl, tr, sign) in [(1.0, 2.0, 1), (1.0, 2.0, -1), (1.0, 4.0, 1), (2.0, 0.5, -1)] {
        let base = ChainSpec::real(256, 20, tl, tr, 0.0, 10, Boundary::Obc).unwrap();
        let (p, m) = delta_critical(20, 10, base.t_left(), base.t_right()).unwrap();
        let spec = base.with_delta(if sign > 0 { p } else { m }).unwrap();
        let lin = linear_mode(&spec, sign, &cfg()).unwrap();
        let e = lin.energy.clone().unwrap();
        let mv = build_hatano_nelson(&spec).mul_vec(&lin.amplitudes).unwrap();
        for (a, b) in mv.iter().zip(&lin.amplitudes) {
            assert!(a.dist(&(&e * b)).to_f64() < 1e-60);
        }
        let edge = if sign > 0 { HPComplex::zero(256) } else { HPComplex::from_real(pi(256)) };
        let v = closed_form_eigenvector(&spec, &edge).unwrap();
        assert!(lin.aligned_distance(&v).unwrap().to_f64() < 1e-29);
    }
    let off = ChainSpec::real(256, 20, 1.0, 2.0, 0.3, 10, Boundary::Obc).unwrap();
    assert!(matches!(linear_mode(&off, 1, &cfg()), Err(Error::Precondition(_))));
}

#[test]
fn linear_mode_shapes() {
    let spec = ChainSpec::real(256, 11, 1.0, 1.0, 0.0, 4, Boundary::Obc).unwrap();
    let (p, _) = delta_critical(11, 4, spec.t_left(), spec.t_right()).unwrap();
    let lin = linear_mode(&spec.with_delta(p).unwrap(), 1, &cfg()).unwrap();
    let mags = lin.magnitudes_f64();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    assert_eq!(mags.iter().position(|&m| m == peak), Some(3));
    for w in mags.windows(3).skip(4) {
        assert!(((w[0] - w[1]) - (w[1] - w[2])).abs() < 1e-14);
    }
    let spec = ChainSpec::real(256, 11, 1.0, 4.0, 0.0, 4, Boundary::Obc).unwrap();
    let (p, _) = delta_critical(11, 4, spec.t_left(), spec.t_right()).unwrap();
    let lin = linear_mode(&spec.with_delta(p).unwrap(), 1, &cfg()).unwrap();
    let mags = lin.magnitudes_f64();
    assert!(mags[9] > mags[3]);
}

#[test]
fn icse_predictors() {
    let spec = ChainSpec::real(256, 40, 1.0, 4.0, 0.0, 20, Boundary::Obc).unwrap();
    assert!(close(&icse_delta(&spec).0, &hp(3.0, 0.0), 0.0));
    assert!(close(&icse_delta(&spec).1, &hp(-3.0, 0.0), 0.0));
    assert!(!near_edge(&spec));
    let edge = ChainSpec::real(256, 40, 1.0, 4.0, 0.0, 1, Boundary::Obc).unwrap();
    assert!(close(&icse_delta(&edge).0, &hp(4.0, 0.0), 0.0));
    assert!(near_edge(&edge));
    let last = ChainSpec::real(256, 40, 1.0, 4.0, 0.0, 40, Boundary::Obc).unwrap();
    assert!(close(&icse_delta(&last).0, &hp(1.0, 0.0), 0.0));
    let herm = ChainSpec::real(256, 40, 1.5, 1.5, 0.0, 20, Boundary::Obc).unwrap();
    assert!(icse_delta(&herm).0.is_zero());
}

/// Direct evaluation of the critical ratios from their definition as the
/// intersection of |delta_c(y)| = |tR - tL| at tL = 1, by bisection.
fn y_critical_by_bisection(n: usize, l: usize) -> (f64, f64) {
    let b = (n + 1) as f64 / (l * (n + 1 - l)) as f64;
    let g = |y: f64| y.sqrt() * b - (y - 1.0).abs();
    let bisect = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (g(lo) > 0.0) == (g(mid) > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    (bisect(1.0, 100.0), bisect(1e-6, 1.0))
}

#[test]
fn critical_ratios() {
    let (p, m) = y_critical(20, 6, 256).unwrap();
    assert!((p.to_f64() - 1.2621).abs() < 1e-4);
    assert!((m.to_f64() - 0.7923).abs() < 1e-4);
    for n in 1..=20 {
        for l in 1..=n {
            let (p, m) = y_critical(n, l, 256).unwrap();
            let prod = Float::with_val(256, &p * &m) - 1u32;
            assert!(prod.abs() < 1e-30);
            assert!(p >= 1 && m <= 1);
            let (bp, bm) = y_critical_by_bisection(n, l);
            assert!((p.to_f64() - bp).abs() < 1e-9 && (m.to_f64() - bm).abs() < 1e-9);
        }
    }
    assert!(y_critical(4, 5, 256).is_err());
}

#[test]
fn localization_lengths() {
    let loc = kappa_localization(&hp(1.0, 0.0), &hp(4.0, 0.0), &cfg()).unwrap();
    let ln2 = Float::with_val(256, 2).ln();
    assert!(close(&loc.kappa_d, &HPComplex::from_real(ln2.clone()), 1e-70));
    let len = loc.nhse_length.unwrap();
    assert!(close(&len.recip(), &HPComplex::from_real(ln2), 1e-70));
    assert!(!loc.zero_decay);

    let e2 = Float::with_val(256, 2).exp();
    let loc = kappa_localization(&hp(1.0, 0.0), &HPComplex::from_real(e2), &cfg()).unwrap();
    assert!(close(&loc.kappa_d, &hp(1.0, 0.0), 1e-70));

    let flat = kappa_localization(&hp(1.3, 0.0), &hp(1.3, 0.0), &cfg()).unwrap();
    assert!(flat.zero_decay && flat.kappa_d.is_zero() && flat.nhse_length.is_none());
}

#[test]
fn strong_impurity_open_chain_fragments() {
    let n = 12;
    let l = 5;
    let spec = ChainSpec::real(256, n, 1.0, 1.4, 1e6, l, Boundary::Obc).unwrap();
    let spectrum = full_spectrum(&build_hatano_nelson(&spec), &cfg()).unwrap();
    let s = (1.4f64).sqrt();
    let mut expect: Vec<f64> = Vec::new();
    for len in [l - 1, n - l] {
        for k in 1..=len {
            expect.push(2.0 * s * (k as f64 * std::f64::consts::PI / (len + 1) as f64).cos());
        }
    }
    expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut got: Vec<f64> = Vec::new();
    let mut imp = 0;
    for e in &spectrum.eigenvalues {
        let z = e.to_c64();
        if (z.re - 1e6).abs() <= 2.0 * (1.0 + 1.4) {
            imp += 1;
        } else {
            got.push(z.re);
        }
    }
    assert_eq!(imp, 1);
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in got.iter().zip(&expect) {
        assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "{a} {b}");
    }
}
