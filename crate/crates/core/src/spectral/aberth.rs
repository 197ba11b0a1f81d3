//! Aberth-Ehrlich simultaneous root iteration on the minor-recursion
//! characteristic polynomial: a double-precision pass for seeds, then
//! polishing at working precision.

use num_complex::Complex64;
use rug::{Assign, Complex, Float};

use super::band::Band;
use crate::error::{Error, Result};
use crate::numeric::PrecisionConfig;

const SEED_SWEEPS: usize = 500;
/// Pairs closer than this multiple of the tolerance form a cluster.
const CLUSTER_FACTOR: f64 = 1e3;

fn circle(n: usize, center: Complex64, radius: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * (k as f64) / (n as f64) + 0.4 / n as f64 + 0.1;
            // small deterministic radius jitter breaks any residual symmetry
            let r = radius * (1.0 + 0.01 * ((k * 7 % 5) as f64) / 5.0);
            center + Complex64::from_polar(r, theta)
        })
        .collect()
}

fn seeds64(band: &Band, start: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = start.len();
    let mut z = start;
    let eps = f64::EPSILON;
    for _ in 0..SEED_SWEEPS {
        let mut done = true;
        for i in 0..n {
            let (p, dp, s) = band.eval64(z[i]);
            if !(p.is_finite() && dp.is_finite()) {
                return None;
            }
            if p.norm() <= 4.0 * n as f64 * eps * s {
                continue;
            }
            done = false;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    sum += (z[i] - z[j]).inv();
                }
            }
            let denom = dp - p * sum;
            let w = if denom.norm() == 0.0 || !denom.is_finite() { Complex64::new(1e-8 * (1.0 + z[i].norm()), 0.0) } else { p / denom };
            z[i] -= w;
        }
        if done {
            break;
        }
    }
    if z.iter().all(|v| v.is_finite()) {
        Some(z)
    } else {
        None
    }
}

/// `|p| / scale`, zero when every term of the expansion vanishes.
fn relative(pa: &Float, scale: &Float, bits: u32) -> Float {
    if pa.is_zero() {
        Float::new(bits)
    } else if scale.is_zero() {
        Float::with_val(bits, f64::INFINITY)
    } else {
        Float::with_val(bits, pa / scale)
    }
}

/// Converged roots, unsorted.
pub(crate) struct Roots {
    pub z: Vec<Complex>,
    /// Newton error estimates `|p / p'|`.
    pub err: Vec<Float>,
}

pub(crate) fn aberth(band: &Band, radius: f64, cfg: &PrecisionConfig) -> Result<Roots> {
    let n = band.n;
    let bits = band.bits;
    let trace = band.trace();
    if n == 1 {
        return Ok(Roots { z: vec![trace], err: vec![Float::new(bits)] });
    }
    let center = Complex64::new(trace.real().to_f64() / n as f64, trace.imag().to_f64() / n as f64);
    let start = circle(n, center, radius);
    let seeds = seeds64(band, start.clone()).unwrap_or(start);
    let mut z: Vec<Complex> = seeds.iter().map(|s| Complex::with_val(bits, (s.re, s.im))).collect();

    let tol = Float::with_val(bits, cfg.tol());
    let noise = Float::with_val(bits, cfg.epsilon() * 8u32);
    let mut converged = vec![false; n];
    let mut sum = Complex::new(bits);
    let mut tmp = Complex::new(bits);
    let mut worst = (0.0f64, 0usize);
    let mut sweeps = 0;
    while sweeps < cfg.max_iter() {
        sweeps += 1;
        let mut all = true;
        worst = (0.0, 0);
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let ev = band.eval(&z[i]);
            let pa = Float::with_val(bits, ev.p.abs_ref());
            let rel = relative(&pa, &ev.ref_scale, bits);
            let rounding = relative(&pa, &ev.scale, bits);
            sum.assign(0);
            for j in 0..n {
                if j != i {
                    tmp.assign(&z[i] - &z[j]);
                    if !tmp.is_zero() {
                        sum += Complex::with_val(bits, tmp.recip_ref());
                    }
                }
            }
            // w = p / (p' - p * sum)
            tmp.assign(&ev.p * &sum);
            let denom = Complex::with_val(bits, &ev.dp - &tmp);
            let w = if denom.is_zero() {
                let nudge = Float::with_val(bits, cfg.epsilon().sqrt()) * (1 + Float::with_val(bits, z[i].abs_ref()));
                Complex::with_val(bits, (nudge, 0))
            } else {
                Complex::with_val(bits, &ev.p / &denom)
            };
            let step = Float::with_val(bits, w.abs_ref());
            let zi = 1 + Float::with_val(bits, z[i].abs_ref());
            let small_step = step <= Float::with_val(bits, &tol * &zi);
            if rel <= tol && (small_step || rounding <= noise) {
                converged[i] = true;
            } else {
                all = false;
                let r = rel.to_f64();
                if r >= worst.0 {
                    worst = (r, i);
                }
            }
            z[i] -= &w;
        }
        if all {
            break;
        }
    }
    if converged.iter().any(|c| !c) {
        return Err(Error::Convergence { iterations: sweeps, worst_residual: worst.0, index: Some(worst.1) });
    }
    let err = z
        .iter()
        .map(|zi| {
            let ev = band.eval(zi);
            if ev.dp.is_zero() {
                Float::with_val(bits, ev.p.abs_ref())
            } else {
                Float::with_val(bits, Complex::with_val(bits, &ev.p / &ev.dp).abs_ref())
            }
        })
        .collect();
    Ok(Roots { z, err })
}

/// Group roots closer than `CLUSTER_FACTOR * max(tol (1 + |z|), e_i + e_j)`.
pub(crate) fn clusters(roots: &Roots, cfg: &PrecisionConfig) -> Vec<Vec<usize>> {
    let n = roots.z.len();
    let bits = cfg.bits();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = Float::with_val(bits, Complex::with_val(bits, &roots.z[i] - &roots.z[j]).abs_ref());
            let a = Float::with_val(bits, cfg.tol() * (1 + Float::with_val(bits, roots.z[i].abs_ref())));
            let b = Float::with_val(bits, &roots.err[i] + &roots.err[j]);
            let lim = Float::with_val(bits, a.max(&b) * CLUSTER_FACTOR);
            if d <= lim {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if index_of[r] == usize::MAX {
            index_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[r]].push(i);
    }
    groups
}

/// Polish the mean of a cluster of multiplicity `m` with
/// `z <- z - m p / p'`.
pub(crate) fn polish_multiple(band: &Band, start: &Complex, m: usize, cfg: &PrecisionConfig) -> Complex {
    let bits = band.bits;
    let mut z = start.clone();
    let noise = Float::with_val(bits, cfg.epsilon() * 8u32);
    for _ in 0..cfg.max_iter().min(100) {
        let ev = band.eval(&z);
        let rel = relative(&Float::with_val(bits, ev.p.abs_ref()), &ev.scale, bits);
        if rel <= noise || ev.dp.is_zero() {
            break;
        }
        let step = Complex::with_val(bits, &ev.p / &ev.dp) * (m as u32);
        let before = Float::with_val(bits, ev.p.abs_ref());
        let trial = Complex::with_val(bits, &z - &step);
        let after = Float::with_val(bits, band.eval(&trial).p.abs_ref());
        if after >= before {
            break;
        }
        z = trial;
    }
    z
}
