//! Double-precision Hessenberg reduction and Wilkinson-shifted complex QR.
//! No balancing is applied.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

fn hessenberg(h: &mut [Vec<C>]) {
    let n = h.len();
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| h[i][k].norm_sqr()).sum::<f64>().sqrt();
        let tail: f64 = (k + 2..n).map(|i| h[i][k].norm_sqr()).sum::<f64>();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[k + 1][k];
        let phase = if x0.norm() == 0.0 { C::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C> = (k + 1..n).map(|i| h[i][k]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vn;
        }
        // left: rows k+1.., H <- (I - 2 v v^H) H
        for j in 0..n {
            let mut dot = C::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[k + 1 + t][j];
            }
            for (t, vi) in v.iter().enumerate() {
                h[k + 1 + t][j] -= *vi * dot * 2.0;
            }
        }
        // right: columns k+1.., H <- H (I - 2 v v^H)
        for row in h.iter_mut() {
            let mut dot = C::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                dot += row[k + 1 + t] * *vi;
            }
            for (t, vi) in v.iter().enumerate() {
                row[k + 1 + t] -= dot * vi.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[i][k] = C::new(0.0, 0.0);
        }
    }
}

fn givens(x: C, y: C) -> (f64, C) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, C::new(0.0, 0.0));
    }
    if x.norm() == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    let c = x.norm() / r;
    let s = (x / x.norm()) * y.conj() / r;
    (c, s)
}

fn wilkinson_shift(a: C, b: C, c: C, d: C) -> C {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Eigenvalues of a dense complex matrix in double precision.
pub(crate) fn eigenvalues(mut h: Vec<Vec<C>>) -> Result<Vec<C>> {
    let n = h.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    hessenberg(&mut h);
    let eps = f64::EPSILON;
    let mut eig = vec![C::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let budget = 60 * n;
    loop {
        if hi == 0 {
            eig[0] = h[0][0];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let s = h[lo][lo].norm() + h[lo - 1][lo - 1].norm();
            if h[lo][lo - 1].norm() <= eps * s {
                h[lo][lo - 1] = C::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > budget {
            let worst = h[hi][hi - 1].norm();
            return Err(Error::Convergence { iterations: total, worst_residual: worst, index: Some(hi) });
        }
        let mu = if iter % 11 == 10 {
            // exceptional shift
            h[hi][hi] + C::new(h[hi][hi - 1].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        for k in lo..=hi {
            h[k][k] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            for j in k..=hi {
                let (a, b) = (h[k][j], h[k + 1][j]);
                h[k][j] = a * c + s * b;
                h[k + 1][j] = -s.conj() * a + b * c;
            }
            rots.push((c, s));
        }
        for (t, (c, s)) in rots.into_iter().enumerate() {
            let k = lo + t;
            for row in h.iter_mut().take((k + 2).min(hi + 1)).skip(lo) {
                let (a, b) = (row[k], row[k + 1]);
                row[k] = a * c + b * s.conj();
                row[k + 1] = -a * s + b * c;
            }
        }
        for k in lo..=hi {
            h[k][k] += mu;
        }
    }
    Ok(eig)
}
