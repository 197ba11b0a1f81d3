//! Eigendecomposition of tridiagonal-plus-corner matrices at working
//! precision, independent of the closed-form analytics.

mod aberth;
mod band;
mod linalg;
mod qr;

use std::cmp::Ordering;

use rug::{Assign, Complex, Float};

use crate::error::{Error, Result};
use crate::lattice::DenseMatrix;
use crate::numeric::{HPComplex, PrecisionConfig};
use crate::profile::ModeProfile;

use band::Band;

/// Inverse-iteration sweeps before giving up.
const INVERSE_SWEEPS: usize = 12;

/// `det(M - E I)` and its derivative in `E`.
pub fn char_poly_eval(matrix: &DenseMatrix, e: &HPComplex) -> Result<(HPComplex, HPComplex)> {
    let bits = matrix.prec().max(e.prec());
    let band = Band::from_matrix(&matrix.with_prec(bits))?;
    let ev = band.eval(e.with_prec(bits).as_complex());
    Ok((HPComplex::from_complex(ev.p), HPComplex::from_complex(ev.dp)))
}

fn sort_values(values: &mut [HPComplex], cfg: &PrecisionConfig) {
    let tol = Float::with_val(cfg.bits(), cfg.tol() * 10u32);
    values.sort_by(|a, b| a.lex_cmp(b, &tol));
}

fn sorted_order(values: &[HPComplex], cfg: &PrecisionConfig) -> Vec<usize> {
    let tol = Float::with_val(cfg.bits(), cfg.tol() * 10u32);
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].lex_cmp(&values[b], &tol).then(a.cmp(&b)));
    idx
}

/// All eigenvalues by Aberth-Ehrlich iteration, sorted by `(Re, Im)`.
pub fn aberth_roots(matrix: &DenseMatrix, cfg: &PrecisionConfig) -> Result<Vec<HPComplex>> {
    let m = matrix.with_prec(cfg.bits());
    let band = Band::from_matrix(&m)?;
    let roots = aberth::aberth(&band, 1.0 + m.max_row_sum(), cfg)?;
    let mut out: Vec<HPComplex> = roots.z.into_iter().map(HPComplex::from_complex).collect();
    sort_values(&mut out, cfg);
    Ok(out)
}

/// Eigenvalues by unbalanced Hessenberg + shifted QR in double precision,
/// sorted by `(Re, Im)`. Kept as a reference for precision loss.
pub fn qr_reference(matrix: &DenseMatrix) -> Result<Vec<HPComplex>> {
    let rows = matrix.to_c64();
    let mut eig = qr::eigenvalues(rows)?;
    eig.sort_by(|a, b| {
        let scale = 1.0 + a.re.abs().max(b.re.abs());
        if (a.re - b.re).abs() > 1e-12 * scale {
            a.re.partial_cmp(&b.re).unwrap_or(Ordering::Equal)
        } else {
            a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal)
        }
    });
    Ok(eig.into_iter().map(|z| HPComplex::from_c64(53, z)).collect())
}

/// Right and left eigenvectors of one eigenvalue with their residuals
/// `||M psi - E psi||` (resp. with `M^T`) for unit vectors.
#[derive(Clone, Debug)]
pub struct EigenvectorPair {
    pub right: ModeProfile,
    pub left: ModeProfile,
    pub right_residual: Float,
    pub left_residual: Float,
}

fn start_vector(n: usize, bits: u32) -> Vec<Complex> {
    (0..n)
        .map(|j| {
            let re = 1.0 + ((j * 5 + 1) % 7) as f64 / 7.0;
            let im = ((j * 3 + 2) % 5) as f64 / 10.0;
            Complex::with_val(bits, (re, im))
        })
        .collect()
}

fn residual(m: &DenseMatrix, e: &Complex, v: &[Complex], transpose: bool) -> Float {
    let n = m.dim();
    let bits = m.prec();
    let mut total = Float::new(bits);
    let mut tmp = Complex::new(bits);
    for i in 0..n {
        let mut acc = Complex::new(bits);
        for (j, vj) in v.iter().enumerate() {
            let a = if transpose { m.get(j, i) } else { m.get(i, j) };
            if !a.is_zero() {
                tmp.assign(a.as_complex() * vj);
                acc += &tmp;
            }
        }
        tmp.assign(e * &v[i]);
        acc -= &tmp;
        total += Float::with_val(bits, acc.norm_ref());
    }
    total.sqrt()
}

fn unit(v: Vec<Complex>) -> Vec<Complex> {
    let bits = v.first().map(|z| z.prec().0).unwrap_or(53);
    let mut n2 = Float::new(bits);
    for z in &v {
        n2 += Float::with_val(bits, z.norm_ref());
    }
    let inv = Float::with_val(bits, 1 / n2.sqrt());
    v.into_iter().map(|z| z * &inv).collect()
}

fn inverse_iteration(m: &DenseMatrix, e: &Complex, transpose: bool, cfg: &PrecisionConfig) -> Result<(Vec<Complex>, Float)> {
    let bits = m.prec();
    let scale = 1.0 + m.max_row_sum();
    let floor = Float::with_val(bits, cfg.epsilon() * scale);
    let lu = linalg::ShiftedLu::factor(m, e, transpose, &floor);
    let mut x = unit(start_vector(m.dim(), bits));
    let mut res = Float::with_val(bits, f64::INFINITY);
    let sweeps = INVERSE_SWEEPS.min(cfg.max_iter()).max(1);
    for _ in 0..sweeps {
        let y = lu.solve(&x);
        if y.iter().any(|z| !(z.real().is_finite() && z.imag().is_finite())) {
            break;
        }
        x = unit(y);
        res = residual(m, e, &x, transpose);
        if res <= *cfg.tol() {
            return Ok((x, res));
        }
    }
    Err(Error::Convergence { iterations: sweeps, worst_residual: res.to_f64(), index: None })
}

fn profile(v: Vec<Complex>, e: &Complex) -> Result<ModeProfile> {
    ModeProfile::single(v.into_iter().map(HPComplex::from_complex).collect(), Some(HPComplex::from_complex(e.clone())))
}

/// Right and left eigenvectors of `matrix` at the converged eigenvalue `e`
/// by inverse iteration on `M - E I` and `M^T - E I`.
pub fn eigenvector_pair(matrix: &DenseMatrix, e: &HPComplex, cfg: &PrecisionConfig) -> Result<EigenvectorPair> {
    let m = matrix.with_prec(cfg.bits());
    let e = e.with_prec(cfg.bits()).into_complex();
    let (r, rr) = inverse_iteration(&m, &e, false, cfg)?;
    let (l, lr) = inverse_iteration(&m, &e, true, cfg)?;
    Ok(EigenvectorPair { right: profile(r, &e)?, left: profile(l, &e)?, right_residual: rr, left_residual: lr })
}

/// Eigenvalues with right/left eigenvectors and residuals.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<HPComplex>,
    pub right_vectors: Vec<ModeProfile>,
    pub left_vectors: Vec<ModeProfile>,
    /// Right residuals `||M psi_R - E psi_R||` of unit vectors.
    pub residuals: Vec<Float>,
    pub left_residuals: Vec<Float>,
    /// Whether the eigenvalue belongs to a flagged cluster.
    pub clustered: Vec<bool>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Bilinear overlap `psi_L,m^T psi_R,n`.
    pub fn overlap(&self, m: usize, n: usize) -> HPComplex {
        let l = &self.left_vectors[m].amplitudes;
        let r = &self.right_vectors[n].amplitudes;
        let bits = l.first().map(|z| z.prec()).unwrap_or(53);
        let mut acc = HPComplex::zero(bits);
        for (a, b) in l.iter().zip(r) {
            acc += a * b;
        }
        acc
    }

    /// Largest off-diagonal `|psi_L,m^T psi_R,n|`.
    pub fn max_biorthogonality_defect(&self) -> Float {
        let bits = self.eigenvalues.first().map(|z| z.prec()).unwrap_or(53);
        let mut worst = Float::new(bits);
        for m in 0..self.len() {
            for n in 0..self.len() {
                if m != n {
                    let v = self.overlap(m, n).abs();
                    if v > worst {
                        worst = v;
                    }
                }
            }
        }
        worst
    }

    pub fn max_residual(&self) -> Float {
        let bits = self.eigenvalues.first().map(|z| z.prec()).unwrap_or(53);
        self.residuals.iter().chain(&self.left_residuals).fold(Float::new(bits), |a, b| if *b > a { b.clone() } else { a })
    }
}

fn biorthogonalize(right: &[Vec<Complex>], left: Vec<Vec<Complex>>) -> Vec<Vec<Complex>> {
    let m = right.len();
    let bits = right[0][0].prec().0;
    let gram: Vec<Vec<Complex>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    let mut acc = Complex::new(bits);
                    for (x, y) in left[a].iter().zip(&right[b]) {
                        acc += Complex::with_val(bits, x * y);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    // L' = L G^{-T}: solve G^T C = I and combine
    let gt: Vec<Vec<Complex>> = (0..m).map(|a| (0..m).map(|b| gram[b][a].clone()).collect()).collect();
    let eye: Vec<Vec<Complex>> = (0..m).map(|a| (0..m).map(|b| Complex::with_val(bits, if a == b { 1 } else { 0 })).collect()).collect();
    let Ok(c) = linalg::solve_small(&gt, &eye) else {
        return left;
    };
    let n = left[0].len();
    (0..m)
        .map(|a| {
            (0..n)
                .map(|j| {
                    let mut acc = Complex::new(bits);
                    for k in 0..m {
                        acc += Complex::with_val(bits, &left[k][j] * &c[k][a]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Full biorthogonal eigendecomposition, sorted by `(Re, Im)`.
pub fn full_spectrum(matrix: &DenseMatrix, cfg: &PrecisionConfig) -> Result<Spectrum> {
    let m = matrix.with_prec(cfg.bits());
    let band = Band::from_matrix(&m)?;
    let mut roots = aberth::aberth(&band, 1.0 + m.max_row_sum(), cfg)?;
    let groups = aberth::clusters(&roots, cfg);
    let n = m.dim();
    let mut clustered = vec![false; n];
    for g in groups.iter().filter(|g| g.len() > 1) {
        let bits = cfg.bits();
        let mut mean = Complex::new(bits);
        for &i in g {
            mean += &roots.z[i];
        }
        mean /= g.len() as u32;
        let z = aberth::polish_multiple(&band, &mean, g.len(), cfg);
        for &i in g {
            roots.z[i] = z.clone();
            clustered[i] = true;
        }
    }
    let values: Vec<HPComplex> = roots.z.iter().cloned().map(HPComplex::from_complex).collect();
    let order = sorted_order(&values, cfg);
    let rank: Vec<usize> = {
        let mut r = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            r[i] = pos;
        }
        r
    };

    let mut right: Vec<Option<ModeProfile>> = vec![None; n];
    let mut left: Vec<Option<ModeProfile>> = vec![None; n];
    let mut rres = vec![Float::new(cfg.bits()); n];
    let mut lres = vec![Float::new(cfg.bits()); n];
    for g in &groups {
        let e = roots.z[g[0]].clone();
        if g.len() == 1 {
            let i = g[0];
            let pair = eigenvector_pair(&m, &values[i], cfg).map_err(|err| err.with_index(rank[i]))?;
            right[i] = Some(pair.right);
            left[i] = Some(pair.left);
            rres[i] = pair.right_residual;
            lres[i] = pair.left_residual;
            continue;
        }
        let rb = linalg::null_space(&m, &e, false, g.len())?;
        let lb = linalg::null_space(&m, &e, true, g.len())?;
        let lb = biorthogonalize(&rb, lb);
        for (k, &i) in g.iter().enumerate() {
            let r = unit(rb[k].clone());
            let l = unit(lb[k].clone());
            rres[i] = residual(&m, &e, &r, false);
            lres[i] = residual(&m, &e, &l, true);
            right[i] = Some(profile(r, &e)?);
            left[i] = Some(profile(l, &e)?);
        }
    }
    let take = |v: &mut Vec<Option<ModeProfile>>, i: usize| v[i].take().expect("every root has a vector");
    Ok(Spectrum {
        eigenvalues: order.iter().map(|&i| values[i].clone()).collect(),
        right_vectors: order.iter().map(|&i| take(&mut right, i)).collect(),
        left_vectors: order.iter().map(|&i| take(&mut left, i)).collect(),
        residuals: order.iter().map(|&i| rres[i].clone()).collect(),
        left_residuals: order.iter().map(|&i| lres[i].clone()).collect(),
        clustered: order.iter().map(|&i| clustered[i]).collect(),
    })
}
