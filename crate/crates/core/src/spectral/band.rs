//! Characteristic polynomial of a tridiagonal matrix with optional corner
//! entries, evaluated by leading-minor recursion.

use num_complex::Complex64;
use rug::{Assign, Complex, Float};

use crate::error::{Error, Result};
use crate::lattice::DenseMatrix;

/// Bits used for the magnitude bound; only the exponent range matters.
const SCALE_BITS: u32 = 64;

#[derive(Clone, Debug)]
pub(crate) struct Band {
    pub n: usize,
    pub bits: u32,
    diag: Vec<Complex>,
    // lu[j] = M[j+1][j] * M[j][j+1]
    lu: Vec<Complex>,
    corner: Option<Corner>,
    diag_abs: Vec<Float>,
    lu_abs: Vec<Float>,
    diag64: Vec<Complex64>,
    lu64: Vec<Complex64>,
    norm: Float,
}

#[derive(Clone, Debug)]
struct Corner {
    // alpha beta
    ab: Complex,
    // (-1)^(n+1) (beta prod(lower) + alpha prod(upper))
    cross: Complex,
    ab_abs: Float,
    cross_abs: Float,
    ab64: Complex64,
    cross64: Complex64,
}

/// Value, derivative and magnitude bound of the characteristic polynomial.
pub(crate) struct Eval {
    pub p: Complex,
    pub dp: Complex,
    /// Bound on the terms at `|E|`, the size of rounding errors.
    pub scale: Float,
    /// Same bound at `|E| + ||M||`, which stays positive near exact zeros.
    pub ref_scale: Float,
}

impl Band {
    pub fn from_matrix(m: &DenseMatrix) -> Result<Band> {
        let n = m.dim();
        if n == 0 {
            return Err(Error::arg("empty matrix"));
        }
        let bits = m.prec();
        for i in 0..n {
            for j in 0..n {
                let far = i.abs_diff(j) > 1;
                let corner = n >= 3 && ((i == n - 1 && j == 0) || (i == 0 && j == n - 1));
                if far && !corner && !m.get(i, j).is_zero() {
                    return Err(Error::arg(format!("matrix is not tridiagonal-plus-corner: nonzero entry at ({i}, {j})")));
                }
            }
        }
        let diag: Vec<Complex> = (0..n).map(|j| m.get(j, j).as_complex().clone()).collect();
        let lu: Vec<Complex> = (0..n.saturating_sub(1))
            .map(|j| Complex::with_val(bits, m.get(j + 1, j).as_complex() * m.get(j, j + 1).as_complex()))
            .collect();
        let corner = if n >= 3 {
            let alpha = m.get(n - 1, 0).as_complex();
            let beta = m.get(0, n - 1).as_complex();
            if alpha.is_zero() && beta.is_zero() {
                None
            } else {
                let mut lower = Complex::with_val(bits, 1);
                let mut upper = Complex::with_val(bits, 1);
                for j in 0..n - 1 {
                    lower *= m.get(j + 1, j).as_complex();
                    upper *= m.get(j, j + 1).as_complex();
                }
                let mut cross = Complex::with_val(bits, beta * &lower);
                cross += Complex::with_val(bits, alpha * &upper);
                if n.is_multiple_of(2) {
                    cross = -cross;
                }
                let ab = Complex::with_val(bits, alpha * beta);
                Some(Corner {
                    ab_abs: Float::with_val(SCALE_BITS, ab.abs_ref()),
                    cross_abs: Float::with_val(SCALE_BITS, cross.abs_ref()),
                    ab64: c64(&ab),
                    cross64: c64(&cross),
                    ab,
                    cross,
                })
            }
        } else {
            None
        };
        Ok(Band {
            norm: Float::with_val(SCALE_BITS, 1.0 + m.max_row_sum()),
            n,
            bits,
            diag_abs: diag.iter().map(|z| Float::with_val(SCALE_BITS, z.abs_ref())).collect(),
            lu_abs: lu.iter().map(|z| Float::with_val(SCALE_BITS, z.abs_ref())).collect(),
            diag64: diag.iter().map(c64).collect(),
            lu64: lu.iter().map(c64).collect(),
            diag,
            lu,
            corner,
        })
    }

    pub fn trace(&self) -> Complex {
        let mut t = Complex::new(self.bits);
        for d in &self.diag {
            t += d;
        }
        t
    }

    /// Leading-minor recursion over rows `lo..=hi`.
    fn minor(&self, lo: usize, hi: usize, e: &Complex) -> (Complex, Complex) {
        let b = self.bits;
        let mut d0 = Complex::with_val(b, 1);
        let mut dd0 = Complex::new(b);
        let mut d1 = Complex::with_val(b, &self.diag[lo] - e);
        let mut dd1 = Complex::with_val(b, -1);
        let mut shift = Complex::new(b);
        let mut next = Complex::new(b);
        let mut dnext = Complex::new(b);
        let mut tmp = Complex::new(b);
        for j in lo + 1..=hi {
            shift.assign(&self.diag[j] - e);
            // D_j = (d_j - E) D_{j-1} - lu D_{j-2}
            next.assign(&shift * &d1);
            tmp.assign(&self.lu[j - 1] * &d0);
            next -= &tmp;
            // D'_j = -D_{j-1} + (d_j - E) D'_{j-1} - lu D'_{j-2}
            dnext.assign(&shift * &dd1);
            dnext -= &d1;
            tmp.assign(&self.lu[j - 1] * &dd0);
            dnext -= &tmp;
            std::mem::swap(&mut d0, &mut d1);
            std::mem::swap(&mut d1, &mut next);
            std::mem::swap(&mut dd0, &mut dd1);
            std::mem::swap(&mut dd1, &mut dnext);
        }
        (d1, dd1)
    }

    fn minor_scale(&self, lo: usize, hi: usize, e_abs: &Float) -> Float {
        let mut s0 = Float::with_val(SCALE_BITS, 1);
        let mut s1 = Float::with_val(SCALE_BITS, &self.diag_abs[lo] + e_abs);
        for j in lo + 1..=hi {
            let a = Float::with_val(SCALE_BITS, &self.diag_abs[j] + e_abs);
            let next = Float::with_val(SCALE_BITS, &a * &s1) + Float::with_val(SCALE_BITS, &self.lu_abs[j - 1] * &s0);
            s0 = s1;
            s1 = next;
        }
        s1
    }

    fn scale_at(&self, e_abs: &Float) -> Float {
        let n = self.n;
        let mut scale = self.minor_scale(0, n - 1, e_abs);
        if let Some(c) = &self.corner {
            let ms = self.minor_scale(1, n - 2, e_abs);
            scale += Float::with_val(SCALE_BITS, &c.ab_abs * &ms);
            scale += &c.cross_abs;
        }
        scale
    }

    /// `det(M - E I)`, its derivative in `E`, and the magnitude bound used
    /// to normalize residuals.
    pub fn eval(&self, e: &Complex) -> Eval {
        let n = self.n;
        let e_abs = Float::with_val(SCALE_BITS, e.abs_ref());
        let (mut p, mut dp) = self.minor(0, n - 1, e);
        let e_ref = Float::with_val(SCALE_BITS, &e_abs + &self.norm);
        if let Some(c) = &self.corner {
            let (m, dm) = self.minor(1, n - 2, e);
            p -= Complex::with_val(self.bits, &c.ab * &m);
            p += &c.cross;
            dp -= Complex::with_val(self.bits, &c.ab * &dm);
        }
        Eval { p, dp, scale: self.scale_at(&e_abs), ref_scale: self.scale_at(&e_ref) }
    }

    fn minor64(&self, lo: usize, hi: usize, e: Complex64) -> (Complex64, Complex64, f64) {
        let ea = e.norm();
        let (mut d0, mut dd0, mut s0) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 1.0);
        let (mut d1, mut dd1, mut s1) = (self.diag64[lo] - e, Complex64::new(-1.0, 0.0), self.diag64[lo].norm() + ea);
        for j in lo + 1..=hi {
            let sh = self.diag64[j] - e;
            let lu = self.lu64[j - 1];
            let next = sh * d1 - lu * d0;
            let dnext = -d1 + sh * dd1 - lu * dd0;
            let snext = (self.diag64[j].norm() + ea) * s1 + lu.norm() * s0;
            d0 = d1;
            d1 = next;
            dd0 = dd1;
            dd1 = dnext;
            s0 = s1;
            s1 = snext;
        }
        (d1, dd1, s1)
    }

    /// Double-precision twin of [`Band::eval`] for seeding.
    pub fn eval64(&self, e: Complex64) -> (Complex64, Complex64, f64) {
        let n = self.n;
        let (mut p, mut dp, mut s) = self.minor64(0, n - 1, e);
        if let Some(c) = &self.corner {
            let (m, dm, ms) = self.minor64(1, n - 2, e);
            p += c.cross64 - c.ab64 * m;
            dp -= c.ab64 * dm;
            s += c.ab64.norm() * ms + c.cross64.norm();
        }
        (p, dp, s)
    }
}

pub(crate) fn c64(z: &Complex) -> Complex64 {
    Complex64::new(z.real().to_f64(), z.imag().to_f64())
}
