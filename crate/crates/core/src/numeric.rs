//! Configurable-precision complex scalars and the few special functions the
//! rest of the crate needs.
//!
//! [`HPComplex`] wraps an MPC complex number, so every basic operation is
//! correctly rounded at the working precision. The inverse cosine functions
//! fix their own branch conventions instead of inheriting the signed-zero
//! behaviour of the backend.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};

use crate::error::{Error, Result};

/// Default mantissa precision in bits.
pub const DEFAULT_BITS: u32 = 256;
/// Default residual tolerance, as a decimal literal.
pub const DEFAULT_TOL: &str = "1e-30";
/// Default iteration budget of the iterative solvers.
pub const DEFAULT_MAX_ITER: usize = 400;
/// Extra bits carried inside special-function evaluations.
const GUARD_BITS: u32 = 32;

/// Real scalar at configurable precision.
pub type Real = Float;

/// Precision settings threaded through every numerical routine.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionConfig {
    bits: u32,
    tol: Float,
    max_iter: usize,
}

impl PrecisionConfig {
    pub fn new(bits: u32, tol: &str, max_iter: usize) -> Result<Self> {
        if bits < 53 {
            return Err(Error::arg(format!("precision must be at least 53 bits, got {bits}")));
        }
        if max_iter == 0 {
            return Err(Error::arg("max_iter must be at least 1"));
        }
        let tol = parse_real(tol, bits)?;
        if !(tol.is_finite() && tol > 0) {
            return Err(Error::arg("tolerance must be positive and finite"));
        }
        Ok(PrecisionConfig { bits, tol, max_iter })
    }

    /// Same tolerance and budget, different mantissa width.
    pub fn with_bits(&self, bits: u32) -> Result<Self> {
        let tol = self.tol.to_string_radix(10, Some(12));
        PrecisionConfig::new(bits, &tol, self.max_iter)
    }

    pub fn with_tol(&self, tol: &str) -> Result<Self> {
        PrecisionConfig::new(self.bits, tol, self.max_iter)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn tol(&self) -> &Float {
        &self.tol
    }

    pub fn tol_f64(&self) -> f64 {
        self.tol.to_f64()
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    /// Unit roundoff `2^(1-bits)` at this precision.
    pub fn epsilon(&self) -> Float {
        Float::with_val(self.bits, Float::i_exp(1, 1 - self.bits as i32))
    }

    pub fn real(&self, v: f64) -> Float {
        Float::with_val(self.bits, v)
    }

    pub fn complex(&self, re: f64, im: f64) -> HPComplex {
        HPComplex::new(self.bits, re, im)
    }
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig::new(DEFAULT_BITS, DEFAULT_TOL, DEFAULT_MAX_ITER).expect("default precision is valid")
    }
}

/// Parse a decimal literal at `bits` precision.
pub fn parse_real(text: &str, bits: u32) -> Result<Float> {
    let parsed = Float::parse(text.trim()).map_err(|e| Error::Format(format!("invalid number {text:?}: {e}")))?;
    Ok(Float::with_val(bits, parsed))
}

/// Decimal digits needed to round-trip a `bits`-wide mantissa.
pub fn roundtrip_digits(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
}

/// Decimal text of `x` with enough digits to parse back to the same value.
pub fn real_to_string(x: &Float) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(roundtrip_digits(x.prec())))
}

/// Decimal text of `x` with `digits` significant digits.
pub fn real_to_string_digits(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits))
}

/// Complex number at configurable precision.
#[derive(Clone, Debug, PartialEq)]
pub struct HPComplex(Complex);

impl HPComplex {
    pub fn new(bits: u32, re: f64, im: f64) -> Self {
        HPComplex(Complex::with_val(bits, (re, im)))
    }

    pub fn zero(bits: u32) -> Self {
        HPComplex(Complex::new(bits))
    }

    pub fn one(bits: u32) -> Self {
        HPComplex::new(bits, 1.0, 0.0)
    }

    pub fn i(bits: u32) -> Self {
        HPComplex::new(bits, 0.0, 1.0)
    }

    pub fn from_int(bits: u32, v: i64) -> Self {
        HPComplex(Complex::with_val(bits, (v, 0)))
    }

    /// Exact rational `num/den`, correctly rounded once.
    pub fn from_ratio(bits: u32, num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::arg("zero denominator"));
        }
        // num and den are exact at >= 64 bits, so the quotient is rounded once.
        let n = Float::with_val(bits.max(64), num);
        let q = Float::with_val(bits, n / den);
        Ok(HPComplex::from_real(q))
    }

    pub fn from_real(re: Float) -> Self {
        let bits = re.prec();
        HPComplex(Complex::with_val(bits, (re, 0)))
    }

    pub fn from_parts(re: Float, im: Float) -> Self {
        let bits = re.prec().max(im.prec());
        HPComplex(Complex::with_val(bits, (re, im)))
    }

    /// Parse real and imaginary parts from decimal text.
    pub fn parse(bits: u32, re: &str, im: &str) -> Result<Self> {
        Ok(HPComplex::from_parts(parse_real(re, bits)?, parse_real(im, bits)?))
    }

    pub fn from_c64(bits: u32, z: Complex64) -> Self {
        HPComplex::new(bits, z.re, z.im)
    }

    pub fn prec(&self) -> u32 {
        let (a, b) = self.0.prec();
        a.max(b)
    }

    /// Round to a different precision.
    pub fn with_prec(&self, bits: u32) -> Self {
        HPComplex(Complex::with_val(bits, &self.0))
    }

    pub fn re(&self) -> &Float {
        self.0.real()
    }

    pub fn im(&self) -> &Float {
        self.0.imag()
    }

    pub fn into_parts(self) -> (Float, Float) {
        self.0.into_real_imag()
    }

    pub fn as_complex(&self) -> &Complex {
        &self.0
    }

    pub fn from_complex(c: Complex) -> Self {
        HPComplex(c)
    }

    pub fn into_complex(self) -> Complex {
        self.0
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re().to_f64(), self.im().to_f64())
    }

    pub fn is_finite(&self) -> bool {
        self.re().is_finite() && self.im().is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.re().is_zero() && self.im().is_zero()
    }

    /// Modulus `|z|`.
    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.0.abs_ref())
    }

    /// Squared modulus `|z|^2`.
    pub fn norm_sqr(&self) -> Float {
        Float::with_val(self.prec(), self.0.norm_ref())
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn arg(&self) -> Float {
        Float::with_val(self.prec(), self.0.arg_ref())
    }

    pub fn conj(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.conj_ref()))
    }

    pub fn scale(&self, k: &Float) -> Self {
        HPComplex(Complex::with_val(self.prec(), &self.0 * k))
    }

    pub fn sqr(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.square_ref()))
    }

    /// Principal square root (cut along the negative real axis).
    pub fn sqrt(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.sqrt_ref()))
    }

    pub fn exp(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.exp_ref()))
    }

    /// Principal logarithm, `Im` in `(-pi, pi]`.
    pub fn ln(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.ln_ref()))
    }

    pub fn sin(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.sin_ref()))
    }

    pub fn cos(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.cos_ref()))
    }

    pub fn sinh(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.sinh_ref()))
    }

    pub fn cosh(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), self.0.cosh_ref()))
    }

    pub fn powi(&self, n: i32) -> Self {
        HPComplex(Complex::with_val(self.prec(), (&self.0).pow(n)))
    }

    pub fn recip(&self) -> Self {
        HPComplex(Complex::with_val(self.prec(), 1 / &self.0))
    }

    /// `|self - other|`.
    pub fn dist(&self, other: &HPComplex) -> Float {
        (self - other).abs()
    }

    /// Lexicographic `(Re, Im)` comparison treating real parts closer than
    /// `tol * (1 + max|Re|)` as equal.
    pub fn lex_cmp(&self, other: &HPComplex, tol: &Float) -> Ordering {
        let scale = Float::with_val(self.prec(), 1 + self.re().clone().abs().max(&other.re().clone().abs()));
        let gap = Float::with_val(self.prec(), self.re() - other.re());
        if Float::with_val(self.prec(), gap.clone().abs()) > Float::with_val(self.prec(), tol * &scale) {
            return gap.partial_cmp(&0).unwrap_or(Ordering::Equal);
        }
        self.im().partial_cmp(other.im()).unwrap_or(Ordering::Equal)
    }
}

impl fmt::Display for HPComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(17);
        write!(f, "({}, {})", real_to_string_digits(self.re(), digits), real_to_string_digits(self.im(), digits))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign:ident, $op:tt) => {
        impl $trait<&HPComplex> for &HPComplex {
            type Output = HPComplex;
            fn $method(self, rhs: &HPComplex) -> HPComplex {
                let bits = self.prec().max(rhs.prec());
                HPComplex(Complex::with_val(bits, &self.0 $op &rhs.0))
            }
        }
        impl $trait<HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $method(self, rhs: HPComplex) -> HPComplex {
                &self $op &rhs
            }
        }
        impl $trait<&HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $method(self, rhs: &HPComplex) -> HPComplex {
                &self $op rhs
            }
        }
        impl $trait<HPComplex> for &HPComplex {
            type Output = HPComplex;
            fn $method(self, rhs: HPComplex) -> HPComplex {
                self $op &rhs
            }
        }
        impl $assign_trait<&HPComplex> for HPComplex {
            fn $assign(&mut self, rhs: &HPComplex) {
                self.0.$assign(&rhs.0);
            }
        }
        impl $assign_trait<HPComplex> for HPComplex {
            fn $assign(&mut self, rhs: HPComplex) {
                self.0.$assign(&rhs.0);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, +);
binop!(Sub, sub, SubAssign, sub_assign, -);
binop!(Mul, mul, MulAssign, mul_assign, *);
binop!(Div, div, DivAssign, div_assign, /);

impl Neg for HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        HPComplex(-self.0)
    }
}

impl Neg for &HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        HPComplex(Complex::with_val(self.prec(), -&self.0))
    }
}

pub fn pi(bits: u32) -> Float {
    Float::with_val(bits, Constant::Pi)
}

fn check_finite(z: &HPComplex, what: &str) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} of non-finite argument")))
    }
}

/// Replace a zero imaginary part by `+0` so that principal square roots
/// taken on the negative real axis land on the upper half plane.
fn positive_zero_imag(mut z: HPComplex) -> HPComplex {
    if z.im().is_zero() {
        z.0.mut_imag().assign_from_zero();
    }
    z
}

trait AssignZero {
    fn assign_from_zero(&mut self);
}

impl AssignZero for Float {
    fn assign_from_zero(&mut self) {
        use rug::Assign;
        self.assign(0u32);
    }
}

/// Inverse cosine, `cos(w) = z`.
///
/// Principal branch with `Re(w)` in `[0, pi]`; on the real interval
/// `(-1, 1)` the result is real. For real `z > 1` the result is
/// `+i * arccosh(z)`, for real `z < -1` it is `pi - i * arccosh(-z)`.
pub fn acos_c(z: &HPComplex, cfg: &PrecisionConfig) -> Result<HPComplex> {
    check_finite(z, "acos")?;
    let work = cfg.bits() + GUARD_BITS;
    let zw = z.with_prec(work);
    let one = HPComplex::one(work);
    // w = -i ln(z + i sqrt(1 - z^2))
    let root = positive_zero_imag(&one - &zw.sqr()).sqrt();
    let inner = &zw + &(&HPComplex::i(work) * &root);
    let mut w = -(&HPComplex::i(work) * &inner.ln());
    if z.im().is_zero() && z.re().clone().abs() <= 1 {
        w.0.mut_imag().assign_from_zero();
    }
    // Newton polish on cos(w) - z.
    for _ in 0..2 {
        let s = w.sin();
        if s.abs() < cfg.epsilon() {
            break;
        }
        let f = &w.cos() - &zw;
        w = &w + &(&f / &s);
    }
    if z.im().is_zero() && z.re().clone().abs() <= 1 {
        w.0.mut_imag().assign_from_zero();
    }
    Ok(w.with_prec(cfg.bits()))
}

/// Inverse hyperbolic cosine, `cosh(w) = z`, principal branch with
/// `Re(w) >= 0`.
pub fn acosh_c(z: &HPComplex, cfg: &PrecisionConfig) -> Result<HPComplex> {
    check_finite(z, "acosh")?;
    let work = cfg.bits() + GUARD_BITS;
    let zw = z.with_prec(work);
    let one = HPComplex::one(work);
    // w = ln(z + sqrt(z + 1) sqrt(z - 1))
    let a = positive_zero_imag(&zw + &one).sqrt();
    let b = positive_zero_imag(&zw - &one).sqrt();
    let mut w = (&zw + &(&a * &b)).ln();
    for _ in 0..2 {
        let s = w.sinh();
        if s.abs() < cfg.epsilon() {
            break;
        }
        let f = &w.cosh() - &zw;
        w = &w - &(&f / &s);
    }
    if w.re().is_sign_negative() {
        w = -w;
    }
    Ok(w.with_prec(cfg.bits()))
}

/// Terms `f_0 ... f_n` of `f_{j+1} = x f_j - y f_{j-1}`.
pub fn three_term_sequence(x: &HPComplex, y: &HPComplex, n: i64, f0: &HPComplex, f1: &HPComplex) -> Result<Vec<HPComplex>> {
    if n < 0 {
        return Err(Error::arg(format!("sequence length must be non-negative, got {n}")));
    }
    let n = n as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push(f0.clone());
    if n == 0 {
        return Ok(out);
    }
    out.push(f1.clone());
    for j in 1..n {
        let next = &(x * &out[j]) - &(y * &out[j - 1]);
        out.push(next);
    }
    Ok(out)
}

/// Chebyshev polynomials of the second kind `U_0(c) ... U_n(c)` together
/// with their derivatives in `c`.
///
/// `U_m(cos t) = sin((m+1) t) / sin(t)`, which gives the `sin(m t)/sin(t)`
/// ratios used throughout without dividing by `sin(t)`.
pub fn chebyshev_u(c: &HPComplex, n: usize) -> (Vec<HPComplex>, Vec<HPComplex>) {
    let bits = c.prec();
    let two_c = c.scale(&Float::with_val(bits, 2));
    let mut u = Vec::with_capacity(n + 1);
    let mut du = Vec::with_capacity(n + 1);
    u.push(HPComplex::one(bits));
    du.push(HPComplex::zero(bits));
    if n >= 1 {
        u.push(two_c.clone());
        du.push(HPComplex::from_int(bits, 2));
    }
    for m in 1..n {
        let next = &(&two_c * &u[m]) - &u[m - 1];
        // d/dc: 2 U_m + 2c U_m' - U_{m-1}'
        let dnext = &(&u[m].scale(&Float::with_val(bits, 2)) + &(&two_c * &du[m])) - &du[m - 1];
        u.push(next);
        du.push(dnext);
    }
    (u, du)
}
