//! Closed-form analytics of the impurity chain built on the Fibonacci
//! polynomials `F(j) = (r+^j - r-^j) / (r+ - r-)`.
//!
//! In wavevector form `x = 2 sqrt(y) cos(kd)` and
//! `F(j) = sqrt(y)^(j-1) U_(j-1)(cos kd)`, with `U` the Chebyshev
//! polynomials of the second kind, so the `kd -> 0, pi` limits need no
//! special casing.

use rug::Float;

use crate::error::{Error, Result};
use crate::lattice::{dispersion_obc, Boundary, ChainSpec};
use crate::numeric::{acos_c, acosh_c, chebyshev_u, pi, three_term_sequence, HPComplex, PrecisionConfig};
use crate::profile::ModeProfile;

/// Indices up to this size use the recursion, larger ones the closed form.
const RECURSION_LIMIT: i64 = 1000;

/// `x = E/tL`, `y = tR/tL` and the characteristic roots `r+-`.
#[derive(Clone, Debug)]
pub struct FibContext {
    pub x: HPComplex,
    pub y: HPComplex,
    pub r_plus: HPComplex,
    pub r_minus: HPComplex,
    /// `r+ = r-` within tolerance (band-edge degeneracy `x^2 = 4y`).
    pub degenerate: bool,
}

impl FibContext {
    pub fn new(x: &HPComplex, y: &HPComplex, cfg: &PrecisionConfig) -> Result<Self> {
        let bits = cfg.bits();
        let x = x.with_prec(bits);
        let y = y.with_prec(bits);
        if y.is_zero() {
            return Err(Error::arg("y = tR/tL must be nonzero"));
        }
        let disc = (&x.sqr() - &y.scale(&Float::with_val(bits, 4))).sqrt();
        let half = Float::with_val(bits, 0.5);
        let r_plus = (&x + &disc).scale(&half);
        let r_minus = (&x - &disc).scale(&half);
        let size = Float::with_val(bits, 1 + r_plus.abs());
        let degenerate = disc.abs() <= Float::with_val(bits, cfg.tol() * &size);
        Ok(FibContext { x, y, r_plus, r_minus, degenerate })
    }

    /// Context at energy `e` for the hoppings of `spec`.
    pub fn at_energy(e: &HPComplex, spec: &ChainSpec, cfg: &PrecisionConfig) -> Result<Self> {
        let s = spec.with_prec(cfg.bits());
        FibContext::new(&(&e.with_prec(cfg.bits()) / s.t_left()), &s.y(), cfg)
    }
}

/// `F(j)` for any integer `j`, with `F(-m) = -F(m) / y^m`.
pub fn fib_poly(j: i64, ctx: &FibContext) -> HPComplex {
    let bits = ctx.x.prec();
    if j.abs() <= RECURSION_LIMIT {
        let m = j.abs();
        let seq = three_term_sequence(&ctx.x, &ctx.y, m, &HPComplex::zero(bits), &HPComplex::one(bits)).expect("non-negative length");
        let fm = seq[m as usize].clone();
        if j >= 0 {
            fm
        } else {
            -(&fm / &ctx.y.powi(m as i32))
        }
    } else if ctx.degenerate {
        let r = ctx.x.scale(&Float::with_val(bits, 0.5));
        (&HPComplex::from_int(bits, j) * &r.powi((j - 1) as i32)).with_prec(bits)
    } else {
        let num = &ctx.r_plus.powi(j as i32) - &ctx.r_minus.powi(j as i32);
        &num / &(&ctx.r_plus - &ctx.r_minus)
    }
}

/// `sin(j t) / sin(t)` as `U_(j-1)(cos t)`, for any integer `j`.
fn sine_ratio(j: i64, u: &[HPComplex], bits: u32) -> HPComplex {
    match j {
        0 => HPComplex::zero(bits),
        j if j > 0 => u[(j - 1) as usize].clone(),
        j => -&u[(-j - 1) as usize],
    }
}

/// `F(j) = sqrt(y)^(j-1) sin(kd j) / sin(kd)`.
///
/// `sqrt_y` must be the branch tied to the chain, i.e.
/// [`ChainSpec::sqrt_y`]; at `kd -> 0, pi` the sine ratio goes to its
/// `j (+-1)^(j-1)` limit.
pub fn fib_poly_kd(j: i64, kd: &HPComplex, sqrt_y: &HPComplex) -> HPComplex {
    let bits = kd.prec().max(sqrt_y.prec());
    let c = kd.with_prec(bits).cos();
    let (u, _) = chebyshev_u(&c, j.unsigned_abs() as usize);
    let ratio = sine_ratio(j, &u, bits);
    &sqrt_y.with_prec(bits).powi((j - 1) as i32) * &ratio
}

/// Residual of a quantization condition at one wavevector.
#[derive(Clone, Debug)]
pub struct QuantizationResidual {
    pub value: HPComplex,
    pub kd: HPComplex,
    pub energy: HPComplex,
}

struct Evaluated {
    value: HPComplex,
    // d value / d kd
    slope: HPComplex,
    // sum of term magnitudes, the natural scale of `value`
    size: Float,
}

fn obc_terms(spec: &ChainSpec, kd: &HPComplex) -> Evaluated {
    let bits = kd.prec().max(spec.prec());
    let n = spec.n_sites();
    let l = spec.impurity_site();
    let kd = kd.with_prec(bits);
    let c = kd.cos();
    let (u, du) = chebyshev_u(&c, n);
    let g = &spec.delta().with_prec(bits) / &spec.sqrt_lr().with_prec(bits);
    let a = &u[l - 1];
    let b = &u[n - l];
    let lhs = &g * &(a * b);
    let value = &lhs - &u[n];
    let dvalue_dc = &(&g * &(&(&du[l - 1] * b) + &(a * &du[n - l]))) - &du[n];
    let slope = -(&dvalue_dc * &kd.sin());
    let size = Float::with_val(bits, lhs.abs() + u[n].abs());
    Evaluated { value, slope, size }
}

fn pbc_terms(spec: &ChainSpec, kd: &HPComplex) -> Evaluated {
    let bits = kd.prec().max(spec.prec());
    let n = spec.n_sites();
    let kd = kd.with_prec(bits);
    let c = kd.cos();
    let (u, du) = chebyshev_u(&c, n);
    let sy = spec.sqrt_y().with_prec(bits);
    let y = spec.y().with_prec(bits);
    let g = &spec.delta().with_prec(bits) / &spec.t_left().with_prec(bits);
    // (delta/tL) F(N) + 1 + y^N - (r+^N + r-^N), with
    // F(N) = sqrt(y)^(N-1) U_(N-1) and r+^N + r-^N = 2 sqrt(y)^N T_N
    let syn1 = sy.powi(n as i32 - 1);
    let syn = &syn1 * &sy;
    let two = Float::with_val(bits, 2);
    let t_n = &u[n] - &(&c * &u[n - 1]);
    let f_term = &g * &(&syn1 * &u[n - 1]);
    let lucas = (&syn * &t_n).scale(&two);
    let yn = y.powi(n as i32);
    let one = HPComplex::one(bits);
    let value = &(&(&f_term + &one) + &yn) - &lucas;
    // T_N' = N U_(N-1)
    let dt = (&HPComplex::from_int(bits, n as i64)) * &u[n - 1];
    let dvalue_dc = &(&g * &(&syn1 * &du[n - 1])) - &(&syn * &dt).scale(&two);
    let slope = -(&dvalue_dc * &kd.sin());
    let size = Float::with_val(bits, f_term.abs() + 1u32) + yn.abs() + lucas.abs();
    Evaluated { value, slope, size }
}

/// Open-chain quantization residual
/// `(delta/sqrt(tL tR)) U_(l-1) U_(N-l) - U_N` at `c = cos kd`.
pub fn quantization_residual_obc(spec: &ChainSpec, kd: &HPComplex) -> Result<QuantizationResidual> {
    if spec.boundary() != Boundary::Obc {
        return Err(Error::arg("open-chain residual needs an OBC spec"));
    }
    let ev = obc_terms(spec, kd);
    Ok(QuantizationResidual { value: ev.value, kd: kd.clone(), energy: dispersion_obc(kd, spec) })
}

/// Ring quantization residual
/// `(delta/tL) (r+^N - r-^N)/(r+ - r-) + (1 - r+^N)(1 - r-^N)` with
/// `r- = y / r+`.
pub fn quantization_residual_pbc(spec: &ChainSpec, r_plus: &HPComplex, cfg: &PrecisionConfig) -> Result<QuantizationResidual> {
    if spec.boundary() != Boundary::Pbc {
        return Err(Error::arg("ring residual needs a PBC spec"));
    }
    if r_plus.is_zero() {
        return Err(Error::arg("r+ must be nonzero"));
    }
    let bits = cfg.bits();
    let s = spec.with_prec(bits);
    let n = s.n_sites() as i32;
    let rp = r_plus.with_prec(bits);
    let rm = &s.y() / &rp;
    let gap = &rp - &rm;
    let size = Float::with_val(bits, 1 + rp.abs());
    let f_n = if gap.abs() <= Float::with_val(bits, cfg.tol() * &size) {
        let r = (&rp + &rm).scale(&Float::with_val(bits, 0.5));
        &HPComplex::from_int(bits, n as i64) * &r.powi(n - 1)
    } else {
        &(&rp.powi(n) - &rm.powi(n)) / &gap
    };
    let one = HPComplex::one(bits);
    let value = &(&(s.delta() / s.t_left()) * &f_n) + &(&(&one - &rp.powi(n)) * &(&one - &rm.powi(n)));
    // r+ = sqrt(y) e^{i kd}
    let kd = &(&HPComplex::i(bits) * &(&rp / &s.sqrt_y()).ln()) * &HPComplex::from_int(bits, -1);
    let energy = s.t_left() * &(&rp + &rm);
    Ok(QuantizationResidual { value, kd: canonical_kd(kd), energy })
}

/// Reduce `kd` so that `Re(kd)` lies in `[0, pi]` without changing
/// `cos(kd)`; on the endpoints `Im(kd) >= 0`.
pub fn canonical_kd(kd: HPComplex) -> HPComplex {
    let bits = kd.prec();
    let p = pi(bits);
    let two_pi = Float::with_val(bits, &p * 2u32);
    let (mut re, mut im) = kd.into_parts();
    re = Float::with_val(bits, &re % &two_pi);
    if re < 0 {
        re += &two_pi;
    }
    if re > p {
        re = Float::with_val(bits, &two_pi - &re);
        im = -im;
    }
    if (re.is_zero() || re == p) && im < 0 {
        im = -im;
    }
    HPComplex::from_parts(re, im)
}

/// Newton-polish `kd` from `acos(E_seed / (2 sqrt(tL tR)))` on the
/// quantization residual of the spec's boundary condition.
///
/// Stops once `|residual| < tol * max(1, sum of term magnitudes)` and then
/// takes one more step. Returns `(kd, E)` with `kd` reduced as in
/// [`canonical_kd`].
pub fn refine_wavevector(spec: &ChainSpec, e_seed: &HPComplex, cfg: &PrecisionConfig) -> Result<(HPComplex, HPComplex)> {
    let bits = cfg.bits();
    let s = spec.with_prec(bits);
    let two_s = s.sqrt_lr().scale(&Float::with_val(bits, 2));
    let mut kd = acos_c(&(&e_seed.with_prec(bits) / &two_s), cfg)?;
    let terms = |kd: &HPComplex| match s.boundary() {
        Boundary::Obc => obc_terms(&s, kd),
        Boundary::Pbc => pbc_terms(&s, kd),
    };
    let nudge = Float::with_val(bits, cfg.epsilon().sqrt());
    let mut last = f64::INFINITY;
    for _ in 0..cfg.max_iter() {
        let ev = terms(&kd);
        if !ev.value.is_finite() || !kd.is_finite() {
            break;
        }
        last = ev.value.abs_f64();
        let limit = Float::with_val(bits, cfg.tol() * ev.size.clone().max(&Float::with_val(bits, 1)));
        let done = ev.value.abs() < limit;
        if ev.slope.is_zero() {
            if ev.value.is_zero() {
                break;
            }
            kd = &kd + &HPComplex::from_real(nudge.clone());
            continue;
        }
        kd = &kd - &(&ev.value / &ev.slope);
        if done {
            let kd = canonical_kd(kd);
            let e = crate::lattice::dispersion_obc(&kd, &s);
            return Ok((kd, e));
        }
    }
    let ev = terms(&kd);
    if ev.value.is_zero() {
        let kd = canonical_kd(kd);
        let e = dispersion_obc(&kd, &s);
        return Ok((kd, e));
    }
    Err(Error::Convergence { iterations: cfg.max_iter(), worst_residual: last, index: None })
}

/// Open-chain eigenvector for a quantized `kd`.
///
/// Built as `psi_j = F(j) F(l-N-1)` left of the impurity and
/// `F(l) F(j-N-1)` right of it, i.e. the two-branch solution multiplied by
/// `F(l-N-1)`. At a root `F(l-N-1) = 0` forces `F(l) = 0` as well; the mode
/// then has a node at the impurity and the branch weights come from the
/// impurity row `tR psi_(l-1) + tL psi_(l+1) = 0` instead.
pub fn closed_form_eigenvector(spec: &ChainSpec, kd: &HPComplex) -> Result<ModeProfile> {
    if spec.boundary() != Boundary::Obc {
        return Err(Error::arg("closed-form eigenvectors need an OBC spec"));
    }
    let bits = kd.prec().max(spec.prec());
    let s = spec.with_prec(bits);
    let n = s.n_sites() as i64;
    let l = s.impurity_site() as i64;
    let kd = kd.with_prec(bits);
    let c = kd.cos();
    let (u, _) = chebyshev_u(&c, (n + 1) as usize);
    let sy = s.sqrt_y();
    let f = |j: i64| &sy.powi((j - 1) as i32) * &sine_ratio(j, &u, bits);
    let left: Vec<HPComplex> = (1..=l).map(f).collect();
    let right: Vec<HPComplex> = (l..=n).map(|j| f(j - n - 1)).collect();
    let size = |v: &[HPComplex]| v.iter().map(HPComplex::abs).fold(Float::new(bits), |a, b| a.max(&b));
    let small = Float::with_val(bits, Float::i_exp(1, -(bits as i32) / 2));
    let node = |v: &HPComplex, all: &[HPComplex]| v.abs() <= Float::with_val(bits, &small * &size(all));
    let (a, b) = if node(&left[(l - 1) as usize], &left) && node(&right[0], &right) {
        (s.t_left() * &f(l - n), -(s.t_right() * &f(l - 1)))
    } else {
        (right[0].clone(), left[(l - 1) as usize].clone())
    };
    let amps: Vec<HPComplex> = (1..=n).map(|j| if j <= l { &left[(j - 1) as usize] * &a } else { &right[(j - l) as usize] * &b }).collect();
    if amps.iter().all(HPComplex::is_zero) {
        return Err(Error::Pole(format!("closed-form vector vanishes at kd = {kd}")));
    }
    let energy = dispersion_obc(&kd, &s);
    ModeProfile::single(amps, Some(energy)).map_err(|_| Error::Pole("closed-form vector vanishes".into()))
}

/// Critical impurity strengths `+- sqrt(tL tR) (N+1) / (l (N+1-l))`.
pub fn delta_critical(n_sites: usize, l: usize, t_left: &HPComplex, t_right: &HPComplex) -> Result<(HPComplex, HPComplex)> {
    if l < 1 || l > n_sites {
        return Err(Error::arg(format!("impurity site {l} outside 1..={n_sites}")));
    }
    let bits = t_left.prec().max(t_right.prec());
    let s = (t_left * t_right).sqrt();
    let num = (n_sites + 1) as i64;
    let den = (l * (n_sites + 1 - l)) as i64;
    let v = &s * &HPComplex::from_ratio(bits, num, den)?;
    let neg = -&v;
    Ok((v, neg))
}

/// Linear mode at `delta = delta_c`: `(+-sqrt y)^(j-1) j` up to the
/// impurity, `l (+-sqrt y)^(j-1) (j-N-1)/(l-N-1)` after it.
pub fn linear_mode(spec: &ChainSpec, sign: i32, cfg: &PrecisionConfig) -> Result<ModeProfile> {
    if spec.boundary() != Boundary::Obc {
        return Err(Error::arg("linear modes need an OBC spec"));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::arg("sign must be +1 or -1"));
    }
    let bits = cfg.bits();
    let s = spec.with_prec(bits);
    let (n, l) = (s.n_sites() as i64, s.impurity_site() as i64);
    let (plus, minus) = delta_critical(s.n_sites(), s.impurity_site(), s.t_left(), s.t_right())?;
    let target = if sign > 0 { plus } else { minus };
    let gap = s.delta().dist(&target);
    let limit = Float::with_val(bits, cfg.tol() * (1 + target.abs()));
    if gap > limit {
        return Err(Error::pre(format!("delta must equal the critical strength {target} for a linear mode")));
    }
    let base = if sign > 0 { s.sqrt_y() } else { -s.sqrt_y() };
    let amps: Vec<HPComplex> = (1..=n)
        .map(|j| {
            let pw = base.powi((j - 1) as i32);
            if j <= l {
                &pw * &HPComplex::from_int(bits, j)
            } else {
                let ratio = HPComplex::from_ratio(bits, l * (j - n - 1), l - n - 1).expect("l <= N");
                &pw * &ratio
            }
        })
        .collect();
    let e = s.sqrt_lr().scale(&Float::with_val(bits, 2 * sign));
    ModeProfile::single(amps, Some(e))
}

/// Impurity strengths of the counter skin-effect: `+-(tR - tL)` in the
/// bulk, `+-tR` for `l = 1` and `+-tL` for `l = N`.
pub fn icse_delta(spec: &ChainSpec) -> (HPComplex, HPComplex) {
    let v = if spec.impurity_site() == 1 {
        spec.t_right().clone()
    } else if spec.impurity_site() == spec.n_sites() {
        spec.t_left().clone()
    } else {
        spec.t_right() - spec.t_left()
    };
    let neg = -&v;
    (v, neg)
}

/// Whether `l` is close enough to an edge that the bulk ICSE strength is
/// only approximate (`l <= 3` or `l >= N-2`).
pub fn near_edge(spec: &ChainSpec) -> bool {
    let (l, n) = (spec.impurity_site(), spec.n_sites());
    l <= 3 || l + 2 >= n
}

/// Flat-profile energy estimate `+-(tL + tR)`.
pub fn icse_energy_estimate(t_left: &HPComplex, t_right: &HPComplex, sign: i32) -> HPComplex {
    let v = t_left + t_right;
    if sign < 0 {
        -v
    } else {
        v
    }
}

/// Ratios `y_c+-` bounding the counter skin-effect window.
pub fn y_critical(n_sites: usize, l: usize, bits: u32) -> Result<(Float, Float)> {
    if l < 1 || l > n_sites {
        return Err(Error::arg(format!("impurity site {l} outside 1..={n_sites}")));
    }
    let b = Float::with_val(bits, (n_sites + 1) as u64) / Float::with_val(bits, (l * (n_sites + 1 - l)) as u64);
    let root = Float::with_val(bits, b.clone().square() + 4u32).sqrt();
    let plus = Float::with_val(bits, &b + &root).square() / 4u32;
    let minus = Float::with_val(bits, &b - &root).square() / 4u32;
    Ok((plus, minus))
}

/// Localization of the counter skin-effect mode.
#[derive(Clone, Debug)]
pub struct Localization {
    /// `kappa d = arccosh((tL + tR) / (2 sqrt(tL tR)))`.
    pub kappa_d: HPComplex,
    /// Skin-effect length `2 / ln(tR/tL)` in units of `d`; `None` when
    /// `tL = tR`.
    pub nhse_length: Option<HPComplex>,
    /// `tL = tR`: no decay at all.
    pub zero_decay: bool,
}

pub fn kappa_localization(t_left: &HPComplex, t_right: &HPComplex, cfg: &PrecisionConfig) -> Result<Localization> {
    let bits = cfg.bits();
    let tl = t_left.with_prec(bits);
    let tr = t_right.with_prec(bits);
    if tl.is_zero() || tr.is_zero() {
        return Err(Error::arg("hoppings must be nonzero"));
    }
    if tl == tr {
        return Ok(Localization { kappa_d: HPComplex::zero(bits), nhse_length: None, zero_decay: true });
    }
    let s = (&tl * &tr).sqrt();
    let arg = &(&tl + &tr) / &s.scale(&Float::with_val(bits, 2));
    let kappa_d = acosh_c(&arg, cfg)?;
    let half_log = (&tr / &tl).ln().scale(&Float::with_val(bits, 0.5));
    let nhse_length = half_log.recip();
    let real_regime = tl.im().is_zero() && tr.im().is_zero() && tl.re().is_sign_positive() && tr.re().is_sign_positive();
    if real_regime {
        let gap = kappa_d.dist(&HPComplex::from_real(half_log.abs()));
        if gap > Float::with_val(bits, cfg.tol() * 10u32) {
            return Err(Error::Domain(format!("arccosh and log forms disagree by {gap}")));
        }
    }
    Ok(Localization { kappa_d, nhse_length: Some(nhse_length), zero_decay: false })
}

#[cfg(test)]
mod tests;
