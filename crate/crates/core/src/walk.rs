//! Discrete-time non-unitary quantum walk with a biased coin and on-site
//! coin defects.
//!
//! One step is `U = S (I x C)`: the (site-dependent) coin acts on the
//! `(R, L)` amplitudes at every site, then `R` moves to `x+1` and `L` to
//! `x-1`. Norm is not restored between steps.

use num_complex::Complex64;
use rug::Float;

use crate::error::{Error, Result};
use crate::numeric::HPComplex;

/// Coin `[[sqrt r, sqrt(1-r)], [sqrt(1-l), -sqrt l]]` acting on `(R, L)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinSpec {
    r: f64,
    ell: f64,
}

impl CoinSpec {
    pub fn new(r: f64, ell: f64) -> Result<Self> {
        for (name, v) in [("r", r), ("ell", ell)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::arg(format!("coin parameter {name} = {v} outside [0, 1]")));
            }
        }
        Ok(CoinSpec { r, ell })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `C C^dagger = I` to `1e-14`.
    pub fn is_unitary(&self) -> bool {
        let c = build_coin(self);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let v: Complex64 = (0..2).map(|k| c[i][k] * c[j][k].conj()).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).norm());
            }
        }
        worst < 1e-14
    }
}

/// Coin matrix in the `(R, L)` basis.
pub fn build_coin(coin: &CoinSpec) -> [[Complex64; 2]; 2] {
    let c = |v: f64| Complex64::new(v, 0.0);
    [[c(coin.r.sqrt()), c((1.0 - coin.r).sqrt())], [c((1.0 - coin.ell).sqrt()), c(-coin.ell.sqrt())]]
}

/// On-site coin defect.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ImpuritySpec {
    None,
    /// `gamma C` at `site`, `gamma` in `[0, 1]`.
    M1 {
        site: usize,
        gamma: f64,
    },
    /// `e^{i phi} C` at `site`, `phi` in `[0, 2 pi)`.
    M2 {
        site: usize,
        phi: f64,
    },
    /// `diag(sqrt gamma_r, sqrt gamma_l) C` at `site`.
    M3 {
        site: usize,
        gamma_r: f64,
        gamma_l: f64,
    },
}

impl ImpuritySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ImpuritySpec::None => Ok(()),
            ImpuritySpec::M1 { gamma, .. } if !(0.0..=1.0).contains(&gamma) => {
                Err(Error::arg(format!("M1 gamma = {gamma} outside [0, 1]")))
            }
            ImpuritySpec::M2 { phi, .. } if !(0.0..std::f64::consts::TAU).contains(&phi) => {
                Err(Error::arg(format!("M2 phi = {phi} outside [0, 2 pi)")))
            }
            ImpuritySpec::M3 { gamma_r, gamma_l, .. }
                if !(gamma_r > 0.0 && gamma_l > 0.0 && gamma_r.is_finite() && gamma_l.is_finite()) =>
            {
                Err(Error::arg("M3 gains must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn site(&self) -> Option<usize> {
        match *self {
            ImpuritySpec::None => None,
            ImpuritySpec::M1 { site, .. } | ImpuritySpec::M2 { site, .. } | ImpuritySpec::M3 { site, .. } => Some(site),
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self {
            ImpuritySpec::None => "none",
            ImpuritySpec::M1 { .. } => "M1",
            ImpuritySpec::M2 { .. } => "M2",
            ImpuritySpec::M3 { .. } => "M3",
        }
    }
}

/// Coin in effect at site `x`.
pub fn site_coin(coin: &CoinSpec, imp: &ImpuritySpec, x: usize) -> [[Complex64; 2]; 2] {
    let c = build_coin(coin);
    if imp.site() != Some(x) {
        return c;
    }
    match *imp {
        ImpuritySpec::None => c,
        ImpuritySpec::M1 { gamma, .. } => c.map(|row| row.map(|z| z * gamma)),
        ImpuritySpec::M2 { phi, .. } => {
            let p = Complex64::from_polar(1.0, phi);
            c.map(|row| row.map(|z| z * p))
        }
        ImpuritySpec::M3 { gamma_r, gamma_l, .. } => {
            let g = [gamma_r.sqrt(), gamma_l.sqrt()];
            [c[0].map(|z| z * g[0]), c[1].map(|z| z * g[1])]
        }
    }
}

/// Edge treatment of the finite lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WalkBoundary {
    /// Amplitude leaving the lattice is dropped.
    #[default]
    Absorbing,
    /// Sites `0` and `L-1` are neighbours.
    Periodic,
}

impl std::str::FromStr for WalkBoundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "absorbing" => Ok(WalkBoundary::Absorbing),
            "periodic" => Ok(WalkBoundary::Periodic),
            _ => Err(Error::arg(format!("unknown walk boundary {s:?}"))),
        }
    }
}

impl WalkBoundary {
    pub fn as_str(self) -> &'static str {
        match self {
            WalkBoundary::Absorbing => "absorbing",
            WalkBoundary::Periodic => "periodic",
        }
    }
}

/// Per-site `(R, L)` amplitudes at double or extended precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Amplitudes {
    Double(Vec<[Complex64; 2]>),
    Extended(Vec<[HPComplex; 2]>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    pub amplitudes: Amplitudes,
    pub step_count: usize,
}

impl WalkState {
    /// Walker at `x0` with coin state `(a_R, a_L)`, in double precision.
    pub fn point(len: usize, x0: usize, coin_state: [Complex64; 2]) -> Result<Self> {
        if len == 0 || x0 >= len {
            return Err(Error::arg(format!("start {x0} outside a lattice of {len} sites")));
        }
        let mut a = vec![[Complex64::new(0.0, 0.0); 2]; len];
        a[x0] = coin_state;
        Ok(WalkState { amplitudes: Amplitudes::Double(a), step_count: 0 })
    }

    /// The same start at `bits` of precision.
    pub fn point_extended(len: usize, x0: usize, coin_state: [Complex64; 2], bits: u32) -> Result<Self> {
        let s = WalkState::point(len, x0, coin_state)?;
        Ok(s.to_extended(bits))
    }

    pub fn to_extended(&self, bits: u32) -> WalkState {
        let a = match &self.amplitudes {
            Amplitudes::Double(v) => v.iter().map(|p| p.map(|z| HPComplex::from_c64(bits, z))).collect(),
            Amplitudes::Extended(v) => v.iter().map(|p| [p[0].with_prec(bits), p[1].with_prec(bits)]).collect(),
        };
        WalkState { amplitudes: Amplitudes::Extended(a), step_count: self.step_count }
    }

    pub fn len(&self) -> usize {
        match &self.amplitudes {
            Amplitudes::Double(v) => v.len(),
            Amplitudes::Extended(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `sum |a|^2` over sites and coin states.
    pub fn norm_sqr(&self) -> f64 {
        position_distribution(self, false).map(|p| p.iter().sum()).unwrap_or(0.0)
    }

    fn is_finite(&self) -> bool {
        match &self.amplitudes {
            Amplitudes::Double(v) => v.iter().flatten().all(|z| z.is_finite()),
            Amplitudes::Extended(v) => v.iter().flatten().all(HPComplex::is_finite),
        }
    }
}

/// `(|R> + i|L>) / sqrt 2`, the coin state with a mirror-symmetric
/// unbiased walk.
pub fn symmetric_coin_state() -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [Complex64::new(h, 0.0), Complex64::new(0.0, h)]
}

fn target(x: usize, dx: isize, len: usize, boundary: WalkBoundary) -> Option<usize> {
    let t = x as isize + dx;
    if (0..len as isize).contains(&t) {
        Some(t as usize)
    } else if boundary == WalkBoundary::Periodic {
        Some(t.rem_euclid(len as isize) as usize)
    } else {
        None
    }
}

/// One application of `S (I x C)`.
pub fn step(state: &WalkState, coin: &CoinSpec, imp: &ImpuritySpec, boundary: WalkBoundary) -> WalkState {
    let len = state.len();
    let amplitudes = match &state.amplitudes {
        Amplitudes::Double(a) => {
            let mut out = vec![[Complex64::new(0.0, 0.0); 2]; len];
            for (x, p) in a.iter().enumerate() {
                let c = site_coin(coin, imp, x);
                let r = c[0][0] * p[0] + c[0][1] * p[1];
                let l = c[1][0] * p[0] + c[1][1] * p[1];
                if let Some(t) = target(x, 1, len, boundary) {
                    out[t][0] += r;
                }
                if let Some(t) = target(x, -1, len, boundary) {
                    out[t][1] += l;
                }
            }
            Amplitudes::Double(out)
        }
        Amplitudes::Extended(a) => {
            let bits = a.first().map(|p| p[0].prec()).unwrap_or(53);
            let mut out = vec![[HPComplex::zero(bits), HPComplex::zero(bits)]; len];
            let plain = extended_coin(&build_coin(coin), bits);
            let special = imp.site().map(|s| (s, extended_coin(&site_coin(coin, imp, s), bits)));
            for (x, p) in a.iter().enumerate() {
                let c = match &special {
                    Some((s, m)) if *s == x => m,
                    _ => &plain,
                };
                let r = &(&c[0][0] * &p[0]) + &(&c[0][1] * &p[1]);
                let l = &(&c[1][0] * &p[0]) + &(&c[1][1] * &p[1]);
                if let Some(t) = target(x, 1, len, boundary) {
                    out[t][0] += r;
                }
                if let Some(t) = target(x, -1, len, boundary) {
                    out[t][1] += l;
                }
            }
            Amplitudes::Extended(out)
        }
    };
    WalkState { amplitudes, step_count: state.step_count + 1 }
}

fn extended_coin(c: &[[Complex64; 2]; 2], bits: u32) -> [[HPComplex; 2]; 2] {
    c.map(|row| row.map(|z| HPComplex::from_c64(bits, z)))
}

/// Final state of a walk together with the norm after every step.
#[derive(Clone, Debug)]
pub struct WalkRun {
    pub state: WalkState,
    /// `||psi(t)||^2` for `t = 0 ..= steps`.
    pub norm_trace: Vec<f64>,
}

/// `steps` applications of the walk operator.
pub fn evolve(initial: &WalkState, steps: usize, coin: &CoinSpec, imp: &ImpuritySpec, boundary: WalkBoundary) -> Result<WalkRun> {
    imp.validate()?;
    if let Some(s) = imp.site() {
        if s >= initial.len() {
            return Err(Error::arg(format!("impurity site {s} outside a lattice of {} sites", initial.len())));
        }
    }
    let mut state = initial.clone();
    let mut norm_trace = Vec::with_capacity(steps + 1);
    norm_trace.push(state.norm_sqr());
    for t in 1..=steps {
        state = step(&state, coin, imp, boundary);
        let n = state.norm_sqr();
        if !n.is_finite() || !state.is_finite() {
            return Err(Error::Overflow { step: t });
        }
        norm_trace.push(n);
    }
    Ok(WalkRun { state, norm_trace })
}

/// `p(x) = |a_R(x)|^2 + |a_L(x)|^2`, optionally divided by the total.
pub fn position_distribution(state: &WalkState, normalized: bool) -> Result<Vec<f64>> {
    let p: Vec<f64> = match &state.amplitudes {
        Amplitudes::Double(a) => a.iter().map(|s| s[0].norm_sqr() + s[1].norm_sqr()).collect(),
        Amplitudes::Extended(a) => a
            .iter()
            .map(|s| {
                let bits = s[0].prec();
                Float::with_val(bits, s[0].norm_sqr() + s[1].norm_sqr()).to_f64()
            })
            .collect(),
    };
    if !normalized {
        return Ok(p);
    }
    let total: f64 = p.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateState("walk state has zero norm".into()));
    }
    Ok(p.into_iter().map(|v| v / total).collect())
}

/// Mean of a normalized distribution relative to `origin`.
pub fn mean_displacement(p: &[f64], origin: usize) -> f64 {
    p.iter().enumerate().map(|(x, v)| (x as f64 - origin as f64) * v).sum()
}
