//! Skin-effect profiles, impurity-mode identification, the `D_x` gradient,
//! phase scans, spectral winding and fragmentation checks.

use std::ops::RangeInclusive;

use rug::Float;

use crate::error::{Error, Result};
use crate::lattice::{build_hatano_nelson, dispersion_pbc, Boundary, ChainSpec, SSHSpec};
use crate::numeric::{HPComplex, PrecisionConfig};
use crate::profile::ModeProfile;
use crate::spectral::{full_spectrum, Spectrum};

/// Relative variation below which a profile segment counts as flat.
pub const FLATNESS_THRESHOLD: f64 = 0.05;

/// Value stored for scan cells whose evaluation failed. Any real
/// `ln(1e-5 + |D|)` is at least `ln(1e-5) > -12`.
pub const SCAN_SENTINEL: f64 = -1000.0;

/// Floor inside the resolution transform.
pub const RESOLUTION_FLOOR: f64 = 1e-5;

/// Significant digits kept in scan tables.
pub const SCAN_DIGITS: usize = 12;

/// How the per-site weights of all right eigenvectors are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregate {
    /// `sum_n |psi_j|^2`
    Squared,
    /// `sum_n |psi_j|`
    Modulus,
}

/// Aggregate skin-effect profile `W_j = sum_n |psi_R,j^(n)|^2`.
pub fn nhse_profile(spectrum: &Spectrum) -> ModeProfile {
    nhse_profile_with(spectrum, Aggregate::Squared)
}

pub fn nhse_profile_with(spectrum: &Spectrum, kind: Aggregate) -> ModeProfile {
    let n = spectrum.right_vectors.first().map(ModeProfile::len).unwrap_or(0);
    let bits = spectrum.eigenvalues.first().map(HPComplex::prec).unwrap_or(53);
    let mut w = vec![Float::new(bits); n];
    for v in &spectrum.right_vectors {
        for (acc, z) in w.iter_mut().zip(&v.amplitudes) {
            match kind {
                Aggregate::Squared => *acc += z.norm_sqr(),
                Aggregate::Modulus => *acc += z.abs(),
            }
        }
    }
    ModeProfile::aggregate(w)
}

/// The eigenpair with the largest weight `|psi_R,l|^2` on the impurity
/// site; near-ties go to the energy closest to `delta`.
pub fn find_impurity_mode(spectrum: &Spectrum, spec: &ChainSpec, cfg: &PrecisionConfig) -> Result<(usize, ModeProfile)> {
    select_impurity_mode(spectrum, spec.impurity_site(), spec.delta(), cfg)
}

/// Impurity mode of an NR-SSH spectrum, selected on the impurity's matrix site.
pub fn find_ssh_impurity_mode(spectrum: &Spectrum, spec: &SSHSpec, cfg: &PrecisionConfig) -> Result<(usize, ModeProfile)> {
    select_impurity_mode(spectrum, spec.impurity_index(), spec.delta(), cfg)
}

fn select_impurity_mode(spectrum: &Spectrum, l: usize, delta: &HPComplex, cfg: &PrecisionConfig) -> Result<(usize, ModeProfile)> {
    if delta.is_zero() {
        return Err(Error::pre("no impurity mode without an impurity (delta = 0)"));
    }
    if spectrum.is_empty() {
        return Err(Error::arg("empty spectrum"));
    }
    if l == 0 || l > spectrum.right_vectors[0].len() {
        return Err(Error::arg(format!("impurity site {l} outside the spectrum's vectors")));
    }
    let bits = cfg.bits();
    let weights: Vec<Float> = spectrum.right_vectors.iter().map(|v| v.amplitudes[l - 1].norm_sqr()).collect();
    let best = weights.iter().fold(Float::new(bits), |a, b| if *b > a { b.clone() } else { a });
    let cut = Float::with_val(bits, &best * (1 - Float::with_val(bits, cfg.tol())));
    let delta = delta.with_prec(bits);
    let index = (0..spectrum.len())
        .filter(|&i| weights[i] >= cut)
        .min_by(|&a, &b| {
            let da = spectrum.eigenvalues[a].dist(&delta);
            let db = spectrum.eigenvalues[b].dist(&delta);
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one candidate");
    Ok((index, spectrum.right_vectors[index].clone()))
}

/// `D_x = (|psi_l| - |psi_(l+x)|) / x` with 1-based `l`.
pub fn gradient_dx(profile: &ModeProfile, l: usize, x: i64) -> Result<Float> {
    let n = profile.len() as i64;
    if x == 0 {
        return Err(Error::arg("x must be nonzero"));
    }
    let target = l as i64 + x;
    if l == 0 || l as i64 > n || target < 1 || target > n {
        return Err(Error::arg(format!("sites l = {l} and l + x = {target} must lie in 1..={n}")));
    }
    let d = profile.magnitude(l) - profile.magnitude(target as usize);
    Ok(d / x)
}

/// `ln(1e-5 + |d|)`.
pub fn resolution_transform(d: f64) -> f64 {
    (RESOLUTION_FLOOR + d.abs()).ln()
}

/// `Delta = delta` when `tL tR > 0`, `i delta` when `tL tR < 0`.
pub fn delta_wrap(delta: &Float, t_left: &HPComplex, t_right: &HPComplex) -> Result<HPComplex> {
    let prod = t_left * t_right;
    if prod.is_zero() {
        return Err(Error::pre("tL tR must be nonzero"));
    }
    if !prod.im().is_zero() {
        return Err(Error::arg("tL tR must be real for the wrapped impurity strength"));
    }
    let bits = prod.prec().max(delta.prec());
    let d = Float::with_val(bits, delta);
    Ok(if prod.re().is_sign_positive() { HPComplex::from_parts(d, Float::new(bits)) } else { HPComplex::from_parts(Float::new(bits), d) })
}

/// Largest relative deviation `||psi_j| - median| / median` over `sites`
/// (1-based, inclusive).
pub fn flatness(profile: &ModeProfile, sites: RangeInclusive<usize>) -> Result<f64> {
    let (lo, hi) = (*sites.start(), *sites.end());
    if lo < 1 || hi > profile.len() || lo > hi {
        return Err(Error::arg(format!("site range {lo}..={hi} outside 1..={}", profile.len())));
    }
    let values: Vec<f64> = (lo..=hi).map(|j| profile.magnitude(j).to_f64()).collect();
    Ok(spread(&values))
}

fn spread(values: &[f64]) -> f64 {
    let mut mags = values.to_vec();
    mags.sort_by(f64::total_cmp);
    let k = mags.len();
    let median = if k % 2 == 1 { mags[k / 2] } else { 0.5 * (mags[k / 2 - 1] + mags[k / 2]) };
    if median == 0.0 {
        return f64::INFINITY;
    }
    values.iter().map(|v| (v - median).abs() / median).fold(0.0, f64::max)
}

/// Flatness of the tail behind the impurity, sites `l+2 ..= N-2`.
pub fn tail_flatness(profile: &ModeProfile, l: usize) -> Result<f64> {
    flatness(profile, l + 2..=profile.len().saturating_sub(2))
}

/// Flatness in front of the impurity, mirrored: sites `3 ..= l-2`.
pub fn head_flatness(profile: &ModeProfile, l: usize) -> Result<f64> {
    flatness(profile, 3..=l.saturating_sub(2))
}

/// Impurity strength at which a flat Bloch wave (`z = 1`) on one side of
/// the impurity matches the decaying root `z = (t1 - gamma)/(t1 + gamma)` on
/// the other: `delta = 2 gamma t2 / sqrt((t1 + t2)^2 - gamma^2)`.
pub fn ssh_icse_delta(t1: &HPComplex, t2: &HPComplex, gamma: &HPComplex) -> Result<HPComplex> {
    let e2 = &(t1 + t2).sqr() - &gamma.sqr();
    if e2.is_zero() {
        return Err(Error::pre("band edge energy vanishes"));
    }
    let two = Float::with_val(gamma.prec(), 2);
    Ok(&(gamma * t2).scale(&two) * &e2.sqrt().recip())
}

/// Flatness of an NR-SSH mode on both sides of the impurity cell `c`, over
/// cells `2 ..= c-2` (left) and `c+2 ..= M-1` (right). Each sublattice is
/// scored on its own and the worse one reported; `None` for an empty window.
pub fn ssh_side_flatness(profile: &ModeProfile, spec: &SSHSpec) -> Result<(Option<f64>, Option<f64>)> {
    let cells = spec.n_cells();
    if profile.len() != 2 * cells {
        return Err(Error::arg(format!("profile has {} sites, chain has {}", profile.len(), 2 * cells)));
    }
    let c = spec.impurity_cell();
    let side = |lo: usize, hi: usize| -> Option<f64> {
        if lo > hi {
            return None;
        }
        let sub = |offset: usize| -> Vec<f64> { (lo..=hi).map(|cell| profile.magnitude(2 * cell - 1 + offset).to_f64()).collect() };
        Some(spread(&sub(0)).max(spread(&sub(1))))
    };
    Ok((side(2, c.saturating_sub(2)), side(c + 2, cells.saturating_sub(1))))
}

/// Regions of the impurity-mode phase diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// Localized at the impurity, skin effect toward the left end.
    ImpurityLeft,
    /// Skin effect toward the left end dominates.
    SkinLeft,
    /// Localized at the impurity, skin effect toward the right end.
    ImpurityRight,
    /// Skin effect toward the right end dominates.
    SkinRight,
}

impl Region {
    /// 1-based label as in the usual sketch: (1) to (4).
    pub fn label(self) -> u8 {
        match self {
            Region::ImpurityLeft => 1,
            Region::SkinLeft => 2,
            Region::ImpurityRight => 3,
            Region::SkinRight => 4,
        }
    }
}

/// Region from the two gradients of the impurity mode and the ratio
/// `tR/tL`. A peak (`D_+1 > 0`, `D_-1 < 0`) is impurity-dominated; a
/// monotone profile shows the skin-effect direction directly.
pub fn classify_region(d_plus: f64, d_minus: f64, ratio: f64) -> Region {
    match (d_plus > 0.0, d_minus > 0.0) {
        (true, false) if ratio < 1.0 => Region::ImpurityLeft,
        (true, false) => Region::ImpurityRight,
        (true, true) => Region::SkinLeft,
        (false, false) => Region::SkinRight,
        (false, true) if ratio < 1.0 => Region::SkinLeft,
        (false, true) => Region::SkinRight,
    }
}

/// A `D_x` phase diagram over `tR/tL` (with `tL = 1`) and `Delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseScan {
    pub ratio_axis: Vec<f64>,
    pub delta_axis: Vec<f64>,
    /// `values[i][k]` at `ratio_axis[i]`, `delta_axis[k]`.
    pub values: Vec<Vec<f64>>,
    /// Cells that failed and hold [`SCAN_SENTINEL`].
    pub flags: Vec<Vec<bool>>,
    pub x: i64,
}

/// Evenly spaced points from `lo` to `hi` inclusive, symmetric ranges
/// giving exactly mirrored values.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            let s = (n - 1 - k) as f64 / (n - 1) as f64;
            let v = lo * s + hi * t;
            if lo == -hi && 2 * k + 1 == n {
                0.0
            } else if lo == -hi && 2 * k + 1 > n {
                -(lo * t + hi * s)
            } else {
                v
            }
        })
        .collect()
}

fn round_digits(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", digits - 1, v).parse().unwrap_or(v)
}

/// `ln(1e-5 + |D_x|)` of the impurity mode at one scan point.
pub fn scan_point(n_sites: usize, l: usize, ratio: f64, delta: f64, x: i64, cfg: &PrecisionConfig) -> Result<f64> {
    let bits = cfg.bits();
    let tl = HPComplex::one(bits);
    let tr = HPComplex::from_real(Float::with_val(bits, ratio));
    let wrapped = delta_wrap(&Float::with_val(bits, delta), &tl, &tr)?;
    let spec = ChainSpec::new(n_sites, tl, tr, wrapped, l, Boundary::Obc)?;
    let spectrum = full_spectrum(&build_hatano_nelson(&spec), cfg)?;
    let (_, mode) = find_impurity_mode(&spectrum, &spec, cfg)?;
    let d = gradient_dx(&mode, l, x)?.to_f64();
    Ok(resolution_transform(d))
}

/// Evaluate `ln(1e-5 + |D_x|)` of the impurity mode on a
/// `ratio x delta` grid, spreading rows over `threads` workers.
///
/// Failed cells (convergence, `delta = 0`, invalid hopping) hold
/// [`SCAN_SENTINEL`] and are flagged. Values are rounded to
/// [`SCAN_DIGITS`] significant digits.
#[allow(clippy::too_many_arguments)]
pub fn phase_scan(
    n_sites: usize,
    l: usize,
    ratio_range: (f64, f64),
    delta_range: (f64, f64),
    resolution: (usize, usize),
    x: i64,
    cfg: &PrecisionConfig,
    threads: usize,
) -> Result<PhaseScan> {
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(Error::arg("scan resolution must be at least 2 per axis"));
    }
    for v in [ratio_range.0, ratio_range.1, delta_range.0, delta_range.1] {
        if !v.is_finite() {
            return Err(Error::arg("scan ranges must be finite"));
        }
    }
    if x == 0 {
        return Err(Error::arg("x must be nonzero"));
    }
    if l < 1 || l > n_sites || l as i64 + x < 1 || l as i64 + x > n_sites as i64 {
        return Err(Error::arg(format!("impurity site {l} with x = {x} does not fit a chain of {n_sites}")));
    }
    let ratio_axis = linspace(ratio_range.0, ratio_range.1, resolution.0);
    let delta_axis = linspace(delta_range.0, delta_range.1, resolution.1);
    let cells: Vec<(usize, usize)> = (0..ratio_axis.len()).flat_map(|i| (0..delta_axis.len()).map(move |k| (i, k))).collect();
    let workers = threads.max(1).min(cells.len());
    let mut results: Vec<Option<f64>> = vec![None; cells.len()];
    let chunk = cells.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for (part, out) in cells.chunks(chunk).zip(results.chunks_mut(chunk)) {
            let (ra, da) = (&ratio_axis, &delta_axis);
            scope.spawn(move || {
                for (&(i, k), slot) in part.iter().zip(out.iter_mut()) {
                    *slot = scan_point(n_sites, l, ra[i], da[k], x, cfg).ok();
                }
            });
        }
    });
    let cols = delta_axis.len();
    let mut values = vec![vec![SCAN_SENTINEL; cols]; ratio_axis.len()];
    let mut flags = vec![vec![true; cols]; ratio_axis.len()];
    for (&(i, k), r) in cells.iter().zip(results) {
        if let Some(v) = r.filter(|v| v.is_finite()) {
            values[i][k] = round_digits(v, SCAN_DIGITS);
            flags[i][k] = false;
        }
    }
    Ok(PhaseScan { ratio_axis, delta_axis, values, flags, x })
}

impl PhaseScan {
    /// Local minima of `values[i]` along the delta axis, ignoring flagged
    /// cells, as delta-axis indices.
    pub fn minima(&self, i: usize) -> Vec<usize> {
        let row = &self.values[i];
        let ok = |k: usize| !self.flags[i][k];
        (0..row.len())
            .filter(|&k| {
                ok(k) && (k == 0 || !ok(k - 1) || row[k] < row[k - 1]) && (k + 1 == row.len() || !ok(k + 1) || row[k] < row[k + 1])
            })
            .filter(|&k| k > 0 && k + 1 < row.len())
            .collect()
    }
}

fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (cx * cx + cy * cy).sqrt()
}

fn winding_once(curve: &dyn Fn(f64) -> (f64, f64), base: (f64, f64), n: usize) -> Result<i64> {
    let tau = std::f64::consts::TAU;
    let pts: Vec<(f64, f64)> = (0..=n).map(|k| curve(tau * k as f64 / n as f64)).collect();
    let size = pts.iter().map(|p| p.0.hypot(p.1)).fold(base.0.hypot(base.1), f64::max);
    let near = 1e-12 * (1.0 + size);
    let mut total = 0.0;
    for w in pts.windows(2) {
        if segment_distance(w[0], w[1], base) <= near {
            return Err(Error::DegenerateCurve(format!("spectral curve passes through the base point ({}, {})", base.0, base.1)));
        }
        let a = (w[0].1 - base.1).atan2(w[0].0 - base.0);
        let b = (w[1].1 - base.1).atan2(w[1].0 - base.0);
        let mut step = b - a;
        while step > std::f64::consts::PI {
            step -= tau;
        }
        while step < -std::f64::consts::PI {
            step += tau;
        }
        total += step;
    }
    Ok((total / tau).round() as i64)
}

/// Winding of a closed curve `t -> E(t)`, `t` in `[0, 2 pi)`, around
/// `base`. Counter-clockwise is positive; the sample count doubles from
/// `n_samples` until two estimates agree.
pub fn winding_of_curve(curve: &dyn Fn(f64) -> (f64, f64), base: (f64, f64), n_samples: usize) -> Result<i64> {
    let mut n = n_samples.max(8);
    let mut last = winding_once(curve, base, n)?;
    for _ in 0..20 {
        n *= 2;
        let next = winding_once(curve, base, n)?;
        if next == last {
            return Ok(next);
        }
        last = next;
    }
    Err(Error::Convergence { iterations: 20, worst_residual: f64::NAN, index: None })
}

/// Winding of the ring band `E(qd)` of `spec` around `base_point`, with
/// `qd` increasing. For real `tR > tL` the ellipse runs clockwise and the
/// winding about the origin is `-1`.
pub fn winding_number(spec: &ChainSpec, base_point: &HPComplex, n_samples: usize) -> Result<i64> {
    let s = spec.with_prec(53);
    let curve = |q: f64| {
        let e = dispersion_pbc(&HPComplex::new(53, q, 0.0), &s).to_c64();
        (e.re, e.im)
    };
    let b = base_point.to_c64();
    winding_of_curve(&curve, (b.re, b.im), n_samples)
}

/// Comparison of a strongly impure chain with its two pristine fragments.
#[derive(Clone, Debug)]
pub struct FragmentationReport {
    pub full: ModeProfile,
    /// Aggregate of the pristine chain on sites `1 ..= l-1`, if any.
    pub left: Option<ModeProfile>,
    /// Aggregate of the pristine chain on sites `l+1 ..= N`, if any.
    pub right: Option<ModeProfile>,
    pub left_deviation: Vec<f64>,
    pub right_deviation: Vec<f64>,
    /// Aggregate weight on the impurity site.
    pub impurity_weight: f64,
}

impl FragmentationReport {
    pub fn max_deviation(&self) -> f64 {
        self.left_deviation.iter().chain(&self.right_deviation).cloned().fold(0.0, f64::max)
    }
}

/// Aggregates of `spec` against its `l-1` and `N-l` site pristine fragments.
pub fn fragmentation_check(spec: &ChainSpec, cfg: &PrecisionConfig) -> Result<FragmentationReport> {
    let s = spec.with_prec(cfg.bits()).with_boundary(Boundary::Obc);
    let full = nhse_profile(&full_spectrum(&build_hatano_nelson(&s), cfg)?);
    let (n, l) = (s.n_sites(), s.impurity_site());
    let fragment = |len: usize| -> Result<Option<ModeProfile>> {
        match len {
            0 => Ok(None),
            // a single site carries one unit-weight mode
            1 => Ok(Some(ModeProfile::aggregate(vec![Float::with_val(cfg.bits(), 1)]))),
            _ => Ok(Some(nhse_profile(&full_spectrum(&build_hatano_nelson(&s.pristine(len)?), cfg)?))),
        }
    };
    let deviation = |sub: &Option<ModeProfile>, offset: usize| -> Vec<f64> {
        sub.iter()
            .flat_map(|p| {
                let full = &full;
                p.amplitudes.iter().enumerate().map(move |(j, w)| {
                    let v = w.re().to_f64();
                    (full.amplitudes[offset + j].re().to_f64() - v).abs() / v.abs()
                })
            })
            .collect()
    };
    let left = fragment(l - 1)?;
    let right = fragment(n - l)?;
    let left_deviation = deviation(&left, 0);
    let right_deviation = deviation(&right, l);
    let impurity_weight = full.amplitudes[l - 1].re().to_f64();
    Ok(FragmentationReport { full, left, right, left_deviation, right_deviation, impurity_weight })
}
