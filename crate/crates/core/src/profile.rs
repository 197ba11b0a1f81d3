use rug::Float;

use crate::error::{Error, Result};
use crate::numeric::HPComplex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileLabel {
    SingleMode,
    Aggregate,
}

/// Site-resolved amplitudes of one mode, or an aggregate over modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeProfile {
    pub amplitudes: Vec<HPComplex>,
    pub label: ProfileLabel,
    pub energy: Option<HPComplex>,
}

impl ModeProfile {
    /// A single mode, L2-normalized with its largest entry made real positive.
    pub fn single(amplitudes: Vec<HPComplex>, energy: Option<HPComplex>) -> Result<Self> {
        Ok(ModeProfile { amplitudes: normalize(amplitudes)?, label: ProfileLabel::SingleMode, energy })
    }

    /// Aggregate values, stored as real amplitudes.
    pub fn aggregate(values: Vec<Float>) -> Self {
        ModeProfile { amplitudes: values.into_iter().map(HPComplex::from_real).collect(), label: ProfileLabel::Aggregate, energy: None }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// `|psi_j|` at 1-based site `j`.
    pub fn magnitude(&self, j: usize) -> Float {
        self.amplitudes[j - 1].abs()
    }

    pub fn magnitudes(&self) -> Vec<Float> {
        self.amplitudes.iter().map(HPComplex::abs).collect()
    }

    pub fn magnitudes_f64(&self) -> Vec<f64> {
        self.amplitudes.iter().map(HPComplex::abs_f64).collect()
    }

    /// Largest entrywise distance to `other` after aligning `other`'s global
    /// phase to this profile.
    pub fn aligned_distance(&self, other: &ModeProfile) -> Result<Float> {
        if self.len() != other.len() {
            return Err(Error::arg("profiles have different lengths"));
        }
        let bits = self.amplitudes.first().map(|z| z.prec()).unwrap_or(53);
        let mut overlap = HPComplex::zero(bits);
        for (a, b) in self.amplitudes.iter().zip(&other.amplitudes) {
            overlap += &a.conj() * b;
        }
        let phase = if overlap.is_zero() {
            HPComplex::one(bits)
        } else {
            let mag = overlap.abs();
            overlap.conj().scale(&Float::with_val(bits, 1 / mag))
        };
        let mut worst = Float::new(bits);
        for (a, b) in self.amplitudes.iter().zip(&other.amplitudes) {
            let d = (a - &(b * &phase)).abs();
            if d > worst {
                worst = d;
            }
        }
        Ok(worst)
    }
}

/// L2-normalize and rotate so the first entry of (near-)maximal modulus is
/// real positive.
pub fn normalize(mut v: Vec<HPComplex>) -> Result<Vec<HPComplex>> {
    let bits = v.first().map(|z| z.prec()).unwrap_or(53);
    let mut norm2 = Float::new(bits);
    for z in &v {
        norm2 += z.norm_sqr();
    }
    if !(norm2.is_finite() && norm2 > 0) {
        return Err(Error::DegenerateState("vector has zero or non-finite norm".into()));
    }
    let norm = norm2.sqrt();
    let mags: Vec<Float> = v.iter().map(HPComplex::abs).collect();
    let max = mags.iter().fold(Float::new(bits), |m, x| if *x > m { x.clone() } else { m });
    // ties within half the working precision go to the lowest index
    let cut = Float::with_val(bits, &max * (1 - Float::with_val(bits, Float::i_exp(1, -(bits as i32) / 2))));
    let k = mags.iter().position(|x| *x >= cut).unwrap_or(0);
    let pivot = &v[k];
    let rot = &pivot.conj().scale(&Float::with_val(bits, 1 / &mags[k]));
    let inv = Float::with_val(bits, 1 / norm);
    for z in v.iter_mut() {
        *z = (&*z * rot).scale(&inv);
    }
    // exact zero imaginary part on the pivot
    let re = v[k].re().clone();
    v[k] = HPComplex::from_real(re);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_fixes_phase_and_norm() {
        let b = 128;
        let v = vec![HPComplex::new(b, 0.0, 1.0), HPComplex::new(b, 0.0, -2.0), HPComplex::new(b, 0.0, 1.0)];
        let p = ModeProfile::single(v, None).unwrap();
        let m = p.magnitudes_f64();
        assert!((m[1] - 2.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!(p.amplitudes[1].im().is_zero());
        assert!(p.amplitudes[1].re().to_f64() > 0.0);
        assert!((p.amplitudes[0].re().to_f64() + 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ties_pick_the_first_index() {
        let b = 128;
        let v = vec![HPComplex::new(b, -1.0, 0.0), HPComplex::new(b, 1.0, 0.0)];
        let p = normalize(v).unwrap();
        assert!(p[0].re().to_f64() > 0.0);
        assert!(p[1].re().to_f64() < 0.0);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let v = vec![HPComplex::zero(64); 3];
        assert!(matches!(normalize(v), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn aligned_distance_ignores_global_phase() {
        let b = 128;
        let v = vec![HPComplex::new(b, 1.0, 0.0), HPComplex::new(b, 0.5, 0.25)];
        let p = ModeProfile { amplitudes: v.clone(), label: ProfileLabel::SingleMode, energy: None };
        let ph = HPComplex::new(b, 0.6, 0.8);
        let ph = ph.scale(&Float::with_val(b, ph.abs().recip_ref()));
        let q = ModeProfile { amplitudes: v.iter().map(|z| z * &ph).collect(), ..p.clone() };
        assert!(p.aligned_distance(&q).unwrap().to_f64() < 1e-35);
    }
}
