//! Small dense solvers at working precision: a zero-skipping LU of
//! `M - E I` for inverse iteration and a complete-pivoting null space.

use rug::{Assign, Complex, Float};

use crate::error::{Error, Result};
use crate::lattice::DenseMatrix;

fn shifted_rows(m: &DenseMatrix, e: &Complex, transpose: bool) -> Vec<Vec<Complex>> {
    let n = m.dim();
    let bits = m.prec();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = if transpose { m.get(j, i) } else { m.get(i, j) };
                    if i == j {
                        Complex::with_val(bits, v.as_complex() - e)
                    } else {
                        v.as_complex().clone()
                    }
                })
                .collect()
        })
        .collect()
}

/// LU factors of `M - E I` (or its transpose) with partial pivoting.
///
/// Each row tracks the range of columns that can be nonzero, so a banded
/// matrix factors in time proportional to its bandwidth.
/// Step index, swapped row, eliminated rows with their multipliers.
type EliminationStep = (usize, usize, Vec<(usize, Complex)>);

pub(crate) struct ShiftedLu {
    n: usize,
    bits: u32,
    u: Vec<Vec<Complex>>,
    last: Vec<usize>,
    ops: Vec<EliminationStep>,
}

impl ShiftedLu {
    pub fn factor(m: &DenseMatrix, e: &Complex, transpose: bool, floor: &Float) -> ShiftedLu {
        let n = m.dim();
        let bits = m.prec();
        let mut a = shifted_rows(m, e, transpose);
        let mut first: Vec<usize> = a.iter().map(|r| r.iter().position(|z| !z.is_zero()).unwrap_or(n)).collect();
        let mut last: Vec<usize> = a.iter().map(|r| r.iter().rposition(|z| !z.is_zero()).unwrap_or(0)).collect();
        let mut ops = Vec::with_capacity(n);
        let mut tmp = Complex::new(bits);
        for k in 0..n {
            let mut piv = k;
            let mut best = Float::new(bits);
            for i in k..n {
                if first[i] <= k {
                    let mag = Float::with_val(bits, a[i][k].norm_ref());
                    if mag > best {
                        best = mag;
                        piv = i;
                    }
                }
            }
            a.swap(k, piv);
            first.swap(k, piv);
            last.swap(k, piv);
            if best.is_zero() || Float::with_val(bits, best.clone().sqrt()) < *floor {
                // exact or near singularity: perturb the pivot, as inverse
                // iteration only needs the direction of the solution
                a[k][k] = Complex::with_val(bits, (floor, 0));
                first[k] = first[k].min(k);
                last[k] = last[k].max(k);
            }
            let mut elim = Vec::new();
            for i in k + 1..n {
                if first[i] > k || a[i][k].is_zero() {
                    continue;
                }
                let f = Complex::with_val(bits, &a[i][k] / &a[k][k]);
                let (top, bottom) = a.split_at_mut(i);
                let prow = &top[k];
                let row = &mut bottom[0];
                for j in k + 1..=last[k] {
                    if prow[j].is_zero() {
                        continue;
                    }
                    tmp.assign(&f * &prow[j]);
                    row[j] -= &tmp;
                }
                row[k].assign(0);
                last[i] = last[i].max(last[k]);
                first[i] = k + 1;
                elim.push((i, f));
            }
            ops.push((k, piv, elim));
        }
        ShiftedLu { n, bits, u: a, last, ops }
    }

    pub fn solve(&self, b: &[Complex]) -> Vec<Complex> {
        let mut x: Vec<Complex> = b.to_vec();
        let mut tmp = Complex::new(self.bits);
        for (k, piv, elim) in &self.ops {
            x.swap(*k, *piv);
            for (i, f) in elim {
                tmp.assign(f * &x[*k]);
                x[*i] -= &tmp;
            }
        }
        for k in (0..self.n).rev() {
            let mut acc = x[k].clone();
            for j in k + 1..=self.last[k].max(k) {
                if j >= self.n || self.u[k][j].is_zero() {
                    continue;
                }
                tmp.assign(&self.u[k][j] * &x[j]);
                acc -= &tmp;
            }
            x[k] = Complex::with_val(self.bits, &acc / &self.u[k][k]);
        }
        x
    }
}

/// Basis of the `count`-dimensional null space of `M - E I` (or its
/// transpose) by Gaussian elimination with complete pivoting.
pub(crate) fn null_space(m: &DenseMatrix, e: &Complex, transpose: bool, count: usize) -> Result<Vec<Vec<Complex>>> {
    let n = m.dim();
    if count == 0 || count > n {
        return Err(Error::arg("null space dimension out of range"));
    }
    let bits = m.prec();
    let mut a = shifted_rows(m, e, transpose);
    let mut cols: Vec<usize> = (0..n).collect();
    let rank = n - count;
    let mut tmp = Complex::new(bits);
    for k in 0..rank {
        let (mut pi, mut pj) = (k, k);
        let mut best = Float::new(bits);
        for i in k..n {
            for j in k..n {
                let mag = Float::with_val(bits, a[i][cols[j]].norm_ref());
                if mag > best {
                    best = mag;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best.is_zero() {
            return Err(Error::DegenerateState("null space larger than the cluster".into()));
        }
        a.swap(k, pi);
        cols.swap(k, pj);
        let ck = cols[k];
        for i in k + 1..n {
            if a[i][ck].is_zero() {
                continue;
            }
            let f = Complex::with_val(bits, &a[i][ck] / &a[k][ck]);
            let (top, bottom) = a.split_at_mut(i);
            for &c in &cols[k..] {
                tmp.assign(&f * &top[k][c]);
                bottom[0][c] -= &tmp;
            }
        }
    }
    let mut basis = Vec::with_capacity(count);
    for free in rank..n {
        let mut x = vec![Complex::new(bits); n];
        x[cols[free]] = Complex::with_val(bits, 1);
        for k in (0..rank).rev() {
            let ck = cols[k];
            let mut acc = Complex::new(bits);
            for &c in &cols[k + 1..] {
                tmp.assign(&a[k][c] * &x[c]);
                acc += &tmp;
            }
            x[ck] = Complex::with_val(bits, -acc / &a[k][ck]);
        }
        basis.push(x);
    }
    Ok(basis)
}

/// Solve `G X = B` for small square `G` by partial pivoting.
pub(crate) fn solve_small(g: &[Vec<Complex>], b: &[Vec<Complex>]) -> Result<Vec<Vec<Complex>>> {
    let n = g.len();
    let bits = g.first().and_then(|r| r.first()).map(|z| z.prec().0).unwrap_or(53);
    let w = b.first().map(|r| r.len()).unwrap_or(0);
    let mut a: Vec<Vec<Complex>> = g.iter().zip(b).map(|(gr, br)| gr.iter().chain(br).cloned().collect()).collect();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| {
                let x = Float::with_val(bits, a[i][k].norm_ref());
                let y = Float::with_val(bits, a[j][k].norm_ref());
                x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        if a[piv][k].is_zero() {
            return Err(Error::DegenerateState("singular Gram matrix".into()));
        }
        a.swap(k, piv);
        for i in 0..n {
            if i == k || a[i][k].is_zero() {
                continue;
            }
            let f = Complex::with_val(bits, &a[i][k] / &a[k][k]);
            let (pk, ri) = if i < k {
                let (top, bottom) = a.split_at_mut(k);
                (&bottom[0], &mut top[i])
            } else {
                let (top, bottom) = a.split_at_mut(i);
                (&top[k], &mut bottom[0])
            };
            for j in k..n + w {
                let t = Complex::with_val(bits, &f * &pk[j]);
                ri[j] -= t;
            }
        }
    }
    Ok((0..n).map(|i| (0..w).map(|j| Complex::with_val(bits, &a[i][n + j] / &a[i][i])).collect()).collect())
}
