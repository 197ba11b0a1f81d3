//! Model Hamiltonians: the Hatano-Nelson chain with one onsite impurity and
//! the non-reciprocal SSH chain, plus their Bloch dispersions.
//!
//! Sites are 1-based in specs (`l = 1..=N`), matrices are indexed 0-based.

use rug::Float;

use crate::error::{Error, Result};
use crate::numeric::HPComplex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Obc,
    Pbc,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Obc => "obc",
            Boundary::Pbc => "pbc",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obc" => Ok(Boundary::Obc),
            "pbc" => Ok(Boundary::Pbc),
            other => Err(Error::arg(format!("unknown boundary {other:?}, expected obc or pbc"))),
        }
    }
}

/// A finite Hatano-Nelson chain with an impurity of strength `delta` at
/// site `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    n_sites: usize,
    t_left: HPComplex,
    t_right: HPComplex,
    delta: HPComplex,
    impurity_site: usize,
    boundary: Boundary,
    // principal sqrt(tL tR), fixed once so every formula shares one branch
    sqrt_lr: HPComplex,
}

impl ChainSpec {
    pub fn new(
        n_sites: usize,
        t_left: HPComplex,
        t_right: HPComplex,
        delta: HPComplex,
        impurity_site: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::arg(format!("chain needs at least 2 sites, got {n_sites}")));
        }
        if impurity_site < 1 || impurity_site > n_sites {
            return Err(Error::arg(format!("impurity site {impurity_site} outside 1..={n_sites}")));
        }
        if t_left.is_zero() || t_right.is_zero() {
            return Err(Error::arg("hoppings tL and tR must be nonzero"));
        }
        for (name, v) in [("tL", &t_left), ("tR", &t_right), ("delta", &delta)] {
            if !v.is_finite() {
                return Err(Error::arg(format!("{name} must be finite")));
            }
        }
        let bits = t_left.prec().max(t_right.prec()).max(delta.prec());
        let t_left = t_left.with_prec(bits);
        let t_right = t_right.with_prec(bits);
        let delta = delta.with_prec(bits);
        let sqrt_lr = (&t_left * &t_right).sqrt();
        Ok(ChainSpec { n_sites, t_left, t_right, delta, impurity_site, boundary, sqrt_lr })
    }

    /// Real-valued convenience constructor at `bits` precision.
    pub fn real(
        bits: u32,
        n_sites: usize,
        t_left: f64,
        t_right: f64,
        delta: f64,
        impurity_site: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        ChainSpec::new(
            n_sites,
            HPComplex::new(bits, t_left, 0.0),
            HPComplex::new(bits, t_right, 0.0),
            HPComplex::new(bits, delta, 0.0),
            impurity_site,
            boundary,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn t_left(&self) -> &HPComplex {
        &self.t_left
    }

    pub fn t_right(&self) -> &HPComplex {
        &self.t_right
    }

    pub fn delta(&self) -> &HPComplex {
        &self.delta
    }

    pub fn impurity_site(&self) -> usize {
        self.impurity_site
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn prec(&self) -> u32 {
        self.t_left.prec()
    }

    /// The cached principal `sqrt(tL tR)`.
    pub fn sqrt_lr(&self) -> &HPComplex {
        &self.sqrt_lr
    }

    /// `sqrt(y) = sqrt(tL tR) / tL`, the branch of `sqrt(tR/tL)` consistent
    /// with [`ChainSpec::sqrt_lr`].
    pub fn sqrt_y(&self) -> HPComplex {
        &self.sqrt_lr / &self.t_left
    }

    /// `y = tR / tL`.
    pub fn y(&self) -> HPComplex {
        &self.t_right / &self.t_left
    }

    /// The same chain re-rounded to `bits`.
    pub fn with_prec(&self, bits: u32) -> ChainSpec {
        ChainSpec {
            n_sites: self.n_sites,
            t_left: self.t_left.with_prec(bits),
            t_right: self.t_right.with_prec(bits),
            delta: self.delta.with_prec(bits),
            impurity_site: self.impurity_site,
            boundary: self.boundary,
            sqrt_lr: (&self.t_left.with_prec(bits) * &self.t_right.with_prec(bits)).sqrt(),
        }
    }

    pub fn with_delta(&self, delta: HPComplex) -> Result<ChainSpec> {
        ChainSpec::new(self.n_sites, self.t_left.clone(), self.t_right.clone(), delta, self.impurity_site, self.boundary)
    }

    pub fn with_boundary(&self, boundary: Boundary) -> ChainSpec {
        ChainSpec { boundary, ..self.clone() }
    }

    /// The chain with `tL` and `tR` exchanged.
    pub fn swapped(&self) -> ChainSpec {
        ChainSpec::new(self.n_sites, self.t_right.clone(), self.t_left.clone(), self.delta.clone(), self.impurity_site, self.boundary)
            .expect("swapping hoppings keeps a valid spec")
    }

    /// A pristine (`delta = 0`) open chain of `n` sites with the same hoppings.
    pub fn pristine(&self, n: usize) -> Result<ChainSpec> {
        let zero = HPComplex::zero(self.prec());
        ChainSpec::new(n, self.t_left.clone(), self.t_right.clone(), zero, 1, Boundary::Obc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sublattice {
    A,
    B,
}

impl std::str::FromStr for Sublattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Sublattice::A),
            "B" | "b" => Ok(Sublattice::B),
            other => Err(Error::arg(format!("unknown sublattice {other:?}, expected A or B"))),
        }
    }
}

impl Sublattice {
    pub fn as_str(self) -> &'static str {
        match self {
            Sublattice::A => "A",
            Sublattice::B => "B",
        }
    }
}

/// Open non-reciprocal SSH chain with one impurity.
#[derive(Clone, Debug, PartialEq)]
pub struct SSHSpec {
    n_cells: usize,
    t1: HPComplex,
    t2: HPComplex,
    gamma: HPComplex,
    delta: HPComplex,
    impurity_cell: usize,
    impurity_sublattice: Sublattice,
}

impl SSHSpec {
    /// A single cell is accepted so the isolated dimer can be built.
    pub fn new(
        n_cells: usize,
        t1: HPComplex,
        t2: HPComplex,
        gamma: HPComplex,
        delta: HPComplex,
        impurity_cell: usize,
        impurity_sublattice: Sublattice,
    ) -> Result<Self> {
        if n_cells < 1 {
            return Err(Error::arg("SSH chain needs at least one cell"));
        }
        if t2.is_zero() {
            return Err(Error::arg("intercell hopping t2 must be nonzero"));
        }
        if impurity_cell < 1 || impurity_cell > n_cells {
            return Err(Error::arg(format!("impurity cell {impurity_cell} outside 1..={n_cells}")));
        }
        for (name, v) in [("t1", &t1), ("t2", &t2), ("gamma", &gamma), ("delta", &delta)] {
            if !v.is_finite() {
                return Err(Error::arg(format!("{name} must be finite")));
            }
        }
        let bits = [&t1, &t2, &gamma, &delta].iter().map(|v| v.prec()).max().unwrap_or(53);
        Ok(SSHSpec {
            n_cells,
            t1: t1.with_prec(bits),
            t2: t2.with_prec(bits),
            gamma: gamma.with_prec(bits),
            delta: delta.with_prec(bits),
            impurity_cell,
            impurity_sublattice,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn t1(&self) -> &HPComplex {
        &self.t1
    }

    pub fn t2(&self) -> &HPComplex {
        &self.t2
    }

    pub fn gamma(&self) -> &HPComplex {
        &self.gamma
    }

    pub fn delta(&self) -> &HPComplex {
        &self.delta
    }

    pub fn impurity_cell(&self) -> usize {
        self.impurity_cell
    }

    pub fn impurity_sublattice(&self) -> Sublattice {
        self.impurity_sublattice
    }

    pub fn prec(&self) -> u32 {
        self.t1.prec()
    }

    /// 1-based matrix site of the impurity.
    pub fn impurity_index(&self) -> usize {
        match self.impurity_sublattice {
            Sublattice::A => 2 * self.impurity_cell - 1,
            Sublattice::B => 2 * self.impurity_cell,
        }
    }

    pub fn with_delta(&self, delta: HPComplex) -> Result<SSHSpec> {
        SSHSpec::new(
            self.n_cells,
            self.t1.clone(),
            self.t2.clone(),
            self.gamma.clone(),
            delta,
            self.impurity_cell,
            self.impurity_sublattice,
        )
    }

    pub fn with_prec(&self, bits: u32) -> SSHSpec {
        SSHSpec {
            t1: self.t1.with_prec(bits),
            t2: self.t2.with_prec(bits),
            gamma: self.gamma.with_prec(bits),
            delta: self.delta.with_prec(bits),
            ..self.clone()
        }
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    entries: Vec<HPComplex>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize, bits: u32) -> Self {
        DenseMatrix { dim, entries: vec![HPComplex::zero(bits); dim * dim] }
    }

    /// Build from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: Vec<Vec<HPComplex>>) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::arg(format!("row {i} has {} entries, expected {dim}", row.len())));
            }
            entries.extend(row);
        }
        Ok(DenseMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prec(&self) -> u32 {
        self.entries.first().map(|z| z.prec()).unwrap_or(53)
    }

    pub fn get(&self, i: usize, j: usize) -> &HPComplex {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: HPComplex) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: &HPComplex) {
        self.entries[i * self.dim + j] += v;
    }

    pub fn with_prec(&self, bits: u32) -> DenseMatrix {
        DenseMatrix { dim: self.dim, entries: self.entries.iter().map(|z| z.with_prec(bits)).collect() }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let n = self.dim;
        let mut t = self.clone();
        for i in 0..n {
            for j in 0..n {
                t.entries[j * n + i] = self.entries[i * n + j].clone();
            }
        }
        t
    }

    pub fn rows(&self) -> impl Iterator<Item = &[HPComplex]> {
        self.entries.chunks(self.dim.max(1))
    }

    pub fn mul_vec(&self, v: &[HPComplex]) -> Result<Vec<HPComplex>> {
        if v.len() != self.dim {
            return Err(Error::arg("vector length does not match matrix dimension"));
        }
        let bits = self.prec();
        Ok(self
            .rows()
            .map(|row| {
                let mut acc = HPComplex::zero(bits);
                for (a, b) in row.iter().zip(v) {
                    if !a.is_zero() {
                        acc += a * b;
                    }
                }
                acc
            })
            .collect())
    }

    pub fn trace(&self) -> HPComplex {
        let mut acc = HPComplex::zero(self.prec());
        for i in 0..self.dim {
            acc += self.get(i, i);
        }
        acc
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> f64 {
        self.rows().map(|row| row.iter().map(|z| z.abs_f64()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_c64(&self) -> Vec<Vec<num_complex::Complex64>> {
        self.rows().map(|row| row.iter().map(HPComplex::to_c64).collect()).collect()
    }
}

/// Hatano-Nelson matrix: `tL` on the upper, `tR` on the lower off-diagonal
/// and `delta` at `(l, l)`. PBC adds `M[N][1] = tL`, `M[1][N] = tR`.
pub fn build_hatano_nelson(spec: &ChainSpec) -> DenseMatrix {
    let n = spec.n_sites();
    let mut m = DenseMatrix::zeros(n, spec.prec());
    for j in 0..n - 1 {
        m.set(j, j + 1, spec.t_left().clone());
        m.set(j + 1, j, spec.t_right().clone());
    }
    let l = spec.impurity_site() - 1;
    m.set(l, l, spec.delta().clone());
    if spec.boundary() == Boundary::Pbc {
        // For N = 2 the closing bond doubles the existing one.
        m.add_to(n - 1, 0, spec.t_left());
        m.add_to(0, n - 1, spec.t_right());
    }
    m
}

/// Open NR-SSH matrix on sites `a_1, b_1, a_2, b_2, ...`.
pub fn build_nr_ssh(spec: &SSHSpec) -> DenseMatrix {
    let dim = 2 * spec.n_cells();
    let mut m = DenseMatrix::zeros(dim, spec.prec());
    let plus = spec.t1() + spec.gamma();
    let minus = spec.t1() - spec.gamma();
    for cell in 0..spec.n_cells() {
        let a = 2 * cell;
        let b = a + 1;
        m.set(a, b, plus.clone());
        m.set(b, a, minus.clone());
        if cell + 1 < spec.n_cells() {
            m.set(b + 1, b, spec.t2().clone());
            m.set(b, b + 1, spec.t2().clone());
        }
    }
    let site = spec.impurity_index() - 1;
    m.set(site, site, spec.delta().clone());
    m
}

/// Open-chain band `E = 2 sqrt(tL tR) cos(kd)`.
pub fn dispersion_obc(kd: &HPComplex, spec: &ChainSpec) -> HPComplex {
    let bits = kd.prec().max(spec.prec());
    let s = spec.sqrt_lr().with_prec(bits);
    (&s * &kd.with_prec(bits).cos()).scale(&Float::with_val(bits, 2))
}

/// Ring band `E = (tL + tR) cos(qd) + i (tL - tR) sin(qd)`.
pub fn dispersion_pbc(qd: &HPComplex, spec: &ChainSpec) -> HPComplex {
    let bits = qd.prec().max(spec.prec());
    let q = qd.with_prec(bits);
    let tl = spec.t_left().with_prec(bits);
    let tr = spec.t_right().with_prec(bits);
    let i = HPComplex::i(bits);
    &(&(&tl + &tr) * &q.cos()) + &(&i * &(&(&tl - &tr) * &q.sin()))
}

/// Off-diagonal Bloch elements `(h_ab, h_ba)` of the NR-SSH chain at `kappa`.
pub fn ssh_bloch_offdiag(kappa: &Float, spec: &SSHSpec) -> (HPComplex, HPComplex) {
    let bits = spec.prec();
    let k = HPComplex::from_real(Float::with_val(bits, kappa));
    let phase = (&HPComplex::i(bits) * &k).exp();
    let phase_c = phase.recip();
    let h_ab = &(spec.t1() - spec.gamma()) + &(spec.t2() * &phase);
    let h_ba = &(spec.t1() + spec.gamma()) + &(spec.t2() * &phase_c);
    (h_ab, h_ba)
}

/// Both NR-SSH Bloch bands `±sqrt((t1² - γ²) + t2² + 2 t1 t2 cos κ + 2i t2 γ sin κ)`.
pub fn ssh_bloch_spectrum(kappa: &Float, spec: &SSHSpec) -> (HPComplex, HPComplex) {
    let bits = spec.prec();
    let k = HPComplex::from_real(Float::with_val(bits, kappa));
    let two = Float::with_val(bits, 2);
    let t1 = spec.t1();
    let t2 = spec.t2();
    let g = spec.gamma();
    let mut arg = &t1.sqr() - &g.sqr();
    arg += t2.sqr();
    arg += (&(t1 * t2) * &k.cos()).scale(&two);
    arg += (&(&HPComplex::i(bits) * &(t2 * g)) * &k.sin()).scale(&two);
    let root = arg.sqrt();
    let neg = -&root;
    (root, neg)
}
