//! Concrete submodular oracles: DPP log-determinant, Gaussian entropy,
//! weighted graph cut, weighted coverage, and modular weights.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::oracle::{ElementId, SolutionSet, SubmodularFn};

/// `(1 + ln 2π) / 2`, the per-element constant of the Gaussian entropy.
pub const ENTROPY_CONSTANT: f64 = 1.418_938_533_204_672_7;

const SYMMETRY_TOLERANCE: f64 = 1e-9;
const PSD_TOLERANCE: f64 = 1e-9;
const JITTER_SCALE: f64 = 1e-9;
const MAX_JITTER_ESCALATIONS: usize = 40;

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, data)
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                pos / n,
                pos % n
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (data[i * n + j] - data[j * n + i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidMatrix(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SymmetricMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SymmetricMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.n.max(1))
            .take(self.n)
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        DMatrix::from_row_slice(self.n, self.n, &self.data)
            .symmetric_eigenvalues()
            .min()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymmetricMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    fn with_ridge(&self, ridge: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += ridge;
        }
        out
    }

    fn check_psd(&self) -> Result<f64> {
        let lmin = self.min_eigenvalue();
        let scale = (0..self.n).map(|i| self.get(i, i).abs()).fold(1.0, f64::max);
        if lmin < -PSD_TOLERANCE * scale {
            return Err(Error::InvalidMatrix(format!(
                "not positive semidefinite (min eigenvalue {lmin:e})"
            )));
        }
        Ok(lmin)
    }
}

/// DPP kernel `L`: symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    matrix: SymmetricMatrix,
    min_eigenvalue: f64,
}

impl KernelMatrix {
    pub fn new(matrix: SymmetricMatrix) -> Result<Self> {
        let min_eigenvalue = matrix.check_psd()?;
        Ok(KernelMatrix { matrix, min_eigenvalue })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SymmetricMatrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }
}

/// Covariance `Σ` with a ridge already added to its diagonal.
#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    matrix: SymmetricMatrix,
    jitter: f64,
    min_eigenvalue: f64,
}

impl CovarianceMatrix {
    pub fn new(matrix: SymmetricMatrix, jitter: f64) -> Result<Self> {
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return Err(Error::InvalidMatrix(format!("jitter {jitter} must be finite and >= 0")));
        }
        let matrix = matrix.with_ridge(jitter);
        let min_eigenvalue = matrix.check_psd()?;
        if min_eigenvalue <= 0.0 && matrix.dim() > 0 {
            return Err(Error::InvalidMatrix(format!(
                "not positive definite after jitter (min eigenvalue {min_eigenvalue:e})"
            )));
        }
        Ok(CovarianceMatrix {
            matrix,
            jitter,
            min_eigenvalue,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], jitter: f64) -> Result<Self> {
        Self::new(SymmetricMatrix::from_rows(rows)?, jitter)
    }

    /// The jittered matrix.
    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Multiplies every entry by `factor` (a change of measurement units).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let matrix = self.matrix.scaled(factor);
        let min_eigenvalue = matrix.check_psd()?;
        Ok(CovarianceMatrix {
            matrix,
            jitter: self.jitter * factor,
            min_eigenvalue,
        })
    }
}

/// In-place Cholesky of a row-major `k×k` block. Returns `ln det` or `None`
/// when a pivot (before the square root) is not above `min_pivot`.
fn cholesky_log_det(a: &mut [f64], k: usize, min_pivot: f64) -> Option<f64> {
    let mut log_det = 0.0;
    for j in 0..k {
        let mut d = a[j * k + j];
        for t in 0..j {
            d -= a[j * k + t] * a[j * k + t];
        }
        if d.is_nan() || d <= min_pivot {
            return None;
        }
        log_det += d.ln();
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in (j + 1)..k {
            let mut s = a[i * k + j];
            for t in 0..j {
                s -= a[i * k + t] * a[j * k + t];
            }
            a[i * k + j] = s / d;
        }
    }
    Some(log_det)
}

/// Log-determinants of principal submatrices with a jittered fallback.
#[derive(Clone, Debug)]
struct PrincipalMinors {
    matrix: SymmetricMatrix,
    jitter: f64,
}

impl PrincipalMinors {
    fn new(matrix: SymmetricMatrix) -> Self {
        let n = matrix.dim();
        let mean_diag = if n == 0 { 0.0 } else { matrix.trace() / n as f64 };
        let jitter = JITTER_SCALE * if mean_diag > 0.0 { mean_diag } else { 1.0 };
        PrincipalMinors { matrix, jitter }
    }

    fn gather(&self, set: &[ElementId]) -> Vec<f64> {
        let k = set.len();
        let mut a = vec![0.0; k * k];
        for (r, &i) in set.iter().enumerate() {
            for (c, &j) in set.iter().enumerate() {
                a[r * k + c] = self.matrix.get(i.index(), j.index());
            }
        }
        a
    }

    fn log_det(&self, set: &[ElementId]) -> f64 {
        self.log_det_with_ridge(set, 0.0)
    }

    /// `ln det(M_S + ridge·I)`, escalating jitter when a pivot collapses.
    fn log_det_with_ridge(&self, set: &[ElementId], ridge: f64) -> f64 {
        let k = set.len();
        if k == 0 {
            return 0.0;
        }
        let base = self.gather(set);
        let mut extra = ridge;
        let mut threshold = self.jitter;
        for _ in 0..MAX_JITTER_ESCALATIONS {
            let mut a = base.clone();
            for i in 0..k {
                a[i * k + i] += extra;
            }
            if let Some(ld) = cholesky_log_det(&mut a, k, threshold) {
                return ld;
            }
            extra = if extra == ridge {
                ridge + self.jitter
            } else {
                ridge + (extra - ridge) * 10.0
            };
            threshold = 0.0;
        }
        // Not reachable for finite PSD input; clamp pivots rather than fail.
        let mut a = base;
        let mut ld = 0.0;
        for j in 0..k {
            let mut d = a[j * k + j];
            for t in 0..j {
                d -= a[j * k + t] * a[j * k + t];
            }
            let d = d.max(self.jitter);
            ld += d.ln();
            let s = d.sqrt();
            a[j * k + j] = s;
            for i in (j + 1)..k {
                let mut v = a[i * k + j];
                for t in 0..j {
                    v -= a[i * k + t] * a[j * k + t];
                }
                a[i * k + j] = v / s;
            }
        }
        ld
    }

    /// `ln det M_base` and `ln det M_{base+e} - ln det M_base` per candidate,
    /// sharing one factorization of the base block.
    fn log_det_gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        let b = base.members();
        let k = b.len();
        let mut chol = self.gather(b);
        let Some(base_ld) = cholesky_log_det(&mut chol, k, self.jitter) else {
            let base_ld = self.log_det(b);
            let mut buf = b.to_vec();
            let gains = candidates
                .iter()
                .map(|&e| {
                    buf.push(e);
                    let v = self.log_det(&buf);
                    buf.pop();
                    v - base_ld
                })
                .collect();
            return (base_ld, gains);
        };
        let mut v = vec![0.0; k];
        let mut buf = b.to_vec();
        let gains = candidates
            .iter()
            .map(|&e| {
                let ei = e.index();
                for j in 0..k {
                    let mut s = self.matrix.get(ei, b[j].index());
                    for t in 0..j {
                        s -= v[t] * chol[j * k + t];
                    }
                    v[j] = s / chol[j * k + j];
                }
                let mut d = self.matrix.get(ei, ei);
                for vt in &v {
                    d -= vt * vt;
                }
                if d > self.jitter {
                    d.ln()
                } else {
                    buf.push(e);
                    let full = self.log_det(&buf);
                    buf.pop();
                    full - base_ld
                }
            })
            .collect();
        (base_ld, gains)
    }
}

/// `f(S) = ln det L_S + shift·|S|`.
///
/// The default shift is `max(0, -ln λ_min)`: every principal submatrix has
/// eigenvalues at least `λ_min`, so the shifted value is non-negative on the
/// whole instance and submodularity is unchanged (the shift is modular).
#[derive(Clone, Debug)]
pub struct LogDetObjective {
    minors: PrincipalMinors,
    shift: f64,
}

impl LogDetObjective {
    pub fn new(kernel: KernelMatrix) -> Result<Self> {
        let minors = PrincipalMinors::new(kernel.matrix.clone());
        let floor = kernel.min_eigenvalue.max(minors.jitter);
        let shift = (-floor.ln()).max(0.0);
        Ok(LogDetObjective { minors, shift })
    }

    pub fn with_shift(kernel: KernelMatrix, shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::InvalidObjective(format!("shift {shift} is not finite")));
        }
        Ok(LogDetObjective {
            minors: PrincipalMinors::new(kernel.matrix),
            shift,
        })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn kernel(&self) -> &SymmetricMatrix {
        &self.minors.matrix
    }

    /// Unshifted `ln det(L_S + ridge·I)`.
    pub fn log_det_with_ridge(&self, set: &[ElementId], ridge: f64) -> f64 {
        self.minors.log_det_with_ridge(set, ridge)
    }
}

impl SubmodularFn for LogDetObjective {
    fn ground_size(&self) -> usize {
        self.minors.matrix.dim()
    }

    fn value(&self, set: &[ElementId]) -> f64 {
        self.minors.log_det(set) + self.shift * set.len() as f64
    }

    fn gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        let (ld, mut gains) = self.minors.log_det_gains(base, candidates);
        gains.iter_mut().for_each(|g| *g += self.shift);
        (ld + self.shift * base.len() as f64, gains)
    }
}

/// Differential entropy of a Gaussian restricted to `S`:
/// `H(S) = ((1 + ln 2π)/2)|S| + ½ ln det Σ_S`.
#[derive(Clone, Debug)]
pub struct EntropyObjective {
    minors: PrincipalMinors,
    min_eigenvalue: f64,
}

impl EntropyObjective {
    pub fn new(cov: CovarianceMatrix) -> Self {
        EntropyObjective {
            minors: PrincipalMinors::new(cov.matrix),
            min_eigenvalue: cov.min_eigenvalue,
        }
    }

    pub fn covariance(&self) -> &SymmetricMatrix {
        &self.minors.matrix
    }

    /// Lower bound on every marginal gain. Non-negative means the instance is
    /// monotone; negative gains are what make it non-monotone.
    pub fn marginal_lower_bound(&self) -> f64 {
        ENTROPY_CONSTANT + 0.5 * self.min_eigenvalue.ln()
    }
}

impl SubmodularFn for EntropyObjective {
    fn ground_size(&self) -> usize {
        self.minors.matrix.dim()
    }

    fn value(&self, set: &[ElementId]) -> f64 {
        ENTROPY_CONSTANT * set.len() as f64 + 0.5 * self.minors.log_det(set)
    }

    fn gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        let (ld, gains) = self.minors.log_det_gains(base, candidates);
        (
            ENTROPY_CONSTANT * base.len() as f64 + 0.5 * ld,
            gains.into_iter().map(|g| ENTROPY_CONSTANT + 0.5 * g).collect(),
        )
    }
}

/// Undirected graph with non-negative edge weights; `f(S)` is the weight of
/// edges crossing `(S, V∖S)`.
#[derive(Clone, Debug)]
pub struct CutGraph {
    adjacency: Vec<Vec<(u32, f64)>>,
    edge_count: usize,
}

impl CutGraph {
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (idx, &(u, v, w)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidObjective(format!(
                    "edge {idx} ({u}, {v}) outside {n} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidObjective(format!("edge {idx} is a self-loop on {u}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidObjective(format!("edge {idx} has weight {w}")));
            }
            adjacency[u].push((v as u32, w));
            adjacency[v].push((u as u32, w));
        }
        Ok(CutGraph {
            adjacency,
            edge_count: edges.len(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    fn mask(&self, set: &[ElementId]) -> Vec<bool> {
        let mut m = vec![false; self.adjacency.len()];
        for &e in set {
            m[e.index()] = true;
        }
        m
    }
}

impl SubmodularFn for CutGraph {
    fn ground_size(&self) -> usize {
        self.adjacency.len()
    }

    fn value(&self, set: &[ElementId]) -> f64 {
        let inside = self.mask(set);
        set.iter()
            .flat_map(|&u| self.adjacency[u.index()].iter())
            .filter(|(v, _)| !inside[*v as usize])
            .map(|(_, w)| w)
            .sum()
    }

    fn gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        let base_value = self.value(base.members());
        let gains = candidates
            .iter()
            .map(|&e| {
                self.adjacency[e.index()]
                    .iter()
                    .map(|&(v, w)| if base.contains(ElementId(v)) { -w } else { w })
                    .sum()
            })
            .collect();
        (base_value, gains)
    }
}

/// Each element covers a subset of a weighted universe; `f(S)` is the total
/// weight of the union.
#[derive(Clone, Debug)]
pub struct CoverageInstance {
    sets: Vec<Vec<u32>>,
    weights: Vec<f64>,
}

impl CoverageInstance {
    /// `sets[e]` lists the universe items covered by element `e`; the
    /// universe is `0..weights.len()`.
    pub fn new(sets: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidObjective(format!(
                "universe weight {i} is negative or not finite"
            )));
        }
        let universe = weights.len();
        let mut out = Vec::with_capacity(sets.len());
        for (e, mut s) in sets.into_iter().enumerate() {
            if let Some(&u) = s.iter().find(|&&u| u >= universe) {
                return Err(Error::InvalidObjective(format!(
                    "element {e} covers item {u} outside universe of {universe}"
                )));
            }
            s.sort_unstable();
            s.dedup();
            out.push(s.into_iter().map(|u| u as u32).collect());
        }
        Ok(CoverageInstance { sets: out, weights })
    }

    pub fn universe_size(&self) -> usize {
        self.weights.len()
    }

    fn covered(&self, set: &[ElementId]) -> Vec<u64> {
        let mut bits = vec![0u64; self.weights.len().div_ceil(64)];
        for &e in set {
            for &u in &self.sets[e.index()] {
                bits[u as usize / 64] |= 1 << (u % 64);
            }
        }
        bits
    }

    fn weight_of(bits: &[u64], weights: &[f64]) -> f64 {
        let mut total = 0.0;
        for (w, &word) in bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let b = word.trailing_zeros() as usize;
                total += weights[w * 64 + b];
                word &= word - 1;
            }
        }
        total
    }
}

impl SubmodularFn for CoverageInstance {
    fn ground_size(&self) -> usize {
        self.sets.len()
    }

    fn value(&self, set: &[ElementId]) -> f64 {
        Self::weight_of(&self.covered(set), &self.weights)
    }

    fn gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        let bits = self.covered(base.members());
        let base_value = Self::weight_of(&bits, &self.weights);
        let gains = candidates
            .iter()
            .map(|&e| {
                self.sets[e.index()]
                    .iter()
                    .filter(|&&u| bits[u as usize / 64] & (1 << (u % 64)) == 0)
                    .map(|&u| self.weights[u as usize])
                    .sum()
            })
            .collect();
        (base_value, gains)
    }
}

/// `f(S) = Σ_{e∈S} w_e` with `w ≥ 0`.
#[derive(Clone, Debug)]
pub struct ModularWeights {
    weights: Vec<f64>,
}

impl ModularWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidObjective(format!("weight {i} is negative or not finite")));
        }
        Ok(ModularWeights { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl SubmodularFn for ModularWeights {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, set: &[ElementId]) -> f64 {
        set.iter().map(|e| self.weights[e.index()]).sum()
    }

    fn gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        (
            self.value(base.members()),
            candidates.iter().map(|e| self.weights[e.index()]).collect(),
        )
    }
}

/// `f(S) = c` for every `S`.
#[derive(Clone, Debug)]
pub struct ConstantObjective {
    n: usize,
    value: f64,
}

impl ConstantObjective {
    pub fn new(n: usize, value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidObjective(format!(
                "constant {value} must be finite and >= 0"
            )));
        }
        Ok(ConstantObjective { n, value })
    }
}

impl SubmodularFn for ConstantObjective {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, _set: &[ElementId]) -> f64 {
        self.value
    }
}
