//! Biased partial circulant and Toeplitz measurement operators.
//!
//! An operator represents `A = μ·1 + Φ_Θ` where `Φ` is either the circulant
//! matrix `Φ_{k,j} = b_{(j-k) mod N}` or the Toeplitz matrix
//! `T_{k,j} = c_{j-k}`, and `Φ_Θ` keeps the rows indexed by `Θ`. All indices
//! are 0-based; rows of every output follow the ascending order of `Θ`.
//!
//! The bias is kept as a scalar. `apply` and `apply_adjoint` go through a
//! zero-padded FFT convolution; `apply_direct` and `to_dense` evaluate the
//! defining formulas entry by entry and serve as the reference path.

mod fft;
pub mod manifest;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linalg::LinearMap;
use fft::CyclicConvolver;

/// Default memory cap for dense materialization (256 MiB).
pub const DEFAULT_DENSE_BUDGET: usize = 256 * 1024 * 1024;

/// A sorted set of distinct row indices inside `{0..n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    n: usize,
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex(w[0]));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, n });
            }
        }
        Ok(Self { n, indices })
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            indices: (0..n).collect(),
        }
    }

    /// Ambient dimension the indices live in.
    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Circulant,
    Toeplitz,
}

impl OperatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::Circulant => "circulant",
            OperatorKind::Toeplitz => "toeplitz",
        }
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circulant" => Ok(OperatorKind::Circulant),
            "toeplitz" => Ok(OperatorKind::Toeplitz),
            other => Err(Error::invalid(format!("unknown operator kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Generator `b` (length N), row selection and bias of a partial circulant.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpec {
    pub b: Vec<f64>,
    pub theta: IndexSet,
    pub mu: f64,
}

impl CirculantSpec {
    pub fn n(&self) -> usize {
        self.b.len()
    }
}

/// Generator `c = (c_{-N+1}, .., c_{N-1})` stored at offsets `0..2N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSpec {
    pub c: Vec<f64>,
    pub theta: IndexSet,
    pub mu: f64,
    pub n: usize,
}

impl ToeplitzSpec {
    /// `c_d` for `d` in `-N+1..=N-1`.
    pub fn coefficient(&self, d: isize) -> f64 {
        self.c[(d + self.n as isize - 1) as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Circulant(CirculantSpec),
    Toeplitz(ToeplitzSpec),
}

/// The biased partial operator `A = μ1 + Φ_Θ` together with the statistics
/// of the law its generator was drawn from.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    spec: GeneratorSpec,
    sigma: f64,
    subgauss_norm: f64,
    seed: u64,
    dense_budget: usize,
    conv: CyclicConvolver,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("bias mu must be finite and >= 0, got {mu}")))
    }
}

/// Generator `[c_0, .., c_{N-1}, c_{-N+1}, .., c_{-1}]` of the
/// `(2N-1)`-circulant whose leading `N×N` block is `T(c)`.
fn embedded_generator(c: &[f64], n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(c.len());
    g.extend_from_slice(&c[n - 1..]);
    g.extend_from_slice(&c[..n - 1]);
    g
}

fn toeplitz_dim(len: usize) -> Result<usize> {
    if len == 0 {
        return Err(Error::EmptyGenerator);
    }
    if len % 2 == 0 {
        return Err(Error::ToeplitzGeneratorLength {
            expected: len + 1,
            got: len,
        });
    }
    Ok(len.div_ceil(2))
}

/// Embeds `T(c)` into a circulant of dimension `2N-1`: the result selects
/// every row, carries no bias, and its top-left `N×N` block equals `T(c)`.
pub fn embed_toeplitz_in_circulant(c: &[f64]) -> Result<CirculantSpec> {
    let n = toeplitz_dim(c.len())?;
    Ok(CirculantSpec {
        b: embedded_generator(c, n),
        theta: IndexSet::full(c.len()),
        mu: 0.0,
    })
}

impl MeasurementOperator {
    /// `A = μ1 + Φ_Θ(b)`.
    pub fn circulant(b: Vec<f64>, theta: &[usize], mu: f64) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::EmptyGenerator);
        }
        check_mu(mu)?;
        let theta = IndexSet::new(b.len(), theta.iter().copied())?;
        Self::from_spec(GeneratorSpec::Circulant(CirculantSpec { b, theta, mu }))
    }

    /// `A = μ1 + T_Θ(c)` for `c` of length `2N-1`, stored from `c_{-N+1}`.
    pub fn toeplitz(c: Vec<f64>, theta: &[usize], mu: f64) -> Result<Self> {
        let n = toeplitz_dim(c.len())?;
        check_mu(mu)?;
        let theta = IndexSet::new(n, theta.iter().copied())?;
        Self::from_spec(GeneratorSpec::Toeplitz(ToeplitzSpec { c, theta, mu, n }))
    }

    /// Same as [`MeasurementOperator::toeplitz`] but checks the declared
    /// dimension against the generator length.
    pub fn toeplitz_with_dim(n: usize, c: Vec<f64>, theta: &[usize], mu: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGenerator);
        }
        if c.len() != 2 * n - 1 {
            return Err(Error::ToeplitzGeneratorLength {
                expected: 2 * n - 1,
                got: c.len(),
            });
        }
        Self::toeplitz(c, theta, mu)
    }

    pub fn from_spec(spec: GeneratorSpec) -> Result<Self> {
        let conv = match &spec {
            GeneratorSpec::Circulant(s) => {
                if s.b.is_empty() {
                    return Err(Error::EmptyGenerator);
                }
                check_len(s.b.len(), s.theta.ambient())?;
                check_mu(s.mu)?;
                CyclicConvolver::for_circulant(&s.b)
            }
            GeneratorSpec::Toeplitz(s) => {
                if s.n == 0 {
                    return Err(Error::EmptyGenerator);
                }
                if s.c.len() != 2 * s.n - 1 {
                    return Err(Error::ToeplitzGeneratorLength {
                        expected: 2 * s.n - 1,
                        got: s.c.len(),
                    });
                }
                check_len(s.n, s.theta.ambient())?;
                check_mu(s.mu)?;
                CyclicConvolver::for_circulant(&embedded_generator(&s.c, s.n))
            }
        };
        Ok(Self {
            spec,
            sigma: 1.0,
            subgauss_norm: 1.0,
            seed: 0,
            dense_budget: DEFAULT_DENSE_BUDGET,
            conv,
        })
    }

    /// Records the entry standard deviation `σ` and sub-Gaussian norm `R`
    /// of the generator's law.
    pub fn with_statistics(mut self, sigma: f64, subgauss_norm: f64) -> Self {
        self.sigma = sigma;
        self.subgauss_norm = subgauss_norm;
        self
    }

    /// Records the seed the generator was drawn with (provenance only).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dense_budget(mut self, bytes: usize) -> Self {
        self.dense_budget = bytes;
        self
    }

    /// Copy of this operator with the bias replaced.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        let mut op = self.clone();
        match &mut op.spec {
            GeneratorSpec::Circulant(s) => s.mu = mu,
            GeneratorSpec::Toeplitz(s) => s.mu = mu,
        }
        Ok(op)
    }

    /// The centered part `Φ_Θ` (bias set to zero).
    pub fn centered(&self) -> Self {
        self.with_mu(0.0).expect("zero bias is valid")
    }

    pub fn kind(&self) -> OperatorKind {
        match self.spec {
            GeneratorSpec::Circulant(_) => OperatorKind::Circulant,
            GeneratorSpec::Toeplitz(_) => OperatorKind::Toeplitz,
        }
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// Number of columns `N`.
    pub fn n(&self) -> usize {
        match &self.spec {
            GeneratorSpec::Circulant(s) => s.b.len(),
            GeneratorSpec::Toeplitz(s) => s.n,
        }
    }

    /// Number of selected rows `M`.
    pub fn m(&self) -> usize {
        self.theta().len()
    }

    pub fn theta(&self) -> &IndexSet {
        match &self.spec {
            GeneratorSpec::Circulant(s) => &s.theta,
            GeneratorSpec::Toeplitz(s) => &s.theta,
        }
    }

    pub fn mu(&self) -> f64 {
        match &self.spec {
            GeneratorSpec::Circulant(s) => s.mu,
            GeneratorSpec::Toeplitz(s) => s.mu,
        }
    }

    /// The raw generator: `b` for circulants, `c` (from `c_{-N+1}`) for
    /// Toeplitz operators.
    pub fn generator(&self) -> &[f64] {
        match &self.spec {
            GeneratorSpec::Circulant(s) => &s.b,
            GeneratorSpec::Toeplitz(s) => &s.c,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn subgauss_norm(&self) -> f64 {
        self.subgauss_norm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dense_budget(&self) -> usize {
        self.dense_budget
    }

    /// Entry `Φ_{k,j}` of the full (unselected) centered matrix.
    pub fn centered_entry(&self, k: usize, j: usize) -> f64 {
        match &self.spec {
            GeneratorSpec::Circulant(s) => {
                let n = s.b.len();
                s.b[(j + n - k) % n]
            }
            GeneratorSpec::Toeplitz(s) => s.c[j + s.n - 1 - k],
        }
    }

    /// `y = A x` through the FFT path.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.apply_centered(x)?;
        let bias = self.mu() * x.iter().sum::<f64>();
        if bias != 0.0 {
            y.iter_mut().for_each(|v| *v += bias);
        }
        Ok(y)
    }

    /// `y = Φ_Θ x` through the FFT path.
    pub fn apply_centered(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), x.len())?;
        let full = if self.conv.len() == x.len() {
            self.conv.apply(x)
        } else {
            let mut padded = x.to_vec();
            padded.resize(self.conv.len(), 0.0);
            self.conv.apply(&padded)
        };
        Ok(self.theta().as_slice().iter().map(|&k| full[k]).collect())
    }

    /// `x = A^T v` through the FFT path.
    pub fn apply_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.apply_adjoint_centered(v)?;
        let bias = self.mu() * v.iter().sum::<f64>();
        if bias != 0.0 {
            x.iter_mut().for_each(|u| *u += bias);
        }
        Ok(x)
    }

    /// `x = Φ_Θ^T v` through the FFT path.
    pub fn apply_adjoint_centered(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m(), v.len())?;
        let mut scattered = vec![0.0; self.conv.len()];
        for (&k, &vk) in self.theta().as_slice().iter().zip(v) {
            scattered[k] = vk;
        }
        let mut full = self.conv.apply_adjoint(&scattered);
        full.truncate(self.n());
        Ok(full)
    }

    /// `y = A x` by direct summation of the defining formula, `O(MN)`.
    pub fn apply_direct(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), x.len())?;
        let bias = self.mu() * x.iter().sum::<f64>();
        Ok(self
            .theta()
            .as_slice()
            .iter()
            .map(|&k| {
                bias + x
                    .iter()
                    .enumerate()
                    .map(|(j, &xj)| self.centered_entry(k, j) * xj)
                    .sum::<f64>()
            })
            .collect())
    }

    fn check_budget(&self, rows: usize, cols: usize) -> Result<()> {
        let bytes = rows
            .saturating_mul(cols)
            .saturating_mul(std::mem::size_of::<f64>());
        if bytes > self.dense_budget {
            return Err(Error::BudgetExceeded {
                rows,
                cols,
                bytes,
                budget: self.dense_budget,
            });
        }
        Ok(())
    }

    /// Materializes `A` as an `M×N` matrix.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let mu = self.mu();
        let mut a = self.to_dense_centered()?;
        if mu != 0.0 {
            a.add_scalar_mut(mu);
        }
        Ok(a)
    }

    /// Materializes `Φ_Θ` as an `M×N` matrix.
    pub fn to_dense_centered(&self) -> Result<DMatrix<f64>> {
        let (m, n) = (self.m(), self.n());
        self.check_budget(m, n)?;
        let theta = self.theta().as_slice();
        Ok(DMatrix::from_fn(m, n, |r, j| self.centered_entry(theta[r], j)))
    }
}

impl LinearMap for MeasurementOperator {
    fn rows(&self) -> usize {
        self.m()
    }

    fn cols(&self) -> usize {
        self.n()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let y = self.apply(x).expect("dimension checked by caller");
        out.copy_from_slice(&y);
    }

    fn apply_adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        let x = self.apply_adjoint(v).expect("dimension checked by caller");
        out.copy_from_slice(&x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..a.nrows())
            .map(|r| a.row(r).iter().copied().collect())
            .collect()
    }

    #[test]
    fn circulant_examples() {
        let op = MeasurementOperator::circulant(vec![1.0, 2.0, 3.0], &[0, 1, 2], 0.0).unwrap();
        assert_eq!(
            rows(&op.to_dense().unwrap()),
            vec![vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0], vec![2.0, 3.0, 1.0]]
        );
        let op = MeasurementOperator::circulant(vec![1.0, 2.0, 3.0], &[1], 0.0).unwrap();
        assert_eq!(rows(&op.to_dense().unwrap()), vec![vec![3.0, 1.0, 2.0]]);
        let op = MeasurementOperator::circulant(vec![1.0, 2.0, 3.0], &[1], 1.0).unwrap();
        assert_eq!(rows(&op.to_dense().unwrap()), vec![vec![4.0, 2.0, 3.0]]);
    }

    #[test]
    fn toeplitz_examples() {
        let c = vec![5.0, 7.0, 9.0];
        let op = MeasurementOperator::toeplitz_with_dim(2, c.clone(), &[0, 1], 0.0).unwrap();
        assert_eq!(
            rows(&op.to_dense().unwrap()),
            vec![vec![7.0, 9.0], vec![5.0, 7.0]]
        );
        let op = MeasurementOperator::toeplitz_with_dim(2, c.clone(), &[1], 0.0).unwrap();
        assert_eq!(rows(&op.to_dense().unwrap()), vec![vec![5.0, 7.0]]);
        let op = MeasurementOperator::toeplitz_with_dim(2, c, &[0, 1], 2.0).unwrap();
        assert_eq!(
            rows(&op.to_dense().unwrap()),
            vec![vec![9.0, 11.0], vec![7.0, 9.0]]
        );
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            MeasurementOperator::circulant(vec![], &[], 0.0),
            Err(Error::EmptyGenerator)
        ));
        assert!(matches!(
            MeasurementOperator::circulant(vec![1.0, 2.0], &[0, 0], 0.0),
            Err(Error::DuplicateIndex(0))
        ));
        assert!(matches!(
            MeasurementOperator::circulant(vec![1.0, 2.0], &[2], 0.0),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
        assert!(matches!(
            MeasurementOperator::toeplitz_with_dim(2, vec![1.0; 4], &[0], 0.0),
            Err(Error::ToeplitzGeneratorLength { expected: 3, got: 4 })
        ));
        assert!(MeasurementOperator::toeplitz(vec![1.0; 4], &[0], 0.0).is_err());
        assert!(MeasurementOperator::circulant(vec![1.0], &[0], -1.0).is_err());
    }

    #[test]
    fn apply_examples() {
        let mut e0 = vec![0.0; 7];
        e0[0] = 1.0;
        let id = MeasurementOperator::circulant(e0, &[0, 1, 2, 3, 4, 5, 6], 0.0).unwrap();
        let x = vec![0.5, -1.0, 2.0, 3.0, 0.0, 1.5, -2.5];
        let y = id.apply(&x).unwrap();
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
        let back = id.apply_adjoint(&x).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }

        let op = MeasurementOperator::circulant(vec![1.0, 2.0, 3.0], &[0, 1, 2], 0.0).unwrap();
        let y = op.apply(&[1.0, 0.0, 0.0]).unwrap();
        for (a, b) in y.iter().zip(&[1.0, 3.0, 2.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn adjoint_of_unit_vector_is_row() {
        let op = MeasurementOperator::circulant(vec![0.3, -1.2, 2.0, 0.7, 1.1], &[1, 3, 4], 0.4)
            .unwrap();
        let dense = op.to_dense().unwrap();
        for r in 0..3 {
            let mut e = vec![0.0; 3];
            e[r] = 1.0;
            let row = op.apply_adjoint(&e).unwrap();
            for (j, v) in row.iter().enumerate() {
                assert!((v - dense[(r, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let op = MeasurementOperator::circulant(vec![1.0, 2.0, 3.0], &[0, 2], 0.0).unwrap();
        assert!(matches!(
            op.apply(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(
            op.apply_adjoint(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn circulant_rows_are_shifts() {
        let b = vec![0.5, -1.0, 2.0, 0.25, 3.0, -0.75];
        let op = MeasurementOperator::circulant(b.clone(), &[0, 1, 2, 3, 4, 5], 0.0).unwrap();
        let a = op.to_dense().unwrap();
        for k in 0..6 {
            for j in 0..6 {
                assert_eq!(a[(k, j)], a[(0, (j + 6 - k) % 6)]);
            }
        }
    }

    #[test]
    fn embedding_examples() {
        let spec = embed_toeplitz_in_circulant(&[5.0, 7.0, 9.0]).unwrap();
        assert_eq!(spec.b, vec![7.0, 9.0, 5.0]);
        let circ = MeasurementOperator::from_spec(GeneratorSpec::Circulant(spec)).unwrap();
        let d = circ.to_dense().unwrap();
        assert_eq!(d[(0, 0)], 7.0);
        assert_eq!(d[(0, 1)], 9.0);
        assert_eq!(d[(1, 0)], 5.0);
        assert_eq!(d[(1, 1)], 7.0);

        let spec = embed_toeplitz_in_circulant(&[4.0]).unwrap();
        assert_eq!(spec.b, vec![4.0]);
        assert!(embed_toeplitz_in_circulant(&[1.0, 2.0]).is_err());
        assert!(embed_toeplitz_in_circulant(&[]).is_err());
    }

    #[test]
    fn dense_budget_is_enforced() {
        let op = MeasurementOperator::circulant(vec![1.0; 16], &[0, 1, 2, 3], 0.0)
            .unwrap()
            .with_dense_budget(8 * 63);
        assert!(matches!(op.to_dense(), Err(Error::BudgetExceeded { .. })));
        let op = op.with_dense_budget(8 * 64);
        assert_eq!(op.to_dense().unwrap().nrows(), 4);
    }

    #[test]
    fn direct_and_fast_agree_on_toeplitz() {
        let c: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let op = MeasurementOperator::toeplitz(c, &[0, 2, 3], 0.5).unwrap();
        let x = vec![1.0, -2.0, 0.5, 0.25, 3.0];
        let fast = op.apply(&x).unwrap();
        let direct = op.apply_direct(&x).unwrap();
        for (a, b) in fast.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        let v = vec![0.3, -0.7, 1.1];
        assert!((dot(&fast, &v) - dot(&x, &op.apply_adjoint(&v).unwrap())).abs() < 1e-12);
    }
}
