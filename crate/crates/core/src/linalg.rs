//! Small dense helpers shared by the solvers and validators.

use nalgebra::DMatrix;

/// A real linear map `R^cols -> R^rows` together with its adjoint.
pub trait LinearMap {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = A x`
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    /// `out = A^T v`
    fn apply_adjoint_into(&self, v: &[f64], out: &mut [f64]);
}

impl LinearMap for DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        // column-major storage: accumulate column by column
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.column(j);
            for (o, &a) in out.iter_mut().zip(col.iter()) {
                *o += a * xj;
            }
        }
    }

    fn apply_adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(self.column(j).as_slice(), v);
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Deterministic start vector that is not orthogonal to the all-ones
/// vector nor to any single Fourier mode in practice.
pub(crate) fn start_vector(n: usize) -> Vec<f64> {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    (0..n)
        .map(|i| 1.0 + ((i as f64 + 1.0) * GOLDEN).fract())
        .collect()
}

/// Largest eigenvalue of `A^T A` by a fixed number of power iterations.
///
/// Returns the Rayleigh quotient of the final iterate, which never exceeds
/// the true value.
pub fn power_iteration_gram<A: LinearMap + ?Sized>(a: &A, iterations: usize) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return 0.0;
    }
    let mut v = start_vector(n);
    let mut av = vec![0.0; a.rows()];
    let mut w = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let nv = norm2(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        a.apply_into(&v, &mut av);
        estimate = dot(&av, &av);
        a.apply_adjoint_into(&av, &mut w);
        std::mem::swap(&mut v, &mut w);
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_map_matches_nalgebra() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let x = [1.0, -2.0, 0.5];
        let mut out = [0.0; 2];
        LinearMap::apply_into(&a, &x, &mut out);
        let expected = &a * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(out.as_slice(), expected.as_slice());

        let v = [2.0, -1.0];
        let mut back = [0.0; 3];
        a.apply_adjoint_into(&v, &mut back);
        let expected = a.transpose() * nalgebra::DVector::from_column_slice(&v);
        assert_eq!(back.as_slice(), expected.as_slice());
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let lam = power_iteration_gram(&a, 200);
        assert!((lam - 9.0).abs() < 1e-9, "{lam}");
    }
}
