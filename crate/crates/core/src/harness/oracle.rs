//! Exhaustive uniqueness check over binary vectors.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linalg::norm2;
use crate::signal::BinarySignal;

/// Enumeration is refused above this dimension.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BinaryUniqueness {
    Unique(BinarySignal),
    /// every binary solution, in Gray-code visiting order
    Multiple(Vec<BinarySignal>),
    None,
}

/// Finds every `x ∈ {0,1}^N` with `‖Ax - y‖₂ <= 1e-8 (1 + ‖y‖₂)`.
///
/// This tests binary uniqueness only; uniqueness over the box `[0,1]^N`
/// is what the certificate search decides.
pub fn brute_force_unique(a: &DMatrix<f64>, y: &[f64]) -> Result<BinaryUniqueness> {
    let (m, n) = (a.nrows(), a.ncols());
    check_len(m, y.len())?;
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let tol = 1e-8 * (1.0 + norm2(y));
    let exact = |x: &[bool]| -> f64 {
        (0..m)
            .map(|k| {
                let v: f64 = (0..n).filter(|&j| x[j]).map(|j| a[(k, j)]).sum::<f64>() - y[k];
                v * v
            })
            .sum::<f64>()
            .sqrt()
    };

    // Gray code walk with an incrementally updated residual; candidates
    // are rechecked from scratch to avoid drift.
    let mut x = vec![false; n];
    let mut r: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut found = Vec::new();
    let total: u64 = 1 << n;
    for step in 0..total {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            let sign = if x[j] { -1.0 } else { 1.0 };
            x[j] = !x[j];
            for (k, rk) in r.iter_mut().enumerate() {
                *rk += sign * a[(k, j)];
            }
        }
        if norm2(&r) <= 2.0 * tol + 1e-9 && exact(&x) <= tol {
            found.push(BinarySignal::from_support(
                n,
                (0..n).filter(|&j| x[j]),
            )?);
        }
    }
    Ok(match found.len() {
        0 => BinaryUniqueness::None,
        1 => BinaryUniqueness::Unique(found.pop().expect("one solution")),
        _ => BinaryUniqueness::Multiple(found),
    })
}
