//! Box-constrained least squares `min ½‖Ax - y‖² over [0,1]^N`.
//!
//! Accelerated projected gradient with gradient-based momentum restart.
//! The step is `1/L` with `L` from 30 power iterations on `AᵀA` times 1.01;
//! if a step ever violates the quadratic upper bound, `L` is doubled.
//! Once the projected gradient is small the iterate is polished by an exact
//! least-squares solve over its free coordinates.

use nalgebra::{DMatrix, DVector};

use super::{SolverOptions, SolverOutcome, SolverStatus};
use crate::error::{check_len, Result};
use crate::linalg::{dot, norm2, power_iteration_gram, LinearMap};

const POWER_ITERATIONS: usize = 30;
const LIPSCHITZ_SAFETY: f64 = 1.01;
/// convergence is confirmed with a full projected gradient every this many steps
const CHECK_EVERY: usize = 10;
/// a polish is only accepted at, and an unpolished iterate only stops at,
/// this fraction of the tolerance
const STRICT: f64 = 1e-3;

fn clip(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Norm of the projected gradient: components pushing out of the box at an
/// active bound are dropped.
fn projected_gradient_norm(x: &[f64], g: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            let p = if xi <= 0.0 {
                gi.min(0.0)
            } else if xi >= 1.0 {
                gi.max(0.0)
            } else {
                gi
            };
            p * p
        })
        .sum::<f64>()
        .sqrt()
}

fn residual(a: &(impl LinearMap + ?Sized), x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; a.rows()];
    a.apply_into(x, &mut r);
    r.iter_mut().zip(y).for_each(|(u, v)| *u -= v);
    r
}

fn projected_gradient_at(a: &(impl LinearMap + ?Sized), x: &[f64], r: &[f64]) -> f64 {
    let mut g = vec![0.0; a.cols()];
    a.apply_adjoint_into(r, &mut g);
    projected_gradient_norm(x, &g)
}

/// Moves the free coordinates of `x` (those strictly inside the box) by the
/// minimum-norm least-squares correction, keeping the others fixed, and
/// clips. Returns `None` when nothing is free.
fn polish<A: LinearMap + ?Sized>(a: &A, x: &[f64], r: &[f64]) -> Option<Vec<f64>> {
    let free: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0 && x[i] < 1.0).collect();
    if free.is_empty() || a.rows() == 0 {
        return None;
    }
    let m = a.rows();
    let mut cols = DMatrix::zeros(m, free.len());
    let mut e = vec![0.0; x.len()];
    let mut col = vec![0.0; m];
    for (c, &j) in free.iter().enumerate() {
        e[j] = 1.0;
        a.apply_into(&e, &mut col);
        e[j] = 0.0;
        cols.column_mut(c).copy_from_slice(&col);
    }
    let svd = cols.svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    let rhs = DVector::from_iterator(m, r.iter().map(|v| -v));
    let d = svd.solve(&rhs, cutoff).ok()?;
    let mut out = x.to_vec();
    for (c, &j) in free.iter().enumerate() {
        out[j] = clip(out[j] + d[c]);
    }
    Some(out)
}

/// Replaces `x` by its polish when that does not increase the objective and
/// has projected gradient at most `accept`.
fn try_polish<A: LinearMap + ?Sized>(
    a: &A,
    y: &[f64],
    x: &mut Vec<f64>,
    ax: &mut [f64],
    r: &[f64],
    accept: f64,
) -> bool {
    let Some(p) = polish(a, x, r) else {
        return false;
    };
    let rp = residual(a, &p, y);
    if dot(&rp, &rp) <= dot(r, r) && projected_gradient_at(a, &p, &rp) <= accept {
        a.apply_into(&p, ax);
        *x = p;
        true
    } else {
        false
    }
}

/// Solves the box-constrained least-squares program.
///
/// With `tol = tolerance_opt · (1 + ‖Aᵀy‖)`, stops once the projected
/// gradient is below `tol` and a polished iterate has projected gradient
/// below `10⁻³ tol`, or the iterate itself gets there.
pub fn solve_box_ls<A: LinearMap + ?Sized>(
    a: &A,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<SolverOutcome> {
    opts.validate()?;
    let (m, n) = (a.rows(), a.cols());
    check_len(m, y.len())?;

    let mut aty = vec![0.0; n];
    a.apply_adjoint_into(y, &mut aty);
    let tol = opts.tolerance_opt * (1.0 + norm2(&aty));

    let mut lip = power_iteration_gram(a, POWER_ITERATIONS) * LIPSCHITZ_SAFETY;

    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; m];
    a.apply_into(&x, &mut ax);
    let mut x_prev = x.clone();
    let mut ax_prev = ax.clone();
    let mut t = 1.0f64;
    let mut beta = 0.0f64;

    let mut z = vec![0.0; n];
    let mut az = vec![0.0; m];
    let mut rz = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut ax_new = vec![0.0; m];
    let mut status = SolverStatus::IterationLimit;
    let mut iterations = 0;
    // failed polish attempts back off geometrically
    let mut next_polish = 0;
    let mut polish_gap = CHECK_EVERY / 2;

    if lip == 0.0 {
        // A = 0: every point of the box is optimal
        status = SolverStatus::Optimal;
    }

    while status != SolverStatus::Optimal && iterations < opts.max_iterations {
        iterations += 1;
        for i in 0..n {
            z[i] = x[i] + beta * (x[i] - x_prev[i]);
        }
        for k in 0..m {
            az[k] = ax[k] + beta * (ax[k] - ax_prev[k]);
            rz[k] = az[k] - y[k];
        }
        a.apply_adjoint_into(&rz, &mut g);
        let fz = 0.5 * dot(&rz, &rz);

        let mut step_sq;
        loop {
            for i in 0..n {
                x_new[i] = clip(z[i] - g[i] / lip);
            }
            a.apply_into(&x_new, &mut ax_new);
            let f_new = 0.5
                * ax_new
                    .iter()
                    .zip(y)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>();
            let mut lin = 0.0;
            step_sq = 0.0;
            for i in 0..n {
                let d = x_new[i] - z[i];
                lin += g[i] * d;
                step_sq += d * d;
            }
            let model = fz + lin + 0.5 * lip * step_sq;
            if f_new <= model + 1e-12 * (1.0 + fz) {
                break;
            }
            lip *= 2.0;
        }

        // restart momentum when the step opposes the last move
        let mut along = 0.0;
        for i in 0..n {
            along += (z[i] - x_new[i]) * (x_new[i] - x[i]);
        }
        let t_next = if along > 0.0 {
            1.0
        } else {
            (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
        };
        beta = if along > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        t = t_next;

        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut ax_prev, &mut ax);
        x.copy_from_slice(&x_new);
        ax.copy_from_slice(&ax_new);

        let mapping = lip * step_sq.sqrt();
        if mapping <= tol || iterations % CHECK_EVERY == 0 {
            let r: Vec<f64> = ax.iter().zip(y).map(|(u, v)| u - v).collect();
            let pg = projected_gradient_at(a, &x, &r);
            let strict = pg <= tol * STRICT;
            // failed attempts back off geometrically, but the final iterate is
            // always offered a polish
            if pg <= tol && (iterations >= next_polish || strict) {
                polish_gap *= 2;
                next_polish = iterations + polish_gap;
                if try_polish(a, y, &mut x, &mut ax, &r, tol * STRICT) {
                    status = SolverStatus::Optimal;
                }
            }
            if strict {
                status = SolverStatus::Optimal;
            }
        }
    }
    if status != SolverStatus::Optimal && lip > 0.0 {
        let r = residual(a, &x, y);
        if try_polish(a, y, &mut x, &mut ax, &r, tol * STRICT) {
            status = SolverStatus::Optimal;
        }
    }

    let residual_l2 = ax
        .iter()
        .zip(y)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();
    Ok(SolverOutcome {
        objective: 0.5 * residual_l2 * residual_l2,
        residual_l2,
        x_star: x,
        status,
        iterations,
        duality_gap: None,
    })
}
