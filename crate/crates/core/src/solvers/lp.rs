//! Dense bounded-variable primal simplex.
//!
//! Solves `min cᵀx  s.t.  A x = b,  l <= x <= u` with infinite bounds
//! allowed. Nonbasic variables sit at one of their bounds (or at zero when
//! free); upper bounds are handled in the ratio test rather than by extra
//! rows. Phase one drives signed artificial variables to zero; in phase two
//! the artificials are fixed at `[0, 0]` so any that remain basic leave on
//! the first pivot through their row.
//!
//! Pricing is Dantzig's rule until a run of degenerate pivots is seen, then
//! Bland's smallest-index rule until the objective moves again.

use nalgebra::DMatrix;

use super::{SolverOptions, SolverOutcome, SolverStatus};
use crate::error::{check_len, Error, Result};
use crate::linalg::norm2;

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const DEGENERATE_RUN: usize = 20;
const REFACTOR_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Basic(usize),
    Lower,
    Upper,
    /// free nonbasic variable held at zero
    Zero,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

struct Simplex<'a> {
    a: &'a DMatrix<f64>,
    b: &'a [f64],
    m: usize,
    n: usize,
    /// n structural + m artificial columns
    nt: usize,
    /// sign of artificial column i (its column is `sign[i] * e_i`)
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    place: Vec<Place>,
    /// value of every variable; basic entries mirror `xb`
    x: Vec<f64>,
    basis: Vec<usize>,
    /// row-major `B^{-1} [A | D]`
    tab: Vec<f64>,
    xb: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            out.copy_from_slice(self.a.column(j).as_slice());
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            let i = j - self.n;
            out[i] = self.art_sign[i];
        }
    }

    fn new(a: &'a DMatrix<f64>, b: &'a [f64], lower: &[f64], upper: &[f64]) -> Self {
        let (m, n) = (a.nrows(), a.ncols());
        let nt = n + m;
        let mut lo = lower.to_vec();
        let mut up = upper.to_vec();
        lo.extend(std::iter::repeat_n(0.0, m));
        up.extend(std::iter::repeat_n(f64::INFINITY, m));

        let mut place = Vec::with_capacity(nt);
        let mut x = vec![0.0; nt];
        for j in 0..n {
            if lo[j].is_finite() {
                place.push(Place::Lower);
                x[j] = lo[j];
            } else if up[j].is_finite() {
                place.push(Place::Upper);
                x[j] = up[j];
            } else {
                place.push(Place::Zero);
            }
        }

        // residual of the structural starting point
        let mut r = b.to_vec();
        for j in 0..n {
            if x[j] != 0.0 {
                for (ri, aij) in r.iter_mut().zip(a.column(j).iter()) {
                    *ri -= aij * x[j];
                }
            }
        }
        let art_sign: Vec<f64> = r.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();

        let mut tab = vec![0.0; m * nt];
        for i in 0..m {
            let s = art_sign[i];
            for j in 0..n {
                tab[i * nt + j] = s * a[(i, j)];
            }
            tab[i * nt + n + i] = 1.0;
        }
        let basis: Vec<usize> = (n..nt).collect();
        let xb: Vec<f64> = r.iter().map(|v| v.abs()).collect();
        for i in 0..m {
            place.push(Place::Basic(i));
            x[n + i] = xb[i];
        }

        let mut cost = vec![0.0; nt];
        cost[n..].iter_mut().for_each(|c| *c = 1.0);

        let mut s = Self {
            a,
            b,
            m,
            n,
            nt,
            art_sign,
            lo,
            up,
            cost,
            place,
            x,
            basis,
            tab,
            xb,
            d: vec![0.0; nt],
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
        };
        s.recompute_reduced_costs();
        s
    }

    fn recompute_reduced_costs(&mut self) {
        let nt = self.nt;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * nt..(i + 1) * nt];
                for (dj, t) in self.d.iter_mut().zip(row) {
                    *dj -= cb * t;
                }
            }
        }
        for &j in &self.basis {
            self.d[j] = 0.0;
        }
    }

    /// Rebuilds the tableau and basic values from the current basis.
    fn refactor(&mut self) -> bool {
        let (m, nt) = (self.m, self.nt);
        if m == 0 {
            self.recompute_reduced_costs();
            return true;
        }
        let mut bmat = DMatrix::zeros(m, m);
        let mut col = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            bmat.column_mut(k).copy_from_slice(&col);
        }
        let lu = bmat.lu();

        let mut full = DMatrix::zeros(m, nt);
        for j in 0..nt {
            self.column(j, &mut col);
            full.column_mut(j).copy_from_slice(&col);
        }
        let Some(t) = lu.solve(&full) else {
            return false;
        };
        for i in 0..m {
            for j in 0..nt {
                self.tab[i * nt + j] = t[(i, j)];
            }
        }

        let mut rhs = nalgebra::DVector::from_column_slice(self.b);
        for j in 0..nt {
            if !matches!(self.place[j], Place::Basic(_)) && self.x[j] != 0.0 {
                self.column(j, &mut col);
                for i in 0..m {
                    rhs[i] -= col[i] * self.x[j];
                }
            }
        }
        let Some(xb) = lu.solve(&rhs) else {
            return false;
        };
        for i in 0..m {
            self.xb[i] = xb[i];
            self.x[self.basis[i]] = xb[i];
        }
        self.since_refactor = 0;
        self.recompute_reduced_costs();
        true
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.nt {
            let dir = match self.place[j] {
                Place::Basic(_) => continue,
                _ if self.lo[j] == self.up[j] => continue,
                Place::Lower => {
                    if self.d[j] < -REDUCED_COST_TOL {
                        1.0
                    } else {
                        continue;
                    }
                }
                Place::Upper => {
                    if self.d[j] > REDUCED_COST_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
                Place::Zero => {
                    if self.d[j] < -REDUCED_COST_TOL {
                        1.0
                    } else if self.d[j] > REDUCED_COST_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = self.d[j].abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn step(&mut self) -> Step {
        let Some((q, dir)) = self.choose_entering() else {
            return Step::Optimal;
        };
        let nt = self.nt;

        // ratio test
        let mut theta = self.up[q] - self.lo[q];
        let mut leave: Option<usize> = None;
        let mut leave_alpha = 0.0;
        for i in 0..self.m {
            let alpha = dir * self.tab[i * nt + q];
            let bv = self.basis[i];
            let ratio = if alpha > PIVOT_TOL && self.lo[bv].is_finite() {
                (self.xb[i] - self.lo[bv]) / alpha
            } else if alpha < -PIVOT_TOL && self.up[bv].is_finite() {
                (self.up[bv] - self.xb[i]) / -alpha
            } else {
                continue;
            };
            let ratio = ratio.max(0.0);
            let better = match leave {
                None => ratio < theta,
                Some(r) => {
                    if ratio < theta - DEGENERATE_STEP {
                        true
                    } else if ratio <= theta + DEGENERATE_STEP {
                        if self.bland {
                            bv < self.basis[r]
                        } else {
                            alpha.abs() > leave_alpha
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                theta = ratio;
                leave = Some(i);
                leave_alpha = alpha.abs();
            }
        }
        if theta.is_infinite() {
            return Step::Unbounded;
        }

        if theta <= DEGENERATE_STEP {
            self.degenerate_run += 1;
            if self.degenerate_run >= DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }

        for i in 0..self.m {
            let t = self.tab[i * nt + q];
            if t != 0.0 {
                self.xb[i] -= theta * dir * t;
            }
        }
        let entering_value = self.x[q] + dir * theta;

        match leave {
            None => {
                // bound flip
                if dir > 0.0 {
                    self.place[q] = Place::Upper;
                    self.x[q] = self.up[q];
                } else {
                    self.place[q] = Place::Lower;
                    self.x[q] = self.lo[q];
                }
                for i in 0..self.m {
                    self.x[self.basis[i]] = self.xb[i];
                }
            }
            Some(r) => {
                let out = self.basis[r];
                let alpha = dir * self.tab[r * nt + q];
                if alpha > 0.0 {
                    self.place[out] = Place::Lower;
                    self.x[out] = self.lo[out];
                } else {
                    self.place[out] = Place::Upper;
                    self.x[out] = self.up[out];
                }
                self.pivot(r, q);
                self.basis[r] = q;
                self.place[q] = Place::Basic(r);
                self.xb[r] = entering_value;
                for i in 0..self.m {
                    self.x[self.basis[i]] = self.xb[i];
                }
            }
        }
        self.iterations += 1;
        self.since_refactor += 1;
        Step::Moved
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nt = self.nt;
        let p = self.tab[r * nt + q];
        {
            let row = &mut self.tab[r * nt..(r + 1) * nt];
            row.iter_mut().for_each(|v| *v /= p);
        }
        let pivot_row: Vec<f64> = self.tab[r * nt..(r + 1) * nt].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * nt + q];
            if f != 0.0 {
                let row = &mut self.tab[i * nt..(i + 1) * nt];
                for (v, pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (dj, pr) in self.d.iter_mut().zip(&pivot_row) {
                *dj -= f * pr;
            }
        }
        self.d[q] = 0.0;
    }

    /// Runs the current phase to optimality. Returns `None` on success.
    fn run(&mut self, max_iterations: usize) -> Option<SolverStatus> {
        loop {
            if self.iterations >= max_iterations {
                return Some(SolverStatus::IterationLimit);
            }
            if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return Some(SolverStatus::NumericalFailure);
            }
            match self.step() {
                Step::Moved => {}
                Step::Unbounded => return Some(SolverStatus::Unbounded),
                Step::Optimal => {
                    // confirm on a fresh factorization
                    if self.since_refactor == 0 {
                        return None;
                    }
                    if !self.refactor() {
                        return Some(SolverStatus::NumericalFailure);
                    }
                    if self.choose_entering().is_none() {
                        return None;
                    }
                }
            }
        }
    }

    fn structural(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }

    fn artificial_sum(&self) -> f64 {
        self.x[self.n..].iter().map(|v| v.abs()).sum()
    }

    /// `bᵀy + Σ_j (d_j > 0 ? d_j l_j : d_j u_j)` for the current basis.
    fn dual_objective(&self) -> f64 {
        let m = self.m;
        if m == 0 {
            return (0..self.nt)
                .map(|j| bound_term(self.cost[j], self.lo[j], self.up[j]))
                .sum();
        }
        let mut bmat = DMatrix::zeros(m, m);
        let mut col = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            bmat.column_mut(k).copy_from_slice(&col);
        }
        let cb = nalgebra::DVector::from_iterator(m, self.basis.iter().map(|&j| self.cost[j]));
        let Some(y) = bmat.transpose().lu().solve(&cb) else {
            return f64::NEG_INFINITY;
        };
        let mut obj: f64 = self.b.iter().zip(y.iter()).map(|(b, y)| b * y).sum();
        for j in 0..self.nt {
            if matches!(self.place[j], Place::Basic(_)) {
                continue;
            }
            self.column(j, &mut col);
            let dj = self.cost[j] - col.iter().zip(y.iter()).map(|(a, y)| a * y).sum::<f64>();
            obj += bound_term(dj, self.lo[j], self.up[j]);
        }
        obj
    }
}

fn bound_term(dj: f64, lo: f64, up: f64) -> f64 {
    if dj > 0.0 {
        if lo.is_finite() {
            dj * lo
        } else if dj > REDUCED_COST_TOL {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else if dj < 0.0 {
        if up.is_finite() {
            dj * up
        } else if dj < -REDUCED_COST_TOL {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        0.0
    }
}

/// Solves `min cᵀx s.t. A x = b, lower <= x <= upper`.
///
/// Infeasibility, unboundedness and the iteration limit are reported in the
/// outcome status; malformed input is an error.
pub fn lp_solve(
    costs: &[f64],
    a: &DMatrix<f64>,
    rhs: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &SolverOptions,
) -> Result<SolverOutcome> {
    opts.validate()?;
    let (m, n) = (a.nrows(), a.ncols());
    check_len(n, costs.len())?;
    check_len(m, rhs.len())?;
    check_len(n, lower.len())?;
    check_len(n, upper.len())?;
    for j in 0..n {
        if lower[j].is_nan() || upper[j].is_nan() || lower[j] > upper[j] {
            return Err(Error::invalid(format!(
                "bounds of variable {j} are inconsistent: [{}, {}]",
                lower[j], upper[j]
            )));
        }
        if lower[j] == f64::INFINITY || upper[j] == f64::NEG_INFINITY {
            return Err(Error::invalid(format!("variable {j} has an empty domain")));
        }
    }
    if a.iter().chain(rhs).chain(costs).any(|v| !v.is_finite()) {
        return Err(Error::invalid("LP data must be finite"));
    }

    let feas_tol = opts.tolerance_feas * (1.0 + norm2(rhs));
    let mut sx = Simplex::new(a, rhs, lower, upper);

    let finish = |sx: &Simplex, status: SolverStatus| -> SolverOutcome {
        let x = sx.structural();
        let objective = costs.iter().zip(&x).map(|(c, x)| c * x).sum();
        SolverOutcome {
            residual_l2: residual(a, &x, rhs),
            x_star: x,
            status,
            objective,
            iterations: sx.iterations,
            duality_gap: None,
        }
    };

    // phase one
    if let Some(status) = sx.run(opts.max_iterations) {
        return Ok(finish(&sx, status));
    }
    if sx.artificial_sum() > feas_tol {
        return Ok(finish(&sx, SolverStatus::Infeasible));
    }

    // phase two: artificials pinned at zero
    for i in 0..m {
        let j = n + i;
        sx.up[j] = 0.0;
        if !matches!(sx.place[j], Place::Basic(_)) {
            sx.place[j] = Place::Lower;
            sx.x[j] = 0.0;
        }
    }
    sx.cost[..n].copy_from_slice(costs);
    sx.cost[n..].iter_mut().for_each(|c| *c = 0.0);
    sx.bland = false;
    sx.degenerate_run = 0;
    if !sx.refactor() {
        return Ok(finish(&sx, SolverStatus::NumericalFailure));
    }
    if let Some(status) = sx.run(opts.max_iterations) {
        return Ok(finish(&sx, status));
    }

    // snap basic values that drifted within tolerance onto their bounds
    let mut bound_violation: f64 = 0.0;
    for i in 0..m {
        let j = sx.basis[i];
        let v = sx.x[j];
        bound_violation = bound_violation.max(sx.lo[j] - v).max(v - sx.up[j]);
        sx.x[j] = v.clamp(sx.lo[j], sx.up[j]);
    }
    let mut out = finish(&sx, SolverStatus::Optimal);
    let gap = out.objective - sx.dual_objective();
    out.duality_gap = Some(gap);
    let feasible = bound_violation <= feas_tol && out.residual_l2 <= feas_tol;
    let tight = gap.abs() <= opts.tolerance_opt * (1.0 + out.objective.abs());
    if !(feasible && tight) {
        out.status = SolverStatus::NumericalFailure;
    }
    Ok(out)
}

fn residual(a: &DMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
    let ax = a * nalgebra::DVector::from_column_slice(x);
    ax.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}
