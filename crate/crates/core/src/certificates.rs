//! Dual certificates for exact recovery of binary signals.
//!
//! A vector `ν ∈ R^M` certifies the support `S` with margin `t > 0` when
//! `w = A^T ν` satisfies `w_i <= -t` on `S` and `w_i >= t` off `S`. Such a
//! certificate exists exactly when `ker(A) ∩ H_S^0 = {0}`, in which case the
//! only point of `[0,1]^N` with `Ax = A 1_S` is `1_S` itself, and likewise
//! for the complement.
//!
//! [`build_certificate`] evaluates the explicit candidate
//! `ν = -(ρ1 + Φβ₀ - M⁻¹⟨Φβ₀, 1⟩1)` with `ρ = -σ²/(4μ)` and target margin
//! `t = Mσ²/16`. [`search_certificate_lp`] finds the best normalized
//! certificate by linear programming, and [`search_kernel_witness`] solves
//! the alternative system for a nonzero kernel vector in the cone.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, LinearMap};
use crate::operators::MeasurementOperator;
use crate::signal::BinarySignal;
use crate::solvers::{lp_solve, SolverOptions, SolverStatus};

/// The sparser of `x₀` and `1 - x₀`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetrizedSignal {
    pub beta0: BinarySignal,
    /// true when `beta0 = 1 - x₀`
    pub flipped: bool,
}

/// Ties (`s = N/2`) keep `x₀`.
pub fn symmetrize(x0: &BinarySignal) -> SymmetrizedSignal {
    if x0.sparsity() <= x0.len() - x0.sparsity() {
        SymmetrizedSignal {
            beta0: x0.clone(),
            flipped: false,
        }
    } else {
        SymmetrizedSignal {
            beta0: x0.complement(),
            flipped: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    /// one entry per selected row; the negated explicit construction, so that
    /// `A*ν` lands in `H_S^t` for `S = supp β₀`
    pub nu: Vec<f64>,
    pub rho: f64,
    pub t_target: f64,
    /// `(A^T ν)_i` for `i` in `0..N`
    pub margins: Vec<f64>,
    /// the support the certificate is built for (`supp β₀`)
    pub support: BinarySignal,
    /// whether `support` is the complement of the signal's support
    pub flipped: bool,
    pub verified: bool,
    /// `(σ, μ)` of the operator, when built from one
    pub statistics: Option<(f64, f64)>,
}

/// Worst-case margins of a certificate against a support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginReport {
    pub verified: bool,
    /// `max_{i ∈ S} (A^T ν)_i`, if `S` is nonempty
    pub worst_in_support: Option<f64>,
    /// `min_{i ∉ S} (A^T ν)_i`, if the complement is nonempty
    pub worst_off_support: Option<f64>,
    /// the largest `t` with `A^T ν ∈ H_S^t`
    pub t_actual: f64,
}

/// Checks `margins ∈ H_S^t`.
pub fn margin_report(margins: &[f64], support: &BinarySignal, t: f64) -> Result<MarginReport> {
    check_len(support.len(), margins.len())?;
    let mask = support.mask();
    let mut worst_in: Option<f64> = None;
    let mut worst_off: Option<f64> = None;
    for (&w, &inside) in margins.iter().zip(&mask) {
        if inside {
            worst_in = Some(worst_in.map_or(w, |v| v.max(w)));
        } else {
            worst_off = Some(worst_off.map_or(w, |v| v.min(w)));
        }
    }
    let t_actual = match (worst_in, worst_off) {
        (Some(a), Some(b)) => (-a).min(b),
        (Some(a), None) => -a,
        (None, Some(b)) => b,
        (None, None) => f64::INFINITY,
    };
    let verified = t > 0.0 && t_actual >= t;
    Ok(MarginReport {
        verified,
        worst_in_support: worst_in,
        worst_off_support: worst_off,
        t_actual,
    })
}

impl DualCertificate {
    /// Wraps an arbitrary `ν`; margins are computed as `A^T ν` and verified
    /// against `support` at level `t_target`.
    pub fn from_nu<A: LinearMap + ?Sized>(
        a: &A,
        nu: Vec<f64>,
        t_target: f64,
        support: BinarySignal,
    ) -> Result<Self> {
        check_len(a.rows(), nu.len())?;
        check_len(a.cols(), support.len())?;
        let mut margins = vec![0.0; a.cols()];
        a.apply_adjoint_into(&nu, &mut margins);
        let verified = margin_report(&margins, &support, t_target)?.verified;
        Ok(Self {
            nu,
            rho: 0.0,
            t_target,
            margins,
            support,
            flipped: false,
            verified,
            statistics: None,
        })
    }

    pub fn nu_norm(&self) -> f64 {
        norm2(&self.nu)
    }
}

/// Builds the explicit certificate for `x₀` under `A = μ1 + Φ_Θ`.
///
/// Margins are verified on indices `0..N`; for Toeplitz operators these are
/// the coordinates the embedded circulant shares with `T`.
pub fn build_certificate(op: &MeasurementOperator, x0: &BinarySignal) -> Result<DualCertificate> {
    check_len(op.n(), x0.len())?;
    let (mu, sigma) = (op.mu(), op.sigma());
    if !(mu > 0.0 && sigma > 0.0) {
        return Err(Error::CertificateUndefined { mu, sigma });
    }
    let m = op.m();
    let sym = symmetrize(x0);
    let rho = -sigma * sigma / (4.0 * mu);
    let t_target = m as f64 * sigma * sigma / 16.0;

    let phi_beta = op.apply_centered(&sym.beta0.to_f64())?;
    let mean = if m == 0 {
        0.0
    } else {
        phi_beta.iter().sum::<f64>() / m as f64
    };
    // ⟨ρ1 + Φβ₀ - mean, Ae_i⟩ comes out >= t on supp β₀ and <= -t off it,
    // so the negation is the vector with A*ν in H_S^t
    let nu: Vec<f64> = phi_beta.iter().map(|v| -(rho + v - mean)).collect();
    let margins = op.apply_adjoint(&nu)?;
    let verified = margin_report(&margins, &sym.beta0, t_target)?.verified;
    Ok(DualCertificate {
        nu,
        rho,
        t_target,
        margins,
        support: sym.beta0,
        flipped: sym.flipped,
        verified,
        statistics: Some((sigma, mu)),
    })
}

/// Margin report of `cert` against `support` at the certificate's target.
pub fn verify_certificate(cert: &DualCertificate, support: &BinarySignal) -> Result<MarginReport> {
    margin_report(&cert.margins, support, cert.t_target)
}

/// The a-priori noise bound
/// `sqrt(9 (16σ²/μ² + min(s, N-s)) / (M σ²)) · η`.
pub fn noise_error_bound(s: usize, n: usize, m: usize, sigma: f64, mu: f64, eta: f64) -> Result<f64> {
    if m == 0 || !(sigma > 0.0) || !(mu > 0.0) {
        return Err(Error::invalid("noise bound needs M, sigma, mu > 0"));
    }
    if s > n {
        return Err(Error::invalid(format!("sparsity {s} exceeds dimension {n}")));
    }
    let k = s.min(n - s) as f64;
    let inner = 9.0 * (16.0 * sigma * sigma / (mu * mu) + k) / (m as f64 * sigma * sigma);
    Ok(inner.sqrt() * eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRadius {
    /// `2 r η / t_actual`
    pub radius: f64,
    /// `‖ν‖₂`
    pub r: f64,
    pub t_actual: f64,
    /// `Mσ²(σ²/(16μ²) + 2s)`, the high-probability bound on `‖ν‖₂²`
    pub apriori_r_squared: Option<f64>,
}

/// Error radius of box least squares under noise of norm `eta`, from a
/// verified certificate: `2‖ν‖₂η / t_actual`.
pub fn certified_noise_radius(cert: &DualCertificate, eta: f64) -> Result<NoiseRadius> {
    if !cert.verified {
        return Err(Error::UnverifiedCertificate);
    }
    let report = margin_report(&cert.margins, &cert.support, cert.t_target)?;
    if !(report.t_actual > 0.0) {
        return Err(Error::UnverifiedCertificate);
    }
    let r = cert.nu_norm();
    let apriori_r_squared = cert.statistics.map(|(sigma, mu)| {
        let m = cert.nu.len() as f64;
        let s = cert.support.sparsity() as f64;
        m * sigma * sigma * (sigma * sigma / (16.0 * mu * mu) + 2.0 * s)
    });
    Ok(NoiseRadius {
        radius: 2.0 * r * eta / report.t_actual,
        r,
        t_actual: report.t_actual,
        apriori_r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSearch {
    pub nu: Vec<f64>,
    pub t_best: f64,
}

/// Smallest margin accepted as a certificate by the LP search.
pub fn certificate_threshold(opts: &SolverOptions) -> f64 {
    100.0 * opts.tolerance_feas
}

/// Maximizes `t` subject to `A^T ν ∈ H_S^t` and `‖ν‖_∞ <= 1`.
///
/// Returns `None` when the optimum is not above [`certificate_threshold`].
pub fn search_certificate_lp(
    a: &DMatrix<f64>,
    support: &BinarySignal,
    opts: &SolverOptions,
) -> Result<Option<CertificateSearch>> {
    let (m, n) = (a.nrows(), a.ncols());
    check_len(n, support.len())?;
    let mask = support.mask();
    // variables: ν (m), t, slacks (n); row i: ±(A^T ν)_i + t + s_i = 0
    let cols = m + 1 + n;
    let mut lp = DMatrix::zeros(n, cols);
    for i in 0..n {
        let sign = if mask[i] { 1.0 } else { -1.0 };
        for k in 0..m {
            lp[(i, k)] = sign * a[(k, i)];
        }
        lp[(i, m)] = 1.0;
        lp[(i, m + 1 + i)] = 1.0;
    }
    let mut costs = vec![0.0; cols];
    costs[m] = -1.0;
    let mut lower = vec![0.0; cols];
    let mut upper = vec![f64::INFINITY; cols];
    lower[..m].iter_mut().for_each(|v| *v = -1.0);
    upper[..m].iter_mut().for_each(|v| *v = 1.0);

    let out = lp_solve(&costs, &lp, &vec![0.0; n], &lower, &upper, opts)?;
    if out.status != SolverStatus::Optimal {
        return Err(Error::invalid(format!(
            "certificate LP ended with status {}",
            out.status
        )));
    }
    let t_best = out.x_star[m];
    if t_best > certificate_threshold(opts) {
        Ok(Some(CertificateSearch {
            nu: out.x_star[..m].to_vec(),
            t_best,
        }))
    } else {
        Ok(None)
    }
}

/// Operator form of [`search_certificate_lp`].
pub fn search_certificate(
    op: &MeasurementOperator,
    support: &BinarySignal,
    opts: &SolverOptions,
) -> Result<Option<CertificateSearch>> {
    search_certificate_lp(&op.to_dense()?, support, opts)
}

/// Searches `d ∈ ker(A) ∩ H_S^0` with `‖d‖_∞ <= 1`, maximizing `‖d‖₁`.
///
/// Any nonzero such `d` rescales to objective at least 1, so the optimum is
/// either 0 (no witness, `None`) or at least 1.
pub fn search_kernel_witness(
    a: &DMatrix<f64>,
    support: &BinarySignal,
    opts: &SolverOptions,
) -> Result<Option<Vec<f64>>> {
    let (m, n) = (a.nrows(), a.ncols());
    check_len(n, support.len())?;
    let mask = support.mask();
    let mut costs = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        if mask[i] {
            costs[i] = 1.0;
            lower[i] = -1.0;
        } else {
            costs[i] = -1.0;
            upper[i] = 1.0;
        }
    }
    let out = lp_solve(&costs, a, &vec![0.0; m], &lower, &upper, opts)?;
    if out.status != SolverStatus::Optimal {
        return Err(Error::invalid(format!(
            "kernel witness LP ended with status {}",
            out.status
        )));
    }
    if -out.objective > 0.5 {
        Ok(Some(out.x_star))
    } else {
        Ok(None)
    }
}
