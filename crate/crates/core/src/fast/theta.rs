//! Single-PU reflection step: both quadratics are majorized by isotropic ones,
//! which turns every subproblem into a phase alignment `θ(α) = e^{j arg(q0 + α qp)}`
//! with a scalar price α found by bisection.

use num_complex::Complex64;

use crate::convex::theta::ThetaProblemData;
use crate::error::{Error, Result};
use crate::fast::bisect::bisect_increasing;
use crate::linalg::{self, CMatrix, CVector};
use crate::model;

/// Majorized data at a reference point θn.
#[derive(Debug, Clone)]
pub struct ThetaMajorizedData {
    pub lambda0: f64,
    pub lambda_p: f64,
    pub q0: CVector,
    pub qp: CVector,
    /// Required value of `Re(θ^H qp)`.
    pub target: f64,
}

impl ThetaMajorizedData {
    /// Builds `q0 = (λ0 I − Υ0) θn − conj(d0)`, `qp = (λp I − Υp) θn − conj(dp)`
    /// and the threshold `[M λp + θn^H (λp I − Υp) θn − Γ̃p] / 2`.
    pub fn new(data: &ThetaProblemData, lambda0: f64, lambda_p: f64, theta_n: &CVector) -> Self {
        let m = theta_n.len();
        let shifted = |lam: f64, u: &CMatrix| -> CVector { theta_n * Complex64::new(lam, 0.0) - u * theta_n };
        let t0 = shifted(lambda0, &data.upsilon0);
        let tp = shifted(lambda_p, &data.upsilon[0]);
        let target = 0.5 * (m as f64 * lambda_p + theta_n.dotc(&tp).re - data.gamma_tilde[0]);
        Self { lambda0, lambda_p, q0: t0 - data.d0.conjugate(), qp: tp - data.d[0].conjugate(), target }
    }

    /// `Re(θ^H q0)`, the quantity maximized.
    pub fn score(&self, theta: &CVector) -> f64 {
        theta.dotc(&self.q0).re
    }

    /// `g(α) = Re(θ(α)^H qp)`.
    pub fn g(&self, alpha: f64) -> f64 {
        theta_price_point(&self.q0, &self.qp, alpha).dotc(&self.qp).re
    }

    /// Largest attainable `Re(θ^H qp)` over the unit torus.
    pub fn g_sup(&self) -> f64 {
        self.qp.iter().map(|v| v.norm()).sum()
    }
}

/// Isotropic majorant of `θ^H Υ θ + 2 Re(θ^H conj(d))` around `θn`, valid
/// for `λ ≥ λ_max(Υ)`:
/// `λ ‖θ‖² − 2 Re(θ^H (λI − Υ) θn) + θn^H (λI − Υ) θn + 2 Re(θ^H conj(d))`.
/// On the unit torus it equals `const − 2 Re(θ^H q)` with the `q0`/`qp` of
/// [`ThetaMajorizedData`].
pub fn isotropic_majorant(upsilon: &CMatrix, d: &CVector, lambda: f64, theta_n: &CVector, theta: &CVector) -> f64 {
    let t = theta_n * Complex64::new(lambda, 0.0) - upsilon * theta_n;
    lambda * theta.norm_squared() - 2.0 * theta.dotc(&t).re + theta_n.dotc(&t).re + 2.0 * theta.dotc(&d.conjugate()).re
}

/// `e^{j arg(q0 + α qp)}` (phase 0 where the sum vanishes).
pub fn theta_price_point(q0: &CVector, qp: &CVector, alpha: f64) -> CVector {
    linalg::unit_phase(&(q0 + qp * Complex64::new(alpha, 0.0)))
}

/// Price α̂ and the aligned point. α̂ = 0 when the constraint already holds at
/// α = 0; otherwise the returned point is the upper end of the final bracket
/// and satisfies `g(α̂) ≥ target`.
pub fn bisect_alpha(data: &ThetaMajorizedData, eps: f64) -> Result<(f64, CVector)> {
    if data.g_sup() < data.target {
        return Err(Error::ThetaStepInfeasible(format!(
            "interference target {:e} exceeds the aligned bound {:e}",
            data.target,
            data.g_sup()
        )));
    }
    let alpha = bisect_increasing(|a| data.g(a), data.target, eps)
        .map_err(|e| Error::ThetaStepInfeasible(format!("price search failed: {e}")))?;
    Ok((alpha, theta_price_point(&data.q0, &data.qp, alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastThetaSettings {
    pub bisection_eps: f64,
    /// Stop once the objective moves by at most `rel_tol · max(1, |objective|)`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for FastThetaSettings {
    fn default() -> Self {
        Self { bisection_eps: 1e-8, rel_tol: 1e-10, max_iter: 1000 }
    }
}

#[derive(Debug, Clone)]
pub struct FastThetaReport {
    pub theta: CVector,
    /// Weighted MSE at the start and after every accepted step.
    pub objectives: Vec<f64>,
    pub alphas: Vec<f64>,
}

/// Majorization-minimization over unit-modulus θ from a feasible unit-modulus
/// `theta0`.
pub fn sca_theta_solve_single(
    data: &ThetaProblemData,
    theta0: &CVector,
    settings: &FastThetaSettings,
) -> Result<FastThetaReport> {
    if data.num_pus() != 1 {
        return Err(Error::Dimension(format!("closed-form reflection step needs one PU, got {}", data.num_pus())));
    }
    if model::max_modulus_error(theta0) > 1e-9 || !data.is_feasible(theta0) {
        return Err(Error::ThetaStepInfeasible("starting reflection vector is not unit-modulus and feasible".into()));
    }
    let lambda0 = linalg::max_eigenvalue(&data.upsilon0)?;
    let lambda_p = linalg::max_eigenvalue(&data.upsilon[0])?;
    let mut theta = theta0.clone();
    let mut obj = data.objective(&theta);
    let mut objectives = vec![obj];
    let mut alphas = Vec::new();
    for _ in 0..settings.max_iter {
        let maj = ThetaMajorizedData::new(data, lambda0, lambda_p, &theta);
        let (alpha, next_theta) = bisect_alpha(&maj, settings.bisection_eps)?;
        let next = data.objective(&next_theta);
        if next > obj || !data.is_feasible(&next_theta) {
            break;
        }
        let delta = obj - next;
        theta = next_theta;
        obj = next;
        objectives.push(obj);
        alphas.push(alpha);
        if delta <= settings.rel_tol * obj.abs().max(1.0) {
            break;
        }
    }
    Ok(FastThetaReport { theta, objectives, alphas })
}
