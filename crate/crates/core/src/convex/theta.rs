//! Reflection block: quadratic form of the weighted MSE in θ, the SCA inner
//! loop on the penalized relaxation and the penalty escalation with a final
//! unit-modulus commit.

use num_complex::Complex64;

use crate::convex::barrier::{quad_form, solve_qcqp_barrier, BarrierSettings, QcqpProblem, QuadConstraint};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::model::{self, SystemParams, WmmseState};
use crate::scenario::ChannelSet;

/// Quadratic data of the θ subproblem.
///
/// The weighted MSE is `θ^H Υ0 θ + 2 Re(θ^H conj(d0)) + const0` and the
/// interference at PU `k` is `θ^H Υk θ + 2 Re(θ^H conj(dk)) + direct_k`.
#[derive(Debug, Clone)]
pub struct ThetaProblemData {
    pub upsilon0: CMatrix,
    pub d0: CVector,
    pub const0: f64,
    pub upsilon: Vec<CMatrix>,
    pub d: Vec<CVector>,
    /// Interference through the direct link alone, `Tr(H_sk Q H_sk^H)`.
    pub direct: Vec<f64>,
    /// `Γ_k − direct_k`.
    pub gamma_tilde: Vec<f64>,
}

fn diag_of(a: &CMatrix) -> CVector {
    CVector::from_fn(a.nrows().min(a.ncols()), |i, _| a[(i, i)])
}

pub fn build_theta_problem(
    ch: &ChannelSet,
    f: &[CMatrix],
    state: &WmmseState,
    params: &SystemParams,
) -> ThetaProblemData {
    let m = ch.num_elements();
    let q = model::transmit_covariance(f);
    let hsr = &ch.h_sap_irs;
    let c = linalg::hermitian_part(&(hsr * &q * hsr.adjoint()));
    let hsr_q = hsr * &q;

    let mut b0 = CMatrix::zeros(m, m);
    let mut d0m = CMatrix::zeros(m, m);
    let mut const0 = 0.0;
    for l in 0..f.len() {
        let (hs, hr) = (&ch.h_sap_su[l], &ch.h_irs_su[l]);
        let w_l = Complex64::new(params.weights[l], 0.0);
        let p = &state.u[l] * &state.w[l] * state.u[l].adjoint() * w_l;
        b0 += hr.adjoint() * &p * hr;
        let wuh = &state.w[l] * state.u[l].adjoint() * w_l;
        d0m += &hsr_q * hs.adjoint() * &p * hr - hsr * &f[l] * &wuh * hr;
        const0 += linalg::trace(&(&p * hs * &q * hs.adjoint())).re - 2.0 * linalg::trace(&(&wuh * hs * &f[l])).re;
    }
    let st_const: f64 = (0..f.len())
        .map(|l| {
            let (w, u) = (&state.w[l], &state.u[l]);
            params.weights[l] * (linalg::trace(w).re + params.noise[l] * linalg::trace(&(w * u.adjoint() * u)).re)
        })
        .sum();

    let mut upsilon = Vec::new();
    let mut d = Vec::new();
    let mut direct = Vec::new();
    let mut gamma_tilde = Vec::new();
    for k in 0..ch.num_pus() {
        let (hs, hr) = (&ch.h_sap_pu[k], &ch.h_irs_pu[k]);
        let bk = hr.adjoint() * hr;
        upsilon.push(linalg::hermitian_part(&linalg::hadamard_transposed(&bk, &c)));
        d.push(diag_of(&(&hsr_q * hs.adjoint() * hr)));
        let dk = linalg::trace(&(hs * &q * hs.adjoint())).re;
        direct.push(dk);
        gamma_tilde.push(params.caps[k] - dk);
    }

    ThetaProblemData {
        upsilon0: linalg::hermitian_part(&linalg::hadamard_transposed(&b0, &c)),
        d0: diag_of(&d0m),
        const0: const0 + st_const,
        upsilon,
        d,
        direct,
        gamma_tilde,
    }
}

impl ThetaProblemData {
    pub fn num_elements(&self) -> usize {
        self.d0.len()
    }

    pub fn num_pus(&self) -> usize {
        self.upsilon.len()
    }

    /// `θ^H Υ0 θ + 2 Re(θ^H conj(d0))`: the weighted MSE without its
    /// θ-independent part.
    pub fn quadratic_objective(&self, theta: &CVector) -> f64 {
        quad_form(&self.upsilon0, theta) + 2.0 * theta.dotc(&self.d0.conjugate()).re
    }

    /// Weighted MSE `Σ_l ω_l Tr(W_l E_l)` at this θ.
    pub fn objective(&self, theta: &CVector) -> f64 {
        self.quadratic_objective(theta) + self.const0
    }

    /// Interference at PU `k` (W).
    pub fn interference(&self, k: usize, theta: &CVector) -> f64 {
        quad_form(&self.upsilon[k], theta) + 2.0 * theta.dotc(&self.d[k].conjugate()).re + self.direct[k]
    }

    /// Every interference cap holds (no tolerance).
    pub fn is_feasible(&self, theta: &CVector) -> bool {
        (0..self.num_pus()).all(|k| self.interference(k, theta) - self.direct[k] <= self.gamma_tilde[k])
    }

    fn constraints(&self) -> Vec<QuadConstraint> {
        (0..self.num_pus())
            .map(|k| QuadConstraint { a: self.upsilon[k].clone(), b: self.d[k].conjugate(), r: self.gamma_tilde[k] })
            .collect()
    }

    /// Relaxed (`|θ_m| ≤ 1`) subproblem with the concave penalty `−λ θ^H θ`
    /// linearized at `anchor`.
    pub fn linearized_subproblem(&self, lambda: f64, anchor: &CVector) -> QcqpProblem {
        QcqpProblem {
            a0: self.upsilon0.clone(),
            b0: -self.d0.conjugate() + anchor * Complex64::new(lambda, 0.0),
            c0: 0.0,
            constraints: self.constraints(),
            unit_box: true,
        }
    }

    /// `θ^H Υ0 θ + 2 Re(θ^H conj(d0)) − λ θ^H θ`.
    pub fn penalized_objective(&self, lambda: f64, theta: &CVector) -> f64 {
        self.quadratic_objective(theta) - lambda * theta.norm_squared()
    }

    fn strictly_interior(&self, theta: &CVector) -> bool {
        theta.iter().all(|t| t.norm_sqr() < 1.0)
            && (0..self.num_pus())
                .all(|k| self.interference(k, theta) - self.direct[k] < self.gamma_tilde[k])
    }

    /// Shrinks `theta` toward the origin until it is strictly inside every
    /// constraint.
    pub fn strictly_feasible_start(&self, theta: &CVector) -> Result<CVector> {
        if let Some(k) = (0..self.num_pus()).find(|&k| self.gamma_tilde[k] <= 0.0) {
            return Err(Error::ThetaStepInfeasible(format!(
                "direct-link interference {:e} W at PU {k} already exceeds its cap",
                self.direct[k]
            )));
        }
        let mut cand = theta * Complex64::new(0.99, 0.0);
        for _ in 0..60 {
            if self.strictly_interior(&cand) {
                return Ok(cand);
            }
            cand *= Complex64::new(0.5, 0.0);
        }
        Ok(CVector::zeros(theta.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySettings {
    /// SCA stops once the penalized objective moves by at most
    /// `sca_rel_tol · max(1, |objective|)`.
    pub sca_rel_tol: f64,
    pub sca_max_iter: usize,
    pub lambda_growth: f64,
    pub max_escalations: usize,
    /// Target for `Σ_m (|θ_m| − 1)²`.
    pub modulus_tol: f64,
    /// Halvings of the phase step tried when the snapped point is infeasible.
    pub snap_backtracks: usize,
    pub barrier: BarrierSettings,
}

impl Default for PenaltySettings {
    fn default() -> Self {
        Self {
            sca_rel_tol: 1e-7,
            sca_max_iter: 100,
            lambda_growth: 10.0,
            max_escalations: 8,
            modulus_tol: 1e-6,
            snap_backtracks: 10,
            barrier: BarrierSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaTrace {
    pub theta: CVector,
    /// Penalized objective after each accepted step, starting point first.
    pub objectives: Vec<f64>,
}

/// Successive convex approximation of the penalized relaxation at fixed λ.
pub fn sca_theta_inner(
    data: &ThetaProblemData,
    lambda: f64,
    start: &CVector,
    settings: &PenaltySettings,
) -> Result<ScaTrace> {
    let mut theta = start.clone();
    let mut obj = data.penalized_objective(lambda, &theta);
    let mut objectives = vec![obj];
    for _ in 0..settings.sca_max_iter {
        let sub = data.linearized_subproblem(lambda, &theta);
        let sol = solve_qcqp_barrier(&sub, Some(&theta), &settings.barrier)?;
        let next = data.penalized_objective(lambda, &sol.z);
        if next > obj {
            break;
        }
        let delta = obj - next;
        theta = sol.z;
        obj = next;
        objectives.push(obj);
        if delta <= settings.sca_rel_tol * obj.abs().max(1.0) {
            break;
        }
    }
    Ok(ScaTrace { theta, objectives })
}

#[derive(Debug, Clone)]
pub struct PenaltyOutcome {
    /// Committed unit-modulus θ (or the input when nothing better was found).
    pub theta: CVector,
    pub objective: f64,
    /// Modulus residual after each penalty round.
    pub residuals: Vec<f64>,
    pub final_lambda: f64,
    pub sca_iterations: usize,
    /// The snapped relaxation was infeasible and a shorter phase step was
    /// used (or the input kept).
    pub snap_backtracked: bool,
}

/// Penalty escalation on the relaxed problem, then a unit-modulus commit that
/// never returns something worse than `theta0`.
pub fn penalty_theta_solve(data: &ThetaProblemData, theta0: &CVector, settings: &PenaltySettings) -> Result<PenaltyOutcome> {
    let mut theta = data.strictly_feasible_start(theta0)?;
    let lmax = linalg::max_eigenvalue(&data.upsilon0)?;
    let mut lambda = if lmax > 0.0 { 10.0 * lmax } else { 1.0 };
    let mut residuals = Vec::new();
    let mut sca_iterations = 0;
    for round in 0..=settings.max_escalations {
        let tr = sca_theta_inner(data, lambda, &theta, settings)?;
        sca_iterations += tr.objectives.len() - 1;
        theta = tr.theta;
        let res = model::modulus_residual(&theta);
        if residuals.last().is_some_and(|&prev: &f64| res > prev * (1.0 + 1e-9)) {
            log::debug!("modulus residual rose from {:e} to {res:e} in penalty round {round}", residuals.last().unwrap());
        }
        residuals.push(res);
        if res <= settings.modulus_tol || round == settings.max_escalations {
            break;
        }
        lambda *= settings.lambda_growth;
    }

    let obj0 = data.objective(theta0);
    let snapped = linalg::unit_phase(&theta);
    let mut best = (theta0.clone(), obj0);
    let mut backtracked = false;
    if data.is_feasible(&snapped) {
        let o = data.objective(&snapped);
        if o <= best.1 {
            best = (snapped, o);
        }
    } else {
        backtracked = true;
        let phase0: Vec<f64> = theta0.iter().map(|t| if t.norm() > 0.0 { t.arg() } else { 0.0 }).collect();
        let step: Vec<f64> = snapped
            .iter()
            .zip(&phase0)
            .map(|(s, p0)| {
                let dphi = s.arg() - p0;
                dphi - (2.0 * std::f64::consts::PI) * (dphi / (2.0 * std::f64::consts::PI)).round()
            })
            .collect();
        let mut t = 0.5;
        for _ in 0..settings.snap_backtracks {
            let cand = CVector::from_fn(theta0.len(), |i, _| Complex64::from_polar(1.0, phase0[i] + t * step[i]));
            if data.is_feasible(&cand) {
                let o = data.objective(&cand);
                if o <= best.1 {
                    best = (cand, o);
                    break;
                }
            }
            t *= 0.5;
        }
    }
    Ok(PenaltyOutcome {
        theta: best.0,
        objective: best.1,
        residuals,
        final_lambda: lambda,
        sca_iterations,
        snap_backtracked: backtracked,
    })
}
