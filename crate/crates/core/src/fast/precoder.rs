//! Single-PU precoder step: the interference constraint is majorized by an
//! isotropic quadratic so every subproblem reduces to one eigendecomposition
//! plus scalar bisections on the multipliers.
//!
//! Precoders are handled as one wide `N_SA x (L d)` matrix `[F_1 … F_L]`.

use num_complex::Complex64;

use crate::convex::barrier::{QcqpProblem, QuadConstraint};
use crate::convex::precoder::{block_diag_repeat, interference_hessians, linear_terms, mse_constant, weighted_receive_hessian};
use crate::error::{Error, Result};
use crate::fast::bisect::bisect_decreasing;
use crate::linalg::{self, CMatrix, CVector, HermitianEig};
use crate::model::{EffectiveChannels, SystemParams, WmmseState};
use crate::scenario::ConfigViolation;

/// `[F_1 … F_L]`.
pub fn hstack(f: &[CMatrix]) -> CMatrix {
    let rows = f[0].nrows();
    let cols: usize = f.iter().map(|x| x.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut c = 0;
    for x in f {
        out.view_mut((0, c), (rows, x.ncols())).copy_from(x);
        c += x.ncols();
    }
    out
}

/// Inverse of [`hstack`] for equal block widths `d`.
pub fn hsplit(w: &CMatrix, d: usize) -> Vec<CMatrix> {
    (0..w.ncols() / d).map(|l| w.columns(l * d, d).into_owned()).collect()
}

fn re_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::inner(a, b).re
}

/// Precoder subproblem with one PU: minimize
/// `Tr(F^H X0 F) − 2 Re Tr(Y F) + c0` subject to `‖F‖² ≤ P_max` and
/// `Tr(F^H Xp F) ≤ Γ_p`.
#[derive(Debug, Clone)]
pub struct SinglePuPrecoderProblem {
    pub x0: CMatrix,
    pub x0_eig: HermitianEig,
    /// `[Y_1^H … Y_L^H]`.
    pub y_h: CMatrix,
    pub c0: f64,
    pub xp: CMatrix,
    pub lambda_p: f64,
    pub p_max: f64,
    pub gamma_p: f64,
    pub streams: usize,
}

impl SinglePuPrecoderProblem {
    pub fn new(eff: &EffectiveChannels, state: &WmmseState, params: &SystemParams) -> Result<Self> {
        if eff.pu.len() != 1 || params.caps.len() != 1 {
            return Err(Error::Config(vec![ConfigViolation {
                field: "num_pus".into(),
                message: format!("the closed-form precoder step needs exactly one PU, got {}", eff.pu.len()),
            }]));
        }
        let y: Vec<CMatrix> = linear_terms(eff, state, params).iter().map(|y| y.adjoint()).collect();
        Self::from_parts(
            weighted_receive_hessian(eff, state, params),
            hstack(&y),
            mse_constant(state, params),
            interference_hessians(eff).remove(0),
            params.p_max,
            params.caps[0],
            state.w[0].nrows(),
        )
    }

    pub fn from_parts(
        x0: CMatrix,
        y_h: CMatrix,
        c0: f64,
        xp: CMatrix,
        p_max: f64,
        gamma_p: f64,
        streams: usize,
    ) -> Result<Self> {
        let x0 = linalg::hermitian_part(&x0);
        let xp = linalg::hermitian_part(&xp);
        let x0_eig = linalg::hermitian_eig(&x0)?;
        let lambda_p = linalg::max_eigenvalue(&xp)?;
        Ok(Self { x0, x0_eig, y_h, c0, xp, lambda_p, p_max, gamma_p, streams })
    }

    pub fn objective(&self, f: &CMatrix) -> f64 {
        re_inner(f, &(&self.x0 * f)) - 2.0 * re_inner(&self.y_h, f) + self.c0
    }

    pub fn power(&self, f: &CMatrix) -> f64 {
        f.norm_squared()
    }

    pub fn interference(&self, f: &CMatrix) -> f64 {
        re_inner(f, &(&self.xp * f))
    }

    pub fn is_feasible(&self, f: &CMatrix, rel_tol: f64) -> bool {
        self.power(f) <= self.p_max * (1.0 + rel_tol) && self.interference(f) <= self.gamma_p * (1.0 + rel_tol)
    }

    /// Same problem as a stacked QCQP for the barrier solver.
    pub fn to_qcqp(&self) -> QcqpProblem {
        let blocks = self.y_h.ncols();
        let n = self.y_h.len();
        let z0 = CVector::zeros(n);
        QcqpProblem {
            a0: block_diag_repeat(&self.x0, blocks),
            b0: CVector::from_iterator(n, self.y_h.iter().copied()),
            c0: self.c0,
            constraints: vec![
                QuadConstraint { a: CMatrix::identity(n, n), b: z0.clone(), r: self.p_max },
                QuadConstraint { a: block_diag_repeat(&self.xp, blocks), b: z0, r: self.gamma_p },
            ],
            unit_box: false,
        }
    }

    /// Relative KKT residual of the original problem at `f` with power
    /// multiplier `lambda` and interference multiplier `mu`.
    pub fn kkt_residual(&self, f: &CMatrix, lambda: f64, mu: f64) -> f64 {
        let x0f = &self.x0 * f;
        let xpf = &self.xp * f;
        let stat = &x0f - &self.y_h + f * Complex64::new(lambda, 0.0) + &xpf * Complex64::new(mu, 0.0);
        let scale = (x0f.norm() + self.y_h.norm() + lambda * f.norm() + mu * xpf.norm()).max(f64::MIN_POSITIVE);
        let power = self.power(f);
        let it = self.interference(f);
        let mut r = stat.norm() / scale;
        if lambda > 0.0 {
            r = r.max((self.p_max - power).abs() / self.p_max);
        }
        if mu > 0.0 {
            r = r.max((self.gamma_p - it).abs() / self.gamma_p);
        }
        r.max((power - self.p_max).max(0.0) / self.p_max).max((it - self.gamma_p).max(0.0) / self.gamma_p)
    }

    /// Majorized subproblem around the reference point `f_ref`.
    pub fn majorize(&self, f_ref: &CMatrix) -> MajorizedPrecoderData<'_> {
        let a = &f_ref.scale(self.lambda_p) - &self.xp * f_ref;
        let qh = self.x0_eig.vectors.adjoint();
        let gamma_tilde = self.gamma_p - re_inner(f_ref, &a);
        MajorizedPrecoderData {
            qh_yh: &qh * &self.y_h,
            qh_a: &qh * &a,
            gamma_arc: self.lambda_p * self.p_max - gamma_tilde,
            gamma_tilde,
            f_ref: f_ref.clone(),
            a,
            problem: self,
        }
    }
}

/// Which branch produced a majorized step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderCase {
    /// Power budget inactive.
    PowerSlack,
    /// Power budget active, multiplier from the closed-form μ(λ).
    PowerActive,
    /// Power budget active, nested bisection on both multipliers.
    PowerActiveNested,
}

#[derive(Debug, Clone)]
pub struct MajorizedStep {
    pub f: CMatrix,
    /// Multiplier of the power budget.
    pub lambda: f64,
    /// Multiplier of the (majorized) interference constraint.
    pub mu: f64,
    pub case: PrecoderCase,
}

/// Majorized precoder subproblem at a reference point `F_ref`.
///
/// The interference constraint is replaced by
/// `J(F) = λ_p ‖F‖² − 2 Re⟨A, F⟩ ≤ Γ̃_p` with `A = (λ_p I − X_p) F_ref`.
#[derive(Debug, Clone)]
pub struct MajorizedPrecoderData<'a> {
    pub problem: &'a SinglePuPrecoderProblem,
    pub f_ref: CMatrix,
    pub a: CMatrix,
    pub gamma_tilde: f64,
    /// `λ_p P_max − Γ̃_p`.
    pub gamma_arc: f64,
    qh_yh: CMatrix,
    qh_a: CMatrix,
}

impl MajorizedPrecoderData<'_> {
    /// `Q diag((Λ + s)^†) (Q^H Y^H + μ Q^H A)`.
    fn shifted_solve(&self, shift: f64, mu: f64) -> CMatrix {
        let eig = &self.problem.x0_eig;
        let cut = linalg::RANK_TOL * (eig.max_value() + shift).max(f64::MIN_POSITIVE);
        let mut m = &self.qh_yh + &self.qh_a * Complex64::new(mu, 0.0);
        for i in 0..eig.dim() {
            let v = eig.values[i] + shift;
            let s = if v > cut { 1.0 / v } else { 0.0 };
            m.row_mut(i).iter_mut().for_each(|x| *x *= s);
        }
        &eig.vectors * m
    }

    /// `F(μ) = (X0 + μ λ_p I)^† (Y^H + μ A)`.
    pub fn case1_precoder(&self, mu: f64) -> CMatrix {
        self.shifted_solve(mu * self.problem.lambda_p, mu)
    }

    /// `λ_p ‖F‖² − 2 Re⟨A, F⟩`.
    pub fn j_of(&self, f: &CMatrix) -> f64 {
        self.problem.lambda_p * f.norm_squared() - 2.0 * re_inner(&self.a, f)
    }

    pub fn j_of_mu(&self, mu: f64) -> f64 {
        self.j_of(&self.case1_precoder(mu))
    }

    /// Majorant of the interference, tight at `F_ref`.
    pub fn surrogate_interference(&self, f: &CMatrix) -> f64 {
        self.j_of(f) + re_inner(&self.f_ref, &self.a)
    }

    /// Smallest μ with `J(μ) ≤ Γ̃_p`.
    pub fn bisect_case1(&self, eps: f64) -> Result<(f64, CMatrix)> {
        let mu = bisect_decreasing(|m| self.j_of_mu(m), self.gamma_tilde, eps)?;
        Ok((mu, self.case1_precoder(mu)))
    }

    /// `F(μ; λ) = (X0 + λ I)^† (Y^H + μ A)`.
    pub fn case2_precoder(&self, mu: f64, lambda: f64) -> CMatrix {
        self.shifted_solve(lambda, mu)
    }

    /// `2 Re⟨A, F⟩`.
    pub fn h_of(&self, f: &CMatrix) -> f64 {
        2.0 * re_inner(&self.a, f)
    }

    /// Closed-form μ for a given λ in the power-active branch.
    pub fn mu_case2(&self, lambda: f64) -> Result<f64> {
        let h0 = self.h_of(&self.case2_precoder(0.0, lambda));
        if h0 >= self.gamma_arc {
            return Ok(0.0);
        }
        let p = self.problem;
        if self.a.norm() <= 1e-12 * p.lambda_p * self.f_ref.norm() || self.a.norm() == 0.0 {
            return Err(Error::Numerical("interference majorant is isotropic; closed-form multiplier undefined".into()));
        }
        // 2 Σ Tr(A^H (X0 + λI)^† A) in the eigenbasis.
        let eig = &p.x0_eig;
        let cut = linalg::RANK_TOL * (eig.max_value() + lambda).max(f64::MIN_POSITIVE);
        let mut denom = 0.0;
        for i in 0..eig.dim() {
            let v = eig.values[i] + lambda;
            if v > cut {
                denom += self.qh_a.row(i).norm_squared() / v;
            }
        }
        denom *= 2.0;
        if !(denom > 1e-300) {
            return Err(Error::Numerical("closed-form multiplier has a vanishing denominator".into()));
        }
        let mu = (self.gamma_arc - h0) / denom;
        if mu < 0.0 {
            log::warn!("negative closed-form multiplier {mu:e} clamped to zero");
        }
        Ok(mu.max(0.0))
    }

    /// `‖F(μ(λ); λ)‖²`.
    pub fn power_case2(&self, lambda: f64) -> Result<f64> {
        Ok(self.case2_precoder(self.mu_case2(lambda)?, lambda).norm_squared())
    }

    /// Smallest λ with `P(λ) ≤ P_max`; returns `(λ, μ, F)`.
    pub fn bisect_case2(&self, eps: f64) -> Result<(f64, f64, CMatrix)> {
        let mut failure = None;
        let lambda = bisect_decreasing(
            |l| match self.power_case2(l) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            self.problem.p_max,
            eps,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let lambda = lambda?;
        let mu = self.mu_case2(lambda)?;
        Ok((lambda, mu, self.case2_precoder(mu, lambda)))
    }

    /// `(X0 + (λ + μ λ_p) I)^† (Y^H + μ A)`.
    fn joint_precoder(&self, lambda: f64, mu: f64) -> CMatrix {
        self.shifted_solve(lambda + mu * self.problem.lambda_p, mu)
    }

    fn inner_mu(&self, lambda: f64, eps: f64) -> Result<f64> {
        bisect_decreasing(|m| self.j_of(&self.joint_precoder(lambda, m)), self.gamma_tilde, eps)
    }

    /// Power-active branch by nested bisection on the power multiplier λ
    /// (outer) and the interference multiplier μ (inner).
    pub fn nested_power_active(&self, eps: f64) -> Result<(f64, f64, CMatrix)> {
        let mut failure = None;
        let lambda = bisect_decreasing(
            |l| match self.inner_mu(l, eps) {
                Ok(mu) => self.joint_precoder(l, mu).norm_squared(),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            self.problem.p_max,
            eps,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let lambda = lambda?;
        let mu = self.inner_mu(lambda, eps)?;
        Ok((lambda, mu, self.joint_precoder(lambda, mu)))
    }

    fn satisfies(&self, f: &CMatrix) -> bool {
        let tol = 1e-9;
        f.norm_squared() <= self.problem.p_max * (1.0 + tol)
            && self.j_of(f) <= self.gamma_tilde + tol * self.problem.gamma_p
    }

    /// Solves the majorized subproblem: power-slack branch first, then the
    /// power-active closed form, then nested bisection.
    pub fn solve(&self, eps: f64) -> Result<MajorizedStep> {
        let (mu1, f1) = self.bisect_case1(eps)?;
        if f1.norm_squared() <= self.problem.p_max {
            return Ok(MajorizedStep { f: f1, lambda: 0.0, mu: mu1, case: PrecoderCase::PowerSlack });
        }
        match self.bisect_case2(eps) {
            Ok((lp, mu, f)) => {
                let lambda = lp - mu * self.problem.lambda_p;
                if lambda >= -1e-9 * lp.max(1.0) && self.satisfies(&f) {
                    return Ok(MajorizedStep { f, lambda: lambda.max(0.0), mu, case: PrecoderCase::PowerActive });
                }
                log::debug!("closed-form power-active branch rejected (power multiplier {lambda:e})");
            }
            Err(e) => log::debug!("closed-form power-active branch failed: {e}"),
        }
        let (lambda, mu, f) = self.nested_power_active(eps)?;
        Ok(MajorizedStep { f, lambda, mu, case: PrecoderCase::PowerActiveNested })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastPrecoderSettings {
    /// Absolute tolerance on every multiplier bisection.
    pub bisection_eps: f64,
    /// Stop once a step moves the precoder by at most `step_tol · ‖F‖`.
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for FastPrecoderSettings {
    fn default() -> Self {
        Self { bisection_eps: 1e-8, step_tol: 1e-9, max_iter: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct FastPrecoderReport {
    pub f: Vec<CMatrix>,
    /// Objective at the start and after every accepted step.
    pub objectives: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub kkt_residual: f64,
    pub cases: Vec<PrecoderCase>,
}

/// Successive majorization from the feasible starting point `f0`.
pub fn sca_precoder_solve(
    problem: &SinglePuPrecoderProblem,
    f0: &[CMatrix],
    settings: &FastPrecoderSettings,
) -> Result<FastPrecoderReport> {
    let mut f = hstack(f0);
    if !problem.is_feasible(&f, 1e-9) {
        return Err(Error::Infeasible(format!(
            "starting precoder violates the budget (power {:e} / {:e} W, interference {:e} / {:e} W)",
            problem.power(&f),
            problem.p_max,
            problem.interference(&f),
            problem.gamma_p
        )));
    }
    let mut obj = problem.objective(&f);
    let mut objectives = vec![obj];
    let mut cases = Vec::new();
    let (mut lambda, mut mu) = (0.0, 0.0);
    for _ in 0..settings.max_iter {
        let data = problem.majorize(&f);
        let step = data.solve(settings.bisection_eps)?;
        let next = problem.objective(&step.f);
        if next > obj || !problem.is_feasible(&step.f, 1e-9) {
            break;
        }
        let moved = (&step.f - &f).norm();
        f = step.f;
        obj = next;
        lambda = step.lambda;
        mu = step.mu;
        objectives.push(obj);
        cases.push(step.case);
        if moved <= settings.step_tol * f.norm() {
            break;
        }
    }
    Ok(FastPrecoderReport {
        kkt_residual: problem.kkt_residual(&f, lambda, mu),
        f: hsplit(&f, problem.streams),
        objectives,
        lambda,
        mu,
        cases,
    })
}

/// Convenience wrapper building the problem from a WMMSE state.
pub fn fast_precoder_step(
    eff: &EffectiveChannels,
    state: &WmmseState,
    params: &SystemParams,
    current: &[CMatrix],
    settings: &FastPrecoderSettings,
) -> Result<FastPrecoderReport> {
    let problem = SinglePuPrecoderProblem::new(eff, state, params)?;
    sca_precoder_solve(&problem, current, settings)
}

/// Weighted MSE of `f` (same as [`model::weighted_mse`]).
pub fn objective_of(problem: &SinglePuPrecoderProblem, f: &[CMatrix]) -> f64 {
    problem.objective(&hstack(f))
}
