//! Precoder block of the alternating loop as a QCQP over all SU precoders.

use num_complex::Complex64;

use crate::convex::barrier::{solve_qcqp_barrier, BarrierSettings, QcqpProblem, QcqpSolution, QuadConstraint};
use crate::error::Result;
use crate::linalg::{self, CMatrix, CVector};
use crate::model::{self, EffectiveChannels, SystemParams, WmmseState};

/// `Σ_l ω_l G_l^H U_l W_l U_l^H G_l`.
pub fn weighted_receive_hessian(eff: &EffectiveChannels, state: &WmmseState, params: &SystemParams) -> CMatrix {
    let n_sa = eff.su[0].ncols();
    let mut x0 = CMatrix::zeros(n_sa, n_sa);
    for (l, g) in eff.su.iter().enumerate() {
        let ugh = state.u[l].adjoint() * g;
        x0 += ugh.adjoint() * &state.w[l] * &ugh * Complex64::new(params.weights[l], 0.0);
    }
    linalg::hermitian_part(&x0)
}

/// `Y_l = ω_l W_l U_l^H G_l`, one `d x N_SA` matrix per SU.
pub fn linear_terms(eff: &EffectiveChannels, state: &WmmseState, params: &SystemParams) -> Vec<CMatrix> {
    eff.su
        .iter()
        .enumerate()
        .map(|(l, g)| &state.w[l] * state.u[l].adjoint() * g * Complex64::new(params.weights[l], 0.0))
        .collect()
}

/// `Σ_l ω_l (Tr W_l + σ_l² Tr(W_l U_l^H U_l))`, the part of the weighted MSE
/// that does not depend on the precoders.
pub fn mse_constant(state: &WmmseState, params: &SystemParams) -> f64 {
    (0..state.w.len())
        .map(|l| {
            let w = &state.w[l];
            let u = &state.u[l];
            params.weights[l] * (linalg::trace(w).re + params.noise[l] * linalg::trace(&(w * u.adjoint() * u)).re)
        })
        .sum()
}

/// `X_k = G_pk^H G_pk` for every PU.
pub fn interference_hessians(eff: &EffectiveChannels) -> Vec<CMatrix> {
    eff.pu.iter().map(|g| linalg::hermitian_part(&(g.adjoint() * g))).collect()
}

/// Block-diagonal matrix with `times` copies of `x`.
pub fn block_diag_repeat(x: &CMatrix, times: usize) -> CMatrix {
    let n = x.nrows();
    let mut out = CMatrix::zeros(n * times, n * times);
    for b in 0..times {
        out.view_mut((b * n, b * n), (n, n)).copy_from(x);
    }
    out
}

/// Precoder QCQP over the stacked precoder vector. Its objective equals
/// `Σ_l ω_l Tr(W_l E_l)` exactly; constraint 0 is the power budget and
/// constraint `k + 1` the interference cap of PU `k`.
pub fn build_precoder_qcqp(eff: &EffectiveChannels, state: &WmmseState, params: &SystemParams) -> QcqpProblem {
    let num_sus = eff.su.len();
    let d = state.w[0].nrows();
    let n_sa = eff.su[0].ncols();
    let blocks = num_sus * d;
    let n = n_sa * blocks;

    let a0 = block_diag_repeat(&weighted_receive_hessian(eff, state, params), blocks);
    let b0 = model::stack_precoders(&linear_terms(eff, state, params).iter().map(|y| y.adjoint()).collect::<Vec<_>>());
    let mut constraints = vec![QuadConstraint { a: CMatrix::identity(n, n), b: CVector::zeros(n), r: params.p_max }];
    for (xk, cap) in interference_hessians(eff).iter().zip(&params.caps) {
        constraints.push(QuadConstraint { a: block_diag_repeat(xk, blocks), b: CVector::zeros(n), r: *cap });
    }
    QcqpProblem { a0, b0, c0: mse_constant(state, params), constraints, unit_box: false }
}

/// Solves the precoder QCQP, warm-started at `current` when it is strictly
/// feasible.
pub fn solve_precoder_step(
    eff: &EffectiveChannels,
    state: &WmmseState,
    params: &SystemParams,
    current: &[CMatrix],
    settings: &BarrierSettings,
) -> Result<(Vec<CMatrix>, QcqpSolution)> {
    let p = build_precoder_qcqp(eff, state, params);
    let start = model::stack_precoders(current);
    let sol = solve_qcqp_barrier(&p, Some(&start), settings)?;
    let (n_sa, d) = (current[0].nrows(), current[0].ncols());
    Ok((model::unstack_precoders(&sol.z, n_sa, d, current.len()), sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use crate::model::{effective_channels, weighted_mse, wmmse_update};
    use crate::scenario::{generate_scenario, ScenarioConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64) -> (EffectiveChannels, Vec<CMatrix>, SystemParams, WmmseState) {
        let cfg = ScenarioConfig::default().with_seed(seed).with_elements(6);
        let sc = generate_scenario(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = linalg::unit_phase(&random_vector(&mut rng, 6));
        let eff = effective_channels(&sc.channels, &theta).unwrap();
        let f: Vec<CMatrix> = (0..3).map(|_| random_matrix(&mut rng, 4, 2)).collect();
        let params = SystemParams::from(&cfg);
        let st = wmmse_update(&eff, &f, &params).unwrap();
        (eff, f, params, st)
    }

    #[test]
    fn objective_equals_weighted_mse() {
        let (eff, f, params, st) = instance(1);
        let p = build_precoder_qcqp(&eff, &st, &params);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for fx in [f.clone(), (0..3).map(|_| random_matrix(&mut rng, 4, 2)).collect()] {
            let z = model::stack_precoders(&fx);
            let want = weighted_mse(&eff, &fx, &st, &params);
            assert!((p.objective(&z) - want).abs() <= 1e-8 * want.abs().max(1.0));
        }
    }

    #[test]
    fn constraints_reproduce_power_and_interference() {
        let (eff, f, params, st) = instance(2);
        let p = build_precoder_qcqp(&eff, &st, &params);
        let z = model::stack_precoders(&f);
        assert!((p.constraints[0].value(&z) - model::total_power(&f)).abs() < 1e-10);
        for (k, g) in eff.pu.iter().enumerate() {
            let it = model::interference_power(g, &f);
            assert!((p.constraints[k + 1].value(&z) - it).abs() <= 1e-10 * it);
        }
    }

    #[test]
    fn scalar_reduction() {
        let g = CMatrix::from_element(1, 1, linalg::c(0.5, 0.5));
        let gp = CMatrix::from_element(1, 1, linalg::c(0.1, 0.0));
        let eff = EffectiveChannels { su: vec![g.clone()], pu: vec![gp] };
        let u = linalg::c(0.3, -0.2);
        let w = 2.0;
        let st = WmmseState {
            u: vec![CMatrix::from_element(1, 1, u)],
            w: vec![CMatrix::from_element(1, 1, linalg::c(w, 0.0))],
        };
        let params = SystemParams { p_max: 1.0, caps: vec![0.5], noise: vec![0.1], weights: vec![1.5], streams: 1 };
        let p = build_precoder_qcqp(&eff, &st, &params);
        let gg = g[(0, 0)];
        assert!((p.a0[(0, 0)].re - 1.5 * w * (u * gg).norm_sqr()).abs() < 1e-14);
        // b0 = conj(ω w u* g)
        let want_b = (u.conj() * gg * 1.5 * w).conj();
        assert!((p.b0[0] - want_b).norm() < 1e-14);
        assert!((p.c0 - 1.5 * (w + 0.1 * w * u.norm_sqr())).abs() < 1e-14);
        assert!((p.constraints[1].a[(0, 0)].re - 0.01).abs() < 1e-16);
    }

    #[test]
    fn no_reflection_uses_direct_links_only() {
        let sc = generate_scenario(&ScenarioConfig::default()).unwrap();
        let mut ch = sc.channels.clone();
        for h in ch.h_irs_pu.iter_mut() {
            h.fill(linalg::c(0.0, 0.0));
        }
        let eff = effective_channels(&ch, &CVector::from_element(20, linalg::c(1.0, 0.0))).unwrap();
        for (x, h) in interference_hessians(&eff).iter().zip(&ch.h_sap_pu) {
            assert!(rel_frob(x, &(h.adjoint() * h)) < 1e-14);
        }
    }

    #[test]
    fn step_does_not_increase_weighted_mse() {
        let (eff, f, params, st) = instance(3);
        let scale = (params.p_max / model::total_power(&f)).sqrt() * 0.5;
        let f = model::scale_precoders(&f, scale);
        let (fnew, sol) = solve_precoder_step(&eff, &st, &params, &f, &BarrierSettings::default()).unwrap();
        assert!(weighted_mse(&eff, &fnew, &st, &params) <= weighted_mse(&eff, &f, &st, &params) + 1e-9);
        assert!(model::total_power(&fnew) <= params.p_max * (1.0 + 1e-9));
        assert!(sol.kkt_residual < 1e-6, "kkt {}", sol.kkt_residual);
    }
}
