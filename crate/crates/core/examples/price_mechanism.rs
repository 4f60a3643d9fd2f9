//! The scalar prices behind the single-PU steps: the interference price μ of
//! the precoder step, traced through one majorization, and the reflection
//! price α of the phase step.

use irs_cr::convex::theta::build_theta_problem;
use irs_cr::experiment::seeded_start;
use irs_cr::fast::precoder::{hstack, SinglePuPrecoderProblem};
use irs_cr::fast::theta::{bisect_alpha, ThetaMajorizedData};
use irs_cr::linalg;
use irs_cr::model::{self, SystemParams};
use irs_cr::scenario::{generate_scenario, ScenarioConfig};

fn main() -> irs_cr::Result<()> {
    let mut cfg = ScenarioConfig::single_pu().with_elements(8);
    // A tight cap so both prices are active.
    cfg.interference_caps_w = vec![1e-7];
    let ch = generate_scenario(&cfg)?.channels;
    let params = SystemParams::from(&cfg);
    let init = seeded_start(&ch, &params, cfg.seed)?;
    let eff = model::effective_channels(&ch, &init.theta)?;
    let state = model::wmmse_update(&eff, &init.f, &params)?;

    let problem = SinglePuPrecoderProblem::new(&eff, &state, &params)?;
    let f0 = hstack(&init.f);
    let data = problem.majorize(&f0);
    println!("surrogate interference J(μ), majorized cap {:.3e} W:", data.gamma_tilde);
    for mu in [0.0, 1e2, 1e4, 1e6, 1e8] {
        println!("  μ = {mu:>8.0e}: J = {:.4e}", data.j_of_mu(mu));
    }
    let step = data.solve(1e-10)?;
    println!(
        "step: {:?}, λ = {:.4e}, μ = {:.4e}, power {:.4} W, interference {:.4e} W",
        step.case,
        step.lambda,
        step.mu,
        problem.power(&step.f),
        problem.interference(&step.f)
    );

    let theta_data = build_theta_problem(&ch, &init.f, &state, &params);
    let lambda0 = linalg::max_eigenvalue(&theta_data.upsilon0)?;
    let lambda_p = linalg::max_eigenvalue(&theta_data.upsilon[0])?;
    let maj = ThetaMajorizedData::new(&theta_data, lambda0, lambda_p, &init.theta);
    println!("reflection price: target {:.4e}, sup g = {:.4e}", maj.target, maj.g_sup());
    let (alpha, theta) = bisect_alpha(&maj, 1e-10)?;
    for scale in [0.0, 0.1, 0.5, 1.0, 2.0, 10.0] {
        println!("  α = {scale:>4} α*: g = {:.4e}", maj.g(scale * alpha));
    }
    println!(
        "α* = {alpha:.6e}, objective {:.6e} -> {:.6e}, max ||θ|-1| = {:.1e}",
        theta_data.objective(&init.theta),
        theta_data.objective(&theta),
        model::max_modulus_error(&theta)
    );
    Ok(())
}
