//! Alternating optimization on the default three-PU system with the barrier
//! precoder step and the penalty-method reflection step.
//!
//! cargo run --release --example general_ao -- [max_iters]

use irs_cr::ao::{self, AoSettings};
use irs_cr::experiment::seeded_start;
use irs_cr::model::SystemParams;
use irs_cr::scenario::{generate_scenario, ScenarioConfig};

fn main() -> irs_cr::Result<()> {
    let max_iters = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let cfg = ScenarioConfig::default().with_elements(10);
    let ch = generate_scenario(&cfg)?.channels;
    let params = SystemParams::from(&cfg);
    let init = seeded_start(&ch, &params, cfg.seed)?;

    let settings = AoSettings { max_iters, ..AoSettings::default() };
    let rep = ao::solve_general(&ch, &params, &init, &settings)?;
    println!("iter  WSR (bits/s/Hz)  power (W)  max interference (W)  max ||θ|-1|");
    for r in &rep.records {
        println!(
            "{:>4}  {:>15.6}  {:>9.4}  {:>20.3e}  {:.1e}",
            r.iteration, r.wsr, r.power, r.max_interference, r.modulus_residual
        );
    }
    println!("{:?} after {} iterations, {:.0} ms", rep.termination, rep.iterations(), rep.elapsed_ms());
    println!("caps {:?} W, reflection steps skipped: {}", params.caps, rep.theta_skips);
    Ok(())
}
