//! Single-PU system: the closed-form AO against the general solver from the
//! same start.

use std::time::Instant;

use irs_cr::ao::{self, AoSettings};
use irs_cr::experiment::seeded_start;
use irs_cr::model::SystemParams;
use irs_cr::scenario::{generate_scenario, ScenarioConfig};

fn main() -> irs_cr::Result<()> {
    let cfg = ScenarioConfig::single_pu().with_elements(10).with_seed(3);
    let ch = generate_scenario(&cfg)?.channels;
    let params = SystemParams::from(&cfg);
    let init = seeded_start(&ch, &params, cfg.seed)?;
    let settings = AoSettings { max_iters: 15, ..AoSettings::default() };

    let t = Instant::now();
    let fast = ao::solve_fast(&ch, &params, &init, &settings)?;
    let fast_ms = t.elapsed().as_secs_f64() * 1e3;
    let t = Instant::now();
    let general = ao::solve_general(&ch, &params, &init, &settings)?;
    let general_ms = t.elapsed().as_secs_f64() * 1e3;

    for (name, rep, ms) in [("ao-fast", &fast, fast_ms), ("ao-general", &general, general_ms)] {
        println!(
            "{name:<10} WSR {:.6}  power {:.4} W  interference {:.3e} W  {} iterations  {ms:.1} ms",
            rep.final_wsr(),
            rep.evaluation.power,
            rep.evaluation.max_interference(),
            rep.iterations()
        );
    }
    let gap = (fast.final_wsr() - general.final_wsr()) / general.final_wsr();
    println!("relative gap {:+.3}%", 100.0 * gap);
    Ok(())
}
