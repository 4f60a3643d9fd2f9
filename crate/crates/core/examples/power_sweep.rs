//! Seeded power sweep comparing the AO designs with the baselines, written
//! to CSV.
//!
//! cargo run --release --example power_sweep -- [out_dir]

use std::path::PathBuf;

use irs_cr::ao::Algorithm;
use irs_cr::experiment::{run_experiment, write_results, ExperimentSpec, Sweep};
use irs_cr::scenario::ScenarioConfig;

fn main() -> irs_cr::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "power_sweep".into()).into();
    let mut spec = ExperimentSpec::new(
        ScenarioConfig::single_pu().with_elements(10),
        vec![Algorithm::NoIrs, Algorithm::FixedIrs, Algorithm::AoFast],
    );
    spec.sweep = Sweep::Power(vec![0.5, 1.0, 2.0, 5.0, 10.0]);
    spec.trials = 4;
    spec.settings.max_iters = 30;

    let res = run_experiment(&spec)?;
    for p in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let mean = |alg: &str| {
            let v: Vec<f64> = res
                .summary
                .iter()
                .filter(|r| r.algorithm == alg && r.p_max_w == p)
                .map(|r| r.final_wsr_bits_per_hz)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        println!("P = {p:>4} W: no-irs {:.3}  fixed-irs {:.3}  ao-fast {:.3}", mean("no-irs"), mean("fixed-irs"), mean("ao-fast"));
    }
    for path in write_results(&res, &out, true)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
