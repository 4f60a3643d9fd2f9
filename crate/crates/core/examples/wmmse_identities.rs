//! Checks the rate/MSE identity `R_l = log2 det(E_l^{-1})` at the MMSE
//! decoder and shows how the WMMSE surrogate tracks the weighted sum rate.

use irs_cr::ao::initialize;
use irs_cr::linalg;
use irs_cr::model::{self, SystemParams};
use irs_cr::scenario::{generate_scenario, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> irs_cr::Result<()> {
    let cfg = ScenarioConfig::default();
    let ch = generate_scenario(&cfg)?.channels;
    let params = SystemParams::from(&cfg);
    let start = initialize(&ch, &params, &mut ChaCha8Rng::seed_from_u64(7))?;
    let eff = model::effective_channels(&ch, &start.theta)?;

    let rates = model::rates(&eff, &start.f, &params.noise)?;
    for (l, r) in rates.iter().enumerate() {
        let e = model::optimal_mse(&eff.su[l], &start.f, l, params.noise[l])?;
        let via_mse = -linalg::ln_det_hpd(&e)? / std::f64::consts::LN_2;
        println!("SU {l}: rate {r:.6} bits/s/Hz, log2 det E^-1 = {via_mse:.6}");
    }

    let state = model::wmmse_update(&eff, &start.f, &params)?;
    let wsr = model::weighted_sum_rate(&eff, &start.f, &params)?;
    let h = model::weighted_surrogate(&eff, &start.f, &state, &params)?;
    println!("WSR {wsr:.6}, surrogate at the same point {h:.6}");
    Ok(())
}
