//! Draws one realization of the default system and prints link gains.
//!
//! cargo run --example channel_generation -- [seed]

use irs_cr::scenario::{generate_scenario, path_loss_linear, ScenarioConfig};

fn main() -> irs_cr::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ScenarioConfig::default().with_seed(seed);
    let sc = generate_scenario(&cfg)?;
    let ch = &sc.channels;

    println!("seed {seed}, fingerprint {}", ch.fingerprint());
    println!("{} PUs, {} SUs, M = {}, N_SA = {}", ch.num_pus(), ch.num_sus(), ch.num_elements(), ch.n_sa());
    for (l, p) in sc.su_positions.iter().enumerate() {
        let direct = ch.h_sap_su[l].norm_squared();
        let reflected = ch.h_irs_su[l].norm_squared();
        println!("SU {l} at {p:?}: |H_d|^2 = {direct:.3e}, |H_r|^2 = {reflected:.3e}");
    }
    for (k, p) in sc.pu_positions.iter().enumerate() {
        println!("PU {k} at {p:?}: |H_d|^2 = {:.3e}", ch.h_sap_pu[k].norm_squared());
    }
    println!("|H_sr|^2 = {:.3e}", ch.h_sap_irs.norm_squared());

    // Reference gains at 1 m and 50 m for the configured exponent.
    for d in [1.0, 50.0] {
        let g = path_loss_linear(d, 2.0, cfg.beta0_db, cfg.d0_m)?;
        println!("path loss at {d} m: {:.1} dB", 10.0 * g.log10());
    }
    Ok(())
}
