//! Alternating optimization: decoder/weight update, precoder step and
//! reflection step in turn until the weighted sum rate settles.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::convex::barrier::BarrierSettings;
use crate::convex::precoder::solve_precoder_step;
use crate::convex::theta::{build_theta_problem, penalty_theta_solve, PenaltySettings};
use crate::error::{Error, Result};
use crate::fast::precoder::{fast_precoder_step, FastPrecoderSettings};
use crate::fast::theta::{sca_theta_solve_single, FastThetaSettings};
use crate::linalg::{CMatrix, CVector};
use crate::model::{self, Evaluation, SystemParams, WmmseState};
use crate::scenario::{ChannelSet, ConfigViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Barrier precoder step and penalty-method reflection step; any number
    /// of PUs.
    AoGeneral,
    /// Closed-form steps; exactly one PU.
    AoFast,
    /// Precoder optimization without the IRS.
    NoIrs,
    /// Precoder optimization with all reflection coefficients equal to 1.
    FixedIrs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::AoGeneral, Algorithm::AoFast, Algorithm::NoIrs, Algorithm::FixedIrs];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::AoGeneral => "ao-general",
            Algorithm::AoFast => "ao-fast",
            Algorithm::NoIrs => "no-irs",
            Algorithm::FixedIrs => "fixed-irs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected one of ao-general, ao-fast, no-irs, fixed-irs)"))
    }
}

/// The AO iterate.
#[derive(Debug, Clone)]
pub struct BeamformingState {
    pub f: Vec<CMatrix>,
    pub theta: CVector,
    pub wmmse: Option<WmmseState>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoSettings {
    /// Stop once the WSR changes by at most this much (bits/s/Hz).
    pub tol: f64,
    pub max_iters: usize,
    /// Run at least this many iterations before testing convergence.
    pub min_iters: usize,
    /// Disable to keep θ fixed at its starting value.
    pub update_theta: bool,
    pub barrier: BarrierSettings,
    pub penalty: PenaltySettings,
    pub fast_precoder: FastPrecoderSettings,
    pub fast_theta: FastThetaSettings,
}

impl Default for AoSettings {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iters: 100,
            min_iters: 0,
            update_theta: true,
            barrier: BarrierSettings::default(),
            penalty: PenaltySettings::default(),
            fast_precoder: FastPrecoderSettings::default(),
            fast_theta: FastThetaSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub wsr: f64,
    pub power: f64,
    pub max_interference: f64,
    /// `max_m ||θ_m| − 1|`.
    pub modulus_residual: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// A block solver failed; the last accepted state is reported.
    SubsolverFailure(String),
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    /// Iteration 0 is the starting point.
    pub records: Vec<IterationRecord>,
    pub state: BeamformingState,
    pub evaluation: Evaluation,
    pub termination: Termination,
    /// Rounds where the reflection step was skipped as infeasible.
    pub theta_skips: usize,
}

impl SolveReport {
    pub fn final_wsr(&self) -> f64 {
        self.evaluation.wsr
    }

    pub fn wsr_trace(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.wsr).collect()
    }

    /// Outer iterations performed (iteration 0 excluded).
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.elapsed_ms)
    }
}

fn random_phases<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CVector {
    CVector::from_fn(m, |_, _| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.random::<f64>()))
}

/// Scales `f` down just enough to meet the power budget and every cap under
/// the given θ.
pub fn scale_into_feasible(ch: &ChannelSet, params: &SystemParams, f: &[CMatrix], theta: &CVector) -> Result<Vec<CMatrix>> {
    let eff = model::effective_channels(ch, theta)?;
    let mut c2: f64 = 1.0;
    let p = model::total_power(f);
    if p > params.p_max {
        c2 = c2.min(params.p_max / p);
    }
    for (it, cap) in model::interference_all(&eff, f).iter().zip(&params.caps) {
        if *it > *cap {
            c2 = c2.min(cap / it);
        }
    }
    if c2 < 1.0 {
        // Keep a hair of slack so the start is strictly feasible.
        c2 *= 1.0 - 1e-9;
        Ok(model::scale_precoders(f, c2.sqrt()))
    } else {
        Ok(f.to_vec())
    }
}

/// Random start: complex Gaussian precoders at full power, shrunk until every
/// interference cap holds, and uniformly random unit-modulus θ.
pub fn initialize<R: Rng + ?Sized>(ch: &ChannelSet, params: &SystemParams, rng: &mut R) -> Result<BeamformingState> {
    let n_sa = ch.n_sa();
    let d = params.streams;
    let f: Vec<CMatrix> = (0..ch.num_sus())
        .map(|_| {
            CMatrix::from_fn(n_sa, d, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
        })
        .collect();
    let f = model::scale_precoders(&f, (params.p_max / model::total_power(&f)).sqrt());
    let theta = random_phases(ch.num_elements(), rng);
    let f = scale_into_feasible(ch, params, &f, &theta)?;
    Ok(BeamformingState { f, theta, wmmse: None })
}

fn record(iteration: usize, ev: &Evaluation, theta: &CVector, start: Instant) -> IterationRecord {
    IterationRecord {
        iteration,
        wsr: ev.wsr,
        power: ev.power,
        max_interference: ev.max_interference(),
        modulus_residual: model::max_modulus_error(theta),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Steps {
    Barrier,
    Fast,
}

fn run_ao(
    algorithm: Algorithm,
    steps: Steps,
    ch: &ChannelSet,
    params: &SystemParams,
    f0: Vec<CMatrix>,
    theta0: CVector,
    update_theta: bool,
    settings: &AoSettings,
) -> Result<SolveReport> {
    let start = Instant::now();
    let mut f = scale_into_feasible(ch, params, &f0, &theta0)?;
    let mut theta = theta0;
    let mut eff = model::effective_channels(ch, &theta)?;
    let mut ev = model::evaluate_effective(&eff, params, &f)?;
    let mut records = vec![record(0, &ev, &theta, start)];
    let mut wmmse = None;
    let mut termination = Termination::MaxIterations;
    let mut theta_skips = 0;
    let update_theta = update_theta && ch.num_elements() > 0;

    for n in 1..=settings.max_iters {
        let st = model::wmmse_update(&eff, &f, params)?;
        let mse_now = model::weighted_mse(&eff, &f, &st, params);

        let cand = match steps {
            Steps::Barrier => solve_precoder_step(&eff, &st, params, &f, &settings.barrier).map(|(f, _)| f),
            Steps::Fast => fast_precoder_step(&eff, &st, params, &f, &settings.fast_precoder).map(|r| r.f),
        };
        match cand {
            Ok(fc) => {
                let cand_ev = model::evaluate_effective(&eff, params, &fc)?;
                if model::weighted_mse(&eff, &fc, &st, params) <= mse_now && cand_ev.is_feasible(params, 1e-9) {
                    f = fc;
                }
            }
            Err(e) => {
                termination = Termination::SubsolverFailure(format!("precoder step: {e}"));
                wmmse = Some(st);
                break;
            }
        }

        if update_theta {
            let data = build_theta_problem(ch, &f, &st, params);
            let cand = match steps {
                Steps::Barrier => penalty_theta_solve(&data, &theta, &settings.penalty).map(|o| o.theta),
                Steps::Fast => sca_theta_solve_single(&data, &theta, &settings.fast_theta).map(|r| r.theta),
            };
            match cand {
                Ok(tc) => {
                    if data.objective(&tc) <= data.objective(&theta) && data.is_feasible(&tc) {
                        theta = tc;
                    }
                }
                Err(Error::ThetaStepInfeasible(msg)) => {
                    log::debug!("reflection step skipped: {msg}");
                    theta_skips += 1;
                }
                Err(e) => {
                    termination = Termination::SubsolverFailure(format!("reflection step: {e}"));
                    wmmse = Some(st);
                    eff = model::effective_channels(ch, &theta)?;
                    ev = model::evaluate_effective(&eff, params, &f)?;
                    records.push(record(n, &ev, &theta, start));
                    break;
                }
            }
        }

        eff = model::effective_channels(ch, &theta)?;
        let prev = ev.wsr;
        ev = model::evaluate_effective(&eff, params, &f)?;
        records.push(record(n, &ev, &theta, start));
        wmmse = Some(st);
        if n >= settings.min_iters && (ev.wsr - prev).abs() <= settings.tol {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(SolveReport {
        algorithm,
        records,
        state: BeamformingState { f, theta, wmmse },
        evaluation: ev,
        termination,
        theta_skips,
    })
}

/// Barrier precoder step plus penalty-method reflection step.
pub fn solve_general(ch: &ChannelSet, params: &SystemParams, init: &BeamformingState, settings: &AoSettings) -> Result<SolveReport> {
    run_ao(
        Algorithm::AoGeneral,
        Steps::Barrier,
        ch,
        params,
        init.f.clone(),
        init.theta.clone(),
        settings.update_theta,
        settings,
    )
}

/// Closed-form single-PU steps.
pub fn solve_fast(ch: &ChannelSet, params: &SystemParams, init: &BeamformingState, settings: &AoSettings) -> Result<SolveReport> {
    if ch.num_pus() != 1 || params.caps.len() != 1 {
        return Err(Error::Config(vec![ConfigViolation {
            field: "num_pus".into(),
            message: format!("ao-fast needs exactly one PU, got {}", ch.num_pus()),
        }]));
    }
    run_ao(
        Algorithm::AoFast,
        Steps::Fast,
        ch,
        params,
        init.f.clone(),
        init.theta.clone(),
        settings.update_theta,
        settings,
    )
}

/// Precoder-only optimization without the IRS or with θ pinned to ones.
pub fn solve_baseline(
    ch: &ChannelSet,
    params: &SystemParams,
    choice: Algorithm,
    init: &BeamformingState,
    settings: &AoSettings,
) -> Result<SolveReport> {
    match choice {
        Algorithm::NoIrs => {
            let bare = ch.without_irs();
            run_ao(choice, Steps::Barrier, &bare, params, init.f.clone(), CVector::zeros(0), false, settings)
        }
        Algorithm::FixedIrs => {
            let ones = CVector::from_element(ch.num_elements(), Complex64::new(1.0, 0.0));
            run_ao(choice, Steps::Barrier, ch, params, init.f.clone(), ones, false, settings)
        }
        other => Err(Error::Config(vec![ConfigViolation {
            field: "algorithm".into(),
            message: format!("{other} is not a baseline"),
        }])),
    }
}

/// Dispatches on the algorithm.
pub fn solve(
    ch: &ChannelSet,
    params: &SystemParams,
    algorithm: Algorithm,
    init: &BeamformingState,
    settings: &AoSettings,
) -> Result<SolveReport> {
    match algorithm {
        Algorithm::AoGeneral => solve_general(ch, params, init, settings),
        Algorithm::AoFast => solve_fast(ch, params, init, settings),
        Algorithm::NoIrs | Algorithm::FixedIrs => solve_baseline(ch, params, algorithm, init, settings),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, ScenarioConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(cfg: &ScenarioConfig) -> (ChannelSet, SystemParams, BeamformingState) {
        let sc = generate_scenario(cfg).unwrap();
        let params = SystemParams::from(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let init = initialize(&sc.channels, &params, &mut rng).unwrap();
        (sc.channels, params, init)
    }

    fn assert_monotone(rep: &SolveReport) {
        for w in rep.records.windows(2) {
            assert!(w[1].wsr >= w[0].wsr - 1e-8, "{} then {}", w[0].wsr, w[1].wsr);
        }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("ao".parse::<Algorithm>().is_err());
    }

    #[test]
    fn initialization_is_feasible_and_deterministic() {
        let cfg = ScenarioConfig::default().with_elements(8);
        let (ch, params, init) = setup(&cfg);
        let ev = model::evaluate(&ch, &params, &init.f, &init.theta).unwrap();
        assert!(ev.is_feasible(&params, 0.0));
        let tight = (ev.power - params.p_max).abs() <= 1e-9 * params.p_max
            || ev.interference.iter().zip(&params.caps).any(|(i, c)| (i - c).abs() <= 1e-6 * c);
        assert!(tight);
        assert!(model::max_modulus_error(&init.theta) < 1e-12);
        let (_, _, again) = setup(&cfg);
        assert_eq!(again.f, init.f);

        let mut loose = cfg.clone();
        loose.interference_caps_w = vec![1e3; 3];
        let (ch, params, init) = setup(&loose);
        let ev = model::evaluate(&ch, &params, &init.f, &init.theta).unwrap();
        assert!((ev.power - params.p_max).abs() < 1e-12);
    }

    #[test]
    fn general_is_monotone_and_feasible() {
        let cfg = ScenarioConfig::default().with_elements(6).with_seed(3);
        let (ch, params, init) = setup(&cfg);
        let rep = solve_general(&ch, &params, &init, &AoSettings { max_iters: 8, ..Default::default() }).unwrap();
        assert_monotone(&rep);
        assert!(rep.evaluation.is_feasible(&params, 1e-6));
        assert!(model::max_modulus_error(&rep.state.theta) < 1e-4);
        assert!(rep.final_wsr() > rep.records[0].wsr);
    }

    #[test]
    fn fast_is_monotone_and_needs_one_pu() {
        let cfg = ScenarioConfig::single_pu().with_elements(6).with_seed(4);
        let (ch, params, init) = setup(&cfg);
        let rep = solve_fast(&ch, &params, &init, &AoSettings { max_iters: 8, ..Default::default() }).unwrap();
        assert_monotone(&rep);
        assert!(rep.evaluation.is_feasible(&params, 1e-6));

        let (ch3, p3, init3) = setup(&ScenarioConfig::default().with_elements(4));
        assert!(matches!(solve_fast(&ch3, &p3, &init3, &AoSettings::default()), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_irs_without_reflection_equals_no_irs() {
        let cfg = ScenarioConfig::default().with_elements(5);
        let (mut ch, params, init) = setup(&cfg);
        for h in ch.h_irs_pu.iter_mut().chain(ch.h_irs_su.iter_mut()) {
            h.fill(Complex64::new(0.0, 0.0));
        }
        let s = AoSettings { max_iters: 5, ..Default::default() };
        let a = solve_baseline(&ch, &params, Algorithm::FixedIrs, &init, &s).unwrap();
        let b = solve_baseline(&ch, &params, Algorithm::NoIrs, &init, &s).unwrap();
        assert_eq!(a.wsr_trace(), b.wsr_trace());
        assert!(a.evaluation.is_feasible(&params, 1e-6) && b.evaluation.is_feasible(&params, 1e-6));
    }

    #[test]
    fn no_irs_with_loose_caps_is_plain_wmmse() {
        let mut cfg = ScenarioConfig::default().with_elements(0);
        cfg.interference_caps_w = vec![1e6; 3];
        let (ch, params, init) = setup(&cfg);
        let rep = solve_general(&ch, &params, &init, &AoSettings { max_iters: 30, ..Default::default() }).unwrap();
        assert_monotone(&rep);
        // Without active caps the precoder update spends the whole budget.
        assert!((rep.evaluation.power - params.p_max).abs() <= 1e-6 * params.p_max);
        assert!(rep.final_wsr() > 2.0 * rep.records[0].wsr);
    }
    #[test]
    fn general_and_fast_precoder_steps_agree_with_theta_held() {
        let mut cfg = ScenarioConfig::single_pu().with_elements(6).with_seed(11);
        cfg.interference_caps_w = vec![1e-6];
        let (ch, params, init) = setup(&cfg);
        let s = AoSettings { max_iters: 10, update_theta: false, ..Default::default() };
        let g = solve_general(&ch, &params, &init, &s).unwrap();
        let f = solve_fast(&ch, &params, &init, &s).unwrap();
        assert_eq!(g.state.theta, init.theta);
        for (a, b) in g.wsr_trace().iter().zip(f.wsr_trace()) {
            assert!((a - b).abs() <= 1e-3, "{a} vs {b}");
        }
    }
}
