#![allow(dead_code)]

use irs_cr::ao::BeamformingState;
use irs_cr::experiment::seeded_start;
use irs_cr::linalg::{CMatrix, CVector};
use irs_cr::model::{self, EffectiveChannels, SystemParams, WmmseState};
use irs_cr::scenario::{generate_scenario, ChannelSet, ScenarioConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn_c<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| randn_c(rng))
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| randn_c(rng))
}

pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let b = random_matrix(rng, n, rank);
    &b * b.adjoint()
}

pub fn random_phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
}

/// Channels, parameters and the seeded start of one configuration.
pub struct Setup {
    pub cfg: ScenarioConfig,
    pub ch: ChannelSet,
    pub params: SystemParams,
    pub init: BeamformingState,
}

pub fn setup(cfg: ScenarioConfig) -> Setup {
    let sc = generate_scenario(&cfg).expect("scenario");
    let params = SystemParams::from(&cfg);
    let init = seeded_start(&sc.channels, &params, cfg.seed).expect("start");
    Setup { cfg, ch: sc.channels, params, init }
}

/// Default system resized to `k` PUs, `l` SUs and `m` elements.
pub fn sized_config(k: usize, l: usize, m: usize, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default().with_elements(m).with_seed(seed);
    cfg.num_pus = k;
    cfg.num_sus = l;
    cfg.interference_caps_w = vec![2e-4; k];
    cfg.weights = vec![1.0; l];
    cfg
}

/// Seeded start plus the MMSE decoders and weights at it.
pub struct WmmsePoint {
    pub setup: Setup,
    pub eff: EffectiveChannels,
    pub state: WmmseState,
}

pub fn wmmse_point(cfg: ScenarioConfig) -> WmmsePoint {
    let setup = setup(cfg);
    let eff = model::effective_channels(&setup.ch, &setup.init.theta).unwrap();
    let state = model::wmmse_update(&eff, &setup.init.f, &setup.params).unwrap();
    WmmsePoint { setup, eff, state }
}

/// `H_d + H_r diag(θ) H_sr` by explicit column scaling.
pub fn cascade(h_d: &CMatrix, h_r: &CMatrix, h_sr: &CMatrix, theta: &CVector) -> CMatrix {
    let mut scaled = h_r.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= theta[j];
    }
    h_d + scaled * h_sr
}

/// Inverse through LU, independent of the Cholesky route in the library.
pub fn lu_inverse(a: &CMatrix) -> CMatrix {
    a.clone().lu().try_inverse().expect("invertible")
}

pub fn lu_log2_det(a: &CMatrix) -> f64 {
    let d: Complex64 = a.clone().lu().determinant();
    d.norm().log2()
}

/// `E_l` written as the expected error power of each stream,
/// `(I − U^H G F_l)(·)^H + Σ_{j≠l} U^H G F_j F_j^H G^H U + σ² U^H U`.
pub fn mse_by_streams(g: &CMatrix, f: &[CMatrix], l: usize, u: &CMatrix, sigma2: f64) -> CMatrix {
    let d = f[l].ncols();
    let own = DMatrix::<Complex64>::identity(d, d) - u.adjoint() * g * &f[l];
    let mut e = &own * own.adjoint() + u.adjoint() * u * Complex64::new(sigma2, 0.0);
    for (j, fj) in f.iter().enumerate() {
        if j != l {
            let x = u.adjoint() * g * fj;
            e += &x * x.adjoint();
        }
    }
    e
}

pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|v| v.re).sum()
}

/// Maximizer of a concave function on `[0, ∞)`: doubling bracket, then
/// golden-section search.
pub fn maximize_concave(mut f: impl FnMut(f64) -> f64, iters: usize) -> (f64, f64) {
    let mut hi = 1.0;
    let mut prev = f(0.0);
    for _ in 0..200 {
        let v = f(hi);
        if v <= prev {
            break;
        }
        prev = v;
        hi *= 2.0;
    }
    let (mut a, mut b) = (0.0, hi);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let cands = [(0.0, f(0.0)), (x1, f1), (x2, f2)];
    cands.into_iter().fold((0.0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
}
