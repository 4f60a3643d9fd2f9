//! Rates, interference and the WMMSE block updates.
//!
//! Precoders are a slice of `N_SA x d` matrices, one per SU. The reflection
//! vector θ has one entry per IRS element; an empty θ means no IRS.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::scenario::{ChannelSet, ScenarioConfig};

/// Power budget, caps, noise and weights of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub p_max: f64,
    /// Interference cap per PU (W).
    pub caps: Vec<f64>,
    /// Noise power per SU (W).
    pub noise: Vec<f64>,
    pub weights: Vec<f64>,
    pub streams: usize,
}

impl From<&ScenarioConfig> for SystemParams {
    fn from(cfg: &ScenarioConfig) -> Self {
        Self {
            p_max: cfg.p_max_w,
            caps: cfg.interference_caps_w.clone(),
            noise: vec![cfg.noise_su_w; cfg.num_sus],
            weights: cfg.weights.clone(),
            streams: cfg.streams,
        }
    }
}

impl SystemParams {
    /// Keeps only the cap of PU `k`.
    pub fn single_pu(&self, k: usize) -> Self {
        Self { caps: vec![self.caps[k]], ..self.clone() }
    }
}

/// Decoders `U_l` (`N_SU x d`) and MSE weights `W_l` (`d x d`).
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState {
    pub u: Vec<CMatrix>,
    pub w: Vec<CMatrix>,
}

/// Effective SAP→SU and SAP→PU channels for one θ.
#[derive(Debug, Clone)]
pub struct EffectiveChannels {
    pub su: Vec<CMatrix>,
    pub pu: Vec<CMatrix>,
}

/// `H_direct + H_refl diag(θ) H_sr`.
pub fn effective_channel(h_direct: &CMatrix, h_refl: &CMatrix, h_sr: &CMatrix, theta: &CVector) -> Result<CMatrix> {
    let m = theta.len();
    if h_refl.ncols() != m || h_sr.nrows() != m || h_refl.nrows() != h_direct.nrows() || h_sr.ncols() != h_direct.ncols()
    {
        return Err(Error::Dimension(format!(
            "effective channel: direct {:?}, reflect {:?}, sap-irs {:?}, theta {m}",
            h_direct.shape(),
            h_refl.shape(),
            h_sr.shape()
        )));
    }
    let mut scaled = h_refl.clone();
    for (j, t) in theta.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= t);
    }
    Ok(h_direct + scaled * h_sr)
}

pub fn effective_channels(ch: &ChannelSet, theta: &CVector) -> Result<EffectiveChannels> {
    let su = ch
        .h_sap_su
        .iter()
        .zip(&ch.h_irs_su)
        .map(|(hd, hr)| effective_channel(hd, hr, &ch.h_sap_irs, theta))
        .collect::<Result<Vec<_>>>()?;
    let pu = ch
        .h_sap_pu
        .iter()
        .zip(&ch.h_irs_pu)
        .map(|(hd, hr)| effective_channel(hd, hr, &ch.h_sap_irs, theta))
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectiveChannels { su, pu })
}

/// `Σ_l F_l F_l^H`.
pub fn transmit_covariance(f: &[CMatrix]) -> CMatrix {
    let n = f.first().map_or(0, |x| x.nrows());
    f.iter().fold(CMatrix::zeros(n, n), |acc, fl| acc + fl * fl.adjoint())
}

/// `Σ_l Tr(F_l^H F_l)`.
pub fn total_power(f: &[CMatrix]) -> f64 {
    f.iter().map(linalg::frob_sq).sum()
}

/// `G (Σ_i F_i F_i^H) G^H + σ² I`: everything a receiver sees.
pub fn receive_covariance(g: &CMatrix, f: &[CMatrix], sigma2: f64) -> CMatrix {
    let mut c = CMatrix::zeros(g.nrows(), g.nrows());
    for fi in f {
        let gf = g * fi;
        c += &gf * gf.adjoint();
    }
    for i in 0..g.nrows() {
        c[(i, i)] += sigma2;
    }
    linalg::hermitian_part(&c)
}

/// Rate of SU `l` in bits/s/Hz, given its effective channel `g`.
pub fn user_rate(g: &CMatrix, f: &[CMatrix], l: usize, sigma2: f64) -> Result<f64> {
    let total = receive_covariance(g, f, sigma2);
    let gf = g * &f[l];
    let interference = linalg::hermitian_part(&(&total - &gf * gf.adjoint()));
    Ok((linalg::ln_det_hpd(&total)? - linalg::ln_det_hpd(&interference)?) / std::f64::consts::LN_2)
}

pub fn rates(eff: &EffectiveChannels, f: &[CMatrix], noise: &[f64]) -> Result<Vec<f64>> {
    (0..f.len()).map(|l| user_rate(&eff.su[l], f, l, noise[l])).collect()
}

pub fn weighted_sum_rate(eff: &EffectiveChannels, f: &[CMatrix], params: &SystemParams) -> Result<f64> {
    Ok(rates(eff, f, &params.noise)?.iter().zip(&params.weights).map(|(r, w)| r * w).sum())
}

/// Interference `Σ_l ‖G_pk F_l‖²` caused at a PU with effective channel `g_pk`.
pub fn interference_power(g_pk: &CMatrix, f: &[CMatrix]) -> f64 {
    f.iter().map(|fl| (g_pk * fl).norm_squared()).sum()
}

pub fn interference_all(eff: &EffectiveChannels, f: &[CMatrix]) -> Vec<f64> {
    eff.pu.iter().map(|g| interference_power(g, f)).collect()
}

/// `E_l = U^H C U − U^H G F_l − F_l^H G^H U + I` with `C` the receive
/// covariance.
pub fn mse_matrix(g: &CMatrix, f: &[CMatrix], l: usize, u: &CMatrix, sigma2: f64) -> CMatrix {
    let c = receive_covariance(g, f, sigma2);
    let cross = u.adjoint() * g * &f[l];
    let d = f[l].ncols();
    let e = u.adjoint() * c * u - &cross - cross.adjoint() + linalg::identity(d);
    linalg::hermitian_part(&e)
}

/// MMSE receiver `(C)^{-1} G F_l`.
pub fn optimal_decoder(g: &CMatrix, f: &[CMatrix], l: usize, sigma2: f64) -> Result<CMatrix> {
    let c = receive_covariance(g, f, sigma2);
    linalg::hpd_solve(&c, &(g * &f[l]))
}

/// MSE matrix at the MMSE receiver: `I − (G F_l)^H C^{-1} G F_l`.
pub fn optimal_mse(g: &CMatrix, f: &[CMatrix], l: usize, sigma2: f64) -> Result<CMatrix> {
    let u = optimal_decoder(g, f, l, sigma2)?;
    let gf = g * &f[l];
    Ok(linalg::hermitian_part(&(linalg::identity(f[l].ncols()) - gf.adjoint() * u)))
}

/// `Ŵ = Ê^{-1}`; fails when `Ê` is not positive definite.
pub fn optimal_weight(e: &CMatrix) -> Result<CMatrix> {
    linalg::hpd_inverse(e)
}

/// Closed-form decoder and weight update for every SU.
pub fn wmmse_update(eff: &EffectiveChannels, f: &[CMatrix], params: &SystemParams) -> Result<WmmseState> {
    let mut u = Vec::with_capacity(f.len());
    let mut w = Vec::with_capacity(f.len());
    for l in 0..f.len() {
        let ul = optimal_decoder(&eff.su[l], f, l, params.noise[l])?;
        let gf = &eff.su[l] * &f[l];
        let e = linalg::hermitian_part(&(linalg::identity(f[l].ncols()) - gf.adjoint() * &ul));
        w.push(optimal_weight(&e)?);
        u.push(ul);
    }
    Ok(WmmseState { u, w })
}

/// `[ln det W − Tr(W E) + d] / ln 2`, a lower bound on the rate that is tight
/// at the MMSE decoder and weight.
pub fn surrogate_h(w: &CMatrix, e: &CMatrix) -> Result<f64> {
    let d = w.nrows() as f64;
    let tr = linalg::trace(&(w * e)).re;
    Ok((linalg::ln_det_hpd(w)? - tr + d) / std::f64::consts::LN_2)
}

/// `Σ_l ω_l h_l` at the given decoders and weights.
pub fn weighted_surrogate(
    eff: &EffectiveChannels,
    f: &[CMatrix],
    state: &WmmseState,
    params: &SystemParams,
) -> Result<f64> {
    let mut acc = 0.0;
    for l in 0..f.len() {
        let e = mse_matrix(&eff.su[l], f, l, &state.u[l], params.noise[l]);
        acc += params.weights[l] * surrogate_h(&state.w[l], &e)?;
    }
    Ok(acc)
}

/// `Σ_l ω_l Tr(W_l E_l)`, the quantity the precoder step minimizes.
pub fn weighted_mse(eff: &EffectiveChannels, f: &[CMatrix], state: &WmmseState, params: &SystemParams) -> f64 {
    (0..f.len())
        .map(|l| {
            let e = mse_matrix(&eff.su[l], f, l, &state.u[l], params.noise[l]);
            params.weights[l] * linalg::trace(&(&state.w[l] * e)).re
        })
        .sum()
}

/// Column-major concatenation of every precoder into one vector.
pub fn stack_precoders(f: &[CMatrix]) -> CVector {
    let total: usize = f.iter().map(|x| x.len()).sum();
    let mut z = CVector::zeros(total);
    let mut k = 0;
    for fl in f {
        for v in fl.iter() {
            z[k] = *v;
            k += 1;
        }
    }
    z
}

/// Inverse of [`stack_precoders`].
pub fn unstack_precoders(z: &CVector, n_sa: usize, d: usize, num_sus: usize) -> Vec<CMatrix> {
    assert_eq!(z.len(), n_sa * d * num_sus, "stacked precoder length");
    (0..num_sus)
        .map(|l| CMatrix::from_iterator(n_sa, d, z.rows(l * n_sa * d, n_sa * d).iter().copied()))
        .collect()
}

/// Everything reported about a design.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub rates: Vec<f64>,
    pub wsr: f64,
    pub power: f64,
    pub interference: Vec<f64>,
}

impl Evaluation {
    pub fn max_interference(&self) -> f64 {
        self.interference.iter().copied().fold(0.0, f64::max)
    }

    /// Power and every interference cap hold within `rel_tol`.
    pub fn is_feasible(&self, params: &SystemParams, rel_tol: f64) -> bool {
        self.power <= params.p_max * (1.0 + rel_tol)
            && self.interference.iter().zip(&params.caps).all(|(it, cap)| *it <= cap * (1.0 + rel_tol))
    }
}

pub fn evaluate(ch: &ChannelSet, params: &SystemParams, f: &[CMatrix], theta: &CVector) -> Result<Evaluation> {
    let eff = effective_channels(ch, theta)?;
    evaluate_effective(&eff, params, f)
}

pub fn evaluate_effective(eff: &EffectiveChannels, params: &SystemParams, f: &[CMatrix]) -> Result<Evaluation> {
    let rates = rates(eff, f, &params.noise)?;
    let wsr = rates.iter().zip(&params.weights).map(|(r, w)| r * w).sum();
    Ok(Evaluation { rates, wsr, power: total_power(f), interference: interference_all(eff, f) })
}

/// `Σ_m (|θ_m| − 1)²`.
pub fn modulus_residual(theta: &CVector) -> f64 {
    theta.iter().map(|t| (t.norm() - 1.0).powi(2)).sum()
}

/// `max_m ||θ_m| − 1|`.
pub fn max_modulus_error(theta: &CVector) -> f64 {
    theta.iter().map(|t| (t.norm() - 1.0).abs()).fold(0.0, f64::max)
}

pub fn zero_precoders(n_sa: usize, d: usize, num_sus: usize) -> Vec<CMatrix> {
    vec![CMatrix::zeros(n_sa, d); num_sus]
}

pub(crate) fn scale_precoders(f: &[CMatrix], s: f64) -> Vec<CMatrix> {
    f.iter().map(|x| x * Complex64::new(s, 0.0)).collect()
}
