//! Simulation world: node placement, path loss, Rician channel draws and the
//! JSON scenario configuration.
//!
//! All powers are in Watts, distances in meters and `beta0_db` in dB. A
//! config file mirrors [`ScenarioConfig`] field-for-field; unknown fields are
//! rejected.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub type Point = [f64; 2];

/// Converts dBm to Watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Per-link-class parameter (Rician factor or path-loss exponent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub sap_pu: f64,
    pub sap_su: f64,
    pub sap_irs: f64,
    pub irs_pu: f64,
    pub irs_su: f64,
}

impl LinkParams {
    pub const fn uniform(v: f64) -> Self {
        Self { sap_pu: v, sap_su: v, sap_irs: v, irs_pu: v, irs_su: v }
    }

    fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("sap_pu", self.sap_pu),
            ("sap_su", self.sap_su),
            ("sap_irs", self.sap_irs),
            ("irs_pu", self.irs_pu),
            ("irs_su", self.irs_su),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub sap: Point,
    pub irs: Point,
    pub pu_center: Point,
    pub pu_radius_m: f64,
    pub su_center: Point,
    pub su_radius_m: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            sap: [0.0, 0.0],
            irs: [30.0, 5.0],
            pu_center: [50.0, 0.0],
            pu_radius_m: 2.0,
            su_center: [30.0, 0.0],
            su_radius_m: 2.0,
        }
    }
}

/// Deterministic line-of-sight component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosModel {
    /// Rank-one product of half-wavelength ULA steering vectors, angles from
    /// the node displacement.
    #[default]
    Ula,
    /// All-ones matrix.
    Ones,
}

/// Complete description of one simulated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_pus: usize,
    pub num_sus: usize,
    pub num_elements: usize,
    pub n_sa: usize,
    pub n_pu: usize,
    pub n_su: usize,
    pub streams: usize,
    pub p_max_w: f64,
    pub interference_caps_w: Vec<f64>,
    pub noise_pu_w: f64,
    pub noise_su_w: f64,
    pub weights: Vec<f64>,
    pub geometry: Geometry,
    pub rician: LinkParams,
    pub path_loss_exponent: LinkParams,
    pub beta0_db: f64,
    pub d0_m: f64,
    #[serde(default)]
    pub los_model: LosModel,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// Three PUs, three SUs, 20 elements, 5 W, 2e-4 W caps, -40 dBm noise.
    fn default() -> Self {
        Self {
            num_pus: 3,
            num_sus: 3,
            num_elements: 20,
            n_sa: 4,
            n_pu: 2,
            n_su: 2,
            streams: 2,
            p_max_w: 5.0,
            interference_caps_w: vec![2e-4; 3],
            noise_pu_w: dbm_to_watts(-40.0),
            noise_su_w: dbm_to_watts(-40.0),
            weights: vec![1.0; 3],
            geometry: Geometry::default(),
            rician: LinkParams { sap_pu: 0.0, sap_su: 0.0, sap_irs: 0.0, irs_pu: 1.0, irs_su: 1.0 },
            path_loss_exponent: LinkParams::uniform(2.0),
            beta0_db: -30.0,
            d0_m: 1.0,
            los_model: LosModel::Ula,
            seed: 1,
        }
    }
}

/// One rejected field of a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ScenarioConfig {
    /// Default system with a single PU.
    pub fn single_pu() -> Self {
        Self { num_pus: 1, interference_caps_w: vec![2e-4], ..Self::default() }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn with_elements(mut self, m: usize) -> Self {
        self.num_elements = m;
        self
    }

    pub fn with_power(mut self, p: f64) -> Self {
        self.p_max_w = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Every violated invariant, in field order.
    pub fn violations(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        let mut bad = |field: &str, message: String| {
            out.push(ConfigViolation { field: field.to_string(), message })
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;

        if self.num_pus < 1 {
            bad("num_pus", "at least one primary user is required".into());
        }
        if self.num_sus < 1 {
            bad("num_sus", "at least one secondary user is required".into());
        }
        for (name, v) in [("n_sa", self.n_sa), ("n_pu", self.n_pu), ("n_su", self.n_su)] {
            if v < 1 {
                bad(name, "antenna count must be at least 1".into());
            }
        }
        let max_streams = self.n_sa.min(self.n_su);
        if self.streams < 1 || self.streams > max_streams {
            bad(
                "streams",
                format!(
                    "stream constraint 1 <= d <= min(n_sa, n_su) = {max_streams} violated (d = {})",
                    self.streams
                ),
            );
        }
        if !positive(self.p_max_w) {
            bad("p_max_w", format!("must be a positive power in Watts, got {}", self.p_max_w));
        }
        if self.interference_caps_w.len() != self.num_pus {
            bad(
                "interference_caps_w",
                format!("expected {} entries (one per PU), got {}", self.num_pus, self.interference_caps_w.len()),
            );
        }
        for (k, &g) in self.interference_caps_w.iter().enumerate() {
            if !positive(g) {
                bad(&format!("interference_caps_w[{k}]"), format!("must be a positive power in Watts, got {g}"));
            }
        }
        if !positive(self.noise_pu_w) {
            bad("noise_pu_w", format!("must be positive, got {}", self.noise_pu_w));
        }
        if !positive(self.noise_su_w) {
            bad("noise_su_w", format!("must be positive, got {}", self.noise_su_w));
        }
        if self.weights.len() != self.num_sus {
            bad("weights", format!("expected {} entries (one per SU), got {}", self.num_sus, self.weights.len()));
        }
        for (l, &w) in self.weights.iter().enumerate() {
            if !positive(w) {
                bad(&format!("weights[{l}]"), format!("must be positive, got {w}"));
            }
        }
        let g = &self.geometry;
        for (name, p) in [("sap", g.sap), ("irs", g.irs), ("pu_center", g.pu_center), ("su_center", g.su_center)] {
            if !p.iter().all(|v| v.is_finite()) {
                bad(&format!("geometry.{name}"), "coordinates must be finite".into());
            }
        }
        for (name, r) in [("pu_radius_m", g.pu_radius_m), ("su_radius_m", g.su_radius_m)] {
            if !(r.is_finite() && r >= 0.0) {
                bad(&format!("geometry.{name}"), format!("radius must be >= 0, got {r}"));
            }
        }
        for (name, k) in self.rician.entries() {
            if !(k.is_finite() && k >= 0.0) {
                bad(&format!("rician.{name}"), format!("Rician factor must be >= 0, got {k}"));
            }
        }
        for (name, a) in self.path_loss_exponent.entries() {
            if !(a.is_finite() && a >= 0.0) {
                bad(&format!("path_loss_exponent.{name}"), format!("must be >= 0, got {a}"));
            }
        }
        if !self.beta0_db.is_finite() {
            bad("beta0_db", "must be finite".into());
        }
        if !positive(self.d0_m) {
            bad("d0_m", format!("reference distance must be positive, got {}", self.d0_m));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Baseband channels of one realization. `h_sap_pu[k]` is `N_PU x N_SA`,
/// `h_sap_su[l]` is `N_SU x N_SA`, `h_sap_irs` is `M x N_SA`, `h_irs_pu[k]` is
/// `N_PU x M` and `h_irs_su[l]` is `N_SU x M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_sap_pu: Vec<CMatrix>,
    pub h_sap_su: Vec<CMatrix>,
    pub h_sap_irs: CMatrix,
    pub h_irs_pu: Vec<CMatrix>,
    pub h_irs_su: Vec<CMatrix>,
}

impl ChannelSet {
    pub fn num_pus(&self) -> usize {
        self.h_sap_pu.len()
    }

    pub fn num_sus(&self) -> usize {
        self.h_sap_su.len()
    }

    pub fn num_elements(&self) -> usize {
        self.h_sap_irs.nrows()
    }

    pub fn n_sa(&self) -> usize {
        self.h_sap_irs.ncols()
    }

    /// Same direct links with the IRS removed (`M = 0`).
    pub fn without_irs(&self) -> Self {
        let n_sa = self.n_sa();
        Self {
            h_sap_pu: self.h_sap_pu.clone(),
            h_sap_su: self.h_sap_su.clone(),
            h_sap_irs: CMatrix::zeros(0, n_sa),
            h_irs_pu: self.h_irs_pu.iter().map(|h| CMatrix::zeros(h.nrows(), 0)).collect(),
            h_irs_su: self.h_irs_su.iter().map(|h| CMatrix::zeros(h.nrows(), 0)).collect(),
        }
    }

    /// Keeps only PU `k`.
    pub fn single_pu(&self, k: usize) -> Self {
        Self {
            h_sap_pu: vec![self.h_sap_pu[k].clone()],
            h_irs_pu: vec![self.h_irs_pu[k].clone()],
            ..self.clone()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.all_matrices().all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    fn all_matrices(&self) -> impl Iterator<Item = &CMatrix> {
        self.h_sap_pu
            .iter()
            .chain(&self.h_sap_su)
            .chain(std::iter::once(&self.h_sap_irs))
            .chain(&self.h_irs_pu)
            .chain(&self.h_irs_su)
    }

    /// Short hex digest of every entry; identical channels give identical
    /// fingerprints.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for m in self.all_matrices() {
            h.update((m.nrows() as u64).to_le_bytes());
            h.update((m.ncols() as u64).to_le_bytes());
            for z in m.iter() {
                h.update(z.re.to_bits().to_le_bytes());
                h.update(z.im.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Node positions and channels of one realization.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub pu_positions: Vec<Point>,
    pub su_positions: Vec<Point>,
    pub channels: ChannelSet,
}

/// Linear power gain `10^((β0 - 10 α log10(dist / d0)) / 10)`.
pub fn path_loss_linear(dist: f64, alpha: f64, beta0_db: f64, d0: f64) -> Result<f64> {
    if !(dist > 0.0) || !(d0 > 0.0) {
        return Err(Error::Infeasible(format!("path loss needs positive distances (dist = {dist}, d0 = {d0})")));
    }
    let db = beta0_db - 10.0 * alpha * (dist / d0).log10();
    Ok(10f64.powf(db / 10.0))
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn ula_steering(n: usize, angle: f64) -> Vec<Complex64> {
    (0..n).map(|i| Complex64::from_polar(1.0, PI * i as f64 * angle.sin())).collect()
}

/// Line-of-sight matrix (`rows` receive antennas at `rx`, `cols` transmit
/// antennas at `tx`). Every entry has unit modulus.
pub fn los_matrix(model: LosModel, rows: usize, cols: usize, tx: Point, rx: Point) -> CMatrix {
    match model {
        LosModel::Ones => CMatrix::from_element(rows, cols, Complex64::new(1.0, 0.0)),
        LosModel::Ula => {
            let departure = (rx[1] - tx[1]).atan2(rx[0] - tx[0]);
            let arrival = (tx[1] - rx[1]).atan2(tx[0] - rx[0]);
            let a_rx = ula_steering(rows, arrival);
            let a_tx = ula_steering(cols, departure);
            CMatrix::from_fn(rows, cols, |i, j| a_rx[i] * a_tx[j].conj())
        }
    }
}

/// `sqrt(β/(κ+1)) (sqrt(κ) H_LoS + H_NLoS)` with unit-variance circularly
/// symmetric Gaussian `H_NLoS`. The shape is taken from `los`.
pub fn sample_rician<R: Rng + ?Sized>(los: &CMatrix, kappa: f64, beta: f64, rng: &mut R) -> CMatrix {
    debug_assert!(kappa >= 0.0 && beta > 0.0);
    let scale = (beta / (kappa + 1.0)).sqrt();
    let los_amp = kappa.sqrt();
    CMatrix::from_fn(los.nrows(), los.ncols(), |i, j| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let nlos = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        (los[(i, j)] * los_amp + nlos) * scale
    })
}

fn sample_in_disk<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    [center[0] + r * phi.cos(), center[1] + r * phi.sin()]
}

/// Draws node positions and every channel of the configured system.
/// Deterministic in `cfg.seed`.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = &cfg.geometry;
    let pu_positions: Vec<Point> =
        (0..cfg.num_pus).map(|_| sample_in_disk(g.pu_center, g.pu_radius_m, &mut rng)).collect();
    let su_positions: Vec<Point> =
        (0..cfg.num_sus).map(|_| sample_in_disk(g.su_center, g.su_radius_m, &mut rng)).collect();

    let m = cfg.num_elements;
    let mut link = |rows: usize, cols: usize, tx: Point, rx: Point, kappa: f64, alpha: f64| -> Result<CMatrix> {
        let beta = path_loss_linear(distance(tx, rx), alpha, cfg.beta0_db, cfg.d0_m)?;
        let los = los_matrix(cfg.los_model, rows, cols, tx, rx);
        Ok(sample_rician(&los, kappa, beta, &mut rng))
    };
    let (k_, a_) = (&cfg.rician, &cfg.path_loss_exponent);

    let h_sap_pu = pu_positions
        .iter()
        .map(|&p| link(cfg.n_pu, cfg.n_sa, g.sap, p, k_.sap_pu, a_.sap_pu))
        .collect::<Result<Vec<_>>>()?;
    let h_sap_su = su_positions
        .iter()
        .map(|&p| link(cfg.n_su, cfg.n_sa, g.sap, p, k_.sap_su, a_.sap_su))
        .collect::<Result<Vec<_>>>()?;
    let h_sap_irs = link(m, cfg.n_sa, g.sap, g.irs, k_.sap_irs, a_.sap_irs)?;
    let h_irs_pu = pu_positions
        .iter()
        .map(|&p| link(cfg.n_pu, m, g.irs, p, k_.irs_pu, a_.irs_pu))
        .collect::<Result<Vec<_>>>()?;
    let h_irs_su = su_positions
        .iter()
        .map(|&p| link(cfg.n_su, m, g.irs, p, k_.irs_su, a_.irs_su))
        .collect::<Result<Vec<_>>>()?;

    Ok(Scenario {
        pu_positions,
        su_positions,
        channels: ChannelSet { h_sap_pu, h_sap_su, h_sap_irs, h_irs_pu, h_irs_su },
    })
}
