//! Experiment configuration, physical constants and reproducible path phases.
//!
//! A [`Scenario`] is a flat key/value TOML document. Unknown keys are rejected so
//! that a misspelled unit-bearing key never silently falls back to a default.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum separation between a scatterer and any node (m).
const MIN_SEPARATION: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key,
        reason: reason.into(),
    }
}

/// Which receiver a link terminates at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// Legitimate base station.
    Bob,
    /// Unauthorized base station.
    Eve,
}

impl Link {
    fn stream(self) -> u64 {
        match self {
            Link::Bob => 1,
            Link::Eve => 2,
        }
    }
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Link::Bob => write!(f, "bob"),
            Link::Eve => write!(f, "eve"),
        }
    }
}

/// Reference orientation for the UE's departure angles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AodFrame {
    /// The UE has one physical array, so every link's departure angles
    /// subtract `phi_b` and a scatterer is seen at the same angle by both
    /// links. `phi_e` then only labels Eve's orientation nuisance parameter.
    #[default]
    Shared,
    /// Each link subtracts its own orientation (`phi_b` or `phi_e`).
    PerLink,
}

/// Geometry, array sizes, RF/OFDM constants and the phase seed.
///
/// Positions are 2-D in metres, angles in radians, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// UE (Alice) position.
    pub p_a: [f64; 2],
    /// Legitimate receiver position.
    pub p_b: [f64; 2],
    /// Unauthorized receiver position.
    pub p_e: [f64; 2],
    /// Scatter point positions, one NLOS path each.
    pub scatterers: Vec<[f64; 2]>,
    pub m_a: usize,
    pub m_b: usize,
    pub m_e: usize,
    /// Total transmit power budget (dBm).
    pub p_dbm: f64,
    /// Carrier frequency (Hz).
    pub f_c: f64,
    /// Signal bandwidth (Hz).
    pub bandwidth: f64,
    /// Number of OFDM subcarriers.
    pub subcarriers: usize,
    /// Pilot symbols per slot.
    pub pilots_per_slot: usize,
    /// Number of slots, i.e. beamformer columns.
    pub slots: usize,
    pub noise_figure_db: f64,
    /// Single-sided noise PSD (dBm/Hz).
    pub n0_dbm_hz: f64,
    pub dt_b: f64,
    pub dt_e: f64,
    /// UE orientation relative to the legitimate receiver's frame.
    pub phi_b: f64,
    /// UE orientation relative to the unauthorized receiver's frame.
    pub phi_e: f64,
    /// Radar cross section of every scatterer (m^2).
    pub sigma_rcs: f64,
    /// Seed for the random path phases.
    pub seed: u64,
    #[serde(default)]
    pub aod_frame: AodFrame,
}

/// Quantities derived from a [`Scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Wavelength (m).
    pub lambda: f64,
    /// Subcarrier spacing (Hz).
    pub delta_f: f64,
    /// Per-subcarrier noise power (W).
    pub sigma2: f64,
    /// Total power budget (W).
    pub p_lin: f64,
    /// Per-subcarrier covariance trace cap `p_lin / subcarriers` (W).
    pub power_cap: f64,
}

pub fn dbm_to_watt(x_dbm: f64) -> f64 {
    10f64.powf((x_dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(x_watt: f64) -> f64 {
    10.0 * x_watt.log10() + 30.0
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// The reference configuration: three 16-antenna nodes, two scatterers,
/// 28 GHz carrier with 120 MHz over 1024 subcarriers.
pub fn default_scenario() -> Scenario {
    Scenario {
        p_a: [0.0, 0.0],
        p_b: [-5.0, 20.0],
        p_e: [4.0, 20.0],
        scatterers: vec![[-10.0, 15.0], [5.0, 15.0]],
        m_a: 16,
        m_b: 16,
        m_e: 16,
        p_dbm: -20.0,
        f_c: 28e9,
        bandwidth: 120e6,
        subcarriers: 1024,
        pilots_per_slot: 100,
        slots: 16,
        noise_figure_db: 10.0,
        n0_dbm_hz: -173.855,
        dt_b: 1e-6,
        dt_e: 1e-6,
        phi_b: 110.0 * PI / 180.0,
        phi_e: 200.0 * PI / 180.0,
        sigma_rcs: 100.0,
        seed: 0,
        aod_frame: AodFrame::Shared,
    }
}

impl Default for Scenario {
    fn default() -> Self {
        default_scenario()
    }
}

fn finite_point(key: &'static str, p: &[f64; 2]) -> Result<(), ScenarioError> {
    if p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(key, format!("non-finite position {p:?}")))
    }
}

pub(crate) fn distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Number of scatterers `K`.
    pub fn num_scatterers(&self) -> usize {
        self.scatterers.len()
    }

    pub fn receiver_position(&self, link: Link) -> [f64; 2] {
        match link {
            Link::Bob => self.p_b,
            Link::Eve => self.p_e,
        }
    }

    pub fn receiver_antennas(&self, link: Link) -> usize {
        match link {
            Link::Bob => self.m_b,
            Link::Eve => self.m_e,
        }
    }

    pub fn clock_bias(&self, link: Link) -> f64 {
        match link {
            Link::Bob => self.dt_b,
            Link::Eve => self.dt_e,
        }
    }

    pub fn orientation(&self, link: Link) -> f64 {
        match link {
            Link::Bob => self.phi_b,
            Link::Eve => self.phi_e,
        }
    }

    /// Orientation subtracted from the departure bearings of `link`.
    pub fn departure_orientation(&self, link: Link) -> f64 {
        match self.aod_frame {
            AodFrame::Shared => self.phi_b,
            AodFrame::PerLink => self.orientation(link),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (key, m) in [("m_a", self.m_a), ("m_b", self.m_b), ("m_e", self.m_e)] {
            if m < 2 {
                return Err(invalid(key, format!("need at least 2 antennas, got {m}")));
            }
        }
        for (key, m) in [
            ("subcarriers", self.subcarriers),
            ("pilots_per_slot", self.pilots_per_slot),
            ("slots", self.slots),
        ] {
            if m < 1 {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid("bandwidth", "must be positive and finite"));
        }
        if !(self.f_c > 0.0 && self.f_c.is_finite()) {
            return Err(invalid("f_c", "must be positive and finite"));
        }
        for (key, v) in [
            ("p_dbm", self.p_dbm),
            ("noise_figure_db", self.noise_figure_db),
            ("n0_dbm_hz", self.n0_dbm_hz),
            ("dt_b", self.dt_b),
            ("dt_e", self.dt_e),
            ("phi_b", self.phi_b),
            ("phi_e", self.phi_e),
        ] {
            if !v.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        if !(self.sigma_rcs > 0.0 && self.sigma_rcs.is_finite()) {
            return Err(invalid("sigma_rcs", "must be positive and finite"));
        }
        finite_point("p_a", &self.p_a)?;
        finite_point("p_b", &self.p_b)?;
        finite_point("p_e", &self.p_e)?;
        for (key, node) in [("p_b", &self.p_b), ("p_e", &self.p_e)] {
            if distance(&self.p_a, node) <= MIN_SEPARATION {
                return Err(invalid(key, "coincides with p_a"));
            }
        }
        for p in &self.scatterers {
            finite_point("scatterers", p)?;
            for node in [&self.p_a, &self.p_b, &self.p_e] {
                if distance(p, node) <= MIN_SEPARATION {
                    return Err(invalid(
                        "scatterers",
                        format!("scatterer {p:?} coincides with node {node:?}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn derive_constants(s: &Scenario) -> Result<DerivedConstants, ScenarioError> {
    if !(s.bandwidth > 0.0) {
        return Err(invalid("bandwidth", "must be positive"));
    }
    if s.subcarriers == 0 {
        return Err(invalid("subcarriers", "must be positive"));
    }
    if !(s.f_c > 0.0) {
        return Err(invalid("f_c", "must be positive"));
    }
    let delta_f = s.bandwidth / s.subcarriers as f64;
    let sigma2 = db_to_linear(s.noise_figure_db) * dbm_to_watt(s.n0_dbm_hz) * delta_f;
    let p_lin = dbm_to_watt(s.p_dbm);
    Ok(DerivedConstants {
        lambda: SPEED_OF_LIGHT / s.f_c,
        delta_f,
        sigma2,
        p_lin,
        power_cap: p_lin / s.subcarriers as f64,
    })
}

/// Uniform phases in `[0, 2π)` for the LOS path and every scatterer path of one
/// link. Each link draws from its own ChaCha stream under the scenario seed.
pub fn draw_path_phases(s: &Scenario, link: Link) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(link.stream());
    (0..=s.num_scatterers())
        .map(|_| {
            let w = rng.random::<f64>() * TAU;
            if w >= TAU {
                0.0
            } else {
                w
            }
        })
        .collect()
}
