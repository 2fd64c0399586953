//! JSON configuration with unit-suffixed field names.
//!
//! Every quantity names its unit, so `kappa_over_omega_m` and
//! `kappa_over_2pi_hz` are alternatives for the same parameter. Omitted
//! fields fall back to the reference working point; [`SystemConfig::resolved`]
//! writes those defaults back so the stored configuration is complete.

use std::fmt;

use optomech::constants::TWO_PI;
use optomech::params::{BranchPolicy, Detuning, NoiseSpec, SystemParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Configuration problem with a location in the source text when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            column: None,
            message: message.into(),
        }
    }

    /// Point the error at the first occurrence of `"field"` in `text`.
    pub fn locate(mut self, text: &str, field: &str) -> Self {
        let needle = format!("\"{field}\"");
        for (n, line) in text.lines().enumerate() {
            if let Some(col) = line.find(&needle) {
                self.line = Some(n + 1);
                self.column = Some(col + 1);
                break;
            }
        }
        self
    }
}

/// Parse JSON into `T`, keeping serde's line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError {
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseNoiseConfig {
    None,
    White {
        linewidth_over_2pi_hz: f64,
    },
    Bandpass {
        linewidth_over_2pi_hz: f64,
        band_center_over_2pi_hz: f64,
        /// Defaults to half the band center.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth_over_2pi_hz: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningKind {
    Effective,
    Bare,
}

macro_rules! system_fields {
    ($($name:ident: $ty:ty),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct SystemConfig {
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $name: Option<$ty>,
            )*
        }
    };
}

system_fields! {
    omega_m_over_2pi_hz: f64,
    quality_factor: f64,
    kappa_over_omega_m: f64,
    kappa_over_2pi_hz: f64,
    detuning_over_omega_m: f64,
    detuning_over_2pi_hz: f64,
    detuning_kind: DetuningKind,
    g0_rad_per_s: f64,
    laser_power_mw: f64,
    laser_power_w: f64,
    wavelength_nm: f64,
    temperature_k: f64,
    cavity_thermal_occupancy: f64,
    branch: BranchPolicy,
    phase_noise: PhaseNoiseConfig,
}

fn exclusive(a: Option<f64>, b: Option<f64>, na: &'static str, nb: &'static str) -> Result<(), ConfigError> {
    if a.is_some() && b.is_some() {
        return Err(ConfigError::new(format!("give either {na} or {nb}, not both")));
    }
    Ok(())
}

impl SystemConfig {
    /// Reference working point, with phase noise switched off.
    pub fn reference() -> Self {
        SystemConfig::default().resolved()
    }

    /// Copy with every omitted field set to its default.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.omega_m_over_2pi_hz.get_or_insert(1e7);
        c.quality_factor.get_or_insert(2e6);
        if c.kappa_over_2pi_hz.is_none() {
            c.kappa_over_omega_m.get_or_insert(0.5);
        }
        if c.detuning_over_2pi_hz.is_none() {
            c.detuning_over_omega_m.get_or_insert(1.0);
        }
        c.detuning_kind.get_or_insert(DetuningKind::Effective);
        c.g0_rad_per_s.get_or_insert(1e3);
        if c.laser_power_w.is_none() {
            c.laser_power_mw.get_or_insert(20.0);
        }
        c.wavelength_nm.get_or_insert(810.0);
        c.temperature_k.get_or_insert(0.4);
        c.cavity_thermal_occupancy.get_or_insert(0.0);
        c.branch.get_or_insert(BranchPolicy::Lower);
        let noise = c.phase_noise.get_or_insert(PhaseNoiseConfig::None);
        if let PhaseNoiseConfig::Bandpass {
            band_center_over_2pi_hz,
            bandwidth_over_2pi_hz,
            ..
        } = noise
        {
            bandwidth_over_2pi_hz.get_or_insert(0.5 * *band_center_over_2pi_hz);
        }
        c
    }

    /// Convert to SI parameters and validate. Errors name the offending field;
    /// use [`ConfigError::locate`] to attach a line.
    pub fn to_params(&self) -> Result<SystemParams, (ConfigError, &'static str)> {
        let c = self.resolved();
        exclusive(c.kappa_over_omega_m, c.kappa_over_2pi_hz, "kappa_over_omega_m", "kappa_over_2pi_hz")
            .map_err(|e| (e, "kappa_over_2pi_hz"))?;
        exclusive(c.detuning_over_omega_m, c.detuning_over_2pi_hz, "detuning_over_omega_m", "detuning_over_2pi_hz")
            .map_err(|e| (e, "detuning_over_2pi_hz"))?;
        exclusive(c.laser_power_mw, c.laser_power_w, "laser_power_mw", "laser_power_w")
            .map_err(|e| (e, "laser_power_w"))?;

        let omega_m = TWO_PI * c.omega_m_over_2pi_hz.unwrap();
        let kappa = match c.kappa_over_2pi_hz {
            Some(hz) => TWO_PI * hz,
            None => c.kappa_over_omega_m.unwrap() * omega_m,
        };
        let delta = match c.detuning_over_2pi_hz {
            Some(hz) => TWO_PI * hz,
            None => c.detuning_over_omega_m.unwrap() * omega_m,
        };
        let detuning = match c.detuning_kind.unwrap() {
            DetuningKind::Effective => Detuning::Effective(delta),
            DetuningKind::Bare => Detuning::Bare(delta),
        };
        let laser_power = match c.laser_power_w {
            Some(w) => w,
            None => 1e-3 * c.laser_power_mw.unwrap(),
        };
        let phase_noise = match c.phase_noise.clone().unwrap() {
            PhaseNoiseConfig::None => NoiseSpec::None,
            PhaseNoiseConfig::White { linewidth_over_2pi_hz } => NoiseSpec::White {
                gamma_l: TWO_PI * linewidth_over_2pi_hz,
            },
            PhaseNoiseConfig::Bandpass {
                linewidth_over_2pi_hz,
                band_center_over_2pi_hz,
                bandwidth_over_2pi_hz,
            } => NoiseSpec::Bandpass {
                gamma_l: TWO_PI * linewidth_over_2pi_hz,
                omega_band: TWO_PI * band_center_over_2pi_hz,
                gamma_tilde: TWO_PI * bandwidth_over_2pi_hz.unwrap(),
            },
        };
        let params = SystemParams {
            omega_m,
            quality_factor: c.quality_factor.unwrap(),
            kappa,
            detuning,
            g0: c.g0_rad_per_s.unwrap(),
            laser_power,
            laser_wavelength: 1e-9 * c.wavelength_nm.unwrap(),
            bath_temperature: c.temperature_k.unwrap(),
            phase_noise,
            cavity_thermal_occupancy: c.cavity_thermal_occupancy.unwrap(),
            branch_policy: c.branch.unwrap(),
        };
        params.validate().map_err(|e| {
            let field = match &e {
                optomech::Error::InvalidParameter { field, .. } => config_field(field, self),
                _ => "",
            };
            (ConfigError::new(e.to_string()), field)
        })?;
        Ok(params)
    }
}

/// Map a library parameter name to the config field that set it.
fn config_field(param: &str, c: &SystemConfig) -> &'static str {
    match param {
        "omega_m" => "omega_m_over_2pi_hz",
        "quality_factor" => "quality_factor",
        "kappa" if c.kappa_over_2pi_hz.is_some() => "kappa_over_2pi_hz",
        "kappa" => "kappa_over_omega_m",
        "detuning" if c.detuning_over_2pi_hz.is_some() => "detuning_over_2pi_hz",
        "detuning" => "detuning_over_omega_m",
        "g0" => "g0_rad_per_s",
        "laser_power" if c.laser_power_w.is_some() => "laser_power_w",
        "laser_power" => "laser_power_mw",
        "laser_wavelength" => "wavelength_nm",
        "bath_temperature" => "temperature_k",
        "cavity_thermal_occupancy" => "cavity_thermal_occupancy",
        "phase_noise.gamma_l" => "linewidth_over_2pi_hz",
        "phase_noise.omega_band" => "band_center_over_2pi_hz",
        "phase_noise.gamma_tilde" => "bandwidth_over_2pi_hz",
        _ => "",
    }
}

/// Resolve a system block from `text`, attaching a line to semantic errors.
pub fn system_params(config: &SystemConfig, text: &str) -> Result<SystemParams, ConfigError> {
    config.to_params().map_err(|(e, field)| if field.is_empty() { e } else { e.locate(text, field) })
}
