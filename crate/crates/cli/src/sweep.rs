//! Point evaluation and two-dimensional parameter grids.

use optomech::dynamics::{build_model, is_stable, max_real_eigenvalue, stability_margin};
use optomech::lyapunov::{reduce_to_optomechanical, solve_model};
use optomech::measures::{log_negativity, min_symplectic_eigenvalue, occupancy};
use optomech::params::{solve_steady_state, Branch, SystemParams};
use optomech::spectral::{approx_n_eff, regime_warnings};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    PowerMw,
    DeltaOverOmegaM,
    KappaOverOmegaM,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::PowerMw => "power_mw",
            AxisName::DeltaOverOmegaM => "delta_over_omega_m",
            AxisName::KappaOverOmegaM => "kappa_over_omega_m",
        }
    }

    /// Set this axis in a system block, clearing alternative units.
    pub fn apply(self, system: &mut SystemConfig, value: f64) {
        match self {
            AxisName::PowerMw => {
                system.laser_power_w = None;
                system.laser_power_mw = Some(value);
            }
            AxisName::DeltaOverOmegaM => {
                system.detuning_over_2pi_hz = None;
                system.detuning_over_omega_m = Some(value);
            }
            AxisName::KappaOverOmegaM => {
                system.kappa_over_2pi_hz = None;
                system.kappa_over_omega_m = Some(value);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn linear(name: AxisName, min: f64, max: f64, count: usize) -> Self {
        Axis {
            name,
            min,
            max,
            count,
            scale: Scale::Linear,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.count < 2 {
            return Err(format!("axis {} needs count ≥ 2, got {}", self.name.as_str(), self.count));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(format!(
                "axis {} needs finite min < max, got [{}, {}]",
                self.name.as_str(),
                self.min,
                self.max
            ));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(format!("log axis {} needs min > 0", self.name.as_str()));
        }
        Ok(())
    }

    /// Grid values; the endpoints are exact.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.max;
                }
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + t * (self.max - self.min),
                    Scale::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    EN,
    NEff,
    EtaMinus,
    StabilityMargin,
    GEff,
    AlphaAbs,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::EN,
        Output::NEff,
        Output::EtaMinus,
        Output::StabilityMargin,
        Output::GEff,
        Output::AlphaAbs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Output::EN => "e_n",
            Output::NEff => "n_eff",
            Output::EtaMinus => "eta_minus",
            Output::StabilityMargin => "stability_margin",
            Output::GEff => "g_eff",
            Output::AlphaAbs => "alpha_abs",
        }
    }

    pub fn value(self, r: &PointRecord) -> Option<f64> {
        match self {
            Output::EN => r.e_n,
            Output::NEff => r.n_eff,
            Output::EtaMinus => r.eta_minus,
            Output::StabilityMargin => r.stability_margin,
            Output::GEff => r.g_eff,
            Output::AlphaAbs => r.alpha_abs,
        }
    }
}

fn valid_outputs() -> String {
    Output::ALL.iter().map(|o| o.as_str()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default)]
    pub system: SystemConfig,
    pub x: Axis,
    pub y: Axis,
    pub outputs: Vec<Output>,
}

impl SweepConfig {
    /// Structural checks; returns the offending field with the message.
    pub fn validate(&self) -> Result<(), (ConfigError, &'static str)> {
        self.x.validate().map_err(|m| (ConfigError::new(m), "x"))?;
        self.y.validate().map_err(|m| (ConfigError::new(m), "y"))?;
        if self.x.name == self.y.name {
            return Err((ConfigError::new("x and y must sweep different parameters"), "y"));
        }
        if self.outputs.is_empty() {
            return Err((
                ConfigError::new(format!("no outputs requested; valid outputs are: {}", valid_outputs())),
                "outputs",
            ));
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if self.outputs[..i].contains(o) {
                return Err((ConfigError::new(format!("output {} listed twice", o.as_str())), "outputs"));
            }
        }
        self.system.to_params()?;
        Ok(())
    }

    /// Copy with the system block fully resolved.
    pub fn resolved(&self) -> Self {
        SweepConfig {
            system: self.system.resolved(),
            ..self.clone()
        }
    }

    /// System block for one grid point.
    pub fn system_at(&self, x: f64, y: f64) -> SystemConfig {
        let mut s = self.system.clone();
        self.x.name.apply(&mut s, x);
        self.y.name.apply(&mut s, y);
        s
    }
}

/// Everything computed at one working point. Measures are `None` unless
/// the point is stable and the covariance was obtained.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointRecord {
    pub stable: bool,
    pub branch: Option<Branch>,
    /// G / G_threshold; absent for non-positive effective detuning.
    pub stability_margin: Option<f64>,
    pub max_real_eigenvalue: Option<f64>,
    pub g_eff: Option<f64>,
    pub alpha_abs: Option<f64>,
    pub e_n: Option<f64>,
    pub eta_minus: Option<f64>,
    pub nu_min: Option<f64>,
    /// ‖AV + VAᵀ + D‖_F / max(‖D‖_F, 1) of the Lyapunov solution.
    pub lyapunov_residual: Option<f64>,
    pub n_eff: Option<f64>,
    pub n_eff_approx: Option<f64>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

fn describe(p: &SystemParams) -> String {
    format!(
        "P = {:.6e} W, kappa/omega_m = {:.6}, detuning = {:?}, noise = {:?}",
        p.laser_power,
        p.kappa / p.omega_m,
        p.detuning,
        p.phase_noise
    )
}

/// Full pipeline at one working point. Failures are recorded in the
/// returned record with the stage and parameters that produced them.
pub fn evaluate_point(params: &SystemParams) -> PointRecord {
    let mut rec = PointRecord::default();
    let fail = |mut rec: PointRecord, stage: &str, e: optomech::Error| {
        rec.error = Some(format!("{stage}: {e} ({})", describe(params)));
        rec
    };
    let ss = match solve_steady_state(params) {
        Ok(ss) => ss,
        Err(e) => return fail(rec, "steady state", e),
    };
    rec.branch = Some(ss.branch);
    rec.g_eff = Some(ss.g_eff);
    rec.alpha_abs = Some(ss.alpha_abs);
    rec.stability_margin = stability_margin(params, &ss).ok();

    let model = build_model(params, &ss);
    rec.max_real_eigenvalue = max_real_eigenvalue(&model.drift).ok();
    rec.stable = is_stable(&model.drift);
    if !rec.stable {
        return rec;
    }
    rec.warnings = regime_warnings(params, &ss).iter().map(|w| w.to_string()).collect();

    let full = match solve_model(&model) {
        Ok(v) => v,
        Err(e) => return fail(rec, "lyapunov", e),
    };
    rec.lyapunov_residual = Some(full.residual / model.diffusion.norm().max(1.0));
    let v = if full.order() == 6 {
        match reduce_to_optomechanical(&full) {
            Ok(v) => v,
            Err(e) => return fail(rec, "reduction", e),
        }
    } else {
        full
    };
    let ent = match log_negativity(&v) {
        Ok(e) => e,
        Err(e) => return fail(rec, "log negativity", e),
    };
    rec.nu_min = min_symplectic_eigenvalue(&v).ok();
    rec.e_n = Some(ent.log_negativity);
    rec.eta_minus = Some(ent.eta_minus);
    rec.n_eff = Some(occupancy(&v, params.omega_m).n_eff);
    match approx_n_eff(params, &ss) {
        Ok(n) => rec.n_eff_approx = Some(n),
        Err(e) => rec.warnings.push(format!("approximate occupancy unavailable: {e}")),
    }
    rec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub y: f64,
    #[serde(flatten)]
    pub record: PointRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Resolved configuration that produced the rows.
    pub config: SweepConfig,
    /// Row-major with x as the outer index.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.record.error.is_some()).count()
    }

    pub fn max_of(&self, out: Output) -> Option<f64> {
        self.rows.iter().filter_map(|r| out.value(&r.record)).reduce(f64::max)
    }

    /// Fraction of all grid points where `pred` holds for the value of `out`.
    pub fn area_fraction(&self, out: Output, pred: impl Fn(f64) -> bool) -> f64 {
        let hits = self.rows.iter().filter(|r| out.value(&r.record).is_some_and(&pred)).count();
        hits as f64 / self.rows.len() as f64
    }
}

/// Evaluate every grid point in parallel. Per-point failures are kept in
/// the rows; only an invalid configuration aborts.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, ConfigError> {
    config.validate().map_err(|(e, _)| e)?;
    let xs = config.x.values();
    let ys = config.y.values();
    let points: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let rows = points
        .par_iter()
        .map(|&(x, y)| {
            let record = match config.system_at(x, y).to_params() {
                Ok(p) => evaluate_point(&p),
                Err((e, _)) => PointRecord {
                    error: Some(format!("parameters: {e}")),
                    ..Default::default()
                },
            };
            SweepRow { x, y, record }
        })
        .collect();
    Ok(SweepResult {
        config: config.resolved(),
        rows,
    })
}
