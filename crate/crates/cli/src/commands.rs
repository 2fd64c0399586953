//! The `point`, `spectrum` and `validate` subcommands as library calls.

use optomech::constants::TWO_PI;
use optomech::dynamics::{build_model, phase_noise_spectrum};
use optomech::lyapunov::{solve_lyapunov, solve_model};
use optomech::params::{solve_steady_state, NoiseSpec, SteadyState, SystemParams};
use optomech::spectral::{effective_response, laser_correlation};
use optomech::stochastic::{phase_noise_block, simulate_linear_system, simulate_phase_noise_with, TrajectoryConfig};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::output::{Cell, Table};
use crate::sweep::{evaluate_point, PointRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub steady_state: Option<SteadyState>,
    pub record: PointRecord,
}

pub fn point(params: &SystemParams) -> PointReport {
    PointReport {
        steady_state: solve_steady_state(params).ok(),
        record: evaluate_point(params),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub system: SystemConfig,
    /// Frequency grid, log-spaced; defaults span 10⁻⁴ ω_m to 10 ω_m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_min_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_max_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_points: Option<usize>,
    /// Delay grid, linear from 0; defaults to 10 coherence times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_points: Option<usize>,
}

impl SpectrumConfig {
    pub fn resolved(&self) -> Self {
        let system = self.system.resolved();
        let params = system.to_params().ok();
        let fm = system.omega_m_over_2pi_hz.unwrap_or(1e7);
        let tau_default = match params.map(|p| p.phase_noise) {
            Some(spec) if spec.linewidth() > 0.0 => 10.0 / spec.linewidth(),
            _ => 1e-3,
        };
        SpectrumConfig {
            system,
            frequency_min_hz: Some(self.frequency_min_hz.unwrap_or(1e-4 * fm)),
            frequency_max_hz: Some(self.frequency_max_hz.unwrap_or(10.0 * fm)),
            frequency_points: Some(self.frequency_points.unwrap_or(2001)),
            tau_max_s: Some(self.tau_max_s.unwrap_or(tau_default)),
            tau_points: Some(self.tau_points.unwrap_or(201)),
        }
    }

    pub fn validate(&self) -> Result<(), (String, &'static str)> {
        let r = self.resolved();
        let (lo, hi) = (r.frequency_min_hz.unwrap(), r.frequency_max_hz.unwrap());
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(("need 0 < frequency_min_hz < frequency_max_hz".into(), "frequency_min_hz"));
        }
        if r.frequency_points.unwrap() < 2 {
            return Err(("frequency_points must be ≥ 2".into(), "frequency_points"));
        }
        let tau = r.tau_max_s.unwrap();
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(("tau_max_s must be positive".into(), "tau_max_s"));
        }
        if r.tau_points.unwrap() < 2 {
            return Err(("tau_points must be ≥ 2".into(), "tau_points"));
        }
        Ok(())
    }
}

/// Frequency-noise spectrum and |χ_eff|² on a log grid, and C(τ) on a
/// linear grid. Entries that cannot be computed are left empty.
pub fn spectrum_tables(cfg: &SpectrumConfig, params: &SystemParams) -> (Table, Table) {
    let r = cfg.resolved();
    let (lo, hi, n) = (r.frequency_min_hz.unwrap(), r.frequency_max_hz.unwrap(), r.frequency_points.unwrap());
    let response = solve_steady_state(params).ok().and_then(|ss| effective_response(params, &ss).ok());
    let rows = (0..n)
        .map(|i| {
            let f = if i + 1 == n {
                hi
            } else {
                (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()
            };
            let w = TWO_PI * f;
            vec![
                Cell::Number(Some(f)),
                Cell::Number(Some(phase_noise_spectrum(&params.phase_noise, w))),
                Cell::Number(response.map(|resp| resp.chi(w).norm_sqr())),
            ]
        })
        .collect();
    let spectrum = Table {
        columns: vec!["frequency_hz".into(), "s_phidot".into(), "chi_eff_abs_sq".into()],
        rows,
    };

    let (tmax, m) = (r.tau_max_s.unwrap(), r.tau_points.unwrap());
    let rows = (0..m)
        .map(|i| {
            let tau = tmax * i as f64 / (m - 1) as f64;
            vec![
                Cell::Number(Some(tau)),
                Cell::Number(laser_correlation(&params.phase_noise, tau).ok()),
            ]
        })
        .collect();
    let correlation = Table {
        columns: vec!["tau_s".into(), "c_tau".into()],
        rows,
    };
    (spectrum, correlation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearCheckConfig {
    pub n_steps: usize,
    pub n_ensemble: usize,
    /// Defaults to 0.05 / max|λ|.
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_ensemble")]
    pub n_ensemble: usize,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_segment")]
    pub segment_len: usize,
    /// Optional Monte-Carlo check of the full fluctuation covariance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_system: Option<LinearCheckConfig>,
}

fn default_seed() -> u64 {
    1
}
fn default_ensemble() -> usize {
    64
}
fn default_steps() -> usize {
    1_000_000
}
fn default_segment() -> usize {
    32_768
}

/// Relative tolerance on the simulated stationary variances.
pub const VARIANCE_TOLERANCE: f64 = 5e-3;
/// Standard errors allowed between an estimate and its analytic value.
pub const SIGMA_TOLERANCE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub reference: f64,
    pub pass: bool,
}

impl CheckRow {
    fn sigma(check: impl Into<String>, estimate: f64, standard_error: f64, reference: f64) -> Self {
        CheckRow {
            check: check.into(),
            estimate,
            standard_error,
            reference,
            pass: (estimate - reference).abs() <= SIGMA_TOLERANCE * standard_error,
        }
    }

    fn relative(check: impl Into<String>, estimate: f64, standard_error: f64, reference: f64) -> Self {
        CheckRow {
            check: check.into(),
            estimate,
            standard_error,
            reference,
            pass: (estimate - reference).abs() <= VARIANCE_TOLERANCE * reference.abs(),
        }
    }
}

/// Step putting the band center on bin `len/128` of every power-of-two
/// segment length, with dt·Ω ≈ 0.049.
pub fn band_aligned_dt(omega_band: f64) -> f64 {
    TWO_PI / (128.0 * omega_band)
}

/// Monte-Carlo checks of the noise generator and, optionally, of the full
/// fluctuation covariance against the analytic results.
pub fn validation_checks(cfg: &ValidateConfig, params: &SystemParams) -> optomech::Result<Vec<CheckRow>> {
    let spec = params.phase_noise;
    let NoiseSpec::Bandpass {
        gamma_l,
        omega_band,
        gamma_tilde,
    } = spec
    else {
        return Err(optomech::Error::InvalidParameter {
            field: "phase_noise",
            reason: "validation needs the band-pass noise model".into(),
        });
    };
    let (a, d) = phase_noise_block(&spec)?;
    let dt = band_aligned_dt(omega_band);
    // Slowest relaxation rate of the auxiliary pair is the real part of
    // its eigenvalues, γ̃/2 for an underdamped pair.
    let slow = if gamma_tilde < 2.0 * omega_band {
        0.5 * gamma_tilde
    } else {
        0.5 * (gamma_tilde - (gamma_tilde * gamma_tilde - 4.0 * omega_band * omega_band).sqrt())
    };
    let traj = TrajectoryConfig {
        dt,
        n_steps: cfg.n_steps,
        n_ensemble: cfg.n_ensemble,
        seed: cfg.seed,
        burn_in: (10.0 / (slow * dt)).ceil() as usize,
        integrator: Default::default(),
    };
    let run = simulate_phase_noise_with(&spec, &traj, cfg.segment_len)?;
    let mut rows = Vec::new();
    let (zero, zero_se) = run
        .spectrum
        .band(f64::MIN_POSITIVE, 0.02 * omega_band)
        .ok_or_else(|| optomech::Error::InvalidTrajectory("segments too short to resolve the low band".into()))?;
    rows.push(CheckRow::sigma("s_phidot_low_band", zero, zero_se, 2.0 * gamma_l));
    let (center, center_se) = run.spectrum.at(omega_band);
    let k = run.spectrum.nearest_bin(omega_band);
    let exact = phase_noise_spectrum(&spec, run.spectrum.frequencies[k]);
    rows.push(CheckRow::sigma("s_phidot_band_center", center, center_se, exact));

    let v = solve_lyapunov(&a, &d)?;
    let m = &run.moments;
    rows.push(CheckRow::relative("var_psi", m.covariance.get(0, 0), m.standard_errors[(0, 0)], v.get(0, 0)));
    rows.push(CheckRow::sigma("cov_psi_theta", m.covariance.get(0, 1), m.standard_errors[(0, 1)], v.get(0, 1)));
    rows.push(CheckRow::relative("var_theta", m.covariance.get(1, 1), m.standard_errors[(1, 1)], v.get(1, 1)));

    if let Some(lin) = &cfg.linear_system {
        let ss = solve_steady_state(params)?;
        let model = build_model(params, &ss);
        let exact = solve_model(&model)?;
        let eig = model.drift.clone().complex_eigenvalues();
        let fastest = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let slowest = eig.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
        let dt = lin.dt.unwrap_or(0.05 / fastest);
        let traj = TrajectoryConfig {
            dt,
            n_steps: lin.n_steps,
            n_ensemble: lin.n_ensemble,
            seed: cfg.seed,
            burn_in: (10.0 / (slowest * dt)).ceil() as usize,
            integrator: Default::default(),
        };
        let est = simulate_linear_system(&model, &traj)?;
        let labels = model.layout.labels();
        for i in 0..model.dim() {
            for j in i..model.dim() {
                rows.push(CheckRow::sigma(
                    format!("v_{}_{}", labels[i], labels[j]),
                    est.covariance.get(i, j),
                    est.standard_errors[(i, j)],
                    exact.get(i, j),
                ));
            }
        }
    }
    Ok(rows)
}

pub fn check_table(rows: &[CheckRow]) -> Table {
    Table {
        columns: ["check", "estimate", "standard_error", "reference", "pass"]
            .map(String::from)
            .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Text(r.check.clone()),
                    Cell::Number(Some(r.estimate)),
                    Cell::Number(Some(r.standard_error)),
                    Cell::Number(Some(r.reference)),
                    Cell::Flag(r.pass),
                ]
            })
            .collect(),
    }
}
