//! Frequency-domain view of the fluctuations: effective mechanical response,
//! sideband scattering rates, closed-form approximations for entanglement and
//! cooling, and a quadrature oracle for the stationary covariance.

mod correlation;
mod oracle;

pub use correlation::laser_correlation;
pub use oracle::{
    approx_cm_phase_correction, cm_spectral_oracle, OracleOptions, SpectralCovariance,
};

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::phase_noise_spectrum;
use crate::error::{Error, Result};
use crate::params::{SteadyState, SystemParams};

/// Mechanical response dressed by radiation pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveResponse {
    pub omega_eff: f64,
    pub gamma_eff: f64,
    omega_m: f64,
    gamma_m: f64,
    g: f64,
    delta: f64,
    kappa: f64,
}

impl EffectiveResponse {
    /// χ_eff(ω) = [ω_m² − ω² − iγ_mω − G²Δω_m/((κ − iω)² + Δ²)]⁻¹
    pub fn chi(&self, omega: f64) -> Complex<f64> {
        susceptibility(self.omega_m, self.gamma_m, self.g, self.delta, self.kappa, omega)
    }
}

pub(crate) fn susceptibility(omega_m: f64, gamma_m: f64, g: f64, delta: f64, kappa: f64, omega: f64) -> Complex<f64> {
    let kw = Complex::new(kappa, -omega);
    let cav = kw * kw + delta * delta;
    let bare = Complex::new(omega_m * omega_m - omega * omega, -gamma_m * omega);
    (bare - Complex::new(g * g * delta * omega_m, 0.0) / cav).inv()
}

/// Product [κ² + (ω − Δ)²][κ² + (ω + Δ)²].
pub(crate) fn sideband_denominator(kappa: f64, delta: f64, omega: f64) -> f64 {
    let k2 = kappa * kappa;
    (k2 + (omega - delta).powi(2)) * (k2 + (omega + delta).powi(2))
}

fn response_parts(omega_m: f64, gamma_m: f64, g: f64, delta: f64, kappa: f64) -> Result<EffectiveResponse> {
    let den = sideband_denominator(kappa, delta, omega_m);
    let g2dw = g * g * delta * omega_m;
    let radicand = omega_m * omega_m - g2dw * (kappa * kappa - omega_m * omega_m + delta * delta) / den;
    if radicand < 0.0 {
        return Err(Error::ImaginaryFrequency { radicand });
    }
    Ok(EffectiveResponse {
        omega_eff: radicand.sqrt(),
        gamma_eff: gamma_m + 2.0 * g2dw * kappa / den,
        omega_m,
        gamma_m,
        g,
        delta,
        kappa,
    })
}

pub fn effective_response(params: &SystemParams, ss: &SteadyState) -> Result<EffectiveResponse> {
    response_parts(params.omega_m, params.gamma_m(), ss.g_eff, ss.delta_eff, params.kappa)
}

/// Stokes (A₊) and anti-Stokes (A₋) scattering rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringRates {
    pub a_plus: f64,
    pub a_minus: f64,
    /// Net optical damping A₋ − A₊.
    pub gamma_op: f64,
}

pub fn scattering_rates_raw(omega_m: f64, kappa: f64, delta: f64, g: f64) -> ScatteringRates {
    let rate = |shift: f64| kappa * g * g / 2.0 / (kappa * kappa + shift * shift);
    let a_plus = rate(delta + omega_m);
    let a_minus = rate(delta - omega_m);
    ScatteringRates {
        a_plus,
        a_minus,
        gamma_op: a_minus - a_plus,
    }
}

pub fn scattering_rates(params: &SystemParams, ss: &SteadyState) -> ScatteringRates {
    scattering_rates_raw(params.omega_m, params.kappa, ss.delta_eff, ss.g_eff)
}

/// η⁻ near the bistability threshold with the phase-noise spectrum frozen at
/// `s`, thermal terms dropped.
pub fn threshold_eta_minus_raw(kappa: f64, delta: f64, omega_m: f64, photon_number: f64, s: f64) -> f64 {
    let (k, d, w, n) = (kappa, delta, omega_m, photon_number);
    let (k2, d2, w2) = (k * k, d * d, w * w);
    let a = k.powi(3) * (k2 + d2) * (4.0 * d2 * d2 + 4.0 * d2 * (k2 + w2) + w2 * w2);
    let b = 2.0 * n * d2 * k2 * (4.0 * (d2 + k2) * (2.0 * d2 + k2) + 6.0 * (d2 + k2) * w2 + w2 * w2);
    let c = 4.0 * n * n * d2 * d2 * k * (5.0 * (d2 + k2) + 2.0 * w2);
    let dd = 8.0 * n.powi(3) * d2.powi(3);
    let f = 8.0 * k.powi(3) * d2 * (k2 + d2) * (d2 + k2 + 5.0 * w2);
    let g = 16.0 * n * k2 * d2 * d2 * (d2 + k2 + w2);
    let num = a + s * (b + s * (c + s * dd));
    (num / (f + g * s)).sqrt() / std::f64::consts::SQRT_2
}

pub fn threshold_eta_minus(params: &SystemParams, ss: &SteadyState, s_value: f64) -> f64 {
    threshold_eta_minus_raw(params.kappa, ss.delta_eff, params.omega_m, ss.photon_number, s_value)
}

/// η⁻ at threshold without phase noise, in its reduced form.
pub fn threshold_eta_minus_noiseless(kappa: f64, delta: f64, omega_m: f64) -> f64 {
    let (k2, d2, w2) = (kappa * kappa, delta * delta, omega_m * omega_m);
    ((4.0 * d2 * d2 + 4.0 * d2 * (k2 + w2) + w2 * w2) / (16.0 * d2 * (d2 + k2 + 5.0 * w2))).sqrt()
}

/// Detuning that minimizes the noiseless threshold η⁻, and the resulting
/// maximal E_N, both for a given κ/ω_m.
pub fn optimal_detuning_and_max_en(kappa_over_omega_m: f64) -> (f64, f64) {
    let k = kappa_over_omega_m;
    let delta = 0.25 * (1.0 + ((4.0 * k).powi(2) + 81.0).sqrt()).sqrt();
    let e_n = -((9.0 + 128.0 * k * k / (8.0 * k * k + 45.0)).sqrt() / 5.0).ln();
    (delta, e_n)
}

/// Effective phonon number in the weak-coupling cooling regime, including
/// phase noise through S_φ̇(ω_m^eff).
pub fn approx_n_eff(params: &SystemParams, ss: &SteadyState) -> Result<f64> {
    let resp = effective_response(params, ss)?;
    let rates = scattering_rates(params, ss);
    let gm = params.gamma_m();
    let n = params.mechanical_occupancy();
    let s = phase_noise_spectrum(&params.phase_noise, resp.omega_eff);
    let noise = ss.photon_number * ss.delta_eff * rates.gamma_op * s / (2.0 * params.kappa * params.omega_m);
    Ok((n * gm + rates.a_plus + noise) / (gm + rates.gamma_op))
}

/// Conditions under which the closed-form approximations lose accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeWarning {
    /// κ > ω_m.
    UnresolvedSideband { kappa_over_omega_m: f64 },
    /// G not small compared with κ.
    StrongCoupling { g_over_kappa: f64 },
    /// G or n̄γ_m not small compared with ω_m.
    FastMechanics { ratio: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeWarning::UnresolvedSideband { kappa_over_omega_m } => {
                write!(f, "unresolved sideband (kappa/omega_m = {kappa_over_omega_m:.3})")
            }
            RegimeWarning::StrongCoupling { g_over_kappa } => {
                write!(f, "strong coupling (G/kappa = {g_over_kappa:.3})")
            }
            RegimeWarning::FastMechanics { ratio } => {
                write!(f, "mechanical damping or coupling not small against omega_m (ratio {ratio:.3})")
            }
        }
    }
}

/// Warnings for [`approx_cm_phase_correction`] and [`approx_n_eff`].
pub fn regime_warnings(params: &SystemParams, ss: &SteadyState) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    let wm = params.omega_m;
    if params.kappa > wm {
        out.push(RegimeWarning::UnresolvedSideband {
            kappa_over_omega_m: params.kappa / wm,
        });
    }
    if ss.g_eff > 0.5 * params.kappa {
        out.push(RegimeWarning::StrongCoupling {
            g_over_kappa: ss.g_eff / params.kappa,
        });
    }
    let slow = ss.g_eff.max(params.mechanical_occupancy() * params.gamma_m()) / wm;
    if slow > 0.5 {
        out.push(RegimeWarning::FastMechanics { ratio: slow });
    }
    out
}
