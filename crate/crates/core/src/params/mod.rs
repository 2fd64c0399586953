//! Physical parameters of the driven optomechanical cavity and the classical
//! working point around which the fluctuations are linearized.
//!
//! Every frequency and rate is stored as an angular frequency in rad/s.
//! Conversions from cyclic (Hz) inputs happen at the configuration boundary.

mod cubic;
mod steady_state;

pub use cubic::{cubic_real_roots, CubicRoots};
pub use steady_state::{solve_steady_state, Branch, SteadyState};

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B, SPEED_OF_LIGHT, TWO_PI};
use crate::error::{Error, Result};

/// Which cavity detuning the user pins down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "rad_per_s")]
pub enum Detuning {
    /// Effective detuning Δ, already including the radiation-pressure shift.
    Effective(f64),
    /// Bare detuning Δ₀ = ω_c − ω₀; Δ follows from the bistability cubic.
    Bare(f64),
}

/// Laser frequency-noise model, i.e. the spectrum of φ̇.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseSpec {
    None,
    /// Flat spectrum 2Γ_l (Lorentzian laser line of width Γ_l).
    White { gamma_l: f64 },
    /// Bandpass spectrum centred at `omega_band` with width `gamma_tilde`.
    Bandpass {
        gamma_l: f64,
        omega_band: f64,
        gamma_tilde: f64,
    },
}

impl NoiseSpec {
    /// Bandpass noise with the conventional width γ̃ = Ω/2.
    pub fn bandpass_half_width(gamma_l: f64, omega_band: f64) -> Self {
        NoiseSpec::Bandpass {
            gamma_l,
            omega_band,
            gamma_tilde: 0.5 * omega_band,
        }
    }

    /// Noise strength Γ_l (zero for `None`).
    pub fn linewidth(&self) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::White { gamma_l } | NoiseSpec::Bandpass { gamma_l, .. } => gamma_l,
        }
    }

    fn validate(&self) -> Result<()> {
        let nonneg = |v: f64, field| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and ≥ 0, got {v}")))
            }
        };
        let positive = |v: f64, field| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
            }
        };
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::White { gamma_l } => nonneg(gamma_l, "phase_noise.gamma_l"),
            NoiseSpec::Bandpass {
                gamma_l,
                omega_band,
                gamma_tilde,
            } => {
                nonneg(gamma_l, "phase_noise.gamma_l")?;
                positive(omega_band, "phase_noise.omega_band")?;
                // γ̃ = 0 is representable (and reported unstable downstream).
                nonneg(gamma_tilde, "phase_noise.gamma_tilde")
            }
        }
    }
}

/// Root selection when the bare-detuning cubic has three admissible roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    #[default]
    Lower,
    Middle,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical angular frequency ω_m.
    pub omega_m: f64,
    /// Mechanical quality factor; γ_m = ω_m / Q_m.
    pub quality_factor: f64,
    /// Cavity amplitude decay rate κ.
    pub kappa: f64,
    pub detuning: Detuning,
    /// Single-photon optomechanical coupling G₀.
    pub g0: f64,
    /// Input power, W.
    pub laser_power: f64,
    /// Laser wavelength, m.
    pub laser_wavelength: f64,
    /// Bath temperature, K.
    pub bath_temperature: f64,
    pub phase_noise: NoiseSpec,
    /// Thermal photon number N(ω_c) of the cavity input.
    pub cavity_thermal_occupancy: f64,
    #[serde(default)]
    pub branch_policy: BranchPolicy,
}

impl SystemParams {
    /// Micromirror working point: ω_m/2π = 10 MHz, Q_m = 2·10⁶, T = 0.4 K,
    /// G₀ = 10³ rad/s, κ = 0.5 ω_m, Δ = ω_m, P = 20 mW, λ = 810 nm and
    /// bandpass noise Γ_l/2π = 0.1 kHz, Ω/2π = 50 kHz, γ̃ = Ω/2.
    pub fn reference_point() -> Self {
        let omega_m = TWO_PI * 10.0e6;
        SystemParams {
            omega_m,
            quality_factor: 2.0e6,
            kappa: 0.5 * omega_m,
            detuning: Detuning::Effective(omega_m),
            g0: 1.0e3,
            laser_power: 20.0e-3,
            laser_wavelength: 810.0e-9,
            bath_temperature: 0.4,
            phase_noise: NoiseSpec::bandpass_half_width(TWO_PI * 100.0, TWO_PI * 50.0e3),
            cavity_thermal_occupancy: 0.0,
            branch_policy: BranchPolicy::Lower,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, field| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
            }
        };
        let nonneg = |v: f64, field| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and ≥ 0, got {v}")))
            }
        };
        positive(self.omega_m, "omega_m")?;
        positive(self.quality_factor, "quality_factor")?;
        positive(self.kappa, "kappa")?;
        positive(self.g0, "g0")?;
        nonneg(self.laser_power, "laser_power")?;
        positive(self.laser_wavelength, "laser_wavelength")?;
        nonneg(self.bath_temperature, "bath_temperature")?;
        nonneg(self.cavity_thermal_occupancy, "cavity_thermal_occupancy")?;
        let delta = match self.detuning {
            Detuning::Effective(d) | Detuning::Bare(d) => d,
        };
        if !delta.is_finite() {
            return Err(Error::invalid("detuning", "must be finite"));
        }
        self.phase_noise.validate()
    }

    /// γ_m = ω_m / Q_m.
    pub fn gamma_m(&self) -> f64 {
        self.omega_m / self.quality_factor
    }

    /// Laser angular frequency ω₀ = 2πc/λ.
    pub fn omega_laser(&self) -> f64 {
        TWO_PI * SPEED_OF_LIGHT / self.laser_wavelength
    }

    /// Mean thermal phonon number of the mechanical bath.
    pub fn mechanical_occupancy(&self) -> f64 {
        thermal_occupancy(self.omega_m, self.bath_temperature)
    }

    pub fn with_power(&self, watts: f64) -> Self {
        SystemParams {
            laser_power: watts,
            ..self.clone()
        }
    }

    pub fn with_detuning(&self, detuning: Detuning) -> Self {
        SystemParams {
            detuning,
            ..self.clone()
        }
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        SystemParams {
            kappa,
            ..self.clone()
        }
    }

    pub fn with_noise(&self, phase_noise: NoiseSpec) -> Self {
        SystemParams {
            phase_noise,
            ..self.clone()
        }
    }

    pub fn with_temperature(&self, kelvin: f64) -> Self {
        SystemParams {
            bath_temperature: kelvin,
            ..self.clone()
        }
    }

    /// Input power that yields the effective coupling `g` at the configured
    /// effective detuning. Inverts G = G₀√2·E₀/√(κ²+Δ²).
    pub fn power_for_coupling(&self, g: f64) -> Result<f64> {
        let delta = match self.detuning {
            Detuning::Effective(d) => d,
            Detuning::Bare(_) => {
                return Err(Error::invalid(
                    "detuning",
                    "coupling-to-power inversion needs an effective detuning",
                ))
            }
        };
        let alpha_sq = g * g / (2.0 * self.g0 * self.g0);
        let e0_sq = alpha_sq * (self.kappa * self.kappa + delta * delta);
        Ok(e0_sq * HBAR * self.omega_laser() / (2.0 * self.kappa))
    }

    /// Copy of `self` with the power set so that the effective coupling is `g`.
    pub fn with_coupling(&self, g: f64) -> Result<Self> {
        Ok(self.with_power(self.power_for_coupling(g)?))
    }
}

/// Bose–Einstein occupancy 1/(exp(ħω/k_B T) − 1); zero at T = 0.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * temperature);
    1.0 / x.exp_m1()
}

/// Mean drive amplitude E₀ = √(2κP/ħω₀), in s⁻¹.
pub fn drive_amplitude(params: &SystemParams) -> f64 {
    (2.0 * params.kappa * params.laser_power / (HBAR * params.omega_laser())).sqrt()
}
