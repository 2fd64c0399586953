//! Linearized fluctuation dynamics u̇ = A·u + n(t).
//!
//! The state vector is ordered (δq, δp, δX_Δ, δY_Δ, ψ, θ), with ψ = φ̇ the laser
//! frequency noise and θ its auxiliary partner. The drift matrix places −Δ in
//! the δX_Δ column of the δY_Δ row; the scalar equation for δẎ_Δ as usually
//! printed carries a typo (−ΔδY_Δ) that the matrix form does not share.

use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{NoiseSpec, SteadyState, SystemParams};

/// Which variables a [`LinearModel`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLayout {
    /// (δq, δp, δX_Δ, δY_Δ, ψ, θ)
    Full,
    /// (δq, δp, δX_Δ, δY_Δ); white phase noise folded into the diffusion.
    Optomechanical,
}

impl StateLayout {
    pub fn dim(self) -> usize {
        match self {
            StateLayout::Full => 6,
            StateLayout::Optomechanical => 4,
        }
    }

    pub fn labels(self) -> &'static [&'static str] {
        const LABELS: [&str; 6] = ["dq", "dp", "dX", "dY", "psi", "theta"];
        &LABELS[..self.dim()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub stable: bool,
    pub layout: StateLayout,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }
}

/// Assemble drift and diffusion matrices at a working point.
///
/// `NoiseSpec::None` keeps the six-variable layout with an inert auxiliary
/// block (Ω = γ̃ = ω_m, no drive), so the optomechanical block is untouched.
/// `NoiseSpec::White` uses the four-variable layout and adds the diffusion
/// 2|α_s|²·2Γ_l of the Y-quadrature drive √2|α_s|ψ.
pub fn build_model(params: &SystemParams, ss: &SteadyState) -> LinearModel {
    let wm = params.omega_m;
    let gm = params.gamma_m();
    let k = params.kappa;
    let d = ss.delta_eff;
    let g = ss.g_eff;
    let n_th = params.mechanical_occupancy();
    let optical = k * (2.0 * params.cavity_thermal_occupancy + 1.0);

    let (layout, aux) = match params.phase_noise {
        NoiseSpec::None => (StateLayout::Full, Some((0.0, wm, wm))),
        NoiseSpec::Bandpass {
            gamma_l,
            omega_band,
            gamma_tilde,
        } => (StateLayout::Full, Some((gamma_l, omega_band, gamma_tilde))),
        NoiseSpec::White { .. } => (StateLayout::Optomechanical, None),
    };
    let n = layout.dim();
    let mut a = DMatrix::zeros(n, n);
    let mut dm = DMatrix::zeros(n, n);

    a[(0, 1)] = wm;
    a[(1, 0)] = -wm;
    a[(1, 1)] = -gm;
    a[(1, 2)] = g;
    a[(2, 2)] = -k;
    a[(2, 3)] = d;
    a[(3, 0)] = g;
    a[(3, 2)] = -d;
    a[(3, 3)] = -k;

    dm[(1, 1)] = gm * (2.0 * n_th + 1.0);
    dm[(2, 2)] = optical;
    dm[(3, 3)] = optical;

    match aux {
        Some((gamma_l, omega_band, gamma_tilde)) => {
            a[(3, 4)] = std::f64::consts::SQRT_2 * ss.alpha_abs;
            a[(4, 5)] = omega_band;
            a[(5, 4)] = -omega_band;
            a[(5, 5)] = -gamma_tilde;
            dm[(5, 5)] = 2.0 * gamma_l * omega_band * omega_band;
        }
        None => {
            dm[(3, 3)] += 2.0 * ss.photon_number * 2.0 * params.phase_noise.linewidth();
        }
    }

    let stable = is_stable(&a);
    LinearModel {
        drift: a,
        diffusion: dm,
        stable,
        layout,
    }
}

/// Frequency-noise spectrum S_φ̇(ω) in rad/s.
pub fn phase_noise_spectrum(spec: &NoiseSpec, omega: f64) -> f64 {
    match *spec {
        NoiseSpec::None => 0.0,
        NoiseSpec::White { gamma_l } => 2.0 * gamma_l,
        NoiseSpec::Bandpass {
            gamma_l,
            omega_band,
            gamma_tilde,
        } => {
            let w2 = omega * omega;
            let o2 = omega_band * omega_band;
            2.0 * gamma_l * o2 * o2 / ((o2 - w2).powi(2) + w2 * gamma_tilde * gamma_tilde)
        }
    }
}

/// Evaluator ω ↦ S_φ̇(ω) bound to one noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumFn(pub NoiseSpec);

impl SpectrumFn {
    pub fn eval(&self, omega: f64) -> f64 {
        phase_noise_spectrum(&self.0, omega)
    }
}

/// Largest real part among the eigenvalues of `a`.
pub fn max_real_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    let scale = a.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let scaled = a / scale;
    let schur = Schur::try_new(scaled, f64::EPSILON, 10_000).ok_or(Error::EigenNotConverged)?;
    let eig = schur.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max) * scale)
}

/// Hurwitz test: every eigenvalue strictly in the open left half-plane.
/// Marginal spectra (max Re λ = 0) count as unstable.
pub fn is_stable(a: &DMatrix<f64>) -> bool {
    matches!(max_real_eigenvalue(a), Ok(m) if m < 0.0)
}

/// G / G_threshold with G_threshold² = (Δ²+κ²)ω_m/Δ; below 1 iff stable.
pub fn stability_margin(params: &SystemParams, ss: &SteadyState) -> Result<f64> {
    let d = ss.delta_eff;
    if d <= 0.0 {
        return Err(Error::NonpositiveDetuning { delta: d });
    }
    Ok(ss.g_eff / threshold_coupling(params.omega_m, params.kappa, d))
}

/// Coupling at the bistability threshold for red detuning.
pub fn threshold_coupling(omega_m: f64, kappa: f64, delta: f64) -> f64 {
    ((delta * delta + kappa * kappa) * omega_m / delta).sqrt()
}

/// Characteristic polynomial coefficients `[1, c1, ..., cn]` of det(sI − A),
/// by the Faddeev–LeVerrier recursion.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    let mut c_prev = 1.0;
    for k in 1..=n {
        m = a * &m + &id * c_prev;
        let am = a * &m;
        let c = -am.trace() / k as f64;
        coeffs.push(c);
        c_prev = c;
    }
    coeffs
}

/// Routh–Hurwitz test on a real polynomial given highest degree first.
/// A zero in the first column of the Routh array is reported as not stable.
pub fn routh_hurwitz_stable(coeffs: &[f64]) -> bool {
    let n = coeffs.len();
    if n == 0 || coeffs[0] == 0.0 {
        return false;
    }
    let lead_sign = coeffs[0].signum();
    let width = n.div_ceil(2);
    let row = |start: usize| -> Vec<f64> {
        (0..width)
            .map(|j| coeffs.get(start + 2 * j).copied().unwrap_or(0.0) * lead_sign)
            .collect()
    };
    let mut prev = row(0);
    let mut cur = row(1);
    if n == 1 {
        return true;
    }
    for _ in 2..n {
        if cur[0] <= 0.0 || prev[0] <= 0.0 {
            return false;
        }
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = prev.get(j + 1).copied().unwrap_or(0.0);
                let b = cur.get(j + 1).copied().unwrap_or(0.0);
                (cur[0] * a - prev[0] * b) / cur[0]
            })
            .collect();
        prev = cur;
        cur = next;
    }
    prev[0] > 0.0 && cur[0] > 0.0
}

/// Routh–Hurwitz verdict for the optomechanical 4×4 block of a model,
/// evaluated in units of ω_m.
pub fn routh_hurwitz_optomechanical(model: &LinearModel, omega_m: f64) -> bool {
    let a4 = model.drift.view((0, 0), (4, 4)).into_owned() / omega_m;
    routh_hurwitz_stable(&characteristic_polynomial(&a4))
}
