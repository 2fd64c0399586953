use std::f64::consts::PI;

use crate::dynamics::phase_noise_spectrum;
use crate::error::{Error, Result};
use crate::params::NoiseSpec;
use crate::quadrature::{integrate, mixed_tolerance, sorted_points, QuadOptions};

const MAX_PERIODS: f64 = 1.0e6;

/// Phase-factor correlation C(τ) = ⟨e^{i(φ(t+τ) − φ(t))}⟩ for Gaussian
/// frequency noise, C(τ) = exp[−∫ dω/2π · S_φ̇(ω)(1 − cos ωτ)/ω²].
///
/// The half-line integral is split at a whole number of periods of cos ωτ.
/// The remaining tail is the non-oscillatory ∫S/ω² on a mapped variable plus
/// the leading integration-by-parts term of the cosine part.
pub fn laser_correlation(spec: &NoiseSpec, tau: f64) -> Result<f64> {
    let tau = tau.abs();
    if tau == 0.0 || spec.linewidth() == 0.0 {
        return Ok(1.0);
    }
    let s = |w: f64| phase_noise_spectrum(spec, w);
    let period = 2.0 * PI / tau;

    let mut features = Vec::new();
    let mut reach = 2000.0 / tau;
    if let NoiseSpec::Bandpass { omega_band, gamma_tilde, .. } = *spec {
        reach = reach.max(50.0 * (omega_band + gamma_tilde));
        features.push(omega_band);
        let mut w = gamma_tilde;
        while w < omega_band {
            features.push(omega_band - w);
            features.push(omega_band + w);
            w *= 10.0;
        }
    }
    let periods = (reach / period).ceil();
    if periods > MAX_PERIODS {
        return Err(Error::QuadratureNotConverged {
            error_estimate: f64::INFINITY,
            tolerance: 0.0,
        });
    }
    let cutoff = periods * period;
    features.extend((1..periods as usize).map(|k| k as f64 * period));
    let pts = sorted_points(features, 0.0, cutoff);

    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-11,
        max_intervals: 4 * pts.len() + 10_000,
    };
    let core = integrate(
        |w, out: &mut [f64]| {
            let x = 0.5 * w * tau;
            let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
            out[0] = s(w) * 0.5 * tau * tau * sinc * sinc;
        },
        1,
        &pts,
        mixed_tolerance(opts),
        opts.max_intervals,
    )?;
    let flat_tail = integrate(
        |u, out: &mut [f64]| out[0] = if u == 0.0 { 0.0 } else { s(cutoff / u) / cutoff },
        1,
        &[0.0, 1.0],
        mixed_tolerance(opts),
        opts.max_intervals,
    )?;
    // ∫_L^∞ h(ω) cos ωτ dω ≈ −h'(L)/τ² when Lτ is a multiple of 2π, h = S/ω².
    let h = |w: f64| s(w) / (w * w);
    let step = 1e-4 * cutoff;
    let dh = (h(cutoff + step) - h(cutoff - step)) / (2.0 * step);
    let cos_tail = -dh / (tau * tau);

    let exponent = (core.values[0] + flat_tail.values[0] - cos_tail) / PI;
    Ok((-exponent).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_is_exponential() {
        let gl = 2.0 * PI * 100.0;
        let spec = NoiseSpec::White { gamma_l: gl };
        for k in 0..=20 {
            let tau = k as f64 * 0.5 / gl;
            let c = laser_correlation(&spec, tau).unwrap();
            assert!((c - (-gl * tau).exp()).abs() < 1e-8, "tau = {tau}: {c}");
        }
    }

    #[test]
    fn trivial_cases() {
        let spec = NoiseSpec::bandpass_half_width(10.0, 1e4);
        assert_eq!(laser_correlation(&spec, 0.0).unwrap(), 1.0);
        assert_eq!(laser_correlation(&NoiseSpec::None, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn bandpass_is_even_and_bounded() {
        let spec = NoiseSpec::bandpass_half_width(2.0 * PI * 100.0, 2.0 * PI * 5e4);
        for tau in [1e-6, 1e-5, 1e-4, 1e-3] {
            let c = laser_correlation(&spec, tau).unwrap();
            assert!(c > 0.0 && c <= 1.0);
            assert_eq!(c, laser_correlation(&spec, -tau).unwrap());
        }
    }
}
