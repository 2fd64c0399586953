use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, Matrix4, Schur};

use super::{effective_response, regime_warnings, sideband_denominator, susceptibility, RegimeWarning};
use crate::dynamics::phase_noise_spectrum;
use crate::error::Result;
use crate::lyapunov::CovarianceMatrix;
use crate::params::{NoiseSpec, SteadyState, SystemParams};
use crate::quadrature::{half_line_map, integrate, sorted_points, QuadOptions};

type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub quad: QuadOptions,
    /// Core range is |ω| ≤ cutoff_factor · max(ω_m, Δ, Ω, κ); beyond it the
    /// integral continues on a mapped tail out to infinity.
    pub cutoff_factor: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            quad: QuadOptions::default(),
            cutoff_factor: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCovariance {
    pub covariance: CovarianceMatrix,
    /// Integrated imaginary part of each entry, same scale as the covariance.
    pub imaginary: DMatrix<f64>,
    /// Accumulated quadrature error estimate per entry.
    pub error_estimate: DMatrix<f64>,
    pub evaluations: usize,
    pub warnings: Vec<RegimeWarning>,
}

enum Treatment {
    Full,
    Frozen(f64),
}

/// Stationary 4×4 covariance from the frequency-domain solution with the full
/// phase-noise spectrum.
pub fn cm_spectral_oracle(params: &SystemParams, ss: &SteadyState, opts: &OracleOptions) -> Result<SpectralCovariance> {
    integrate_covariance(params, ss, Treatment::Full, opts)
}

/// As [`cm_spectral_oracle`] but with S_φ̇(ω) frozen at S_φ̇(ω_m^eff) inside
/// the phase-noise correction.
pub fn approx_cm_phase_correction(params: &SystemParams, ss: &SteadyState, opts: &OracleOptions) -> Result<SpectralCovariance> {
    let resp = effective_response(params, ss)?;
    let s = phase_noise_spectrum(&params.phase_noise, resp.omega_eff);
    let mut out = integrate_covariance(params, ss, Treatment::Frozen(s), opts)?;
    out.warnings = regime_warnings(params, ss);
    Ok(out)
}

fn feature_points(center: f64, width: f64, hi: f64, out: &mut Vec<f64>) {
    if !(width > 0.0) || !center.is_finite() {
        return;
    }
    out.push(center);
    let mut w = width;
    while w < hi {
        out.push(center - w);
        out.push(center + w);
        w *= 10.0;
    }
}

fn integrate_covariance(params: &SystemParams, ss: &SteadyState, treatment: Treatment, opts: &OracleOptions) -> Result<SpectralCovariance> {
    let wm = params.omega_m;
    let gm = params.gamma_m();
    let k = params.kappa;
    let d = ss.delta_eff;
    let g = ss.g_eff;
    let resp = effective_response(params, ss);

    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0, wm, 0.0, 0.0,
        -wm, -gm, g, 0.0,
        0.0, 0.0, -k, d,
        g, 0.0, -d, -k,
    );
    let optical = k * (2.0 * params.cavity_thermal_occupancy + 1.0);
    let diff = [0.0, gm * (2.0 * params.mechanical_occupancy() + 1.0), optical, optical];
    let spec = params.phase_noise;
    let noisy = !matches!(spec, NoiseSpec::None) && spec.linewidth() > 0.0;
    let drive = 2.0 * ss.photon_number;

    let (band, band_width) = match spec {
        NoiseSpec::Bandpass { omega_band, gamma_tilde, .. } => (omega_band, gamma_tilde),
        _ => (0.0, 0.0),
    };
    let cutoff = opts.cutoff_factor * wm.max(d.abs()).max(band).max(k);

    let mut pts = Vec::new();
    let scale = a.amax();
    if let Some(schur) = Schur::try_new(DMatrix::from_iterator(4, 4, a.iter().map(|x| x / scale)), f64::EPSILON, 10_000) {
        for z in schur.complex_eigenvalues().iter() {
            feature_points(z.im.abs() * scale, z.re.abs() * scale, cutoff, &mut pts);
        }
    }
    feature_points(wm, gm, cutoff, &mut pts);
    feature_points(d.abs(), k, cutoff, &mut pts);
    if let Ok(r) = resp {
        feature_points(r.omega_eff, r.gamma_eff, cutoff, &mut pts);
    }
    if band > 0.0 {
        feature_points(band, band_width, cutoff, &mut pts);
    }
    let mut pts = sorted_points(pts, 0.0, cutoff);
    pts.push(cutoff + 1.0);

    let integrand_at = |w: f64, re: &mut [f64; 16], im: &mut [f64; 16]| {
        let iw = Matrix4::from_diagonal_element(C64::new(0.0, w));
        let t = (iw - a.map(|x| C64::new(x, 0.0))).try_inverse().expect("iω − A is singular");
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for (m, dm) in diff.iter().enumerate() {
                    acc += t[(i, m)] * t[(j, m)].conj() * *dm;
                }
                re[i * 4 + j] += acc.re;
                im[i * 4 + j] += acc.im;
            }
        }
        if !noisy {
            return;
        }
        let s = match treatment {
            Treatment::Full => phase_noise_spectrum(&spec, w),
            Treatment::Frozen(s) => s,
        };
        let chi_w = susceptibility(wm, gm, g, d, k, w);
        let mech = C64::new(wm * wm - w * w, -gm * w);
        let c = [
            C64::new(g * d * wm, 0.0),
            C64::new(0.0, -w * g * d),
            mech * d,
            C64::new(k, -w) * mech,
        ];
        let pref = drive * chi_w.norm_sqr() * s / sideband_denominator(k, d, w);
        for i in 0..4 {
            for j in 0..4 {
                let v = c[i] * c[j].conj() * pref;
                re[i * 4 + j] += v.re;
                im[i * 4 + j] += v.im;
            }
        }
    };

    let f = |t: f64, out: &mut [f64]| {
        let (w, jac) = half_line_map(t, cutoff);
        let mut re = [0.0; 16];
        let mut im = [0.0; 16];
        integrand_at(w, &mut re, &mut im);
        integrand_at(-w, &mut re, &mut im);
        for n in 0..16 {
            out[n] = re[n] * jac;
            out[16 + n] = im[n] * jac;
        }
    };
    let q = opts.quad;
    let tol = move |v: &[f64], n: usize| {
        if n >= 16 {
            return f64::INFINITY;
        }
        let (i, j) = (n / 4, n % 4);
        2.0 * PI * q.abs_tol + q.rel_tol * (v[i * 5] * v[j * 5]).abs().sqrt()
    };
    let r = integrate(f, 32, &pts, tol, q.max_intervals)?;

    let norm = 1.0 / (2.0 * PI);
    let re = DMatrix::from_fn(4, 4, |i, j| r.values[i * 4 + j] * norm);
    let entries = (&re + re.transpose()) * 0.5;
    Ok(SpectralCovariance {
        covariance: CovarianceMatrix::new(entries),
        imaginary: DMatrix::from_fn(4, 4, |i, j| r.values[16 + i * 4 + j] * norm),
        error_estimate: DMatrix::from_fn(4, 4, |i, j| r.errors[i * 4 + j] * norm),
        evaluations: r.evaluations,
        warnings: Vec::new(),
    })
}
