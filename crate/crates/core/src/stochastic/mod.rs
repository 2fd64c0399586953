//! Monte-Carlo simulation of linear Gaussian SDEs dx = A·x dt + dW with
//! ⟨dW dWᵀ⟩ = D dt.
//!
//! Quantum noises enter as classical Gaussian surrogates with the symmetrized
//! correlations. For linear dynamics this reproduces the symmetrized
//! covariance exactly, which is all the Gaussian measures use.

mod welch;

pub use welch::{welch_psd, SpectrumEstimate, WelchAccumulator, MEMBER_GROUPS};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::LinearModel;
use crate::error::{Error, Result};
use crate::lyapunov::CovarianceMatrix;
use crate::params::NoiseSpec;

/// Largest admissible dt·max|λ(A)|.
pub const TIMESTEP_GUARD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// One-step transition exp(A·dt) with the exact process-noise covariance.
    #[default]
    Exact,
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub n_ensemble: usize,
    pub seed: u64,
    /// Steps discarded before recording; trajectories start at the origin.
    pub burn_in: usize,
    #[serde(default)]
    pub integrator: Integrator,
}

impl TrajectoryConfig {
    /// Check the timestep guard and the burn-in length against the drift.
    pub fn validate(&self, a: &DMatrix<f64>) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter {
                field: "dt",
                reason: format!("must be positive, got {}", self.dt),
            });
        }
        if self.n_steps == 0 || self.n_ensemble == 0 {
            return Err(Error::InvalidParameter {
                field: "n_steps",
                reason: "n_steps and n_ensemble must be positive".into(),
            });
        }
        let eig = a.clone().complex_eigenvalues();
        let fastest = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let slowest = eig.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
        if fastest > 0.0 && self.dt * fastest >= TIMESTEP_GUARD {
            return Err(Error::UnstableTimestep {
                dt: self.dt,
                limit: TIMESTEP_GUARD / fastest,
            });
        }
        if slowest > 0.0 && (self.burn_in as f64) * self.dt < 5.0 / slowest {
            return Err(Error::InvalidParameter {
                field: "burn_in",
                reason: format!(
                    "{} steps is shorter than 5 relaxation times ({} steps)",
                    self.burn_in,
                    (5.0 / slowest / self.dt).ceil()
                ),
            });
        }
        Ok(())
    }
}

/// One-step map x ← Φ·x + L·ξ with ξ standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub transition: DMatrix<f64>,
    pub noise_factor: DMatrix<f64>,
}

fn psd_factor(q: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (q + q.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut u = eig.eigenvectors;
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        u.column_mut(k).scale_mut(s);
    }
    u
}

/// Exact discretization via the block exponential of [[−A, D], [0, Aᵀ]]·dt.
pub fn exact_propagator(a: &DMatrix<f64>, d: &DMatrix<f64>, dt: f64) -> Propagator {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-a * dt));
    m.view_mut((0, n), (n, n)).copy_from(&(d * dt));
    m.view_mut((n, n), (n, n)).copy_from(&(a.transpose() * dt));
    let e = m.exp();
    let phi = e.view((n, n), (n, n)).transpose();
    let q = &phi * e.view((0, n), (n, n));
    Propagator {
        noise_factor: psd_factor(&q),
        transition: phi,
    }
}

pub fn euler_maruyama_propagator(a: &DMatrix<f64>, d: &DMatrix<f64>, dt: f64) -> Propagator {
    let n = a.nrows();
    Propagator {
        transition: DMatrix::identity(n, n) + a * dt,
        noise_factor: psd_factor(&(d * dt)),
    }
}

fn propagator(a: &DMatrix<f64>, d: &DMatrix<f64>, cfg: &TrajectoryConfig) -> Propagator {
    match cfg.integrator {
        Integrator::Exact => exact_propagator(a, d, cfg.dt),
        Integrator::EulerMaruyama => euler_maruyama_propagator(a, d, cfg.dt),
    }
}

/// Generator for ensemble member `member`, independent of thread scheduling.
pub fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng
}

/// Run one trajectory, handing every post-burn-in state to `record`.
fn run_member<F: FnMut(&DVector<f64>)>(p: &Propagator, cfg: &TrajectoryConfig, member: usize, mut record: F) {
    let n = p.transition.nrows();
    let mut rng = member_rng(cfg.seed, member);
    let mut x = DVector::zeros(n);
    let mut next = DVector::zeros(n);
    let mut xi = DVector::zeros(n);
    let noiseless = p.noise_factor.iter().all(|v| *v == 0.0);
    for step in 0..cfg.burn_in + cfg.n_steps {
        p.transition.mul_to(&x, &mut next);
        if !noiseless {
            for v in xi.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            next.gemv(1.0, &p.noise_factor, &xi, 1.0);
        }
        std::mem::swap(&mut x, &mut next);
        if step >= cfg.burn_in {
            record(&x);
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Recorded trajectories of one state component, one per ensemble member.
pub fn simulate_component(a: &DMatrix<f64>, d: &DMatrix<f64>, cfg: &TrajectoryConfig, component: usize) -> Result<Vec<Vec<f64>>> {
    cfg.validate(a)?;
    let p = propagator(a, d, cfg);
    Ok((0..cfg.n_ensemble)
        .into_par_iter()
        .map(|m| {
            let mut out = Vec::with_capacity(cfg.n_steps);
            run_member(&p, cfg, m, |x| out.push(x[component]));
            out
        })
        .collect())
}

/// Auxiliary drift and diffusion realizing the band-pass frequency noise:
/// ψ̇ = Ωθ, θ̇ = −Ωψ − γ̃θ + Ω√(2Γ_l)ε.
pub fn phase_noise_block(spec: &NoiseSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    match *spec {
        NoiseSpec::Bandpass {
            gamma_l,
            omega_band,
            gamma_tilde,
        } => Ok((
            DMatrix::from_row_slice(2, 2, &[0.0, omega_band, -omega_band, -gamma_tilde]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0 * gamma_l * omega_band * omega_band]),
        )),
        _ => Err(Error::InvalidParameter {
            field: "phase_noise",
            reason: "stochastic simulation needs the band-pass model".into(),
        }),
    }
}

/// Default Welch segment length: the largest power of two giving at least
/// 64 half-overlapping segments across the ensemble.
pub fn default_segment_len(cfg: &TrajectoryConfig) -> usize {
    let per_member = 64usize.div_ceil(cfg.n_ensemble).max(1);
    let max_len = 2 * cfg.n_steps / (per_member + 1);
    let mut len = 16;
    while len * 2 <= max_len {
        len *= 2;
    }
    len
}

/// Averaged periodogram of ψ for the band-pass noise model.
pub fn simulate_phase_noise(spec: &NoiseSpec, cfg: &TrajectoryConfig) -> Result<SpectrumEstimate> {
    Ok(simulate_phase_noise_with(spec, cfg, default_segment_len(cfg))?.spectrum)
}

/// Spectrum of ψ together with the second moments of (ψ, θ).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseRun {
    pub spectrum: SpectrumEstimate,
    pub moments: CovarianceEstimate,
}

/// Like [`simulate_phase_noise`] with an explicit segment length; streams
/// the trajectories, so memory does not grow with `n_steps`.
pub fn simulate_phase_noise_with(spec: &NoiseSpec, cfg: &TrajectoryConfig, segment_len: usize) -> Result<PhaseNoiseRun> {
    let (a, d) = phase_noise_block(spec)?;
    cfg.validate(&a)?;
    let p = propagator(&a, &d, cfg);
    let by_member = cfg.n_ensemble >= MEMBER_GROUPS;
    // Reject a bad segment length before any simulation work.
    WelchAccumulator::new(segment_len, cfg.dt, false)?;
    let members: Vec<(Vec<f64>, Option<Vec<Vec<f64>>>, usize, DMatrix<f64>)> = (0..cfg.n_ensemble)
        .into_par_iter()
        .map(|m| {
            let mut acc = WelchAccumulator::new(segment_len, cfg.dt, !by_member).expect("segment length checked");
            let mut mom = [CompensatedSum::default(); 3];
            run_member(&p, cfg, m, |x| {
                acc.push(x[0]);
                mom[0].add(x[0] * x[0]);
                mom[1].add(x[0] * x[1]);
                mom[2].add(x[1] * x[1]);
            });
            let segs = acc.segments();
            let (mean, kept) = acc.finish();
            let steps = cfg.n_steps as f64;
            let v = DMatrix::from_row_slice(2, 2, &[
                mom[0].value() / steps,
                mom[1].value() / steps,
                mom[1].value() / steps,
                mom[2].value() / steps,
            ]);
            (mean, kept, segs, v)
        })
        .collect();

    let segments = members.iter().map(|m| m.2).sum();
    let moments = ensemble_statistics(members.iter().map(|m| m.3.clone()).collect(), cfg);
    let groups: Vec<Vec<f64>> = if by_member {
        members.into_iter().filter(|m| m.2 > 0).map(|m| m.0).collect()
    } else {
        members.into_iter().flat_map(|m| m.1.unwrap_or_default()).collect()
    };
    if groups.len() < 2 {
        return Err(Error::InvalidParameter {
            field: "segment_len",
            reason: format!("only {segments} segment(s) fit in the trajectories"),
        });
    }
    Ok(PhaseNoiseRun {
        spectrum: SpectrumEstimate::from_groups(groups, segments, cfg.dt, segment_len),
        moments,
    })
}

/// Time- and ensemble-averaged second moments with standard errors taken
/// from the spread of the per-member averages.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub covariance: CovarianceMatrix,
    pub standard_errors: DMatrix<f64>,
    pub samples: usize,
}

pub fn simulate_covariance(a: &DMatrix<f64>, d: &DMatrix<f64>, cfg: &TrajectoryConfig) -> Result<CovarianceEstimate> {
    cfg.validate(a)?;
    let n = a.nrows();
    let p = propagator(a, d, cfg);
    let members: Vec<DMatrix<f64>> = (0..cfg.n_ensemble)
        .into_par_iter()
        .map(|m| {
            let mut acc = vec![CompensatedSum::default(); n * n];
            run_member(&p, cfg, m, |x| {
                for i in 0..n {
                    for j in i..n {
                        acc[i * n + j].add(x[i] * x[j]);
                    }
                }
            });
            let steps = cfg.n_steps as f64;
            DMatrix::from_fn(n, n, |i, j| {
                let (i, j) = if i <= j { (i, j) } else { (j, i) };
                acc[i * n + j].value() / steps
            })
        })
        .collect();

    Ok(ensemble_statistics(members, cfg))
}

fn ensemble_statistics(members: Vec<DMatrix<f64>>, cfg: &TrajectoryConfig) -> CovarianceEstimate {
    let n = members[0].nrows();
    let count = members.len() as f64;
    let mut mean = DMatrix::zeros(n, n);
    let mut se = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = CompensatedSum::default();
            members.iter().for_each(|m| s.add(m[(i, j)]));
            let mu = s.value() / count;
            let mut v = CompensatedSum::default();
            members.iter().for_each(|m| v.add((m[(i, j)] - mu).powi(2)));
            mean[(i, j)] = mu;
            se[(i, j)] = if members.len() > 1 {
                (v.value() / (count - 1.0) / count).sqrt()
            } else {
                f64::NAN
            };
        }
    }
    CovarianceEstimate {
        covariance: CovarianceMatrix::new(mean),
        standard_errors: se,
        samples: cfg.n_ensemble * cfg.n_steps,
    }
}

/// Monte-Carlo estimate of the stationary covariance of a fluctuation model.
pub fn simulate_linear_system(model: &LinearModel, cfg: &TrajectoryConfig) -> Result<CovarianceEstimate> {
    if !model.stable {
        return Err(Error::UnstableDrift {
            max_real: crate::dynamics::max_real_eigenvalue(&model.drift)?,
        });
    }
    simulate_covariance(&model.drift, &model.diffusion, cfg)
}
