use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided power spectral density at ω ≥ 0, normalized so that
/// ∫_{−∞}^{∞} S(ω) dω/2π is the variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    /// Angular frequencies kΔω, k = 0..=len/2.
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub segments: usize,
    /// Mean periodograms of independent groups (ensemble members, or single
    /// segments for small ensembles) behind the error bars.
    #[serde(skip)]
    groups: Vec<Vec<f64>>,
}

impl SpectrumEstimate {
    /// Mean over the bins with lo ≤ ω ≤ hi, with the standard error taken
    /// across groups so that correlations between neighboring bins are kept.
    pub fn band(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let idx: Vec<usize> = (0..self.frequencies.len())
            .filter(|&k| self.frequencies[k] >= lo && self.frequencies[k] <= hi)
            .collect();
        if idx.is_empty() {
            return None;
        }
        let per_group: Vec<f64> = self
            .groups
            .iter()
            .map(|g| idx.iter().map(|&k| g[k]).sum::<f64>() / idx.len() as f64)
            .collect();
        Some(mean_and_error(&per_group))
    }

    /// Value and error at the bin nearest to ω.
    pub fn at(&self, omega: f64) -> (f64, f64) {
        let k = self.nearest_bin(omega);
        (self.values[k], self.standard_errors[k])
    }

    pub fn nearest_bin(&self, omega: f64) -> usize {
        self.frequencies
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - omega).abs().total_cmp(&(b.1 - omega).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }

    pub(crate) fn from_groups(groups: Vec<Vec<f64>>, segments: usize, dt: f64, segment_len: usize) -> Self {
        let bins = segment_len / 2 + 1;
        let mut values = Vec::with_capacity(bins);
        let mut standard_errors = Vec::with_capacity(bins);
        for k in 0..bins {
            let col: Vec<f64> = groups.iter().map(|g| g[k]).collect();
            let (m, e) = mean_and_error(&col);
            values.push(m);
            standard_errors.push(e);
        }
        let dw = 2.0 * PI / (segment_len as f64 * dt);
        SpectrumEstimate {
            frequencies: (0..bins).map(|k| k as f64 * dw).collect(),
            values,
            standard_errors,
            segments,
            groups,
        }
    }
}

fn mean_and_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Streaming Hann-windowed periodogram with 50% overlap.
pub struct WelchAccumulator {
    len: usize,
    dt: f64,
    window: Vec<f64>,
    power: f64,
    fft: Arc<dyn Fft<f64>>,
    pending: Vec<f64>,
    scratch: Vec<Complex<f64>>,
    sums: Vec<f64>,
    kept: Option<Vec<Vec<f64>>>,
    segments: usize,
}

impl WelchAccumulator {
    /// `keep_segments` retains every periodogram, for error bars from
    /// individual segments.
    pub fn new(segment_len: usize, dt: f64, keep_segments: bool) -> Result<Self> {
        if segment_len < 4 || segment_len % 2 != 0 {
            return Err(Error::InvalidParameter {
                field: "segment_len",
                reason: format!("must be even and at least 4, got {segment_len}"),
            });
        }
        let window: Vec<f64> = (0..segment_len)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / segment_len as f64).cos())
            .collect();
        let power = window.iter().map(|w| w * w).sum();
        Ok(WelchAccumulator {
            len: segment_len,
            dt,
            window,
            power,
            fft: FftPlanner::new().plan_fft_forward(segment_len),
            pending: Vec::with_capacity(segment_len),
            scratch: vec![Complex::new(0.0, 0.0); segment_len],
            sums: vec![0.0; segment_len / 2 + 1],
            kept: keep_segments.then(Vec::new),
            segments: 0,
        })
    }

    pub fn push(&mut self, x: f64) {
        self.pending.push(x);
        if self.pending.len() < self.len {
            return;
        }
        for (k, s) in self.scratch.iter_mut().enumerate() {
            *s = Complex::new(self.pending[k] * self.window[k], 0.0);
        }
        self.fft.process(&mut self.scratch);
        let scale = self.dt / self.power;
        let bins = self.len / 2 + 1;
        let pg: Vec<f64> = self.scratch[..bins].iter().map(|z| z.norm_sqr() * scale).collect();
        for (s, p) in self.sums.iter_mut().zip(&pg) {
            *s += p;
        }
        if let Some(kept) = &mut self.kept {
            kept.push(pg);
        }
        self.segments += 1;
        self.pending.drain(..self.len / 2);
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// Mean periodogram, and the individual ones when kept.
    pub fn finish(self) -> (Vec<f64>, Option<Vec<Vec<f64>>>) {
        let n = self.segments.max(1) as f64;
        (self.sums.into_iter().map(|s| s / n).collect(), self.kept)
    }
}

/// Threshold on the ensemble size above which error bars come from the
/// spread of per-member means.
pub const MEMBER_GROUPS: usize = 16;

/// Welch estimate from stored trajectories.
pub fn welch_psd(trajectories: &[Vec<f64>], dt: f64, segment_len: usize) -> Result<SpectrumEstimate> {
    let by_member = trajectories.len() >= MEMBER_GROUPS;
    let mut groups = Vec::new();
    let mut segments = 0;
    for tr in trajectories {
        let mut acc = WelchAccumulator::new(segment_len, dt, !by_member)?;
        tr.iter().for_each(|x| acc.push(*x));
        segments += acc.segments();
        let member_segments = acc.segments();
        let (mean, kept) = acc.finish();
        if by_member {
            if member_segments > 0 {
                groups.push(mean);
            }
        } else {
            groups.extend(kept.unwrap_or_default());
        }
    }
    if segments < 2 || groups.len() < 2 {
        return Err(Error::InvalidParameter {
            field: "segment_len",
            reason: format!("only {segments} segment(s) fit in the trajectories"),
        });
    }
    Ok(SpectrumEstimate::from_groups(groups, segments, dt, segment_len))
}
