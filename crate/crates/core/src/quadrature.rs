//! Adaptive Gauss–Kronrod (10/21-point) quadrature for vector-valued
//! integrands with per-component tolerances.
#![allow(clippy::excessive_precision)]


use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_482_977_761_196,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_146,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
}

fn gauss_kronrod<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Panel
where
    F: FnMut(f64, &mut [f64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut abs_sum = vec![0.0; dim];
    let mut fvals = vec![0.0; dim * 21];

    f(c, buf);
    for i in 0..dim {
        kron[i] = WGK[10] * buf[i];
        abs_sum[i] = WGK[10] * buf[i].abs();
        fvals[20 * dim + i] = buf[i];
    }
    for k in 0..10 {
        let dx = h * XGK[k];
        f(c - dx, buf);
        fvals[(2 * k) * dim..(2 * k + 1) * dim].copy_from_slice(buf);
        f(c + dx, buf);
        fvals[(2 * k + 1) * dim..(2 * k + 2) * dim].copy_from_slice(buf);
        for i in 0..dim {
            let lo = fvals[2 * k * dim + i];
            let hi = fvals[(2 * k + 1) * dim + i];
            kron[i] += WGK[k] * (lo + hi);
            abs_sum[i] += WGK[k] * (lo.abs() + hi.abs());
            if k % 2 == 1 {
                gauss[i] += WG[k / 2] * (lo + hi);
            }
        }
    }

    let mut value = vec![0.0; dim];
    let mut error = vec![0.0; dim];
    for i in 0..dim {
        let mean = 0.5 * kron[i];
        let mut asc = WGK[10] * (fvals[20 * dim + i] - mean).abs();
        for k in 0..10 {
            asc += WGK[k]
                * ((fvals[2 * k * dim + i] - mean).abs() + (fvals[(2 * k + 1) * dim + i] - mean).abs());
        }
        let res_abs = abs_sum[i] * h.abs();
        let res_asc = asc * h.abs();
        let mut err = ((kron[i] - gauss[i]) * h).abs();
        if res_asc != 0.0 && err != 0.0 {
            err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
        }
        let floor = 50.0 * f64::EPSILON * res_abs;
        if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && err < floor {
            err = floor;
        }
        value[i] = kron[i] * h;
        error[i] = err;
    }
    Panel { a, b, value, error }
}

/// Integrate `f` over `[points[0], points[last]]`, splitting first at every
/// interior point.
///
/// `f(x, out)` writes `dim` components. Component `i` has converged when its
/// accumulated error estimate is at most `tolerance(values, i)`, which lets
/// callers scale tolerances by other components; the default closure
/// [`mixed_tolerance`] uses `max(abs_tol, rel_tol·|I_i|)`.
pub fn integrate<F, T>(mut f: F, dim: usize, points: &[f64], tolerance: T, max_intervals: usize) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [f64]),
    T: Fn(&[f64], usize) -> f64,
{
    assert!(points.len() >= 2, "need at least one interval");
    let mut buf = vec![0.0; dim];
    let mut panels: Vec<Panel> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(&mut f, w[0], w[1], dim, &mut buf))
        .collect();
    let mut evaluations = 21 * panels.len();

    loop {
        let mut values = vec![0.0; dim];
        let mut errors = vec![0.0; dim];
        for p in &panels {
            for i in 0..dim {
                values[i] += p.value[i];
                errors[i] += p.error[i];
            }
        }
        let tols: Vec<f64> = (0..dim).map(|i| tolerance(&values, i)).collect();
        let worst = (0..dim)
            .map(|i| errors[i] / tols[i])
            .fold(0.0, f64::max);
        if worst <= 1.0 {
            return Ok(QuadResult {
                values,
                errors,
                evaluations,
                intervals: panels.len(),
            });
        }
        if panels.len() >= max_intervals {
            let (err, tol) = (0..dim)
                .map(|i| (errors[i], tols[i]))
                .max_by(|x, y| (x.0 / x.1).partial_cmp(&(y.0 / y.1)).unwrap())
                .unwrap();
            return Err(Error::QuadratureNotConverged {
                error_estimate: err,
                tolerance: tol,
            });
        }

        // Bisect every panel within a factor of four of the worst one.
        let scores: Vec<f64> = panels
            .iter()
            .map(|p| (0..dim).map(|i| p.error[i] / tols[i]).fold(0.0, f64::max))
            .collect();
        let top = scores.iter().cloned().fold(0.0, f64::max);
        let mut kept = Vec::with_capacity(panels.len() + 16);
        let mut split = Vec::new();
        for (p, s) in panels.into_iter().zip(scores) {
            if s >= 0.25 * top && split.len() < 256 {
                split.push(p);
            } else {
                kept.push(p);
            }
        }
        for p in split {
            let mid = 0.5 * (p.a + p.b);
            if !(mid > p.a && mid < p.b) {
                // Interval can no longer be split in floating point.
                return Err(Error::QuadratureNotConverged {
                    error_estimate: p.error.iter().cloned().fold(0.0, f64::max),
                    tolerance: tols.iter().cloned().fold(f64::INFINITY, f64::min),
                });
            }
            kept.push(gauss_kronrod(&mut f, p.a, mid, dim, &mut buf));
            kept.push(gauss_kronrod(&mut f, mid, p.b, dim, &mut buf));
            evaluations += 42;
        }
        panels = kept;
    }
}

/// Tolerance `max(abs_tol, rel_tol·|I_i|)`.
pub fn mixed_tolerance(opts: QuadOptions) -> impl Fn(&[f64], usize) -> f64 {
    move |values: &[f64], i: usize| opts.abs_tol.max(opts.rel_tol * values[i].abs())
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(mut f: F, points: &[f64], opts: QuadOptions) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let r = integrate(
        |x, out: &mut [f64]| out[0] = f(x),
        1,
        points,
        mixed_tolerance(opts),
        opts.max_intervals,
    )?;
    Ok((r.values[0], r.errors[0]))
}

/// Map a half-line [0, ∞) onto a finite parameter range.
///
/// The parameter `t ∈ [0, cutoff]` is the identity; `t ∈ [cutoff, cutoff + 1)`
/// maps to `ω = cutoff / (cutoff + 1 − t)`. Returns `(ω, dω/dt)`.
pub fn half_line_map(t: f64, cutoff: f64) -> (f64, f64) {
    if t <= cutoff {
        (t, 1.0)
    } else {
        let u = cutoff + 1.0 - t;
        (cutoff / u, cutoff / (u * u))
    }
}

/// Sorted, deduplicated breakpoints in `[lo, hi]` always including both ends.
pub fn sorted_points(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|x| x.is_finite() && *x > lo && *x < hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1e-300));
    pts
}
