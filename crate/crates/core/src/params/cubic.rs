//! Real roots of a cubic polynomial.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct CubicRoots {
    /// Real roots, ascending. Near-degenerate pairs may appear once or twice.
    pub roots: Vec<f64>,
    /// Discriminant of the depressed cubic, (q/2)² + (p/3)³; negative means
    /// three distinct real roots.
    pub discriminant: f64,
}

/// Real roots of `c3·x³ + c2·x² + c1·x + c0` with `c3 ≠ 0`.
///
/// Closed-form (trigonometric or Cardano) seeds followed by Newton polishing
/// on the undepressed polynomial.
pub fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> CubicRoots {
    assert!(c3 != 0.0, "leading coefficient must be nonzero");
    let b = c2 / c3;
    let c = c1 / c3;
    let d = c0 / c3;

    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    let mut seeds: Vec<f64> = if disc > 0.0 {
        // One real root. Choose the sign that avoids cancellation.
        let s = disc.sqrt();
        let u = (-q / 2.0 - q.signum() * s).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .collect()
    };

    for x in seeds.iter_mut() {
        *x = polish(*x, b, c, d);
    }
    seeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    CubicRoots {
        roots: seeds,
        discriminant: disc,
    }
}

fn polish(mut x: f64, b: f64, c: f64, d: f64) -> f64 {
    for _ in 0..8 {
        let f = ((x + b) * x + c) * x + d;
        let df = (3.0 * x + 2.0 * b) * x + c;
        if df == 0.0 || !f.is_finite() {
            break;
        }
        let step = f / df;
        let next = x - step;
        if !next.is_finite() {
            break;
        }
        // Accept only steps that do not increase the residual.
        let f_next = ((next + b) * next + c) * next + d;
        if f_next.abs() > f.abs() {
            break;
        }
        x = next;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(x: f64, c: [f64; 4]) -> f64 {
        ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
    }

    #[test]
    fn three_distinct_roots() {
        // (x-1)(x-2)(x-3) = x³ - 6x² + 11x - 6
        let r = cubic_real_roots(1.0, -6.0, 11.0, -6.0);
        assert_eq!(r.roots.len(), 3);
        for (got, want) in r.roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(r.discriminant < 0.0);
    }

    #[test]
    fn single_real_root() {
        // (x-2)(x²+1)
        let r = cubic_real_roots(1.0, -2.0, 1.0, -2.0);
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn scaled_coefficients_keep_residual_small() {
        let c = [3.0e-8, -1.0e-2, 7.0e2, -1.0e5];
        let r = cubic_real_roots(c[0], c[1], c[2], c[3]);
        for &x in &r.roots {
            let scale = c[0].abs() * x.abs().powi(3)
                + c[1].abs() * x * x
                + c[2].abs() * x.abs()
                + c[3].abs();
            assert!(eval(x, c).abs() < 1e-12 * scale);
        }
    }
}
