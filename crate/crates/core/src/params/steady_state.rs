use serde::{Deserialize, Serialize};

use super::{cubic_real_roots, drive_amplitude, BranchPolicy, Detuning, SystemParams};
use crate::error::{Error, Result};

/// Which solution of the bistability cubic the working point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Monostable,
    Lower,
    Middle,
    Upper,
}

/// Classical stationary state of the driven cavity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// |α_s|
    pub alpha_abs: f64,
    /// |α_s|²
    pub photon_number: f64,
    /// Effective detuning Δ.
    pub delta_eff: f64,
    /// Bare detuning Δ₀.
    pub delta_bare: f64,
    /// Static displacement q_s = G₀|α_s|²/ω_m.
    pub q_static: f64,
    /// Effective coupling G = G₀√2|α_s|.
    pub g_eff: f64,
    /// Drive amplitude E₀.
    pub drive: f64,
    pub branch: Branch,
    /// Admissible |α_s|² roots of the cubic at `delta_bare`, ascending.
    pub all_roots: Vec<f64>,
}

/// Solve for the classical working point.
///
/// With an effective detuning the amplitude is explicit. With a bare detuning
/// the photon number `I` solves `I·(κ² + (Δ₀ − G₀²I/ω_m)²) = E₀²`, and the
/// branch policy picks among up to three roots.
pub fn solve_steady_state(params: &SystemParams) -> Result<SteadyState> {
    params.validate()?;
    let e0 = drive_amplitude(params);
    let kappa = params.kappa;
    let shift_per_photon = params.g0 * params.g0 / params.omega_m;

    let (photon_number, delta_eff, delta_bare, roots, branch) = match params.detuning {
        Detuning::Effective(delta) => {
            let n = e0 * e0 / (kappa * kappa + delta * delta);
            let delta_bare = delta + shift_per_photon * n;
            let roots = photon_roots(e0, kappa, delta_bare, shift_per_photon)?;
            let branch = classify(&roots, n);
            (n, delta, delta_bare, roots, branch)
        }
        Detuning::Bare(delta_bare) => {
            let roots = photon_roots(e0, kappa, delta_bare, shift_per_photon)?;
            let (n, branch) = select(&roots, params.branch_policy);
            (n, delta_bare - shift_per_photon * n, delta_bare, roots, branch)
        }
    };

    let alpha_abs = photon_number.sqrt();
    Ok(SteadyState {
        alpha_abs,
        photon_number,
        delta_eff,
        delta_bare,
        q_static: params.g0 * photon_number / params.omega_m,
        g_eff: params.g0 * std::f64::consts::SQRT_2 * alpha_abs,
        drive: e0,
        branch,
        all_roots: roots,
    })
}

/// Nonnegative real roots in photon number of the bare-detuning cubic.
fn photon_roots(e0: f64, kappa: f64, delta_bare: f64, k: f64) -> Result<Vec<f64>> {
    if e0 == 0.0 {
        return Ok(vec![0.0]);
    }
    // Dimensionless y = kI/κ: y³ − 2d·y² + (1+d²)·y − e = 0.
    let d = delta_bare / kappa;
    let e = k * e0 * e0 / kappa.powi(3);
    let cubic = cubic_real_roots(1.0, -2.0 * d, 1.0 + d * d, -e);
    let mut roots: Vec<f64> = cubic
        .roots
        .into_iter()
        .filter(|y| *y >= 0.0)
        .map(|y| y * kappa / k)
        .collect();
    if roots.is_empty() {
        // y(1 + (d − y)²) = e > 0 always has a positive root.
        return Err(Error::NoPhysicalRoot);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    Ok(roots)
}

fn select(roots: &[f64], policy: BranchPolicy) -> (f64, Branch) {
    if roots.len() == 1 {
        return (roots[0], Branch::Monostable);
    }
    match policy {
        BranchPolicy::Lower => (roots[0], Branch::Lower),
        BranchPolicy::Upper => (roots[roots.len() - 1], Branch::Upper),
        BranchPolicy::Middle => (roots[roots.len() / 2], Branch::Middle),
    }
}

fn classify(roots: &[f64], n: f64) -> Branch {
    if roots.len() == 1 {
        return Branch::Monostable;
    }
    let nearest = roots
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - n)
                .abs()
                .partial_cmp(&(b.1 - n).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    match nearest {
        0 => Branch::Lower,
        i if i == roots.len() - 1 => Branch::Upper,
        _ => Branch::Middle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn residual(p: &SystemParams, n: f64) -> f64 {
        let k = p.g0 * p.g0 / p.omega_m;
        let ss = solve_steady_state(p).unwrap();
        let d0 = ss.delta_bare;
        (n * (p.kappa.powi(2) + (d0 - k * n).powi(2)) - ss.drive.powi(2)).abs()
            / ss.drive.powi(2)
    }

    /// Oracle: eigenvalues of the companion matrix of
    /// k²I³ − 2Δ₀kI² + (κ²+Δ₀²)I − E₀², in units of E₀²/κ².
    fn companion_roots(e0: f64, kappa: f64, d0: f64, k: f64) -> Vec<f64> {
        let s = e0 * e0 / (kappa * kappa);
        let a3 = k * k * s * s * s;
        let a2 = -2.0 * d0 * k * s * s;
        let a1 = (kappa * kappa + d0 * d0) * s;
        let a0 = -e0 * e0;
        let m = Matrix3::new(
            0.0, 0.0, -a0 / a3,
            1.0, 0.0, -a1 / a3,
            0.0, 1.0, -a2 / a3,
        );
        let mut r: Vec<f64> = m
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() < 1e-9 * z.re.abs().max(1.0))
            .map(|z| z.re * s)
            .collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r
    }

    #[test]
    fn zero_drive_gives_empty_cavity() {
        let p = SystemParams::reference_point().with_power(0.0);
        let ss = solve_steady_state(&p).unwrap();
        assert_eq!(ss.alpha_abs, 0.0);
        assert_eq!(ss.delta_eff, ss.delta_bare);
        assert_eq!(ss.q_static, 0.0);
        let p = p.with_detuning(Detuning::Bare(p.omega_m));
        let ss = solve_steady_state(&p).unwrap();
        assert_eq!(ss.alpha_abs, 0.0);
        assert_eq!(ss.delta_eff, p.omega_m);
    }

    #[test]
    fn effective_mode_reference_values() {
        let p = SystemParams::reference_point();
        let ss = solve_steady_state(&p).unwrap();
        // Independent closed form: |α| = E₀/(ω_m·√1.25).
        let e0 = drive_amplitude(&p);
        let alpha = e0 / (p.omega_m * 1.25_f64.sqrt());
        assert!((ss.alpha_abs - alpha).abs() < 1e-12 * alpha);
        assert!((ss.alpha_abs - 3.223e4).abs() < 1e-3 * 3.223e4, "{}", ss.alpha_abs);
        assert!((ss.g_eff - 4.56e7).abs() < 2e-3 * 4.56e7, "{:e}", ss.g_eff);
        let k = p.g0 * p.g0 / p.omega_m;
        let rel = (ss.delta_eff - (ss.delta_bare - k * ss.photon_number)).abs() / ss.delta_eff;
        assert!(rel < 1e-12);
    }

    #[test]
    fn bare_mode_matches_effective_inversion_and_companion_oracle() {
        // κ = ω_m keeps Δ₀/κ below √3, so the cubic has a single real root.
        let p = SystemParams::reference_point();
        let p = p.with_kappa(p.omega_m);
        let eff = solve_steady_state(&p).unwrap();
        assert_eq!(eff.branch, Branch::Monostable);
        let bare = solve_steady_state(&p.with_detuning(Detuning::Bare(eff.delta_bare))).unwrap();
        assert_eq!(bare.branch, Branch::Monostable);
        assert_eq!(bare.all_roots.len(), 1);
        assert!((bare.photon_number - eff.photon_number).abs() < 1e-10 * eff.photon_number);

        let k = p.g0 * p.g0 / p.omega_m;
        let oracle = companion_roots(eff.drive, p.kappa, eff.delta_bare, k);
        assert_eq!(oracle.len(), 1);
        assert!((oracle[0] - bare.photon_number).abs() < 1e-8 * oracle[0]);
    }

    #[test]
    fn bistable_cubic_three_roots() {
        // Δ₀ well above √3κ and strong drive puts the cubic in the S-shaped regime.
        let mut p = SystemParams::reference_point();
        p.kappa = 0.05 * p.omega_m;
        let k = p.g0 * p.g0 / p.omega_m;
        let d0 = 4.0 * p.kappa;
        // Drive chosen between the two turning points of the S-curve.
        let y: f64 = 2.0; // dimensionless kI/κ
        let e = y * (1.0 + (4.0 - y).powi(2));
        let e0_sq = e * p.kappa.powi(3) / k;
        let power = e0_sq * crate::constants::HBAR * p.omega_laser() / (2.0 * p.kappa);
        let p = p.with_power(power).with_detuning(Detuning::Bare(d0));
        let ss = solve_steady_state(&p).unwrap();
        assert_eq!(ss.all_roots.len(), 3);
        assert_eq!(ss.branch, Branch::Lower);
        assert_eq!(ss.photon_number, ss.all_roots[0]);
        for &n in &ss.all_roots {
            assert!(residual(&p, n) <= 1e-10);
        }
        let oracle = companion_roots(ss.drive, p.kappa, d0, k);
        assert_eq!(oracle.len(), 3);
        for (a, b) in oracle.iter().zip(&ss.all_roots) {
            assert!((a - b).abs() < 1e-8 * b);
        }

        let mut up = p.clone();
        up.branch_policy = BranchPolicy::Upper;
        let su = solve_steady_state(&up).unwrap();
        assert_eq!(su.branch, Branch::Upper);
        assert_eq!(su.photon_number, ss.all_roots[2]);

        // Effective-mode inversion of the middle root is recognised as such.
        let mid = p.with_detuning(Detuning::Effective(d0 - k * ss.all_roots[1]));
        let sm = solve_steady_state(&mid).unwrap();
        assert_eq!(sm.branch, Branch::Middle);
    }

    #[test]
    fn reference_sweep_stays_on_lower_branch() {
        // Below the instability the working point is the lowest root even
        // when the bare cubic admits three.
        let p = SystemParams::reference_point();
        for mw in [1.0, 10.0, 20.0, 47.0] {
            let ss = solve_steady_state(&p.with_power(mw * 1e-3)).unwrap();
            assert!(matches!(ss.branch, Branch::Monostable | Branch::Lower), "{mw} mW: {:?}", ss.branch);
            assert!((ss.photon_number - ss.all_roots[0]).abs() <= 1e-9 * ss.photon_number);
        }
    }
}
