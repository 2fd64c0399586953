use nalgebra::{DMatrix, DVector};
use optomech::constants::TWO_PI;
use optomech::dynamics::{build_model, is_stable, max_real_eigenvalue, routh_hurwitz_optomechanical};
use optomech::lyapunov::{solve_lyapunov, solve_lyapunov_schur, solve_model, CovarianceMatrix, RESIDUAL_TOL};
use optomech::measures::{log_negativity, log_negativity_symplectic, min_symplectic_eigenvalue};
use optomech::params::{solve_steady_state, Detuning, NoiseSpec, SystemParams};
use optomech::spectral::{
    effective_response, laser_correlation, scattering_rates, threshold_eta_minus_noiseless, threshold_eta_minus_raw,
};
use proptest::prelude::*;

fn base() -> SystemParams {
    SystemParams::reference_point().with_noise(NoiseSpec::None)
}

/// Working point with normalized κ, Δ and coupling G = ratio·ω_m.
fn point(kappa: f64, delta: f64, g_over_wm: f64, noise: NoiseSpec) -> SystemParams {
    let p = base();
    let wm = p.omega_m;
    p.with_kappa(kappa * wm)
        .with_detuning(Detuning::Effective(delta * wm))
        .with_noise(noise)
        .with_coupling(g_over_wm * wm)
        .unwrap()
}

fn rotation(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
}

fn squeezer(r: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[r.exp(), 0.0, 0.0, (-r).exp()])
}

fn local(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(4, 4);
    s.view_mut((0, 0), (2, 2)).copy_from(a);
    s.view_mut((2, 2), (2, 2)).copy_from(b);
    s
}

fn two_mode_squeezer(r: f64) -> DMatrix<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    )
}

fn beam_splitter(t: f64) -> DMatrix<f64> {
    let (c, s) = (t.cos(), t.sin());
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, s, //
            -s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    )
}

/// S·diag(ν₁, ν₁, ν₂, ν₂)·Sᵀ with S a product of symplectic generators;
/// physical whenever ν₁, ν₂ ≥ 1/2.
fn physical_cm(nu: (f64, f64), angles: [f64; 6], squeeze: [f64; 3]) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![nu.0, nu.0, nu.1, nu.1]));
    let s = local(&rotation(angles[0]), &rotation(angles[1]))
        * two_mode_squeezer(squeeze[0])
        * local(&(squeezer(squeeze[1]) * rotation(angles[2])), &(squeezer(squeeze[2]) * rotation(angles[3])))
        * beam_splitter(angles[4])
        * local(&rotation(angles[5]), &DMatrix::identity(2, 2));
    &s * d * s.transpose()
}

prop_compose! {
    fn arb_cm()(
        nu1 in 0.5f64..4.0,
        nu2 in 0.5f64..4.0,
        angles in prop::array::uniform6(0.0f64..TWO_PI),
        squeeze in prop::array::uniform3(-1.2f64..1.2),
    ) -> DMatrix<f64> {
        physical_cm((nu1, nu2), angles, squeeze)
    }
}

prop_compose! {
    /// Random stable drift with a positive semidefinite diffusion.
    fn arb_stable_system(n: usize)(
        raw in prop::collection::vec(-1.0f64..1.0, n * n),
        noise in prop::collection::vec(-1.0f64..1.0, n * n),
        shift in 0.1f64..2.0,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = DMatrix::from_row_slice(n, n, &raw);
        let a = &m - DMatrix::identity(n, n) * (m.norm() + shift);
        let b = DMatrix::from_row_slice(n, n, &noise);
        (a, &b * b.transpose())
    }
}

fn relative_residual(v: &CovarianceMatrix, d: &DMatrix<f64>) -> f64 {
    v.residual / d.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn formula_matches_partial_transpose(v in arb_cm()) {
        let cm = CovarianceMatrix::new(v);
        let f = log_negativity(&cm).unwrap();
        let s = log_negativity_symplectic(&cm).unwrap();
        prop_assert!((f.eta_minus - s.eta_minus).abs() <= 1e-9 * s.eta_minus.max(1.0),
            "eta {} vs {}", f.eta_minus, s.eta_minus);
        prop_assert!((f.log_negativity - s.log_negativity).abs() <= 1e-9,
            "E_N {} vs {}", f.log_negativity, s.log_negativity);
    }

    #[test]
    fn routh_hurwitz_matches_eigenvalues(
        kappa in 0.05f64..3.0,
        delta in -3.0f64..3.0,
        g in 0.0f64..1.5,
    ) {
        let p = point(kappa, delta, g, NoiseSpec::None);
        let ss = solve_steady_state(&p).unwrap();
        let model = build_model(&p, &ss);
        let a4 = model.drift.view((0, 0), (4, 4)).into_owned();
        let lam = max_real_eigenvalue(&a4).unwrap();
        // Marginal cases are decided by rounding in both tests.
        prop_assume!(lam.abs() > 1e-9 * p.omega_m);
        prop_assert_eq!(routh_hurwitz_optomechanical(&model, p.omega_m), lam < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lyapunov_solvers_agree((a, d) in arb_stable_system(5)) {
        let v1 = solve_lyapunov(&a, &d).unwrap();
        let v2 = solve_lyapunov_schur(&a, &d).unwrap();
        prop_assert!(relative_residual(&v1, &d) <= RESIDUAL_TOL);
        prop_assert!(relative_residual(&v2, &d) <= RESIDUAL_TOL);
        let scale = v1.entries.amax().max(1e-300);
        prop_assert!((&v1.entries - &v2.entries).amax() <= 1e-9 * scale);
    }

    #[test]
    fn physical_model_residual(
        kappa in 0.1f64..2.0,
        delta in 0.25f64..2.0,
        margin in 0.05f64..0.98,
        linewidth_hz in prop::sample::select(vec![0.0, 100.0, 1000.0]),
    ) {
        let p = base();
        let (wm, k, d) = (p.omega_m, kappa * p.omega_m, delta * p.omega_m);
        let g = margin * optomech::dynamics::threshold_coupling(wm, k, d);
        let noise = NoiseSpec::bandpass_half_width(TWO_PI * linewidth_hz, TWO_PI * 50e3);
        let p = point(kappa, delta, g / wm, noise);
        let ss = solve_steady_state(&p).unwrap();
        let model = build_model(&p, &ss);
        prop_assume!(model.stable);
        let v = solve_model(&model).unwrap();
        prop_assert!(relative_residual(&v, &model.diffusion) <= RESIDUAL_TOL,
            "residual {:e}", v.residual);
    }

    #[test]
    fn optical_damping_identity(
        kappa in 0.05f64..3.0,
        delta in 0.05f64..3.0,
        g in 0.0f64..0.6,
    ) {
        let p = point(kappa, delta, g, NoiseSpec::None);
        let ss = solve_steady_state(&p).unwrap();
        let resp = effective_response(&p, &ss);
        prop_assume!(resp.is_ok());
        let resp = resp.unwrap();
        let rates = scattering_rates(&p, &ss);
        let diff = resp.gamma_eff - p.gamma_m();
        prop_assert!((rates.gamma_op - diff).abs() <= 1e-12 * resp.gamma_eff,
            "{} vs {}", rates.gamma_op, diff);
    }

    #[test]
    fn noiseless_threshold_formula(
        kappa in 0.01f64..5.0,
        delta in 0.01f64..5.0,
        photons in 1.0f64..1e12,
    ) {
        let full = threshold_eta_minus_raw(kappa, delta, 1.0, photons, 0.0);
        let reduced = threshold_eta_minus_noiseless(kappa, delta, 1.0);
        prop_assert!((full - reduced).abs() <= 1e-12 * reduced);
    }

    #[test]
    fn local_symplectic_invariance(
        v in arb_cm(),
        angles in prop::array::uniform2(0.0f64..TWO_PI),
        squeeze in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let s = local(&(squeezer(squeeze[0]) * rotation(angles[0])), &(squeezer(squeeze[1]) * rotation(angles[1])));
        let before = log_negativity(&CovarianceMatrix::new(v.clone())).unwrap();
        let after = log_negativity(&CovarianceMatrix::new(&s * v * s.transpose())).unwrap();
        prop_assert!((before.eta_minus - after.eta_minus).abs() <= 1e-9 * before.eta_minus.max(1.0));
    }

    #[test]
    fn added_noise_never_increases_entanglement(
        v in arb_cm(),
        noise in prop::collection::vec(-0.5f64..0.5, 16),
    ) {
        let b = DMatrix::from_row_slice(4, 4, &noise);
        let before = log_negativity(&CovarianceMatrix::new(v.clone())).unwrap();
        let noisy = CovarianceMatrix::new(&v + &b * b.transpose());
        let after = log_negativity(&noisy).unwrap();
        prop_assert!(after.log_negativity <= before.log_negativity + 1e-9);
        prop_assert!(min_symplectic_eigenvalue(&noisy).unwrap() >= 0.5 - 1e-9);
    }

    #[test]
    fn bare_susceptibility_without_coupling(w in 0.0f64..3.0) {
        let p = base().with_power(0.0);
        let ss = solve_steady_state(&p).unwrap();
        let resp = effective_response(&p, &ss).unwrap();
        let omega = w * p.omega_m;
        let bare = nalgebra::Complex::new(p.omega_m.powi(2) - omega * omega, -p.gamma_m() * omega).inv();
        prop_assert!((resp.chi(omega) - bare).norm() <= 1e-12 * bare.norm());
        prop_assert_eq!(resp.omega_eff, p.omega_m);
        prop_assert_eq!(resp.gamma_eff, p.gamma_m());
    }

    #[test]
    fn white_noise_correlation(linewidth_hz in 1.0f64..1e5, x in 0.0f64..10.0) {
        let gamma_l = TWO_PI * linewidth_hz;
        let tau = x / gamma_l;
        let c = laser_correlation(&NoiseSpec::White { gamma_l }, tau).unwrap();
        prop_assert!((c - (-gamma_l * tau).exp()).abs() <= 1e-8);
        let back = laser_correlation(&NoiseSpec::White { gamma_l }, -tau).unwrap();
        prop_assert_eq!(c, back);
    }
}

#[test]
fn response_peaks_near_effective_frequency() {
    let p = point(0.5, 1.0, 0.2, NoiseSpec::None);
    let ss = solve_steady_state(&p).unwrap();
    let resp = effective_response(&p, &ss).unwrap();
    let wm = p.omega_m;
    let (mut best, mut peak) = (0.0, 0.0);
    for k in 0..=200_000 {
        let w = wm * (0.5 + k as f64 * 1e-5);
        let m = resp.chi(w).norm_sqr();
        if m > peak {
            peak = m;
            best = w;
        }
    }
    assert!((best - resp.omega_eff).abs() < 0.05 * resp.omega_eff, "{best} vs {}", resp.omega_eff);
}

#[test]
fn stability_is_independent_of_phase_noise() {
    for noise in [
        NoiseSpec::None,
        NoiseSpec::White { gamma_l: TWO_PI * 1e3 },
        NoiseSpec::bandpass_half_width(TWO_PI * 1e3, TWO_PI * 50e3),
    ] {
        let stable = point(0.5, 1.0, 1.0, noise);
        let unstable = point(0.5, 1.0, 1.2, noise);
        let check = |p: &SystemParams| is_stable(&build_model(p, &solve_steady_state(p).unwrap()).drift);
        assert!(check(&stable));
        assert!(!check(&unstable));
    }
}
