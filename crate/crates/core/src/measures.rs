//! Entanglement and cooling figures of merit of a two-mode Gaussian state.
//!
//! Covariances use the convention where vacuum has variance 1/2, so a state is
//! physical iff its symplectic eigenvalues are ≥ 1/2 and entangled iff the
//! smallest symplectic eigenvalue of its partial transpose is < 1/2.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::lyapunov::CovarianceMatrix;

/// Slack on the Heisenberg bound ν ≥ 1/2.
pub const PHYSICALITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementResult {
    /// Smallest symplectic eigenvalue of the partially transposed covariance.
    pub eta_minus: f64,
    /// E_N = max(0, −ln 2η⁻).
    pub log_negativity: f64,
    /// −ln 2η⁻ before clamping; negative for separable states.
    pub raw_log_negativity: f64,
    pub entangled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancyResult {
    pub n_eff: f64,
    /// Mean mechanical energy U = ħω_m(n_eff + 1/2), J.
    pub energy: f64,
}

fn block(v: &DMatrix<f64>, r: usize, c: usize) -> Matrix2<f64> {
    Matrix2::new(v[(r, c)], v[(r, c + 1)], v[(r + 1, c)], v[(r + 1, c + 1)])
}

/// Local symplectic invariants (det V_A, det V_B, det V_C, det V).
fn invariants(v: &DMatrix<f64>) -> (f64, f64, f64, f64) {
    let da = block(v, 0, 0).determinant();
    let db = block(v, 2, 2).determinant();
    let dc = block(v, 0, 2).determinant();
    // LU with partial pivoting; cofactor expansion loses digits near threshold.
    let det = v.clone().lu().determinant();
    (da, db, dc, det)
}

/// Smaller symplectic eigenvalue from the invariant Σ and det V, in the
/// cancellation-free form ν² = 2·det V / (Σ + √(Σ² − 4 det V)).
fn smaller_symplectic(sigma: f64, det: f64) -> Result<f64> {
    let disc = sigma * sigma - 4.0 * det;
    if disc < -1e-12 * sigma * sigma {
        return Err(Error::NegativeDiscriminant { value: disc });
    }
    let root = disc.max(0.0).sqrt();
    let denom = sigma + root;
    if denom <= 0.0 || det < 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * det / denom).sqrt())
}

/// Uncertainty relation in polynomial form, (ν₊² − ¼)(ν₋² − ¼) ≥ 0 with
/// ν₊² + ν₋² ≥ ½. Free of the square root that makes ν₋ inaccurate when the
/// two symplectic eigenvalues nearly coincide, as for pure states.
fn satisfies_uncertainty(sigma: f64, det: f64) -> bool {
    let scale = det.abs() + 0.25 * sigma.abs() + 0.0625;
    let tol = 64.0 * f64::EPSILON * scale;
    det - 0.25 * sigma + 0.0625 >= -tol && sigma >= 0.5 - tol
}

fn check_order(v: &CovarianceMatrix) -> Result<()> {
    if v.order() != 4 {
        return Err(Error::Dimension(format!(
            "two-mode measures need a 4×4 covariance, got order {}",
            v.order()
        )));
    }
    Ok(())
}

/// Smaller symplectic eigenvalue of a two-mode covariance.
pub fn min_symplectic_eigenvalue(v: &CovarianceMatrix) -> Result<f64> {
    check_order(v)?;
    let (da, db, dc, det) = invariants(&v.entries);
    smaller_symplectic(da + db + 2.0 * dc, det)
}

/// Logarithmic negativity from Σ(V) = det V_A + det V_B − 2 det V_C.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<EntanglementResult> {
    check_order(v)?;
    let (da, db, dc, det) = invariants(&v.entries);
    let nu = smaller_symplectic(da + db + 2.0 * dc, det)?;
    let a_pos = v.entries[(0, 0)] > 0.0 && da > 0.0;
    if !(nu >= 0.5 - PHYSICALITY_SLACK || satisfies_uncertainty(da + db + 2.0 * dc, det)) || !a_pos {
        return Err(Error::UnphysicalState { nu_min: nu });
    }
    let eta = smaller_symplectic(da + db - 2.0 * dc, det)?;
    Ok(entanglement_from_eta(eta))
}

pub fn entanglement_from_eta(eta_minus: f64) -> EntanglementResult {
    let raw = -(2.0 * eta_minus).ln();
    EntanglementResult {
        eta_minus,
        log_negativity: raw.max(0.0),
        raw_log_negativity: raw,
        entangled: eta_minus < 0.5,
    }
}

/// Symplectic form ⊕ [[0, 1], [−1, 0]] for `modes` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * modes, 2 * modes);
    for m in 0..modes {
        j[(2 * m, 2 * m + 1)] = 1.0;
        j[(2 * m + 1, 2 * m)] = -1.0;
    }
    j
}

/// Symplectic eigenvalues (ascending, one per mode) as moduli of the
/// eigenvalues of J·V.
pub fn symplectic_spectrum(v: &DMatrix<f64>) -> Result<Vec<f64>> {
    let modes = v.nrows() / 2;
    let jv = symplectic_form(modes) * v;
    let schur = nalgebra::Schur::try_new(jv, f64::EPSILON, 10_000).ok_or(Error::EigenNotConverged)?;
    let mut mags: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(mags.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Partial transpose of a Gaussian covariance: flip the momentum of `mode`.
pub fn partial_transpose(v: &DMatrix<f64>, mode: usize) -> DMatrix<f64> {
    let k = 2 * mode + 1;
    let mut out = v.clone();
    for i in 0..v.nrows() {
        if i != k {
            out[(i, k)] = -out[(i, k)];
            out[(k, i)] = -out[(k, i)];
        }
    }
    out
}

/// Logarithmic negativity from the symplectic spectrum of the partial transpose.
pub fn log_negativity_symplectic(v: &CovarianceMatrix) -> Result<EntanglementResult> {
    check_order(v)?;
    let spec = symplectic_spectrum(&partial_transpose(&v.entries, 1))?;
    Ok(entanglement_from_eta(spec[0]))
}

/// Mechanical occupancy n_eff = (⟨δq²⟩ + ⟨δp²⟩ − 1)/2.
pub fn occupancy(v: &CovarianceMatrix, omega_m: f64) -> OccupancyResult {
    let n_eff = 0.5 * (v.entries[(0, 0)] + v.entries[(1, 1)] - 1.0);
    OccupancyResult {
        n_eff,
        energy: HBAR * omega_m * (n_eff + 0.5),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_mode_squeezed(r: f64) -> CovarianceMatrix {
        let c = (2.0 * r).cosh() / 2.0;
        let s = (2.0 * r).sinh() / 2.0;
        CovarianceMatrix::new(DMatrix::from_row_slice(
            4,
            4,
            &[
                c, 0.0, s, 0.0, //
                0.0, c, 0.0, -s, //
                s, 0.0, c, 0.0, //
                0.0, -s, 0.0, c,
            ],
        ))
    }

    #[test]
    fn vacuum_is_separable() {
        let v = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.5);
        let e = log_negativity(&v).unwrap();
        assert!((e.eta_minus - 0.5).abs() < 1e-15);
        assert_eq!(e.log_negativity, 0.0);
        assert!(!e.entangled);
    }

    #[test]
    fn two_mode_squeezed_state() {
        let r = 0.5;
        let v = two_mode_squeezed(r);
        let e = log_negativity(&v).unwrap();
        assert!((e.eta_minus - (-2.0 * r).exp() / 2.0).abs() < 1e-12);
        assert!((e.log_negativity - 2.0 * r).abs() < 1e-12);
        let s = log_negativity_symplectic(&v).unwrap();
        assert!((s.log_negativity - 2.0 * r).abs() < 1e-12);
    }

    #[test]
    fn product_state_is_separable() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = 3.0;
        m[(1, 1)] = 0.2;
        m[(0, 1)] = 0.1;
        m[(1, 0)] = 0.1;
        m[(2, 2)] = 0.5;
        m[(3, 3)] = 0.5;
        let e = log_negativity(&CovarianceMatrix::new(m)).unwrap();
        assert_eq!(e.log_negativity, 0.0);
    }

    #[test]
    fn sub_vacuum_state_is_unphysical() {
        let v = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.3);
        assert!(matches!(log_negativity(&v), Err(Error::UnphysicalState { .. })));
    }

    #[test]
    fn wrong_order_is_rejected() {
        let v = CovarianceMatrix::new(DMatrix::identity(6, 6));
        assert!(log_negativity(&v).is_err());
    }

    #[test]
    fn occupancy_examples() {
        let v = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.5);
        let o = occupancy(&v, 1.0e7);
        assert_eq!(o.n_eff, 0.0);
        assert!((o.energy - HBAR * 1.0e7 * 0.5).abs() < 1e-40);
        let mut m = DMatrix::identity(4, 4) * 0.5;
        m[(0, 0)] = 12.5;
        m[(1, 1)] = 12.5;
        assert!((occupancy(&CovarianceMatrix::new(m), 1.0).n_eff - 12.0).abs() < 1e-14);
    }

    #[test]
    fn symplectic_spectrum_of_thermal_state() {
        let mut m = DMatrix::identity(4, 4);
        m[(0, 0)] = 2.5;
        m[(1, 1)] = 2.5;
        let s = symplectic_spectrum(&m).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-14 && (s[1] - 2.5).abs() < 1e-14);
    }
}
