//! Stationary covariance from the continuous Lyapunov equation A·V + V·Aᵀ = −D.
//!
//! Two independent solvers are provided: the reference path vectorizes the
//! equation into an n²×n² dense system, the second reduces A to real Schur
//! form and back-substitutes block by block (Bartels–Stewart).

use nalgebra::{DMatrix, DVector, Schur};

use crate::dynamics::{max_real_eigenvalue, LinearModel, StateLayout};
use crate::error::{Error, Result};

/// Residual bound ‖AV + VAᵀ + D‖_F ≤ RESIDUAL_TOL · max(‖D‖_F, 1).
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Symmetric stationary second-moment matrix in the quadrature convention
/// where the vacuum variance is 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub entries: DMatrix<f64>,
    /// Variable ordering, when the matrix belongs to the optomechanical model.
    pub basis: Option<StateLayout>,
    /// Frobenius norm of A·V + V·Aᵀ + D for solver output; zero otherwise.
    pub residual: f64,
}

impl CovarianceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Self {
        let basis = match entries.nrows() {
            6 => Some(StateLayout::Full),
            4 => Some(StateLayout::Optomechanical),
            _ => None,
        };
        CovarianceMatrix {
            entries,
            basis,
            residual: 0.0,
        }
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

fn check_inputs(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n || d.nrows() != n || d.ncols() != n {
        return Err(Error::Dimension(format!(
            "A is {}×{}, D is {}×{}",
            a.nrows(),
            a.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    let max_real = max_real_eigenvalue(a)?;
    if max_real >= 0.0 {
        return Err(Error::UnstableDrift { max_real });
    }
    Ok(())
}

fn symmetrize(v: &DMatrix<f64>) -> DMatrix<f64> {
    (v + v.transpose()) * 0.5
}

pub fn lyapunov_residual(a: &DMatrix<f64>, v: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    (a * v + v * a.transpose() + d).norm()
}

fn finish(a: &DMatrix<f64>, d: &DMatrix<f64>, v: DMatrix<f64>) -> CovarianceMatrix {
    let v = symmetrize(&v);
    let residual = lyapunov_residual(a, &v, d);
    CovarianceMatrix {
        residual,
        ..CovarianceMatrix::new(v)
    }
}

/// Solve A·V + V·Aᵀ = −D for Hurwitz A (reference dense path).
///
/// The state is rescaled so that the solution has an O(1) diagonal and the
/// system is solved again, which keeps small variances accurate when the
/// auxiliary noise variables carry variances many orders larger.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<CovarianceMatrix> {
    check_inputs(a, d)?;
    let first = vectorized_solve(a, d)?;

    let n = a.nrows();
    let vmax = first.diagonal().amax();
    let scales: Vec<f64> = (0..n)
        .map(|i| {
            let vii = first[(i, i)];
            if vii > 1e-30 * vmax && vii.is_finite() {
                vii.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let s = DVector::from_vec(scales);
    let a_s = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * s[j] / s[i]);
    let d_s = DMatrix::from_fn(n, n, |i, j| d[(i, j)] / (s[i] * s[j]));
    let mut v_s = vectorized_solve(&a_s, &d_s)?;
    // One step of iterative refinement on the balanced system.
    let r = &a_s * &v_s + &v_s * a_s.transpose() + &d_s;
    v_s += vectorized_solve(&a_s, &r)?;
    let v = DMatrix::from_fn(n, n, |i, j| v_s[(i, j)] * s[i] * s[j]);
    Ok(finish(a, d, v))
}

/// Kronecker form (I⊗A + A⊗I)·vec(V) = −vec(D), column-major vec.
fn vectorized_solve(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = n * n;
    let mut k = DMatrix::<f64>::zeros(m, m);
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            for p in 0..n {
                // (A·V)_{ij} = Σ_p A_{ip} V_{pj}
                k[(row, p + n * j)] += a[(i, p)];
                // (V·Aᵀ)_{ij} = Σ_p V_{ip} A_{jp}
                k[(row, i + n * p)] += a[(j, p)];
            }
        }
    }
    let rhs = DVector::from_iterator(m, d.iter().map(|x| -x));
    let lu = k.lu();
    let u_diag: Vec<f64> = (0..m).map(|i| lu.u()[(i, i)].abs()).collect();
    let umax = u_diag.iter().cloned().fold(0.0, f64::max);
    let umin = u_diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if umin > 0.0 { umax / umin } else { f64::INFINITY };
    if !(condition < 1.0 / f64::EPSILON) {
        return Err(Error::SolverSingular { condition });
    }
    let x = lu.solve(&rhs).ok_or(Error::SolverSingular { condition })?;
    Ok(DMatrix::from_column_slice(n, n, x.as_slice()))
}

/// Bartels–Stewart solve through the real Schur form of A.
pub fn solve_lyapunov_schur(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<CovarianceMatrix> {
    check_inputs(a, d)?;
    let n = a.nrows();
    let (q, t) = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or(Error::EigenNotConverged)?
        .unpack();
    let c = -(q.transpose() * d * &q);

    // Diagonal blocks of the quasi-triangular factor.
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let size = if i + 1 < n
            && t[(i + 1, i)].abs() > f64::EPSILON * (t[(i, i)].abs() + t[(i + 1, i + 1)].abs())
        {
            2
        } else {
            1
        };
        blocks.push((i, size));
        i += size;
    }

    let mut x = DMatrix::<f64>::zeros(n, n);
    for bk in (0..blocks.len()).rev() {
        let (rk, pk) = blocks[bk];
        for bl in (0..blocks.len()).rev() {
            let (rl, pl) = blocks[bl];
            let mut rhs = c.view((rk, rl), (pk, pl)).into_owned();
            let tail_k = rk + pk;
            if tail_k < n {
                rhs -= t.view((rk, tail_k), (pk, n - tail_k)) * x.view((tail_k, rl), (n - tail_k, pl));
            }
            let tail_l = rl + pl;
            if tail_l < n {
                rhs -= x.view((rk, tail_l), (pk, n - tail_l))
                    * t.view((rl, tail_l), (pl, n - tail_l)).transpose();
            }
            let tkk = t.view((rk, rk), (pk, pk)).into_owned();
            let tll = t.view((rl, rl), (pl, pl)).into_owned();
            let block = small_sylvester(&tkk, &tll, &rhs)?;
            x.view_mut((rk, rl), (pk, pl)).copy_from(&block);
        }
    }
    let v = &q * x * q.transpose();
    Ok(finish(a, d, v))
}

/// Solve T₁·X + X·T₂ᵀ = R for blocks of size ≤ 2.
fn small_sylvester(t1: &DMatrix<f64>, t2: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = t1.nrows();
    let q = t2.nrows();
    let m = p * q;
    let mut k = DMatrix::<f64>::zeros(m, m);
    for j in 0..q {
        for i in 0..p {
            let row = i + p * j;
            for s in 0..p {
                k[(row, s + p * j)] += t1[(i, s)];
            }
            for s in 0..q {
                k[(row, i + p * s)] += t2[(j, s)];
            }
        }
    }
    let rhs = DVector::from_column_slice(r.as_slice());
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or(Error::SolverSingular { condition: f64::INFINITY })?;
    Ok(DMatrix::from_column_slice(p, q, x.as_slice()))
}

/// Stationary covariance of a linear model.
pub fn solve_model(model: &LinearModel) -> Result<CovarianceMatrix> {
    let mut v = solve_lyapunov(&model.drift, &model.diffusion)?;
    v.basis = Some(model.layout);
    Ok(v)
}

/// Principal 4×4 block (δq, δp, δX_Δ, δY_Δ) of a six-variable covariance.
pub fn reduce_to_optomechanical(v6: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if v6.order() != 6 {
        return Err(Error::Dimension(format!(
            "expected a 6×6 covariance, got order {}",
            v6.order()
        )));
    }
    Ok(CovarianceMatrix {
        entries: v6.entries.view((0, 0), (4, 4)).into_owned(),
        basis: Some(StateLayout::Optomechanical),
        residual: 0.0,
    })
}
