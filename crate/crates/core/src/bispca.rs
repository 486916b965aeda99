//! Penalized PCA by alternating shrinkage and rotation (BISPCA).
//!
//! Minimizes `½‖X − ZLᵀ‖²_F + Σ_k ρ(l_k; λ_k)` over `Z` with orthonormal
//! columns (or `ZᵀZ = N·I` in scaled mode) and unconstrained `L`. For fixed
//! `Z` the loss separates over entries of `L` and is solved by a proximal
//! operator; for fixed `L` the best `Z` is the polar factor of `XL`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FitError, LinalgError};
use crate::linalg::{frobenius_sq, polar_u, qr_q, thin_svd, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    None,
    L1,
    L0,
}

/// Penalty family plus one hyperparameter per column.
///
/// The L0 member is `ρ(l; λ) = (λ²/2)·1{l ≠ 0}`, the penalty whose proximal
/// operator is the hard threshold at `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambdas: Vec<f64>,
}

impl PenaltySpec {
    pub fn none(k: usize) -> Self {
        Self {
            kind: PenaltyKind::None,
            lambdas: vec![0.0; k],
        }
    }

    pub fn l1(lambdas: Vec<f64>) -> Self {
        Self {
            kind: PenaltyKind::L1,
            lambdas,
        }
    }

    pub fn l0(lambdas: Vec<f64>) -> Self {
        Self {
            kind: PenaltyKind::L0,
            lambdas,
        }
    }

    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    pub fn validate(&self, k: usize) -> Result<(), FitError> {
        if self.lambdas.len() != k {
            return Err(FitError::PenaltyLength {
                k,
                found: self.lambdas.len(),
            });
        }
        if self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(FitError::BadLambda);
        }
        Ok(())
    }

    /// `argmin_l ½(l − a)² + ρ(l; λ_k)`.
    #[inline]
    pub fn prox(&self, a: f64, k: usize) -> f64 {
        match self.kind {
            PenaltyKind::None => a,
            PenaltyKind::L1 => prox_l1(a, self.lambdas[k]),
            PenaltyKind::L0 => prox_l0(a, self.lambdas[k]),
        }
    }

    /// `argmin_l (N/2)(l − a)² + ρ(l; λ_k)`, the shrinkage used when
    /// `ZᵀZ = N·I`.
    #[inline]
    pub fn prox_scaled(&self, a: f64, k: usize, n: f64) -> f64 {
        match self.kind {
            PenaltyKind::None => a,
            PenaltyKind::L1 => prox_l1(a, self.lambdas[k] / n),
            PenaltyKind::L0 => prox_l0(a, self.lambdas[k] / n.sqrt()),
        }
    }

    /// `ρ(l; λ_k)` summed over the entries of one column.
    pub fn value(&self, column: impl Iterator<Item = f64>, k: usize) -> f64 {
        let lambda = self.lambdas[k];
        match self.kind {
            PenaltyKind::None => 0.0,
            PenaltyKind::L1 => lambda * column.map(f64::abs).sum::<f64>(),
            PenaltyKind::L0 => 0.5 * lambda * lambda * column.filter(|&l| l != 0.0).count() as f64,
        }
    }
}

/// Soft threshold `sign(a)(|a| − λ)₊`.
#[inline]
pub fn prox_l1(a: f64, lambda: f64) -> f64 {
    let m = a.abs() - lambda;
    if m > 0.0 {
        m.copysign(a)
    } else {
        0.0
    }
}

/// Hard threshold `a·1{|a| > λ}`; `|a| = λ` maps to zero.
#[inline]
pub fn prox_l0(a: f64, lambda: f64) -> f64 {
    if a.abs() > lambda {
        a
    } else {
        0.0
    }
}

fn check_rows(x: &DenseMatrix, z: &DenseMatrix) -> Result<(), FitError> {
    if x.nrows() != z.nrows() {
        return Err(LinalgError::ShapeMismatch {
            expected: (x.nrows(), z.ncols()),
            found: z.shape(),
        }
        .into());
    }
    Ok(())
}

/// `l_{p,k} = prox(x_pᵀ z_k; λ_k)` for orthonormal `Z`.
pub fn shrinkage_step(x: &DenseMatrix, z: &DenseMatrix, penalty: &PenaltySpec) -> Result<DenseMatrix, FitError> {
    check_rows(x, z)?;
    penalty.validate(z.ncols())?;
    let mut theta = x.tr_mul(z);
    for (k, mut col) in theta.column_iter_mut().enumerate() {
        col.apply(|a| *a = penalty.prox(*a, k));
    }
    Ok(theta)
}

fn shrinkage_step_scaled(x: &DenseMatrix, z: &DenseMatrix, penalty: &PenaltySpec, n: f64) -> DenseMatrix {
    let mut theta = x.tr_mul(z) / n;
    for (k, mut col) in theta.column_iter_mut().enumerate() {
        col.apply(|a| *a = penalty.prox_scaled(*a, k, n));
    }
    theta
}

/// `Z = Polar.U(XL)`, the minimizer of `‖X − ZLᵀ‖_F` over orthonormal `Z`.
pub fn rotation_step(x: &DenseMatrix, l: &DenseMatrix) -> Result<DenseMatrix, FitError> {
    if x.ncols() != l.nrows() {
        return Err(LinalgError::ShapeMismatch {
            expected: (x.ncols(), l.ncols()),
            found: l.shape(),
        }
        .into());
    }
    Ok(polar_u(&(x * l))?)
}

/// Rotation that tolerates zero columns of `L`: the nonzero columns get the
/// polar factor, the rest are filled from the previous `Z` projected off
/// that span. The loss does not depend on the filled columns.
fn rotation_with_zero_columns(x: &DenseMatrix, l: &DenseMatrix, prev: &DenseMatrix) -> Result<DenseMatrix, FitError> {
    let active: Vec<usize> = (0..l.ncols()).filter(|&k| l.column(k).iter().any(|&v| v != 0.0)).collect();
    if active.len() == l.ncols() {
        return rotation_step(x, l);
    }
    let la = l.select_columns(&active);
    let za = polar_u(&(x * la))?;
    let mut z = DMatrix::zeros(x.nrows(), l.ncols());
    for (j, &k) in active.iter().enumerate() {
        z.set_column(k, &za.column(j));
    }
    let idle: Vec<usize> = (0..l.ncols()).filter(|k| !active.contains(k)).collect();
    let fill = prev.select_columns(&idle);
    let fill = &fill - &za * za.tr_mul(&fill);
    let q = qr_q(&fill).or_else(|_| complement_basis(&za, idle.len()))?;
    for (j, &k) in idle.iter().enumerate() {
        z.set_column(k, &q.column(j));
    }
    Ok(z)
}

/// `m` orthonormal columns orthogonal to `za`, taken from the trailing left
/// singular vectors of `[za, I]`.
fn complement_basis(za: &DenseMatrix, m: usize) -> Result<DenseMatrix, LinalgError> {
    let n = za.nrows();
    let proj = DMatrix::identity(n, n) - za * za.transpose();
    let svd = thin_svd(&proj)?;
    Ok(svd.u.columns(0, m).into_owned())
}

/// `½‖X − ZLᵀ‖²_F + Σ_k ρ(l_k; λ_k)`.
pub fn objective(x: &DenseMatrix, z: &DenseMatrix, l: &DenseMatrix, penalty: &PenaltySpec) -> f64 {
    let fit = 0.5 * frobenius_sq(&(x - z * l.transpose()));
    let pen: f64 = (0..l.ncols()).map(|k| penalty.value(l.column(k).iter().copied(), k)).sum();
    fit + pen
}

#[derive(Debug, Clone)]
pub struct BispcaOptions {
    pub max_iter: usize,
    /// Stop once the relative objective change falls below this.
    pub tol: f64,
    /// Work with `ZᵀZ = N·I`, so that `LLᵀ` approximates `XᵀX/N`.
    pub scaled: bool,
    /// Starting loadings; defaults to the leading right singular vectors
    /// times the singular values (divided by `√N` when scaled).
    pub init: Option<DenseMatrix>,
    /// Number of observations when `x` is a compact `C` rather than the
    /// data matrix; defaults to the row count.
    pub n_obs: Option<usize>,
}

impl Default for BispcaOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-8,
            scaled: false,
            init: None,
            n_obs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BispcaFit {
    pub z: DenseMatrix,
    pub l: DenseMatrix,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Set when every loading was shrunk to zero and the fit stopped early.
    pub all_zero: bool,
}

/// `V_K diag(D_K)`, signed by the right singular vectors so that `X` and
/// any `C` with `CᵀC = XᵀX` give the same matrix.
pub fn svd_loadings(x: &DenseMatrix, k: usize) -> Result<DenseMatrix, FitError> {
    let svd = thin_svd(x)?.with_right_sign_convention().truncate(k);
    Ok(&svd.v * DMatrix::from_diagonal(&svd.d))
}

pub fn fit_bispca(x: &DenseMatrix, k: usize, penalty: &PenaltySpec, opts: &BispcaOptions) -> Result<BispcaFit, FitError> {
    let (n, p) = x.shape();
    let max = n.min(p);
    if k == 0 || k > max {
        return Err(FitError::RankTooLarge { k, max });
    }
    penalty.validate(k)?;
    if !(opts.tol > 0.0) {
        return Err(FitError::InvalidOption("tol must be positive".into()));
    }
    let nf = opts.n_obs.unwrap_or(n) as f64;
    let scale = if opts.scaled { nf.sqrt() } else { 1.0 };

    let mut l = match &opts.init {
        Some(init) => {
            if init.shape() != (p, k) {
                return Err(LinalgError::ShapeMismatch {
                    expected: (p, k),
                    found: init.shape(),
                }
                .into());
            }
            init.clone()
        }
        None => svd_loadings(x, k)? / scale,
    };
    let mut z = rotation_step(x, &l)? * scale;
    let mut trace = vec![objective(x, &z, &l, penalty)];
    let mut converged = false;
    let mut all_zero = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        l = if opts.scaled {
            shrinkage_step_scaled(x, &z, penalty, nf)
        } else {
            shrinkage_step(x, &z, penalty)?
        };
        if l.iter().all(|&v| v == 0.0) {
            all_zero = true;
            trace.push(objective(x, &z, &l, penalty));
            break;
        }
        z = rotation_with_zero_columns(x, &l, &(&z / scale))? * scale;
        let obj = objective(x, &z, &l, penalty);
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if (prev - obj).abs() <= opts.tol * prev.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(BispcaFit {
        z,
        l,
        objective_trace: trace,
        converged,
        iterations,
        all_zero,
    })
}
