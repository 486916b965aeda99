//! The three coordinate updates and the ELBO they ascend.
//!
//! Everything works on a "working" matrix that is either `X` itself or a
//! compact `C` with `CᵀC = XᵀX`; the true `N` and `P` live in the state.
//! With `c = N` (scaled) or `c = 1`, scores satisfy `ZᵀZ = c·I` and column
//! `k` sees the normal-means problem `x = Xᵀz_k / c`, `s² = 1/(cτ)`.

use nalgebra::{DMatrix, DVector};

use super::EbcdState;
use crate::ebnm::{solve_with, NoiseVariance};
use crate::error::FitError;
use crate::linalg::{frobenius_sq, polar_u, DenseMatrix};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Precision used when the residual vanishes entirely.
pub const TAU_CAP: f64 = 1e12;
const HETERO_SPREAD: f64 = 1e8;
const COLLINEAR_TOL: f64 = 1e-10;

/// `Σ_n r²_{n,p}` for every column of `m − Z L̄ᵀ`.
fn residual_column_sq(m: &DenseMatrix, z: &DenseMatrix, lbar: &DenseMatrix) -> DVector<f64> {
    let r = m - z * lbar.transpose();
    DVector::from_iterator(r.ncols(), r.column_iter().map(|c| c.norm_squared()))
}

/// Evidence lower bound of the current state.
///
/// The `E_q[log g/q]` part is `−Σ_k KL(q_k ‖ g_k)`, stored when each column
/// was last updated; the remaining terms are the expected Gaussian
/// log-likelihood of the working matrix.
pub fn elbo(m: &DenseMatrix, state: &EbcdState) -> f64 {
    let n = state.n as f64;
    let p = state.p as f64;
    let c = state.c();
    let kl: f64 = state.kl.iter().sum();
    let base = -0.5 * n * p * LN_2PI;
    match &state.tau_cols {
        None => {
            let fid = frobenius_sq(&(m - &state.z * state.lbar.transpose()));
            let vsum: f64 = state.v.sum();
            base + 0.5 * n * p * state.tau.ln() - 0.5 * state.tau * (fid + c * vsum) - kl
        }
        Some(tau) => {
            let res = residual_column_sq(m, &state.z, &state.lbar);
            let mut total = base;
            for (j, &t) in tau.iter().enumerate() {
                let vrow: f64 = state.v.row(j).sum();
                total += 0.5 * n * t.ln() - 0.5 * t * (res[j] + c * vrow);
            }
            total - kl
        }
    }
}

/// Per-coordinate noise variances `1/(c τ_p)` or the shared `1/(c τ)`.
fn noise_variances(state: &EbcdState) -> Option<Vec<f64>> {
    let c = state.c();
    state
        .tau_cols
        .as_ref()
        .map(|t| t.iter().map(|&tp| 1.0 / (c * tp)).collect())
}

/// Refit every `(g_k, q_k)` against the current scores.
pub fn ebnm_step(m: &DenseMatrix, state: &mut EbcdState) -> Result<(), FitError> {
    let c = state.c();
    let proj = m.tr_mul(&state.z) / c;
    let per = noise_variances(state);
    let shared = 1.0 / (c * state.tau);
    for k in 0..state.k() {
        let x: Vec<f64> = proj.column(k).iter().copied().collect();
        let noise = match &per {
            Some(v) => NoiseVariance::PerCoord(v),
            None => NoiseVariance::Shared(shared),
        };
        let fit = solve_with(&x, &noise, Some(state.priors[k]))?;
        state.kl[k] = fit.kl_divergence(&x, &noise);
        state.priors[k] = fit.prior;
        state.lbar.set_column(k, &DVector::from_vec(fit.post_mean));
        state.v.set_column(k, &DVector::from_vec(fit.post_var));
    }
    Ok(())
}

/// Remove column `k` from every per-column field.
pub(crate) fn drop_column(state: &mut EbcdState, k: usize) {
    state.z = state.z.clone().remove_column(k);
    state.lbar = state.lbar.clone().remove_column(k);
    state.v = state.v.clone().remove_column(k);
    state.priors.remove(k);
    state.kl.remove(k);
}

/// Columns of `a` kept by Gram-Schmidt in order: a column is dropped when
/// its component orthogonal to the earlier kept ones is negligible.
fn independent_columns(a: &DenseMatrix) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for k in 0..a.ncols() {
        let col = a.column(k).into_owned();
        let norm = col.norm();
        let mut r = col;
        for b in &basis {
            let proj = b.dot(&r);
            r -= b * proj;
        }
        let rn = r.norm();
        if norm > 0.0 && rn > COLLINEAR_TOL * norm {
            basis.push(r / rn);
            keep.push(k);
        }
    }
    keep
}

/// `Z ← √c Polar.U(M L̄)` (or `M T L̄` with per-column precisions).
///
/// Columns of `L̄` that are identically zero are dropped first; if the
/// product is still rank deficient, later collinear columns are dropped too.
pub fn rotation_step_ebcd(m: &DenseMatrix, state: &mut EbcdState) -> Result<(), FitError> {
    for k in (0..state.k()).rev() {
        if state.lbar.column(k).iter().all(|&v| v == 0.0) {
            drop_column(state, k);
            state.log.push(format!("dropped zero loading column {k}"));
        }
    }
    if state.k() == 0 {
        state.z = DMatrix::zeros(m.nrows(), 0);
        return Ok(());
    }
    let weighted = match &state.tau_cols {
        Some(t) => {
            let mut tl = state.lbar.clone();
            for (j, mut row) in tl.row_iter_mut().enumerate() {
                row *= t[j];
            }
            m * tl
        }
        None => m * &state.lbar,
    };
    let keep = independent_columns(&weighted);
    let weighted = if keep.len() < state.k() {
        for k in (0..state.k()).rev() {
            if !keep.contains(&k) {
                drop_column(state, k);
                state.log.push(format!("dropped collinear loading column {k}"));
            }
        }
        weighted.select_columns(&keep)
    } else {
        weighted
    };
    state.z = polar_u(&weighted)? * state.c().sqrt();
    Ok(())
}

/// `NP / denominator`, refusing a vanishing denominator.
pub fn precision_value(n: usize, p: usize, denominator: f64) -> Result<f64, FitError> {
    if !(denominator > 1e-300) {
        return Err(FitError::DegenerateExactFit);
    }
    Ok((n * p) as f64 / denominator)
}

/// Closed-form precision update. A vanishing residual caps `τ` and is
/// reported as [`FitError::DegenerateExactFit`] after the state is updated.
pub fn precision_step(m: &DenseMatrix, state: &mut EbcdState) -> Result<(), FitError> {
    let c = state.c();
    match state.tau_cols.take() {
        None => {
            let fid = frobenius_sq(&(m - &state.z * state.lbar.transpose()));
            match precision_value(state.n, state.p, fid + c * state.v.sum()) {
                Ok(t) => state.tau = t,
                Err(e) => {
                    state.tau = TAU_CAP;
                    return Err(e);
                }
            }
        }
        Some(mut tau) => {
            let res = residual_column_sq(m, &state.z, &state.lbar);
            for (j, t) in tau.iter_mut().enumerate() {
                let denom = res[j] + c * state.v.row(j).sum();
                *t = precision_value(state.n, 1, denom).unwrap_or(TAU_CAP);
            }
            let mut sorted = tau.clone();
            sorted.sort_by(f64::total_cmp);
            let med = sorted[sorted.len() / 2];
            for t in tau.iter_mut() {
                *t = t.clamp(med / HETERO_SPREAD, med * HETERO_SPREAD);
            }
            state.tau = med;
            state.tau_cols = Some(tau);
        }
    }
    Ok(())
}

/// Precision update that falls back to the cap on an exact fit, logging it.
pub(crate) fn precision_step_capped(m: &DenseMatrix, state: &mut EbcdState) {
    if precision_step(m, state).is_err() {
        state.log.push(format!("residual vanished; precision capped at {TAU_CAP:e}"));
    }
}
