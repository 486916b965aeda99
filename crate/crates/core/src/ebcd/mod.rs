//! Empirical Bayes covariance decomposition.
//!
//! Model: `X = Z Lᵀ + E` with `ZᵀZ = N·I_K` (or `I_K` unscaled), entries
//! of column `l_k` iid from a point-Laplace prior `g_k`, and Gaussian noise
//! of precision `τ` (one per column of `X` in the heteroskedastic variant).
//! Fitting is coordinate ascent on the ELBO: refit `(g_k, q_k)` per column
//! by EBNM, rotate `Z`, update `τ`. Components are first added greedily and
//! then refined jointly.

mod steps;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use steps::{elbo, ebnm_step, precision_step, precision_value, rotation_step_ebcd, TAU_CAP};

use crate::ebnm::{solve_with, NoiseVariance, PointLaplacePrior};
use crate::error::{FitError, LinalgError};
use crate::linalg::{ensure_finite, frobenius_sq, leading_triplet, psd_sqrt, thin_svd, DenseMatrix};
use steps::precision_step_capped;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompactMode {
    /// Compact when `N > 2P`.
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbcdOptions {
    pub kmax: usize,
    /// Relative ELBO change that counts as converged.
    pub tol: f64,
    pub max_iter_greedy: usize,
    pub max_iter_backfit: usize,
    pub heteroskedastic: bool,
    pub compact: CompactMode,
    /// Recorded for provenance; fitting itself is deterministic.
    pub seed: u64,
    /// `ZᵀZ = N·I` when set, `ZᵀZ = I` otherwise.
    pub scaled: bool,
}

impl Default for EbcdOptions {
    fn default() -> Self {
        Self {
            kmax: 1,
            tol: 1e-8,
            max_iter_greedy: 500,
            max_iter_backfit: 2000,
            heteroskedastic: false,
            compact: CompactMode::Auto,
            seed: 0,
            scaled: true,
        }
    }
}

impl EbcdOptions {
    pub fn with_kmax(kmax: usize) -> Self {
        Self {
            kmax,
            ..Self::default()
        }
    }

    fn validate(&self, n: usize, p: usize) -> Result<(), FitError> {
        if self.kmax == 0 {
            return Err(FitError::InvalidOption("kmax must be at least 1".into()));
        }
        if self.kmax > n.min(p) {
            return Err(FitError::RankTooLarge {
                k: self.kmax,
                max: n.min(p),
            });
        }
        if !(self.tol > 0.0) {
            return Err(FitError::InvalidOption("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Variational state. `z` has as many rows as the working matrix, which is
/// `X` or, in compact mode, `C`.
#[derive(Debug, Clone)]
pub struct EbcdState {
    pub z: DenseMatrix,
    pub lbar: DenseMatrix,
    pub v: DenseMatrix,
    /// Shared precision; the median of `tau_cols` when those are present.
    pub tau: f64,
    pub tau_cols: Option<Vec<f64>>,
    pub priors: Vec<PointLaplacePrior>,
    /// `KL(q_k ‖ g_k)` from the last EBNM update of each column.
    pub kl: Vec<f64>,
    pub elbo_trace: Vec<f64>,
    /// ELBO of the rank-one subproblem, per greedy component.
    pub greedy_traces: Vec<Vec<f64>>,
    pub n: usize,
    pub p: usize,
    pub scaled: bool,
    pub converged: bool,
    pub iterations: usize,
    pub log: Vec<String>,
}

impl EbcdState {
    /// Empty state with no components.
    pub fn empty(rows: usize, n: usize, p: usize, tau: f64, scaled: bool) -> Self {
        Self {
            z: DMatrix::zeros(rows, 0),
            lbar: DMatrix::zeros(p, 0),
            v: DMatrix::zeros(p, 0),
            tau,
            tau_cols: None,
            priors: Vec::new(),
            kl: Vec::new(),
            elbo_trace: Vec::new(),
            greedy_traces: Vec::new(),
            n,
            p,
            scaled,
            converged: false,
            iterations: 0,
            log: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.lbar.ncols()
    }

    /// `ZᵀZ = c·I`.
    pub fn c(&self) -> f64 {
        if self.scaled {
            self.n as f64
        } else {
            1.0
        }
    }
}

/// Rank-one subproblem on the residual `r`, started from its leading
/// singular pair. Returns `None` when the prior collapses to the spike.
struct RankOne {
    z: DVector<f64>,
    l: DVector<f64>,
    v: DVector<f64>,
    prior: PointLaplacePrior,
    kl: f64,
}

fn rank_one_elbo(r: &DenseMatrix, fit: &RankOne, n: usize, p: usize, c: f64, tau: f64) -> f64 {
    let fid = frobenius_sq(&(r - &fit.z * fit.l.transpose()));
    let nf = n as f64;
    let pf = p as f64;
    -0.5 * nf * pf * (2.0 * std::f64::consts::PI).ln() + 0.5 * nf * pf * tau.ln()
        - 0.5 * tau * (fid + c * fit.v.sum())
        - fit.kl
}

/// `√c Polar.U(a)` for a single column.
fn unit_scores(a: &DVector<f64>, c: f64) -> Result<DVector<f64>, FitError> {
    let norm = a.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(LinalgError::PolarNotUnique.into());
    }
    Ok(a * (c.sqrt() / norm))
}

fn fit_rank_one(
    r: &DenseMatrix,
    state: &mut EbcdState,
    opts: &EbcdOptions,
) -> Result<Option<RankOne>, FitError> {
    let c = state.c();
    let (_, d, v) = leading_triplet(r)?;
    if d == 0.0 {
        return Ok(None);
    }
    let l0 = v * (d / c.sqrt());
    let mut fit = RankOne {
        z: DVector::zeros(r.nrows()),
        l: l0.clone(),
        v: DVector::zeros(r.ncols()),
        prior: PointLaplacePrior::spike(),
        kl: 0.0,
    };
    fit.z = unit_scores(&(r * &l0), c)?;

    let mut trace = Vec::new();
    let mut warm = None;
    for _ in 0..opts.max_iter_greedy {
        let x: Vec<f64> = (r.tr_mul(&fit.z) / c).iter().copied().collect();
        let noise = NoiseVariance::Shared(1.0 / (c * state.tau));
        let eb = solve_with(&x, &noise, warm)?;
        fit.kl = eb.kl_divergence(&x, &noise);
        fit.prior = eb.prior;
        fit.l = DVector::from_vec(eb.post_mean);
        fit.v = DVector::from_vec(eb.post_var);
        warm = Some(fit.prior);
        if fit.l.iter().all(|&x| x == 0.0) {
            state.greedy_traces.push(trace);
            return Ok(None);
        }

        fit.z = unit_scores(&(r * &fit.l), c)?;

        let fid = frobenius_sq(&(r - &fit.z * fit.l.transpose()));
        match precision_value(state.n, state.p, fid + c * fit.v.sum()) {
            Ok(t) => state.tau = t,
            Err(_) => {
                state.tau = TAU_CAP;
                state.log.push("greedy residual vanished; precision capped".into());
            }
        }

        let e = rank_one_elbo(r, &fit, state.n, state.p, c, state.tau);
        let done = trace
            .last()
            .is_some_and(|&prev: &f64| (e - prev).abs() <= opts.tol * prev.abs());
        trace.push(e);
        if done {
            break;
        }
    }
    state.greedy_traces.push(trace);
    Ok(Some(fit))
}

/// Add components one at a time, each from the leading singular pair of the
/// current residual, stopping at `kmax` or at the first component whose
/// fitted prior is the point mass at zero.
pub fn greedy_init(m: &DenseMatrix, n: usize, opts: &EbcdOptions) -> Result<EbcdState, FitError> {
    ensure_finite(m)?;
    let p = m.ncols();
    opts.validate(n, p)?;
    let total = frobenius_sq(m);
    let tau = precision_value(n, p, total)?;
    let mut state = EbcdState::empty(m.nrows(), n, p, tau, opts.scaled);

    for r in 0..opts.kmax {
        let resid = m - &state.z * state.lbar.transpose();
        let Some(fit) = fit_rank_one(&resid, &mut state, opts)? else {
            state.log.push(format!("greedy stopped at component {r}: prior collapsed to zero"));
            break;
        };
        let k = state.k();
        state.lbar = state.lbar.clone().insert_column(k, 0.0);
        state.lbar.set_column(k, &fit.l);
        state.v = state.v.clone().insert_column(k, 0.0);
        state.v.set_column(k, &fit.v);
        state.z = state.z.clone().insert_column(k, 0.0);
        state.priors.push(fit.prior);
        state.kl.push(fit.kl);
        rotation_step_ebcd(m, &mut state)?;
    }
    state.elbo_trace.push(elbo(m, &state));
    Ok(state)
}

/// Joint refinement of all components until the relative ELBO change drops
/// below `tol` or `max_iter_backfit` sweeps have run.
pub fn backfit(m: &DenseMatrix, state: &mut EbcdState, opts: &EbcdOptions) -> Result<(), FitError> {
    if state.elbo_trace.is_empty() {
        state.elbo_trace.push(elbo(m, state));
    }
    state.converged = false;
    if state.k() == 0 {
        state.converged = true;
        return Ok(());
    }
    for _ in 0..opts.max_iter_backfit {
        state.iterations += 1;
        ebnm_step(m, state)?;
        rotation_step_ebcd(m, state)?;
        precision_step_capped(m, state);
        let e = elbo(m, state);
        let prev = *state.elbo_trace.last().unwrap();
        state.elbo_trace.push(e);
        if state.k() == 0 || (e - prev).abs() <= opts.tol * prev.abs() {
            state.converged = true;
            break;
        }
    }
    Ok(())
}

/// `C = V diag(√λ) Vᵀ` from the eigendecomposition of a PSD Gram matrix,
/// so that `CᵀC = XᵀX`.
pub fn compact_matrix(gram: &DenseMatrix) -> Result<DenseMatrix, FitError> {
    Ok(psd_sqrt(gram)?)
}

/// What to fit: the data matrix, or only its Gram matrix plus `N`.
#[derive(Debug, Clone, Copy)]
pub enum EbcdInput<'a> {
    Data(&'a DenseMatrix),
    Gram { gram: &'a DenseMatrix, n: Option<usize> },
}

#[derive(Debug, Clone)]
pub struct EbcdFit {
    /// Final state; its `z` lives in compact coordinates if `compact` is set.
    pub state: EbcdState,
    /// Scores for the rows of `X` (`ZᵀZ = N·I`); absent for Gram input.
    pub z: Option<DenseMatrix>,
    pub compact: bool,
}

/// Greedy initialization followed by backfitting, on `X` or on a compact
/// `C`. With `X` available the compact scores are mapped back as
/// `Z = U_X V_Xᵀ Z̃`.
pub fn fit_ebcd(input: EbcdInput<'_>, opts: &EbcdOptions) -> Result<EbcdFit, FitError> {
    match input {
        EbcdInput::Data(x) => {
            ensure_finite(x)?;
            let (n, p) = x.shape();
            let compact = match opts.compact {
                CompactMode::On => true,
                CompactMode::Off => false,
                CompactMode::Auto => n > 2 * p,
            };
            if !compact {
                let state = run(x, n, opts)?;
                let z = Some(state.z.clone());
                return Ok(EbcdFit {
                    state,
                    z,
                    compact: false,
                });
            }
            opts.validate(n, p)?;
            let c = compact_matrix(&x.tr_mul(x))?;
            let state = run(&c, n, opts)?;
            let svd = thin_svd(x)?;
            let r = svd.rank();
            let u = svd.u.columns(0, r);
            let v = svd.v.columns(0, r);
            let z = u * (v.transpose() * &state.z);
            Ok(EbcdFit {
                state,
                z: Some(z),
                compact: true,
            })
        }
        EbcdInput::Gram { gram, n } => {
            let n = n.ok_or(FitError::MissingN)?;
            if !gram.is_square() {
                return Err(LinalgError::ShapeMismatch {
                    expected: (gram.nrows(), gram.nrows()),
                    found: gram.shape(),
                }
                .into());
            }
            let c = compact_matrix(gram)?;
            let state = run(&c, n, opts)?;
            Ok(EbcdFit {
                state,
                z: None,
                compact: true,
            })
        }
    }
}

/// Heteroskedastic fit: per-column precisions, started from the
/// homoskedastic greedy initialization with every `τ_p` equal to `τ`.
pub fn fit_ebcd_hetero(x: &DenseMatrix, opts: &EbcdOptions) -> Result<EbcdFit, FitError> {
    let opts = EbcdOptions {
        heteroskedastic: true,
        ..opts.clone()
    };
    fit_ebcd(EbcdInput::Data(x), &opts)
}

fn run(m: &DenseMatrix, n: usize, opts: &EbcdOptions) -> Result<EbcdState, FitError> {
    let mut state = greedy_init(m, n, opts)?;
    if opts.heteroskedastic {
        state.tau_cols = Some(vec![state.tau; state.p]);
    }
    backfit(m, &mut state, opts)?;
    Ok(state)
}
