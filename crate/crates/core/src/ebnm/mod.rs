//! Empirical Bayes normal means with the point-Laplace prior family.
//!
//! Given observations `x_p ~ N(η_p, s_p²)` with `η_p ~ g` iid, estimate
//! `g = (1 − π) δ₀ + π Laplace(0, b)` by maximizing the marginal likelihood
//! and return the exact posterior moments of each `η_p` under the fitted
//! prior.

mod nelder_mead;
pub mod normal;
mod point_laplace;
pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::EbnmError;

pub use nelder_mead::{minimize, Minimum, NelderMeadOptions};
pub use point_laplace::{point_laplace_logpdf, posterior_moments, slab_logpdf};
pub use quadrature::quadrature_oracle;

/// `(1 − π) δ₀ + π Laplace(0, b)`. `π = 0` is the point mass at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLaplacePrior {
    pub pi: f64,
    pub b: f64,
}

impl PointLaplacePrior {
    pub fn new(pi: f64, b: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&pi) && b > 0.0 && b.is_finite());
        Self { pi, b }
    }

    pub fn spike() -> Self {
        Self { pi: 0.0, b: 1.0 }
    }

    pub fn is_spike(&self) -> bool {
        self.pi == 0.0
    }
}

/// Fitted prior plus per-coordinate posterior summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct EbnmResult {
    pub prior: PointLaplacePrior,
    pub post_mean: Vec<f64>,
    pub post_var: Vec<f64>,
    pub log_marginal: f64,
}

impl EbnmResult {
    /// `KL(q ‖ g)` for the exact posterior `q`, recovered from the evidence
    /// identity `E_q log p(x | η) − KL(q ‖ g) = log p(x)`.
    pub fn kl_divergence(&self, x: &[f64], s2: &NoiseVariance<'_>) -> f64 {
        let expected: f64 = x
            .iter()
            .enumerate()
            .map(|(p, &xp)| {
                let v = s2.at(p);
                let m = self.post_mean[p];
                -0.5 * (2.0 * std::f64::consts::PI * v).ln()
                    - ((xp - m).powi(2) + self.post_var[p]) / (2.0 * v)
            })
            .sum();
        expected - self.log_marginal
    }
}

/// Observation noise: one shared variance or one per coordinate.
#[derive(Debug, Clone, Copy)]
pub enum NoiseVariance<'a> {
    Shared(f64),
    PerCoord(&'a [f64]),
}

impl NoiseVariance<'_> {
    #[inline]
    pub fn at(&self, p: usize) -> f64 {
        match self {
            NoiseVariance::Shared(v) => *v,
            NoiseVariance::PerCoord(v) => v[p],
        }
    }

    /// Scale used to place the grid over `b`: the shared sd, or the sd at the
    /// median variance.
    fn reference_sd(&self) -> f64 {
        match self {
            NoiseVariance::Shared(v) => v.sqrt(),
            NoiseVariance::PerCoord(v) => {
                let mut sorted = v.to_vec();
                sorted.sort_by(f64::total_cmp);
                sorted[sorted.len() / 2].sqrt()
            }
        }
    }

    fn validate(&self, n: usize) -> Result<(), EbnmError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match self {
            NoiseVariance::Shared(v) if !ok(*v) => Err(EbnmError::BadVariance(*v)),
            NoiseVariance::PerCoord(v) if v.len() != n => Err(EbnmError::LengthMismatch { x: n, s2: v.len() }),
            NoiseVariance::PerCoord(v) => match v.iter().find(|&&s| !ok(s)) {
                Some(&bad) => Err(EbnmError::BadVariance(bad)),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

const PI_MIN: f64 = 1e-10;
const LOGIT_RANGE: f64 = 10.0;
const GRID_POINTS: usize = 9;
const B_MIN_FACTOR: f64 = 1e-8;
const B_MAX_FACTOR: f64 = 1e8;

/// `Σ_p ln[(1 − π) N(x_p; 0, s²) + π (Laplace ∗ N)(x_p)]`.
pub fn marginal_loglik(x: &[f64], s2: f64, prior: &PointLaplacePrior) -> f64 {
    marginal_loglik_with(x, &NoiseVariance::Shared(s2), prior)
}

pub fn marginal_loglik_with(x: &[f64], s2: &NoiseVariance<'_>, prior: &PointLaplacePrior) -> f64 {
    x.iter()
        .enumerate()
        .map(|(p, &xp)| point_laplace_logpdf(xp, s2.at(p), prior))
        .sum()
}

/// Marginal maximum-likelihood prior for homoskedastic observations.
pub fn fit_prior(x: &[f64], s2: f64) -> Result<PointLaplacePrior, EbnmError> {
    fit_prior_with(x, &NoiseVariance::Shared(s2), None)
}

fn to_prior(theta: [f64; 2], s: f64) -> PointLaplacePrior {
    let pi = (1.0 / (1.0 + (-theta[0]).exp())).clamp(PI_MIN, 1.0 - PI_MIN);
    let b = theta[1].exp().clamp(B_MIN_FACTOR * s, B_MAX_FACTOR * s);
    PointLaplacePrior { pi, b }
}

fn to_theta(prior: &PointLaplacePrior) -> [f64; 2] {
    let pi = prior.pi.clamp(PI_MIN, 1.0 - PI_MIN);
    [(pi / (1.0 - pi)).ln(), prior.b.ln()]
}

/// Grid search over `(logit π, ln b)` followed by simplex refinement and an
/// exact comparison against the spike-only prior.
///
/// `warm` adds one extra candidate start point (typically the prior from the
/// previous outer iteration), so the returned prior is never worse than it.
pub fn fit_prior_with(
    x: &[f64],
    s2: &NoiseVariance<'_>,
    warm: Option<PointLaplacePrior>,
) -> Result<PointLaplacePrior, EbnmError> {
    if x.is_empty() {
        return Err(EbnmError::Empty);
    }
    s2.validate(x.len())?;

    let spike = PointLaplacePrior::spike();
    let spike_ll = marginal_loglik_with(x, s2, &spike);
    if x.iter().all(|&v| v == 0.0) {
        return Ok(spike);
    }

    let s = s2.reference_sd();
    let objective = |theta: [f64; 2]| -marginal_loglik_with(x, s2, &to_prior(theta, s));

    let lb_lo = (0.1 * s).ln();
    let lb_hi = (100.0 * s).ln();
    let step = [
        2.0 * LOGIT_RANGE / (GRID_POINTS - 1) as f64,
        (lb_hi - lb_lo) / (GRID_POINTS - 1) as f64,
    ];
    let mut best_theta = [0.0, 0.0];
    let mut best_val = f64::INFINITY;
    for i in 0..GRID_POINTS {
        for j in 0..GRID_POINTS {
            let theta = [-LOGIT_RANGE + i as f64 * step[0], lb_lo + j as f64 * step[1]];
            let v = objective(theta);
            if v < best_val {
                best_val = v;
                best_theta = theta;
            }
        }
    }
    if let Some(w) = warm.filter(|w| !w.is_spike()) {
        let theta = to_theta(&w);
        let v = objective(theta);
        if v < best_val {
            best_val = v;
            best_theta = theta;
        }
    }

    let refined = minimize(
        objective,
        best_theta,
        [0.5 * step[0], 0.5 * step[1]],
        NelderMeadOptions::default(),
    );
    let (theta, value) = if refined.value <= best_val {
        (refined.x, refined.value)
    } else {
        (best_theta, best_val)
    };
    let fitted = to_prior(theta, s);
    if spike_ll >= -value {
        return Ok(PointLaplacePrior { pi: 0.0, b: fitted.b });
    }
    Ok(fitted)
}

/// Posterior moments and evidence for a fixed prior.
pub fn posterior_summary(x: &[f64], s2: &NoiseVariance<'_>, prior: PointLaplacePrior) -> EbnmResult {
    let (post_mean, post_var): (Vec<f64>, Vec<f64>) = x
        .iter()
        .enumerate()
        .map(|(p, &xp)| posterior_moments(xp, s2.at(p), &prior))
        .unzip();
    EbnmResult {
        prior,
        post_mean,
        post_var,
        log_marginal: marginal_loglik_with(x, s2, &prior),
    }
}

/// Fit the prior, then summarize the posterior under it.
pub fn ebnm_solve(x: &[f64], s2: f64) -> Result<EbnmResult, EbnmError> {
    let noise = NoiseVariance::Shared(s2);
    let prior = fit_prior_with(x, &noise, None)?;
    Ok(posterior_summary(x, &noise, prior))
}

/// Heteroskedastic variant with per-coordinate noise variances.
pub fn ebnm_solve_hetero(x: &[f64], s2: &[f64]) -> Result<EbnmResult, EbnmError> {
    let noise = NoiseVariance::PerCoord(s2);
    let prior = fit_prior_with(x, &noise, None)?;
    Ok(posterior_summary(x, &noise, prior))
}

/// Shared entry point for the model fits: optional warm start, either noise form.
pub(crate) fn solve_with(
    x: &[f64],
    s2: &NoiseVariance<'_>,
    warm: Option<PointLaplacePrior>,
) -> Result<EbnmResult, EbnmError> {
    let prior = fit_prior_with(x, s2, warm)?;
    Ok(posterior_summary(x, s2, prior))
}
