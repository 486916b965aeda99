//! Closed forms for the normal likelihood under a point-Laplace prior.
//!
//! Conditional on the slab, the posterior of η splits at zero into two
//! exponentially tilted normals: on η > 0 it is `N(x − s²/b, s²)` truncated
//! to (0, ∞), on η < 0 it is `N(x + s²/b, s²)` truncated to (−∞, 0).

use super::normal::{inv_mills, ln_norm_cdf, log_add_exp, normal_logpdf};
use super::PointLaplacePrior;

/// Log weights (before the common `−ln 2b`) of the two slab branches.
#[inline]
fn branch_log_weights(x: f64, s: f64, b: f64) -> (f64, f64) {
    let shift = s * s / (2.0 * b * b);
    let pos = shift - x / b + ln_norm_cdf(x / s - s / b);
    let neg = shift + x / b + ln_norm_cdf(-x / s - s / b);
    (pos, neg)
}

/// `ln ∫ N(x; η, s²) Laplace(η; 0, b) dη`.
pub fn slab_logpdf(x: f64, s: f64, b: f64) -> f64 {
    let (pos, neg) = branch_log_weights(x, s, b);
    -(2.0 * b).ln() + log_add_exp(pos, neg)
}

/// `ln p(x)` under `(1 − π) N(0, s²) + π (Laplace ∗ N)`.
#[inline]
pub fn point_laplace_logpdf(x: f64, s2: f64, prior: &PointLaplacePrior) -> f64 {
    let spike = normal_logpdf(x, 0.0, s2);
    if prior.pi <= 0.0 {
        return spike;
    }
    let slab = prior.pi.ln() + slab_logpdf(x, s2.sqrt(), prior.b);
    if prior.pi >= 1.0 {
        return slab;
    }
    log_add_exp((1.0 - prior.pi).ln() + spike, slab)
}

/// Mean and variance of N(m, s²) truncated to (0, ∞); `u = m/s`.
#[inline]
fn truncated_moments(m: f64, s: f64, u: f64) -> (f64, f64) {
    if u < -4.0 {
        let (shift, scaled_var) = lower_tail_moments(-u);
        return (s * shift, s * s * scaled_var);
    }
    let lam = inv_mills(u);
    let mean = (m + s * lam).max(0.0);
    let var = (s * s * (1.0 - lam * (lam + u))).clamp(0.0, s * s);
    (mean, var)
}

/// Standardized mean and variance of N(−t, 1) truncated to (0, ∞) for
/// large `t`, from the continued fraction of the Mills ratio
/// `Φ(−t)/φ(t) = 1/(t + 1/(t + 2/(t + 3/(t + …))))`. Evaluated without the
/// cancellation in `1 − λ(λ − t)`.
fn lower_tail_moments(t: f64) -> (f64, f64) {
    const TERMS: u32 = 80;
    let mut tail = t;
    for k in (3..=TERMS).rev() {
        tail = t + k as f64 / tail;
    }
    let c = 2.0 / tail;
    let d = t + c;
    (1.0 / d, ((t * c + c * c - 1.0) / (d * d)).clamp(0.0, 1.0))
}

/// Exact posterior mean and variance of η.
pub fn posterior_moments(x: f64, s2: f64, prior: &PointLaplacePrior) -> (f64, f64) {
    if prior.pi <= 0.0 {
        return (0.0, 0.0);
    }
    let s = s2.sqrt();
    let b = prior.b;

    let (lp, ln) = branch_log_weights(x, s, b);
    let lse = log_add_exp(lp, ln);
    let p_pos = (lp - lse).exp();
    let p_neg = (ln - lse).exp();

    let m_pos = x - s2 / b;
    let (e_pos, v_pos) = truncated_moments(m_pos, s, m_pos / s);
    let m_neg = x + s2 / b;
    let (e_neg_abs, v_neg) = truncated_moments(-m_neg, s, -m_neg / s);
    let e_neg = -e_neg_abs;

    let slab_mean = p_pos * e_pos + p_neg * e_neg;
    let slab_var = p_pos * v_pos + p_neg * v_neg + p_pos * p_neg * (e_pos - e_neg).powi(2);

    // posterior probability of the slab
    let w = if prior.pi >= 1.0 {
        1.0
    } else {
        let l_slab = prior.pi.ln() - (2.0 * b).ln() + lse;
        let l_spike = (1.0 - prior.pi).ln() + normal_logpdf(x, 0.0, s2);
        (l_slab - log_add_exp(l_slab, l_spike)).exp()
    };

    let mean = (w * slab_mean).clamp(-x.abs(), x.abs());
    let var = w * slab_var + w * (1.0 - w) * slab_mean * slab_mean;
    (mean, var.max(0.0))
}
