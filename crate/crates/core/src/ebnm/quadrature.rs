//! Numerical-integration reference for the point-Laplace posterior.
//!
//! Everything here is evaluated by adaptive Gauss-Kronrod quadrature of
//! plain densities; none of the closed forms in `point_laplace` are reused.
//! Test suites compare the closed forms against these values.

use super::PointLaplacePrior;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod estimate and the embedded 7-point Gauss error estimate
/// for several integrands sharing the same nodes.
fn gk15<const M: usize>(f: &impl Fn(f64) -> [f64; M], a: f64, b: f64) -> ([f64; M], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = [0.0; M];
    let mut gauss = [0.0; M];
    let center = f(c);
    for m in 0..M {
        kronrod[m] = WGK[7] * center[m];
        gauss[m] = WG[3] * center[m];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let lo = f(c - dx);
        let hi = f(c + dx);
        for m in 0..M {
            let pair = lo[m] + hi[m];
            kronrod[m] += WGK[j] * pair;
            if j % 2 == 1 {
                gauss[m] += WG[j / 2] * pair;
            }
        }
    }
    let mut err = 0.0_f64;
    for m in 0..M {
        kronrod[m] *= h;
        err = err.max((kronrod[m] - gauss[m] * h).abs());
    }
    (kronrod, err)
}

fn adapt<const M: usize>(
    f: &impl Fn(f64) -> [f64; M],
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> [f64; M] {
    let (est, err) = gk15(f, a, b);
    let scale = est.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if err <= tol || err <= 1e-15 * scale || depth == 0 {
        return est;
    }
    let mid = 0.5 * (a + b);
    let left = adapt(f, a, mid, 0.5 * tol, depth - 1);
    let right = adapt(f, mid, b, 0.5 * tol, depth - 1);
    let mut out = [0.0; M];
    for m in 0..M {
        out[m] = left[m] + right[m];
    }
    out
}

/// Integrate a vector-valued function over `[a, b]` to absolute tolerance
/// `tol`, bisecting adaptively. `breaks` are interior points (kinks, modes)
/// at which the range is split up front.
pub fn integrate<const M: usize>(f: impl Fn(f64) -> [f64; M], a: f64, b: f64, breaks: &[f64], tol: f64) -> [f64; M] {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&t| t > a && t < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let share = tol / (pts.len() - 1) as f64;
    let mut total = [0.0; M];
    for w in pts.windows(2) {
        let part = adapt(&f, w[0], w[1], share, 40);
        for m in 0..M {
            total[m] += part[m];
        }
    }
    total
}

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

/// Slab part of the joint density, `N(x; η, s²) Laplace(η; 0, b)`, on the log scale.
pub fn ln_slab_joint(eta: f64, x: f64, s2: f64, b: f64) -> f64 {
    ln_normal(x, eta, s2) - eta.abs() / b - (2.0 * b).ln()
}

/// Integration window and break points for the slab part.
pub fn slab_window(x: f64, s2: f64, b: f64) -> (f64, f64, Vec<f64>, f64) {
    let s = s2.sqrt();
    let m_pos = x - s2 / b;
    let m_neg = x + s2 / b;
    let lo = m_neg.min(0.0) - 40.0 * s;
    let hi = m_pos.max(0.0) + 40.0 * s;
    let peak = [0.0, m_pos.max(0.0), m_neg.min(0.0)]
        .iter()
        .map(|&e| ln_slab_joint(e, x, s2, b))
        .fold(f64::NEG_INFINITY, f64::max);
    let breaks = vec![m_neg.min(0.0), 0.0, m_pos.max(0.0), x];
    (lo, hi, breaks, peak)
}

/// Posterior mean, posterior variance and log marginal likelihood of one
/// observation by quadrature over the slab plus the analytic spike atom.
pub fn quadrature_oracle(x: f64, s2: f64, prior: &PointLaplacePrior) -> (f64, f64, f64) {
    let ln_spike = ln_normal(x, 0.0, s2);
    if prior.pi <= 0.0 {
        return (0.0, 0.0, ln_spike);
    }
    let b = prior.b;
    let (lo, hi, breaks, peak) = slab_window(x, s2, b);
    let [i0, i1, i2] = integrate(
        |eta| {
            let w = (ln_slab_joint(eta, x, s2, b) - peak).exp();
            [w, eta * w, eta * eta * w]
        },
        lo,
        hi,
        &breaks,
        1e-15 * s2.sqrt().max(1.0) * (1.0 + x.abs()).powi(2),
    );
    let ln_slab = prior.pi.ln() + peak + i0.ln();
    let ln_marginal = if prior.pi >= 1.0 {
        ln_slab
    } else {
        let a = (1.0 - prior.pi).ln() + ln_spike;
        let m = a.max(ln_slab);
        m + ((a - m).exp() + (ln_slab - m).exp()).ln()
    };
    let w = (ln_slab - ln_marginal).exp();
    let mean = w * i1 / i0;
    let second = w * i2 / i0;
    (mean, second - mean * mean, ln_marginal)
}
