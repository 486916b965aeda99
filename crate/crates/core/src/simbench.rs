//! Seeded simulation studies: spiked-covariance scenarios, the three
//! accuracy metrics, and a replicate runner comparing EBCD, L1-penalized
//! BISPCA and plain PCA.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bispca::{fit_bispca, svd_loadings, BispcaOptions, PenaltySpec};
use crate::ebcd::{fit_ebcd, EbcdInput, EbcdOptions};
use crate::error::FitError;
use crate::linalg::{nuclear_norm, orthonormal_basis, DenseMatrix};

pub const SIM_N: usize = 50;
pub const SIM_P: usize = 500;

/// Spiked covariance `Σ = I + Σ_i w_i v_i v_iᵀ` with disjoint, flat supports.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: u8,
    pub n: usize,
    pub p: usize,
    pub sigma: DenseMatrix,
    /// Unit-norm true components, one per column.
    pub true_pcs: DenseMatrix,
    /// The spike weights `w_i`.
    pub spikes: Vec<f64>,
}

impl Scenario {
    pub fn new(id: u8) -> Result<Self, FitError> {
        let (spikes, supports): (Vec<f64>, Vec<(usize, usize)>) = match id {
            1 => (vec![399.0, 299.0], vec![(0, 10), (10, 20)]),
            2 => (vec![9.0, 7.0, 4.0], vec![(0, 10), (10, 50), (50, 150)]),
            _ => return Err(FitError::InvalidOption(format!("unknown scenario {id}"))),
        };
        let (n, p) = (SIM_N, SIM_P);
        let mut true_pcs = DMatrix::zeros(p, spikes.len());
        for (k, &(lo, hi)) in supports.iter().enumerate() {
            let h = 1.0 / ((hi - lo) as f64).sqrt();
            for j in lo..hi {
                true_pcs[(j, k)] = h;
            }
        }
        let mut sigma = DMatrix::identity(p, p);
        for (k, &w) in spikes.iter().enumerate() {
            let v = true_pcs.column(k);
            sigma += w * v * v.transpose();
        }
        Ok(Self {
            id,
            n,
            p,
            sigma,
            true_pcs,
            spikes,
        })
    }

    pub fn k_true(&self) -> usize {
        self.true_pcs.ncols()
    }

    /// Rows `x = Σ^{1/2} g` with `g` standard normal. Because the spikes are
    /// orthonormal, `Σ^{1/2} = I + Σ_i (√(1 + w_i) − 1) v_i v_iᵀ`.
    pub fn sample(&self, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(self.n, self.p);
        for i in 0..self.n {
            for j in 0..self.p {
                x[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let coef: Vec<f64> = self.spikes.iter().map(|w| (1.0 + w).sqrt() - 1.0).collect();
        let proj = &x * &self.true_pcs;
        for (k, c) in coef.iter().enumerate() {
            x += (proj.column(k) * *c) * self.true_pcs.column(k).transpose();
        }
        x
    }
}

/// Data matrix and scenario for one seeded replicate.
pub fn gen_scenario(id: u8, seed: u64) -> Result<(DenseMatrix, Scenario), FitError> {
    let scenario = Scenario::new(id)?;
    Ok((scenario.sample(seed), scenario))
}

/// `∠(v, l̂)/(π/2)` using `|cos|`; a zero estimate scores 1.
pub fn angle_metric(v: &DVector<f64>, lhat: &DVector<f64>) -> f64 {
    let norm = lhat.norm();
    if norm == 0.0 {
        return 1.0;
    }
    let cos = (v.dot(lhat).abs() / (norm * v.norm())).min(1.0);
    cos.acos() / FRAC_PI_2
}

/// `‖Σ − L̂L̂ᵀ/N‖_F`.
pub fn cov_metric(sigma: &DenseMatrix, lhat: &DenseMatrix, n: usize) -> f64 {
    (sigma - lhat * lhat.transpose() / n as f64).norm()
}

/// `min_R ‖L̃R − V‖_F` for an orthonormal basis `L̃` of `span(L̂)`. Missing
/// directions are padded with zero columns, each adding 1 to the square.
pub fn subspace_metric(lhat: &DenseMatrix, vtrue: &DenseMatrix) -> Result<f64, FitError> {
    let basis = orthonormal_basis(lhat, 1e-8)?;
    let k_hat = basis.ncols() as f64;
    let k = vtrue.ncols() as f64;
    let nuc = if basis.ncols() == 0 {
        0.0
    } else {
        nuclear_norm(&basis.tr_mul(vtrue))?
    };
    Ok((k_hat + k - 2.0 * nuc).max(0.0).sqrt())
}

/// Assign estimated columns to true components by repeatedly taking the
/// pair with the largest `|cos|`. Entry `i` is the column matched to
/// `vtrue[i]`, if any.
pub fn match_columns(lhat: &DenseMatrix, vtrue: &DenseMatrix) -> Vec<Option<usize>> {
    let mut cos = DMatrix::zeros(vtrue.ncols(), lhat.ncols());
    for j in 0..lhat.ncols() {
        let norm = lhat.column(j).norm();
        if norm == 0.0 {
            continue;
        }
        for i in 0..vtrue.ncols() {
            cos[(i, j)] = vtrue.column(i).dot(&lhat.column(j)).abs() / norm;
        }
    }
    let mut out = vec![None; vtrue.ncols()];
    let mut used = vec![false; lhat.ncols()];
    for _ in 0..vtrue.ncols().min(lhat.ncols()) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..vtrue.ncols()).filter(|&i| out[i].is_none()) {
            for j in (0..lhat.ncols()).filter(|&j| !used[j]) {
                if best.is_none_or(|(_, _, b)| cos[(i, j)] > b) {
                    best = Some((i, j, cos[(i, j)]));
                }
            }
        }
        let Some((i, j, _)) = best else { break };
        out[i] = Some(j);
        used[j] = true;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "pca")]
    Pca,
    #[serde(rename = "bispca-l1")]
    BispcaL1,
    #[serde(rename = "ebcd-pl")]
    EbcdPl,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::BispcaL1 => "bispca-l1",
            Method::EbcdPl => "ebcd-pl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pca" => Some(Method::Pca),
            "bispca-l1" => Some(Method::BispcaL1),
            "ebcd-pl" => Some(Method::EbcdPl),
            _ => None,
        }
    }
}

/// Thresholds `t` for the L1 baseline: 16 log-spaced values over
/// `[0.01, 10] × √(log P / N)`. The penalty is `λ = N t`, so that the
/// scaled shrinkage soft-thresholds `Xᵀz/N` at `t`.
pub fn default_lambda_grid(n: usize, p: usize) -> Vec<f64> {
    let unit = ((p as f64).ln() / n as f64).sqrt();
    let (lo, hi) = (0.01f64.ln(), 10f64.ln());
    (0..16)
        .map(|i| n as f64 * unit * (lo + (hi - lo) * i as f64 / 15.0).exp())
        .collect()
}

/// Estimated loadings on the population scale (`L̂L̂ᵀ/N` estimates `Σ`).
#[derive(Debug, Clone)]
pub struct MethodFit {
    pub lhat: DenseMatrix,
    pub converged: bool,
}

/// Fit one method to `x`. For the L1 baseline every grid value is fitted
/// and the one with the smallest `d_cov` against the true `Σ` is kept.
pub fn fit_method(method: Method, x: &DenseMatrix, scenario: &Scenario, lambda_grid: &[f64]) -> Result<MethodFit, FitError> {
    let n = x.nrows();
    let k = scenario.k_true();
    match method {
        Method::Pca => Ok(MethodFit {
            lhat: svd_loadings(x, k)?,
            converged: true,
        }),
        Method::EbcdPl => {
            let fit = fit_ebcd(EbcdInput::Data(x), &EbcdOptions::with_kmax(k))?;
            Ok(MethodFit {
                lhat: fit.state.lbar * (n as f64).sqrt(),
                converged: fit.state.converged,
            })
        }
        Method::BispcaL1 => {
            let opts = BispcaOptions {
                scaled: true,
                ..BispcaOptions::default()
            };
            let mut best: Option<(f64, MethodFit)> = None;
            for &lambda in lambda_grid {
                let fit = fit_bispca(x, k, &PenaltySpec::l1(vec![lambda; k]), &opts)?;
                let lhat = fit.l * (n as f64).sqrt();
                let d = cov_metric(&scenario.sigma, &lhat, n);
                if best.as_ref().is_none_or(|(b, _)| d < *b) {
                    best = Some((
                        d,
                        MethodFit {
                            lhat,
                            converged: fit.converged,
                        },
                    ));
                }
            }
            best.map(|(_, f)| f)
                .ok_or_else(|| FitError::InvalidOption("empty lambda grid".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: Method,
    pub replicate: usize,
    pub seed: u64,
    /// One entry per true component; `None` when the fit failed.
    pub d_angle: Vec<Option<f64>>,
    pub d_cov: Option<f64>,
    pub d_or: Option<f64>,
    pub converged: bool,
    pub failed: bool,
}

/// Metrics of `lhat` against the truth, with columns matched greedily.
pub fn evaluate(lhat: &DenseMatrix, scenario: &Scenario) -> Result<(Vec<f64>, f64, f64), FitError> {
    let matches = match_columns(lhat, &scenario.true_pcs);
    let angles = matches
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let v = scenario.true_pcs.column(i).into_owned();
            match m {
                Some(j) => angle_metric(&v, &lhat.column(*j).into_owned()),
                None => 1.0,
            }
        })
        .collect();
    let d_cov = cov_metric(&scenario.sigma, lhat, scenario.n);
    let d_or = subspace_metric(lhat, &scenario.true_pcs)?;
    Ok((angles, d_cov, d_or))
}

#[derive(Debug, Clone)]
pub struct ReplicateConfig {
    pub scenario_id: u8,
    pub n_reps: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    /// `None` selects [`default_lambda_grid`].
    pub lambda_grid: Option<Vec<f64>>,
    /// Worker threads; 0 or 1 runs serially.
    pub threads: usize,
}

impl ReplicateConfig {
    pub fn new(scenario_id: u8, n_reps: usize, base_seed: u64) -> Self {
        Self {
            scenario_id,
            n_reps,
            methods: vec![Method::Pca, Method::BispcaL1, Method::EbcdPl],
            base_seed,
            lambda_grid: None,
            threads: 1,
        }
    }
}

fn run_one(config: &ReplicateConfig, scenario: &Scenario, grid: &[f64], r: usize) -> Vec<MetricsReport> {
    let seed = config.base_seed + r as u64;
    let x = scenario.sample(seed);
    config
        .methods
        .iter()
        .map(|&method| {
            let outcome = fit_method(method, &x, scenario, grid)
                .and_then(|fit| evaluate(&fit.lhat, scenario).map(|m| (m, fit.converged)));
            match outcome {
                Ok(((angles, d_cov, d_or), converged)) => MetricsReport {
                    method,
                    replicate: r,
                    seed,
                    d_angle: angles.into_iter().map(Some).collect(),
                    d_cov: Some(d_cov),
                    d_or: Some(d_or),
                    converged,
                    failed: false,
                },
                Err(_) => MetricsReport {
                    method,
                    replicate: r,
                    seed,
                    d_angle: vec![None; scenario.k_true()],
                    d_cov: None,
                    d_or: None,
                    converged: false,
                    failed: true,
                },
            }
        })
        .collect()
}

/// One report per method per replicate, ordered by replicate and then by
/// the order of `config.methods`. Replicate `r` uses seed `base_seed + r`,
/// so the output does not depend on the thread count.
pub fn run_replicates(config: &ReplicateConfig) -> Result<Vec<MetricsReport>, FitError> {
    if config.n_reps == 0 {
        return Err(FitError::InvalidOption("n_reps must be at least 1".into()));
    }
    let scenario = Scenario::new(config.scenario_id)?;
    let grid = config
        .lambda_grid
        .clone()
        .unwrap_or_else(|| default_lambda_grid(scenario.n, scenario.p));
    let threads = config.threads.max(1).min(config.n_reps);
    if threads == 1 {
        return Ok((0..config.n_reps)
            .flat_map(|r| run_one(config, &scenario, &grid, r))
            .collect());
    }
    let mut per_rep: Vec<Vec<MetricsReport>> = vec![Vec::new(); config.n_reps];
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let (scenario, grid) = (&scenario, &grid);
                s.spawn(move || {
                    (t..config.n_reps)
                        .step_by(threads)
                        .map(|r| (r, run_one(config, scenario, grid, r)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (r, reports) in h.join().expect("replicate worker panicked") {
                per_rep[r] = reports;
            }
        }
    });
    Ok(per_rep.into_iter().flatten().collect())
}

/// Median of the finite values.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::psd_eigen;

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
        DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    fn unit(p: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(p);
        v[i] = 1.0;
        v
    }

    fn sorted_eigenvalues(s: &DenseMatrix) -> Vec<f64> {
        let mut ev: Vec<f64> = psd_eigen(s).unwrap().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    #[test]
    fn scenario_one_spectrum() {
        let s = Scenario::new(1).unwrap();
        let ev = sorted_eigenvalues(&s.sigma);
        assert!((ev[0] - 400.0).abs() < 1e-9 && (ev[1] - 300.0).abs() < 1e-9);
        assert!(ev[2..].iter().all(|e| (e - 1.0).abs() < 1e-9));
        assert_eq!(s.k_true(), 2);
    }

    #[test]
    fn scenario_two_spectrum_and_supports() {
        let s = Scenario::new(2).unwrap();
        let ev = sorted_eigenvalues(&s.sigma);
        for (e, want) in ev.iter().zip([10.0, 8.0, 5.0]) {
            assert!((e - want).abs() < 1e-9);
        }
        assert!(ev[3..].iter().all(|e| (e - 1.0).abs() < 1e-9));
        let v = &s.true_pcs;
        assert!((v.tr_mul(v) - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        assert!((v[(10, 1)] - 1.0 / 40f64.sqrt()).abs() < 1e-15);
        assert!((v[(149, 2)] - 0.1).abs() < 1e-15);
        assert_eq!(v[(150, 2)], 0.0);
        for j in 0..SIM_P {
            assert!(v.row(j).iter().filter(|&&x| x != 0.0).count() <= 1);
        }
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(gen_scenario(3, 1).is_err());
        assert!(gen_scenario(0, 1).is_err());
    }

    #[test]
    fn samples_are_centered_and_seeded() {
        let band = 4.0 / ((SIM_N * SIM_P) as f64).sqrt();
        for seed in 1..=5 {
            let (x, _) = gen_scenario(2, seed).unwrap();
            assert_eq!(x.shape(), (SIM_N, SIM_P));
            assert!(x.mean().abs() < band, "{}", x.mean());
        }
        // in scenario 1 the spikes inflate the grand mean's sd to √(1ᵀΣ1/N)/P
        let s = Scenario::new(1).unwrap();
        let sd = (s.sigma.sum() / SIM_N as f64).sqrt() / SIM_P as f64;
        let x = s.sample(7);
        assert!(x.mean().abs() < 4.0 * sd);
        assert_eq!(x, gen_scenario(1, 7).unwrap().0);
        assert_ne!(x, gen_scenario(1, 8).unwrap().0);
    }

    #[test]
    fn noise_coordinates_have_unit_variance() {
        let s = Scenario::new(2).unwrap();
        let x = s.sample(3);
        let tail = x.columns(150, 350);
        let var = tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
        // the first spike direction carries variance 10
        let proj = &x * s.true_pcs.column(0);
        let pv = proj.norm_squared() / SIM_N as f64;
        assert!(pv > 4.0 && pv < 20.0, "{pv}");
    }

    #[test]
    fn angle_examples() {
        let v = unit(4, 0);
        assert_eq!(angle_metric(&v, &v), 0.0);
        assert!((angle_metric(&v, &unit(4, 2)) - 1.0).abs() < 1e-15);
        assert_eq!(angle_metric(&v, &(-&v)), 0.0);
        assert_eq!(angle_metric(&v, &(&v * 7.5)), 0.0);
        assert_eq!(angle_metric(&v, &DVector::zeros(4)), 1.0);
        let d = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        assert!((angle_metric(&v, &d) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cov_examples() {
        let p = 6;
        let eye = DMatrix::identity(p, p);
        assert!((cov_metric(&eye, &DMatrix::zeros(p, 2), 10) - (p as f64).sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = randn(&mut rng, p, 2);
        let sigma = &l * l.transpose() / 10.0;
        assert!(cov_metric(&sigma, &l, 10) < 1e-12);
        let lhat = randn(&mut rng, p, 3);
        let mut sq = 0.0;
        for i in 0..p {
            for j in 0..p {
                let mut e = 0.0;
                for k in 0..3 {
                    e += lhat[(i, k)] * lhat[(j, k)];
                }
                sq += (sigma[(i, j)] - e / 10.0).powi(2);
            }
        }
        assert!((cov_metric(&sigma, &lhat, 10) - sq.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn subspace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = crate::linalg::qr_q(&randn(&mut rng, 8, 2)).unwrap();
        let mix = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 0.5, 3.0]);
        assert!(subspace_metric(&(&v * mix), &v).unwrap() < 1e-7);
        let e0 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let e1 = DMatrix::from_column_slice(3, 1, &[0.0, 3.0, 0.0]);
        assert!((subspace_metric(&e1, &e0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        // one estimated direction equal to the first truth, the second missing
        let partial = v.columns(0, 1).into_owned();
        assert!((subspace_metric(&partial, &v).unwrap() - 1.0).abs() < 1e-7);
        assert!((subspace_metric(&DMatrix::zeros(8, 2), &v).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn subspace_matches_random_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let lhat = randn(&mut rng, 7, 2);
            let v = crate::linalg::qr_q(&randn(&mut rng, 7, 2)).unwrap();
            let basis = orthonormal_basis(&lhat, 1e-8).unwrap();
            let mut best = f64::INFINITY;
            for _ in 0..10_000 {
                let r = crate::linalg::qr_q(&randn(&mut rng, 2, 2)).unwrap();
                best = best.min((&basis * r - &v).norm());
            }
            let got = subspace_metric(&lhat, &v).unwrap();
            assert!(got <= best + 1e-12);
            assert!(best - got < 1e-3, "{got} vs {best}");
        }
    }

    #[test]
    fn matching_prefers_largest_cosine() {
        let v = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let lhat = DMatrix::from_column_slice(3, 3, &[0.0, -2.0, 0.1, 0.2, 0.0, 1.0, 1.0, 0.1, 0.0]);
        assert_eq!(match_columns(&lhat, &v), vec![Some(2), Some(0)]);
        let one = lhat.columns(1, 1).into_owned();
        assert_eq!(match_columns(&one, &v), vec![Some(0), None]);
    }

    #[test]
    fn metrics_ignore_column_signs_and_order() {
        let s = Scenario::new(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lhat = &s.true_pcs * DMatrix::from_row_slice(2, 2, &[19.0, 0.3, -0.2, 16.0]) + randn(&mut rng, SIM_P, 2) * 0.1;
        let base = evaluate(&lhat, &s).unwrap();
        let mut flipped = lhat.clone();
        flipped.column_mut(1).neg_mut();
        flipped.swap_columns(0, 1);
        let other = evaluate(&flipped, &s).unwrap();
        for (a, b) in base.0.iter().zip(&other.0) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((base.1 - other.1).abs() < 1e-9);
        assert!((base.2 - other.2).abs() < 1e-9);
        assert!(base.0.iter().all(|d| (0.0..=1.0).contains(d)));
    }

    #[test]
    fn lambda_grid_spans_the_stated_range() {
        let g = default_lambda_grid(50, 500);
        let unit = (500f64.ln() / 50.0).sqrt();
        assert_eq!(g.len(), 16);
        assert!((g[0] - 50.0 * 0.01 * unit).abs() < 1e-10);
        assert!((g[15] - 50.0 * 10.0 * unit).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median([3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median([4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median([f64::NAN, 5.0]), 5.0);
        assert!(median(Vec::<f64>::new()).is_nan());
    }

    #[test]
    fn method_labels_round_trip() {
        for m in [Method::Pca, Method::BispcaL1, Method::EbcdPl] {
            assert_eq!(Method::parse(m.label()), Some(m));
        }
        assert_eq!(Method::parse("spc"), None);
    }

    #[test]
    fn pca_smoke() {
        let mut cfg = ReplicateConfig::new(1, 1, 5);
        cfg.methods = vec![Method::Pca];
        let out = run_replicates(&cfg).unwrap();
        assert_eq!(out.len(), 1);
        let r = &out[0];
        assert!(!r.failed && r.seed == 5);
        assert!(r.d_angle.iter().all(|d| d.is_some_and(f64::is_finite)));
        assert!(r.d_cov.unwrap() > 0.0);
    }

    #[test]
    fn replicates_are_deterministic_and_order_free() {
        let mut cfg = ReplicateConfig::new(1, 2, 11);
        cfg.methods = vec![Method::Pca, Method::EbcdPl];
        cfg.lambda_grid = Some(vec![5.0]);
        let a = run_replicates(&cfg).unwrap();
        assert_eq!(a, run_replicates(&cfg).unwrap());
        cfg.threads = 2;
        assert_eq!(a, run_replicates(&cfg).unwrap());
        cfg.threads = 1;
        cfg.methods = vec![Method::EbcdPl, Method::Pca];
        let b = run_replicates(&cfg).unwrap();
        for r in &a {
            assert!(b.iter().any(|q| q == r));
        }
        assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![11, 11, 12, 12]);
    }

    #[test]
    fn zero_replicates_is_an_error() {
        assert!(run_replicates(&ReplicateConfig::new(1, 0, 1)).is_err());
    }
}
