use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ebcd_core::bispca::{fit_bispca, svd_loadings, BispcaOptions, PenaltySpec};
use ebcd_core::ebcd::{fit_ebcd, CompactMode, EbcdInput, EbcdOptions};
use ebcd_core::ebnm::PointLaplacePrior;
use ebcd_core::linalg::{frobenius_sq, thin_svd};
use ebcd_core::DenseMatrix;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io::{from_rows, read_matrix, to_rows, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    EbcdPl,
    BispcaL1,
    BispcaL0,
    Pca,
}

impl Mode {
    /// Whether `Lbar` is stored on the population scale, so that `√N Lbar`
    /// is comparable with principal-component loadings `V D`.
    pub fn population_scale(self) -> bool {
        !matches!(self, Mode::Pca)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CompactArg {
    Auto,
    On,
    Off,
}

impl From<CompactArg> for CompactMode {
    fn from(c: CompactArg) -> Self {
        match c {
            CompactArg::Auto => CompactMode::Auto,
            CompactArg::On => CompactMode::On,
            CompactArg::Off => CompactMode::Off,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Data matrix, or with --gram a compact matrix C with CᵀC = XᵀX.
    #[arg(long)]
    pub input: PathBuf,
    /// Treat the input as a compact Gram factor (see the `gram` command).
    #[arg(long)]
    pub gram: bool,
    /// Number of observations; required with --gram.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub kmax: usize,
    /// One penalty per component, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Per-variable noise precisions (ebcd-pl only).
    #[arg(long)]
    pub hetero: bool,
    #[arg(long, value_enum, default_value = "auto")]
    pub compact: CompactArg,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// The input CSV starts with a header line.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub input: String,
    pub gram: bool,
    pub n: Option<usize>,
    pub mode: Mode,
    pub kmax: usize,
    pub lambda: Option<Vec<f64>>,
    pub hetero: bool,
    pub compact: CompactMode,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub header: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub mode: Mode,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "Lbar")]
    pub lbar: Vec<Vec<f64>>,
    #[serde(rename = "Z", default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<Vec<f64>>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    /// Noise precision; `null` when the residual vanishes.
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_cols: Option<Vec<f64>>,
    pub priors: Vec<PointLaplacePrior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elbo_trace: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub tool_version: String,
    pub config_echo: FitConfig,
}

impl FitOutput {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fit output serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("fit file: {e}")))
    }

    pub fn lbar_matrix(&self) -> Result<DenseMatrix, CliError> {
        from_rows(&self.lbar, "Lbar")
    }
}

pub fn tool_version() -> String {
    format!("ebcd {}", env!("CARGO_PKG_VERSION"))
}

fn residual_precision(n: usize, p: usize, rss: f64) -> Option<f64> {
    (rss > 0.0).then(|| (n * p) as f64 / rss)
}

pub fn run(args: &FitArgs) -> Result<String, CliError> {
    let m = read_matrix(&args.input, args.header)?;
    let n = if args.gram {
        args.n.ok_or_else(|| {
            CliError::input("--gram needs --n: the noise precision update τ = NP/(…) depends on the number of observations N, which the Gram matrix does not carry")
        })?
    } else {
        if args.n.is_some_and(|n| n != m.nrows()) {
            return Err(CliError::input("--n disagrees with the number of input rows"));
        }
        m.nrows()
    };
    let p = m.ncols();
    let is_bispca = matches!(args.mode, Mode::BispcaL1 | Mode::BispcaL0);
    if args.lambda.is_some() && !is_bispca {
        return Err(CliError::input("--lambda applies only to the bispca modes"));
    }
    if args.hetero && args.mode != Mode::EbcdPl {
        return Err(CliError::input("--hetero applies only to ebcd-pl"));
    }
    if args.kmax == 0 || args.kmax > n.min(p) || args.kmax > m.nrows() {
        return Err(CliError::input(format!("--kmax must be between 1 and {}", n.min(p).min(m.nrows()))));
    }
    let config = FitConfig {
        input: args.input.display().to_string(),
        gram: args.gram,
        n: args.n,
        mode: args.mode,
        kmax: args.kmax,
        lambda: args.lambda.clone(),
        hetero: args.hetero,
        compact: args.compact.into(),
        tol: args.tol,
        max_iter: args.max_iter,
        header: args.header,
    };
    let k = args.kmax;
    let keep_z = !args.gram;
    let zeros = DMatrix::zeros(p, k);

    let output = match args.mode {
        Mode::EbcdPl => {
            let mut opts = EbcdOptions {
                tol: args.tol,
                heteroskedastic: args.hetero,
                compact: args.compact.into(),
                ..EbcdOptions::with_kmax(k)
            };
            if let Some(it) = args.max_iter {
                opts.max_iter_greedy = it;
                opts.max_iter_backfit = it;
            }
            let gram = args.gram.then(|| m.tr_mul(&m));
            let input = match &gram {
                Some(gram) => EbcdInput::Gram { gram, n: Some(n) },
                None => EbcdInput::Data(&m),
            };
            let fit = fit_ebcd(input, &opts)?;
            let st = fit.state;
            FitOutput {
                mode: args.mode,
                k: st.k(),
                lbar: to_rows(&st.lbar),
                z: fit.z.as_ref().filter(|_| keep_z).map(to_rows),
                v: to_rows(&st.v),
                tau: Some(st.tau),
                tau_cols: st.tau_cols.clone(),
                priors: st.priors.clone(),
                elbo_trace: Some(st.elbo_trace.clone()),
                objective_trace: None,
                iterations: st.iterations,
                converged: st.converged,
                tool_version: tool_version(),
                config_echo: config,
            }
        }
        Mode::BispcaL1 | Mode::BispcaL0 => {
            let lambdas = args
                .lambda
                .clone()
                .ok_or_else(|| CliError::input("bispca modes need --lambda with one value per component"))?;
            if lambdas.len() != k {
                return Err(CliError::input(format!("--lambda has {} values but --kmax is {k}", lambdas.len())));
            }
            let penalty = if args.mode == Mode::BispcaL1 {
                PenaltySpec::l1(lambdas)
            } else {
                PenaltySpec::l0(lambdas)
            };
            let mut opts = BispcaOptions {
                tol: args.tol,
                scaled: true,
                n_obs: Some(n),
                ..BispcaOptions::default()
            };
            if let Some(it) = args.max_iter {
                opts.max_iter = it;
            }
            let fit = fit_bispca(&m, k, &penalty, &opts)?;
            let rss = frobenius_sq(&(&m - &fit.z * fit.l.transpose()));
            FitOutput {
                mode: args.mode,
                k,
                lbar: to_rows(&fit.l),
                z: keep_z.then(|| to_rows(&fit.z)),
                v: to_rows(&zeros),
                tau: residual_precision(n, p, rss),
                tau_cols: None,
                priors: Vec::new(),
                elbo_trace: None,
                objective_trace: Some(fit.objective_trace),
                iterations: fit.iterations,
                converged: fit.converged,
                tool_version: tool_version(),
                config_echo: config,
            }
        }
        Mode::Pca => {
            let l = svd_loadings(&m, k)?;
            let svd = thin_svd(&m)?.with_right_sign_convention();
            let rss: f64 = svd.d.iter().skip(k).map(|d| d * d).sum();
            FitOutput {
                mode: args.mode,
                k,
                lbar: to_rows(&l),
                z: keep_z.then(|| to_rows(&svd.u.columns(0, k).into_owned())),
                v: to_rows(&zeros),
                tau: residual_precision(n, p, rss),
                tau_cols: None,
                priors: Vec::new(),
                elbo_trace: None,
                objective_trace: None,
                iterations: 0,
                converged: true,
                tool_version: tool_version(),
                config_echo: config,
            }
        }
    };
    let json = output.to_json();
    if let Some(path) = &args.out {
        write_text(path, &json)?;
    }
    Ok(json)
}
