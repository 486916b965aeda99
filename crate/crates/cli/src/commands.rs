use std::path::PathBuf;

use clap::Args;
use ebcd_core::ebcd::compact_matrix;
use ebcd_core::simbench::{
    angle_metric, cov_metric, match_columns, run_replicates, subspace_metric, Method, MetricsReport, ReplicateConfig,
};
use serde::Deserialize;

use crate::error::CliError;
use crate::fit::FitOutput;
use crate::io::{format_number, from_rows, read_matrix, read_text, write_matrix, write_text};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: u8,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "pca,bispca-l1,ebcd-pl")]
    pub methods: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Worker count from `EBCD_THREADS`; unset or 0 means all available cores.
fn thread_count() -> usize {
    let requested = std::env::var("EBCD_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("method,replicate,seed,d1,d2,d3,d_cov,d_or,converged\n");
    for r in reports {
        let d = |i: usize| cell(r.d_angle.get(i).copied().flatten());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.method.label(),
            r.replicate,
            r.seed,
            d(0),
            d(1),
            d(2),
            cell(r.d_cov),
            cell(r.d_or),
            r.converged
        ));
    }
    out
}

pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    if !matches!(args.scenario, 1 | 2) {
        return Err(CliError::input(format!("unknown scenario {}; expected 1 or 2", args.scenario)));
    }
    if args.reps == 0 {
        return Err(CliError::input("--reps must be at least 1"));
    }
    let methods = args
        .methods
        .iter()
        .map(|m| Method::parse(m.trim()).ok_or_else(|| CliError::input(format!("unknown method {m:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let config = ReplicateConfig {
        methods,
        threads: thread_count(),
        ..ReplicateConfig::new(args.scenario, args.reps, args.seed)
    };
    let csv = metrics_csv(&run_replicates(&config)?);
    if let Some(path) = &args.out {
        write_text(path, &csv)?;
    }
    Ok(csv)
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Fit file written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// JSON object with `true_pcs`, the P×K true components as rows.
    #[arg(long)]
    pub truth: PathBuf,
    /// Population covariance, P×P CSV.
    #[arg(long)]
    pub sigma: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct Truth {
    true_pcs: Vec<Vec<f64>>,
}

pub fn metrics(args: &MetricsArgs) -> Result<String, CliError> {
    let fit = FitOutput::from_json(&read_text(&args.fit)?)?;
    let truth: Truth = serde_json::from_str(&read_text(&args.truth)?)
        .map_err(|e| CliError::input(format!("truth file: {e}")))?;
    let v = from_rows(&truth.true_pcs, "true_pcs")?;
    let sigma = read_matrix(&args.sigma, false)?;
    let p = v.nrows();
    let lbar = fit.lbar_matrix()?;
    if sigma.shape() != (p, p) {
        return Err(CliError::input(format!("sigma is {}x{}, expected {p}x{p}", sigma.nrows(), sigma.ncols())));
    }
    if lbar.nrows() != p {
        return Err(CliError::input(format!("fit has {} variables, truth has {p}", lbar.nrows())));
    }
    if args.n == 0 {
        return Err(CliError::input("--n must be positive"));
    }
    let lhat = if fit.mode.population_scale() {
        lbar * (args.n as f64).sqrt()
    } else {
        lbar
    };
    let matches = match_columns(&lhat, &v);
    let mut header: Vec<String> = (1..=v.ncols()).map(|i| format!("d{i}")).collect();
    header.extend(["d_cov".into(), "d_or".into()]);
    let mut row: Vec<String> = matches
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let d = m.map_or(1.0, |j| angle_metric(&v.column(i).into_owned(), &lhat.column(j).into_owned()));
            format_number(d)
        })
        .collect();
    row.push(format_number(cov_metric(&sigma, &lhat, args.n)));
    row.push(format_number(subspace_metric(&lhat, &v)?));
    let csv = format!("{}\n{}\n", header.join(","), row.join(","));
    if let Some(path) = &args.out {
        write_text(path, &csv)?;
    }
    Ok(csv)
}

#[derive(Debug, Args)]
pub struct GramArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the number of observations to `<out>.n`.
    #[arg(long)]
    pub emit_n: bool,
    #[arg(long)]
    pub header: bool,
}

pub fn gram(args: &GramArgs) -> Result<(), CliError> {
    let x = read_matrix(&args.input, args.header)?;
    let c = compact_matrix(&x.tr_mul(&x))?;
    write_matrix(&args.out, &c)?;
    if args.emit_n {
        let mut sidecar = args.out.clone().into_os_string();
        sidecar.push(".n");
        write_text(&PathBuf::from(sidecar), &format!("{}\n", x.nrows()))?;
    }
    Ok(())
}
