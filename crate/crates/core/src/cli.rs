//! The `hawkes` command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, otherwise the
//! error class code from [`HawkesError::exit_code`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::cumulants::{
    integrated_cumulant, integrated_cumulant_terms, motif_series, CumulantDensity, CumulantQuery, DensityOptions,
};
use crate::error::{HawkesError, Result};
use crate::estimate::{
    covariance_density_estimate, empirical_integrated_cumulant, empirical_rates, integrated_cumulant_scan,
    same_cluster_coincidence, Estimate, LagBins, DEFAULT_BLOCKS,
};
use crate::exec::init_thread_pool;
use crate::io::{read_events_file, read_model, write_events};
use crate::model::{renewal_density, renewal_density_default, HawkesModel, RenewalDensity};
use crate::simulate::{simulate_clusters_with, simulate_thinning_with, SimulationOptions, DEFAULT_EVENT_CAP};
use crate::{build_summary, count_trees, enumerate_trees};

/// Tail mass that defines the correlation horizon used as edge margin.
pub const MARGIN_TAIL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "hawkes", version, about = "Analytic and simulated cumulants for multivariate linear Hawkes models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an event stream.
    Simulate(SimulateArgs),
    /// Integrated cumulants, motif series or cumulant densities.
    Analytic(AnalyticArgs),
    /// Empirical cumulants from an event CSV.
    Estimate(EstimateArgs),
    /// Count or list rooted trees with labeled leaves.
    Trees(TreesArgs),
    /// Simulate, estimate and compare against the analytic values.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sampler {
    Clusters,
    Thinning,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "T")]
    pub t_obs: f64,
    /// Burn-in length or `auto`.
    #[arg(long, default_value = "auto")]
    pub burn_in: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Sampler::Clusters)]
    pub sampler: Sampler,
    #[arg(long, default_value_t = DEFAULT_EVENT_CAP)]
    pub event_cap: usize,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One-based types, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub types: Vec<usize>,
    #[arg(long, conflicts_with = "density")]
    pub integrated: bool,
    #[arg(long)]
    pub density: bool,
    /// Lags of events 2..n relative to event 1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lags: Vec<f64>,
    /// Also report motif-series partial sums up to this total power.
    #[arg(long)]
    pub motif_max_power: Option<usize>,
    /// Renewal grid step; default from the kernels.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Renewal horizon; default from the tail decay rate.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub order_four: bool,
    /// Write the density over a lag grid to this CSV.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub lag_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lag_step: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateMode {
    Integrated,
    Density,
    Coincidence,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub types: Vec<usize>,
    #[arg(long, value_enum)]
    pub mode: EstimateMode,
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Extra bin widths for the integrated-mode diagnostic scan.
    #[arg(long, value_delimiter = ',')]
    pub scan_widths: Vec<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub lag_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub lag_step: f64,
    /// Edge margin; defaults to the model's correlation horizon when a
    /// model is given, zero otherwise.
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Observation window end; defaults to the last event time.
    #[arg(long = "T")]
    pub t_obs: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TreesArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub count_only: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long = "T", default_value_t = 1e5)]
    pub t_obs: f64,
    /// Pass threshold in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub tol: f64,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Ok(v) = std::env::var("HAWKES_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                init_thread_pool(n);
            }
            _ => {
                eprintln!("error: HAWKES_THREADS must be a positive integer, got {v:?}");
                return 2;
            }
        }
    }
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Simulate(a) => run_simulate(a).map(|_| 0),
        Command::Analytic(a) => run_analytic(a).map(|_| 0),
        Command::Estimate(a) => run_estimate(a).map(|_| 0),
        Command::Trees(a) => run_trees(a).map(|_| 0),
        Command::Verify(a) => run_verify(a).map(|r| if r.all_pass { 0 } else { 1 }),
    }
}

fn zero_based(types: &[usize], d: usize) -> Result<Vec<usize>> {
    types
        .iter()
        .map(|&t| {
            if t == 0 || t > d {
                Err(HawkesError::Input(format!("type {t} out of range 1..={d}")))
            } else {
                Ok(t - 1)
            }
        })
        .collect()
}

/// Writes to `path`, or stdout when absent. Content is fully built
/// before the file is created.
fn emit(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = File::create(p)?;
            f.write_all(content.as_bytes())?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

pub fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let burn_in = if a.burn_in == "auto" {
        model.default_burn_in()
    } else {
        a.burn_in
            .parse::<f64>()
            .map_err(|_| HawkesError::Input(format!("burn-in must be a number or auto, got {:?}", a.burn_in)))?
    };
    let stream = match a.sampler {
        Sampler::Clusters => simulate_clusters_with(
            &model,
            a.t_obs,
            burn_in,
            a.seed,
            SimulationOptions { event_cap: a.event_cap, ..Default::default() },
        )?,
        Sampler::Thinning => simulate_thinning_with(&model, a.t_obs, burn_in, a.seed)?,
    };
    let mut buf = Vec::new();
    write_events(&stream, &mut buf)?;
    match &a.out {
        Some(p) => BufWriter::new(File::create(p)?).write_all(&buf)?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn renewal_for(model: &HawkesModel, dt: Option<f64>, horizon: Option<f64>) -> Result<RenewalDensity> {
    match (dt, horizon) {
        (None, None) => renewal_density_default(model),
        (dt, horizon) => {
            let grid = crate::model::RenewalGrid::default_for(model)?;
            renewal_density(model, dt.unwrap_or(grid.dt), horizon.unwrap_or_else(|| grid.horizon()))
        }
    }
}

pub fn run_analytic(a: &AnalyticArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let types = zero_based(&a.types, model.dim())?;
    let summary = build_summary(&model, 1e-12)?;
    let mut report = serde_json::Map::new();
    let mut grid_csv = None;
    if a.density {
        let renewal = renewal_for(&model, a.dt, a.horizon)?;
        let options = DensityOptions { allow_order_four: a.order_four, ..Default::default() };
        let dens = CumulantDensity::new(&model, &renewal, options)?;
        let query = CumulantQuery::from_lags(types.clone(), &a.lags)?;
        let v = dens.evaluate(&query)?;
        report.insert("value".into(), json!(v.continuous));
        let atoms: Vec<_> = v
            .atoms
            .iter()
            .map(|p| {
                let groups: Vec<Vec<usize>> = p.groups.iter().map(|g| g.iter().map(|k| k + 1).collect()).collect();
                json!({"coincident_events": groups, "coefficient": p.coefficient})
            })
            .collect();
        report.insert("atoms".into(), json!(atoms));
        report.insert("dt".into(), json!(renewal.dt()));
        report.insert("horizon".into(), json!(renewal.horizon()));
        if let Some(path) = &a.grid_out {
            grid_csv = Some((path.clone(), density_grid_csv(&dens, &types, a.lag_max, a.lag_step)?));
        }
    } else {
        if !a.lags.is_empty() {
            return Err(HawkesError::Input("--lags needs --density".into()));
        }
        let terms = integrated_cumulant_terms(&summary, &types)?;
        let value: f64 = terms.iter().map(|(_, v)| v).sum();
        report.insert("value".into(), json!(value));
        let per_tree: Vec<_> = terms.iter().map(|(t, v)| json!({"tree": t.to_string(), "value": v})).collect();
        report.insert("per_tree_terms".into(), json!(per_tree));
    }
    if let Some(p) = a.motif_max_power {
        report.insert("partial_sums".into(), json!(motif_series(&summary, &types, p)?));
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(report))? + "\n";
    if let Some((path, csv)) = grid_csv {
        emit(Some(&path), &csv)?;
    }
    emit(a.out.as_deref(), &text)
}

fn density_grid_csv(dens: &CumulantDensity, types: &[usize], lag_max: f64, step: f64) -> Result<String> {
    if !(step > 0.0 && lag_max > 0.0) {
        return Err(HawkesError::Input("lag grid needs positive --lag-max and --lag-step".into()));
    }
    let k = (lag_max / step + 1e-9).floor() as i64;
    let lags: Vec<f64> = (-k..=k).map(|i| i as f64 * step).collect();
    let mut out = String::new();
    match types.len() {
        2 => {
            out.push_str("lag,continuous,atom\n");
            for &l in &lags {
                let v = dens.evaluate(&CumulantQuery::from_lags(types.to_vec(), &[l])?)?;
                let atom = v.atoms.iter().fold(0.0, |s, p| s + p.coefficient);
                out.push_str(&format!("{l},{},{atom}\n", v.continuous));
            }
        }
        3 => {
            out.push_str("lag2,lag3,continuous\n");
            for &l2 in &lags {
                for &l3 in &lags {
                    let v = dens.evaluate(&CumulantQuery::from_lags(types.to_vec(), &[l2, l3])?)?;
                    out.push_str(&format!("{l2},{l3},{}\n", v.continuous));
                }
            }
        }
        n => return Err(HawkesError::Input(format!("density grids are written for orders 2 and 3, not {n}"))),
    }
    Ok(out)
}

fn estimate_json(e: &Estimate) -> serde_json::Value {
    json!({"value": e.value, "se": e.se, "n_samples": e.n_samples, "method": e.method})
}

pub fn run_estimate(a: &EstimateArgs) -> Result<()> {
    let model = a.model.as_deref().map(read_model).transpose()?;
    let dim = model.as_ref().map(|m| m.dim());
    let stream = read_events_file(&a.events, dim, a.t_obs)?;
    let types = zero_based(&a.types, stream.dim)?;
    let margin = match (a.margin, &model) {
        (Some(m), _) => m,
        (None, Some(model)) => model.renewal_horizon(MARGIN_TAIL),
        (None, None) => 0.0,
    };
    let text = match a.mode {
        EstimateMode::Integrated => {
            let width = match (a.bin_width, &model) {
                (Some(w), _) => w,
                (None, Some(m)) => default_bin_width(m)?,
                (None, None) => return Err(HawkesError::Input("--bin-width is required without --model".into())),
            };
            let est = empirical_integrated_cumulant(&stream, &types, width, margin)?;
            let scan: Vec<_> = integrated_cumulant_scan(&stream, &types, &a.scan_widths, margin)
                .into_iter()
                .map(|(w, r)| match r {
                    Ok(e) => json!({"bin_width": w, "estimate": estimate_json(&e)}),
                    Err(err) => json!({"bin_width": w, "error": err.to_string()}),
                })
                .collect();
            let body = json!({
                "types": a.types, "bin_width": width, "margin": margin,
                "estimate": estimate_json(&est), "scan": scan,
            });
            serde_json::to_string_pretty(&body)? + "\n"
        }
        EstimateMode::Density => {
            if types.len() != 2 {
                return Err(HawkesError::Input("density mode takes two types".into()));
            }
            let bins = LagBins::uniform(-a.lag_max, a.lag_max, a.lag_step)?;
            let est = covariance_density_estimate(&stream, types[0], types[1], &bins, margin)?;
            let mut out = String::from("lag_lo,lag_hi,value,se\n");
            for (k, e) in est.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", bins.edges[k], bins.edges[k + 1], e.value, e.se));
            }
            out
        }
        EstimateMode::Coincidence => {
            let bins = LagBins::uniform(-a.lag_max, a.lag_max, a.lag_step)?;
            match types.len() {
                2 => {
                    let est = same_cluster_coincidence(&stream, &types, std::slice::from_ref(&bins), margin)?;
                    let mut out = String::from("lag_lo,lag_hi,value,se\n");
                    for (k, e) in est.iter().enumerate() {
                        out.push_str(&format!("{},{},{},{}\n", bins.edges[k], bins.edges[k + 1], e.value, e.se));
                    }
                    out
                }
                3 => {
                    let est = same_cluster_coincidence(&stream, &types, &[bins.clone(), bins.clone()], margin)?;
                    let mut out = String::from("lag2_lo,lag2_hi,lag3_lo,lag3_hi,value,se\n");
                    let m = bins.len();
                    for (c, e) in est.iter().enumerate() {
                        let (k2, k3) = (c / m, c % m);
                        out.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            bins.edges[k2],
                            bins.edges[k2 + 1],
                            bins.edges[k3],
                            bins.edges[k3 + 1],
                            e.value,
                            e.se
                        ));
                    }
                    out
                }
                n => return Err(HawkesError::Input(format!("coincidence mode takes 2 or 3 types, got {n}"))),
            }
        }
    };
    emit(a.out.as_deref(), &text)
}

pub fn run_trees(a: &TreesArgs) -> Result<()> {
    if a.n == 0 {
        return Err(HawkesError::Input("--n must be at least 1".into()));
    }
    let mut text = format!("{}\n", count_trees(a.n));
    if !a.count_only {
        for t in enumerate_trees(a.n)? {
            text.push_str(&format!("{t}\n"));
        }
    }
    emit(None, &text)
}

/// Bin width for count cumulants: 50 slowest timescales stretched by the
/// cascade length `1 / (1 - rho)`, at least one time unit.
pub fn default_bin_width(model: &HawkesModel) -> Result<f64> {
    let rho = build_summary(model, 1e-12)?.rho;
    Ok((50.0 * model.slowest_timescale() / (1.0 - rho)).max(1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub analytic: f64,
    pub empirical: f64,
    pub se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub t_obs: f64,
    pub bin_width: f64,
    pub margin: f64,
    pub tol_se: f64,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

/// Rates, integrated covariances and diagonal third cumulants from one
/// cluster-sampled stream, each compared at `tol` standard errors.
pub fn verify_model(model: &HawkesModel, seed: u64, t_obs: f64, tol: f64, bin_width: Option<f64>) -> Result<VerificationReport> {
    if !(tol > 0.0) {
        return Err(HawkesError::Input("--tol must be positive".into()));
    }
    let summary = build_summary(model, 1e-12)?;
    let d = model.dim();
    let width = match bin_width {
        Some(w) => w,
        None => default_bin_width(model)?,
    };
    let margin = model.renewal_horizon(MARGIN_TAIL);
    let stream = simulate_clusters_with(model, t_obs, model.default_burn_in(), seed, SimulationOptions::default())?;
    let mut checks = Vec::new();
    let mut push = |name: String, analytic: f64, e: Estimate| {
        checks.push(Check { name, analytic, empirical: e.value, se: e.se, pass: e.within(analytic, tol) });
    };
    let rates = empirical_rates(&stream, margin, t_obs, DEFAULT_BLOCKS)?;
    for (i, r) in rates.into_iter().enumerate() {
        push(format!("lambda[{}]", i + 1), summary.lambda[i], r);
    }
    for i in 0..d {
        for j in i..d {
            let e = empirical_integrated_cumulant(&stream, &[i, j], width, margin)?;
            push(format!("k[{},{}]", i + 1, j + 1), integrated_cumulant(&summary, &[i, j])?, e);
        }
    }
    for i in 0..d {
        let e = empirical_integrated_cumulant(&stream, &[i, i, i], width, margin)?;
        push(format!("k[{0},{0},{0}]", i + 1), integrated_cumulant(&summary, &[i, i, i])?, e);
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport { seed, t_obs, bin_width: width, margin, tol_se: tol, checks, all_pass })
}

pub fn run_verify(a: &VerifyArgs) -> Result<VerificationReport> {
    let model = read_model(&a.model)?;
    let report = verify_model(&model, a.seed, a.t_obs, a.tol, a.bin_width)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    emit(a.out.as_deref(), &text)?;
    Ok(report)
}
