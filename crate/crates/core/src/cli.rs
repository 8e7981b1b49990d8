//! `mapcoach` subcommands: `simulate`, `train`, `reconstruct`, `report`.
//!
//! Exit status: 0 on success (for `train`: at least one converged run),
//! 1 for data/model/format errors, 2 for configuration errors, 3 for I/O
//! errors, 4 when `train` finished but no run converged.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dynamics::{simulate, LogisticSystemParams};
use crate::embedding::{build_dataset, default_n_train, split, EmbeddedDataset};
use crate::error::{Error, Result};
use crate::experiment::{
    r_squared, run_restarts_detailed, run_restarts_on, slope_sign, EvaluationReport,
    ExperimentOutcome,
};
use crate::mapper_coach::MapperCoachNet;
use crate::table::{
    dataset_from_columns, read_columns_file, trajectory_from_columns, write_columns_file,
    write_dataset, write_trajectory, DATASET_HEADER, TRAJECTORY_HEADER,
};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "mapcoach",
    version,
    about = "Reconstruct a hidden common driver of two chaotic series with a mapper-coach network"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the coupled maps and write a `t,x,y,z` CSV.
    Simulate(SimulateArgs),
    /// Train all restarts, evaluate them and write the report and models.
    Train(TrainArgs),
    /// Run a trained mapper alone on delay vectors.
    Reconstruct(ReconstructArgs),
    /// Summarize a report JSON.
    Report(ReportArgs),
}

/// Optional config file plus flat overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file; fields not given fall back to defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Sets both couplings.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub beta_xz: Option<f64>,
    #[arg(long)]
    pub beta_yz: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Master seed: seeds the simulation and every restart.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub converged_threshold: Option<f64>,
    #[arg(long)]
    pub local_minimum_threshold: Option<f64>,
}

impl ConfigArgs {
    pub fn effective(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($arg:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$arg { c.$field = v; })*
            };
        }
        set!(r => r, beta => beta_xz, beta => beta_yz);
        set!(beta_xz => beta_xz, beta_yz => beta_yz);
        set!(n_points => n_points, burn_in => burn_in, width => width, depth => depth);
        set!(batch_size => batch_size, epochs => epochs, lr => lr, beta1 => beta1);
        set!(beta2 => beta2, epsilon => epsilon, restarts => n_restarts, seed => master_seed);
        set!(converged_threshold => converged_threshold);
        set!(local_minimum_threshold => local_minimum_threshold);
        if self.n_train.is_some() {
            c.n_train = self.n_train;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Trajectory CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the embedded dataset CSV here.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Trajectory CSV to train on instead of simulating.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory (overrides `output_dir` of the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restarts trained in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write straight into the output directory instead of a fresh
    /// `run-<timestamp>` subdirectory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Trajectory (`t,x,y,z`) or dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// `t,z_truth,z_hat` CSV; metrics go to the same path with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub report: PathBuf,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate(a) => {
            cmd_simulate(&a.config.effective()?, &a.out, a.dataset.as_deref(), out)
        }
        Command::Train(a) => cmd_train(&a, out),
        Command::Reconstruct(a) => cmd_reconstruct(&a.model, &a.data, &a.out, out),
        Command::Report(a) => cmd_report(&a.report, out),
    }
}

pub fn cmd_simulate(
    config: &ExperimentConfig,
    path: &Path,
    dataset_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let traj = simulate(
        &config.system(),
        config.n_points,
        config.burn_in,
        config.master_seed,
    )?;
    write_trajectory(std::io::BufWriter::new(std::fs::File::create(path)?), &traj)?;
    if let Some(p) = dataset_path {
        let ds = build_dataset(&traj)?;
        write_dataset(std::io::BufWriter::new(std::fs::File::create(p)?), &ds)?;
    }
    writeln!(out, "N={} seed={}", traj.len(), traj.seed())?;
    Ok(0)
}

/// Picks the directory a `train` run writes into.
fn prepare_output_dir(base: &Path, force: bool) -> Result<PathBuf> {
    if force {
        std::fs::create_dir_all(base)?;
        return Ok(base.to_path_buf());
    }
    std::fs::create_dir_all(base)?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    for k in 0.. {
        let name = if k == 0 {
            format!("run-{stamp}")
        } else {
            format!("run-{stamp}-{k}")
        };
        let dir = base.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let mut config = args.config.effective()?;
    if let Some(dir) = &args.out {
        config.output_dir = dir.clone();
    }
    let settings = config.restart_settings(args.jobs);

    let outcome = match &args.data {
        Some(path) => {
            let cols = read_columns_file(path)?;
            let traj = trajectory_from_columns(&cols, config.system(), config.master_seed)?;
            let n_train = config
                .n_train
                .unwrap_or_else(|| default_n_train(traj.len()));
            config.n_train = Some(n_train);
            let (train_set, test_set) = split(&build_dataset(&traj)?, n_train)?;
            run_restarts_on(train_set, test_set, Some(&config.system()), &settings)?
        }
        None => {
            config = config.resolved();
            run_restarts_detailed(&config.system(), &config.dataset(), &settings)?
        }
    };

    let dir = prepare_output_dir(&config.output_dir, args.force)?;
    write_train_outputs(&dir, &config, &outcome)?;

    let report = &outcome.report;
    let counts = report.cluster_counts;
    writeln!(out, "output: {}", dir.display())?;
    writeln!(
        out,
        "clusters: converged={} local_minimum={} failed={}",
        counts.converged, counts.local_minimum, counts.failed
    )?;
    if let Some(best) = report.best() {
        writeln!(
            out,
            "best run #{}: r2_prediction={:.6} r2_reconstruction={:.6} slope_sign={}",
            best.restart_index,
            best.r2_prediction,
            best.r2_reconstruction,
            best.reconstruction_slope_sign
        )?;
    }
    Ok(if counts.converged > 0 {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn write_train_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    outcome: &ExperimentOutcome,
) -> Result<()> {
    let report = &outcome.report;
    std::fs::write(dir.join("config.json"), config.to_json()?)?;
    std::fs::write(dir.join("report.json"), report.to_json()?)?;
    if let Some(net) = outcome.best_net() {
        net.save(&dir.join("best_model.json"))?;
    }
    write_dataset(
        std::io::BufWriter::new(std::fs::File::create(dir.join("test_dataset.csv"))?),
        &outcome.test_set,
    )?;

    let mut summary = csv::Writer::from_path(dir.join("runs.csv"))?;
    summary.write_record([
        "restart_index",
        "seed",
        "final_train_loss",
        "r2_prediction",
        "r2_reconstruction",
        "slope_sign",
        "cluster",
    ])?;
    for r in &report.records {
        let cluster = serde_json::to_value(r.cluster)?;
        summary.write_record([
            r.restart_index.to_string(),
            r.seed.to_string(),
            r.final_train_loss.to_string(),
            r.r2_prediction.to_string(),
            r.r2_reconstruction.to_string(),
            r.reconstruction_slope_sign.to_string(),
            cluster.as_str().unwrap_or_default().to_string(),
        ])?;
    }
    summary.flush()?;

    let names: Vec<String> = (0..report.records.len())
        .map(|i| format!("run_{i:02}"))
        .collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let curves: Vec<&[f64]> = report
        .records
        .iter()
        .map(|r| r.learning_curve.as_slice())
        .collect();
    write_columns_file(&dir.join("learning_curves.csv"), &name_refs, &curves, false)?;

    let models = dir.join("models");
    let series = dir.join("series");
    std::fs::create_dir_all(&models)?;
    std::fs::create_dir_all(&series)?;
    let test = &outcome.test_set;
    for (name, net) in names.iter().zip(&outcome.nets) {
        net.save(&models.join(format!("{name}.json")))?;
        let pred = net.predict_batch(&test.y_embed, &test.x_prev)?;
        let z_hat = net.reconstruct(&test.y_embed)?;
        write_columns_file(
            &series.join(format!("{name}.csv")),
            &["x_target", "x_pred", "z_truth", "z_hat"],
            &[&test.x_target, &pred, &test.z_truth, &z_hat],
            true,
        )?;
    }
    Ok(())
}

/// Metrics written next to a reconstruction CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSummary {
    pub n: usize,
    pub r2: f64,
    pub slope_sign: i8,
}

fn load_rows(path: &Path) -> Result<EmbeddedDataset> {
    let cols = read_columns_file(path)?;
    if cols.has_header(&TRAJECTORY_HEADER) {
        let traj = trajectory_from_columns(&cols, LogisticSystemParams::default(), 0)?;
        build_dataset(&traj)
    } else if cols.has_header(&DATASET_HEADER) {
        dataset_from_columns(&cols)
    } else {
        Err(Error::Format(format!(
            "{}: header `{}` is neither a trajectory nor a dataset",
            path.display(),
            cols.header.join(",")
        )))
    }
}

pub fn cmd_reconstruct(model: &Path, data: &Path, path: &Path, out: &mut dyn Write) -> Result<i32> {
    let net = MapperCoachNet::load(model)?;
    let ds = load_rows(data)?;
    if ds.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} has no rows",
            data.display()
        )));
    }
    let z_hat = net.reconstruct(&ds.y_embed)?;
    write_columns_file(path, &["z_truth", "z_hat"], &[&ds.z_truth, &z_hat], true)?;

    let summary = ReconstructionSummary {
        n: ds.len(),
        r2: r_squared(&z_hat, &ds.z_truth)?,
        slope_sign: slope_sign(&ds.z_truth, &z_hat)?,
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(path.with_extension("json"), text)?;
    writeln!(
        out,
        "n={} r2={:.6} slope_sign={}",
        summary.n, summary.r2, summary.slope_sign
    )?;
    Ok(0)
}

pub fn cmd_report(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let report = EvaluationReport::from_json(&std::fs::read_to_string(path)?)?;
    let Some(best) = report.best() else {
        return Err(Error::InsufficientData("report contains no runs".into()));
    };
    let c = report.cluster_counts;
    writeln!(out, "runs: {}", report.records.len())?;
    writeln!(
        out,
        "clusters: converged={} local_minimum={} failed={}",
        c.converged, c.local_minimum, c.failed
    )?;
    writeln!(
        out,
        "best run: #{} (seed {}) r2_prediction={:.6} r2_reconstruction={:.6} slope_sign={} final_train_loss={:e}",
        best.restart_index,
        best.seed,
        best.r2_prediction,
        best.r2_reconstruction,
        best.reconstruction_slope_sign,
        best.final_train_loss
    )?;
    match report.pred_rec_correlation {
        Some(r) => writeln!(out, "prediction-reconstruction correlation: {r:.6}")?,
        None => writeln!(
            out,
            "prediction-reconstruction correlation: n/a (<2 estimable runs)"
        )?,
    }
    match report.oracle_ceiling {
        Some(v) => writeln!(out, "oracle ceiling: {v:.12}")?,
        None => writeln!(out, "oracle ceiling: n/a")?,
    }
    Ok(0)
}
