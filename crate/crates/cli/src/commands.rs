use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flock_reid::assignment::{brute_force_assignment, solve_min_assignment, Sense, SquareMatrix};
use flock_reid::pipeline::{derive_seed, run_reid, run_sweep, ExperimentConfig};
use flock_reid::{
    flock_similarity_grid, perturb_ordering, rank1_accuracy, synth_similarity, PerturbationModel,
};

use crate::config::ConfigFile;
use crate::formats::{self, write_atomic};
use crate::CliError;

/// Tolerance for the solver-versus-enumeration self-check.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "flock-reid",
    version,
    about = "Flock-similarity vehicle re-identification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match every query row of a similarity matrix to a gallery column.
    Reid(ReidArgs),
    /// Run a seeded synthetic experiment grid and write a CSV report.
    Sweep(SweepArgs),
    /// Render individual or flock similarities as an ASCII PGM image.
    Heatmap(HeatmapArgs),
    /// Emit the (x, y) order scatter of a camera ordering.
    Scatter(ScatterArgs),
    /// Cross-check the Hungarian solver against exhaustive enumeration.
    Oracle(OracleArgs),
    /// Generate a synthetic similarity matrix and its ground-truth ordering.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ReidArgs {
    #[arg(long)]
    pub similarity: PathBuf,
    #[arg(long)]
    pub flock_size: usize,
    /// Ground-truth Camera2 position per query; prints rank-1 accuracy.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Prediction file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated vehicle counts [default: 50,100,200].
    #[arg(long)]
    pub n_list: Option<String>,
    /// Comma-separated odd flock sizes [default: 1,3,5,7,9].
    #[arg(long)]
    pub flock_sizes: Option<String>,
    /// Comma-separated scales or `start..end:step` [default: 0].
    #[arg(long)]
    pub scales: Option<String>,
    /// Repetitions per cell [default: 20].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    /// Record per-cell wall time in the `wall_ms` column (otherwise 0).
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub similarity: PathBuf,
    #[arg(long)]
    pub flock_size: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long)]
    pub ordering: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 7)]
    pub max_n: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output similarity matrix (CSV).
    #[arg(long)]
    pub similarity: PathBuf,
    /// Output ground-truth ordering.
    #[arg(long)]
    pub ordering: PathBuf,
}

/// Runs a parsed command, returning what it prints on standard output.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Reid(a) => cmd_reid(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::Scatter(a) => cmd_scatter(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

pub fn cmd_reid(a: ReidArgs) -> Result<String, CliError> {
    let p = formats::read_matrix(&a.similarity)?;
    let pred = run_reid(&p, a.flock_size)?;
    let mut lines = String::new();
    for (q, g) in pred.iter().enumerate() {
        writeln!(lines, "{q},{g}").unwrap();
    }
    let mut stdout = String::new();
    match &a.output {
        Some(path) => write_atomic(path, &lines)?,
        None => stdout.push_str(&lines),
    }
    if let Some(truth_path) = &a.truth {
        let truth = formats::read_ordering(truth_path)?;
        if truth.len() != pred.len() {
            return Err(CliError::Usage(format!(
                "{}: {} entries for {} queries",
                truth_path.display(),
                truth.len(),
                pred.len()
            )));
        }
        writeln!(stdout, "rank1={:.4}", rank1_accuracy(&truth, &pred)?).unwrap();
    }
    Ok(stdout)
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--{flag}: cannot parse {t:?}")))
        })
        .collect()
}

/// Comma-separated values or `start..end:step`. The range form includes
/// `end` when `step` divides the span.
pub fn parse_scales(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::Usage(format!("--scales {text:?}: {m}"));
    let Some((range, step)) = text.split_once(':') else {
        return parse_list("scales", text);
    };
    let (start, end) = range
        .split_once("..")
        .ok_or_else(|| bad("expected start..end:step"))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !end.is_finite() || end < start {
        return Err(bad("need finite start <= end and step > 0"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        // Round off accumulation so 0.1 steps print as 0.3, not 0.30000000000000004.
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn build_sweep_config(a: &SweepArgs) -> Result<ExperimentConfig, CliError> {
    let file = match &a.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let s = &file.sweep;
    let n_vehicles = match &a.n_list {
        Some(t) => parse_list("n-list", t)?,
        None => s.n_list.clone().unwrap_or_else(|| vec![50, 100, 200]),
    };
    let flock_sizes = match &a.flock_sizes {
        Some(t) => parse_list("flock-sizes", t)?,
        None => s.flock_sizes.clone().unwrap_or_else(|| vec![1, 3, 5, 7, 9]),
    };
    let scales = match &a.scales {
        Some(t) => parse_scales(t)?,
        None => s.scales.clone().unwrap_or_else(|| vec![0.0]),
    };
    let cfg = ExperimentConfig {
        n_vehicles,
        flock_sizes,
        scales,
        trials: a.trials.or(s.trials).unwrap_or(20),
        appearance: file.appearance(),
        seed: a.seed.or(s.seed).unwrap_or(0),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_sweep(a: SweepArgs) -> Result<String, CliError> {
    let cfg = build_sweep_config(&a)?;
    let report = run_sweep(&cfg)?;
    write_atomic(&a.output, &formats::format_report(&report, a.wall_time))?;
    Ok(String::new())
}

pub fn cmd_heatmap(a: HeatmapArgs) -> Result<String, CliError> {
    let p = formats::read_matrix(&a.similarity)?;
    let grid = flock_similarity_grid(&p, a.flock_size)?;
    write_atomic(&a.output, &formats::format_pgm(&grid))?;
    Ok(String::new())
}

pub fn cmd_scatter(a: ScatterArgs) -> Result<String, CliError> {
    let o = formats::read_ordering(&a.ordering)?;
    write_atomic(&a.output, &formats::format_scatter(&o))?;
    Ok(String::new())
}

pub fn cmd_oracle(a: OracleArgs) -> Result<String, CliError> {
    let cap = flock_reid::assignment::DEFAULT_ORACLE_CAP;
    if a.max_n == 0 || a.max_n > cap {
        return Err(CliError::Usage(format!(
            "--max-n must be between 1 and {cap}, got {}",
            a.max_n
        )));
    }
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut out = String::new();
    let mut failed = Vec::new();
    for n in 1..=a.max_n {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(a.seed, &[n as u64]));
        let mut worst = 0.0f64;
        for _ in 0..a.trials {
            let values = (0..n * n).map(|_| rng.random::<f64>()).collect();
            let m = SquareMatrix::new(n, values)?;
            let fast = solve_min_assignment(&m)?.objective;
            let slow = brute_force_assignment(&m, Sense::Min)?.objective;
            worst = worst.max((fast - slow).abs());
        }
        let ok = worst <= ORACLE_TOLERANCE;
        if !ok {
            failed.push(n);
        }
        writeln!(
            out,
            "n={n} trials={} max_abs_diff={worst:.3e} {}",
            a.trials,
            if ok { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Verification(format!(
            "{out}solver disagrees with enumeration for n in {failed:?}"
        )))
    }
}

pub fn cmd_synth(a: SynthArgs) -> Result<String, CliError> {
    let file = match &a.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let ordering = perturb_ordering(
        a.n,
        &PerturbationModel {
            scale: a.scale,
            seed: derive_seed(a.seed, &[1]),
        },
    )?;
    let appearance = file.appearance().with_seed(derive_seed(a.seed, &[2]));
    let p = synth_similarity(&ordering, &appearance)?;
    write_atomic(&a.similarity, &formats::format_matrix(&p))?;
    write_atomic(&a.ordering, &formats::format_ordering(&ordering))?;
    Ok(String::new())
}
