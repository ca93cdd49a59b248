//! Command-line front end: seeded simulations of both exchange models, the
//! calibrated flip model, and the pre/post trial reanalysis, all emitting
//! provenance-headed tables or a structured JSON report.
//!
//! Examples:
//!   crowdvote simulate-binary --n 1000 --share 0.6 --f-min 0.2 --f-maj 0 \
//!       --steps 50 --runs 100 --seed 7 -o trajectories.csv
//!   crowdvote figdata a1 --preset paper --runs 2000 --seed 7 -o a1.csv
//!   crowdvote reanalyze --input trials.csv --resolution 0.01 -o report.json

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crowdvote::binary::{simulate, BinaryPopulation};
use crowdvote::calibrated::{
    accuracy_response_curve, simulate_group, CalibratedGroupConfig, CurveVariant, RevisionCurve,
};
use crowdvote::degroot::{
    complete_network_round, grid_points, short_term_consistency, BeliefDistribution,
    ConsistencyConfig, MatchPolicy,
};
use crowdvote::reanalysis::{
    build_report, parse_trials, write_trials, ReanalysisReport, Trial, TrialFit,
};
use crowdvote::report::{fmt_f64, write_csv, write_json, Provenance};
use crowdvote::rng::run_rng;
use crowdvote::stats::EstimateVector;

/// Environment variable that redirects relative output paths.
const OUTPUT_DIR_ENV: &str = "CROWDVOTE_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "crowdvote",
    version,
    about = "Social-influence dynamics of collective binary decisions"
)]
struct Cli {
    /// Worker threads for independent runs (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate vote-only exchange: agents flip toward the weighted majority
    SimulateBinary(SimulateBinaryArgs),
    /// Simulate numeric exchange on a complete network with uniform self-weights
    SimulateDegroot(SimulateDegrootArgs),
    /// Simulate the empirically calibrated revision model for one start
    SimulateCalibrated(SimulateCalibratedArgs),
    /// Sweep quantile thresholds over pre/post estimate trials
    Reanalyze(ReanalyzeArgs),
    /// Emit figure-ready tables
    #[command(subcommand)]
    Figdata(FigdataCommand),
}

#[derive(Args)]
struct SimulateBinaryArgs {
    /// Population size (ignored when --beliefs is given)
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Initial probability of belief 1; each run samples a binomial start
    #[arg(long, default_value_t = 0.5)]
    share: f64,
    /// Place exactly round(n * share) agents on belief 1 instead of sampling
    #[arg(long)]
    exact_share: bool,
    /// File with one 0/1 belief per line (overrides --n/--share)
    #[arg(long)]
    beliefs: Option<PathBuf>,
    /// File with one weight per line, normalized to sum 1 (default uniform)
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    f_min: f64,
    #[arg(long)]
    f_maj: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateDegrootArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Revision rounds (ignored with --converge)
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    /// Iterate until the belief spread falls below --spread-tol
    #[arg(long)]
    converge: bool,
    #[arg(long, default_value_t = 1e-12)]
    spread_tol: f64,
    /// Initial belief distribution: normal | lognormal
    #[arg(long, default_value = "normal")]
    dist: String,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Emit each run as a trial in the reanalysis input format
    #[arg(long)]
    emit_trials: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateCalibratedArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    rounds: usize,
    /// Initial accurate share
    #[arg(long)]
    share: f64,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Revision-curve file (default: bundled curve)
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Apply the accuracy/revision adjustment
    #[arg(long)]
    with_accuracy_modifier: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReanalyzeArgs {
    /// Trials file: dataset,trial_id,subject_id,question_id,truth,pre_estimate,post_estimate
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    resolution: f64,
    /// JSON report path (default stdout)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the flat tables as delimited files into this directory
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FigdataCommand {
    /// Accuracy-response curve of the calibrated model (plain and
    /// accuracy-modified variants)
    Fig2(Fig2Args),
    /// Binned accuracy-change curves from a trials file, split by predicted
    /// direction
    Fig3(Fig3Args),
    /// Short-term consistency of the numeric-exchange predictor per
    /// threshold quantile
    A1(A1Args),
}

#[derive(Args)]
struct Fig2Args {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    rounds: usize,
    #[arg(long, default_value_t = 2000)]
    runs: usize,
    #[arg(long, default_value_t = 0.05)]
    grid_resolution: f64,
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Fig3Args {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    resolution: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct A1Args {
    /// Named configuration: paper | sec325-n1000 | ec3-n100 | ec3-n1000
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// normal | lognormal
    #[arg(long)]
    dist: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    grid_resolution: f64,
    /// Count an unchanged majority as inconsistent with a Grow prediction
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // ignore the error if a pool was already installed
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::SimulateBinary(args) => simulate_binary(args),
        Command::SimulateDegroot(args) => simulate_degroot(args),
        Command::SimulateCalibrated(args) => simulate_calibrated(args),
        Command::Reanalyze(args) => reanalyze(args),
        Command::Figdata(FigdataCommand::Fig2(args)) => figdata_fig2(args),
        Command::Figdata(FigdataCommand::Fig3(args)) => figdata_fig3(args),
        Command::Figdata(FigdataCommand::A1(args)) => figdata_a1(args),
    }
}

/// Missing seeds are drawn from OS entropy and echoed in the provenance
/// header so any run can be reproduced.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

/// Relative output paths are placed under $CROWDVOTE_OUTPUT_DIR when set.
fn resolve_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn with_output<F>(output: &Option<PathBuf>, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match output {
        Some(path) => {
            let path = resolve_path(path);
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .with_context(|| format!("creating {}", parent.display()))?;
                }
            }
            let file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            write(&mut out)?;
            out.flush()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            write(&mut out)
        }
    }
}

fn read_curve(path: &Option<PathBuf>) -> Result<RevisionCurve> {
    match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(RevisionCurve::from_delimited(&text)?)
        }
        None => Ok(RevisionCurve::default_curve()),
    }
}

fn read_value_lines(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .with_context(|| format!("{}:{}: not a number", path.display(), idx + 1))?;
        values.push(v);
    }
    Ok(values)
}

fn source_label(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map_or_else(|| "default".to_string(), |p| p.display().to_string())
}

fn simulate_binary(args: SimulateBinaryArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let beliefs_from_file = args
        .beliefs
        .as_ref()
        .map(|p| -> Result<Vec<bool>> {
            read_value_lines(p)?
                .into_iter()
                .map(|v| match v {
                    v if v == 0.0 => Ok(false),
                    v if v == 1.0 => Ok(true),
                    other => bail!("belief values must be 0 or 1, found {other}"),
                })
                .collect()
        })
        .transpose()?;
    let n = beliefs_from_file.as_ref().map_or(args.n, Vec::len);
    let weights = match &args.weights {
        Some(p) => {
            let raw = read_value_lines(p)?;
            if raw.len() != n {
                bail!("{} weights for {} agents", raw.len(), n);
            }
            let sum: f64 = raw.iter().sum();
            if sum <= 0.0 {
                bail!("weights must have a positive sum");
            }
            Some(raw.into_iter().map(|w| w / sum).collect::<Vec<f64>>())
        }
        None => None,
    };

    let provenance = Provenance::new("simulate-binary")
        .with("n", n)
        .with("share", args.share)
        .with("exact_share", args.exact_share)
        .with("beliefs", source_label(&args.beliefs))
        .with("weights", source_label(&args.weights))
        .with("f_min", args.f_min)
        .with("f_maj", args.f_maj)
        .with("steps", args.steps)
        .with("runs", args.runs)
        .with_seed(seed);

    let reweight = |p: BinaryPopulation| -> Result<BinaryPopulation> {
        match &weights {
            Some(w) => Ok(BinaryPopulation::new(
                p.beliefs().to_vec(),
                w.clone(),
                args.f_min,
                args.f_maj,
            )?),
            None => Ok(p),
        }
    };

    let mut rows = Vec::with_capacity(args.runs * (args.steps + 1));
    for run in 0..args.runs {
        let mut rng = run_rng(seed, run as u64);
        let population = match (&beliefs_from_file, args.exact_share) {
            (Some(beliefs), _) => reweight(BinaryPopulation::uniform_weights(
                beliefs.clone(),
                args.f_min,
                args.f_maj,
            )?)?,
            (None, true) => reweight(BinaryPopulation::with_share(
                n,
                args.share,
                args.f_min,
                args.f_maj,
            )?)?,
            (None, false) => reweight(BinaryPopulation::sample_binomial(
                n,
                args.share,
                args.f_min,
                args.f_maj,
                &mut rng,
            )?)?,
        };
        let trajectory = simulate(&population, args.steps, &mut rng);
        for (step, (share, weighted)) in trajectory
            .share_history
            .iter()
            .zip(&trajectory.weighted_share_history)
            .enumerate()
        {
            rows.push(vec![
                run.to_string(),
                step.to_string(),
                fmt_f64(*share),
                fmt_f64(*weighted),
            ]);
        }
    }
    with_output(&args.output, |out| {
        write_csv(
            out,
            &provenance,
            &["run_id", "step", "share", "weighted_share"],
            &rows,
        )?;
        Ok(())
    })
}

fn simulate_degroot(args: SimulateDegrootArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let dist = BeliefDistribution::parse(&args.dist)?;
    if args.n < 2 {
        bail!("population must have at least 2 agents");
    }
    let provenance = Provenance::new("simulate-degroot")
        .with("n", args.n)
        .with("rounds", args.rounds)
        .with("converge", args.converge)
        .with("spread_tol", args.spread_tol)
        .with("dist", dist.name())
        .with("runs", args.runs)
        .with("emit_trials", args.emit_trials)
        .with_seed(seed);

    struct RunResult {
        rounds_used: usize,
        pre: EstimateVector,
        post: EstimateVector,
        truth: f64,
    }

    let max_rounds = 1_000_000usize;
    let mut results = Vec::with_capacity(args.runs);
    for run in 0..args.runs {
        let mut rng = run_rng(seed, run as u64);
        let pre = dist.sample(args.n, &mut rng);
        let self_weights: Vec<f64> = (0..args.n)
            .map(|_| rand::Rng::random::<f64>(&mut rng))
            .collect();
        let truth = dist.sample(1, &mut rng)[0];
        let (post, rounds_used) = if args.converge {
            let mut beliefs = pre.clone();
            let mut round = 0usize;
            loop {
                let max = beliefs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let min = beliefs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                if max - min < args.spread_tol {
                    break;
                }
                if round >= max_rounds {
                    bail!(
                        "run {run}: no convergence after {max_rounds} rounds (spread {:e})",
                        max - min
                    );
                }
                beliefs = complete_network_round(&beliefs, &self_weights);
                round += 1;
            }
            (beliefs, round)
        } else {
            let mut beliefs = pre.clone();
            for _ in 0..args.rounds {
                beliefs = complete_network_round(&beliefs, &self_weights);
            }
            (beliefs, args.rounds)
        };
        results.push(RunResult {
            rounds_used,
            pre: EstimateVector::new(pre)?,
            post: EstimateVector::new(post)?,
            truth,
        });
    }

    if args.emit_trials {
        let trials = results
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Trial::new(
                    "degroot-sim".to_string(),
                    format!("run{i}"),
                    format!("run{i}"),
                    r.truth,
                    r.pre.clone(),
                    r.post.clone(),
                )
            })
            .collect::<crowdvote::Result<Vec<_>>>()?;
        with_output(&args.output, |out| {
            for line in provenance.header_lines() {
                writeln!(out, "{line}")?;
            }
            write_trials(&mut *out, &trials)?;
            Ok(())
        })
    } else {
        let rows: Vec<Vec<String>> = results
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let sorted = r.post.sorted();
                let spread = sorted[sorted.len() - 1] - sorted[0];
                vec![
                    i.to_string(),
                    r.rounds_used.to_string(),
                    fmt_f64(r.pre.mean()),
                    fmt_f64(r.pre.median()),
                    fmt_f64(r.post.mean()),
                    fmt_f64(r.post.median()),
                    fmt_f64(spread),
                    fmt_f64(r.truth),
                ]
            })
            .collect();
        with_output(&args.output, |out| {
            write_csv(
                out,
                &provenance,
                &[
                    "run_id",
                    "rounds",
                    "pre_mean",
                    "pre_median",
                    "post_mean",
                    "post_median",
                    "post_spread",
                    "truth",
                ],
                &rows,
            )?;
            Ok(())
        })
    }
}

fn simulate_calibrated(args: SimulateCalibratedArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let curve = read_curve(&args.curve)?;
    let config = CalibratedGroupConfig::with_size(args.n, args.rounds, args.share, curve)?
        .with_accuracy_modifier(args.with_accuracy_modifier);
    let provenance = Provenance::new("simulate-calibrated")
        .with("n", args.n)
        .with("rounds", args.rounds)
        .with("share", args.share)
        .with("runs", args.runs)
        .with("curve", source_label(&args.curve))
        .with("accuracy_modifier", args.with_accuracy_modifier)
        .with_seed(seed);

    let mut rows = Vec::with_capacity(args.runs);
    for run in 0..args.runs {
        let mut rng = run_rng(seed, run as u64);
        let outcome = simulate_group(&config, &mut rng)?;
        rows.push(vec![
            run.to_string(),
            fmt_f64(outcome.initial_accuracy),
            fmt_f64(outcome.final_accuracy),
            fmt_f64(outcome.change()),
        ]);
    }
    with_output(&args.output, |out| {
        write_csv(
            out,
            &provenance,
            &["run_id", "initial_accuracy", "final_accuracy", "change"],
            &rows,
        )?;
        Ok(())
    })
}

fn reanalyze(args: ReanalyzeArgs) -> Result<()> {
    let file =
        File::open(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let parsed = parse_trials(BufReader::new(file))?;
    for warning in &parsed.warnings {
        eprintln!("warning: {warning}");
    }
    let provenance = Provenance::new("reanalyze")
        .with("input", args.input.display())
        .with("resolution", args.resolution)
        .with("trials", parsed.trials.len())
        .with("warnings", parsed.warnings.len());
    let report = build_report(provenance.clone(), &parsed.trials, args.resolution)?;

    if let Some(dir) = &args.csv_dir {
        let dir = resolve_path(dir);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write_report_tables(&dir, &provenance, &report)?;
    }
    with_output(&args.output, |out| {
        write_json(&mut *out, &report)?;
        Ok(())
    })
}

/// Flat delimited exports of every table in the report.
fn write_report_tables(
    dir: &Path,
    provenance: &Provenance,
    report: &ReanalysisReport,
) -> Result<()> {
    let open = |name: &str| -> Result<BufWriter<File>> {
        let path = dir.join(name);
        Ok(BufWriter::new(File::create(&path).with_context(|| {
            format!("creating {}", path.display())
        })?))
    };

    let summary_rows: Vec<Vec<String>> = report
        .datasets
        .iter()
        .chain(std::iter::once(&report.pooled))
        .map(|s| {
            vec![
                s.dataset_id.clone(),
                fmt_f64(s.resolution),
                s.trials.to_string(),
                s.degenerate_trials.to_string(),
                fmt_f64(s.mean_fit),
                fmt_f64(s.stderr_fit),
                fmt_f64(s.mean_fit_strict),
                fmt_f64(s.stderr_fit_strict),
                fmt_f64(s.between_fraction),
                fmt_f64(s.between_fraction_trial_mean),
                fmt_f64(s.mean_improved_fraction),
            ]
        })
        .collect();
    write_csv(
        &mut open("summary.csv")?,
        provenance,
        &[
            "dataset",
            "resolution",
            "trials",
            "degenerate_trials",
            "mean_fit",
            "stderr_fit",
            "mean_fit_strict",
            "stderr_fit_strict",
            "between_fraction",
            "between_fraction_trial_mean",
            "mean_improved_fraction",
        ],
        &summary_rows,
    )?;

    let mut resolution_rows = Vec::new();
    for row in &report.resolution_table {
        for fit in &row.fits {
            resolution_rows.push(vec![
                row.dataset_id.clone(),
                fmt_f64(fit.resolution),
                fmt_f64(fit.mean_fit),
                fmt_f64(fit.mean_fit_strict),
            ]);
        }
    }
    write_csv(
        &mut open("resolution_table.csv")?,
        provenance,
        &["dataset", "resolution", "mean_fit", "mean_fit_strict"],
        &resolution_rows,
    )?;

    write_csv(
        &mut open("fig3.csv")?,
        provenance,
        &["series", "initial_accuracy", "mean_change", "records"],
        &fig3_rows(report),
    )?;

    let a4_rows: Vec<Vec<String>> = report
        .fig3
        .a4
        .iter()
        .map(|b| {
            vec![
                fmt_f64(b.initial_accuracy),
                b.improved_matched.to_string(),
                b.improved_counted.to_string(),
                b.not_improved_matched.to_string(),
                b.not_improved_counted.to_string(),
            ]
        })
        .collect();
    write_csv(
        &mut open("fig_a4.csv")?,
        provenance,
        &[
            "initial_accuracy",
            "improved_matched",
            "improved_counted",
            "not_improved_matched",
            "not_improved_counted",
        ],
        &a4_rows,
    )?;

    let trial_rows: Vec<Vec<String>> = report
        .trials
        .iter()
        .map(|t| {
            let TrialFit {
                counted,
                excluded,
                matched_weak,
                matched_strict,
                unchanged,
            } = t.fit;
            vec![
                t.dataset_id.clone(),
                t.trial_id.clone(),
                t.question_id.clone(),
                t.subjects.to_string(),
                counted.to_string(),
                excluded.to_string(),
                matched_weak.to_string(),
                matched_strict.to_string(),
                unchanged.to_string(),
                t.mean_improved.to_string(),
                t.between_count.to_string(),
            ]
        })
        .collect();
    write_csv(
        &mut open("trials.csv")?,
        provenance,
        &[
            "dataset",
            "trial_id",
            "question_id",
            "subjects",
            "counted",
            "excluded",
            "matched_weak",
            "matched_strict",
            "unchanged",
            "mean_improved",
            "between_count",
        ],
        &trial_rows,
    )?;
    Ok(())
}

fn fig3_rows(report: &ReanalysisReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (series, bins) in [("grow", &report.fig3.grow), ("shrink", &report.fig3.shrink)] {
        for bin in bins {
            rows.push(vec![
                series.to_string(),
                fmt_f64(bin.initial_accuracy),
                fmt_f64(bin.mean_change),
                bin.records.to_string(),
            ]);
        }
    }
    rows
}

fn figdata_fig2(args: Fig2Args) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let curve = read_curve(&args.curve)?;
    let grid = grid_points(args.grid_resolution)?;
    let provenance = Provenance::new("figdata-fig2")
        .with("n", args.n)
        .with("rounds", args.rounds)
        .with("runs", args.runs)
        .with("grid_resolution", args.grid_resolution)
        .with("curve", source_label(&args.curve))
        .with_seed(seed);
    let points = accuracy_response_curve(
        args.n,
        args.rounds,
        &curve,
        &grid,
        args.runs,
        seed,
        &[CurveVariant::Plain, CurveVariant::AccuracyModified],
    )?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.variant.name().to_string(),
                fmt_f64(p.initial_accuracy),
                fmt_f64(p.mean_change),
                fmt_f64(p.stderr),
                p.runs.to_string(),
            ]
        })
        .collect();
    with_output(&args.output, |out| {
        write_csv(
            out,
            &provenance,
            &[
                "variant",
                "initial_accuracy",
                "mean_change",
                "stderr",
                "runs",
            ],
            &rows,
        )?;
        Ok(())
    })
}

fn figdata_fig3(args: Fig3Args) -> Result<()> {
    let file =
        File::open(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let parsed = parse_trials(BufReader::new(file))?;
    for warning in &parsed.warnings {
        eprintln!("warning: {warning}");
    }
    let provenance = Provenance::new("figdata-fig3")
        .with("input", args.input.display())
        .with("resolution", args.resolution)
        .with("trials", parsed.trials.len());
    let report = build_report(provenance.clone(), &parsed.trials, args.resolution)?;
    with_output(&args.output, |out| {
        write_csv(
            out,
            &provenance,
            &["series", "initial_accuracy", "mean_change", "records"],
            &fig3_rows(&report),
        )?;
        Ok(())
    })
}

fn a1_preset(name: &str) -> Result<(usize, usize, usize, BeliefDistribution)> {
    match name {
        // the large-population short-term batch: 10,000 runs of N=1000
        "paper" | "sec325-n1000" => Ok((1000, 10, 10_000, BeliefDistribution::Normal)),
        // the smaller numeric-calculation batches: 1,000 runs
        "ec3-n100" => Ok((100, 10, 1000, BeliefDistribution::Normal)),
        "ec3-n1000" => Ok((1000, 10, 1000, BeliefDistribution::Normal)),
        other => bail!("unknown preset '{other}' (try paper, sec325-n1000, ec3-n100, ec3-n1000)"),
    }
}

fn figdata_a1(args: A1Args) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let (mut n, mut rounds, mut runs, mut dist) = match &args.preset {
        Some(name) => a1_preset(name)?,
        None => (1000, 10, 1000, BeliefDistribution::Normal),
    };
    if let Some(v) = args.n {
        n = v;
    }
    if let Some(v) = args.rounds {
        rounds = v;
    }
    if let Some(v) = args.runs {
        runs = v;
    }
    if let Some(v) = &args.dist {
        dist = BeliefDistribution::parse(v)?;
    }
    let policy = if args.strict {
        MatchPolicy::Strict
    } else {
        MatchPolicy::UnchangedMatchesGrow
    };
    let config = ConsistencyConfig {
        n,
        rounds,
        runs,
        distribution: dist,
        grid_resolution: args.grid_resolution,
        policy,
        seed,
    };
    let provenance = Provenance::new("figdata-a1")
        .with("preset", args.preset.as_deref().unwrap_or("none"))
        .with("n", n)
        .with("rounds", rounds)
        .with("runs", runs)
        .with("dist", dist.name())
        .with("grid_resolution", args.grid_resolution)
        .with("strict", args.strict)
        .with_seed(seed);
    let table = short_term_consistency(&config)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|row| {
            vec![
                fmt_f64(row.quantile),
                fmt_f64(row.threshold),
                row.runs.to_string(),
                row.matched.to_string(),
                row.unmatched.to_string(),
                row.boundary.to_string(),
                row.unchanged.to_string(),
                row.consistency().map_or_else(String::new, fmt_f64),
            ]
        })
        .collect();
    with_output(&args.output, |out| {
        write_csv(
            out,
            &provenance,
            &[
                "threshold_quantile",
                "threshold",
                "runs",
                "matched",
                "unmatched",
                "boundary",
                "unchanged",
                "consistency",
            ],
            &rows,
        )?;
        Ok(())
    })
}
