//! `leaper` — command-line front end wiring the modeling pipeline end to
//! end: sample a design, generate synthetic measurements, train a base
//! model, adapt it to a new environment from a few shots, predict, evaluate,
//! and compare environments.
//!
//! Contract:
//! * exit 0 on success, 1 on validation/usage/file errors, 2 on
//!   internal (panic-class) faults;
//! * stdout carries only the declared JSON/CSV payloads; everything else
//!   (progress notes, errors) goes to stderr, errors as a single
//!   `error: ...` line;
//! * every subcommand is deterministic given its flags — all randomness
//!   flows from `--seed`-style inputs, and `--threads` (or the
//!   `LEAPER_THREADS` environment variable) only caps parallelism.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use leaper_core::{
    accuracy_from_mre, canonical_json, derive_related_env, gen_environment, gen_profile,
    lhs_sample, load_model, mre, pair_up, read_dataset, read_plan, read_space, read_surface,
    relatedness_report, save_model, train_base_model, transfer, write_dataset, write_plan,
    write_predictions, ApplicationProfile, Configuration, ConfigurationSpace, Dataset, Error,
    FewShotSet, GpKernelParams, HistogramSpec, HyperGrid, LoadedModel, Metric,
    OptimizationOption, RelatednessSpec, Result, Sample, SelectionMode, TransferOptions,
    TreeParams,
};

#[derive(Parser)]
#[command(
    name = "leaper",
    version,
    about = "Performance/resource prediction for accelerator configuration spaces, \
             with few-shot transfer between environments"
)]
struct Cli {
    /// Cap on worker threads (default: all cores; LEAPER_THREADS as fallback).
    /// Thread count never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a Latin-hypercube sampling plan over a configuration space.
    Doe {
        /// Configuration-space JSON.
        #[arg(long)]
        space: PathBuf,
        /// Number of configurations to draw.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output plan JSON.
        #[arg(long)]
        out: PathBuf,
    },

    /// Generate a synthetic labeled environment (dataset CSV plus a
    /// `<out>.params.json` sidecar with the effective surface parameters).
    Synth {
        /// Configuration-space JSON.
        #[arg(long)]
        space: PathBuf,
        /// Surface-parameters JSON (the source environment's ground truth).
        #[arg(long)]
        params: PathBuf,
        /// Derive a related target environment at this relatedness level
        /// (0 < R ≤ 1) instead of labeling with --params directly.
        #[arg(long)]
        relatedness: Option<f64>,
        /// Seed of the relatedness perturbation draw.
        #[arg(long, default_value_t = 0)]
        rel_seed: u64,
        /// Perturbation retention exponent for --relatedness (1 = pure blend).
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Sampling plan JSON; omitted = label the full space.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Identifier written into the dataset's env_id column.
        #[arg(long, default_value = "env")]
        env_id: String,
        /// Seed of the application-profile draw.
        #[arg(long, default_value_t = 0)]
        profile_seed: u64,
        /// Number of application-profile features.
        #[arg(long, default_value_t = 5)]
        profile_features: usize,
        /// Output dataset CSV.
        #[arg(long)]
        out: PathBuf,
    },

    /// Train a base model (random forest + gradient boosting, combined) on a
    /// labeled dataset.
    TrainBase {
        /// Labeled dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Configuration-space JSON.
        #[arg(long)]
        space: PathBuf,
        /// Metric to model: exec_ms, bram, dsp, ff or lut.
        #[arg(long, default_value = "exec_ms")]
        target: String,
        /// Cross-validation folds for hyperparameter selection.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Number of input features kept by importance-based selection.
        #[arg(long, default_value_t = 100)]
        k_features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output model JSON.
        #[arg(long)]
        out: PathBuf,
    },

    /// Adapt a base model to a new environment from a few labeled shots.
    Transfer {
        /// Base model JSON (kind "base").
        #[arg(long)]
        base: PathBuf,
        /// Few-shot labeled dataset CSV from the target environment.
        #[arg(long)]
        shots: PathBuf,
        /// The source-environment dataset the base model was trained on.
        #[arg(long)]
        source_doe: PathBuf,
        /// Labeled validation CSV; selects the transfer learner by holdout
        /// error instead of leave-one-out on the shots.
        #[arg(long)]
        holdout: Option<PathBuf>,
        /// Candidate-training iterations per learner family.
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Boosting rounds of the instance-transfer learner.
        #[arg(long, default_value_t = 20)]
        boost_rounds: usize,
        /// Depth cap of its weak trees (0 = unbounded).
        #[arg(long, default_value_t = 3)]
        boost_depth: usize,
        /// RBF kernel length scale of the GP learner.
        #[arg(long, default_value_t = 1.0)]
        gp_length_scale: f64,
        /// RBF kernel signal variance of the GP learner.
        #[arg(long, default_value_t = 1.0)]
        gp_signal_variance: f64,
        /// Observation-noise variance of the GP learner.
        #[arg(long, default_value_t = 1e-4)]
        gp_noise: f64,
        /// Output model JSON.
        #[arg(long)]
        out: PathBuf,
    },

    /// Predict the model's target metric for every row of a dataset.
    Predict {
        /// Model JSON (base or transfer).
        #[arg(long)]
        model: PathBuf,
        /// Dataset CSV with profile and option columns (labels optional).
        #[arg(long)]
        data: PathBuf,
        /// Output predictions CSV.
        #[arg(long)]
        out: PathBuf,
    },

    /// Score a model against labeled data; prints
    /// {"mre": f, "accuracy_pct": f, "n": i} on stdout.
    Evaluate {
        /// Model JSON (base or transfer).
        #[arg(long)]
        model: PathBuf,
        /// Labeled dataset CSV carrying the model's target metric.
        #[arg(long)]
        data: PathBuf,
    },

    /// Compare two environments' response distributions; prints
    /// {"jsd": f, "pearson": f|null, "bins": i} on stdout.
    Relatedness {
        /// First dataset CSV.
        #[arg(long)]
        a: PathBuf,
        /// Second dataset CSV.
        #[arg(long)]
        b: PathBuf,
        /// Metric compared: exec_ms, bram, dsp, ff or lut.
        #[arg(long, default_value = "exec_ms")]
        metric: String,
        /// Histogram bins over the union value range.
        #[arg(long, default_value_t = 32)]
        bins: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; they are not failures.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    // Panics (internal faults) must surface as a one-line error and exit
    // code 2, distinct from ordinary validation failures.
    panic::set_hook(Box::new(|_| {}));
    match panic::catch_unwind(AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            eprintln!("error: internal: {message}");
            ExitCode::from(2)
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("LEAPER_THREADS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "LEAPER_THREADS must be a positive integer, got {v:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Doe { space, n, seed, out } => cmd_doe(&space, n, seed, &out),
        Command::Synth {
            space,
            params,
            relatedness,
            rel_seed,
            gamma,
            plan,
            env_id,
            profile_seed,
            profile_features,
            out,
        } => cmd_synth(
            &space,
            &params,
            relatedness,
            rel_seed,
            gamma,
            plan.as_deref(),
            &env_id,
            profile_seed,
            profile_features,
            &out,
        ),
        Command::TrainBase { data, space, target, folds, k_features, seed, out } => {
            cmd_train_base(&data, &space, &target, folds, k_features, seed, &out)
        }
        Command::Transfer {
            base,
            shots,
            source_doe,
            holdout,
            iterations,
            seed,
            boost_rounds,
            boost_depth,
            gp_length_scale,
            gp_signal_variance,
            gp_noise,
            out,
        } => cmd_transfer(
            &base,
            &shots,
            &source_doe,
            holdout.as_deref(),
            iterations,
            seed,
            boost_rounds,
            boost_depth,
            GpKernelParams {
                length_scale: gp_length_scale,
                signal_variance: gp_signal_variance,
                noise_variance: gp_noise,
            },
            &out,
        ),
        Command::Predict { model, data, out } => cmd_predict(&model, &data, &out),
        Command::Evaluate { model, data } => cmd_evaluate(&model, &data),
        Command::Relatedness { a, b, metric, bins } => cmd_relatedness(&a, &b, &metric, bins),
    }
}

fn cmd_doe(space_path: &Path, n: usize, seed: u64, out: &Path) -> Result<()> {
    let space = read_space(space_path)?;
    let plan = lhs_sample(&space, n, seed)?;
    write_plan(&plan, out)?;
    eprintln!("wrote {} ({} configurations)", out.display(), plan.configurations.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    space_path: &Path,
    params_path: &Path,
    relatedness: Option<f64>,
    rel_seed: u64,
    gamma: f64,
    plan_path: Option<&Path>,
    env_id: &str,
    profile_seed: u64,
    profile_features: usize,
    out: &Path,
) -> Result<()> {
    let space = read_space(space_path)?;
    let source_params = read_surface(params_path)?;
    let params = match relatedness {
        Some(rho) => {
            let spec = RelatednessSpec::new(rho, gamma, rel_seed)?;
            derive_related_env(&source_params, &spec)
        }
        None => source_params,
    };
    let profile = gen_profile(profile_seed, profile_features);
    let plan = plan_path.map(|p| read_plan(p, &space)).transpose()?;
    let dataset = gen_environment(
        env_id,
        &space,
        &profile,
        &params,
        plan.as_ref().map(|p| p.configurations.as_slice()),
    )?;
    write_dataset(&dataset, out)?;
    let sidecar = out.with_extension("params.json");
    leaper_core::write_surface(&params, &sidecar)?;
    eprintln!(
        "wrote {} ({} samples) and {}",
        out.display(),
        dataset.samples.len(),
        sidecar.display()
    );
    Ok(())
}

fn cmd_train_base(
    data_path: &Path,
    space_path: &Path,
    target: &str,
    folds: usize,
    k_features: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let space = read_space(space_path)?;
    let data = read_dataset(data_path, &space)?;
    let metric: Metric = target.parse()?;
    // The search grid is sized for the inputs the learners will actually
    // see: the feature count that survives selection.
    let dimension =
        data.profile_names().map_or(0, <[String]>::len) + space.encoded_len();
    let grid = HyperGrid::default_for(dimension.min(k_features.max(1)));
    let model = train_base_model(&data, metric, &grid, folds, k_features, seed)?;
    save_model(&LoadedModel::Base(Box::new(model)), out)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_transfer(
    base_path: &Path,
    shots_path: &Path,
    source_doe_path: &Path,
    holdout_path: Option<&Path>,
    iterations: usize,
    seed: u64,
    boost_rounds: usize,
    boost_depth: usize,
    gp: GpKernelParams,
    out: &Path,
) -> Result<()> {
    let base = match load_model(base_path)? {
        LoadedModel::Base(b) => *b,
        LoadedModel::Transfer(_) => {
            return Err(Error::InvalidParameter(
                "--base must be a base model (kind \"base\"), got a transfer model".into(),
            ))
        }
    };
    let shots_data = read_dataset(shots_path, &base.space)?;
    let source = read_dataset(source_doe_path, &base.space)?;
    let selection_mode = match holdout_path {
        Some(p) => SelectionMode::Holdout(read_dataset(p, &base.space)?),
        None => SelectionMode::LoocvOnShots,
    };
    let shots = FewShotSet::new(shots_data.env_id.clone(), shots_data.samples)?;
    let options = TransferOptions {
        max_iterations: iterations,
        selection_mode,
        seed,
        boost_rounds,
        boost_tree: TreeParams {
            max_depth: (boost_depth > 0).then_some(boost_depth),
            ..TreeParams::default()
        },
        gp,
    };
    let model = transfer(&base, &shots, &source, &options)?;
    save_model(&LoadedModel::Transfer(Box::new(model)), out)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn cmd_predict(model_path: &Path, data_path: &Path, out: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let data = read_dataset(data_path, model.space())?;
    let predictions: Vec<f64> = data
        .samples
        .iter()
        .map(|s| model.predict(&s.profile, &s.configuration))
        .collect::<Result<_>>()?;
    write_predictions(&data, model.target_metric(), &predictions, out)?;
    eprintln!("wrote {} ({} predictions)", out.display(), predictions.len());
    Ok(())
}

#[derive(Serialize)]
struct EvaluationReport {
    mre: f64,
    accuracy_pct: f64,
    n: usize,
}

fn cmd_evaluate(model_path: &Path, data_path: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let data = read_dataset(data_path, model.space())?;
    let actual = data.require_metric(model.target_metric())?;
    let predicted: Vec<f64> = data
        .samples
        .iter()
        .map(|s| model.predict(&s.profile, &s.configuration))
        .collect::<Result<_>>()?;
    let pairs = pair_up(&predicted, &actual)?;
    let error = mre(&pairs)?;
    let report =
        EvaluationReport { mre: error, accuracy_pct: accuracy_from_mre(error), n: pairs.len() };
    println!("{}", canonical_json(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct RelatednessOutput {
    jsd: f64,
    pearson: Option<f64>,
    bins: usize,
}

fn cmd_relatedness(a_path: &Path, b_path: &Path, metric: &str, bins: usize) -> Result<()> {
    let metric: Metric = metric.parse()?;
    let a_raw = read_loose_dataset(a_path)?;
    let b_raw = read_loose_dataset(b_path)?;
    let (a, b) = into_shared_datasets(a_raw, b_raw)?;
    let a_values = a.require_metric(metric)?;
    let b_values = b.require_metric(metric)?;
    let spec = HistogramSpec::union_range(bins, &a_values, &b_values)?;
    let report = relatedness_report(&a, &b, metric, &spec)?;
    if let Some(warning) = &report.warning {
        eprintln!("note: {warning}");
    }
    let output =
        RelatednessOutput { jsd: report.jsd, pearson: report.pearson, bins: report.bins };
    println!("{}", canonical_json(&output)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// Space-free dataset reading for `relatedness`
// ---------------------------------------------------------------------------
//
// `relatedness` takes two CSVs and no space file, so the option schema is
// reconstructed from the header (`opt_<i>_<name>` columns carrying level
// indices). Both files must list the same option columns for the paired
// Pearson correlation; the JSD needs only the response columns.

/// One parsed row: profile values, option level indices, measured responses.
type LooseRow = (Vec<f64>, Vec<usize>, BTreeMap<Metric, f64>);

struct LooseTable {
    env_id: String,
    profile_names: Vec<String>,
    option_names: Vec<String>,
    rows: Vec<LooseRow>,
}

fn read_loose_dataset(path: &Path) -> Result<LooseTable> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines.next().ok_or(Error::EmptyInput("dataset file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols[0] != "env_id" {
        return Err(Error::SchemaMismatch(format!(
            "expected column \"env_id\", found {:?}",
            cols[0]
        )));
    }

    let opt_start =
        cols.iter().position(|c| c.starts_with("opt_")).unwrap_or(cols.len());
    let mut opt_end = opt_start;
    while opt_end < cols.len() && cols[opt_end].starts_with("opt_") {
        opt_end += 1;
    }
    let profile_names: Vec<String> =
        cols[1..opt_start].iter().map(|c| (*c).to_owned()).collect();
    let option_names: Vec<String> =
        cols[opt_start..opt_end].iter().map(|c| (*c).to_owned()).collect();
    let mut metrics = Vec::new();
    for c in &cols[opt_end..] {
        match Metric::from_csv_column(c) {
            Some(m) => metrics.push(m),
            None => {
                return Err(Error::SchemaMismatch(format!(
                    "unknown response column {c:?}"
                )))
            }
        }
    }

    let mut env_id: Option<String> = None;
    let mut rows = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Malformed {
                line,
                message: format!("expected {} fields, got {}", cols.len(), fields.len()),
            });
        }
        if env_id.is_none() {
            env_id = Some(fields[0].to_owned());
        }
        let mut profile = Vec::with_capacity(profile_names.len());
        for (f, name) in fields[1..opt_start].iter().zip(&profile_names) {
            let v: f64 = f.parse().map_err(|_| Error::Malformed {
                line,
                message: format!("column {name:?}: invalid number {f:?}"),
            })?;
            profile.push(v);
        }
        let mut levels = Vec::with_capacity(option_names.len());
        for (f, name) in fields[opt_start..opt_end].iter().zip(&option_names) {
            let level: usize = f.parse().map_err(|_| Error::Malformed {
                line,
                message: format!("column {name:?}: invalid level index {f:?}"),
            })?;
            levels.push(level);
        }
        let mut responses = BTreeMap::new();
        for (f, metric) in fields[opt_end..].iter().zip(&metrics) {
            if !f.is_empty() {
                let v: f64 = f.parse().map_err(|_| Error::Malformed {
                    line,
                    message: format!(
                        "column {:?}: invalid number {f:?}",
                        metric.csv_column()
                    ),
                })?;
                responses.insert(*metric, v);
            }
        }
        rows.push((profile, levels, responses));
    }

    Ok(LooseTable {
        env_id: env_id.ok_or(Error::EmptyInput("dataset file has no rows"))?,
        profile_names,
        option_names,
        rows,
    })
}

/// Rebuilds both tables as datasets over one synthetic space (per-option
/// level count = the highest index seen in either file, plus one) so shared
/// configurations pair up for the correlation.
fn into_shared_datasets(a: LooseTable, b: LooseTable) -> Result<(Dataset, Dataset)> {
    let space_for = |names: &[String], tables: &[&LooseTable]| -> Result<ConfigurationSpace> {
        let mut counts = vec![2usize; names.len()];
        for t in tables {
            for (_, levels, _) in &t.rows {
                for (c, &l) in counts.iter_mut().zip(levels) {
                    *c = (*c).max(l + 1);
                }
            }
        }
        let options = names
            .iter()
            .zip(&counts)
            .map(|(col, &count)| {
                let name = col
                    .strip_prefix("opt_")
                    .and_then(|rest| rest.split_once('_'))
                    .map_or(col.as_str(), |(_, n)| n);
                OptimizationOption::categorical(
                    name,
                    (0..count).map(|l| l.to_string()).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConfigurationSpace::new(options))
    };

    // A shared space requires identical option columns; otherwise each table
    // gets its own space and the report downgrades to JSD-only.
    let (space_a, space_b) = if a.option_names == b.option_names {
        let shared = space_for(&a.option_names, &[&a, &b])?;
        (shared.clone(), shared)
    } else {
        (space_for(&a.option_names, &[&a])?, space_for(&b.option_names, &[&b])?)
    };

    let build = |t: LooseTable, space: ConfigurationSpace| -> Result<Dataset> {
        let mut dataset = Dataset::new(t.env_id, space);
        for (profile, levels, responses) in t.rows {
            dataset.samples.push(Sample {
                profile: ApplicationProfile::new(t.profile_names.clone(), profile)?,
                configuration: Configuration::new(levels),
                responses,
            });
        }
        Ok(dataset)
    };
    Ok((build(a, space_a)?, build(b, space_b)?))
}
