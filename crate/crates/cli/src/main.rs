//! `bilevel-svm`: train, predict, cross-validate and benchmark cost-sensitive
//! SVMs on imbalanced binary datasets.

mod model_file;
mod settings;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bilevel_svm::bilevel::{self, write_generation_log, write_trace};
use bilevel_svm::data::{load_csv, load_keel, scale_features, CsvOptions, Dataset, LabelColumn};
use bilevel_svm::experiment::{bench, cross_validate, train_method, ExperimentConfig, Method, TrainedModel};
use bilevel_svm::metrics::{confusion, scores};
use bilevel_svm::profile::{performance_profile, write_profile, write_profile_csv};
use clap::{Parser, Subcommand};

use model_file::ModelFile;
use settings::{resolve, Overrides};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<bilevel_svm::Error> for CliError {
    fn from(e: bilevel_svm::Error) -> Self {
        use bilevel_svm::Error;
        let code = match &e {
            Error::Io { source, .. } if source.kind() != std::io::ErrorKind::NotFound => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bilevel-svm", version, about)]
struct Cli {
    #[command(flatten)]
    flags: Overrides,
    #[command(flatten)]
    input: InputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct InputFormat {
    /// Label column of CSV input: a header name, a 0-based index, or "last".
    #[arg(long, global = true, default_value = "last")]
    label_column: LabelColumn,
    /// CSV input has no header row.
    #[arg(long, global = true)]
    no_header: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on a whole dataset and write a model file.
    Train {
        data: PathBuf,
        /// Model file to write.
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
        /// Per-evaluation trace of the bilevel search (CSV).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Per-generation optimizer log of the bilevel search (CSV).
        #[arg(long)]
        shade_log: Option<PathBuf>,
    },
    /// Predict a dataset with a trained model.
    Predict {
        model: PathBuf,
        data: PathBuf,
        /// Predictions CSV; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated stratified cross-validation of one method (JSON report).
    Cv {
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate several methods on several datasets.
    Bench {
        #[arg(required = true)]
        data: Vec<PathBuf>,
        /// Comma-separated methods to compare.
        #[arg(long, value_delimiter = ',', default_value = "svm,ros,rus,smote,ebcs")]
        methods: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Performance-profile points of training time (CSV).
        #[arg(long)]
        profile_out: Option<PathBuf>,
    },
    /// Performance profile of a time table (CSV: dataset column, then one column per method).
    Profile {
        times: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_dataset(path: &Path, fmt: &InputFormat) -> Result<Dataset, CliError> {
    let is_keel = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("dat"));
    let d = if is_keel {
        load_keel(path)?
    } else {
        let opts = CsvOptions {
            has_header: !fmt.no_header,
            label_column: fmt.label_column.clone(),
        };
        load_csv(path, &opts)?
    };
    Ok(d)
}

fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::runtime(e.to_string())),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::runtime(e.to_string()))
}

fn train(
    cfg: &ExperimentConfig,
    data: &Path,
    fmt: &InputFormat,
    out: &Path,
    trace: Option<&Path>,
    shade_log: Option<&Path>,
) -> Result<(), CliError> {
    let raw = load_dataset(data, fmt)?;
    let (scaled, scaling) = scale_features(&raw, cfg.scale_range.0, cfg.scale_range.1)?;
    let trained = if cfg.method == Method::Ebcs {
        let outcome = bilevel::run(&scaled, &cfg.run_config(cfg.seed))?;
        if let Some(path) = trace {
            write_trace(path, &outcome.trace)?;
        }
        if let Some(path) = shade_log {
            write_generation_log(path, &outcome.generations)?;
        }
        eprintln!(
            "best leave-one-out BER {:.6} with {} support vectors after {} evaluations",
            outcome.best.fitness, outcome.best.sv_count, outcome.evaluations
        );
        TrainedModel {
            model: outcome.model,
            train: scaled,
            sampler: None,
        }
    } else {
        if trace.is_some() || shade_log.is_some() {
            return Err(CliError::usage("--trace and --shade-log need --method ebcs"));
        }
        train_method(&scaled, cfg, cfg.seed)?
    };
    let file = ModelFile::new(cfg.method, &trained, scaling);
    write_output(Some(out), &to_json(&file)?)
}

fn predict(model: &Path, data: &Path, fmt: &InputFormat, out: Option<&Path>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(model).map_err(|e| {
        let code = if e.kind() == std::io::ErrorKind::NotFound { 2 } else { 1 };
        CliError {
            code,
            message: format!("{}: {e}", model.display()),
        }
    })?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", model.display())))?;
    let d = load_dataset(data, fmt)?;
    let actual = file.labels_for(&d)?;
    let mut csv = String::from("row,decision_value,predicted,actual\n");
    let mut predicted = Vec::with_capacity(d.n_samples());
    for (i, x) in d.rows().enumerate() {
        let f = file.decision_value(x)?;
        predicted.push(if f >= 0.0 { 1 } else { -1 });
        csv.push_str(&format!("{i},{f},{},{}\n", file.class_of(f), d.class_name(d.label(i))));
    }
    write_output(out, &csv)?;
    let report = scores(&confusion(&actual, &predicted)?)?;
    eprintln!(
        "sen {:.4}  spe {:.4}  bar {:.4}  gm {:.4}",
        report.sen, report.spe, report.bar, report.gm
    );
    Ok(())
}

fn read_time_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let bad = |msg: String| CliError::usage(format!("{}: {msg}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| {
        let code = if e.kind() == std::io::ErrorKind::NotFound { 2 } else { 1 };
        CliError {
            code,
            message: format!("{}: {e}", path.display()),
        }
    })?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| bad("empty time table".into()))?
        .split(',')
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    let mut times = vec![Vec::new(); header.len()];
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').skip(1).collect();
        if cells.len() != header.len() {
            return Err(bad(format!("line {}: expected {} times", k + 2, header.len())));
        }
        for (m, cell) in cells.iter().enumerate() {
            let t = cell
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("line {}: '{}' is not a number", k + 2, cell.trim())))?;
            times[m].push(t);
        }
    }
    Ok((header, times))
}

fn profile_csv(names: &[String], times: &[Vec<f64>], out: Option<&Path>) -> Result<(), CliError> {
    let profile = performance_profile(times)?;
    let points = profile.points(names);
    match out {
        Some(path) => write_profile_csv(path, &points)?,
        None => write_profile(std::io::stdout().lock(), &points)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let fmt = &cli.input;
    match &cli.command {
        Command::Train {
            data,
            out,
            trace,
            shade_log,
        } => train(&resolve(&cli.flags)?, data, fmt, out, trace.as_deref(), shade_log.as_deref()),
        Command::Predict { model, data, out } => predict(model, data, fmt, out.as_deref()),
        Command::Cv { data, out } => {
            let cfg = resolve(&cli.flags)?;
            let d = load_dataset(data, fmt)?;
            let report = cross_validate(&d, &dataset_id(data), &cfg)?;
            write_output(out.as_deref(), &to_json(&report)?)
        }
        Command::Bench {
            data,
            methods,
            out,
            profile_out,
        } => {
            let cfg = resolve(&cli.flags)?;
            let methods = methods
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<bilevel_svm::Result<Vec<_>>>()?;
            let sets = data
                .iter()
                .map(|p| Ok((dataset_id(p), load_dataset(p, fmt)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let report = bench(&sets, &methods, &cfg)?;
            if let Some(path) = profile_out {
                let names: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
                profile_csv(&names, &report.time_matrix(), Some(path))?;
            }
            write_output(out.as_deref(), &to_json(&report)?)
        }
        Command::Profile { times, out } => {
            let (names, table) = read_time_table(times)?;
            profile_csv(&names, &table, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
