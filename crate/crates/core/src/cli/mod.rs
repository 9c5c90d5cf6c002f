//! Command-line front end: `fuzzify`, `gram`, `check-psd`, `classify` and
//! `mmd-test`. Every command is a pure function of its input files, flags and
//! seed; reports go to stdout as JSON.

pub mod dataset;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuzzy::{
    fuzzify_from_histogram, fuzzify_gaussian, FuzzyAttribute, FuzzyRecord, GroundSpace,
};
use crate::gram::{self, compute_gram, format_matrix, parse_matrix, GramMatrix, DEFAULT_PSD_TOL};
use crate::kernels::FuzzyKernelSpec;
use crate::learn;

pub use dataset::{parse_dataset, Dataset};

#[derive(Debug, Parser)]
#[command(name = "fuzzy-kernels", version, about = "Kernels on fuzzy sets")]
pub struct Cli {
    /// Worker threads for Gram and permutation computations (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a crisp CSV table into a fuzzy dataset.
    Fuzzify(FuzzifyArgs),
    /// Compute the Gram matrix of a dataset and write it to a matrix file.
    Gram(GramArgs),
    /// Report the spectrum of a Gram matrix and whether it is PSD.
    CheckPsd(CheckPsdArgs),
    /// Seeded k-fold cross validation of a kernel ridge classifier.
    Classify(ClassifyArgs),
    /// MMD permutation two-sample test.
    MmdTest(MmdArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FuzzifyMethod {
    /// One Gaussian fuzzy set per cell, centred on the cell value.
    Gaussian,
    /// One histogram fuzzy set per column.
    Histogram,
}

#[derive(Debug, Args)]
pub struct FuzzifyArgs {
    /// Numeric CSV table.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub method: FuzzifyMethod,
    /// Gaussian widths, one per feature column or a single shared value.
    #[arg(long, value_delimiter = ',')]
    pub widths: Vec<f64>,
    /// Histogram bin count.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Sample Gaussian sets onto a 1-d grid `start:end:step`, producing
    /// discrete attributes.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Degrees below this are dropped when sampling onto a grid.
    #[arg(long, default_value_t = 1e-3)]
    pub cutoff: f64,
    /// Column holding ±1 labels (gaussian method only).
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Skip the first row of the table.
    #[arg(long)]
    pub header: bool,
    /// Dataset JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub kernel: PathBuf,
    /// Matrix file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Apply cosine normalization.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct CheckPsdArgs {
    #[arg(long, required_unless_present = "matrix", requires = "kernel")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// Check an existing matrix file instead of computing one.
    #[arg(long, conflicts_with_all = ["data", "kernel"])]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PSD_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Ridge regularization added to the Gram diagonal.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct MmdArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub permutations: usize,
    /// Treat the first N records as sample A and the rest as sample B.
    /// Without it, labels +1 / -1 select the samples.
    #[arg(long)]
    pub split: Option<usize>,
}

fn read_kernel(path: &Path) -> Result<FuzzyKernelSpec> {
    FuzzyKernelSpec::from_json(&std::fs::read_to_string(path)?)
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn load_gram(data: &Path, kernel: &Path, normalize: bool) -> Result<(Dataset, GramMatrix)> {
    let ds = parse_dataset(data)?;
    let spec = read_kernel(kernel)?;
    let mut g = compute_gram(&ds.records, &spec)?;
    if normalize {
        g = gram::normalize(&g)?;
    }
    Ok((ds, g))
}

#[derive(Debug, Serialize)]
struct FuzzifySummary {
    method: &'static str,
    records: usize,
    attributes: usize,
    attribute_kind: &'static str,
    ground_points: usize,
    labelled: bool,
}

fn parse_grid(spec: &str) -> Result<GroundSpace> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::config(format!("grid must be start:end:step, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    GroundSpace::grid_1d(nums[0], nums[1], nums[2])
}

fn read_table(path: &Path, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            location: format!("{} row {r}", path.display()),
            message: e.to_string(),
        })?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::validation(
                            format!("row {r} column {c}"),
                            format!("non-numeric cell {cell:?}"),
                        )
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::validation("table", "table is empty"));
    }
    Ok(rows)
}

/// Histogram bin centres spanning `[min, max]`; a degenerate range gets
/// unit-width bins around the value.
fn bin_centres(min: f64, max: f64, bins: usize) -> Vec<f64> {
    let (lo, width) = if max > min {
        (min, (max - min) / bins as f64)
    } else {
        (min - bins as f64 / 2.0, 1.0)
    };
    (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect()
}

/// Builds a dataset from a crisp table without touching the filesystem.
pub fn fuzzify_table(rows: &[Vec<f64>], args: &FuzzifyArgs) -> Result<Dataset> {
    let ncols = rows[0].len();
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != ncols) {
        return Err(Error::validation(
            format!("row {r}"),
            format!("has {} columns, expected {ncols}", row.len()),
        ));
    }
    match args.method {
        FuzzifyMethod::Histogram => {
            if args.label_column.is_some() {
                return Err(Error::config(
                    "--label-column only applies to the gaussian method",
                ));
            }
            let bins = args
                .bins
                .filter(|&b| b > 0)
                .ok_or_else(|| Error::config("histogram fuzzification needs --bins >= 1"))?;
            let min = rows.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let max = rows
                .iter()
                .flatten()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let ground = Arc::new(GroundSpace::from_scalars(&bin_centres(min, max, bins))?);
            let records = (0..ncols)
                .map(|c| {
                    let column: Vec<f64> = rows.iter().map(|row| row[c]).collect();
                    fuzzify_from_histogram(&column, &ground).map(FuzzyRecord::from)
                })
                .collect::<Result<Vec<_>>>()?;
            Dataset::new(Some(ground), records, None)
        }
        FuzzifyMethod::Gaussian => {
            if let Some(lc) = args.label_column {
                if lc >= ncols {
                    return Err(Error::config(format!(
                        "label column {lc} out of range ({ncols} columns)"
                    )));
                }
            }
            let features: Vec<usize> = (0..ncols)
                .filter(|&c| Some(c) != args.label_column)
                .collect();
            if features.is_empty() {
                return Err(Error::validation("table", "no feature columns"));
            }
            let widths: Vec<f64> = match args.widths.len() {
                1 => vec![args.widths[0]; features.len()],
                n if n == features.len() => args.widths.clone(),
                n => {
                    return Err(Error::config(format!(
                        "{n} widths given for {} feature columns",
                        features.len()
                    )))
                }
            };
            let ground = args
                .grid
                .as_deref()
                .map(parse_grid)
                .transpose()?
                .map(Arc::new);
            let mut records = Vec::with_capacity(rows.len());
            for (r, row) in rows.iter().enumerate() {
                let mut attrs = Vec::with_capacity(features.len());
                for (&c, &w) in features.iter().zip(&widths) {
                    let gs = fuzzify_gaussian(&[row[c]], &[w]).map_err(|e| {
                        Error::validation(format!("row {r} column {c}"), e.to_string())
                    })?;
                    attrs.push(match &ground {
                        Some(g) => FuzzyAttribute::Discrete(gs.sample_onto(g, args.cutoff)?),
                        None => FuzzyAttribute::Gaussian(gs),
                    });
                }
                records.push(FuzzyRecord::new(attrs));
            }
            let labels = args
                .label_column
                .map(|lc| {
                    rows.iter()
                        .enumerate()
                        .map(|(r, row)| {
                            let v = row[lc];
                            if v == 1.0 {
                                Ok(1i8)
                            } else if v == -1.0 {
                                Ok(-1i8)
                            } else {
                                Err(Error::validation(
                                    format!("row {r} column {lc}"),
                                    format!("label {v} is not +1 or -1"),
                                ))
                            }
                        })
                        .collect::<Result<Vec<i8>>>()
                })
                .transpose()?;
            Dataset::new(ground, records, labels)
        }
    }
}

pub fn run_fuzzify(args: &FuzzifyArgs, out: &mut dyn Write) -> Result<()> {
    let rows = read_table(&args.data, args.header)?;
    let ds = fuzzify_table(&rows, args)?;
    std::fs::write(&args.out, ds.to_json_string())?;
    let first = ds.records.first();
    write_json(
        out,
        &FuzzifySummary {
            method: match args.method {
                FuzzifyMethod::Gaussian => "gaussian",
                FuzzifyMethod::Histogram => "histogram",
            },
            records: ds.len(),
            attributes: first.map_or(0, FuzzyRecord::arity),
            attribute_kind: first
                .and_then(|r| r.attributes.first())
                .map_or("none", FuzzyAttribute::kind),
            ground_points: ds.ground.as_ref().map_or(0, |g| g.len()),
            labelled: ds.labels.is_some(),
        },
    )
}

#[derive(Debug, Serialize)]
struct GramMetadata<'a> {
    n: usize,
    spec: Option<&'a FuzzyKernelSpec>,
    normalized: bool,
    item_ids: &'a [String],
}

pub fn run_gram(args: &GramArgs, out: &mut dyn Write) -> Result<()> {
    let (_, g) = load_gram(&args.data, &args.kernel, args.normalize)?;
    std::fs::write(&args.out, format_matrix(g.values()))?;
    write_json(
        out,
        &GramMetadata {
            n: g.len(),
            spec: g.spec(),
            normalized: args.normalize,
            item_ids: g.item_ids(),
        },
    )
}

pub fn run_check_psd(args: &CheckPsdArgs, out: &mut dyn Write) -> Result<()> {
    let mut g = match (&args.matrix, &args.data, &args.kernel) {
        (Some(m), _, _) => {
            GramMatrix::from_matrix(parse_matrix(&std::fs::read_to_string(m)?)?, None)?
        }
        (None, Some(d), Some(k)) => load_gram(d, k, false)?.1,
        _ => {
            return Err(Error::config(
                "check-psd needs --matrix or both --data and --kernel",
            ))
        }
    };
    if args.normalize {
        g = gram::normalize(&g)?;
    }
    write_json(out, &gram::check_psd(&g, args.tol)?)
}

pub fn run_classify(args: &ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let (ds, g) = load_gram(&args.data, &args.kernel, args.normalize)?;
    let labels = ds.require_labels("classify")?;
    let report = learn::cross_validate(&g, labels, args.folds, args.lambda, args.seed)?;
    write_json(out, &report)
}

pub fn run_mmd(args: &MmdArgs, out: &mut dyn Write) -> Result<()> {
    let ds = parse_dataset(&args.data)?;
    let spec = read_kernel(&args.kernel)?;
    let (a, b): (Vec<FuzzyRecord>, Vec<FuzzyRecord>) = match args.split {
        Some(n) => {
            if n == 0 || n >= ds.len() {
                return Err(Error::config(format!(
                    "split {n} must leave both samples non-empty"
                )));
            }
            (ds.records[..n].to_vec(), ds.records[n..].to_vec())
        }
        None => {
            let labels = ds.require_labels("mmd-test without --split")?;
            let pick = |want: i8| -> Vec<FuzzyRecord> {
                ds.records
                    .iter()
                    .zip(labels)
                    .filter(|(_, &l)| l == want)
                    .map(|(r, _)| r.clone())
                    .collect()
            };
            (pick(1), pick(-1))
        }
    };
    if a.is_empty() || b.is_empty() {
        return Err(Error::validation(
            "labels",
            "both samples must be non-empty",
        ));
    }
    write_json(
        out,
        &learn::mmd_permutation_test(&a, &b, &spec, args.permutations, args.seed)?,
    )
}

/// Runs one parsed command, honouring `--threads`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let dispatch = |out: &mut dyn Write| match &cli.command {
        Command::Fuzzify(a) => run_fuzzify(a, out),
        Command::Gram(a) => run_gram(a, out),
        Command::CheckPsd(a) => run_check_psd(a, out),
        Command::Classify(a) => run_classify(a, out),
        Command::MmdTest(a) => run_mmd(a, out),
    };
    match cli.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?;
            let mut buf = Vec::new();
            pool.install(|| dispatch(&mut buf))?;
            out.write_all(&buf)?;
            Ok(())
        }
        None => dispatch(out),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
