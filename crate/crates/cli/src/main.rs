use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtree::config::{Method, NumericBackend, TreeConfig};
use qtree::error::Error;
use qtree::eval::{self, Comparison, Metrics, SweepRow};
use qtree::schema::{encode_csv, open_stream, DatasetSchema};
use qtree::synth::{self, SynthKind};

mod report;

#[derive(Parser)]
#[command(name = "qtree", version, about = "Streaming Hoeffding trees with quantile-based numeric splits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interleaved test-then-train run over one dataset.
    Eval {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        tree: TreeArgs,
        /// Quantiles per attribute and class.
        #[arg(long, default_value_t = 8)]
        quantiles: usize,
        /// Metrics file: `.csv` for a CSV row, anything else for JSON, `-` for JSON on stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write a snapshot of the trained model.
        snapshot: Option<PathBuf>,
    },
    /// One independent run per quantile count.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        tree: TreeArgs,
        /// Comma-separated quantile counts.
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,16,24,32,64,512")]
        quantiles: Vec<usize>,
        /// Table file: `.csv` for CSV rows, anything else for JSON, `-` for JSON on stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quantile and Gaussian methods on the same stream.
    Compare {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long, default_value_t = 8)]
        quantiles: usize,
        /// Report file: `.csv` for CSV rows, anything else for JSON, `-` for JSON on stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact, quantile and Gaussian CDFs of one numeric attribute.
    CdfExport {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long, default_value_t = 8)]
        quantiles: usize,
        /// Series file: `.json` for JSON, anything else for aligned columns. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Attribute index.
        attribute: usize,
        /// Samples to summarize; by default those the root sees before its first split.
        limit: Option<usize>,
    },
    /// Rewrites a string-valued CSV into integer codes.
    Encode {
        #[command(flatten)]
        input: Input,
        /// Coded CSV destination.
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes a synthetic stream with known ground truth.
    Synth {
        #[arg(value_enum)]
        kind: KindArg,
        /// Number of rows.
        #[arg(default_value_t = 10_000)]
        rows: usize,
        /// CSV destination.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the matching schema.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Input {
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Schema JSON.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Quantile)]
    method: MethodArg,
    /// Quantile tracker step size.
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// Samples between split trials at a leaf.
    #[arg(long, default_value_t = 200)]
    nmin: u64,
    /// Candidate split points per numeric attribute.
    #[arg(long, default_value_t = 10)]
    split_points: usize,
    /// Tie threshold.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Hoeffding bound confidence parameter.
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value_t = 1024)]
    max_leaves: usize,
    #[arg(long, default_value_t = 15)]
    max_depth: u32,
    #[arg(long, value_enum, default_value_t = BackendArg::Float)]
    numeric_backend: BackendArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Quantile,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Float,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Separable,
    Noise,
    Constant,
    Mixed,
    Shapes,
}

impl From<KindArg> for SynthKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Separable => SynthKind::Separable,
            KindArg::Noise => SynthKind::Noise,
            KindArg::Constant => SynthKind::Constant,
            KindArg::Mixed => SynthKind::Mixed,
            KindArg::Shapes => SynthKind::Shapes,
        }
    }
}

impl TreeArgs {
    fn config(&self, quantiles: usize) -> Result<TreeConfig, Error> {
        let config = TreeConfig {
            delta: self.delta,
            tau: self.tau,
            n_min: self.nmin,
            split_points: self.split_points,
            quantile_count: quantiles,
            lambda: self.lambda,
            max_leaves: self.max_leaves,
            max_depth: self.max_depth,
            method: match self.method {
                MethodArg::Quantile => Method::Quantile,
                MethodArg::Gaussian => Method::Gaussian,
            },
            numeric_backend: match self.numeric_backend {
                BackendArg::Float => NumericBackend::Float,
                BackendArg::Fixed => NumericBackend::Fixed,
            },
            ..TreeConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

impl Input {
    fn load(&self) -> Result<DatasetSchema, String> {
        for (what, path) in [("schema", &self.schema), ("data", &self.data)] {
            if !path.is_file() {
                return Err(format!("{what} file not found: {}", path.display()));
            }
        }
        DatasetSchema::from_path(&self.schema).map_err(|e| format!("{}: {e}", self.schema.display()))
    }

    fn context(&self, e: Error) -> String {
        format!("{}: {e}", self.data.display())
    }
}

enum Format {
    Json,
    Csv,
    Text,
}

fn format_of(path: &Path, default: Format) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ => default,
    }
}

fn create(path: &Path) -> Result<Box<dyn Write>, String> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdout().lock()));
    }
    let file = File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| e.to_string())?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| e.to_string())
}

fn write_rows(path: &Path, rows: &[eval::MetricsRow]) -> Result<(), String> {
    let mut out = create(path)?;
    eval::write_metrics_csv(rows, &mut out).map_err(|e| e.to_string())?;
    out.flush().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Eval {
            input,
            tree,
            quantiles,
            out,
            snapshot,
        } => {
            let schema = input.load()?;
            let config = tree.config(quantiles).map_err(|e| e.to_string())?;
            let (metrics, model) =
                eval::evaluate_file(&input.data, &schema, &config, eval::DEFAULT_WINDOW).map_err(|e| input.context(e))?;
            if let Some(path) = &snapshot {
                std::fs::write(path, model.snapshot()).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            emit_metrics(&metrics, &config, &input.data, out.as_deref())
        }
        Command::Sweep {
            input,
            tree,
            quantiles,
            out,
        } => {
            let schema = input.load()?;
            let config = tree.config(8).map_err(|e| e.to_string())?;
            for &q in &quantiles {
                tree.config(q).map_err(|e| e.to_string())?;
            }
            let rows = eval::sweep_quantiles(&input.data, &schema, &quantiles, &config).map_err(|e| input.context(e))?;
            emit_sweep(&rows, &config, &input.data, out.as_deref())
        }
        Command::Compare {
            input,
            tree,
            quantiles,
            out,
        } => {
            let schema = input.load()?;
            let config = tree.config(quantiles).map_err(|e| e.to_string())?;
            let cmp = eval::compare_methods(&input.data, &schema, &config).map_err(|e| input.context(e))?;
            emit_comparison(&cmp, &config, &input.data, out.as_deref())
        }
        Command::CdfExport {
            input,
            tree,
            quantiles,
            out,
            attribute,
            limit,
        } => {
            let schema = input.load()?;
            let config = tree.config(quantiles).map_err(|e| e.to_string())?;
            let limit = match limit {
                Some(n) => n,
                None => {
                    let stream = open_stream(&input.data, &schema).map_err(|e| input.context(e))?;
                    eval::root_subset_size(stream, &schema, &config).map_err(|e| input.context(e))?
                }
            };
            let stream = open_stream(&input.data, &schema).map_err(|e| input.context(e))?;
            let series = eval::export_cdf_comparison(stream, &schema, attribute, limit, &config)
                .map_err(|e| input.context(e))?;
            match &out {
                Some(path) => {
                    match format_of(path, Format::Text) {
                        Format::Json => write_json(path, &series)?,
                        _ => {
                            let mut w = create(path)?;
                            series.write_columns(&mut w).and_then(|_| w.flush()).map_err(|e| e.to_string())?;
                        }
                    }
                    print!("{}", report::cdf_summary(&series));
                }
                None => series.write_columns(io::stdout().lock()).map_err(|e| e.to_string())?,
            }
            Ok(())
        }
        Command::Encode { input, out } => {
            let schema = input.load()?;
            let mut w = create(&out)?;
            let rep = encode_csv(&input.data, &mut w, &schema).map_err(|e| input.context(e))?;
            w.flush().map_err(|e| e.to_string())?;
            print!("{}", report::encoding(&rep, &schema));
            Ok(())
        }
        Command::Synth {
            kind,
            rows,
            out,
            schema,
            seed,
        } => {
            let kind = SynthKind::from(kind);
            let w = create(&out)?;
            synth::write_csv(kind, rows, seed, w).map_err(|e| e.to_string())?;
            if let Some(path) = &schema {
                write_json(path, &kind.schema())?;
            }
            print!("{}", report::synth(kind, rows, seed, &out));
            Ok(())
        }
    }
}

fn emit_metrics(m: &Metrics, config: &TreeConfig, data: &Path, out: Option<&Path>) -> Result<(), String> {
    let label = run_label(data);
    match out {
        Some(path) => match format_of(path, Format::Json) {
            Format::Csv => write_rows(path, &[m.row(&label, config)])?,
            _ => write_json(path, m)?,
        },
        None => print!("{}", report::metrics(&label, m, config)),
    }
    Ok(())
}

fn emit_sweep(rows: &[SweepRow], config: &TreeConfig, data: &Path, out: Option<&Path>) -> Result<(), String> {
    let label = run_label(data);
    match out {
        Some(path) => match format_of(path, Format::Json) {
            Format::Csv => {
                let flat: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        let c = TreeConfig {
                            quantile_count: r.quantiles,
                            ..config.clone()
                        };
                        r.metrics.row(&label, &c)
                    })
                    .collect();
                write_rows(path, &flat)?
            }
            _ => write_json(path, &rows)?,
        },
        None => print!("{}", report::sweep(&label, rows)),
    }
    Ok(())
}

fn emit_comparison(cmp: &Comparison, config: &TreeConfig, data: &Path, out: Option<&Path>) -> Result<(), String> {
    let label = run_label(data);
    match out {
        Some(path) => match format_of(path, Format::Json) {
            Format::Csv => {
                let q = TreeConfig {
                    method: Method::Quantile,
                    ..config.clone()
                };
                let g = TreeConfig {
                    method: Method::Gaussian,
                    ..config.clone()
                };
                write_rows(path, &[cmp.quantile.row(&label, &q), cmp.gaussian.row(&label, &g)])?
            }
            _ => write_json(path, cmp)?,
        },
        None => print!("{}", report::comparison(&label, cmp)),
    }
    Ok(())
}

fn run_label(data: &Path) -> String {
    data.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
