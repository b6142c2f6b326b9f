use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use skewmix::em::Family;
use skewmix::overlap::OverlapMethod;
use skewmix_cli::report;
use skewmix_cli::*;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "skewmix", version, about = "Skewed and transformation mixture clustering with overlap diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one family over a range of G and select G by BIC.
    Fit(FitArgs),
    /// Misclassification map between the labelled groups.
    Overlap(OverlapArgs),
    /// Mardia skewness and kurtosis per labelled group.
    Diagnose(CommonArgs),
    /// All families, diagnostics and both overlap maps for one or all bundled datasets.
    Benchmark(BenchmarkArgs),
    /// Draw test data from component parameters given as JSON.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "dataset")]
    data: Option<PathBuf>,
    /// Bundled dataset (iris, wine, diabetes, ais, crabs).
    #[arg(long)]
    dataset: Option<String>,
    /// Label column of --data.
    #[arg(long, requires = "data")]
    label: Option<String>,
}

impl DataArgs {
    fn load(&self) -> CliResult<skewmix::data::Dataset> {
        let source = match (&self.data, &self.dataset) {
            (Some(path), _) => Source::File {
                path: path.clone(),
                label: self.label.clone(),
            },
            (None, Some(name)) => Source::Bundled(name.clone()),
            (None, None) => return Err(CliError::Input("one of --data or --dataset is required".into())),
        };
        load(&source)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Output file (stdout when absent); a directory for `benchmark`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CommonArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long)]
    gmin: Option<usize>,
    #[arg(long)]
    gmax: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_parser = parse_battery, default_value = "full")]
    battery: BatteryProfile,
    /// Fit the data on its original scale.
    #[arg(long)]
    no_standardize: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OverlapArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_method, default_value = "kde")]
    overlap_method: OverlapMethod,
    #[arg(long, default_value_t = 1000)]
    nsim: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    no_standardize: bool,
    /// With --format csv: the simulated points, group by group.
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Bundled dataset name, or `all`.
    #[arg(long, conflicts_with = "data")]
    dataset: Option<String>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    label: Option<String>,
    #[arg(long)]
    gmin: Option<usize>,
    #[arg(long)]
    gmax: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    nsim: usize,
    #[arg(long, value_parser = parse_battery, default_value = "full")]
    battery: BatteryProfile,
    #[arg(long)]
    no_standardize: bool,
    /// Directory receiving <dataset>.json and <dataset>.txt; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON component (`{"family":"vg",...}`) or mixture (`{"weights":[..],"components":[..]}`).
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: skewmix::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<OverlapMethod, String> {
    s.parse().map_err(|e: skewmix::Error| e.to_string())
}

fn parse_battery(s: &str) -> Result<BatteryProfile, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Input(e.to_string())
}

fn g_range(ds: &skewmix::data::Dataset, gmin: Option<usize>, gmax: Option<usize>) -> (usize, usize) {
    let (lo, hi) = default_g_range(ds);
    (gmin.unwrap_or(lo), gmax.unwrap_or(hi))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => {
            let ds = a.data.load()?;
            let (g_min, g_max) = g_range(&ds, a.gmin, a.gmax);
            let r = cmd_fit(
                &ds,
                &FitConfig {
                    family: a.family,
                    g_min,
                    g_max,
                    battery: a.battery,
                    seed: a.seed,
                    standardize: !a.no_standardize,
                },
            )?;
            let text = match a.output.format {
                Format::Json => json(&r),
                Format::Text => report::fit_text(&r),
                Format::Csv => report::fit_csv(&r).map_err(csv_err)?,
            };
            emit(a.output.out.as_deref(), &text)
        }
        Command::Overlap(a) => {
            let ds = a.data.load()?;
            let o = cmd_overlap(&ds, a.overlap_method, a.nsim, a.seed, !a.no_standardize)?;
            let text = match a.output.format {
                Format::Json => json(&o.report),
                Format::Text => report::overlap_text(&o.report),
                Format::Csv => report::points_csv(&ds.label_names, &o.points, &ds.variable_names).map_err(csv_err)?,
            };
            emit(a.output.out.as_deref(), &text)
        }
        Command::Diagnose(a) => {
            let ds = a.data.load()?;
            let r = cmd_diagnose(&ds)?;
            let text = match a.output.format {
                Format::Json => json(&r),
                Format::Text => report::diagnose_text(&r),
                Format::Csv => report::diagnose_csv(&r).map_err(csv_err)?,
            };
            emit(a.output.out.as_deref(), &text)
        }
        Command::Benchmark(a) => {
            let datasets = match (&a.data, a.dataset.as_deref()) {
                (Some(path), _) => vec![load(&Source::File {
                    path: path.clone(),
                    label: a.label.clone(),
                })?],
                (None, Some("all")) => skewmix::data::BUNDLED
                    .iter()
                    .map(|b| load(&Source::Bundled(b.name.to_string())))
                    .collect::<CliResult<_>>()?,
                (None, Some(name)) => vec![load(&Source::Bundled(name.to_string()))?],
                (None, None) => return Err(CliError::Input("one of --data or --dataset is required".into())),
            };
            if let Some(dir) = &a.out {
                std::fs::create_dir_all(dir)?;
            }
            for ds in datasets {
                let cfg = BenchmarkConfig {
                    battery: a.battery,
                    seed: a.seed,
                    n_sim: a.nsim,
                    g_range: if a.gmin.is_some() || a.gmax.is_some() {
                        Some(g_range(&ds, a.gmin, a.gmax))
                    } else {
                        None
                    },
                    standardize: !a.no_standardize,
                };
                let r = cmd_benchmark(&ds, &cfg)?;
                match &a.out {
                    Some(dir) => {
                        emit(Some(&dir.join(format!("{}.json", ds.name))), &json(&r))?;
                        emit(Some(&dir.join(format!("{}.txt", ds.name))), &report::benchmark_text(&r))?;
                    }
                    None => match a.format {
                        Format::Json => emit(None, &json(&r))?,
                        _ => emit(None, &report::benchmark_text(&r))?,
                    },
                }
            }
            Ok(())
        }
        Command::Simulate(a) => {
            let raw = std::fs::read_to_string(&a.params).map_err(|e| CliError::Input(format!("{}: {e}", a.params.display())))?;
            let model: SimulationModel = serde_json::from_str(&raw).map_err(|e| CliError::Input(format!("{}: {e}", a.params.display())))?;
            let (x, labels) = cmd_simulate(&model, a.n, a.seed)?;
            emit(a.out.as_deref(), &report::labelled_points_csv(&x, &labels).map_err(csv_err)?)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
