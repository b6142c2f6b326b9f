//! Commands behind the `skewmix` binary, usable as a library so reports can be
//! produced and checked without spawning processes.

pub mod report;

use serde::Serialize;
use skewmix::data::{self, Dataset};
use skewmix::densities::{sample_component, ComponentParams};
use skewmix::diagnostics::{adjusted_rand_index, confusion_matrix, mardia, MardiaReport};
use skewmix::em::{Family, MixtureFit, MixtureSpec};
use skewmix::init::{run_battery, InitBattery};
use skewmix::overlap::{estimate_from_labels, misclassification_map, simulate_group, group_seed, DensityModel, EstimateOptions, OverlapMap, OverlapMethod};
use std::path::PathBuf;
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<skewmix::Error> for CliError {
    fn from(e: skewmix::Error) -> Self {
        match e {
            skewmix::Error::Input(_) | skewmix::Error::Dimension { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BatteryProfile {
    Full,
    Ci,
}

impl BatteryProfile {
    pub fn build(self, seed: u64) -> InitBattery {
        match self {
            BatteryProfile::Full => InitBattery::full(seed),
            BatteryProfile::Ci => InitBattery::ci(seed),
        }
    }
}

impl std::str::FromStr for BatteryProfile {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "full" => Ok(Self::Full),
            "ci" => Ok(Self::Ci),
            _ => Err(CliError::Input(format!("unknown battery '{s}' (full, ci)"))),
        }
    }
}

/// Where the data comes from.
#[derive(Debug, Clone)]
pub enum Source {
    Bundled(String),
    File { path: PathBuf, label: Option<String> },
}

pub fn load(source: &Source) -> CliResult<Dataset> {
    Ok(match source {
        Source::Bundled(name) => data::bundled(name)?,
        Source::File { path, label } => data::load_csv(path, label.as_deref())?,
    })
}

/// Default G range: 1..4, or 1..5 for crabs.
pub fn default_g_range(dataset: &Dataset) -> (usize, usize) {
    if dataset.name.eq_ignore_ascii_case("crabs") {
        (1, 5)
    } else {
        (1, 4)
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub family: Family,
    pub g_min: usize,
    pub g_max: usize,
    pub battery: BatteryProfile,
    pub seed: u64,
    pub standardize: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GFit {
    pub g: usize,
    pub loglik: f64,
    pub bic: f64,
    pub m: usize,
    pub converged: bool,
    pub iterations: usize,
    pub init_id: usize,
    pub starts: usize,
    pub failed_starts: usize,
    pub ari: Option<f64>,
    pub confusion: Option<Vec<Vec<usize>>>,
    pub labels: Vec<usize>,
    pub true_label_loglik: Option<f64>,
    pub fit: MixtureFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct GFailure {
    pub g: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub version: &'static str,
    pub dataset: String,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub standardized: bool,
    pub battery: BatteryProfile,
    pub seed: u64,
    pub g_hat: usize,
    pub fits: Vec<GFit>,
    pub failures: Vec<GFailure>,
}

impl FitReport {
    /// The fit at the BIC-selected number of components.
    pub fn selected(&self) -> &GFit {
        self.at(self.g_hat).expect("selected G is fitted")
    }

    pub fn at(&self, g: usize) -> Option<&GFit> {
        self.fits.iter().find(|f| f.g == g)
    }
}

fn prepared(dataset: &Dataset, standardize: bool) -> Dataset {
    if standardize {
        dataset.standardized()
    } else {
        dataset.clone()
    }
}

/// Best-of-battery fits for each G, with Ĝ the minimum-BIC G.
pub fn cmd_fit(dataset: &Dataset, cfg: &FitConfig) -> CliResult<FitReport> {
    let (n, p) = (dataset.n(), dataset.p());
    if cfg.g_min == 0 || cfg.g_min > cfg.g_max {
        return Err(CliError::Input(format!("invalid G range {}..{}", cfg.g_min, cfg.g_max)));
    }
    if cfg.g_max > n / (p + 2) {
        return Err(CliError::Input(format!(
            "G={} too large for n={n}, p={p} (at most {})",
            cfg.g_max,
            n / (p + 2)
        )));
    }
    let data = prepared(dataset, cfg.standardize);
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for g in cfg.g_min..=cfg.g_max {
        let mut battery = cfg.battery.build(cfg.seed);
        if let Some(truth) = &dataset.labels {
            if dataset.n_classes() == g {
                battery = battery.with_true_labels(truth.clone());
            }
        }
        let spec = MixtureSpec::new(cfg.family, g);
        match run_battery(&data.matrix, &spec, &battery) {
            Ok(res) => {
                let labels = res.best.labels();
                let (ari, confusion) = match &dataset.labels {
                    Some(t) => (Some(adjusted_rand_index(t, &labels)?), Some(confusion_matrix(t, &labels)?)),
                    None => (None, None),
                };
                let starts = res.runs.iter().filter(|r| r.kind != skewmix::init::InitKind::TrueLabels).count();
                let failed = res.runs.iter().filter(|r| r.loglik.is_none()).count();
                log::info!("{} G={g}: loglik {:.3} bic {:.3}", cfg.family, res.best.loglik, res.best.bic);
                fits.push(GFit {
                    g,
                    loglik: res.best.loglik,
                    bic: res.best.bic,
                    m: res.best.n_params,
                    converged: res.best.converged,
                    iterations: res.best.iterations,
                    init_id: res.best.init_id,
                    starts,
                    failed_starts: failed,
                    ari,
                    confusion,
                    labels,
                    true_label_loglik: res.true_label_fit.as_ref().map(|f| f.loglik),
                    fit: res.best,
                });
            }
            Err(e) => {
                log::warn!("{} G={g}: {e}", cfg.family);
                failures.push(GFailure { g, error: e.to_string() });
            }
        }
    }
    let g_hat = fits
        .iter()
        .min_by(|a, b| a.bic.total_cmp(&b.bic).then(a.g.cmp(&b.g)))
        .map(|f| f.g)
        .ok_or_else(|| {
            CliError::Numerical(format!(
                "all fits failed: {}",
                failures.iter().map(|f| format!("G={}: {}", f.g, f.error)).collect::<Vec<_>>().join("; ")
            ))
        })?;
    Ok(FitReport {
        version: VERSION,
        dataset: dataset.name.clone(),
        family: cfg.family,
        n,
        p,
        standardized: cfg.standardize,
        battery: cfg.battery,
        seed: cfg.seed,
        g_hat,
        fits,
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupDiagnostics {
    pub group: String,
    #[serde(flatten)]
    pub mardia: MardiaReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub version: &'static str,
    pub dataset: String,
    pub groups: Vec<GroupDiagnostics>,
}

fn require_labels(dataset: &Dataset) -> CliResult<&Vec<usize>> {
    dataset
        .labels
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("dataset '{}' has no labels (use --label)", dataset.name)))
}

/// Mardia statistics per true group, on the data as given.
pub fn cmd_diagnose(dataset: &Dataset) -> CliResult<DiagnoseReport> {
    require_labels(dataset)?;
    let groups = (0..dataset.n_classes())
        .map(|k| {
            let x = dataset.group(k).expect("labels present");
            Ok(GroupDiagnostics {
                group: dataset.label_names[k].clone(),
                mardia: mardia(&x)?,
            })
        })
        .collect::<CliResult<_>>()?;
    Ok(DiagnoseReport {
        version: VERSION,
        dataset: dataset.name.clone(),
        groups,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupEstimateSummary {
    pub group: String,
    pub prior: f64,
    /// Gaussian components selected (GaussMix only).
    pub components: Option<usize>,
    pub bandwidths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapReport {
    pub version: &'static str,
    pub dataset: String,
    pub map: OverlapMap,
    pub pairwise: Vec<Vec<f64>>,
    pub groups: Vec<GroupEstimateSummary>,
}

pub struct OverlapOutput {
    pub report: OverlapReport,
    /// Simulated points per group, for plotting.
    pub points: Vec<nalgebra::DMatrix<f64>>,
}

pub fn cmd_overlap(dataset: &Dataset, method: OverlapMethod, n_sim: usize, seed: u64, standardize: bool) -> CliResult<OverlapOutput> {
    let labels = require_labels(dataset)?;
    let data = prepared(dataset, standardize);
    let est = estimate_from_labels(&data.matrix, labels, method, &EstimateOptions::new(seed))?;
    let map = misclassification_map(&est, n_sim, seed)?;
    let points = est
        .iter()
        .enumerate()
        .map(|(k, e)| simulate_group(e, n_sim, group_seed(seed, k)))
        .collect::<skewmix::Result<Vec<_>>>()?;
    let g = map.g();
    let pairwise = (0..g)
        .map(|a| (0..g).map(|b| if a == b { 0.0 } else { map.p_matrix[a][b] + map.p_matrix[b][a] }).collect())
        .collect();
    let groups = est
        .iter()
        .map(|e| GroupEstimateSummary {
            group: dataset.label_names[e.group_id].clone(),
            prior: e.prior,
            components: match &e.model {
                DensityModel::GaussMix { weights, .. } => Some(weights.len()),
                DensityModel::Kde { .. } => None,
            },
            bandwidths: match &e.model {
                DensityModel::Kde { bandwidths, .. } => Some(bandwidths.iter().copied().collect()),
                DensityModel::GaussMix { .. } => None,
            },
        })
        .collect();
    Ok(OverlapOutput {
        report: OverlapReport {
            version: VERSION,
            dataset: dataset.name.clone(),
            map,
            pairwise,
            groups,
        },
        points,
    })
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub battery: BatteryProfile,
    pub seed: u64,
    pub n_sim: usize,
    pub g_range: Option<(usize, usize)>,
    pub standardize: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub version: &'static str,
    pub dataset: String,
    pub n: usize,
    pub p: usize,
    pub group_sizes: Vec<usize>,
    pub methods: Vec<FitReport>,
    pub diagnostics: DiagnoseReport,
    pub kde_map: OverlapReport,
    pub gaussmix_map: OverlapReport,
}

pub const BENCHMARK_FAMILIES: [Family; 5] = [Family::Vg, Family::Gh, Family::Manly, Family::Power, Family::Gaussian];

pub fn cmd_benchmark(dataset: &Dataset, cfg: &BenchmarkConfig) -> CliResult<BenchmarkReport> {
    let labels = require_labels(dataset)?;
    let (g_min, g_max) = cfg.g_range.unwrap_or_else(|| default_g_range(dataset));
    let methods = BENCHMARK_FAMILIES
        .iter()
        .map(|&family| {
            cmd_fit(
                dataset,
                &FitConfig {
                    family,
                    g_min,
                    g_max,
                    battery: cfg.battery,
                    seed: cfg.seed,
                    standardize: cfg.standardize,
                },
            )
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut sizes = vec![0; dataset.n_classes()];
    for &l in labels {
        sizes[l] += 1;
    }
    Ok(BenchmarkReport {
        version: VERSION,
        dataset: dataset.name.clone(),
        n: dataset.n(),
        p: dataset.p(),
        group_sizes: sizes,
        methods,
        diagnostics: cmd_diagnose(dataset)?,
        kde_map: cmd_overlap(dataset, OverlapMethod::Kde, cfg.n_sim, cfg.seed, cfg.standardize)?.report,
        gaussmix_map: cmd_overlap(dataset, OverlapMethod::GaussMix, cfg.n_sim, cfg.seed, cfg.standardize)?.report,
    })
}

/// Component parameters for `simulate`: one component, or a weighted mixture.
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(untagged)]
pub enum SimulationModel {
    Mixture {
        weights: Vec<f64>,
        components: Vec<ComponentParams>,
    },
    Single(ComponentParams),
}

/// Draws `n` points; returns the points and the generating component of each.
pub fn cmd_simulate(model: &SimulationModel, n: usize, seed: u64) -> CliResult<(nalgebra::DMatrix<f64>, Vec<usize>)> {
    match model {
        SimulationModel::Single(c) => Ok((sample_component(c, n, seed)?, vec![0; n])),
        SimulationModel::Mixture { weights, components } => {
            if weights.len() != components.len() || components.is_empty() {
                return Err(CliError::Input("weights and components must have equal, nonzero length".into()));
            }
            let total: f64 = weights.iter().sum();
            if weights.iter().any(|&w| !(w >= 0.0)) || !(total > 0.0) {
                return Err(CliError::Input("weights must be nonnegative with positive sum".into()));
            }
            let p = components[0].dim();
            if components.iter().any(|c| c.dim() != p) {
                return Err(CliError::Input("components differ in dimension".into()));
            }
            // component counts from a multinomial draw, then each block sampled on its own stream
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut counts = vec![0usize; components.len()];
            for _ in 0..n {
                let mut u = rng.random::<f64>() * total;
                let mut k = components.len() - 1;
                for (j, w) in weights.iter().enumerate() {
                    if u < *w {
                        k = j;
                        break;
                    }
                    u -= w;
                }
                counts[k] += 1;
            }
            let mut x = nalgebra::DMatrix::zeros(n, p);
            let mut labels = Vec::with_capacity(n);
            let mut row = 0;
            for (k, (&c, comp)) in counts.iter().zip(components).enumerate() {
                if c == 0 {
                    continue;
                }
                let block = sample_component(comp, c, skewmix::init::derive_seed(seed, k as u64 + 1))?;
                x.rows_mut(row, c).copy_from(&block);
                labels.extend(std::iter::repeat_n(k, c));
                row += c;
            }
            Ok((x, labels))
        }
    }
}
