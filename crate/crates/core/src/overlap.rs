//! Cluster overlap from labelled data: estimate a density per group, simulate
//! from each, and tabulate where the simulated points are classified.

use crate::densities::{log_density_gaussian_prepared, sample_into, CholFactor, ComponentParams, GaussianParams};
use crate::em::{Family, MixtureSpec};
use crate::error::{Error, Result};
use crate::init::{derive_seed, run_battery, InitBattery};
use crate::mathcore::log_sum_exp;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_J_MAX: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMethod {
    GaussMix,
    Kde,
}

impl FromStr for OverlapMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussmix" | "gaussian" => Ok(Self::GaussMix),
            "kde" => Ok(Self::Kde),
            _ => Err(Error::Input(format!("unknown overlap method '{s}'"))),
        }
    }
}

impl fmt::Display for OverlapMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GaussMix => "gaussmix",
            Self::Kde => "kde",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityModel {
    GaussMix {
        weights: Vec<f64>,
        components: Vec<GaussianParams>,
        bic: f64,
    },
    Kde {
        #[serde(skip)]
        sample: DMatrix<f64>,
        #[serde(with = "crate::serde_mat::vector")]
        bandwidths: DVector<f64>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupDensityEstimate {
    pub method: OverlapMethod,
    pub group_id: usize,
    pub prior: f64,
    pub model: DensityModel,
}

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    /// Largest number of Gaussian components tried per group.
    pub j_max: usize,
    /// Starting partitions for each per-group Gaussian mixture.
    pub battery: InitBattery,
    /// Per-variable scale in the KDE bandwidth rule; the group's own standard
    /// deviations when absent.
    pub reference_sd: Option<DVector<f64>>,
}

impl EstimateOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            j_max: DEFAULT_J_MAX,
            battery: InitBattery::ci(seed),
            reference_sd: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapMap {
    pub p_matrix: Vec<Vec<f64>>,
    pub n_sim: usize,
    pub method: OverlapMethod,
    pub seed: u64,
}

impl OverlapMap {
    pub fn g(&self) -> usize {
        self.p_matrix.len()
    }
}

fn column_sd(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows();
    DVector::from_iterator(
        x.ncols(),
        x.column_iter().map(|c| {
            let m = c.mean();
            (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64).sqrt()
        }),
    )
}

/// Rule-of-thumb bandwidths `(4/(p+2))^{1/(p+4)} n^{-1/(p+4)} σ_j`.
pub fn kde_bandwidths(n: usize, sd: &DVector<f64>) -> DVector<f64> {
    let p = sd.len() as f64;
    let e = 1.0 / (p + 4.0);
    let factor = (4.0 / (p + 2.0)).powf(e) * (n as f64).powf(-e);
    sd * factor
}

pub fn estimate_group_density(
    group: &DMatrix<f64>,
    group_id: usize,
    prior: f64,
    method: OverlapMethod,
    opts: &EstimateOptions,
) -> Result<GroupDensityEstimate> {
    let (n, p) = group.shape();
    if n < p + 2 {
        return Err(Error::Input(format!("group {group_id} has {n} points; at least {} needed", p + 2)));
    }
    if !(prior > 0.0 && prior <= 1.0) {
        return Err(Error::Input(format!("prior {prior} outside (0, 1]")));
    }
    let model = match method {
        OverlapMethod::Kde => {
            let sd = match &opts.reference_sd {
                Some(s) if s.len() == p => s.clone(),
                Some(s) => return Err(Error::Dimension { expected: p, got: s.len() }),
                None => column_sd(group),
            };
            if sd.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::Input(format!("group {group_id} has a constant variable")));
            }
            DensityModel::Kde {
                sample: group.clone(),
                bandwidths: kde_bandwidths(n, &sd),
            }
        }
        OverlapMethod::GaussMix => gauss_mix(group, group_id, opts)?,
    };
    Ok(GroupDensityEstimate {
        method,
        group_id,
        prior,
        model,
    })
}

/// Gaussian mixtures with J = 1..j_max; the lowest BIC wins, ties to smaller J.
fn gauss_mix(group: &DMatrix<f64>, group_id: usize, opts: &EstimateOptions) -> Result<DensityModel> {
    let mut best: Option<(f64, crate::em::MixtureFit)> = None;
    let mut battery = opts.battery.clone();
    battery.master_seed = derive_seed(opts.battery.master_seed, group_id as u64);
    battery.true_labels = None;
    for j in 1..=opts.j_max.max(1) {
        match run_battery(group, &MixtureSpec::new(Family::Gaussian, j), &battery) {
            Ok(res) => {
                log::debug!("group {group_id} J={j} bic={:.3}", res.best.bic);
                if best.as_ref().is_none_or(|(b, _)| res.best.bic < *b) {
                    best = Some((res.best.bic, res.best));
                }
            }
            Err(e) if j == 1 => return Err(e),
            Err(e) => log::debug!("group {group_id} J={j}: {e}"),
        }
    }
    let (bic, fit) = best.expect("J=1 fit present");
    let components = fit
        .components
        .into_iter()
        .map(|c| match c {
            ComponentParams::Gaussian(g) => g,
            _ => unreachable!("Gaussian family"),
        })
        .collect();
    Ok(DensityModel::GaussMix {
        weights: fit.weights,
        components,
        bic,
    })
}

/// Fits one density per labelled group with priors `n_g / n`. KDE bandwidths
/// use the standard deviations of the whole sample.
pub fn estimate_from_labels(
    data: &DMatrix<f64>,
    labels: &[usize],
    method: OverlapMethod,
    opts: &EstimateOptions,
) -> Result<Vec<GroupDensityEstimate>> {
    if labels.len() != data.nrows() {
        return Err(Error::Dimension { expected: data.nrows(), got: labels.len() });
    }
    let g = labels.iter().max().map_or(0, |m| m + 1);
    let mut opts = opts.clone();
    if method == OverlapMethod::Kde && opts.reference_sd.is_none() {
        opts.reference_sd = Some(column_sd(data));
    }
    (0..g)
        .map(|k| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
            if idx.is_empty() {
                return Err(Error::Input(format!("group {k} is empty")));
            }
            let prior = idx.len() as f64 / labels.len() as f64;
            estimate_group_density(&data.select_rows(&idx), k, prior, method, &opts)
        })
        .collect()
}

/// An estimate ready for repeated evaluation and sampling.
enum Prepared<'a> {
    Mix {
        log_w: Vec<f64>,
        comps: Vec<(&'a GaussianParams, CholFactor)>,
    },
    Kde {
        sample: &'a DMatrix<f64>,
        h: &'a DVector<f64>,
        log_norm: f64,
    },
}

impl<'a> Prepared<'a> {
    fn new(est: &'a GroupDensityEstimate) -> Result<Self> {
        Ok(match &est.model {
            DensityModel::GaussMix { weights, components, .. } => Prepared::Mix {
                log_w: weights.iter().map(|w| w.ln()).collect(),
                comps: components
                    .iter()
                    .map(|c| Ok((c, CholFactor::new(&c.sigma)?)))
                    .collect::<Result<_>>()?,
            },
            DensityModel::Kde { sample, bandwidths } => Prepared::Kde {
                sample,
                h: bandwidths,
                log_norm: -(sample.nrows() as f64).ln()
                    - 0.5 * bandwidths.len() as f64 * (2.0 * PI).ln()
                    - bandwidths.iter().map(|h| h.ln()).sum::<f64>(),
            },
        })
    }

    fn dim(&self) -> usize {
        match self {
            Prepared::Mix { comps, .. } => comps[0].0.mu.len(),
            Prepared::Kde { h, .. } => h.len(),
        }
    }

    fn log_density(&self, x: &[f64], work: &mut Vec<f64>) -> f64 {
        match self {
            Prepared::Mix { log_w, comps } => {
                let mut scratch = vec![0.0; x.len()];
                work.clear();
                for (lw, (c, chol)) in log_w.iter().zip(comps) {
                    work.push(lw + log_density_gaussian_prepared(x, c.mu.as_slice(), chol, &mut scratch));
                }
                log_sum_exp(work)
            }
            Prepared::Kde { sample, h, log_norm } => {
                work.clear();
                for i in 0..sample.nrows() {
                    let q: f64 = (0..x.len()).map(|j| ((x[j] - sample[(i, j)]) / h[j]).powi(2)).sum();
                    work.push(-0.5 * q);
                }
                log_norm + log_sum_exp(work)
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Prepared::Mix { log_w, comps } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = comps.len() - 1;
                for (j, lw) in log_w.iter().enumerate() {
                    acc += lw.exp();
                    if u < acc {
                        k = j;
                        break;
                    }
                }
                let params = ComponentParams::Gaussian(comps[k].0.clone());
                sample_into(rng, &params, &comps[k].1, out);
            }
            Prepared::Kde { sample, h, .. } => {
                let i = rng.random_range(0..sample.nrows());
                for j in 0..out.len() {
                    let e: f64 = rng.sample(StandardNormal);
                    out[j] = sample[(i, j)] + h[j] * e;
                }
            }
        }
    }
}

/// Log of the averaged Gaussian kernels of a KDE estimate at `x`.
pub fn kde_log_density(est: &GroupDensityEstimate, x: &[f64]) -> Result<f64> {
    match &est.model {
        DensityModel::Kde { bandwidths, .. } if bandwidths.len() == x.len() => {
            Ok(Prepared::new(est)?.log_density(x, &mut Vec::new()))
        }
        DensityModel::Kde { bandwidths, .. } => Err(Error::Dimension { expected: bandwidths.len(), got: x.len() }),
        DensityModel::GaussMix { .. } => Err(Error::Input("not a KDE estimate".into())),
    }
}

/// Simulated points of one group, one per row.
pub fn simulate_group(est: &GroupDensityEstimate, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let prep = Prepared::new(est)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = prep.dim();
    let mut out = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    for i in 0..n {
        prep.sample(&mut rng, &mut row);
        out.row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

/// Index of the largest `ln π_h + ln f_h(x)`, ties to the lowest index.
fn classify(prepared: &[Prepared<'_>], log_priors: &[f64], x: &[f64], work: &mut Vec<f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (h, (prep, lp)) in prepared.iter().zip(log_priors).enumerate() {
        let v = lp + prep.log_density(x, work);
        if v > best_v {
            best = h;
            best_v = v;
        }
    }
    best
}

/// Seed of group `g`'s simulation stream.
pub fn group_seed(seed: u64, g: usize) -> u64 {
    derive_seed(seed, g as u64)
}

/// Row g holds the share of `n_sim` points drawn from group g's estimate
/// that are assigned to each group.
pub fn misclassification_map(estimates: &[GroupDensityEstimate], n_sim: usize, seed: u64) -> Result<OverlapMap> {
    if estimates.is_empty() {
        return Err(Error::Input("no group estimates".into()));
    }
    if n_sim == 0 {
        return Err(Error::Input("n_sim must be at least 1".into()));
    }
    let method = estimates[0].method;
    let prepared: Vec<Prepared<'_>> = estimates.iter().map(Prepared::new).collect::<Result<_>>()?;
    let p = prepared[0].dim();
    if let Some(bad) = prepared.iter().find(|e| e.dim() != p) {
        return Err(Error::Dimension { expected: p, got: bad.dim() });
    }
    let log_priors: Vec<f64> = estimates.iter().map(|e| e.prior.ln()).collect();
    let g = estimates.len();
    let p_matrix = (0..g)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(group_seed(seed, k));
            let mut counts = vec![0usize; g];
            let mut x = vec![0.0; p];
            let mut work = Vec::new();
            for _ in 0..n_sim {
                prepared[k].sample(&mut rng, &mut x);
                counts[classify(&prepared, &log_priors, &x, &mut work)] += 1;
            }
            counts.iter().map(|&c| c as f64 / n_sim as f64).collect()
        })
        .collect();
    Ok(OverlapMap {
        p_matrix,
        n_sim,
        method,
        seed,
    })
}

pub fn pairwise_overlap(map: &OverlapMap, g: usize, h: usize) -> Result<f64> {
    let k = map.g();
    if g >= k || h >= k {
        return Err(Error::Input(format!("group index out of range (G={k})")));
    }
    if g == h {
        return Err(Error::Input("overlap needs two distinct groups".into()));
    }
    Ok(map.p_matrix[g][h] + map.p_matrix[h][g])
}
