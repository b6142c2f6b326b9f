//! Starting partitions (k-means, soft random, one-step hard, Ward) and the
//! multistart driver that keeps the best converged fit.

use crate::em::{fit_once_rows, MixtureFit, MixtureSpec, Rows};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Log-likelihood differences below this are ties, resolved by the smaller init id.
pub const TIE_TOL: f64 = 1e-6;
const KMEANS_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    KMeans,
    SoftRandom,
    HardOneStep,
    Ward,
    TrueLabels,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assignment {
    Hard(Vec<usize>),
    Soft(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitPartition {
    pub id: usize,
    pub kind: InitKind,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitBattery {
    pub kmeans_count: usize,
    pub soft_count: usize,
    pub hard_per_group: usize,
    pub use_ward: bool,
    /// Fitted and reported separately, never eligible as the best fit.
    #[serde(skip)]
    pub true_labels: Option<Vec<usize>>,
    pub master_seed: u64,
}

impl InitBattery {
    /// 11 k-means, 1000 soft, up to 100·G unique one-step hard, Ward.
    pub fn full(master_seed: u64) -> Self {
        Self {
            kmeans_count: 11,
            soft_count: 1000,
            hard_per_group: 100,
            use_ward: true,
            true_labels: None,
            master_seed,
        }
    }

    /// 3 k-means, 50 soft, up to 10·G one-step hard, Ward.
    pub fn ci(master_seed: u64) -> Self {
        Self {
            kmeans_count: 3,
            soft_count: 50,
            hard_per_group: 10,
            use_ward: true,
            true_labels: None,
            master_seed,
        }
    }

    pub fn with_true_labels(mut self, labels: Vec<usize>) -> Self {
        self.true_labels = Some(labels);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub init_id: usize,
    pub kind: InitKind,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BatteryResult {
    pub best: MixtureFit,
    pub runs: Vec<RunSummary>,
    pub true_label_fit: Option<MixtureFit>,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the `ordinal`-th start under `master`.
pub fn derive_seed(master: u64, ordinal: u64) -> u64 {
    splitmix64(splitmix64(master) ^ ordinal.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn random_centers(rows: &Rows, g: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    sample(rng, rows.n, g).into_iter().map(|i| rows.row(i).to_vec()).collect()
}

fn kmeans_rows(rows: &Rows, g: usize, seed: u64, max_iter: usize) -> Vec<usize> {
    let (n, p) = (rows.n, rows.p);
    if g <= 1 {
        return vec![0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = random_centers(rows, g, &mut rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let (k, _) = nearest(rows.row(i), &centers);
            if labels[i] != k {
                labels[i] = k;
                changed = true;
            }
        }
        // an empty cluster takes the point farthest from its own center
        loop {
            let mut counts = vec![0usize; g];
            for &l in &labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    let da = sq_dist(rows.row(a), &centers[labels[a]]);
                    let db = sq_dist(rows.row(b), &centers[labels[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("n ≥ g guarantees a donor cluster");
            labels[far] = empty;
            centers[empty] = rows.row(far).to_vec();
            changed = true;
        }
        let mut sums = vec![vec![0.0; p]; g];
        let mut counts = vec![0usize; g];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, x) in sums[labels[i]].iter_mut().zip(rows.row(i)) {
                *s += x;
            }
        }
        for k in 0..g {
            for j in 0..p {
                centers[k][j] = sums[k][j] / counts[k] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

fn check_g(n: usize, g: usize) -> Result<()> {
    if g == 0 || g > n {
        return Err(Error::Input(format!("cannot form {g} groups from {n} observations")));
    }
    Ok(())
}

/// Lloyd's algorithm from `g` distinct random data points.
pub fn kmeans(data: &DMatrix<f64>, g: usize, seed: u64, max_iter: usize) -> Result<Vec<usize>> {
    check_g(data.nrows(), g)?;
    Ok(kmeans_rows(&Rows::new(data), g, seed, max_iter))
}

/// Within-cluster sum of squares.
pub fn within_ss(data: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let rows = Rows::new(data);
    let g = labels.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![vec![0.0; rows.p]; g];
    let mut counts = vec![0usize; g];
    for i in 0..rows.n {
        counts[labels[i]] += 1;
        for (s, x) in sums[labels[i]].iter_mut().zip(rows.row(i)) {
            *s += x;
        }
    }
    (0..rows.n)
        .map(|i| {
            let k = labels[i];
            let c: Vec<f64> = sums[k].iter().map(|s| s / counts[k] as f64).collect();
            sq_dist(rows.row(i), &c)
        })
        .sum()
}

/// Rows drawn uniformly on the simplex (Dirichlet(1, …, 1)).
pub fn soft_random_partition(n: usize, g: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = DMatrix::zeros(n, g);
    if g == 1 {
        z.fill(1.0);
        return z;
    }
    for i in 0..n {
        let e: Vec<f64> = (0..g).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        for k in 0..g {
            z[(i, k)] = e[k] / s;
        }
    }
    z
}

fn one_step_rows(rows: &Rows, g: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let centers = random_centers(rows, g, rng);
    (0..rows.n).map(|i| nearest(rows.row(i), &centers).0).collect()
}

/// One assignment pass to `g` distinct random data points.
pub fn hard_one_step(data: &DMatrix<f64>, g: usize, seed: u64) -> Result<Vec<usize>> {
    check_g(data.nrows(), g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(one_step_rows(&Rows::new(data), g, &mut rng))
}

/// Relabels by order of first appearance, so equal partitions compare equal.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

fn n_groups(labels: &[usize]) -> usize {
    labels.iter().collect::<HashSet<_>>().len()
}

/// Up to `quota` one-step partitions that use all `g` groups and are pairwise
/// distinct up to relabeling; gives up after `20·quota` draws.
pub fn unique_hard_partitions(data: &DMatrix<f64>, g: usize, quota: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    check_g(data.nrows(), g)?;
    Ok(unique_hard_rows(&Rows::new(data), g, quota, seed, &mut HashSet::new()))
}

fn unique_hard_rows(rows: &Rows, g: usize, quota: usize, seed: u64, seen: &mut HashSet<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < quota && tries < 20 * quota {
        tries += 1;
        let labels = canonical_labels(&one_step_rows(rows, g, &mut rng));
        if n_groups(&labels) == g && seen.insert(labels.clone()) {
            out.push(labels);
        }
    }
    if out.len() < quota {
        log::warn!("only {} of {quota} unique one-step partitions found", out.len());
    }
    out
}

/// Agglomerative clustering with Ward's criterion via the Lance–Williams
/// recurrence on squared Euclidean distances, cut at `g` clusters.
pub fn ward_partition(data: &DMatrix<f64>, g: usize) -> Result<Vec<usize>> {
    check_g(data.nrows(), g)?;
    Ok(ward_rows(&Rows::new(data), g))
}

fn ward_rows(rows: &Rows, g: usize) -> Vec<usize> {
    let n = rows.n;
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = sq_dist(rows.row(i), rows.row(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut owner: Vec<usize> = (0..n).collect();
    for _ in 0..n.saturating_sub(g) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && d[i * n + j] < best.2 {
                    best = (i, j, d[i * n + j]);
                }
            }
        }
        let (a, b, dab) = best;
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for k in 0..n {
            if !active[k] || k == a || k == b {
                continue;
            }
            let nk = size[k] as f64;
            let v = ((na + nk) * d[a * n + k] + (nb + nk) * d[b * n + k] - nk * dab) / (na + nb + nk);
            d[a * n + k] = v;
            d[k * n + a] = v;
        }
        size[a] += size[b];
        active[b] = false;
        for o in owner.iter_mut() {
            if *o == b {
                *o = a;
            }
        }
    }
    canonical_labels(&owner)
}

/// All starting partitions of a battery, with ids in generation order.
pub fn generate_partitions(data: &DMatrix<f64>, g: usize, battery: &InitBattery) -> Result<Vec<InitPartition>> {
    check_g(data.nrows(), g)?;
    Ok(generate_rows(&Rows::new(data), g, battery))
}

fn generate_rows(rows: &Rows, g: usize, battery: &InitBattery) -> Vec<InitPartition> {
    let mut parts = Vec::new();
    let mut push = |kind, assignment| {
        let id = parts.len();
        parts.push(InitPartition { id, kind, assignment });
    };
    if g == 1 {
        push(InitKind::KMeans, Assignment::Hard(vec![0; rows.n]));
    } else {
        let mut seen = HashSet::new();
        for k in 0..battery.kmeans_count {
            let labels = canonical_labels(&kmeans_rows(rows, g, derive_seed(battery.master_seed, k as u64), KMEANS_MAX_ITER));
            if seen.insert(labels.clone()) {
                push(InitKind::KMeans, Assignment::Hard(labels));
            }
        }
        for k in 0..battery.soft_count {
            let seed = derive_seed(battery.master_seed, 1_000_000 + k as u64);
            push(InitKind::SoftRandom, Assignment::Soft(soft_random_partition(rows.n, g, seed)));
        }
        let hard_seed = derive_seed(battery.master_seed, 2_000_000);
        for labels in unique_hard_rows(rows, g, battery.hard_per_group * g, hard_seed, &mut seen) {
            push(InitKind::HardOneStep, Assignment::Hard(labels));
        }
        if battery.use_ward {
            push(InitKind::Ward, Assignment::Hard(ward_rows(rows, g)));
        }
    }
    if let Some(t) = &battery.true_labels {
        if t.len() == rows.n && n_groups(t) == g {
            push(InitKind::TrueLabels, Assignment::Hard(canonical_labels(t)));
        }
    }
    parts
}

/// Fits every partition of the battery and keeps the highest converged
/// log-likelihood (ties to the smaller id); true-label starts are excluded.
pub fn run_battery(data: &DMatrix<f64>, spec: &MixtureSpec, battery: &InitBattery) -> Result<BatteryResult> {
    spec.validate()?;
    check_g(data.nrows(), spec.g)?;
    let rows = Rows::new(data);
    let parts = generate_rows(&rows, spec.g, battery);
    log::info!(
        "{} G={}: {} starting partitions",
        spec.family,
        spec.g,
        parts.len()
    );
    let results: Vec<(InitKind, Result<MixtureFit>)> = parts
        .par_iter()
        .map(|p| (p.kind, fit_once_rows(&rows, spec, p)))
        .collect();
    select_best(results, parts.len())
}

fn select_best(results: Vec<(InitKind, Result<MixtureFit>)>, attempted: usize) -> Result<BatteryResult> {
    let mut runs = Vec::with_capacity(results.len());
    let mut best: Option<MixtureFit> = None;
    let mut best_unconverged: Option<MixtureFit> = None;
    let mut truth = None;
    let mut last_err = String::from("no partitions generated");
    for (id, (kind, res)) in results.into_iter().enumerate() {
        match res {
            Ok(fit) => {
                runs.push(RunSummary {
                    init_id: id,
                    kind,
                    loglik: Some(fit.loglik),
                    converged: fit.converged,
                    iterations: fit.iterations,
                    error: None,
                });
                if kind == InitKind::TrueLabels {
                    truth = Some(fit);
                    continue;
                }
                let slot = if fit.converged { &mut best } else { &mut best_unconverged };
                if slot.as_ref().is_none_or(|b| fit.loglik > b.loglik + TIE_TOL) {
                    *slot = Some(fit);
                }
            }
            Err(e) => {
                last_err = e.to_string();
                runs.push(RunSummary {
                    init_id: id,
                    kind,
                    loglik: None,
                    converged: false,
                    iterations: 0,
                    error: Some(last_err.clone()),
                });
            }
        }
    }
    let best = best.or(best_unconverged).ok_or(Error::AllRunsFailed { attempted, last: last_err })?;
    Ok(BatteryResult {
        best,
        runs,
        true_label_fit: truth,
    })
}
