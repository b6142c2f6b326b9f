//! ECM fitting of finite mixtures for the Gaussian, VG, GH, Manly-Gaussian and
//! power-Gaussian families.

use crate::densities::{
    gh_log_const, gh_point, vg_log_const, vg_point, CholFactor, ComponentParams, GaussianParams, GhParams,
    PreparedSkew, VgParams,
};
use crate::error::{Error, Result};
use crate::init::{Assignment, InitPartition};
use crate::mathcore::{digamma, log_bessel_k_raw};
use crate::optim::{find_root, maximize_bounded, nelder_mead_max};
use crate::transforms::{log_jacobian, TransGaussianParams, TransformKind, TransformVector, BRANCH_TOL, MANLY_MAX_EXPONENT};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 2000;

/// Search interval for the VG concentration root.
pub const GAMMA_BOUNDS: (f64, f64) = (1e-3, 200.0);
/// Search intervals for the GH index and concentration.
pub const LAMBDA_BOUNDS: (f64, f64) = (-50.0, 50.0);
pub const OMEGA_BOUNDS: (f64, f64) = (1e-3, 500.0);
/// Coordinate sweeps over (λ, ω) per CM cycle.
const GH_SWEEPS: usize = 2;
/// Simplex iterations for the transformation parameters per CM cycle.
const TRANSFORM_NM_ITERS: u64 = 50;
/// Initial simplex edge for the transformation search; later cycles shrink it
/// to twice the previous move, but not below `TRANSFORM_NM_MIN_STEP`.
const TRANSFORM_NM_STEP: f64 = 0.1;
const TRANSFORM_NM_MIN_STEP: f64 = 1e-3;
const RIDGE_FACTOR: f64 = 1e-8;
/// Smallest admissible ratio of extreme eigenvalues of a component scale
/// matrix; below it the component is treated as collapsed onto a subspace.
pub const MIN_RECIPROCAL_CONDITION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Vg,
    Gh,
    Manly,
    Power,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Gaussian, Family::Vg, Family::Gh, Family::Manly, Family::Power];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Vg => "vg",
            Family::Gh => "gh",
            Family::Manly => "manly",
            Family::Power => "power",
        }
    }

    pub fn transform_kind(self) -> Option<TransformKind> {
        match self {
            Family::Manly => Some(TransformKind::Manly),
            Family::Power => Some(TransformKind::Power),
            _ => None,
        }
    }

    pub fn is_skewed(self) -> bool {
        matches!(self, Family::Vg | Family::Gh)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(Family::Gaussian),
            "vg" => Ok(Family::Vg),
            "gh" => Ok(Family::Gh),
            "manly" => Ok(Family::Manly),
            "power" => Ok(Family::Power),
            other => Err(Error::Input(format!("unknown family '{other}'"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub family: Family,
    pub g: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl MixtureSpec {
    pub fn new(family: Family, g: usize) -> Self {
        Self {
            family,
            g,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g == 0 {
            return Err(Error::Input("number of components must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixtureFit {
    pub spec: MixtureSpec,
    pub weights: Vec<f64>,
    pub components: Vec<ComponentParams>,
    pub loglik: f64,
    pub loglik_trace: Vec<f64>,
    #[serde(skip)]
    pub responsibilities: DMatrix<f64>,
    pub n_params: usize,
    pub bic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub init_id: usize,
}

impl MixtureFit {
    /// MAP labels, ties going to the lowest component index.
    pub fn labels(&self) -> Vec<usize> {
        map_labels(&self.responsibilities)
    }
}

pub fn map_labels(z: &DMatrix<f64>) -> Vec<usize> {
    (0..z.nrows())
        .map(|i| {
            let mut best = 0;
            for g in 1..z.ncols() {
                if z[(i, g)] > z[(i, best)] {
                    best = g;
                }
            }
            best
        })
        .collect()
}

/// Posterior expectations of `W`, `1/W` and `ln W`, each `n × G`.
#[derive(Debug, Clone)]
pub struct Latent {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct EStep {
    pub responsibilities: DMatrix<f64>,
    pub loglik: f64,
    pub latent: Option<Latent>,
}

/// Row-major copy of the data for cache-friendly per-observation access.
pub(crate) struct Rows {
    pub n: usize,
    pub p: usize,
    pub x: Vec<f64>,
}

impl Rows {
    pub fn new(data: &DMatrix<f64>) -> Self {
        let (n, p) = data.shape();
        let mut x = Vec::with_capacity(n * p);
        for i in 0..n {
            for j in 0..p {
                x.push(data[(i, j)]);
            }
        }
        Self { n, p, x }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }
}

enum Prepared {
    Gauss {
        chol: CholFactor,
        mu: Vec<f64>,
    },
    Vg {
        skew: PreparedSkew,
        gamma: f64,
        konst: f64,
    },
    Gh {
        skew: PreparedSkew,
        lambda: f64,
        omega: f64,
        konst: f64,
    },
    Trans {
        chol: CholFactor,
        mu: Vec<f64>,
        transform: TransformVector,
    },
}

fn prepare(c: &ComponentParams) -> Result<Prepared> {
    Ok(match c {
        ComponentParams::Gaussian(g) => Prepared::Gauss {
            chol: CholFactor::new(&g.sigma)?,
            mu: g.mu.as_slice().to_vec(),
        },
        ComponentParams::Vg(v) => {
            v.validate()?;
            let skew = PreparedSkew::new(&v.mu, &v.sigma, &v.alpha)?;
            let konst = vg_log_const(v.gamma, v.mu.len(), skew.chol.log_det);
            Prepared::Vg { skew, gamma: v.gamma, konst }
        }
        ComponentParams::Gh(g) => {
            g.validate()?;
            let skew = PreparedSkew::new(&g.mu, &g.sigma, &g.alpha)?;
            let konst = gh_log_const(g.lambda, g.omega, g.mu.len(), skew.chol.log_det);
            Prepared::Gh {
                skew,
                lambda: g.lambda,
                omega: g.omega,
                konst,
            }
        }
        ComponentParams::Transformed(t) => Prepared::Trans {
            chol: CholFactor::new(&t.sigma)?,
            mu: t.mu.as_slice().to_vec(),
            transform: t.transform.clone(),
        },
    })
}

fn e_step_rows(rows: &Rows, weights: &[f64], components: &[ComponentParams]) -> Result<EStep> {
    let g_count = components.len();
    if weights.len() != g_count || g_count == 0 {
        return Err(Error::Dimension { expected: g_count, got: weights.len() });
    }
    let p = rows.p;
    for c in components {
        if c.dim() != p {
            return Err(Error::Dimension { expected: p, got: c.dim() });
        }
    }
    let prepared = components.iter().map(prepare).collect::<Result<Vec<_>>>()?;
    let skewed = prepared.iter().any(|c| matches!(c, Prepared::Vg { .. } | Prepared::Gh { .. }));
    let n = rows.n;
    let mut z = DMatrix::zeros(n, g_count);
    let mut latent = skewed.then(|| Latent {
        a: DMatrix::zeros(n, g_count),
        b: DMatrix::zeros(n, g_count),
        c: DMatrix::zeros(n, g_count),
    });
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let mut work = vec![0.0; p];
    let mut y = vec![0.0; p];
    let mut terms = vec![0.0; g_count];
    let mut sorted = Vec::with_capacity(g_count);
    let mut loglik = 0.0;
    for i in 0..n {
        let x = rows.row(i);
        for (g, comp) in prepared.iter().enumerate() {
            let ld = match comp {
                Prepared::Gauss { chol, mu } => {
                    let d = chol.mahalanobis(x, mu, &mut work);
                    -0.5 * (p as f64 * LN_2PI + chol.log_det + d)
                }
                Prepared::Vg { skew, gamma, konst } => {
                    let (delta, cross) = skew.forms(x, &mut work);
                    let pt = vg_point(delta, cross, skew.rho, *gamma, p, *konst, true);
                    let lat = latent.as_mut().expect("latent block allocated");
                    lat.a[(i, g)] = pt.e_w;
                    lat.b[(i, g)] = pt.e_inv_w;
                    lat.c[(i, g)] = pt.e_log_w;
                    pt.log_density
                }
                Prepared::Gh {
                    skew,
                    lambda,
                    omega,
                    konst,
                } => {
                    let (delta, cross) = skew.forms(x, &mut work);
                    let pt = gh_point(delta, cross, skew.rho, *lambda, *omega, p, *konst, true);
                    let lat = latent.as_mut().expect("latent block allocated");
                    lat.a[(i, g)] = pt.e_w;
                    lat.b[(i, g)] = pt.e_inv_w;
                    lat.c[(i, g)] = pt.e_log_w;
                    pt.log_density
                }
                Prepared::Trans { chol, mu, transform } => match transform.apply_into(x, &mut y) {
                    Ok(()) => {
                        let d = chol.mahalanobis(&y, mu, &mut work);
                        -0.5 * (p as f64 * LN_2PI + chol.log_det + d) + log_jacobian(x, transform)
                    }
                    Err(_) => f64::NEG_INFINITY,
                },
            };
            if ld.is_nan() || ld == f64::INFINITY {
                return Err(Error::NonFiniteDensity {
                    component: g,
                    observation: i,
                });
            }
            if let Some(lat) = latent.as_ref() {
                if ld.is_finite() && !(lat.a[(i, g)].is_finite() && lat.b[(i, g)].is_finite() && lat.c[(i, g)].is_finite()) {
                    return Err(Error::NonFiniteDensity {
                        component: g,
                        observation: i,
                    });
                }
            }
            terms[g] = log_w[g] + ld;
        }
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::NonFiniteDensity {
                component: 0,
                observation: i,
            });
        }
        // summed in sorted order so relabelling components cannot change rounding
        sorted.clear();
        sorted.extend(terms.iter().map(|t| (t - m).exp()));
        sorted.sort_unstable_by(f64::total_cmp);
        let s: f64 = sorted.iter().sum();
        let lse = m + s.ln();
        loglik += lse;
        for g in 0..g_count {
            z[(i, g)] = (terms[g] - lse).exp();
        }
    }
    Ok(EStep {
        responsibilities: z,
        loglik,
        latent,
    })
}

/// Responsibilities, observed log-likelihood and (for VG/GH) the posterior
/// expectations of the mixing variable.
pub fn e_step(data: &DMatrix<f64>, weights: &[f64], components: &[ComponentParams]) -> Result<EStep> {
    e_step_rows(&Rows::new(data), weights, components)
}

/// Adds `1e-8·tr(Σ)/p` to the diagonal once if the Cholesky factorization
/// fails; a second failure marks the component degenerate.
pub(crate) fn ensure_pd(mut sigma: DMatrix<f64>, component: usize) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    sigma = (&sigma + sigma.transpose()) * 0.5;
    if CholFactor::new(&sigma).is_ok() {
        return Ok(sigma);
    }
    let ridge = RIDGE_FACTOR * sigma.trace() / p as f64;
    if ridge > 0.0 && ridge.is_finite() {
        for j in 0..p {
            sigma[(j, j)] += ridge;
        }
        if CholFactor::new(&sigma).is_ok() {
            return Ok(sigma);
        }
    }
    Err(Error::Degenerate(format!("component {component}: scale matrix is singular")))
}

/// [`ensure_pd`] followed by the conditioning guard.
pub(crate) fn admissible_scale(sigma: DMatrix<f64>, component: usize) -> Result<DMatrix<f64>> {
    let sigma = ensure_pd(sigma, component)?;
    let eig = sigma.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo >= MIN_RECIPROCAL_CONDITION * hi) {
        return Err(Error::Degenerate(format!(
            "component {component}: scale matrix is ill-conditioned (eigenvalue ratio {:.2e})",
            lo / hi
        )));
    }
    Ok(sigma)
}

fn weighted_moments(rows: &Rows, z: &[f64], ng: f64) -> (DVector<f64>, DMatrix<f64>) {
    let p = rows.p;
    let mut mu = DVector::zeros(p);
    for i in 0..rows.n {
        let x = rows.row(i);
        for j in 0..p {
            mu[j] += z[i] * x[j];
        }
    }
    mu /= ng;
    let mut s = DMatrix::zeros(p, p);
    let mut d = vec![0.0; p];
    for i in 0..rows.n {
        let x = rows.row(i);
        for j in 0..p {
            d[j] = x[j] - mu[j];
        }
        for j in 0..p {
            let zd = z[i] * d[j];
            for k in 0..=j {
                s[(j, k)] += zd * d[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            s[(k, j)] = s[(j, k)];
        }
    }
    (mu, s / ng)
}

/// Minimum effective size of a component before the run is declared degenerate.
fn check_group_size(ng: f64, p: usize, g: usize) -> Result<()> {
    if !(ng >= (p + 1) as f64) {
        return Err(Error::Degenerate(format!(
            "component {g} has effective size {ng:.3}, below p+1 = {}",
            p + 1
        )));
    }
    Ok(())
}

struct SkewUpdate {
    mu: DVector<f64>,
    alpha: DVector<f64>,
    sigma: DMatrix<f64>,
    a_bar: f64,
    b_bar: f64,
    c_bar: f64,
}

fn skew_location_scale(rows: &Rows, z: &[f64], a: &[f64], b: &[f64], c: &[f64], ng: f64, g: usize) -> Result<SkewUpdate> {
    let p = rows.p;
    let n = rows.n;
    let mut a_bar = 0.0;
    let mut b_bar = 0.0;
    let mut c_bar = 0.0;
    let mut sx = DVector::zeros(p);
    let mut sbx = DVector::zeros(p);
    for i in 0..n {
        let x = rows.row(i);
        a_bar += z[i] * a[i];
        b_bar += z[i] * b[i];
        c_bar += z[i] * c[i];
        for j in 0..p {
            sx[j] += z[i] * x[j];
            sbx[j] += z[i] * b[i] * x[j];
        }
    }
    a_bar /= ng;
    b_bar /= ng;
    c_bar /= ng;
    let denom = ng * (a_bar * b_bar - 1.0);
    let (mu, alpha) = if denom > 1e-10 * ng {
        ((&sbx * a_bar - &sx) / denom, (&sx * b_bar - &sbx) / denom)
    } else {
        (&sbx / (b_bar * ng), DVector::zeros(p))
    };
    let mut sb = DMatrix::zeros(p, p);
    let mut sd: DVector<f64> = DVector::zeros(p);
    let mut d = vec![0.0; p];
    for i in 0..n {
        let x = rows.row(i);
        for j in 0..p {
            d[j] = x[j] - mu[j];
            sd[j] += z[i] * d[j];
        }
        let w = z[i] * b[i];
        for j in 0..p {
            let wd = w * d[j];
            for k in 0..=j {
                sb[(j, k)] += wd * d[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            sb[(k, j)] = sb[(j, k)];
        }
    }
    let cross: DMatrix<f64> = &sd * alpha.transpose();
    let sigma = (sb - &cross - cross.transpose()) / ng + &alpha * alpha.transpose() * a_bar;
    let sigma = admissible_scale(sigma, g)?;
    Ok(SkewUpdate {
        mu,
        alpha,
        sigma,
        a_bar,
        b_bar,
        c_bar,
    })
}

/// Stationary point of `γ(ln γ + c̄ − ā) − ln Γ(γ)` on [`GAMMA_BOUNDS`].
/// The objective is concave, so the endpoint is returned when no sign change exists.
pub fn vg_gamma_update(a_bar: f64, c_bar: f64) -> f64 {
    let h = |g: f64| g.ln() + 1.0 - digamma(g).unwrap_or(f64::NAN) + c_bar - a_bar;
    let (lo, hi) = GAMMA_BOUNDS;
    let (hl, hh) = (h(lo), h(hi));
    if hl <= 0.0 {
        return lo;
    }
    if hh >= 0.0 {
        return hi;
    }
    find_root(h, lo, hi, 1e-12).unwrap_or(hi)
}

/// Expected complete-data log-likelihood of the GIG(ω, ω, λ) mixing law, per unit weight.
pub fn gh_mixing_objective(lambda: f64, omega: f64, a_bar: f64, b_bar: f64, c_bar: f64) -> f64 {
    (lambda - 1.0) * c_bar - 0.5 * omega * (a_bar + b_bar) - log_bessel_k_raw(lambda, omega)
}

/// Coordinate ascent on `(λ, ω)`; never returns a point worse than the start.
pub fn gh_index_update(lambda0: f64, omega0: f64, a_bar: f64, b_bar: f64, c_bar: f64) -> (f64, f64) {
    let q = |l: f64, w: f64| gh_mixing_objective(l, w, a_bar, b_bar, c_bar);
    let (mut lambda, mut omega) = (lambda0, omega0);
    let mut best = q(lambda, omega);
    for _ in 0..GH_SWEEPS {
        let (l_new, v) = maximize_bounded(|l| q(l, omega), LAMBDA_BOUNDS.0, LAMBDA_BOUNDS.1);
        if v > best {
            lambda = l_new;
            best = v;
        }
        let (w_new, v) = maximize_bounded(|w| q(lambda, w), OMEGA_BOUNDS.0, OMEGA_BOUNDS.1);
        if v > best {
            omega = w_new;
            best = v;
        }
    }
    (lambda, omega)
}

/// Responsibilities below this are left out of the transformation search.
const ACTIVE_WEIGHT: f64 = 1e-14;

/// Data of one component prepared for repeated evaluation of the profiled
/// transformation objective.
struct TransformProfile {
    kind: TransformKind,
    p: usize,
    ng: f64,
    w: Vec<f64>,
    x: Vec<f64>,
    /// `ln(1 + |x|)`, used by the power transform.
    l: Vec<f64>,
}

impl TransformProfile {
    fn new(rows: &Rows, z: &[f64], ng: f64, kind: TransformKind) -> Self {
        let mut w = Vec::new();
        let mut x = Vec::new();
        for i in 0..rows.n {
            if z[i] > ACTIVE_WEIGHT {
                w.push(z[i]);
                x.extend_from_slice(rows.row(i));
            }
        }
        let l = x.iter().map(|v: &f64| v.abs().ln_1p()).collect();
        Self { kind, p: rows.p, ng, w, x, l }
    }

    /// Weighted Gaussian log-likelihood of `T(x|Λ)` with `μ`, `Σ` at their
    /// closed-form maximizers, plus the weighted log-Jacobian.
    fn objective(&self, lambdas: &[f64], y: &mut [f64]) -> f64 {
        let p = self.p;
        let mut log_j = 0.0;
        for (k, &wi) in self.w.iter().enumerate() {
            let mut jac = 0.0;
            for j in 0..p {
                let idx = k * p + j;
                let (xv, lam) = (self.x[idx], lambdas[j]);
                let (t, d) = match self.kind {
                    TransformKind::Power => {
                        let lv = self.l[idx];
                        if xv >= 0.0 {
                            let t = if lam.abs() < BRANCH_TOL { lv } else { (lam * lv).exp_m1() / lam };
                            (t, (lam - 1.0) * lv)
                        } else {
                            let q = 2.0 - lam;
                            let t = if q.abs() < BRANCH_TOL { -lv } else { -(q * lv).exp_m1() / q };
                            (t, (1.0 - lam) * lv)
                        }
                    }
                    TransformKind::Manly => {
                        let e = lam * xv;
                        if e.abs() > MANLY_MAX_EXPONENT {
                            return f64::NEG_INFINITY;
                        }
                        let t = if lam.abs() < BRANCH_TOL { xv } else { e.exp_m1() / lam };
                        (t, e)
                    }
                };
                y[idx] = t;
                jac += d;
            }
            log_j += wi * jac;
        }
        let s = self.scatter(y);
        match CholFactor::new(&s) {
            Ok(ch) => -0.5 * self.ng * (p as f64 * LN_2PI + ch.log_det + p as f64) + log_j,
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn mean(&self, y: &[f64]) -> DVector<f64> {
        let p = self.p;
        let mut mu = DVector::zeros(p);
        for (k, &wi) in self.w.iter().enumerate() {
            for j in 0..p {
                mu[j] += wi * y[k * p + j];
            }
        }
        mu / self.ng
    }

    fn scatter(&self, y: &[f64]) -> DMatrix<f64> {
        let p = self.p;
        let mu = self.mean(y);
        let mut s = DMatrix::zeros(p, p);
        let mut d = vec![0.0; p];
        for (k, &wi) in self.w.iter().enumerate() {
            for j in 0..p {
                d[j] = y[k * p + j] - mu[j];
            }
            for j in 0..p {
                let wd = wi * d[j];
                for m in 0..=j {
                    s[(j, m)] += wd * d[m];
                }
            }
        }
        for j in 0..p {
            for m in 0..j {
                s[(m, j)] = s[(j, m)];
            }
        }
        s / self.ng
    }
}

fn transform_update(rows: &Rows, z: &[f64], ng: f64, previous: &TransformVector, g: usize, step: &mut f64) -> Result<TransGaussianParams> {
    let kind = previous.kind;
    let prof = TransformProfile::new(rows, z, ng, kind);
    let y = std::cell::RefCell::new(vec![0.0; prof.x.len()]);
    let (best, value) = nelder_mead_max(
        |l: &[f64]| prof.objective(l, &mut y.borrow_mut()),
        &previous.lambdas,
        *step,
        TRANSFORM_NM_ITERS,
    );
    let moved = best
        .iter()
        .zip(&previous.lambdas)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    *step = (2.0 * moved).clamp(TRANSFORM_NM_MIN_STEP, TRANSFORM_NM_STEP);
    if !value.is_finite() {
        return Err(Error::Degenerate(format!("component {g}: transformation out of range")));
    }
    let mut y = y.into_inner();
    prof.objective(&best, &mut y);
    let mu = prof.mean(&y);
    let sigma = admissible_scale(prof.scatter(&y), g)?;
    Ok(TransGaussianParams {
        transform: TransformVector { kind, lambdas: best },
        mu,
        sigma,
    })
}

fn cm_steps_rows(
    rows: &Rows,
    estep: &EStep,
    family: Family,
    previous: &[ComponentParams],
    simplex_steps: &mut [f64],
) -> Result<(Vec<ComponentParams>, Vec<f64>)> {
    let z = &estep.responsibilities;
    let (n, g_count) = z.shape();
    if n != rows.n || previous.len() != g_count {
        return Err(Error::Dimension { expected: g_count, got: previous.len() });
    }
    let p = rows.p;
    let mut weights = Vec::with_capacity(g_count);
    let mut comps = Vec::with_capacity(g_count);
    for g in 0..g_count {
        let zg = z.column(g);
        let zg = zg.as_slice();
        let ng: f64 = zg.iter().sum();
        check_group_size(ng, p, g)?;
        weights.push(ng / n as f64);
        let comp = match family {
            Family::Gaussian => {
                let (mu, sigma) = weighted_moments(rows, zg, ng);
                ComponentParams::Gaussian(GaussianParams {
                    mu,
                    sigma: admissible_scale(sigma, g)?,
                })
            }
            Family::Vg | Family::Gh => {
                let lat = estep
                    .latent
                    .as_ref()
                    .ok_or_else(|| Error::Input("skewed family requires latent expectations".into()))?;
                let up = skew_location_scale(
                    rows,
                    zg,
                    lat.a.column(g).as_slice(),
                    lat.b.column(g).as_slice(),
                    lat.c.column(g).as_slice(),
                    ng,
                    g,
                )?;
                match (family, &previous[g]) {
                    (Family::Vg, _) => {
                        let gamma = vg_gamma_update(up.a_bar, up.c_bar).max(0.5 * p as f64);
                        ComponentParams::Vg(VgParams {
                            mu: up.mu,
                            sigma: up.sigma,
                            alpha: up.alpha,
                            gamma,
                        })
                    }
                    (_, ComponentParams::Gh(old)) => {
                        let (lambda, omega) = gh_index_update(old.lambda, old.omega, up.a_bar, up.b_bar, up.c_bar);
                        ComponentParams::Gh(GhParams {
                            mu: up.mu,
                            sigma: up.sigma,
                            alpha: up.alpha,
                            lambda,
                            omega,
                        })
                    }
                    _ => return Err(Error::Input("previous parameters do not match the GH family".into())),
                }
            }
            Family::Manly | Family::Power => {
                let ComponentParams::Transformed(old) = &previous[g] else {
                    return Err(Error::Input("previous parameters do not match the transform family".into()));
                };
                ComponentParams::Transformed(transform_update(rows, zg, ng, &old.transform, g, &mut simplex_steps[g])?)
            }
        };
        comps.push(comp);
    }
    Ok((comps, weights))
}

/// One cycle of conditional maximizations given an E-step. `previous` supplies
/// warm starts for the iterative updates.
pub fn cm_steps(data: &DMatrix<f64>, estep: &EStep, family: Family, previous: &[ComponentParams]) -> Result<(Vec<ComponentParams>, Vec<f64>)> {
    let mut steps = vec![TRANSFORM_NM_STEP; previous.len()];
    cm_steps_rows(&Rows::new(data), estep, family, previous, &mut steps)
}

/// Starting parameters from a partition: weighted moments, zero skewness,
/// identity transformation.
pub fn initial_parameters(data: &DMatrix<f64>, family: Family, z: &DMatrix<f64>) -> Result<(Vec<ComponentParams>, Vec<f64>)> {
    initial_parameters_rows(&Rows::new(data), family, z)
}

fn initial_parameters_rows(rows: &Rows, family: Family, z: &DMatrix<f64>) -> Result<(Vec<ComponentParams>, Vec<f64>)> {
    let p = rows.p;
    let n = rows.n;
    let mut comps = Vec::new();
    let mut weights = Vec::new();
    for g in 0..z.ncols() {
        let zg = z.column(g);
        let zg = zg.as_slice();
        let ng: f64 = zg.iter().sum();
        check_group_size(ng, p, g)?;
        weights.push(ng / n as f64);
        let (mu, sigma) = weighted_moments(rows, zg, ng);
        let sigma = admissible_scale(sigma, g)?;
        comps.push(match family {
            Family::Gaussian => ComponentParams::Gaussian(GaussianParams { mu, sigma }),
            Family::Vg => ComponentParams::Vg(VgParams {
                mu,
                sigma,
                alpha: DVector::zeros(p),
                gamma: (0.5 * p as f64 + 0.5).max(2.0),
            }),
            Family::Gh => ComponentParams::Gh(GhParams {
                mu,
                sigma,
                alpha: DVector::zeros(p),
                lambda: 1.0,
                omega: 2.0,
            }),
            Family::Manly | Family::Power => ComponentParams::Transformed(TransGaussianParams {
                transform: TransformVector::identity(family.transform_kind().expect("transform family"), p),
                mu,
                sigma,
            }),
        });
    }
    Ok((comps, weights))
}

fn assignment_matrix(init: &InitPartition, n: usize, g: usize) -> Result<DMatrix<f64>> {
    match &init.assignment {
        Assignment::Hard(labels) => {
            if labels.len() != n {
                return Err(Error::Dimension { expected: n, got: labels.len() });
            }
            let mut z = DMatrix::zeros(n, g);
            for (i, &l) in labels.iter().enumerate() {
                if l >= g {
                    return Err(Error::Input(format!("label {l} out of range for {g} components")));
                }
                z[(i, l)] = 1.0;
            }
            Ok(z)
        }
        Assignment::Soft(z) => {
            if z.shape() != (n, g) {
                return Err(Error::Dimension { expected: n * g, got: z.len() });
            }
            Ok(z.clone())
        }
    }
}

/// Runs ECM from one starting partition until the relative log-likelihood
/// change drops below `spec.tol` or `spec.max_iter` cycles have run.
pub fn fit_once(data: &DMatrix<f64>, spec: &MixtureSpec, init: &InitPartition) -> Result<MixtureFit> {
    spec.validate()?;
    let rows = Rows::new(data);
    fit_once_rows(&rows, spec, init)
}

pub(crate) fn fit_once_rows(rows: &Rows, spec: &MixtureSpec, init: &InitPartition) -> Result<MixtureFit> {
    let (n, p) = (rows.n, rows.p);
    if n < spec.g {
        return Err(Error::Input(format!("{n} observations cannot support {} components", spec.g)));
    }
    let z0 = assignment_matrix(init, n, spec.g)?;
    let (mut comps, mut weights) = initial_parameters_rows(rows, spec.family, &z0)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut estep = e_step_rows(rows, &weights, &comps)?;
    trace.push(estep.loglik);
    let mut steps = vec![TRANSFORM_NM_STEP; spec.g];
    while iterations < spec.max_iter {
        let (c, w) = cm_steps_rows(rows, &estep, spec.family, &comps, &mut steps)?;
        comps = c;
        weights = w;
        estep = e_step_rows(rows, &weights, &comps)?;
        iterations += 1;
        let prev = *trace.last().expect("trace is non-empty");
        trace.push(estep.loglik);
        if (estep.loglik - prev) / estep.loglik.abs() < spec.tol {
            converged = true;
            break;
        }
    }
    let n_params = count_params(spec.family, spec.g, p);
    Ok(MixtureFit {
        spec: *spec,
        weights,
        components: comps,
        loglik: estep.loglik,
        loglik_trace: trace,
        responsibilities: estep.responsibilities,
        n_params,
        bic: bic(estep.loglik, n_params, n),
        converged,
        iterations,
        init_id: init.id,
    })
}

/// Number of free parameters.
pub fn count_params(family: Family, g: usize, p: usize) -> usize {
    let base = g.saturating_sub(1) + g * p + g * p * (p + 1) / 2;
    base + match family {
        Family::Gaussian => 0,
        Family::Vg => g * (p + 1),
        Family::Gh => g * (p + 2),
        Family::Manly | Family::Power => g * p,
    }
}

/// `m ln n − 2ℓ`; lower is better.
pub fn bic(loglik: f64, m: usize, n: usize) -> f64 {
    m as f64 * (n as f64).ln() - 2.0 * loglik
}
