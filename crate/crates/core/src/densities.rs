//! Component densities (multivariate Gaussian, variance-gamma, generalized
//! hyperbolic), all evaluated in log space, and exact samplers built on the
//! normal variance-mean construction `X = μ + Wα + √W V`, `V ~ N(0, Σ)`.

use crate::error::{Error, Result};
use crate::mathcore::{log_bessel_k_raw, log_bessel_k_triple_raw, dlog_bessel_k_dnu_raw};
use crate::transforms::TransGaussianParams;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_2: f64 = std::f64::consts::LN_2;

/// Smallest Mahalanobis distance handed to the posterior GIG of a VG component.
pub(crate) const VG_DELTA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    #[serde(with = "crate::serde_mat::vector")]
    pub mu: DVector<f64>,
    #[serde(with = "crate::serde_mat::matrix")]
    pub sigma: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VgParams {
    #[serde(with = "crate::serde_mat::vector")]
    pub mu: DVector<f64>,
    #[serde(with = "crate::serde_mat::matrix")]
    pub sigma: DMatrix<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub alpha: DVector<f64>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhParams {
    #[serde(with = "crate::serde_mat::vector")]
    pub mu: DVector<f64>,
    #[serde(with = "crate::serde_mat::matrix")]
    pub sigma: DMatrix<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub alpha: DVector<f64>,
    pub lambda: f64,
    pub omega: f64,
}

/// `δ = (x−μ)′Σ⁻¹(x−μ)` and `ρ = α′Σ⁻¹α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadForms {
    pub delta: f64,
    pub rho: f64,
}

/// Parameters of one mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ComponentParams {
    Gaussian(GaussianParams),
    Vg(VgParams),
    Gh(GhParams),
    Transformed(TransGaussianParams),
}

impl ComponentParams {
    pub fn dim(&self) -> usize {
        self.mu().len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        match self {
            ComponentParams::Gaussian(g) => &g.mu,
            ComponentParams::Vg(v) => &v.mu,
            ComponentParams::Gh(g) => &g.mu,
            ComponentParams::Transformed(t) => &t.mu,
        }
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        match self {
            ComponentParams::Gaussian(g) => &g.sigma,
            ComponentParams::Vg(v) => &v.sigma,
            ComponentParams::Gh(g) => &g.sigma,
            ComponentParams::Transformed(t) => &t.sigma,
        }
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        match self {
            ComponentParams::Gaussian(g) => log_density_gaussian(x, g),
            ComponentParams::Vg(v) => log_density_vg(x, v),
            ComponentParams::Gh(g) => log_density_gh(x, g),
            ComponentParams::Transformed(t) => crate::transforms::log_density_trans_gaussian(x, t),
        }
    }
}

/// Lower Cholesky factor stored row-major, with `ln|Σ|`.
#[derive(Debug, Clone)]
pub struct CholFactor {
    p: usize,
    l: Vec<f64>,
    pub log_det: f64,
}

impl CholFactor {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let p = sigma.nrows();
        if sigma.ncols() != p {
            return Err(Error::Dimension { expected: p, got: sigma.ncols() });
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite entries".into()));
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let lm = chol.l();
        let mut l = vec![0.0; p * p];
        let mut log_det = 0.0;
        for i in 0..p {
            for j in 0..=i {
                l[i * p + j] = lm[(i, j)];
            }
            let d = lm[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite("non-positive pivot".into()));
            }
            log_det += 2.0 * d.ln();
        }
        Ok(Self { p, l, log_det })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Solves `L out = v` by forward substitution.
    #[inline]
    pub fn solve_lower(&self, v: &[f64], out: &mut [f64]) {
        let p = self.p;
        for i in 0..p {
            let row = &self.l[i * p..i * p + i];
            let mut s = v[i];
            for (lij, oj) in row.iter().zip(out.iter()) {
                s -= lij * oj;
            }
            out[i] = s / self.l[i * p + i];
        }
    }

    /// `(x−μ)′Σ⁻¹(x−μ)`; `work` receives `L⁻¹(x−μ)`.
    #[inline]
    pub fn mahalanobis(&self, x: &[f64], mu: &[f64], work: &mut [f64]) -> f64 {
        let p = self.p;
        for i in 0..p {
            let row = &self.l[i * p..i * p + i];
            let mut s = x[i] - mu[i];
            for (lij, oj) in row.iter().zip(work.iter()) {
                s -= lij * oj;
            }
            work[i] = s / self.l[i * p + i];
        }
        work[..p].iter().map(|v| v * v).sum()
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let p = self.p;
        for i in 0..p {
            out[i] = (0..=i).map(|j| self.l[i * p + j] * z[j]).sum();
        }
    }
}

/// Location, scale factor and whitened skewness of a VG or GH component.
#[derive(Debug, Clone)]
pub(crate) struct PreparedSkew {
    pub chol: CholFactor,
    pub mu: Vec<f64>,
    /// `L⁻¹α`, so that `(x−μ)′Σ⁻¹α = (L⁻¹(x−μ))·(L⁻¹α)`.
    pub alpha_w: Vec<f64>,
    pub rho: f64,
}

impl PreparedSkew {
    pub fn new(mu: &DVector<f64>, sigma: &DMatrix<f64>, alpha: &DVector<f64>) -> Result<Self> {
        let p = mu.len();
        if sigma.nrows() != p || alpha.len() != p {
            return Err(Error::Dimension { expected: p, got: sigma.nrows().max(alpha.len()) });
        }
        let chol = CholFactor::new(sigma)?;
        let mut alpha_w = vec![0.0; p];
        chol.solve_lower(alpha.as_slice(), &mut alpha_w);
        let rho = alpha_w.iter().map(|v| v * v).sum();
        Ok(Self {
            chol,
            mu: mu.as_slice().to_vec(),
            alpha_w,
            rho,
        })
    }

    /// Returns `(δ, (x−μ)′Σ⁻¹α)`.
    #[inline]
    pub fn forms(&self, x: &[f64], work: &mut [f64]) -> (f64, f64) {
        let delta = self.chol.mahalanobis(x, &self.mu, work);
        let cross = work.iter().zip(&self.alpha_w).map(|(a, b)| a * b).sum();
        (delta, cross)
    }
}

/// Log-density and, optionally, posterior moments of the mixing variable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SkewPoint {
    pub log_density: f64,
    pub e_w: f64,
    pub e_inv_w: f64,
    pub e_log_w: f64,
}

/// Parameter-only part of `ln f_VG`.
pub(crate) fn vg_log_const(gamma: f64, p: usize, log_det: f64) -> f64 {
    LN_2 + gamma * gamma.ln() - 0.5 * p as f64 * LN_2PI - 0.5 * log_det - ln_gamma(gamma)
}

/// Parameter-only part of `ln f_GH`.
pub(crate) fn gh_log_const(lambda: f64, omega: f64, p: usize, log_det: f64) -> f64 {
    -0.5 * p as f64 * LN_2PI - 0.5 * log_det - log_bessel_k_raw(lambda, omega)
}

pub(crate) fn vg_point(
    delta: f64,
    cross: f64,
    rho: f64,
    gamma: f64,
    p: usize,
    log_const: f64,
    latent: bool,
) -> SkewPoint {
    let nu = gamma - 0.5 * p as f64;
    let psi = rho + 2.0 * gamma;
    let log_density = if delta > 0.0 {
        let s = (delta * psi).sqrt();
        log_const + cross + 0.5 * nu * (delta.ln() - psi.ln()) + log_bessel_k_raw(nu, s)
    } else if nu > 0.0 {
        // K_ν(z) ~ Γ(ν)/2 · (z/2)^{−ν} as z → 0
        log_const + cross + ln_gamma(nu) + (nu - 1.0) * LN_2 - nu * psi.ln()
    } else {
        f64::INFINITY
    };
    let mut out = SkewPoint {
        log_density,
        e_w: f64::NAN,
        e_inv_w: f64::NAN,
        e_log_w: f64::NAN,
    };
    if latent {
        let chi = delta.max(VG_DELTA_FLOOR);
        fill_gig_moments(&mut out, chi, psi, nu);
    }
    out
}

pub(crate) fn gh_point(
    delta: f64,
    cross: f64,
    rho: f64,
    lambda: f64,
    omega: f64,
    p: usize,
    log_const: f64,
    latent: bool,
) -> SkewPoint {
    let nu = lambda - 0.5 * p as f64;
    let a = delta + omega;
    let b = rho + omega;
    let s = (a * b).sqrt();
    let mut out = SkewPoint {
        log_density: f64::NAN,
        e_w: f64::NAN,
        e_inv_w: f64::NAN,
        e_log_w: f64::NAN,
    };
    let ln_r = 0.5 * (a.ln() - b.ln());
    if latent {
        let (lk_m, lk, lk_p) = log_bessel_k_triple_raw(nu, s);
        out.log_density = log_const + cross + nu * ln_r + lk;
        out.e_w = (ln_r + lk_p - lk).exp();
        out.e_inv_w = (lk_m - lk - ln_r).exp();
        out.e_log_w = ln_r + dlog_bessel_k_dnu_raw(nu, s);
    } else {
        out.log_density = log_const + cross + nu * ln_r + log_bessel_k_raw(nu, s);
    }
    out
}

fn fill_gig_moments(out: &mut SkewPoint, chi: f64, psi: f64, nu: f64) {
    let s = (chi * psi).sqrt();
    let ln_r = 0.5 * (chi.ln() - psi.ln());
    let (lk_m, lk, lk_p) = log_bessel_k_triple_raw(nu, s);
    out.e_w = (ln_r + lk_p - lk).exp();
    out.e_inv_w = (lk_m - lk - ln_r).exp();
    out.e_log_w = ln_r + dlog_bessel_k_dnu_raw(nu, s);
}

fn check_point(x: &[f64], p: usize) -> Result<()> {
    if x.len() != p {
        return Err(Error::Dimension { expected: p, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("observation has non-finite coordinates".into()));
    }
    Ok(())
}

/// Quadratic forms `δ` and `ρ` for a VG or GH component.
pub fn quad_forms(x: &[f64], mu: &DVector<f64>, sigma: &DMatrix<f64>, alpha: &DVector<f64>) -> Result<QuadForms> {
    check_point(x, mu.len())?;
    let prep = PreparedSkew::new(mu, sigma, alpha)?;
    let mut work = vec![0.0; mu.len()];
    let (delta, _) = prep.forms(x, &mut work);
    Ok(QuadForms { delta, rho: prep.rho })
}

impl VgParams {
    pub fn quad_forms(&self, x: &[f64]) -> Result<QuadForms> {
        quad_forms(x, &self.mu, &self.sigma, &self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Domain(format!("VG concentration must be positive, got {}", self.gamma)));
        }
        Ok(())
    }
}

impl GhParams {
    pub fn quad_forms(&self, x: &[f64]) -> Result<QuadForms> {
        quad_forms(x, &self.mu, &self.sigma, &self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() || !self.lambda.is_finite() {
            return Err(Error::Domain(format!(
                "GH needs finite λ and ω > 0, got λ={} ω={}",
                self.lambda, self.omega
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn log_density_gaussian_prepared(x: &[f64], mu: &[f64], chol: &CholFactor, work: &mut [f64]) -> f64 {
    let delta = chol.mahalanobis(x, mu, work);
    -0.5 * (chol.dim() as f64 * LN_2PI + chol.log_det + delta)
}

pub fn log_density_gaussian(x: &[f64], params: &GaussianParams) -> Result<f64> {
    check_point(x, params.mu.len())?;
    let chol = CholFactor::new(&params.sigma)?;
    let mut work = vec![0.0; x.len()];
    Ok(log_density_gaussian_prepared(x, params.mu.as_slice(), &chol, &mut work))
}

/// `ln f_VG(x)`. At `x = μ` the value is the finite limit when `γ > p/2` and
/// `+∞` otherwise (the unbounded-likelihood boundary).
pub fn log_density_vg(x: &[f64], params: &VgParams) -> Result<f64> {
    params.validate()?;
    let p = params.mu.len();
    check_point(x, p)?;
    let prep = PreparedSkew::new(&params.mu, &params.sigma, &params.alpha)?;
    let mut work = vec![0.0; p];
    let (delta, cross) = prep.forms(x, &mut work);
    let c = vg_log_const(params.gamma, p, prep.chol.log_det);
    Ok(vg_point(delta, cross, prep.rho, params.gamma, p, c, false).log_density)
}

/// `ln f_GH(x)`, in the standard form with `(2π)^{p/2}` and `exp{(x−μ)′Σ⁻¹α}`.
pub fn log_density_gh(x: &[f64], params: &GhParams) -> Result<f64> {
    params.validate()?;
    let p = params.mu.len();
    check_point(x, p)?;
    let prep = PreparedSkew::new(&params.mu, &params.sigma, &params.alpha)?;
    let mut work = vec![0.0; p];
    let (delta, cross) = prep.forms(x, &mut work);
    let c = gh_log_const(params.lambda, params.omega, p, prep.chol.log_det);
    Ok(gh_point(delta, cross, prep.rho, params.lambda, params.omega, p, c, false).log_density)
}

// ---------------------------------------------------------------------------
// Sampling

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

/// Ratio-of-uniforms without mode shift (Hörmann & Leydold).
fn gig_rou_noshift<R: Rng + ?Sized>(rng: &mut R, lambda: f64, omega: f64) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Ratio-of-uniforms with mode shift, for `λ > 2` or `ω > 3`.
fn gig_rou_shift<R: Rng + ?Sized>(rng: &mut R, lambda: f64, omega: f64) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.random();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a three-piece hat, for `λ < 1` and small `ω`.
fn gig_small_omega<R: Rng + ?Sized>(rng: &mut R, lambda: f64, omega: f64) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let a = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * a).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        let u = rng.random::<f64>() * hx;
        if x > 0.0 && u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// One draw from the GIG law with density `∝ w^{ν−1} exp{−(χ/w + ψw)/2}`.
pub fn sample_gig<R: Rng + ?Sized>(rng: &mut R, chi: f64, psi: f64, nu: f64) -> f64 {
    if chi == 0.0 {
        let g = Gamma::new(nu, 2.0 / psi).expect("validated gamma parameters");
        return g.sample(rng);
    }
    let omega = (chi * psi).sqrt();
    let alpha = (chi / psi).sqrt();
    let lambda = nu.abs();
    let x = if lambda > 2.0 || omega > 3.0 {
        gig_rou_shift(rng, lambda, omega)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        gig_rou_noshift(rng, lambda, omega)
    } else {
        gig_small_omega(rng, lambda, omega)
    };
    if nu < 0.0 {
        alpha / x
    } else {
        alpha * x
    }
}

fn sample_mixing<R: Rng + ?Sized>(rng: &mut R, params: &ComponentParams) -> f64 {
    match params {
        ComponentParams::Gaussian(_) | ComponentParams::Transformed(_) => 1.0,
        ComponentParams::Vg(v) => Gamma::new(v.gamma, 1.0 / v.gamma)
            .expect("validated VG concentration")
            .sample(rng),
        ComponentParams::Gh(g) => sample_gig(rng, g.omega, g.omega, g.lambda),
    }
}

/// Draws one observation into `out`. Transformed components reject Gaussian
/// draws that fall outside the range of the transformation.
pub fn sample_into<R: Rng + ?Sized>(rng: &mut R, params: &ComponentParams, chol: &CholFactor, out: &mut [f64]) {
    let p = params.dim();
    let mut z = vec![0.0; p];
    let mut v = vec![0.0; p];
    loop {
        let w = sample_mixing(rng, params);
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        chol.mul_lower(&z, &mut v);
        let sw = w.sqrt();
        let mu = params.mu();
        match params {
            ComponentParams::Vg(VgParams { alpha, .. }) | ComponentParams::Gh(GhParams { alpha, .. }) => {
                for j in 0..p {
                    out[j] = mu[j] + w * alpha[j] + sw * v[j];
                }
                return;
            }
            ComponentParams::Gaussian(_) => {
                for j in 0..p {
                    out[j] = mu[j] + v[j];
                }
                return;
            }
            ComponentParams::Transformed(t) => {
                let y: Vec<f64> = (0..p).map(|j| mu[j] + v[j]).collect();
                if let Some(x) = t.transform.inverse(&y) {
                    out.copy_from_slice(&x);
                    return;
                }
            }
        }
    }
}

/// `n` i.i.d. draws as an `n × p` matrix; deterministic given `seed`.
pub fn sample_component(params: &ComponentParams, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Input("sample size must be at least 1".into()));
    }
    match params {
        ComponentParams::Vg(v) => v.validate()?,
        ComponentParams::Gh(g) => g.validate()?,
        _ => {}
    }
    let chol = CholFactor::new(params.sigma())?;
    let p = params.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    for i in 0..n {
        sample_into(&mut rng, params, &chol, &mut row);
        for j in 0..p {
            out[(i, j)] = row[j];
        }
    }
    Ok(out)
}
