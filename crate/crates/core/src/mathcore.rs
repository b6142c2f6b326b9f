//! Special functions behind the variance-gamma and generalized hyperbolic
//! densities: the modified Bessel function of the third kind `K_ν`, log-gamma,
//! digamma, and moments of the generalized inverse Gaussian (GIG) law.
//!
//! Everything is evaluated in log space. `K_ν(x)` is computed from Temme's
//! series (x ≤ 2) or Steed's continued fraction (x > 2) at the fractional
//! order `μ = ν − round(ν)`, followed by the forward recurrence
//! `K_{μ+k+1} = 2(μ+k)/x · K_{μ+k} + K_{μ+k−1}`, which is stable for `K`.
//! The recurrence runs on ratios, so orders up to a few hundred at tiny
//! arguments never overflow.

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
const LN_2: f64 = std::f64::consts::LN_2;

/// Step on ν used for the central difference of `ln K_ν(x)`.
pub const DNU_STEP: f64 = 1e-5;

/// Taylor coefficients of `1/Γ(z)` around `z = 0`, i.e. `1/Γ(z) = Σ c_k z^k`.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Returns `(gam1, gam2, 1/Γ(1+μ), 1/Γ(1−μ))` for `|μ| ≤ 1/2`, where
/// `gam1 = (1/Γ(1−μ) − 1/Γ(1+μ)) / (2μ)` and `gam2 = (1/Γ(1−μ) + 1/Γ(1+μ)) / 2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // 1/Γ(1+μ) = Σ_{k≥1} c_k μ^{k−1}; split into even and odd powers of μ.
    let mu2 = mu * mu;
    let mut even = 0.0; // Σ c_{2j+1} μ^{2j}
    let mut odd = 0.0; // Σ c_{2j+2} μ^{2j}
    for j in (0..RECIP_GAMMA.len() / 2).rev() {
        even = even * mu2 + RECIP_GAMMA[2 * j];
        odd = odd * mu2 + RECIP_GAMMA[2 * j + 1];
    }
    let gampl = even + mu * odd;
    let gammi = even - mu * odd;
    (-odd, even, gampl, gammi)
}

/// `(ln K_μ(x), K_{μ+1}(x)/K_μ(x))` by Temme's series, `|μ| ≤ 1/2`, `0 < x ≤ 2`.
fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    let x2 = 0.5 * x;
    let pimu = std::f64::consts::PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    let k_mu = sum;
    let k_mu1 = sum1 * 2.0 / x;
    (k_mu.ln(), k_mu1 / k_mu)
}

/// `(ln K_μ(x), K_{μ+1}(x)/K_μ(x))` by Steed's continued fraction, `x > 2`.
fn steed_cf2(mu: f64, x: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let ln_k = 0.5 * (std::f64::consts::PI / (2.0 * x)).ln() - x - s.ln();
    let ratio = (mu + x + 0.5 - h) / x;
    (ln_k, ratio)
}

/// `(ln K_ν(x), K_{ν+1}(x)/K_ν(x))` for `ν ≥ 0`, `x > 0`.
fn log_k_and_ratio(nu: f64, x: f64) -> (f64, f64) {
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut ln_k, mut ratio) = if x <= 2.0 {
        temme_series(mu, x)
    } else {
        steed_cf2(mu, x)
    };
    let steps = nl as usize;
    // Running product of ratios; flushed into ln_k before it can overflow.
    let mut prod = 1.0;
    for i in 1..=steps {
        prod *= ratio;
        if prod > 1e250 {
            ln_k += prod.ln();
            prod = 1.0;
        }
        ratio = 2.0 * (mu + i as f64) / x + 1.0 / ratio;
    }
    ln_k += prod.ln();
    (ln_k, ratio)
}

fn check_args(nu: f64, x: f64) -> Result<()> {
    if !nu.is_finite() || !x.is_finite() {
        return domain(format!("log_bessel_k: non-finite input (nu={nu}, x={x})"));
    }
    if x <= 0.0 {
        return domain(format!("log_bessel_k: argument must be positive, got {x}"));
    }
    Ok(())
}

/// `ln K_ν(x)`, the log of the modified Bessel function of the third kind.
pub fn log_bessel_k(nu: f64, x: f64) -> Result<f64> {
    check_args(nu, x)?;
    Ok(log_k_and_ratio(nu.abs(), x).0)
}

/// `ln K_ν(x)` without argument checks; caller guarantees `x > 0` and finite inputs.
#[inline]
pub(crate) fn log_bessel_k_raw(nu: f64, x: f64) -> f64 {
    log_k_and_ratio(nu.abs(), x).0
}

/// `(ln K_{ν−1}(x), ln K_ν(x), ln K_{ν+1}(x))`.
pub fn log_bessel_k_triple(nu: f64, x: f64) -> Result<(f64, f64, f64)> {
    check_args(nu, x)?;
    Ok(log_bessel_k_triple_raw(nu, x))
}

pub(crate) fn log_bessel_k_triple_raw(nu: f64, x: f64) -> (f64, f64, f64) {
    if nu >= 1.0 {
        // ν−1 ≥ 0: one sweep from ν−1 gives all three.
        let (lk_m, r_m) = log_k_and_ratio(nu - 1.0, x);
        let lk = lk_m + r_m.ln();
        let r = 2.0 * (nu) / x + 1.0 / r_m;
        (lk_m, lk, lk + r.ln())
    } else if nu <= -1.0 {
        // K_{ν+1} = K_{−ν−1}, K_ν = K_{−ν}, K_{ν−1} = K_{−ν+1}.
        let (a, b, c) = log_bessel_k_triple_raw(-nu, x);
        (c, b, a)
    } else {
        let (lk, r) = log_k_and_ratio(nu.abs(), x);
        let lk_m = log_k_and_ratio((nu - 1.0).abs(), x).0;
        let lk_p = if nu >= 0.0 {
            lk + r.ln()
        } else {
            log_k_and_ratio(nu + 1.0, x).0
        };
        (lk_m, lk, lk_p)
    }
}

/// `∂/∂ν ln K_ν(x)` by central difference with step [`DNU_STEP`].
pub fn dlog_bessel_k_dnu(nu: f64, x: f64) -> Result<f64> {
    check_args(nu, x)?;
    Ok(dlog_bessel_k_dnu_raw(nu, x))
}

#[inline]
pub(crate) fn dlog_bessel_k_dnu_raw(nu: f64, x: f64) -> f64 {
    (log_bessel_k_raw(nu + DNU_STEP, x) - log_bessel_k_raw(nu - DNU_STEP, x)) / (2.0 * DNU_STEP)
}

/// `ln Σ exp(v_i)`; `-∞` for an empty or all `-∞` slice.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log_gamma_fn: argument must be positive, got {x}"));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Digamma `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("digamma: argument must be positive, got {x}"));
    }
    Ok(statrs::function::gamma::digamma(x))
}

/// Parameters of a GIG law with density proportional to
/// `w^{ν−1} exp{−(χ/w + ψ w)/2}` on `w > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    pub chi: f64,
    pub psi: f64,
    pub nu: f64,
}

impl GigParams {
    pub fn new(chi: f64, psi: f64, nu: f64) -> Result<Self> {
        let g = Self { chi, psi, nu };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.chi.is_finite() || !self.psi.is_finite() || !self.nu.is_finite() {
            return domain("GIG parameters must be finite");
        }
        if !(self.psi > 0.0) {
            return domain(format!("GIG psi must be positive, got {}", self.psi));
        }
        if self.chi < 0.0 {
            return domain(format!("GIG chi must be non-negative, got {}", self.chi));
        }
        if self.chi == 0.0 && !(self.nu > 0.0) {
            return domain("GIG with chi = 0 requires nu > 0 (gamma limit)");
        }
        Ok(())
    }
}

/// Log normalizing constant and the moments `E[W]`, `E[1/W]`, `E[ln W]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigMoments {
    /// `ln ∫ w^{ν−1} exp{−(χ/w + ψw)/2} dw`.
    pub log_normalizer: f64,
    pub e_w: f64,
    /// Infinite in the gamma limit (`χ = 0`) when `ν ≤ 1`.
    pub e_inv_w: f64,
    pub e_log_w: f64,
}

pub fn gig_log_norm_and_moments(g: GigParams) -> Result<GigMoments> {
    g.validate()?;
    Ok(gig_moments_raw(g.chi, g.psi, g.nu))
}

pub(crate) fn gig_moments_raw(chi: f64, psi: f64, nu: f64) -> GigMoments {
    if chi == 0.0 {
        // Gamma(shape ν, rate ψ/2).
        let rate = 0.5 * psi;
        let lg = statrs::function::gamma::ln_gamma(nu);
        return GigMoments {
            log_normalizer: lg - nu * rate.ln(),
            e_w: nu / rate,
            e_inv_w: if nu > 1.0 { rate / (nu - 1.0) } else { f64::INFINITY },
            e_log_w: statrs::function::gamma::digamma(nu) - rate.ln(),
        };
    }
    let s = (chi * psi).sqrt();
    let ln_r = 0.5 * (chi.ln() - psi.ln());
    let (lk_m, lk, lk_p) = log_bessel_k_triple_raw(nu, s);
    GigMoments {
        log_normalizer: LN_2 + nu * ln_r + lk,
        e_w: (ln_r + lk_p - lk).exp(),
        e_inv_w: (lk_m - lk - ln_r).exp(),
        e_log_w: ln_r + dlog_bessel_k_dnu_raw(nu, s),
    }
}
