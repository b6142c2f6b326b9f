//! Coordinatewise transformations to near-normality (Yeo–Johnson power and
//! Manly exponential), their log-Jacobians, and the back-transformed Gaussian
//! density `f(x) = φ(T(x|Λ); μ, Σ) · J_T(x|Λ)`.

use crate::densities::{log_density_gaussian_prepared, CholFactor, GaussianParams};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Below this distance from a branch point the limiting branch is used.
pub const BRANCH_TOL: f64 = 1e-10;

/// Largest `|λx|` accepted by the Manly transform.
pub const MANLY_MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Power,
    Manly,
}

impl TransformKind {
    /// Parameter value giving the identity map.
    pub fn identity_lambda(self) -> f64 {
        match self {
            TransformKind::Power => 1.0,
            TransformKind::Manly => 0.0,
        }
    }

    pub fn apply(self, x: f64, lambda: f64) -> Result<f64> {
        match self {
            TransformKind::Power => Ok(transform_power(x, lambda)),
            TransformKind::Manly => transform_manly(x, lambda),
        }
    }

    pub fn inverse(self, y: f64, lambda: f64) -> Option<f64> {
        match self {
            TransformKind::Power => inverse_power(y, lambda),
            TransformKind::Manly => inverse_manly(y, lambda),
        }
    }

    /// `ln ∂T(x|λ)/∂x` for a single coordinate.
    pub fn log_derivative(self, x: f64, lambda: f64) -> f64 {
        match self {
            TransformKind::Power => {
                if x > 0.0 {
                    (lambda - 1.0) * x.ln_1p()
                } else if x < 0.0 {
                    (1.0 - lambda) * (-x).ln_1p()
                } else {
                    0.0
                }
            }
            TransformKind::Manly => lambda * x,
        }
    }
}

/// Per-coordinate transformation parameters `Λ = (λ_1, …, λ_p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformVector {
    pub kind: TransformKind,
    pub lambdas: Vec<f64>,
}

impl TransformVector {
    pub fn new(kind: TransformKind, lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::Domain("transformation parameters must be finite".into()));
        }
        Ok(Self { kind, lambdas })
    }

    pub fn identity(kind: TransformKind, p: usize) -> Self {
        Self {
            kind,
            lambdas: vec![kind.identity_lambda(); p],
        }
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Transforms `x` into `out`; fails on Manly overflow.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for ((o, &xi), &l) in out.iter_mut().zip(x).zip(&self.lambdas) {
            *o = self.kind.apply(xi, l)?;
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// Back-transform; `None` when `y` lies outside the range of `T`.
    pub fn inverse(&self, y: &[f64]) -> Option<Vec<f64>> {
        y.iter()
            .zip(&self.lambdas)
            .map(|(&yi, &l)| self.kind.inverse(yi, l))
            .collect()
    }
}

/// Gaussian on the transformed scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransGaussianParams {
    pub transform: TransformVector,
    #[serde(with = "crate::serde_mat::vector")]
    pub mu: DVector<f64>,
    #[serde(with = "crate::serde_mat::matrix")]
    pub sigma: DMatrix<f64>,
}

/// Yeo–Johnson power transform.
pub fn transform_power(x: f64, lambda: f64) -> f64 {
    if x >= 0.0 {
        if lambda.abs() < BRANCH_TOL {
            x.ln_1p()
        } else {
            (lambda * x.ln_1p()).exp_m1() / lambda
        }
    } else {
        let q = 2.0 - lambda;
        if q.abs() < BRANCH_TOL {
            -(-x).ln_1p()
        } else {
            -(q * (-x).ln_1p()).exp_m1() / q
        }
    }
}

/// Manly exponential transform; errors when `|λx|` exceeds [`MANLY_MAX_EXPONENT`].
pub fn transform_manly(x: f64, lambda: f64) -> Result<f64> {
    if lambda.abs() < BRANCH_TOL {
        return Ok(x);
    }
    let e = lambda * x;
    if e.abs() > MANLY_MAX_EXPONENT {
        return Err(Error::Domain(format!("Manly transform out of range (λx = {e})")));
    }
    Ok(e.exp_m1() / lambda)
}

pub fn inverse_power(y: f64, lambda: f64) -> Option<f64> {
    if y >= 0.0 {
        if lambda.abs() < BRANCH_TOL {
            Some(y.exp_m1())
        } else {
            let base = lambda * y;
            if base <= -1.0 {
                return None;
            }
            let x = (base.ln_1p() / lambda).exp_m1();
            x.is_finite().then_some(x)
        }
    } else {
        let q = 2.0 - lambda;
        if q.abs() < BRANCH_TOL {
            Some(-(-y).exp_m1())
        } else {
            let base = -q * y;
            if base <= -1.0 {
                return None;
            }
            let x = -(base.ln_1p() / q).exp_m1();
            x.is_finite().then_some(x)
        }
    }
}

pub fn inverse_manly(y: f64, lambda: f64) -> Option<f64> {
    if lambda.abs() < BRANCH_TOL {
        return Some(y);
    }
    let base = lambda * y;
    if base <= -1.0 {
        return None;
    }
    let x = base.ln_1p() / lambda;
    x.is_finite().then_some(x)
}

/// `ln J_T(x|Λ)`: `Λ′x` for Manly, `Σ_j sgn(x_j)(λ_j − 1) ln(|x_j| + 1)` for power.
pub fn log_jacobian(x: &[f64], t: &TransformVector) -> f64 {
    x.iter()
        .zip(&t.lambdas)
        .map(|(&xi, &l)| t.kind.log_derivative(xi, l))
        .sum()
}

pub fn log_density_trans_gaussian(x: &[f64], params: &TransGaussianParams) -> Result<f64> {
    let p = params.mu.len();
    if x.len() != p || params.transform.dim() != p {
        return Err(Error::Dimension { expected: p, got: x.len() });
    }
    let y = params.transform.apply(x)?;
    let chol = CholFactor::new(&params.sigma)?;
    let mut work = vec![0.0; p];
    Ok(log_density_gaussian_prepared(&y, params.mu.as_slice(), &chol, &mut work)
        + log_jacobian(x, &params.transform))
}

impl TransGaussianParams {
    pub fn gaussian_part(&self) -> GaussianParams {
        GaussianParams {
            mu: self.mu.clone(),
            sigma: self.sigma.clone(),
        }
    }
}
