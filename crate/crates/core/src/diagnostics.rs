//! Mardia's multivariate skewness and kurtosis, the adjusted Rand index and
//! confusion tables.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MardiaReport {
    pub b1p: f64,
    pub b1p_pvalue: f64,
    /// b2p − p(p+2).
    pub excess_kurtosis: f64,
    pub kurt_pvalue: f64,
    pub n: usize,
    pub p: usize,
}

/// Mardia's statistics with the unbiased (n−1) covariance, as psych computes
/// them. The kurtosis test is two-sided.
pub fn mardia(data: &DMatrix<f64>) -> Result<MardiaReport> {
    let (n, p) = data.shape();
    if p == 0 || n <= p {
        return Err(Error::Input(format!("mardia needs n > p (n={n}, p={p})")));
    }
    let mean = data.row_mean();
    let mut c = data.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    let s = c.transpose() * &c / (n - 1) as f64;
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("sample covariance is singular".into()))?;
    let l = chol.l();
    if (0..p).any(|j| l[(j, j)].powi(2) <= 1e-12 * s[(j, j)]) {
        return Err(Error::NotPositiveDefinite("sample covariance is singular".into()));
    }
    // columns of y are S^{-1/2}-whitened observations
    let y = l.solve_lower_triangular(&c.transpose()).expect("nonzero pivots");
    let nf = n as f64;
    // b1p via the third-moment tensor of the whitened data, O(n p^3)
    let mut b1p = 0.0;
    for r in 0..p {
        for s_ in 0..p {
            for t in 0..p {
                let m: f64 = (0..n).map(|i| y[(r, i)] * y[(s_, i)] * y[(t, i)]).sum();
                b1p += m * m;
            }
        }
    }
    b1p /= nf * nf;
    let b2p = y.column_iter().map(|col| col.norm_squared().powi(2)).sum::<f64>() / nf;
    let pf = p as f64;
    let df = pf * (pf + 1.0) * (pf + 2.0) / 6.0;
    let skew_stat = nf * b1p / 6.0;
    let b1p_pvalue = ChiSquared::new(df).expect("positive df").sf(skew_stat);
    let excess = b2p - pf * (pf + 2.0);
    let z = excess * (nf / (8.0 * pf * (pf + 2.0))).sqrt();
    let kurt_pvalue = (2.0 * Normal::standard().sf(z.abs())).min(1.0);
    Ok(MardiaReport {
        b1p: b1p.max(0.0),
        b1p_pvalue,
        excess_kurtosis: excess,
        kurt_pvalue,
        n,
        p,
    })
}

/// Hubert–Arabie adjusted Rand index.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), got: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::Input("ARI needs at least two observations".into()));
    }
    let table = contingency(a, b);
    let pairs = |m: u64| (m * m.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().flatten().map(|&m| pairs(m)).sum();
    let rows: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let ncols = table.first().map_or(0, Vec::len);
    let cols: f64 = (0..ncols).map(|k| pairs(table.iter().map(|r| r[k]).sum())).sum();
    let total = pairs(a.len() as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if (max - expected).abs() < f64::EPSILON * total {
        // both partitions trivial in the same way
        return Ok(if (index - expected).abs() < 0.5 { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

fn contingency(a: &[usize], b: &[usize]) -> Vec<Vec<u64>> {
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut t = vec![vec![0u64; kb]; ka];
    for (&i, &j) in a.iter().zip(b) {
        t[i][j] += 1;
    }
    t
}

/// Rows are true classes (by index), columns fitted clusters in order of
/// first appearance.
pub fn confusion_matrix(truth: &[usize], fitted: &[usize]) -> Result<Vec<Vec<usize>>> {
    if truth.len() != fitted.len() {
        return Err(Error::Dimension { expected: truth.len(), got: fitted.len() });
    }
    let fitted = crate::init::canonical_labels(fitted);
    let k = truth.iter().max().map_or(0, |m| m + 1);
    let g = fitted.iter().max().map_or(0, |m| m + 1);
    let mut t = vec![vec![0usize; g]; k];
    for (&i, &j) in truth.iter().zip(&fitted) {
        t[i][j] += 1;
    }
    Ok(t)
}
