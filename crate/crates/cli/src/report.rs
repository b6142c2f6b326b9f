//! Aligned-text and CSV renderings of the command reports. Every number comes
//! from the same report structs that are serialized to JSON.

use crate::{BenchmarkReport, DiagnoseReport, FitReport, OverlapReport};
use nalgebra::DMatrix;
use std::fmt::Write;

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$}"))
}

/// `2.90(0.24)` with small p-values in scientific notation.
pub fn value_p(v: f64, p: f64) -> String {
    let ps = if p < 1e-16 {
        "<1e-16".to_string()
    } else if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.2}")
    };
    format!("{v:.2}({ps})")
}

pub fn matrix_lines<T: std::fmt::Display>(rows: &[Vec<T>], width: usize) -> Vec<String> {
    rows.iter()
        .map(|r| r.iter().map(|v| format!("{v:>width$}")).collect::<Vec<_>>().join(" "))
        .collect()
}

fn prob_rows(m: &[Vec<f64>]) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(|v| format!("{v:.2}")).collect()).collect()
}

pub fn fit_text(r: &FitReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} / {}  n={} p={}  battery={:?} seed={}{}",
        r.dataset,
        r.family,
        r.n,
        r.p,
        r.battery,
        r.seed,
        if r.standardized { "  (standardized)" } else { "" }
    );
    let _ = writeln!(s, "{:>3} {:>12} {:>12} {:>5} {:>6} {:>6} {:>7} {:>8}", "G", "loglik", "BIC", "M", "conv", "iter", "starts", "ARI");
    for f in &r.fits {
        let _ = writeln!(
            s,
            "{:>3} {:>12.3} {:>12.3} {:>5} {:>6} {:>6} {:>7} {:>8}{}",
            f.g,
            f.loglik,
            f.bic,
            f.m,
            if f.converged { "yes" } else { "no" },
            f.iterations,
            f.starts,
            opt(f.ari, 3),
            if f.g == r.g_hat { "  *" } else { "" }
        );
    }
    for fail in &r.failures {
        let _ = writeln!(s, "{:>3} failed: {}", fail.g, fail.error);
    }
    let sel = r.selected();
    let _ = writeln!(s, "selected G={} (minimum BIC)", r.g_hat);
    if let Some(c) = &sel.confusion {
        let _ = writeln!(s, "confusion (true rows x fitted columns):");
        for line in matrix_lines(c, 4) {
            let _ = writeln!(s, "  {line}");
        }
    }
    s
}

pub fn fit_csv(r: &FitReport) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "family", "g", "loglik", "bic", "m", "converged", "iterations", "ari", "selected"])?;
    for f in &r.fits {
        w.write_record([
            r.dataset.clone(),
            r.family.to_string(),
            f.g.to_string(),
            f.loglik.to_string(),
            f.bic.to_string(),
            f.m.to_string(),
            f.converged.to_string(),
            f.iterations.to_string(),
            f.ari.map_or_else(String::new, |a| a.to_string()),
            (f.g == r.g_hat).to_string(),
        ])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> csv::Result<String> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn diagnose_text(r: &DiagnoseReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}: Mardia statistics per group", r.dataset);
    let _ = writeln!(s, "{:<16} {:>5} {:>20} {:>20}", "group", "n", "skewness(p)", "kurtosis(p)");
    for g in &r.groups {
        let _ = writeln!(
            s,
            "{:<16} {:>5} {:>20} {:>20}",
            g.group,
            g.mardia.n,
            value_p(g.mardia.b1p, g.mardia.b1p_pvalue),
            value_p(g.mardia.excess_kurtosis, g.mardia.kurt_pvalue)
        );
    }
    s
}

pub fn diagnose_csv(r: &DiagnoseReport) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group", "n", "p", "skewness", "skewness_pvalue", "excess_kurtosis", "kurtosis_pvalue"])?;
    for g in &r.groups {
        let m = &g.mardia;
        w.write_record([
            g.group.clone(),
            m.n.to_string(),
            m.p.to_string(),
            m.b1p.to_string(),
            m.b1p_pvalue.to_string(),
            m.excess_kurtosis.to_string(),
            m.kurt_pvalue.to_string(),
        ])?;
    }
    finish(w)
}

pub fn overlap_text(r: &OverlapReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}: {} misclassification map, N={} seed={}", r.dataset, r.map.method, r.map.n_sim, r.map.seed);
    for line in matrix_lines(&prob_rows(&r.map.p_matrix), 5) {
        let _ = writeln!(s, "  {line}");
    }
    let g = r.map.g();
    for a in 0..g {
        for b in (a + 1)..g {
            let _ = writeln!(s, "overlap {} / {}: {:.3}", r.groups[a].group, r.groups[b].group, r.pairwise[a][b]);
        }
    }
    s
}

/// Simulated points with their source group, one row each.
pub fn points_csv(groups: &[String], points: &[DMatrix<f64>], variables: &[String]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["group".to_string()];
    header.extend(variables.iter().cloned());
    w.write_record(&header)?;
    for (name, m) in groups.iter().zip(points) {
        for row in m.row_iter() {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    finish(w)
}

pub fn labelled_points_csv(x: &DMatrix<f64>, labels: &[usize]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("component".into());
    w.write_record(&header)?;
    for (row, l) in x.row_iter().zip(labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(l.to_string());
        w.write_record(&rec)?;
    }
    finish(w)
}

/// One column per method, in the layout of a results table.
pub fn benchmark_text(r: &BenchmarkReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}: n={} p={} groups {:?}", r.dataset, r.n, r.p, r.group_sizes);
    let head: Vec<String> = r.methods.iter().map(|m| m.family.to_string()).collect();
    let _ = writeln!(s, "{:<12}{}", "", head.iter().map(|h| format!("{h:>12}")).collect::<String>());
    let row = |label: &str, f: &dyn Fn(&FitReport) -> String| {
        format!("{label:<12}{}\n", r.methods.iter().map(|m| format!("{:>12}", f(m))).collect::<String>())
    };
    s += &row("loglik", &|m| format!("{:.2}", m.selected().loglik));
    s += &row("BIC", &|m| format!("{:.2}", m.selected().bic));
    s += &row("M", &|m| m.selected().m.to_string());
    s += &row("G-hat", &|m| m.g_hat.to_string());
    s += &row("ARI", &|m| opt(m.selected().ari, 3));
    for m in &r.methods {
        if let Some(c) = &m.selected().confusion {
            let _ = writeln!(s, "confusion {}:", m.family);
            for line in matrix_lines(c, 4) {
                let _ = writeln!(s, "  {line}");
            }
        }
    }
    let skew: Vec<String> = r.diagnostics.groups.iter().map(|g| value_p(g.mardia.b1p, g.mardia.b1p_pvalue)).collect();
    let kurt: Vec<String> = r
        .diagnostics
        .groups
        .iter()
        .map(|g| value_p(g.mardia.excess_kurtosis, g.mardia.kurt_pvalue))
        .collect();
    let _ = writeln!(s, "skewness: ({})", skew.join(", "));
    let _ = writeln!(s, "kurtosis: ({})", kurt.join(", "));
    for (name, map) in [("KDE map", &r.kde_map), ("Gaussian map", &r.gaussmix_map)] {
        let _ = writeln!(s, "{name} (N={}):", map.map.n_sim);
        for line in matrix_lines(&prob_rows(&map.map.p_matrix), 5) {
            let _ = writeln!(s, "  {line}");
        }
    }
    s
}
