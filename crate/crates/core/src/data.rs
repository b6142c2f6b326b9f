//! Tabular input: CSV ingestion, the bundled benchmark datasets, and column
//! standardization.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct Dataset {
    pub name: String,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    /// Class index per row, numbered by order of first appearance.
    pub labels: Option<Vec<usize>>,
    pub label_names: Vec<String>,
    pub variable_names: Vec<String>,
    pub provenance: String,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Rows belonging to class `k`.
    pub fn group(&self, k: usize) -> Option<DMatrix<f64>> {
        let labels = self.labels.as_ref()?;
        let idx: Vec<usize> = (0..self.n()).filter(|&i| labels[i] == k).collect();
        Some(self.matrix.select_rows(&idx))
    }

    pub fn standardized(&self) -> Dataset {
        Dataset {
            matrix: standardize(&self.matrix),
            ..self.clone()
        }
    }
}

/// Centers each column and divides by its standard deviation (divisor n−1).
/// Constant columns are only centered.
pub fn standardize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let mut out = x.clone();
    for j in 0..p {
        let col = x.column(j);
        let mean = col.mean();
        let var = if n > 1 {
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        for i in 0..n {
            out[(i, j)] = if sd > 0.0 { (x[(i, j)] - mean) / sd } else { x[(i, j)] - mean };
        }
    }
    out
}

/// Reads a headed, comma-separated table. Every column except `label_column`
/// must be numeric.
pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut ds = read_csv(file, label_column)?;
    ds.name = name;
    ds.provenance = format!("file {}", path.display());
    Ok(ds)
}

pub fn read_csv<R: Read>(reader: R, label_column: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = match label_column {
        Some(l) => Some(
            headers
                .iter()
                .position(|h| h == l)
                .ok_or_else(|| Error::Input(format!("label column '{l}' not found")))?,
        ),
        None => None,
    };
    let variable_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let p = variable_names.len();
    if p == 0 {
        return Err(Error::Input("no feature columns".into()));
    }
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Input(format!("line {line}: {e}")))?;
        if rec.len() != headers.len() {
            return Err(Error::Input(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            if Some(j) == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Input(format!("line {line}: non-numeric value '{field}' in column '{}'", headers[j])))?;
            if !v.is_finite() {
                return Err(Error::Input(format!("line {line}: non-finite value in column '{}'", headers[j])));
            }
            values.push(v);
        }
    }
    let n = values.len() / p;
    if n == 0 {
        return Err(Error::Input("no data rows".into()));
    }
    let matrix = DMatrix::from_row_slice(n, p, &values);
    let (labels, label_names) = if label_idx.is_some() {
        let mut names: Vec<String> = Vec::new();
        let labels = raw_labels
            .iter()
            .map(|l| match names.iter().position(|x| x == l) {
                Some(k) => k,
                None => {
                    names.push(l.clone());
                    names.len() - 1
                }
            })
            .collect();
        (Some(labels), names)
    } else {
        (None, Vec::new())
    };
    Ok(Dataset {
        name: String::new(),
        matrix,
        labels,
        label_names,
        variable_names,
        provenance: String::new(),
    })
}

/// A dataset shipped with the crate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BundledInfo {
    pub name: &'static str,
    pub label_column: &'static str,
    pub source: &'static str,
    pub license: &'static str,
    #[serde(skip)]
    csv: &'static str,
}

pub const BUNDLED: &[BundledInfo] = &[
    BundledInfo {
        name: "iris",
        label_column: "Species",
        source: "Anderson (1935) / Fisher (1936) iris measurements, as distributed with R datasets::iris",
        license: "public domain",
        csv: include_str!("../data/iris.csv"),
    },
    BundledInfo {
        name: "wine",
        label_column: "Type",
        source: "Forina et al. wine recognition data (UCI Machine Learning Repository), identical to rattle::wine",
        license: "CC BY 4.0 (UCI)",
        csv: include_str!("../data/wine.csv"),
    },
    BundledInfo {
        name: "diabetes",
        label_column: "group",
        source: "Reaven and Miller (1979) diabetes data, as distributed with R heplots::Diabetes (glufast, glutest, instest)",
        license: "GPL-2 | GPL-3 (heplots)",
        csv: include_str!("../data/diabetes.csv"),
    },
    BundledInfo {
        name: "ais",
        label_column: "sex",
        source: "Cook and Weisberg (1994) Australian Institute of Sport data, R DAAG::ais (bmi, pcBfat, lbm)",
        license: "GPL-2 | GPL-3 (DAAG)",
        csv: include_str!("../data/ais.csv"),
    },
    BundledInfo {
        name: "crabs",
        label_column: "group",
        source: "Campbell and Mahon (1974) Leptograpsus crabs, R MASS::crabs, group = species_sex",
        license: "GPL-2 | GPL-3 (MASS)",
        csv: include_str!("../data/crabs.csv"),
    },
];

/// Datasets referenced by the benchmarks but not redistributable here.
pub const UNBUNDLED: &[(&str, &str)] = &[(
    "bankruptcy",
    "Altman (1968) bankruptcy ratios (R MixGHD::bankruptcy); supply with --data",
)];

pub fn bundled(name: &str) -> Result<Dataset> {
    let info = BUNDLED
        .iter()
        .find(|b| b.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| match UNBUNDLED.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)) {
            Some((n, why)) => Error::Input(format!("dataset '{n}' is not bundled: {why}")),
            None => Error::Input(format!("unknown dataset '{name}'")),
        })?;
    let mut ds = read_csv(info.csv.as_bytes(), Some(info.label_column))?;
    ds.name = info.name.to_string();
    ds.provenance = info.source.to_string();
    Ok(ds)
}
