//! Serde adapters writing vectors as plain arrays and matrices as arrays of
//! rows, rather than nalgebra's storage layout.

pub mod vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

pub mod matrix {
    use nalgebra::DMatrix;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("matrix rows differ in length"));
        }
        Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
    }
}

#[cfg(test)]
mod tests {
    use crate::densities::{ComponentParams, GaussianParams};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn round_trip() {
        let c = ComponentParams::Gaussian(GaussianParams {
            mu: DVector::from_vec(vec![0.5, 1.0]),
            sigma: DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
        });
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"family":"gaussian","mu":[0.5,1.0],"sigma":[[2.0,0.3],[0.3,1.0]]}"#);
        assert_eq!(serde_json::from_str::<ComponentParams>(&s).unwrap(), c);
        assert!(serde_json::from_str::<ComponentParams>(r#"{"family":"gaussian","mu":[0],"sigma":[[1,2],[3]]}"#).is_err());
    }
}
