use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{c64, CMatrix, HermMatrix, PosDefMatrix};
use crate::error::{LabError, Result};

/// JSON matrix layout: row-major real and imaginary parts.
///
/// Square matrices carry `dim`; rectangular ones (Kraus pieces) carry `rows`
/// and `cols` instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let (r, c) = m.shape();
        let re = (0..r).map(|i| (0..c).map(|j| m[(i, j)].re).collect()).collect();
        let im = (0..r).map(|i| (0..c).map(|j| m[(i, j)].im).collect()).collect();
        if r == c {
            Self {
                dim: Some(r),
                rows: None,
                cols: None,
                re,
                im,
            }
        } else {
            Self {
                dim: None,
                rows: Some(r),
                cols: Some(c),
                re,
                im,
            }
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let (rows, cols) = match (self.dim, self.rows, self.cols) {
            (Some(d), None, None) => (d, d),
            (None, Some(r), Some(c)) => (r, c),
            (Some(d), Some(r), Some(c)) if d == r && d == c => (d, d),
            _ => {
                return Err(LabError::Serialization(
                    "matrix needs either `dim` or both `rows` and `cols`".into(),
                ))
            }
        };
        let shape_ok = |part: &Vec<Vec<f64>>| part.len() == rows && part.iter().all(|row| row.len() == cols);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(LabError::Serialization(format!(
                "`re`/`im` do not match the declared {rows}x{cols} shape"
            )));
        }
        if self.re.iter().chain(&self.im).flatten().any(|v| !v.is_finite()) {
            return Err(LabError::Serialization("matrix entries must be finite".into()));
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| c64(self.re[i][j], self.im[i][j])))
    }
}

impl Serialize for HermMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(self.matrix()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        let m = raw.to_matrix().map_err(serde::de::Error::custom)?;
        HermMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

impl Serialize for PosDefMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_herm().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PosDefMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let h = HermMatrix::deserialize(deserializer)?;
        PosDefMatrix::new(h).map_err(serde::de::Error::custom)
    }
}
