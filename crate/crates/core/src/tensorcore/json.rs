use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64};
use super::wires::WireSystem;
use crate::error::Result;

/// `{"dims": [..], "labels": [..], "entries": [[re, im], ...]}` with row-major entries.
///
/// Rectangular matrices (Kraus operators) carry the column system in
/// `col_dims`/`col_labels`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_labels: Option<Vec<String>>,
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let d = m.data();
        let entries = (0..d.nrows())
            .flat_map(|i| (0..d.ncols()).map(move |j| [d[(i, j)].re, d[(i, j)].im]))
            .collect();
        let (col_dims, col_labels) = if m.is_square_system() {
            (None, None)
        } else {
            (
                Some(m.cols().dims().to_vec()),
                Some(m.cols().labels().to_vec()),
            )
        };
        MatrixJson {
            dims: m.rows().dims().to_vec(),
            labels: m.rows().labels().to_vec(),
            col_dims,
            col_labels,
            entries,
        }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = crate::error::Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        let rows = WireSystem::new(j.dims.clone(), j.labels.clone())?;
        let cols = match (&j.col_dims, &j.col_labels) {
            (Some(d), Some(l)) => WireSystem::new(d.clone(), l.clone())?,
            _ => rows.clone(),
        };
        let (r, c) = (rows.dim(), cols.dim());
        if j.entries.len() != r * c {
            return Err(crate::error::Error::ShapeMismatch(format!(
                "{} entries for a {r}x{c} matrix",
                j.entries.len()
            )));
        }
        let data = DMatrix::from_fn(r, c, |i, k| {
            let [re, im] = j.entries[i * c + k];
            C64::new(re, im)
        });
        ComplexMatrix::new(data, rows, cols)
    }
}

impl ComplexMatrix {
    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from(self)
    }

    pub fn from_json(j: &MatrixJson) -> Result<Self> {
        ComplexMatrix::try_from(j)
    }
}
