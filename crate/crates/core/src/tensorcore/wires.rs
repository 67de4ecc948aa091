use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered list of labelled tensor factors.
///
/// The empty system is the trivial system of dimension 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WireSystem {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl WireSystem {
    pub fn new<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if dims.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} dims for {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if let Some(d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidDimension(format!("wire dimension {d}")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self { dims, labels })
    }

    pub fn trivial() -> Self {
        Self {
            dims: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new(vec![dim], vec![label.into()])
    }

    /// Wires labelled `{prefix}0`, `{prefix}1`, ...
    pub fn numbered(prefix: &str, dims: &[usize]) -> Result<Self> {
        let labels = (0..dims.len()).map(|i| format!("{prefix}{i}")).collect();
        Self::new(dims.to_vec(), labels)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.dims[p])
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn concat(&self, other: &WireSystem) -> Result<WireSystem> {
        if let Some(l) = other.labels.iter().find(|l| self.contains(l)) {
            return Err(Error::LabelCollision(l.clone()));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        Ok(Self { dims, labels })
    }

    /// Sub-system made of the given labels, in the given order.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<WireSystem> {
        let dims = labels
            .iter()
            .map(|l| self.dim_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        WireSystem::new(dims, labels.iter().map(|l| l.as_ref().to_string()).collect())
    }

    /// Sub-system without the given labels, order preserved.
    pub fn without<S: AsRef<str>>(&self, labels: &[S]) -> WireSystem {
        let (dims, labels): (Vec<_>, Vec<_>) = self
            .dims
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| !labels.iter().any(|x| x.as_ref() == l.as_str()))
            .map(|(&d, l)| (d, l.clone()))
            .unzip();
        WireSystem { dims, labels }
    }

    pub fn with_labels<S: Into<String>>(&self, labels: Vec<S>) -> Result<WireSystem> {
        WireSystem::new(self.dims.clone(), labels)
    }

    pub fn map_labels(&self, f: impl Fn(&str) -> String) -> Result<WireSystem> {
        WireSystem::new(
            self.dims.clone(),
            self.labels.iter().map(|l| f(l)).collect(),
        )
    }

    /// Row-major strides of each factor.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }

    /// Flat offsets of every multi-index over `labels`, embedded in `self`.
    pub(crate) fn offsets<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for l in labels {
            let p = self
                .position(l.as_ref())
                .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))?;
            let mut next = Vec::with_capacity(offsets.len() * self.dims[p]);
            for &o in &offsets {
                for k in 0..self.dims[p] {
                    next.push(o + k * strides[p]);
                }
            }
            offsets = next;
        }
        Ok(offsets)
    }
}
