//! Truncated doubly-indexed coefficient arrays.

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};

/// A function in sequence space: one value per `(l, k)` of the basis, stored
/// flat in `index_set` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    basis: BasisSpec,
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn zeros(basis: BasisSpec) -> Self {
        CoefficientField {
            basis,
            values: vec![0.0; basis.dim()],
        }
    }

    pub fn from_values(basis: BasisSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                basis.dim(),
                values.len()
            )));
        }
        Ok(CoefficientField { basis, values })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, l: i64, k: u32) -> f64 {
        self.basis
            .position(l, k)
            .map(|p| self.values[p])
            .unwrap_or(0.0)
    }

    pub fn set(&mut self, l: i64, k: u32, value: f64) {
        if let Some(p) = self.basis.position(l, k) {
            self.values[p] = value;
        }
    }

    pub fn check_same_basis(&self, other: &CoefficientField) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(format!(
                "{:?} vs {:?}",
                self.basis, other.basis
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &CoefficientField) -> Result<CoefficientField> {
        self.check_same_basis(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CoefficientField {
            basis: self.basis,
            values,
        })
    }

    pub fn sub(&self, other: &CoefficientField) -> Result<CoefficientField> {
        self.check_same_basis(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CoefficientField {
            basis: self.basis,
            values,
        })
    }

    pub fn scale(&self, c: f64) -> CoefficientField {
        CoefficientField {
            basis: self.basis,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Iterate `(l, k, value)` in storage order.
    pub fn iter_indexed(&self) -> impl Iterator<Item = (i64, u32, f64)> + '_ {
        self.basis
            .index_set()
            .into_iter()
            .zip(&self.values)
            .map(|((l, k), v)| (l, k, *v))
    }
}
