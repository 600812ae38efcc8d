//! Ordered column-index sets with per-stage provenance.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Distinct column indices defining the sampled factor C, ordered as drawn.
/// `stage_sizes` records how many indices each sampling stage contributed
/// (e.g. the uniform and two adaptive rounds).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSet {
    indices: Vec<usize>,
    stage_sizes: Option<Vec<usize>>,
}

impl ColumnSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        Self::build(indices, None)
    }

    pub fn with_stages(indices: Vec<usize>, stage_sizes: Vec<usize>) -> Result<Self> {
        Self::build(indices, Some(stage_sizes))
    }

    fn build(indices: Vec<usize>, stage_sizes: Option<Vec<usize>>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::parameter("column set must contain at least one index"));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::parameter("column set indices must be distinct"));
        }
        if let Some(sizes) = &stage_sizes {
            let total: usize = sizes.iter().sum();
            if total != indices.len() {
                return Err(Error::parameter(format!(
                    "stage sizes sum to {total} but {} indices present",
                    indices.len()
                )));
            }
        }
        Ok(Self { indices, stage_sizes })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn stage_sizes(&self) -> Option<&[usize]> {
        self.stage_sizes.as_deref()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.contains(&j)
    }

    /// Checks every index lies in `[0, order)`.
    pub fn validate_for_order(&self, order: usize) -> Result<()> {
        if let Some(&bad) = self.indices.iter().find(|&&j| j >= order) {
            return Err(Error::parameter(format!(
                "column index {bad} out of range for order {order}"
            )));
        }
        Ok(())
    }
}
