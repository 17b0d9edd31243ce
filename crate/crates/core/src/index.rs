//! The interface shared by every density backend.

use crate::error::{invalid, Result};
use crate::profile::DensityProfile;

/// Result of a dependent-distance pass over all objects.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaOutput {
    pub delta: Vec<f64>,
    pub mu: Vec<Option<u32>>,
    pub resolved: Vec<bool>,
}

/// A structure that answers the two per-cutoff queries. `rho` must be fully
/// computed before `delta` runs.
pub trait DensityIndex: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of indexed objects.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn rho(&self, dc: f64) -> Result<Vec<u32>>;

    fn delta(&self, rho: &[u32]) -> Result<DeltaOutput>;

    /// Approximate size of the index structures in bytes.
    fn index_bytes(&self) -> usize;

    /// Whether answers under `dc` fall outside the exactness window.
    fn degraded(&self, _dc: f64) -> bool {
        false
    }

    fn profile(&self, dc: f64) -> Result<DensityProfile> {
        let rho = self.rho(dc)?;
        let DeltaOutput {
            delta,
            mu,
            resolved,
        } = self.delta(&rho)?;
        Ok(DensityProfile {
            dc,
            rho,
            delta,
            mu,
            resolved,
            degraded: self.degraded(dc),
        })
    }
}

pub(crate) fn check_dc(dc: f64) -> Result<()> {
    if dc > 0.0 && dc.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "cutoff distance must be positive and finite, got {dc}"
        )))
    }
}

pub(crate) fn check_rho_len(rho: &[u32], n: usize) -> Result<()> {
    if rho.len() == n {
        Ok(())
    } else {
        Err(invalid(format!(
            "density vector has {} entries for {n} objects",
            rho.len()
        )))
    }
}
