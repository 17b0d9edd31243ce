//! Exhaustive pairwise computation of the density quantities. Every other
//! backend is tested for exact agreement with this module.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::geometry::dist;
use crate::index::{check_dc, check_rho_len, DeltaOutput, DensityIndex};
use crate::profile::{DensityOrder, DensityProfile};

/// Number of *other* objects strictly closer than `dc`.
pub fn oracle_rho(ds: &Dataset, dc: f64) -> Result<Vec<u32>> {
    check_dc(dc)?;
    let n = ds.len();
    Ok((0..n)
        .into_par_iter()
        .map(|p| {
            let pp = ds.point(p);
            (0..n)
                .filter(|&q| q != p && dist(pp, ds.point(q)) < dc)
                .count() as u32
        })
        .collect())
}

/// Distance to the nearest higher-ranked object (smallest id on distance
/// ties); the global peak instead gets its farthest distance and no `mu`.
pub fn oracle_delta(ds: &Dataset, rho: &[u32]) -> Result<(Vec<f64>, Vec<Option<u32>>)> {
    check_rho_len(rho, ds.len())?;
    let n = ds.len();
    let order = DensityOrder::new(rho);
    let (delta, mu) = (0..n)
        .into_par_iter()
        .map(|p| {
            let pp = ds.point(p);
            let mut best = f64::INFINITY;
            let mut best_q = None;
            let mut farthest = 0.0f64;
            for q in 0..n {
                if q == p {
                    continue;
                }
                let d = dist(pp, ds.point(q));
                if order.higher(q, p) {
                    if d < best {
                        best = d;
                        best_q = Some(q as u32);
                    }
                } else if d > farthest {
                    farthest = d;
                }
            }
            match best_q {
                Some(q) => (best, Some(q)),
                None => (farthest, None),
            }
        })
        .unzip();
    Ok((delta, mu))
}

pub fn oracle_profile(ds: &Dataset, dc: f64) -> Result<DensityProfile> {
    BruteForce::new(ds).profile(dc)
}

/// Index-free backend that scans all pairs on every query.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce<'a> {
    ds: &'a Dataset,
}

impl<'a> BruteForce<'a> {
    pub fn new(ds: &'a Dataset) -> Self {
        BruteForce { ds }
    }
}

impl DensityIndex for BruteForce<'_> {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn len(&self) -> usize {
        self.ds.len()
    }

    fn rho(&self, dc: f64) -> Result<Vec<u32>> {
        oracle_rho(self.ds, dc)
    }

    fn delta(&self, rho: &[u32]) -> Result<DeltaOutput> {
        let (delta, mu) = oracle_delta(self.ds, rho)?;
        Ok(DeltaOutput {
            resolved: vec![true; delta.len()],
            delta,
            mu,
        })
    }

    fn index_bytes(&self) -> usize {
        0
    }
}
