//! Approximate mode: neighbor lists truncated at radius `tau`.
//!
//! `rho` stays exact for every `dc <= tau`. A `delta` found inside the
//! truncated row is also exact because the row is a prefix of the full one.
//! Objects with no higher-ranked neighbor within `tau` (always including the
//! global peak) report `sentinel` and are flagged unresolved.

use rayon::prelude::*;

use crate::ch::{ch_row_rho, check_width, CumulativeHistogram};
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::index::{check_dc, check_rho_len, DeltaOutput, DensityIndex};
use crate::list::{ListIndex, NeighborLists};
use crate::profile::DensityOrder;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNeighborList {
    tau: f64,
    sentinel: f64,
    lists: NeighborLists,
    hist: Option<CumulativeHistogram>,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && !tau.is_nan() {
        Ok(())
    } else {
        Err(invalid(format!(
            "neighbor threshold must be positive, got {tau}"
        )))
    }
}

/// Sentinel reported for unresolved objects: the bounding-box diagonal,
/// which no true dependent distance can exceed.
pub fn sentinel_for(ds: &Dataset) -> f64 {
    ds.bbox().diagonal()
}

impl ReducedNeighborList {
    /// Builds truncated rows directly from the data, optionally with
    /// histograms of width `w` over the retained entries.
    pub fn build(ds: &Dataset, tau: f64, w: Option<f64>) -> Result<ReducedNeighborList> {
        check_tau(tau)?;
        if let Some(w) = w {
            check_width(w)?;
        }
        let lists = NeighborLists::build(ds, tau);
        ReducedNeighborList::from_lists(lists, tau, sentinel_for(ds), w)
    }

    /// Truncates an existing full index.
    pub fn from_full(
        list: &ListIndex,
        tau: f64,
        sentinel: f64,
        w: Option<f64>,
    ) -> Result<ReducedNeighborList> {
        check_tau(tau)?;
        ReducedNeighborList::from_lists(list.lists().truncated(tau), tau, sentinel, w)
    }

    fn from_lists(
        lists: NeighborLists,
        tau: f64,
        sentinel: f64,
        w: Option<f64>,
    ) -> Result<ReducedNeighborList> {
        let hist = w
            .map(|w| CumulativeHistogram::build(&lists, w))
            .transpose()?;
        Ok(ReducedNeighborList {
            tau,
            sentinel,
            lists,
            hist,
        })
    }

    pub(crate) fn from_parts(
        tau: f64,
        sentinel: f64,
        lists: NeighborLists,
        hist: Option<CumulativeHistogram>,
    ) -> ReducedNeighborList {
        ReducedNeighborList {
            tau,
            sentinel,
            lists,
            hist,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sentinel(&self) -> f64 {
        self.sentinel
    }

    pub fn lists(&self) -> &NeighborLists {
        &self.lists
    }

    pub fn histogram(&self) -> Option<&CumulativeHistogram> {
        self.hist.as_ref()
    }

    fn row_rho(&self, p: usize, dc: f64) -> u32 {
        let row = self.lists.row(p);
        match &self.hist {
            Some(h) => ch_row_rho(h.row(p), h.width(), row, dc).rho,
            None => row.count_below(dc) as u32,
        }
    }
}

impl DensityIndex for ReducedNeighborList {
    fn name(&self) -> &'static str {
        if self.hist.is_some() {
            "rn-ch"
        } else {
            "rn-list"
        }
    }

    fn len(&self) -> usize {
        self.lists.len()
    }

    fn rho(&self, dc: f64) -> Result<Vec<u32>> {
        check_dc(dc)?;
        Ok((0..self.len())
            .into_par_iter()
            .map(|p| self.row_rho(p, dc))
            .collect())
    }

    fn delta(&self, rho: &[u32]) -> Result<DeltaOutput> {
        check_rho_len(rho, self.len())?;
        let order = DensityOrder::new(rho);
        let found: Vec<_> = (0..self.len())
            .into_par_iter()
            .map(|p| self.lists.row(p).first_higher(p, &order))
            .collect();
        let mut out = DeltaOutput {
            delta: Vec::with_capacity(found.len()),
            mu: Vec::with_capacity(found.len()),
            resolved: Vec::with_capacity(found.len()),
        };
        for f in found {
            match f {
                Some(s) => {
                    out.delta.push(s.delta);
                    out.mu.push(s.mu);
                    out.resolved.push(true);
                }
                None => {
                    out.delta.push(self.sentinel);
                    out.mu.push(None);
                    out.resolved.push(false);
                }
            }
        }
        Ok(out)
    }

    fn index_bytes(&self) -> usize {
        self.lists.bytes() + self.hist.as_ref().map_or(0, CumulativeHistogram::bytes)
    }

    fn degraded(&self, dc: f64) -> bool {
        dc > self.tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_profile;
    use crate::testing::{arb_dataset, t5};
    use proptest::prelude::*;

    #[test]
    fn build_example_t5() {
        let rn = ReducedNeighborList::build(&t5(), 3.0, None).unwrap();
        assert_eq!(rn.lists().row(0).ids, &[1, 2]);
        assert_eq!(rn.lists().row(3).ids, &[4]);
        assert_eq!(rn.sentinel(), 11.0);
    }

    #[test]
    fn build_rejects_bad_tau() {
        assert!(ReducedNeighborList::build(&t5(), 0.0, None)
            .unwrap_err()
            .is_usage());
        assert!(ReducedNeighborList::build(&t5(), 3.0, Some(0.0)).is_err());
    }

    #[test]
    fn vacuous_and_total_truncation() {
        let ds = t5();
        let full = ListIndex::build(&ds);
        let rn = ReducedNeighborList::build(&ds, 12.0, None).unwrap();
        assert_eq!(rn.lists(), full.lists());
        let rn = ReducedNeighborList::build(&ds, 0.5, None).unwrap();
        assert_eq!(rn.lists().total_entries(), 0);
    }

    #[test]
    fn approx_profile_t5() {
        let ds = t5();
        let exact = oracle_profile(&ds, 1.5).unwrap();
        for w in [None, Some(0.5)] {
            let rn = ReducedNeighborList::build(&ds, 3.0, w).unwrap();
            let p = rn.profile(1.5).unwrap();
            assert_eq!(p.rho, vec![1, 2, 1, 1, 1]);
            assert_eq!(p.resolved, vec![true, false, true, false, true]);
            for i in [0, 2, 4] {
                assert_eq!((p.delta[i], p.mu[i]), (exact.delta[i], exact.mu[i]));
            }
            assert_eq!(p.delta[1], 11.0);
            assert_eq!(p.delta[3], 11.0);
            assert_eq!(p.mu[3], None);
            assert!(!p.degraded);
        }
    }

    #[test]
    fn wide_tau_only_leaves_the_peak_unresolved() {
        let ds = t5();
        let rn = ReducedNeighborList::build(&ds, 20.0, None).unwrap();
        let p = rn.profile(1.5).unwrap();
        let exact = oracle_profile(&ds, 1.5).unwrap();
        assert_eq!(p.rho, exact.rho);
        assert_eq!(p.resolved, vec![true, false, true, true, true]);
        assert_eq!(p.mu, exact.mu);
    }

    #[test]
    fn tiny_tau_leaves_everything_unresolved() {
        let rn = ReducedNeighborList::build(&t5(), 0.5, None).unwrap();
        let p = rn.profile(0.4).unwrap();
        assert_eq!(p.rho, vec![0; 5]);
        assert!(p.resolved.iter().all(|r| !r));
    }

    #[test]
    fn cutoff_beyond_tau_is_degraded_lower_bound() {
        let ds = t5();
        let rn = ReducedNeighborList::build(&ds, 1.5, None).unwrap();
        let p = rn.profile(100.0).unwrap();
        assert!(p.degraded);
        assert!(!p.is_exact());
        assert_eq!(p.rho, vec![1, 2, 1, 1, 1]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sound_inside_window(ds in arb_dataset(1..100), tau in 0.1f64..40.0, f in 0.05f64..=1.0, w in prop::option::of(0.2f64..5.0)) {
            let dc = tau * f;
            let rn = ReducedNeighborList::build(&ds, tau, w).unwrap();
            let p = rn.profile(dc).unwrap();
            let exact = oracle_profile(&ds, dc).unwrap();
            prop_assert_eq!(&p.rho, &exact.rho);
            prop_assert!(!p.degraded);
            for i in 0..ds.len() {
                if p.resolved[i] {
                    prop_assert_eq!(p.delta[i], exact.delta[i]);
                    prop_assert_eq!(p.mu[i], exact.mu[i]);
                } else {
                    prop_assert_eq!(p.delta[i], rn.sentinel());
                    prop_assert!(exact.delta[i] <= rn.sentinel());
                }
            }
            prop_assert!(!p.resolved[exact.peak().unwrap()]);
        }

        #[test]
        fn unresolved_shrinks_as_tau_grows(ds in arb_dataset(1..80), dc in 0.1f64..10.0, a in 0.0f64..30.0, b in 0.0f64..30.0) {
            let (t1, t2) = if a <= b { (dc + a, dc + b) } else { (dc + b, dc + a) };
            let p1 = ReducedNeighborList::build(&ds, t1, None).unwrap().profile(dc).unwrap();
            let p2 = ReducedNeighborList::build(&ds, t2, None).unwrap().profile(dc).unwrap();
            for i in 0..ds.len() {
                if !p2.resolved[i] {
                    prop_assert!(!p1.resolved[i]);
                }
            }
        }
    }
}
