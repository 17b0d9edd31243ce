//! N-List index: for every object, all other objects sorted by distance.
//!
//! `rho` is a binary search for the cutoff in the object's row; `delta` walks
//! the row from near to far and stops at the first higher-ranked neighbor.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::geometry::dist;
use crate::index::{check_dc, check_rho_len, DeltaOutput, DensityIndex};
use crate::profile::DensityOrder;

/// One object's neighbors in non-decreasing distance order, ids ascending
/// within equal distances.
#[derive(Debug, Clone, Copy)]
pub struct NeighborRow<'a> {
    pub ids: &'a [u32],
    pub dists: &'a [f64],
}

/// Outcome of a near-to-far scan for the dependent neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowScan {
    pub delta: f64,
    pub mu: Option<u32>,
    /// Entries examined, including the matching one.
    pub scanned: usize,
}

impl<'a> NeighborRow<'a> {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of entries strictly closer than `dc`.
    pub fn count_below(&self, dc: f64) -> usize {
        self.dists.partition_point(|&d| d < dc)
    }

    /// First entry ranked above `p`. `None` when the row holds no such entry.
    pub fn first_higher(&self, p: usize, order: &DensityOrder<'_>) -> Option<RowScan> {
        self.ids
            .iter()
            .position(|&q| order.higher(q as usize, p))
            .map(|i| RowScan {
                delta: self.dists[i],
                mu: Some(self.ids[i]),
                scanned: i + 1,
            })
    }

    /// Dependent distance of `p` from a complete row: the first higher entry,
    /// or the farthest entry with no `mu` when `p` is the global peak.
    pub fn dependent(&self, p: usize, order: &DensityOrder<'_>) -> RowScan {
        self.first_higher(p, order).unwrap_or(RowScan {
            delta: self.dists.last().copied().unwrap_or(0.0),
            mu: None,
            scanned: self.len(),
        })
    }
}

/// An owned row, used when rows are streamed one object at a time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OwnedRow {
    pub ids: Vec<u32>,
    pub dists: Vec<f64>,
}

impl OwnedRow {
    /// Sorted row of `p` keeping only neighbors strictly closer than `limit`
    /// (`f64::INFINITY` keeps everything).
    pub fn build(ds: &Dataset, p: usize, limit: f64) -> OwnedRow {
        let pp = ds.point(p);
        let mut pairs: Vec<(f64, u32)> = (0..ds.len())
            .filter(|&q| q != p)
            .map(|q| (dist(pp, ds.point(q)), q as u32))
            .filter(|&(d, _)| d < limit)
            .collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (dists, ids) = pairs.into_iter().unzip();
        OwnedRow { ids, dists }
    }

    pub fn as_row(&self) -> NeighborRow<'_> {
        NeighborRow {
            ids: &self.ids,
            dists: &self.dists,
        }
    }
}

/// Rows of every object packed into shared buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborLists {
    offsets: Vec<usize>,
    ids: Vec<u32>,
    dists: Vec<f64>,
}

impl NeighborLists {
    /// Builds rows truncated at `limit` (exclusive).
    pub fn build(ds: &Dataset, limit: f64) -> NeighborLists {
        let rows: Vec<OwnedRow> = (0..ds.len())
            .into_par_iter()
            .map(|p| OwnedRow::build(ds, p, limit))
            .collect();
        NeighborLists::from_rows(rows)
    }

    pub fn from_rows(rows: Vec<OwnedRow>) -> NeighborLists {
        let total: usize = rows.iter().map(|r| r.ids.len()).sum();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut ids = Vec::with_capacity(total);
        let mut dists = Vec::with_capacity(total);
        offsets.push(0);
        for r in rows {
            ids.extend_from_slice(&r.ids);
            dists.extend_from_slice(&r.dists);
            offsets.push(ids.len());
        }
        NeighborLists {
            offsets,
            ids,
            dists,
        }
    }

    /// Keeps the prefix of every row that is strictly closer than `limit`.
    pub fn truncated(&self, limit: f64) -> NeighborLists {
        let rows = (0..self.len())
            .map(|p| {
                let row = self.row(p);
                let k = row.count_below(limit);
                OwnedRow {
                    ids: row.ids[..k].to_vec(),
                    dists: row.dists[..k].to_vec(),
                }
            })
            .collect();
        NeighborLists::from_rows(rows)
    }

    /// Number of objects (rows).
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn row(&self, p: usize) -> NeighborRow<'_> {
        let (a, b) = (self.offsets[p], self.offsets[p + 1]);
        NeighborRow {
            ids: &self.ids[a..b],
            dists: &self.dists[a..b],
        }
    }

    pub fn total_entries(&self) -> usize {
        self.ids.len()
    }

    pub fn bytes(&self) -> usize {
        self.offsets.len() * std::mem::size_of::<usize>()
            + self.ids.len() * std::mem::size_of::<u32>()
            + self.dists.len() * std::mem::size_of::<f64>()
    }
}

/// Estimated bytes of a full N-List over `n` objects.
pub fn full_list_bytes(n: usize) -> usize {
    n.saturating_mul(n.saturating_sub(1)).saturating_mul(12) + (n + 1) * 8
}

/// The exact list index over complete rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ListIndex {
    lists: NeighborLists,
}

impl ListIndex {
    pub fn build(ds: &Dataset) -> ListIndex {
        ListIndex {
            lists: NeighborLists::build(ds, f64::INFINITY),
        }
    }

    pub fn from_lists(lists: NeighborLists) -> ListIndex {
        ListIndex { lists }
    }

    pub fn lists(&self) -> &NeighborLists {
        &self.lists
    }

    pub fn row_rho(&self, p: usize, dc: f64) -> u32 {
        self.lists.row(p).count_below(dc) as u32
    }

    pub fn row_delta(&self, p: usize, rho: &[u32]) -> RowScan {
        self.lists.row(p).dependent(p, &DensityOrder::new(rho))
    }

    /// Scan length of every object in the delta pass.
    pub fn scan_lengths(&self, rho: &[u32]) -> Vec<usize> {
        let order = DensityOrder::new(rho);
        (0..self.len())
            .map(|p| self.lists.row(p).dependent(p, &order).scanned)
            .collect()
    }
}

impl DensityIndex for ListIndex {
    fn name(&self) -> &'static str {
        "list"
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
        let (delta, mu) = (0..self.len())
            .into_par_iter()
            .map(|p| {
                let s = self.lists.row(p).dependent(p, &order);
                (s.delta, s.mu)
            })
            .unzip();
        Ok(DeltaOutput {
            delta,
            mu,
            resolved: vec![true; self.len()],
        })
    }

    fn index_bytes(&self) -> usize {
        self.lists.bytes()
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
        let idx = ListIndex::build(&t5());
        let row = idx.lists().row(0);
        assert_eq!(row.ids, &[1, 2, 3, 4]);
        assert_eq!(row.dists, &[1.0, 2.0, 10.0, 11.0]);
        for p in 0..5 {
            assert_eq!(idx.lists().row(p).len(), 4);
            assert!(!idx.lists().row(p).ids.contains(&(p as u32)));
        }
    }

    #[test]
    fn two_points_see_each_other() {
        let ds = Dataset::from_rows(&[[0.0, 0.0], [0.0, 2.0]]).unwrap();
        let idx = ListIndex::build(&ds);
        assert_eq!(idx.lists().row(0).ids, &[1]);
        assert_eq!(idx.lists().row(1).ids, &[0]);
    }

    #[test]
    fn duplicates_come_first_by_id() {
        let ds = Dataset::from_rows(&[[0.0, 0.0], [5.0, 5.0], [5.0, 5.0], [5.0, 5.0]]).unwrap();
        let idx = ListIndex::build(&ds);
        let row = idx.lists().row(2);
        assert_eq!(row.ids, &[1, 3, 0]);
        assert_eq!(&row.dists[..2], &[0.0, 0.0]);
    }

    #[test]
    fn rho_examples() {
        let idx = ListIndex::build(&t5());
        assert_eq!(idx.row_rho(0, 1.5), 1);
        assert_eq!(idx.row_rho(0, 0.5), 0);
        assert_eq!(idx.row_rho(0, 50.0), 4);
        // A cutoff equal to a stored distance excludes that entry.
        assert_eq!(idx.row_rho(0, 2.0), 1);
        assert_eq!(idx.row_rho(0, 10.0), 2);
    }

    #[test]
    fn delta_examples() {
        let idx = ListIndex::build(&t5());
        let rho = idx.rho(1.5).unwrap();
        let s3 = idx.row_delta(3, &rho);
        assert_eq!((s3.delta, s3.mu, s3.scanned), (8.0, Some(2), 2));
        let s1 = idx.row_delta(1, &rho);
        assert_eq!((s1.delta, s1.mu), (10.0, None));
        let s0 = idx.row_delta(0, &rho);
        assert_eq!((s0.delta, s0.mu, s0.scanned), (1.0, Some(1), 1));
    }

    #[test]
    fn tied_peaks_terminate_via_order() {
        // All rho equal: object 0 is the peak, everyone else finds a
        // lower id without scanning to the end.
        let ds = Dataset::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let idx = ListIndex::build(&ds);
        let p = idx.profile(0.5).unwrap();
        assert_eq!(p.mu, vec![None, Some(0), Some(1), Some(2)]);
        assert_eq!(p.delta, vec![3.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn singleton_index() {
        let ds = Dataset::from_rows(&[[1.0, 1.0]]).unwrap();
        let p = ListIndex::build(&ds).profile(1.0).unwrap();
        assert_eq!((p.rho[0], p.delta[0], p.mu[0]), (0, 0.0, None));
    }

    #[test]
    fn truncation_keeps_prefixes() {
        let idx = ListIndex::build(&t5());
        let t = idx.lists().truncated(3.0);
        assert_eq!(t.row(0).ids, &[1, 2]);
        assert_eq!(t.row(3).ids, &[4]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_oracle(ds in arb_dataset(1..120), dc in 0.01f64..40.0) {
            let idx = ListIndex::build(&ds);
            prop_assert_eq!(idx.profile(dc).unwrap(), oracle_profile(&ds, dc).unwrap());
        }

        #[test]
        fn cutoff_at_stored_distance_is_excluded(ds in arb_dataset(2..60), pick in any::<prop::sample::Index>()) {
            let idx = ListIndex::build(&ds);
            let p = pick.index(ds.len());
            let row = idx.lists().row(p);
            let dc = row.dists[pick.index(row.len())];
            if dc > 0.0 {
                let rho = idx.row_rho(p, dc) as usize;
                prop_assert!(rho == 0 || row.dists[rho - 1] < dc);
                prop_assert!(rho == row.len() || row.dists[rho] >= dc);
            }
        }
    }
}
