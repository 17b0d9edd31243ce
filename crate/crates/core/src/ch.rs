//! Cumulative-histogram index layered over the neighbor lists.
//!
//! Bin `k` of an object's histogram holds the number of row entries strictly
//! closer than the bin's upper edge `(k + 1) * w`. A `rho` query jumps to the
//! bin containing the cutoff and only searches the row slice between the
//! previous and the current bin count.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::index::{check_dc, DeltaOutput, DensityIndex};
use crate::list::{ListIndex, NeighborLists, NeighborRow};

/// Upper edge of bin `k`. Build and query both use this single product, so
/// the two always agree on where a bin ends.
#[inline]
pub fn bin_edge(w: f64, k: usize) -> f64 {
    (k as f64 + 1.0) * w
}

const MAX_BINS_PER_ROW: f64 = 1e8;

pub(crate) fn check_width(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "bin width must be positive and finite, got {w}"
        )))
    }
}

/// Cumulative counts for one sorted distance row. The last entry always
/// equals the row length.
pub fn histogram_row(dists: &[f64], w: f64) -> Vec<u32> {
    let mut counts = Vec::new();
    let mut k = 0;
    let mut i = 0;
    while i < dists.len() {
        if dists[i] < bin_edge(w, k) {
            i += 1;
        } else {
            counts.push(i as u32);
            k += 1;
        }
    }
    counts.push(i as u32);
    counts
}

/// How a histogram lookup produced its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChPath {
    /// The cutoff sits exactly on a bin edge; the count is read directly.
    Edge,
    /// The cutoff lies beyond the last bin; every entry counts.
    Beyond,
    /// Binary search inside the target bin's slice.
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChRho {
    pub rho: u32,
    pub path: ChPath,
    /// Width of the searched slice (zero off the search path).
    pub slice: usize,
    /// Distance comparisons made inside the slice.
    pub probes: usize,
}

/// Answers `rho` for one object from its histogram and row.
pub fn ch_row_rho(counts: &[u32], w: f64, row: NeighborRow<'_>, dc: f64) -> ChRho {
    let bins = counts.len();
    let q = dc / w;
    let mut k = if q >= bins as f64 {
        bins
    } else {
        q.floor() as usize
    };
    // floor(dc / w) can land one bin off when the division rounds; settle on
    // the bin with edge(k - 1) <= dc < edge(k).
    while k > 0 && bin_edge(w, k - 1) > dc {
        k -= 1;
    }
    while k < bins && bin_edge(w, k) <= dc {
        k += 1;
    }
    if k >= bins {
        return ChRho {
            rho: counts[bins - 1],
            path: ChPath::Beyond,
            slice: 0,
            probes: 0,
        };
    }
    let first = if k == 0 { 0 } else { counts[k - 1] as usize };
    if k > 0 && bin_edge(w, k - 1) == dc {
        return ChRho {
            rho: first as u32,
            path: ChPath::Edge,
            slice: 0,
            probes: 0,
        };
    }
    let last = counts[k] as usize;
    let (mut lo, mut hi) = (first, last);
    let mut probes = 0;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        probes += 1;
        if row.dists[mid] < dc {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    ChRho {
        rho: lo as u32,
        path: ChPath::Search,
        slice: last - first,
        probes,
    }
}

/// Ragged per-object cumulative histograms with a shared bin width.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeHistogram {
    w: f64,
    offsets: Vec<usize>,
    counts: Vec<u32>,
}

impl CumulativeHistogram {
    pub fn build(lists: &NeighborLists, w: f64) -> Result<CumulativeHistogram> {
        check_width(w)?;
        for p in 0..lists.len() {
            if let Some(&far) = lists.row(p).dists.last() {
                if far / w > MAX_BINS_PER_ROW {
                    return Err(invalid(format!(
                        "bin width {w} would need more than {MAX_BINS_PER_ROW} bins per object"
                    )));
                }
            }
        }
        let rows: Vec<Vec<u32>> = (0..lists.len())
            .into_par_iter()
            .map(|p| histogram_row(lists.row(p).dists, w))
            .collect();
        Ok(CumulativeHistogram::from_rows(w, rows))
    }

    pub(crate) fn from_rows(w: f64, rows: Vec<Vec<u32>>) -> CumulativeHistogram {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut counts = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        offsets.push(0);
        for r in rows {
            counts.extend_from_slice(&r);
            offsets.push(counts.len());
        }
        CumulativeHistogram { w, offsets, counts }
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, p: usize) -> &[u32] {
        &self.counts[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn total_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bytes(&self) -> usize {
        self.offsets.len() * std::mem::size_of::<usize>() + self.counts.len() * 4
    }
}

/// List index plus histograms. `delta` is answered by the list.
#[derive(Debug, Clone, PartialEq)]
pub struct ChIndex {
    list: ListIndex,
    hist: CumulativeHistogram,
}

impl ChIndex {
    pub fn build(ds: &Dataset, w: f64) -> Result<ChIndex> {
        check_width(w)?;
        ChIndex::from_list(ListIndex::build(ds), w)
    }

    pub fn from_list(list: ListIndex, w: f64) -> Result<ChIndex> {
        let hist = CumulativeHistogram::build(list.lists(), w)?;
        Ok(ChIndex { list, hist })
    }

    pub(crate) fn from_parts(list: ListIndex, hist: CumulativeHistogram) -> ChIndex {
        ChIndex { list, hist }
    }

    pub fn list(&self) -> &ListIndex {
        &self.list
    }

    pub fn histogram(&self) -> &CumulativeHistogram {
        &self.hist
    }

    pub fn row_rho(&self, p: usize, dc: f64) -> ChRho {
        ch_row_rho(self.hist.row(p), self.hist.w, self.list.lists().row(p), dc)
    }

    /// Per-object lookup details, for instrumentation.
    pub fn rho_detailed(&self, dc: f64) -> Result<Vec<ChRho>> {
        check_dc(dc)?;
        Ok((0..self.len())
            .into_par_iter()
            .map(|p| self.row_rho(p, dc))
            .collect())
    }
}

impl DensityIndex for ChIndex {
    fn name(&self) -> &'static str {
        "ch"
    }

    fn len(&self) -> usize {
        self.list.len()
    }

    fn rho(&self, dc: f64) -> Result<Vec<u32>> {
        Ok(self.rho_detailed(dc)?.into_iter().map(|r| r.rho).collect())
    }

    fn delta(&self, rho: &[u32]) -> Result<DeltaOutput> {
        self.list.delta(rho)
    }

    fn index_bytes(&self) -> usize {
        self.list.index_bytes() + self.hist.bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_rho;
    use crate::testing::{arb_dataset, t5};
    use proptest::prelude::*;

    #[test]
    fn histogram_examples() {
        assert_eq!(
            histogram_row(&[1.0, 2.0, 10.0, 11.0], 1.0),
            vec![0, 1, 2, 2, 2, 2, 2, 2, 2, 2, 3, 4]
        );
        assert_eq!(histogram_row(&[0.5], 1.0), vec![1]);
        assert_eq!(histogram_row(&[1.0, 2.0, 10.0, 11.0], 20.0), vec![4]);
        assert_eq!(histogram_row(&[], 1.0), vec![0]);
    }

    #[test]
    fn build_rejects_bad_width() {
        let ds = t5();
        assert!(ChIndex::build(&ds, 0.0).unwrap_err().is_usage());
        assert!(ChIndex::build(&ds, -2.0).is_err());
        assert!(ChIndex::build(&ds, f64::INFINITY).is_err());
    }

    #[test]
    fn query_examples() {
        let idx = ChIndex::build(&t5(), 1.0).unwrap();
        let r = idx.row_rho(0, 1.5);
        assert_eq!((r.rho, r.path, r.slice), (1, ChPath::Search, 1));
        let r = idx.row_rho(0, 2.0);
        assert_eq!((r.rho, r.path), (1, ChPath::Edge));
        let r = idx.row_rho(0, 500.0);
        assert_eq!((r.rho, r.path), (4, ChPath::Beyond));
        // dc below the first edge searches bin 0.
        let r = idx.row_rho(0, 0.5);
        assert_eq!((r.rho, r.path), (0, ChPath::Search));
    }

    #[test]
    fn rounding_in_floor_division_is_repaired() {
        // 0.3 / 0.1 == 2.9999999999999996, while the edge of bin 2 is
        // 3 * 0.1 == 0.30000000000000004 > 0.3.
        let dists = [0.1, 0.2, 0.25, 0.29, 0.3, 0.30000000000000004, 0.31];
        let w = 0.1;
        let counts = histogram_row(&dists, w);
        let ids: Vec<u32> = (1..=dists.len() as u32).collect();
        let row = NeighborRow {
            ids: &ids,
            dists: &dists,
        };
        for dc in [0.3, 0.30000000000000004, 0.2, 0.1, 0.7 - 0.4, 0.31] {
            let expect = dists.iter().filter(|&&d| d < dc).count() as u32;
            assert_eq!(ch_row_rho(&counts, w, row, dc).rho, expect, "dc = {dc}");
        }
    }

    #[test]
    fn memory_shrinks_as_width_grows() {
        let ds = crate::dataset::generate(&crate::dataset::GeneratorSpec::uniform(200, 5))
            .unwrap()
            .dataset;
        let list = ListIndex::build(&ds);
        let mut prev = usize::MAX;
        let mut w = 0.5;
        while w < 200.0 {
            let h = CumulativeHistogram::build(list.lists(), w).unwrap();
            assert!(h.total_bins() < prev, "w = {w}");
            prev = h.total_bins();
            w *= 2.0;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_against_oracle(
            ds in arb_dataset(1..100),
            wf in 0.01f64..=1.0,
            k in 0usize..40,
            frac in 0.0f64..1.0,
            mode in 0u8..4,
        ) {
            let list = ListIndex::build(&ds);
            let maxd = (0..ds.len())
                .filter_map(|p| list.lists().row(p).dists.last().copied())
                .fold(0.0f64, f64::max)
                .max(1e-3);
            let w = wf * maxd;
            let idx = ChIndex::from_list(list, w).unwrap();
            let edge = bin_edge(w, k);
            let dc = match mode {
                0 => edge,
                1 => edge.next_up(),
                2 => edge.next_down(),
                _ => (k as f64 + frac) * w + 1e-9,
            };
            let got = idx.rho(dc).unwrap();
            prop_assert_eq!(&got, &oracle_rho(&ds, dc).unwrap());
            for p in 0..ds.len() {
                let r = idx.row_rho(p, dc);
                prop_assert!(r.probes <= r.slice);
            }
        }
    }
}
