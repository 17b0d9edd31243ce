//! R-tree bulk-loaded with Sort-Tile-Recursive packing.
//!
//! Leaves: sort by the first axis, cut into `ceil(L^(1/d))` slabs of
//! `M * ceil(L^(1/d))^(d-1)` objects (`L = ceil(n / M)`), and recurse on the
//! next axis inside each slab until runs of `M` remain. Upper levels repeat
//! the same packing on the centres of the child rectangles until a single
//! root is left, so every leaf sits at the same depth.

use std::sync::Arc;

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::geometry::Rect;
use crate::tree::{SpatialTree, TreeIndex, TreeLayout, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RConfig {
    /// Maximum entries per node.
    pub fanout: usize,
}

impl Default for RConfig {
    fn default() -> Self {
        RConfig { fanout: 64 }
    }
}

impl RConfig {
    pub fn with_fanout(fanout: usize) -> Self {
        RConfig { fanout }
    }
}

/// Smallest `s` with `s^k >= x`.
fn ceil_root(x: usize, k: u32) -> usize {
    let mut s = (x as f64).powf(1.0 / k as f64).floor().max(1.0) as usize;
    while s.saturating_pow(k) < x {
        s += 1;
    }
    while s > 1 && (s - 1).saturating_pow(k) >= x {
        s -= 1;
    }
    s
}

/// Partitions `items` into groups of at most `m`. `key(item, axis)` gives the
/// sort coordinate; ties fall back to the item number.
pub(crate) fn str_groups<F>(mut items: Vec<u32>, m: usize, dim: usize, key: &F) -> Vec<Vec<u32>>
where
    F: Fn(u32, usize) -> f64,
{
    let mut out = Vec::with_capacity(items.len().div_ceil(m));
    str_split(&mut items, m, 0, dim, key, &mut out);
    out
}

fn str_split<F>(
    items: &mut [u32],
    m: usize,
    axis: usize,
    dim: usize,
    key: &F,
    out: &mut Vec<Vec<u32>>,
) where
    F: Fn(u32, usize) -> f64,
{
    items.sort_unstable_by(|&a, &b| key(a, axis).total_cmp(&key(b, axis)).then(a.cmp(&b)));
    let axes_left = dim - axis;
    if axes_left == 1 {
        out.extend(items.chunks(m).map(<[u32]>::to_vec));
        return;
    }
    let pages = items.len().div_ceil(m);
    let slabs = ceil_root(pages, axes_left as u32);
    let slab_len = m.saturating_mul(slabs.saturating_pow(axes_left as u32 - 1));
    for slab in items.chunks_mut(slab_len) {
        str_split(slab, m, axis + 1, dim, key, out);
    }
}

pub fn build_rtree_str(ds: &Dataset, cfg: RConfig) -> Result<SpatialTree> {
    let m = cfg.fanout;
    if m < 2 {
        return Err(invalid("R-tree fanout must be at least 2"));
    }
    let dim = ds.dim();
    let ids: Vec<u32> = (0..ds.len() as u32).collect();
    let mut nodes: Vec<TreeNode> = Vec::new();
    let leaf_groups = str_groups(ids, m, dim, &|id, axis| ds.point(id as usize)[axis]);
    let mut level: Vec<u32> = Vec::with_capacity(leaf_groups.len());
    for group in leaf_groups {
        let mut rect = Rect::point(ds.point(group[0] as usize));
        for &q in &group[1..] {
            rect.extend(ds.point(q as usize));
        }
        level.push(nodes.len() as u32);
        nodes.push(TreeNode {
            rect,
            children: Vec::new(),
            nc: group.len() as u32,
            objects: group,
        });
    }
    while level.len() > 1 {
        let centers: Vec<Vec<f64>> = level
            .iter()
            .map(|&i| nodes[i as usize].rect.center())
            .collect();
        // Group positions within `level`, keyed by child rectangle centre.
        let positions: Vec<u32> = (0..level.len() as u32).collect();
        let groups = str_groups(positions, m, dim, &|pos, axis| centers[pos as usize][axis]);
        let mut next = Vec::with_capacity(groups.len());
        for group in groups {
            let children: Vec<u32> = group.iter().map(|&pos| level[pos as usize]).collect();
            let mut rect = nodes[children[0] as usize].rect.clone();
            let mut nc = 0;
            for &c in &children {
                rect.union(&nodes[c as usize].rect);
                nc += nodes[c as usize].nc;
            }
            next.push(nodes.len() as u32);
            nodes.push(TreeNode {
                rect,
                children,
                objects: Vec::new(),
                nc,
            });
        }
        level = next;
    }
    Ok(SpatialTree::new(nodes, level[0]))
}

impl TreeIndex {
    pub fn rtree(ds: impl Into<Arc<Dataset>>, cfg: RConfig) -> Result<TreeIndex> {
        let ds = ds.into();
        let tree = build_rtree_str(&ds, cfg)?;
        Ok(TreeIndex::from_parts(ds, tree, TreeLayout::Rtree(cfg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::DensityIndex;
    use crate::oracle::oracle_profile;
    use crate::quadtree::QuadConfig;
    use crate::testing::{arb_dataset, t5};
    use crate::tree::DeltaOptions;
    use proptest::prelude::*;

    fn check_structure(tree: &SpatialTree, ds: &Dataset, m: usize) {
        let root = tree.node(tree.root());
        assert_eq!(root.nc as usize, ds.len());
        let depths = tree.leaf_depths();
        assert!(
            depths.iter().all(|&d| d == depths[0]),
            "unbalanced: {depths:?}"
        );
        let leaves = ds.len().div_ceil(m);
        assert_eq!(tree.leaf_count(), leaves);
        let bound = (leaves as f64).log(m as f64).ceil() as usize + 1;
        assert!(
            tree.height() <= bound.max(1),
            "height {} > {bound}",
            tree.height()
        );
        for node in tree.nodes() {
            if node.is_leaf() {
                assert!(!node.objects.is_empty() && node.objects.len() <= m);
                assert_eq!(node.nc as usize, node.objects.len());
                for &q in &node.objects {
                    assert!(node.rect.contains(ds.point(q as usize)));
                }
            } else {
                assert!(node.children.len() <= m);
                let sum: u32 = node.children.iter().map(|&c| tree.node(c).nc).sum();
                assert_eq!(node.nc, sum);
                for &c in &node.children {
                    assert!(node.rect.contains_rect(&tree.node(c).rect));
                }
            }
        }
    }

    #[test]
    fn ceil_root_examples() {
        assert_eq!(ceil_root(3, 2), 2);
        assert_eq!(ceil_root(4, 2), 2);
        assert_eq!(ceil_root(5, 2), 3);
        assert_eq!(ceil_root(1, 2), 1);
        assert_eq!(ceil_root(27, 3), 3);
        assert_eq!(ceil_root(28, 3), 4);
    }

    #[test]
    fn five_points_fanout_two() {
        let ds = Dataset::from_rows(&[[4.0, 1.0], [0.0, 3.0], [2.0, 0.0], [1.0, 1.0], [3.0, 2.0]])
            .unwrap();
        let tree = build_rtree_str(&ds, RConfig::with_fanout(2)).unwrap();
        // Leaves are created first, in slab order.
        let sizes: Vec<usize> = tree.nodes()[..3].iter().map(|n| n.objects.len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        // First slab = four smallest x (ids 1, 3, 2, 4), re-sorted on y.
        assert_eq!(tree.nodes()[0].objects, vec![2, 3]);
        assert_eq!(tree.nodes()[1].objects, vec![4, 1]);
        assert_eq!(tree.nodes()[2].objects, vec![0]);
        check_structure(&tree, &ds, 2);
    }

    #[test]
    fn small_input_is_a_single_leaf() {
        let tree = build_rtree_str(&t5(), RConfig::default()).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert!(tree.node(tree.root()).is_leaf());
    }

    #[test]
    fn collinear_points_stay_balanced() {
        let rows: Vec<[f64; 2]> = (0..103).map(|i| [i as f64, 0.0]).collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        for m in [2, 3, 4, 7] {
            let tree = build_rtree_str(&ds, RConfig::with_fanout(m)).unwrap();
            check_structure(&tree, &ds, m);
        }
    }

    #[test]
    fn rejects_fanout_below_two() {
        assert!(build_rtree_str(&t5(), RConfig::with_fanout(1))
            .unwrap_err()
            .is_usage());
    }

    #[test]
    fn delta_examples() {
        let idx = TreeIndex::rtree(t5(), RConfig::with_fanout(2)).unwrap();
        let rho = idx.rho(1.5).unwrap();
        assert_eq!(rho, vec![1, 2, 1, 1, 1]);
        let m = idx.annotate(&rho);
        let d3 = idx.row_delta(&m, &rho, 3, DeltaOptions::default());
        assert_eq!((d3.delta, d3.mu), (8.0, Some(2)));
        let d1 = idx.row_delta(&m, &rho, 1, DeltaOptions::default());
        assert_eq!((d1.delta, d1.mu), (10.0, None));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn matches_oracle_and_quadtree(ds in arb_dataset(1..200), dc in 0.01f64..40.0, m in 2usize..10) {
            let tree = build_rtree_str(&ds, RConfig::with_fanout(m)).unwrap();
            check_structure(&tree, &ds, m);
            let rt = TreeIndex::rtree(ds.clone(), RConfig::with_fanout(m)).unwrap();
            let qt = TreeIndex::quadtree(ds.clone(), QuadConfig::with_capacity(m)).unwrap();
            let expect = oracle_profile(&ds, dc).unwrap();
            let got = rt.profile(dc).unwrap();
            prop_assert_eq!(&got, &expect);
            prop_assert_eq!(got.content_hash(), qt.profile(dc).unwrap().content_hash());
        }
    }
}
