//! Region quadtree (2^d-ary in d dimensions) over the data extent.

use std::sync::Arc;

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::geometry::Rect;
use crate::tree::{SpatialTree, TreeIndex, TreeLayout, TreeNode};

/// Largest dimension the quadtree will split in (2^8 children per node).
pub const MAX_QUADTREE_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct QuadConfig {
    /// A leaf splits once it holds more than this many objects.
    pub leaf_capacity: usize,
    /// Leaves at this depth never split, so duplicates cannot recurse forever.
    pub max_depth: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            leaf_capacity: 64,
            max_depth: 32,
        }
    }
}

impl QuadConfig {
    pub fn with_capacity(leaf_capacity: usize) -> Self {
        QuadConfig {
            leaf_capacity,
            ..QuadConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.leaf_capacity == 0 {
            return Err(invalid("quadtree leaf capacity must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(invalid("quadtree max depth must be at least 1"));
        }
        Ok(())
    }
}

/// Bounding box grown by a relative margin so that no point lies on the
/// outer boundary.
fn root_rect(ds: &Dataset) -> Rect {
    let bb = ds.bbox();
    let mut r = bb.clone();
    for i in 0..r.dim() {
        let scale = (bb.hi[i] - bb.lo[i])
            .max(bb.lo[i].abs())
            .max(bb.hi[i].abs())
            .max(1.0);
        let margin = 1e-9 * scale;
        r.lo[i] -= margin;
        r.hi[i] += margin;
    }
    r
}

/// Builds the tree by repeated midpoint splits of overfull leaves. `nc` is
/// filled in as objects are distributed.
pub fn build_quadtree(ds: &Dataset, cfg: QuadConfig) -> Result<SpatialTree> {
    cfg.validate()?;
    let d = ds.dim();
    if d > MAX_QUADTREE_DIM {
        return Err(invalid(format!(
            "quadtree supports at most {MAX_QUADTREE_DIM} dimensions, dataset has {d}"
        )));
    }
    let fan = 1usize << d;
    let mut nodes = vec![TreeNode {
        rect: root_rect(ds),
        children: Vec::new(),
        objects: Vec::new(),
        nc: ds.len() as u32,
    }];
    let mut work = vec![(0usize, (0..ds.len() as u32).collect::<Vec<u32>>(), 0usize)];
    while let Some((ni, ids, depth)) = work.pop() {
        if ids.len() <= cfg.leaf_capacity || depth >= cfg.max_depth {
            nodes[ni].objects = ids;
            continue;
        }
        let rect = nodes[ni].rect.clone();
        let mid = rect.center();
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); fan];
        for id in ids {
            let p = ds.point(id as usize);
            let slot = (0..d).fold(0usize, |acc, i| acc | (((p[i] >= mid[i]) as usize) << i));
            buckets[slot].push(id);
        }
        for (slot, bucket) in buckets.into_iter().enumerate() {
            let mut lo = rect.lo.clone();
            let mut hi = rect.hi.clone();
            for i in 0..d {
                if slot >> i & 1 == 1 {
                    lo[i] = mid[i];
                } else {
                    hi[i] = mid[i];
                }
            }
            let ci = nodes.len();
            nodes.push(TreeNode {
                rect: Rect { lo, hi },
                children: Vec::new(),
                objects: Vec::new(),
                nc: bucket.len() as u32,
            });
            nodes[ni].children.push(ci as u32);
            work.push((ci, bucket, depth + 1));
        }
    }
    Ok(SpatialTree::new(nodes, 0))
}

impl TreeIndex {
    pub fn quadtree(ds: impl Into<Arc<Dataset>>, cfg: QuadConfig) -> Result<TreeIndex> {
        let ds = ds.into();
        let tree = build_quadtree(&ds, cfg)?;
        Ok(TreeIndex::from_parts(ds, tree, TreeLayout::Quadtree(cfg)))
    }
}
