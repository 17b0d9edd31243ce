//! Node arena shared by the quadtree and the R-tree, and the density queries
//! that run over either layout.
//!
//! `rho` classifies each node against the query ball: discarded when
//! `d_min >= dc`, fully contained when `d_max < dc`, explored otherwise.
//! `delta` is a best-first search with two prunings: a node whose `maxrho`
//! is below the query's `rho` cannot hold a higher-ranked object, and a node
//! farther than the current candidate cannot improve it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::geometry::{dist, max_dist_to_rect, min_dist_to_rect, Rect};
use crate::index::{check_dc, check_rho_len, DeltaOutput, DensityIndex};
use crate::profile::DensityOrder;
use crate::quadtree::QuadConfig;
use crate::rtree::RConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub rect: Rect,
    /// Child node indices; empty for leaves.
    pub children: Vec<u32>,
    /// Object ids, stored at leaves only.
    pub objects: Vec<u32>,
    /// Objects in the subtree.
    pub nc: u32,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialTree {
    nodes: Vec<TreeNode>,
    root: u32,
}

impl SpatialTree {
    pub(crate) fn new(nodes: Vec<TreeNode>, root: u32) -> SpatialTree {
        SpatialTree { nodes, root }
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn node(&self, i: u32) -> &TreeNode {
        &self.nodes[i as usize]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Depth of every leaf, root at depth 0, in traversal order.
    pub fn leaf_depths(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((i, depth)) = stack.pop() {
            let node = self.node(i);
            if node.is_leaf() {
                out.push(depth);
            }
            stack.extend(node.children.iter().map(|&c| (c, depth + 1)));
        }
        out
    }

    /// Number of levels (a single leaf has height 1).
    pub fn height(&self) -> usize {
        self.leaf_depths().into_iter().max().unwrap_or(0) + 1
    }

    /// Largest leaf occupancy.
    pub fn max_leaf_size(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.objects.len())
            .max()
            .unwrap_or(0)
    }

    /// Children listed before parents are never produced by the builders,
    /// but the order below does not rely on any particular numbering.
    fn post_order(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((i, expanded)) = stack.pop() {
            if expanded {
                out.push(i);
            } else {
                stack.push((i, true));
                stack.extend(self.node(i).children.iter().map(|&c| (c, false)));
            }
        }
        out
    }

    pub fn bytes(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| {
                std::mem::size_of::<TreeNode>()
                    + (n.rect.lo.len() + n.rect.hi.len()) * 8
                    + (n.children.len() + n.objects.len()) * 4
            })
            .sum()
    }
}

/// Per-node maximum `rho` under one profile; `-1` marks empty subtrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxRho(Vec<i64>);

impl MaxRho {
    pub fn get(&self, node: u32) -> i64 {
        self.0[node as usize]
    }
}

/// Post-order pass computing each node's `maxrho`.
pub fn annotate_maxrho(tree: &SpatialTree, rho: &[u32]) -> MaxRho {
    let mut max = vec![-1i64; tree.node_count()];
    for i in tree.post_order() {
        let node = tree.node(i);
        let m = if node.is_leaf() {
            node.objects
                .iter()
                .map(|&q| rho[q as usize] as i64)
                .max()
                .unwrap_or(-1)
        } else {
            node.children
                .iter()
                .map(|&c| max[c as usize])
                .max()
                .unwrap_or(-1)
        };
        max[i as usize] = m;
    }
    MaxRho(max)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RhoStats {
    pub nodes_visited: usize,
    pub contained: usize,
    pub discarded: usize,
}

/// Count of other objects strictly within `dc` of object `p`.
pub fn tree_rho(tree: &SpatialTree, ds: &Dataset, p: usize, dc: f64) -> (u32, RhoStats) {
    let pp = ds.point(p);
    let mut stats = RhoStats::default();
    let mut count: u32 = 0;
    let mut stack = vec![tree.root];
    while let Some(i) = stack.pop() {
        let node = tree.node(i);
        stats.nodes_visited += 1;
        if min_dist_to_rect(pp, &node.rect) >= dc {
            stats.discarded += 1;
            continue;
        }
        if max_dist_to_rect(pp, &node.rect) < dc {
            stats.contained += 1;
            count += node.nc;
            continue;
        }
        if node.is_leaf() {
            count += node
                .objects
                .iter()
                .filter(|&&q| dist(pp, ds.point(q as usize)) < dc)
                .count() as u32;
        } else {
            stack.extend(node.children.iter().copied());
        }
    }
    // `p` sits inside its own leaf and was counted once above.
    (count - 1, stats)
}

/// Order in which candidate nodes are explored by [`tree_delta`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frontier {
    /// Min-heap on `d_min`.
    #[default]
    PriorityQueue,
    /// Depth-first stack with the nearest child pushed last.
    Stack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaOptions {
    pub density_pruning: bool,
    pub distance_pruning: bool,
    pub frontier: Frontier,
}

impl Default for DeltaOptions {
    fn default() -> Self {
        DeltaOptions {
            density_pruning: true,
            distance_pruning: true,
            frontier: Frontier::PriorityQueue,
        }
    }
}

impl DeltaOptions {
    pub fn unpruned() -> Self {
        DeltaOptions {
            density_pruning: false,
            distance_pruning: false,
            frontier: Frontier::PriorityQueue,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeltaStats {
    /// Nodes popped and expanded (not pruned on arrival).
    pub nodes_visited: usize,
    pub leaves_visited: usize,
    pub objects_examined: usize,
    /// Whether the farthest-object search ran (global peak).
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeDelta {
    pub delta: f64,
    pub mu: Option<u32>,
    pub stats: DeltaStats,
}

#[derive(Clone, Copy)]
struct Entry {
    key: f64,
    node: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so that `BinaryHeap` pops the smallest key first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then(other.node.cmp(&self.node))
    }
}

enum Pending {
    Heap(BinaryHeap<Entry>),
    Stack(Vec<Entry>),
}

impl Pending {
    fn new(frontier: Frontier) -> Self {
        match frontier {
            Frontier::PriorityQueue => Pending::Heap(BinaryHeap::new()),
            Frontier::Stack => Pending::Stack(Vec::new()),
        }
    }

    fn pop(&mut self) -> Option<Entry> {
        match self {
            Pending::Heap(h) => h.pop(),
            Pending::Stack(s) => s.pop(),
        }
    }

    /// Queues the children that survived density pruning. The stack variant
    /// pushes the nearest child last so it is explored first.
    fn push_children(&mut self, children: &mut [Entry]) {
        match self {
            Pending::Heap(h) => h.extend(children.iter().copied()),
            Pending::Stack(s) => {
                if let Some(best) = (0..children.len())
                    .min_by(|&a, &b| children[a].key.total_cmp(&children[b].key).then(a.cmp(&b)))
                {
                    let last = children.len() - 1;
                    children.swap(best, last);
                    s.extend(children.iter().copied());
                }
            }
        }
    }

    fn sorted(&self) -> bool {
        matches!(self, Pending::Heap(_))
    }
}

/// Dependent distance and neighbor of object `p`.
///
/// Equal to the brute-force answer for any combination of options; the
/// options only change how much of the tree is touched.
pub fn tree_delta(
    tree: &SpatialTree,
    ds: &Dataset,
    maxrho: &MaxRho,
    rho: &[u32],
    p: usize,
    opts: DeltaOptions,
) -> TreeDelta {
    let order = DensityOrder::new(rho);
    let pp = ds.point(p);
    let rho_p = rho[p] as i64;
    let mut stats = DeltaStats::default();
    let mut best = f64::INFINITY;
    let mut mu: Option<u32> = None;

    let mut pending = Pending::new(opts.frontier);
    let mut scratch = Vec::new();
    pending.push_children(&mut [Entry {
        key: 0.0,
        node: tree.root,
    }]);
    while let Some(Entry {
        key: d_min,
        node: i,
    }) = pending.pop()
    {
        // Strict: a node at exactly `best` may still hold an equidistant
        // object with a smaller id.
        if opts.distance_pruning && d_min > best {
            if pending.sorted() {
                break;
            }
            continue;
        }
        let node = tree.node(i);
        stats.nodes_visited += 1;
        if node.is_leaf() {
            stats.leaves_visited += 1;
            for &q in &node.objects {
                stats.objects_examined += 1;
                let qi = q as usize;
                if !order.higher(qi, p) {
                    continue;
                }
                let d = dist(pp, ds.point(qi));
                if d < best || (d == best && mu.is_some_and(|m| q < m)) {
                    best = d;
                    mu = Some(q);
                }
            }
        } else {
            scratch.clear();
            for &c in &node.children {
                if opts.density_pruning && maxrho.get(c) < rho_p {
                    continue;
                }
                scratch.push(Entry {
                    key: min_dist_to_rect(pp, &tree.node(c).rect),
                    node: c,
                });
            }
            pending.push_children(&mut scratch);
        }
    }

    if mu.is_some() {
        return TreeDelta {
            delta: best,
            mu,
            stats,
        };
    }
    stats.fallback = true;
    let delta = farthest(tree, ds, p, opts.distance_pruning, &mut stats);
    TreeDelta {
        delta,
        mu: None,
        stats,
    }
}

/// Largest distance from `p` to any other object, with branch-and-bound on
/// `d_max`.
fn farthest(
    tree: &SpatialTree,
    ds: &Dataset,
    p: usize,
    prune: bool,
    stats: &mut DeltaStats,
) -> f64 {
    let pp = ds.point(p);
    let mut best = 0.0f64;
    // Keys are negated so the min-heap pops the largest `d_max` first.
    let mut heap = BinaryHeap::new();
    heap.push(Entry {
        key: -max_dist_to_rect(pp, &tree.node(tree.root).rect),
        node: tree.root,
    });
    while let Some(Entry { key, node: i }) = heap.pop() {
        if prune && -key <= best {
            break;
        }
        let node = tree.node(i);
        stats.nodes_visited += 1;
        if node.is_leaf() {
            stats.leaves_visited += 1;
            for &q in &node.objects {
                stats.objects_examined += 1;
                if q as usize != p {
                    best = best.max(dist(pp, ds.point(q as usize)));
                }
            }
        } else {
            heap.extend(node.children.iter().map(|&c| Entry {
                key: -max_dist_to_rect(pp, &tree.node(c).rect),
                node: c,
            }));
        }
    }
    best
}

/// How a [`TreeIndex`] was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeLayout {
    Quadtree(QuadConfig),
    Rtree(RConfig),
}

/// Summary numbers for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct TreeStats {
    pub nodes: usize,
    pub leaves: usize,
    pub height: usize,
    pub max_leaf_size: usize,
}

/// A spatial tree over a dataset, usable as a density backend.
#[derive(Debug, Clone)]
pub struct TreeIndex {
    ds: Arc<Dataset>,
    tree: SpatialTree,
    layout: TreeLayout,
}

impl TreeIndex {
    pub(crate) fn from_parts(ds: Arc<Dataset>, tree: SpatialTree, layout: TreeLayout) -> TreeIndex {
        TreeIndex { ds, tree, layout }
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.ds
    }

    pub fn tree(&self) -> &SpatialTree {
        &self.tree
    }

    pub fn layout(&self) -> TreeLayout {
        self.layout
    }

    pub fn stats(&self) -> TreeStats {
        TreeStats {
            nodes: self.tree.node_count(),
            leaves: self.tree.leaf_count(),
            height: self.tree.height(),
            max_leaf_size: self.tree.max_leaf_size(),
        }
    }

    pub fn row_rho(&self, p: usize, dc: f64) -> (u32, RhoStats) {
        tree_rho(&self.tree, &self.ds, p, dc)
    }

    pub fn annotate(&self, rho: &[u32]) -> MaxRho {
        annotate_maxrho(&self.tree, rho)
    }

    pub fn row_delta(
        &self,
        maxrho: &MaxRho,
        rho: &[u32],
        p: usize,
        opts: DeltaOptions,
    ) -> TreeDelta {
        tree_delta(&self.tree, &self.ds, maxrho, rho, p, opts)
    }

    /// Delta pass over all objects with explicit options.
    pub fn delta_with(&self, rho: &[u32], opts: DeltaOptions) -> Result<Vec<TreeDelta>> {
        check_rho_len(rho, self.len())?;
        let maxrho = self.annotate(rho);
        Ok((0..self.len())
            .into_par_iter()
            .map(|p| self.row_delta(&maxrho, rho, p, opts))
            .collect())
    }
}

impl DensityIndex for TreeIndex {
    fn name(&self) -> &'static str {
        match self.layout {
            TreeLayout::Quadtree(_) => "quadtree",
            TreeLayout::Rtree(_) => "rtree",
        }
    }

    fn len(&self) -> usize {
        self.ds.len()
    }

    fn rho(&self, dc: f64) -> Result<Vec<u32>> {
        check_dc(dc)?;
        Ok((0..self.len())
            .into_par_iter()
            .map(|p| self.row_rho(p, dc).0)
            .collect())
    }

    fn delta(&self, rho: &[u32]) -> Result<DeltaOutput> {
        let (delta, mu) = self
            .delta_with(rho, DeltaOptions::default())?
            .into_iter()
            .map(|r| (r.delta, r.mu))
            .unzip();
        Ok(DeltaOutput {
            delta,
            mu,
            resolved: vec![true; self.len()],
        })
    }

    fn index_bytes(&self) -> usize {
        self.tree.bytes()
    }
}
