//! Runtime selection of a density backend.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ch::ChIndex;
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::index::{DeltaOutput, DensityIndex};
use crate::list::{full_list_bytes, ListIndex};
use crate::oracle::BruteForce;
use crate::quadtree::QuadConfig;
use crate::rnlist::ReducedNeighborList;
use crate::rtree::RConfig;
use crate::tree::TreeIndex;

/// A backend kind plus its build parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Oracle,
    List,
    Ch {
        w: f64,
    },
    /// Truncated lists, with histograms when `w` is set.
    Reduced {
        tau: f64,
        w: Option<f64>,
    },
    Quadtree(QuadConfig),
    Rtree(RConfig),
}

impl BackendSpec {
    /// Parses a kind name as used on the command line. `list` and `ch` turn
    /// into their truncated variants when `tau` is given.
    pub fn from_parts(
        kind: &str,
        w: Option<f64>,
        tau: Option<f64>,
        capacity: Option<usize>,
        fanout: Option<usize>,
    ) -> Result<BackendSpec> {
        let spec = match (kind, tau) {
            ("oracle", None) => BackendSpec::Oracle,
            ("list", None) => BackendSpec::List,
            ("list", Some(tau)) => BackendSpec::Reduced { tau, w: None },
            ("ch", None) => BackendSpec::Ch {
                w: w.ok_or_else(|| invalid("the ch index needs a bin width"))?,
            },
            ("ch", Some(tau)) => BackendSpec::Reduced {
                tau,
                w: Some(w.ok_or_else(|| invalid("the ch index needs a bin width"))?),
            },
            ("quadtree", None) => BackendSpec::Quadtree(match capacity {
                Some(c) => QuadConfig::with_capacity(c),
                None => QuadConfig::default(),
            }),
            ("rtree", None) => BackendSpec::Rtree(match fanout {
                Some(m) => RConfig::with_fanout(m),
                None => RConfig::default(),
            }),
            (k @ ("oracle" | "quadtree" | "rtree"), Some(_)) => {
                return Err(invalid(format!("{k} does not take a neighbor threshold")))
            }
            (k, _) => return Err(invalid(format!("unknown index kind '{k}'"))),
        };
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BackendSpec::Oracle => "oracle",
            BackendSpec::List => "list",
            BackendSpec::Ch { .. } => "ch",
            BackendSpec::Reduced { w: None, .. } => "rn-list",
            BackendSpec::Reduced { w: Some(_), .. } => "rn-ch",
            BackendSpec::Quadtree(_) => "quadtree",
            BackendSpec::Rtree(_) => "rtree",
        }
    }

    /// Size of the full neighbor lists the backend would materialise, if any.
    pub fn list_bytes(&self, n: usize) -> Option<usize> {
        match self {
            BackendSpec::List | BackendSpec::Ch { .. } => Some(full_list_bytes(n)),
            _ => None,
        }
    }

    pub fn build(&self, ds: Arc<Dataset>) -> Result<AnyIndex> {
        Ok(match *self {
            BackendSpec::Oracle => AnyIndex::Oracle(ds),
            BackendSpec::List => AnyIndex::List(ListIndex::build(&ds)),
            BackendSpec::Ch { w } => AnyIndex::Ch(ChIndex::build(&ds, w)?),
            BackendSpec::Reduced { tau, w } => {
                AnyIndex::Reduced(ReducedNeighborList::build(&ds, tau, w)?)
            }
            BackendSpec::Quadtree(cfg) => AnyIndex::Tree(TreeIndex::quadtree(ds, cfg)?),
            BackendSpec::Rtree(cfg) => AnyIndex::Tree(TreeIndex::rtree(ds, cfg)?),
        })
    }
}

/// Any built backend.
#[derive(Debug, Clone)]
pub enum AnyIndex {
    Oracle(Arc<Dataset>),
    List(ListIndex),
    Ch(ChIndex),
    Reduced(ReducedNeighborList),
    Tree(TreeIndex),
}

impl AnyIndex {
    fn with<R>(&self, f: impl FnOnce(&dyn DensityIndex) -> R) -> R {
        match self {
            AnyIndex::Oracle(ds) => f(&BruteForce::new(ds)),
            AnyIndex::List(i) => f(i),
            AnyIndex::Ch(i) => f(i),
            AnyIndex::Reduced(i) => f(i),
            AnyIndex::Tree(i) => f(i),
        }
    }
}

impl DensityIndex for AnyIndex {
    fn name(&self) -> &'static str {
        self.with(|i| i.name())
    }

    fn len(&self) -> usize {
        self.with(|i| i.len())
    }

    fn rho(&self, dc: f64) -> Result<Vec<u32>> {
        self.with(|i| i.rho(dc))
    }

    fn delta(&self, rho: &[u32]) -> Result<DeltaOutput> {
        self.with(|i| i.delta(rho))
    }

    fn index_bytes(&self) -> usize {
        self.with(|i| i.index_bytes())
    }

    fn degraded(&self, dc: f64) -> bool {
        self.with(|i| i.degraded(dc))
    }
}
