//! Centre selection, dependent-neighbor assignment and outlier flags.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DpcError, Result};
use crate::profile::{density_rank, DensityProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterSelection {
    Explicit(Vec<usize>),
    /// Objects with `rho >= rho_min` and `delta >= delta_min`.
    Thresholds {
        rho_min: u32,
        delta_min: f64,
    },
    /// The `k` largest by `rho * delta`.
    TopK(usize),
}

/// `delta` for threshold tests: unresolved objects count as unbounded.
fn threshold_delta(profile: &DensityProfile, p: usize) -> f64 {
    if profile.resolved[p] {
        profile.delta[p]
    } else {
        f64::INFINITY
    }
}

/// Returns the selected centres in ascending id order.
pub fn select_centers(profile: &DensityProfile, sel: &CenterSelection) -> Result<Vec<usize>> {
    let n = profile.len();
    let mut centers = match sel {
        CenterSelection::Explicit(ids) => {
            if let Some(&bad) = ids.iter().find(|&&id| id >= n) {
                return Err(DpcError::UnknownId(bad));
            }
            ids.clone()
        }
        CenterSelection::Thresholds { rho_min, delta_min } => {
            if delta_min.is_nan() || *delta_min < 0.0 {
                return Err(invalid(format!(
                    "delta threshold must be non-negative, got {delta_min}"
                )));
            }
            (0..n)
                .filter(|&p| {
                    profile.rho[p] >= *rho_min && threshold_delta(profile, p) >= *delta_min
                })
                .collect()
        }
        CenterSelection::TopK(k) => {
            if *k == 0 {
                return Err(invalid("top-k needs k >= 1"));
            }
            let gamma = profile.gamma();
            let order = profile.order();
            let mut ids: Vec<usize> = (0..n).collect();
            ids.sort_by(|&a, &b| {
                gamma[b].total_cmp(&gamma[a]).then_with(|| {
                    if order.higher(a, b) {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Greater
                    }
                })
            });
            ids.truncate(*k);
            ids
        }
    };
    centers.sort_unstable();
    centers.dedup();
    if centers.is_empty() {
        return Err(DpcError::NoCenters);
    }
    Ok(centers)
}

/// Outlier when `rho <= rho_max` and `delta >= delta_min`. Flags do not
/// affect labels.
pub fn flag_outliers(profile: &DensityProfile, rho_max: u32, delta_min: f64) -> Vec<bool> {
    (0..profile.len())
        .map(|p| profile.rho[p] <= rho_max && threshold_delta(profile, p) >= delta_min)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub dc: f64,
    /// Ascending ids; label `i` refers to `centers[i]`.
    pub centers: Vec<usize>,
    /// `None` for objects whose dependent chain hits an unresolved object.
    pub labels: Vec<Option<usize>>,
    pub outliers: Vec<bool>,
}

/// Labels objects in descending density order, so each object's dependent
/// neighbor is labelled before the object itself.
pub fn assign(profile: &DensityProfile, centers: &[usize]) -> Result<Clustering> {
    let n = profile.len();
    if centers.is_empty() {
        return Err(DpcError::NoCenters);
    }
    let mut center_label = vec![None; n];
    for (i, &c) in centers.iter().enumerate() {
        if c >= n {
            return Err(DpcError::UnknownId(c));
        }
        center_label[c] = Some(i);
    }
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for p in density_rank(&profile.rho) {
        labels[p] = match (center_label[p], profile.mu[p]) {
            (Some(l), _) => Some(l),
            (None, Some(m)) if profile.resolved[p] => labels[m as usize],
            (None, None) if profile.resolved[p] => return Err(DpcError::PeakNotCenter(p)),
            _ => None,
        };
    }
    Ok(Clustering {
        dc: profile.dc,
        centers: centers.to_vec(),
        labels,
        outliers: vec![false; n],
    })
}

impl Clustering {
    pub fn with_outliers(mut self, outliers: Vec<bool>) -> Clustering {
        self.outliers = outliers;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn unassigned(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&p| self.labels[p].is_none())
            .collect()
    }

    /// Member count per centre.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for l in self.labels.iter().flatten() {
            sizes[*l] += 1;
        }
        sizes
    }

    pub fn to_json(&self) -> ClusteringJson {
        ClusteringJson {
            dc: self.dc,
            centers: self.centers.clone(),
            labels: self
                .labels
                .iter()
                .map(|l| l.map_or(-1, |l| l as i64))
                .collect(),
            outliers: (0..self.len()).filter(|&p| self.outliers[p]).collect(),
            unassigned: self.unassigned(),
        }
    }
}

/// Wire form of a clustering; `-1` marks an unassigned object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringJson {
    pub dc: f64,
    pub centers: Vec<usize>,
    pub labels: Vec<i64>,
    #[serde(default)]
    pub outliers: Vec<usize>,
    #[serde(default)]
    pub unassigned: Vec<usize>,
}

/// Parses `-1`-encoded labels, rejecting other negative values.
pub fn labels_from_json(labels: &[i64]) -> Result<Vec<Option<usize>>> {
    labels
        .iter()
        .map(|&l| match l {
            -1 => Ok(None),
            l if l >= 0 => Ok(Some(l as usize)),
            l => Err(invalid(format!("invalid label {l}"))),
        })
        .collect()
}
