//! Per-object density quantities and the total order every backend shares.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};

/// Strict total order on objects: higher `rho` ranks higher, equal `rho` is
/// broken in favour of the smaller id.
#[derive(Debug, Clone, Copy)]
pub struct DensityOrder<'a> {
    rho: &'a [u32],
}

impl<'a> DensityOrder<'a> {
    pub fn new(rho: &'a [u32]) -> Self {
        DensityOrder { rho }
    }

    /// True when `a` ranks strictly above `b`.
    #[inline]
    pub fn higher(&self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.rho[a], self.rho[b]);
        ra > rb || (ra == rb && a < b)
    }

    pub fn rho(&self) -> &'a [u32] {
        self.rho
    }
}

/// Object ids sorted from the highest to the lowest rank.
pub fn density_rank(rho: &[u32]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..rho.len()).collect();
    ids.sort_unstable_by(|&a, &b| rho[b].cmp(&rho[a]).then(a.cmp(&b)));
    ids
}

/// `rho`, `delta` and the dependent neighbor `mu` for every object under one
/// cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub dc: f64,
    pub rho: Vec<u32>,
    pub delta: Vec<f64>,
    /// `None` for the global peak and for unresolved objects.
    pub mu: Vec<Option<u32>>,
    /// False when `delta` holds the approximate-mode sentinel.
    pub resolved: Vec<bool>,
    /// Set when an approximate index was queried beyond its exactness window.
    pub degraded: bool,
}

impl DensityProfile {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn order(&self) -> DensityOrder<'_> {
        DensityOrder::new(&self.rho)
    }

    /// The maximum of the density order.
    pub fn peak(&self) -> Option<usize> {
        (0..self.len()).reduce(|best, p| {
            if self.order().higher(p, best) {
                p
            } else {
                best
            }
        })
    }

    /// `rho * delta` per object, the usual centre-selection score.
    pub fn gamma(&self) -> Vec<f64> {
        self.rho
            .iter()
            .zip(&self.delta)
            .map(|(&r, &d)| r as f64 * d)
            .collect()
    }

    pub fn is_exact(&self) -> bool {
        !self.degraded && self.resolved.iter().all(|&r| r)
    }

    pub fn unresolved_count(&self) -> usize {
        self.resolved.iter().filter(|&&r| !r).count()
    }

    /// SHA-256 over the cutoff and every per-object field, hex encoded.
    /// Identical profiles from different backends hash identically.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.dc.to_bits().to_le_bytes());
        h.update((self.len() as u64).to_le_bytes());
        for p in 0..self.len() {
            h.update(self.rho[p].to_le_bytes());
            h.update(self.delta[p].to_bits().to_le_bytes());
            h.update(self.mu[p].map_or(-1i64, i64::from).to_le_bytes());
            h.update([self.resolved[p] as u8]);
        }
        h.update([self.degraded as u8]);
        hex::encode(h.finalize())
    }

    pub fn to_json(&self) -> ProfileJson {
        ProfileJson {
            dc: self.dc,
            n: self.len(),
            rho: self.rho.clone(),
            delta: self.delta.clone(),
            mu: self.mu.iter().map(|m| m.map_or(-1, i64::from)).collect(),
            resolved: self.resolved.clone(),
            degraded: self.degraded,
        }
    }
}

/// Wire form of a profile: parallel arrays indexed by object id, with an
/// absent `mu` encoded as `-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileJson {
    pub dc: f64,
    pub n: usize,
    pub rho: Vec<u32>,
    pub delta: Vec<f64>,
    pub mu: Vec<i64>,
    pub resolved: Vec<bool>,
    #[serde(default)]
    pub degraded: bool,
}

impl TryFrom<ProfileJson> for DensityProfile {
    type Error = crate::error::DpcError;

    fn try_from(j: ProfileJson) -> Result<DensityProfile> {
        let n = j.rho.len();
        if j.n != n || j.delta.len() != n || j.mu.len() != n || j.resolved.len() != n {
            return Err(invalid("profile arrays have inconsistent lengths"));
        }
        let mu =
            j.mu.iter()
                .map(|&m| match m {
                    -1 => Ok(None),
                    m if m >= 0 && (m as usize) < n => Ok(Some(m as u32)),
                    m => Err(invalid(format!("mu value {m} out of range"))),
                })
                .collect::<Result<Vec<_>>>()?;
        Ok(DensityProfile {
            dc: j.dc,
            rho: j.rho,
            delta: j.delta,
            mu,
            resolved: j.resolved,
            degraded: j.degraded,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(density_rank(&[1, 2, 1, 1, 1]), vec![1, 0, 2, 3, 4]);
        assert_eq!(density_rank(&[3, 3, 3]), vec![0, 1, 2]);
        assert_eq!(density_rank(&[0, 1, 2, 3]), vec![3, 2, 1, 0]);
    }

    #[test]
    fn order_is_strict_and_total() {
        let rho = [2, 2, 1, 5];
        let o = DensityOrder::new(&rho);
        for a in 0..4 {
            assert!(!o.higher(a, a));
            for b in 0..4 {
                if a != b {
                    assert!(o.higher(a, b) ^ o.higher(b, a));
                }
            }
        }
        assert!(o.higher(0, 1));
        assert!(o.higher(3, 0));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let p = DensityProfile {
            dc: 0.1 + 0.2,
            rho: vec![1, 2],
            delta: vec![1.0 / 3.0, 2f64.sqrt()],
            mu: vec![Some(1), None],
            resolved: vec![true, true],
            degraded: false,
        };
        let s = serde_json::to_string(&p.to_json()).unwrap();
        let back: DensityProfile = serde_json::from_str::<ProfileJson>(&s)
            .unwrap()
            .try_into()
            .unwrap();
        assert_eq!(back, p);
        assert_eq!(back.content_hash(), p.content_hash());
    }

    #[test]
    fn json_rejects_bad_mu() {
        let j = ProfileJson {
            dc: 1.0,
            n: 1,
            rho: vec![0],
            delta: vec![0.0],
            mu: vec![5],
            resolved: vec![true],
            degraded: false,
        };
        assert!(DensityProfile::try_from(j).is_err());
    }
}
