//! Euclidean distances and axis-aligned rectangles.
//!
//! Every distance in the crate goes through [`dist`] so that all backends
//! compare bit-identical values. The rectangle bounds accumulate squared
//! per-axis gaps in the same order as [`dist`], and rounding is monotone, so
//! `min_dist_to_rect(p, r) <= dist(p, q) <= max_dist_to_rect(p, r)` holds for
//! the computed floats of every `q` inside `r`, not only in exact arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{DpcError, Result};

/// Euclidean distance between two coordinate slices of equal length.
///
/// Panics in debug builds on a length mismatch; use [`checked_dist`] for
/// untrusted input.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let g = x - y;
        acc += g * g;
    }
    acc.sqrt()
}

pub fn checked_dist(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DpcError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(dist(a, b))
}

/// Axis-aligned box with `lo[i] <= hi[i]` on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Rect> {
        if lo.len() != hi.len() {
            return Err(DpcError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| l.is_nan() || h.is_nan() || l > h)
        {
            return Err(DpcError::InvalidParameter(
                "rectangle requires lo <= hi on every axis".into(),
            ));
        }
        Ok(Rect { lo, hi })
    }

    /// Degenerate rectangle covering a single point.
    pub fn point(p: &[f64]) -> Rect {
        Rect {
            lo: p.to_vec(),
            hi: p.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Grows the rectangle to cover `p`.
    pub fn extend(&mut self, p: &[f64]) {
        for (i, &x) in p.iter().enumerate() {
            if x < self.lo[i] {
                self.lo[i] = x;
            }
            if x > self.hi[i] {
                self.hi[i] = x;
            }
        }
    }

    pub fn union(&mut self, other: &Rect) {
        for i in 0..self.dim() {
            self.lo[i] = self.lo[i].min(other.lo[i]);
            self.hi[i] = self.hi[i].max(other.hi[i]);
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(i, &x)| self.lo[i] <= x && x <= self.hi[i])
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l + (h - l) * 0.5)
            .collect()
    }

    /// Length of the main diagonal.
    pub fn diagonal(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }
}

/// Distance from `p` to the nearest point of `r`; zero when `p` lies inside.
#[inline]
pub fn min_dist_to_rect(p: &[f64], r: &Rect) -> f64 {
    debug_assert_eq!(p.len(), r.dim());
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        let g = if x < r.lo[i] {
            x - r.lo[i]
        } else if x > r.hi[i] {
            x - r.hi[i]
        } else {
            0.0
        };
        acc += g * g;
    }
    acc.sqrt()
}

/// Distance from `p` to the farthest corner of `r`.
#[inline]
pub fn max_dist_to_rect(p: &[f64], r: &Rect) -> f64 {
    debug_assert_eq!(p.len(), r.dim());
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        let a = x - r.lo[i];
        let b = x - r.hi[i];
        let g = if a.abs() >= b.abs() { a } else { b };
        acc += g * g;
    }
    acc.sqrt()
}

pub fn checked_min_dist_to_rect(p: &[f64], r: &Rect) -> Result<f64> {
    check_dim(p, r)?;
    Ok(min_dist_to_rect(p, r))
}

pub fn checked_max_dist_to_rect(p: &[f64], r: &Rect) -> Result<f64> {
    check_dim(p, r)?;
    Ok(max_dist_to_rect(p, r))
}

fn check_dim(p: &[f64], r: &Rect) -> Result<()> {
    if p.len() != r.dim() {
        return Err(DpcError::DimensionMismatch {
            expected: r.dim(),
            found: p.len(),
        });
    }
    Ok(())
}
