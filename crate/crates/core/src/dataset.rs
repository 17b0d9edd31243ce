//! Point sets: in-memory storage, CSV ingestion and seeded synthetic generators.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DpcError, Result};
use crate::geometry::Rect;

/// Immutable set of `d`-dimensional points. Object ids are the dense row
/// indices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
    bbox: Rect,
    source: String,
}

impl Dataset {
    /// Builds a dataset from a flat row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>, source: impl Into<String>) -> Result<Dataset> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(DpcError::EmptyDataset);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(DpcError::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!(
                "non-finite coordinate for object {}",
                pos / dim
            )));
        }
        let mut bbox = Rect::point(&coords[..dim]);
        for p in coords.chunks_exact(dim) {
            bbox.extend(p);
        }
        if u32::try_from(coords.len() / dim).is_err() {
            return Err(invalid("datasets are limited to u32::MAX objects"));
        }
        Ok(Dataset {
            dim,
            coords,
            bbox,
            source: source.into(),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Dataset> {
        let first = rows.first().ok_or(DpcError::EmptyDataset)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(DpcError::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Dataset::from_flat(dim, coords, "memory")
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, id: usize) -> &[f64] {
        &self.coords[id * self.dim..(id + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn bbox(&self) -> &Rect {
        &self.bbox
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Returns a copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Dataset> {
        let coords = self.coords.iter().map(|c| c * factor).collect();
        Dataset::from_flat(self.dim, coords, format!("{}*{}", self.source, factor))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for p in self.points() {
            let row: Vec<String> = p.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Loads a CSV (or whitespace-separated) file of numeric rows.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut ds = parse_csv(file)?;
    ds.source = path.display().to_string();
    Ok(ds)
}

/// Parses numeric rows separated by commas and/or whitespace.
///
/// A first row with no numeric cell is taken as a header. Blank lines and
/// lines starting with `#` are ignored. Error line numbers count data rows
/// from 0.
pub fn parse_csv<R: Read>(input: R) -> Result<Dataset> {
    let reader = BufReader::new(input);
    let mut dim = 0usize;
    let mut coords = Vec::new();
    let mut data_line = 0usize;
    let mut seen_first = false;
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .collect();
        if !seen_first {
            seen_first = true;
            if cells.iter().all(|c| c.parse::<f64>().is_err()) {
                continue;
            }
        }
        if dim == 0 {
            dim = cells.len();
        } else if cells.len() != dim {
            return Err(DpcError::Parse {
                line: data_line,
                message: format!("expected {dim} columns, found {}", cells.len()),
            });
        }
        for cell in cells {
            let v: f64 = cell.parse().map_err(|_| DpcError::Parse {
                line: data_line,
                message: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(DpcError::Parse {
                    line: data_line,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            coords.push(v);
        }
        data_line += 1;
    }
    if coords.is_empty() {
        return Err(DpcError::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    Dataset::from_flat(dim, coords, "csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum GeneratorKind {
    /// Isotropic Gaussian blobs with standard deviation `spread`.
    Blobs {
        k: usize,
        spread: f64,
    },
    Uniform,
}

/// Reproducible synthetic dataset description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Side length of the cube `[0, extent]^d` the data lives in.
    pub extent: f64,
}

impl GeneratorSpec {
    pub fn blobs(k: usize, n: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            kind: GeneratorKind::Blobs { k, spread: 2.0 },
            n,
            d: 2,
            seed,
            extent: 100.0,
        }
    }

    pub fn uniform(n: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            kind: GeneratorKind::Uniform,
            n,
            d: 2,
            seed,
            extent: 100.0,
        }
    }

    pub fn with_dim(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    pub fn with_extent(mut self, extent: f64) -> Self {
        self.extent = extent;
        self
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        if let GeneratorKind::Blobs { k, .. } = self.kind {
            self.kind = GeneratorKind::Blobs { k, spread };
        }
        self
    }
}

/// Generated points plus the generator's ground-truth labels (blob index,
/// or 0 for uniform data).
#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset,
    pub labels: Vec<usize>,
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    if spec.n == 0 {
        return Err(invalid("generator needs n >= 1"));
    }
    if spec.d == 0 {
        return Err(invalid("generator needs d >= 1"));
    }
    if !(spec.extent > 0.0 && spec.extent.is_finite()) {
        return Err(invalid("generator extent must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coords = Vec::with_capacity(spec.n * spec.d);
    let mut labels = Vec::with_capacity(spec.n);
    match spec.kind {
        GeneratorKind::Uniform => {
            for _ in 0..spec.n * spec.d {
                coords.push(rng.random_range(0.0..spec.extent));
            }
            labels.resize(spec.n, 0);
        }
        GeneratorKind::Blobs { k, spread } => {
            if k == 0 {
                return Err(invalid("blob count must be at least 1"));
            }
            if !(spread > 0.0 && spread.is_finite()) {
                return Err(invalid("blob spread must be positive"));
            }
            let centers = blob_centers(&mut rng, k, spec.d, spread, spec.extent);
            let noise = Normal::new(0.0, spread).map_err(|e| invalid(e.to_string()))?;
            for i in 0..spec.n {
                let b = i % k;
                for c in &centers[b] {
                    coords.push(c + noise.sample(&mut rng));
                }
                labels.push(b);
            }
        }
    }
    let source = format!(
        "generated:{:?}:n={}:d={}:seed={}",
        spec.kind, spec.n, spec.d, spec.seed
    );
    Ok(Generated {
        dataset: Dataset::from_flat(spec.d, coords, source)?,
        labels,
    })
}

/// Rejection-samples centres inside the middle 70% of the cube, asking for a
/// pairwise separation of ten spreads and relaxing it if the cube is too small.
fn blob_centers(
    rng: &mut ChaCha8Rng,
    k: usize,
    d: usize,
    spread: f64,
    extent: f64,
) -> Vec<Vec<f64>> {
    let lo = 0.15 * extent;
    let hi = 0.85 * extent;
    let mut separation = 10.0 * spread;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut attempts = 0;
    while centers.len() < k {
        let c: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
        attempts += 1;
        if centers
            .iter()
            .all(|o| crate::geometry::dist(o, &c) >= separation)
        {
            centers.push(c);
        } else if attempts % 1000 == 0 {
            separation *= 0.8;
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_rows() {
        let ds = parse_csv("0,0\n1,0\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.point(1), &[1.0, 0.0]);
    }

    #[test]
    fn skips_header_and_accepts_whitespace() {
        let ds = parse_csv("x,y\n0 0\n1\t2\n\n# comment\n3, 4\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.point(2), &[3.0, 4.0]);
    }

    #[test]
    fn reports_non_numeric_cell_with_data_line() {
        match parse_csv("0,0\n1,a\n".as_bytes()) {
            Err(DpcError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_ragged_and_empty_input() {
        assert!(matches!(
            parse_csv("0,0\n1,2,3\n".as_bytes()),
            Err(DpcError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv("".as_bytes()),
            Err(DpcError::Parse { .. })
        ));
        assert!(matches!(
            parse_csv("x,y\n".as_bytes()),
            Err(DpcError::Parse { .. })
        ));
        assert!(matches!(
            parse_csv("0,nan\n".as_bytes()),
            Err(DpcError::Parse { line: 0, .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = generate(&GeneratorSpec::blobs(3, 50, 1)).unwrap();
        let mut buf = Vec::new();
        g.dataset.write_csv(&mut buf).unwrap();
        let back = parse_csv(buf.as_slice()).unwrap();
        assert_eq!(back.coords(), g.dataset.coords());
    }

    #[test]
    fn generator_is_seeded() {
        let a = generate(&GeneratorSpec::blobs(3, 300, 7)).unwrap();
        let b = generate(&GeneratorSpec::blobs(3, 300, 7)).unwrap();
        let c = generate(&GeneratorSpec::blobs(3, 300, 8)).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_ne!(a.dataset.coords(), c.dataset.coords());
        assert_eq!(a.labels.iter().filter(|&&l| l == 2).count(), 100);
        let u = generate(&GeneratorSpec::uniform(100, 3).with_dim(3)).unwrap();
        assert_eq!(u.dataset.dim(), 3);
        assert!(u
            .dataset
            .points()
            .all(|p| p.iter().all(|&c| (0.0..100.0).contains(&c))));
    }

    #[test]
    fn bbox_covers_points() {
        let ds = Dataset::from_rows(&[[0.0, 5.0], [2.0, -1.0]]).unwrap();
        assert_eq!(ds.bbox().lo, vec![0.0, -1.0]);
        assert_eq!(ds.bbox().hi, vec![2.0, 5.0]);
        assert!(Dataset::from_rows::<[f64; 2]>(&[]).is_err());
    }
}
