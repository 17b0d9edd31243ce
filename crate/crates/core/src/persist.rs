//! Little-endian binary files for built indices.
//!
//! Layout: `"DPCL"`, version `u32`, kind `u8`, `n: u64`, `d: u32`, then
//! kind-specific fields. List-based kinds store every row as a `u32` length
//! followed by `(u32 id, f64 dist)` entries, and histograms as a `u32` length
//! followed by `u32` counts. Tree kinds store the coordinates and their
//! configuration; the tree is rebuilt on load, which is deterministic.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};

use crate::backend::AnyIndex;
use crate::ch::{ChIndex, CumulativeHistogram};
use crate::dataset::Dataset;
use crate::error::{DpcError, Result};
use crate::list::{ListIndex, NeighborLists, OwnedRow};
use crate::quadtree::QuadConfig;
use crate::rnlist::ReducedNeighborList;
use crate::rtree::RConfig;
use crate::tree::{TreeIndex, TreeLayout};

pub const MAGIC: &[u8; 4] = b"DPCL";
pub const VERSION: u32 = 1;

const KIND_LIST: u8 = 0;
const KIND_CH: u8 = 1;
const KIND_REDUCED: u8 = 2;
const KIND_QUADTREE: u8 = 3;
const KIND_RTREE: u8 = 4;
const KIND_ORACLE: u8 = 5;

/// A loaded index plus the dimension of the data it was built on.
#[derive(Debug, Clone)]
pub struct IndexFile {
    pub dim: usize,
    pub index: AnyIndex,
}

fn format_err(msg: impl Into<String>) -> DpcError {
    DpcError::Format(msg.into())
}

fn write_rows<W: Write>(w: &mut W, lists: &NeighborLists) -> Result<()> {
    for p in 0..lists.len() {
        let row = lists.row(p);
        w.write_u32::<LE>(row.len() as u32)?;
        for (&id, &d) in row.ids.iter().zip(row.dists) {
            w.write_u32::<LE>(id)?;
            w.write_f64::<LE>(d)?;
        }
    }
    Ok(())
}

fn write_hist<W: Write>(w: &mut W, h: &CumulativeHistogram) -> Result<()> {
    for p in 0..h.len() {
        let row = h.row(p);
        w.write_u32::<LE>(row.len() as u32)?;
        for &c in row {
            w.write_u32::<LE>(c)?;
        }
    }
    Ok(())
}

fn write_coords<W: Write>(w: &mut W, ds: &Dataset) -> Result<()> {
    for &c in ds.coords() {
        w.write_f64::<LE>(c)?;
    }
    Ok(())
}

pub fn write_index<W: Write>(mut w: W, index: &AnyIndex, dim: usize) -> Result<()> {
    let (kind, n) = match index {
        AnyIndex::List(i) => (KIND_LIST, i.lists().len()),
        AnyIndex::Ch(i) => (KIND_CH, i.list().lists().len()),
        AnyIndex::Reduced(i) => (KIND_REDUCED, i.lists().len()),
        AnyIndex::Tree(t) => match t.layout() {
            TreeLayout::Quadtree(_) => (KIND_QUADTREE, t.dataset().len()),
            TreeLayout::Rtree(_) => (KIND_RTREE, t.dataset().len()),
        },
        AnyIndex::Oracle(ds) => (KIND_ORACLE, ds.len()),
    };
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    w.write_u8(kind)?;
    w.write_u64::<LE>(n as u64)?;
    w.write_u32::<LE>(dim as u32)?;
    match index {
        AnyIndex::List(i) => write_rows(&mut w, i.lists())?,
        AnyIndex::Ch(i) => {
            w.write_f64::<LE>(i.histogram().width())?;
            write_rows(&mut w, i.list().lists())?;
            write_hist(&mut w, i.histogram())?;
        }
        AnyIndex::Reduced(i) => {
            w.write_f64::<LE>(i.tau())?;
            w.write_f64::<LE>(i.sentinel())?;
            w.write_u8(i.histogram().is_some() as u8)?;
            w.write_f64::<LE>(i.histogram().map_or(0.0, CumulativeHistogram::width))?;
            write_rows(&mut w, i.lists())?;
            if let Some(h) = i.histogram() {
                write_hist(&mut w, h)?;
            }
        }
        AnyIndex::Tree(t) => {
            match t.layout() {
                TreeLayout::Quadtree(cfg) => {
                    w.write_u64::<LE>(cfg.leaf_capacity as u64)?;
                    w.write_u64::<LE>(cfg.max_depth as u64)?;
                }
                TreeLayout::Rtree(cfg) => w.write_u64::<LE>(cfg.fanout as u64)?,
            }
            write_coords(&mut w, t.dataset())?;
        }
        AnyIndex::Oracle(ds) => write_coords(&mut w, ds)?,
    }
    w.flush()?;
    Ok(())
}

fn read_len<R: Read>(r: &mut R, max: usize, what: &str) -> Result<usize> {
    let k = r.read_u32::<LE>()? as usize;
    if k > max {
        return Err(format_err(format!("{what} length {k} exceeds {max}")));
    }
    Ok(k)
}

fn read_rows<R: Read>(r: &mut R, n: usize) -> Result<NeighborLists> {
    let mut rows = Vec::with_capacity(n);
    for p in 0..n {
        let k = read_len(r, n.saturating_sub(1), "row")?;
        let mut row = OwnedRow {
            ids: Vec::with_capacity(k),
            dists: Vec::with_capacity(k),
        };
        for _ in 0..k {
            let id = r.read_u32::<LE>()?;
            let d = r.read_f64::<LE>()?;
            if id as usize >= n || id as usize == p {
                return Err(format_err(format!("row {p} holds invalid neighbor {id}")));
            }
            if !(0.0..f64::INFINITY).contains(&d) || row.dists.last().is_some_and(|&prev| prev > d)
            {
                return Err(format_err(format!("row {p} distances are not sorted")));
            }
            row.ids.push(id);
            row.dists.push(d);
        }
        rows.push(row);
    }
    Ok(NeighborLists::from_rows(rows))
}

fn read_hist<R: Read>(r: &mut R, lists: &NeighborLists, w: f64) -> Result<CumulativeHistogram> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(format_err(format!("bad bin width {w}")));
    }
    let mut rows = Vec::with_capacity(lists.len());
    for p in 0..lists.len() {
        let k = read_len(r, u32::MAX as usize, "histogram")?;
        let mut counts = Vec::with_capacity(k.min(1 << 20));
        for _ in 0..k {
            counts.push(r.read_u32::<LE>()?);
        }
        let len = lists.row(p).len() as u32;
        if counts.last() != Some(&len) || counts.windows(2).any(|c| c[0] > c[1]) {
            return Err(format_err(format!("histogram of row {p} is inconsistent")));
        }
        rows.push(counts);
    }
    Ok(CumulativeHistogram::from_rows(w, rows))
}

fn read_dataset<R: Read>(r: &mut R, n: usize, dim: usize, source: &str) -> Result<Arc<Dataset>> {
    let total = n
        .checked_mul(dim)
        .ok_or_else(|| format_err("coordinate count overflows"))?;
    let mut coords = Vec::with_capacity(total.min(1 << 24));
    for _ in 0..total {
        coords.push(r.read_f64::<LE>()?);
    }
    Ok(Arc::new(Dataset::from_flat(dim, coords, source)?))
}

fn read_usize<R: Read>(r: &mut R) -> Result<usize> {
    usize::try_from(r.read_u64::<LE>()?).map_err(|_| format_err("value out of range"))
}

pub fn read_index<R: Read>(mut r: R, source: &str) -> Result<IndexFile> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(format_err("bad magic"));
    }
    let version = r.read_u32::<LE>()?;
    if version != VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let kind = r.read_u8()?;
    let n = read_usize(&mut r)?;
    if n > u32::MAX as usize {
        return Err(format_err("object count out of range"));
    }
    let dim = r.read_u32::<LE>()? as usize;
    let index = match kind {
        KIND_LIST => AnyIndex::List(ListIndex::from_lists(read_rows(&mut r, n)?)),
        KIND_CH => {
            let w = r.read_f64::<LE>()?;
            let lists = read_rows(&mut r, n)?;
            let hist = read_hist(&mut r, &lists, w)?;
            AnyIndex::Ch(ChIndex::from_parts(ListIndex::from_lists(lists), hist))
        }
        KIND_REDUCED => {
            let tau = r.read_f64::<LE>()?;
            let sentinel = r.read_f64::<LE>()?;
            let has_w = r.read_u8()? != 0;
            let w = r.read_f64::<LE>()?;
            if tau.is_nan() || tau <= 0.0 {
                return Err(format_err(format!("bad neighbor threshold {tau}")));
            }
            let lists = read_rows(&mut r, n)?;
            let hist = if has_w {
                Some(read_hist(&mut r, &lists, w)?)
            } else {
                None
            };
            AnyIndex::Reduced(ReducedNeighborList::from_parts(tau, sentinel, lists, hist))
        }
        KIND_QUADTREE => {
            let cfg = QuadConfig {
                leaf_capacity: read_usize(&mut r)?,
                max_depth: read_usize(&mut r)?,
            };
            AnyIndex::Tree(TreeIndex::quadtree(
                read_dataset(&mut r, n, dim, source)?,
                cfg,
            )?)
        }
        KIND_RTREE => {
            let cfg = RConfig::with_fanout(read_usize(&mut r)?);
            AnyIndex::Tree(TreeIndex::rtree(
                read_dataset(&mut r, n, dim, source)?,
                cfg,
            )?)
        }
        KIND_ORACLE => AnyIndex::Oracle(read_dataset(&mut r, n, dim, source)?),
        k => return Err(format_err(format!("unknown index kind {k}"))),
    };
    Ok(IndexFile { dim, index })
}

pub fn save_index(path: impl AsRef<Path>, index: &AnyIndex, dim: usize) -> Result<()> {
    write_index(BufWriter::new(File::create(path)?), index, dim)
}

pub fn load_index(path: impl AsRef<Path>) -> Result<IndexFile> {
    let path = path.as_ref();
    read_index(
        BufReader::new(File::open(path)?),
        &path.display().to_string(),
    )
}
