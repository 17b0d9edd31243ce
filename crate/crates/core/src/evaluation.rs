//! Pair-counting quality metrics and the benchmark harness.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::backend::BackendSpec;
use crate::dataset::Dataset;
use crate::error::{DpcError, Result};
use crate::index::DensityIndex;

/// Pair counts over unordered object pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairConfusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairMetrics {
    pub confusion: PairConfusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn pairs(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

/// Counts pairs from a label contingency table. `None` labels are
/// singletons and contribute no pairs.
pub fn pair_confusion(c: &[Option<usize>], g: &[Option<usize>]) -> Result<PairConfusion> {
    if c.len() != g.len() {
        return Err(DpcError::UniverseMismatch {
            left: c.len(),
            right: g.len(),
        });
    }
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (a, b) in c.iter().zip(g) {
        if let Some(a) = a {
            *rows.entry(*a).or_default() += 1;
        }
        if let Some(b) = b {
            *cols.entry(*b).or_default() += 1;
        }
        if let (Some(a), Some(b)) = (a, b) {
            *cells.entry((*a, *b)).or_default() += 1;
        }
    }
    let tp: u64 = cells.values().map(|&k| pairs(k)).sum();
    let same_c: u64 = rows.values().map(|&k| pairs(k)).sum();
    let same_g: u64 = cols.values().map(|&k| pairs(k)).sum();
    Ok(PairConfusion {
        tp,
        fp: same_c - tp,
        fn_: same_g - tp,
    })
}

/// Precision, recall and F1 of clustering `c` against reference `g`.
/// A zero denominator gives 0, except that two clusterings without any
/// same-cluster pair score 1 on everything.
pub fn pair_metrics(c: &[Option<usize>], g: &[Option<usize>]) -> Result<PairMetrics> {
    let confusion = pair_confusion(c, g)?;
    Ok(metrics_from(confusion))
}

pub fn metrics_from(confusion: PairConfusion) -> PairMetrics {
    let PairConfusion { tp, fp, fn_ } = confusion;
    if tp + fp == 0 && tp + fn_ == 0 {
        return PairMetrics {
            confusion,
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    PairMetrics {
        confusion,
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    /// Timed repetitions after the discarded warm-up run.
    pub runs: usize,
    /// Backends whose full neighbor lists would exceed this are reported as
    /// failed instead of built.
    pub memory_budget: Option<usize>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            runs: 3,
            memory_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub index: String,
    pub params: BackendSpec,
    pub n: usize,
    pub dc: f64,
    pub build_secs: f64,
    pub rho_secs: f64,
    pub delta_secs: f64,
    pub index_bytes: usize,
    pub unresolved: usize,
    pub profile_hash: Option<String>,
    pub error: Option<String>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Times build, `rho` and `delta` for one backend. Failures are recorded in
/// the report rather than returned.
pub fn bench(ds: &Arc<Dataset>, spec: &BackendSpec, dc: f64, opts: BenchOptions) -> BenchReport {
    let mut report = BenchReport {
        index: spec.name().to_string(),
        params: *spec,
        n: ds.len(),
        dc,
        build_secs: 0.0,
        rho_secs: 0.0,
        delta_secs: 0.0,
        index_bytes: 0,
        unresolved: 0,
        profile_hash: None,
        error: None,
    };
    if let (Some(budget), Some(need)) = (opts.memory_budget, spec.list_bytes(ds.len())) {
        if need > budget {
            report.error = Some(format!(
                "needs ~{need} bytes of neighbor lists, budget is {budget}"
            ));
            return report;
        }
    }
    if let Err(e) = bench_into(ds, spec, dc, opts.runs.max(1), &mut report) {
        report.error = Some(e.to_string());
    }
    report
}

fn bench_into(
    ds: &Arc<Dataset>,
    spec: &BackendSpec,
    dc: f64,
    runs: usize,
    report: &mut BenchReport,
) -> Result<()> {
    let (mut build, mut rho_t, mut delta_t) = (Vec::new(), Vec::new(), Vec::new());
    let mut last = None;
    for run in 0..=runs {
        let t = Instant::now();
        let idx = spec.build(ds.clone())?;
        let b = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let rho = idx.rho(dc)?;
        let r = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let out = idx.delta(&rho)?;
        let d = t.elapsed().as_secs_f64();
        if run > 0 {
            build.push(b);
            rho_t.push(r);
            delta_t.push(d);
        }
        report.index_bytes = idx.index_bytes();
        last = Some((rho, out, idx.degraded(dc)));
    }
    let (rho, out, degraded) = last.expect("at least one run");
    let profile = crate::profile::DensityProfile {
        dc,
        rho,
        delta: out.delta,
        mu: out.mu,
        resolved: out.resolved,
        degraded,
    };
    report.build_secs = median(build);
    report.rho_secs = median(rho_t);
    report.delta_secs = median(delta_t);
    report.unresolved = profile.unresolved_count();
    report.profile_hash = Some(profile.content_hash());
    Ok(())
}

/// Aligned text table, one row per report.
pub fn format_table(reports: &[BenchReport]) -> String {
    let header = [
        "index",
        "n",
        "dc",
        "build_s",
        "rho_s",
        "delta_s",
        "bytes",
        "unresolved",
        "hash",
    ];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let hash = match (&r.profile_hash, &r.error) {
                (Some(h), _) => h[..16].to_string(),
                (None, Some(e)) => format!("FAILED: {e}"),
                (None, None) => "-".to_string(),
            };
            vec![
                r.index.clone(),
                r.n.to_string(),
                r.dc.to_string(),
                format!("{:.6}", r.build_secs),
                format!("{:.6}", r.rho_secs),
                format!("{:.6}", r.delta_secs),
                r.index_bytes.to_string(),
                r.unresolved.to_string(),
                hash,
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &mut header.iter().copied());
    for row in &rows {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    out
}
