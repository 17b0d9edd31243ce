use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use dpc_core::clustering::{flag_outliers, labels_from_json, ClusteringJson};
use dpc_core::dataset::{generate, load_csv, Dataset, GeneratorSpec};
use dpc_core::evaluation::{bench, format_table, pair_metrics, BenchOptions};
use dpc_core::persist::{load_index, save_index};
use dpc_core::profile::ProfileJson;
use dpc_core::{assign, select_centers, AnyIndex, CenterSelection, DensityIndex, DensityProfile};
use serde::Deserialize;

use crate::{backend_spec, server, Usage};

#[derive(Debug, Parser)]
#[command(
    name = "dpc",
    version,
    about = "Density peak clustering with spatial indexes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic dataset as CSV.
    Gen(GenArgs),
    /// Build an index over a CSV dataset and save it.
    Build(BuildArgs),
    /// Compute rho, delta and mu for one cutoff.
    Profile(ProfileArgs),
    /// Select centres and assign every object to a cluster.
    Cluster(ClusterArgs),
    /// Pairwise precision, recall and F1 against a reference labelling.
    Eval(EvalArgs),
    /// Time several backends on one dataset and cutoff.
    Bench(BenchArgs),
    /// Serve the HTTP API for one dataset.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("kind").required(true).args(["blobs", "uniform"])))]
pub struct GenArgs {
    /// Number of Gaussian blobs.
    #[arg(long)]
    pub blobs: Option<usize>,
    /// Uniform points instead of blobs.
    #[arg(long)]
    pub uniform: bool,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "dim", default_value_t = 2)]
    pub dim: usize,
    /// Blob standard deviation.
    #[arg(long)]
    pub spread: Option<f64>,
    /// Side of the cube the data lives in.
    #[arg(long)]
    pub extent: Option<f64>,
    /// CSV output (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the generator's labels as JSON.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexOptions {
    /// Histogram bin width (ch, rn-ch).
    #[arg(long)]
    pub w: Option<f64>,
    /// Neighbor threshold; turns list and ch into their truncated variants.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Quadtree leaf capacity.
    #[arg(long)]
    pub capacity: Option<usize>,
    /// R-tree fanout.
    #[arg(long)]
    pub fanout: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// One of oracle, list, ch, rn-list, rn-ch, quadtree, rtree.
    #[arg(long)]
    pub index: String,
    #[command(flatten)]
    pub opts: IndexOptions,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Index file written by `build`.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub dc: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("selection").required(true).args(["centers", "topk", "rho_min"])))]
pub struct ClusterArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// Comma-separated centre ids.
    #[arg(long, value_delimiter = ',')]
    pub centers: Option<Vec<usize>>,
    /// The k objects with the largest rho * delta.
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long, requires = "delta_min")]
    pub rho_min: Option<u32>,
    #[arg(long, requires = "rho_min")]
    pub delta_min: Option<f64>,
    /// Flag outliers with rho at most this value...
    #[arg(long, requires = "outlier_delta_min")]
    pub outlier_rho_max: Option<u32>,
    /// ...and delta at least this value.
    #[arg(long, requires = "outlier_rho_max")]
    pub outlier_delta_min: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub clustering: PathBuf,
    /// JSON file with a `labels` array (-1 for unlabelled).
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub dc: f64,
    /// Comma-separated index kinds. `ch` defaults to `w = dc / 4`.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "oracle,list,ch,quadtree,rtree"
    )]
    pub indexes: Vec<String>,
    #[command(flatten)]
    pub opts: IndexOptions,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    /// Skip list-based backends whose full lists would exceed this many bytes.
    #[arg(long)]
    pub memory_budget: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Profile(a) => profile(a),
        Command::Cluster(a) => cluster(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Serve(a) => serve(a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Usage(format!("{}: {e}", path.display())).into())
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    load_csv(path).with_context(|| format!("loading {}", path.display()))
}

fn gen(a: GenArgs) -> Result<()> {
    let mut spec = match a.blobs {
        Some(k) => GeneratorSpec::blobs(k, a.n, a.seed),
        None => GeneratorSpec::uniform(a.n, a.seed),
    }
    .with_dim(a.dim);
    if let Some(s) = a.spread {
        spec = spec.with_spread(s);
    }
    if let Some(e) = a.extent {
        spec = spec.with_extent(e);
    }
    let g = generate(&spec)?;
    let mut out = output(a.out.as_deref())?;
    g.dataset.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = a.labels {
        let labels: Vec<i64> = g.labels.iter().map(|&l| l as i64).collect();
        write_json(Some(&path), &serde_json::json!({ "labels": labels }))?;
    }
    Ok(())
}

fn build(a: BuildArgs) -> Result<()> {
    let o = &a.opts;
    let spec = backend_spec(&a.index, o.w, o.tau, o.capacity, o.fanout, None)?;
    let ds = Arc::new(load_dataset(&a.input)?);
    let t = Instant::now();
    let index = spec.build(ds.clone())?;
    let build_secs = t.elapsed().as_secs_f64();
    save_index(&a.out, &index, ds.dim()).with_context(|| format!("writing {}", a.out.display()))?;
    let mut stats = serde_json::json!({
        "index": index.name(),
        "params": spec,
        "n": ds.len(),
        "d": ds.dim(),
        "index_bytes": index.index_bytes(),
        "build_secs": build_secs,
    });
    if let AnyIndex::Tree(t) = &index {
        stats["tree"] = serde_json::to_value(t.stats())?;
    }
    write_json(None, &stats)
}

fn profile(a: ProfileArgs) -> Result<()> {
    if !(a.dc > 0.0 && a.dc.is_finite()) {
        return Err(Usage(format!("--dc must be positive, got {}", a.dc)).into());
    }
    let file = load_index(&a.index).with_context(|| format!("loading {}", a.index.display()))?;
    let p = file.index.profile(a.dc)?;
    if p.degraded {
        eprintln!(
            "warning: dc exceeds the index's neighbor threshold; rho values are lower bounds"
        );
    }
    write_json(a.out.as_deref(), &p.to_json())
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let json: ProfileJson = read_json(&a.profile)?;
    let p = DensityProfile::try_from(json)?;
    let sel = match (a.centers, a.topk, a.rho_min, a.delta_min) {
        (Some(c), None, None, None) => CenterSelection::Explicit(c),
        (None, Some(k), None, None) => CenterSelection::TopK(k),
        (None, None, Some(rho_min), Some(delta_min)) => {
            CenterSelection::Thresholds { rho_min, delta_min }
        }
        _ => {
            return Err(Usage(
                "choose exactly one of --centers, --topk or --rho-min/--delta-min".into(),
            )
            .into())
        }
    };
    let centers = select_centers(&p, &sel)?;
    let mut c = assign(&p, &centers)?;
    if let (Some(r), Some(d)) = (a.outlier_rho_max, a.outlier_delta_min) {
        c = c.with_outliers(flag_outliers(&p, r, d));
    }
    if !c.unassigned().is_empty() {
        eprintln!("warning: {} objects left unassigned", c.unassigned().len());
    }
    write_json(a.out.as_deref(), &c.to_json())
}

#[derive(Deserialize)]
struct LabelsOnly {
    labels: Vec<i64>,
}

fn eval(a: EvalArgs) -> Result<()> {
    let c: ClusteringJson = read_json(&a.clustering)?;
    let g: LabelsOnly = read_json(&a.reference)?;
    let m = pair_metrics(&labels_from_json(&c.labels)?, &labels_from_json(&g.labels)?)?;
    if a.json {
        return write_json(None, &m);
    }
    println!("precision {:.6}", m.precision);
    println!("recall    {:.6}", m.recall);
    println!("f1        {:.6}", m.f1);
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    if !(a.dc > 0.0 && a.dc.is_finite()) {
        return Err(Usage(format!("--dc must be positive, got {}", a.dc)).into());
    }
    let o = &a.opts;
    let specs = a
        .indexes
        .iter()
        .map(|k| backend_spec(k.trim(), o.w, o.tau, o.capacity, o.fanout, Some(a.dc)))
        .collect::<dpc_core::Result<Vec<_>>>()?;
    let ds = Arc::new(load_dataset(&a.input)?);
    let opts = BenchOptions {
        runs: a.runs,
        memory_budget: a.memory_budget,
    };
    let reports: Vec<_> = specs.iter().map(|s| bench(&ds, s, a.dc, opts)).collect();
    if a.json {
        write_json(None, &reports)
    } else {
        print!("{}", format_table(&reports));
        Ok(())
    }
}

fn serve(a: ServeArgs) -> Result<()> {
    let ds = Arc::new(load_dataset(&a.input)?);
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| Usage(format!("bad address: {e}")))?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(server::serve(ds, addr))
}
