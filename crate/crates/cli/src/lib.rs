//! The `dpc` command-line tool and its HTTP service.

use std::ffi::OsString;
use std::fmt;
use std::io::ErrorKind;

use clap::Parser;
use dpc_core::{BackendSpec, DpcError};

pub mod commands;
pub mod server;

pub use commands::Cli;

/// Index kinds accepted by `build`, `bench` and the HTTP API.
pub const INDEX_KINDS: &[&str] = &[
    "oracle", "list", "ch", "rn-list", "rn-ch", "quadtree", "rtree",
];

/// An error caused by how the tool was invoked.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Process exit status for an error: 2 for usage errors (including missing
/// input files), 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<DpcError>() {
            if e.is_usage() || matches!(e, DpcError::Io(io) if io.kind() == ErrorKind::NotFound) {
                return 2;
            }
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == ErrorKind::NotFound {
                return 2;
            }
        }
    }
    1
}

/// Resolves an index kind and its options. `rn-list` and `rn-ch` need
/// `tau`; a `ch` kind without `w` falls back to `dc / 4` when a cutoff is
/// known.
pub fn backend_spec(
    kind: &str,
    w: Option<f64>,
    tau: Option<f64>,
    capacity: Option<usize>,
    fanout: Option<usize>,
    dc: Option<f64>,
) -> dpc_core::Result<BackendSpec> {
    let (base, tau) = match kind {
        "rn-list" | "rn-ch" => {
            let tau = tau.ok_or_else(|| {
                DpcError::InvalidParameter(format!("{kind} needs a neighbor threshold"))
            })?;
            (&kind[3..], Some(tau))
        }
        k => (k, tau),
    };
    let w = match (base, w, dc) {
        ("ch", None, Some(dc)) => Some(dc / 4.0),
        _ => w,
    };
    BackendSpec::from_parts(base, w, tau, capacity, fanout)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
