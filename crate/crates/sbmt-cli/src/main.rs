mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Boundary-conforming triangulation of bitmaps on an equilateral grid.
#[derive(Parser, Debug)]
#[command(name = "sbmt", version, about, propagate_version = true)]
pub struct Cli {
    /// `key = value` file with defaults for any of: a, b, c, e, threads, eps, seed,
    /// invert, alpha, dt, sigma.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for the parallel stages; 1 runs sequentially. Default: all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Geometric tolerance; overrides the SBMT_EPS environment variable.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct InputArgs {
    /// Bitmap to mesh (binary PGM or ASCII PBM).
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub input: Option<PathBuf>,
    /// Built-in fixture instead of a file: star, droplet, y or star_hole, with an
    /// optional size as in `star:200`.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Treat light pixels as foreground.
    #[arg(long)]
    pub invert: bool,
}

/// A grid edge length given as a number or as `sqrt0.45` / `sqrt0.7`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeLength(pub f64);

impl std::str::FromStr for EdgeLength {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        sbmt::scaffold::parse_edge_length(s).map(EdgeLength).ok_or_else(|| format!("not an edge length: {s}"))
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct ThresholdArgs {
    /// Snapping radius.
    #[arg(long)]
    pub a: Option<f64>,
    /// Edge elimination distance.
    #[arg(long)]
    pub b: Option<f64>,
    /// Repulsion distance.
    #[arg(long)]
    pub c: Option<f64>,
    /// Grid edge length in pixels, or a preset: `sqrt0.45` (default), `sqrt0.7`.
    #[arg(long, visible_alias = "edge-length")]
    pub e: Option<EdgeLength>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Trace the bitmap's boundary into polygonal chains.
    Trace {
        #[command(flatten)]
        input: InputArgs,
        /// Chain file: a `closed` or `open` line per chain, then one `x y` line per vertex.
        #[arg(long)]
        out: PathBuf,
        /// Skip the protocol repair and write the raw staircase contours.
        #[arg(long)]
        raw: bool,
        /// Edge length the protocol is enforced for.
        #[arg(long)]
        e: Option<EdgeLength>,
    },
    /// Mesh a bitmap and write the mesh as OFF (or OBJ by extension).
    Mesh {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Output mesh; `.obj` writes OBJ, anything else OFF.
        #[arg(long)]
        out: PathBuf,
        /// Keep only the faces inside the traced boundary.
        #[arg(long)]
        domain: bool,
        /// Write the intersection class of every output face as CSV.
        #[arg(long, value_name = "CSV")]
        classes: Option<PathBuf>,
        /// Process faces in the order given by this shuffle seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Re-run with K shuffled schedules and fail unless all outputs agree.
        #[arg(long, value_name = "K")]
        check_determinism: Option<usize>,
    },
    /// Quality statistics of a mesh.
    Quality {
        /// Mesh file, OFF or OBJ.
        mesh: PathBuf,
        /// Also write the report as a one-row CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Histogram of per-face minimum angles.
    Hist {
        /// Mesh file, OFF or OBJ.
        mesh: PathBuf,
        /// Bin counts as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Bar chart as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Render a mesh as SVG.
    Render {
        /// Mesh file, OFF or OBJ.
        mesh: PathBuf,
        #[arg(long)]
        svg: PathBuf,
        /// none, class or angle.
        #[arg(long, default_value = "none")]
        color_by: sbmt::svg::ColorBy,
        /// Face classes written by `mesh --classes`, for `--color-by class`.
        #[arg(long, value_name = "CSV")]
        classes: Option<PathBuf>,
        /// Image width in pixels.
        #[arg(long, default_value_t = 800.0)]
        width: f64,
    },
    /// Run the five rule ablations (E1 all rules .. E5 no rules).
    Ablate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// One row of quality statistics per ablation.
        #[arg(long)]
        csv: PathBuf,
    },
    /// Mesh once per threshold triplet.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        /// `a,b,c`; repeat for several runs.
        #[arg(long = "triplet", required = true, value_name = "A,B,C")]
        triplets: Vec<String>,
        /// Grid edge length or preset, shared by all runs.
        #[arg(long)]
        e: Option<EdgeLength>,
        /// One row of quality statistics per triplet.
        #[arg(long)]
        csv: PathBuf,
    },
    /// Transient heat diffusion from a Gaussian pulse with zero boundary values.
    Heat {
        /// Mesh file, OFF or OBJ.
        mesh: PathBuf,
        /// Diffusivity.
        #[arg(long)]
        alpha: Option<f64>,
        /// Implicit Euler time step.
        #[arg(long)]
        dt: Option<f64>,
        /// End time.
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        /// Times at which to write the field, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5")]
        snapshots: Vec<f64>,
        /// Pulse width in pixels.
        #[arg(long)]
        sigma: Option<f64>,
        /// Pulse peak value.
        #[arg(long, default_value_t = 100.0)]
        amplitude: f64,
        /// Output prefix for `<prefix>_t<time>.csv`, `.svg` and `<prefix>_trace.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Self-test of the template table.
    VerifyTable {
        /// Regenerate the catalog and write it here.
        #[arg(long, hide = true, value_name = "PATH")]
        write_catalog: Option<PathBuf>,
    },
    /// Convert a mesh between OFF and OBJ (by extension).
    Export {
        /// Mesh file, OFF or OBJ.
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in fixture bitmap as PGM.
    #[command(hide = true)]
    Fixture {
        name: String,
        #[arg(long, default_value_t = 200)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
