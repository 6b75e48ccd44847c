//! `dovalid` — bandwidth selection from the command line.
//!
//! Three commands: `run` reproduces a replicated selection experiment from a
//! TOML config, `constants` tabulates the asymptotic variance constants of
//! the selector families, and `select` picks a bandwidth for a user data
//! file.  Outputs land in `--out`, the `DOVALID_OUT` directory, or the
//! working directory, in that order of preference; runs with the same config
//! produce byte-identical files regardless of worker count.

mod config;

use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dovalid::asymptotics::{
    epanechnikov_references, quartic_references, variance_constant, ConstantFamily,
};
use dovalid::density::{kde_evaluate, Sample};
use dovalid::kernels::Kernel;
use dovalid::selectors::{Indirect, Selector};
use dovalid::simulation::{
    run_experiment, six_significant, write_raw_csv, write_summary_csv, CellResult,
    ExperimentConfig,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Environment variable naming the default output directory.
const OUTPUT_DIR_VAR: &str = "DOVALID_OUT";

/// Grid size for `select --emit-density`.
const DENSITY_GRID_POINTS: usize = 512;

#[derive(Parser)]
#[command(
    name = "dovalid",
    version,
    about = "Kernel density bandwidth selection: experiments, constants, one-shot selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated selection experiment described by a config file.
    Run {
        /// TOML experiment description.
        #[arg(long)]
        config: PathBuf,
        /// Cap on worker threads (default: one per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (default: $DOVALID_OUT, then `.`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate asymptotic variance constants of the selector families.
    Constants {
        /// Additionally sweep indirect orders 1..=R for the curve data.
        #[arg(long)]
        max_order: Option<u32>,
        /// Output directory (default: $DOVALID_OUT, then `.`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select a bandwidth for a data file (one number per line, `#` comments).
    Select {
        /// Input data file.
        #[arg(long)]
        data: PathBuf,
        /// Selector name: cv, icv<r>, icvg, oscv-left, oscv-right, do,
        /// ido<r>, idog, plugin, median13.
        #[arg(long)]
        selector: String,
        /// Target kernel: epanechnikov, quartic, gaussian, poly<r>.
        #[arg(long, default_value = "epanechnikov")]
        target: String,
        /// Also write the density estimate on a 512-point grid.
        #[arg(long)]
        emit_density: bool,
        /// Output directory for --emit-density (default: $DOVALID_OUT, then `.`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            workers,
            out,
        } => cmd_run(&config, workers, &resolve_out(out)),
        Command::Constants { max_order, out } => cmd_constants(max_order, &resolve_out(out)),
        Command::Select {
            data,
            selector,
            target,
            emit_density,
            out,
        } => cmd_select(&data, &selector, &target, emit_density, &resolve_out(out)),
    }
}

fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Provenance record written next to every generated artifact set.
#[derive(Serialize)]
struct Manifest {
    tool_version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_order: Option<u32>,
}

impl Manifest {
    fn new(command: &'static str) -> Manifest {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed: None,
            config_sha256: None,
            input_sha256: None,
            max_order: None,
        }
    }
}

fn write_manifest(out: &Path, manifest: &Manifest) -> Result<()> {
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn cmd_run(config_path: &Path, workers: Option<usize>, out: &Path) -> Result<()> {
    let bytes = fs::read(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let text = std::str::from_utf8(&bytes).context("config file is not UTF-8")?;
    let file = config::ConfigFile::parse(text)?;
    let experiment = file.to_experiment()?;
    // Everything is validated; only now may computation and writes start.
    let cells = run_with_workers(&experiment, workers)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for cell in &cells {
        write_cell(cell, out)?;
    }
    let mut manifest = Manifest::new("run");
    manifest.seed = Some(file.seed);
    manifest.config_sha256 = Some(sha256_hex(&bytes));
    write_manifest(out, &manifest)
}

fn write_cell(cell: &CellResult, out: &Path) -> Result<()> {
    let summary_path = out.join(format!("summary_d{}_n{}.csv", cell.design, cell.n));
    let mut w = BufWriter::new(File::create(&summary_path)?);
    write_summary_csv(cell, &mut w)?;
    w.flush()?;
    println!("wrote {}", summary_path.display());

    let raw_path = out.join(format!("raw_d{}_n{}.csv", cell.design, cell.n));
    let mut w = BufWriter::new(File::create(&raw_path)?);
    write_raw_csv(cell, &mut w)?;
    w.flush()?;
    println!("wrote {}", raw_path.display());
    Ok(())
}

#[cfg(feature = "parallel")]
fn run_with_workers(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<CellResult>> {
    match workers {
        None => Ok(run_experiment(cfg)?),
        Some(0) => bail!("--workers must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building the worker pool")?;
            Ok(pool.install(|| run_experiment(cfg))?)
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn run_with_workers(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<CellResult>> {
    match workers {
        Some(n) if n != 1 => bail!("this build is sequential; --workers {n} is unavailable"),
        _ => Ok(run_experiment(cfg)?),
    }
}

fn cmd_constants(max_order: Option<u32>, out: &Path) -> Result<()> {
    if max_order == Some(0) {
        bail!("--max-order must be at least 1");
    }
    let epan = Kernel::epanechnikov();
    let quartic = Kernel::quartic();
    // Reference block first (published values attached), then the optional
    // order sweep, skipping orders the reference block already covers.
    let mut rows: Vec<(&str, ConstantFamily, Option<f64>)> = Vec::new();
    for (family, reference) in epanechnikov_references() {
        rows.push(("epanechnikov", family, Some(reference)));
    }
    for (family, reference) in quartic_references() {
        rows.push(("quartic", family, Some(reference)));
    }
    if let Some(top) = max_order {
        for order in (1..=top).filter(|r| *r != 2 && *r != 8) {
            rows.push((
                "epanechnikov",
                ConstantFamily::Icv(Indirect::Polynomial(order)),
                None,
            ));
        }
        for order in (1..=top).filter(|r| *r != 2 && *r != 8) {
            rows.push((
                "epanechnikov",
                ConstantFamily::Ido(Indirect::Polynomial(order)),
                None,
            ));
        }
    }

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("constants.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "target,family,indirect,raw_integral,value,reference")?;
    for (target_name, family, reference) in &rows {
        let target = if *target_name == "quartic" {
            &quartic
        } else {
            &epan
        };
        let constant = variance_constant(family, target)?;
        let family_name = match family {
            ConstantFamily::Cv => "cv",
            ConstantFamily::Icv(_) => "icv",
            ConstantFamily::Do => "do",
            ConstantFamily::Ido(_) => "ido",
            ConstantFamily::Plugin => "plugin",
        };
        writeln!(
            w,
            "{target_name},{family_name},{},{},{},{}",
            family.indirect_label(),
            six_significant(constant.raw_integral),
            six_significant(constant.value),
            reference.map(|r| format!("{r:.2}")).unwrap_or_default()
        )?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    let mut manifest = Manifest::new("constants");
    manifest.max_order = max_order;
    write_manifest(out, &manifest)
}

fn cmd_select(
    data: &Path,
    selector_name: &str,
    target_name: &str,
    emit_density: bool,
    out: &Path,
) -> Result<()> {
    let kind = config::parse_selector(selector_name)?;
    let target = config::parse_target(target_name)?;
    let sample =
        Sample::from_path(data).with_context(|| format!("reading data {}", data.display()))?;
    let selector = Selector::new(kind, &target)?;
    let result = selector.run(&sample)?;

    println!("selector: {}", result.spec.kind.label());
    println!("target: {target_name}");
    println!("n: {}", sample.n());
    println!("h: {}", result.h);
    println!("raw_h: {}", result.raw_h);
    println!("boundary: {}", if result.boundary_hit { "yes" } else { "no" });
    for (label, h) in &result.constituents {
        println!("constituent {label}: {h}");
    }
    for warning in &result.warnings {
        println!("warning: {warning}");
    }

    if emit_density {
        let lo = sample.min() - 3.0 * result.h;
        let hi = sample.max() + 3.0 * result.h;
        let step = (hi - lo) / (DENSITY_GRID_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..DENSITY_GRID_POINTS)
            .map(|i| lo + step * i as f64)
            .collect();
        let est = kde_evaluate(&sample, result.h, &target, &grid)?;
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let path = out.join("density.csv");
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "x,density")?;
        for (x, v) in grid.iter().zip(est.values()) {
            writeln!(w, "{x},{v}")?;
        }
        w.flush()?;
        println!("wrote {}", path.display());
        let mut manifest = Manifest::new("select");
        manifest.input_sha256 = Some(sha256_hex(&fs::read(data)?));
        write_manifest(out, &manifest)?;
    }
    Ok(())
}
