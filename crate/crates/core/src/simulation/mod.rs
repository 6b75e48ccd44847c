//! Monte Carlo study driver: integrated squared error, per-sample oracle
//! bandwidths, replicated experiments over the benchmark designs, summary
//! measures, and CSV emission.
//!
//! Replications are mutually independent: each draws its random stream from
//! a hash of `(seed, design, n, rep)`, so results are identical regardless
//! of execution order or worker count.  With the `parallel` feature enabled
//! replications of a cell run on the rayon pool installed by the caller;
//! otherwise they run sequentially.  Either way records are collected in
//! replication order and aggregated sequentially, keeping every emitted
//! byte reproducible.

pub mod designs;

pub use designs::{design_density, design_density_d2, design_sample, Component, Design};

use crate::density::{kde_evaluate, quantile, trapezoid, Sample};
use crate::error::Error;
use crate::kernels::Kernel;
use crate::minimize::{minimize_score, Minimum};
use crate::selectors::{search_interval, Selector, SelectorKind};
use crate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::io::Write;

/// Default number of equispaced points for the error grid.
pub const DEFAULT_GRID_RESOLUTION: usize = 1024;

/// Scale applied to the reported mean/sd of the error and to the bandwidth
/// bias, matching the units of the published comparison tables.  The two
/// relative-deviation quantiles are dimensionless and stay unscaled.
pub const REPORT_SCALE: f64 = 100.0;

/// Largest tolerated share of failed replications per selector.
pub const FAILURE_RATE_LIMIT: f64 = 0.02;

/// Integrated squared error of the estimate `f̂_{h,k}` for a sample from
/// design `d`, on an equispaced grid of `grid_resolution` points covering
/// the design support and the sample range with a `3h` margin.
pub fn ise(s: &Sample, h: f64, k: &Kernel, d: &Design, grid_resolution: usize) -> Result<f64> {
    if grid_resolution < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid_resolution must be at least 2, got {grid_resolution}"
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidBandwidth(h));
    }
    let (dlo, dhi) = d.support_hint();
    let lo = dlo.min(s.min()) - 3.0 * h;
    let hi = dhi.max(s.max()) + 3.0 * h;
    let step = (hi - lo) / (grid_resolution - 1) as f64;
    let grid: Vec<f64> = (0..grid_resolution).map(|i| lo + step * i as f64).collect();
    let est = kde_evaluate(s, h, k, &grid)?;
    let sq: Vec<f64> = grid
        .iter()
        .zip(est.values())
        .map(|(&x, &v)| {
            let diff = v - d.density(x);
            diff * diff
        })
        .collect();
    Ok(trapezoid(&grid, &sq))
}

/// Minimises the true error over the same bandwidth interval the selectors
/// search, yielding the per-sample oracle bandwidth.
pub fn find_h_ise(s: &Sample, k: &Kernel, d: &Design, grid_resolution: usize) -> Result<Minimum> {
    let interval = search_interval(s)?;
    minimize_score(
        |h| ise(s, h, k, d, grid_resolution).unwrap_or(f64::NAN),
        interval,
    )
}

/// Deterministic random stream for one replication.  Streams for distinct
/// `(seed, design, n, rep)` tuples are independent, and a given tuple
/// always reproduces the same draws.
pub fn replication_rng(seed: u64, design: u8, n: usize, rep: usize) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"dovalid.replication.v1");
    hasher.update(seed.to_le_bytes());
    hasher.update([design]);
    hasher.update((n as u64).to_le_bytes());
    hasher.update((rep as u64).to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Full experiment specification.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Design identifiers (1-based).
    pub designs: Vec<u8>,
    /// Sample sizes, each at least the selector minimum.
    pub sample_sizes: Vec<usize>,
    /// Replications per (design, n) cell.
    pub replications: usize,
    /// Selectors to compare.
    pub selectors: Vec<SelectorKind>,
    /// Target kernel shared by the selectors and the oracle.
    pub target: Kernel,
    /// Master seed; all replication streams derive from it.
    pub seed: u64,
    /// Error-grid resolution.
    pub grid_resolution: usize,
}

impl ExperimentConfig {
    /// Rejects impossible settings before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if self.designs.is_empty() {
            return Err(Error::InvalidConfig("designs must be non-empty".into()));
        }
        for &d in &self.designs {
            Design::standard(d)?;
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::InvalidConfig(
                "sample_sizes must be non-empty".into(),
            ));
        }
        for &n in &self.sample_sizes {
            if n < crate::selectors::MIN_OBSERVATIONS {
                return Err(Error::InvalidConfig(format!(
                    "sample_sizes entries must be at least {}, got {n}",
                    crate::selectors::MIN_OBSERVATIONS
                )));
            }
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        if self.selectors.is_empty() {
            return Err(Error::InvalidConfig("selectors must be non-empty".into()));
        }
        if self.grid_resolution < 16 {
            return Err(Error::InvalidConfig(format!(
                "grid_resolution must be at least 16, got {}",
                self.grid_resolution
            )));
        }
        Ok(())
    }
}

/// What one selector produced in one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorOutcome {
    /// Selected bandwidth.
    pub h: f64,
    /// Error of the estimate at that bandwidth.
    pub ise: f64,
    /// Whether the selection ended on a search-interval endpoint.
    pub boundary_hit: bool,
}

/// One replication of one (design, n) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    /// Replication index within the cell.
    pub rep: usize,
    /// Oracle bandwidth for this sample.
    pub h_ise: f64,
    /// Error at the oracle bandwidth.
    pub ise_oracle: f64,
    /// Whether the oracle search ended on an endpoint.
    pub oracle_boundary: bool,
    /// Per-selector outcomes, `None` where the selector failed.
    pub selectors: Vec<Option<SelectorOutcome>>,
}

/// Aggregated measures for one selector (or the oracle) in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorSummary {
    /// Selector label, `"h_ise"` for the oracle row.
    pub selector: String,
    /// Mean error, scaled by [`REPORT_SCALE`].
    pub m1: f64,
    /// Standard deviation of the error, scaled by [`REPORT_SCALE`].
    pub m2: f64,
    /// 90% quantile of the error deviation relative to the oracle error.
    pub m3: f64,
    /// Mean bandwidth deviation from the oracle, scaled by [`REPORT_SCALE`].
    pub m4: f64,
    /// 90% quantile of the absolute relative bandwidth deviation.
    pub m5: f64,
    /// Monte Carlo standard error of `m1`.
    pub m1_stderr: f64,
    /// Failed replications, excluded from all measures.
    pub failures: usize,
    /// Replications whose search ended on an interval endpoint.
    pub boundary_hits: usize,
}

/// Results for one (design, n) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub design: u8,
    pub n: usize,
    /// Labels of the configured selectors, in configuration order.
    pub selector_labels: Vec<String>,
    /// Oracle summary row.
    pub oracle: SelectorSummary,
    /// Selector summaries, in configuration order.
    pub selectors: Vec<SelectorSummary>,
    /// Per-replication records, in replication order.
    pub raw: Vec<RawRecord>,
}

/// Runs the configured experiment and returns one cell per (design, n)
/// pair, in configuration order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let selectors = cfg
        .selectors
        .iter()
        .map(|kind| Selector::new(kind.clone(), &cfg.target))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = cfg.selectors.iter().map(|kind| kind.label()).collect();
    let mut cells = Vec::with_capacity(cfg.designs.len() * cfg.sample_sizes.len());
    for &design_id in &cfg.designs {
        let design = Design::standard(design_id)?;
        for &n in &cfg.sample_sizes {
            let raw = run_cell(cfg, &design, n, &selectors)?;
            cells.push(summarize_cell(design_id, n, labels.clone(), raw)?);
        }
    }
    Ok(cells)
}

#[cfg(feature = "parallel")]
fn run_cell(
    cfg: &ExperimentConfig,
    design: &Design,
    n: usize,
    selectors: &[Selector],
) -> Result<Vec<RawRecord>> {
    (0..cfg.replications)
        .into_par_iter()
        .map(|rep| replicate(cfg, design, n, selectors, rep))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_cell(
    cfg: &ExperimentConfig,
    design: &Design,
    n: usize,
    selectors: &[Selector],
) -> Result<Vec<RawRecord>> {
    (0..cfg.replications)
        .map(|rep| replicate(cfg, design, n, selectors, rep))
        .collect()
}

fn replicate(
    cfg: &ExperimentConfig,
    design: &Design,
    n: usize,
    selectors: &[Selector],
    rep: usize,
) -> Result<RawRecord> {
    let mut rng = replication_rng(cfg.seed, design.id(), n, rep);
    let s = design.sample(n, &mut rng)?;
    let oracle = find_h_ise(&s, &cfg.target, design, cfg.grid_resolution)?;
    let ise_oracle = ise(&s, oracle.h, &cfg.target, design, cfg.grid_resolution)?;
    let mut outcomes = Vec::with_capacity(selectors.len());
    for sel in selectors {
        match sel.run(&s) {
            Ok(r) => {
                let err = ise(&s, r.h, &cfg.target, design, cfg.grid_resolution)?;
                outcomes.push(Some(SelectorOutcome {
                    h: r.h,
                    ise: err,
                    boundary_hit: r.boundary_hit,
                }));
            }
            Err(_) => outcomes.push(None),
        }
    }
    Ok(RawRecord {
        rep,
        h_ise: oracle.h,
        ise_oracle,
        oracle_boundary: oracle.boundary_hit,
        selectors: outcomes,
    })
}

/// Aggregates raw records into summary rows.  Fails if any selector's
/// failure share exceeds [`FAILURE_RATE_LIMIT`].
pub fn summarize_cell(
    design: u8,
    n: usize,
    selector_labels: Vec<String>,
    raw: Vec<RawRecord>,
) -> Result<CellResult> {
    let total = raw.len();
    let oracle_pairs: Vec<(f64, f64)> = raw.iter().map(|r| (r.ise_oracle, r.h_ise)).collect();
    let oracle_boundary = raw.iter().filter(|r| r.oracle_boundary).count();
    let oracle = summarize_one("h_ise".into(), &oracle_pairs, &oracle_pairs, oracle_boundary, 0);
    let mut selectors = Vec::with_capacity(selector_labels.len());
    for (idx, label) in selector_labels.iter().enumerate() {
        let mut pairs = Vec::with_capacity(total);
        let mut against = Vec::with_capacity(total);
        let mut boundary = 0;
        let mut failed = 0;
        for r in &raw {
            match r.selectors[idx] {
                Some(o) => {
                    pairs.push((o.ise, o.h));
                    against.push((r.ise_oracle, r.h_ise));
                    if o.boundary_hit {
                        boundary += 1;
                    }
                }
                None => failed += 1,
            }
        }
        if (failed as f64) > FAILURE_RATE_LIMIT * total as f64 {
            return Err(Error::FailureRateExceeded {
                selector: label.clone(),
                failed,
                total,
            });
        }
        selectors.push(summarize_one(label.clone(), &pairs, &against, boundary, failed));
    }
    Ok(CellResult {
        design,
        n,
        selector_labels,
        oracle,
        selectors,
        raw,
    })
}

/// Measures for one selector from its successful `(ise, h)` pairs and the
/// matching oracle pairs.  Passing the oracle against itself yields exact
/// zeros for the three deviation measures.
fn summarize_one(
    selector: String,
    pairs: &[(f64, f64)],
    against: &[(f64, f64)],
    boundary_hits: usize,
    failures: usize,
) -> SelectorSummary {
    debug_assert_eq!(pairs.len(), against.len());
    let count = pairs.len() as f64;
    let mean_ise = pairs.iter().map(|p| p.0).sum::<f64>() / count;
    let var_ise = pairs
        .iter()
        .map(|p| (p.0 - mean_ise) * (p.0 - mean_ise))
        .sum::<f64>()
        / (count - 1.0);
    let m1 = REPORT_SCALE * mean_ise;
    let m2 = REPORT_SCALE * var_ise.sqrt();
    let mut ise_dev: Vec<f64> = pairs
        .iter()
        .zip(against)
        .map(|(p, o)| (p.0 - o.0).abs() / o.0)
        .collect();
    ise_dev.sort_by(f64::total_cmp);
    let mut h_dev: Vec<f64> = pairs
        .iter()
        .zip(against)
        .map(|(p, o)| (p.1 - o.1).abs() / o.1)
        .collect();
    h_dev.sort_by(f64::total_cmp);
    let bias = pairs
        .iter()
        .zip(against)
        .map(|(p, o)| p.1 - o.1)
        .sum::<f64>()
        / count;
    SelectorSummary {
        selector,
        m1,
        m2,
        m3: quantile(&ise_dev, 0.9),
        m4: REPORT_SCALE * bias,
        m5: quantile(&h_dev, 0.9),
        m1_stderr: m2 / count.sqrt(),
        failures,
        boundary_hits,
    }
}

/// Formats a measure with six significant digits and a `.` decimal
/// separator.  Non-finite values and exact zero print as-is.
pub fn six_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Writes the per-cell summary table: one oracle row, then one row per
/// selector in configuration order.
pub fn write_summary_csv<W: Write>(cell: &CellResult, w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "selector,m1,m2,m3,m4,m5,m1_stderr,failures,boundary_hits"
    )?;
    for row in std::iter::once(&cell.oracle).chain(&cell.selectors) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            row.selector,
            six_significant(row.m1),
            six_significant(row.m2),
            six_significant(row.m3),
            six_significant(row.m4),
            six_significant(row.m5),
            six_significant(row.m1_stderr),
            row.failures,
            row.boundary_hits
        )?;
    }
    Ok(())
}

/// Writes the long-format raw records at full precision: per replication,
/// one oracle row then one row per selector.  Failed selections print `NA`
/// for bandwidth and error.
pub fn write_raw_csv<W: Write>(cell: &CellResult, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "design,n,rep,selector,h,ise,boundary_hit")?;
    for r in &cell.raw {
        writeln!(
            w,
            "{},{},{},h_ise,{},{},{}",
            cell.design, cell.n, r.rep, r.h_ise, r.ise_oracle, r.oracle_boundary
        )?;
        for (label, outcome) in cell.selector_labels.iter().zip(&r.selectors) {
            match outcome {
                Some(o) => writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    cell.design, cell.n, r.rep, label, o.h, o.ise, o.boundary_hit
                )?,
                None => writeln!(
                    w,
                    "{},{},{},{},NA,NA,NA",
                    cell.design, cell.n, r.rep, label
                )?,
            }
        }
    }
    Ok(())
}
