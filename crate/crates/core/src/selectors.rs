//! Bandwidth selectors: classical and indirect cross-validation, one-sided
//! cross-validation, do-validation and its indirect refinements, the refined
//! plug-in rule, and the 13-value median combiner.
//!
//! Every cross-validation-family selector follows the same recipe: minimize a
//! CV score computed with some *scoring* kernel over a data-driven interval,
//! then convert the raw minimizer to the target kernel's scale with
//! [`rescale_factor`].  The selectors differ only in which kernel scores and
//! which constant converts:
//!
//! | selector | scoring kernel | conversion |
//! |----------|----------------|------------|
//! | CV       | target         | 1 |
//! | ICV      | indirect `L`   | `rescale(target, L)` |
//! | OSCV     | one-sided target | `rescale(target, onesided(target))` |
//! | DO       | both one-sided targets | same, applied to the average |
//! | IDO      | both one-sided indirect | `rescale(target, onesided(indirect))` |
//!
//! [`Selector`] builds all kernels (and their memoized self-correlation
//! tables) once at construction so that per-sample runs only pay for score
//! evaluations — the Monte Carlo driver calls [`Selector::run`] hundreds of
//! times per configuration.

use crate::density::{cv_score, Sample};
use crate::kernels::{rescale_factor, Kernel, Side};
use crate::minimize::minimize_score;
use crate::{Error, Result};

/// Selectors refuse to run on fewer observations than this.
pub const MIN_OBSERVATIONS: usize = 10;

/// Search interval endpoints as multiples of `ŝ·n^{−1/5}`.
pub const INTERVAL_FACTORS: (f64, f64) = (0.05, 10.0);

/// Indirect kernel choice for the indirect selectors: the polynomial family
/// member with the given exponent, or the Gaussian limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Indirect {
    Polynomial(u32),
    Gaussian,
}

impl Indirect {
    pub fn build(self) -> Result<Kernel> {
        match self {
            Indirect::Polynomial(r) => Kernel::polynomial(r),
            Indirect::Gaussian => Ok(Kernel::gaussian()),
        }
    }
}

/// Which selector to run.
#[derive(Clone, Debug, PartialEq)]
pub enum SelectorKind {
    Cv,
    /// Indirect cross-validation scored with the given kernel.
    Icv(Kernel),
    /// One-sided cross-validation on the given side.
    Oscv(Side),
    /// Do-validation: average of the two one-sided bandwidths.
    Do,
    /// Indirect do-validation through the given indirect family member.
    Ido(Indirect),
    /// Two-stage refined plug-in rule.
    PluginRefined,
    /// Median of 13 values: the eight CV-family bandwidths plus five copies
    /// of the plug-in bandwidth.
    Median13,
}

impl SelectorKind {
    /// Short stable label used in reports and CSV columns.
    pub fn label(&self) -> String {
        match self {
            SelectorKind::Cv => "cv".into(),
            SelectorKind::Icv(k) => match k.family() {
                crate::kernels::Family::Polynomial(r) => format!("icv{r}"),
                crate::kernels::Family::Gaussian => "icvg".into(),
                other => format!("icv({})", other.label()),
            },
            SelectorKind::Oscv(Side::Left) => "oscv-left".into(),
            SelectorKind::Oscv(Side::Right) => "oscv-right".into(),
            SelectorKind::Do => "do".into(),
            SelectorKind::Ido(Indirect::Polynomial(r)) => format!("ido{r}"),
            SelectorKind::Ido(Indirect::Gaussian) => "idog".into(),
            SelectorKind::PluginRefined => "plugin".into(),
            SelectorKind::Median13 => "median13".into(),
        }
    }
}

/// A selector kind together with the kernel whose ISE the bandwidth targets.
#[derive(Clone, Debug)]
pub struct SelectorSpec {
    pub kind: SelectorKind,
    pub target: Kernel,
}

/// Outcome of one selection.
#[derive(Clone, Debug)]
pub struct SelectionResult {
    /// Bandwidth in data units on the target kernel's scale.
    pub h: f64,
    /// Raw minimizer before scale conversion (equals `h` for plug-in and
    /// the median combiner, and the average of the two sides for DO/IDO).
    pub raw_h: f64,
    /// Score evaluations in the order performed; for two-sided selectors the
    /// left side's trace precedes the right's, for plug-in and the median it
    /// is empty.
    pub score_trace: Vec<(f64, f64)>,
    pub spec: SelectorSpec,
    /// Human-readable notes, currently boundary-hit reports.
    pub warnings: Vec<String>,
    /// True when any underlying minimization stopped on a search-interval
    /// endpoint.
    pub boundary_hit: bool,
    /// For the median combiner, the 13-value pool as (label, bandwidth)
    /// pairs in construction order (the plug-in value appears five times).
    /// Empty for every other selector.
    pub constituents: Vec<(String, f64)>,
}

enum Engine {
    /// Single score minimization (CV, ICV, OSCV).
    Score { kernel: Kernel, rescale: f64 },
    /// Average of a left and a right minimization (DO, IDO).  The left and
    /// right conversion constants coincide by mirror symmetry; the
    /// left-based one is used for both sides, matching the printed formulas.
    TwoSided {
        left: Kernel,
        right: Kernel,
        rescale: f64,
    },
    Plugin,
    /// The nine distinct constituents of the 13-value median, prebuilt.
    Median(Vec<Selector>),
}

/// A ready-to-run selector with all kernels prebuilt.
pub struct Selector {
    spec: SelectorSpec,
    engine: Engine,
}

impl Selector {
    pub fn new(kind: SelectorKind, target: &Kernel) -> Result<Selector> {
        let engine = match &kind {
            SelectorKind::Cv => Engine::Score {
                kernel: target.clone(),
                rescale: 1.0,
            },
            SelectorKind::Icv(indirect) => Engine::Score {
                rescale: rescale_factor(target, indirect)?,
                kernel: indirect.clone(),
            },
            SelectorKind::Oscv(side) => {
                let k = Kernel::onesided(target, *side)?;
                Engine::Score {
                    rescale: rescale_factor(target, &k)?,
                    kernel: k,
                }
            }
            SelectorKind::Do => {
                let left = Kernel::onesided(target, Side::Left)?;
                let right = Kernel::onesided(target, Side::Right)?;
                let rescale = rescale_factor(target, &left)?;
                Engine::TwoSided {
                    left,
                    right,
                    rescale,
                }
            }
            SelectorKind::Ido(indirect) => {
                let base = indirect.build()?;
                let left = Kernel::onesided(&base, Side::Left)?;
                let right = Kernel::onesided(&base, Side::Right)?;
                let rescale = rescale_factor(target, &left)?;
                Engine::TwoSided {
                    left,
                    right,
                    rescale,
                }
            }
            SelectorKind::PluginRefined => Engine::Plugin,
            SelectorKind::Median13 => Engine::Median(vec![
                Selector::new(SelectorKind::Cv, target)?,
                Selector::new(SelectorKind::Icv(Kernel::polynomial(2)?), target)?,
                Selector::new(SelectorKind::Icv(Kernel::polynomial(8)?), target)?,
                Selector::new(SelectorKind::Icv(Kernel::gaussian()), target)?,
                Selector::new(SelectorKind::Do, target)?,
                Selector::new(SelectorKind::Ido(Indirect::Polynomial(2)), target)?,
                Selector::new(SelectorKind::Ido(Indirect::Polynomial(8)), target)?,
                Selector::new(SelectorKind::Ido(Indirect::Gaussian), target)?,
                Selector::new(SelectorKind::PluginRefined, target)?,
            ]),
        };
        Ok(Selector {
            spec: SelectorSpec {
                kind,
                target: target.clone(),
            },
            engine,
        })
    }

    pub fn spec(&self) -> &SelectorSpec {
        &self.spec
    }

    /// Selects a bandwidth for the sample.  Deterministic: identical inputs
    /// produce identical outputs.
    pub fn run(&self, s: &Sample) -> Result<SelectionResult> {
        if s.n() < MIN_OBSERVATIONS {
            return Err(Error::InvalidSample(format!(
                "selector {} needs at least {MIN_OBSERVATIONS} observations, got {}",
                self.spec.kind.label(),
                s.n()
            )));
        }
        let interval = search_interval(s)?;
        match &self.engine {
            Engine::Score { kernel, rescale } => {
                let m = minimize_score(|h| cv_score(s, h, kernel).unwrap_or(f64::NAN), interval)?;
                let mut warnings = Vec::new();
                if m.boundary_hit {
                    warnings.push(boundary_note(m.h, interval));
                }
                Ok(SelectionResult {
                    h: rescale * m.h,
                    raw_h: m.h,
                    score_trace: m.trace,
                    spec: self.spec.clone(),
                    warnings,
                    boundary_hit: m.boundary_hit,
                    constituents: Vec::new(),
                })
            }
            Engine::TwoSided {
                left,
                right,
                rescale,
            } => {
                let ml = minimize_score(|h| cv_score(s, h, left).unwrap_or(f64::NAN), interval)?;
                let mr = minimize_score(|h| cv_score(s, h, right).unwrap_or(f64::NAN), interval)?;
                let mut warnings = Vec::new();
                if ml.boundary_hit {
                    warnings.push(format!("left side: {}", boundary_note(ml.h, interval)));
                }
                if mr.boundary_hit {
                    warnings.push(format!("right side: {}", boundary_note(mr.h, interval)));
                }
                let raw_h = 0.5 * (ml.h + mr.h);
                let mut score_trace = ml.trace;
                score_trace.extend(mr.trace);
                Ok(SelectionResult {
                    h: rescale * raw_h,
                    raw_h,
                    score_trace,
                    spec: self.spec.clone(),
                    warnings,
                    boundary_hit: ml.boundary_hit || mr.boundary_hit,
                    constituents: Vec::new(),
                })
            }
            Engine::Plugin => {
                let h = plugin_bandwidth(s, &self.spec.target)?;
                Ok(SelectionResult {
                    h,
                    raw_h: h,
                    score_trace: Vec::new(),
                    spec: self.spec.clone(),
                    warnings: Vec::new(),
                    boundary_hit: false,
                    constituents: Vec::new(),
                })
            }
            Engine::Median(parts) => {
                let mut bandwidths = [0.0; 8];
                let mut plugin = 0.0;
                let mut warnings = Vec::new();
                let mut boundary_hit = false;
                let mut constituents = Vec::with_capacity(13);
                for (i, part) in parts.iter().enumerate() {
                    let r = part.run(s)?;
                    if i < 8 {
                        bandwidths[i] = r.h;
                    } else {
                        plugin = r.h;
                    }
                    constituents.push((part.spec.kind.label(), r.h));
                    boundary_hit |= r.boundary_hit;
                    for w in r.warnings {
                        warnings.push(format!("{}: {w}", part.spec.kind.label()));
                    }
                }
                // The plug-in value fills the five remaining pool slots.
                for _ in 0..4 {
                    constituents.push(("plugin".into(), plugin));
                }
                let h = median13_values(&bandwidths, plugin);
                Ok(SelectionResult {
                    h,
                    raw_h: h,
                    score_trace: Vec::new(),
                    spec: self.spec.clone(),
                    warnings,
                    boundary_hit,
                    constituents,
                })
            }
        }
    }
}

/// Raw-bandwidth search interval `[0.05, 10] · ŝ · n^{−1/5}` with
/// `ŝ = min(sd, IQR/1.349)` — wide enough to bracket the optimal-rate
/// bandwidth for every design and scoring kernel in scope.
pub fn search_interval(s: &Sample) -> Result<(f64, f64)> {
    let scale = s.robust_scale();
    if !(scale > 0.0) {
        return Err(Error::InvalidSample(
            "all observations identical: no scale for a bandwidth search interval".into(),
        ));
    }
    let rate = scale * (s.n() as f64).powf(-0.2);
    Ok((INTERVAL_FACTORS.0 * rate, INTERVAL_FACTORS.1 * rate))
}

fn boundary_note(h: f64, interval: (f64, f64)) -> String {
    let end = if h == interval.0 { "lower" } else { "upper" };
    format!(
        "bandwidth search stopped on the {end} boundary of ({:.6e}, {:.6e})",
        interval.0, interval.1
    )
}

/// Median of the 13-value pool: eight CV-family bandwidths plus five copies
/// of the plug-in bandwidth (rank 7 of 13).
pub fn median13_values(cv_family: &[f64; 8], plugin: f64) -> f64 {
    let mut pool = [plugin; 13];
    pool[..8].copy_from_slice(cv_family);
    pool.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pool[6]
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Fourth derivative of the standard normal density.
fn normal_pdf_d4(x: f64) -> f64 {
    let x2 = x * x;
    (x2 * x2 - 6.0 * x2 + 3.0) * normal_pdf(x)
}

/// Two-stage refined plug-in bandwidth.
///
/// Stage one estimates the curvature functional `R(f″) = ∫ f″²` with the
/// Gaussian second-derivative estimator
/// `R̂ = n⁻² g⁻⁵ Σᵢⱼ φ⁗((Xᵢ−Xⱼ)/g)` (diagonal included) at the
/// normal-reference pilot `g = √2·(2/(5n))^{1/7}·ŝ`; stage two plugs it into
/// `ĥ = (R(K)/(μ₂²(K)·R̂·n))^{1/5}`.
pub fn plugin_bandwidth(s: &Sample, target: &Kernel) -> Result<f64> {
    let xs = s.values();
    let n = xs.len() as f64;
    let scale = s.robust_scale();
    if !(scale > 0.0) {
        return Err(Error::InvalidSample(
            "all observations identical: no scale for a pilot bandwidth".into(),
        ));
    }
    let g = std::f64::consts::SQRT_2 * (2.0 / (5.0 * n)).powf(1.0 / 7.0) * scale;

    // φ⁗ at 12 is ~5e−28, far below anything the accumulator can resolve.
    let window = 12.0 * g;
    let mut acc = n * normal_pdf_d4(0.0);
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let gap = xs[j] - xs[i];
            if gap >= window {
                break;
            }
            acc += 2.0 * normal_pdf_d4(gap / g);
        }
    }
    let curvature = acc / (n * n * g.powi(5));
    if !(curvature > 0.0) {
        return Err(Error::PluginFailure {
            estimate: curvature,
        });
    }
    let f = target.functionals();
    Ok((f.roughness / (f.mu2 * f.mu2 * curvature * n)).powf(0.2))
}

/// Classical leave-one-out cross-validation with the target kernel.
pub fn select_cv(s: &Sample, target: &Kernel) -> Result<SelectionResult> {
    Selector::new(SelectorKind::Cv, target)?.run(s)
}

/// Indirect cross-validation: score with `indirect`, rescale to `target`.
pub fn select_icv(s: &Sample, target: &Kernel, indirect: &Kernel) -> Result<SelectionResult> {
    Selector::new(SelectorKind::Icv(indirect.clone()), target)?.run(s)
}

/// One-sided cross-validation on the given side.
pub fn select_oscv(s: &Sample, target: &Kernel, side: Side) -> Result<SelectionResult> {
    Selector::new(SelectorKind::Oscv(side), target)?.run(s)
}

/// Do-validation: the average of the two one-sided bandwidths.
pub fn select_do(s: &Sample, target: &Kernel) -> Result<SelectionResult> {
    Selector::new(SelectorKind::Do, target)?.run(s)
}

/// Indirect do-validation through the indirect family member `r`.
pub fn select_ido(s: &Sample, target: &Kernel, r: Indirect) -> Result<SelectionResult> {
    Selector::new(SelectorKind::Ido(r), target)?.run(s)
}

/// Two-stage refined plug-in selector.
pub fn select_plugin(s: &Sample, target: &Kernel) -> Result<SelectionResult> {
    Selector::new(SelectorKind::PluginRefined, target)?.run(s)
}

/// Median of 13 bandwidths: eight CV-family values and five plug-in copies.
pub fn select_median13(s: &Sample, target: &Kernel) -> Result<SelectionResult> {
    Selector::new(SelectorKind::Median13, target)?.run(s)
}
