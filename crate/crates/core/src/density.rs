//! Kernel density estimation and the cross-validation scores that drive
//! bandwidth selection.
//!
//! The estimator evaluated here is
//!
//! ```text
//! f̂_{h,k}(x) = (n h)⁻¹ Σᵢ k((Xᵢ − x) / h)
//! ```
//!
//! with the kernel argument written `(Xᵢ − x)/h`.  For symmetric kernels the
//! argument order is irrelevant; for one-sided kernels it fixes the
//! orientation: a `Left` kernel (support on negative arguments) weights
//! observations to the *left* of the evaluation point.
//!
//! The cross-validation score
//!
//! ```text
//! CV(h) = ∫ f̂²_{h,k} − 2 n⁻¹ Σᵢ f̂(Xᵢ)
//! ```
//!
//! is computed exactly: the quadratic term collapses to a double sum over the
//! kernel self-correlation `ψ(δ) = ∫ k(t) k(t + δ) dt` (memoized in
//! [`crate::kernels`]), so no evaluation grid enters the quantity being
//! minimized.  When `k(0) ≠ 0` the linear term uses the leave-one-out
//! estimator; one-sided kernels vanish at the origin and need no such
//! correction.

use std::path::Path;

use crate::kernels::{Kernel, Side};
use crate::{Error, Result};

/// An ingested data set: at least two finite observations, kept sorted.
///
/// Sorting once on ingestion lets every score evaluation run windowed pair
/// scans and lets quantiles index directly into order statistics.
#[derive(Clone, Debug)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Validates and sorts raw observations.  Duplicate values are allowed;
    /// fewer than two observations or any non-finite value is rejected.
    pub fn from_values(mut values: Vec<f64>) -> Result<Sample> {
        if values.len() < 2 {
            return Err(Error::InvalidSample(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "non-finite observation {bad}"
            )));
        }
        // All values are finite, so partial_cmp cannot fail.
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Sample { values })
    }

    /// Reads one number per line; blank lines and `#` comments (full-line or
    /// trailing) are ignored.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Sample> {
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let stripped = line.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let value: f64 = stripped.parse().map_err(|_| {
                Error::InvalidSample(format!(
                    "line {}: cannot parse {stripped:?} as a number",
                    idx + 1
                ))
            })?;
            values.push(value);
        }
        Sample::from_values(values)
    }

    /// Observations in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (divisor `n − 1`).
    pub fn sd(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    }

    /// Interquartile range under the same quantile convention as
    /// [`quantile`].
    pub fn iqr(&self) -> f64 {
        quantile(&self.values, 0.75) - quantile(&self.values, 0.25)
    }

    /// Robust scale `min(sd, IQR/1.349)` used to seed bandwidth search
    /// intervals.  If one of the two spread measures degenerates to zero the
    /// other is used alone; zero is returned only when all observations are
    /// identical.
    pub fn robust_scale(&self) -> f64 {
        let sd = self.sd();
        let iqr_scale = self.iqr() / 1.349;
        match (sd > 0.0, iqr_scale > 0.0) {
            (true, true) => sd.min(iqr_scale),
            (true, false) => sd,
            (false, true) => iqr_scale,
            (false, false) => 0.0,
        }
    }
}

/// Linear-interpolation quantile of already-sorted data (the convention
/// where the quantile at probability `p` sits at fractional order-statistic
/// index `(n − 1)·p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// A kernel density estimate evaluated on a fixed grid.
#[derive(Clone, Debug)]
pub struct DensityEstimate {
    grid: Vec<f64>,
    values: Vec<f64>,
    h: f64,
    kernel: Kernel,
}

impl DensityEstimate {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Trapezoid mass of the estimate over its grid.  Close to 1 whenever
    /// the grid covers the effective support of the estimate.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

/// Trapezoid rule over a (not necessarily equispaced) increasing grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(grid.len(), values.len());
    let mut acc = 0.0;
    for i in 1..grid.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    }
    acc
}

/// Evaluates `f̂_{h,k}` on `grid`.
///
/// Only observations inside the kernel window `[x + h·lo, x + h·hi]`
/// (with `(lo, hi)` the kernel support) contribute at a grid point `x`;
/// they are located by binary search in the sorted sample.
pub fn kde_evaluate(s: &Sample, h: f64, k: &Kernel, grid: &[f64]) -> Result<DensityEstimate> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidBandwidth(h));
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig(
            "density grid must be nonempty and strictly increasing".into(),
        ));
    }
    let xs = s.values();
    let scale = 1.0 / (xs.len() as f64 * h);
    let (lo, hi) = k.support();
    let values = grid
        .iter()
        .map(|&x| {
            // u = (Xᵢ − x)/h lies in the support iff Xᵢ ∈ [x + h·lo, x + h·hi].
            let a = xs.partition_point(|&v| v < x + h * lo);
            let b = xs.partition_point(|&v| v <= x + h * hi);
            let sum: f64 = xs[a..b].iter().map(|&v| k.evaluate((v - x) / h)).sum();
            // Empty windows sum to IEEE -0.0 (std's sum identity); +0.0
            // normalizes the sign so emitted zeros read as plain zero.
            sum * scale + 0.0
        })
        .collect();
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        h,
        kernel: k.clone(),
    })
}

/// Exact cross-validation score
/// `∫ f̂²_{h,k} − 2 n⁻¹ Σᵢ f̂₍₋ᵢ₎(Xᵢ)`.
///
/// Both terms reduce to sums over sorted pairs closer than
/// `correlation_width · h`, found with a forward window scan.  The
/// leave-one-out divisor `n(n−1)` applies only when `k(0) ≠ 0`; kernels
/// vanishing at the origin (the one-sided families) contribute no diagonal
/// term, and the plain estimator with divisor `n²` is used.
pub fn cv_score(s: &Sample, h: f64, k: &Kernel) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidBandwidth(h));
    }
    let xs = s.values();
    let n = xs.len() as f64;
    let window = k.correlation_width() * h;

    // corr_sum = Σ_{i<j} ψ(δᵢⱼ), cross_sum = Σ_{i<j} [k(δᵢⱼ) + k(−δᵢⱼ)]
    // with δᵢⱼ = (Xⱼ − Xᵢ)/h ≥ 0; ψ is even, so ordering does not matter
    // for the quadratic term, while both signs are kept for the linear one.
    let mut corr_sum = 0.0;
    let mut cross_sum = 0.0;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let gap = xs[j] - xs[i];
            if gap >= window {
                break;
            }
            let delta = gap / h;
            corr_sum += k.self_correlation(delta);
            cross_sum += k.evaluate(delta) + k.evaluate(-delta);
        }
    }

    let quadratic = (n * k.self_correlation(0.0) + 2.0 * corr_sum) / (n * n * h);
    let pairs = if k.evaluate(0.0) != 0.0 {
        n * (n - 1.0)
    } else {
        n * n
    };
    Ok(quadratic - 2.0 * cross_sum / (pairs * h))
}

/// Cross-validation score with the one-sided equivalent of `base` on the
/// given side.
///
/// Convenience wrapper that constructs the one-sided kernel on every call;
/// hot paths (the minimizer, the Monte Carlo driver) should build the kernel
/// once and call [`cv_score`] directly.
pub fn oscv_score(s: &Sample, h: f64, base: &Kernel, side: Side) -> Result<f64> {
    let onesided = Kernel::onesided(base, side)?;
    cv_score(s, h, &onesided)
}
