//! Scalar score minimization over a bandwidth interval: a coarse
//! log-spaced grid scan followed by golden-section refinement inside the
//! bracketing triple of the grid minimum.
//!
//! The two-phase shape is deliberate: CV-type scores are cheap but can be
//! multimodal, so the grid locates the global basin and golden section only
//! polishes within it.  Non-finite score values are tolerated (treated as
//! `+∞` for comparisons) as long as at least one grid point is finite.

use crate::{Error, Result};

/// Number of log-spaced points in the coarse scan.
pub const GRID_POINTS: usize = 60;

/// Relative width at which golden-section refinement stops.
pub const RELATIVE_TOL: f64 = 1e-4;

/// Result of a score minimization.
#[derive(Clone, Debug)]
pub struct Minimum {
    /// Location of the refined minimum (an interval endpoint on boundary hits).
    pub h: f64,
    /// True when the grid minimum sat on an interval endpoint, meaning the
    /// true minimizer may lie outside the search interval.
    pub boundary_hit: bool,
    /// Every `(h, score)` evaluation in the order performed; non-finite
    /// scores are recorded as evaluated.
    pub trace: Vec<(f64, f64)>,
}

/// Minimizes `score` over `(h_lo, h_hi)`.
///
/// Grid ties resolve to the smallest `h` so the result is deterministic.
/// Returns an error when no grid point produces a finite score.
pub fn minimize_score<F: Fn(f64) -> f64>(score: F, interval: (f64, f64)) -> Result<Minimum> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "search interval ({lo}, {hi}) must satisfy 0 < lo < hi"
        )));
    }

    let mut trace = Vec::with_capacity(GRID_POINTS + 64);
    let eval = |h: f64, trace: &mut Vec<(f64, f64)>| -> f64 {
        let v = score(h);
        trace.push((h, v));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    // Coarse scan on a log-spaced grid with exact endpoints.
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut grid = [0.0; GRID_POINTS];
    for (i, g) in grid.iter_mut().enumerate() {
        *g = (llo + (lhi - llo) * i as f64 / (GRID_POINTS - 1) as f64).exp();
    }
    grid[0] = lo;
    grid[GRID_POINTS - 1] = hi;

    let mut best = (0usize, f64::INFINITY);
    for (i, &h) in grid.iter().enumerate() {
        let v = eval(h, &mut trace);
        // Strict comparison keeps the first (smallest-h) of tied minima.
        if v < best.1 {
            best = (i, v);
        }
    }
    if best.1.is_infinite() {
        return Err(Error::SelectionFailure(
            "score is not finite anywhere on the search grid".into(),
        ));
    }

    let idx = best.0;
    if idx == 0 || idx == GRID_POINTS - 1 {
        return Ok(Minimum {
            h: grid[idx],
            boundary_hit: true,
            trace,
        });
    }

    // Golden-section refinement inside the bracketing triple.
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[idx - 1], grid[idx + 1]);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c, &mut trace);
    let mut fd = eval(d, &mut trace);
    while b - a > RELATIVE_TOL * 0.5 * (a + b) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c, &mut trace);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d, &mut trace);
        }
    }
    // `c < d` always, so `<=` again prefers the smaller bandwidth on ties.
    let h = if fc <= fd { c } else { d };
    Ok(Minimum {
        h,
        boundary_hit: false,
        trace,
    })
}
