//! Asymptotic-variance integrals behind the selector comparison: the
//! H-functions of each selector family and the dimensionless variance
//! constants obtained from them.
//!
//! Every selector's asymptotic variance factors into a common
//! design-dependent part times a dimensionless constant determined entirely
//! by the kernels involved.  That constant is `∫ D(u)² du / 2` where `D` is
//! the family's deviation function:
//!
//! * plug-in: `D = H`, with `H(u) = 4∫K(u−v)[K(v)+vK′(v)]dv`;
//! * (I)CV scored with `L`: `D(u) = H(u) − (R(K)/R(L))·H_ICV,L(u)`;
//! * DO / IDO through one-sided `K_L`: `D(u) = H(u) − (R(K)/R(K_L))·H*(u)`.
//!
//! The family H-functions are defined on a rescaled argument: the natural
//! variable of `H_ICV,L` (and `H*`) is `w = d·u` with
//! `d = rescale_factor(L, K)`, the bandwidth-conversion constant in the
//! opposite direction.  The functions here take the *own* argument `w` and
//! evaluate the defining right-hand side at `w/d`.
//!
//! # Normalization
//!
//! The factor ½ ([`NORMALIZATION`]) is fixed by the algebra of the variance
//! expansion, not calibrated: with it, nine of the ten independently
//! published reference constants are reproduced to ±0.02 (see
//! [`epanechnikov_references`] / [`quartic_references`]).  The classical-CV
//! constant computes to 16∫(K+uK′)²/2 = 7.20 exactly for the Epanechnikov
//! kernel, while the commonly quoted value is 7.42; reports therefore print
//! the computed value next to the reference instead of silently rescaling
//! everything to match the outlier.

use crate::kernels::{rescale_factor, Kernel};
use crate::quad;
use crate::selectors::Indirect;
use crate::{Error, Result};

/// Absolute tolerance of the inner (per-point) quadratures.
pub const INNER_TOL: f64 = 1e-10;

/// Absolute tolerance of the outer deviation-squared integral.
pub const OUTER_TOL: f64 = 1e-9;

/// The fixed variance-constant normalization `α` in `value = α·I`.
pub const NORMALIZATION: f64 = 0.5;

fn require_symmetric(k: &Kernel, what: &str) -> Result<()> {
    if k.is_onesided() {
        return Err(Error::InvalidConfig(format!(
            "{what} requires a symmetric kernel, got {}",
            k.family().label()
        )));
    }
    Ok(())
}

fn require_onesided(k: &Kernel, what: &str) -> Result<()> {
    if !k.is_onesided() {
        return Err(Error::InvalidConfig(format!(
            "{what} requires a one-sided kernel, got {}",
            k.family().label()
        )));
    }
    Ok(())
}

/// The kernel-variation weight `B(v) = k(v) + v·k′(v)` entering every
/// H-integral.
fn weight(k: &Kernel, v: f64) -> f64 {
    k.evaluate(v) + v * k.derivative(v)
}

/// `∫ outer(offset + sign·v) · [inner(v) + v·inner′(v)] dv` over the
/// intersection of both factors' supports.  Returns exactly 0 when the
/// supports do not overlap, which makes compact H-functions vanish outside
/// their analytic support instead of merely being small.
fn cross_integral(outer: &Kernel, offset: f64, sign: f64, inner: &Kernel) -> Result<f64> {
    let (a0, a1) = inner.support();
    let (o0, o1) = outer.support();
    let (mut lo, mut hi) = if sign > 0.0 {
        (o0 - offset, o1 - offset)
    } else {
        (offset - o1, offset - o0)
    };
    lo = lo.max(a0);
    hi = hi.min(a1);
    if !(lo < hi) {
        return Ok(0.0);
    }
    // One-sided kernels jump at argument 0; pre-split the range there so
    // each segment is smooth.
    let mut breaks = vec![lo, hi];
    if outer.is_onesided() {
        let v0 = -offset / sign;
        if v0 > lo && v0 < hi {
            breaks.push(v0);
        }
    }
    if inner.is_onesided() && lo < 0.0 && 0.0 < hi {
        breaks.push(0.0);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    quad::integrate_segments(
        |v| outer.evaluate(offset + sign * v) * weight(inner, v),
        &breaks,
        INNER_TOL,
    )
}

/// `H(u) = 4∫K(u−v)[K(v)+vK′(v)]dv` for a symmetric kernel.
pub fn h_function(k: &Kernel, u: f64) -> Result<f64> {
    require_symmetric(k, "the base H-function")?;
    Ok(4.0 * cross_integral(k, u, -1.0, k)?)
}

/// The (I)CV family H-function at its own argument `w`.
///
/// The defining right-hand side
/// `4∫L(u−v)[L(v)+vL′(v)]dv − 4[L(u)+uL′(u)]`
/// lives at `u = w/d` with `d = rescale_factor(L, target)`; for `L = target`
/// the rescaling is exactly 1 and `H_ICV,K(u) = H(u) − 4[K(u)+uK′(u)]`.
pub fn h_icv_function(l: &Kernel, target: &Kernel, w: f64) -> Result<f64> {
    require_symmetric(l, "the ICV H-function")?;
    require_symmetric(target, "the ICV H-function target")?;
    let d = rescale_factor(l, target)?;
    icv_rhs(l, w / d)
}

fn icv_rhs(l: &Kernel, u: f64) -> Result<f64> {
    Ok(4.0 * cross_integral(l, u, -1.0, l)? - 4.0 * weight(l, u))
}

/// The do-validation H-function at its own argument `w`, for the one-sided
/// kernel `k_l` and the target whose scale `w` lives on.
pub fn h_do_function(k_l: &Kernel, target: &Kernel, w: f64) -> Result<f64> {
    require_onesided(k_l, "the do-validation H-function")?;
    require_symmetric(target, "the do-validation H-function target")?;
    let d = rescale_factor(k_l, target)?;
    onesided_rhs(k_l, w / d)
}

/// The indirect do-validation H-function: identical shape to
/// [`h_do_function`] with `k_l` the one-sided version of the *indirect*
/// kernel rather than of the target.
pub fn h_ido_function(k_l2r: &Kernel, target: &Kernel, w: f64) -> Result<f64> {
    h_do_function(k_l2r, target, w)
}

fn onesided_rhs(k_l: &Kernel, u: f64) -> Result<f64> {
    let convolutions =
        2.0 * cross_integral(k_l, u, 1.0, k_l)? + 2.0 * cross_integral(k_l, -u, 1.0, k_l)?;
    Ok(convolutions - 2.0 * (weight(k_l, u) + weight(k_l, -u)))
}

/// Which constant to evaluate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstantFamily {
    Cv,
    Icv(Indirect),
    Do,
    Ido(Indirect),
    Plugin,
}

impl ConstantFamily {
    /// Stable short label ("cv", "icv8", "idog", …).
    pub fn label(&self) -> String {
        match self {
            ConstantFamily::Cv => "cv".into(),
            ConstantFamily::Icv(Indirect::Polynomial(r)) => format!("icv{r}"),
            ConstantFamily::Icv(Indirect::Gaussian) => "icvg".into(),
            ConstantFamily::Do => "do".into(),
            ConstantFamily::Ido(Indirect::Polynomial(r)) => format!("ido{r}"),
            ConstantFamily::Ido(Indirect::Gaussian) => "idog".into(),
            ConstantFamily::Plugin => "plugin".into(),
        }
    }

    /// Label of the indirect kernel, or "-" when the family has none.
    pub fn indirect_label(&self) -> String {
        match self {
            ConstantFamily::Icv(Indirect::Polynomial(r))
            | ConstantFamily::Ido(Indirect::Polynomial(r)) => format!("poly{r}"),
            ConstantFamily::Icv(Indirect::Gaussian) | ConstantFamily::Ido(Indirect::Gaussian) => {
                "gauss".into()
            }
            _ => "-".into(),
        }
    }
}

/// A computed variance constant.
#[derive(Clone, Debug)]
pub struct VarianceConstant {
    pub family: ConstantFamily,
    /// The deviation-squared integral `I` before normalization.
    pub raw_integral: f64,
    /// `NORMALIZATION · I`, the number comparable to published tables.
    pub value: f64,
    pub normalization: f64,
}

/// Evaluates the variance constant of a selector family for the given
/// symmetric target kernel.
pub fn variance_constant(family: &ConstantFamily, target: &Kernel) -> Result<VarianceConstant> {
    require_symmetric(target, "variance constants")?;
    let raw_integral = match family {
        ConstantFamily::Plugin => {
            let s = 2.0 * target.support().1;
            deviation_integral(target, s, &[], |u| h_raw(target, u))?
        }
        ConstantFamily::Cv => icv_deviation(target, target)?,
        ConstantFamily::Icv(indirect) => icv_deviation(target, &indirect.build()?)?,
        ConstantFamily::Do => {
            let k_l = Kernel::onesided(target, crate::kernels::Side::Left)?;
            onesided_deviation(target, &k_l)?
        }
        ConstantFamily::Ido(indirect) => {
            let k_l = Kernel::onesided(&indirect.build()?, crate::kernels::Side::Left)?;
            onesided_deviation(target, &k_l)?
        }
    };
    Ok(VarianceConstant {
        family: family.clone(),
        raw_integral,
        value: NORMALIZATION * raw_integral,
        normalization: NORMALIZATION,
    })
}

// NaN-propagating shims so inner quadrature failures surface as outer
// non-convergence diagnostics instead of panics.
fn h_raw(k: &Kernel, u: f64) -> f64 {
    cross_integral(k, u, -1.0, k).map(|v| 4.0 * v).unwrap_or(f64::NAN)
}

fn icv_raw(l: &Kernel, d: f64, w: f64) -> f64 {
    icv_rhs(l, w / d).unwrap_or(f64::NAN)
}

fn onesided_raw(k_l: &Kernel, d: f64, w: f64) -> f64 {
    onesided_rhs(k_l, w / d).unwrap_or(f64::NAN)
}

/// `∫ D(u)² du` over `[−s, s]`, pre-split at the natural kink candidates.
fn deviation_integral<F: Fn(f64) -> f64>(
    target: &Kernel,
    s: f64,
    extra_breaks: &[f64],
    deviation: F,
) -> Result<f64> {
    let t1 = target.support().1;
    let mut breaks = vec![-s, 0.0, s, -t1, t1, -2.0 * t1, 2.0 * t1];
    breaks.extend_from_slice(extra_breaks);
    breaks.retain(|b| b.abs() <= s);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    quad::integrate_segments(|u| deviation(u).powi(2), &breaks, OUTER_TOL)
}

fn icv_deviation(target: &Kernel, l: &Kernel) -> Result<f64> {
    require_symmetric(l, "ICV variance constants")?;
    let c = target.functionals().roughness / l.functionals().roughness;
    let d = rescale_factor(l, target)?;
    let reach = 2.0 * l.support().1 * d;
    let s = (2.0 * target.support().1).max(reach);
    let extra = [
        -reach,
        reach,
        -l.support().1 * d,
        l.support().1 * d,
    ];
    deviation_integral(target, s, &extra, |u| {
        h_raw(target, u) - c * icv_raw(l, d, u)
    })
}

fn onesided_deviation(target: &Kernel, k_l: &Kernel) -> Result<f64> {
    let c = target.functionals().roughness / k_l.functionals().roughness;
    let d = rescale_factor(k_l, target)?;
    let reach = -k_l.support().0 * d;
    let s = (2.0 * target.support().1).max(reach);
    let extra = [-reach, reach, -0.5 * reach, 0.5 * reach];
    deviation_integral(target, s, &extra, |u| {
        h_raw(target, u) - c * onesided_raw(k_l, d, u)
    })
}

/// Kind tag for sampled H-function tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HTableKind {
    Plain,
    Icv,
    DoValidation,
    IndirectDo,
}

/// An H-function sampled on a grid, for plotting or export.
#[derive(Clone, Debug)]
pub struct HFunctionTable {
    pub kind: HTableKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// The argument-conversion constant `d` between the function's own
    /// argument and the defining right-hand side's (1 for [`HTableKind::Plain`]).
    pub d_factor: f64,
}

impl HFunctionTable {
    pub fn plain(target: &Kernel, grid: &[f64]) -> Result<Self> {
        let values = grid
            .iter()
            .map(|&u| h_function(target, u))
            .collect::<Result<_>>()?;
        Ok(HFunctionTable {
            kind: HTableKind::Plain,
            grid: grid.to_vec(),
            values,
            d_factor: 1.0,
        })
    }

    pub fn icv(l: &Kernel, target: &Kernel, grid: &[f64]) -> Result<Self> {
        let values = grid
            .iter()
            .map(|&w| h_icv_function(l, target, w))
            .collect::<Result<_>>()?;
        Ok(HFunctionTable {
            kind: HTableKind::Icv,
            grid: grid.to_vec(),
            values,
            d_factor: rescale_factor(l, target)?,
        })
    }

    pub fn do_validation(k_l: &Kernel, target: &Kernel, grid: &[f64]) -> Result<Self> {
        let values = grid
            .iter()
            .map(|&w| h_do_function(k_l, target, w))
            .collect::<Result<_>>()?;
        Ok(HFunctionTable {
            kind: HTableKind::DoValidation,
            grid: grid.to_vec(),
            values,
            d_factor: rescale_factor(k_l, target)?,
        })
    }

    pub fn indirect_do(k_l2r: &Kernel, target: &Kernel, grid: &[f64]) -> Result<Self> {
        let mut table = Self::do_validation(k_l2r, target, grid)?;
        table.kind = HTableKind::IndirectDo;
        Ok(table)
    }
}

/// Published reference constants for the Epanechnikov target, in the order
/// they are usually tabulated.  The classical-CV row is the known outlier
/// discussed in the module docs.
pub fn epanechnikov_references() -> Vec<(ConstantFamily, f64)> {
    vec![
        (ConstantFamily::Cv, 7.42),
        (ConstantFamily::Icv(Indirect::Polynomial(2)), 4.71),
        (ConstantFamily::Icv(Indirect::Polynomial(8)), 3.72),
        (ConstantFamily::Icv(Indirect::Gaussian), 3.48),
        (ConstantFamily::Do, 2.19),
        (ConstantFamily::Ido(Indirect::Polynomial(2)), 1.65),
        (ConstantFamily::Ido(Indirect::Polynomial(8)), 1.37),
        (ConstantFamily::Ido(Indirect::Gaussian), 1.29),
        (ConstantFamily::Plugin, 0.72),
    ]
}

/// Published reference constants for the quartic target.
pub fn quartic_references() -> Vec<(ConstantFamily, f64)> {
    vec![
        (ConstantFamily::Do, 1.89),
        (ConstantFamily::Plugin, 0.83),
    ]
}
