//! Kernel algebra: evaluation, derivatives, moment functionals, one-sided
//! local-linear equivalent kernels, and the rescaling constants that convert
//! a bandwidth tuned for one kernel into a bandwidth for another.
//!
//! Three families are supported:
//!
//! * `Polynomial(r)`: `κ_r (1 - u²)^r` on (-1, 1), normalized to integrate
//!   to one. `r = 1` is the Epanechnikov kernel, `r = 2` the quartic.
//! * `Gaussian`: the standard normal density, truncated at `|u| ≥ 12` where
//!   its mass is far below double precision.
//! * One-sided kernels: the local-linear equivalent kernel of a symmetric
//!   base restricted to a half line,
//!   `K_L(u) = [μ₂ + u μ₁*] / [μ₂ - μ₁*²] · 2K(u)` on (-∞, 0), and its
//!   mirror image on (0, ∞). The support is open at 0, so the value at 0 is
//!   exactly 0. By the local-linear moment conditions these kernels
//!   integrate to one and have first moment exactly zero; their second
//!   moment is nonzero but may be negative (it enters all rescaling
//!   constants squared).

use crate::{quad, Error, Result};

/// Largest accepted polynomial order; covers the r = 1..20 constant curves
/// with headroom.
pub const MAX_POLY_ORDER: u32 = 50;

/// Truncation point for the Gaussian kernel; `φ(12) ≈ 2e-32`.
pub const GAUSS_CUTOFF: f64 = 12.0;

/// Grid size of the memoized self-correlation table.
const CORR_POINTS: usize = 4096;

/// Absolute tolerance for kernel moment quadratures.
const FUNCTIONAL_TOL: f64 = 1e-10;

/// Which half line a one-sided kernel lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn mirror(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Symbolic kernel descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Polynomial(u32),
    Gaussian,
    OneSided { base: Box<Family>, side: Side },
}

impl Family {
    /// Short label used in diagnostics and CSV output.
    pub fn label(&self) -> String {
        match self {
            Family::Polynomial(r) => format!("poly{r}"),
            Family::Gaussian => "gauss".to_string(),
            Family::OneSided { base, side } => {
                let s = match side {
                    Side::Left => "left",
                    Side::Right => "right",
                };
                format!("{s}({})", base.label())
            }
        }
    }
}

/// The scalar functionals of a kernel: `roughness = ∫k²`,
/// `mu_l = ∫uˡ k(u) du` for l = 0, 1, 2, and `mu1_star = 2∫₀^∞ u k(u) du`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Functionals {
    pub roughness: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu1_star: f64,
}

/// Evaluable kernel form; bases of one-sided kernels are stored without
/// their own correlation table.
#[derive(Clone, Debug)]
enum Form {
    Poly { order: u32, norm: f64 },
    Gauss,
    OneSided { side: Side, w0: f64, w1: f64, base: Box<Form> },
}

impl Form {
    fn eval(&self, u: f64) -> f64 {
        match self {
            Form::Poly { order, norm } => {
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    norm * (1.0 - u * u).powi(*order as i32)
                }
            }
            Form::Gauss => {
                if u.abs() >= GAUSS_CUTOFF {
                    0.0
                } else {
                    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
                }
            }
            Form::OneSided { side, w0, w1, base } => {
                let inside = match side {
                    Side::Left => u < 0.0,
                    Side::Right => u > 0.0,
                };
                if inside {
                    (w0 + w1 * u) * 2.0 * base.eval(u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative, using the interior one-sided limit at support endpoints
    /// so that quadratures across an endpoint stay well defined.
    fn deriv(&self, u: f64) -> f64 {
        match self {
            Form::Poly { order, norm } => {
                if u.abs() > 1.0 {
                    0.0
                } else if *order == 1 {
                    norm * (-2.0 * u)
                } else {
                    norm * (*order as f64) * (1.0 - u * u).powi(*order as i32 - 1) * (-2.0 * u)
                }
            }
            Form::Gauss => -u * self.eval(u),
            Form::OneSided { side, w0, w1, base } => {
                let inside = match side {
                    Side::Left => u < 0.0,
                    Side::Right => u > 0.0,
                };
                if inside {
                    2.0 * (w1 * base.eval(u) + (w0 + w1 * u) * base.deriv(u))
                } else {
                    0.0
                }
            }
        }
    }
}

/// Memoized self-correlation `ψ(δ) = ∫ k(t) k(t + δ) dt` on a uniform grid
/// with cubic interpolation. `ψ` is even in `δ` for every kernel, so only
/// `[0, width]` is tabulated.
#[derive(Clone, Debug)]
struct CorrTable {
    width: f64,
    step: f64,
    values: Vec<f64>,
}

impl CorrTable {
    fn build(form: &Form, support: (f64, f64)) -> Result<CorrTable> {
        let width = support.1 - support.0;
        let step = width / (CORR_POINTS - 1) as f64;
        let mut values = Vec::with_capacity(CORR_POINTS);
        for i in 0..CORR_POINTS {
            let delta = i as f64 * step;
            let hi = support.1 - delta;
            let v = if hi <= support.0 {
                0.0
            } else {
                quad::integrate(|t| form.eval(t) * form.eval(t + delta), support.0, hi, FUNCTIONAL_TOL)?
            };
            values.push(v);
        }
        Ok(CorrTable { width, step, values })
    }

    fn eval(&self, delta: f64) -> f64 {
        let d = delta.abs();
        if d >= self.width {
            return 0.0;
        }
        let t = d / self.step;
        let i = (t as usize).min(CORR_POINTS - 2);
        let s = t - i as f64;
        // Catmull-Rom with an even extension below 0 and zero beyond the end.
        let at = |j: isize| -> f64 {
            if j < 0 {
                self.values[(-j) as usize]
            } else if (j as usize) < CORR_POINTS {
                self.values[j as usize]
            } else {
                0.0
            }
        };
        let (p0, p1, p2, p3) = (at(i as isize - 1), at(i as isize), at(i as isize + 1), at(i as isize + 2));
        0.5 * (2.0 * p1
            + (p2 - p0) * s
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s * s
            + (3.0 * p1 - p0 - 3.0 * p2 + p3) * s * s * s)
    }
}

/// A kernel with precomputed functionals and self-correlation table.
///
/// Construction does all the numerical work eagerly; a built kernel is
/// immutable and safe to share across threads.
#[derive(Clone, Debug)]
pub struct Kernel {
    family: Family,
    support: (f64, f64),
    functionals: Functionals,
    form: Form,
    corr: CorrTable,
}

impl PartialEq for Kernel {
    /// Construction is a pure function of the family, so family equality
    /// is kernel equality.
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

/// `∫_{-1}^{1} (1 - u²)^r du`, by the stable recursion
/// `I_0 = 2, I_r = I_{r-1} · 2r / (2r + 1)`.
fn poly_mass(r: u32) -> f64 {
    let mut v = 2.0;
    for k in 1..=r {
        v *= 2.0 * k as f64 / (2.0 * k as f64 + 1.0);
    }
    v
}

impl Kernel {
    /// The polynomial kernel `κ_r (1 - u²)^r` on (-1, 1).
    pub fn polynomial(order: u32) -> Result<Kernel> {
        if order == 0 || order > MAX_POLY_ORDER {
            return Err(Error::InvalidOrder(order));
        }
        let mass = poly_mass(order);
        let norm = 1.0 / mass;
        let form = Form::Poly { order, norm };
        let support = (-1.0, 1.0);
        let functionals = Functionals {
            roughness: poly_mass(2 * order) / (mass * mass),
            mu0: 1.0,
            mu1: 0.0,
            mu2: 1.0 / (2.0 * order as f64 + 3.0),
            mu1_star: norm / (order as f64 + 1.0),
        };
        let corr = CorrTable::build(&form, support)?;
        Ok(Kernel {
            family: Family::Polynomial(order),
            support,
            functionals,
            form,
            corr,
        })
    }

    /// The Epanechnikov kernel, `polynomial(1)`.
    pub fn epanechnikov() -> Kernel {
        Kernel::polynomial(1).expect("order 1 is valid")
    }

    /// The quartic kernel, `polynomial(2)`.
    pub fn quartic() -> Kernel {
        Kernel::polynomial(2).expect("order 2 is valid")
    }

    /// The Gaussian kernel.
    pub fn gaussian() -> Kernel {
        let form = Form::Gauss;
        let support = (-GAUSS_CUTOFF, GAUSS_CUTOFF);
        let functionals = Functionals {
            roughness: 0.5 / std::f64::consts::PI.sqrt(),
            mu0: 1.0,
            mu1: 0.0,
            mu2: 1.0,
            mu1_star: (2.0 / std::f64::consts::PI).sqrt(),
        };
        let corr = CorrTable::build(&form, support).expect("smooth integrand");
        Kernel {
            family: Family::Gaussian,
            support,
            functionals,
            form,
            corr,
        }
    }

    /// The one-sided local-linear equivalent kernel of a symmetric base:
    /// `K_L(u) = [μ₂ + u μ₁*]/[μ₂ - μ₁*²] · 2K(u)` on the negative half
    /// line, mirrored for `Side::Right`.
    pub fn onesided(base: &Kernel, side: Side) -> Result<Kernel> {
        if let Family::OneSided { .. } = base.family {
            return Err(Error::DegenerateKernel(
                "one-sided construction requires a symmetric base".into(),
            ));
        }
        let mu2 = base.functionals.mu2;
        let mu1s = base.functionals.mu1_star;
        let den = mu2 - mu1s * mu1s;
        if den <= 0.0 {
            return Err(Error::DegenerateKernel(format!(
                "local-linear weight denominator μ₂ - μ₁*² = {den:.3e} is not positive"
            )));
        }
        let (w0, w1) = match side {
            Side::Left => (mu2 / den, mu1s / den),
            Side::Right => (mu2 / den, -mu1s / den),
        };
        let support = match side {
            Side::Left => (base.support.0, 0.0),
            Side::Right => (0.0, base.support.1),
        };
        let form = Form::OneSided {
            side,
            w0,
            w1,
            base: Box::new(base.form.clone()),
        };

        let brk = [support.0, support.1];
        let moment = |l: i32| -> Result<f64> {
            quad::integrate_segments(|u| u.powi(l) * form.eval(u), &brk, FUNCTIONAL_TOL)
        };
        let functionals = Functionals {
            roughness: quad::integrate_segments(|u| form.eval(u).powi(2), &brk, FUNCTIONAL_TOL)?,
            mu0: moment(0)?,
            mu1: moment(1)?,
            mu2: moment(2)?,
            mu1_star: if support.1 > 0.0 {
                2.0 * quad::integrate(|u| u * form.eval(u), 0.0, support.1, FUNCTIONAL_TOL)?
            } else {
                0.0
            },
        };
        let corr = CorrTable::build(&form, support)?;
        Ok(Kernel {
            family: Family::OneSided {
                base: Box::new(base.family.clone()),
                side,
            },
            support,
            functionals,
            form,
            corr,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Support interval; evaluation is exactly zero outside it.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn functionals(&self) -> &Functionals {
        &self.functionals
    }

    /// Kernel value at `u`.
    pub fn evaluate(&self, u: f64) -> f64 {
        self.form.eval(u)
    }

    /// Kernel derivative at `u` (interior one-sided limit at endpoints).
    pub fn derivative(&self, u: f64) -> f64 {
        self.form.deriv(u)
    }

    /// Memoized `ψ(δ) = ∫ k(t) k(t + δ) dt`; even in `δ`, zero for
    /// `|δ| ≥ support width`. `ψ(0) = roughness`.
    pub fn self_correlation(&self, delta: f64) -> f64 {
        self.corr.eval(delta)
    }

    /// Half-width beyond which both `ψ` and the kernel itself vanish;
    /// pairwise terms farther apart than `width · h` can be skipped.
    pub fn correlation_width(&self) -> f64 {
        self.corr.width
    }

    pub fn is_onesided(&self) -> bool {
        matches!(self.family, Family::OneSided { .. })
    }
}

/// The bandwidth conversion constant
/// `(R(k)/μ₂²(k) · μ₂²(l)/R(l))^{1/5}`: a minimizer tuned for scoring
/// kernel `l` times this factor suits target kernel `k`.
pub fn rescale_factor(k: &Kernel, l: &Kernel) -> Result<f64> {
    for kern in [k, l] {
        let f = kern.functionals();
        if f.mu2 == 0.0 || !(f.roughness > 0.0) {
            return Err(Error::DegenerateKernel(format!(
                "rescale factor undefined for {} (μ₂ = {:.3e}, R = {:.3e})",
                kern.family().label(),
                f.mu2,
                f.roughness
            )));
        }
    }
    let (fk, fl) = (k.functionals(), l.functionals());
    // Single ratio so that identical kernels give exactly 1.0 (the two
    // products share their factors and IEEE multiplication commutes).
    let num = fk.roughness * (fl.mu2 * fl.mu2);
    let den = (fk.mu2 * fk.mu2) * fl.roughness;
    Ok((num / den).powf(0.2))
}
