use thiserror::Error;

/// Errors surfaced by kernel construction, scoring, selection and the
/// simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Adaptive quadrature exhausted its subdivision budget before reaching
    /// the requested absolute tolerance.
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    /// Kernel construction produced an unusable kernel (for example a
    /// one-sided weight with a non-positive denominator).
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    /// A kernel order outside the supported range.
    #[error("unsupported polynomial kernel order {0} (must be 1..={max})", max = crate::kernels::MAX_POLY_ORDER)]
    InvalidOrder(u32),

    /// Bandwidths must be strictly positive and finite.
    #[error("invalid bandwidth {0}; bandwidth must be positive and finite")]
    InvalidBandwidth(f64),

    /// Sample ingestion rejected the data.
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// No usable minimum was found on the bandwidth search grid.
    #[error("selection failed: {0}")]
    SelectionFailure(String),

    /// The plug-in curvature estimate was not positive.
    #[error("plug-in failure: estimated curvature {estimate:.3e} is not positive")]
    PluginFailure { estimate: f64 },

    /// Experiment configuration rejected before any computation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Too many per-replication selector failures to report a summary.
    #[error("selector {selector} failed in {failed} of {total} replications (limit 2%)")]
    FailureRateExceeded {
        selector: String,
        failed: usize,
        total: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
