use alloc::string::String;

/// Errors raised anywhere in the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Derived service rates would not be positive.
    #[error("infeasible heterogeneity: delta_lambda={delta} gives mu_i={mu_i}, mu_j={mu_j}")]
    InfeasibleRates { delta: f64, mu_i: f64, mu_j: f64 },

    /// The target queue grows without bound (`lambda_tar >= 2 mu`).
    #[error("unbounded growth: lambda_tar={lambda_tar} >= 2*mu={two_mu}")]
    UnboundedGrowth { lambda_tar: f64, two_mu: f64 },

    /// No stationary distribution exists for the requested utilization.
    #[error("utilization rho={0} >= 1 has no stationary distribution")]
    Unstable(f64),

    /// Poisson series of the uniformized chain is too long to evaluate.
    #[error("uniformization series too long: q*t={0}")]
    SeriesOverflow(f64),

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("wait estimator is not calibrated")]
    Uncalibrated,

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("environment failure: {0}")]
    Environment(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, alloc::format!("must be finite, got {value}")))
    }
}
