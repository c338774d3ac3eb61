//! Dual-queue system parameterization and patience.

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::rng::SimRng;

/// Arrival rates sampled per replication in the reference experiments.
pub const LAMBDA_SET: [f64; 7] = [3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0];

/// Service rates from the heterogeneity offset:
/// `mu_i = (lambda_i + delta)/2`, `mu_j = (lambda_j - delta)/2`.
///
/// Only positivity of the derived rates is enforced; the looser bound
/// `|delta| < lambda_i + lambda_j` follows from it.
pub fn derive_service_rates(lambda_i: f64, lambda_j: f64, delta_lambda: f64) -> Result<(f64, f64)> {
    ensure_finite("lambda_i", lambda_i)?;
    ensure_finite("lambda_j", lambda_j)?;
    ensure_finite("delta_lambda", delta_lambda)?;
    if lambda_i < 0.0 || lambda_j < 0.0 {
        return Err(invalid("lambda", "arrival rates must be non-negative"));
    }
    let mu_i = (lambda_i + delta_lambda) / 2.0;
    let mu_j = (lambda_j - delta_lambda) / 2.0;
    if mu_i <= 0.0 || mu_j <= 0.0 {
        return Err(Error::InfeasibleRates {
            delta: delta_lambda,
            mu_i,
            mu_j,
        });
    }
    Ok((mu_i, mu_j))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Utilization {
    pub rho: f64,
    pub stable: bool,
}

/// `rho = lambda / (c mu)`, flagged stable when `rho < 1`.
pub fn utilization(lambda: f64, servers: u32, mu: f64) -> Result<Utilization> {
    ensure_finite("lambda", lambda)?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(invalid("mu", "service rate must be positive"));
    }
    if servers == 0 {
        return Err(invalid("c", "server count must be at least 1"));
    }
    if lambda < 0.0 {
        return Err(invalid("lambda", "arrival rate must be non-negative"));
    }
    let rho = lambda / (servers as f64 * mu);
    Ok(Utilization {
        rho,
        stable: rho < 1.0,
    })
}

/// Law of the patience budget `T` drawn at entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatienceModel {
    Constant(f64),
    Exponential { mean: f64 },
}

impl Default for PatienceModel {
    fn default() -> Self {
        PatienceModel::Constant(2.0)
    }
}

impl PatienceModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PatienceModel::Constant(t) if t > 0.0 && !t.is_nan() => Ok(()),
            PatienceModel::Constant(t) => Err(invalid("patience", alloc::format!("constant must be positive, got {t}"))),
            PatienceModel::Exponential { mean } if mean > 0.0 && mean.is_finite() => Ok(()),
            PatienceModel::Exponential { mean } => {
                Err(invalid("patience", alloc::format!("exponential mean must be positive, got {mean}")))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            PatienceModel::Constant(t) => t,
            PatienceModel::Exponential { mean } => mean,
        }
    }
}

pub fn sample_patience(model: &PatienceModel, rng: &mut SimRng) -> Result<f64> {
    model.validate()?;
    Ok(match *model {
        PatienceModel::Constant(t) => t,
        PatienceModel::Exponential { mean } => loop {
            let t = rng.exponential(1.0 / mean);
            if t > 0.0 {
                break t;
            }
        },
    })
}

/// Total-time patience of one request. The budget is fixed at entry and
/// consumption runs from entry regardless of queue switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patience {
    total_budget: f64,
    entry_time: f64,
}

impl Patience {
    pub fn new(total_budget: f64, entry_time: f64) -> Result<Self> {
        if !(total_budget > 0.0) {
            return Err(invalid("patience", "budget must be positive"));
        }
        Ok(Self {
            total_budget,
            entry_time,
        })
    }

    pub fn total_budget(&self) -> f64 {
        self.total_budget
    }

    pub fn entry_time(&self) -> f64 {
        self.entry_time
    }

    /// Elapsed time `t0` since entry.
    pub fn consumed(&self, now: f64) -> f64 {
        (now - self.entry_time).max(0.0)
    }

    pub fn remaining(&self, now: f64) -> f64 {
        self.total_budget - self.consumed(now)
    }

    pub fn expires_at(&self) -> f64 {
        self.entry_time + self.total_budget
    }
}

/// How arrivals are split between the two queues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Router {
    /// Independent Poisson streams at `lambda_i` and `lambda_j`.
    #[default]
    Split,
    /// One stream at `lambda_total`, joining the shorter queue (ties uniform).
    JoinShorter,
}

/// Where a jockey lands in the target queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LandingMode {
    /// Tail of the target queue; `lambda_tar` only enters the feed's model.
    #[default]
    Tail,
    /// A Poisson(`lambda_tar` x review interval) number of fresh arrivals
    /// join ahead of the jockey at the switch.
    PoissonAhead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub lambda_total: f64,
    pub lambda_i: f64,
    pub lambda_j: f64,
    pub delta_lambda: f64,
    pub mu_i: f64,
    pub mu_j: f64,
    pub patience: PatienceModel,
    pub t_local: f64,
    pub lambda_tar: f64,
    pub seed: u64,
    pub router: Router,
    pub landing: LandingMode,
}

impl SystemConfig {
    /// Service rates derived from `delta_lambda`.
    pub fn derived(lambda_i: f64, lambda_j: f64, delta_lambda: f64) -> Result<Self> {
        let (mu_i, mu_j) = derive_service_rates(lambda_i, lambda_j, delta_lambda)?;
        let cfg = Self {
            lambda_total: lambda_i + lambda_j,
            lambda_i,
            lambda_j,
            delta_lambda,
            mu_i,
            mu_j,
            ..Self::base()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Even split of `lambda_total` with derived service rates.
    pub fn from_total(lambda_total: f64, delta_lambda: f64) -> Result<Self> {
        Self::derived(lambda_total / 2.0, lambda_total / 2.0, delta_lambda)
    }

    /// Explicit service rates; `delta_lambda` is recorded as 0.
    pub fn with_rates(lambda_i: f64, lambda_j: f64, mu_i: f64, mu_j: f64) -> Result<Self> {
        let cfg = Self {
            lambda_total: lambda_i + lambda_j,
            lambda_i,
            lambda_j,
            mu_i,
            mu_j,
            ..Self::base()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn base() -> Self {
        Self {
            lambda_total: 0.0,
            lambda_i: 0.0,
            lambda_j: 0.0,
            delta_lambda: 0.0,
            mu_i: 1.0,
            mu_j: 1.0,
            patience: PatienceModel::default(),
            t_local: 1.0,
            lambda_tar: 0.0,
            seed: 0,
            router: Router::Split,
            landing: LandingMode::Tail,
        }
    }

    pub fn patience(mut self, model: PatienceModel) -> Self {
        self.patience = model;
        self
    }

    pub fn t_local(mut self, t_local: f64) -> Self {
        self.t_local = t_local;
        self
    }

    pub fn lambda_tar(mut self, lambda_tar: f64) -> Self {
        self.lambda_tar = lambda_tar;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn router(mut self, router: Router) -> Self {
        self.router = router;
        self
    }

    pub fn landing(mut self, landing: LandingMode) -> Self {
        self.landing = landing;
        self
    }

    pub fn mu(&self, queue: usize) -> f64 {
        if queue == 0 {
            self.mu_i
        } else {
            self.mu_j
        }
    }

    pub fn lambda(&self, queue: usize) -> f64 {
        if queue == 0 {
            self.lambda_i
        } else {
            self.lambda_j
        }
    }

    /// Per-queue utilization; unstable queues are allowed and only flagged.
    pub fn utilizations(&self) -> Result<[Utilization; 2]> {
        Ok([
            utilization(self.lambda_i, 1, self.mu_i)?,
            utilization(self.lambda_j, 1, self.mu_j)?,
        ])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_total", self.lambda_total),
            ("lambda_i", self.lambda_i),
            ("lambda_j", self.lambda_j),
            ("delta_lambda", self.delta_lambda),
            ("mu_i", self.mu_i),
            ("mu_j", self.mu_j),
            ("t_local", self.t_local),
            ("lambda_tar", self.lambda_tar),
        ] {
            ensure_finite(name, v)?;
        }
        if self.lambda_i < 0.0 || self.lambda_j < 0.0 {
            return Err(invalid("lambda", "arrival rates must be non-negative"));
        }
        let sum = self.lambda_i + self.lambda_j;
        if (sum - self.lambda_total).abs() > f64::EPSILON * sum.abs().max(1.0) {
            return Err(invalid("lambda_total", "must equal lambda_i + lambda_j"));
        }
        if self.lambda_total > 0.0 && !(self.delta_lambda.abs() < self.lambda_total) {
            return Err(invalid("delta_lambda", "must lie in (-lambda_total, lambda_total)"));
        }
        if self.mu_i <= 0.0 || self.mu_j <= 0.0 {
            return Err(Error::InfeasibleRates {
                delta: self.delta_lambda,
                mu_i: self.mu_i,
                mu_j: self.mu_j,
            });
        }
        if self.t_local < 0.0 {
            return Err(invalid("t_local", "must be non-negative"));
        }
        if self.lambda_tar < 0.0 || self.lambda_tar > self.lambda_j {
            return Err(invalid("lambda_tar", "must lie in [0, lambda_j]"));
        }
        self.patience.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_rates_examples() {
        assert_eq!(derive_service_rates(4.0, 4.0, 2.0).unwrap(), (3.0, 1.0));
        assert_eq!(derive_service_rates(4.0, 4.0, 0.0).unwrap(), (2.0, 2.0));
        assert_eq!(derive_service_rates(3.0, 5.0, -1.0).unwrap(), (1.0, 3.0));
    }

    #[test]
    fn derive_rates_rejects_non_positive() {
        assert!(matches!(
            derive_service_rates(4.0, 4.0, 4.0),
            Err(Error::InfeasibleRates { .. })
        ));
        assert!(derive_service_rates(1.0, 5.0, -1.0).is_err());
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(utilization(2.0, 2, 2.0).unwrap(), Utilization { rho: 0.5, stable: true });
        assert_eq!(utilization(4.0, 2, 1.0).unwrap(), Utilization { rho: 2.0, stable: false });
        assert_eq!(utilization(0.0, 2, 1.0).unwrap(), Utilization { rho: 0.0, stable: true });
        assert!(utilization(1.0, 0, 1.0).is_err());
        assert!(utilization(1.0, 1, 0.0).is_err());
    }

    #[test]
    fn constant_patience_is_degenerate() {
        let mut rng = SimRng::new(0, 0);
        assert_eq!(sample_patience(&PatienceModel::Constant(5.0), &mut rng).unwrap(), 5.0);
        assert!(sample_patience(&PatienceModel::Constant(0.0), &mut rng).is_err());
        assert!(sample_patience(&PatienceModel::Exponential { mean: -1.0 }, &mut rng).is_err());
    }

    #[test]
    fn exponential_patience_reproducible() {
        let m = PatienceModel::Exponential { mean: 2.0 };
        let a = sample_patience(&m, &mut SimRng::new(11, 0)).unwrap();
        let b = sample_patience(&m, &mut SimRng::new(11, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn exponential_patience_mean() {
        let m = PatienceModel::Exponential { mean: 2.0 };
        let mut rng = SimRng::new(2024, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_patience(&m, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn patience_is_total_time() {
        let p = Patience::new(3.0, 1.0).unwrap();
        assert_eq!(p.remaining(1.0), 3.0);
        assert_eq!(p.remaining(2.5), 1.5);
        assert_eq!(p.consumed(2.5), 1.5);
        assert_eq!(p.expires_at(), 4.0);
        assert_eq!(p.consumed(0.5), 0.0);
    }

    #[test]
    fn config_validation() {
        let cfg = SystemConfig::from_total(8.0, 2.0).unwrap();
        assert_eq!((cfg.mu_i, cfg.mu_j), (3.0, 1.0));
        assert!(cfg.clone().lambda_tar(5.0).validate().is_err());
        assert!(cfg.clone().lambda_tar(4.0).validate().is_ok());
        assert!(SystemConfig::from_total(8.0, 8.0).is_err());
        let u = cfg.utilizations().unwrap();
        assert!(!u[0].stable && !u[1].stable);
    }

    proptest::proptest! {
        #[test]
        fn derived_rates_sum_to_half_total(li in 0.1f64..20.0, lj in 0.1f64..20.0, frac in -0.99f64..0.99) {
            let delta = if frac >= 0.0 { frac * lj } else { frac * li };
            let (mi, mj) = derive_service_rates(li, lj, delta).unwrap();
            proptest::prop_assert!((mi + mj - (li + lj) / 2.0).abs() < 1e-12);
            let (mi2, _) = derive_service_rates(li, lj, delta + 0.001).unwrap_or((mi + 0.0005, 0.0));
            proptest::prop_assert!((mi2 - mi - 0.0005).abs() < 1e-12);
        }
    }
}
