//! The closed-form "knowledge" feed.
//!
//! Waiting behind `k` exponential services is Erlang(`k`, `mu`). For a jockey
//! the target queue is modelled as a two-server birth-death chain with births
//! `lambda_tar` (arrivals that get ahead of the jockey) and deaths
//! `min(n, 2) mu`; its transient occupancy is computed by uniformization and
//! the wait after landing at position `k` is Erlang(`k - 1`, `2 mu - lambda_tar`)
//! for `k >= 2` and zero otherwise.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::math::{binomial_upper_tail, exp, expm1, gamma_p, gamma_q, ln_binomial, ln_factorial, ln_gamma, log};
use crate::quadrature::adaptive_simpson;

/// Default tail tolerance for state and Poisson-series truncation.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Tail mass left out of [`initial_distribution`].
const STATIONARY_TAIL: f64 = 1e-15;

/// Longest uniformization series we are willing to walk (`q t`).
const MAX_QT: f64 = 1e5;

/// Largest state space the transient solver grows to.
const MAX_STATES: usize = 1 << 20;

const INITIAL_STATES: usize = 16;

fn check_rate(name: &'static str, rate: f64) -> Result<()> {
    ensure_finite(name, rate)?;
    if rate <= 0.0 {
        return Err(invalid(name, "rate must be positive"));
    }
    Ok(())
}

fn check_time(name: &'static str, t: f64) -> Result<()> {
    ensure_finite(name, t)?;
    if t < 0.0 {
        return Err(invalid(name, "time must be non-negative"));
    }
    Ok(())
}

/// Remaining wait behind `k` jobs served at rate `mu`: Erlang(`k`, `mu`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangWait {
    pub k: u64,
    pub mu: f64,
}

impl ErlangWait {
    pub fn mean(&self) -> f64 {
        self.k as f64 / self.mu
    }

    /// Density; zero everywhere for the `k = 0` point mass.
    pub fn pdf(&self, t: f64) -> f64 {
        match self.k {
            0 => 0.0,
            _ if t < 0.0 => 0.0,
            1 => self.mu * exp(-self.mu * t),
            k => {
                let k = k as f64;
                exp(k * log(self.mu) + (k - 1.0) * log(t) - self.mu * t - ln_gamma(k))
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if self.k == 0 {
            1.0
        } else {
            gamma_p(self.k as f64, self.mu * t)
        }
    }

    /// `Pr{W > t}`, computed directly in the upper tail.
    pub fn sf(&self, t: f64) -> f64 {
        if t < 0.0 {
            1.0
        } else if self.k == 0 {
            0.0
        } else {
            gamma_q(self.k as f64, self.mu * t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangStats {
    pub mean: f64,
    pub pdf: f64,
    pub cdf: f64,
}

pub fn erlang_stats(k: u64, mu: f64, t: f64) -> Result<ErlangStats> {
    check_rate("mu", mu)?;
    check_time("t", t)?;
    let w = ErlangWait { k, mu };
    Ok(ErlangStats {
        mean: w.mean(),
        pdf: w.pdf(t),
        cdf: w.cdf(t),
    })
}

/// `Pr{W(k) > T}`: probability the wait outlasts the patience budget.
pub fn renege_probability(k: u64, mu: f64, patience: f64) -> Result<f64> {
    check_rate("mu", mu)?;
    check_time("T", patience)?;
    Ok(ErlangWait { k, mu }.sf(patience))
}

/// `F_W(T - t0) = Pr{W(k) <= T - t0}` for a tenant that stays at elapsed
/// time `t0`. Exhausted patience (`t0 >= T`) gives 0.
pub fn renege_fail_probability(k: u64, mu: f64, patience: f64, t0: f64) -> Result<f64> {
    check_rate("mu", mu)?;
    check_time("T", patience)?;
    check_time("t0", t0)?;
    if t0 >= patience {
        return Ok(0.0);
    }
    Ok(ErlangWait { k, mu }.cdf(patience - t0))
}

/// Complement of [`renege_fail_probability`]: staying misses the deadline.
pub fn stay_deadline_miss_probability(k: u64, mu: f64, patience: f64, t0: f64) -> Result<f64> {
    check_rate("mu", mu)?;
    check_time("T", patience)?;
    check_time("t0", t0)?;
    if t0 >= patience {
        return Ok(1.0);
    }
    Ok(ErlangWait { k, mu }.sf(patience - t0))
}

/// Binomial(`n`, `e^{-mu t}`) survivors of a pure-death process.
pub fn pure_death_pmf(n: u64, mu: f64, t: f64) -> Result<Vec<f64>> {
    check_rate("mu", mu)?;
    check_time("t", t)?;
    let mut mass = vec![0.0; n as usize + 1];
    if t == 0.0 {
        mass[n as usize] = 1.0;
        return Ok(mass);
    }
    let ln_survive = -mu * t;
    let ln_die = log(-expm1(-mu * t));
    for k in 0..=n {
        let ln_term = ln_binomial(n, k) + k as f64 * ln_survive + (n - k) as f64 * ln_die;
        mass[k as usize] = exp(ln_term);
    }
    Ok(mass)
}

/// `(n - 1)/(2 mu)` for `n >= 2`, zero for `n < 2` (empty sum).
pub fn pure_death_jockey_time(n: u64, mu: f64) -> Result<f64> {
    check_rate("mu", mu)?;
    Ok(if n >= 2 { (n - 1) as f64 / (2.0 * mu) } else { 0.0 })
}

pub fn expected_pure_death_jockey_time(n: u64, mu: f64, t: f64) -> Result<f64> {
    let pmf = pure_death_pmf(n, mu, t)?;
    let mut acc = 0.0;
    for (k, p) in pmf.iter().enumerate() {
        acc += p * pure_death_jockey_time(k as u64, mu)?;
    }
    Ok(acc)
}

/// Uniformized two-server birth-death chain of the target queue.
///
/// The one-step matrix is tri-diagonal with `P[n][n+1] = lambda_tar/q`,
/// `P[n][n-1] = min(n, 2) mu / q` and the rest on the diagonal. States are
/// truncated at `n_max`; [`UniformizedChain::matrix`] reflects the upward
/// move at the boundary so rows stay stochastic, while [`transient_pmf`]
/// lets that mass leak and reports it as truncation error.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformizedChain {
    pub lambda_tar: f64,
    pub mu: f64,
    pub q: f64,
    pub n_max: usize,
    pub eps: f64,
}

impl UniformizedChain {
    pub const SERVERS: u32 = 2;

    pub fn death_rate(&self, n: usize) -> f64 {
        n.min(Self::SERVERS as usize) as f64 * self.mu
    }

    pub fn up(&self, _n: usize) -> f64 {
        self.lambda_tar / self.q
    }

    pub fn down(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.death_rate(n) / self.q
        }
    }

    pub fn stay(&self, n: usize) -> f64 {
        1.0 - (self.lambda_tar + self.death_rate(n)) / self.q
    }

    /// Dense `(n_max + 1)^2` one-step matrix, row-major.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_max;
        let mut p = vec![vec![0.0; n + 1]; n + 1];
        for (i, row) in p.iter_mut().enumerate() {
            if i > 0 {
                row[i - 1] = self.down(i);
            }
            if i < n {
                row[i + 1] = self.up(i);
                row[i] = self.stay(i);
            } else {
                row[i] = 1.0 - self.down(i);
            }
        }
        p
    }

    /// One leaky step `v P` on states `0..v.len()`; returns the mass pushed
    /// past the last state.
    fn step(&self, v: &[f64], out: &mut [f64]) -> f64 {
        let n = v.len() - 1;
        let up = self.up(0);
        for k in 0..=n {
            let mut x = v[k] * self.stay(k);
            if k > 0 {
                x += v[k - 1] * up;
            }
            if k < n {
                x += v[k + 1] * self.down(k + 1);
            }
            out[k] = x;
        }
        v[n] * up
    }

    fn with_states(&self, n_max: usize) -> Self {
        Self {
            n_max,
            ..self.clone()
        }
    }
}

/// Stationary tail mass beyond `n` of the two-server chain at utilization `rho`.
fn stationary_tail(rho: f64, n: usize) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let p0 = 1.0 / (1.0 + 2.0 * rho + 2.0 * rho * rho / (1.0 - rho));
    2.0 * p0 * exp((n as f64 + 1.0) * log(rho)) / (1.0 - rho)
}

pub fn build_uniformized_chain(lambda_tar: f64, mu: f64, eps: f64) -> Result<UniformizedChain> {
    ensure_finite("lambda_tar", lambda_tar)?;
    check_rate("mu", mu)?;
    if lambda_tar < 0.0 {
        return Err(invalid("lambda_tar", "must be non-negative"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", "must lie in (0, 1)"));
    }
    if lambda_tar >= 2.0 * mu {
        return Err(Error::UnboundedGrowth {
            lambda_tar,
            two_mu: 2.0 * mu,
        });
    }
    let rho = lambda_tar / (2.0 * mu);
    let mut n_max = INITIAL_STATES;
    while stationary_tail(rho, n_max) >= eps {
        n_max *= 2;
    }
    Ok(UniformizedChain {
        lambda_tar,
        mu,
        q: lambda_tar + 2.0 * mu,
        n_max,
        eps,
    })
}

/// Stationary two-server occupancy at utilization `rho`:
/// `pi_0 = (1 + 2 rho + 2 rho^2/(1 - rho))^-1`, `pi_n = 2 rho^n pi_0`.
pub fn initial_distribution(rho: f64) -> Result<Vec<f64>> {
    ensure_finite("rho", rho)?;
    if rho < 0.0 {
        return Err(invalid("rho", "must be non-negative"));
    }
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }
    let p0 = 1.0 / (1.0 + 2.0 * rho + 2.0 * rho * rho / (1.0 - rho));
    let mut mass = vec![p0];
    if rho == 0.0 {
        return Ok(mass);
    }
    let mut n = 1;
    loop {
        mass.push(2.0 * exp(n as f64 * log(rho)) * p0);
        if stationary_tail(rho, n) < STATIONARY_TAIL {
            break;
        }
        n += 1;
    }
    Ok(mass)
}

/// Truncated occupancy PMF of the target queue at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientPmf {
    pub t: f64,
    pub mass: Vec<f64>,
    /// Upper bound on the probability mass not represented in `mass`.
    pub truncation_error: f64,
}

impl TransientPmf {
    pub fn point_mass(k: usize) -> Self {
        let mut mass = vec![0.0; k + 1];
        mass[k] = 1.0;
        Self {
            t: 0.0,
            mass,
            truncation_error: 0.0,
        }
    }

    pub fn from_mass(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() || mass.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(invalid("pmf", "entries must be finite and non-negative"));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("pmf", alloc::format!("must sum to 1, got {total}")));
        }
        Ok(Self {
            t: 0.0,
            mass,
            truncation_error: 0.0,
        })
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mass.iter().copied().enumerate()
    }
}

/// Poisson mixture `sum_m e^{-qt} (qt)^m/m! (pi0 P^m)`.
///
/// The series stops once the accumulated Poisson weight reaches `1 - eps`;
/// the state space doubles until the mass leaking past `n_max` is below
/// `eps`. `t = 0` returns `pi0` unchanged.
pub fn transient_pmf(chain: &UniformizedChain, pi0: &[f64], t: f64, eps: f64) -> Result<TransientPmf> {
    check_time("t", t)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", "must lie in (0, 1)"));
    }
    if pi0.is_empty() || pi0.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(invalid("pi0", "entries must be finite and non-negative"));
    }
    let total: f64 = pi0.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid("pi0", alloc::format!("must sum to 1, got {total}")));
    }
    if t == 0.0 {
        return Ok(TransientPmf {
            t,
            mass: pi0.to_vec(),
            truncation_error: 0.0,
        });
    }
    let qt = chain.q * t;
    if qt > MAX_QT {
        return Err(Error::SeriesOverflow(qt));
    }
    let mut n_max = chain.n_max.max(pi0.len() - 1);
    loop {
        let (mass, poisson_rest, leaked) = uniformize(&chain.with_states(n_max), pi0, qt, eps);
        if leaked < eps || n_max >= MAX_STATES {
            let truncation_error = (poisson_rest + leaked).max(0.0);
            return Ok(TransientPmf {
                t,
                mass,
                truncation_error,
            });
        }
        n_max *= 2;
    }
}

/// Returns `(mass, 1 - sum of Poisson weights, weighted leaked mass)`.
fn uniformize(chain: &UniformizedChain, pi0: &[f64], qt: f64, eps: f64) -> (Vec<f64>, f64, f64) {
    let n = chain.n_max;
    let mut v = vec![0.0; n + 1];
    v[..pi0.len()].copy_from_slice(pi0);
    let mut next = vec![0.0; n + 1];
    let mut result = vec![0.0; n + 1];
    let ln_qt = log(qt);
    let mut cum_weight = 0.0;
    let mut leaked_weighted = 0.0;
    let mut leaked = 0.0;
    let mut m: u64 = 0;
    loop {
        let w = exp(-qt + m as f64 * ln_qt - ln_factorial(m));
        if w > 0.0 {
            for (r, x) in result.iter_mut().zip(&v) {
                *r += w * x;
            }
            cum_weight += w;
            leaked_weighted += w * leaked;
        }
        if m as f64 >= qt && 1.0 - cum_weight < eps {
            break;
        }
        leaked += chain.step(&v, &mut next);
        core::mem::swap(&mut v, &mut next);
        m += 1;
    }
    (result, 1.0 - cum_weight, leaked_weighted)
}

/// Wait after landing at position `k` in the target queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JockeyWaitDistribution {
    pub k: u64,
    pub mu: f64,
    pub lambda_tar: f64,
}

impl JockeyWaitDistribution {
    pub fn new(k: u64, mu: f64, lambda_tar: f64) -> Result<Self> {
        check_rate("mu", mu)?;
        ensure_finite("lambda_tar", lambda_tar)?;
        if lambda_tar < 0.0 {
            return Err(invalid("lambda_tar", "must be non-negative"));
        }
        if 2.0 * mu <= lambda_tar {
            return Err(Error::UnboundedGrowth {
                lambda_tar,
                two_mu: 2.0 * mu,
            });
        }
        Ok(Self { k, mu, lambda_tar })
    }

    pub fn is_point_mass(&self) -> bool {
        self.k <= 1
    }

    /// Erlang shape `k - 1`.
    pub fn shape(&self) -> u64 {
        self.k.saturating_sub(1)
    }

    /// Erlang rate `2 mu - lambda_tar`.
    pub fn rate(&self) -> f64 {
        2.0 * self.mu - self.lambda_tar
    }

    pub fn mean(&self) -> f64 {
        self.shape() as f64 / self.rate()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if self.is_point_mass() {
            1.0
        } else {
            gamma_p(self.shape() as f64, self.rate() * x)
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x < 0.0 {
            1.0
        } else if self.is_point_mass() {
            0.0
        } else {
            gamma_q(self.shape() as f64, self.rate() * x)
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            0.0
        } else {
            ErlangWait {
                k: self.shape(),
                mu: self.rate(),
            }
            .pdf(x)
        }
    }
}

/// `(k - 1)/(2 mu - lambda_tar)` for `k >= 2`, zero for `k <= 1`.
pub fn jockey_wait_closed_form(k: u64, mu: f64, lambda_tar: f64) -> Result<f64> {
    Ok(JockeyWaitDistribution::new(k, mu, lambda_tar)?.mean())
}

pub fn expected_jockey_time(pmf: &TransientPmf, mu: f64, lambda_tar: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (k, p) in pmf.iter() {
        acc += p * jockey_wait_closed_form(k as u64, mu, lambda_tar)?;
    }
    Ok(acc)
}

/// `Pr{X < Y}` for `X ~ Erlang(a, beta)`, `Y ~ Erlang(b, alpha)`, `a, b >= 1`:
/// at least `a` of the first `a + b - 1` events of the merged Poisson race
/// belong to `X`.
fn erlang_race(a: u64, beta: f64, b: u64, alpha: f64) -> f64 {
    binomial_upper_tail(a + b - 1, beta / (alpha + beta), a)
}

fn benefit_term(k_i: u64, mu_i: f64, jockey: &JockeyWaitDistribution) -> f64 {
    if k_i == 0 {
        0.0
    } else if jockey.is_point_mass() {
        1.0
    } else {
        erlang_race(jockey.shape(), jockey.rate(), k_i, mu_i)
    }
}

/// `sum_k pmf[k] Pr{T_jockey(k) < W_i(k_i)}`.
///
/// `k_i` is the backlog ahead in the origin queue, the mixture index is the
/// landing position in the target queue.
pub fn jockey_benefit_probability(
    k_i: u64,
    mu_i: f64,
    pmf: &TransientPmf,
    mu_j: f64,
    lambda_tar: f64,
) -> Result<f64> {
    check_rate("mu_i", mu_i)?;
    let mut acc = 0.0;
    for (k, p) in pmf.iter() {
        if p == 0.0 {
            continue;
        }
        let jockey = JockeyWaitDistribution::new(k as u64, mu_j, lambda_tar)?;
        acc += p * benefit_term(k_i, mu_i, &jockey);
    }
    Ok(acc)
}

/// Same quantity as [`jockey_benefit_probability`], by adaptive quadrature of
/// `int f_W(u) G_k(u) du` (absolute tolerance `tol` per mixture component).
pub fn jockey_benefit_probability_quadrature(
    k_i: u64,
    mu_i: f64,
    pmf: &TransientPmf,
    mu_j: f64,
    lambda_tar: f64,
    tol: f64,
) -> Result<f64> {
    check_rate("mu_i", mu_i)?;
    let wait = ErlangWait { k: k_i, mu: mu_i };
    let mut acc = 0.0;
    for (k, p) in pmf.iter() {
        if p == 0.0 {
            continue;
        }
        let jockey = JockeyWaitDistribution::new(k as u64, mu_j, lambda_tar)?;
        let term = if k_i == 0 {
            0.0
        } else if jockey.is_point_mass() {
            1.0
        } else {
            let kf = k_i as f64;
            let upper = (kf + 40.0 * crate::math::sqrt(kf) + 40.0) / mu_i;
            // Fixed panels first, so a sparse initial sampling of a long
            // mostly-flat range cannot fake convergence.
            const PANELS: usize = 64;
            let width = upper / PANELS as f64;
            let integrand = |u: f64| wait.pdf(u) * jockey.cdf(u);
            (0..PANELS)
                .map(|i| {
                    let a = i as f64 * width;
                    adaptive_simpson(integrand, a, a + width, tol / PANELS as f64)
                })
                .sum()
        };
        acc += p * term;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchOutcome {
    pub fail: f64,
    pub success: f64,
}

/// Probability that a jockey at elapsed `t0` does (not) reach service within
/// the remaining patience `T - t0`.
pub fn switch_outcome_probabilities(
    pmf: &TransientPmf,
    mu_j: f64,
    lambda_tar: f64,
    patience: f64,
    t0: f64,
) -> Result<SwitchOutcome> {
    check_time("T", patience)?;
    check_time("t0", t0)?;
    let remaining = patience - t0;
    if remaining <= 0.0 {
        // Still validate the rate parameters.
        JockeyWaitDistribution::new(0, mu_j, lambda_tar)?;
        return Ok(SwitchOutcome {
            fail: 1.0,
            success: 0.0,
        });
    }
    let mut fail = 0.0;
    for (k, p) in pmf.iter() {
        if p == 0.0 {
            continue;
        }
        fail += p * JockeyWaitDistribution::new(k as u64, mu_j, lambda_tar)?.sf(remaining);
    }
    let fail = fail.clamp(0.0, 1.0);
    Ok(SwitchOutcome {
        fail,
        success: 1.0 - fail,
    })
}
