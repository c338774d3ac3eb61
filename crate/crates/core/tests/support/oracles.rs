//! Monte Carlo oracles for the closed-form Markov quantities.
//!
//! Every estimate simulates the underlying physical process directly with
//! inverse-transform exponentials, so it shares no code with the closed
//! forms under test.

use impatience_core::markov::{
    build_uniformized_chain, erlang_stats, expected_jockey_time, expected_pure_death_jockey_time,
    jockey_benefit_probability, pure_death_pmf, renege_probability, switch_outcome_probabilities, transient_pmf,
    TransientPmf,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One closed-form value against its Monte Carlo estimate.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub quantity: &'static str,
    pub label: String,
    pub closed: f64,
    pub estimate: f64,
    pub std_error: f64,
}

impl OracleCheck {
    pub fn z(&self) -> f64 {
        let d = (self.closed - self.estimate).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn passes(&self) -> bool {
        self.z() <= 3.0
    }
}

struct Sampler(ChaCha8Rng);

impl Sampler {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn exp(&mut self, rate: f64) -> f64 {
        let u: f64 = self.0.random();
        -(1.0 - u).ln() / rate
    }

    fn uniform(&mut self) -> f64 {
        self.0.random()
    }

    fn erlang(&mut self, k: u64, rate: f64) -> f64 {
        (0..k).map(|_| self.exp(rate)).sum()
    }

    /// Occupancy after time `t` of the two-server death chain from `n`.
    fn drain_for(&mut self, n: u64, mu: f64, t: f64) -> u64 {
        let mut state = n;
        let mut clock = 0.0;
        while state > 0 {
            clock += self.exp(state.min(2) as f64 * mu);
            if clock > t {
                break;
            }
            state -= 1;
        }
        state
    }

    /// Occupancy after time `t` of the infinite-server death chain from `n`.
    fn pure_death_for(&mut self, n: u64, mu: f64, t: f64) -> u64 {
        let mut state = n;
        let mut clock = 0.0;
        while state > 0 {
            clock += self.exp(state as f64 * mu);
            if clock > t {
                break;
            }
            state -= 1;
        }
        state
    }

    /// Time for the target chain, with arrivals ahead at `lambda` and two
    /// servers at `mu`, to move from `k` down to a single occupant.
    fn hit_one(&mut self, k: u64, mu: f64, lambda: f64) -> f64 {
        let mut state = k;
        let mut clock = 0.0;
        while state > 1 {
            let death = 2.0 * mu;
            let total = death + lambda;
            clock += self.exp(total);
            if self.uniform() * total < death {
                state -= 1;
            } else {
                state += 1;
            }
        }
        clock
    }

    fn draw_from(&mut self, mass: &[f64]) -> u64 {
        let total: f64 = mass.iter().sum();
        let mut u = self.uniform() * total;
        for (k, p) in mass.iter().enumerate() {
            if u < *p {
                return k as u64;
            }
            u -= p;
        }
        mass.len() as u64 - 1
    }
}

fn proportion(hits: u64, n: u64, closed: f64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    let var = (closed * (1.0 - closed)).max(p * (1.0 - p));
    (p, (var / n as f64).sqrt().max(1e-12))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt().max(1e-12))
}

pub const SAMPLES: u64 = 100_000;

pub const PMF_SAMPLES: u64 = 1_000_000;

pub fn erlang_cdf_checks() -> Vec<OracleCheck> {
    let grid = [
        (1, 1.0, 0.5),
        (1, 2.0, 1.0),
        (2, 1.0, 1.5),
        (3, 0.5, 4.0),
        (5, 2.0, 3.0),
        (5, 2.0, 1.0),
        (8, 1.0, 6.0),
        (10, 2.0, 5.0),
        (20, 4.0, 4.5),
        (40, 1.0, 45.0),
        (3, 3.0, 0.2),
    ];
    grid.iter()
        .enumerate()
        .map(|(i, &(k, mu, t))| {
            let closed = erlang_stats(k, mu, t).unwrap().cdf;
            let mut s = Sampler::new(100 + i as u64);
            let hits = (0..SAMPLES).filter(|_| s.erlang(k, mu) <= t).count() as u64;
            let (estimate, std_error) = proportion(hits, SAMPLES, closed);
            OracleCheck {
                quantity: "erlang_cdf",
                label: format!("k={k} mu={mu} t={t}"),
                closed,
                estimate,
                std_error,
            }
        })
        .collect()
}

pub fn renege_probability_checks() -> Vec<OracleCheck> {
    let grid = [
        (1, 1.0, 2.0f64.ln()),
        (1, 1.0, 0.1),
        (2, 3.0, 1.0),
        (4, 1.0, 2.0),
        (5, 2.0, 3.0),
        (6, 1.5, 2.0),
        (10, 1.0, 8.0),
        (12, 3.0, 5.0),
        (16, 1.0, 2.0),
        (30, 5.0, 6.5),
    ];
    grid.iter()
        .enumerate()
        .map(|(i, &(k, mu, t))| {
            let closed = renege_probability(k, mu, t).unwrap();
            let mut s = Sampler::new(200 + i as u64);
            let hits = (0..SAMPLES).filter(|_| s.erlang(k, mu) > t).count() as u64;
            let (estimate, std_error) = proportion(hits, SAMPLES, closed);
            OracleCheck {
                quantity: "renege_probability",
                label: format!("k={k} mu={mu} T={t:.4}"),
                closed,
                estimate,
                std_error,
            }
        })
        .collect()
}

/// The most likely survivor count at each of ten `(n, mu, t)` points.
pub fn pure_death_pmf_checks() -> Vec<OracleCheck> {
    let grid = [
        (1, 1.0, 0.5),
        (2, 1.0, 0.3),
        (3, 1.0, 0.5),
        (3, 2.0, 0.1),
        (4, 0.5, 1.0),
        (5, 1.0, 0.2),
        (6, 0.3, 2.0),
        (8, 1.0, 0.7),
        (10, 2.0, 0.05),
        (12, 0.1, 3.0),
    ];
    grid.iter()
        .enumerate()
        .map(|(i, &(n, mu, t))| {
            let pmf = pure_death_pmf(n, mu, t).unwrap();
            let k = (0..pmf.len()).fold(0, |best, k| if pmf[k] > pmf[best] { k } else { best });
            let closed = pmf[k];
            let mut s = Sampler::new(300 + i as u64);
            let hits = (0..PMF_SAMPLES).filter(|_| s.pure_death_for(n, mu, t) == k as u64).count() as u64;
            let (estimate, std_error) = proportion(hits, PMF_SAMPLES, closed);
            OracleCheck {
                quantity: "pure_death_pmf",
                label: format!("n={n} mu={mu} t={t} k={k}"),
                closed,
                estimate,
                std_error,
            }
        })
        .collect()
}

/// Pure-death mixture of jockey times: deaths of an infinite-server chain
/// for `t`, then the two-server drain down to one occupant.
pub fn pure_death_jockey_time_checks() -> Vec<OracleCheck> {
    let grid = [
        (2, 1.0, 0.0),
        (11, 5.0, 0.0),
        (3, 1.0, 0.5),
        (4, 2.0, 0.2),
        (5, 1.0, 0.1),
        (6, 0.5, 1.0),
        (8, 1.0, 0.3),
        (10, 3.0, 0.05),
        (15, 0.5, 0.4),
        (20, 1.0, 0.02),
    ];
    grid.iter()
        .enumerate()
        .map(|(i, &(n, mu, t))| {
            let closed = expected_pure_death_jockey_time(n, mu, t).unwrap();
            let mut s = Sampler::new(400 + i as u64);
            let xs: Vec<f64> = (0..SAMPLES)
                .map(|_| {
                    let k = s.pure_death_for(n, mu, t);
                    s.hit_one(k, mu, 0.0)
                })
                .collect();
            let (estimate, std_error) = mean_and_se(&xs);
            OracleCheck {
                quantity: "pure_death_jockey_time",
                label: format!("n={n} mu={mu} t={t}"),
                closed,
                estimate,
                std_error,
            }
        })
        .collect()
}

fn landing_pmf(lambda: f64, mu: f64, start: Start, t: f64) -> TransientPmf {
    let chain = build_uniformized_chain(lambda, mu, 1e-12).unwrap();
    let pi0 = match start {
        Start::Point(n) => {
            let mut v = vec![0.0; n as usize + 1];
            v[n as usize] = 1.0;
            v
        }
        Start::Stationary(rho) => impatience_core::markov::initial_distribution(rho).unwrap(),
    };
    transient_pmf(&chain, &pi0, t, 1e-12).unwrap()
}

#[derive(Debug, Clone, Copy)]
enum Start {
    Point(u64),
    Stationary(f64),
}

/// Hitting-time mixture with births ahead: the expected hitting time of one
/// occupant is exact for any `lambda_tar < 2 mu`.
pub fn expected_jockey_time_checks() -> Vec<OracleCheck> {
    let grid = [
        (0.0, 1.0, Start::Stationary(0.5), 0.0),
        (1.0, 1.0, Start::Stationary(0.5), 0.0),
        (0.6, 1.0, Start::Stationary(0.3), 1.0),
        (1.2, 1.0, Start::Point(5), 0.5),
        (0.5, 2.0, Start::Point(8), 0.3),
        (2.0, 2.5, Start::Point(3), 1.0),
        (0.0, 1.0, Start::Point(6), 0.7),
        (0.3, 0.5, Start::Point(4), 2.0),
        (1.0, 3.0, Start::Point(10), 0.2),
        (0.8, 1.0, Start::Stationary(0.4), 2.0),
    ];
    grid.iter()
        .enumerate()
        .map(|(i, &(lambda, mu, start, t))| {
            let pmf = landing_pmf(lambda, mu, start, t);
            let closed = expected_jockey_time(&pmf, mu, lambda).unwrap();
            let mut s = Sampler::new(500 + i as u64);
            let xs: Vec<f64> = (0..SAMPLES)
                .map(|_| {
                    let k = match start {
                        Start::Point(n) => s.drain_with_births(n, mu, lambda, t),
                        Start::Stationary(_) => {
                            let k0 = s.draw_from(&landing_pmf(lambda, mu, start, 0.0).mass);
                            s.drain_with_births(k0, mu, lambda, t)
                        }
                    };
                    s.hit_one(k, mu, lambda)
                })
                .collect();
            let (estimate, std_error) = mean_and_se(&xs);
            OracleCheck {
                quantity: "expected_jockey_time",
                label: format!("lambda_tar={lambda} mu={mu} start={start:?} t={t}"),
                closed,
                estimate,
                std_error,
            }
        })
        .collect()
}

impl Sampler {
    /// Occupancy after `t` of the two-server chain with births at `lambda`.
    fn drain_with_births(&mut self, n: u64, mu: f64, lambda: f64, t: f64) -> u64 {
        if lambda == 0.0 {
            return self.drain_for(n, mu, t);
        }
        let mut state = n;
        let mut clock = 0.0;
        loop {
            let death = state.min(2) as f64 * mu;
            let total = death + lambda;
            clock += self.exp(total);
            if clock > t {
                return state;
            }
            if self.uniform() * total < death {
                state -= 1;
            } else {
                state += 1;
            }
        }
    }
}

/// `(k_i, mu_i, n0, t, mu_j)`: landing distribution of a target queue that
/// drains for `t` from `n0` with no arrivals ahead.
const RACE_GRID: [(u64, f64, u64, f64, f64); 10] = [
    (1, 1.0, 3, 0.0, 1.0),
    (2, 1.0, 3, 0.5, 1.0),
    (3, 0.5, 4, 0.2, 1.0),
    (5, 1.0, 6, 1.0, 0.8),
    (5, 2.0, 8, 0.3, 1.5),
    (8, 1.0, 10, 0.5, 2.0),
    (4, 3.0, 5, 0.1, 1.0),
    (10, 1.0, 12, 2.0, 1.0),
    (1, 0.2, 6, 0.4, 1.0),
    (12, 2.0, 15, 1.0, 2.5),
];

pub fn benefit_probability_checks() -> Vec<OracleCheck> {
    RACE_GRID
        .iter()
        .enumerate()
        .map(|(i, &(k_i, mu_i, n0, t, mu_j))| {
            let pmf = landing_pmf(0.0, mu_j, Start::Point(n0), t);
            let closed = jockey_benefit_probability(k_i, mu_i, &pmf, mu_j, 0.0).unwrap();
            let mut s = Sampler::new(600 + i as u64);
            let hits = (0..SAMPLES)
                .filter(|_| {
                    let k = s.drain_for(n0, mu_j, t);
                    let jockey = s.hit_one(k, mu_j, 0.0);
                    jockey < s.erlang(k_i, mu_i)
                })
                .count() as u64;
            let (estimate, std_error) = proportion(hits, SAMPLES, closed);
            OracleCheck {
                quantity: "benefit_probability",
                label: format!("k_i={k_i} mu_i={mu_i} n0={n0} t={t} mu_j={mu_j}"),
                closed,
                estimate,
                std_error,
            }
        })
        .collect()
}

/// Switch failure and success at remaining patience `T - t0`.
pub fn switch_outcome_checks() -> Vec<OracleCheck> {
    let grid = [
        (3, 0.0, 1.0, 2.0, 0.5),
        (3, 0.5, 1.0, 1.0, 0.0),
        (4, 0.2, 1.0, 3.0, 1.0),
        (6, 1.0, 0.8, 4.0, 2.0),
        (8, 0.3, 1.5, 2.0, 0.5),
        (10, 0.5, 2.0, 2.5, 0.0),
        (5, 0.1, 1.0, 1.0, 0.3),
        (12, 2.0, 1.0, 5.0, 1.0),
        (6, 0.4, 1.0, 0.8, 0.2),
        (15, 1.0, 2.5, 3.0, 1.5),
    ];
    let mut out = Vec::new();
    for (i, &(n0, t, mu_j, patience, t0)) in grid.iter().enumerate() {
        let pmf = landing_pmf(0.0, mu_j, Start::Point(n0), t);
        let closed = switch_outcome_probabilities(&pmf, mu_j, 0.0, patience, t0).unwrap();
        let remaining = patience - t0;
        let mut s = Sampler::new(700 + i as u64);
        let fails = (0..SAMPLES)
            .filter(|_| {
                let k = s.drain_for(n0, mu_j, t);
                s.hit_one(k, mu_j, 0.0) > remaining
            })
            .count() as u64;
        let label = format!("n0={n0} t={t} mu_j={mu_j} T={patience} t0={t0}");
        let (estimate, std_error) = proportion(fails, SAMPLES, closed.fail);
        out.push(OracleCheck {
            quantity: "switch_fail",
            label: label.clone(),
            closed: closed.fail,
            estimate,
            std_error,
        });
        out.push(OracleCheck {
            quantity: "switch_success",
            label,
            closed: closed.success,
            estimate: 1.0 - estimate,
            std_error,
        });
    }
    out
}

/// All closed-form oracle checks.
pub fn all_checks() -> Vec<OracleCheck> {
    let mut v = erlang_cdf_checks();
    v.extend(renege_probability_checks());
    v.extend(pure_death_pmf_checks());
    v.extend(pure_death_jockey_time_checks());
    v.extend(expected_jockey_time_checks());
    v.extend(benefit_probability_checks());
    v.extend(switch_outcome_checks());
    v
}

/// Benefit probability with arrivals ahead of the jockey, against the
/// physical hitting-time race. The Erlang law of the jockey wait is only
/// exact without arrivals, so these gaps are reported, not asserted.
pub fn benefit_with_arrivals_gaps() -> Vec<OracleCheck> {
    [(5, 1.0, 6, 0.5, 1.0, 0.5), (8, 1.0, 10, 0.5, 2.0, 1.5), (3, 0.5, 4, 0.2, 1.0, 1.0)]
        .iter()
        .enumerate()
        .map(|(i, &(k_i, mu_i, n0, t, mu_j, lambda))| {
            let pmf = landing_pmf(lambda, mu_j, Start::Point(n0), t);
            let closed = jockey_benefit_probability(k_i, mu_i, &pmf, mu_j, lambda).unwrap();
            let mut s = Sampler::new(800 + i as u64);
            let hits = (0..SAMPLES)
                .filter(|_| {
                    let k = s.drain_with_births(n0, mu_j, lambda, t);
                    s.hit_one(k, mu_j, lambda) < s.erlang(k_i, mu_i)
                })
                .count() as u64;
            let (estimate, std_error) = proportion(hits, SAMPLES, closed);
            OracleCheck {
                quantity: "benefit_probability_with_arrivals",
                label: format!("k_i={k_i} n0={n0} lambda_tar={lambda}"),
                closed,
                estimate,
                std_error,
            }
        })
        .collect()
}
