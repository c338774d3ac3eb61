//! Dense matrix-exponential oracle for the uniformized transient PMF.

use impatience_core::markov::{build_uniformized_chain, initial_distribution, transient_pmf};
use nalgebra::{DMatrix, DVector};

pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ExpmCheck {
    pub label: String,
    /// Largest entrywise gap to `pi0 exp(Q t)`.
    pub max_abs_diff: f64,
    /// `|sum(mass) + truncation_error - 1|`.
    pub normalization_gap: f64,
    pub truncation_error: f64,
    /// `t = 0` returned `pi0` bit for bit.
    pub zero_time_exact: bool,
}

impl ExpmCheck {
    pub fn passes(&self) -> bool {
        self.max_abs_diff <= 1e-6 && self.normalization_gap <= EPS && self.truncation_error <= EPS && self.zero_time_exact
    }
}

/// Generator of the two-server birth-death chain on `0..=n`, with no birth
/// out of the top state.
fn generator(lambda: f64, mu: f64, n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        if i < n {
            q[(i, i + 1)] = lambda;
        }
        if i > 0 {
            q[(i, i - 1)] = i.min(2) as f64 * mu;
        }
        let out: f64 = (0..=n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
        q[(i, i)] = -out;
    }
    q
}

#[derive(Debug, Clone, Copy)]
enum Start {
    Empty,
    Point(usize),
    /// Stationary law at a different utilization than the chain's.
    Stationary(f64),
}

fn start_vector(start: Start) -> Vec<f64> {
    match start {
        Start::Empty => vec![1.0],
        Start::Point(n) => {
            let mut v = vec![0.0; n + 1];
            v[n] = 1.0;
            v
        }
        Start::Stationary(rho) => {
            // Renormalized so the start sums to one within rounding.
            let v = initial_distribution(rho).unwrap();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        }
    }
}

pub fn uniformization_checks() -> Vec<ExpmCheck> {
    let mut out = Vec::new();
    for rho in [0.3, 0.6, 0.9] {
        for mu in [0.5, 1.0, 2.0] {
            let lambda = rho * 2.0 * mu;
            let chain = build_uniformized_chain(lambda, mu, EPS).unwrap();
            for (t, start) in [
                (0.1, Start::Empty),
                (1.0, Start::Point(5)),
                (2.5, Start::Stationary(0.5)),
                (5.0, Start::Point(2)),
            ] {
                let pi0 = start_vector(start);
                let pmf = transient_pmf(&chain, &pi0, t, EPS).unwrap();
                let n = pmf.mass.len() - 1;
                let q = generator(lambda, mu, n);
                let mut p0 = DVector::zeros(n + 1);
                for (i, x) in pi0.iter().enumerate() {
                    p0[i] = *x;
                }
                let oracle = (q * t).exp().transpose() * p0;
                let max_abs_diff = pmf
                    .mass
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (x - oracle[i]).abs())
                    .fold(0.0, f64::max);
                let zero = transient_pmf(&chain, &pi0, 0.0, EPS).unwrap();
                out.push(ExpmCheck {
                    label: format!("rho={rho} mu={mu} t={t} start={start:?}"),
                    max_abs_diff,
                    normalization_gap: (pmf.total() + pmf.truncation_error - 1.0).abs(),
                    truncation_error: pmf.truncation_error,
                    zero_time_exact: zero.mass == pi0 && zero.truncation_error == 0.0,
                });
            }
        }
    }
    out
}
