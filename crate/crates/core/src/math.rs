//! Special functions evaluated in log space.
//!
//! `core` has no transcendental float methods, so everything routes through
//! `libm`. The same code path is used with and without `std`, which keeps
//! seeded runs bit-identical across both.

pub use libm::{exp, expm1, fabs, floor, log, log1p, pow, sqrt};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `ln n!`
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + log1p(exp(lo - hi))
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

fn iteration_cap(a: f64) -> usize {
    1000 + (100.0 * sqrt(a)) as usize
}

/// `ln(x^a e^-x / Γ(a))`, the common prefactor of both incomplete gamma forms.
fn ln_gamma_prefactor(a: f64, x: f64) -> f64 {
    a * log(x) - x - ln_gamma(a)
}

/// Series for `P(a, x)`, valid for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..iteration_cap(a) {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if fabs(term) < fabs(sum) * EPS {
            break;
        }
    }
    sum * exp(ln_gamma_prefactor(a, x))
}

/// Modified Lentz continued fraction for `Q(a, x)`, valid for `x >= a + 1`.
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=iteration_cap(a) {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if fabs(delta - 1.0) < EPS {
            break;
        }
    }
    exp(ln_gamma_prefactor(a, x)) * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x).min(1.0)
    } else {
        (1.0 - gamma_q_fraction(a, x)).clamp(0.0, 1.0)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`, accurate in
/// the upper tail.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        1.0
    } else if x == f64::INFINITY {
        0.0
    } else if x < a + 1.0 {
        (1.0 - gamma_p_series(a, x)).clamp(0.0, 1.0)
    } else {
        gamma_q_fraction(a, x).min(1.0)
    }
}

/// Upper binomial tail `Pr{Bin(n, p) >= k}`, summed in log space.
pub fn binomial_upper_tail(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_p = log(p);
    let ln_q = log1p(-p);
    // Sum the shorter side and complement if that is the lower tail.
    let upper_len = n - k + 1;
    let (lo, hi, complement) = if upper_len <= k {
        (k, n, false)
    } else {
        (0, k - 1, true)
    };
    let mut acc = f64::NEG_INFINITY;
    for j in lo..=hi {
        let term = ln_binomial(n, j) + j as f64 * ln_p + (n - j) as f64 * ln_q;
        acc = log_add_exp(acc, term);
    }
    let side = exp(acc).min(1.0);
    if complement {
        1.0 - side
    } else {
        side
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_p_matches_exponential_and_erlang_closed_forms() {
        // a = 1 is the exponential CDF.
        for &x in &[0.1, 0.5, 1.0, 2.0, 7.5] {
            assert!((gamma_p(1.0, x) - (1.0 - exp(-x))).abs() < 1e-14);
        }
        // Integer a: P(k, x) = 1 - sum_{j<k} e^-x x^j / j!
        for k in 1..12u32 {
            for &x in &[0.3, 2.0, 9.0, 20.0] {
                let mut tail = 0.0;
                let mut term = exp(-x);
                for j in 0..k {
                    if j > 0 {
                        term *= x / j as f64;
                    }
                    tail += term;
                }
                assert!((gamma_p(k as f64, x) - (1.0 - tail)).abs() < 1e-12, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn gamma_p_and_q_complement() {
        for &a in &[0.5, 3.0, 40.0, 1e4, 1e6] {
            for &f in &[0.5, 0.99, 1.0, 1.01, 2.0] {
                let x = a * f;
                let s = gamma_p(a, x) + gamma_q(a, x);
                assert!((s - 1.0).abs() < 1e-9, "a={a} x={x} s={s}");
            }
        }
    }

    #[test]
    fn gamma_p_large_shape_is_centered() {
        // Median of Gamma(a) is close to a - 1/3.
        let a = 1e6;
        let p = gamma_p(a, a - 1.0 / 3.0);
        assert!((p - 0.5).abs() < 1e-3, "{p}");
        assert!(gamma_p(a, a * 0.9) < 1e-100);
        assert!(gamma_q(a, a * 1.1) < 1e-100);
    }

    #[test]
    fn binomial_tail_edges() {
        assert_eq!(binomial_upper_tail(5, 0.3, 0), 1.0);
        assert_eq!(binomial_upper_tail(5, 0.3, 6), 0.0);
        assert!((binomial_upper_tail(3, 0.5, 3) - 0.125).abs() < 1e-15);
        assert!((binomial_upper_tail(3, 0.5, 1) - 0.875).abs() < 1e-15);
        assert!((binomial_upper_tail(10, 0.2, 2) - 0.6241903616).abs() < 1e-9);
    }

    #[test]
    fn sigmoid_is_symmetric_and_saturates() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert_eq!(sigmoid(1e4), 1.0);
        assert_eq!(sigmoid(-1e4), 0.0);
    }
}
