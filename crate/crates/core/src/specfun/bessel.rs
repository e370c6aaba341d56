//! Bessel functions of the first kind, integer order, real argument.
//!
//! Three regimes are used:
//!
//! * ascending power series for `x < 1`,
//! * Hankel's asymptotic expansion once `x >= max(25, n^2)` and the
//!   expansion actually converges to below `1e-17`,
//! * Miller's backward recurrence normalised with
//!   `J_0 + 2 (J_2 + J_4 + ...) = 1` everywhere else.
//!
//! The backward recurrence is accurate to a few ulps in absolute terms for
//! any argument, so it doubles as the fallback when the asymptotic series
//! stalls.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 1.0;
const ASYMPTOTIC_MIN: f64 = 25.0;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// `J_n(x)` for any integer order and finite real `x`.
pub fn bessel_j(order: i32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("bessel_j argument must be finite, got {x}")));
    }
    Ok(jn(order, x))
}

/// Unchecked `J_n(x)`; non-finite input yields NaN.
pub fn jn(order: i32, x: f64) -> f64 {
    let n = order.unsigned_abs();
    let mut value = jn_nonneg(n, x.abs());
    // J_{-n} = (-1)^n J_n and J_n(-x) = (-1)^n J_n(x)
    let odd = n % 2 == 1;
    if odd && order < 0 {
        value = -value;
    }
    if odd && x < 0.0 {
        value = -value;
    }
    value
}

/// `J_n(x)` for `n >= 0`, `x >= 0`.
pub(crate) fn jn_nonneg(n: u32, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_LIMIT {
        return series(n, x);
    }
    let nf = n as f64;
    if x >= ASYMPTOTIC_MIN && x >= nf * nf {
        if let Some(v) = hankel_asymptotic(n, x) {
            return v;
        }
    }
    miller(n, x)
}

/// Ascending series `sum_m (-1)^m (x/2)^(2m+n) / (m! (m+n)!)`.
fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= half / k as f64;
        if lead < 1e-300 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    for m in 1..60u32 {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Hankel expansion `sqrt(2/(pi x)) (P cos chi - Q sin chi)`. Returns `None`
/// if the terms start growing before reaching `1e-17`.
fn hankel_asymptotic(n: u32, x: f64) -> Option<f64> {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    let mut converged = false;
    for k in 1..200u32 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * x);
        let mag = term.abs();
        if mag > prev {
            break;
        }
        // P collects even k with alternating sign, Q the odd ones.
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < 1e-17 {
            converged = true;
            break;
        }
        prev = mag;
    }
    if !converged {
        return None;
    }
    // chi = x - pi/4 - n pi/2, reduced via n mod 4
    let (s, c) = x.sin_cos();
    let c0 = (c + s) * FRAC_1_SQRT_2;
    let s0 = (s - c) * FRAC_1_SQRT_2;
    let (cos_chi, sin_chi) = match n % 4 {
        0 => (c0, s0),
        1 => (s0, -c0),
        2 => (-c0, -s0),
        _ => (-s0, c0),
    };
    Some((2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi))
}

fn miller_start(n: u32, x: f64) -> u32 {
    let top = (n as f64).max(x);
    let m = top + 20.0 + (60.0 * top).sqrt();
    let m = m.ceil() as u32;
    m + (m % 2)
}

/// Miller's backward recurrence with the even-sum normalisation.
fn miller(n: u32, x: f64) -> f64 {
    let m = miller_start(n, x);
    let two_over_x = 2.0 / x;
    let mut above = 0.0; // J_{k+1}
    let mut current = 1e-30; // J_k
    let mut even_sum = 0.0;
    let mut answer = 0.0;
    for k in (1..=m).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            answer *= RESCALE_BY;
        }
        // `current` now holds J_{k-1}
        if (k - 1) % 2 == 0 && k > 1 {
            even_sum += current;
        }
        if k - 1 == n {
            answer = current;
        }
    }
    let norm = 2.0 * even_sum + current;
    answer / norm
}

/// `J_0(x), ..., J_{max_order}(x)` from one backward sweep (`x >= 0`).
pub fn bessel_j_orders(max_order: u32, x: f64) -> Vec<f64> {
    let len = max_order as usize + 1;
    if x == 0.0 {
        let mut out = vec![0.0; len];
        out[0] = 1.0;
        return out;
    }
    if x < SERIES_LIMIT || x >= ASYMPTOTIC_MIN.max((max_order as f64).powi(2)) {
        return (0..=max_order).map(|n| jn_nonneg(n, x)).collect();
    }
    let m = miller_start(max_order, x);
    let two_over_x = 2.0 / x;
    let mut out = vec![0.0; len];
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut even_sum = 0.0;
    for k in (1..=m).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            for v in out.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
        let idx = (k - 1) as usize;
        if idx % 2 == 0 && idx > 0 {
            even_sum += current;
        }
        if idx < len {
            out[idx] = current;
        }
    }
    let norm = 2.0 * even_sum + current;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Derivative via `J_n' = (J_{n-1} - J_{n+1}) / 2`.
pub fn bessel_j_prime(order: i32, x: f64) -> f64 {
    0.5 * (jn(order - 1, x) - jn(order + 1, x))
}
