//! Positive zeros of `J_n` and the real-axis scan behind the lower bound on
//! `|J_n|` away from its zeros.

use std::f64::consts::PI;

use serde::Serialize;

use super::bessel::{bessel_j_prime, jn, jn_nonneg};
use crate::error::{Error, Result};

const MAX_ZERO_COUNT: usize = 10_000;
const MAX_NEWTON_STEPS: usize = 50;
const ZERO_TOLERANCE: f64 = 1e-12;
const BRACKET_STEP: f64 = 0.25;

/// The first positive zeros `j_{n,1} < j_{n,2} < ...` of `J_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesselZeroTable {
    pub order: u32,
    pub zeros: Vec<f64>,
}

impl BesselZeroTable {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Zero nearest to `x`, if any.
    pub fn nearest(&self, x: f64) -> Option<f64> {
        let idx = self.zeros.partition_point(|&z| z < x);
        let below = idx.checked_sub(1).map(|i| self.zeros[i]);
        let above = self.zeros.get(idx).copied();
        match (below, above) {
            (Some(b), Some(a)) => Some(if x - b <= a - x { b } else { a }),
            (b, a) => b.or(a),
        }
    }
}

/// McMahon-type location `pi (k + (2n + 3)/4)` for `k = index - 1`; the same
/// points are the centres of the exclusion disks in the lower-bound scan.
pub fn mcmahon_guess(order: u32, index: usize) -> f64 {
    let n = order as f64;
    let beta = PI * ((index as f64 - 1.0) + (2.0 * n + 3.0) / 4.0);
    let mu = 4.0 * n * n;
    beta - (mu - 1.0) / (8.0 * beta)
}

/// First `count` positive zeros of `J_order`.
///
/// Zeros are bracketed by a sign scan starting at `max(order, 1)` (no zero
/// of `J_n` lies below `n`), then polished by safeguarded Newton steps.
pub fn bessel_zeros(order: u32, count: usize) -> Result<BesselZeroTable> {
    if count == 0 || count > MAX_ZERO_COUNT {
        return Err(Error::domain(format!(
            "zero count must be in 1..={MAX_ZERO_COUNT}, got {count}"
        )));
    }
    let mut zeros = Vec::with_capacity(count);
    let mut left = (order as f64).max(1.0);
    let mut f_left = jn_nonneg(order, left);
    while zeros.len() < count {
        let right = left + BRACKET_STEP;
        let f_right = jn_nonneg(order, right);
        if f_left == 0.0 {
            zeros.push(left);
        } else if f_left.signum() != f_right.signum() {
            let index = zeros.len() + 1;
            let guess = mcmahon_guess(order, index);
            zeros.push(refine(order, index, left, right, guess)?);
        }
        left = right;
        f_left = f_right;
    }
    zeros.truncate(count);
    Ok(BesselZeroTable { order, zeros })
}

/// Positive zeros of `J_order` not exceeding `limit`.
pub fn bessel_zeros_below(order: u32, limit: f64) -> Result<Vec<f64>> {
    let n = order as f64;
    if limit <= n {
        return Ok(Vec::new());
    }
    // zeros are more than 2.4 apart, so this overshoots the needed count
    let estimate = ((limit - n) / 2.0).ceil() as usize + 2;
    let table = bessel_zeros(order, estimate.min(MAX_ZERO_COUNT))?;
    Ok(table.zeros.into_iter().take_while(|&z| z <= limit).collect())
}

fn refine(order: u32, index: usize, mut lo: f64, mut hi: f64, guess: f64) -> Result<f64> {
    let n = order as i32;
    let f_lo = jn(n, lo);
    let mut x = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..MAX_NEWTON_STEPS {
        let f = jn(n, x);
        if f.abs() < ZERO_TOLERANCE {
            // one extra step lands on the nearest representable root
            let d = bessel_j_prime(n, x);
            let polished = x - f / d;
            if polished > lo && polished < hi && jn(n, polished).abs() <= f.abs() {
                return Ok(polished);
            }
            return Ok(x);
        }
        if f.signum() == f_lo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let d = bessel_j_prime(n, x);
        let step = x - f / d;
        x = if d != 0.0 && step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::ZeroNotConverged { order, index })
}

/// Result of [`lemma_lower_bound_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundScan {
    /// Minimum of `|J_n(x)| sqrt(x)` outside the exclusion intervals.
    pub min_scaled: f64,
    pub argmin: f64,
    /// Inner cutoff `R0` actually used.
    pub inner_cutoff: f64,
}

const SCAN_STEP: f64 = 1e-3;

/// Inner cutoff for the scan: the first exclusion-interval left edge that
/// is at least `max(5, (4n^2 - 1)/pi)`. Below that radius the asymptotic
/// zeros drift out of the `pi/6` disks.
pub fn lemma_inner_cutoff(order: u32) -> f64 {
    let n = order as f64;
    let floor = 5.0f64.max((4.0 * n * n - 1.0) / PI);
    let offset = (2.0 * n + 3.0) / 4.0;
    // centre_k - pi/6 >= floor  <=>  k >= (floor + pi/6)/pi - offset
    let k = ((floor + PI / 6.0) / PI - offset).ceil().max(0.0);
    PI * (k + offset) - PI / 6.0
}

/// Scans `|J_n(x)| sqrt(x)` on `[R0, x_max]` with the open intervals of radius
/// `pi/6` around `pi (k + (2n + 3)/4)` removed, returning the minimum.
pub fn lemma_lower_bound_scan(order: u32, x_max: f64) -> Result<LowerBoundScan> {
    if !(x_max >= 20.0) || !x_max.is_finite() {
        return Err(Error::domain(format!("x_max must be finite and >= 20, got {x_max}")));
    }
    let r0 = lemma_inner_cutoff(order);
    if r0 >= x_max {
        return Err(Error::domain(format!(
            "inner cutoff {r0:.3} for order {order} exceeds x_max = {x_max}"
        )));
    }
    let offset = (2.0 * order as f64 + 3.0) / 4.0;
    let radius = PI / 6.0;
    let first_k = ((r0 + radius) / PI - offset).round().max(0.0) as i64;

    let mut best = LowerBoundScan {
        min_scaled: f64::INFINITY,
        argmin: r0,
        inner_cutoff: r0,
    };
    let mut visit = |x: f64| {
        let v = jn_nonneg(order, x).abs() * x.sqrt();
        if v < best.min_scaled {
            best.min_scaled = v;
            best.argmin = x;
        }
    };

    // admissible pieces are the gaps [c_k + r, c_{k+1} - r] between disks
    let mut k = first_k;
    let mut start = r0 + 2.0 * radius; // right edge of the disk whose left edge is r0
    loop {
        let next_centre = PI * ((k + 1) as f64 + offset);
        let end = (next_centre - radius).min(x_max);
        if start >= x_max {
            break;
        }
        if end > start {
            let steps = ((end - start) / SCAN_STEP).ceil() as usize;
            for i in 0..=steps {
                visit(start + (end - start) * i as f64 / steps as f64);
            }
        }
        start = next_centre + radius;
        k += 1;
    }
    visit(r0);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_zeros_of_j0_j1() {
        let t0 = bessel_zeros(0, 3).unwrap();
        assert!((t0.zeros[0] - 2.404825557695773).abs() < 1e-12);
        let t1 = bessel_zeros(1, 1).unwrap();
        assert!((t1.zeros[0] - 3.831705970207512).abs() < 1e-12);
    }

    #[test]
    fn count_bounds() {
        assert!(bessel_zeros(0, 0).is_err());
        assert!(bessel_zeros(0, MAX_ZERO_COUNT + 1).is_err());
    }

    #[test]
    fn many_zeros_stay_on_root_and_spacing_tends_to_pi() {
        let t = bessel_zeros(3, 400).unwrap();
        for z in &t.zeros {
            assert!(jn(3, *z).abs() < ZERO_TOLERANCE);
        }
        let dev: Vec<f64> = t.zeros.windows(2).map(|w| (w[1] - w[0] - PI).abs()).collect();
        for w in dev[50..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(dev[dev.len() - 1] < 1e-4);
    }

    #[test]
    fn zeros_below_limit() {
        let z = bessel_zeros_below(2, 20.0).unwrap();
        assert_eq!(z.len(), 5);
        assert!(z.iter().all(|&v| v <= 20.0));
        assert!(bessel_zeros_below(30, 20.0).unwrap().is_empty());
    }

    #[test]
    fn nearest_zero_lookup() {
        let t = bessel_zeros(0, 5).unwrap();
        assert_eq!(t.nearest(0.0), Some(t.zeros[0]));
        assert_eq!(t.nearest(5.6), Some(t.zeros[1]));
        assert_eq!(t.nearest(1e3), Some(t.zeros[4]));
    }

    #[test]
    fn cutoff_is_a_disk_edge() {
        for n in 0..12 {
            let r0 = lemma_inner_cutoff(n);
            let k = (r0 + PI / 6.0) / PI - (2.0 * n as f64 + 3.0) / 4.0;
            assert!((k - k.round()).abs() < 1e-9);
            assert!(r0 >= 5.0);
        }
    }

    #[test]
    fn scan_rejects_short_range() {
        assert!(lemma_lower_bound_scan(0, 10.0).is_err());
        assert!(lemma_lower_bound_scan(20, 100.0).is_err());
    }

    #[test]
    fn scan_minimum_is_positive_for_j0() {
        let s = lemma_lower_bound_scan(0, 200.0).unwrap();
        assert!(s.min_scaled > 0.3);
        assert!(s.argmin >= s.inner_cutoff && s.argmin <= 200.0);
    }

    #[test]
    fn zeros_of_consecutive_orders_interlace() {
        let tables: Vec<_> = (0..=11).map(|n| bessel_zeros(n, 21).unwrap().zeros).collect();
        for n in 0..=10 {
            let (a, b) = (&tables[n], &tables[n + 1]);
            for k in 0..20 {
                assert!(a[k] < b[k] && b[k] < a[k + 1], "n={n} k={k}");
            }
        }
    }
}
