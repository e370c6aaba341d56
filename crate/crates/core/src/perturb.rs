//! Controlled range violations for negative controls.
//!
//! A perturbation adds `2 Re(h(rho) e^{i n psi})` to a circular sinogram
//! (`h` itself for `n = 0`), so exactly the harmonics `+-n` change by `h`.
//! Each family targets one condition; `h` is then corrected by a smooth
//! combination of the other conditions' kernels so that their discrete
//! functionals vanish on `h`, leaving the remaining conditions untouched up
//! to rounding.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, RadialProfile, Sinogram, SinogramKind, Twiddles};
use crate::specfun::{bessel_zeros, jn};

/// Centre and half-width of the support-violating bump.
pub const SUPPORT_CENTER: f64 = 1.99;
pub const SUPPORT_HALF_WIDTH: f64 = 0.009;
/// Interval of the moment-violating indicator.
pub const MOMENT_INTERVAL: (f64, f64) = (0.5, 1.5);
/// Interval of the smooth window carrying isolation corrections.
const WINDOW: (f64, f64) = (0.2, 1.8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Support,
    Moment,
    Bessel,
    Noise,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "support" => Ok(Family::Support),
            "moment" => Ok(Family::Moment),
            "bessel" => Ok(Family::Bessel),
            "noise" => Ok(Family::Noise),
            other => Err(Error::domain(format!(
                "unknown perturbation family `{other}` (support, moment, bessel, noise)"
            ))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Support => "support",
            Family::Moment => "moment",
            Family::Bessel => "bessel",
            Family::Noise => "noise",
        })
    }
}

/// `family:order:amplitude`, e.g. `moment:3:1e-2`. For noise the amplitude
/// is relative to `max |g|` and the order is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub family: Family,
    pub order: i32,
    pub amplitude: f64,
}

impl FromStr for Perturbation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::domain(format!("perturbation `{s}` is not family:order:amplitude")));
        }
        let family = parts[0].trim().parse()?;
        let order = parts[1]
            .trim()
            .parse()
            .map_err(|e| Error::domain(format!("perturbation order `{}`: {e}", parts[1])))?;
        let amplitude: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|e| Error::domain(format!("perturbation amplitude `{}`: {e}", parts[2])))?;
        if !amplitude.is_finite() {
            return Err(Error::domain("perturbation amplitude must be finite"));
        }
        let p = Perturbation { family, order, amplitude };
        if family == Family::Moment && order == 0 {
            return Err(Error::domain("order 0 carries no moment condition"));
        }
        Ok(p)
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.family, self.order, self.amplitude)
    }
}

/// Parameters shared with the checks the perturbation must not disturb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbContext {
    pub epsilon: f64,
    pub zeros_per_order: usize,
    pub seed: u64,
}

impl Default for PerturbContext {
    fn default() -> Self {
        Self { epsilon: 0.05, zeros_per_order: 10, seed: 0 }
    }
}

fn smooth_bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn window(rho: f64) -> f64 {
    let (a, b) = WINDOW;
    smooth_bump((2.0 * rho - a - b) / (b - a))
}

type Kernel = Box<dyn Fn(f64) -> f64>;

fn moment_kernels(order: i32) -> Vec<Kernel> {
    (0..order.unsigned_abs())
        .map(|k| Box::new(move |r: f64| (0.5 * r).powi(2 * k as i32)) as Kernel)
        .collect()
}

fn bessel_kernels(order: i32, count: usize) -> Result<Vec<Kernel>> {
    Ok(bessel_zeros(order.unsigned_abs(), count)?
        .zeros
        .into_iter()
        .map(|z| Box::new(move |r: f64| jn(0, z * r)) as Kernel)
        .collect())
}

/// Returns `raw + sum_j a_j window K_j` with `sum_i w_i K_k(rho_i) h(rho_i) = 0`
/// for every kernel.
fn isolate(grid: RadialGrid, raw: Vec<f64>, kernels: &[Kernel]) -> Result<Vec<f64>> {
    if kernels.is_empty() {
        return Ok(raw);
    }
    let weights = grid.weights();
    let points = grid.points();
    let table: Vec<Vec<f64>> = kernels
        .iter()
        .map(|k| points.iter().zip(&weights).map(|(&r, w)| w * k(r)).collect())
        .collect();
    let basis: Vec<Vec<f64>> = kernels
        .iter()
        .map(|k| points.iter().map(|&r| window(r) * k(r)).collect())
        .collect();
    let m = kernels.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram = DMatrix::from_fn(m, m, |k, j| dot(&table[k], &basis[j]));
    let rhs = DVector::from_fn(m, |k, _| -dot(&table[k], &raw));
    let coeffs = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::domain("isolation system is singular on this grid"))?;
    let mut out = raw;
    for (c, b) in coeffs.iter().zip(&basis) {
        for (o, v) in out.iter_mut().zip(b) {
            *o += c * v;
        }
    }
    Ok(out)
}

/// The harmonic increment `h` for a structured family on `grid`.
pub fn harmonic_increment(p: &Perturbation, grid: RadialGrid, ctx: &PerturbContext) -> Result<RadialProfile> {
    let amp = p.amplitude;
    let n = p.order;
    let points = grid.points();
    let values = match p.family {
        Family::Support => {
            let raw = points
                .iter()
                .map(|&r| amp * std::f64::consts::E * smooth_bump((r - SUPPORT_CENTER) / SUPPORT_HALF_WIDTH))
                .collect();
            let mut kernels = bessel_kernels(n, ctx.zeros_per_order)?;
            kernels.extend(moment_kernels(n));
            isolate(grid, raw, &kernels)?
        }
        Family::Moment => {
            if n == 0 {
                return Err(Error::domain("order 0 carries no moment condition"));
            }
            let (a, b) = MOMENT_INTERVAL;
            let raw = points.iter().map(|&r| if r > a && r < b { amp } else { 0.0 }).collect();
            isolate(grid, raw, &bessel_kernels(n, ctx.zeros_per_order)?)?
        }
        Family::Bessel => {
            let z = bessel_zeros(n.unsigned_abs(), 1)?.zeros[0];
            let eps = ctx.epsilon;
            let raw = points
                .iter()
                .map(|&r| if r > eps && r < 2.0 - eps { amp * jn(0, z * r) } else { 0.0 })
                .collect();
            isolate(grid, raw, &moment_kernels(n))?
        }
        Family::Noise => return Err(Error::domain("noise has no harmonic increment")),
    };
    RadialProfile::new(grid, values.into_iter().map(Into::into).collect())
}

/// Applies `p` to a copy of `sino`. Structured families need circular data;
/// noise applies to either kind.
pub fn apply(sino: &Sinogram, p: &Perturbation, ctx: &PerturbContext) -> Result<Sinogram> {
    if p.family == Family::Noise {
        let scale = p.amplitude * sino.max_abs();
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        return sino.map_cells(|_, _, v| v + scale * rng.gen_range(-1.0..=1.0));
    }
    if sino.kind() != SinogramKind::Circular {
        return Err(Error::domain(format!("perturbation family {} applies to circular data", p.family)));
    }
    let count = sino.angular().count();
    if 2 * p.order.unsigned_abs() as usize >= count {
        return Err(Error::Aliasing { max_order: p.order.unsigned_abs() as usize, count });
    }
    let h = harmonic_increment(p, sino.radial(), ctx)?;
    let tw = Twiddles::new(count);
    let n = p.order;
    sino.map_cells(|j, i, v| {
        let hi = h.values()[i];
        if n == 0 {
            v + hi.re
        } else {
            v + 2.0 * (hi * tw.inverse(n as i64, j)).re
        }
    })
}
