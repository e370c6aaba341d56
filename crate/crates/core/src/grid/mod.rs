//! Sampling grids, sinogram containers, angular harmonic decomposition and
//! radial quadrature.

mod harmonics;
pub mod io;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use harmonics::{angular_decompose, angular_synthesize, radial_moment, Twiddles};

/// Default harmonic truncation.
pub const DEFAULT_MAX_ORDER: usize = 32;

/// Uniform grid on `[r_min, r_max]` with `count >= 2` nodes.
///
/// Used for the radius `rho` of circular data, the signed offset `s` of
/// planar data (where `r_min` may be negative) and the polar radius `r` of
/// reconstructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    count: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if !r_min.is_finite() || !r_max.is_finite() {
            return Err(Error::domain("radial grid bounds must be finite"));
        }
        if r_min >= r_max {
            return Err(Error::domain(format!(
                "radial grid needs r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if count < 2 {
            return Err(Error::domain(format!("radial grid needs at least 2 nodes, got {count}")));
        }
        Ok(Self { r_min, r_max, count })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.r_max
        } else {
            self.r_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    /// Largest `|r|` on the grid.
    pub fn extent(&self) -> f64 {
        self.r_min.abs().max(self.r_max.abs())
    }

    /// True when the grid is symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        (self.r_min + self.r_max).abs() <= 1e-12 * self.extent()
    }

    /// Quadrature weights: composite Simpson for odd node counts, composite
    /// trapezoid otherwise.
    pub fn weights(&self) -> Vec<f64> {
        quadrature_weights(self.count, self.spacing())
    }
}

pub(crate) fn quadrature_weights(count: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; count];
    if count % 2 == 1 && count >= 3 {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = if i == 0 || i + 1 == count {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
    } else {
        w[0] = 0.5 * h;
        w[count - 1] = 0.5 * h;
    }
    w
}

/// `count` equispaced angles `2 pi j / count` covering `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngularGrid {
    count: usize,
}

impl AngularGrid {
    pub fn new(count: usize) -> Result<Self> {
        if count < 4 || !count.is_power_of_two() {
            return Err(Error::domain(format!(
                "angular count must be a power of two >= 4, got {count}"
            )));
        }
        Ok(Self { count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinogramKind {
    /// `g(psi, rho)`: circles of radius `rho` centred at `(cos psi, sin psi)`.
    Circular,
    /// `g(psi, s)`: lines `x . (cos psi, sin psi) = s`.
    Planar,
}

impl SinogramKind {
    pub fn flag(self) -> u32 {
        match self {
            SinogramKind::Circular => 0,
            SinogramKind::Planar => 1,
        }
    }

    pub fn from_flag(flag: u32) -> Result<Self> {
        match flag {
            0 => Ok(SinogramKind::Circular),
            1 => Ok(SinogramKind::Planar),
            other => Err(Error::Format(format!("unknown sinogram kind flag {other}"))),
        }
    }
}

impl std::fmt::Display for SinogramKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SinogramKind::Circular => "circular",
            SinogramKind::Planar => "planar",
        })
    }
}

impl std::str::FromStr for SinogramKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circular" => Ok(SinogramKind::Circular),
            "planar" => Ok(SinogramKind::Planar),
            other => Err(Error::domain(format!("unknown sinogram kind `{other}`"))),
        }
    }
}

/// Sampled transform data, angle-major: `values[j * radial.count() + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    kind: SinogramKind,
    angular: AngularGrid,
    radial: RadialGrid,
    values: Vec<f64>,
}

const CIRCULAR_RANGE_SLACK: f64 = 1e-12;

impl Sinogram {
    pub fn new(
        kind: SinogramKind,
        angular: AngularGrid,
        radial: RadialGrid,
        values: Vec<f64>,
    ) -> Result<Self> {
        let expected = angular.count() * radial.count();
        if values.len() != expected {
            return Err(Error::domain(format!(
                "sinogram holds {} values, grids need {expected}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("sinogram value #{bad} is not finite")));
        }
        if kind == SinogramKind::Circular {
            check_circular_range(&radial)?;
        }
        Ok(Self {
            kind,
            angular,
            radial,
            values,
        })
    }

    pub fn zeros(kind: SinogramKind, angular: AngularGrid, radial: RadialGrid) -> Result<Self> {
        Self::new(kind, angular, radial, vec![0.0; angular.count() * radial.count()])
    }

    pub fn kind(&self) -> SinogramKind {
        self.kind
    }

    pub fn angular(&self) -> AngularGrid {
        self.angular
    }

    pub fn radial(&self) -> RadialGrid {
        self.radial
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.radial.count() + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.radial.count();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.radial.count())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Applies `f(j, i, value)` to every cell, keeping the grids.
    pub fn map_cells(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let n = self.radial.count();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(idx / n, idx % n, v))
            .collect();
        Self::new(self.kind, self.angular, self.radial, values)
    }
}

pub(crate) fn check_circular_range(radial: &RadialGrid) -> Result<()> {
    if radial.r_min() < -CIRCULAR_RANGE_SLACK || radial.r_max() > 2.0 + CIRCULAR_RANGE_SLACK {
        return Err(Error::domain(format!(
            "circular radii must lie in [0, 2], got [{}, {}]",
            radial.r_min(),
            radial.r_max()
        )));
    }
    Ok(())
}

/// One complex-valued function sampled on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<Complex64>,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::domain(format!(
                "profile has {} values for a grid of {}",
                values.len(),
                grid.count()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.count()],
        }
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn grid(&self) -> RadialGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Quadrature of `|h|` over the grid.
    pub fn l1_norm(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm())
            .sum()
    }

    /// Discrete l2 norm of the samples.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||self - other|| / ||other||` over samples (0 when both vanish).
    pub fn relative_l2_error(&self, reference: &RadialProfile) -> f64 {
        let num: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = reference.values.iter().map(|v| v.norm_sqr()).sum();
        relative(num.sqrt(), den.sqrt())
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &RadialProfile) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::domain("profiles live on different grids"));
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }
}

/// `num / den`, with `0 / 0 = 0`.
pub(crate) fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Radial profiles for harmonic orders `-N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicStack {
    max_order: usize,
    profiles: Vec<RadialProfile>,
}

impl HarmonicStack {
    /// `profiles[k]` holds order `k - max_order`.
    pub fn new(max_order: usize, profiles: Vec<RadialProfile>) -> Result<Self> {
        if profiles.len() != 2 * max_order + 1 {
            return Err(Error::domain(format!(
                "stack of max order {max_order} needs {} profiles, got {}",
                2 * max_order + 1,
                profiles.len()
            )));
        }
        let grid = profiles[0].grid();
        if profiles.iter().any(|p| p.grid() != grid) {
            return Err(Error::domain("stack profiles must share one radial grid"));
        }
        Ok(Self { max_order, profiles })
    }

    pub fn zeros(max_order: usize, grid: RadialGrid) -> Self {
        Self {
            max_order,
            profiles: vec![RadialProfile::zeros(grid); 2 * max_order + 1],
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn grid(&self) -> RadialGrid {
        self.profiles[0].grid()
    }

    pub fn orders(&self) -> std::ops::RangeInclusive<i32> {
        let n = self.max_order as i32;
        -n..=n
    }

    fn index(&self, n: i32) -> usize {
        assert!(
            n.unsigned_abs() as usize <= self.max_order,
            "order {n} outside stack of max order {}",
            self.max_order
        );
        (n + self.max_order as i32) as usize
    }

    pub fn profile(&self, n: i32) -> &RadialProfile {
        &self.profiles[self.index(n)]
    }

    pub fn profile_mut(&mut self, n: i32) -> &mut RadialProfile {
        let idx = self.index(n);
        &mut self.profiles[idx]
    }

    pub fn get(&self, n: i32) -> Option<&RadialProfile> {
        (n.unsigned_abs() as usize <= self.max_order).then(|| self.profile(n))
    }

    pub fn profiles(&self) -> impl Iterator<Item = (i32, &RadialProfile)> {
        self.orders().zip(self.profiles.iter())
    }

    /// Largest `||g_n||_1` over the stack.
    pub fn max_l1_norm(&self) -> f64 {
        self.profiles.iter().map(|p| p.l1_norm()).fold(0.0, f64::max)
    }

    /// Largest `|profile(-n) - conj(profile(n))|` over the stack.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 1..=self.max_order as i32 {
            for (a, b) in self.profile(n).values().iter().zip(self.profile(-n).values()) {
                worst = worst.max((a.conj() - b).norm());
            }
        }
        worst
    }

    /// Truncates (or zero-pads) to a new maximum order.
    pub fn with_max_order(&self, max_order: usize) -> Self {
        let grid = self.grid();
        let profiles = (-(max_order as i32)..=max_order as i32)
            .map(|n| self.get(n).cloned().unwrap_or_else(|| RadialProfile::zeros(grid)))
            .collect();
        Self { max_order, profiles }
    }
}
