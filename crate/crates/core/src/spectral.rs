//! Hankel transforms, the harmonic-wise forward relation
//! `g_n(rho) = 2 pi rho H_0{ J_n H_n{f_n} }(rho)` and its inversion
//! `f_n = H_n{ H_0{g_n / rho} / (2 pi J_n) }`.
//!
//! Conventions: `H_n h(sigma) = int_0^inf J_n(sigma r) h(r) r dr`, and every
//! frequency integral runs over a [`SigmaGrid`] on `(0, sigma_max]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{quadrature_weights, HarmonicStack, RadialGrid, RadialProfile};
use crate::specfun::{bessel_zeros_below, jn};

pub const DEFAULT_SIGMA_MAX: f64 = 60.0;
pub const DEFAULT_SIGMA_DENSITY: f64 = 16.0;
pub const DEFAULT_EXCLUSION_MARGIN: f64 = 0.05;

/// Frequency nodes with quadrature weights for integrands of the form
/// `sigma * (smooth)`.
///
/// The composite Simpson rule on `[0, sigma_max]` has a node at zero; it is
/// left out because every integrand carries the factor `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Half-width of the intervals removed around Bessel zeros (0 if none).
    margin: f64,
}

impl SigmaGrid {
    /// Simpson grid with `ceil(sigma_max * density)` intervals (rounded up
    /// to even).
    pub fn uniform(sigma_max: f64, density: f64) -> Result<Self> {
        if !(sigma_max > 0.0 && sigma_max.is_finite()) || !(density > 0.0 && density.is_finite()) {
            return Err(Error::domain(format!(
                "sigma grid needs positive finite sigma_max and density, got {sigma_max}, {density}"
            )));
        }
        let mut intervals = (sigma_max * density).ceil() as usize;
        intervals = intervals.max(2);
        intervals += intervals % 2;
        let h = sigma_max / intervals as f64;
        let weights = quadrature_weights(intervals + 1, h)[1..].to_vec();
        let nodes = (1..=intervals)
            .map(|i| if i == intervals { sigma_max } else { i as f64 * h })
            .collect();
        Ok(Self { nodes, weights, margin: 0.0 })
    }

    /// Arbitrary positive, strictly increasing nodes with given weights.
    pub fn from_nodes(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::domain("sigma nodes and weights differ in length"));
        }
        if nodes.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::domain("sigma nodes and weights must be finite"));
        }
        if nodes.first().is_some_and(|&s| s <= 0.0) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("sigma nodes must be positive and strictly increasing"));
        }
        Ok(Self { nodes, weights, margin: 0.0 })
    }

    /// Copy of the grid with every node inside `(z - margin, z + margin)`
    /// removed, for each zero `z` of `J_order` (including `z = 0` when
    /// `order != 0`). A removed node's weight is split linearly between the
    /// two interval edges, which become nodes; weight assigned to `sigma = 0`
    /// or beyond the last node is given to the other edge or dropped at zero.
    pub fn excluding_bessel_zeros(&self, order: i32, margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::domain(format!("exclusion margin must be positive, got {margin}")));
        }
        let Some(&top) = self.nodes.last() else {
            return Ok(self.clone());
        };
        let zeros = excluded_zeros(order, top + margin)?;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(self.nodes.len() + 2 * zeros.len());
        let mut zi = 0;
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            while zi < zeros.len() && zeros[zi] + margin <= s {
                zi += 1;
            }
            let hit = zeros.get(zi).filter(|&&z| s > z - margin);
            let Some(&z) = hit else {
                pairs.push((s, w));
                continue;
            };
            let (left, right) = (z - margin, z + margin);
            let t = (s - left) / (right - left);
            let (mut wl, mut wr) = ((1.0 - t) * w, t * w);
            if right > top {
                wl += wr;
                wr = 0.0;
            }
            if left > 0.0 {
                pairs.push((left, wl));
            }
            if wr != 0.0 {
                pairs.push((right, wr));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (s, w) in pairs {
            match nodes.last() {
                Some(&last) if (s - last).abs() <= 1e-12 * s.max(1.0) => {
                    *weights.last_mut().expect("parallel vectors") += w;
                }
                _ => {
                    nodes.push(s);
                    weights.push(w);
                }
            }
        }
        Ok(Self { nodes, weights, margin })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn sigma_max(&self) -> f64 {
        self.nodes.last().copied().unwrap_or(0.0)
    }
}

/// Zeros of `J_order` up to `limit`, with `0` first for nonzero orders.
fn excluded_zeros(order: i32, limit: f64) -> Result<Vec<f64>> {
    let mut zeros = Vec::new();
    if order != 0 {
        zeros.push(0.0);
    }
    zeros.extend(bessel_zeros_below(order.unsigned_abs(), limit)?);
    Ok(zeros)
}

/// Frequency discretisation shared by the forward relation and inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub sigma_max: f64,
    /// Simpson intervals per unit of `sigma`.
    pub density: f64,
    pub exclusion_margin: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            sigma_max: DEFAULT_SIGMA_MAX,
            density: DEFAULT_SIGMA_DENSITY,
            exclusion_margin: DEFAULT_EXCLUSION_MARGIN,
        }
    }
}

impl SpectralConfig {
    pub fn grid(&self) -> Result<SigmaGrid> {
        SigmaGrid::uniform(self.sigma_max, self.density)
    }

    pub fn inversion_grid(&self, order: i32) -> Result<SigmaGrid> {
        self.grid()?.excluding_bessel_zeros(order, self.exclusion_margin)
    }
}

/// A function of `sigma` sampled on a [`SigmaGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    pub sigmas: SigmaGrid,
    pub values: Vec<Complex64>,
}

impl SpectralProfile {
    pub fn zeros(sigmas: SigmaGrid) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); sigmas.len()];
        Self { sigmas, values }
    }
}

fn require_nonnegative(grid: RadialGrid) -> Result<()> {
    if grid.r_min() < 0.0 {
        return Err(Error::domain(format!(
            "Hankel transforms need a grid on r >= 0, got r_min = {}",
            grid.r_min()
        )));
    }
    Ok(())
}

/// `H_n h(sigma)` at every node, by the radial grid's quadrature rule.
pub fn hankel(order: i32, profile: &RadialProfile, sigmas: &SigmaGrid) -> Result<SpectralProfile> {
    let grid = profile.grid();
    require_nonnegative(grid)?;
    let radii = grid.points();
    let weighted: Vec<Complex64> = grid
        .weights()
        .iter()
        .zip(profile.values())
        .zip(&radii)
        .map(|((w, v), r)| v * (w * r))
        .collect();
    let values = sigmas
        .nodes()
        .par_iter()
        .map(|&s| {
            radii
                .iter()
                .zip(&weighted)
                .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
                .map(|(&r, v)| v * jn(order, s * r))
                .sum()
        })
        .collect();
    Ok(SpectralProfile { sigmas: sigmas.clone(), values })
}

/// `int J_n(sigma r) H(sigma) sigma d sigma` onto `grid`, by the sigma
/// grid's weights.
pub fn inverse_hankel(
    order: i32,
    spectrum: &SpectralProfile,
    grid: RadialGrid,
) -> Result<RadialProfile> {
    require_nonnegative(grid)?;
    let sigmas = &spectrum.sigmas;
    let weighted: Vec<Complex64> = sigmas
        .weights()
        .iter()
        .zip(sigmas.nodes())
        .zip(&spectrum.values)
        .map(|((w, s), v)| v * (w * s))
        .collect();
    let values = grid
        .points()
        .into_par_iter()
        .map(|r| {
            sigmas
                .nodes()
                .iter()
                .zip(&weighted)
                .map(|(&s, v)| v * jn(order, s * r))
                .sum()
        })
        .collect();
    RadialProfile::new(grid, values)
}

/// `g_n(rho) = 2 pi rho H_0{ J_n(sigma) H_n{f_n}(sigma) }(rho)` on `rho_grid`,
/// with the frequency integral truncated at `config.sigma_max`.
pub fn norton_forward(
    f_profile: &RadialProfile,
    order: i32,
    rho_grid: RadialGrid,
    config: &SpectralConfig,
) -> Result<RadialProfile> {
    let sigmas = config.grid()?;
    let mut spectrum = hankel(order, f_profile, &sigmas)?;
    for (v, &s) in spectrum.values.iter_mut().zip(sigmas.nodes()) {
        *v *= jn(order, s);
    }
    let inner = inverse_hankel(0, &spectrum, rho_grid)?;
    let values = inner
        .values()
        .iter()
        .zip(rho_grid.points())
        .map(|(v, rho)| v * (2.0 * PI * rho))
        .collect();
    RadialProfile::new(rho_grid, values)
}

/// [`norton_forward`] for every order of a stack.
pub fn norton_forward_stack(
    f_stack: &HarmonicStack,
    rho_grid: RadialGrid,
    config: &SpectralConfig,
) -> Result<HarmonicStack> {
    let profiles = f_stack
        .orders()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| norton_forward(f_stack.profile(n), n, rho_grid, config))
        .collect::<Result<Vec<_>>>()?;
    HarmonicStack::new(f_stack.max_order(), profiles)
}

/// `int J_0(sigma rho) g_n(rho) d rho`, which equals `H_0{g_n / rho}(sigma)`.
pub fn bessel_moment(g_profile: &RadialProfile, sigma: f64) -> Complex64 {
    let grid = g_profile.grid();
    grid.weights()
        .iter()
        .zip(g_profile.values())
        .enumerate()
        .map(|(i, (w, v))| v * (w * jn(0, sigma * grid.point(i))))
        .sum()
}

const TAYLOR_MAX_TERMS: usize = 60;
const TAYLOR_RELATIVE_STOP: f64 = 1e-16;

/// The same quantity from its Taylor series
/// `sum_m (-1)^m (sigma/2)^{2m} / (m!)^2 * mu_m`, where
/// `even_moments[m] = int rho^{2m} g_n(rho) d rho`.
///
/// Stops once a term drops below `1e-16` of a nonzero partial sum, after 60
/// terms, or when the moments run out. Terms still growing at the cap mean
/// the series is being evaluated outside its useful range.
pub fn bessel_moment_taylor(even_moments: &[Complex64], sigma: f64) -> Result<Complex64> {
    if !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be finite, got {sigma}")));
    }
    let q = -(0.5 * sigma) * (0.5 * sigma);
    let mut coeff = 1.0f64;
    let mut partial = Complex64::new(0.0, 0.0);
    let mut last_term = f64::INFINITY;
    let mut previous_term = f64::INFINITY;
    for (m, mu) in even_moments.iter().take(TAYLOR_MAX_TERMS).enumerate() {
        if m > 0 {
            coeff *= q / ((m * m) as f64);
        }
        let term = mu * coeff;
        partial += term;
        previous_term = last_term;
        last_term = term.norm();
        if partial.norm() != 0.0 && last_term < TAYLOR_RELATIVE_STOP * partial.norm() {
            return Ok(partial);
        }
    }
    if even_moments.len() >= TAYLOR_MAX_TERMS && last_term > previous_term {
        return Err(Error::domain(format!(
            "Taylor series for the Bessel moment diverges at sigma = {sigma}"
        )));
    }
    Ok(partial)
}

fn exclusion_violation(order: i32, sigma: f64, zeros: &[f64], margin: f64) -> Option<Error> {
    let slack = margin * (1.0 - 1e-9);
    zeros
        .iter()
        .find(|&&z| (sigma.abs() - z).abs() < slack)
        .map(|&zero| Error::Exclusion { order, sigma, zero, margin })
}

/// `F(sigma) = H_0{g_n / rho}(sigma) / (2 pi J_n(sigma))`; refuses `sigma`
/// within `margin` of a zero of `J_n`.
pub fn spectral_f(g_profile: &RadialProfile, order: i32, sigma: f64, margin: f64) -> Result<Complex64> {
    let zeros = excluded_zeros(order, sigma.abs() + margin)?;
    if let Some(err) = exclusion_violation(order, sigma, &zeros, margin) {
        return Err(err);
    }
    Ok(bessel_moment(g_profile, sigma) / (2.0 * PI * jn(order, sigma)))
}

/// `f_n = H_n{F}` on `r_grid`, with `F` evaluated on `sigmas`.
///
/// Every node must keep the grid's exclusion margin (or the default margin
/// for grids built without exclusion) from the zeros of `J_n`.
pub fn norton_invert(
    g_profile: &RadialProfile,
    order: i32,
    r_grid: RadialGrid,
    sigmas: &SigmaGrid,
) -> Result<RadialProfile> {
    if sigmas.is_empty() {
        return Err(Error::domain("inversion needs a nonempty sigma grid"));
    }
    let margin = if sigmas.margin() > 0.0 {
        sigmas.margin()
    } else {
        DEFAULT_EXCLUSION_MARGIN
    };
    let zeros = excluded_zeros(order, sigmas.sigma_max() + margin)?;
    if let Some(err) = sigmas
        .nodes()
        .iter()
        .find_map(|&s| exclusion_violation(order, s, &zeros, margin))
    {
        return Err(err);
    }
    invert_on(order, r_grid, sigmas, |s| bessel_moment(g_profile, s))
}

fn invert_on(
    order: i32,
    r_grid: RadialGrid,
    sigmas: &SigmaGrid,
    moment: impl Fn(f64) -> Complex64 + Sync,
) -> Result<RadialProfile> {
    let values = sigmas
        .nodes()
        .par_iter()
        .map(|&s| moment(s) / (2.0 * PI * jn(order, s)))
        .collect();
    let spectrum = SpectralProfile { sigmas: sigmas.clone(), values };
    inverse_hankel(order, &spectrum, r_grid)
}

/// `w_i J_0(sigma_k rho_i)` for the nodes of a uniform sigma grid; the
/// exclusion-aware grids of all orders share most of these nodes.
struct MomentKernel {
    spacing: f64,
    nodes: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl MomentKernel {
    fn new(sigmas: &SigmaGrid, grid: RadialGrid) -> Self {
        let weights = grid.weights();
        let radii = grid.points();
        let rows = sigmas
            .nodes()
            .par_iter()
            .map(|&s| radii.iter().zip(&weights).map(|(r, w)| w * jn(0, s * r)).collect())
            .collect();
        Self {
            spacing: sigmas.nodes()[0],
            nodes: sigmas.nodes().to_vec(),
            rows,
        }
    }

    fn moment(&self, g: &RadialProfile, sigma: f64) -> Complex64 {
        let k = (sigma / self.spacing).round() as usize;
        match k.checked_sub(1).and_then(|i| self.nodes.get(i).map(|&s| (i, s))) {
            Some((i, s)) if s == sigma => self.rows[i].iter().zip(g.values()).map(|(w, v)| v * w).sum(),
            _ => bessel_moment(g, sigma),
        }
    }
}

/// [`norton_invert`] for every order, each on its own exclusion-aware grid.
///
/// A conjugate-symmetric stack (the decomposition of a real sinogram) is
/// inverted for `n >= 0` only; negative orders are the exact conjugates.
pub fn invert_stack(
    g_stack: &HarmonicStack,
    r_grid: RadialGrid,
    config: &SpectralConfig,
) -> Result<HarmonicStack> {
    let base = config.grid()?;
    let kernel = MomentKernel::new(&base, g_stack.grid());
    let symmetric = g_stack.conjugate_symmetry_defect() == 0.0;
    let orders: Vec<i32> = if symmetric {
        (0..=g_stack.max_order() as i32).collect()
    } else {
        g_stack.orders().collect()
    };
    let solved = orders
        .into_par_iter()
        .map(|n| {
            let sigmas = base.excluding_bessel_zeros(n, config.exclusion_margin)?;
            let g = g_stack.profile(n);
            invert_on(n, r_grid, &sigmas, |s| kernel.moment(g, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let profiles = if symmetric {
        let mut all: Vec<RadialProfile> = solved[1..].iter().rev().map(RadialProfile::conj).collect();
        all.extend(solved);
        all
    } else {
        solved
    };
    HarmonicStack::new(g_stack.max_order(), profiles)
}
