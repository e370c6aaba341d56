//! Phantom to forward data to range report to reconstruction, in one call.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{circular_forward, planar_forward, DEFAULT_QUAD_POINTS};
use crate::grid::{
    angular_decompose, angular_synthesize, AngularGrid, HarmonicStack, RadialGrid, Sinogram, SinogramKind,
    DEFAULT_MAX_ORDER,
};
use crate::perturb::{apply, PerturbContext, Perturbation};
use crate::phantom::{PhantomSpec, Shape};
use crate::range::{check, CheckConfig, RangeReport, Tolerances};
use crate::spectral::{invert_stack, norton_forward, SpectralConfig};

pub const DEFAULT_ANGLES: usize = 256;
pub const DEFAULT_CIRCULAR_RADII: usize = 512;
/// Odd, so the planar grid has a node at `s = 0`.
pub const DEFAULT_PLANAR_RADII: usize = 513;
pub const DEFAULT_RECONSTRUCTION_RADII: usize = 257;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub kind: SinogramKind,
    pub angles: usize,
    pub radii: usize,
    pub quad_points: usize,
    /// Harmonics kept for inversion.
    pub max_order: usize,
    /// Radial nodes of the reconstruction on `[0, 1]`.
    pub reconstruction_radii: usize,
    pub check: CheckConfig,
    pub spectral: SpectralConfig,
    pub perturbation: Option<Perturbation>,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(kind: SinogramKind) -> Self {
        Self {
            kind,
            angles: DEFAULT_ANGLES,
            radii: match kind {
                SinogramKind::Circular => DEFAULT_CIRCULAR_RADII,
                SinogramKind::Planar => DEFAULT_PLANAR_RADII,
            },
            quad_points: DEFAULT_QUAD_POINTS,
            max_order: DEFAULT_MAX_ORDER,
            reconstruction_radii: DEFAULT_RECONSTRUCTION_RADII,
            check: CheckConfig::default(),
            spectral: SpectralConfig::default(),
            perturbation: None,
            seed: 0,
        }
    }

    pub fn data_grids(&self) -> Result<(AngularGrid, RadialGrid)> {
        let angular = AngularGrid::new(self.angles)?;
        let radial = match self.kind {
            SinogramKind::Circular => RadialGrid::new(0.0, 2.0, self.radii)?,
            SinogramKind::Planar => RadialGrid::new(-1.0, 1.0, self.radii)?,
        };
        Ok((angular, radial))
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::new(SinogramKind::Circular)
    }
}

/// Forward data of `spec` on the configured grids.
pub fn forward(spec: &PhantomSpec, config: &PipelineConfig) -> Result<Sinogram> {
    let (angular, radial) = config.data_grids()?;
    match config.kind {
        SinogramKind::Circular => circular_forward(spec, angular, radial, config.quad_points),
        SinogramKind::Planar => planar_forward(spec, angular, radial, config.quad_points),
    }
}

/// Non-smooth components converge at first order under quadrature, so
/// their data is judged with [`Tolerances::relaxed`].
pub fn is_smooth(spec: &PhantomSpec) -> bool {
    spec.components.iter().all(|c| c.shape == Shape::SmoothBump)
}

/// Value of `sum_n f_n(r) e^{i n phi}` at `(x, y)`, linear in `r` between
/// nodes and zero off the grid.
pub fn stack_value(stack: &HarmonicStack, x: f64, y: f64) -> f64 {
    let grid = stack.grid();
    let r = x.hypot(y);
    if r < grid.r_min() || r > grid.r_max() {
        return 0.0;
    }
    let t = (r - grid.r_min()) / grid.spacing();
    let i = (t.floor() as usize).min(grid.count() - 2);
    let frac = t - i as f64;
    let phi = y.atan2(x);
    stack
        .profiles()
        .map(|(n, p)| {
            let v = p.values()[i] * (1.0 - frac) + p.values()[i + 1] * frac;
            (v * num_complex::Complex64::from_polar(1.0, n as f64 * phi)).re
        })
        .sum()
}

/// Relative L2 error of a reconstruction against the phantom over the unit
/// disk, by the reconstruction grid's radial rule (weight `r dr`) and
/// `angles` uniform angles.
pub fn reconstruction_error(spec: &PhantomSpec, f_stack: &HarmonicStack, angles: usize) -> Result<f64> {
    let angular = AngularGrid::new(angles)?;
    let grid = f_stack.grid();
    let rec = angular_synthesize(f_stack, angular, SinogramKind::Circular)?;
    let weights = grid.weights();
    let mut err = 0.0;
    let mut norm = 0.0;
    for j in 0..angles {
        let phi = angular.angle(j);
        let (s, c) = phi.sin_cos();
        for (i, w) in weights.iter().enumerate() {
            let r = grid.point(i);
            let truth = spec.eval(r * c, r * s);
            err += w * r * (rec.value(j, i) - truth).powi(2);
            norm += w * r * truth * truth;
        }
    }
    Ok(crate::grid::relative(err.sqrt(), norm.sqrt()))
}

/// Relative L2 difference between `norton_forward` of each reconstructed
/// harmonic and the data harmonic, for `0 <= n <= max_order`.
pub fn reforward_residuals(
    f_stack: &HarmonicStack,
    g_stack: &HarmonicStack,
    config: &SpectralConfig,
) -> Result<Vec<(i32, f64)>> {
    use rayon::prelude::*;
    let max = f_stack.max_order().min(g_stack.max_order()) as i32;
    (0..=max)
        .into_par_iter()
        .map(|n| {
            let g = g_stack.profile(n);
            let again = norton_forward(f_stack.profile(n), n, g.grid(), config)?;
            Ok((n, again.relative_l2_error(g)))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub sinogram: Sinogram,
    pub report: RangeReport,
    /// Absent for planar data and when inversion failed.
    pub reconstruction: Option<HarmonicStack>,
    /// `NaN` when there is no reconstruction.
    pub l2_rel_err: f64,
}

/// Runs every stage. Errors before a report exists are returned; later
/// failures are recorded in the report, which then fails.
pub fn run(spec: &PhantomSpec, config: &PipelineConfig) -> Result<PipelineOutcome> {
    spec.validate(config.check.epsilon)?;
    let mut check_config = config.check;
    let mut extra = BTreeMap::new();
    if !is_smooth(spec) {
        check_config.tolerances = Tolerances::relaxed();
        extra.insert("tolerance_profile".into(), "relaxed: non-smooth phantom components".into());
    }
    let clean = forward(spec, config)?;
    let sinogram = match &config.perturbation {
        Some(p) => {
            extra.insert("perturbation".into(), p.to_string());
            extra.insert("seed".into(), config.seed.to_string());
            let ctx = PerturbContext {
                epsilon: check_config.epsilon,
                zeros_per_order: check_config.zeros_per_order,
                seed: config.seed,
            };
            apply(&clean, p, &ctx)?
        }
        None => clean,
    };
    let mut report = check(&sinogram, &check_config)?;
    report.provenance.extra.extend(extra);
    report.provenance.extra.insert("quad_points".into(), config.quad_points.to_string());

    let mut reconstruction = None;
    let mut l2_rel_err = f64::NAN;
    if config.kind == SinogramKind::Circular {
        let stage = || -> Result<(HarmonicStack, f64)> {
            let g_stack = angular_decompose(&sinogram, config.max_order)?;
            let r_grid = RadialGrid::new(0.0, 1.0, config.reconstruction_radii)?;
            let f_stack = invert_stack(&g_stack, r_grid, &config.spectral)?;
            let err = reconstruction_error(spec, &f_stack, config.angles)?;
            Ok((f_stack, err))
        };
        match stage() {
            Ok((f_stack, err)) => {
                reconstruction = Some(f_stack);
                l2_rel_err = err;
            }
            Err(e) => report.push_error(format!("inversion: {e}")),
        }
    }
    Ok(PipelineOutcome { sinogram, report, reconstruction, l2_rel_err })
}

/// Renders a reconstruction on a `size x size` image of `[-1, 1]^2`.
pub fn render_reconstruction(stack: &HarmonicStack, size: usize) -> Vec<f64> {
    crate::phantom::render_with(size, |x, y| stack_value(stack, x, y))
}

pub(crate) fn require_circular(sino: &Sinogram) -> Result<()> {
    if sino.kind() != SinogramKind::Circular {
        return Err(Error::domain("inversion needs circular data"));
    }
    Ok(())
}
