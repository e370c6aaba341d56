//! Analytic test functions supported in the unit disk.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{HarmonicStack, RadialGrid, RadialProfile, Twiddles};

/// Gaussians count as supported within this many widths of their centre.
pub const GAUSSIAN_SUPPORT_WIDTHS: f64 = 4.0;

const MIN_ANGULAR_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `A exp(-1 / (1 - |x - c|^2 / a^2))` inside the disk of radius `a`.
    SmoothBump,
    /// `A exp(-|x - c|^2 / (2 w^2))`, cut off at `4 w`.
    Gaussian,
    DiskIndicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub shape: Shape,
    pub center: [f64; 2],
    /// Radius for bumps and disks, width for gaussians.
    #[serde(alias = "width")]
    pub radius: f64,
    pub amplitude: f64,
}

impl Component {
    pub fn new(shape: Shape, center: [f64; 2], radius: f64, amplitude: f64) -> Self {
        Self { shape, center, radius, amplitude }
    }

    /// Radius of the (effective) support around the centre.
    pub fn support_radius(&self) -> f64 {
        match self.shape {
            Shape::Gaussian => GAUSSIAN_SUPPORT_WIDTHS * self.radius,
            Shape::SmoothBump | Shape::DiskIndicator => self.radius,
        }
    }

    /// Largest `|x|` reached by the support.
    pub fn reach(&self) -> f64 {
        self.center[0].hypot(self.center[1]) + self.support_radius()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let d2 = dx * dx + dy * dy;
        let a = self.radius;
        match self.shape {
            Shape::SmoothBump => {
                let t = d2 / (a * a);
                if t < 1.0 {
                    self.amplitude * (-1.0 / (1.0 - t)).exp()
                } else {
                    0.0
                }
            }
            Shape::Gaussian => {
                let cut = GAUSSIAN_SUPPORT_WIDTHS * a;
                if d2 < cut * cut {
                    self.amplitude * (-d2 / (2.0 * a * a)).exp()
                } else {
                    0.0
                }
            }
            Shape::DiskIndicator => {
                if d2 < a * a {
                    self.amplitude
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self, index: usize, epsilon: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::Phantom(format!("component {index}: {msg}")));
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if !self.amplitude.is_finite() || !self.center.iter().all(|c| c.is_finite()) {
            return bad("center and amplitude must be finite".into());
        }
        let limit = 1.0 - epsilon;
        if self.reach() >= limit {
            return bad(format!(
                "support reaches |x| = {:.6}, must stay below {limit}",
                self.reach()
            ));
        }
        Ok(())
    }
}

/// A sum of analytic components.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub components: Vec<Component>,
}

impl PhantomSpec {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(components: Vec<Component>) -> Self {
        Self { components }
    }

    pub fn bump(center: [f64; 2], radius: f64, amplitude: f64) -> Self {
        Self::new(vec![Component::new(Shape::SmoothBump, center, radius, amplitude)])
    }

    /// Parses and validates a JSON spec.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::Phantom(format!("bad JSON: {e}")))?;
        spec.validate(0.0)?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("phantom specs always serialize")
    }

    /// Checks that every support lies inside the disk of radius `1 - epsilon`.
    pub fn validate(&self, epsilon: f64) -> Result<()> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
        }
        self.components
            .iter()
            .enumerate()
            .try_for_each(|(i, c)| c.validate(i, epsilon))
    }

    /// Largest `|x|` reached by any support, 0 for the empty spec.
    pub fn reach(&self) -> f64 {
        self.components.iter().map(Component::reach).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.components.iter().map(|c| c.eval(x, y)).sum()
    }

    /// The phantom rotated by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let components = self
            .components
            .iter()
            .map(|comp| {
                let [x, y] = comp.center;
                Component { center: [c * x - s * y, s * x + c * y], ..*comp }
            })
            .collect();
        Self { components }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| Component { amplitude: c.amplitude * factor, ..*c })
            .collect();
        Self { components }
    }
}

/// `eval_phantom` as a free function.
pub fn eval_phantom(spec: &PhantomSpec, x: [f64; 2]) -> f64 {
    spec.eval(x[0], x[1])
}

/// Angular harmonics `f_n(r) = (1/2pi) int f(r cos phi, r sin phi) e^{-i n phi} dphi`
/// for `|n| <= max_order`.
///
/// Disk indicators use the exact arc integral; other shapes use the periodic
/// trapezoid rule on `max(2048, 4 max_order)` angles (rounded up to a power
/// of two).
pub fn harmonic_profiles(
    spec: &PhantomSpec,
    max_order: usize,
    grid: RadialGrid,
) -> Result<HarmonicStack> {
    if grid.r_min() < 0.0 {
        return Err(Error::domain("polar radius grid must start at r >= 0"));
    }
    let samples = (4 * max_order).next_power_of_two().max(MIN_ANGULAR_SAMPLES);
    let tw = Twiddles::new(samples);
    let step = 2.0 * PI / samples as f64;
    let quadrature: Vec<&Component> = spec
        .components
        .iter()
        .filter(|c| c.shape != Shape::DiskIndicator)
        .collect();
    let disks: Vec<&Component> = spec
        .components
        .iter()
        .filter(|c| c.shape == Shape::DiskIndicator)
        .collect();

    let columns: Vec<Vec<Complex64>> = grid
        .points()
        .into_par_iter()
        .map(|r| {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); max_order + 1];
            if !quadrature.is_empty() && r > 0.0 {
                for j in 0..samples {
                    let (s, c) = (j as f64 * step).sin_cos();
                    let v: f64 = quadrature.iter().map(|comp| comp.eval(r * c, r * s)).sum();
                    if v == 0.0 {
                        continue;
                    }
                    for (n, coeff) in coeffs.iter_mut().enumerate() {
                        *coeff += tw.forward(n as i64, j) * v;
                    }
                }
                for coeff in coeffs.iter_mut() {
                    *coeff /= samples as f64;
                }
            } else if r == 0.0 {
                coeffs[0] += quadrature.iter().map(|comp| comp.eval(0.0, 0.0)).sum::<f64>();
            }
            for disk in &disks {
                add_disk_harmonics(disk, r, &mut coeffs);
            }
            coeffs
        })
        .collect();

    let mut profiles = Vec::with_capacity(2 * max_order + 1);
    for n in -(max_order as i64)..=max_order as i64 {
        let values = columns
            .iter()
            .map(|col| {
                let v = col[n.unsigned_abs() as usize];
                if n < 0 {
                    v.conj()
                } else {
                    v
                }
            })
            .collect();
        profiles.push(RadialProfile::new(grid, values)?);
    }
    HarmonicStack::new(max_order, profiles)
}

/// Exact harmonics of a disk indicator on the circle of radius `r`: the
/// circle meets the disk in an arc of half-width `alpha` around the centre
/// direction, so `f_n = A e^{-i n phi_c} sin(n alpha) / (n pi)`.
fn add_disk_harmonics(disk: &Component, r: f64, coeffs: &mut [Complex64]) {
    let d = disk.center[0].hypot(disk.center[1]);
    let a = disk.radius;
    let alpha = if r == 0.0 || d == 0.0 {
        // the circle is a point or concentric: all in or all out
        if r + d < a {
            PI
        } else {
            0.0
        }
    } else {
        ((r * r + d * d - a * a) / (2.0 * r * d)).clamp(-1.0, 1.0).acos()
    };
    if alpha == 0.0 {
        return;
    }
    let phi_c = disk.center[1].atan2(disk.center[0]);
    coeffs[0] += disk.amplitude * alpha / PI;
    for (n, coeff) in coeffs.iter_mut().enumerate().skip(1) {
        let nf = n as f64;
        let mag = disk.amplitude * (nf * alpha).sin() / (nf * PI);
        *coeff += Complex64::from_polar(mag, -nf * phi_c);
    }
}

/// Samples `f` on a `size x size` image of the square `[-1, 1]^2` (row 0 at
/// `y = 1`, pixel centres).
pub fn render(spec: &PhantomSpec, size: usize) -> Vec<f64> {
    render_with(size, |x, y| spec.eval(x, y))
}

pub(crate) fn render_with(size: usize, f: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
    let step = 2.0 / size as f64;
    (0..size * size)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / size, idx % size);
            let x = -1.0 + (col as f64 + 0.5) * step;
            let y = 1.0 - (row as f64 + 0.5) * step;
            f(x, y)
        })
        .collect()
}

/// Binary 16-bit PGM with min mapped to 0 and max to 65535; a constant image
/// becomes all zeros.
pub fn encode_pgm16(pixels: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    if pixels.len() != width * height || width == 0 || height == 0 {
        return Err(Error::domain("pixel buffer does not match image size"));
    }
    if pixels.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("image contains non-finite pixels"));
    }
    let lo = pixels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(2 * pixels.len());
    for &p in pixels {
        let level = if hi > lo {
            ((p - lo) / (hi - lo) * 65535.0).round() as u16
        } else {
            0
        };
        out.extend_from_slice(&level.to_be_bytes());
    }
    Ok(out)
}

/// Bump phantoms used by the regression and acceptance suites. All stay
/// inside radius 0.9.
pub fn corpus() -> Vec<(&'static str, PhantomSpec)> {
    use Shape::SmoothBump as B;
    vec![
        ("centered", PhantomSpec::bump([0.0, 0.0], 0.5, 1.0)),
        ("offset", PhantomSpec::bump([0.3, 0.0], 0.25, 1.0)),
        (
            "pair",
            PhantomSpec::new(vec![
                Component::new(B, [-0.2, 0.3], 0.3, 1.0),
                Component::new(B, [0.35, -0.25], 0.2, 0.7),
            ]),
        ),
        ("high", PhantomSpec::bump([0.0, 0.55], 0.3, 1.0)),
        (
            "triple",
            PhantomSpec::new(vec![
                Component::new(B, [0.4, 0.4], 0.2, 1.0),
                Component::new(B, [-0.5, 0.1], 0.25, -0.6),
                Component::new(B, [0.1, -0.6], 0.25, 0.8),
            ]),
        ),
    ]
}
