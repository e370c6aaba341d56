//! Forward transforms: integrals over circles centred on the unit circle and
//! over lines, plus closed-form and brute-force oracles.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{check_circular_range, AngularGrid, RadialGrid, Sinogram, SinogramKind};
use crate::phantom::{Component, PhantomSpec, Shape};

pub const DEFAULT_QUAD_POINTS: usize = 1024;
pub const MIN_QUAD_POINTS: usize = 64;

/// Circular transform `g(psi, rho) = int_{|x - p| = rho} f ds` with
/// `p = (cos psi, sin psi)`.
///
/// Smooth components use the periodic trapezoid rule on `quad_points`
/// equispaced angles of the circle (only nodes inside the component's
/// support are visited; the others contribute exact zeros). Disk indicators
/// use the exact arc length. Each cell is the sum of per-component values in
/// spec order, so the transform is exactly additive over components.
pub fn circular_forward(
    spec: &PhantomSpec,
    angular: AngularGrid,
    radial: RadialGrid,
    quad_points: usize,
) -> Result<Sinogram> {
    check_circular_range(&radial)?;
    check_quad_points(quad_points)?;
    let radii = radial.points();
    let values = (0..angular.count() * radial.count())
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / radial.count(), idx % radial.count());
            let (s, c) = angular.angle(j).sin_cos();
            spec.components
                .iter()
                .map(|comp| circle_integral(comp, [c, s], radii[i], quad_points))
                .sum()
        })
        .collect();
    Sinogram::new(SinogramKind::Circular, angular, radial, values)
}

fn check_quad_points(quad_points: usize) -> Result<()> {
    if quad_points < MIN_QUAD_POINTS {
        return Err(Error::domain(format!(
            "quad_points must be at least {MIN_QUAD_POINTS}, got {quad_points}"
        )));
    }
    Ok(())
}

/// Cosine of the half-angle, seen from the centre of a circle of radius
/// `rho`, of the arc lying within distance `a` of a point at distance `d`.
/// Values `<= -1` mean the whole circle, `>= 1` an empty arc.
fn arc_cos_half_angle(d: f64, rho: f64, a: f64) -> f64 {
    (d * d + rho * rho - a * a) / (2.0 * d * rho)
}

fn circle_integral(comp: &Component, p: [f64; 2], rho: f64, quad_points: usize) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let dx = comp.center[0] - p[0];
    let dy = comp.center[1] - p[1];
    let d = dx.hypot(dy);
    let reach = comp.support_radius();
    if comp.shape == Shape::DiskIndicator {
        return comp.amplitude * disk_arc_length(d, rho, reach);
    }
    let cos_half = if d == 0.0 {
        if rho < reach {
            -1.0
        } else {
            1.0
        }
    } else {
        arc_cos_half_angle(d, rho, reach)
    };
    if cos_half >= 1.0 {
        return 0.0;
    }
    let step = 2.0 * PI / quad_points as f64;
    let all = 0..=quad_points as i64 - 1;
    let nodes = if cos_half <= -1.0 {
        all
    } else {
        let half = cos_half.acos();
        let mid = dy.atan2(dx);
        let lo = ((mid - half) / step).floor() as i64;
        let hi = ((mid + half) / step).ceil() as i64;
        if hi - lo + 1 >= quad_points as i64 {
            all
        } else {
            lo..=hi
        }
    };
    let sum: f64 = nodes
        .map(|k| {
            let theta = k.rem_euclid(quad_points as i64) as f64 * step;
            let (s, c) = theta.sin_cos();
            comp.eval(p[0] + rho * c, p[1] + rho * s)
        })
        .sum();
    rho * step * sum
}

/// Length of the part of a circle of radius `rho` inside a disk of radius
/// `a` whose centre is at distance `d` from the circle's centre.
fn disk_arc_length(d: f64, rho: f64, a: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    if d == 0.0 {
        return if rho < a { 2.0 * PI * rho } else { 0.0 };
    }
    2.0 * rho * arc_cos_half_angle(d, rho, a).clamp(-1.0, 1.0).acos()
}

/// Exact circular transform of the indicator of the origin-centred disk of
/// radius `a`: `2 rho arccos((1 + rho^2 - a^2) / (2 rho))` on `|1 - a| < rho < 1 + a`.
pub fn circular_forward_disk_exact(a: f64, rho: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain(format!("disk radius must lie in (0, 1), got {a}")));
    }
    if !(rho > 1.0 - a && rho < 1.0 + a) {
        return Ok(0.0);
    }
    Ok(2.0 * rho * arc_cos_half_angle(1.0, rho, a).clamp(-1.0, 1.0).acos())
}

/// Planar Radon transform `g(psi, s) = int_{x . omega = s} f`, `omega =
/// (cos psi, sin psi)`.
///
/// Each smooth component is integrated along the part of the line inside
/// its support with a `quad_points`-node trapezoid rule (the integrand
/// vanishes at both ends); disk indicators use the exact chord length.
pub fn planar_forward(
    spec: &PhantomSpec,
    angular: AngularGrid,
    s_grid: RadialGrid,
    quad_points: usize,
) -> Result<Sinogram> {
    if s_grid.r_min() < -1.0 - 1e-12 || s_grid.r_max() > 1.0 + 1e-12 {
        return Err(Error::domain(format!(
            "planar offsets must lie in [-1, 1], got [{}, {}]",
            s_grid.r_min(),
            s_grid.r_max()
        )));
    }
    check_quad_points(quad_points)?;
    let offsets = s_grid.points();
    let values = (0..angular.count() * s_grid.count())
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / s_grid.count(), idx % s_grid.count());
            let (sn, cs) = angular.angle(j).sin_cos();
            spec.components
                .iter()
                .map(|comp| line_integral(comp, [cs, sn], offsets[i], quad_points))
                .sum()
        })
        .collect();
    Sinogram::new(SinogramKind::Planar, angular, s_grid, values)
}

fn line_integral(comp: &Component, omega: [f64; 2], s: f64, quad_points: usize) -> f64 {
    let [cx, cy] = comp.center;
    let perp = cx * omega[0] + cy * omega[1] - s;
    let reach = comp.support_radius();
    if perp.abs() >= reach {
        return 0.0;
    }
    let half = (reach * reach - perp * perp).sqrt();
    if comp.shape == Shape::DiskIndicator {
        return comp.amplitude * 2.0 * half;
    }
    // foot of the perpendicular from the centre, then walk along omega_perp
    let foot = [cx - perp * omega[0], cy - perp * omega[1]];
    let dir = [-omega[1], omega[0]];
    let n = quad_points - 1;
    let h = 2.0 * half / n as f64;
    let mut sum = 0.0;
    for k in 0..=n {
        let t = -half + k as f64 * h;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        sum += w * comp.eval(foot[0] + t * dir[0], foot[1] + t * dir[1]);
    }
    h * sum
}

const ORACLE_TOLERANCE: f64 = 1e-7;
const ADAPTIVE_TOLERANCE: f64 = 1e-12;
const ADAPTIVE_DEPTH: u32 = 40;
const INITIAL_PANELS: usize = 256;
const RADIAL_NODES: usize = 9;

/// Thin-annulus oracle for one circle: `(1/2h) int_{rho-h < |x-p| < rho+h} f`
/// for `h` halved `refine` times from `min(0.05, rho/2)`, Richardson
/// extrapolated in `h^2`.
///
/// Uses adaptive Simpson in angle and Simpson in radius, so it shares no
/// nodes with [`circular_forward`]. Fails if successive extrapolants still
/// differ by more than `1e-7` (relative to `max(1, |value|)`).
pub fn brute_force_circular(spec: &PhantomSpec, p: [f64; 2], rho: f64, refine: u32) -> Result<f64> {
    if refine < 2 {
        return Err(Error::domain(format!("refine must be at least 2, got {refine}")));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::domain(format!("rho must be finite and nonnegative, got {rho}")));
    }
    if rho == 0.0 || spec.components.is_empty() {
        return Ok(0.0);
    }
    let mut h = 0.05f64.min(0.5 * rho);
    let mut previous = annulus_mean(spec, p, rho, h);
    let mut last_extrapolant: Option<f64> = None;
    for _ in 0..refine {
        h *= 0.5;
        let current = annulus_mean(spec, p, rho, h);
        let extrapolant = (4.0 * current - previous) / 3.0;
        if let Some(last) = last_extrapolant {
            if (extrapolant - last).abs() <= ORACLE_TOLERANCE * extrapolant.abs().max(1.0) {
                return Ok(extrapolant);
            }
        }
        last_extrapolant = Some(extrapolant);
        previous = current;
    }
    Err(Error::OracleNotConverged(format!(
        "annulus refinement at p = ({}, {}), rho = {rho} after {refine} halvings",
        p[0], p[1]
    )))
}

fn annulus_mean(spec: &PhantomSpec, p: [f64; 2], rho: f64, h: f64) -> f64 {
    let dr = 2.0 * h / (RADIAL_NODES - 1) as f64;
    let weights = crate::grid::quadrature_weights(RADIAL_NODES, dr);
    let mut total = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let r = rho - h + k as f64 * dr;
        let ring = |theta: f64| {
            let (s, c) = theta.sin_cos();
            spec.eval(p[0] + r * c, p[1] + r * s)
        };
        let panel = 2.0 * PI / INITIAL_PANELS as f64;
        let mut angular = 0.0;
        for m in 0..INITIAL_PANELS {
            let a = m as f64 * panel;
            angular += adaptive_simpson(&ring, a, a + panel, ADAPTIVE_TOLERANCE, ADAPTIVE_DEPTH);
        }
        total += w * r * angular;
    }
    total / (2.0 * h)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::corpus;

    fn disk(a: f64) -> PhantomSpec {
        PhantomSpec::new(vec![Component::new(Shape::DiskIndicator, [0.0, 0.0], a, 1.0)])
    }

    #[test]
    fn empty_phantom_gives_zero_sinograms() {
        let a = AngularGrid::new(8).unwrap();
        let r = RadialGrid::new(0.0, 2.0, 17).unwrap();
        let g = circular_forward(&PhantomSpec::empty(), a, r, 64).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
        let s = RadialGrid::new(-1.0, 1.0, 17).unwrap();
        let g = planar_forward(&PhantomSpec::empty(), a, s, 64).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
        assert_eq!(brute_force_circular(&PhantomSpec::empty(), [1.0, 0.0], 1.0, 4).unwrap(), 0.0);
    }

    #[test]
    fn disk_closed_form() {
        let expect = 2.0 * 0.875f64.acos();
        assert!((circular_forward_disk_exact(0.5, 1.0).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 1.010721).abs() < 1e-6);
        assert_eq!(circular_forward_disk_exact(0.5, 0.4).unwrap(), 0.0);
        assert_eq!(circular_forward_disk_exact(0.5, 1.6).unwrap(), 0.0);
        assert!(circular_forward_disk_exact(1.0, 1.0).is_err());

        let a = AngularGrid::new(4).unwrap();
        let r = RadialGrid::new(0.0, 2.0, 5).unwrap();
        let g = circular_forward(&disk(0.5), a, r, 64).unwrap();
        for j in 0..4 {
            assert!((g.value(j, 2) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_force_oracle_matches_disk_closed_form() {
        let v = brute_force_circular(&disk(0.5), [1.0, 0.0], 1.0, 8).unwrap();
        assert!((v - 1.010721).abs() < 1e-4, "{v}");
    }

    #[test]
    fn brute_force_oracle_matches_bump_quadrature() {
        let spec = corpus()[1].1.clone();
        let a = AngularGrid::new(8).unwrap();
        let r = RadialGrid::new(0.0, 2.0, 9).unwrap();
        let g = circular_forward(&spec, a, r, DEFAULT_QUAD_POINTS).unwrap();
        for (j, i) in [(0, 3), (1, 4), (3, 5), (4, 6)] {
            let (s, c) = a.angle(j).sin_cos();
            let v = brute_force_circular(&spec, [c, s], r.point(i), 8).unwrap();
            assert!((v - g.value(j, i)).abs() < 1e-5, "cell ({j},{i}): {v} vs {}", g.value(j, i));
        }
    }

    #[test]
    fn oracle_rejects_bad_refine() {
        assert!(brute_force_circular(&disk(0.5), [1.0, 0.0], 1.0, 1).is_err());
    }

    #[test]
    fn planar_disk_chord() {
        let a = AngularGrid::new(8).unwrap();
        let s = RadialGrid::new(-1.0, 1.0, 21).unwrap();
        let g = planar_forward(&disk(0.45), a, s, 64).unwrap();
        for j in 0..8 {
            for i in 0..21 {
                let x: f64 = s.point(i);
                let expect = if x.abs() < 0.45 { 2.0 * (0.45f64 * 0.45 - x * x).sqrt() } else { 0.0 };
                assert!((g.value(j, i) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn planar_bump_line_integral_matches_radial_formula() {
        // centred bump: g(s) = 2 int_{|s|}^{a} f(r) r / sqrt(r^2 - s^2) dr, r = sqrt(s^2 + t^2)
        let spec = PhantomSpec::bump([0.0, 0.0], 0.5, 1.0);
        let a = AngularGrid::new(4).unwrap();
        let s = RadialGrid::new(-1.0, 1.0, 11).unwrap();
        let g = planar_forward(&spec, a, s, 1024).unwrap();
        for i in 0..11 {
            let x = s.point(i);
            let m = 200_000;
            let half = (0.25 - x * x).max(0.0).sqrt();
            let h = 2.0 * half / m as f64;
            let reference: f64 = (0..m)
                .map(|k| {
                    let t = -half + (k as f64 + 0.5) * h;
                    spec.eval(x, t)
                })
                .sum::<f64>()
                * h;
            assert!((g.value(1, i) - reference).abs() < 1e-9);
        }
    }

    #[test]
    fn planar_evenness_holds() {
        for (_, spec) in corpus() {
            let a = AngularGrid::new(16).unwrap();
            let s = RadialGrid::new(-1.0, 1.0, 33).unwrap();
            let g = planar_forward(&spec, a, s, 256).unwrap();
            for j in 0..8 {
                for i in 0..33 {
                    assert!((g.value(j, i) - g.value(j + 8, 32 - i)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn centred_phantom_is_angle_independent() {
        let a = AngularGrid::new(16).unwrap();
        let r = RadialGrid::new(0.0, 2.0, 33).unwrap();
        let g = circular_forward(&corpus()[0].1, a, r, 512).unwrap();
        for i in 0..33 {
            let col: Vec<f64> = (0..16).map(|j| g.value(j, i)).collect();
            let mean = col.iter().sum::<f64>() / 16.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 16.0;
            assert!(var < 1e-12);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let spec = corpus()[2].1.clone();
        let a = AngularGrid::new(32).unwrap();
        let r = RadialGrid::new(0.0, 2.0, 41).unwrap();
        let shift = 5;
        let rotated = spec.rotated(a.angle(shift));
        let g = circular_forward(&spec, a, r, 512).unwrap();
        let gr = circular_forward(&rotated, a, r, 512).unwrap();
        for j in 0..32 {
            for i in 0..41 {
                assert!((gr.value((j + shift) % 32, i) - g.value(j, i)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn support_within_margin() {
        let eps = 0.05;
        let a = AngularGrid::new(16).unwrap();
        let r = RadialGrid::new(0.0, 2.0, 401).unwrap();
        for (_, spec) in corpus() {
            let g = circular_forward(&spec, a, r, 256).unwrap();
            for j in 0..16 {
                for i in 0..401 {
                    let rho = r.point(i);
                    if rho <= eps || rho >= 2.0 - eps {
                        assert!(g.value(j, i).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn additive_over_components_exactly() {
        let spec = corpus()[4].1.clone();
        let a = AngularGrid::new(8).unwrap();
        let r = RadialGrid::new(0.0, 2.0, 21).unwrap();
        let whole = circular_forward(&spec, a, r, 256).unwrap();
        let mut parts = vec![0.0; whole.values().len()];
        for comp in &spec.components {
            let g = circular_forward(&PhantomSpec::new(vec![*comp]), a, r, 256).unwrap();
            for (p, v) in parts.iter_mut().zip(g.values()) {
                *p += v;
            }
        }
        assert_eq!(whole.values(), &parts[..]);
    }

    #[test]
    fn domain_checks() {
        let a = AngularGrid::new(4).unwrap();
        let spec = corpus()[0].1.clone();
        assert!(circular_forward(&spec, a, RadialGrid::new(0.0, 2.5, 5).unwrap(), 64).is_err());
        assert!(circular_forward(&spec, a, RadialGrid::new(0.0, 2.0, 5).unwrap(), 16).is_err());
        assert!(planar_forward(&spec, a, RadialGrid::new(-1.5, 1.0, 5).unwrap(), 64).is_err());
    }
}
