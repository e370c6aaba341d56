//! Range conditions as executable checks.
//!
//! Circular data (circles of radius `rho` centred on the unit circle) is in
//! the range of the transform of a smooth function supported in the unit disk
//! iff
//!
//! 1. it is supported in `rho` strictly between 0 and 2,
//! 2. `int rho^{2k} g_n(rho) d rho = 0` for `0 <= k < |n|`,
//! 3. `int J_0(sigma rho) g_n(rho) d rho = 0` at every positive zero `sigma`
//!    of `J_n`.
//!
//! Planar Radon data additionally obeys `g(omega, s) = g(-omega, -s)`, and its
//! moment condition reads `int s^k g_n(s) ds = 0` for `0 <= k < |n|`,
//! `k - n` even, or equivalently the half-line Mellin transform of `g_n`
//! vanishes at the poles `|n| - 1 - 2m` of `Gamma((sigma + 1 - |n|)/2)`.
//!
//! Each residual is normalised by `||g_n||_1 * scale^power + floor`, where the
//! floor is `1e-9` of the largest harmonic's L1 norm (times the same power).
//! Without it, harmonics that are pure rounding noise would be judged
//! against their own size.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{radial_moment, HarmonicStack, RadialGrid, RadialProfile, Sinogram, SinogramKind, Twiddles};
use crate::specfun::{bessel_zeros, gamma_fn, recip_gamma};
use crate::spectral::bessel_moment;

/// Relative size of the normalisation floor.
pub const FLOOR_RELATIVE: f64 = 1e-9;
const FLOOR_ABSOLUTE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub support: f64,
    pub moments: f64,
    /// Energy fraction, so roughly the square of a moment residual.
    pub polynomial: f64,
    pub bessel: f64,
    pub evenness: f64,
    pub mellin: f64,
    pub cormack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            support: 1e-12,
            moments: 1e-6,
            polynomial: 1e-10,
            bessel: 1e-5,
            evenness: 1e-10,
            mellin: 1e-6,
            cormack: 1e-4,
        }
    }
}

impl Tolerances {
    /// Tolerances for data from non-smooth phantoms (truncated gaussians,
    /// disk indicators), whose quadrature converges only at first order.
    /// Quadrature-limited conditions are widened 100 times.
    pub fn relaxed() -> Self {
        let d = Self::default();
        Self {
            moments: 100.0 * d.moments,
            polynomial: 1e4 * d.polynomial,
            bessel: 100.0 * d.bessel,
            mellin: 100.0 * d.mellin,
            cormack: 100.0 * d.cormack,
            ..d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Support,
    CircularMoments,
    CircularMomentsPolynomial,
    BesselZeros,
    PlanarEvenness,
    PlanarMoments,
    PlanarMellin,
    Cormack,
}

/// One residual. `n` is absent for whole-sinogram checks; the index is the
/// moment power `k`, the 1-based zero index, or the Mellin pole, depending
/// on the condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub n: Option<i32>,
    pub k_or_zero_index: Option<u32>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResidualEntry {
    fn new(n: Option<i32>, index: Option<u32>, residual: f64, tolerance: f64) -> Self {
        Self {
            n,
            k_or_zero_index: index,
            residual,
            tolerance,
            pass: residual <= tolerance,
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub normalization: String,
    pub tolerance: f64,
    pub entries: Vec<ResidualEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl ConditionReport {
    fn new(condition: Condition, normalization: &str, tolerance: f64, entries: Vec<ResidualEntry>) -> Self {
        let verdict = Verdict::from_pass(entries.iter().all(|e| e.pass));
        Self {
            condition,
            normalization: normalization.to_owned(),
            tolerance,
            entries,
            notes: Vec::new(),
            verdict,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn entry(&self, n: Option<i32>, index: Option<u32>) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.n == n && e.k_or_zero_index == index)
    }
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: Option<String>,
    pub kind: Option<SinogramKind>,
    pub angles: Option<usize>,
    pub radial: Option<RadialGrid>,
    pub max_order: Option<usize>,
    pub zeros_per_order: Option<usize>,
    pub epsilon: Option<f64>,
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub provenance: Provenance,
    pub conditions: Vec<ConditionReport>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl RangeReport {
    pub fn new(provenance: Provenance, conditions: Vec<ConditionReport>) -> Self {
        let verdict = Verdict::from_pass(conditions.iter().all(|c| c.verdict.is_pass()));
        Self { provenance, conditions, verdict, errors: Vec::new() }
    }

    pub fn condition(&self, which: Condition) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.condition == which)
    }

    /// Records a failed stage; a report with errors never passes.
    pub fn push_error(&mut self, message: impl Into<String>) {
        self.errors.push(message.into());
        self.verdict = Verdict::Fail;
    }
}

fn floor_for(stack: &HarmonicStack) -> f64 {
    FLOOR_RELATIVE * stack.max_l1_norm()
}

fn normalizer(norm: f64, floor: f64, scale_power: f64) -> f64 {
    (norm + floor) * scale_power + FLOOR_ABSOLUTE
}

/// Largest `|g|` outside `(epsilon, 2 - epsilon)` relative to the largest `|g|`.
pub fn check_support(sino: &Sinogram, epsilon: f64, tolerance: f64) -> Result<ConditionReport> {
    if sino.kind() != SinogramKind::Circular {
        return Err(Error::domain("support condition applies to circular data"));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let radial = sino.radial();
    let mut outside = 0.0f64;
    for row in sino.rows() {
        for (i, v) in row.iter().enumerate() {
            let rho = radial.point(i);
            if rho <= epsilon || rho >= 2.0 - epsilon {
                outside = outside.max(v.abs());
            }
        }
    }
    let residual = crate::grid::relative(outside, sino.max_abs());
    let mut report = ConditionReport::new(
        Condition::Support,
        "max |g| outside (eps, 2 - eps) / max |g|",
        tolerance,
        vec![ResidualEntry::new(None, None, residual, tolerance)],
    );
    report.notes.push(format!("epsilon = {epsilon}"));
    Ok(report)
}

/// `|int rho^{2k} g_n| / (||g_n||_1 r_max^{2k} + floor)` for `0 <= k < |n|`.
pub fn check_circular_moments(stack: &HarmonicStack, tolerance: f64) -> ConditionReport {
    let floor = floor_for(stack);
    let scale = stack.grid().extent();
    let entries = stack
        .profiles()
        .flat_map(|(n, p)| {
            let norm = p.l1_norm();
            (0..n.unsigned_abs()).map(move |k| {
                let m = radial_moment(p, 2 * k).norm();
                let residual = m / normalizer(norm, floor, scale.powi(2 * k as i32));
                ResidualEntry::new(Some(n), Some(k), residual, tolerance)
            })
        })
        .collect();
    ConditionReport::new(
        Condition::CircularMoments,
        "|M_2k(g_n)| / ((||g_n||_1 + 1e-9 max_m ||g_m||_1) r_max^2k)",
        tolerance,
        entries,
    )
}

/// The same condition read off the whole sinogram: `M_k(psi) = int rho^{2k}
/// g(psi, rho) d rho` must be a trigonometric polynomial of degree `<= k`.
/// Residual: energy of harmonics above `k` over total energy of `M_k`.
pub fn check_circular_moments_polynomial(sino: &Sinogram, k_max: u32, tolerance: f64) -> ConditionReport {
    let radial = sino.radial();
    let weights = radial.weights();
    let count = sino.angular().count();
    let tw = Twiddles::new(count);
    let entries = (0..=k_max)
        .map(|k| {
            let kernel: Vec<f64> = (0..radial.count())
                .map(|i| weights[i] * radial.point(i).powi(2 * k as i32))
                .collect();
            let moments: Vec<f64> = sino
                .rows()
                .map(|row| row.iter().zip(&kernel).map(|(v, w)| v * w).sum())
                .collect();
            let mut high = 0.0;
            let mut total = 0.0;
            for n in 0..count {
                let c: Complex64 = moments
                    .iter()
                    .enumerate()
                    .map(|(j, m)| tw.forward(n as i64, j) * *m)
                    .sum();
                let e = c.norm_sqr();
                total += e;
                if n.min(count - n) > k as usize {
                    high += e;
                }
            }
            let residual = crate::grid::relative(high, total);
            ResidualEntry::new(None, Some(k), residual, tolerance)
        })
        .collect();
    ConditionReport::new(
        Condition::CircularMomentsPolynomial,
        "energy of harmonics |n| > k of M_k(psi) / total energy",
        tolerance,
        entries,
    )
}

/// `|int J_0(j_{n,k} rho) g_n| / (||g_n||_1 + floor)` for the first
/// `zeros_per_order` positive zeros of `J_n`.
pub fn check_bessel_zero_condition(
    stack: &HarmonicStack,
    zeros_per_order: usize,
    tolerance: f64,
) -> Result<ConditionReport> {
    let floor = floor_for(stack);
    let tables = (0..=stack.max_order() as u32)
        .map(|n| bessel_zeros(n, zeros_per_order))
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<ResidualEntry> = stack
        .orders()
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|n| {
            let p = stack.profile(n);
            let norm = p.l1_norm();
            let zeros = &tables[n.unsigned_abs() as usize].zeros;
            zeros
                .iter()
                .enumerate()
                .map(|(k, &z)| {
                    let residual = bessel_moment(p, z).norm() / normalizer(norm, floor, 1.0);
                    ResidualEntry::new(Some(n), Some(k as u32 + 1), residual, tolerance)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(ConditionReport::new(
        Condition::BesselZeros,
        "|int J_0(j_nk rho) g_n| / (||g_n||_1 + 1e-9 max_m ||g_m||_1)",
        tolerance,
        entries,
    ))
}

/// `max |g(psi, s) - g(psi + pi, -s)| / max |g|`.
pub fn check_planar_evenness(sino: &Sinogram, tolerance: f64) -> Result<ConditionReport> {
    if sino.kind() != SinogramKind::Planar {
        return Err(Error::domain("evenness condition applies to planar data"));
    }
    if !sino.radial().is_symmetric() {
        return Err(Error::domain("evenness check needs an s grid symmetric about 0"));
    }
    let count = sino.angular().count();
    let last = sino.radial().count() - 1;
    let mut worst = 0.0f64;
    for j in 0..count {
        let opposite = sino.row((j + count / 2) % count);
        for (i, v) in sino.row(j).iter().enumerate() {
            worst = worst.max((v - opposite[last - i]).abs());
        }
    }
    let residual = crate::grid::relative(worst, sino.max_abs());
    Ok(ConditionReport::new(
        Condition::PlanarEvenness,
        "max |g(psi,s) - g(psi+pi,-s)| / max |g|",
        tolerance,
        vec![ResidualEntry::new(None, None, residual, tolerance)],
    ))
}

/// Full-line moments `|int s^k g_n(s) ds|` for `0 <= k < |n|`, `k - n` even.
pub fn check_planar_moments(stack: &HarmonicStack, tolerance: f64) -> ConditionReport {
    let floor = floor_for(stack);
    let scale = stack.grid().extent();
    let entries = stack
        .profiles()
        .flat_map(|(n, p)| {
            let norm = p.l1_norm();
            let abs_n = n.unsigned_abs();
            (0..abs_n).filter(move |k| (abs_n - k) % 2 == 0).map(move |k| {
                let m = radial_moment(p, k).norm();
                let residual = m / normalizer(norm, floor, scale.powi(k as i32));
                ResidualEntry::new(Some(n), Some(k), residual, tolerance)
            })
        })
        .collect();
    ConditionReport::new(
        Condition::PlanarMoments,
        "|int s^k g_n ds| / ((||g_n||_1 + 1e-9 max_m ||g_m||_1) s_max^k)",
        tolerance,
        entries,
    )
}

/// The nonnegative half of a symmetric grid with a node at 0.
fn half_line(profile: &RadialProfile) -> Result<RadialProfile> {
    let grid = profile.grid();
    if !grid.is_symmetric() || grid.count() % 2 == 0 {
        return Err(Error::domain(
            "half-line integrals need a symmetric s grid with an odd node count",
        ));
    }
    let mid = grid.count() / 2;
    let half = RadialGrid::new(0.0, grid.r_max(), grid.count() - mid)?;
    RadialProfile::new(half, profile.values()[mid..].to_vec())
}

/// `M h(sigma) = int_0^inf s^{sigma - 1} h(s) ds` for integer `sigma >= 1`.
fn mellin_integer(half: &RadialProfile, sigma: u32) -> Complex64 {
    radial_moment(half, sigma - 1)
}

/// Half-line Mellin transform `M g_n` at the poles `sigma = |n| - 1 - 2m >= 1`.
/// Residual `2 |M g_n(sigma)|`, normalised like the full-line moment of
/// power `sigma - 1` (the two agree when `g_n(-s) = (-1)^n g_n(s)`).
pub fn check_planar_mellin(stack: &HarmonicStack, tolerance: f64) -> Result<ConditionReport> {
    let floor = floor_for(stack);
    let scale = stack.grid().extent();
    let mut entries = Vec::new();
    for (n, p) in stack.profiles() {
        let half = half_line(p)?;
        let norm = p.l1_norm();
        let abs_n = n.unsigned_abs();
        let mut pole = abs_n as i64 - 1;
        let mut poles = Vec::new();
        while pole >= 1 {
            poles.push(pole as u32);
            pole -= 2;
        }
        for sigma in poles.into_iter().rev() {
            let m = 2.0 * mellin_integer(&half, sigma).norm();
            let residual = m / normalizer(norm, floor, scale.powi(sigma as i32 - 1));
            entries.push(ResidualEntry::new(Some(n), Some(sigma), residual, tolerance));
        }
    }
    Ok(ConditionReport::new(
        Condition::PlanarMellin,
        "2 |M g_n(sigma)| at poles sigma, normalised as the moment of power sigma - 1",
        tolerance,
        entries,
    ))
}

/// `Gamma(s) 2^{-s} / (Gamma((s + 1 + |n|)/2) Gamma((s + 1 - |n|)/2))`, zero at
/// the poles of the second denominator factor.
pub fn cormack_b(n: i32, s: f64) -> Result<f64> {
    let abs_n = n.unsigned_abs() as f64;
    Ok(gamma_fn(s)? * 2f64.powf(-s) * recip_gamma(0.5 * (s + 1.0 + abs_n)) * recip_gamma(0.5 * (s + 1.0 - abs_n)))
}

/// Constancy of `M g_n(s) / (M(r f_n)(s) B_n(s))` over `s_samples` for
/// `0 <= n <= min(max orders)`; the residual is
/// `max_s |ratio(s) / ratio(s_0) - 1|` with `s_0` the first usable sample.
/// Samples where the denominator vanishes are skipped with a note.
pub fn cormack_consistency(
    f_stack: &HarmonicStack,
    g_stack: &HarmonicStack,
    s_samples: &[f64],
    tolerance: f64,
) -> Result<ConditionReport> {
    if f_stack.grid().r_min() < 0.0 {
        return Err(Error::domain("f harmonics must live on r >= 0"));
    }
    if let Some(s) = s_samples.iter().find(|&&s| !(s > 1.0) || !s.is_finite()) {
        return Err(Error::domain(format!("Mellin samples must exceed 1, got {s}")));
    }
    let max_order = f_stack.max_order().min(g_stack.max_order()) as i32;
    let mut entries = Vec::new();
    let mut notes = Vec::new();
    for n in 0..=max_order {
        let g_half = half_line(g_stack.profile(n))?;
        let f = f_stack.profile(n);
        let mut ratios: Vec<(f64, Complex64)> = Vec::new();
        let mut skipped = Vec::new();
        for &s in s_samples {
            let b = cormack_b(n, s)?;
            let mf = mellin_real(f, s + 1.0);
            let den = mf * b;
            if b == 0.0 || den.norm() <= 1e-13 * f.l1_norm() + FLOOR_ABSOLUTE {
                skipped.push(s);
                continue;
            }
            ratios.push((s, mellin_real(&g_half, s) / den));
        }
        let mut entry = match ratios.split_first() {
            Some((&(_, r0), rest)) if !rest.is_empty() => {
                let residual = rest.iter().map(|(_, r)| (r / r0 - 1.0).norm()).fold(0.0, f64::max);
                let mut e = ResidualEntry::new(Some(n), None, residual, tolerance);
                e.note = Some(format!("ratio(s0) = {:.9}", r0.re));
                e
            }
            _ => {
                let mut e = ResidualEntry::new(Some(n), None, 0.0, tolerance);
                e.note = Some("fewer than two usable samples".into());
                e
            }
        };
        if !skipped.is_empty() {
            let list: Vec<String> = skipped.iter().map(|s| s.to_string()).collect();
            let msg = format!("n = {n}: skipped s = {} (vanishing denominator)", list.join(", "));
            notes.push(msg.clone());
            entry.note = Some(match entry.note.take() {
                Some(prev) => format!("{prev}; {msg}"),
                None => msg,
            });
        }
        entries.push(entry);
    }
    let mut report = ConditionReport::new(
        Condition::Cormack,
        "max_s |ratio(s) / ratio(s0) - 1|",
        tolerance,
        entries,
    );
    report.notes = notes;
    Ok(report)
}

/// `int_0^inf r^{sigma - 1} h(r) dr` for real `sigma`.
fn mellin_real(profile: &RadialProfile, sigma: f64) -> Complex64 {
    let grid = profile.grid();
    grid.weights()
        .iter()
        .zip(profile.values())
        .enumerate()
        .map(|(i, (w, v))| {
            let r = grid.point(i);
            let power = if r == 0.0 { 0.0 } else { r.powf(sigma - 1.0) };
            v * (w * power)
        })
        .sum()
}

/// Checks run by default on circular data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub max_order: usize,
    pub zeros_per_order: usize,
    pub epsilon: f64,
    pub polynomial_k_max: u32,
    pub tolerances: Tolerances,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            max_order: 16,
            zeros_per_order: 10,
            epsilon: 0.05,
            polynomial_k_max: 8,
            tolerances: Tolerances::default(),
        }
    }
}

impl CheckConfig {
    fn provenance(&self, sino: &Sinogram) -> Provenance {
        Provenance {
            kind: Some(sino.kind()),
            angles: Some(sino.angular().count()),
            radial: Some(sino.radial()),
            max_order: Some(self.max_order),
            zeros_per_order: Some(self.zeros_per_order),
            epsilon: Some(self.epsilon),
            tolerances: Some(self.tolerances),
            ..Provenance::default()
        }
    }
}

/// All circular conditions on one sinogram.
pub fn check_circular(sino: &Sinogram, config: &CheckConfig) -> Result<RangeReport> {
    let stack = crate::grid::angular_decompose(sino, config.max_order)?;
    let tol = &config.tolerances;
    let conditions = vec![
        check_support(sino, config.epsilon, tol.support)?,
        check_circular_moments(&stack, tol.moments),
        check_circular_moments_polynomial(sino, config.polynomial_k_max, tol.polynomial),
        check_bessel_zero_condition(&stack, config.zeros_per_order, tol.bessel)?,
    ];
    Ok(RangeReport::new(config.provenance(sino), conditions))
}

/// All planar conditions on one sinogram.
pub fn check_planar(sino: &Sinogram, config: &CheckConfig) -> Result<RangeReport> {
    let stack = crate::grid::angular_decompose(sino, config.max_order)?;
    let tol = &config.tolerances;
    let conditions = vec![
        check_planar_evenness(sino, tol.evenness)?,
        check_planar_moments(&stack, tol.moments),
        check_planar_mellin(&stack, tol.mellin)?,
    ];
    let mut provenance = config.provenance(sino);
    provenance.zeros_per_order = None;
    Ok(RangeReport::new(provenance, conditions))
}

/// Dispatches on the sinogram kind.
pub fn check(sino: &Sinogram, config: &CheckConfig) -> Result<RangeReport> {
    match sino.kind() {
        SinogramKind::Circular => check_circular(sino, config),
        SinogramKind::Planar => check_planar(sino, config),
    }
}

/// `2 pi`, the value the Cormack ratio takes with the conventions used here.
pub const CORMACK_RATIO: f64 = 2.0 * PI;
