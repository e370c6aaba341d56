use num_complex::Complex64;
use rayon::prelude::*;

use super::{AngularGrid, HarmonicStack, RadialProfile, Sinogram, SinogramKind};
use crate::error::{Error, Result};

/// Table of `exp(-2 pi i m / count)`, built so that entry `count - m` is the
/// exact conjugate of entry `m`.
#[derive(Debug, Clone)]
pub struct Twiddles {
    table: Vec<Complex64>,
}

impl Twiddles {
    pub fn new(count: usize) -> Self {
        let mut table = vec![Complex64::new(1.0, 0.0); count];
        for m in 1..=count / 2 {
            let (s, c) = (2.0 * std::f64::consts::PI * m as f64 / count as f64).sin_cos();
            table[m] = Complex64::new(c, -s);
        }
        for m in count / 2 + 1..count {
            table[m] = table[count - m].conj();
        }
        Self { table }
    }

    /// `exp(-i n psi_j)`.
    pub fn forward(&self, n: i64, j: usize) -> Complex64 {
        let c = self.table.len() as i64;
        self.table[(n * j as i64).rem_euclid(c) as usize]
    }

    /// `exp(+i n psi_j)`.
    pub fn inverse(&self, n: i64, j: usize) -> Complex64 {
        self.forward(-n, j)
    }
}

/// Discrete angular Fourier coefficients
/// `g_n(rho_i) = (1/count) sum_j g(psi_j, rho_i) exp(-i n psi_j)` for
/// `|n| <= max_order`.
///
/// Negative orders are stored as exact conjugates of the positive ones, so
/// the stack of a real sinogram is conjugate symmetric bit for bit.
pub fn angular_decompose(sino: &Sinogram, max_order: usize) -> Result<HarmonicStack> {
    let count = sino.angular().count();
    if max_order >= count / 2 {
        return Err(Error::Aliasing { max_order, count });
    }
    let grid = sino.radial();
    let tw = Twiddles::new(count);
    let scale = 1.0 / count as f64;
    let positive: Vec<RadialProfile> = (0..=max_order)
        .into_par_iter()
        .map(|n| {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.count()];
            for (j, row) in sino.rows().enumerate() {
                let w = tw.forward(n as i64, j);
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += w * v;
                }
            }
            for a in acc.iter_mut() {
                *a *= scale;
            }
            RadialProfile { grid, values: acc }
        })
        .collect();

    let mut profiles = Vec::with_capacity(2 * max_order + 1);
    profiles.extend(positive[1..].iter().rev().map(RadialProfile::conj));
    profiles.extend(positive);
    HarmonicStack::new(max_order, profiles)
}

const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-10;

/// `g(psi_j, rho_i) = sum_n g_n(rho_i) exp(i n psi_j)`; fails when the sum
/// carries an imaginary residue of `1e-10` or more (relative to the data
/// scale once that exceeds one).
pub fn angular_synthesize(
    stack: &HarmonicStack,
    angular: AngularGrid,
    kind: SinogramKind,
) -> Result<Sinogram> {
    let count = angular.count();
    let grid = stack.grid();
    let tw = Twiddles::new(count);
    let rows: Vec<Vec<Complex64>> = (0..count)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.count()];
            for (n, profile) in stack.profiles() {
                let w = tw.inverse(n as i64, j);
                for (a, v) in acc.iter_mut().zip(profile.values()) {
                    *a += w * v;
                }
            }
            acc
        })
        .collect();

    let mut residue = 0.0f64;
    let mut peak = 0.0f64;
    for v in rows.iter().flatten() {
        residue = residue.max(v.im.abs());
        peak = peak.max(v.re.abs());
    }
    if residue >= IMAGINARY_RESIDUE_LIMIT * peak.max(1.0) {
        return Err(Error::NonRealSynthesis(residue));
    }
    let values = rows.into_iter().flatten().map(|v| v.re).collect();
    Sinogram::new(kind, angular, grid, values)
}

/// `integral rho^power h(rho) d rho` by the grid's quadrature rule.
pub fn radial_moment(profile: &RadialProfile, power: u32) -> Complex64 {
    let grid = profile.grid();
    grid.weights()
        .iter()
        .zip(profile.values())
        .enumerate()
        .map(|(i, (w, v))| v * (w * grid.point(i).powi(power as i32)))
        .sum()
}
