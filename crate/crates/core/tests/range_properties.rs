use num_complex::Complex64;

use cradon::forward::circular_forward;
use cradon::grid::{AngularGrid, HarmonicStack, RadialGrid, RadialProfile};
use cradon::phantom::corpus;
use cradon::range::{check_bessel_zero_condition, check_circular, check_circular_moments, CheckConfig};
use cradon::spectral::{invert_stack, norton_forward_stack, SpectralConfig};

#[test]
fn every_corpus_phantom_satisfies_the_circular_conditions() {
    let a = AngularGrid::new(256).unwrap();
    let r = RadialGrid::new(0.0, 2.0, 512).unwrap();
    for (name, spec) in corpus() {
        let g = circular_forward(&spec, a, r, 1024).unwrap();
        let report = check_circular(&g, &CheckConfig::default()).unwrap();
        assert!(report.verdict.is_pass(), "{name}");
    }
}

/// `r^n` times a bump of radius 0.8: smooth at the origin for every order.
fn harmonic(grid: RadialGrid, n: i32, c: Complex64) -> RadialProfile {
    RadialProfile::from_fn(grid, |r| {
        let t = r * r / 0.64;
        if t < 1.0 {
            c * (r.powi(n) * (-1.0 / (1.0 - t)).exp())
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[test]
fn synthetic_range_data_inverts_and_reforwards() {
    let r_grid = RadialGrid::new(0.0, 1.0, 257).unwrap();
    let rho = RadialGrid::new(0.0, 2.0, 512).unwrap();
    let mut f = HarmonicStack::zeros(4, r_grid);
    for (n, c) in [(0, Complex64::new(1.0, 0.0)), (2, Complex64::new(0.3, -0.2)), (3, Complex64::new(0.0, 0.5))] {
        let p = harmonic(r_grid, n, c);
        *f.profile_mut(-n) = p.conj();
        *f.profile_mut(n) = p;
    }
    // at sigma_max = 60 truncation leaves moment residuals near 2e-6
    let config = SpectralConfig { sigma_max: 120.0, ..SpectralConfig::default() };
    let g = norton_forward_stack(&f, rho, &config).unwrap();
    assert!(check_circular_moments(&g, 1e-6).verdict.is_pass());
    assert!(check_bessel_zero_condition(&g, 10, 1e-5).unwrap().verdict.is_pass());

    let back = invert_stack(&g, r_grid, &config).unwrap();
    let again = norton_forward_stack(&back, rho, &config).unwrap();
    for n in g.orders() {
        let err = again.profile(n).relative_l2_error(g.profile(n));
        assert!(err < 1e-2, "n={n}: {err}");
    }
}
