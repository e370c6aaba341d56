//! Acceptance criteria, each at its stated tolerance. Prints one
//! `PASS`/`FAIL` line per criterion and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use cradon::forward::{circular_forward, planar_forward};
use cradon::grid::{angular_decompose, radial_moment, AngularGrid, RadialGrid, Sinogram};
use cradon::perturb::{apply, PerturbContext, Perturbation};
use cradon::phantom::{corpus, harmonic_profiles, PhantomSpec};
use cradon::pipeline::{run, PipelineConfig};
use cradon::range::{
    check_bessel_zero_condition, check_circular, check_circular_moments, check_planar_evenness, check_planar_mellin,
    check_planar_moments, check_support, cormack_consistency, CheckConfig, Condition,
};
use cradon::specfun::{bessel_zeros, jn, lemma_lower_bound_scan};
use cradon::spectral::{bessel_moment_taylor, norton_forward, SpectralConfig};

const ANGLES: usize = 256;
const RADII: usize = 512;
const PLANAR_RADII: usize = 513;
const QUAD: usize = 1024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn offset_bump() -> PhantomSpec {
    PhantomSpec::bump([0.3, 0.0], 0.25, 1.0)
}

fn circular_data(spec: &PhantomSpec) -> Sinogram {
    let a = AngularGrid::new(ANGLES).unwrap();
    let r = RadialGrid::new(0.0, 2.0, RADII).unwrap();
    circular_forward(spec, a, r, QUAD).unwrap()
}

fn planar_data(spec: &PhantomSpec) -> Sinogram {
    let a = AngularGrid::new(ANGLES).unwrap();
    let s = RadialGrid::new(-1.0, 1.0, PLANAR_RADII).unwrap();
    planar_forward(spec, a, s, QUAD).unwrap()
}

/// Per-order relative L2 gap between the spectral forward relation and the
/// direct arc quadrature.
fn norton_gaps(sigma_max: f64) -> Vec<f64> {
    let spec = offset_bump();
    let g = angular_decompose(&circular_data(&spec), 8).unwrap();
    let f = harmonic_profiles(&spec, 8, RadialGrid::new(0.0, 1.0, 513).unwrap()).unwrap();
    let config = SpectralConfig { sigma_max, ..SpectralConfig::default() };
    (0..=8)
        .map(|n| {
            let g_n = g.profile(n);
            norton_forward(f.profile(n), n, g_n.grid(), &config).unwrap().relative_l2_error(g_n)
        })
        .collect()
}

fn norton_relation() -> Outcome {
    let gaps = norton_gaps(60.0);
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let list: Vec<String> = gaps.iter().map(|e| format!("{e:.1e}")).collect();
    outcome(worst <= 1e-3, format!("sigma_max=60, n=0..8 rel L2 [{}], tol 1e-3", list.join(" ")))
}

fn necessity() -> Outcome {
    let g = circular_data(&offset_bump());
    let support = check_support(&g, 0.05, 1e-12).unwrap().max_residual();
    let stack = angular_decompose(&g, 16).unwrap();
    let moments = check_circular_moments(&stack, 1e-6).max_residual();
    let bessel = check_bessel_zero_condition(&stack.with_max_order(12), 10, 1e-5).unwrap().max_residual();
    outcome(
        support < 1e-12 && moments < 1e-6 && bessel < 1e-5,
        format!("support {support:.1e} (<1e-12), moments {moments:.1e} (<1e-6), bessel {bessel:.1e} (<1e-5)"),
    )
}

fn detectability() -> Outcome {
    let g = circular_data(&offset_bump());
    let config = CheckConfig::default();
    let ctx = PerturbContext::default();
    let cases = [
        ("support:0:1e-2", Condition::Support),
        ("moment:3:1e-2", Condition::CircularMoments),
        ("bessel:2:1e-2", Condition::BesselZeros),
    ];
    let mut pass = check_circular(&g, &config).unwrap().verdict.is_pass();
    let mut parts = Vec::new();
    for (text, intended) in cases {
        let p: Perturbation = text.parse().unwrap();
        let report = check_circular(&apply(&g, &p, &ctx).unwrap(), &config).unwrap();
        for c in &report.conditions {
            let targeted = c.condition == intended
                || (intended == Condition::CircularMoments && c.condition == Condition::CircularMomentsPolynomial);
            if targeted {
                let ratio = c.max_residual() / c.tolerance;
                pass &= ratio >= 100.0;
                if c.condition == intended {
                    parts.push(format!("{text} -> {ratio:.1e}x tol"));
                }
            } else if !c.verdict.is_pass() {
                pass = false;
                parts.push(format!("{text} also trips {:?}", c.condition));
            }
        }
    }
    outcome(pass, parts.join(", "))
}

fn round_trip() -> Outcome {
    let config = PipelineConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in corpus() {
        let out = run(&spec, &config).unwrap();
        pass &= out.l2_rel_err <= 0.05;
        parts.push(format!("{name} {:.4}", out.l2_rel_err));
    }
    let zero = run(&PhantomSpec::empty(), &config).unwrap();
    let exact_zero = zero.reconstruction.as_ref().is_some_and(|s| s.max_l1_norm() == 0.0) && zero.l2_rel_err == 0.0;
    pass &= exact_zero;
    parts.push(format!("zero phantom exact: {exact_zero}"));
    outcome(pass, format!("{} (tol 0.05)", parts.join(", ")))
}

fn order_of_vanishing() -> Outcome {
    let g = angular_decompose(&circular_data(&offset_bump()), 6).unwrap();
    let conditions_hold = check_circular_moments(&g, 1e-6).verdict.is_pass();
    let sigmas: Vec<f64> = (0..=10).map(|i| 1e-3 * 10f64.powf(i as f64 / 10.0)).collect();
    let mut pass = conditions_hold;
    let mut parts = Vec::new();
    for n in [2, 4, 6] {
        let profile = g.profile(n);
        // the checked moments below order n are set to their exact value 0
        let moments: Vec<Complex64> = (0..40u32)
            .map(|k| if k < n as u32 { Complex64::new(0.0, 0.0) } else { radial_moment(profile, 2 * k) })
            .collect();
        let logs: Vec<(f64, f64)> = sigmas
            .iter()
            .map(|&s| (s.ln(), bessel_moment_taylor(&moments, s).unwrap().norm().ln()))
            .collect();
        let slope = least_squares_slope(&logs);
        pass &= (slope - 2.0 * n as f64).abs() <= 0.1;
        parts.push(format!("n={n} slope {slope:.4}"));
    }
    outcome(pass, format!("{} (target 2n +- 0.1, moment conditions hold: {conditions_hold})", parts.join(", ")))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    num / den
}

fn real_axis_bound() -> Outcome {
    let mut pass = true;
    let mut worst_change = 0.0f64;
    let mut smallest = f64::INFINITY;
    for n in 0..=10 {
        let a = lemma_lower_bound_scan(n, 200.0).unwrap().min_scaled;
        let b = lemma_lower_bound_scan(n, 400.0).unwrap().min_scaled;
        let change = (a - b).abs() / a;
        pass &= a > 0.0 && b > 0.0 && change < 0.1;
        worst_change = worst_change.max(change);
        smallest = smallest.min(a);
    }
    outcome(pass, format!("min over n<=10 {smallest:.4}, largest 200->400 change {:.2}%", 100.0 * worst_change))
}

fn planar_equivalence() -> Outcome {
    let mut pass = true;
    let mut worst_even = 0.0f64;
    let mut entries = 0;
    for (_, spec) in corpus() {
        let g = planar_data(&spec);
        worst_even = worst_even.max(check_planar_evenness(&g, 1e-10).unwrap().max_residual());
        let stack = angular_decompose(&g, 12).unwrap();
        let moments = check_planar_moments(&stack, 1e-6);
        let mellin = check_planar_mellin(&stack, 1e-6).unwrap();
        pass &= moments.verdict == mellin.verdict && moments.entries.len() == mellin.entries.len();
        for e in &mellin.entries {
            let k = e.k_or_zero_index.unwrap() - 1;
            pass &= moments.entry(e.n, Some(k)).is_some_and(|m| m.pass == e.pass);
            entries += 1;
        }
    }
    pass &= worst_even < 1e-10;
    outcome(pass, format!("{entries} paired entries agree: {pass}, evenness {worst_even:.1e} (<1e-10)"))
}

fn cormack() -> Outcome {
    let spec = offset_bump();
    let g = angular_decompose(&planar_data(&spec), 3).unwrap();
    let f = harmonic_profiles(&spec, 3, RadialGrid::new(0.0, 1.0, 513).unwrap()).unwrap();
    let report = cormack_consistency(&f, &g, &[2.0, 3.0, 4.0, 5.0], 1e-4).unwrap();
    let parts: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("n={} {:.1e}", e.n.unwrap(), e.residual))
        .collect();
    let skipped = if report.notes.is_empty() { String::new() } else { format!("; {}", report.notes.join("; ")) };
    outcome(report.verdict.is_pass(), format!("{} (tol 1e-4){skipped}", parts.join(", ")))
}

fn special_functions() -> Outcome {
    let mut recurrence = 0.0f64;
    for n in 1..=15 {
        for i in 0..=2000 {
            let x = 0.1 + 79.9 * i as f64 / 2000.0;
            let r = jn(n - 1, x) + jn(n + 1, x) - 2.0 * n as f64 / x * jn(n, x);
            recurrence = recurrence.max(r.abs());
        }
    }
    let tables: Vec<Vec<f64>> = (0..=11).map(|n| bessel_zeros(n, 20).unwrap().zeros).collect();
    let mut on_root = 0.0f64;
    for (n, t) in tables.iter().take(11).enumerate() {
        for z in t {
            on_root = on_root.max(jn(n as i32, *z).abs());
        }
    }
    let interlace = (0..=10).all(|n| {
        let (a, b) = (&tables[n], &tables[n + 1]);
        (0..20).all(|k| a[k] < b[k]) && (0..19).all(|k| b[k] < a[k + 1])
    });
    outcome(
        recurrence < 1e-9 && on_root < 1e-12 && interlace,
        format!("recurrence {recurrence:.1e} (<1e-9), |J_n(zero)| {on_root:.1e} (<1e-12), interlace {interlace}"),
    )
}

/// Not a criterion: the forward-relation gap once the frequency cutoff is
/// large enough that truncation stops dominating.
fn norton_relation_wide_band() -> String {
    let gaps = norton_gaps(250.0);
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    format!("info  norton_relation at sigma_max=250: worst rel L2 {worst:.1e}")
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("norton_relation", norton_relation),
        ("necessity", necessity),
        ("detectability", detectability),
        ("inversion_round_trip", round_trip),
        ("order_of_vanishing", order_of_vanishing),
        ("real_axis_bound", real_axis_bound),
        ("planar_equivalence", planar_equivalence),
        ("cormack_consistency", cormack),
        ("special_functions", special_functions),
    ];
    let mut failures = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = criterion();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failures += 1;
        }
        println!(
            "{verdict}  {}/9 {name}: {} [{:.1}s]",
            i + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{}", norton_relation_wide_band());
    println!("acceptance: {} of 9 criteria pass", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
