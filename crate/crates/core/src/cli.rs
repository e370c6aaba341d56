//! Command-line front end.
//!
//! Exit codes: 0 on success or a passing check, 1 when a range check fails,
//! 2 on any usage, input or numerical error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::DEFAULT_QUAD_POINTS;
use crate::grid::io::{load, save};
use crate::grid::{angular_decompose, RadialGrid, SinogramKind, DEFAULT_MAX_ORDER};
use crate::perturb::Perturbation;
use crate::phantom::{encode_pgm16, render, PhantomSpec};
use crate::pipeline::{self, PipelineConfig, DEFAULT_ANGLES, DEFAULT_RECONSTRUCTION_RADII};
use crate::range::{check, CheckConfig, RangeReport, Tolerances};
use crate::specfun::bessel_zeros;
use crate::spectral::{invert_stack, SpectralConfig};

pub const THREADS_ENV: &str = "CRADON_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cradon", version, about = "Circular Radon transforms, inversion and range checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phantom utilities.
    Phantom {
        #[command(subcommand)]
        action: PhantomAction,
    },
    /// Forward transform of a phantom into a sinogram file.
    Forward(ForwardArgs),
    /// Angular harmonics of a sinogram as CSV `n,rho,re,im`.
    Decompose(DecomposeArgs),
    /// Range-condition report for a sinogram.
    Check(CheckArgs),
    /// Reconstruction from circular data.
    Invert(InvertArgs),
    /// Forward, check and invert in one run.
    Pipeline(PipelineArgs),
    /// Bessel function utilities.
    Bessel {
        #[command(subcommand)]
        action: BesselAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum PhantomAction {
    /// Render a phantom to a 16-bit PGM and echo the normalised spec.
    Render {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 512)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum BesselAction {
    /// First positive zeros of `J_order` as CSV `index,zero`.
    Zeros {
        #[arg(long)]
        order: u32,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Circular,
    Planar,
}

impl From<KindArg> for SinogramKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Circular => SinogramKind::Circular,
            KindArg::Planar => SinogramKind::Planar,
        }
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = DEFAULT_ANGLES)]
    pub angles: usize,
    /// Radial samples; defaults to 512 for circular and 513 for planar data.
    #[arg(long)]
    pub radii: Option<usize>,
    /// Quadrature nodes per circle or line.
    #[arg(long, default_value_t = DEFAULT_QUAD_POINTS)]
    pub quad: usize,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[arg(long, default_value_t = crate::spectral::DEFAULT_SIGMA_MAX)]
    pub sigma_max: f64,
    /// Simpson intervals per unit of sigma.
    #[arg(long, default_value_t = crate::spectral::DEFAULT_SIGMA_DENSITY)]
    pub sigma_density: f64,
    /// Half-width of the interval removed around each zero of J_n.
    #[arg(long, default_value_t = crate::spectral::DEFAULT_EXCLUSION_MARGIN)]
    pub margin: f64,
}

impl SpectralArgs {
    fn config(&self) -> SpectralConfig {
        SpectralConfig {
            sigma_max: self.sigma_max,
            density: self.sigma_density,
            exclusion_margin: self.margin,
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckOptions {
    /// Largest harmonic order checked.
    #[arg(long, default_value_t = 16)]
    pub orders: usize,
    /// Zeros of J_n tested per order.
    #[arg(long, default_value_t = 10)]
    pub zeros: usize,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long)]
    pub tol_support: Option<f64>,
    #[arg(long)]
    pub tol_moments: Option<f64>,
    #[arg(long)]
    pub tol_polynomial: Option<f64>,
    #[arg(long)]
    pub tol_bessel: Option<f64>,
    #[arg(long)]
    pub tol_evenness: Option<f64>,
    #[arg(long)]
    pub tol_mellin: Option<f64>,
}

impl CheckOptions {
    fn config(&self, base: Tolerances) -> Result<CheckConfig> {
        let pick = |v: Option<f64>, d: f64| -> Result<f64> {
            match v {
                Some(t) if !(t >= 0.0 && t.is_finite()) => {
                    Err(Error::domain(format!("tolerance must be finite and nonnegative, got {t}")))
                }
                Some(t) => Ok(t),
                None => Ok(d),
            }
        };
        Ok(CheckConfig {
            max_order: self.orders,
            zeros_per_order: self.zeros,
            epsilon: self.epsilon,
            polynomial_k_max: 8,
            tolerances: Tolerances {
                support: pick(self.tol_support, base.support)?,
                moments: pick(self.tol_moments, base.moments)?,
                polynomial: pick(self.tol_polynomial, base.polynomial)?,
                bessel: pick(self.tol_bessel, base.bessel)?,
                evenness: pick(self.tol_evenness, base.evenness)?,
                mellin: pick(self.tol_mellin, base.mellin)?,
                cormack: base.cormack,
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, value_enum, default_value = "circular")]
    pub kind: KindArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output sinogram (`.csin`, or `.csv`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Needed for CSV input only.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    pub orders: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[command(flatten)]
    pub options: CheckOptions,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    pub orders: usize,
    /// Radial nodes of the reconstruction on [0, 1].
    #[arg(long, default_value_t = DEFAULT_RECONSTRUCTION_RADII)]
    pub r_count: usize,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Reconstruction image (16-bit PGM).
    #[arg(long)]
    pub out: PathBuf,
    /// JSON with grids and per-order re-forward residuals.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, value_enum, default_value = "circular")]
    pub kind: KindArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub check: CheckOptions,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Harmonics kept for inversion.
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    pub invert_orders: usize,
    #[arg(long, default_value_t = DEFAULT_RECONSTRUCTION_RADII)]
    pub r_count: usize,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Injected violation, `family:order:amplitude`.
    #[arg(long)]
    pub perturb: Option<Perturbation>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving g.csin, report.json and f_rec.pgm.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parses `std::env::args` and runs; never panics on bad input.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::domain(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::domain(format!("thread pool: {e}")))
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Phantom { action: PhantomAction::Render { spec, size, out } } => cmd_phantom(&spec, size, &out),
        Command::Forward(args) => cmd_forward(&args),
        Command::Decompose(args) => cmd_decompose(&args),
        Command::Check(args) => cmd_check(&args),
        Command::Invert(args) => cmd_invert(&args),
        Command::Pipeline(args) => cmd_pipeline(&args),
        Command::Bessel { action: BesselAction::Zeros { order, count, out } } => {
            cmd_bessel_zeros(order, count, out.as_deref())
        }
    }
}

fn verdict_code(report: &RangeReport) -> ExitCode {
    if report.verdict.is_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn read_spec(path: &Path) -> Result<PhantomSpec> {
    PhantomSpec::from_json(&fs::read_to_string(path)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_pgm(path: &Path, pixels: &[f64], size: usize) -> Result<()> {
    fs::write(path, encode_pgm16(pixels, size, size)?)?;
    Ok(())
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::domain("image size must be positive"));
    }
    Ok(())
}

fn cmd_phantom(spec_path: &Path, size: usize, out: &Path) -> Result<ExitCode> {
    check_size(size)?;
    let spec = read_spec(spec_path)?;
    write_pgm(out, &render(&spec, size), size)?;
    println!("{}", spec.to_json());
    Ok(ExitCode::SUCCESS)
}

fn pipeline_config(kind: KindArg, grid: &GridArgs) -> PipelineConfig {
    let mut config = PipelineConfig::new(kind.into());
    config.angles = grid.angles;
    if let Some(r) = grid.radii {
        config.radii = r;
    }
    config.quad_points = grid.quad;
    config
}

fn cmd_forward(args: &ForwardArgs) -> Result<ExitCode> {
    let spec = read_spec(&args.spec)?;
    let config = pipeline_config(args.kind, &args.grid);
    save(&args.out, &pipeline::forward(&spec, &config)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<ExitCode> {
    let sino = load(&args.input, args.kind.map(Into::into))?;
    let stack = angular_decompose(&sino, args.orders)?;
    let mut out = std::io::BufWriter::new(fs::File::create(&args.out)?);
    writeln!(out, "n,rho,re,im")?;
    let grid = stack.grid();
    for (n, profile) in stack.profiles() {
        for (i, v) in profile.values().iter().enumerate() {
            writeln!(out, "{n},{:.17e},{:.17e},{:.17e}", grid.point(i), v.re, v.im)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: &CheckArgs) -> Result<ExitCode> {
    let sino = load(&args.input, args.kind.map(Into::into))?;
    if let Some(kind) = args.kind {
        if SinogramKind::from(kind) != sino.kind() {
            return Err(Error::domain(format!("file holds {:?} data, not {kind:?}", sino.kind())));
        }
    }
    let mut report = check(&sino, &args.options.config(Tolerances::default())?)?;
    report.provenance.input = Some(args.input.display().to_string());
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    println!("verdict={}", report.verdict);
    Ok(verdict_code(&report))
}

#[derive(Serialize)]
struct InversionReport {
    input: String,
    angles: usize,
    data_grid: RadialGrid,
    reconstruction_grid: RadialGrid,
    max_order: usize,
    spectral: SpectralConfig,
    /// `(n, relative L2 of norton_forward(f_n) against g_n)` for `n >= 0`.
    reforward_residuals: Vec<ReforwardEntry>,
}

#[derive(Serialize)]
struct ReforwardEntry {
    n: i32,
    relative_l2: f64,
}

fn cmd_invert(args: &InvertArgs) -> Result<ExitCode> {
    check_size(args.size)?;
    let sino = load(&args.input, Some(SinogramKind::Circular))?;
    pipeline::require_circular(&sino)?;
    let spectral = args.spectral.config();
    let g_stack = angular_decompose(&sino, args.orders)?;
    let r_grid = RadialGrid::new(0.0, 1.0, args.r_count)?;
    let f_stack = invert_stack(&g_stack, r_grid, &spectral)?;
    write_pgm(&args.out, &pipeline::render_reconstruction(&f_stack, args.size), args.size)?;
    if let Some(path) = &args.report {
        let residuals = pipeline::reforward_residuals(&f_stack, &g_stack, &spectral)?;
        let report = InversionReport {
            input: args.input.display().to_string(),
            angles: sino.angular().count(),
            data_grid: sino.radial(),
            reconstruction_grid: r_grid,
            max_order: args.orders,
            spectral,
            reforward_residuals: residuals
                .into_iter()
                .map(|(n, relative_l2)| ReforwardEntry { n, relative_l2 })
                .collect(),
        };
        write_json(path, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<ExitCode> {
    check_size(args.size)?;
    let spec = read_spec(&args.spec)?;
    fs::create_dir_all(&args.out_dir)?;
    let mut config = pipeline_config(args.kind, &args.grid);
    config.max_order = args.invert_orders;
    config.reconstruction_radii = args.r_count;
    config.check = args.check.config(Tolerances::default())?;
    config.spectral = args.spectral.config();
    config.perturbation = args.perturb;
    config.seed = args.seed;

    let outcome = pipeline::run(&spec, &config)?;
    let mut report = outcome.report;
    report.provenance.input = Some(args.spec.display().to_string());
    save(&args.out_dir.join("g.csin"), &outcome.sinogram)?;
    if let Some(f_stack) = &outcome.reconstruction {
        write_pgm(
            &args.out_dir.join("f_rec.pgm"),
            &pipeline::render_reconstruction(f_stack, args.size),
            args.size,
        )?;
    }
    write_json(&args.out_dir.join("report.json"), &report)?;
    println!("verdict={} l2_rel_err={}", report.verdict, format_error(outcome.l2_rel_err));
    if !report.errors.is_empty() {
        for e in &report.errors {
            eprintln!("error: {e}");
        }
        return Ok(ExitCode::from(2));
    }
    Ok(verdict_code(&report))
}

fn format_error(err: f64) -> String {
    if err.is_nan() {
        "nan".into()
    } else {
        format!("{err:.6}")
    }
}

fn cmd_bessel_zeros(order: u32, count: usize, out: Option<&Path>) -> Result<ExitCode> {
    let table = bessel_zeros(order, count)?;
    let mut text = String::from("index,zero\n");
    for (k, z) in table.zeros.iter().enumerate() {
        text.push_str(&format!("{},{:.14e}\n", k + 1, z));
    }
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_invocations() {
        let parse = |line: &str| Cli::try_parse_from(line.split_whitespace()).map(|c| c.command);
        assert!(matches!(
            parse("cradon phantom render --spec f.json --size 512 --out f.pgm").unwrap(),
            Command::Phantom { .. }
        ));
        match parse("cradon check --in g.csin --kind circular --orders 16 --zeros 10 --out r.json").unwrap() {
            Command::Check(a) => {
                assert_eq!((a.options.orders, a.options.zeros), (16, 10));
                assert_eq!(a.kind, Some(KindArg::Circular));
            }
            other => panic!("{other:?}"),
        }
        match parse("cradon pipeline --spec f.json --out-dir d --perturb moment:3:1e-2 --seed 4").unwrap() {
            Command::Pipeline(a) => {
                assert_eq!(a.perturb.unwrap().order, 3);
                assert_eq!(a.seed, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("cradon pipeline --spec f.json --out-dir d --perturb moment:3").is_err());
        assert!(parse("cradon bessel zeros --order 2").is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let opts = CheckOptions {
            orders: 4,
            zeros: 3,
            epsilon: 0.1,
            tol_support: None,
            tol_moments: Some(1e-3),
            tol_polynomial: None,
            tol_bessel: None,
            tol_evenness: None,
            tol_mellin: None,
        };
        let cfg = opts.config(Tolerances::default()).unwrap();
        assert_eq!(cfg.tolerances.moments, 1e-3);
        assert_eq!(cfg.tolerances.bessel, Tolerances::default().bessel);
        let bad = CheckOptions { tol_bessel: Some(-1.0), ..opts };
        assert!(bad.config(Tolerances::default()).is_err());
    }

    #[test]
    fn error_formatting() {
        assert_eq!(format_error(f64::NAN), "nan");
        assert_eq!(format_error(0.0123456789), "0.012346");
    }
}
