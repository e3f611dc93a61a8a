use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dn::config::SystemSpecFile;
use dn::ellipticity::{self, EllipticityConfig, Resolution};
use dn::error::{Error, Result};
use dn::example::{self, ExampleParams, ExperimentConfig};
use dn::fourier::{self, GridField, GridSpec};
use dn::norms;
use dn::spectral::{self, RefinementReport};
use dn::symbol::DNSystem;

#[derive(Parser)]
#[command(name = "dn", about = "Spectral toolkit for mixed-order elliptic systems")]
struct Cli {
    /// Worker thread cap; DN_JOBS overrides.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized probes.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and semantically validate a system specification file.
    Validate { path: PathBuf },
    /// Check parameter-ellipticity in the file's sector.
    CheckEllipticity {
        path: PathBuf,
        /// Samples per constraint-set axis (directions, radii, arguments).
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the frozen-coefficient problem (A0(x0, D) - lambda) u = f
    /// for a seeded band-limited right-hand side.
    Solve {
        path: PathBuf,
        /// Spectral parameter as "re,im".
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        /// Freezing point, comma-separated; defaults to the origin.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report norms of a field (seeded band-limited by default).
    Norms {
        path: PathBuf,
        /// Spectral parameter as "re,im" for the parameter-dependent norms.
        #[arg(long, default_value = "-10,0", allow_hyphen_values = true)]
        lambda: String,
        /// Read the field from a binary file instead of generating one.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Use the zero field.
        #[arg(long, conflicts_with = "field")]
        zero: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble the operator and list its eigenvalues as CSV.
    Spectrum {
        path: PathBuf,
        /// Override the grid size M.
        #[arg(long)]
        grid: Option<usize>,
        /// Override the period L.
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the bundled benchmark experiment end to end.
    ReproduceExample {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Sector aperture epsilon (sector is epsilon..2*pi - epsilon).
        #[arg(long, default_value_t = std::f64::consts::PI / 6.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Output directory for report.json and eigenvalues.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = std::env::var("DN_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .or(cli.jobs);
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 2,
        Error::Json(_) => 3,
        Error::Validation { .. }
        | Error::InvalidOrders { .. }
        | Error::AdjointOrders { .. }
        | Error::ZeroLambda
        | Error::Unsupported(_) => 4,
        Error::SingularFrequency { .. }
        | Error::DegenerateResolution(_)
        | Error::SizeCap { .. }
        | Error::EigenNonConvergence
        | Error::ThresholdCap { .. } => 5,
    }
}

fn load(path: &Path) -> Result<SystemSpecFile> {
    let text = fs::read_to_string(path)?;
    let file = SystemSpecFile::from_json(&text)?;
    file.validate()?;
    Ok(file)
}

fn parse_complex(text: &str) -> Result<Complex64> {
    let parts: Vec<&str> = text.split(',').collect();
    let bad = || Error::Validation {
        path: "--lambda".into(),
        reason: format!("expected \"re,im\", got {text:?}"),
    };
    if parts.len() != 2 {
        return Err(bad());
    }
    let re = parts[0].trim().parse().map_err(|_| bad())?;
    let im = parts[1].trim().parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn parse_point(text: &str, n: usize) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        text.split(',').map(|s| s.trim().parse()).collect();
    let vals = vals.map_err(|_| Error::Validation {
        path: "--x0".into(),
        reason: format!("expected {n} comma-separated numbers"),
    })?;
    if vals.len() != n {
        return Err(Error::Validation {
            path: "--x0".into(),
            reason: format!("expected {n} components, got {}", vals.len()),
        });
    }
    Ok(vals)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn band_limited_field(spec: GridSpec, ncomp: usize, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = (spec.m() / 4) as i64;
    let mut hat = vec![vec![Complex64::new(0.0, 0.0); spec.points()]; ncomp];
    for comp in hat.iter_mut() {
        for flat in 0..spec.points() {
            let ks: Vec<i64> = spec
                .unflatten(flat)
                .iter()
                .map(|&i| spec.axis_freq(i))
                .collect();
            if ks.iter().all(|k| k.abs() <= band) {
                comp[flat] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    GridField::from_spectral(spec, hat)
}

fn format_f64(v: f64) -> String {
    format!("{v:.17e}")
}

fn eigenvalue_csv(report: &RefinementReport) -> String {
    let mut csv = String::from("re,im,stability,distance_to_halfline\n");
    for class in &report.classifications {
        let label = if class.isolated_candidate {
            "isolated-candidate"
        } else if class.stable {
            "stable"
        } else {
            "moved"
        };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            format_f64(class.eigenvalue.re),
            format_f64(class.eigenvalue.im),
            label,
            format_f64(class.distance_to_halfline),
        ));
    }
    csv
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Validate { path } => {
            let file = load(path)?;
            println!(
                "valid: {} x {} system in dimension {}, grid M = {}, L = {}",
                file.size, file.size, file.n, file.grid.m, file.grid.l
            );
            Ok(0)
        }
        Command::CheckEllipticity {
            path,
            resolution,
            out,
        } => {
            let file = load(path)?;
            let sys = file.to_system()?;
            let sector = file.sector()?;
            let mut config = EllipticityConfig::default();
            if let Some(r) = resolution {
                config.resolution = Resolution {
                    directions: *r,
                    radial: *r,
                    args: *r,
                };
            }
            config.kappa_floor = file.tolerance("kappa_floor", config.kappa_floor);
            let report = ellipticity::check_parameter_ellipticity(&sys, &sector, &config)?;
            let pass = report.pass;
            emit(out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(if pass { 0 } else { 1 })
        }
        Command::Solve {
            path,
            lambda,
            x0,
            out,
        } => {
            let file = load(path)?;
            let sys = file.to_system()?;
            let spec = file.grid_spec()?;
            let lambda = parse_complex(lambda)?;
            let x0 = match x0 {
                Some(text) => parse_point(text, file.n)?,
                None => vec![0.0; file.n],
            };
            let f = band_limited_field(spec, sys.size(), cli.seed);
            let u = fourier::frozen_resolvent_apply(&sys, &x0, lambda, &f)?;
            let residual = roundtrip_residual(&sys, &x0, lambda, &u, &f);
            if let Some(dir) = out {
                fs::create_dir_all(dir)?;
                let mut w = fs::File::create(dir.join("solution.bin"))?;
                u.write_binary(&mut w)?;
                let mut w = fs::File::create(dir.join("rhs.bin"))?;
                f.write_binary(&mut w)?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "lambda": { "re": lambda.re, "im": lambda.im },
                    "x0": x0,
                    "residual": residual,
                }))?
            );
            Ok(0)
        }
        Command::Norms {
            path,
            lambda,
            field,
            zero,
            out,
        } => {
            let file = load(path)?;
            let sys = file.to_system()?;
            let spec = file.grid_spec()?;
            let lambda = parse_complex(lambda)?;
            let u = if *zero {
                GridField::zeros(spec, sys.size())
            } else if let Some(field_path) = field {
                let mut r = fs::File::open(field_path)?;
                GridField::read_binary(&mut r)?
            } else {
                band_limited_field(spec, sys.size(), cli.seed)
            };
            let orders = sys.orders();
            let mut per_component = Vec::new();
            for (k, comp) in u.comps.iter().enumerate() {
                per_component.push(serde_json::json!({
                    "component": k,
                    "l2": norms::lp_norm(comp, 2.0),
                    "sobolev_t": norms::sobolev_norm(comp, &u.spec, orders.t()[k] as u32, 2.0),
                    "param_t": norms::param_norm(
                        comp, &u.spec, orders.t()[k], 2.0, lambda, orders.m()[k],
                    )?,
                }));
            }
            let (t_norm, neg_s_norm) = norms::product_norms(&u, 2.0, lambda, orders)?;
            emit(
                out,
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "lambda": { "re": lambda.re, "im": lambda.im },
                        "per_component": per_component,
                        "product_t": t_norm,
                        "product_neg_s": neg_s_norm,
                    }))?
                ),
            )?;
            Ok(0)
        }
        Command::Spectrum {
            path,
            grid,
            period,
            out,
        } => {
            let file = load(path)?;
            let sys = file.to_system()?;
            let spec = GridSpec::new(
                file.n,
                grid.unwrap_or(file.grid.m),
                period.unwrap_or(file.grid.l),
            )?;
            let op = spectral::assemble(&sys, &spec, spectral::DEFAULT_SIZE_CAP)?;
            let report = spectral::spectrum(&op)?;
            let mut csv = String::from("re,im\n");
            for eig in &report.eigenvalues {
                csv.push_str(&format!(
                    "{},{}\n",
                    format_f64(eig.re),
                    format_f64(eig.im)
                ));
            }
            emit(out, &csv)?;
            Ok(0)
        }
        Command::ReproduceExample {
            dim,
            c,
            epsilon,
            amplitude,
            grid,
            out,
        } => {
            let config = ExperimentConfig {
                params: ExampleParams {
                    dim: *dim,
                    c: *c,
                    bump_amplitude: *amplitude,
                    ..Default::default()
                },
                epsilon: *epsilon,
                grid_m: *grid,
                seed: cli.seed,
                ..Default::default()
            };
            let report = example::run_experiment(&config)?;
            fs::create_dir_all(out)?;
            let mut json = fs::File::create(out.join("report.json"))?;
            writeln!(json, "{}", serde_json::to_string_pretty(&report)?)?;
            fs::write(out.join("eigenvalues.csv"), eigenvalue_csv(&report.refinement))?;
            println!(
                "ellipticity: {}; isolated candidates: {}; failures: {}",
                if report.ellipticity.pass { "pass" } else { "fail" },
                report.refinement.isolated_count,
                report.failures.len()
            );
            Ok(if report.failures.is_empty() { 0 } else { 1 })
        }
    }
}

fn roundtrip_residual(
    sys: &DNSystem,
    x0: &[f64],
    lambda: Complex64,
    u: &GridField,
    f: &GridField,
) -> f64 {
    let frozen = sys.frozen_principal(x0);
    fourier::apply_operator(&frozen, lambda, u).rel_distance(f)
}
