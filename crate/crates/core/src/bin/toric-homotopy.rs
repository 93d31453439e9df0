use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use toric_homotopy::condlen::{condition_length, RootCurve};
use toric_homotopy::constants::derive_constants;
use toric_homotopy::example;
use toric_homotopy::geometry::{metric_data, MetricMode};
use toric_homotopy::newton::alpha_certificate;
use toric_homotopy::oracles::self_check;
use toric_homotopy::path::{homotopy_to_json, parse_homotopy, CoefficientPath, Homotopy};
use toric_homotopy::projective::{proj_condition_length, HomogeneousPath};
use toric_homotopy::quadrature::QuadratureOptions;
use toric_homotopy::supports::{parse_point, parse_system, point_to_json, system_to_json, ToricPoint};
use toric_homotopy::tracker::{track, StepOptions};
use toric_homotopy::Error;

const EXIT_UNCERTIFIED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "toric-homotopy", version, about = "Certified path tracking for sparse polynomial systems")]
struct Cli {
    #[command(flatten)]
    config: JobConfig,

    /// Run the built-in oracle checks before anything else.
    #[arg(long, global = true)]
    self_check: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct JobConfig {
    /// Local norm used for certification and tracking.
    #[arg(long, global = true, default_value_t = MetricMode::Hermitian)]
    mode: MetricMode,

    /// Relative bisection tolerance for the step size.
    #[arg(long, global = true, default_value_t = 1e-10, value_parser = positive)]
    tol_t: f64,

    /// Relative tolerance of the condition-length quadrature.
    #[arg(long, global = true, default_value_t = 1e-4, value_parser = positive)]
    tol_quadrature: f64,

    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the randomized self-check.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Write the demonstration system, homotopy and start roots.
    Example {
        #[arg(long, default_value_t = 1.0)]
        t_start: f64,
        #[arg(long, default_value_t = 0.01)]
        t_end: f64,
    },
    /// Alpha-certify a point for a system.
    Certify {
        system: PathBuf,
        point: PathBuf,
        /// Also write the local metric data to this file.
        #[arg(long)]
        dump_metric: Option<PathBuf>,
    },
    /// Track each start point along a homotopy.
    Track {
        homotopy: PathBuf,
        /// Start point files; defaults to the start points in the homotopy file.
        #[arg(long = "start")]
        starts: Vec<PathBuf>,
    },
    /// Condition length from the homotopy start to each ε.
    Condlength {
        homotopy: PathBuf,
        #[arg(long = "start")]
        starts: Vec<PathBuf>,
        /// Comma-separated end times.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        eps: Vec<f64>,
        /// Add the condition length of the homogenized system.
        #[arg(long)]
        projective: bool,
    },
    /// Print the certification constants.
    Constants {
        /// Exit nonzero if any defining-equation residual exceeds 1e-10.
        #[arg(long)]
        check: bool,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s}")),
    }
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// Write through a temporary file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| input_error(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(contents.as_bytes()).map_err(io)?;
    file.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

fn load_starts(files: &[PathBuf], fallback: Vec<ToricPoint>) -> Result<Vec<ToricPoint>, Failure> {
    if files.is_empty() {
        if fallback.is_empty() {
            return Err(input_error("no start points given"));
        }
        return Ok(fallback);
    }
    files.iter().map(|p| Ok(parse_point(&read(p)?)?)).collect()
}

fn cmd_example(cfg: &JobConfig, t_start: f64, t_end: f64) -> Result<u8, Failure> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if !(t_start > 0.0 && t_end > 0.0) {
        return Err(input_error("the example needs t_start, t_end > 0"));
    }
    let roots = example::roots(t_start);
    let path = example::running_example_path(t_start, t_end);
    write_atomic(&dir.join("system.json"), &system_to_json(&example::running_example_system(t_start)))?;
    write_atomic(&dir.join("homotopy.json"), &homotopy_to_json(&path, &roots))?;
    for (k, r) in roots.iter().enumerate() {
        write_atomic(&dir.join(format!("root{}.json", k + 1)), &point_to_json(r))?;
    }
    println!("{}", dir.display());
    Ok(0)
}

fn cmd_certify(cfg: &JobConfig, system: &Path, point: &Path, dump: Option<&Path>) -> Result<u8, Failure> {
    let f = parse_system(&read(system)?)?;
    let x = parse_point(&read(point)?)?;
    if x.dim() != f.n() {
        return Err(input_error(format!("point has {} coordinates, system has {}", x.dim(), f.n())));
    }
    let constants = derive_constants()?;
    let cert = alpha_certificate(&f, &x, cfg.mode, &constants);
    if let Some(p) = dump {
        write_atomic(p, &metric_data(&f, &x).to_json())?;
    }
    emit(cfg.out.as_deref(), &serde_json::to_string_pretty(&cert).expect("certificate serializes"))?;
    if !cert.jacobian_condition_ok {
        return Ok(EXIT_NUMERICAL);
    }
    Ok(if cert.certified { 0 } else { EXIT_UNCERTIFIED })
}

fn cmd_track(cfg: &JobConfig, homotopy: &Path, files: &[PathBuf]) -> Result<u8, Failure> {
    let (path, fallback) = parse_homotopy(&read(homotopy)?)?;
    let starts = load_starts(files, fallback)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let constants = derive_constants()?;
    let options = StepOptions { tol_t: cfg.tol_t };
    let results: Vec<Result<u8, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .iter()
            .enumerate()
            .map(|(k, x0)| {
                let (path, constants, dir) = (&path, &constants, &dir);
                scope.spawn(move || -> Result<u8, Failure> {
                    let log = track(path, x0, constants, cfg.mode, options)?;
                    write_atomic(&dir.join(format!("track{}.json", k + 1)), &log.to_json())?;
                    write_atomic(&dir.join(format!("track{}.csv", k + 1)), &log.to_csv())?;
                    Ok(if log.certificate.certified { 0 } else { EXIT_UNCERTIFIED })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("tracking thread panicked")).collect()
    });
    let mut code = 0;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => {
                println!("{}", json!({"job": k + 1, "status": if c == 0 { "certified" } else { "uncertified" }}));
                code = code.max(c);
            }
            Err(e) => {
                println!("{}", json!({"job": k + 1, "status": "failed", "error": e.message}));
                code = code.max(e.code);
            }
        }
    }
    Ok(code)
}

fn projective_length(
    path: &CoefficientPath,
    x0: &ToricPoint,
    eps: f64,
    cfg: &JobConfig,
    quad: QuadratureOptions,
) -> Result<f64, Error> {
    let constants = derive_constants()?;
    let t0 = path.t_start();
    let mut curve = RootCurve::new(path, x0, t0, cfg.mode, &constants)?;
    let lift = |t: f64| {
        let (z, zdot) = curve.at(t)?;
        let mut x = vec![Complex64::new(1.0, 0.0)];
        let mut xdot = vec![Complex64::new(0.0, 0.0)];
        for (zi, vi) in z.coords().iter().zip(&zdot) {
            let e = zi.exp();
            x.push(e);
            xdot.push(e * vi);
        }
        Ok((x, xdot))
    };
    proj_condition_length(&HomogeneousPath::new(path), lift, t0, eps, quad)
}

fn cmd_condlength(cfg: &JobConfig, homotopy: &Path, files: &[PathBuf], eps: &[f64], projective: bool) -> Result<u8, Failure> {
    let (path, fallback) = parse_homotopy(&read(homotopy)?)?;
    let constants = derive_constants()?;
    let quad = QuadratureOptions { rel_tol: cfg.tol_quadrature };
    let mut csv = String::from("eps,curve,L_toric,L1");
    if projective {
        csv.push_str(",L_projective");
    }
    csv.push_str(",status\n");
    let mut code = 0;
    if !eps.is_empty() {
        let starts = load_starts(files, fallback)?;
        let t0 = path.t_start();
        for &e in eps {
            for (k, x0) in starts.iter().enumerate() {
                let extended = path.with_domain(t0, e)?;
                let mut fields = vec![format!("{e:e}"), (k + 1).to_string()];
                let mut status = String::from("ok");
                match condition_length(&extended, x0, t0, e, cfg.mode, quad, &constants) {
                    Ok(c) => fields.extend([format!("{:e}", c.length), format!("{:e}", c.length1)]),
                    Err(err) => {
                        fields.extend(["nan".into(), "nan".into()]);
                        status = err.to_string();
                        code = code.max(EXIT_NUMERICAL);
                    }
                }
                if projective {
                    match projective_length(&extended, x0, e, cfg, quad) {
                        Ok(l) => fields.push(format!("{l:e}")),
                        Err(err) => {
                            fields.push("nan".into());
                            if status == "ok" {
                                status = err.to_string();
                            }
                            code = code.max(if err.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT });
                        }
                    }
                }
                fields.push(format!("\"{}\"", status.replace('"', "'")));
                csv.push_str(&fields.join(","));
                csv.push('\n');
            }
        }
    }
    emit(cfg.out.as_deref(), csv.trim_end())?;
    Ok(code)
}

fn cmd_constants(cfg: &JobConfig, check: bool) -> Result<u8, Failure> {
    let table = derive_constants()?;
    emit(cfg.out.as_deref(), &serde_json::to_string_pretty(&table).expect("constants serialize"))?;
    if check {
        let r = table.residuals();
        eprintln!("{}", serde_json::to_string(&r).expect("residuals serialize"));
        if r.max() > 1e-10 {
            return Ok(EXIT_NUMERICAL);
        }
    }
    Ok(0)
}

fn run_self_check(seed: u64) -> Result<u8, Failure> {
    let checks = self_check(seed)?;
    let mut ok = true;
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    Ok(if ok { 0 } else { EXIT_NUMERICAL })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let cfg = &cli.config;
    if cli.self_check {
        let code = run_self_check(cfg.seed)?;
        if code != 0 || cli.command.is_none() {
            return Ok(code);
        }
    }
    match &cli.command {
        None => Err(input_error("no command given; see --help")),
        Some(Command::Example { t_start, t_end }) => cmd_example(cfg, *t_start, *t_end),
        Some(Command::Certify { system, point, dump_metric }) => cmd_certify(cfg, system, point, dump_metric.as_deref()),
        Some(Command::Track { homotopy, starts }) => cmd_track(cfg, homotopy, starts),
        Some(Command::Condlength { homotopy, starts, eps, projective }) => {
            cmd_condlength(cfg, homotopy, starts, eps, *projective)
        }
        Some(Command::Constants { check }) => cmd_constants(cfg, *check),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
