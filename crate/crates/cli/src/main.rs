//! `loewner`: command-line front end of the chordal Loewner toolkit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use loewner_core::capacity::{hcap_chain, hcap_mc};
use loewner_core::fitter::{fit_bang_bang_with, fit_multi_with, fit_shooting_with, FitConfig, FitResult};
use loewner_core::forward::trace_hulls;
use loewner_core::geometry::MultiSlit;
use loewner_core::inverse::drive_single;
use loewner_core::io::{read_driving_csv, to_json_string, write_driving_csv, FitReport};
use loewner_core::verify::{run_property_suite, DEFAULT_SEED};
use loewner_core::Error;

#[derive(Parser, Debug)]
#[command(name = "loewner", version, about = "Chordal Loewner evolution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file; standard output if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Samples of the time grid.
    #[arg(long, global = true, default_value_t = 1001, allow_hyphen_values = true, value_parser = parse_grid)]
    grid: usize,
    /// Bang-bang levels.
    #[arg(long, global = true, default_value_t = 8, allow_hyphen_values = true, value_parser = clap::value_parser!(u32).range(1..=12))]
    levels: u32,
    /// Tolerance on the fitted capacity of slit 1 (capacity normalized to 2).
    #[arg(long, global = true, default_value_t = 1e-5, allow_hyphen_values = true, value_parser = parse_tol)]
    tol: f64,
    /// Seed of randomized computations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo walkers for `hcap`; 0 skips the Monte Carlo estimate.
    #[arg(long = "mc-samples", global = true, default_value_t = 0)]
    mc_samples: usize,
    /// Fitting method.
    #[arg(long, global = true, value_enum, default_value_t = Method::Auto)]
    method: Method,
    /// Maximal number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Half-plane capacity of a multi-slit (JSON).
    Hcap { input: PathBuf },
    /// Driving function of a single slit (JSON in, CSV `t,U1` out).
    Drive { input: PathBuf },
    /// Hulls generated by a driving record (CSV in, JSON multi-slit out).
    Trace { input: PathBuf },
    /// Weights and driving functions of a multi-slit (JSON in, JSON out).
    Fit {
        input: PathBuf,
        /// Also write the driving record as CSV `t,U1..Un,lambda1..lambdan`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Property suite over the bundled fixtures (JSON report).
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Bang-bang for two slits, the nested search otherwise.
    Auto,
    Bangbang,
    Shooting,
    Both,
    /// Nested search for any number of slits (experimental).
    Multi,
}

fn parse_grid(s: &str) -> Result<usize, String> {
    let g: usize = s.parse().map_err(|e| format!("{e}"))?;
    if g < 16 {
        return Err("grid must be at least 16".into());
    }
    Ok(g)
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err("tol must be positive".into());
    }
    Ok(t)
}

/// Failure of a command: exit status and message.
struct Failure {
    code: u8,
    message: String,
    diagnostic: Option<serde_json::Value>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        if e.is_io() {
            Failure { code: 1, message, diagnostic: None }
        } else if e.is_validation() {
            Failure { code: 2, message, diagnostic: None }
        } else {
            let sweep = match &e {
                Error::Bracket { sweep, .. } => sweep.clone(),
                _ => Vec::new(),
            };
            let diagnostic = json!({ "error": message, "sweep": sweep });
            Failure { code: 3, message, diagnostic: Some(diagnostic) }
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 1, message: format!("{}: {e}", path.display()), diagnostic: None }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::ValueValidation => 2,
                _ => 1,
            });
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let start = Instant::now();
    match run(&cli) {
        Ok(summary) => {
            eprintln!("{summary} ({:.2}s)", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(f) => {
            if let Some(d) = &f.diagnostic {
                if let Ok(text) = to_json_string(d) {
                    let _ = emit(&cli.out, &text);
                }
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn read_multislit(path: &Path) -> Result<MultiSlit, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let m = MultiSlit::from_json(&text)?;
    m.ensure_valid()?;
    Ok(m)
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Hcap { input } => {
            let m = read_multislit(input)?;
            let chain = hcap_chain(&m)?;
            let mc = match cli.mc_samples {
                0 => None,
                n => Some(hcap_mc(&m, n, cli.seed.unwrap_or(0))?),
            };
            emit(&cli.out, &to_json_string(&json!({ "chain": chain, "montecarlo": mc }))?)?;
            Ok(match mc {
                Some(mc) => format!("hcap: chain {:.10} montecarlo {:.6} ± {:.6}", chain.value, mc.value, mc.stderr),
                None => format!("hcap: chain {:.10}", chain.value),
            })
        }
        Command::Drive { input } => {
            let m = read_multislit(input)?;
            if m.len() != 1 {
                return Err(Error::InvalidInput(format!("drive needs a single slit, got {}", m.len())).into());
            }
            let r = drive_single(m.slit(0), cli.grid)?;
            let mut buf = Vec::new();
            write_driving_csv(&mut buf, &r.driving, false)?;
            emit(&cli.out, &String::from_utf8_lossy(&buf))?;
            let (lo, hi) = r.driving.range();
            Ok(format!("drive: T = {:.10}, {} samples, U in [{lo:.6}, {hi:.6}]", r.driving.t_end(), cli.grid))
        }
        Command::Trace { input } => {
            let file = fs::File::open(input).map_err(|e| io_failure(input, e))?;
            let d = read_driving_csv(file)?;
            let m = trace_hulls(&d)?;
            emit(&cli.out, &to_json_string(&m.to_json_value())?)?;
            Ok(format!("trace: {} slits, T = {:.10}", m.len(), d.t_end()))
        }
        Command::Fit { input, csv } => {
            let m = read_multislit(input)?;
            let cfg = FitConfig { grid: cli.grid, tol: cli.tol, ..FitConfig::default() };
            let method = match cli.method {
                Method::Auto if m.len() == 2 => Method::Bangbang,
                Method::Auto => Method::Multi,
                other => other,
            };
            let fits: Vec<(&str, FitResult)> = match method {
                Method::Bangbang => vec![("bangbang", fit_bang_bang_with(&m, cli.levels, &cfg)?)],
                Method::Shooting => vec![("shooting", fit_shooting_with(&m, &cfg)?)],
                Method::Both => vec![
                    ("bangbang", fit_bang_bang_with(&m, cli.levels, &cfg)?),
                    ("shooting", fit_shooting_with(&m, &cfg)?),
                ],
                Method::Multi | Method::Auto => vec![("multi", fit_multi_with(&m, &cfg)?)],
            };
            let text = if let [(_, fit)] = &fits[..] {
                to_json_string(&FitReport::from(fit))?
            } else {
                let reports: serde_json::Map<String, serde_json::Value> = fits
                    .iter()
                    .map(|(name, f)| Ok((name.to_string(), serde_json::to_value(FitReport::from(f)).map_err(Error::from)?)))
                    .collect::<Result<_, Failure>>()?;
                to_json_string(&reports)?
            };
            emit(&cli.out, &text)?;
            if let Some(path) = csv {
                let file = fs::File::create(path).map_err(|e| io_failure(path, e))?;
                write_driving_csv(file, &fits[0].1.driving, true)?;
            }
            let lambdas: Vec<String> = fits
                .iter()
                .map(|(name, f)| format!("{name} lambda = {:.6?}", f.lambda.weights()))
                .collect();
            Ok(format!("fit: {}", lambdas.join(", ")))
        }
        Command::Verify => {
            let seed = cli.seed.unwrap_or(DEFAULT_SEED);
            let report = run_property_suite(seed)?;
            emit(&cli.out, &to_json_string(&report)?)?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Failure {
                    code: 3,
                    message: format!("verify: {failed} of {} checks failed", report.checks.len()),
                    diagnostic: None,
                });
            }
            Ok(format!("verify: all {} checks passed (seed {seed})", report.checks.len()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_exit_statuses() {
        let f = Failure::from(Error::Bracket { reason: "no sign change".into(), sweep: vec![(0.0, 1.0), (1.0, 2.0)] });
        assert_eq!(f.code, 3);
        let d = f.diagnostic.unwrap();
        assert_eq!(d["sweep"].as_array().unwrap().len(), 2);
        assert!(d["error"].as_str().unwrap().contains("no sign change"));
        assert_eq!(Failure::from(Error::RefineNeeded("x".into())).code, 3);
        assert_eq!(Failure::from(Error::InvalidGeometry("x".into())).code, 2);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "x");
        assert_eq!(Failure::from(Error::Io(io)).code, 1);
    }
}
