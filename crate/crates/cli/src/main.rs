//! `pavg`: averaging-method analysis of periodic responses from the command line.

mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use periodic_averaging::averaging::ZeroReport;
use periodic_averaging::models::Model;
use periodic_averaging::resonance::{
    amplitude_roots, critical_values, trace_curve, write_curve_csv, zero_from_amplitude,
};
use periodic_averaging::verify::{eps_sweep, verify_branch, verify_model_branch, Branch};
use periodic_averaging::Error;
use serde::Serialize;

use config::{resolve, Flags, Format, Settings, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "pavg",
    version,
    about = "Periodic solutions of weakly forced oscillators by averaging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the averaged field at the given points
    G0(Flags),
    /// Locate and classify zeros of the averaged field
    Zeros(Flags),
    /// Emit a resonance curve over a detuning grid
    Resonance(Flags),
    /// Critical forcing amplitudes of a van der Pol model
    Critical(Flags),
    /// Compare an averaged zero with the simulated periodic orbit
    Verify(Flags),
}

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration; exit code 2.
    Validation(String),
    /// A numerical stage failed; exit code 1.
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut root = &e;
        while let Error::Stage { source, .. } = root {
            root = source;
        }
        match root {
            Error::InvalidInput(_) | Error::DegenerateMap | Error::Unsupported(_) => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("write failed: {e}"))
    }
}

/// A successful run; `ok = false` still emits output but exits with 1.
struct Outcome {
    body: String,
    ok: bool,
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Numeric(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn require_format(s: &Settings, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
    let f = s.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::Validation(format!(
            "format {} is not available for this command",
            f.extension()
        )))
    }
}

#[derive(Serialize)]
struct G0Row {
    point: [f64; 2],
    numeric: Vec<f64>,
    analytic: Option<Vec<f64>>,
    difference: Option<f64>,
}

fn cmd_g0(s: &Settings) -> Result<Outcome, Failure> {
    let format = require_format(s, Format::Csv, &[Format::Csv, Format::Json])?;
    if s.points.is_empty() {
        return Err(Failure::Validation(
            "g0 needs at least one --point M,N".into(),
        ));
    }
    let field = s.model.averaged_field().with_quadrature(s.quadrature)?;
    let rows: Vec<G0Row> = s
        .points
        .iter()
        .map(|p| {
            let numeric = field.eval_g0_numeric(p);
            let analytic = field.has_analytic().then(|| field.eval_g0(p));
            let difference = analytic.as_ref().map(|a| {
                a.iter()
                    .zip(&numeric)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            });
            G0Row {
                point: *p,
                numeric,
                analytic,
                difference,
            }
        })
        .collect();
    let body = match format {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let mut out = String::from("M,N,g0_1,g0_2,analytic_1,analytic_2,difference\n");
            for r in &rows {
                let (a1, a2, d) = match (&r.analytic, r.difference) {
                    (Some(a), Some(d)) => (num(a[0]), num(a[1]), num(d)),
                    _ => (String::new(), String::new(), String::new()),
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{a1},{a2},{d}",
                    num(r.point[0]),
                    num(r.point[1]),
                    num(r.numeric[0]),
                    num(r.numeric[1])
                );
            }
            out
        }
    };
    Ok(Outcome { body, ok: true })
}

fn default_seeds(s: &Settings) -> Result<Vec<Vec<f64>>, Failure> {
    if !s.points.is_empty() {
        return Ok(s.points.iter().map(|p| p.to_vec()).collect());
    }
    match s.model {
        Model::Vdp(p) => Ok(amplitude_roots(p.a, p.lambda, p.variant)?
            .roots
            .iter()
            .map(|r| zero_from_amplitude(r.amplitude, p.a, p.variant).to_vec())
            .collect()),
        Model::Spring(_) => Ok(vec![vec![0.0, 0.0]]),
    }
}

fn cmd_zeros(s: &Settings) -> Result<Outcome, Failure> {
    let format = require_format(s, Format::Json, &[Format::Csv, Format::Json])?;
    let field = s.model.averaged_field().with_quadrature(s.quadrature)?;
    let zeros: Vec<ZeroReport> = default_seeds(s)?
        .iter()
        .map(|seed| field.find_zero(seed, 1e-12, 100))
        .collect::<Result<_, _>>()?;
    let body = match format {
        Format::Json => json(&zeros)?,
        Format::Csv => {
            let mut out = String::from("M,N,residual,det,trace,classification,iterations\n");
            for z in &zeros {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    num(z.v0[0]),
                    num(z.v0[1]),
                    num(z.residual),
                    num(z.det),
                    num(z.trace),
                    z.classification,
                    z.iterations
                );
            }
            out
        }
    };
    Ok(Outcome { body, ok: true })
}

fn vdp_variant(s: &Settings, what: &str) -> Result<periodic_averaging::models::Variant, Failure> {
    s.kind.variant().ok_or_else(|| {
        Failure::Validation(format!(
            "{what} is only defined for the van der Pol models, not {}",
            s.kind
        ))
    })
}

fn cmd_resonance(s: &Settings) -> Result<Outcome, Failure> {
    let format = require_format(s, Format::Csv, &[Format::Csv, Format::Json])?;
    let variant = vdp_variant(s, "a resonance curve")?;
    let curve = trace_curve(s.lambda, s.a_min, s.a_max, s.n, variant)?;
    let body = match format {
        Format::Json => json(&curve)?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_curve_csv(&curve, &mut buf)?;
            String::from_utf8(buf).expect("csv is ascii")
        }
    };
    Ok(Outcome { body, ok: true })
}

fn cmd_critical(s: &Settings) -> Result<Outcome, Failure> {
    require_format(s, Format::Json, &[Format::Json])?;
    let variant = vdp_variant(s, "critical forcing")?;
    Ok(Outcome {
        body: json(&critical_values(variant)?)?,
        ok: true,
    })
}

fn cmd_verify(s: &Settings) -> Result<Outcome, Failure> {
    require_format(s, Format::Json, &[Format::Json])?;
    let cfg = s.verify_config();
    let check_eps = |e: f64| {
        if e > 0.0 && e <= 0.5 {
            Ok(())
        } else {
            Err(Failure::Validation(format!(
                "eps must lie in (0, 0.5], got {e}"
            )))
        }
    };
    if let Some(list) = &s.sweep {
        list.iter().try_for_each(|&e| check_eps(e))?;
        let seed = match s.points.first() {
            Some(p) => p.to_vec(),
            None => periodic_averaging::verify::branch_seed(&s.model, s.branch)?,
        };
        let sweep = eps_sweep(&s.model, &seed, list, &cfg)?;
        let ok = s.branch != Branch::Stable
            || sweep
                .entries
                .iter()
                .all(|e| e.report.as_ref().is_some_and(|r| r.agreement));
        return Ok(Outcome {
            body: json(&sweep)?,
            ok,
        });
    }
    check_eps(s.eps)?;
    let report = match s.points.first() {
        Some(p) => verify_branch(&s.model, s.eps, p, &cfg)?,
        None => verify_model_branch(&s.model, s.eps, s.branch, &cfg)?,
    };
    let ok = report.agreement || s.branch != Branch::Stable;
    Ok(Outcome {
        body: json(&report)?,
        ok,
    })
}

fn destination(s: &Settings, command: &str, format: Format) -> Option<PathBuf> {
    s.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{command}.{}", format.extension())))
    })
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let (name, flags, default_format) = match &cli.command {
        Command::G0(f) => ("g0", f, Format::Csv),
        Command::Zeros(f) => ("zeros", f, Format::Json),
        Command::Resonance(f) => ("resonance", f, Format::Csv),
        Command::Critical(f) => ("critical", f, Format::Json),
        Command::Verify(f) => ("verify", f, Format::Json),
    };
    let settings = resolve(flags)?;
    let outcome = match &cli.command {
        Command::G0(_) => cmd_g0(&settings),
        Command::Zeros(_) => cmd_zeros(&settings),
        Command::Resonance(_) => cmd_resonance(&settings),
        Command::Critical(_) => cmd_critical(&settings),
        Command::Verify(_) => cmd_verify(&settings),
    }?;
    let format = settings.format.unwrap_or(default_format);
    match destination(&settings, name, format) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, outcome.body.as_bytes())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(outcome.body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "error: simulation disagrees with the averaged prediction on the stable branch"
            );
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
