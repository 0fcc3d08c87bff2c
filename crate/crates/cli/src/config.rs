//! Run configuration: an optional JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use periodic_averaging::averaging::QuadratureConfig;
use periodic_averaging::models::{Model, ModelKind, SpringParams, VdpParams};
use periodic_averaging::ode::IntegratorConfig;
use periodic_averaging::verify::{Branch, VerifyConfig};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const OUT_DIR_ENV: &str = "PAVG_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpringOverrides {
    pub delta0: Option<f64>,
    pub d0: Option<f64>,
    pub w: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOverrides {
    pub step: Option<f64>,
    pub event_tol: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub min_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    pub order: Option<usize>,
    pub split_at_kinks: Option<bool>,
    pub panels: Option<usize>,
}

/// The JSON schema accepted by `--config`; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub a: Option<f64>,
    pub lambda: Option<f64>,
    pub eps: Option<f64>,
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub n: Option<usize>,
    pub points: Option<Vec<[f64; 2]>>,
    pub sweep: Option<Vec<f64>>,
    pub branch: Option<Branch>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(default)]
    pub spring: SpringOverrides,
    #[serde(default)]
    pub integrator: IntegratorOverrides,
    #[serde(default)]
    pub quadrature: QuadratureOverrides,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected M,N but got '{s}'"));
    }
    let m = parts[0]
        .parse::<f64>()
        .map_err(|e| format!("bad M in '{s}': {e}"))?;
    let n = parts[1]
        .parse::<f64>()
        .map_err(|e| format!("bad N in '{s}': {e}"))?;
    Ok([m, n])
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration; flags override its fields
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// nonsmooth-vdp, classical-vdp or piecewise-spring
    #[arg(long)]
    pub model: Option<String>,
    /// Detuning
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Forcing amplitude
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a_max: Option<f64>,
    /// Grid size
    #[arg(long)]
    pub n: Option<usize>,
    /// Point in the rotating frame, repeatable
    #[arg(long = "point", value_name = "M,N", value_parser = parse_point, allow_hyphen_values = true)]
    pub points: Vec<[f64; 2]>,
    /// Strictly decreasing eps values for a convergence sweep
    #[arg(long, value_name = "E1,E2,...", value_delimiter = ',', num_args = 1..)]
    pub sweep: Vec<f64>,
    #[arg(long, value_parser = parse_branch)]
    pub branch: Option<Branch>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Spring damping
    #[arg(long)]
    pub delta0: Option<f64>,
    /// Spring one-sided stiffness
    #[arg(long)]
    pub d0: Option<f64>,
    /// Spring constant load
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    /// Integrator base step
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub event_tol: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Gauss–Legendre nodes per smooth piece
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Integrate over the whole period without splitting at kinks
    #[arg(long)]
    pub no_kink_split: bool,
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    s.parse::<Branch>().map_err(|e| e.to_string())
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct Settings {
    pub model: Model,
    pub kind: ModelKind,
    pub lambda: f64,
    pub eps: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub n: usize,
    pub points: Vec<[f64; 2]>,
    pub sweep: Option<Vec<f64>>,
    pub branch: Branch,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub integrator: IntegratorConfig,
    pub quadrature: QuadratureConfig,
}

impl Settings {
    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            integrator: self.integrator,
            ..VerifyConfig::default()
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("invalid config {}: {e}", path.display())))
}

fn finite(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::Validation(format!("{name} must be finite")))
    }
}

pub fn resolve(flags: &Flags) -> Result<Settings, Failure> {
    let file = match &flags.config {
        Some(p) => load(p)?,
        None => RunConfig::default(),
    };
    let model_name = flags
        .model
        .clone()
        .or(file.model)
        .unwrap_or_else(|| ModelKind::NonsmoothVdp.name().to_string());
    let kind: ModelKind = model_name
        .parse()
        .map_err(|e: periodic_averaging::Error| Failure::Validation(e.to_string()))?;
    let a = finite("a", flags.a.or(file.a).unwrap_or(0.0))?;
    let lambda = finite("lambda", flags.lambda.or(file.lambda).unwrap_or(0.0))?;
    if lambda < 0.0 {
        return Err(Failure::Validation("lambda must be nonnegative".into()));
    }
    let eps = finite("eps", flags.eps.or(file.eps).unwrap_or(0.05))?;
    let a_min = finite("a-min", flags.a_min.or(file.a_min).unwrap_or(-2.0))?;
    let a_max = finite("a-max", flags.a_max.or(file.a_max).unwrap_or(2.0))?;
    let n = flags.n.or(file.n).unwrap_or(201);

    let model = match kind {
        ModelKind::NonsmoothVdp => Model::Vdp(VdpParams::nonsmooth(a, lambda)),
        ModelKind::ClassicalVdp => Model::Vdp(VdpParams::classical(a, lambda)),
        ModelKind::PiecewiseSpring => {
            let d = SpringParams::default();
            let p = SpringParams::new(
                flags.delta0.or(file.spring.delta0).unwrap_or(d.delta0),
                flags.d0.or(file.spring.d0).unwrap_or(d.d0),
                flags.w.or(file.spring.w).unwrap_or(d.w),
                lambda,
            )
            .map_err(|e| Failure::Validation(e.to_string()))?;
            Model::Spring(p)
        }
    };

    let base = IntegratorConfig::default();
    let fi = file.integrator;
    let integrator = IntegratorConfig {
        step: flags.step.or(fi.step).unwrap_or(base.step),
        event_tol: flags.event_tol.or(fi.event_tol).unwrap_or(base.event_tol),
        rtol: flags.rtol.or(fi.rtol).unwrap_or(base.rtol),
        atol: flags.atol.or(fi.atol).unwrap_or(base.atol),
        min_step: fi.min_step.unwrap_or(base.min_step),
    };
    integrator
        .validate()
        .map_err(|e| Failure::Validation(e.to_string()))?;

    let qbase = QuadratureConfig::default();
    let fq = file.quadrature;
    let quadrature = QuadratureConfig {
        order: flags.quad_order.or(fq.order).unwrap_or(qbase.order),
        split_at_kinks: if flags.no_kink_split {
            false
        } else {
            fq.split_at_kinks.unwrap_or(qbase.split_at_kinks)
        },
        panels: fq.panels.unwrap_or(qbase.panels),
        ..qbase
    };
    quadrature
        .validate()
        .map_err(|e| Failure::Validation(e.to_string()))?;

    let points = if flags.points.is_empty() {
        file.points.unwrap_or_default()
    } else {
        flags.points.clone()
    };
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Failure::Validation("points must be finite".into()));
    }

    Ok(Settings {
        model,
        kind,
        lambda,
        eps,
        a_min,
        a_max,
        n,
        points,
        sweep: (!flags.sweep.is_empty())
            .then(|| flags.sweep.clone())
            .or(file.sweep),
        branch: flags.branch.or(file.branch).unwrap_or(Branch::Stable),
        out: flags.out.clone().or(file.out),
        format: flags.format.or(file.format),
        integrator,
        quadrature,
    })
}
