//! Checks averaging predictions against direct simulation of the period map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{adapted_basis, max_pair_ratio, Classification, ZeroReport};
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{Model, Variant};
use crate::ode::{
    fixed_point, floquet_multipliers, integrate, poincare_jacobian, poincare_map, FloquetVerdict,
    IntegratorConfig, NewtonOptions, DEFAULT_STABILITY_MARGIN,
};
use crate::resonance::{amplitude_roots, stability_tag, zero_from_amplitude};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub integrator: IntegratorConfig,
    pub newton: NewtonOptions,
    /// Residual tolerance for the averaged zero.
    pub zero_tol: f64,
    pub zero_max_iter: usize,
    /// Agreement requires `‖v_ε − v0‖ ≤ agreement_factor · ε`.
    pub agreement_factor: f64,
    pub stability_margin: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            newton: NewtonOptions {
                tol: 1e-9,
                max_iter: 50,
            },
            zero_tol: 1e-12,
            zero_max_iter: 100,
            agreement_factor: 2.0,
            stability_margin: DEFAULT_STABILITY_MARGIN,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        let positive = [self.newton.tol, self.zero_tol, self.agreement_factor];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(
                "verification tolerances must be finite and positive",
            ));
        }
        if !(self.stability_margin.is_finite() && self.stability_margin >= 0.0) {
            return Err(Error::invalid("stability_margin must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub eps: f64,
    /// Zero of the averaged field.
    pub v0: Vec<f64>,
    /// Fixed point of the period map.
    pub v_eps: Vec<f64>,
    pub distance: f64,
    /// `max |u|` over one period of the simulated orbit.
    pub simulated_amplitude: f64,
    /// `‖v0‖`.
    pub predicted_amplitude: f64,
    pub floquet_multipliers: Vec<Multiplier>,
    pub stability_verdict: FloquetVerdict,
    pub classification: Classification,
    pub agreement_bound: f64,
    pub agreement: bool,
}

/// Whether a Floquet verdict is what the averaged classification predicts.
pub fn verdict_consistent(classification: Classification, verdict: FloquetVerdict) -> bool {
    match classification {
        Classification::UniqueAsymptoticallyStable => {
            verdict == FloquetVerdict::AsymptoticallyStable
        }
        Classification::NonAsymptoticallyStable => verdict == FloquetVerdict::Unstable,
        Classification::ExistenceOnly => verdict != FloquetVerdict::AsymptoticallyStable,
        Classification::Degenerate => false,
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps == 0.0 {
        return Err(Error::DegenerateMap);
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::invalid(format!(
            "eps must lie in (0, 0.5], got {eps}"
        )));
    }
    Ok(())
}

/// Averaged zero, period-map fixed point and Floquet multipliers for one branch.
///
/// The fixed point is computed on the original coordinates; the rotating frame
/// coincides with them at `t = 0` and `t = 2π`.
pub fn verify_branch(
    model: &Model,
    eps: f64,
    v0_guess: &[f64],
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_eps(eps)?;
    cfg.validate()?;
    let zero = averaged_zero(model, v0_guess, cfg)?;
    verify_from_zero(model, eps, &zero, cfg)
}

fn averaged_zero(model: &Model, guess: &[f64], cfg: &VerifyConfig) -> Result<ZeroReport> {
    model
        .averaged_field()
        .find_zero(guess, cfg.zero_tol, cfg.zero_max_iter)
        .map_err(|e| e.in_stage("averaged zero"))
}

fn verify_from_zero(
    model: &Model,
    eps: f64,
    zero: &ZeroReport,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    let sys = model.original();
    let fp = fixed_point(&*sys, &zero.v0, eps, &cfg.integrator, cfg.newton)
        .map_err(|e| e.in_stage("period-map fixed point"))?;
    let jac = poincare_jacobian(&*sys, &fp.point, eps, &cfg.integrator)
        .map_err(|e| e.in_stage("floquet multipliers"))?;
    let multipliers = floquet_multipliers(&jac);
    let verdict = FloquetVerdict::from_multipliers(&multipliers, cfg.stability_margin);
    let orbit = integrate(&*sys, &fp.point, 0.0, sys.period(), eps, &cfg.integrator)
        .map_err(|e| e.in_stage("amplitude"))?;
    let simulated_amplitude = orbit.states.iter().map(|z| z[0].abs()).fold(0.0, f64::max);
    let distance = linalg::dist(&fp.point, &zero.v0);
    let bound = cfg.agreement_factor * eps;
    Ok(VerificationReport {
        eps,
        v0: zero.v0.clone(),
        v_eps: fp.point,
        distance,
        simulated_amplitude,
        predicted_amplitude: linalg::norm(&zero.v0),
        floquet_multipliers: multipliers
            .iter()
            .map(|m| Multiplier {
                re: m.re,
                im: m.im,
                modulus: m.norm(),
            })
            .collect(),
        stability_verdict: verdict,
        classification: zero.classification,
        agreement_bound: bound,
        agreement: distance <= bound && verdict_consistent(zero.classification, verdict),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// The stable response of largest amplitude.
    Stable,
    /// The root with negative determinant.
    Saddle,
    /// A root with positive determinant and positive trace.
    Unstable,
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable" => Ok(Branch::Stable),
            "saddle" => Ok(Branch::Saddle),
            "unstable" => Ok(Branch::Unstable),
            _ => Err(Error::invalid(format!(
                "unknown branch '{s}'; valid branches: stable, saddle, unstable"
            ))),
        }
    }
}

/// Starting point for the averaged zero on the requested branch.
///
/// For the van der Pol models the zero is rebuilt from the amplitude roots;
/// the linear averaged field of the spring model has a single zero.
pub fn branch_seed(model: &Model, branch: Branch) -> Result<Vec<f64>> {
    match *model {
        Model::Vdp(p) => {
            let roots = amplitude_roots(p.a, p.lambda, p.variant)?;
            let mut tagged = Vec::new();
            for r in roots.roots.iter().filter(|r| r.multiplicity == 1) {
                tagged.push((r.amplitude, stability_tag(r.amplitude, p.a, p.variant)?));
            }
            let pick = match branch {
                Branch::Stable => tagged.iter().rev().find(|(_, t)| t.stable),
                Branch::Saddle => tagged.iter().find(|(_, t)| t.det < 0.0),
                Branch::Unstable => tagged.iter().find(|(_, t)| t.det > 0.0 && t.trace > 0.0),
            };
            let (amp, _) = pick.ok_or_else(|| {
                Error::invalid(format!(
                    "no {branch:?} branch at a = {}, lambda = {}",
                    p.a, p.lambda
                ))
            })?;
            Ok(zero_from_amplitude(*amp, p.a, p.variant).to_vec())
        }
        Model::Spring(_) => match branch {
            Branch::Stable => Ok(vec![0.0, 0.0]),
            _ => Err(Error::invalid("the spring model has only a stable branch")),
        },
    }
}

/// Convenience wrapper: seed, then [`verify_branch`].
pub fn verify_model_branch(
    model: &Model,
    eps: f64,
    branch: Branch,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_eps(eps)?;
    let seed = branch_seed(model, branch).map_err(|e| e.in_stage("branch seed"))?;
    verify_branch(model, eps, &seed, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub distance: Option<f64>,
    pub multiplier_moduli: Vec<f64>,
    pub report: Option<VerificationReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSweep {
    pub entries: Vec<SweepEntry>,
    /// Least-squares slope of `log distance` against `log ε`; `None` with
    /// fewer than two usable entries.
    pub slope: Option<f64>,
    /// Least-squares `C` in `distance ≈ C ε`.
    pub fitted_constant: Option<f64>,
    /// Largest `|distance − C ε| / (C ε)` over the sweep.
    pub max_relative_fit_residual: Option<f64>,
}

impl EpsSweep {
    pub fn distances_decreasing(&self) -> bool {
        let d: Vec<Option<f64>> = self.entries.iter().map(|e| e.distance).collect();
        d.iter().all(Option::is_some) && d.windows(2).all(|w| w[1] < w[0])
    }
}

/// Runs [`verify_branch`] for each `ε` in parallel; failures are kept per entry.
pub fn eps_sweep(
    model: &Model,
    v0_guess: &[f64],
    eps_list: &[f64],
    cfg: &VerifyConfig,
) -> Result<EpsSweep> {
    if eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::invalid("sweep eps values must be positive"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid(
            "sweep eps values must be strictly decreasing",
        ));
    }
    cfg.validate()?;
    let zero = if eps_list.is_empty() {
        None
    } else {
        Some(averaged_zero(model, v0_guess, cfg)?)
    };
    let entries: Vec<SweepEntry> = eps_list
        .par_iter()
        .map(|&eps| {
            let zero = zero.as_ref().expect("nonempty sweep has a zero");
            match check_eps(eps).and_then(|_| verify_from_zero(model, eps, zero, cfg)) {
                Ok(r) => SweepEntry {
                    eps,
                    distance: Some(r.distance),
                    multiplier_moduli: r.floquet_multipliers.iter().map(|m| m.modulus).collect(),
                    report: Some(r),
                    error: None,
                },
                Err(e) => SweepEntry {
                    eps,
                    distance: None,
                    multiplier_moduli: Vec::new(),
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let usable: Vec<(f64, f64)> = entries
        .iter()
        .filter_map(|e| e.distance.filter(|d| *d > 0.0).map(|d| (e.eps, d)))
        .collect();
    let slope = (usable.len() >= 2).then(|| {
        let xs: Vec<f64> = usable.iter().map(|(e, _)| e.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|(_, d)| d.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    });
    let fitted_constant = (!usable.is_empty()).then(|| {
        usable.iter().map(|(e, d)| e * d).sum::<f64>()
            / usable.iter().map(|(e, _)| e * e).sum::<f64>()
    });
    let max_relative_fit_residual = fitted_constant.map(|c| {
        usable
            .iter()
            .map(|(e, d)| (d - c * e).abs() / (c * e))
            .fold(0.0, f64::max)
    });
    Ok(EpsSweep {
        entries,
        slope,
        fitted_constant,
        max_relative_fit_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionRate {
    pub eps: f64,
    /// Largest observed Lipschitz ratio of the period map.
    pub rho: f64,
    /// `(1 − ρ)/ε`.
    pub c: f64,
    pub contracting: bool,
}

/// Lipschitz ratio of the period map near `v_eps`, measured over seeded random
/// pairs in the norm adapted to the averaged Jacobian.
pub fn map_contraction_rate(
    model: &Model,
    eps: f64,
    v_eps: &[f64],
    radius: f64,
    n_pairs: usize,
    cfg: &IntegratorConfig,
) -> Result<ContractionRate> {
    check_eps(eps)?;
    if !(radius.is_finite() && radius > 0.0) || n_pairs == 0 {
        return Err(Error::invalid(
            "radius must be positive and n_pairs nonzero",
        ));
    }
    let jac = model.averaged_field().g0_jacobian(v_eps)?;
    let basis = adapted_basis(&jac);
    let sys = model.original();
    let mut failure = None;
    let rho = max_pair_ratio(v_eps, radius, n_pairs, &basis, |v| {
        match poincare_map(&*sys, v, eps, cfg) {
            Ok(p) => p.image,
            Err(e) => {
                failure.get_or_insert(e);
                vec![f64::NAN; v.len()]
            }
        }
    });
    if let Some(e) = failure {
        return Err(e.in_stage("contraction probe"));
    }
    Ok(ContractionRate {
        eps,
        rho,
        c: (1.0 - rho) / eps,
        contracting: rho < 1.0,
    })
}

/// The model's variant, if it is a van der Pol oscillator.
pub fn model_variant(model: &Model) -> Option<Variant> {
    match model {
        Model::Vdp(p) => Some(p.variant),
        Model::Spring(_) => None,
    }
}
