//! Resonance curves of the forced van der Pol oscillators.
//!
//! A periodic response `A sin(t + φ)` exists where the amplitude residual
//! `f(A) = A²(a² + h(A)²) − λ²` vanishes, with `h(A) = 1 − βA`, `β = 4/(3π)`
//! for the nonsmooth variant and `h(A) = 1 − A²/4` for the classical one.
//! `f'(A)/(2A)` coincides with `det g0'/π²`, so folds are exactly the points
//! where the averaged Jacobian is singular.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{det_trace_at_radius, Model, Variant, VdpParams};

pub const BETA: f64 = 4.0 / (3.0 * PI);

/// Separation below which two roots are reported as one double root.
pub const ROOT_TIE_TOL: f64 = 1e-7;
/// Tolerance on `λ` when deciding families II and IV.
pub const FAMILY_TOL: f64 = 1e-9;
const DOUBLE_ROOT_RESIDUAL: f64 = 1e-12;

fn h(amplitude: f64, variant: Variant) -> (f64, f64) {
    match variant {
        Variant::Nonsmooth => (1.0 - BETA * amplitude, -BETA),
        Variant::Classical => (1.0 - 0.25 * amplitude * amplitude, -0.5 * amplitude),
    }
}

/// `f(A) = A²(a² + h²) − λ²`.
pub fn residual(a: f64, lambda: f64, amplitude: f64, variant: Variant) -> f64 {
    let (hv, _) = h(amplitude, variant);
    amplitude * amplitude * (a * a + hv * hv) - lambda * lambda
}

/// `∂f/∂A`.
pub fn residual_derivative(a: f64, amplitude: f64, variant: Variant) -> f64 {
    let (hv, dh) = h(amplitude, variant);
    2.0 * amplitude * (a * a + hv * hv + amplitude * hv * dh)
}

/// Positive critical points of `f`, ascending.
pub fn critical_points(a: f64, variant: Variant) -> Vec<f64> {
    let mut out = Vec::new();
    match variant {
        Variant::Nonsmooth => {
            // 2u² − 3u + 1 + a² = 0 with u = βA
            let disc = 1.0 - 8.0 * a * a;
            if disc >= 0.0 {
                let s = disc.sqrt();
                for u in [(3.0 - s) / 4.0, (3.0 + s) / 4.0] {
                    out.push(u / BETA);
                }
            }
        }
        Variant::Classical => {
            // (3/16)s² − s + 1 + a² = 0 with s = A²
            let disc = 1.0 - 3.0 * a * a;
            if disc >= 0.0 {
                let r = disc.sqrt();
                for s in [4.0 / 3.0 * (2.0 - r), 4.0 / 3.0 * (2.0 + r)] {
                    out.push(s.sqrt());
                }
            }
        }
    }
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub amplitude: f64,
    /// 1 for a simple root, 2 for a double root.
    pub multiplicity: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRoots {
    /// Positive roots, ascending.
    pub roots: Vec<Root>,
    /// Set for `λ = 0`, where `A = 0` is also a solution.
    pub zero_branch: bool,
}

impl AmplitudeRoots {
    pub fn amplitudes(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.amplitude).collect()
    }
}

fn check_params(a: f64, lambda: f64) -> Result<()> {
    if !a.is_finite() || !lambda.is_finite() {
        return Err(Error::invalid("a and lambda must be finite"));
    }
    if lambda < 0.0 {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    Ok(())
}

/// Bisection to the last representable bracket.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// All positive roots of the amplitude residual.
///
/// The critical points split `(0, ∞)` into monotone pieces; each sign change
/// is bisected, and a critical point where `f` vanishes is a double root.
pub fn amplitude_roots(a: f64, lambda: f64, variant: Variant) -> Result<AmplitudeRoots> {
    check_params(a, lambda)?;
    let f = |amp: f64| residual(a, lambda, amp, variant);
    let crit = critical_points(a, variant);
    let scale = 1.0 + lambda * lambda;

    let mut hi = crit.last().copied().unwrap_or(1.0).max(1.0) * 2.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut knots = vec![0.0];
    knots.extend(crit.iter().copied().filter(|&c| c > 0.0));
    knots.push(hi);

    let mut found: Vec<Root> = Vec::new();
    for &c in &crit {
        if c > 0.0 && f(c).abs() <= DOUBLE_ROOT_RESIDUAL * scale {
            found.push(Root {
                amplitude: c,
                multiplicity: 2,
            });
        }
    }
    for w in knots.windows(2) {
        let (fl, fr) = (f(w[0]), f(w[1]));
        if fl == 0.0 || fr == 0.0 || (fl < 0.0) == (fr < 0.0) {
            continue;
        }
        let root = bisect(f, w[0], w[1]);
        if root > 0.0 {
            found.push(Root {
                amplitude: root,
                multiplicity: 1,
            });
        }
    }
    found.sort_by(|x, y| x.amplitude.total_cmp(&y.amplitude));

    let mut roots: Vec<Root> = Vec::new();
    for r in found {
        match roots.last_mut() {
            Some(last) if (r.amplitude - last.amplitude).abs() <= ROOT_TIE_TOL => {
                if r.multiplicity > last.multiplicity {
                    *last = r;
                } else if last.multiplicity == 1 && r.multiplicity == 1 {
                    last.multiplicity = 2;
                    last.amplitude = 0.5 * (last.amplitude + r.amplitude);
                }
            }
            _ => roots.push(r),
        }
    }
    Ok(AmplitudeRoots {
        roots,
        zero_branch: lambda == 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityTag {
    pub stable: bool,
    pub det: f64,
    pub trace: f64,
}

/// Determinant and trace of the averaged Jacobian at a zero of amplitude `A`.
///
/// Both are invariant under rotation of the zero, so the classical values are
/// taken from the quadrature field at `(0, A)`.
pub fn stability_tag(amplitude: f64, a: f64, variant: Variant) -> Result<StabilityTag> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::invalid("amplitude must be positive"));
    }
    let (det, trace) = match variant {
        Variant::Nonsmooth => det_trace_at_radius(amplitude, a),
        Variant::Classical => {
            let field = Model::Vdp(VdpParams::classical(a, 0.0)).averaged_field();
            let j = field.g0_jacobian(&[0.0, amplitude])?;
            (
                j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)],
                j[(0, 0)] + j[(1, 1)],
            )
        }
    };
    Ok(StabilityTag {
        stable: det > 0.0 && trace < 0.0,
        det,
        trace,
    })
}

/// The zero `(M, N)` of the averaged field whose amplitude is `A`.
///
/// With `c = π h(A)` the phase satisfies `(sin φ, cos φ) ∝ (c, πa)`. On the
/// free circle (`c = a = 0`) the phase is arbitrary and `φ = 0` is returned.
pub fn zero_from_amplitude(amplitude: f64, a: f64, variant: Variant) -> [f64; 2] {
    let c = PI * h(amplitude, variant).0;
    let pa = PI * a;
    let rho = c.hypot(pa);
    if rho == 0.0 {
        return [0.0, amplitude];
    }
    [amplitude * c / rho, amplitude * pa / rho]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldPoint {
    pub amplitude: f64,
    /// Nonnegative detuning; the fold at `−a` is its mirror image.
    pub a: f64,
    pub lambda: f64,
}

/// Amplitudes on which folds exist, `[lo, hi]`.
pub fn fold_band(variant: Variant) -> (f64, f64) {
    match variant {
        Variant::Nonsmooth => (0.375 * PI, 0.75 * PI),
        Variant::Classical => (2.0 / 3f64.sqrt(), 2.0),
    }
}

const BAND_SLACK: f64 = 1e-12;

/// Solves `f = ∂f/∂A = 0` for `(a², λ²)` at fixed `A`.
fn fold_at(amplitude: f64, variant: Variant) -> Option<FoldPoint> {
    // Newton on (p, q) = (a², λ²); the system is linear so one step is exact,
    // the second only polishes rounding.
    let (mut p, mut q) = (0.0, 0.0);
    let amp2 = amplitude * amplitude;
    let residuals = |p: f64, q: f64| {
        let (hv, dh) = h(amplitude, variant);
        (
            amp2 * (p + hv * hv) - q,
            2.0 * amplitude * (p + hv * hv + amplitude * hv * dh),
        )
    };
    for _ in 0..2 {
        let (r1, r2) = residuals(p, q);
        // [[A², −1], [2A, 0]] (dp, dq) = −(r1, r2)
        let dp = -r2 / (2.0 * amplitude);
        let dq = r1 + amp2 * dp;
        p += dp;
        q += dq;
    }
    if p < -BAND_SLACK || q < -BAND_SLACK {
        return None;
    }
    let (p, q) = (p.max(0.0), q.max(0.0));
    let (r1, r2) = residuals(p, q);
    if r1.abs() > 1e-10 || r2.abs() > 1e-10 {
        return None;
    }
    Some(FoldPoint {
        amplitude,
        a: p.sqrt(),
        lambda: q.sqrt(),
    })
}

/// Fold point for each amplitude; `None` outside the fold band.
pub fn fold_locus(variant: Variant, amplitudes: &[f64]) -> Vec<Option<FoldPoint>> {
    amplitudes
        .iter()
        .map(|&amp| {
            if amp.is_finite() && amp > 0.0 {
                fold_at(amp, variant)
            } else {
                None
            }
        })
        .collect()
}

fn fold_lambda(amplitude: f64, variant: Variant) -> f64 {
    fold_at(amplitude, variant).map_or(0.0, |p| p.lambda)
}

/// Golden-section search for the maximum of the fold λ on `[lo, hi]`.
fn fold_maximum(variant: Variant) -> f64 {
    let (mut lo, mut hi) = fold_band(variant);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (fold_lambda(x1, variant), fold_lambda(x2, variant));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = fold_lambda(x2, variant);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = fold_lambda(x1, variant);
        }
    }
    0.5 * (lo + hi)
}

/// Newton on `(A, λ)` for `f = ∂f/∂A = 0` at detuning `a`.
fn joint_double_root(a: f64, guess: (f64, f64), variant: Variant) -> Result<(f64, f64)> {
    let (mut amp, mut lambda) = guess;
    for it in 0..100 {
        let r1 = residual(a, lambda, amp, variant);
        let r2 = residual_derivative(a, amp, variant);
        if r1.abs() <= 1e-15 && r2.abs() <= 1e-15 {
            break;
        }
        let d = 1e-6 * amp.max(1.0);
        let r2a = (residual_derivative(a, amp + d, variant)
            - residual_derivative(a, amp - d, variant))
            / (2.0 * d);
        // [[r2, −2λ], [r2a, 0]] (dA, dλ) = −(r1, r2)
        if r2a == 0.0 || lambda == 0.0 {
            return Err(Error::SingularJacobian {
                at: vec![amp, lambda],
            });
        }
        let da = -r2 / r2a;
        let dl = (r1 + r2 * da) / (2.0 * lambda);
        amp += da;
        lambda += dl;
        if da.abs() <= 1e-16 * amp && dl.abs() <= 1e-16 * lambda.abs() {
            break;
        }
        if it == 99 {
            return Err(Error::NonConvergence {
                iterations: 100,
                residual: r1.abs().max(r2.abs()),
                best: vec![amp, lambda],
            });
        }
    }
    Ok((amp, lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    pub lambda_double: f64,
    pub amplitude_double: f64,
    pub lambda_sep: f64,
    pub a_sep: f64,
    pub amplitude_sep: f64,
}

impl ClosedForms {
    pub fn of(variant: Variant) -> Self {
        match variant {
            Variant::Nonsmooth => Self {
                lambda_double: 3.0 * PI / 16.0,
                amplitude_double: 3.0 * PI / 8.0,
                lambda_sep: 9.0 * 3f64.sqrt() * PI / 64.0,
                a_sep: 1.0 / (2.0 * 2f64.sqrt()),
                amplitude_sep: 9.0 * PI / 16.0,
            },
            Variant::Classical => Self {
                lambda_double: 4.0 * 3f64.sqrt() / 9.0,
                amplitude_double: 2.0 / 3f64.sqrt(),
                lambda_sep: (32.0f64 / 27.0).sqrt(),
                a_sep: 1.0 / 3f64.sqrt(),
                amplitude_sep: (8.0f64 / 3.0).sqrt(),
            },
        }
    }
}

/// A reference value compared with the computed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub label: String,
    pub value: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub variant: Variant,
    /// Forcing at which `a = 0` has a double root.
    pub lambda_double: f64,
    pub amplitude_double: f64,
    /// Largest forcing on the fold locus.
    pub lambda_sep: f64,
    pub a_sep: f64,
    pub amplitude_sep: f64,
    pub closed_form: ClosedForms,
    /// Computed minus closed form, field by field.
    pub difference: ClosedForms,
    /// Alternative reference values for the double-point amplitude.
    pub reference_amplitude_double: Vec<ReferenceComparison>,
}

/// Critical forcing amplitudes by a joint solve of `f = ∂f/∂A = 0`.
pub fn critical_values(variant: Variant) -> Result<CriticalValues> {
    let closed = ClosedForms::of(variant);
    let (lo, hi) = fold_band(variant);
    let guess = (lo + 0.2 * (hi - lo), 0.5);
    let (amplitude_double, lambda_double) = joint_double_root(0.0, guess, variant)?;
    let amplitude_sep = fold_maximum(variant);
    let sep = fold_at(amplitude_sep, variant).ok_or_else(|| Error::NonConvergence {
        iterations: 0,
        residual: f64::NAN,
        best: vec![amplitude_sep],
    })?;
    let difference = ClosedForms {
        lambda_double: lambda_double - closed.lambda_double,
        amplitude_double: amplitude_double - closed.amplitude_double,
        lambda_sep: sep.lambda - closed.lambda_sep,
        a_sep: sep.a - closed.a_sep,
        amplitude_sep: amplitude_sep - closed.amplitude_sep,
    };
    let references = match variant {
        Variant::Nonsmooth => vec![("2π/8", 2.0 * PI / 8.0), ("2/√3", 2.0 / 3f64.sqrt())],
        Variant::Classical => vec![("2/√3", 2.0 / 3f64.sqrt())],
    };
    Ok(CriticalValues {
        variant,
        lambda_double,
        amplitude_double,
        lambda_sep: sep.lambda,
        a_sep: sep.a,
        amplitude_sep,
        closed_form: closed,
        difference,
        reference_amplitude_double: references
            .into_iter()
            .map(|(label, value)| ReferenceComparison {
                label: label.to_string(),
                value,
                difference: amplitude_double - value,
            })
            .collect(),
    })
}

/// Detunings `0 < a₁ < a₂` bounding the three-root band for
/// `λ_double < λ < λ_sep`; three roots exist for `a₁ < |a| < a₂`.
pub fn fold_detunings(lambda: f64, variant: Variant) -> Result<Option<(f64, f64)>> {
    let cv = critical_values(variant)?;
    if !(lambda > cv.lambda_double && lambda < cv.lambda_sep) {
        return Ok(None);
    }
    let (lo, hi) = fold_band(variant);
    let g = |amp: f64| fold_lambda(amp, variant) - lambda;
    let left = bisect(g, lo, cv.amplitude_sep);
    let right = bisect(g, cv.amplitude_sep, hi);
    let a1 = fold_at(left, variant).map_or(0.0, |p| p.a);
    let a2 = fold_at(right, variant).map_or(0.0, |p| p.a);
    Ok(Some((a1.min(a2), a1.max(a2))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    I,
    II,
    III,
    IV,
    V,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::I => "I",
            Family::II => "II",
            Family::III => "III",
            Family::IV => "IV",
            Family::V => "V",
        })
    }
}

impl Family {
    pub fn classify(lambda: f64, critical: &CriticalValues) -> Self {
        if (lambda - critical.lambda_double).abs() <= FAMILY_TOL {
            Family::II
        } else if (lambda - critical.lambda_sep).abs() <= FAMILY_TOL {
            Family::IV
        } else if lambda < critical.lambda_double {
            Family::I
        } else if lambda < critical.lambda_sep {
            Family::III
        } else {
            Family::V
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonancePoint {
    pub a: f64,
    pub lambda: f64,
    pub amplitude: f64,
    pub stable: bool,
    pub det: f64,
    pub trace: f64,
    pub multiplicity: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub a: f64,
    pub points: Vec<ResonancePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCurve {
    pub lambda: f64,
    pub variant: Variant,
    pub family: Family,
    pub samples: Vec<CurveSample>,
}

/// Every amplitude root with its stability tag at a single detuning.
pub fn resonance_points(a: f64, lambda: f64, variant: Variant) -> Result<Vec<ResonancePoint>> {
    amplitude_roots(a, lambda, variant)?
        .roots
        .into_iter()
        .map(|r| {
            let tag = stability_tag(r.amplitude, a, variant)?;
            Ok(ResonancePoint {
                a,
                lambda,
                amplitude: r.amplitude,
                // stability is meaningless on the fold itself
                stable: tag.stable && r.multiplicity == 1,
                det: tag.det,
                trace: tag.trace,
                multiplicity: r.multiplicity,
            })
        })
        .collect()
}

/// Resonance curve on the uniform grid of `n` detunings in `[a_min, a_max]`.
pub fn trace_curve(
    lambda: f64,
    a_min: f64,
    a_max: f64,
    n: usize,
    variant: Variant,
) -> Result<ResonanceCurve> {
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    if !(a_min.is_finite() && a_max.is_finite() && a_min < a_max) {
        return Err(Error::invalid("a_min must be less than a_max"));
    }
    check_params(0.0, lambda)?;
    let critical = critical_values(variant)?;
    let step = (a_max - a_min) / (n - 1) as f64;
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = if i == n - 1 {
                a_max
            } else {
                a_min + step * i as f64
            };
            Ok(CurveSample {
                a,
                points: resonance_points(a, lambda, variant)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResonanceCurve {
        lambda,
        variant,
        family: Family::classify(lambda, &critical),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableGuarantee {
    pub holds: bool,
    /// Largest stable point at each grid detuning, if any.
    pub witnesses: Vec<Option<ResonancePoint>>,
}

/// Whether every grid detuning carries at least one stable response.
pub fn guaranteed_stable_exists(curve: &ResonanceCurve) -> StableGuarantee {
    let witnesses: Vec<_> = curve
        .samples
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|p| p.stable)
                .max_by(|x, y| x.amplitude.total_cmp(&y.amplitude))
                .copied()
        })
        .collect();
    StableGuarantee {
        holds: witnesses.iter().all(Option::is_some),
        witnesses,
    }
}

pub const CSV_HEADER: &str = "a,lambda,A,stable,det,trace,multiplicity";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the curve as CSV, one row per root, preceded by `# family=<tag>`.
pub fn write_curve_csv<W: Write>(curve: &ResonanceCurve, mut out: W) -> io::Result<()> {
    write!(out, "# family={}\n{CSV_HEADER}\n", curve.family)?;
    for sample in &curve.samples {
        for p in &sample.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                num(p.a),
                num(p.lambda),
                num(p.amplitude),
                p.stable,
                num(p.det),
                num(p.trace),
                p.multiplicity
            )?;
        }
    }
    Ok(())
}
