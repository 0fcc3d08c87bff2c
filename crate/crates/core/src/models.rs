//! Built-in weakly forced oscillators `ü + u = ε h(t, u, u̇)`.
//!
//! Each model is available in the original phase coordinates `z = (u, u̇)` and in
//! the rotating frame `z = R(t) x` with `R(t) = [[cos t, sin t], [−sin t, cos t]]`,
//! where the system takes the standard form `ẋ = ε g(t, x)` needed for averaging.
//! The two are conjugate and share the same period-`2π` map because `R(2π) = I`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::averaging::{AnalyticAverage, AveragedField, StandardForm};
use crate::error::{Error, Result};
use crate::ode::PeriodicSystem;

/// The perturbation `h(t, u, u̇)` of a unit-frequency oscillator.
pub trait Oscillator: Send + Sync {
    fn forcing(&self, t: f64, u: f64, du: f64) -> f64;

    /// Whether `h` has a kink along `u = 0`.
    fn has_position_kink(&self) -> bool;

    /// Points where the averaged field is not differentiable.
    fn singular_points(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

/// `z = R(t) x`.
pub fn rotate(t: f64, x: [f64; 2]) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    [c * x[0] + s * x[1], -s * x[0] + c * x[1]]
}

/// `x = R(t)ᵀ z`.
pub fn unrotate(t: f64, z: [f64; 2]) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    [c * z[0] - s * z[1], s * z[0] + c * z[1]]
}

/// `ż₁ = z₂, ż₂ = −z₁ + ε h(t, z₁, z₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginalCoords<O>(pub O);

/// The same oscillator in the rotating frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedCoords<O>(pub O);

impl<O: Oscillator> PeriodicSystem for OriginalCoords<O> {
    fn dim(&self) -> usize {
        2
    }
    fn period(&self) -> f64 {
        TAU
    }
    fn rhs(&self, t: f64, z: &[f64], eps: f64, dz: &mut [f64]) {
        dz[0] = z[1];
        dz[1] = -z[0] + eps * self.0.forcing(t, z[0], z[1]);
    }
    fn switch_count(&self) -> usize {
        usize::from(self.0.has_position_kink())
    }
    fn switch_value(&self, _index: usize, _t: f64, z: &[f64]) -> f64 {
        z[0]
    }
}

impl<O: Oscillator> PeriodicSystem for RotatedCoords<O> {
    fn dim(&self) -> usize {
        2
    }
    fn period(&self) -> f64 {
        TAU
    }
    fn rhs(&self, t: f64, x: &[f64], eps: f64, dx: &mut [f64]) {
        self.perturbation(t, x, eps, dx);
        dx[0] *= eps;
        dx[1] *= eps;
    }
    fn switch_count(&self) -> usize {
        usize::from(self.0.has_position_kink())
    }
    fn switch_value(&self, _index: usize, t: f64, x: &[f64]) -> f64 {
        let (s, c) = t.sin_cos();
        x[0] * c + x[1] * s
    }
}

impl<O: Oscillator> StandardForm for RotatedCoords<O> {
    fn perturbation(&self, t: f64, x: &[f64], _eps: f64, out: &mut [f64]) {
        let (s, c) = t.sin_cos();
        let u = x[0] * c + x[1] * s;
        let du = -x[0] * s + x[1] * c;
        let h = self.0.forcing(t, u, du);
        out[0] = -s * h;
        out[1] = c * h;
    }
    fn singular_points(&self) -> Vec<Vec<f64>> {
        self.0.singular_points()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Damping `(|u| − 1) u̇`.
    Nonsmooth,
    /// Damping `(u² − 1) u̇`.
    Classical,
}

/// Forced van der Pol oscillator `ü + ε(d(u) − 1)u̇ + (1 + aε)u = ελ sin t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdpParams {
    /// Detuning.
    pub a: f64,
    /// Forcing amplitude.
    pub lambda: f64,
    pub variant: Variant,
}

impl VdpParams {
    pub fn new(a: f64, lambda: f64, variant: Variant) -> Result<Self> {
        if !(a.is_finite() && lambda.is_finite()) {
            return Err(Error::invalid("a and lambda must be finite"));
        }
        if lambda < 0.0 {
            return Err(Error::invalid("lambda must be nonnegative"));
        }
        Ok(Self { a, lambda, variant })
    }

    pub fn nonsmooth(a: f64, lambda: f64) -> Self {
        Self {
            a,
            lambda,
            variant: Variant::Nonsmooth,
        }
    }

    pub fn classical(a: f64, lambda: f64) -> Self {
        Self {
            a,
            lambda,
            variant: Variant::Classical,
        }
    }
}

impl Oscillator for VdpParams {
    fn forcing(&self, t: f64, u: f64, du: f64) -> f64 {
        let d = match self.variant {
            Variant::Nonsmooth => u.abs(),
            Variant::Classical => u * u,
        };
        -self.a * u - (d - 1.0) * du + self.lambda * t.sin()
    }
    fn has_position_kink(&self) -> bool {
        self.variant == Variant::Nonsmooth
    }
    fn singular_points(&self) -> Vec<Vec<f64>> {
        match self.variant {
            Variant::Nonsmooth => vec![vec![0.0, 0.0]],
            Variant::Classical => Vec::new(),
        }
    }
}

pub fn vdp_original(params: VdpParams) -> OriginalCoords<VdpParams> {
    OriginalCoords(params)
}

pub fn vdp_rotated(params: VdpParams) -> RotatedCoords<VdpParams> {
    RotatedCoords(params)
}

/// Beam on one-sided cables, `z̈ + z + ε(δ₀ż + d₀z⁺ − w − λ sin t) = 0`.
///
/// All perturbing terms are taken at order `ε` with the linear frequency
/// normalized to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringParams {
    /// Damping `δ₀`.
    pub delta0: f64,
    /// One-sided stiffness `d₀`.
    pub d0: f64,
    /// Constant load `w`.
    pub w: f64,
    pub lambda: f64,
}

impl SpringParams {
    pub fn new(delta0: f64, d0: f64, w: f64, lambda: f64) -> Result<Self> {
        if ![delta0, d0, w, lambda].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("spring parameters must be finite"));
        }
        if delta0 < 0.0 || d0 < 0.0 {
            return Err(Error::invalid("delta0 and d0 must be nonnegative"));
        }
        Ok(Self {
            delta0,
            d0,
            w,
            lambda,
        })
    }
}

impl Default for SpringParams {
    fn default() -> Self {
        Self {
            delta0: 0.5,
            d0: 1.0,
            w: 0.2,
            lambda: 1.0,
        }
    }
}

impl Oscillator for SpringParams {
    fn forcing(&self, t: f64, u: f64, du: f64) -> f64 {
        -self.delta0 * du - self.d0 * u.max(0.0) + self.w + self.lambda * t.sin()
    }
    fn has_position_kink(&self) -> bool {
        true
    }
}

pub fn spring_system(params: SpringParams) -> OriginalCoords<SpringParams> {
    OriginalCoords(params)
}

pub fn spring_rotated(params: SpringParams) -> RotatedCoords<SpringParams> {
    RotatedCoords(params)
}

const FOUR_THIRDS: f64 = 4.0 / 3.0;

fn require_nonsmooth(params: &VdpParams) -> Result<()> {
    match params.variant {
        Variant::Nonsmooth => Ok(()),
        Variant::Classical => Err(Error::Unsupported(
            "the classical averaged field is computed by quadrature".into(),
        )),
    }
}

/// Closed-form averaged field of the nonsmooth oscillator at `(M, N)`.
pub fn g0_analytic(m: f64, n: f64, params: &VdpParams) -> Result<[f64; 2]> {
    require_nonsmooth(params)?;
    let r = m.hypot(n);
    let (a, lambda) = (params.a, params.lambda);
    Ok([
        PI * a * n - PI * lambda + PI * m - FOUR_THIRDS * m * r,
        -PI * a * m + PI * n - FOUR_THIRDS * n * r,
    ])
}

/// Partial derivatives of [`g0_analytic`], row-major.
pub fn g0_jacobian_analytic(m: f64, n: f64, params: &VdpParams) -> Result<[[f64; 2]; 2]> {
    require_nonsmooth(params)?;
    let r = m.hypot(n);
    if r == 0.0 {
        return Err(origin_error(m, n));
    }
    let a = params.a;
    let cross = FOUR_THIRDS * m * n / r;
    Ok([
        [PI - FOUR_THIRDS * (r + m * m / r), PI * a - cross],
        [-PI * a - cross, PI - FOUR_THIRDS * (r + n * n / r)],
    ])
}

fn origin_error(m: f64, n: f64) -> Error {
    Error::Domain {
        point: vec![m, n],
        reason: "the averaged field is not differentiable at the origin".into(),
    }
}

/// `(det, trace)` of the nonsmooth averaged Jacobian:
/// `π²(1 + a²) + (32/9) r² − 4π r` and `2(π − 2r)`.
pub fn det_trace_analytic(m: f64, n: f64, a: f64) -> Result<(f64, f64)> {
    let r = m.hypot(n);
    if r == 0.0 {
        return Err(origin_error(m, n));
    }
    Ok(det_trace_at_radius(r, a))
}

pub(crate) fn det_trace_at_radius(r: f64, a: f64) -> (f64, f64) {
    (
        PI * PI * (1.0 + a * a) + 32.0 / 9.0 * r * r - 4.0 * PI * r,
        2.0 * (PI - 2.0 * r),
    )
}

/// `(M, N) ↦ (A, φ)` with `M = A sin φ`, `N = A cos φ`, `A ≥ 0`, `φ ∈ (−π, π]`.
pub fn amplitude_phase(m: f64, n: f64) -> (f64, f64) {
    let amp = m.hypot(n);
    if amp == 0.0 {
        return (0.0, 0.0);
    }
    let phi = m.atan2(n);
    (amp, if phi <= -PI { PI } else { phi })
}

pub fn from_amplitude_phase(amplitude: f64, phase: f64) -> (f64, f64) {
    let (s, c) = phase.sin_cos();
    (amplitude * s, amplitude * c)
}

/// The closed form of the nonsmooth averaged field as an override.
#[derive(Debug, Clone, Copy)]
pub struct NonsmoothVdpAverage(pub VdpParams);

impl AnalyticAverage for NonsmoothVdpAverage {
    fn value(&self, v: &[f64]) -> Vec<f64> {
        g0_analytic(v[0], v[1], &self.0)
            .expect("override is only built for the nonsmooth variant")
            .to_vec()
    }
    fn jacobian(&self, v: &[f64]) -> DMatrix<f64> {
        let j = g0_jacobian_analytic(v[0], v[1], &self.0)
            .expect("override is only built for the nonsmooth variant off the origin");
        DMatrix::from_row_slice(2, 2, &[j[0][0], j[0][1], j[1][0], j[1][1]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "nonsmooth-vdp")]
    NonsmoothVdp,
    #[serde(rename = "classical-vdp")]
    ClassicalVdp,
    #[serde(rename = "piecewise-spring")]
    PiecewiseSpring,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::NonsmoothVdp,
        ModelKind::ClassicalVdp,
        ModelKind::PiecewiseSpring,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::NonsmoothVdp => "nonsmooth-vdp",
            ModelKind::ClassicalVdp => "classical-vdp",
            ModelKind::PiecewiseSpring => "piecewise-spring",
        }
    }

    pub fn variant(&self) -> Option<Variant> {
        match self {
            ModelKind::NonsmoothVdp => Some(Variant::Nonsmooth),
            ModelKind::ClassicalVdp => Some(Variant::Classical),
            ModelKind::PiecewiseSpring => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                Error::invalid(format!(
                    "unknown model '{s}'; valid models: {}",
                    names.join(", ")
                ))
            })
    }
}

/// A built-in model with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Vdp(VdpParams),
    Spring(SpringParams),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Vdp(p) if p.variant == Variant::Nonsmooth => ModelKind::NonsmoothVdp,
            Model::Vdp(_) => ModelKind::ClassicalVdp,
            Model::Spring(_) => ModelKind::PiecewiseSpring,
        }
    }

    pub fn original(&self) -> Arc<dyn PeriodicSystem> {
        match *self {
            Model::Vdp(p) => Arc::new(vdp_original(p)),
            Model::Spring(p) => Arc::new(spring_system(p)),
        }
    }

    pub fn rotated(&self) -> Arc<dyn StandardForm> {
        match *self {
            Model::Vdp(p) => Arc::new(vdp_rotated(p)),
            Model::Spring(p) => Arc::new(spring_rotated(p)),
        }
    }

    /// Averaged field of the rotated system, with the closed form attached
    /// where one exists.
    pub fn averaged_field(&self) -> AveragedField {
        let field = AveragedField::new(self.rotated());
        match *self {
            Model::Vdp(p) if p.variant == Variant::Nonsmooth => {
                field.with_analytic(Arc::new(NonsmoothVdpAverage(p)))
            }
            _ => field,
        }
    }
}

/// The two candidate forms of the classical fold condition, which differ in the sign of `a²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalDetForm {
    /// `1 + a² − A² + (3/16)A⁴`
    PlusASquared,
    /// `1 − a² − A² + (3/16)A⁴`
    MinusASquared,
    /// Both forms agree (`a = 0`).
    Indistinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDetCheck {
    /// `det g0' / π²` from the quadrature field.
    pub numeric: f64,
    pub plus_form: f64,
    pub minus_form: f64,
    pub matches: ClassicalDetForm,
}

/// Compares the quadrature determinant of the classical field at amplitude `A`
/// against both candidate forms.
pub fn classical_det_check(a: f64, amplitude: f64) -> Result<ClassicalDetCheck> {
    let field = Model::Vdp(VdpParams::classical(a, 0.0)).averaged_field();
    let j = field.g0_jacobian(&[0.0, amplitude])?;
    let numeric = (j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]) / (PI * PI);
    let s = amplitude * amplitude;
    let base = 1.0 - s + 3.0 / 16.0 * s * s;
    let plus_form = base + a * a;
    let minus_form = base - a * a;
    let (dp, dm) = ((numeric - plus_form).abs(), (numeric - minus_form).abs());
    let tol = 1e-6 * (1.0 + numeric.abs());
    let matches = if dp <= tol && dm <= tol {
        ClassicalDetForm::Indistinguishable
    } else if dp < dm {
        ClassicalDetForm::PlusASquared
    } else {
        ClassicalDetForm::MinusASquared
    };
    Ok(ClassicalDetCheck {
        numeric,
        plus_form,
        minus_form,
        matches,
    })
}
