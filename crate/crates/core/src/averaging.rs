//! The averaged field `g0(v) = ∫₀ᵀ g(τ, v, 0) dτ` of a system in standard form
//! `ẋ = ε g(t, x, ε)`, its zeros, and their classification.
//!
//! Quadrature splits `[0, T]` at every switching time of the frozen state `v`
//! so that Gauss–Legendre only ever sees the smooth pieces of the integrand.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::ode::{PeriodicSystem, MAX_HALVINGS};
use crate::quadrature::GaussLegendre;

/// A periodic system whose right-hand side is `ε g(t, x, ε)`.
pub trait StandardForm: PeriodicSystem {
    /// `g(t, x, ε)`.
    fn perturbation(&self, t: f64, x: &[f64], eps: f64, out: &mut [f64]);

    /// Points at which `g0` is known not to be differentiable.
    fn singular_points(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

impl<S: StandardForm + ?Sized> StandardForm for Arc<S> {
    fn perturbation(&self, t: f64, x: &[f64], eps: f64, out: &mut [f64]) {
        (**self).perturbation(t, x, eps, out)
    }
    fn singular_points(&self) -> Vec<Vec<f64>> {
        (**self).singular_points()
    }
}

/// Closed-form averaged field supplied alongside the numeric one.
pub trait AnalyticAverage: Send + Sync {
    fn value(&self, v: &[f64]) -> Vec<f64>;
    fn jacobian(&self, v: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Split `[0, T]` at the switching times of the frozen state.
    pub split_at_kinks: bool,
    /// Equal panels per smooth piece (per whole period when not splitting).
    pub panels: usize,
    /// Scan resolution for switching times is `T / scan_points`.
    pub scan_points: usize,
    pub kink_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            order: 20,
            split_at_kinks: true,
            panels: 1,
            scan_points: 720,
            kink_tol: 1e-12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.panels == 0 || self.scan_points < 2 {
            return Err(Error::invalid(
                "quadrature order, panels and scan points must be positive",
            ));
        }
        if self.kink_tol.is_nan() || self.kink_tol <= 0.0 {
            return Err(Error::invalid("kink_tol must be positive"));
        }
        Ok(())
    }
}

/// Verdict on a zero of `g0` from its Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Nondegenerate, so a periodic solution exists, but no stability claim applies.
    ExistenceOnly,
    /// Exactly one nearby periodic solution, asymptotically stable.
    UniqueAsymptoticallyStable,
    /// At least one nearby periodic solution that is not asymptotically stable.
    NonAsymptoticallyStable,
    /// `|det J|` within the degeneracy tolerance.
    Degenerate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::ExistenceOnly => "existence_only",
            Classification::UniqueAsymptoticallyStable => "unique_asymptotically_stable",
            Classification::NonAsymptoticallyStable => "non_asymptotically_stable",
            Classification::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerance {
    /// The degeneracy threshold is `relative · max(1, ‖J‖_F)`.
    pub relative: f64,
}

impl Default for ClassifyTolerance {
    fn default() -> Self {
        Self { relative: 1e-8 }
    }
}

impl ClassifyTolerance {
    pub fn threshold(&self, j: &DMatrix<f64>) -> f64 {
        self.relative * j.norm().max(1.0)
    }
}

/// Classifies a zero from `J = g0'(v0)`.
///
/// Planar: `det > 0, tr < 0` is stable, `det < 0` is a saddle-type zero, any other
/// nondegenerate case only guarantees existence. In higher dimension stability
/// needs every eigenvalue in the open left half plane, and a negative degree
/// `sign det(−J) < 0` certifies a non-asymptotically-stable solution.
pub fn classify_zero(j: &DMatrix<f64>, tol: &ClassifyTolerance) -> Classification {
    let det = linalg::determinant(j);
    let thr = tol.threshold(j);
    if det.abs() <= thr {
        return Classification::Degenerate;
    }
    let k = j.nrows();
    if k == 2 {
        let trace = j.trace();
        return if det < 0.0 {
            Classification::NonAsymptoticallyStable
        } else if trace < 0.0 {
            Classification::UniqueAsymptoticallyStable
        } else {
            Classification::ExistenceOnly
        };
    }
    if linalg::eigenvalues(j).iter().all(|z| z.re < 0.0) {
        return Classification::UniqueAsymptoticallyStable;
    }
    let degree_of_minus_g0 = if k.is_multiple_of(2) { det } else { -det };
    if degree_of_minus_g0 < 0.0 {
        Classification::NonAsymptoticallyStable
    } else {
        Classification::ExistenceOnly
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    pub v0: Vec<f64>,
    pub residual: f64,
    /// Row-major `g0'(v0)`.
    pub jacobian: Vec<Vec<f64>>,
    pub det: f64,
    pub trace: f64,
    pub eigen_real_parts: Vec<f64>,
    pub classification: Classification,
    pub iterations: usize,
    pub warning: Option<String>,
}

impl ZeroReport {
    pub fn jacobian_matrix(&self) -> DMatrix<f64> {
        let k = self.jacobian.len();
        DMatrix::from_fn(k, k, |i, j| self.jacobian[i][j])
    }
}

/// Zeros closer than this to a declared singular point are reported degenerate.
pub const SINGULAR_NEIGHBORHOOD: f64 = 1e-6;

#[derive(Clone)]
pub struct AveragedField {
    system: Arc<dyn StandardForm>,
    quad: QuadratureConfig,
    rule: GaussLegendre,
    analytic: Option<Arc<dyn AnalyticAverage>>,
}

impl std::fmt::Debug for AveragedField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AveragedField")
            .field("dim", &self.system.dim())
            .field("period", &self.system.period())
            .field("quad", &self.quad)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl AveragedField {
    pub fn new(system: Arc<dyn StandardForm>) -> Self {
        let quad = QuadratureConfig::default();
        Self {
            system,
            rule: GaussLegendre::new(quad.order),
            quad,
            analytic: None,
        }
    }

    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        self.rule = GaussLegendre::new(quad.order);
        self.quad = quad;
        Ok(self)
    }

    pub fn with_analytic(mut self, analytic: Arc<dyn AnalyticAverage>) -> Self {
        self.analytic = Some(analytic);
        self
    }

    pub fn without_analytic(mut self) -> Self {
        self.analytic = None;
        self
    }

    pub fn has_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn system(&self) -> &Arc<dyn StandardForm> {
        &self.system
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn period(&self) -> f64 {
        self.system.period()
    }

    /// Interior switching times in `(0, T)` of the frozen state `v`, sorted.
    pub fn breakpoints(&self, v: &[f64]) -> Vec<f64> {
        let period = self.period();
        let n = self.quad.scan_points;
        let tol = self.quad.kink_tol;
        let mut out = Vec::new();
        for i in 0..self.system.switch_count() {
            let s = |t: f64| self.system.switch_value(i, t, v);
            let mut t_prev = 0.0;
            let mut s_prev = s(0.0);
            for j in 1..=n {
                let t = period * j as f64 / n as f64;
                let s_cur = s(t);
                if s_cur == 0.0 {
                    // a switch vanishing identically carries no kink
                    if s_prev != 0.0 {
                        out.push(t);
                    }
                } else if s_prev != 0.0 && s_prev.signum() != s_cur.signum() {
                    let (mut lo, mut hi) = (t_prev, t);
                    while hi - lo > tol {
                        let mid = 0.5 * (lo + hi);
                        let sm = s(mid);
                        if sm == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if sm.signum() == s_prev.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    out.push(0.5 * (lo + hi));
                }
                t_prev = t;
                s_prev = s_cur;
            }
        }
        out.retain(|&t| t > tol && t < period - tol);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= tol);
        out
    }

    /// Gauss quadrature of `τ ↦ g(τ, v, 0)`, ignoring any analytic override.
    pub fn eval_g0_numeric(&self, v: &[f64]) -> Vec<f64> {
        let k = self.dim();
        let period = self.period();
        let mut edges = vec![0.0];
        if self.quad.split_at_kinks {
            edges.extend(self.breakpoints(v));
        }
        edges.push(period);

        let mut acc = vec![0.0; k];
        let mut buf = vec![0.0; k];
        let panels = self.quad.panels;
        for piece in edges.windows(2) {
            let width = (piece[1] - piece[0]) / panels as f64;
            for p in 0..panels {
                let a = piece[0] + p as f64 * width;
                let b = if p + 1 == panels { piece[1] } else { a + width };
                self.rule
                    .integrate_into(a, b, &mut acc, &mut buf, |t, out| {
                        self.system.perturbation(t, v, 0.0, out)
                    });
            }
        }
        acc
    }

    /// Number of quadrature nodes spent on one evaluation at `v`.
    pub fn node_count(&self, v: &[f64]) -> usize {
        let pieces = if self.quad.split_at_kinks {
            self.breakpoints(v).len() + 1
        } else {
            1
        };
        pieces * self.quad.panels * self.quad.order
    }

    /// `g0(v)`: the analytic override when present, quadrature otherwise.
    pub fn eval_g0(&self, v: &[f64]) -> Vec<f64> {
        match &self.analytic {
            Some(a) => a.value(v),
            None => self.eval_g0_numeric(v),
        }
    }

    /// Max componentwise gap between quadrature and the analytic override.
    pub fn analytic_discrepancy(&self, v: &[f64]) -> Option<f64> {
        let a = self.analytic.as_ref()?.value(v);
        let n = self.eval_g0_numeric(v);
        Some(
            a.iter()
                .zip(&n)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        )
    }

    fn fd_step(v: &[f64]) -> f64 {
        f64::EPSILON.cbrt() * linalg::norm(v).max(1.0)
    }

    fn check_domain(&self, v: &[f64], radius: f64) -> Result<()> {
        if v.len() != self.dim() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "point must be finite with length {}",
                self.dim()
            )));
        }
        for p in self.system.singular_points() {
            if linalg::dist(v, &p) <= radius {
                return Err(Error::Domain {
                    point: v.to_vec(),
                    reason: format!("g0 is not differentiable at {p:?}"),
                });
            }
        }
        Ok(())
    }

    /// Central-difference Jacobian of the quadrature, ignoring any override.
    pub fn g0_jacobian_numeric(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        let h = Self::fd_step(v);
        self.check_domain(v, 2.0 * h)?;
        let k = self.dim();
        let mut jac = DMatrix::zeros(k, k);
        let mut probe = v.to_vec();
        for j in 0..k {
            probe[j] = v[j] + h;
            let plus = self.eval_g0_numeric(&probe);
            probe[j] = v[j] - h;
            let minus = self.eval_g0_numeric(&probe);
            probe[j] = v[j];
            for i in 0..k {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// `g0'(v)`: analytic override when present, finite differences otherwise.
    pub fn g0_jacobian(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        match &self.analytic {
            Some(a) => {
                self.check_domain(v, 1e-12)?;
                Ok(a.jacobian(v))
            }
            None => self.g0_jacobian_numeric(v),
        }
    }

    /// Damped Newton iteration for `g0(v) = 0` followed by classification.
    pub fn find_zero(&self, guess: &[f64], tol: f64, max_iter: usize) -> Result<ZeroReport> {
        self.check_domain(guess, 1e-12)?;
        let residual = |v: &[f64]| {
            let r = self.eval_g0(v);
            let n = linalg::norm(&r);
            (r, n)
        };
        let mut v = guess.to_vec();
        let (mut r, mut res) = residual(&v);
        let mut iterations = 0;
        while res > tol {
            if iterations == max_iter {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: res,
                    best: v,
                });
            }
            iterations += 1;
            let jac = self.g0_jacobian(&v)?;
            let neg: Vec<f64> = r.iter().map(|x| -x).collect();
            // On a singular Jacobian fall back to the least-squares step; it still
            // converges when the residual stays in the range (continua of zeros).
            let (delta, singular) = match linalg::solve(&jac, &neg) {
                Some(d) => (d, false),
                None => (linalg::lstsq(&jac, &neg), true),
            };
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, d)| a + scale * d).collect();
                let (rt, nt) = residual(&trial);
                if nt < res {
                    v = trial;
                    r = rt;
                    res = nt;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                if singular {
                    return Err(Error::SingularJacobian { at: v });
                }
                return Err(Error::NonConvergence {
                    iterations,
                    residual: res,
                    best: v,
                });
            }
        }
        self.report(v, res, iterations)
    }

    fn report(&self, v0: Vec<f64>, residual: f64, iterations: usize) -> Result<ZeroReport> {
        let near_singular = self
            .system
            .singular_points()
            .into_iter()
            .find(|p| linalg::dist(&v0, p) <= SINGULAR_NEIGHBORHOOD);
        let jac = self.g0_jacobian(&v0)?;
        let k = jac.nrows();
        let det = linalg::determinant(&jac);
        let mut classification = classify_zero(&jac, &ClassifyTolerance::default());
        let warning = near_singular.map(|p| {
            classification = Classification::Degenerate;
            format!(
                "zero lies within {SINGULAR_NEIGHBORHOOD:e} of the nondifferentiable point {p:?}"
            )
        });
        Ok(ZeroReport {
            residual,
            jacobian: (0..k)
                .map(|i| (0..k).map(|j| jac[(i, j)]).collect())
                .collect(),
            det,
            trace: jac.trace(),
            eigen_real_parts: linalg::eigenvalues(&jac).iter().map(|z| z.re).collect(),
            classification,
            iterations,
            warning,
            v0,
        })
    }

    /// Largest observed ratio `‖T(v1) − T(v2)‖₀ / ‖v1 − v2‖₀` for `T = I + α g0`
    /// over random pairs in the ball of `radius` around `v0`, measured in the
    /// norm adapted to `g0'(v0)` (see [`adapted_basis`]).
    pub fn contraction_probe(
        &self,
        v0: &[f64],
        alpha: f64,
        radius: f64,
        n_samples: usize,
    ) -> Result<f64> {
        let basis = adapted_basis(&self.g0_jacobian(v0)?);
        let map = |v: &[f64]| -> Vec<f64> {
            let g = self.eval_g0(v);
            v.iter().zip(&g).map(|(x, y)| x + alpha * y).collect()
        };
        Ok(max_pair_ratio(v0, radius, n_samples, &basis, map))
    }
}

pub(crate) const PROBE_SEED: u64 = 0x5eed_a7e5;

/// Max ratio of `‖B(F(v1) − F(v2))‖ / ‖B(v1 − v2)‖` over seeded random pairs.
pub(crate) fn max_pair_ratio(
    center: &[f64],
    radius: f64,
    n_samples: usize,
    basis: &DMatrix<f64>,
    mut map: impl FnMut(&[f64]) -> Vec<f64>,
) -> f64 {
    let k = center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let adapted = |d: &[f64]| -> f64 {
        (0..k)
            .map(|i| (0..k).map(|j| basis[(i, j)] * d[j]).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let u1 = linalg::sample_ball(&mut rng, k);
        let u2 = linalg::sample_ball(&mut rng, k);
        let v1: Vec<f64> = center
            .iter()
            .zip(&u1)
            .map(|(c, u)| c + radius * u)
            .collect();
        let v2: Vec<f64> = center
            .iter()
            .zip(&u2)
            .map(|(c, u)| c + radius * u)
            .collect();
        let dv: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a - b).collect();
        let den = adapted(&dv);
        if den == 0.0 {
            continue;
        }
        let (f1, f2) = (map(&v1), map(&v2));
        let df: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a - b).collect();
        best = best.max(adapted(&df) / den);
    }
    best
}

/// A matrix `B` such that `‖x‖₀ = ‖B x‖₂` is a norm in which `I + αJ` has
/// operator norm close to its spectral radius.
///
/// Planar matrices with distinct eigenvalues use their real eigenbasis (a
/// rotation-scaling block for complex pairs). Otherwise the real Schur form is
/// rescaled block by block to damp the off-diagonal coupling.
pub fn adapted_basis(j: &DMatrix<f64>) -> DMatrix<f64> {
    let k = j.nrows();
    if k == 2 {
        if let Some(v) = planar_eigenbasis(j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]) {
            if let Some(inv) = v.try_inverse() {
                return inv;
            }
        }
    }
    schur_basis(j)
}

/// Columns spanning the real invariant subspaces of `[[a, b], [c, d]]`.
fn planar_eigenbasis(a: f64, b: f64, c: f64, d: f64) -> Option<DMatrix<f64>> {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = 0.25 * tr * tr - det;
    let scale = (a * a + b * b + c * c + d * d).max(f64::MIN_POSITIVE);
    if disc.abs() <= 1e-10 * scale {
        return None;
    }
    let use_first_row = b.abs() >= c.abs();
    if use_first_row && b == 0.0 {
        // Already diagonal.
        return Some(DMatrix::identity(2, 2));
    }
    let eigvec = |mu_re: f64, mu_im: f64| -> ([f64; 2], [f64; 2]) {
        if use_first_row {
            ([b, mu_re - a], [0.0, mu_im])
        } else {
            ([mu_re - d, c], [mu_im, 0.0])
        }
    };
    let unit = |w: [f64; 2]| {
        let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
        [w[0] / n, w[1] / n]
    };
    if disc > 0.0 {
        let root = disc.sqrt();
        let (w1, _) = eigvec(0.5 * tr + root, 0.0);
        let (w2, _) = eigvec(0.5 * tr - root, 0.0);
        let (w1, w2) = (unit(w1), unit(w2));
        Some(DMatrix::from_column_slice(
            2,
            2,
            &[w1[0], w1[1], w2[0], w2[1]],
        ))
    } else {
        let (wr, wi) = eigvec(0.5 * tr, (-disc).sqrt());
        Some(DMatrix::from_column_slice(
            2,
            2,
            &[wr[0], wr[1], wi[0], wi[1]],
        ))
    }
}

fn schur_basis(j: &DMatrix<f64>) -> DMatrix<f64> {
    let k = j.nrows();
    let (q, t) = j.clone().schur().unpack();
    // Diagonal blocks of the quasi-triangular factor.
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < k {
        if i + 1 < k && t[(i + 1, i)].abs() > 1e-14 * t.norm().max(1.0) {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    let delta = 1e-3 / t.norm().max(1.0);
    let mut b = DMatrix::zeros(k, k);
    for (idx, &(start, size)) in blocks.iter().enumerate() {
        let s = delta.powi(idx as i32);
        if size == 1 {
            b[(start, start)] = 1.0 / s;
        } else {
            let blk = planar_eigenbasis(
                t[(start, start)],
                t[(start, start + 1)],
                t[(start + 1, start)],
                t[(start + 1, start + 1)],
            )
            .and_then(|m| m.try_inverse())
            .unwrap_or_else(|| DMatrix::identity(2, 2));
            for r in 0..2 {
                for c in 0..2 {
                    b[(start + r, start + c)] = blk[(r, c)] / s;
                }
            }
        }
    }
    b * q.transpose()
}
