//! Integration of periodic, piecewise-smooth systems and the period (Poincaré) map.
//!
//! The integrator is the classical fourth-order Runge–Kutta scheme on a uniform
//! base grid. Each base step is checked by step doubling against the configured
//! tolerances and recursively halved when the check fails. Switch functions mark
//! the loci where the right-hand side loses smoothness: whenever one changes sign
//! inside a step, the crossing is bracketed by bisection to `event_tol` and the
//! step is split there, so no step straddles a kink by more than `event_tol`.
//! The base grid itself never moves, which keeps the period map a smooth
//! function of the initial point (needed for finite-difference Jacobians).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A `T`-periodic right-hand side `ẋ = f(t, x, ε)`.
///
/// Implementations must be pure; they are evaluated concurrently.
pub trait PeriodicSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn period(&self) -> f64;

    fn rhs(&self, t: f64, x: &[f64], eps: f64, dx: &mut [f64]);

    /// Number of declared switch functions. Zero crossings of a switch function
    /// mark where the right-hand side is not differentiable. Declaring them is
    /// optional; omitted switches only cost accuracy near the kinks.
    fn switch_count(&self) -> usize {
        0
    }

    fn switch_value(&self, _index: usize, _t: f64, _x: &[f64]) -> f64 {
        0.0
    }
}

impl<S: PeriodicSystem + ?Sized> PeriodicSystem for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn period(&self) -> f64 {
        (**self).period()
    }
    fn rhs(&self, t: f64, x: &[f64], eps: f64, dx: &mut [f64]) {
        (**self).rhs(t, x, eps, dx)
    }
    fn switch_count(&self) -> usize {
        (**self).switch_count()
    }
    fn switch_value(&self, index: usize, t: f64, x: &[f64]) -> f64 {
        (**self).switch_value(index, t, x)
    }
}

impl<S: PeriodicSystem + ?Sized> PeriodicSystem for std::sync::Arc<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn period(&self) -> f64 {
        (**self).period()
    }
    fn rhs(&self, t: f64, x: &[f64], eps: f64, dx: &mut [f64]) {
        (**self).rhs(t, x, eps, dx)
    }
    fn switch_count(&self) -> usize {
        (**self).switch_count()
    }
    fn switch_value(&self, index: usize, t: f64, x: &[f64]) -> f64 {
        (**self).switch_value(index, t, x)
    }
}

type RhsFn = dyn Fn(f64, &[f64], f64, &mut [f64]) + Send + Sync;
type SwitchFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;

/// A [`PeriodicSystem`] assembled from closures.
pub struct FnSystem {
    dim: usize,
    period: f64,
    rhs: Box<RhsFn>,
    switches: Vec<Box<SwitchFn>>,
}

impl FnSystem {
    pub fn new(
        dim: usize,
        period: f64,
        rhs: impl Fn(f64, &[f64], f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            period,
            rhs: Box::new(rhs),
            switches: Vec::new(),
        }
    }

    pub fn with_switch(mut self, s: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.switches.push(Box::new(s));
        self
    }
}

impl PeriodicSystem for FnSystem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn period(&self) -> f64 {
        self.period
    }
    fn rhs(&self, t: f64, x: &[f64], eps: f64, dx: &mut [f64]) {
        (self.rhs)(t, x, eps, dx)
    }
    fn switch_count(&self) -> usize {
        self.switches.len()
    }
    fn switch_value(&self, index: usize, t: f64, x: &[f64]) -> f64 {
        (self.switches[index])(t, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Largest base step; the span is divided into equal steps no longer than this.
    pub step: f64,
    /// Width of the time bracket around each switching crossing.
    pub event_tol: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Hard floor for recursive step halving.
    pub min_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: std::f64::consts::TAU / 512.0,
            event_tol: 1e-12,
            rtol: 1e-9,
            atol: 1e-9,
            min_step: 1e-10,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(self, step: f64) -> Self {
        Self { step, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.step,
            self.event_tol,
            self.rtol,
            self.atol,
            self.min_step,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(
                "integrator tolerances must be finite and positive",
            ));
        }
        if self.event_tol >= self.step {
            return Err(Error::invalid(
                "event_tol must be smaller than the base step",
            ));
        }
        if self.min_step >= self.step {
            return Err(Error::invalid(
                "min_step must be smaller than the base step",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub switch: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn event_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareResult {
    pub v: Vec<f64>,
    pub image: Vec<f64>,
    pub eps: f64,
}

impl PoincareResult {
    pub fn displacement(&self) -> f64 {
        linalg::dist(&self.image, &self.v)
    }
}

struct Stepper<'a, S: ?Sized> {
    sys: &'a S,
    eps: f64,
    cfg: &'a IntegratorConfig,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a, S: PeriodicSystem + ?Sized> Stepper<'a, S> {
    fn new(sys: &'a S, eps: f64, cfg: &'a IntegratorConfig) -> Self {
        let n = sys.dim();
        Self {
            sys,
            eps,
            cfg,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    fn rk4(&mut self, t: f64, x: &[f64], h: f64, out: &mut [f64]) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        let sys = self.sys;
        let eps = self.eps;
        sys.rhs(t, x, eps, k1);
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        sys.rhs(t + 0.5 * h, tmp, eps, k2);
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        sys.rhs(t + 0.5 * h, tmp, eps, k3);
        for i in 0..x.len() {
            tmp[i] = x[i] + h * k3[i];
        }
        sys.rhs(t + h, tmp, eps, k4);
        for i in 0..x.len() {
            out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }

    /// One accuracy-controlled step of length `h` (two half steps, checked
    /// against a full step; halved recursively on failure).
    fn advance(&mut self, t: f64, x: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
        if h == 0.0 {
            out.copy_from_slice(x);
            return Ok(());
        }
        let n = x.len();
        let mut full = vec![0.0; n];
        let mut mid = vec![0.0; n];
        self.rk4(t, x, h, &mut full);
        self.rk4(t, x, 0.5 * h, &mut mid);
        self.rk4(t + 0.5 * h, &mid, 0.5 * h, out);
        if !(all_finite(&full) && all_finite(out)) {
            return Err(Error::Divergence { t });
        }
        let err = (0..n)
            .map(|i| {
                let scale = self.cfg.atol + self.cfg.rtol * x[i].abs().max(out[i].abs());
                (out[i] - full[i]).abs() / scale
            })
            .fold(0.0, f64::max);
        if err <= 1.0 {
            return Ok(());
        }
        let half = 0.5 * h;
        if half < self.cfg.min_step {
            return Err(Error::StepUnderflow { t, step: half });
        }
        self.advance(t, x, half, &mut mid)?;
        self.advance(t + half, &mid, half, out)
    }

    fn switches(&self, t: f64, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.sys.switch_count()).map(|i| self.sys.switch_value(i, t, x)));
    }

    /// Integrates `[t0, t1]`, calling `sample` after every base step and at every event.
    fn run(
        &mut self,
        x0: &[f64],
        t0: f64,
        t1: f64,
        events: &mut Vec<Event>,
        mut sample: impl FnMut(f64, &[f64]),
    ) -> Result<Vec<f64>> {
        let n = x0.len();
        let steps = ((t1 - t0) / self.cfg.step).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        let mut t = t0;
        let mut x = x0.to_vec();
        let mut next = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut s_now = Vec::new();
        let mut s_next = Vec::new();
        self.switches(t, &x, &mut s_now);

        for i in 0..steps {
            let t_end = if i + 1 == steps {
                t1
            } else {
                t0 + (i + 1) as f64 * h
            };
            loop {
                let span = t_end - t;
                if span <= 0.0 {
                    break;
                }
                self.advance(t, &x, span, &mut next)?;
                self.switches(t_end, &next, &mut s_next);

                // Earliest bracketed crossing among the switches that changed sign.
                let mut first: Option<(f64, usize)> = None;
                for j in 0..s_now.len() {
                    let (a, b) = (s_now[j], s_next[j]);
                    if a == 0.0 || b == 0.0 || a.signum() == b.signum() {
                        continue;
                    }
                    let (mut lo, mut hi) = (0.0, span);
                    while hi - lo > self.cfg.event_tol {
                        let mid = 0.5 * (lo + hi);
                        self.advance(t, &x, mid, &mut trial)?;
                        let s = self.sys.switch_value(j, t + mid, &trial);
                        if s == 0.0 {
                            hi = mid;
                            break;
                        }
                        if s.signum() == a.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    if first.is_none_or(|(best, _)| hi < best) {
                        first = Some((hi, j));
                    }
                }

                match first {
                    Some((tau, j)) if tau < span => {
                        self.advance(t, &x, tau, &mut trial)?;
                        t += tau;
                        std::mem::swap(&mut x, &mut trial);
                        events.push(Event { t, switch: j });
                        sample(t, &x);
                        self.switches(t, &x, &mut s_now);
                    }
                    other => {
                        if let Some((_, j)) = other {
                            events.push(Event {
                                t: t_end,
                                switch: j,
                            });
                        } else {
                            for j in 0..s_now.len() {
                                if s_next[j] == 0.0 && s_now[j] != 0.0 {
                                    events.push(Event {
                                        t: t_end,
                                        switch: j,
                                    });
                                }
                            }
                        }
                        t = t_end;
                        std::mem::swap(&mut x, &mut next);
                        std::mem::swap(&mut s_now, &mut s_next);
                        break;
                    }
                }
            }
            sample(t, &x);
        }
        Ok(x)
    }
}

fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

fn check_inputs<S: PeriodicSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    t0: f64,
    t1: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<()> {
    cfg.validate()?;
    if x0.len() != sys.dim() {
        return Err(Error::invalid(format!(
            "state has length {}, system dimension is {}",
            x0.len(),
            sys.dim()
        )));
    }
    if !all_finite(x0) {
        return Err(Error::invalid("initial state must be finite"));
    }
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::invalid("integration span requires finite t1 > t0"));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid("eps must lie in [0, 1]"));
    }
    Ok(())
}

/// Integrates from `(t0, x0)` to `t1`, recording every base step and every switching event.
pub fn integrate<S: PeriodicSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    t0: f64,
    t1: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_inputs(sys, x0, t0, t1, eps, cfg)?;
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![x0.to_vec()],
        events: Vec::new(),
    };
    let mut events = Vec::new();
    let mut samples = Vec::new();
    Stepper::new(sys, eps, cfg).run(x0, t0, t1, &mut events, |t, x| {
        samples.push((t, x.to_vec()))
    })?;
    for (t, x) in samples {
        traj.times.push(t);
        traj.states.push(x);
    }
    traj.events = events;
    Ok(traj)
}

/// Final state only; skips sample storage.
pub fn flow<S: PeriodicSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    t0: f64,
    t1: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    check_inputs(sys, x0, t0, t1, eps, cfg)?;
    let mut events = Vec::new();
    Stepper::new(sys, eps, cfg).run(x0, t0, t1, &mut events, |_, _| {})
}

/// `v ↦ x(T, v, ε)`, the solution after one period started at `t = 0`.
pub fn poincare_map<S: PeriodicSystem + ?Sized>(
    sys: &S,
    v: &[f64],
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<PoincareResult> {
    let image = flow(sys, v, 0.0, sys.period(), eps, cfg)?;
    Ok(PoincareResult {
        v: v.to_vec(),
        image,
        eps,
    })
}

/// Central-difference Jacobian of the period map, step `cbrt(ε_mach)·max(1, ‖v‖)`.
pub fn poincare_jacobian<S: PeriodicSystem + ?Sized>(
    sys: &S,
    v: &[f64],
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<DMatrix<f64>> {
    let k = v.len();
    let h = f64::EPSILON.cbrt() * linalg::norm(v).max(1.0);
    let mut jac = DMatrix::zeros(k, k);
    let mut probe = v.to_vec();
    for j in 0..k {
        probe[j] = v[j] + h;
        let plus = poincare_map(sys, &probe, eps, cfg)?.image;
        probe[j] = v[j] - h;
        let minus = poincare_map(sys, &probe, eps, cfg)?.image;
        probe[j] = v[j];
        for i in 0..k {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

/// Number of step halvings tried before a damped Newton iteration gives up.
pub(crate) const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton on `v ↦ P(v) − v`.
pub fn fixed_point<S: PeriodicSystem + ?Sized>(
    sys: &S,
    guess: &[f64],
    eps: f64,
    cfg: &IntegratorConfig,
    opts: NewtonOptions,
) -> Result<FixedPoint> {
    if eps == 0.0 {
        return Err(Error::DegenerateMap);
    }
    if !all_finite(guess) {
        return Err(Error::invalid("fixed-point guess must be finite"));
    }
    let residual_at = |v: &[f64]| -> Result<(Vec<f64>, f64)> {
        let p = poincare_map(sys, v, eps, cfg)?;
        let r: Vec<f64> = p.image.iter().zip(v).map(|(a, b)| a - b).collect();
        let n = linalg::norm(&r);
        Ok((r, n))
    };

    let mut v = guess.to_vec();
    let (mut r, mut res) = residual_at(&v)?;
    for iter in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok(FixedPoint {
                point: v,
                residual: res,
                iterations: iter,
            });
        }
        let mut jac = poincare_jacobian(sys, &v, eps, cfg)?;
        for i in 0..v.len() {
            jac[(i, i)] -= 1.0;
        }
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = linalg::solve(&jac, &neg).ok_or(Error::SingularJacobian { at: v.clone() })?;

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, d)| a + scale * d).collect();
            let (rt, nt) = residual_at(&trial)?;
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
            return Err(Error::NonConvergence {
                iterations: iter + 1,
                residual: res,
                best: v,
            });
        }
    }
    if res <= opts.tol {
        return Ok(FixedPoint {
            point: v,
            residual: res,
            iterations: opts.max_iter,
        });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: res,
        best: v,
    })
}

/// Eigenvalues of the period-map Jacobian. Planar matrices use the closed-form
/// quadratic; larger ones go through a real Schur decomposition.
pub fn floquet_multipliers(d: &DMatrix<f64>) -> Vec<Complex64> {
    linalg::eigenvalues(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloquetVerdict {
    AsymptoticallyStable,
    Unstable,
    Marginal,
}

pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-6;

impl FloquetVerdict {
    pub fn from_multipliers(multipliers: &[Complex64], margin: f64) -> Self {
        if multipliers.iter().any(|m| m.norm() > 1.0 + margin) {
            FloquetVerdict::Unstable
        } else if multipliers.iter().all(|m| m.norm() < 1.0 - margin) {
            FloquetVerdict::AsymptoticallyStable
        } else {
            FloquetVerdict::Marginal
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn rotation() -> FnSystem {
        FnSystem::new(2, TAU, |_, x, _, dx| {
            dx[0] = x[1];
            dx[1] = -x[0];
        })
    }

    #[test]
    fn rotation_returns_after_one_period() {
        let cfg = IntegratorConfig::default();
        let p = poincare_map(&rotation(), &[1.0, 0.0], 0.0, &cfg).unwrap();
        assert!(p.displacement() < 1e-9, "{:?}", p.image);
    }

    #[test]
    fn trajectory_is_strictly_increasing_and_records_events() {
        let sys = rotation().with_switch(|_, x| x[0]);
        let cfg = IntegratorConfig::default();
        let traj = integrate(&sys, &[1.0, 0.0], 0.0, TAU, 0.0, &cfg).unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        let ev: Vec<f64> = traj.event_times().collect();
        assert_eq!(ev.len(), 2);
        assert!((ev[0] - PI / 2.0).abs() < 1e-10);
        assert!((ev[1] - 1.5 * PI).abs() < 1e-10);
        for e in &traj.events {
            let i = traj.times.iter().position(|t| *t == e.t).unwrap();
            assert!(traj.states[i][0].abs() < 1e-9);
        }
    }

    #[test]
    fn nan_rhs_reports_divergence_with_last_time() {
        let sys = FnSystem::new(1, 1.0, |t, _, _, dx| {
            dx[0] = if t > 0.5 { f64::NAN } else { 1.0 };
        });
        let cfg = IntegratorConfig::default().with_step(0.1);
        match integrate(&sys, &[0.0], 0.0, 1.0, 0.0, &cfg) {
            Err(Error::Divergence { t }) => assert!((0.4..=0.5 + 1e-12).contains(&t), "{t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finite_time_blowup_underflows_the_step() {
        let sys = FnSystem::new(1, 2.0, |_, x, _, dx| dx[0] = x[0] * x[0]);
        let cfg = IntegratorConfig::default().with_step(0.1);
        let err = integrate(&sys, &[1.0], 0.0, 2.0, 0.0, &cfg).unwrap_err();
        assert!(
            matches!(err, Error::StepUnderflow { .. } | Error::Divergence { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = IntegratorConfig::default();
        let sys = rotation();
        assert!(integrate(&sys, &[1.0, 0.0], 1.0, 1.0, 0.0, &cfg).is_err());
        assert!(integrate(&sys, &[1.0, 0.0], 0.0, 1.0, 1.5, &cfg).is_err());
        assert!(integrate(&sys, &[f64::NAN, 0.0], 0.0, 1.0, 0.0, &cfg).is_err());
        assert!(integrate(&sys, &[1.0], 0.0, 1.0, 0.0, &cfg).is_err());
        let bad = IntegratorConfig {
            event_tol: 1.0,
            ..cfg
        };
        assert!(integrate(&sys, &[1.0, 0.0], 0.0, 1.0, 0.0, &bad).is_err());
    }

    #[test]
    fn fixed_point_rejects_zero_eps() {
        let err = fixed_point(
            &rotation(),
            &[1.0, 0.0],
            0.0,
            &IntegratorConfig::default(),
            NewtonOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateMap));
    }

    #[test]
    fn fixed_point_of_a_linear_damped_system() {
        // ẋ = ε(−x + cos t): the periodic solution starts at x(0) = ε²/(ε² + 1).
        let sys = FnSystem::new(1, TAU, |t, x, eps, dx| dx[0] = eps * (-x[0] + t.cos()));
        let eps = 0.3;
        let fp = fixed_point(
            &sys,
            &[0.0],
            eps,
            &IntegratorConfig::default(),
            NewtonOptions::default(),
        )
        .unwrap();
        let exact = eps * eps / (eps * eps + 1.0);
        assert!((fp.point[0] - exact).abs() < 1e-9, "{:?}", fp);
        assert!(fp.residual <= 1e-10);
    }

    #[test]
    fn floquet_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        let m = floquet_multipliers(&id);
        assert!(m
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        assert_eq!(
            FloquetVerdict::from_multipliers(&m, DEFAULT_STABILITY_MARGIN),
            FloquetVerdict::Marginal
        );

        let d = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.2]);
        let m = floquet_multipliers(&d);
        assert!((m[0].re - 0.5).abs() < 1e-15 && (m[1].re - 0.2).abs() < 1e-15);
        assert_eq!(
            FloquetVerdict::from_multipliers(&m, DEFAULT_STABILITY_MARGIN),
            FloquetVerdict::AsymptoticallyStable
        );

        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let m = floquet_multipliers(&rot);
        assert!(m.iter().all(|z| (z.norm() - 2.0).abs() < 1e-15));
        assert_eq!(
            FloquetVerdict::from_multipliers(&m, DEFAULT_STABILITY_MARGIN),
            FloquetVerdict::Unstable
        );
    }

    #[test]
    fn general_dimension_multipliers_use_schur() {
        let d = DMatrix::from_row_slice(3, 3, &[0.5, 1.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 2.0]);
        let mut m: Vec<f64> = floquet_multipliers(&d).iter().map(|z| z.re).collect();
        m.sort_by(f64::total_cmp);
        assert!(
            (m[0] - 0.25).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12 && (m[2] - 2.0).abs() < 1e-12
        );
    }
}
