//! Periodic solutions of ε-small Lipschitz periodic systems by the averaging method.
//!
//! A system in standard form `ẋ = ε g(t, x, ε)` with period `T` is replaced by the
//! averaged field `g0(v) = ∫₀ᵀ g(τ, v, 0) dτ`. Nondegenerate zeros of `g0` seed
//! `T`-periodic solutions for small `ε`, and the sign pattern of the Jacobian at
//! the zero decides their stability. The crate covers:
//!
//! - [`ode`]: event-aware fixed-step Runge–Kutta integration, the period map, its
//!   finite-difference Jacobian, fixed points and Floquet multipliers;
//! - [`averaging`]: quadrature of `g0` with kink splitting, zeros and their
//!   classification, contraction probes;
//! - [`models`]: the nonsmooth and classical forced van der Pol oscillators and a
//!   piecewise-linear spring, in original and rotating coordinates;
//! - [`resonance`]: amplitude equations, resonance curves, folds and critical
//!   forcing amplitudes;
//! - [`verify`]: direct simulation checks of the averaging predictions.

pub mod averaging;
pub mod error;
pub mod models;
pub mod ode;
pub mod quadrature;
pub mod resonance;
pub mod verify;

mod linalg;

pub use error::{Error, Result};
