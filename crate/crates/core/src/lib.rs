//! Pseudospectral toolkit for the fractional nonlinear Schrödinger equation
//! `i∂ₜΦ + (-Δ)^s Φ = V(x)Φ + f(x, Φ)` on a periodic box.

pub mod grid;
pub mod ground_state;
pub mod hypothesis;
pub mod io;
pub mod model;
pub mod propagator;
pub mod stability;
