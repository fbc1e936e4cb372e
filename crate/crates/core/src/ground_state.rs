//! Constrained minimization of `J` on the mass sphere `{M(u) = μ}` and the
//! variational probes built on it.
//!
//! The minimizer is a semi-implicit normalized gradient flow
//!
//! ```text
//! u_{k+1} = Π_μ[(1 + τ((-Δ)^s + α_k))^{-1}((1 + τ(α_k + ω_k))u_k + τ(V u_k + f(u_k)))]
//! ```
//!
//! where `Π_μ` rescales to mass `μ`, `ω_k` is the Lagrange multiplier
//! `(‖(-Δ)^{s/2}u_k‖² - ⟨Vu_k + f(u_k), u_k⟩)/μ` and `α_k = max(0, -ω_k)`.
//! Solutions of the constrained Euler–Lagrange equation are exact fixed
//! points for every `τ`; the shift keeps large steps monotone.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{
    circular_convolution, forward_transform, inverse_transform, Field, GridError, GridSpec,
    SpectralField,
};
use crate::model::{
    kinetic, mass, mass_critical_bound, EnergyBreakdown, ModelError, ProblemModel, SampledModel,
};

/// Spectral tail fraction above which an iterate counts as collapsed.
pub const COLLAPSE_TAIL_FRACTION: f64 = 0.2;
/// Consecutive energy increases tolerated before the flow is aborted.
pub const MAX_ENERGY_INCREASES: usize = 5;
/// Boundary amplitude (relative to the maximum) treated as resolved.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundStateError {
    #[error("target mass must be positive, got {0}")]
    Mass(f64),
    #[error("pseudo-time step must be positive, got {0}")]
    Step(f64),
    #[error("initial field has zero mass")]
    ZeroInitial,
    #[error(
        "mass-critical smallness fails: C·‖a‖_∞·μ^(2s/n) = {value:.6e} ≥ 1/4 (C ≈ {constant:.6e}, ‖a‖_∞ = {weight_sup})"
    )]
    MassCriticalGate {
        value: f64,
        constant: f64,
        weight_sup: f64,
    },
    #[error("energy increased for {MAX_ENERGY_INCREASES} consecutive steps at iteration {iteration} (J = {energy:.12e}); reduce tau")]
    EnergyIncrease { iteration: usize, energy: f64 },
    #[error("grid-scale oscillations at iteration {iteration}: spectral tail fraction {tail:.3} > {COLLAPSE_TAIL_FRACTION}; refine the grid")]
    Collapse { iteration: usize, tail: f64 },
    #[error("scaling parameter must lie in (0, 1], got {0}")]
    Scaling(f64),
    #[error("field not resolved at lambda = {lambda}: boundary amplitude ratio {ratio:.3e}")]
    UnderResolved { lambda: f64, ratio: f64 },
    #[error("radii must be positive, increasing and at most L, got {0}")]
    Radii(String),
    #[error("radial decay check needs n = 2 and 1/2 < s < 1")]
    DecayApplicability,
    #[error("field is not radially symmetric (angular variance {0:.3e})")]
    NotRadial(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    /// Pseudo-time step `τ`.
    pub tau: f64,
    /// Residual tolerance; `None` means `1e-8·√μ`.
    pub tolerance: Option<f64>,
    pub max_iter: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau: 20.0,
            tolerance: None,
            max_iter: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Converged,
    MaxIterations,
    /// The flow settled on a state with `J ≥ 0`: no negative-energy
    /// minimizer, the mass spreads out (vanishing).
    Vanishing,
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub u: Field,
    pub i_mu: f64,
    pub energy: EnergyBreakdown,
    /// Lagrange multiplier of `(-Δ)^s u - ωu = Vu + f(u)`.
    pub omega: f64,
    /// `‖(-Δ)^s u - ωu - Vu - f(u)‖_{L²}`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: FlowStatus,
    pub mass_target: f64,
}

/// Gaussian of width `L/8` scaled to mass `μ`.
pub fn gaussian_initial(spec: &GridSpec, mu: f64) -> Field {
    let w = spec.half_width() / 8.0;
    let g = Field::from_fn(*spec, |x| {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / (2.0 * w * w)).exp(), 0.0)
    })
    .expect("gaussian samples are finite");
    normalize(&g, mu)
}

fn normalize(u: &Field, mu: f64) -> Field {
    u.scale_real((mu / mass(u)).sqrt())
}

/// Everything the flow needs from one evaluation of an iterate.
struct Evaluation {
    energy: EnergyBreakdown,
    omega: f64,
    residual: f64,
    tail: f64,
    nonlinearity: Field,
}

fn evaluate(sampled: &SampledModel, u: &Field, mu: f64) -> Result<Evaluation, GroundStateError> {
    let spec = *u.spec();
    let spectrum = forward_transform(u);
    let symbol = sampled.kinetic_symbol();
    let kin = spectrum.weighted_energy(symbol);
    let quarter = (spec.points() / 4) as i64;
    let mut tail = 0.0;
    let mut total = 0.0;
    for (k, c) in spectrum.coeffs().iter().enumerate() {
        let w = c.norm_sqr();
        total += w;
        let idx = spec.multi_index(k);
        if idx[..spec.dim()]
            .iter()
            .any(|&j| spec.signed_mode(j).abs() >= quarter)
        {
            tail += w;
        }
    }
    let lap_coeffs = spectrum
        .coeffs()
        .iter()
        .zip(symbol)
        .map(|(&c, &m)| c * m)
        .collect();
    let lap = inverse_transform(&SpectralField::new(spec, lap_coeffs)?);

    let nonlinearity = sampled.nonlinearity(u)?;
    let pairing = nonlinearity.inner_l2(u)?.re;
    let omega = (kin - pairing) / mu;
    let defect: f64 = lap
        .values()
        .iter()
        .zip(u.values())
        .zip(nonlinearity.values())
        .map(|((&l, &z), &n)| (l - z * omega - n).norm_sqr())
        .sum::<f64>()
        * spec.cell_volume();
    let energy = EnergyBreakdown {
        kinetic: kin,
        potential_v: sampled.potential_v(u)?,
        potential_f: sampled.potential_f(u)?,
        total: 0.0,
    };
    let energy = EnergyBreakdown {
        total: 0.5 * energy.kinetic - 0.5 * energy.potential_v - energy.potential_f,
        ..energy
    };
    Ok(Evaluation {
        energy,
        omega,
        residual: defect.sqrt(),
        tail: if total > 0.0 { tail / total } else { 0.0 },
        nonlinearity,
    })
}

/// Refuses mass-critical runs whose mass violates the smallness bound.
pub fn check_mass_critical_gate(model: &ProblemModel, mu: f64) -> Result<(), GroundStateError> {
    if model.is_mass_critical() {
        let bound = mass_critical_bound(model, mu)?;
        if !bound.admits() {
            return Err(GroundStateError::MassCriticalGate {
                value: bound.value,
                constant: bound.constant,
                weight_sup: bound.weight_sup,
            });
        }
    }
    Ok(())
}

pub fn minimize_on_sphere(
    model: &ProblemModel,
    mu: f64,
    init: &Field,
    config: &FlowConfig,
) -> Result<GroundStateResult, GroundStateError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(GroundStateError::Mass(mu));
    }
    if !(config.tau > 0.0 && config.tau.is_finite()) {
        return Err(GroundStateError::Step(config.tau));
    }
    if mass(init) <= 0.0 {
        return Err(GroundStateError::ZeroInitial);
    }
    check_mass_critical_gate(model, mu)?;

    let spec = *init.spec();
    let sampled = model.discretize(&spec)?;
    let tau = config.tau;
    let tolerance = config.tolerance.unwrap_or(1e-8 * mu.sqrt());

    let mut u = normalize(init, mu);
    let mut best: Option<(Field, Evaluation)> = None;
    let mut previous: Option<f64> = None;
    let mut increases = 0;
    let mut iterations = 0;

    let finish = |u: Field, eval: Evaluation, iterations: usize, converged: bool| {
        let status = if !converged {
            FlowStatus::MaxIterations
        } else if eval.energy.total >= 0.0 {
            FlowStatus::Vanishing
        } else {
            FlowStatus::Converged
        };
        GroundStateResult {
            u,
            i_mu: eval.energy.total,
            energy: eval.energy,
            omega: eval.omega,
            residual: eval.residual,
            iterations,
            converged: status == FlowStatus::Converged,
            status,
            mass_target: mu,
        }
    };

    loop {
        let eval = evaluate(&sampled, &u, mu)?;
        if eval.tail > COLLAPSE_TAIL_FRACTION {
            return Err(GroundStateError::Collapse {
                iteration: iterations,
                tail: eval.tail,
            });
        }
        let j = eval.energy.total;
        if let Some(prev) = previous {
            if j > prev + 1e-12 * prev.abs() {
                increases += 1;
                if increases >= MAX_ENERGY_INCREASES {
                    return Err(GroundStateError::EnergyIncrease {
                        iteration: iterations,
                        energy: j,
                    });
                }
            } else {
                increases = 0;
            }
            if eval.residual <= tolerance && (j - prev).abs() <= 1e-12 * j.abs().max(1.0) {
                return Ok(finish(u, eval, iterations, true));
            }
        }
        previous = Some(j);

        let shift = (-eval.omega).max(0.0);
        let step_input = u
            .scale_real(1.0 + tau * (shift + eval.omega))
            .add_scaled(Complex64::new(tau, 0.0), &eval.nonlinearity)?;
        if best.as_ref().is_none_or(|(_, b)| j < b.energy.total) {
            best = Some((u, eval));
        }
        if iterations >= config.max_iter {
            let (u, eval) = best.expect("at least one evaluation");
            return Ok(finish(u, eval, iterations, false));
        }
        let spectrum = forward_transform(&step_input);
        let coeffs = spectrum
            .coeffs()
            .iter()
            .zip(sampled.kinetic_symbol())
            .map(|(&c, &m)| c / (1.0 + tau * (m + shift)))
            .collect();
        u = normalize(&inverse_transform(&SpectralField::new(spec, coeffs)?), mu);
        iterations += 1;
    }
}

/// One row of the scaling probe: `ψ_λ(x) = λ^{n/2}ψ(λx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub lambda: f64,
    pub mass: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// First `λ` in list order with `J(ψ_λ) < 0`.
    pub first_negative: Option<f64>,
}

/// Evaluates the trigonometric interpolant of `ψ` at `λx` and multiplies
/// by `λ^{n/2}`. Exact for band-limited `ψ`.
pub fn dilate(psi: &Field, lambda: f64) -> Result<Field, GroundStateError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(GroundStateError::Scaling(lambda));
    }
    let spec = *psi.spec();
    let n = spec.points();
    let l = spec.half_width();
    let spectrum = forward_transform(psi);
    // raw DFT coefficients: ψ_j = Σ_k c_k e^{iξ_k(x_j + L)}
    let norm = 1.0 / (spec.len() as f64).sqrt() / spec.cell_volume().sqrt();
    let coeffs: Vec<Complex64> = spectrum.coeffs().iter().map(|&c| c * norm).collect();
    let basis: Vec<Complex64> = (0..n)
        .flat_map(|j| {
            let y = lambda * spec.coordinate(j) + l;
            (0..n).map(move |k| {
                let xi = spec.wavenumber(k);
                if spec.signed_mode(k) == -(n as i64) / 2 {
                    Complex64::new((xi * y).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, xi * y)
                }
            })
        })
        .collect();
    let amplitude = lambda.powf(spec.dim() as f64 / 2.0);
    let values = match spec.dim() {
        1 => (0..n)
            .map(|j| {
                let row = &basis[j * n..(j + 1) * n];
                amplitude
                    * row
                        .iter()
                        .zip(&coeffs)
                        .map(|(b, c)| b * c)
                        .sum::<Complex64>()
            })
            .collect(),
        _ => {
            // contract the fast axis, then the slow one
            let mut partial = vec![Complex64::new(0.0, 0.0); n * n];
            for k0 in 0..n {
                for j1 in 0..n {
                    let row = &basis[j1 * n..(j1 + 1) * n];
                    partial[k0 * n + j1] = row
                        .iter()
                        .zip(&coeffs[k0 * n..(k0 + 1) * n])
                        .map(|(b, c)| b * c)
                        .sum();
                }
            }
            let mut out = vec![Complex64::new(0.0, 0.0); n * n];
            for j0 in 0..n {
                let row = &basis[j0 * n..(j0 + 1) * n];
                for j1 in 0..n {
                    out[j0 * n + j1] = amplitude
                        * (0..n)
                            .map(|k0| row[k0] * partial[k0 * n + j1])
                            .sum::<Complex64>();
                }
            }
            out
        }
    };
    Ok(Field::new(spec, values)?)
}

/// Tabulates `J(ψ_λ)` over a list of `λ ∈ (0, 1]`. The dilation keeps the
/// mass fixed; each `ψ_λ` must still decay at the box boundary.
pub fn scaling_probe(
    model: &ProblemModel,
    psi: &Field,
    lambdas: &[f64],
) -> Result<ScalingTable, GroundStateError> {
    let sampled = model.discretize(psi.spec())?;
    let base_ratio = psi.boundary_ratio();
    if base_ratio > BOUNDARY_TOLERANCE {
        return Err(GroundStateError::UnderResolved {
            lambda: 1.0,
            ratio: base_ratio,
        });
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let scaled = dilate(psi, lambda)?;
        let ratio = scaled.boundary_ratio();
        if ratio > BOUNDARY_TOLERANCE {
            return Err(GroundStateError::UnderResolved { lambda, ratio });
        }
        rows.push(ScalingRow {
            lambda,
            mass: mass(&scaled),
            energy: sampled.energy(&scaled)?.total,
        });
    }
    let first_negative = rows.iter().find(|r| r.energy < 0.0).map(|r| r.lambda);
    Ok(ScalingTable {
        rows,
        first_negative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubadditivityRow {
    pub nu: f64,
    pub i_nu: f64,
    pub i_rest: f64,
    pub i_mu: f64,
    /// `I_ν + I_{μ-ν} - I_μ`
    pub gap: f64,
    /// All three sub-runs converged.
    pub reliable: bool,
}

/// Computes `I_ν + I_{μ-ν} - I_μ` for each `ν`, with every `I` obtained
/// from [`minimize_on_sphere`] started at [`gaussian_initial`]. Distinct
/// masses are minimized in parallel.
pub fn subadditivity_probe(
    model: &ProblemModel,
    spec: &GridSpec,
    mu: f64,
    nus: &[f64],
    config: &FlowConfig,
) -> Result<Vec<SubadditivityRow>, GroundStateError> {
    for &nu in nus {
        if !(nu > 0.0 && nu < mu) {
            return Err(GroundStateError::Mass(nu));
        }
    }
    let mut masses: BTreeMap<u64, f64> = BTreeMap::new();
    masses.insert(mu.to_bits(), mu);
    for &nu in nus {
        masses.insert(nu.to_bits(), nu);
        masses.insert((mu - nu).to_bits(), mu - nu);
    }
    let runs: Vec<(u64, Result<GroundStateResult, GroundStateError>)> = masses
        .into_par_iter()
        .map(|(key, m)| {
            (
                key,
                minimize_on_sphere(model, m, &gaussian_initial(spec, m), config),
            )
        })
        .collect();
    let mut results = BTreeMap::new();
    for (key, run) in runs {
        results.insert(key, run?);
    }
    let whole = &results[&mu.to_bits()];
    Ok(nus
        .iter()
        .map(|&nu| {
            let part = &results[&nu.to_bits()];
            let rest = &results[&(mu - nu).to_bits()];
            SubadditivityRow {
                nu,
                i_nu: part.i_mu,
                i_rest: rest.i_mu,
                i_mu: whole.i_mu,
                gap: part.i_mu + rest.i_mu - whole.i_mu,
                reliable: part.converged && rest.converged && whole.converged,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// `m(r) = max_y ∫_{|x-y|<r}|u|²` over lattice centres `y`, using the
/// periodic (minimal image) distance.
pub fn concentration_function(
    u: &Field,
    radii: &[f64],
) -> Result<ConcentrationProfile, GroundStateError> {
    let spec = *u.spec();
    let ok = radii.iter().all(|&r| r > 0.0 && r <= spec.half_width())
        && radii.windows(2).all(|w| w[0] < w[1]);
    if !ok {
        return Err(GroundStateError::Radii(format!("{radii:?}")));
    }
    let h = spec.spacing();
    let density = u.map(|z| Complex64::new(z.norm_sqr() * spec.cell_volume(), 0.0));
    let offset = |i: usize| -> f64 { spec.signed_mode(i) as f64 * h };
    let mut values = Vec::with_capacity(radii.len());
    let mut running: f64 = 0.0;
    for &r in radii {
        let ball = Field::from_parts(
            spec,
            (0..spec.len())
                .map(|i| {
                    let idx = spec.multi_index(i);
                    let d0 = offset(idx[0]);
                    let d1 = if spec.dim() == 2 { offset(idx[1]) } else { 0.0 };
                    if d0.hypot(d1) < r {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect(),
        );
        let captured = circular_convolution(&density, &ball)?
            .values()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        running = running.max(captured);
        values.push(running);
    }
    Ok(ConcentrationProfile {
        radii: radii.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRatio {
    /// `max |u(x)|·|x|^{n/2-s} / ‖(-Δ)^{s/2}u‖` over `1 ≤ |x| ≤ 0.9L`.
    pub ratio: f64,
    pub radius: f64,
}

/// Largest within-shell variance of a field, grouping lattice points with
/// identical distance to the origin, relative to `max|u|²`.
pub fn angular_variance(u: &Field) -> f64 {
    let spec = u.spec();
    let centre = (spec.points() / 2) as i64;
    let mut shells: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
    for (i, &z) in u.values().iter().enumerate() {
        let idx = spec.multi_index(i);
        let key = (0..spec.dim())
            .map(|d| (idx[d] as i64 - centre).pow(2))
            .sum::<i64>();
        shells.entry(key).or_default().push(z);
    }
    let max2 = u.max_abs().powi(2);
    if max2 == 0.0 {
        return 0.0;
    }
    shells
        .values()
        .map(|zs| {
            let mean = zs.iter().sum::<Complex64>() / zs.len() as f64;
            zs.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / zs.len() as f64
        })
        .fold(0.0, f64::max)
        / max2
}

pub fn radial_decay_check(u: &Field, order: f64) -> Result<DecayRatio, GroundStateError> {
    let spec = *u.spec();
    if spec.dim() != 2 || !(order > 0.5 && order < 1.0) {
        return Err(GroundStateError::DecayApplicability);
    }
    let variance = angular_variance(u);
    if variance > 1e-8 {
        return Err(GroundStateError::NotRadial(variance));
    }
    let scale = kinetic(u, order).sqrt();
    let exponent = spec.dim() as f64 / 2.0 - order;
    let outer = 0.9 * spec.half_width();
    let mut best = DecayRatio {
        ratio: 0.0,
        radius: 0.0,
    };
    for (i, z) in u.values().iter().enumerate() {
        let r = spec.radius(i);
        if (1.0..=outer).contains(&r) {
            let ratio = z.norm() * r.powf(exponent) / scale;
            if ratio > best.ratio {
                best = DecayRatio { ratio, radius: r };
            }
        }
    }
    Ok(best)
}
