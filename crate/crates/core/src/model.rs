//! Potential, gauge power nonlinearity and the conserved functionals.
//!
//! The nonlinearity is `f(x, z) = a(x)|z|^ℓ z` with antiderivative
//! `F(x, |z|) = a(x)|z|^{ℓ+2}/(ℓ+2)`. The energy is
//! `J(u) = ½‖(-Δ)^{s/2}u‖² - ½∫V|u|² - ∫F(x,|u|)` and the mass is
//! `M(u) = ∫|u|²`. All integrals use the rectangle rule `hⁿΣ`.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{forward_transform, Field, GridError, GridSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("operator order s must lie in (0, 1], got {0}")]
    Order(f64),
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("nonlinearity power must be positive, got {0}")]
    Power(f64),
    #[error("invalid {what}: {reason}")]
    Profile { what: &'static str, reason: String },
    #[error("structural parameters (kappa, R, N, delta_F, beta, sigma) are required")]
    MissingStructure,
    #[error("invalid structural parameter {0}")]
    Structure(&'static str),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Radially symmetric nonnegative profile shared by potentials and weights.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Radial {
    Zero,
    Constant(f64),
    /// `A·exp(-|x|²/(2w²))`
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// `A·max(|x|, r₀)^{-γ}`
    CutoffInversePower {
        amplitude: f64,
        exponent: f64,
        core: f64,
    },
}

impl Radial {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            Radial::Zero => 0.0,
            Radial::Constant(c) => c,
            Radial::Gaussian { amplitude, width } => {
                amplitude * (-r * r / (2.0 * width * width)).exp()
            }
            Radial::CutoffInversePower {
                amplitude,
                exponent,
                core,
            } => amplitude * r.max(core).powf(-exponent),
        }
    }

    fn sup(&self) -> f64 {
        match *self {
            Radial::Zero => 0.0,
            Radial::Constant(c) => c,
            Radial::Gaussian { amplitude, .. } => amplitude,
            Radial::CutoffInversePower {
                amplitude,
                exponent,
                core,
            } => amplitude * core.powf(-exponent),
        }
    }

    fn validate(&self, what: &'static str) -> Result<(), ModelError> {
        let bad = |reason: &str| {
            Err(ModelError::Profile {
                what,
                reason: reason.to_string(),
            })
        };
        match *self {
            Radial::Zero => Ok(()),
            Radial::Constant(c) if !(c >= 0.0 && c.is_finite()) => bad("constant must be >= 0"),
            Radial::Gaussian { amplitude, width }
                if !(amplitude >= 0.0
                    && amplitude.is_finite()
                    && width > 0.0
                    && width.is_finite()) =>
            {
                bad("gaussian needs amplitude >= 0 and width > 0")
            }
            Radial::CutoffInversePower {
                amplitude,
                exponent,
                core,
            } if !(amplitude >= 0.0
                && amplitude.is_finite()
                && exponent > 0.0
                && exponent.is_finite()
                && core > 0.0
                && core.is_finite()) =>
            {
                bad("inverse power needs amplitude >= 0, exponent > 0, core > 0")
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, spec: &GridSpec) -> Vec<f64> {
        (0..spec.len()).map(|i| self.eval(spec.radius(i))).collect()
    }
}

/// External potential `V ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialModel {
    Zero,
    GaussianBump {
        amplitude: f64,
        width: f64,
    },
    CutoffInversePower {
        amplitude: f64,
        exponent: f64,
        core: f64,
    },
}

impl PotentialModel {
    fn radial(&self) -> Radial {
        match *self {
            PotentialModel::Zero => Radial::Zero,
            PotentialModel::GaussianBump { amplitude, width } => {
                Radial::Gaussian { amplitude, width }
            }
            PotentialModel::CutoffInversePower {
                amplitude,
                exponent,
                core,
            } => Radial::CutoffInversePower {
                amplitude,
                exponent,
                core,
            },
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.radial().eval(r)
    }

    pub fn sup(&self) -> f64 {
        self.radial().sup()
    }

    pub fn is_zero(&self) -> bool {
        self.sup() == 0.0
    }

    pub fn sample(&self, spec: &GridSpec) -> Vec<f64> {
        self.radial().sample(spec)
    }
}

/// Nonnegative weight `a(x)` (or the Lipschitz weight `b(x)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightModel {
    Constant(f64),
    GaussianBump {
        amplitude: f64,
        width: f64,
    },
    CutoffInversePower {
        amplitude: f64,
        exponent: f64,
        core: f64,
    },
}

impl WeightModel {
    fn radial(&self) -> Radial {
        match *self {
            WeightModel::Constant(c) => Radial::Constant(c),
            WeightModel::GaussianBump { amplitude, width } => Radial::Gaussian { amplitude, width },
            WeightModel::CutoffInversePower {
                amplitude,
                exponent,
                core,
            } => Radial::CutoffInversePower {
                amplitude,
                exponent,
                core,
            },
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.radial().eval(r)
    }

    pub fn sup(&self) -> f64 {
        self.radial().sup()
    }

    pub fn sample(&self, spec: &GridSpec) -> Vec<f64> {
        self.radial().sample(spec)
    }
}

/// Constants of the pointwise lower bound `F(x,|z|) ≥ κ|x|^{-δ_F}|z|^{2+β}`
/// (for `|z| ≤ N`, `|x| ≥ R`) and the growth exponent `σ` of
/// `F(x, θ|z|) ≥ θ^{2+σ} F(x,|z|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralParams {
    pub kappa: f64,
    pub radius: f64,
    pub amplitude_cap: f64,
    pub delta_f: f64,
    pub beta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemModel {
    order: f64,
    dim: usize,
    power: f64,
    pub potential: PotentialModel,
    pub weight_a: WeightModel,
    pub weight_b: WeightModel,
    pub structure: Option<StructuralParams>,
}

impl ProblemModel {
    /// Focusing model with `V ≡ 0` and `a ≡ b ≡ 1`.
    pub fn new(dim: usize, order: f64, power: f64) -> Result<Self, ModelError> {
        if !(order > 0.0 && order <= 1.0) {
            return Err(ModelError::Order(order));
        }
        if !(1..=2).contains(&dim) {
            return Err(ModelError::Dimension(dim));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(ModelError::Power(power));
        }
        Ok(Self {
            order,
            dim,
            power,
            potential: PotentialModel::Zero,
            weight_a: WeightModel::Constant(1.0),
            weight_b: WeightModel::Constant(1.0),
            structure: None,
        })
    }

    pub fn with_potential(mut self, potential: PotentialModel) -> Result<Self, ModelError> {
        potential.radial().validate("potential")?;
        self.potential = potential;
        Ok(self)
    }

    pub fn with_weight_a(mut self, weight: WeightModel) -> Result<Self, ModelError> {
        weight.radial().validate("weight a")?;
        self.weight_a = weight;
        Ok(self)
    }

    pub fn with_weight_b(mut self, weight: WeightModel) -> Result<Self, ModelError> {
        weight.radial().validate("weight b")?;
        self.weight_b = weight;
        Ok(self)
    }

    pub fn with_structure(mut self, params: StructuralParams) -> Result<Self, ModelError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(params.kappa) {
            return Err(ModelError::Structure("kappa"));
        }
        if !positive(params.radius) {
            return Err(ModelError::Structure("R"));
        }
        if !positive(params.amplitude_cap) {
            return Err(ModelError::Structure("N"));
        }
        if !positive(params.delta_f) {
            return Err(ModelError::Structure("delta_F"));
        }
        if !positive(params.beta) {
            return Err(ModelError::Structure("beta"));
        }
        if !positive(params.sigma) {
            return Err(ModelError::Structure("sigma"));
        }
        self.structure = Some(params);
        Ok(self)
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Mass-critical power `4s/n`.
    pub fn critical_power(&self) -> f64 {
        4.0 * self.order / self.dim as f64
    }

    pub fn is_mass_critical(&self) -> bool {
        let c = self.critical_power();
        (self.power - c).abs() <= 1e-12 * c
    }

    pub fn discretize(&self, spec: &GridSpec) -> Result<SampledModel, ModelError> {
        if spec.dim() != self.dim {
            return Err(ModelError::Dimension(spec.dim()));
        }
        let kinetic_symbol = spec
            .frequency_norm_sq()
            .into_iter()
            .map(|k2| k2.powf(self.order))
            .collect();
        Ok(SampledModel {
            model: self.clone(),
            spec: *spec,
            potential: self.potential.sample(spec),
            weight: self.weight_a.sample(spec),
            kinetic_symbol,
        })
    }
}

/// The three terms of `J` and their combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `‖(-Δ)^{s/2}u‖²`
    pub kinetic: f64,
    /// `∫V|u|²`
    pub potential_v: f64,
    /// `∫F(x,|u|)`
    pub potential_f: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(kinetic: f64, potential_v: f64, potential_f: f64) -> Self {
        Self {
            kinetic,
            potential_v,
            potential_f,
            total: 0.5 * kinetic - 0.5 * potential_v - potential_f,
        }
    }
}

/// A model with `V`, `a` and `|ξ|^{2s}` tabulated on one grid.
#[derive(Debug, Clone)]
pub struct SampledModel {
    model: ProblemModel,
    spec: GridSpec,
    potential: Vec<f64>,
    weight: Vec<f64>,
    kinetic_symbol: Vec<f64>,
}

impl SampledModel {
    pub fn model(&self) -> &ProblemModel {
        &self.model
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// `|ξ|^{2s}` in spectral storage order.
    pub fn kinetic_symbol(&self) -> &[f64] {
        &self.kinetic_symbol
    }

    fn check(&self, u: &Field) -> Result<(), ModelError> {
        if *u.spec() != self.spec {
            return Err(GridError::SpecMismatch.into());
        }
        Ok(())
    }

    pub fn kinetic(&self, u: &Field) -> Result<f64, ModelError> {
        self.check(u)?;
        Ok(forward_transform(u).weighted_energy(&self.kinetic_symbol))
    }

    pub fn potential_v(&self, u: &Field) -> Result<f64, ModelError> {
        self.check(u)?;
        let sum: f64 = u
            .values()
            .iter()
            .zip(&self.potential)
            .map(|(z, v)| v * z.norm_sqr())
            .sum();
        Ok(sum * self.spec.cell_volume())
    }

    pub fn potential_f(&self, u: &Field) -> Result<f64, ModelError> {
        self.check(u)?;
        let p = self.model.power;
        let sum: f64 = u
            .values()
            .iter()
            .zip(&self.weight)
            .map(|(z, a)| a * z.norm().powf(p + 2.0))
            .sum();
        Ok(sum * self.spec.cell_volume() / (p + 2.0))
    }

    pub fn energy(&self, u: &Field) -> Result<EnergyBreakdown, ModelError> {
        Ok(EnergyBreakdown::new(
            self.kinetic(u)?,
            self.potential_v(u)?,
            self.potential_f(u)?,
        ))
    }

    /// `f(x, u) = a(x)|u|^ℓ u`.
    pub fn force(&self, u: &Field) -> Result<Field, ModelError> {
        self.check(u)?;
        let p = self.model.power;
        let values = u
            .values()
            .iter()
            .zip(&self.weight)
            .map(|(&z, &a)| z * (a * z.norm().powf(p)))
            .collect();
        Ok(Field::new(self.spec, values)?)
    }

    /// `V(x)u + f(x, u)`.
    pub fn nonlinearity(&self, u: &Field) -> Result<Field, ModelError> {
        self.check(u)?;
        let p = self.model.power;
        let values = u
            .values()
            .iter()
            .zip(self.potential.iter().zip(&self.weight))
            .map(|(&z, (&v, &a))| z * (v + a * z.norm().powf(p)))
            .collect();
        Ok(Field::new(self.spec, values)?)
    }
}

/// `M(u) = hⁿΣ|u|²`.
pub fn mass(u: &Field) -> f64 {
    u.norm_l2_sq()
}

/// `‖(-Δ)^{s/2}u‖² = Σ|ξ|^{2s}|û|²`.
pub fn kinetic(u: &Field, order: f64) -> f64 {
    let symbol: Vec<f64> = u
        .spec()
        .frequency_norm_sq()
        .into_iter()
        .map(|k2| k2.powf(order))
        .collect();
    forward_transform(u).weighted_energy(&symbol)
}

pub fn nonlinear_force(u: &Field, model: &ProblemModel) -> Result<Field, ModelError> {
    model.discretize(u.spec())?.force(u)
}

pub fn potential_energy_f(u: &Field, model: &ProblemModel) -> Result<f64, ModelError> {
    model.discretize(u.spec())?.potential_f(u)
}

pub fn energy(u: &Field, model: &ProblemModel) -> Result<EnergyBreakdown, ModelError> {
    model.discretize(u.spec())?.energy(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Symbolic,
    Sampled,
}

/// Outcome of the structural checks on `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `nβ/2 + δ_F - 2s`, required negative.
    pub exponent_balance: f64,
    pub balance_holds: bool,
    /// Infimum of `F·|x|^{δ_F}|z|^{-(2+β)}` over the checked region.
    pub lower_bound_min: f64,
    pub lower_bound_method: BoundMethod,
    pub lower_bound_holds: bool,
    /// `ℓ - σ`, required nonnegative.
    pub growth_margin: f64,
    pub growth_holds: bool,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.balance_holds && self.lower_bound_holds && self.growth_holds
    }
}

/// Checks the lower bound on `F`, the exponent balance `nβ/2 + δ_F - 2s < 0`
/// and the growth condition (`σ ≤ ℓ` for the power law). Sampling, when
/// needed, covers `|x| ∈ [R, 1.8·L]` with `L = sample_half_width`.
pub fn check_structural_conditions(
    model: &ProblemModel,
    sample_half_width: f64,
) -> Result<ConditionReport, ModelError> {
    let p = model.structure.ok_or(ModelError::MissingStructure)?;
    let n = model.dim as f64;
    let ell = model.power;
    let exponent_balance = n * p.beta / 2.0 + p.delta_f - 2.0 * model.order;

    // ratio(r, z) = a(r) r^δ |z|^{ℓ-β} / (ℓ+2)
    let symbolic = if p.beta == ell {
        match model.weight_a {
            WeightModel::Constant(c) => Some(c * p.radius.powf(p.delta_f) / (ell + 2.0)),
            WeightModel::CutoffInversePower {
                amplitude,
                exponent,
                core,
            } => {
                // a(r) r^δ is nondecreasing on [R, ∞) iff δ ≥ γ; otherwise it decays to 0
                if p.delta_f >= exponent {
                    let r = p.radius;
                    Some(amplitude * r.max(core).powf(-exponent) * r.powf(p.delta_f) / (ell + 2.0))
                } else {
                    Some(0.0)
                }
            }
            WeightModel::GaussianBump { .. } => None,
        }
    } else {
        None
    };

    let (lower_bound_min, lower_bound_method) = match symbolic {
        Some(v) => (v, BoundMethod::Symbolic),
        None => {
            let r_hi = (1.8 * sample_half_width).max(p.radius);
            let radii = 200;
            let amps = 200;
            let mut min = f64::INFINITY;
            for i in 0..=radii {
                let r = p.radius + (r_hi - p.radius) * i as f64 / radii as f64;
                let ar = model.weight_a.eval(r) * r.powf(p.delta_f) / (ell + 2.0);
                for j in 0..amps {
                    // geometric sweep of (0, N]
                    let z = p.amplitude_cap * 10f64.powf(-8.0 * j as f64 / amps as f64);
                    min = min.min(ar * z.powf(ell - p.beta));
                }
            }
            (min, BoundMethod::Sampled)
        }
    };

    Ok(ConditionReport {
        exponent_balance,
        balance_holds: exponent_balance < 0.0,
        lower_bound_min,
        lower_bound_method,
        lower_bound_holds: lower_bound_min >= p.kappa,
        growth_margin: ell - p.sigma,
        growth_holds: p.sigma <= ell,
    })
}

/// Ratio `‖u‖_{ℓ+2}^{ℓ+2} / (M^{(ℓ+2)/2-θ} K^θ)` with `θ = nℓ/(4s)` and
/// `K` the kinetic term. Invariant under amplitude and mass-preserving
/// dilations, so its supremum is the Gagliardo–Nirenberg constant.
pub fn gn_quotient(u: &Field, order: f64, power: f64) -> f64 {
    let n = u.spec().dim() as f64;
    let theta = n * power / (4.0 * order);
    let lp: f64 = u
        .values()
        .iter()
        .map(|z| z.norm().powf(power + 2.0))
        .sum::<f64>()
        * u.spec().cell_volume();
    let m = mass(u);
    let k = kinetic(u, order);
    lp / (m.powf((power + 2.0) / 2.0 - theta) * k.powf(theta))
}

/// Grid-level estimate of the Gagliardo–Nirenberg constant for
/// `(n, s, ℓ)`: the largest quotient over Gaussian and sech profiles of
/// several widths on a fine reference grid. This is an estimate from
/// below of the sharp constant, not the sharp constant itself.
pub fn estimate_gn_constant(dim: usize, order: f64, power: f64) -> Result<f64, ModelError> {
    let spec = match dim {
        1 => GridSpec::new(1, 2048, 40.0)?,
        2 => GridSpec::new(2, 256, 20.0)?,
        d => return Err(ModelError::Dimension(d)),
    };
    let mut best: f64 = 0.0;
    for width in [0.75, 1.0, 1.5, 2.0, 3.0] {
        let gauss = Field::from_fn(spec, |x| {
            Complex64::new(
                (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * width * width)).exp(),
                0.0,
            )
        })?;
        let sech = Field::from_fn(spec, |x| {
            Complex64::new(
                1.0 / ((x[0] * x[0] + x[1] * x[1]).sqrt() / width).cosh(),
                0.0,
            )
        })?;
        best = best
            .max(gn_quotient(&gauss, order, power))
            .max(gn_quotient(&sech, order, power));
    }
    Ok(best)
}

/// Smallness quantity `C‖a‖_∞ M^{2s/n}` of the mass-critical lower bound,
/// with `C = K_GN/(ℓ+2)` so that `∫F ≤ C‖a‖_∞ M^{2s/n}‖(-Δ)^{s/2}u‖²`.
/// The energy is bounded below on the mass sphere when it is `< 1/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassCriticalBound {
    pub constant: f64,
    pub weight_sup: f64,
    pub value: f64,
}

impl MassCriticalBound {
    pub const THRESHOLD: f64 = 0.25;

    pub fn admits(&self) -> bool {
        self.value < Self::THRESHOLD
    }
}

pub fn mass_critical_bound(
    model: &ProblemModel,
    mass: f64,
) -> Result<MassCriticalBound, ModelError> {
    let gn = estimate_gn_constant(model.dim, model.order, model.power)?;
    let constant = gn / (model.power + 2.0);
    let weight_sup = model.weight_a.sup();
    let value = constant * weight_sup * mass.powf(2.0 * model.order / model.dim as f64);
    Ok(MassCriticalBound {
        constant,
        weight_sup,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(spec: GridSpec, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..spec.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::new(spec, values).unwrap()
    }

    /// Sum of a few Gaussian bumps with random centres, widths and phases.
    fn random_smooth(spec: GridSpec, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps: Vec<_> = (0..3)
            .map(|_| {
                (
                    [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)],
                    rng.gen_range(0.7..2.5),
                    Complex64::from_polar(
                        rng.gen_range(0.3..1.5),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    ),
                )
            })
            .collect();
        let dim = spec.dim();
        Field::from_fn(spec, |x| {
            bumps
                .iter()
                .map(|(c, w, amp)| {
                    let mut r2 = (x[0] - c[0]).powi(2);
                    if dim == 2 {
                        r2 += (x[1] - c[1]).powi(2);
                    }
                    amp * (-r2 / (2.0 * w * w)).exp()
                })
                .sum()
        })
        .unwrap()
    }

    fn sech_soliton(spec: GridSpec, lambda: f64) -> Field {
        Field::from_fn(spec, |x| {
            Complex64::new((2.0 * lambda).sqrt() / (lambda.sqrt() * x[0]).cosh(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn model_validation() {
        assert_eq!(ProblemModel::new(1, 0.0, 2.0), Err(ModelError::Order(0.0)));
        assert_eq!(ProblemModel::new(1, 1.2, 2.0), Err(ModelError::Order(1.2)));
        assert_eq!(
            ProblemModel::new(3, 0.5, 2.0),
            Err(ModelError::Dimension(3))
        );
        assert_eq!(ProblemModel::new(1, 0.5, 0.0), Err(ModelError::Power(0.0)));
        let m = ProblemModel::new(1, 0.5, 1.0).unwrap();
        assert!(m
            .clone()
            .with_potential(PotentialModel::GaussianBump {
                amplitude: -1.0,
                width: 1.0
            })
            .is_err());
        assert!(m
            .clone()
            .with_weight_a(WeightModel::Constant(-0.1))
            .is_err());
        assert!(ProblemModel::new(1, 0.5, 2.0).unwrap().is_mass_critical());
    }

    #[test]
    fn mass_examples() {
        let spec = GridSpec::new(1, 64, 3.0).unwrap();
        assert_eq!(mass(&Field::zeros(spec)), 0.0);
        let c = Field::constant(spec, Complex64::new(0.6, 0.8));
        assert!((mass(&c) - 6.0).abs() < 1e-12);

        // ∫ exp(-x²) dx = √π on a fine grid
        let fine = GridSpec::new(1, 1024, 12.0).unwrap();
        let g = Field::from_fn(fine, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0)).unwrap();
        assert!((mass(&g) - PI.sqrt()).abs() / PI.sqrt() < 1e-8);

        let spec2 = GridSpec::new(2, 128, 10.0).unwrap();
        let g2 = Field::from_fn(spec2, |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0)
        })
        .unwrap();
        assert!((mass(&g2) - PI).abs() / PI < 1e-8);
    }

    #[test]
    fn kinetic_examples() {
        let spec = GridSpec::new(1, 64, 4.0).unwrap();
        let wave =
            Field::from_fn(spec, |x| Complex64::from_polar(1.3, 3.0 * PI / 4.0 * x[0])).unwrap();
        let kappa: f64 = 3.0 * PI / 4.0;
        let k = kinetic(&wave, 0.7);
        assert!((k - kappa.powf(1.4) * mass(&wave)).abs() < 1e-12 * k);
        assert!(kinetic(&Field::constant(spec, Complex64::new(1.0, 1.0)), 0.7) < 1e-20);

        // ∫|Q'|² = (4/3) λ^{3/2} for Q = √(2λ) sech(√λ x)
        let fine = GridSpec::new(1, 2048, 60.0).unwrap();
        let lambda = 0.5;
        let q = sech_soliton(fine, lambda);
        let exact = 4.0 / 3.0 * lambda.powf(1.5);
        assert!((kinetic(&q, 1.0) - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn force_examples() {
        let spec = GridSpec::new(1, 32, 2.0).unwrap();
        let model = ProblemModel::new(1, 0.5, 1.5).unwrap();
        let c = Field::constant(spec, Complex64::new(2.0, 0.0));
        let f = nonlinear_force(&c, &model).unwrap();
        for z in f.values() {
            assert!((z.re - 2f64.powf(2.5)).abs() < 1e-12 && z.im == 0.0);
        }

        let u = random_field(spec, 3);
        let phase = Complex64::from_polar(1.0, 0.9);
        let lhs = nonlinear_force(&u.scale(phase), &model).unwrap();
        let rhs = nonlinear_force(&u, &model).unwrap().scale(phase);
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-13);

        let weighted = model
            .with_weight_a(WeightModel::GaussianBump {
                amplitude: 2.0,
                width: 0.7,
            })
            .unwrap();
        let f = nonlinear_force(&u, &weighted).unwrap();
        for (i, (fz, uz)) in f.values().iter().zip(u.values()).enumerate() {
            let a = weighted.weight_a.eval(spec.radius(i));
            assert!((fz.norm() - a * uz.norm().powf(2.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn potential_energy_examples() {
        let spec = GridSpec::new(1, 32, 2.5).unwrap();
        let ell = 1.5;
        let model = ProblemModel::new(1, 0.5, ell).unwrap();
        let c = 1.2;
        let val =
            potential_energy_f(&Field::constant(spec, Complex64::new(c, 0.0)), &model).unwrap();
        let expected = c.powf(ell + 2.0) * 5.0 / (ell + 2.0);
        assert!((val - expected).abs() < 1e-12 * expected);

        let u = random_field(spec, 8);
        let theta = 1.7;
        let scaled = potential_energy_f(&u.scale_real(theta), &model).unwrap();
        let base = potential_energy_f(&u, &model).unwrap();
        assert!((scaled - theta.powf(ell + 2.0) * base).abs() < 1e-12 * scaled);
    }

    #[test]
    fn energy_examples() {
        let spec = GridSpec::new(1, 64, 5.0).unwrap();
        let free = ProblemModel::new(1, 0.75, 2.0)
            .unwrap()
            .with_weight_a(WeightModel::Constant(0.0))
            .unwrap();
        let u = random_field(spec, 5);
        let e = energy(&u, &free).unwrap();
        assert!((e.total - 0.5 * e.kinetic).abs() < 1e-12 * e.kinetic);
        assert_eq!(energy(&Field::zeros(spec), &free).unwrap().total, 0.0);

        let cubic = ProblemModel::new(1, 1.0, 2.0).unwrap();
        let fine = GridSpec::new(1, 2048, 60.0).unwrap();
        for lambda in [0.25, 1.0] {
            let q = sech_soliton(fine, lambda);
            let exact = -2.0 / 3.0 * lambda.powf(1.5);
            let j = energy(&q, &cubic).unwrap().total;
            assert!(
                (j - exact).abs() / exact.abs() < 1e-6,
                "λ={lambda}: {j} vs {exact}"
            );
        }
    }

    #[test]
    fn functionals_are_gauge_invariant() {
        let spec = GridSpec::new(2, 32, 4.0).unwrap();
        let model = ProblemModel::new(2, 0.6, 1.0)
            .unwrap()
            .with_potential(PotentialModel::GaussianBump {
                amplitude: 0.5,
                width: 1.0,
            })
            .unwrap();
        let u = random_field(spec, 12);
        let base = energy(&u, &model).unwrap();
        for theta in [0.3, 2.0, -1.1] {
            let e = energy(&u.scale(Complex64::from_polar(1.0, theta)), &model).unwrap();
            for (a, b) in [
                (e.kinetic, base.kinetic),
                (e.potential_v, base.potential_v),
                (e.potential_f, base.potential_f),
                (e.total, base.total),
            ] {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn energy_is_translation_invariant_without_potential() {
        let spec = GridSpec::new(2, 32, 4.0).unwrap();
        let model = ProblemModel::new(2, 0.8, 1.2)
            .unwrap()
            .with_weight_a(WeightModel::Constant(0.7))
            .unwrap();
        let u = random_smooth(spec, 2);
        let j = energy(&u, &model).unwrap().total;
        let js = energy(&u.shifted([5, -3]), &model).unwrap().total;
        assert!((j - js).abs() < 1e-12 * j.abs());
    }

    fn with_structure(
        model: ProblemModel,
        kappa: f64,
        delta_f: f64,
        beta: f64,
        sigma: f64,
    ) -> ProblemModel {
        model
            .with_structure(StructuralParams {
                kappa,
                radius: 1.0,
                amplitude_cap: 2.0,
                delta_f,
                beta,
                sigma,
            })
            .unwrap()
    }

    #[test]
    fn structural_conditions_worked_example() {
        // n=1, s=3/4, β=ℓ=1, δ_F=0.25: 0.5 + 0.25 - 1.5 = -0.75
        let model = with_structure(
            ProblemModel::new(1, 0.75, 1.0).unwrap(),
            0.1,
            0.25,
            1.0,
            1.0,
        );
        let report = check_structural_conditions(&model, 20.0).unwrap();
        assert!((report.exponent_balance + 0.75).abs() < 1e-15);
        assert!(report.balance_holds);
        assert_eq!(report.lower_bound_method, BoundMethod::Symbolic);
        // a ≡ 1: κ_max = R^{δ}/(ℓ+2) = 1/3
        assert!((report.lower_bound_min - 1.0 / 3.0).abs() < 1e-15);
        assert!(report.lower_bound_holds);
        assert!(report.growth_holds && report.all_hold());
    }

    #[test]
    fn structural_conditions_failures() {
        let base = ProblemModel::new(1, 0.75, 1.0).unwrap();
        assert_eq!(
            check_structural_conditions(&base, 10.0),
            Err(ModelError::MissingStructure)
        );
        // σ = ℓ passes, σ > ℓ fails
        let r =
            check_structural_conditions(&with_structure(base.clone(), 0.1, 0.25, 1.0, 1.0), 10.0)
                .unwrap();
        assert!(r.growth_holds);
        let r =
            check_structural_conditions(&with_structure(base.clone(), 0.1, 0.25, 1.0, 1.01), 10.0)
                .unwrap();
        assert!(!r.growth_holds);

        // sampled path (β ≠ ℓ): κ above the sampled minimum fails
        let sampled = with_structure(base.clone(), 1e-9, 0.25, 1.2, 1.0);
        let r = check_structural_conditions(&sampled, 10.0).unwrap();
        assert_eq!(r.lower_bound_method, BoundMethod::Sampled);
        assert!(r.lower_bound_holds);
        let too_big = with_structure(base.clone(), r.lower_bound_min * 1.01, 0.25, 1.2, 1.0);
        assert!(
            !check_structural_conditions(&too_big, 10.0)
                .unwrap()
                .lower_bound_holds
        );

        // inverse-power tail decaying faster than |x|^{-δ_F} cannot satisfy the bound
        let fast = with_structure(
            base.clone()
                .with_weight_a(WeightModel::CutoffInversePower {
                    amplitude: 1.0,
                    exponent: 0.5,
                    core: 0.5,
                })
                .unwrap(),
            1e-3,
            0.25,
            1.0,
            1.0,
        );
        assert!(
            !check_structural_conditions(&fast, 10.0)
                .unwrap()
                .lower_bound_holds
        );
        let matched = with_structure(
            base.with_weight_a(WeightModel::CutoffInversePower {
                amplitude: 1.0,
                exponent: 0.25,
                core: 0.5,
            })
            .unwrap(),
            0.3,
            0.25,
            1.0,
            1.0,
        );
        let r = check_structural_conditions(&matched, 10.0).unwrap();
        assert!((r.lower_bound_min - 1.0 / 3.0).abs() < 1e-15 && r.lower_bound_holds);
    }

    #[test]
    fn mass_critical_lower_bound_on_smooth_fields() {
        // ℓ = 4s/n, a ≡ 1, V ≡ 0: ∫F ≤ C M^{2s/n} K with C = K_GN/(ℓ+2)
        for (dim, s) in [(1usize, 0.5), (1, 0.75), (2, 0.75)] {
            let ell = 4.0 * s / dim as f64;
            let model = ProblemModel::new(dim, s, ell).unwrap();
            let bound = mass_critical_bound(&model, 1.0).unwrap();
            let spec = match dim {
                1 => GridSpec::new(1, 512, 20.0).unwrap(),
                _ => GridSpec::new(2, 64, 10.0).unwrap(),
            };
            for seed in 0..10 {
                let u = random_smooth(spec, seed);
                let lhs = potential_energy_f(&u, &model).unwrap();
                let rhs = bound.constant * mass(&u).powf(2.0 * s / dim as f64) * kinetic(&u, s);
                assert!(lhs <= rhs, "dim={dim} s={s} seed={seed}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn mass_critical_gate_scales_with_mass() {
        let model = ProblemModel::new(1, 0.5, 2.0).unwrap();
        let small = mass_critical_bound(&model, 0.01).unwrap();
        let large = mass_critical_bound(&model, 100.0).unwrap();
        assert!(small.admits());
        assert!(!large.admits());
        assert!((large.value / small.value - 1e4).abs() < 1e-6);
    }
}
