//! Orbital stability as a measurement: perturb a ground state, evolve in
//! both time directions and track the `H^s` distance to the orbit
//! `{e^{iθ}u(· - y)}`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{
    forward_transform, inverse_transform, modal_sum, sobolev_norm, sobolev_weight, Field,
    GridError, SpectralField,
};
use crate::ground_state::{dilate, GroundStateResult};
use crate::model::{mass, ProblemModel};
use crate::propagator::{evolve_observed, EvolutionConfig, PropagationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("stability runs need a converged ground state")]
    NotConverged,
    #[error("perturbation sizes must be finite and non-negative, got {0}")]
    Delta(f64),
    #[error("perturbation direction vanishes")]
    ZeroPerturbation,
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Closest orbit element to `Φ`: `e^{iθ}u(· - y)` with `y` on the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitMatch {
    pub distance: f64,
    pub phase: f64,
    /// Shift in grid cells per axis.
    pub shift: [i64; 2],
}

/// Minimizes `‖Φ - e^{iθ}u(· - y)‖_{H^s}` over every lattice shift and
/// every phase. All correlations `⟨Φ, u(· - y)⟩_{H^s}` come from one
/// weighted cross-spectrum; the optimal phase for a shift is the argument of
/// its correlation.
pub fn orbit_distance(phi: &Field, u: &Field, order: f64) -> Result<OrbitMatch, GridError> {
    if phi.spec() != u.spec() {
        return Err(GridError::SpecMismatch);
    }
    let spec = *u.spec();
    let weight = sobolev_weight(&spec, order);
    let a = forward_transform(phi);
    let b = forward_transform(u);
    let cross: Vec<Complex64> = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .zip(&weight)
        .map(|((&p, &q), &w)| p * q.conj() * w)
        .collect();
    let corr = modal_sum(&spec, &cross);
    let (best, c) = corr
        .iter()
        .enumerate()
        .fold((0, Complex64::new(0.0, 0.0)), |acc, (k, &c)| {
            if c.norm() > acc.1.norm() {
                (k, c)
            } else {
                acc
            }
        });
    let idx = spec.multi_index(best);
    let n = spec.points() as i64;
    let mut shift = [0i64; 2];
    for d in 0..spec.dim() {
        let m = idx[d] as i64;
        shift[d] = if m > n / 2 { m - n } else { m };
    }
    let phase = if c.norm() > 0.0 { c.arg() } else { 0.0 };
    let aligned = u.shifted(shift).scale(Complex64::from_polar(1.0, phase));
    let distance = sobolev_norm(&phi.sub(&aligned)?, order);
    Ok(OrbitMatch {
        distance,
        phase,
        shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationKind {
    /// Random band-limited field localized on the ground state.
    RandomSmooth { seed: u64 },
    /// Direction of a slight dilation of the ground state.
    Dilation,
    /// Direction of a one-cell translation of the ground state.
    Translation,
}

/// Perturbation direction with unit `H^s` norm.
pub fn perturbation(
    u: &Field,
    order: f64,
    kind: PerturbationKind,
) -> Result<Field, StabilityError> {
    let spec = *u.spec();
    let raw = match kind {
        PerturbationKind::RandomSmooth { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cutoff = 2.0;
            let freq = spec.frequency_norm_sq();
            let coeffs: Vec<Complex64> = freq
                .iter()
                .map(|&k2| {
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if k2 <= cutoff * cutoff {
                        c * (-k2 / (cutoff * cutoff)).exp()
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let noise = inverse_transform(&SpectralField::new(spec, coeffs)?);
            let peak = u.max_abs();
            let window: Vec<Complex64> = noise
                .values()
                .iter()
                .zip(u.values())
                .map(|(&z, &w)| z * (w.norm() / peak))
                .collect();
            Field::new(spec, window)?
        }
        PerturbationKind::Dilation => dilate(u, 0.95)
            .map_err(|_| StabilityError::ZeroPerturbation)?
            .sub(u)?,
        PerturbationKind::Translation => {
            let mut shift = [0i64; 2];
            shift[0] = 1;
            u.shifted(shift).sub(u)?
        }
    };
    let norm = sobolev_norm(&raw, order);
    if norm.is_nan() || norm <= 0.0 {
        return Err(StabilityError::ZeroPerturbation);
    }
    Ok(raw.scale_real(1.0 / norm))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    pub deltas: Vec<f64>,
    pub total_time: f64,
    pub dt: f64,
    pub stride: usize,
    pub kind: PerturbationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub delta: f64,
    /// `‖φ - u‖_{H^s}` after mass renormalization.
    pub delta_in: f64,
    /// Recorded times over `[-T, T]`, increasing.
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Orbit distance of the initial datum.
    pub initial_distance: f64,
    pub sup_distance: f64,
    /// Largest relative mass change over both runs.
    pub mass_drift: f64,
    /// Largest relative energy change over both runs.
    pub energy_drift: f64,
    /// Time of blow-up, if the evolution aborted.
    pub blow_up: Option<f64>,
}

impl StabilityReport {
    /// CSV with columns `t, distance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,distance\n");
        for (t, d) in self.times.iter().zip(&self.distances) {
            out.push_str(&format!("{t},{d}\n"));
        }
        out
    }
}

fn single_run(
    ground: &GroundStateResult,
    model: &ProblemModel,
    direction: &Field,
    delta: f64,
    config: &StabilityConfig,
) -> Result<StabilityReport, StabilityError> {
    let u = &ground.u;
    let order = model.order();
    let raw = u.add_scaled(Complex64::new(delta, 0.0), direction)?;
    let phi = raw.scale_real((ground.mass_target / mass(&raw)).sqrt());
    let delta_in = sobolev_norm(&phi.sub(u)?, order);

    let mut report = StabilityReport {
        delta,
        delta_in,
        times: Vec::new(),
        distances: Vec::new(),
        initial_distance: orbit_distance(&phi, u, order)?.distance,
        sup_distance: 0.0,
        mass_drift: 0.0,
        energy_drift: 0.0,
        blow_up: None,
    };
    let mut backward = Vec::new();
    let mut forward = Vec::new();
    for (sign, samples) in [(-1.0, &mut backward), (1.0, &mut forward)] {
        let cfg = EvolutionConfig::new(sign * config.dt, config.total_time, config.stride)?;
        let mut failure = None;
        let run = evolve_observed(&phi, model, &cfg, None, |t, field| {
            match orbit_distance(field, u, order) {
                Ok(m) => samples.push((t, m.distance)),
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
        match run {
            Ok(evolution) => {
                let rec = &evolution.record;
                let j0 = rec.energy[0].total;
                report.mass_drift = report.mass_drift.max(rec.max_relative_mass_drift());
                report.energy_drift = report
                    .energy_drift
                    .max(rec.max_energy_drift() / j0.abs().max(f64::MIN_POSITIVE));
            }
            Err(PropagationError::BlowUp { time, .. }) => {
                report.blow_up = Some(time);
            }
            Err(e) => return Err(e.into()),
        }
    }
    backward.reverse();
    backward.pop();
    for (t, d) in backward.into_iter().chain(forward) {
        report.times.push(t);
        report.distances.push(d);
    }
    report.sup_distance = report.distances.iter().copied().fold(0.0, f64::max);
    Ok(report)
}

/// One report per `δ`, in the order given. Runs are independent and
/// evaluated in parallel.
pub fn run_stability_experiment(
    model: &ProblemModel,
    ground: &GroundStateResult,
    config: &StabilityConfig,
) -> Result<Vec<StabilityReport>, StabilityError> {
    if !ground.converged {
        return Err(StabilityError::NotConverged);
    }
    if let Some(&bad) = config
        .deltas
        .iter()
        .find(|d| !(d.is_finite() && **d >= 0.0))
    {
        return Err(StabilityError::Delta(bad));
    }
    let direction = perturbation(&ground.u, model.order(), config.kind)?;
    config
        .deltas
        .par_iter()
        .map(|&delta| single_run(ground, model, &direction, delta, config))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Stable when every `sup_d ≤ ε` and `sup_d` increases strictly with `δ`;
/// unstable on blow-up or when a run exceeds `ε` and grows by a factor of
/// at least 10 over its initial distance; inconclusive otherwise, including
/// fewer than two runs.
pub fn verdict(reports: &[StabilityReport], epsilon: f64) -> Verdict {
    if reports.iter().any(|r| r.blow_up.is_some()) {
        return Verdict::Unstable;
    }
    if reports
        .iter()
        .any(|r| r.sup_distance > epsilon && r.sup_distance >= 10.0 * r.initial_distance)
    {
        return Verdict::Unstable;
    }
    if reports.len() < 2 {
        return Verdict::Inconclusive;
    }
    let mut sorted: Vec<&StabilityReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    let bounded = sorted.iter().all(|r| r.sup_distance <= epsilon);
    let monotone = sorted
        .windows(2)
        .all(|w| w[0].delta < w[1].delta && w[0].sup_distance < w[1].sup_distance);
    if bounded && monotone {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::ground_state::{gaussian_initial, minimize_on_sphere, FlowConfig};

    fn bump(spec: GridSpec) -> Field {
        Field::from_fn(spec, |x| {
            let r2 = (x[0] - 0.3).powi(2) + 0.5 * x[1] * x[1];
            Complex64::from_polar((-r2).exp(), 0.4 * x[0])
        })
        .unwrap()
    }

    #[test]
    fn distance_to_itself_vanishes() {
        for spec in [
            GridSpec::new(1, 128, 10.0).unwrap(),
            GridSpec::new(2, 32, 6.0).unwrap(),
        ] {
            let u = bump(spec);
            let m = orbit_distance(&u, &u, 0.7).unwrap();
            assert!(m.distance < 1e-12);
            assert_eq!(m.shift, [0, 0]);
        }
    }

    #[test]
    fn recovers_orbit_element() {
        let spec = GridSpec::new(2, 32, 6.0).unwrap();
        let u = bump(spec);
        let phi = u.shifted([5, -3]).scale(Complex64::from_polar(1.0, -2.1));
        let m = orbit_distance(&phi, &u, 0.6).unwrap();
        assert!(m.distance < 1e-12, "{}", m.distance);
        assert_eq!(m.shift, [5, -3]);
        assert!((m.phase + 2.1).abs() < 1e-12);
    }

    #[test]
    fn pythagoras_upper_bound() {
        let spec = GridSpec::new(1, 128, 10.0).unwrap();
        let u = Field::from_fn(spec, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        // u is itself on the orbit
        let v = Field::from_fn(spec, |x| Complex64::new(0.0, x[0] * (-x[0] * x[0]).exp())).unwrap();
        let eps = 1e-3;
        let phi = u.add_scaled(Complex64::new(eps, 0.0), &v).unwrap();
        let m = orbit_distance(&phi, &u, 0.8).unwrap();
        assert!(m.distance <= eps * sobolev_norm(&v, 0.8) * (1.0 + 1e-12));
    }

    #[test]
    fn perturbations_have_unit_norm() {
        let spec = GridSpec::new(1, 256, 20.0).unwrap();
        let u = Field::from_fn(spec, |x| Complex64::new(1.0 / x[0].cosh(), 0.0)).unwrap();
        for kind in [
            PerturbationKind::RandomSmooth { seed: 7 },
            PerturbationKind::Dilation,
            PerturbationKind::Translation,
        ] {
            let p = perturbation(&u, 1.0, kind).unwrap();
            assert!((sobolev_norm(&p, 1.0) - 1.0).abs() < 1e-12);
        }
        let a = perturbation(&u, 1.0, PerturbationKind::RandomSmooth { seed: 7 }).unwrap();
        let b = perturbation(&u, 1.0, PerturbationKind::RandomSmooth { seed: 7 }).unwrap();
        let c = perturbation(&u, 1.0, PerturbationKind::RandomSmooth { seed: 8 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    fn report(delta: f64, initial: f64, sup: f64, blow_up: Option<f64>) -> StabilityReport {
        StabilityReport {
            delta,
            delta_in: delta,
            times: vec![0.0],
            distances: vec![initial],
            initial_distance: initial,
            sup_distance: sup,
            mass_drift: 0.0,
            energy_drift: 0.0,
            blow_up,
        }
    }

    #[test]
    fn verdict_rules() {
        let stable = [
            report(1e-3, 1e-3, 2e-3, None),
            report(1e-2, 1e-2, 2e-2, None),
        ];
        assert_eq!(verdict(&stable, 0.1), Verdict::Stable);
        let blown = [
            report(1e-3, 1e-3, 2e-3, None),
            report(1e-2, 1e-2, 2e-2, Some(0.5)),
        ];
        assert_eq!(verdict(&blown, 0.1), Verdict::Unstable);
        let grows = [
            report(1e-3, 1e-3, 2e-3, None),
            report(1e-2, 1e-2, 0.5, None),
        ];
        assert_eq!(verdict(&grows, 0.1), Verdict::Unstable);
        let noisy = [
            report(1e-3, 1e-3, 2e-3, None),
            report(1e-2, 1e-2, 1.9e-3, None),
        ];
        assert_eq!(verdict(&noisy, 0.1), Verdict::Inconclusive);
        assert_eq!(verdict(&stable[..1], 0.1), Verdict::Inconclusive);
    }

    #[test]
    fn soliton_experiment_small() {
        let spec = GridSpec::new(1, 256, 8.0 * std::f64::consts::PI).unwrap();
        let model = ProblemModel::new(1, 1.0, 2.0).unwrap();
        let mu = 2.0;
        let ground = minimize_on_sphere(
            &model,
            mu,
            &gaussian_initial(&spec, mu),
            &FlowConfig::default(),
        )
        .unwrap();
        assert!(ground.converged);
        let cfg = StabilityConfig {
            deltas: vec![0.0, 1e-3, 1e-2],
            total_time: 1.0,
            dt: 2e-3,
            stride: 25,
            kind: PerturbationKind::RandomSmooth { seed: 1 },
        };
        let reports = run_stability_experiment(&model, &ground, &cfg).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert!(r.blow_up.is_none());
            assert!(r.mass_drift < 1e-10);
            assert!(r.initial_distance <= r.delta_in + 1e-12);
            assert!(r.times.windows(2).all(|w| w[0] < w[1]));
            assert!(r.distances.iter().all(|&d| d >= 0.0));
            assert_eq!(*r.times.first().unwrap(), -1.0);
            assert_eq!(*r.times.last().unwrap(), 1.0);
        }
        assert!(
            reports[0].sup_distance < 1e-5,
            "{}",
            reports[0].sup_distance
        );
        let ratio = (reports[2].sup_distance / 1e-2) / (reports[1].sup_distance / 1e-3);
        assert!((0.2..=5.0).contains(&ratio), "{ratio}");
        assert_eq!(verdict(&reports[1..], 0.1), Verdict::Stable);
    }

    #[test]
    fn rejects_unconverged_ground_state() {
        let spec = GridSpec::new(1, 64, 10.0).unwrap();
        let model = ProblemModel::new(1, 1.0, 2.0).unwrap();
        let cfg = FlowConfig {
            max_iter: 1,
            ..FlowConfig::default()
        };
        let ground = minimize_on_sphere(&model, 1.0, &gaussian_initial(&spec, 1.0), &cfg).unwrap();
        let sc = StabilityConfig {
            deltas: vec![1e-3],
            total_time: 0.1,
            dt: 0.01,
            stride: 1,
            kind: PerturbationKind::Dilation,
        };
        assert_eq!(
            run_stability_experiment(&model, &ground, &sc).unwrap_err(),
            StabilityError::NotConverged
        );
    }
}
