//! Flat `section.key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Numbers are decimal, lists are
//! comma-separated. Every problem found is reported, not just the first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use fnls_core::grid::GridSpec;
use fnls_core::ground_state::{check_mass_critical_gate, FlowConfig};
use fnls_core::hypothesis::{parse_rational, Exponent, Rational};
use fnls_core::model::{PotentialModel, ProblemModel, StructuralParams, WeightModel};
use fnls_core::propagator::EvolutionConfig;
use fnls_core::stability::PerturbationKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Check,
    GroundState,
    Evolve,
    Stability,
    ProbeScaling,
    ProbeSubadd,
    ProbeConcentration,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Check => "check",
            Subcommand::GroundState => "ground-state",
            Subcommand::Evolve => "evolve",
            Subcommand::Stability => "stability",
            Subcommand::ProbeScaling => "probe-scaling",
            Subcommand::ProbeSubadd => "probe-subadd",
            Subcommand::ProbeConcentration => "probe-concentration",
        }
    }

    fn needs_grid(self) -> bool {
        self != Subcommand::Check
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

/// Exact values used by the hypothesis checker.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactParams {
    pub s: Rational,
    pub ell: Rational,
    pub beta: Option<Rational>,
    pub delta_f: Option<Rational>,
    pub sigma: Option<Rational>,
    pub p1: Option<Exponent>,
    pub p2: Option<Exponent>,
    pub q1: Option<Exponent>,
    pub q2: Option<Exponent>,
    pub radial: bool,
    pub tail_integral: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Gaussian {
        mu: f64,
        width: Option<f64>,
        center: f64,
        kick: f64,
    },
    GroundState,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTask {
    pub deltas: Vec<f64>,
    pub total_time: f64,
    pub dt: f64,
    pub stride: usize,
    pub kind: PerturbationKind,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub dim: usize,
    pub grid: Option<GridSpec>,
    pub model: ProblemModel,
    pub exact: ExactParams,
    pub init: InitSpec,
    pub mu: Option<f64>,
    pub flow: FlowConfig,
    pub evolution: Option<EvolutionConfig>,
    pub energy_bound: bool,
    pub stability: Option<StabilityTask>,
    pub lambdas: Vec<f64>,
    pub subadd_mu: Option<f64>,
    pub nus: Vec<f64>,
    pub radii: Vec<f64>,
    pub q: Option<Exponent>,
    pub out: PathBuf,
    pub snapshot_stride: Option<usize>,
    pub seed: u64,
    /// Every key with the value in effect, defaults included.
    pub effective: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn grid(&self) -> GridSpec {
        self.grid
            .expect("grid is validated for numerical subcommands")
    }

    pub fn echo(&self) -> String {
        self.effective
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

struct Entry {
    line: usize,
    value: String,
}

struct Reader {
    entries: BTreeMap<String, Entry>,
    used: BTreeSet<String>,
    errors: Vec<ConfigError>,
    effective: BTreeMap<String, String>,
}

fn parse_f64(t: &str) -> Option<f64> {
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_usize(t: &str) -> Option<usize> {
    t.parse().ok()
}

fn parse_bool(t: &str) -> Option<bool> {
    match t {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn parse_list(t: &str) -> Option<Vec<f64>> {
    t.split(',').map(|x| parse_f64(x.trim())).collect()
}

impl Reader {
    fn new(text: &str) -> Self {
        let mut r = Reader {
            entries: BTreeMap::new(),
            used: BTreeSet::new(),
            errors: Vec::new(),
            effective: BTreeMap::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                r.push(Some(line), content, "expected `section.key = value`");
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let well_formed = key
                .split_once('.')
                .is_some_and(|(s, k)| !s.is_empty() && !k.is_empty() && !k.contains('.'));
            if !well_formed {
                r.push(Some(line), key, "key must have the form `section.key`");
                continue;
            }
            if let Some(prev) = r.entries.get(key) {
                let msg = format!("duplicate key (first set on line {})", prev.line);
                r.push(Some(line), key, &msg);
                continue;
            }
            r.entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        r
    }

    fn push(&mut self, line: Option<usize>, key: &str, message: &str) {
        self.errors.push(ConfigError {
            line,
            key: key.to_string(),
            message: message.to_string(),
        });
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn fail(&mut self, key: &str, message: impl fmt::Display) {
        let line = self.line(key);
        self.push(line, key, &message.to_string());
    }

    fn text(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        let value = self.entries.get(key)?.value.clone();
        self.effective.insert(key.to_string(), value.clone());
        Some(value)
    }

    /// `Err` when present but malformed, `Ok(None)` when absent.
    fn typed<T>(
        &mut self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, ()> {
        match self.text(key) {
            None => Ok(None),
            Some(t) => match parse(&t) {
                Some(v) => Ok(Some(v)),
                None => {
                    self.fail(key, format!("expected {what}, got {t:?}"));
                    Err(())
                }
            },
        }
    }

    fn optional<T>(
        &mut self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Option<T> {
        self.typed(key, what, parse).ok().flatten()
    }

    fn or_default<T: fmt::Display>(
        &mut self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
        default: T,
    ) -> Option<T> {
        match self.typed(key, what, parse) {
            Ok(Some(v)) => Some(v),
            Ok(None) => {
                self.effective.insert(key.to_string(), default.to_string());
                Some(default)
            }
            Err(()) => None,
        }
    }

    fn required<T>(
        &mut self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Option<T> {
        match self.typed(key, what, parse) {
            Ok(Some(v)) => Some(v),
            Ok(None) => {
                self.push(None, key, "missing required key");
                None
            }
            Err(()) => None,
        }
    }

    fn finish(mut self) -> (BTreeMap<String, String>, Vec<ConfigError>) {
        let unknown: Vec<(String, usize)> = self
            .entries
            .iter()
            .filter(|(k, _)| !self.used.contains(*k))
            .map(|(k, e)| (k.clone(), e.line))
            .collect();
        for (key, line) in unknown {
            self.push(Some(line), &key, "unknown key");
        }
        self.errors
            .sort_by_key(|e| (e.line.unwrap_or(usize::MAX), e.key.clone()));
        (self.effective, self.errors)
    }
}

fn exact(t: &str) -> Option<Rational> {
    parse_rational(t).ok()
}

fn exponent(t: &str) -> Option<Exponent> {
    Exponent::parse(t).ok()
}

fn profile_params(r: &mut Reader, name: &str, kind: &str) -> Option<(f64, f64, f64)> {
    let key = |p: &str| format!("model.{name}_{p}");
    match kind {
        "gaussian" => {
            let a = r.required(&key("amplitude"), "a number", parse_f64);
            let w = r.required(&key("width"), "a number", parse_f64);
            Some((a?, w?, 0.0))
        }
        "inverse_power" => {
            let a = r.required(&key("amplitude"), "a number", parse_f64);
            let e = r.required(&key("exponent"), "a number", parse_f64);
            let c = r.required(&key("core"), "a number", parse_f64);
            Some((a?, e?, c?))
        }
        _ => None,
    }
}

fn read_potential(r: &mut Reader) -> Option<PotentialModel> {
    let kind = r.or_default(
        "model.V",
        "zero, gaussian or inverse_power",
        |t| Some(t.to_string()),
        "zero".into(),
    )?;
    let params = profile_params(r, "V", &kind);
    match (kind.as_str(), params) {
        ("zero", _) => Some(PotentialModel::Zero),
        ("gaussian", Some((amplitude, width, _))) => {
            Some(PotentialModel::GaussianBump { amplitude, width })
        }
        ("inverse_power", Some((amplitude, exponent, core))) => {
            Some(PotentialModel::CutoffInversePower {
                amplitude,
                exponent,
                core,
            })
        }
        ("gaussian" | "inverse_power", None) => None,
        _ => {
            r.fail(
                "model.V",
                format!("expected zero, gaussian or inverse_power, got {kind:?}"),
            );
            None
        }
    }
}

fn read_weight(r: &mut Reader, name: &str) -> Option<WeightModel> {
    let key = format!("model.{name}");
    let kind = r.or_default(
        &key,
        "a number, gaussian or inverse_power",
        |t| Some(t.to_string()),
        "1".into(),
    )?;
    if let Some(c) = parse_f64(&kind) {
        return Some(WeightModel::Constant(c));
    }
    let params = profile_params(r, name, &kind);
    match (kind.as_str(), params) {
        ("gaussian", Some((amplitude, width, _))) => {
            Some(WeightModel::GaussianBump { amplitude, width })
        }
        ("inverse_power", Some((amplitude, exponent, core))) => {
            Some(WeightModel::CutoffInversePower {
                amplitude,
                exponent,
                core,
            })
        }
        ("gaussian" | "inverse_power", None) => None,
        _ => {
            r.fail(
                &key,
                format!("expected a number, gaussian or inverse_power, got {kind:?}"),
            );
            None
        }
    }
}

fn read_model(r: &mut Reader, dim: usize) -> (Option<ProblemModel>, Option<ExactParams>) {
    let s_exact = r.required("model.s", "an exact number", exact);
    let ell_exact = r.or_default(
        "model.ell",
        "an exact number",
        exact,
        Rational::from_integer(2.into()),
    );
    let potential = read_potential(r);
    let weight_a = read_weight(r, "a");
    let weight_b = read_weight(r, "b");

    let beta = r.optional("model.beta", "an exact number", exact);
    let delta_f = r.optional("model.delta_F", "an exact number", exact);
    let sigma = r.optional("model.sigma", "an exact number", exact);
    let kappa = r.optional("model.kappa", "a number", parse_f64);
    let radius = r.optional("model.R", "a number", parse_f64);
    let cap = r.optional("model.Ncap", "a number", parse_f64);
    let p1 = r.optional("model.p1", "an exponent in (1, inf]", exponent);
    let p2 = r.optional("model.p2", "an exponent in (1, inf]", exponent);
    let q1 = r.optional("model.q1", "an exponent in (1, inf]", exponent);
    let q2 = r.optional("model.q2", "an exponent in (1, inf]", exponent);
    let radial = r.or_default("model.radial", "true or false", parse_bool, false);
    let tail = r.or_default("model.tail_integral", "true or false", parse_bool, false);

    let to_f64 = |x: &Rational| num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN);
    let mut model = None;
    if let (Some(s), Some(ell)) = (&s_exact, &ell_exact) {
        match ProblemModel::new(dim, to_f64(s), to_f64(ell)) {
            Ok(m) => model = Some(m),
            Err(e) => {
                let key = match e {
                    fnls_core::model::ModelError::Power(_) => "model.ell",
                    fnls_core::model::ModelError::Dimension(_) => "grid.n",
                    _ => "model.s",
                };
                r.fail(key, format!("violates model precondition: {e}"));
            }
        }
    }
    if let (Some(m), Some(v)) = (model.take(), potential) {
        model = m
            .with_potential(v)
            .map_err(|e| r.fail("model.V", format!("violates model precondition: {e}")))
            .ok();
    }
    if let (Some(m), Some(a)) = (model.take(), weight_a) {
        model = m
            .with_weight_a(a)
            .map_err(|e| r.fail("model.a", format!("violates model precondition: {e}")))
            .ok();
    }
    if let (Some(m), Some(b)) = (model.take(), weight_b) {
        model = m
            .with_weight_b(b)
            .map_err(|e| r.fail("model.b", format!("violates model precondition: {e}")))
            .ok();
    }
    if kappa.is_some() || radius.is_some() || cap.is_some() {
        let all = (kappa, radius, cap, &delta_f, &beta, &sigma);
        match all {
            (Some(kappa), Some(radius), Some(amplitude_cap), Some(d), Some(b), Some(sg)) => {
                let params = StructuralParams {
                    kappa,
                    radius,
                    amplitude_cap,
                    delta_f: to_f64(d),
                    beta: to_f64(b),
                    sigma: to_f64(sg),
                };
                if let Some(m) = model.take() {
                    model = m
                        .with_structure(params)
                        .map_err(|e| {
                            r.fail("model.kappa", format!("violates model precondition: {e}"))
                        })
                        .ok();
                }
            }
            _ => r.fail(
                "model.kappa",
                "structural parameters need all of kappa, R, Ncap, delta_F, beta and sigma",
            ),
        }
    }
    let exact = match (s_exact, ell_exact, radial, tail) {
        (Some(s), Some(ell), Some(radial), Some(tail_integral)) => Some(ExactParams {
            s,
            ell,
            beta,
            delta_f,
            sigma,
            p1,
            p2,
            q1,
            q2,
            radial,
            tail_integral,
        }),
        _ => None,
    };
    (model, exact)
}

fn read_init(r: &mut Reader) -> Option<InitSpec> {
    let kind = r.or_default(
        "init.kind",
        "gaussian, ground_state or file",
        |t| Some(t.to_string()),
        "gaussian".into(),
    )?;
    let mu = r.or_default("init.mu", "a number", parse_f64, 1.0);
    let width = r.optional("init.width", "a number", parse_f64);
    let center = r.or_default("init.center", "a number", parse_f64, 0.0);
    let kick = r.or_default("init.kick", "a number", parse_f64, 0.0);
    let path = r.optional("init.path", "a path", |t| Some(PathBuf::from(t)));
    match kind.as_str() {
        "gaussian" => {
            let mu = mu?;
            if mu <= 0.0 {
                r.fail(
                    "init.mu",
                    format!("violates ground_state precondition \"μ > 0\": got {mu}"),
                );
            }
            if let Some(w) = width.filter(|w| *w <= 0.0) {
                r.fail("init.width", format!("width must be positive, got {w}"));
            }
            Some(InitSpec::Gaussian {
                mu,
                width,
                center: center?,
                kick: kick?,
            })
        }
        "ground_state" => Some(InitSpec::GroundState),
        "file" => match path {
            Some(p) => Some(InitSpec::File(p)),
            None => {
                r.fail("init.path", "missing required key for init.kind = file");
                None
            }
        },
        _ => {
            r.fail(
                "init.kind",
                format!("expected gaussian, ground_state or file, got {kind:?}"),
            );
            None
        }
    }
}

fn positive(r: &mut Reader, key: &str, v: Option<f64>, module: &str) -> Option<f64> {
    let v = v?;
    if v > 0.0 {
        Some(v)
    } else {
        r.fail(
            key,
            format!("violates {module} precondition \"{key} > 0\": got {v}"),
        );
        None
    }
}

fn gate(r: &mut Reader, key: &str, model: Option<&ProblemModel>, mu: f64) {
    if let Some(m) = model {
        if let Err(e) = check_mass_critical_gate(m, mu) {
            r.fail(key, format!("violates ground_state precondition: {e}"));
        }
    }
}

/// Parses and validates `text` for `subcommand`.
pub fn parse_config(
    text: &str,
    subcommand: Subcommand,
    overrides: &Overrides,
) -> Result<RunConfig, Vec<ConfigError>> {
    use Subcommand::*;
    let mut r = Reader::new(text);

    let dim = r.or_default("grid.n", "a positive integer", parse_usize, 1);
    let (points, half_width) = if subcommand.needs_grid() {
        (
            r.required("grid.N", "a positive integer", parse_usize),
            r.required("grid.L", "a number", parse_f64),
        )
    } else {
        (
            r.optional("grid.N", "a positive integer", parse_usize),
            r.optional("grid.L", "a number", parse_f64),
        )
    };
    let mut grid = None;
    if let (Some(n), Some(points), Some(half_width)) = (dim, points, half_width) {
        match GridSpec::new(n, points, half_width) {
            Ok(g) => grid = Some(g),
            Err(e) => {
                let (key, invariant) = match e {
                    fnls_core::grid::GridError::Dimension(_) => ("grid.n", "n ∈ {1, 2}"),
                    fnls_core::grid::GridError::Points(_) => ("grid.N", "N even"),
                    _ => ("grid.L", "L > 0"),
                };
                r.fail(key, format!("violates grid invariant \"{invariant}\": {e}"));
            }
        }
    }
    let (model, exact) = read_model(&mut r, dim.unwrap_or(1));
    let init = read_init(&mut r);

    let mu = r.optional("ground_state.mu", "a number", parse_f64);
    let tau = r.or_default(
        "ground_state.tau",
        "a number",
        parse_f64,
        FlowConfig::default().tau,
    );
    let tol = r.optional("ground_state.tol", "a number", parse_f64);
    let max_iter = r.or_default(
        "ground_state.max_iter",
        "a positive integer",
        parse_usize,
        FlowConfig::default().max_iter,
    );
    let tau = positive(&mut r, "ground_state.tau", tau, "ground_state");
    if let Some(t) = tol {
        positive(&mut r, "ground_state.tol", Some(t), "ground_state");
    }
    let flow = FlowConfig {
        tau: tau.unwrap_or(1.0),
        tolerance: tol,
        max_iter: max_iter.unwrap_or(1),
    };
    let needs_ground = matches!(subcommand, GroundState | Stability)
        || (matches!(subcommand, Evolve | ProbeScaling | ProbeConcentration)
            && init == Some(InitSpec::GroundState));
    if needs_ground {
        match mu {
            None if r.line("ground_state.mu").is_none() => {
                r.fail("ground_state.mu", "missing required key")
            }
            None => {}
            Some(m) => {
                if positive(&mut r, "ground_state.mu", Some(m), "ground_state").is_some() {
                    gate(&mut r, "ground_state.mu", model.as_ref(), m);
                }
            }
        }
    }

    let dt = r.optional("evolve.dt", "a number", parse_f64);
    let total = r.optional("evolve.T", "a number", parse_f64);
    let stride = r.or_default("evolve.stride", "a positive integer", parse_usize, 1);
    let drift = r.or_default("evolve.drift_threshold", "a number", parse_f64, 1e-3);
    let energy_bound = r.or_default("evolve.energy_bound", "true or false", parse_bool, false);
    let mut evolution = None;
    if subcommand == Evolve {
        if dt.is_none() && r.line("evolve.dt").is_none() {
            r.fail("evolve.dt", "missing required key");
        }
        if total.is_none() && r.line("evolve.T").is_none() {
            r.fail("evolve.T", "missing required key");
        }
        if let (Some(dt), Some(total), Some(stride), Some(drift)) = (dt, total, stride, drift) {
            match EvolutionConfig::new(dt, total, stride) {
                Ok(mut cfg) => {
                    cfg.energy_drift_threshold = drift;
                    evolution = Some(cfg);
                }
                Err(e) => r.fail(
                    "evolve.dt",
                    format!("violates propagator precondition: {e}"),
                ),
            }
        }
        if let (Some(true), Some(m)) = (energy_bound, &model) {
            let theta = m.dim() as f64 * m.power() / (4.0 * m.order());
            if theta >= 1.0 {
                r.fail(
                    "evolve.energy_bound",
                    format!("violates propagator precondition \"ℓ < 4s/n\": nℓ/(4s) = {theta}"),
                );
            }
        }
    }

    let deltas = r
        .typed("stability.deltas", "a comma-separated list", parse_list)
        .map(Option::unwrap_or_default)
        .ok();
    let st_total = r.or_default("stability.T", "a number", parse_f64, 5.0);
    let st_dt = r.or_default("stability.dt", "a number", parse_f64, 1e-3);
    let st_stride = r.or_default("stability.stride", "a positive integer", parse_usize, 10);
    let kind = r.or_default(
        "stability.perturbation",
        "random, dilation or translation",
        |t| Some(t.to_string()),
        "random".into(),
    );
    let epsilon = r.or_default("stability.epsilon", "a number", parse_f64, 0.1);
    let file_seed = r.or_default(
        "stability.seed",
        "a non-negative integer",
        |t| t.parse::<u64>().ok(),
        0,
    );
    let seed = overrides.seed.or(file_seed).unwrap_or(0);
    if overrides.seed.is_some() {
        r.effective
            .insert("stability.seed".into(), seed.to_string());
    }
    let mut stability = None;
    if subcommand == Stability {
        let kind = match kind.as_deref() {
            Some("random") => Some(PerturbationKind::RandomSmooth { seed }),
            Some("dilation") => Some(PerturbationKind::Dilation),
            Some("translation") => Some(PerturbationKind::Translation),
            Some(other) => {
                r.fail(
                    "stability.perturbation",
                    format!("expected random, dilation or translation, got {other:?}"),
                );
                None
            }
            None => None,
        };
        if let Some(d) = &deltas {
            if d.is_empty() {
                r.fail("stability.deltas", "missing required key");
            } else if let Some(bad) = d.iter().find(|v| **v < 0.0) {
                r.fail(
                    "stability.deltas",
                    format!("violates stability precondition \"δ ≥ 0\": got {bad}"),
                );
            }
        }
        if let (Some(dt), Some(total), Some(stride)) = (st_dt, st_total, st_stride) {
            if let Err(e) = EvolutionConfig::new(dt, total, stride) {
                r.fail(
                    "stability.dt",
                    format!("violates propagator precondition: {e}"),
                );
            }
        }
        let epsilon = positive(&mut r, "stability.epsilon", epsilon, "stability");
        if let (Some(deltas), Some(total_time), Some(dt), Some(stride), Some(kind), Some(epsilon)) =
            (deltas, st_total, st_dt, st_stride, kind, epsilon)
        {
            stability = Some(StabilityTask {
                deltas,
                total_time,
                dt,
                stride,
                kind,
                epsilon,
            });
        }
    }

    let lambdas = r.optional(
        "probe_scaling.lambdas",
        "a comma-separated list",
        parse_list,
    );
    if subcommand == ProbeScaling {
        match &lambdas {
            None if r.line("probe_scaling.lambdas").is_none() => {
                r.fail("probe_scaling.lambdas", "missing required key")
            }
            Some(l) if l.iter().any(|&x| !(x > 0.0 && x <= 1.0)) => r.fail(
                "probe_scaling.lambdas",
                "violates ground_state precondition \"0 < λ ≤ 1\"",
            ),
            _ => {}
        }
    }
    let subadd_mu = r.optional("probe_subadd.mu", "a number", parse_f64);
    let nus = r.optional("probe_subadd.nus", "a comma-separated list", parse_list);
    if subcommand == ProbeSubadd {
        match subadd_mu {
            None if r.line("probe_subadd.mu").is_none() => {
                r.fail("probe_subadd.mu", "missing required key")
            }
            None => {}
            Some(m) => {
                if positive(&mut r, "probe_subadd.mu", Some(m), "ground_state").is_some() {
                    gate(&mut r, "probe_subadd.mu", model.as_ref(), m);
                    if let Some(bad) = nus.iter().flatten().find(|&&v| !(v > 0.0 && v < m)) {
                        let msg =
                            format!("violates ground_state precondition \"0 < ν < μ\": got {bad}");
                        r.fail("probe_subadd.nus", msg);
                    }
                }
            }
        }
        if nus.is_none() && r.line("probe_subadd.nus").is_none() {
            r.fail("probe_subadd.nus", "missing required key");
        }
    }
    let radii = r.optional(
        "probe_concentration.radii",
        "a comma-separated list",
        parse_list,
    );
    if subcommand == ProbeConcentration {
        match (&radii, grid) {
            (None, _) if r.line("probe_concentration.radii").is_none() => {
                r.fail("probe_concentration.radii", "missing required key")
            }
            (Some(rs), Some(g)) => {
                let ok = rs.iter().all(|&x| x > 0.0 && x <= g.half_width())
                    && rs.windows(2).all(|w| w[0] < w[1]);
                if !ok {
                    r.fail(
                        "probe_concentration.radii",
                        "violates ground_state precondition \"0 < r₁ < r₂ < … ≤ L\"",
                    );
                }
            }
            _ => {}
        }
    }
    let q = r.optional("check.q", "an exponent in (1, inf]", exponent);

    let out = r.or_default(
        "io.out",
        "a path",
        |t| Some(t.to_string()),
        "fnls-out".into(),
    );
    let snapshot_stride = r.optional("io.snapshot_stride", "a positive integer", parse_usize);
    if snapshot_stride == Some(0) {
        r.fail("io.snapshot_stride", "must be at least 1");
    }
    if subcommand == Evolve && snapshot_stride.is_some() && energy_bound == Some(true) {
        r.fail(
            "io.snapshot_stride",
            "snapshots are not recorded by energy-bound runs",
        );
    }
    let out = match &overrides.out {
        Some(p) => {
            r.effective.insert("io.out".into(), p.display().to_string());
            Some(p.clone())
        }
        None => out.map(PathBuf::from),
    };

    let (effective, errors) = r.finish();
    if !errors.is_empty() {
        return Err(errors);
    }
    let missing = || {
        vec![ConfigError {
            line: None,
            key: "config".into(),
            message: "incomplete configuration".into(),
        }]
    };
    Ok(RunConfig {
        subcommand,
        dim: dim.ok_or_else(missing)?,
        grid,
        model: model.ok_or_else(missing)?,
        exact: exact.ok_or_else(missing)?,
        init: init.ok_or_else(missing)?,
        mu,
        flow,
        evolution,
        energy_bound: energy_bound.unwrap_or(false),
        stability,
        lambdas: lambdas.unwrap_or_default(),
        subadd_mu,
        nus: nus.unwrap_or_default(),
        radii: radii.unwrap_or_default(),
        q,
        out: out.ok_or_else(missing)?,
        snapshot_stride,
        seed,
        effective,
    })
}
