//! Subcommand execution and on-disk artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fnls_core::grid::Field;
use fnls_core::ground_state::{
    concentration_function, gaussian_initial, minimize_on_sphere, scaling_probe,
    subadditivity_probe, GroundStateError, GroundStateResult,
};
use fnls_core::hypothesis::{hypothesis_report, ParameterSet};
use fnls_core::io::{read_field, write_field};
use fnls_core::model::mass;
use fnls_core::propagator::{energy_bound_run, evolve_observed, PropagationError};
use fnls_core::stability::{run_stability_experiment, verdict, StabilityConfig, StabilityError};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{InitSpec, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<GroundStateError> for Failure {
    fn from(e: GroundStateError) -> Self {
        use GroundStateError::*;
        match e {
            EnergyIncrease { .. } | Collapse { .. } | UnderResolved { .. } | NotRadial(_) => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<PropagationError> for Failure {
    fn from(e: PropagationError) -> Self {
        match e {
            PropagationError::BlowUp { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<StabilityError> for Failure {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::NotConverged => Failure::Numerical(e.to_string()),
            StabilityError::Propagation(p) => p.into(),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

/// Output directory that remembers every file written to it.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> Result<PathBuf, Failure> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| Failure::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
        Ok(path)
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.path(name)?;
        fs::write(&path, contents)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn field(&mut self, name: &str, field: &Field, order: f64) -> Result<(), Failure> {
        let path = self.path(name)?;
        let file = fs::File::create(&path)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        write_field(BufWriter::new(file), field, order)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Outcome of a subcommand body: summary values, warnings and an optional
/// numerical failure that still left outputs behind.
#[derive(Default)]
struct Outcome {
    summary: Map<String, Value>,
    warnings: Vec<String>,
    failure: Option<Failure>,
}

pub struct RunResult {
    pub manifest: PathBuf,
    pub failure: Option<Failure>,
    pub report: String,
}

fn boundary_warning(field: &Field, what: &str, warnings: &mut Vec<String>) {
    let ratio = field.boundary_ratio();
    if ratio > 1e-6 {
        warnings.push(format!(
            "{what}: boundary amplitude is {ratio:.3e} of the maximum; enlarge grid.L"
        ));
    }
}

fn compute_ground_state(cfg: &RunConfig, out: &mut Outcome) -> Result<GroundStateResult, Failure> {
    let spec = cfg.grid();
    let mu = cfg.mu.expect("validated");
    let res = minimize_on_sphere(&cfg.model, mu, &gaussian_initial(&spec, mu), &cfg.flow)?;
    boundary_warning(&res.u, "ground state", &mut out.warnings);
    Ok(res)
}

fn ground_state_csv(res: &GroundStateResult) -> String {
    let e = &res.energy;
    format!(
        "mu,I_mu,kinetic,potential_V,potential_F,omega,residual,iterations,converged,status\n{},{},{},{},{},{},{},{},{},{:?}\n",
        res.mass_target, res.i_mu, e.kinetic, e.potential_v, e.potential_f, res.omega, res.residual, res.iterations,
        res.converged, res.status
    )
}

fn initial_field(cfg: &RunConfig, out: &mut Outcome) -> Result<Field, Failure> {
    let spec = cfg.grid();
    match &cfg.init {
        InitSpec::Gaussian {
            mu,
            width,
            center,
            kick,
        } => {
            let w = width.unwrap_or(spec.half_width() / 8.0);
            let (c, k) = (*center, *kick);
            let g = Field::from_fn(spec, |x| {
                let r2 = (x[0] - c).powi(2) + x[1] * x[1];
                Complex64::from_polar((-r2 / (2.0 * w * w)).exp(), k * x[0])
            })
            .map_err(|e| Failure::Validation(e.to_string()))?;
            let m = mass(&g);
            if m.is_nan() || m <= 0.0 {
                return Err(Failure::Validation(
                    "initial Gaussian has zero mass on this grid".into(),
                ));
            }
            Ok(g.scale_real((mu / m).sqrt()))
        }
        InitSpec::GroundState => {
            let res = compute_ground_state(cfg, out)?;
            if !res.converged {
                return Err(Failure::Numerical(format!(
                    "ground state did not converge ({:?}, residual {:.3e})",
                    res.status, res.residual
                )));
            }
            Ok(res.u)
        }
        InitSpec::File(path) => {
            let file = fs::File::open(path)
                .map_err(|e| Failure::Io(format!("cannot open {}: {e}", path.display())))?;
            let loaded = read_field(std::io::BufReader::new(file))
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            if *loaded.field.spec() != spec {
                return Err(Failure::Validation(format!(
                    "{} was written on a different grid than grid.n/N/L",
                    path.display()
                )));
            }
            Ok(loaded.field)
        }
    }
}

fn run_check(cfg: &RunConfig, art: &mut Artifacts, out: &mut Outcome) -> Result<String, Failure> {
    let e = &cfg.exact;
    let mut p = ParameterSet::new(cfg.dim as u32, e.s.clone(), e.ell.clone())
        .map_err(|err| Failure::Validation(err.to_string()))?;
    p.p1 = e.p1.clone();
    p.p2 = e.p2.clone();
    p.q1 = e.q1.clone();
    p.q2 = e.q2.clone();
    p.radial = e.radial;
    p.v_bounded = true;
    p.a_bounded = true;
    p.b_bounded = true;
    p.beta = e.beta.clone();
    p.delta_f = e.delta_f.clone();
    p.sigma = e.sigma.clone();
    p.tail_integral_declared = e.tail_integral;
    let report = hypothesis_report(&p, cfg.q.as_ref(), Some(&cfg.model.potential))
        .map_err(|err| Failure::Validation(err.to_string()))?;
    let text = report.to_text();
    art.text("report.txt", &text)?;
    art.text("report.kv", &report.to_key_value())?;
    for v in &report.verdicts {
        out.summary
            .insert(v.statement.to_string(), json!(v.applies));
    }
    Ok(text)
}

fn run_ground_state(
    cfg: &RunConfig,
    art: &mut Artifacts,
    out: &mut Outcome,
) -> Result<String, Failure> {
    let res = compute_ground_state(cfg, out)?;
    art.field("ground_state.fwf", &res.u, cfg.model.order())?;
    art.text("ground_state.csv", &ground_state_csv(&res))?;
    out.summary.insert("I_mu".into(), json!(res.i_mu));
    out.summary.insert("residual".into(), json!(res.residual));
    out.summary
        .insert("iterations".into(), json!(res.iterations));
    out.summary.insert("converged".into(), json!(res.converged));
    if !res.converged {
        out.failure = Some(Failure::Numerical(format!(
            "ground-state flow stopped without converging ({:?}, residual {:.3e})",
            res.status, res.residual
        )));
    }
    Ok(format!(
        "I_mu = {:.12e}, omega = {:.12e}, residual = {:.3e}, {} iterations, {:?}\n",
        res.i_mu, res.omega, res.residual, res.iterations, res.status
    ))
}

fn run_evolve(cfg: &RunConfig, art: &mut Artifacts, out: &mut Outcome) -> Result<String, Failure> {
    let u0 = initial_field(cfg, out)?;
    let config = cfg.evolution.expect("validated");
    let order = cfg.model.order();
    let (evolution, bound) = if cfg.energy_bound {
        let (ev, rep) = energy_bound_run(&u0, &cfg.model, &config)?;
        (ev, Some(rep))
    } else {
        (
            evolve_observed(&u0, &cfg.model, &config, cfg.snapshot_stride, |_, _| {})?,
            None,
        )
    };
    out.warnings.extend(evolution.warnings.iter().cloned());
    art.text("trajectory.csv", &evolution.record.to_csv())?;
    art.field("final.fwf", &evolution.final_field, order)?;
    for (k, (_, snap)) in evolution.record.snapshots.iter().enumerate() {
        art.field(&format!("snapshots/snap_{k:05}.fwf"), snap, order)?;
    }
    let rec = &evolution.record;
    out.summary.insert(
        "max_relative_mass_drift".into(),
        json!(rec.max_relative_mass_drift()),
    );
    out.summary
        .insert("max_energy_drift".into(), json!(rec.max_energy_drift()));
    let mut text = format!(
        "{} records, max relative mass drift {:.3e}, max energy drift {:.3e}\n",
        rec.times.len(),
        rec.max_relative_mass_drift(),
        rec.max_energy_drift()
    );
    if let Some(rep) = bound {
        let mut csv = String::from("t,sobolev_sq,bound\n");
        for (t, v) in rep.times.iter().zip(&rep.sobolev_sq) {
            csv.push_str(&format!("{t},{v},{}\n", rep.bound));
        }
        art.text("energy_bound.csv", &csv)?;
        out.summary.insert("energy_bound".into(), json!(rep.bound));
        out.summary
            .insert("energy_bound_holds".into(), json!(rep.holds()));
        if !rep.holds() {
            out.warnings.push(format!(
                "H^s norm {:.6e} exceeds the energy bound {:.6e}",
                rep.max_sobolev_sq(),
                rep.bound
            ));
        }
        text.push_str(&format!(
            "energy bound {:.6e}, max ‖Φ‖²_Hs {:.6e}, holds: {}\n",
            rep.bound,
            rep.max_sobolev_sq(),
            rep.holds()
        ));
    }
    Ok(text)
}

fn run_stability(
    cfg: &RunConfig,
    art: &mut Artifacts,
    out: &mut Outcome,
) -> Result<String, Failure> {
    let task = cfg.stability.as_ref().expect("validated");
    let ground = compute_ground_state(cfg, out)?;
    art.field("ground_state.fwf", &ground.u, cfg.model.order())?;
    art.text("ground_state.csv", &ground_state_csv(&ground))?;
    let config = StabilityConfig {
        deltas: task.deltas.clone(),
        total_time: task.total_time,
        dt: task.dt,
        stride: task.stride,
        kind: task.kind,
    };
    let reports = run_stability_experiment(&cfg.model, &ground, &config)?;
    let mut summary = String::from(
        "delta,delta_in,initial_distance,sup_distance,ratio,mass_drift,energy_drift,blow_up\n",
    );
    for (k, rep) in reports.iter().enumerate() {
        art.text(&format!("stability_{k:02}.csv"), &rep.to_csv())?;
        let ratio = if rep.delta > 0.0 {
            rep.sup_distance / rep.delta
        } else {
            f64::NAN
        };
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            rep.delta,
            rep.delta_in,
            rep.initial_distance,
            rep.sup_distance,
            ratio,
            rep.mass_drift,
            rep.energy_drift,
            rep.blow_up.map(|t| t.to_string()).unwrap_or_default()
        ));
    }
    art.text("stability_summary.csv", &summary)?;
    let perturbed: Vec<_> = reports.iter().filter(|r| r.delta > 0.0).cloned().collect();
    let v = verdict(&perturbed, task.epsilon);
    out.summary.insert("verdict".into(), json!(v.to_string()));
    out.summary.insert("epsilon".into(), json!(task.epsilon));
    Ok(format!("verdict: {v} (ε = {})\n{summary}", task.epsilon))
}

fn run_probe_scaling(
    cfg: &RunConfig,
    art: &mut Artifacts,
    out: &mut Outcome,
) -> Result<String, Failure> {
    let psi = initial_field(cfg, out)?;
    let table = scaling_probe(&cfg.model, &psi, &cfg.lambdas)?;
    let mut csv = String::from("lambda,mass,J\n");
    for row in &table.rows {
        csv.push_str(&format!("{},{},{}\n", row.lambda, row.mass, row.energy));
    }
    art.text("scaling.csv", &csv)?;
    out.summary
        .insert("first_negative".into(), json!(table.first_negative));
    Ok(format!(
        "first λ with J < 0: {:?}\n{csv}",
        table.first_negative
    ))
}

fn run_probe_subadd(
    cfg: &RunConfig,
    art: &mut Artifacts,
    out: &mut Outcome,
) -> Result<String, Failure> {
    let mu = cfg.subadd_mu.expect("validated");
    let rows = subadditivity_probe(&cfg.model, &cfg.grid(), mu, &cfg.nus, &cfg.flow)?;
    let mut csv = String::from("nu,I_nu,I_rest,I_mu,gap,reliable\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.nu, r.i_nu, r.i_rest, r.i_mu, r.gap, r.reliable
        ));
    }
    art.text("subadditivity.csv", &csv)?;
    let reliable = rows.iter().all(|r| r.reliable);
    out.summary.insert("all_reliable".into(), json!(reliable));
    if !reliable {
        out.failure = Some(Failure::Numerical(
            "some ground-state sub-runs did not converge".into(),
        ));
    }
    Ok(csv)
}

fn run_probe_concentration(
    cfg: &RunConfig,
    art: &mut Artifacts,
    out: &mut Outcome,
) -> Result<String, Failure> {
    let u = initial_field(cfg, out)?;
    let profile = concentration_function(&u, &cfg.radii)?;
    let mut csv = String::from("r,m\n");
    for (r, m) in profile.radii.iter().zip(&profile.values) {
        csv.push_str(&format!("{r},{m}\n"));
    }
    art.text("concentration.csv", &csv)?;
    out.summary.insert("mass".into(), json!(mass(&u)));
    Ok(csv)
}

/// Runs the configured subcommand and writes `manifest.json` next to the
/// outputs. Validation and I/O failures before any output is produced are
/// returned as `Err`.
pub fn run(cfg: &RunConfig) -> Result<RunResult, Failure> {
    use crate::config::Subcommand::*;
    let start = Instant::now();
    let mut art = Artifacts::create(&cfg.out)?;
    let mut out = Outcome::default();
    let body = match cfg.subcommand {
        Check => run_check(cfg, &mut art, &mut out),
        GroundState => run_ground_state(cfg, &mut art, &mut out),
        Evolve => run_evolve(cfg, &mut art, &mut out),
        Stability => run_stability(cfg, &mut art, &mut out),
        ProbeScaling => run_probe_scaling(cfg, &mut art, &mut out),
        ProbeSubadd => run_probe_subadd(cfg, &mut art, &mut out),
        ProbeConcentration => run_probe_concentration(cfg, &mut art, &mut out),
    };
    let (report, failure) = match body {
        Ok(report) => (report, out.failure.take()),
        Err(f @ Failure::Io(_)) => return Err(f),
        Err(f) => (String::new(), Some(f)),
    };
    let status = match (&failure, art.files.is_empty()) {
        (None, _) => "ok",
        (Some(_), false) => "partial",
        (Some(_), true) => "failed",
    };
    let config: Map<String, Value> = cfg
        .effective
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    let manifest = json!({
        "subcommand": cfg.subcommand.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "status": status,
        "error": failure.as_ref().map(|f| f.message().to_string()),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "config": config,
        "outputs": art.files,
        "warnings": out.warnings,
        "summary": out.summary,
    });
    let path = cfg.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is valid JSON") + "\n";
    fs::write(&path, text)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    let report = if out.warnings.is_empty() {
        report
    } else {
        out.warnings
            .iter()
            .map(|w| format!("warning: {w}\n"))
            .collect::<String>()
            + &report
    };
    Ok(RunResult {
        manifest: path,
        failure,
        report,
    })
}
