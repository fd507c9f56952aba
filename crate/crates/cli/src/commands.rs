use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use curved_kepler::dynamics::{self, Method};
use curved_kepler::geometry::to_chart;
use curved_kepler::observables::Side;
use curved_kepler::report::{
    Envelope, RunInfo, SimulationBody, StateDocument, TrajectoryDocument,
};
use curved_kepler::verify::{self, LimitConfig, SUITES};
use curved_kepler::{Chart, ModelParams, Observable, ObservableId, PhasePoint, Trajectory, SCHEMA_VERSION};

use crate::config::{RunConfig, SetChoice, SEED_ENV};
use crate::{CliError, Command, Outcome};

pub fn dispatch(command: Command) -> Result<Outcome, CliError> {
    let env_seed = std::env::var(SEED_ENV).ok();
    match command {
        Command::Verify {
            common,
            suites,
            sample,
            tolerance,
        } => {
            let mut cfg = common.resolve()?;
            if !suites.is_empty() {
                cfg.verify.suites = suites;
            }
            if let Some(s) = sample {
                cfg.verify.sample = s;
            }
            if let Some(t) = tolerance {
                cfg.verify.tolerance = t;
            }
            cmd_verify(&cfg, env_seed.as_deref())
        }
        Command::Rank {
            common,
            points,
            expected_rank,
            set,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(p) = points {
                cfg.rank.points = p;
            }
            if expected_rank.is_some() {
                cfg.rank.expected_rank = expected_rank;
            }
            if let Some(set) = set {
                cfg.rank.set = serde_json::from_value(serde_json::Value::String(set.clone()))
                    .map_err(|_| CliError::Config(format!("unknown set '{set}' (maximal, quadratic)")))?;
            }
            cmd_rank(&cfg, env_seed.as_deref())
        }
        Command::Simulate {
            common,
            step,
            steps,
            method,
            csv,
            trajectory_json,
            drift_tolerance,
            closure_tolerance,
        } => {
            let mut cfg = common.resolve()?;
            let sim = &mut cfg.simulate;
            if let Some(h) = step {
                sim.integrator.step = h;
            }
            if let Some(n) = steps {
                sim.integrator.steps = n;
            }
            if let Some(m) = method {
                sim.integrator.method = m.parse::<Method>().map_err(|e| CliError::Config(e.to_string()))?;
            }
            if csv.is_some() {
                sim.csv = csv;
            }
            if trajectory_json.is_some() {
                sim.trajectory_json = trajectory_json;
            }
            if drift_tolerance.is_some() {
                sim.drift_tolerance = drift_tolerance;
            }
            if closure_tolerance.is_some() {
                sim.closure_tolerance = closure_tolerance;
            }
            cmd_simulate(&cfg, env_seed.as_deref())
        }
        Command::Transform { common, input, to } => {
            let mut cfg = common.resolve()?;
            if input.is_some() {
                cfg.transform.input = input;
            }
            if to.is_some() {
                cfg.transform.to = to;
            }
            cmd_transform(&cfg)
        }
        Command::Limits { common, points } => {
            let mut cfg = common.resolve()?;
            if let Some(p) = points {
                cfg.limits.points = p;
            }
            cmd_limits(&cfg, env_seed.as_deref())
        }
    }
}

fn run_info(cfg: &RunConfig, started: Instant) -> Option<RunInfo> {
    (!cfg.deterministic).then(|| RunInfo {
        generated_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    })
}

/// Progress line on stderr, suppressed by `quiet`.
macro_rules! note {
    ($cfg:expr, $($arg:tt)*) => {
        if !$cfg.quiet {
            eprintln!($($arg)*);
        }
    };
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, doc: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn finish<T: Serialize>(cfg: &RunConfig, mut doc: Envelope<T>, started: Instant) -> Result<Outcome, CliError> {
    doc.run = run_info(cfg, started);
    write_json(cfg.output.as_deref(), &doc)?;
    note!(cfg, "{}: {}", doc.kind, if doc.pass { "PASS" } else { "FAIL" });
    Ok(Outcome::from_pass(doc.pass))
}

/// Suites that build for `params`, in catalog order.
pub fn applicable_suites(params: &ModelParams) -> Vec<&'static str> {
    SUITES
        .iter()
        .copied()
        .filter(|name| verify::suite(name, params).is_ok())
        .collect()
}

pub fn cmd_verify(cfg: &RunConfig, env_seed: Option<&str>) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let params = cfg.params()?.clone();
    let seed = cfg.resolve_seed(env_seed)?;
    let chart = cfg.chart();
    let v = &cfg.verify;
    let names: Vec<String> = if v.suites.is_empty() {
        applicable_suites(&params).into_iter().map(String::from).collect()
    } else {
        v.suites.clone()
    };
    let mut reports = Vec::new();
    for name in &names {
        let specs = verify::suite(name, &params)?;
        reports.extend(verify::run_identity_suite(&specs, &params, chart, v.sample, seed, v.tolerance)?);
    }
    if v.involution {
        for side in [Side::Left, Side::Right] {
            let chain = verify::casimir_chain(&params, side);
            reports.push(verify::involution_check(&chain, &params, chart, v.sample, seed, v.tolerance)?);
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    for r in &reports {
        note!(
            cfg,
            "  [{}] {} max {:.2e}",
            if r.pass { "ok" } else { "FAIL" },
            r.identity,
            r.max_residual
        );
    }
    finish(cfg, Envelope::new("verify", seed, params, chart, pass, reports), started)
}

pub fn rank_set(cfg: &RunConfig, params: &ModelParams) -> Vec<ObservableId> {
    let mut set = match &cfg.rank.observables {
        Some(ids) => ids.clone(),
        None => match cfg.rank.set {
            SetChoice::Maximal => verify::maximal_set(params, 0),
            SetChoice::Quadratic => verify::quadratic_integrals(params),
        },
    };
    set.extend(cfg.rank.extra.iter().copied());
    set
}

pub fn cmd_rank(cfg: &RunConfig, env_seed: Option<&str>) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let params = cfg.params()?.clone();
    let seed = cfg.resolve_seed(env_seed)?;
    let chart = cfg.chart();
    let set = rank_set(cfg, &params);
    let report = verify::independence_campaign(&set, &params, chart, cfg.rank.points, seed, cfg.rank.sv_tolerance)?;
    note!(cfg, "  modal rank {} of {} functions", report.modal_rank, set.len());
    let pass = cfg.rank.expected_rank.is_none_or(|r| r == report.modal_rank);
    finish(cfg, Envelope::new("rank", seed, params, chart, pass, report), started)
}

/// `H`, every Casimir window and every hidden integral of the model.
pub fn default_logged(params: &ModelParams) -> Vec<ObservableId> {
    let n = params.dim();
    let mut ids = verify::quadratic_integrals(params);
    for i in 0..n {
        match verify::maximal_set(params, i).last() {
            Some(&id) if Observable::new(id, params).is_ok() => ids.push(id),
            _ => {}
        }
    }
    ids
}

fn write_csv(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let n = traj.states.first().map(PhasePoint::dim).unwrap_or(0);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("q_{i}")));
    header.extend((1..=n).map(|i| format!("p_{i}")));
    header.extend(traj.logs.iter().map(|l| l.name.clone()));
    w.write_record(&header).map_err(io)?;
    for (k, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(s.q.iter().chain(&s.p).map(f64::to_string));
        row.extend(traj.logs.iter().map(|l| l.values[k].to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn cmd_simulate(cfg: &RunConfig, env_seed: Option<&str>) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let params = cfg.params()?.clone();
    let seed = cfg.resolve_seed(env_seed)?;
    let sim = &cfg.simulate;
    sim.integrator.validate()?;
    let h = Observable::new(ObservableId::Hamiltonian, &params)?;
    let start = match &sim.start {
        Some(s) => {
            let s = PhasePoint::new(s.chart, s.q.clone(), s.p.clone())?;
            if cfg.chart.is_some() {
                to_chart(&s, cfg.chart(), params.kappa)?
            } else {
                s
            }
        }
        None => to_chart(
            &dynamics::sample_quasi_circular_start(&h, seed, sim.radius_band, sim.perturbation)?,
            cfg.chart(),
            params.kappa,
        )?,
    };
    let ids = sim.observables.clone().unwrap_or_else(|| default_logged(&params));
    let observables = ids
        .iter()
        .map(|&id| Observable::new(id, &params))
        .collect::<Result<Vec<_>, _>>()?;
    let traj = dynamics::integrate(&h, &start, &sim.integrator, &observables)?;
    let drifts = if observables.is_empty() {
        Vec::new()
    } else {
        dynamics::drift_report(&traj)?
    };
    let closure = match sim.closure_tolerance {
        Some(tol) => Some(dynamics::orbit_closure_check(&traj, tol)?),
        None => None,
    };
    let drift_ok = sim
        .drift_tolerance
        .is_none_or(|tol| drifts.iter().all(|d| d.max_drift <= tol));
    let closure_ok = closure.as_ref().is_none_or(|c| c.closed);
    for d in &drifts {
        note!(cfg, "  {} max drift {:.2e}", d.observable, d.max_drift);
    }
    let chart = start.chart;
    if let Some(path) = &sim.csv {
        write_csv(path, &traj)?;
    }
    if let Some(path) = &sim.trajectory_json {
        let mut doc: TrajectoryDocument = Envelope::new("trajectory", seed, params.clone(), chart, true, traj);
        doc.run = run_info(cfg, started);
        write_json(Some(path), &doc)?;
    }
    let body = SimulationBody {
        start,
        integrator: sim.integrator.clone(),
        drifts,
        drift_tolerance: sim.drift_tolerance,
        closure,
    };
    finish(cfg, Envelope::new("simulate", seed, params, chart, drift_ok && closure_ok, body), started)
}

pub fn cmd_transform(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let path = cfg
        .transform
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("transform needs an input state file (--input)".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let doc: StateDocument =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let kappa = curved_kepler::Curvature::new(doc.kappa)?;
    let state = PhasePoint::new(doc.state.chart, doc.state.q, doc.state.p)?;
    let target = cfg.transform.to.unwrap_or(match state.chart {
        Chart::Poincare => Chart::Beltrami,
        Chart::Beltrami => Chart::Poincare,
    });
    let out = StateDocument {
        schema_version: SCHEMA_VERSION,
        kappa: doc.kappa,
        state: to_chart(&state, target, kappa)?,
    };
    write_json(cfg.output.as_deref(), &out)?;
    Ok(Outcome::Pass)
}

pub fn cmd_limits(cfg: &RunConfig, env_seed: Option<&str>) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let params = cfg.params()?.clone();
    let seed = cfg.resolve_seed(env_seed)?;
    let l = &cfg.limits;
    let mut lc = LimitConfig::new(params.clone(), seed);
    lc.epsilons = l.epsilons.clone();
    lc.kappa_epsilon = l.kappa_epsilon;
    lc.points = l.points;
    lc.slope_tolerance = l.slope_tolerance;
    lc.continuity_tolerance = l.continuity_tolerance;
    lc.min_coord = l.min_coord;
    let report = verify::limit_checks(&lc)?;
    for r in &report.reports {
        note!(cfg, "  [{}] {} {:.2e}", if r.pass { "ok" } else { "FAIL" }, r.identity, r.max_residual);
    }
    let pass = report.pass;
    finish(cfg, Envelope::new("limits", seed, params, Chart::Beltrami, pass, report), started)
}
