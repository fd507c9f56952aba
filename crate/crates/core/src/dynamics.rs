//! Hamiltonian flows: exact vector fields, an implicit-midpoint integrator
//! for the non-separable curved Hamiltonians, an RK4 reference, and
//! conservation diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diffbracket::{gradient_raw, hessian_raw};
use crate::error::{Error, Result};
use crate::geometry::{symplectic_defect, validate_domain, Chart, PhasePoint};
use crate::observables::Observable;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    ImplicitMidpoint,
    /// Classical RK4; not symplectic, used as a cross-check.
    Rk4Reference,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit-midpoint" | "midpoint" => Ok(Method::ImplicitMidpoint),
            "rk4-reference" | "rk4" => Ok(Method::Rk4Reference),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub step: f64,
    pub steps: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    /// Abort when `|q_i| < wall_margin` for some `b_i != 0`.
    #[serde(default = "default_wall_margin")]
    pub wall_margin: f64,
}

fn default_newton_tol() -> f64 {
    1e-12
}
fn default_newton_max_iter() -> usize {
    25
}
fn default_wall_margin() -> f64 {
    1e-4
}

impl IntegratorConfig {
    pub fn new(step: f64, steps: usize, method: Method) -> Result<Self> {
        let cfg = Self {
            step,
            steps,
            method,
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            wall_margin: default_wall_margin(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad("step must be finite and > 0");
        }
        if self.steps == 0 {
            return bad("steps must be > 0");
        }
        if !(self.newton_tol >= 1e-13 && self.newton_tol.is_finite()) {
            return bad("newton_tol must be >= 1e-13");
        }
        if self.newton_max_iter == 0 {
            return bad("newton_max_iter must be > 0");
        }
        if !(self.wall_margin >= 0.0) {
            return bad("wall_margin must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableLog {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub logs: Vec<ObservableLog>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn log(&self, name: &str) -> Option<&[f64]> {
        self.logs.iter().find(|l| l.name == name).map(|l| l.values.as_slice())
    }
}

fn field(h: &Observable, chart: Chart, z: &[f64]) -> Result<Vec<f64>> {
    let n = z.len() / 2;
    let (gq, gp) = gradient_raw(h, chart, &z[..n], &z[n..])?;
    let mut out = gp;
    out.extend(gq.iter().map(|v| -v));
    Ok(out)
}

/// `(dq/dt, dp/dt) = (dH/dp, -dH/dq)`.
pub fn hamiltonian_vector_field(h: &Observable, point: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut z = field(h, point.chart, &point.to_state())?;
    let dp = z.split_off(point.dim());
    Ok((z, dp))
}

/// Jacobian of the vector field, `Omega * Hess(H)`.
fn field_jacobian(h: &Observable, chart: Chart, z: &[f64]) -> Result<DMatrix<f64>> {
    let n = z.len() / 2;
    let hess = hessian_raw(h, chart, z)?;
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for c in 0..2 * n {
        for r in 0..n {
            jac[(r, c)] = hess[(n + r, c)];
            jac[(n + r, c)] = -hess[(r, c)];
        }
    }
    Ok(jac)
}

fn check_state(h: &Observable, point: &PhasePoint, cfg: &IntegratorConfig, step: usize) -> Result<()> {
    if !validate_domain(point, h.params.kappa) {
        return Err(Error::DomainExit { step });
    }
    for (index, (&b, &q)) in h.params.b.iter().zip(&point.q).enumerate() {
        if b != 0.0 && q.abs() < cfg.wall_margin {
            return Err(Error::CentrifugalWallApproach {
                step,
                index,
                distance: q.abs(),
            });
        }
    }
    Ok(())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Failures inside a step are reported as leaving the domain.
fn in_step<T>(r: Result<T>, step: usize) -> Result<T> {
    r.map_err(|e| match e {
        Error::Domain(_) | Error::Origin | Error::CentrifugalSingularity { .. } => Error::DomainExit { step },
        other => other,
    })
}

fn midpoint_step(h: &Observable, chart: Chart, z0: &[f64], dt: f64, cfg: &IntegratorConfig, step: usize) -> Result<Vec<f64>> {
    let m = z0.len();
    let f0 = in_step(field(h, chart, z0), step)?;
    // explicit Euler predictor
    let mut z1: Vec<f64> = z0.iter().zip(&f0).map(|(a, b)| a + dt * b).collect();
    let mut last = f64::INFINITY;
    for _ in 0..cfg.newton_max_iter {
        let mid: Vec<f64> = z0.iter().zip(&z1).map(|(a, b)| 0.5 * (a + b)).collect();
        let fm = in_step(field(h, chart, &mid), step)?;
        let resid = DVector::from_fn(m, |i, _| z1[i] - z0[i] - dt * fm[i]);
        let jac = DMatrix::identity(m, m) - in_step(field_jacobian(h, chart, &mid), step)? * (0.5 * dt);
        let delta = jac.lu().solve(&resid).ok_or(Error::NewtonDivergence {
            step,
            residual: resid.amax(),
        })?;
        for (zi, d) in z1.iter_mut().zip(delta.iter()) {
            *zi -= d;
        }
        last = delta.amax();
        if !last.is_finite() {
            break;
        }
        if last <= cfg.newton_tol * inf_norm(&z1).max(1.0) {
            return Ok(z1);
        }
    }
    Err(Error::NewtonDivergence { step, residual: last })
}

fn rk4_step(h: &Observable, chart: Chart, z0: &[f64], dt: f64, step: usize) -> Result<Vec<f64>> {
    let axpy = |a: f64, x: &[f64]| -> Vec<f64> { z0.iter().zip(x).map(|(z, k)| z + a * k).collect() };
    let k1 = in_step(field(h, chart, z0), step)?;
    let k2 = in_step(field(h, chart, &axpy(0.5 * dt, &k1)), step)?;
    let k3 = in_step(field(h, chart, &axpy(0.5 * dt, &k2)), step)?;
    let k4 = in_step(field(h, chart, &axpy(dt, &k3)), step)?;
    Ok((0..z0.len())
        .map(|i| z0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// One step of signed length `dt` (negative values integrate backwards).
pub fn advance(h: &Observable, point: &PhasePoint, dt: f64, cfg: &IntegratorConfig) -> Result<PhasePoint> {
    advance_at(h, point, dt, cfg, 0)
}

fn advance_at(h: &Observable, point: &PhasePoint, dt: f64, cfg: &IntegratorConfig, step: usize) -> Result<PhasePoint> {
    let z0 = point.to_state();
    let z1 = match cfg.method {
        Method::ImplicitMidpoint => midpoint_step(h, point.chart, &z0, dt, cfg, step)?,
        Method::Rk4Reference => rk4_step(h, point.chart, &z0, dt, step)?,
    };
    let next = PhasePoint::from_state(point.chart, &z1);
    check_state(h, &next, cfg, step)?;
    Ok(next)
}

/// Integrate `cfg.steps` steps from `start`, logging `observables` at every
/// state including the initial one.
pub fn integrate(h: &Observable, start: &PhasePoint, cfg: &IntegratorConfig, observables: &[Observable]) -> Result<Trajectory> {
    cfg.validate()?;
    if start.dim() != h.params.dim() {
        return Err(Error::InvalidArgument(format!(
            "start has dimension {}, Hamiltonian has {}",
            start.dim(),
            h.params.dim()
        )));
    }
    check_state(h, start, cfg, 0)?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(cfg.steps + 1),
        states: Vec::with_capacity(cfg.steps + 1),
        logs: observables
            .iter()
            .map(|o| ObservableLog {
                name: o.name(),
                values: Vec::with_capacity(cfg.steps + 1),
            })
            .collect(),
    };
    let record = |traj: &mut Trajectory, t: f64, pt: PhasePoint, step: usize| -> Result<()> {
        for (log, o) in traj.logs.iter_mut().zip(observables) {
            log.values.push(in_step(o.eval(&pt), step)?);
        }
        traj.times.push(t);
        traj.states.push(pt);
        Ok(())
    };
    record(&mut traj, 0.0, start.clone(), 0)?;
    let mut current = start.clone();
    for step in 1..=cfg.steps {
        current = advance_at(h, &current, cfg.step, cfg, step)?;
        record(&mut traj, step as f64 * cfg.step, current.clone(), step)?;
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub observable: String,
    pub initial: f64,
    /// `max_t |f(t) - f(0)| / max(1, |f(0)|)`.
    pub max_drift: f64,
    pub final_drift: f64,
}

/// Relative drift of every logged observable.
pub fn drift_report(traj: &Trajectory) -> Result<Vec<Drift>> {
    if traj.logs.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no observable logs".into()));
    }
    Ok(traj
        .logs
        .iter()
        .map(|log| {
            let f0 = log.values.first().copied().unwrap_or(0.0);
            let scale = f0.abs().max(1.0);
            let rel = |v: f64| (v - f0).abs() / scale;
            Drift {
                observable: log.name.clone(),
                initial: f0,
                max_drift: log.values.iter().map(|&v| rel(v)).fold(0.0, f64::max),
                final_drift: log.values.last().map(|&v| rel(v)).unwrap_or(0.0),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Closure {
    pub closed: bool,
    pub recurrence_distance: f64,
    pub recurrence_time: f64,
}

fn distance(a: &PhasePoint, b: &PhasePoint) -> f64 {
    let (za, zb) = (a.to_state(), b.to_state());
    za.iter().zip(&zb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Smallest phase-space distance back to the start once the orbit has
/// turned around.
///
/// The search begins after the radius `|q|` has passed a local maximum and a
/// local minimum (one full radial oscillation has at least started and
/// ended a turning pair) and the state has moved at least half of its
/// largest excursion away from the start. A radius that never turns back
/// means the orbit is not bounded.
pub fn orbit_closure_check(traj: &Trajectory, tol: f64) -> Result<Closure> {
    if traj.len() < 3 {
        return Err(Error::InvalidArgument("trajectory too short for a closure check".into()));
    }
    let start = &traj.states[0];
    let r: Vec<f64> = traj.states.iter().map(|s| s.q2().sqrt()).collect();
    let has_max = (1..r.len() - 1).any(|i| r[i] > r[i - 1] && r[i] >= r[i + 1]);
    let d: Vec<f64> = traj.states.iter().map(|s| distance(s, start)).collect();
    let dmax = d.iter().cloned().fold(0.0, f64::max);
    let far = d.iter().position(|&x| x >= 0.5 * dmax).unwrap_or(0);
    // after the far point the distance has to come back down somewhere
    let tail_min = d[far..].iter().cloned().fold(f64::INFINITY, f64::min);
    let turns_back = tail_min < 0.5 * dmax;
    let radially_bounded = has_max || r.windows(2).all(|w| (w[1] - w[0]).abs() <= 1e-9 * w[0].max(1.0));
    if !turns_back || !radially_bounded {
        return Err(Error::NotBounded(format!(
            "radius {:.3e} -> {:.3e} never turned back over t = {}",
            r[0],
            r[r.len() - 1],
            traj.times[traj.len() - 1]
        )));
    }
    let (idx, mut best) = d
        .iter()
        .enumerate()
        .skip(far)
        .fold((far, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let mut time = traj.times[idx];
    // the closest approach usually falls between samples: project the start
    // onto the chords to the neighbouring samples
    let z0 = start.to_state();
    for (a, b) in [(idx.saturating_sub(1).max(far), idx), (idx, (idx + 1).min(d.len() - 1))] {
        if a == b {
            continue;
        }
        let (za, zb) = (traj.states[a].to_state(), traj.states[b].to_state());
        let seg: Vec<f64> = zb.iter().zip(&za).map(|(y, x)| y - x).collect();
        let len2: f64 = seg.iter().map(|v| v * v).sum();
        if len2 == 0.0 {
            continue;
        }
        let s = seg.iter().zip(za.iter().zip(&z0)).map(|(v, (x, o))| v * (o - x)).sum::<f64>() / len2;
        let s = s.clamp(0.0, 1.0);
        let dist = za
            .iter()
            .zip(&seg)
            .zip(&z0)
            .map(|((x, v), o)| (x + s * v - o).powi(2))
            .sum::<f64>()
            .sqrt();
        if dist < best {
            best = dist;
            time = traj.times[a] + s * (traj.times[b] - traj.times[a]);
        }
    }
    Ok(Closure {
        closed: best <= tol,
        recurrence_distance: best,
        recurrence_time: time,
    })
}

/// Finite-difference Jacobian of the one-step map and its symplectic defect
/// `max |M^T J M - J|`.
pub fn one_step_symplectic_defect(h: &Observable, point: &PhasePoint, cfg: &IntegratorConfig, fd_step: f64) -> Result<f64> {
    let z = point.to_state();
    let m = z.len();
    let mut jac = DMatrix::zeros(m, m);
    for c in 0..m {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[c] += fd_step;
        zm[c] -= fd_step;
        let fp = advance(h, &PhasePoint::from_state(point.chart, &zp), cfg.step, cfg)?.to_state();
        let fm = advance(h, &PhasePoint::from_state(point.chart, &zm), cfg.step, cfg)?.to_state();
        for r in 0..m {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * fd_step);
        }
    }
    Ok(symplectic_defect(&jac))
}

/// Forward `steps` steps then backward the same number; distance to start.
pub fn time_reversal_error(h: &Observable, start: &PhasePoint, cfg: &IntegratorConfig) -> Result<f64> {
    let mut pt = start.clone();
    for s in 0..cfg.steps {
        pt = advance_at(h, &pt, cfg.step, cfg, s + 1)?;
    }
    for s in 0..cfg.steps {
        pt = advance_at(h, &pt, -cfg.step, cfg, cfg.steps + s + 1)?;
    }
    Ok(distance(&pt, start))
}

/// Draws a bounded, nearly circular start for `h`.
///
/// `q` is placed at a random direction with every `|u_i| >= 0.3` (away from
/// the centrifugal walls) and radius `|q|` in `[0.35, 0.65] / sqrt(|kappa|)`
/// on the Poincaré chart (`[0.7, 1.3]` when flat). `p` is tangential with the
/// speed that makes `d^2 |q|^2 / dt^2 = 0`, then perturbed by a relative
/// amount up to `perturbation` in every component. Starts whose energy lies
/// above the escape threshold (`-K` for `kappa < 0`, `0` for `kappa = 0`)
/// are rejected.
pub fn sample_quasi_circular_start(h: &Observable, seed: u64, radius_band: (f64, f64), perturbation: f64) -> Result<PhasePoint> {
    use rand::{Rng, SeedableRng};
    let params = &h.params;
    let n = params.dim();
    let k = params.k();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let scale = if k == 0.0 { 2.0 } else { 1.0 / k.abs().sqrt() };
    let escape = if k < 0.0 {
        -params.coupling
    } else if k == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let normalize = |v: &mut Vec<f64>| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    };
    for _ in 0..1000 {
        let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut u);
        if u.iter().any(|x| x.abs() < 0.3) {
            continue;
        }
        let radius = scale * rng.gen_range(radius_band.0..radius_band.1);
        let q: Vec<f64> = u.iter().map(|x| x * radius).collect();
        // random tangent direction
        let mut t: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tu: f64 = t.iter().zip(&u).map(|(a, b)| a * b).sum();
        t.iter_mut().zip(&u).for_each(|(a, b)| *a -= tu * b);
        normalize(&mut t);
        let radial_accel = |s: f64| -> Result<f64> {
            let mut z = q.clone();
            z.extend(t.iter().map(|x| x * s));
            let x = field(h, Chart::Poincare, &z)?;
            let ax = field_jacobian(h, Chart::Poincare, &z)? * DVector::from_column_slice(&x);
            Ok((0..n).map(|i| x[i] * x[i] + q[i] * ax[i]).sum())
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        if radial_accel(lo)? >= 0.0 {
            continue;
        }
        while radial_accel(hi)? < 0.0 && hi < 1e3 {
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if radial_accel(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let speed = 0.5 * (lo + hi);
        let p: Vec<f64> = t
            .iter()
            .map(|x| x * speed * (1.0 + rng.gen_range(-perturbation..=perturbation)))
            .collect();
        let start = PhasePoint::poincare(q, p)?;
        if h.eval(&start)? < escape {
            return Ok(start);
        }
    }
    Err(Error::Sampler {
        attempts: 1000,
        reason: "no bounded quasi-circular start".into(),
    })
}
