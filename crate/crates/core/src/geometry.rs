//! Poincaré and Beltrami phase-space charts of the constant-curvature spaces.
//!
//! Both charts come from projecting the ambient constraint surface
//! `x0^2 + kappa x^2 = 1` in `R^{N+1}` onto `R^N`: stereographically from the
//! pole `(-1, 0)` (Poincaré, coordinates `q`) or centrally from the origin
//! (Beltrami, coordinates `q~`). The two sets of canonical variables are
//! related by an explicit canonical transformation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Poincare,
    Beltrami,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::Poincare => "poincare",
            Chart::Beltrami => "beltrami",
        }
    }
}

impl std::str::FromStr for Chart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poincare" | "poincaré" => Ok(Chart::Poincare),
            "beltrami" => Ok(Chart::Beltrami),
            other => Err(Error::InvalidArgument(format!("unknown chart '{other}'"))),
        }
    }
}

/// Sectional curvature. The sign selects S^N, E^N or H^N.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa.is_finite() {
            Ok(Self(kappa))
        } else {
            Err(Error::InvalidArgument(format!("curvature must be finite, got {kappa}")))
        }
    }

    pub const FLAT: Curvature = Curvature(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Canonical coordinates `(q, p)` in one of the two charts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasePoint {
    pub chart: Chart,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(chart: Chart, q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() || q.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "q and p must have equal nonzero length (got {} and {})",
                q.len(),
                p.len()
            )));
        }
        Ok(Self { chart, q, p })
    }

    pub fn poincare(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        Self::new(Chart::Poincare, q, p)
    }

    pub fn beltrami(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        Self::new(Chart::Beltrami, q, p)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q2(&self) -> f64 {
        dot(&self.q, &self.q)
    }

    /// Flattened state `(q_1..q_N, p_1..p_N)`.
    pub fn to_state(&self) -> Vec<f64> {
        let mut z = self.q.clone();
        z.extend_from_slice(&self.p);
        z
    }

    pub fn from_state(chart: Chart, z: &[f64]) -> Self {
        let n = z.len() / 2;
        Self {
            chart,
            q: z[..n].to_vec(),
            p: z[n..].to_vec(),
        }
    }
}

/// Point on the ambient constraint surface, with the projection factor
/// (`lambda` for Poincaré, `mu` for Beltrami) that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub x0: f64,
    pub x: Vec<f64>,
    pub projection_factor: f64,
}

impl AmbientPoint {
    /// `x0^2 + kappa x^2 - 1`.
    pub fn constraint_defect(&self, kappa: Curvature) -> f64 {
        self.x0 * self.x0 + kappa.value() * dot(&self.x, &self.x) - 1.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dot_t<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// True iff every coordinate is finite and `1 + kappa q^2 > 0`.
pub fn validate_domain(point: &PhasePoint, kappa: Curvature) -> bool {
    point.q.iter().chain(&point.p).all(|v| v.is_finite())
        && 1.0 + kappa.value() * point.q2() > 0.0
}

fn require_domain(point: &PhasePoint, kappa: Curvature) -> Result<()> {
    if validate_domain(point, kappa) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "1 + kappa q^2 = {:e} for kappa = {}",
            1.0 + kappa.value() * point.q2(),
            kappa.value()
        )))
    }
}

fn require_chart(point: &PhasePoint, chart: Chart) -> Result<()> {
    if point.chart == chart {
        Ok(())
    } else {
        Err(Error::ChartMismatch {
            expected: chart.name(),
            found: point.chart.name(),
        })
    }
}

pub fn to_ambient(point: &PhasePoint, kappa: Curvature) -> Result<AmbientPoint> {
    require_domain(point, kappa)?;
    let k = kappa.value();
    let q2 = point.q2();
    Ok(match point.chart {
        Chart::Poincare => {
            let lambda = 2.0 / (1.0 + k * q2);
            AmbientPoint {
                x0: lambda - 1.0,
                x: point.q.iter().map(|qi| lambda * qi).collect(),
                projection_factor: lambda,
            }
        }
        Chart::Beltrami => {
            let mu = 1.0 / (1.0 + k * q2).sqrt();
            AmbientPoint {
                x0: mu,
                x: point.q.iter().map(|qi| mu * qi).collect(),
                projection_factor: mu,
            }
        }
    })
}

/// Poincaré → Beltrami on raw coordinates, generic so the Jacobian can be
/// taken with dual numbers.
pub fn poincare_to_beltrami_coords<T: Real>(q: &[T], p: &[T], kappa: f64) -> (Vec<T>, Vec<T>) {
    let k = T::cst(kappa);
    let q2 = dot_t(q, q);
    let qp = dot_t(q, p);
    let minus = T::one() - k * q2;
    let plus = T::one() + k * q2;
    let qt = q.iter().map(|&qi| qi.scale(2.0) / minus).collect();
    let factor = minus / (plus.scale(2.0));
    let pt = q
        .iter()
        .zip(p)
        .map(|(&qi, &pi)| factor * (plus * pi - (k * qi * qp).scale(2.0)))
        .collect();
    (qt, pt)
}

pub fn beltrami_to_poincare_coords<T: Real>(qt: &[T], pt: &[T], kappa: f64) -> (Vec<T>, Vec<T>) {
    let k = T::cst(kappa);
    let qt2 = dot_t(qt, qt);
    let qtpt = dot_t(qt, pt);
    let s = T::one() + (T::one() + k * qt2).sqrt();
    let q = qt.iter().map(|&v| v / s).collect();
    let p = qt
        .iter()
        .zip(pt)
        .map(|(&qi, &pi)| s * pi + k * qi * qtpt)
        .collect();
    (q, p)
}

pub fn poincare_to_beltrami(point: &PhasePoint, kappa: Curvature) -> Result<PhasePoint> {
    require_chart(point, Chart::Poincare)?;
    require_domain(point, kappa)?;
    let minus = 1.0 - kappa.value() * point.q2();
    // equator (= 0) or the hemisphere the Beltrami chart does not cover (< 0)
    if minus <= 0.0 {
        return Err(Error::ChartSingular(minus));
    }
    let (q, p) = poincare_to_beltrami_coords(&point.q, &point.p, kappa.value());
    Ok(PhasePoint {
        chart: Chart::Beltrami,
        q,
        p,
    })
}

pub fn beltrami_to_poincare(point: &PhasePoint, kappa: Curvature) -> Result<PhasePoint> {
    require_chart(point, Chart::Beltrami)?;
    require_domain(point, kappa)?;
    let (q, p) = beltrami_to_poincare_coords(&point.q, &point.p, kappa.value());
    Ok(PhasePoint {
        chart: Chart::Poincare,
        q,
        p,
    })
}

/// Express `point` in `chart`, converting if needed.
pub fn to_chart(point: &PhasePoint, chart: Chart, kappa: Curvature) -> Result<PhasePoint> {
    match (point.chart, chart) {
        (a, b) if a == b => {
            require_domain(point, kappa)?;
            Ok(point.clone())
        }
        (Chart::Poincare, Chart::Beltrami) => poincare_to_beltrami(point, kappa),
        _ => beltrami_to_poincare(point, kappa),
    }
}

/// Geodesic distance from the origin, principal branch for `kappa > 0`.
pub fn geodesic_radius(point: &PhasePoint, kappa: Curvature) -> Result<f64> {
    require_domain(point, kappa)?;
    let k = kappa.value();
    let q2 = point.q2();
    if q2 == 0.0 {
        return Err(Error::Origin);
    }
    // |q~|, the Beltrami radius
    let rho = match point.chart {
        Chart::Beltrami => q2.sqrt(),
        Chart::Poincare => {
            let minus = 1.0 - k * q2;
            if minus <= 0.0 {
                // beyond the equator of S^N: no principal-branch radius
                return Err(Error::ChartSingular(minus));
            }
            2.0 * q2.sqrt() / minus
        }
    };
    Ok(if k > 0.0 {
        let s = k.sqrt();
        (s * rho).atan() / s
    } else if k < 0.0 {
        let s = (-k).sqrt();
        (s * rho).atanh() / s
    } else {
        rho
    })
}

/// Jacobian of the Poincaré → Beltrami map at a Poincaré point, as a
/// `2N x 2N` matrix acting on `(q, p)`.
pub fn transform_jacobian(point: &PhasePoint, kappa: Curvature) -> Result<DMatrix<f64>> {
    poincare_to_beltrami(point, kappa)?;
    let n = point.dim();
    let z = point.to_state();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for col in 0..2 * n {
        let zd: Vec<Dual<f64>> = z
            .iter()
            .enumerate()
            .map(|(k, &v)| Dual::new(v, if k == col { 1.0 } else { 0.0 }))
            .collect();
        let (qt, pt) = poincare_to_beltrami_coords(&zd[..n], &zd[n..], kappa.value());
        for (row, v) in qt.iter().chain(&pt).enumerate() {
            m[(row, col)] = v.deriv;
        }
    }
    Ok(m)
}

/// Standard symplectic matrix `[[0, I], [-I, 0]]`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Max-entry norm of `M^T J M - J`.
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() / 2;
    let j = symplectic_form(n);
    (m.transpose() * &j * m - j).amax()
}

/// Draws well-conditioned phase points on the Poincaré chart.
///
/// `q` is uniform in the ball `q^2 < 0.9/|kappa|` (or the cube `[-2, 2]^N`
/// when flat), `p` uniform in `[-2, 2]^N`. Points with `|q| < min_coord`
/// are always rejected; with centrifugal terms active every `|q_i|` must
/// also exceed `min_coord`.
#[derive(Debug, Clone)]
pub struct PointSampler {
    kappa: Curvature,
    dim: usize,
    centrifugal: bool,
    rng: ChaCha8Rng,
    pub min_coord: f64,
    pub momentum_box: f64,
    pub max_attempts: usize,
}

impl PointSampler {
    pub fn new(kappa: Curvature, dim: usize, centrifugal: bool, seed: u64) -> Self {
        Self {
            kappa,
            dim,
            centrifugal,
            rng: ChaCha8Rng::seed_from_u64(seed),
            min_coord: 1e-3,
            momentum_box: 2.0,
            max_attempts: 10_000,
        }
    }

    fn radius_bound(&self) -> Option<f64> {
        let k = self.kappa.value();
        (k != 0.0).then(|| (0.9 / k.abs()).sqrt())
    }

    /// Next Poincaré point.
    pub fn sample(&mut self) -> Result<PhasePoint> {
        let bound = self.radius_bound();
        let half = bound.unwrap_or(2.0);
        for _ in 0..self.max_attempts {
            let q: Vec<f64> = (0..self.dim)
                .map(|_| self.rng.gen_range(-half..half))
                .collect();
            let q2 = dot(&q, &q);
            if let Some(r) = bound {
                if q2 >= r * r {
                    continue;
                }
            }
            if q2.sqrt() < self.min_coord {
                continue;
            }
            if self.centrifugal && q.iter().any(|v| v.abs() < self.min_coord) {
                continue;
            }
            let pb = self.momentum_box;
            let p = (0..self.dim).map(|_| self.rng.gen_range(-pb..pb)).collect();
            return Ok(PhasePoint {
                chart: Chart::Poincare,
                q,
                p,
            });
        }
        Err(Error::Sampler {
            attempts: self.max_attempts,
            reason: format!("no valid point for kappa = {}", self.kappa.value()),
        })
    }

    pub fn sample_in(&mut self, chart: Chart) -> Result<PhasePoint> {
        let pt = self.sample()?;
        to_chart(&pt, chart, self.kappa)
    }

    pub fn sample_many(&mut self, chart: Chart, count: usize) -> Result<Vec<PhasePoint>> {
        (0..count).map(|_| self.sample_in(chart)).collect()
    }
}
