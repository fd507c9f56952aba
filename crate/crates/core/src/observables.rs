//! Integrals of motion and symmetry generators as evaluable phase-space
//! functions.
//!
//! Every observable is written once, generically over [`Real`], in both
//! chart variants, so the same code yields values (`f64`) and exact
//! derivatives (`Dual`). Indices are 0-based in the API; [`Observable::name`]
//! prints the conventional 1-based labels (`J_12`, `L_1`, ...).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual::Real;
use crate::error::{Error, Result};
use crate::geometry::{dot_t, validate_domain, Chart, Curvature, PhasePoint};
use crate::models::{self, check_centrifugal, check_dim, check_origin, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Structured identifier of a catalog observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableId {
    /// The constant function 1.
    Unit,
    Position { i: usize },
    Momentum { i: usize },
    /// Generalized Hamiltonian of the model (the KC Hamiltonian when `b = 0`).
    Hamiltonian,
    /// `J_ij = q_i p_j - q_j p_i`, `i < j`.
    AngularMomentum { i: usize, j: usize },
    /// Curved translation generator `P_i`.
    Translation { i: usize },
    /// Sum of `J_ij^2` over the leading (left) or trailing (right) window of size `m`.
    Casimir { side: Side, m: usize },
    /// KC Laplace–Runge–Lenz component `L_i`.
    Lrl { i: usize },
    /// Centrifugal-dressed quadratic Casimir over a window of size `m`.
    GenCasimir { side: Side, m: usize },
    /// Quartic hidden integral of the generalized model.
    QuarticLrl { i: usize },
    /// Quadratic LRL component of a model with `b_i = 0`.
    QuasiLrl { i: usize },
    /// `J_12` (the Higgs number generator is `i J_12`), `N = 2` only.
    HiggsNumber,
    /// Real form of the quartic Higgs Casimir, `N = 2`, `b = 0`.
    HiggsCasimir,
    /// `2 (kappa |J|^2 - H)`, `b = 0`.
    Lambda,
    CoalgebraMinus,
    CoalgebraThree,
    CoalgebraPlus,
    CoalgebraCasimir,
}

impl ObservableId {
    /// False for raw coordinates and the coalgebra generators, whose values
    /// depend on the chart; every other observable is a function on phase
    /// space and takes the same value in both charts.
    pub fn is_chart_invariant(&self) -> bool {
        use ObservableId::*;
        !matches!(
            self,
            Position { .. } | Momentum { .. } | CoalgebraMinus | CoalgebraThree | CoalgebraPlus
        )
    }

    pub fn name(&self) -> String {
        use ObservableId::*;
        let side = |s: &Side, m: &usize, base: &str| match s {
            Side::Left => format!("{base}^({m})"),
            Side::Right => format!("{base}_({m})"),
        };
        match self {
            Unit => "1".into(),
            Position { i } => format!("q_{}", i + 1),
            Momentum { i } => format!("p_{}", i + 1),
            Hamiltonian => "H".into(),
            AngularMomentum { i, j } => format!("J_{}{}", i + 1, j + 1),
            Translation { i } => format!("P_{}", i + 1),
            Casimir { side: s, m } => side(s, m, "C"),
            Lrl { i } => format!("L_{}", i + 1),
            GenCasimir { side: s, m } => side(s, m, "Cg"),
            QuarticLrl { i } => format!("Lg_{}", i + 1),
            QuasiLrl { i } => format!("Lqg_{}", i + 1),
            HiggsNumber => "J_12(higgs)".into(),
            HiggsCasimir => "C_higgs".into(),
            Lambda => "Lambda".into(),
            CoalgebraMinus => "J_-".into(),
            CoalgebraThree => "J_3".into(),
            CoalgebraPlus => "J_+".into(),
            CoalgebraCasimir => "C_coalgebra".into(),
        }
    }
}

/// A catalog observable bound to model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub id: ObservableId,
    pub params: ModelParams,
}

fn index_err(msg: String) -> Error {
    Error::Index(msg)
}

impl Observable {
    /// Checks index ranges and model-class requirements.
    pub fn new(id: ObservableId, params: &ModelParams) -> Result<Self> {
        use ObservableId::*;
        let n = params.dim();
        let idx = |i: usize| {
            if i < n {
                Ok(())
            } else {
                Err(index_err(format!("index {i} out of range for N = {n}")))
            }
        };
        let window = |m: usize| {
            if (2..=n).contains(&m) {
                Ok(())
            } else {
                Err(index_err(format!("window size {m} must satisfy 2 <= m <= {n}")))
            }
        };
        let no_b = |what: &str| {
            if params.has_centrifugal() {
                Err(Error::ModelClass(format!("{what} requires all b_i = 0")))
            } else {
                Ok(())
            }
        };
        match id {
            Position { i } | Momentum { i } | Translation { i } | Lrl { i } | QuarticLrl { i } => idx(i)?,
            AngularMomentum { i, j } => {
                idx(j)?;
                if i >= j {
                    return Err(index_err(format!("J_ij needs i < j, got ({i}, {j})")));
                }
            }
            Casimir { m, .. } | GenCasimir { m, .. } => window(m)?,
            QuasiLrl { i } => {
                idx(i)?;
                if params.b[i] != 0.0 {
                    return Err(Error::ModelClass(format!(
                        "quasi-generalized LRL component {} needs b_{} = 0",
                        i + 1,
                        i + 1
                    )));
                }
            }
            HiggsNumber | HiggsCasimir => {
                if n != 2 {
                    return Err(index_err(format!("Higgs algebra needs N = 2, got {n}")));
                }
                if id == HiggsCasimir {
                    no_b("Higgs Casimir")?;
                }
            }
            Lambda => no_b("Lambda")?,
            Unit | Hamiltonian | CoalgebraMinus | CoalgebraThree | CoalgebraPlus | CoalgebraCasimir => {}
        }
        Ok(Self {
            id,
            params: params.clone(),
        })
    }

    pub fn name(&self) -> String {
        self.id.name()
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Evaluate on raw chart coordinates.
    pub fn eval_raw<T: Real>(&self, chart: Chart, q: &[T], p: &[T]) -> Result<T> {
        use ObservableId::*;
        let params = &self.params;
        check_dim(params, q, p)?;
        let k = params.k();
        Ok(match self.id {
            Unit => T::one(),
            Position { i } => q[i],
            Momentum { i } => p[i],
            Hamiltonian => models::hamiltonian(chart, params, q, p)?,
            AngularMomentum { i, j } => ang(q, p, i, j),
            Translation { i } => translations(chart, k, q, p)[i],
            Casimir { side, m } => casimir(q, p, window(side, m, params.dim())),
            Lrl { i } => {
                check_origin(q)?;
                lrl(chart, k, params.coupling, q, p, i)
            }
            GenCasimir { side, m } => {
                let w = window(side, m, params.dim());
                check_centrifugal(&params.b[w.clone()], &q[w.clone()]).map_err(|e| match e {
                    Error::CentrifugalSingularity { index } => Error::CentrifugalSingularity { index: index + w.start },
                    other => other,
                })?;
                gen_casimir(&params.b, q, p, w)
            }
            QuarticLrl { i } => {
                check_origin(q)?;
                check_centrifugal(&params.b, q)?;
                quartic_lrl(chart, params, q, p, i)
            }
            QuasiLrl { i } => {
                check_origin(q)?;
                check_centrifugal(&params.b, q)?;
                lrl(chart, k, params.coupling, q, p, i) - centrifugal_shift(chart, k, &params.b, q, i, Some(i))
            }
            HiggsNumber => ang(q, p, 0, 1),
            HiggsCasimir => {
                check_origin(q)?;
                let j = ang(q, p, 0, 1);
                let l1 = lrl(chart, k, params.coupling, q, p, 0);
                let l2 = lrl(chart, k, params.coupling, q, p, 1);
                let h = models::hamiltonian(chart, params, q, p)?;
                let j2 = j.sq();
                l1.sq() + l2.sq() + T::cst(k) * j2.sq() - (h * j2).scale(2.0)
            }
            Lambda => {
                let h = models::hamiltonian(chart, params, q, p)?;
                (T::cst(k) * casimir(q, p, 0..params.dim()) - h).scale(2.0)
            }
            CoalgebraMinus => models::coalgebra(params, q, p)?.j_minus,
            CoalgebraThree => models::coalgebra(params, q, p)?.j_three,
            CoalgebraPlus => models::coalgebra(params, q, p)?.j_plus,
            CoalgebraCasimir => models::coalgebra(params, q, p)?.casimir(),
        })
    }

    pub fn eval(&self, point: &PhasePoint) -> Result<f64> {
        require_domain(point, self.params.kappa)?;
        self.eval_raw(point.chart, &point.q, &point.p)
    }
}

fn require_domain(point: &PhasePoint, kappa: Curvature) -> Result<()> {
    if validate_domain(point, kappa) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "1 + kappa q^2 = {:e}",
            1.0 + kappa.value() * point.q2()
        )))
    }
}

pub(crate) fn window(side: Side, m: usize, n: usize) -> std::ops::Range<usize> {
    match side {
        Side::Left => 0..m,
        Side::Right => n - m..n,
    }
}

#[inline]
pub(crate) fn ang<T: Real>(q: &[T], p: &[T], i: usize, j: usize) -> T {
    q[i] * p[j] - q[j] * p[i]
}

/// `P_l` for all `l`.
pub(crate) fn translations<T: Real>(chart: Chart, kappa: f64, q: &[T], p: &[T]) -> Vec<T> {
    let k = T::cst(kappa);
    let kqp = k * dot_t(q, p);
    match chart {
        Chart::Poincare => {
            let half = (T::one() - k * dot_t(q, q)).scale(0.5);
            q.iter().zip(p).map(|(&ql, &pl)| half * pl + kqp * ql).collect()
        }
        Chart::Beltrami => q.iter().zip(p).map(|(&ql, &pl)| pl + kqp * ql).collect(),
    }
}

fn casimir<T: Real>(q: &[T], p: &[T], w: std::ops::Range<usize>) -> T {
    let mut acc = T::zero();
    for i in w.clone() {
        for j in i + 1..w.end {
            acc += ang(q, p, i, j).sq();
        }
    }
    acc
}

fn gen_casimir<T: Real>(b: &[f64], q: &[T], p: &[T], w: std::ops::Range<usize>) -> T {
    let mut acc = T::zero();
    for i in w.clone() {
        let qi2 = q[i].sq();
        for j in i + 1..w.end {
            let qj2 = q[j].sq();
            acc += ang(q, p, i, j).sq();
            if b[i] != 0.0 {
                acc += T::cst(b[i]) * qj2 / qi2;
            }
            if b[j] != 0.0 {
                acc += T::cst(b[j]) * qi2 / qj2;
            }
        }
        acc += T::cst(b[i]);
    }
    acc
}

/// `Σ_l P_l J_li + K q_i/|q|`.
fn lrl<T: Real>(chart: Chart, kappa: f64, coupling: f64, q: &[T], p: &[T], i: usize) -> T {
    let pt = translations(chart, kappa, q, p);
    let mut acc = T::zero();
    for (l, &pl) in pt.iter().enumerate() {
        if l != i {
            acc += pl * ang(q, p, l, i);
        }
    }
    acc + T::cst(coupling) * q[i] / dot_t(q, q).sqrt()
}

/// Centrifugal correction to `L_i`, summed over `l != skip`:
/// `(1 - k q^2) Σ b_l q_i / (2 q_l^2)` (Poincaré) or `Σ b_l q_i / q_l^2` (Beltrami).
fn centrifugal_shift<T: Real>(chart: Chart, kappa: f64, b: &[f64], q: &[T], i: usize, skip: Option<usize>) -> T {
    let mut sum = T::zero();
    for (l, (&bl, &ql)) in b.iter().zip(q).enumerate() {
        if Some(l) != skip && bl != 0.0 {
            sum += T::cst(bl) / ql.sq();
        }
    }
    match chart {
        Chart::Poincare => (T::one() - T::cst(kappa) * dot_t(q, q)) * sum * q[i].scale(0.5),
        Chart::Beltrami => sum * q[i],
    }
}

fn quartic_lrl<T: Real>(chart: Chart, params: &ModelParams, q: &[T], p: &[T], i: usize) -> T {
    let k = params.k();
    let b = &params.b;
    let shifted = lrl(chart, k, params.coupling, q, p, i) - centrifugal_shift(chart, k, b, q, i, None);
    let mut out = shifted.sq();
    if b[i] != 0.0 {
        let pt = translations(chart, k, q, p);
        let pq = dot_t(&pt, q);
        out += T::cst(b[i]) / q[i].sq() * pq.sq();
    }
    out
}

fn check_point(point: &PhasePoint, params: &ModelParams) -> Result<()> {
    require_domain(point, params.kappa)?;
    check_dim(params, &point.q, &point.p)
}

pub fn eval_angular_momentum(i: usize, j: usize, point: &PhasePoint) -> Result<f64> {
    let n = point.dim();
    if !(i < j && j < n) {
        return Err(index_err(format!("J_ij needs 0 <= i < j < {n}, got ({i}, {j})")));
    }
    Ok(ang(&point.q, &point.p, i, j))
}

pub fn eval_translation(i: usize, point: &PhasePoint, kappa: Curvature) -> Result<f64> {
    require_domain(point, kappa)?;
    if i >= point.dim() {
        return Err(index_err(format!("index {i} out of range")));
    }
    Ok(translations(point.chart, kappa.value(), &point.q, &point.p)[i])
}

pub fn eval_casimir(side: Side, m: usize, point: &PhasePoint) -> Result<f64> {
    let n = point.dim();
    if !(2..=n).contains(&m) {
        return Err(index_err(format!("window size {m} must satisfy 2 <= m <= {n}")));
    }
    Ok(casimir(&point.q, &point.p, window(side, m, n)))
}

pub fn eval_lrl(i: usize, point: &PhasePoint, params: &ModelParams) -> Result<f64> {
    check_point(point, params)?;
    Observable::new(ObservableId::Lrl { i }, params)?.eval(point)
}

pub fn eval_gen_casimir(side: Side, m: usize, point: &PhasePoint, params: &ModelParams) -> Result<f64> {
    check_point(point, params)?;
    Observable::new(ObservableId::GenCasimir { side, m }, params)?.eval(point)
}

pub fn eval_quartic_lrl(i: usize, point: &PhasePoint, params: &ModelParams) -> Result<f64> {
    check_point(point, params)?;
    Observable::new(ObservableId::QuarticLrl { i }, params)?.eval(point)
}

pub fn eval_quasi_lrl(i: usize, point: &PhasePoint, params: &ModelParams) -> Result<f64> {
    check_point(point, params)?;
    Observable::new(ObservableId::QuasiLrl { i }, params)?.eval(point)
}

pub fn eval_lambda(point: &PhasePoint, params: &ModelParams) -> Result<f64> {
    check_point(point, params)?;
    Observable::new(ObservableId::Lambda, params)?.eval(point)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiggsKind {
    Number,
    Plus,
    Minus,
    Casimir,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HiggsValue {
    Real(f64),
    Complex(Complex64),
}

/// Higgs-algebra generators of the planar KC system: `L = i J_12`,
/// `L± = L_1 ± i L_2`, and the real Casimir
/// `L_1^2 + L_2^2 + kappa J_12^4 - 2 H J_12^2`.
pub fn eval_higgs(kind: HiggsKind, point: &PhasePoint, params: &ModelParams) -> Result<HiggsValue> {
    check_point(point, params)?;
    if params.dim() != 2 {
        return Err(index_err(format!("Higgs algebra needs N = 2, got {}", params.dim())));
    }
    if params.has_centrifugal() {
        return Err(Error::ModelClass("Higgs algebra requires all b_i = 0".into()));
    }
    let l = |i| eval_lrl(i, point, params);
    Ok(match kind {
        HiggsKind::Number => HiggsValue::Complex(Complex64::new(0.0, ang(&point.q, &point.p, 0, 1))),
        HiggsKind::Plus => HiggsValue::Complex(Complex64::new(l(0)?, l(1)?)),
        HiggsKind::Minus => HiggsValue::Complex(Complex64::new(l(0)?, -l(1)?)),
        HiggsKind::Casimir => HiggsValue::Real(Observable::new(ObservableId::HiggsCasimir, params)?.eval(point)?),
    })
}

/// Every observable applicable to `params`.
pub fn catalog(params: &ModelParams) -> Vec<Observable> {
    use ObservableId::*;
    let n = params.dim();
    let mut ids = vec![Hamiltonian];
    for i in 0..n {
        for j in i + 1..n {
            ids.push(AngularMomentum { i, j });
        }
    }
    ids.extend((0..n).map(|i| Translation { i }));
    for m in 2..=n {
        for side in [Side::Left, Side::Right] {
            ids.push(Casimir { side, m });
            ids.push(GenCasimir { side, m });
        }
    }
    ids.extend((0..n).map(|i| Lrl { i }));
    ids.extend((0..n).map(|i| QuarticLrl { i }));
    ids.extend((0..n).map(|i| QuasiLrl { i }));
    ids.extend([HiggsNumber, HiggsCasimir, Lambda]);
    ids.extend([CoalgebraMinus, CoalgebraThree, CoalgebraPlus, CoalgebraCasimir]);
    ids.into_iter()
        .filter_map(|id| Observable::new(id, params).ok())
        .collect()
}
