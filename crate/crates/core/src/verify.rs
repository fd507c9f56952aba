//! Verification campaigns: bracket identities, involution, functional
//! independence and degenerate limits, evaluated over sampled phase points.
//!
//! Every campaign is deterministic given its seed. Per-point work runs in
//! parallel, but results are collected in sample order and reduced
//! sequentially so reports are bit-identical across runs.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffbracket::{bracket, gradient, BracketValue};
use crate::error::{Error, Result};
use crate::geometry::{dot, Chart, PhasePoint, PointSampler};
use crate::models::{ModelClass, ModelParams};
use crate::observables::{Observable, ObservableId as Id, Side};

/// Bracket residual tolerance with exact gradients.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Relative singular-value cutoff for numerical rank.
pub const DEFAULT_SV_TOLERANCE: f64 = 1e-8;

/// Left-hand side of an identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lhs {
    Bracket(Id, Id),
    Value(Id),
}

/// `coeff * Π factors` (the empty product is 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<Id>,
}

impl Term {
    pub fn new(coeff: f64, factors: Vec<Id>) -> Self {
        Self { coeff, factors }
    }
}

/// Right-hand side of an identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rhs {
    Zero,
    Terms(Vec<Term>),
    /// Closed form of `{H, P_i}` for the KC Hamiltonian.
    KcTranslationSource { i: usize },
    /// Closed form of `{H^g, J_ij}`.
    GenAngularSource { i: usize, j: usize },
    /// Closed form of `{H^g, P_i}`.
    GenTranslationSource { i: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySpec {
    pub name: String,
    pub lhs: Lhs,
    pub rhs: Rhs,
    pub anchor: String,
}

impl IdentitySpec {
    fn bracket(name: impl Into<String>, f: Id, g: Id, rhs: Rhs, anchor: &str) -> Self {
        Self {
            name: name.into(),
            lhs: Lhs::Bracket(f, g),
            rhs,
            anchor: anchor.to_string(),
        }
    }

    fn commutes(f: Id, g: Id, anchor: &str) -> Self {
        Self::bracket(format!("{{{}, {}}} = 0", f.name(), g.name()), f, g, Rhs::Zero, anchor)
    }

    /// Residual `|lhs - rhs| / max(scale, 1)` at one point.
    pub fn residual(&self, params: &ModelParams, point: &PhasePoint) -> Result<f64> {
        let obs = |id: Id| Observable::new(id, params);
        let lhs = match &self.lhs {
            Lhs::Bracket(f, g) => bracket(&obs(*f)?, &obs(*g)?, point)?,
            Lhs::Value(f) => {
                let v = obs(*f)?.eval(point)?;
                BracketValue {
                    value: v,
                    scale: v.abs(),
                }
            }
        };
        let (rhs, rhs_scale) = eval_rhs(&self.rhs, params, point)?;
        Ok((lhs.value - rhs).abs() / lhs.scale.max(rhs_scale).max(1.0))
    }
}

fn eval_rhs(rhs: &Rhs, params: &ModelParams, point: &PhasePoint) -> Result<(f64, f64)> {
    let q = &point.q;
    let k = params.k();
    let q2 = point.q2();
    let r = q2.sqrt();
    let kk = params.coupling;
    let b = &params.b;
    let v = match rhs {
        Rhs::Zero => 0.0,
        Rhs::Terms(terms) => {
            let mut sum = 0.0;
            let mut scale: f64 = 0.0;
            for t in terms {
                let mut prod = t.coeff;
                for f in &t.factors {
                    prod *= Observable::new(*f, params)?.eval(point)?;
                }
                sum += prod;
                scale = scale.max(prod.abs());
            }
            return Ok((sum, scale));
        }
        Rhs::KcTranslationSource { i } => match point.chart {
            Chart::Poincare => kk * q[*i] * (1.0 + k * q2).powi(2) / (4.0 * r.powi(3)),
            Chart::Beltrami => kk * q[*i] * (1.0 + k * q2) / r.powi(3),
        },
        Rhs::GenAngularSource { i, j } => {
            let (qi, qj) = (q[*i], q[*j]);
            let num = b[*i] * qj.powi(4) - b[*j] * qi.powi(4);
            match point.chart {
                Chart::Poincare => num / (4.0 * qi.powi(3) * qj.powi(3)) * (1.0 + k * q2).powi(2),
                Chart::Beltrami => num / (qi.powi(3) * qj.powi(3)) * (1.0 + k * q2),
            }
        }
        Rhs::GenTranslationSource { i } => {
            let qi = q[*i];
            match point.chart {
                Chart::Poincare => {
                    (2.0 * kk * qi.powi(4) - b[*i] * r.powi(3) * (1.0 - k * q2)) / (8.0 * qi.powi(3) * r.powi(3))
                        * (1.0 + k * q2).powi(2)
                }
                Chart::Beltrami => (kk * qi.powi(4) - b[*i] * r.powi(3)) / (qi.powi(3) * r.powi(3)) * (1.0 + k * q2),
            }
        }
    };
    Ok((v, v.abs()))
}

/// Residual statistics of one identity over a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraReport {
    pub identity: String,
    pub anchor: String,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

impl AlgebraReport {
    fn from_residuals(name: &str, anchor: &str, residuals: &[f64], tolerance: f64, seed: u64) -> Self {
        let max = residuals.iter().cloned().fold(0.0, f64::max);
        let mean = if residuals.is_empty() {
            0.0
        } else {
            residuals.iter().sum::<f64>() / residuals.len() as f64
        };
        Self {
            identity: name.to_string(),
            anchor: anchor.to_string(),
            samples: residuals.len(),
            max_residual: max,
            mean_residual: mean,
            tolerance,
            pass: max <= tolerance,
            seed,
        }
    }
}

/// Draw `count` valid points for `params` in `chart`.
pub fn sample_points(params: &ModelParams, chart: Chart, count: usize, seed: u64) -> Result<Vec<PhasePoint>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut sampler = PointSampler::new(params.kappa, params.dim(), params.has_centrifugal(), seed);
    sampler.sample_many(chart, count)
}

/// Evaluate every identity at `sample` points drawn with `seed`.
pub fn run_identity_suite(
    suite: &[IdentitySpec],
    params: &ModelParams,
    chart: Chart,
    sample: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Vec<AlgebraReport>> {
    let points = sample_points(params, chart, sample, seed)?;
    suite
        .iter()
        .map(|spec| {
            let residuals = points
                .par_iter()
                .map(|pt| spec.residual(params, pt))
                .collect::<Result<Vec<f64>>>()?;
            Ok(AlgebraReport::from_residuals(&spec.name, &spec.anchor, &residuals, tolerance, seed))
        })
        .collect()
}

/// All pairwise brackets within `set` must vanish.
pub fn involution_check(
    set: &[Id],
    params: &ModelParams,
    chart: Chart,
    sample: usize,
    seed: u64,
    tolerance: f64,
) -> Result<AlgebraReport> {
    let observables = set
        .iter()
        .map(|&id| Observable::new(id, params))
        .collect::<Result<Vec<_>>>()?;
    let points = sample_points(params, chart, sample, seed)?;
    let per_point = points
        .par_iter()
        .map(|pt| {
            let mut worst: f64 = 0.0;
            for a in 0..observables.len() {
                for b in a + 1..observables.len() {
                    worst = worst.max(bracket(&observables[a], &observables[b], pt)?.relative());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let names: Vec<String> = set.iter().map(|id| id.name()).collect();
    Ok(AlgebraReport::from_residuals(
        &format!("involution {{{}}}", names.join(", ")),
        "functionally independent functions in involution",
        &per_point,
        tolerance,
        seed,
    ))
}

/// `{H, C^(2..N)}` (left) or `{H, C_(2..N)}` (right), dressed with the
/// centrifugal terms when `params` has any.
pub fn casimir_chain(params: &ModelParams, side: Side) -> Vec<Id> {
    let mut ids = vec![Id::Hamiltonian];
    ids.extend((2..=params.dim()).map(|m| Id::GenCasimir { side, m }));
    ids
}

/// `{H, C^(m), C_(m) (m < N)}`: the `2N - 2` quadratic integrals.
pub fn quadratic_integrals(params: &ModelParams) -> Vec<Id> {
    let n = params.dim();
    let mut ids = casimir_chain(params, Side::Left);
    ids.extend((2..n).map(|m| Id::GenCasimir { side: Side::Right, m }));
    ids
}

/// Quadratic integrals plus the hidden integral for index `i`: the
/// `2N - 1` functions claimed to be functionally independent.
pub fn maximal_set(params: &ModelParams, i: usize) -> Vec<Id> {
    let mut ids = quadratic_integrals(params);
    ids.push(match params.class() {
        ModelClass::Kc => Id::Lrl { i },
        ModelClass::Generalized => Id::QuarticLrl { i },
        _ if params.b[i] == 0.0 => Id::QuasiLrl { i },
        _ => Id::QuarticLrl { i },
    });
    ids
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub observables: Vec<String>,
    pub points: usize,
    pub sv_tolerance: f64,
    /// Singular values of the row-normalized stacked-gradient matrix, per point.
    pub singular_values: Vec<Vec<f64>>,
    pub ranks: Vec<usize>,
    /// Smallest accepted over largest rejected singular value (absent at full rank).
    pub gap_ratios: Vec<Option<f64>>,
    pub modal_rank: usize,
    /// Points whose rank differs from the modal rank.
    pub low_rank_points: Vec<usize>,
    /// Points skipped because every gradient vanished.
    pub degenerate_points: Vec<usize>,
}

struct PointRank {
    singular_values: Vec<f64>,
    rank: usize,
    gap: Option<f64>,
}

fn point_rank(observables: &[Observable], point: &PhasePoint, sv_tolerance: f64) -> Result<Option<PointRank>> {
    let n2 = 2 * point.dim();
    let mut rows = Vec::with_capacity(observables.len());
    for obs in observables {
        let row = gradient(obs, point)?.to_row();
        let norm = dot(&row, &row).sqrt();
        rows.push(if norm > 0.0 {
            row.iter().map(|v| v / norm).collect()
        } else {
            row
        });
    }
    if rows.iter().all(|r: &Vec<f64>| r.iter().all(|&v| v == 0.0)) {
        return Ok(None);
    }
    let m = DMatrix::from_fn(rows.len(), n2, |r, c| rows[r][c]);
    let mut sv: Vec<f64> = m.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sv_tolerance * sv[0];
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    let gap = (rank < sv.len() && rank > 0).then(|| sv[rank - 1] / sv[rank].max(f64::MIN_POSITIVE));
    Ok(Some(PointRank {
        singular_values: sv,
        rank,
        gap,
    }))
}

fn modal(ranks: &[usize]) -> usize {
    let max = ranks.iter().cloned().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &r in ranks {
        counts[r] += 1;
    }
    // ties resolve to the larger rank
    (0..=max).rev().max_by_key(|&r| (counts[r], r)).unwrap_or(0)
}

/// Numerical rank of the stacked gradients of `set` at each point.
///
/// Rows are normalized to unit length before the SVD so observables of very
/// different magnitude (quadratic and quartic integrals) are weighed equally.
pub fn independence_rank(
    set: &[Id],
    params: &ModelParams,
    points: &[PhasePoint],
    sv_tolerance: f64,
) -> Result<IndependenceReport> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("observable set must be nonempty".into()));
    }
    let observables = set
        .iter()
        .map(|&id| Observable::new(id, params))
        .collect::<Result<Vec<_>>>()?;
    let per_point = points
        .par_iter()
        .map(|pt| point_rank(&observables, pt, sv_tolerance))
        .collect::<Result<Vec<_>>>()?;

    let mut report = IndependenceReport {
        observables: set.iter().map(|id| id.name()).collect(),
        points: points.len(),
        sv_tolerance,
        singular_values: Vec::new(),
        ranks: Vec::new(),
        gap_ratios: Vec::new(),
        modal_rank: 0,
        low_rank_points: Vec::new(),
        degenerate_points: Vec::new(),
    };
    let mut kept = Vec::new();
    for (idx, pr) in per_point.into_iter().enumerate() {
        match pr {
            Some(pr) => {
                report.singular_values.push(pr.singular_values);
                report.ranks.push(pr.rank);
                report.gap_ratios.push(pr.gap);
                kept.push(idx);
            }
            None => report.degenerate_points.push(idx),
        }
    }
    report.modal_rank = modal(&report.ranks);
    report.low_rank_points = kept
        .iter()
        .zip(&report.ranks)
        .filter(|(_, &r)| r != report.modal_rank)
        .map(|(&i, _)| i)
        .collect();
    Ok(report)
}

/// Sample points and compute the rank report, resampling points where every
/// gradient vanishes.
pub fn independence_campaign(
    set: &[Id],
    params: &ModelParams,
    chart: Chart,
    count: usize,
    seed: u64,
    sv_tolerance: f64,
) -> Result<IndependenceReport> {
    let mut sampler = PointSampler::new(params.kappa, params.dim(), params.has_centrifugal(), seed);
    let observables = set
        .iter()
        .map(|&id| Observable::new(id, params))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(count);
    let mut attempts = 0;
    while points.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            return Err(Error::Sampler {
                attempts,
                reason: "every sampled point was degenerate".into(),
            });
        }
        let pt = sampler.sample_in(chart)?;
        if point_rank(&observables, &pt, sv_tolerance)?.is_some() {
            points.push(pt);
        }
    }
    independence_rank(set, params, &points, sv_tolerance)
}

/// Named identity suites.
pub const SUITES: &[&str] = &[
    "prop2",
    "theorem",
    "corollary",
    "two_zeros",
    "so_n",
    "so_kappa",
    "lrl_vector",
    "nonlinear",
    "source",
    "gen_source",
    "higgs",
    "coalgebra",
];

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ModelClass(msg.to_string()))
    }
}

/// Build the identity list for a named suite; fails when `params` is not of
/// the model class the suite is about.
pub fn suite(name: &str, params: &ModelParams) -> Result<Vec<IdentitySpec>> {
    let n = params.dim();
    let k = params.k();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let jid = |i: usize, j: usize| {
        if i < j {
            (1.0, Id::AngularMomentum { i, j })
        } else {
            (-1.0, Id::AngularMomentum { i: j, j: i })
        }
    };
    let mut out = Vec::new();
    match name {
        "prop2" => {
            require(params.class() == ModelClass::Kc, "prop2 suite needs b = 0")?;
            let anchor = "Poisson-commute with the KC Hamiltonian";
            for m in 2..=n {
                for side in [Side::Left, Side::Right] {
                    out.push(IdentitySpec::commutes(Id::Hamiltonian, Id::Casimir { side, m }, anchor));
                }
            }
            for i in 0..n {
                out.push(IdentitySpec::commutes(Id::Hamiltonian, Id::Lrl { i }, anchor));
            }
        }
        "theorem" => {
            let anchor = "Poisson-commute with the generalized Hamiltonian";
            for m in 2..=n {
                for side in [Side::Left, Side::Right] {
                    out.push(IdentitySpec::commutes(Id::Hamiltonian, Id::GenCasimir { side, m }, anchor));
                }
            }
            for i in 0..n {
                out.push(IdentitySpec::commutes(Id::Hamiltonian, Id::QuarticLrl { i }, anchor));
            }
        }
        "corollary" => {
            let zero = match params.class() {
                ModelClass::QuasiGeneralized { zero_index } => zero_index,
                _ => return Err(Error::ModelClass("corollary suite needs exactly one b_i = 0".into())),
            };
            let anchor = "quasi-generalized KC Hamiltonian";
            for m in 2..=n {
                for side in [Side::Left, Side::Right] {
                    out.push(IdentitySpec::commutes(Id::Hamiltonian, Id::GenCasimir { side, m }, anchor));
                }
            }
            out.push(IdentitySpec::commutes(Id::Hamiltonian, Id::QuasiLrl { i: zero }, anchor));
        }
        "two_zeros" => {
            let zeros: Vec<usize> = (0..n).filter(|&i| params.b[i] == 0.0).collect();
            require(zeros.len() >= 2, "two_zeros suite needs at least two b_i = 0")?;
            let (i, j) = (zeros[0], zeros[1]);
            let anchor = "the rotation generator J_ij becomes a constant";
            let jij = Id::AngularMomentum { i, j };
            let (li, lj) = (Id::QuasiLrl { i }, Id::QuasiLrl { i: j });
            out.push(IdentitySpec::commutes(Id::Hamiltonian, jij, anchor));
            out.push(IdentitySpec::commutes(Id::Hamiltonian, li, anchor));
            out.push(IdentitySpec::commutes(Id::Hamiltonian, lj, anchor));
            let anchor = "fulfill the Poisson brackets";
            out.push(IdentitySpec::bracket(
                format!("{{{}, {}}} = {}", jij.name(), li.name(), lj.name()),
                jij,
                li,
                Rhs::Terms(vec![Term::new(1.0, vec![lj])]),
                anchor,
            ));
            out.push(IdentitySpec::bracket(
                format!("{{{}, {}}} = -{}", jij.name(), lj.name(), li.name()),
                jij,
                lj,
                Rhs::Terms(vec![Term::new(-1.0, vec![li])]),
                anchor,
            ));
            out.push(IdentitySpec::bracket(
                format!("{{{}, {}}} = 2(kappa Cg^({n}) - H) {}", li.name(), lj.name(), jij.name()),
                li,
                lj,
                Rhs::Terms(vec![
                    Term::new(2.0 * k, vec![Id::GenCasimir { side: Side::Left, m: n }, jij]),
                    Term::new(-2.0, vec![Id::Hamiltonian, jij]),
                ]),
                anchor,
            ));
        }
        "so_n" => {
            let anchor = "span an so(N) Lie-Poisson algebra";
            for i in 0..n {
                for j in i + 1..n {
                    for l in j + 1..n {
                        let (a, b, c) = (
                            Id::AngularMomentum { i, j },
                            Id::AngularMomentum { i, j: l },
                            Id::AngularMomentum { i: j, j: l },
                        );
                        let t = |s: f64, x: Id| Rhs::Terms(vec![Term::new(s, vec![x])]);
                        out.push(IdentitySpec::bracket(
                            format!("{{{}, {}}} = {}", a.name(), b.name(), c.name()),
                            a,
                            b,
                            t(1.0, c),
                            anchor,
                        ));
                        out.push(IdentitySpec::bracket(
                            format!("{{{}, {}}} = -{}", a.name(), c.name(), b.name()),
                            a,
                            c,
                            t(-1.0, b),
                            anchor,
                        ));
                        out.push(IdentitySpec::bracket(
                            format!("{{{}, {}}} = {}", b.name(), c.name(), a.name()),
                            b,
                            c,
                            t(1.0, a),
                            anchor,
                        ));
                    }
                }
            }
        }
        "so_kappa" | "lrl_vector" => {
            let vector = |l: usize| {
                if name == "so_kappa" {
                    Id::Translation { i: l }
                } else {
                    Id::Lrl { i: l }
                }
            };
            if name == "lrl_vector" {
                require(params.class() == ModelClass::Kc, "lrl_vector suite needs b = 0")?;
            }
            let anchor = if name == "so_kappa" {
                "Their Lie--Poisson brackets are given by"
            } else {
                "transformed as an N-vector"
            };
            for &(i, j) in &pairs {
                let jij = Id::AngularMomentum { i, j };
                for l in 0..n {
                    let mut terms = Vec::new();
                    if l == i {
                        terms.push(Term::new(1.0, vec![vector(j)]));
                    }
                    if l == j {
                        terms.push(Term::new(-1.0, vec![vector(i)]));
                    }
                    let rhs_name = if l == i {
                        vector(j).name()
                    } else if l == j {
                        format!("-{}", vector(i).name())
                    } else {
                        "0".to_string()
                    };
                    out.push(IdentitySpec::bracket(
                        format!("{{{}, {}}} = {rhs_name}", jij.name(), vector(l).name()),
                        jij,
                        vector(l),
                        Rhs::Terms(terms),
                        anchor,
                    ));
                }
            }
            if name == "so_kappa" {
                for &(i, j) in &pairs {
                    let (s, jij) = jid(i, j);
                    out.push(IdentitySpec::bracket(
                        format!("{{P_{}, P_{}}} = kappa J_{}{}", i + 1, j + 1, i + 1, j + 1),
                        Id::Translation { i },
                        Id::Translation { i: j },
                        Rhs::Terms(vec![Term::new(s * k, vec![jij])]),
                        anchor,
                    ));
                }
            }
        }
        "nonlinear" => {
            require(params.class() == ModelClass::Kc, "nonlinear suite needs b = 0")?;
            let anchor = "involving the L_i components";
            for &(i, j) in &pairs {
                let jij = Id::AngularMomentum { i, j };
                out.push(IdentitySpec::bracket(
                    format!("{{L_{}, L_{}}} = Lambda J_{}{}", i + 1, j + 1, i + 1, j + 1),
                    Id::Lrl { i },
                    Id::Lrl { i: j },
                    Rhs::Terms(vec![Term::new(1.0, vec![Id::Lambda, jij])]),
                    anchor,
                ));
            }
        }
        "source" => {
            require(params.class() == ModelClass::Kc, "source suite needs b = 0")?;
            let anchor = "Poisson brackets between the Hamiltonian";
            for &(i, j) in &pairs {
                out.push(IdentitySpec::commutes(Id::Hamiltonian, Id::AngularMomentum { i, j }, anchor));
            }
            for i in 0..n {
                out.push(IdentitySpec::bracket(
                    format!("{{H, P_{}}} = K q_i (closed form)", i + 1),
                    Id::Hamiltonian,
                    Id::Translation { i },
                    Rhs::KcTranslationSource { i },
                    anchor,
                ));
            }
        }
        "gen_source" => {
            let anchor = "are now generalized as";
            for &(i, j) in &pairs {
                out.push(IdentitySpec::bracket(
                    format!("{{H, J_{}{}}} = closed form", i + 1, j + 1),
                    Id::Hamiltonian,
                    Id::AngularMomentum { i, j },
                    Rhs::GenAngularSource { i, j },
                    anchor,
                ));
            }
            for i in 0..n {
                out.push(IdentitySpec::bracket(
                    format!("{{H, P_{}}} = closed form", i + 1),
                    Id::Hamiltonian,
                    Id::Translation { i },
                    Rhs::GenTranslationSource { i },
                    anchor,
                ));
            }
        }
        "higgs" => {
            require(n == 2, "higgs suite needs N = 2")?;
            require(params.class() == ModelClass::Kc, "higgs suite needs b = 0")?;
            let anchor = "rise to the cubic Poisson algebra";
            let j = Id::AngularMomentum { i: 0, j: 1 };
            let (l1, l2) = (Id::Lrl { i: 0 }, Id::Lrl { i: 1 });
            out.push(IdentitySpec::bracket(
                "{J_12, L_1} = L_2",
                j,
                l1,
                Rhs::Terms(vec![Term::new(1.0, vec![l2])]),
                anchor,
            ));
            out.push(IdentitySpec::bracket(
                "{J_12, L_2} = -L_1",
                j,
                l2,
                Rhs::Terms(vec![Term::new(-1.0, vec![l1])]),
                anchor,
            ));
            out.push(IdentitySpec::bracket(
                "{L_1, L_2} = 2 kappa J_12^3 - 2 H J_12",
                l1,
                l2,
                Rhs::Terms(vec![
                    Term::new(2.0 * k, vec![j, j, j]),
                    Term::new(-2.0, vec![Id::Hamiltonian, j]),
                ]),
                anchor,
            ));
            out.push(IdentitySpec {
                name: "Higgs Casimir = K^2".into(),
                lhs: Lhs::Value(Id::HiggsCasimir),
                rhs: Rhs::Terms(vec![Term::new(params.coupling * params.coupling, vec![])]),
                anchor: "square of the coupling constant".into(),
            });
        }
        "coalgebra" => {
            let anchor = "Poisson brackets, coproduct and Casimir function";
            let (jm, j3, jp) = (Id::CoalgebraMinus, Id::CoalgebraThree, Id::CoalgebraPlus);
            out.push(IdentitySpec::bracket("{J_3, J_+} = 2 J_+", j3, jp, Rhs::Terms(vec![Term::new(2.0, vec![jp])]), anchor));
            out.push(IdentitySpec::bracket("{J_3, J_-} = -2 J_-", j3, jm, Rhs::Terms(vec![Term::new(-2.0, vec![jm])]), anchor));
            out.push(IdentitySpec::bracket("{J_-, J_+} = 4 J_3", jm, jp, Rhs::Terms(vec![Term::new(4.0, vec![j3])]), anchor));
            out.push(IdentitySpec::commutes(Id::Hamiltonian, Id::CoalgebraCasimir, anchor));
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown suite '{other}' (known: {})",
                SUITES.join(", ")
            )))
        }
    }
    Ok(out)
}

/// Degenerate-limit sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    /// Curvature, coupling and centrifugal direction; `b` is scaled by each epsilon.
    pub params: ModelParams,
    pub epsilons: Vec<f64>,
    pub kappa_epsilon: f64,
    pub points: usize,
    pub seed: u64,
    /// Accepted band for the log-log slope of the `b -> 0` deviations.
    pub slope_tolerance: f64,
    /// Bound on `|X(±kappa_epsilon) - X(0)| / max(1, |X(0)|)`.
    pub continuity_tolerance: f64,
    /// Smallest allowed `|q_i|` for the sweep points. Near a centrifugal
    /// wall `b_i / q_i^2` is large and the deviation stays quadratic in
    /// epsilon until epsilon is tiny, so the sweep keeps away from walls.
    pub min_coord: f64,
}

impl LimitConfig {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self {
            params,
            epsilons: vec![1e-2, 1e-4, 1e-6],
            kappa_epsilon: 1e-8,
            points: 20,
            seed,
            slope_tolerance: 0.05,
            continuity_tolerance: 1e-6,
            min_coord: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Max over points and i of `|Lg_i - L_i^2|`.
    pub quartic_deviation: f64,
    /// Max over points, sides and m of `|Cg - C|`.
    pub casimir_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub sweep: Vec<SweepRow>,
    /// Log-log slope deviation from 1 of the sweep maxima, worst over
    /// consecutive epsilon pairs.
    pub quartic_slope_error: f64,
    pub casimir_slope_error: f64,
    /// Same, point by point. Informational: at states where the KC vector
    /// `L` nearly vanishes the linear coefficient `-2 L_i shift_i` does too,
    /// and the quadratic term dominates at the largest epsilon.
    pub pointwise_quartic_slope_error: f64,
    /// Residual of `Lg_i = L_i^2` at `b = 0` exactly.
    pub zero_b_residual: f64,
    /// Worst relative gap between `kappa = ±kappa_epsilon` and `kappa = 0`.
    pub kappa_gap: f64,
    pub pass: bool,
    pub reports: Vec<AlgebraReport>,
}

/// `b -> 0` scaling and `kappa -> 0` continuity checks at fixed points.
///
/// Points stay fixed across the sweep. The pass test uses the largest
/// deviation over the point set at each epsilon; the per-point slope is
/// reported alongside.
pub fn limit_checks(cfg: &LimitConfig) -> Result<LimitReport> {
    let base = &cfg.params;
    let n = base.dim();
    let kc = base.without_centrifugal();
    if cfg.points == 0 || cfg.epsilons.len() < 2 {
        return Err(Error::InvalidArgument("limit sweep needs points and at least two epsilons".into()));
    }
    let mut sampler = PointSampler::new(base.kappa, n, true, cfg.seed);
    sampler.min_coord = cfg.min_coord;
    let points = sampler.sample_many(Chart::Beltrami, cfg.points)?;
    let scaled = |eps: f64| ModelParams {
        b: base.b.iter().map(|v| v * eps).collect(),
        ..base.clone()
    };

    // per (epsilon, point) deviations
    let mut quartic = vec![vec![0.0f64; points.len()]; cfg.epsilons.len()];
    let mut casimir = vec![0.0f64; cfg.epsilons.len()];
    let mut sweep = Vec::new();
    for (e, &eps) in cfg.epsilons.iter().enumerate() {
        let params = scaled(eps);
        for (p, pt) in points.iter().enumerate() {
            for i in 0..n {
                let lg = Observable::new(Id::QuarticLrl { i }, &params)?.eval(pt)?;
                let l = Observable::new(Id::Lrl { i }, &kc)?.eval(pt)?;
                quartic[e][p] = quartic[e][p].max((lg - l * l).abs());
            }
            for m in 2..=n {
                for side in [Side::Left, Side::Right] {
                    let cg = Observable::new(Id::GenCasimir { side, m }, &params)?.eval(pt)?;
                    let c = Observable::new(Id::Casimir { side, m }, &kc)?.eval(pt)?;
                    casimir[e] = casimir[e].max((cg - c).abs());
                }
            }
        }
        sweep.push(SweepRow {
            epsilon: eps,
            quartic_deviation: quartic[e].iter().cloned().fold(0.0, f64::max),
            casimir_deviation: casimir[e],
        });
    }
    let slope = |hi: f64, lo: f64, de: f64| {
        let slope = (hi / lo).log10() / de;
        if slope.is_finite() {
            (slope - 1.0).abs()
        } else {
            f64::INFINITY
        }
    };
    let decades: Vec<f64> = (1..cfg.epsilons.len())
        .map(|e| (cfg.epsilons[e - 1] / cfg.epsilons[e]).log10())
        .collect();
    let sweep_slope_error = |column: &dyn Fn(&SweepRow) -> f64| {
        (1..sweep.len())
            .map(|e| slope(column(&sweep[e - 1]), column(&sweep[e]), decades[e - 1]))
            .fold(0.0, f64::max)
    };
    let quartic_slope_error = sweep_slope_error(&|r| r.quartic_deviation);
    let casimir_slope_error = sweep_slope_error(&|r| r.casimir_deviation);
    let mut pointwise_quartic_slope_error: f64 = 0.0;
    for e in 1..cfg.epsilons.len() {
        for p in 0..points.len() {
            pointwise_quartic_slope_error =
                pointwise_quartic_slope_error.max(slope(quartic[e - 1][p], quartic[e][p], decades[e - 1]));
        }
    }

    let mut zero_b_residual: f64 = 0.0;
    for pt in &points {
        for i in 0..n {
            let lg = Observable::new(Id::QuarticLrl { i }, &kc)?.eval(pt)?;
            let l = Observable::new(Id::Lrl { i }, &kc)?.eval(pt)?;
            zero_b_residual = zero_b_residual.max((lg - l * l).abs() / (l * l).max(1.0));
        }
    }

    let with_kappa = |kv: f64| ModelParams {
        kappa: crate::geometry::Curvature::new(kv).expect("finite"),
        ..base.clone()
    };
    let flat = with_kappa(0.0);
    let mut kappa_gap: f64 = 0.0;
    for kv in [cfg.kappa_epsilon, -cfg.kappa_epsilon] {
        let curved = with_kappa(kv);
        for pt in &points {
            let mut ids = vec![Id::Hamiltonian];
            ids.extend((0..n).map(|i| Id::Lrl { i }));
            ids.extend((0..n).map(|i| Id::QuarticLrl { i }));
            for id in ids {
                let (a, b) = if matches!(id, Id::Lrl { .. }) {
                    (
                        Observable::new(id, &curved.without_centrifugal())?.eval(pt)?,
                        Observable::new(id, &flat.without_centrifugal())?.eval(pt)?,
                    )
                } else {
                    (Observable::new(id, &curved)?.eval(pt)?, Observable::new(id, &flat)?.eval(pt)?)
                };
                kappa_gap = kappa_gap.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }

    let mk = |name: &str, anchor: &str, value: f64, tol: f64| AlgebraReport {
        identity: name.into(),
        anchor: anchor.into(),
        samples: points.len(),
        max_residual: value,
        mean_residual: value,
        tolerance: tol,
        pass: value <= tol,
        seed: cfg.seed,
    };
    let reports = vec![
        mk(
            "b -> 0: |Lg_i - L_i^2| linear in epsilon (log-log slope error)",
            "smooth deformations in b",
            quartic_slope_error,
            cfg.slope_tolerance,
        ),
        mk(
            "b -> 0: |Cg - C| linear in epsilon (log-log slope error)",
            "smooth deformations in b",
            casimir_slope_error,
            cfg.slope_tolerance,
        ),
        mk("b = 0: Lg_i = L_i^2", "smooth deformations in b", zero_b_residual, 1e-12),
        mk(
            "kappa -> 0 continuity of H, L_i, Lg_i (Beltrami)",
            "the limit kappa -> 0",
            kappa_gap,
            cfg.continuity_tolerance,
        ),
    ];
    let pass = reports.iter().all(|r| r.pass);
    Ok(LimitReport {
        sweep,
        quartic_slope_error,
        casimir_slope_error,
        pointwise_quartic_slope_error,
        zero_b_residual,
        kappa_gap,
        pass,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(kv: f64, n: usize) -> ModelParams {
        let b = (0..n).map(|i| 0.3 + 0.2 * i as f64).collect();
        ModelParams::new(kv, 1.0, b).unwrap()
    }

    #[test]
    fn theorem_suite_passes_on_the_sphere() {
        let params = ModelParams::new(1.0, 1.0, vec![0.3, 0.5, 0.7]).unwrap();
        let suite = suite("theorem", &params).unwrap();
        let reports = run_identity_suite(&suite, &params, Chart::Poincare, 200, 1, DEFAULT_TOLERANCE).unwrap();
        for r in &reports {
            assert!(r.pass, "{} {}", r.identity, r.max_residual);
        }
    }

    #[test]
    fn prop2_suite_all_curvatures() {
        for kv in [-1.0, 0.0, 1.0] {
            let params = ModelParams::kc(kv, 1.0, 3).unwrap();
            let suite = suite("prop2", &params).unwrap();
            for chart in [Chart::Poincare, Chart::Beltrami] {
                for r in run_identity_suite(&suite, &params, chart, 50, 2, DEFAULT_TOLERANCE).unwrap() {
                    assert!(r.pass, "{} {}", r.identity, r.max_residual);
                }
            }
        }
    }

    #[test]
    fn nonlinear_algebra_planar() {
        let params = ModelParams::kc(-1.0, 1.0, 2).unwrap();
        let s = suite("nonlinear", &params).unwrap();
        assert_eq!(s.len(), 1);
        for r in run_identity_suite(&s, &params, Chart::Poincare, 100, 3, DEFAULT_TOLERANCE).unwrap() {
            assert!(r.pass, "{} {}", r.identity, r.max_residual);
        }
    }

    #[test]
    fn suites_check_model_class() {
        let g = gen(1.0, 3);
        assert!(matches!(suite("prop2", &g), Err(Error::ModelClass(_))));
        assert!(matches!(suite("corollary", &g), Err(Error::ModelClass(_))));
        assert!(matches!(suite("higgs", &ModelParams::kc(1.0, 1.0, 3).unwrap()), Err(Error::ModelClass(_))));
        assert!(matches!(suite("nope", &g), Err(Error::InvalidArgument(_))));
        for name in SUITES {
            // every suite builds for at least one model
            let ok = [gen(1.0, 3), ModelParams::kc(1.0, 1.0, 2).unwrap(), ModelParams::new(1.0, 1.0, vec![0.0, 0.5, 0.7]).unwrap(), ModelParams::new(1.0, 1.0, vec![0.0, 0.0, 0.7]).unwrap()]
                .iter()
                .any(|p| suite(name, p).is_ok());
            assert!(ok, "{name}");
        }
    }

    #[test]
    fn wrong_identity_is_detected() {
        // {H^g, J_12} does not vanish once b_1 != b_2
        let params = gen(1.0, 3);
        let spec = IdentitySpec::commutes(Id::Hamiltonian, Id::AngularMomentum { i: 0, j: 1 }, "negative control");
        let r = run_identity_suite(&[spec], &params, Chart::Poincare, 20, 4, DEFAULT_TOLERANCE).unwrap();
        assert!(!r[0].pass);
        assert!(r[0].max_residual > 1e-3);
    }

    #[test]
    fn involution_chains() {
        let params = ModelParams::kc(-1.0, 1.0, 3).unwrap();
        for side in [Side::Left, Side::Right] {
            let set = casimir_chain(&params, side);
            assert_eq!(set.len(), 3);
            let r = involution_check(&set, &params, Chart::Beltrami, 50, 5, DEFAULT_TOLERANCE).unwrap();
            assert!(r.pass, "{}", r.max_residual);
        }
        let n2 = ModelParams::kc(1.0, 1.0, 2).unwrap();
        assert_eq!(casimir_chain(&n2, Side::Left).len(), 2);
    }

    #[test]
    fn independence_counts() {
        let params = ModelParams::kc(0.0, 1.0, 3).unwrap();
        let set = maximal_set(&params, 0);
        assert_eq!(set.len(), 5);
        let r = independence_campaign(&set, &params, Chart::Poincare, 20, 6, DEFAULT_SV_TOLERANCE).unwrap();
        assert_eq!(r.modal_rank, 5);
        let r = independence_campaign(&[Id::Hamiltonian], &params, Chart::Poincare, 5, 6, DEFAULT_SV_TOLERANCE).unwrap();
        assert_eq!(r.modal_rank, 1);
        assert!(independence_rank(&[], &params, &[], DEFAULT_SV_TOLERANCE).is_err());
    }

    #[test]
    fn degenerate_points_are_flagged() {
        let params = ModelParams::kc(0.0, 1.0, 2).unwrap();
        let pt = PhasePoint::poincare(vec![0.5, 0.5], vec![0.0, 0.0]).unwrap();
        // J_12 has zero gradient only at q = p = 0; use the constant instead
        let r = independence_rank(&[Id::Unit], &params, &[pt], DEFAULT_SV_TOLERANCE).unwrap();
        assert_eq!(r.degenerate_points, vec![0]);
        assert!(r.ranks.is_empty());
    }

    #[test]
    fn limits_pass_for_default_sweep() {
        let cfg = LimitConfig::new(ModelParams::new(1.0, 1.0, vec![1.0, 1.0, 1.0]).unwrap(), 9);
        let r = limit_checks(&cfg).unwrap();
        assert!(r.pass, "{r:#?}");
        assert_eq!(r.sweep.len(), 3);
    }

    #[test]
    fn modal_rank_prefers_majority_then_larger() {
        assert_eq!(modal(&[5, 5, 4]), 5);
        assert_eq!(modal(&[4, 4, 5]), 4);
        assert_eq!(modal(&[4, 5]), 5);
    }
}
