//! Hamiltonians of the free, Kepler–Coulomb (KC), generalized and
//! quasi-generalized systems, and their sl(2,R) coalgebra form.
//!
//! The generalized Hamiltonian adds `N` curvature-dressed centrifugal terms
//! to the curved KC Hamiltonian:
//!
//! ```text
//! Poincaré:  H = (1/8)(1 + k q^2)^2 (p^2 + Σ b_i/q_i^2) - K (1 - k q^2) / (2|q|)
//! Beltrami:  H = (1/2)(1 + k q^2)(p^2 + k (q·p)^2 + Σ b_i/q_i^2) - K/|q|
//! ```
//!
//! At `k = 0` on the Beltrami chart the centrifugal terms read
//! `(1/2) Σ b_i/q_i^2`; the flat textbook normalization `Σ b_i/q_i^2` is
//! recovered with `b_i -> 2 b_i`.

use serde::{Deserialize, Serialize};

use crate::dual::Real;
use crate::error::{Error, Result};
use crate::geometry::{dot_t, validate_domain, Chart, Curvature, PhasePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub kappa: Curvature,
    /// KC coupling `K`.
    pub coupling: f64,
    /// Centrifugal strengths `b_1..b_N`; the dimension is `b.len()`.
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    /// All `b_i = 0`.
    Kc,
    /// Exactly one `b_i = 0`.
    QuasiGeneralized { zero_index: usize },
    /// Two or more, but not all, `b_i = 0`.
    PartiallyGeneralized { zero_indices: Vec<usize> },
    /// All `b_i != 0`.
    Generalized,
}

impl ModelParams {
    pub fn new(kappa: f64, coupling: f64, b: Vec<f64>) -> Result<Self> {
        let params = Self {
            kappa: Curvature::new(kappa)?,
            coupling,
            b,
        };
        params.validate()?;
        Ok(params)
    }

    /// KC model (`b = 0`) in dimension `n`.
    pub fn kc(kappa: f64, coupling: f64, n: usize) -> Result<Self> {
        Self::new(kappa, coupling, vec![0.0; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "dimension must be at least 2, got {}",
                self.b.len()
            )));
        }
        if !self.coupling.is_finite() || self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("model parameters must be finite".into()));
        }
        Curvature::new(self.kappa.value())?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn k(&self) -> f64 {
        self.kappa.value()
    }

    pub fn class(&self) -> ModelClass {
        let zeros: Vec<usize> = (0..self.dim()).filter(|&i| self.b[i] == 0.0).collect();
        match zeros.len() {
            0 => ModelClass::Generalized,
            1 => ModelClass::QuasiGeneralized {
                zero_index: zeros[0],
            },
            z if z == self.dim() => ModelClass::Kc,
            _ => ModelClass::PartiallyGeneralized {
                zero_indices: zeros,
            },
        }
    }

    pub fn has_centrifugal(&self) -> bool {
        self.b.iter().any(|&v| v != 0.0)
    }

    /// Same curvature and coupling, centrifugal terms removed.
    pub fn without_centrifugal(&self) -> Self {
        Self {
            b: vec![0.0; self.dim()],
            ..self.clone()
        }
    }
}

/// The sl(2,R) realization `J- = q^2`, `J3 = q·p`, `J+ = p^2 + Σ b_i/q_i^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoalgebraTriple<T = f64> {
    pub j_minus: T,
    pub j_three: T,
    pub j_plus: T,
}

impl<T: Real> CoalgebraTriple<T> {
    /// `J- J+ - J3^2`.
    pub fn casimir(&self) -> T {
        self.j_minus * self.j_plus - self.j_three.sq()
    }
}

pub(crate) fn check_dim<T>(params: &ModelParams, q: &[T], p: &[T]) -> Result<()> {
    if q.len() != params.dim() || p.len() != params.dim() {
        return Err(Error::InvalidArgument(format!(
            "point dimension {} does not match model dimension {}",
            q.len(),
            params.dim()
        )));
    }
    Ok(())
}

pub(crate) fn check_origin<T: Real>(q: &[T]) -> Result<()> {
    if q.iter().all(|v| v.re() == 0.0) {
        Err(Error::Origin)
    } else {
        Ok(())
    }
}

pub(crate) fn check_centrifugal<T: Real>(b: &[f64], q: &[T]) -> Result<()> {
    match (0..b.len()).find(|&i| b[i] != 0.0 && q[i].re() == 0.0) {
        Some(index) => Err(Error::CentrifugalSingularity { index }),
        None => Ok(()),
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

/// `Σ b_i / q_i^2` over nonzero `b_i`.
pub(crate) fn centrifugal_sum<T: Real>(b: &[f64], q: &[T]) -> T {
    let mut acc = T::zero();
    for (bi, qi) in b.iter().zip(q) {
        if *bi != 0.0 {
            acc += T::cst(*bi) / qi.sq();
        }
    }
    acc
}

pub fn kinetic<T: Real>(chart: Chart, kappa: f64, q: &[T], p: &[T]) -> T {
    let k = T::cst(kappa);
    let q2 = dot_t(q, q);
    let p2 = dot_t(p, p);
    match chart {
        Chart::Poincare => (T::one() + k * q2).sq() * p2.scale(0.125),
        Chart::Beltrami => {
            let qp = dot_t(q, p);
            (T::one() + k * q2) * (p2 + k * qp.sq()).scale(0.5)
        }
    }
}

/// Generalized Hamiltonian on raw chart coordinates. With `b = 0` this is
/// the curved KC Hamiltonian.
pub fn hamiltonian<T: Real>(chart: Chart, params: &ModelParams, q: &[T], p: &[T]) -> Result<T> {
    check_dim(params, q, p)?;
    check_origin(q)?;
    check_centrifugal(&params.b, q)?;
    let k = T::cst(params.k());
    let kk = T::cst(params.coupling);
    let q2 = dot_t(q, q);
    let r = q2.sqrt();
    let cf = centrifugal_sum(&params.b, q);
    Ok(match chart {
        Chart::Poincare => {
            let plus = T::one() + k * q2;
            plus.sq() * (dot_t(p, p) + cf).scale(0.125) - kk * (T::one() - k * q2) / r.scale(2.0)
        }
        Chart::Beltrami => {
            let plus = T::one() + k * q2;
            kinetic(chart, params.k(), q, p) + plus * cf.scale(0.5) - kk / r
        }
    })
}

pub fn coalgebra<T: Real>(params: &ModelParams, q: &[T], p: &[T]) -> Result<CoalgebraTriple<T>> {
    check_dim(params, q, p)?;
    check_centrifugal(&params.b, q)?;
    Ok(CoalgebraTriple {
        j_minus: dot_t(q, q),
        j_three: dot_t(q, p),
        j_plus: dot_t(p, p) + centrifugal_sum(&params.b, q),
    })
}

/// Hamiltonian as a function of the coalgebra generators only.
pub fn hamiltonian_from_coalgebra<T: Real>(chart: Chart, params: &ModelParams, j: &CoalgebraTriple<T>) -> T {
    let k = T::cst(params.k());
    let kk = T::cst(params.coupling);
    let root = j.j_minus.sqrt();
    match chart {
        Chart::Poincare => {
            (T::one() + k * j.j_minus).sq() * j.j_plus.scale(0.125)
                - kk * (T::one() - k * j.j_minus) / root.scale(2.0)
        }
        Chart::Beltrami => {
            (T::one() + k * j.j_minus) * (j.j_plus + k * j.j_three.sq()).scale(0.5) - kk / root
        }
    }
}

pub fn eval_kinetic(point: &PhasePoint, kappa: Curvature) -> Result<f64> {
    require_domain(point, kappa)?;
    Ok(kinetic(point.chart, kappa.value(), &point.q, &point.p))
}

/// Curved KC Hamiltonian; the centrifugal strengths in `params` are ignored.
pub fn eval_h_kc(point: &PhasePoint, params: &ModelParams) -> Result<f64> {
    require_domain(point, params.kappa)?;
    hamiltonian(point.chart, &params.without_centrifugal(), &point.q, &point.p)
}

pub fn eval_h_gen(point: &PhasePoint, params: &ModelParams) -> Result<f64> {
    require_domain(point, params.kappa)?;
    hamiltonian(point.chart, params, &point.q, &point.p)
}

/// Coalgebra generators in the point's own chart variables.
pub fn eval_coalgebra(point: &PhasePoint, params: &ModelParams) -> Result<CoalgebraTriple> {
    coalgebra(params, &point.q, &point.p)
}

pub fn eval_h_via_coalgebra(point: &PhasePoint, params: &ModelParams) -> Result<f64> {
    require_domain(point, params.kappa)?;
    check_origin(&point.q)?;
    let j = eval_coalgebra(point, params)?;
    Ok(hamiltonian_from_coalgebra(point.chart, params, &j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{poincare_to_beltrami, PointSampler};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn kinetic_values() {
        let flat = Curvature::FLAT;
        let pt = PhasePoint::poincare(vec![0.3, -1.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(eval_kinetic(&pt, flat).unwrap(), 0.5);
        let pt = PhasePoint::beltrami(vec![0.3, -1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(eval_kinetic(&pt, flat).unwrap(), 0.5);
        let pt = PhasePoint::beltrami(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(eval_kinetic(&pt, Curvature::new(1.0).unwrap()).unwrap(), 3.0);
    }

    #[test]
    fn kc_hamiltonian_values() {
        let params = ModelParams::kc(0.0, 1.0, 2).unwrap();
        let b = PhasePoint::beltrami(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(eval_h_kc(&b, &params).unwrap(), -0.5);
        let pnc = PhasePoint::poincare(vec![1.0, 0.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(eval_h_kc(&pnc, &params).unwrap(), 0.0);
        let b = PhasePoint::beltrami(vec![2.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(eval_h_kc(&b, &params).unwrap(), 0.0);

        let sphere = ModelParams::kc(1.0, 1.0, 2).unwrap();
        let b = PhasePoint::beltrami(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(eval_h_kc(&b, &sphere).unwrap(), -1.0);
    }

    #[test]
    fn origin_is_rejected() {
        let params = ModelParams::kc(0.0, 1.0, 2).unwrap();
        let pt = PhasePoint::beltrami(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(eval_h_kc(&pt, &params), Err(Error::Origin));
    }

    #[test]
    fn generalized_values() {
        let params = ModelParams::new(0.0, 1.0, vec![1.0, 1.0]).unwrap();
        let pt = PhasePoint::beltrami(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let h = eval_h_gen(&pt, &params).unwrap();
        assert!((h - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-15);

        // N = 3, kappa = 1, single centrifugal term
        let params = ModelParams::new(1.0, 1.0, vec![1.0, 0.0, 0.0]).unwrap();
        let pt = PhasePoint::beltrami(vec![0.5, 0.2, 0.0], vec![0.1, 0.0, 0.3]).unwrap();
        let q2: f64 = 0.25 + 0.04;
        let qp: f64 = 0.05;
        let p2: f64 = 0.01 + 0.09;
        let expect = 0.5 * (1.0 + q2) * (p2 + qp * qp) - 1.0 / q2.sqrt() + 0.5 * (1.0 + q2) / 0.25;
        assert!((eval_h_gen(&pt, &params).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn centrifugal_singularity() {
        let params = ModelParams::new(0.0, 1.0, vec![1.0, 1.0]).unwrap();
        let pt = PhasePoint::beltrami(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(
            eval_h_gen(&pt, &params),
            Err(Error::CentrifugalSingularity { index: 0 })
        );
        // a zero coordinate is harmless when its b vanishes
        let params = ModelParams::new(0.0, 1.0, vec![0.0, 1.0]).unwrap();
        assert!(eval_h_gen(&pt, &params).is_ok());
    }

    #[test]
    fn model_classes() {
        assert_eq!(ModelParams::kc(1.0, 1.0, 3).unwrap().class(), ModelClass::Kc);
        let g = ModelParams::new(1.0, 1.0, vec![0.1, -0.2, 0.3]).unwrap();
        assert_eq!(g.class(), ModelClass::Generalized);
        let two = ModelParams::new(1.0, 1.0, vec![0.0, 0.0, 0.3]).unwrap();
        assert_eq!(
            two.class(),
            ModelClass::PartiallyGeneralized {
                zero_indices: vec![0, 1]
            }
        );
        assert!(ModelParams::new(1.0, 1.0, vec![0.1]).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, vec![0.1, 0.2]).is_err());
    }

    #[test]
    fn coalgebra_values() {
        let kc = ModelParams::kc(0.0, 1.0, 2).unwrap();
        let pt = PhasePoint::beltrami(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        let j = eval_coalgebra(&pt, &kc).unwrap();
        assert_eq!((j.j_minus, j.j_three, j.j_plus), (5.0, 11.0, 25.0));
        // Lagrange identity: Casimir = J_12^2
        assert_eq!(j.casimir(), 4.0);

        let g = ModelParams::new(0.0, 1.0, vec![1.0, 1.0]).unwrap();
        let pt = PhasePoint::beltrami(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let j = eval_coalgebra(&pt, &g).unwrap();
        assert_eq!((j.j_minus, j.j_three, j.j_plus), (5.0, 0.0, 1.25));
    }

    #[test]
    fn coalgebra_form_values() {
        let free = ModelParams::kc(1.0, 0.0, 2).unwrap();
        let pt = PhasePoint::beltrami(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(eval_h_via_coalgebra(&pt, &free).unwrap(), 1.0);

        let flat = ModelParams::kc(0.0, 1.0, 3).unwrap();
        let pt = PhasePoint::beltrami(vec![0.3, 1.0, -0.4], vec![0.5, 0.2, 1.0]).unwrap();
        let j = eval_coalgebra(&pt, &flat).unwrap();
        let expect = j.j_plus / 2.0 - 1.0 / j.j_minus.sqrt();
        assert!((eval_h_via_coalgebra(&pt, &flat).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn coalgebra_form_matches_direct_evaluation() {
        for kv in [-1.0, 0.0, 1.0] {
            for n in 2..=4 {
                let b: Vec<f64> = (0..n).map(|i| 0.2 + 0.15 * i as f64).collect();
                let params = ModelParams::new(kv, 1.0, b).unwrap();
                let mut s = PointSampler::new(params.kappa, n, true, 17 + n as u64);
                for _ in 0..100 {
                    for chart in [Chart::Poincare, Chart::Beltrami] {
                        let pt = s.sample_in(chart).unwrap();
                        let a = eval_h_gen(&pt, &params).unwrap();
                        let c = eval_h_via_coalgebra(&pt, &params).unwrap();
                        assert!((a - c).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn reduces_to_kc_when_b_vanishes() {
        let params = ModelParams::kc(-1.0, 1.3, 3).unwrap();
        let mut s = PointSampler::new(params.kappa, 3, false, 2);
        for _ in 0..100 {
            let pt = s.sample().unwrap();
            assert_eq!(eval_h_gen(&pt, &params).unwrap(), eval_h_kc(&pt, &params).unwrap());
        }
    }

    #[test]
    fn chart_invariance() {
        for kv in [-1.0, 0.0, 1.0] {
            let params = ModelParams::new(kv, 1.0, vec![0.3, 0.5, 0.7]).unwrap();
            let mut s = PointSampler::new(params.kappa, 3, true, 8);
            for _ in 0..100 {
                let pt = s.sample().unwrap();
                let bt = poincare_to_beltrami(&pt, params.kappa).unwrap();
                assert!(close(
                    eval_h_gen(&pt, &params).unwrap(),
                    eval_h_gen(&bt, &params).unwrap(),
                    1e-11
                ));
                assert!(close(
                    eval_kinetic(&pt, params.kappa).unwrap(),
                    eval_kinetic(&bt, params.kappa).unwrap(),
                    1e-11
                ));
            }
        }
    }

    #[test]
    fn flat_limit_matches_textbook_form_with_rescaled_b() {
        let params = ModelParams::new(0.0, 1.0, vec![0.6, 0.2, 1.4]).unwrap();
        let pt = PhasePoint::beltrami(vec![0.7, -1.1, 0.4], vec![0.3, 0.9, -0.2]).unwrap();
        let p2: f64 = pt.p.iter().map(|v| v * v).sum();
        let r = pt.q2().sqrt();
        let textbook: f64 = p2 / 2.0 - 1.0 / r
            + params.b.iter().zip(&pt.q).map(|(b, q)| (b / 2.0) / (q * q)).sum::<f64>();
        assert!((eval_h_gen(&pt, &params).unwrap() - textbook).abs() < 1e-14);
    }

    #[test]
    fn curvature_continuity() {
        let b = vec![0.4, 0.8];
        let pt = PhasePoint::beltrami(vec![0.6, 0.9], vec![0.2, -0.5]).unwrap();
        let h0 = eval_h_gen(&pt, &ModelParams::new(0.0, 1.0, b.clone()).unwrap()).unwrap();
        for eps in [1e-8, -1e-8] {
            let h = eval_h_gen(&pt, &ModelParams::new(eps, 1.0, b.clone()).unwrap()).unwrap();
            assert!((h - h0).abs() <= 1e-6 * h0.abs().max(1.0));
        }
    }
}
