//! Exact gradients and canonical Poisson brackets.
//!
//! Gradients use one forward-mode channel per coordinate (`2N` passes).
//! The bracket convention is `{f, g} = Σ_i (∂f/∂q_i ∂g/∂p_i - ∂f/∂p_i ∂g/∂q_i)`,
//! so `{q_i, p_j} = δ_ij`.
//!
//! Central finite differences are kept only as an independent oracle.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Real};
use crate::error::Result;
use crate::geometry::{Chart, PhasePoint};
use crate::observables::Observable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

impl Gradient {
    /// `(∂/∂q, ∂/∂p)` as one row.
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = self.dq.clone();
        row.extend_from_slice(&self.dp);
        row
    }
}

/// A bracket value together with the largest gradient product that entered
/// the sum, so residuals can be reported relative to the arithmetic scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketValue {
    pub value: f64,
    pub scale: f64,
}

impl BracketValue {
    /// `|value| / max(scale, 1)`.
    pub fn relative(&self) -> f64 {
        self.value.abs() / self.scale.max(1.0)
    }
}

fn seeded<T: Real>(z: &[T], slot: usize) -> Vec<Dual<T>> {
    z.iter()
        .enumerate()
        .map(|(k, &v)| Dual::new(v, if k == slot { T::one() } else { T::zero() }))
        .collect()
}

/// Gradient of `f` at raw coordinates of any scalar type.
pub fn gradient_raw<T: Real>(f: &Observable, chart: Chart, q: &[T], p: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = q.len();
    let mut z = q.to_vec();
    z.extend_from_slice(p);
    let mut out = Vec::with_capacity(2 * n);
    for slot in 0..2 * n {
        let zd = seeded(&z, slot);
        out.push(f.eval_raw(chart, &zd[..n], &zd[n..])?.deriv);
    }
    let dp = out.split_off(n);
    Ok((out, dp))
}

pub fn gradient(f: &Observable, point: &PhasePoint) -> Result<Gradient> {
    f.eval(point)?;
    let (dq, dp) = gradient_raw(f, point.chart, &point.q, &point.p)?;
    Ok(Gradient { dq, dp })
}

fn contract(fg: &Gradient, gg: &Gradient) -> BracketValue {
    let mut value = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..fg.dq.len() {
        let a = fg.dq[i] * gg.dp[i];
        let b = fg.dp[i] * gg.dq[i];
        value += a - b;
        scale = scale.max(a.abs()).max(b.abs());
    }
    BracketValue { value, scale }
}

pub fn bracket(f: &Observable, g: &Observable, point: &PhasePoint) -> Result<BracketValue> {
    let fg = gradient(f, point)?;
    let gg = gradient(g, point)?;
    Ok(contract(&fg, &gg))
}

/// `{f, g}` at raw coordinates; with `T = Dual<_>` this differentiates the
/// bracket itself.
pub fn bracket_raw<T: Real>(f: &Observable, g: &Observable, chart: Chart, q: &[T], p: &[T]) -> Result<T> {
    let (fq, fp) = gradient_raw(f, chart, q, p)?;
    let (gq, gp) = gradient_raw(g, chart, q, p)?;
    let mut acc = T::zero();
    for i in 0..q.len() {
        acc += fq[i] * gp[i] - fp[i] * gq[i];
    }
    Ok(acc)
}

/// Exact gradient of the function `{f, g}` (second derivatives of `f`, `g`).
pub fn bracket_gradient(f: &Observable, g: &Observable, point: &PhasePoint) -> Result<Gradient> {
    let n = point.dim();
    let z = point.to_state();
    let mut out = Vec::with_capacity(2 * n);
    for slot in 0..2 * n {
        let zd = seeded(&z, slot);
        out.push(bracket_raw(f, g, point.chart, &zd[..n], &zd[n..])?.deriv);
    }
    let dp = out.split_off(n);
    Ok(Gradient { dq: out, dp })
}

/// `{f, {g, h}}`.
pub fn nested_bracket(f: &Observable, g: &Observable, h: &Observable, point: &PhasePoint) -> Result<BracketValue> {
    let fg = gradient(f, point)?;
    let inner = bracket_gradient(g, h, point)?;
    Ok(contract(&fg, &inner))
}

/// Exact Hessian of `f` in the ordering `(q, p)`.
pub fn hessian_raw(f: &Observable, chart: Chart, z: &[f64]) -> Result<DMatrix<f64>> {
    let m = z.len();
    let n = m / 2;
    let mut hess = DMatrix::zeros(m, m);
    for a in 0..m {
        let zd = seeded(z, a);
        let (gq, gp) = gradient_raw(f, chart, &zd[..n], &zd[n..])?;
        for (b, v) in gq.iter().chain(&gp).enumerate() {
            hess[(b, a)] = v.deriv;
        }
    }
    Ok(hess)
}

/// Central-difference gradient with step `h`.
pub fn gradient_fd(f: &Observable, point: &PhasePoint, h: f64) -> Result<Gradient> {
    let n = point.dim();
    let z = point.to_state();
    let mut out = Vec::with_capacity(2 * n);
    for slot in 0..2 * n {
        let mut plus = z.clone();
        let mut minus = z.clone();
        plus[slot] += h;
        minus[slot] -= h;
        let fp = f.eval_raw(point.chart, &plus[..n], &plus[n..])?;
        let fm = f.eval_raw(point.chart, &minus[..n], &minus[n..])?;
        out.push((fp - fm) / (2.0 * h));
    }
    let dp = out.split_off(n);
    Ok(Gradient { dq: out, dp })
}

/// `{f, g}` from central differences; error `O(h^2)`.
pub fn bracket_fd_oracle(f: &Observable, g: &Observable, point: &PhasePoint, h: f64) -> Result<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let fg = gradient_fd(f, point, h)?;
    let gg = gradient_fd(g, point, h)?;
    Ok(contract(&fg, &gg).value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointSampler;
    use crate::models::ModelParams;
    use crate::observables::{catalog, ObservableId as Id};

    fn obs(id: Id, params: &ModelParams) -> Observable {
        Observable::new(id, params).unwrap()
    }

    #[test]
    fn angular_momentum_gradient() {
        let params = ModelParams::kc(0.0, 1.0, 2).unwrap();
        let pt = PhasePoint::beltrami(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        let g = gradient(&obs(Id::AngularMomentum { i: 0, j: 1 }, &params), &pt).unwrap();
        assert_eq!(g.dq, vec![4.0, -3.0]);
        assert_eq!(g.dp, vec![-2.0, 1.0]);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let params = ModelParams::kc(1.0, 1.0, 3).unwrap();
        let pt = PhasePoint::poincare(vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 3.0]).unwrap();
        let g = gradient(&obs(Id::Unit, &params), &pt).unwrap();
        assert!(g.to_row().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn canonical_pairs() {
        let params = ModelParams::kc(-1.0, 1.0, 3).unwrap();
        let pt = PhasePoint::poincare(vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 3.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let b = bracket(&obs(Id::Position { i }, &params), &obs(Id::Momentum { i: j }, &params), &pt).unwrap();
                assert_eq!(b.value, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn so3_bracket_at_fixed_point() {
        let params = ModelParams::kc(0.0, 1.0, 3).unwrap();
        let pt = PhasePoint::beltrami(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]).unwrap();
        let j = |i, k| obs(Id::AngularMomentum { i, j: k }, &params);
        let lhs = bracket(&j(0, 1), &j(0, 2), &pt).unwrap();
        let rhs = j(1, 2).eval(&pt).unwrap();
        assert!((lhs.value - rhs).abs() <= 1e-12);
    }

    #[test]
    fn self_bracket_vanishes_for_whole_catalog() {
        let params = ModelParams::new(1.0, 1.0, vec![0.3, 0.0, 0.7]).unwrap();
        let mut s = PointSampler::new(params.kappa, 3, true, 1);
        let pt = s.sample().unwrap();
        for f in catalog(&params) {
            assert_eq!(bracket(&f, &f, &pt).unwrap().value, 0.0, "{}", f.name());
        }
    }

    #[test]
    fn exact_gradient_agrees_with_finite_differences() {
        for kv in [-1.0, 0.0, 1.0] {
            let params = ModelParams::new(kv, 1.0, vec![0.3, 0.5, 0.7]).unwrap();
            let h = obs(Id::Hamiltonian, &params);
            let mut s = PointSampler::new(params.kappa, 3, true, 31);
            s.min_coord = 0.1;
            for _ in 0..100 {
                let pt = s.sample().unwrap();
                let exact = gradient(&h, &pt).unwrap().to_row();
                let fd = gradient_fd(&h, &pt, 1e-6).unwrap().to_row();
                let scale = exact.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (a, b) in exact.iter().zip(&fd) {
                    assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn fd_oracle_canonical_pair() {
        let params = ModelParams::kc(0.0, 1.0, 2).unwrap();
        let pt = PhasePoint::poincare(vec![0.4, 0.2], vec![1.0, 0.0]).unwrap();
        let v = bracket_fd_oracle(&obs(Id::Position { i: 0 }, &params), &obs(Id::Momentum { i: 0 }, &params), &pt, 1e-4)
            .unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fd_oracle_converges_quadratically() {
        // {J_12, L_1} = L_2 is nonzero, so the oracle error is visible
        let params = ModelParams::kc(1.0, 1.0, 3).unwrap();
        let pt = PhasePoint::poincare(vec![0.4, -0.3, 0.5], vec![0.7, 1.1, -0.6]).unwrap();
        let f = obs(Id::Translation { i: 0 }, &params);
        let g = obs(Id::Lrl { i: 1 }, &params);
        let exact = bracket(&f, &g, &pt).unwrap().value;
        let e1 = (bracket_fd_oracle(&f, &g, &pt, 1e-2).unwrap() - exact).abs();
        let e2 = (bracket_fd_oracle(&f, &g, &pt, 5e-3).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn bracket_gradient_matches_finite_differences_of_exact_bracket() {
        let params = ModelParams::new(-1.0, 1.0, vec![0.3, 0.5, 0.7]).unwrap();
        let pt = PhasePoint::poincare(vec![0.3, -0.4, 0.2], vec![0.5, 0.1, -0.9]).unwrap();
        let f = obs(Id::Hamiltonian, &params);
        let g = obs(Id::AngularMomentum { i: 0, j: 2 }, &params);
        let exact = bracket_gradient(&f, &g, &pt).unwrap().to_row();
        let z = pt.to_state();
        let h = 1e-6;
        for (slot, e) in exact.iter().enumerate() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[slot] += h;
            zm[slot] -= h;
            let bp = bracket(&f, &g, &PhasePoint::from_state(pt.chart, &zp)).unwrap().value;
            let bm = bracket(&f, &g, &PhasePoint::from_state(pt.chart, &zm)).unwrap().value;
            let fd = (bp - bm) / (2.0 * h);
            assert!((fd - e).abs() <= 1e-6 * e.abs().max(1.0), "{fd} vs {e}");
        }
    }

    #[test]
    fn hessian_is_symmetric() {
        let params = ModelParams::new(1.0, 1.0, vec![0.3, 0.5]).unwrap();
        let h = obs(Id::Hamiltonian, &params);
        let z = vec![0.3, 0.6, -0.2, 0.4];
        let hess = hessian_raw(&h, Chart::Poincare, &z).unwrap();
        assert!((hess.clone() - hess.transpose()).amax() < 1e-12);
    }
}
