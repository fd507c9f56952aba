//! Property checks over random models and phase points.

use proptest::prelude::*;

use curved_kepler::diffbracket::{bracket, nested_bracket};
use curved_kepler::geometry::{to_chart, validate_domain};
use curved_kepler::observables::{catalog, Side};
use curved_kepler::verify;
use curved_kepler::{Chart, Curvature, ModelParams, Observable, ObservableId as Id, PhasePoint, PointSampler};

fn kappa() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(0.0), Just(-1.0), -2.0..2.0f64]
}

/// Model with `N` in 2..=4 and `b_i` in [0, 1].
fn model() -> impl Strategy<Value = ModelParams> {
    (kappa(), 0.2..3.0f64, prop::collection::vec(0.0..1.0f64, 2..=4))
        .prop_map(|(k, coupling, b)| ModelParams::new(k, coupling, b).unwrap())
}

fn sample(params: &ModelParams, chart: Chart, seed: u64) -> PhasePoint {
    let mut s = PointSampler::new(params.kappa, params.dim(), true, seed);
    s.min_coord = 0.1;
    s.sample_in(chart).unwrap()
}

fn chart() -> impl Strategy<Value = Chart> {
    prop_oneof![Just(Chart::Poincare), Just(Chart::Beltrami)]
}

/// Chart-invariant catalog entries, which are the ones worth bracketing.
fn observables(params: &ModelParams) -> Vec<Observable> {
    catalog(params).into_iter().filter(|o| o.id.is_chart_invariant() && o.id != Id::Unit).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chart_round_trip(params in model(), seed in any::<u64>()) {
        let pt = sample(&params, Chart::Poincare, seed);
        let there = to_chart(&pt, Chart::Beltrami, params.kappa).unwrap();
        prop_assert!(validate_domain(&there, params.kappa));
        let back = to_chart(&there, Chart::Poincare, params.kappa).unwrap();
        for (a, b) in pt.to_state().iter().zip(back.to_state()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn casimirs_are_bounded_below(params in model(), chart in chart(), seed in any::<u64>()) {
        let pt = sample(&params, chart, seed);
        let n = params.dim();
        for side in [Side::Left, Side::Right] {
            for m in 2..=n {
                let w = match side {
                    Side::Left => 0..m,
                    Side::Right => n - m..n,
                };
                let floor: f64 = params.b[w].iter().map(|b| b.sqrt()).sum::<f64>().powi(2);
                let c = Observable::new(Id::GenCasimir { side, m }, &params).unwrap().eval(&pt).unwrap();
                prop_assert!(c >= floor * (1.0 - 1e-12), "Cg = {c} below {floor}");
            }
        }
    }

    #[test]
    fn bracket_is_antisymmetric(params in model(), chart in chart(), seed in any::<u64>()) {
        let pt = sample(&params, chart, seed);
        let obs = observables(&params);
        for f in &obs {
            for g in &obs {
                let fg = bracket(f, g, &pt).unwrap();
                let gf = bracket(g, f, &pt).unwrap();
                prop_assert!((fg.value + gf.value).abs() <= 1e-14 * fg.scale.max(1.0));
            }
        }
    }

    #[test]
    fn jacobi_identity(params in model(), chart in chart(), seed in any::<u64>(), picks in prop::array::uniform3(any::<prop::sample::Index>())) {
        let pt = sample(&params, chart, seed);
        let obs = observables(&params);
        let [f, g, h] = picks.map(|i| &obs[i.index(obs.len())]);
        let a = nested_bracket(f, g, h, &pt).unwrap();
        let b = nested_bracket(g, h, f, &pt).unwrap();
        let c = nested_bracket(h, f, g, &pt).unwrap();
        let scale = a.scale.max(b.scale).max(c.scale).max(1.0);
        prop_assert!((a.value + b.value + c.value).abs() <= 1e-9 * scale);
    }

    #[test]
    fn rank_grows_by_at_most_one(params in model(), seed in any::<u64>(), extra in any::<prop::sample::Index>()) {
        let pts = verify::sample_points(&params, Chart::Poincare, 4, seed).unwrap();
        let set = verify::quadratic_integrals(&params);
        let mut bigger = set.clone();
        bigger.push(observables(&params)[extra.index(observables(&params).len())].id);
        let small = verify::independence_rank(&set, &params, &pts, verify::DEFAULT_SV_TOLERANCE).unwrap();
        let large = verify::independence_rank(&bigger, &params, &pts, verify::DEFAULT_SV_TOLERANCE).unwrap();
        for (a, b) in small.ranks.iter().zip(&large.ranks) {
            prop_assert!(b >= a && *b <= a + 1);
        }
    }

    #[test]
    fn campaigns_are_reproducible(params in model(), seed in any::<u64>()) {
        let specs = verify::suite("so_n", &params).unwrap();
        let a = verify::run_identity_suite(&specs, &params, Chart::Poincare, 5, seed, verify::DEFAULT_TOLERANCE).unwrap();
        let b = verify::run_identity_suite(&specs, &params, Chart::Poincare, 5, seed, verify::DEFAULT_TOLERANCE).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn curvature_rejects_non_finite() {
    assert!(Curvature::new(f64::NAN).is_err());
    assert!(Curvature::new(f64::INFINITY).is_err());
}
