use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rcuniv::filtercore::{filter_from_functional, functional_from_filter, Filter, Functional};
use rcuniv::models::{sas_certificate, Activation, EsnParams, RandomEsn, RandomSas, SasParams};
use rcuniv::reservoir::trajectory;
use rcuniv::rng;
use rcuniv::seqspace::{sup_norm, weighted_metric, weighted_norm, BoundedSignal, Padding, WeightingSequence};
use rcuniv::universal::{fit_readout, make_error_budget};

fn signal(values: &[f64]) -> BoundedSignal<f64> {
    BoundedSignal::from_scalars(values, 1.0, Padding::Zero).unwrap()
}

fn free(values: Vec<f64>) -> BoundedSignal<f64> {
    BoundedSignal::enclosing(1, values.into_iter().map(|v| DVector::from_element(1, v)).collect(), Padding::Zero).unwrap()
}

fn window(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, len)
}

fn weighting() -> impl Strategy<Value = WeightingSequence<f64>> {
    prop_oneof![
        (0.05f64..0.99).prop_map(|r| WeightingSequence::geometric(r).unwrap()),
        (1.0f64..3.0, 0.5f64..0.99).prop_map(|(p, tail)| {
            let values = (0..30).map(|t| 1.0 / ((1 + t) as f64).powf(p)).collect();
            WeightingSequence::tabulated(values, tail).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_metric_axioms(a in window(12), b in window(12), c in window(12), w in weighting(), m in 0.1f64..3.0) {
        let (x, y, z) = (signal(&a), signal(&b), signal(&c));
        let d = |p: &BoundedSignal<f64>, q: &BoundedSignal<f64>| weighted_metric(p, q, &w, m).unwrap();
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-15);
        prop_assert!(d(&x, &y) <= m);
    }

    #[test]
    fn weighted_norm_below_sup_norm(a in window(20), w in weighting()) {
        let z = signal(&a);
        prop_assert!(weighted_norm(&z, &w).unwrap().value <= sup_norm(&z).unwrap().value);
    }

    #[test]
    fn weighted_norm_is_a_norm(a in window(15), b in window(15), s in -4.0f64..4.0, w in weighting()) {
        let n = |v: Vec<f64>| weighted_norm(&free(v), &w).unwrap().value;
        let scaled = n(a.iter().map(|v| s * v).collect());
        prop_assert!((scaled - s.abs() * n(a.clone())).abs() <= 1e-12);
        let sum = n(a.iter().zip(&b).map(|(x, y)| x + y).collect());
        prop_assert!(sum <= n(a.clone()) + n(b.clone()) + 1e-12);
    }

    #[test]
    fn psi_and_phi_are_linear(ta in window(4), tb in window(3), alpha in -2.0f64..2.0, z in window(25)) {
        let z = signal(&z);
        let (ha, hb) = (Functional::linear_fir(1, 1.0, ta.clone()), Functional::linear_fir(1, 1.0, tb.clone()));
        let lhs = filter_from_functional(&ha.combine(alpha, &hb).unwrap()).evaluate(&z).unwrap();
        let rhs = filter_from_functional(&ha).combine(alpha, &filter_from_functional(&hb)).unwrap().evaluate(&z).unwrap();
        for (p, q) in lhs.signal.window().iter().zip(rhs.signal.window()) {
            prop_assert!((p - q).norm() <= 1e-12);
        }

        let (ua, ub) = (Filter::moving_sum(1, 1.0, ta.len()), Filter::delay(1, 1.0, tb.len()));
        let lhs = functional_from_filter(&ua.combine(alpha, &ub).unwrap()).unwrap().evaluate(&z).unwrap();
        let rhs = functional_from_filter(&ua).unwrap().combine(alpha, &functional_from_filter(&ub).unwrap()).unwrap().evaluate(&z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn budget_meets_both_requirements(eps in 1e-4f64..1.0, l in 0.1f64..10.0, kf in 0.01f64..0.99, l1f in 0.0f64..0.99, w1 in 0.01f64..10.0) {
        let k = kf * l / (l + 1.0);
        let l1 = l1f * l;
        let b = make_error_budget(eps, k, l, l1, w1).unwrap();
        prop_assert!(b.eps2 > 0.0);
        prop_assert!(b.output_bound(b.eps2) <= b.eps / 2.0 * (1.0 + 1e-12));
        prop_assert!(l1 + b.eps2 < l);
        prop_assert_eq!(b.eps1 + b.eps1, eps);
    }

    #[test]
    fn readout_ignores_sample_order(seed in 0u64..1000, n in 2usize..6, count in 10usize..40, lambda in 0.0f64..1e-3) {
        let mut g = rng::seeded(seed);
        let states: Vec<DVector<f64>> = (0..count).map(|_| rng::in_ball(&mut g, n, 1.0)).collect();
        let teachers: Vec<DVector<f64>> = (0..count).map(|_| rng::in_ball(&mut g, 2, 1.0)).collect();
        let w = fit_readout(&states, &teachers, lambda + 1e-8).unwrap();
        let order: Vec<usize> = (0..count).map(|i| (i * 7 + seed as usize) % count).collect();
        let mut seen = order.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assume!(seen.len() == count);
        let ps: Vec<_> = order.iter().map(|&i| states[i].clone()).collect();
        let pt: Vec<_> = order.iter().map(|&i| teachers[i].clone()).collect();
        let wp = fit_readout(&ps, &pt, lambda + 1e-8).unwrap();
        prop_assert!((&w - &wp).norm() <= 1e-8 * (1.0 + w.norm()));
    }

    #[test]
    fn esp_forgets_initial_state(seed in 0u64..1000, n in 1usize..12, rho in 0.05f64..0.95) {
        let esn = EsnParams::<f64>::random(&RandomEsn {
            state_dim: n, input_dim: 2, output_dim: 1, rho, input_scale: 1.0, bias_scale: 0.3,
            activation: Activation::LogisticRescaled, seed,
        }).unwrap();
        let sys = esn.to_system(1.0).unwrap();
        let mut g = rng::seeded(seed + 1);
        let l = (n as f64).sqrt();
        let (a, b): (DVector<f64>, DVector<f64>) = (rng::in_ball(&mut g, n, l), rng::in_ball(&mut g, n, l));
        let window: Vec<DVector<f64>> = (0..60).map(|_| rng::in_ball(&mut g, 2, 1.0)).collect();
        let z = BoundedSignal::new(2, window, 1.0, Padding::Zero).unwrap();
        let (ta, tb) = (trajectory(&sys, &a, &z).unwrap(), trajectory(&sys, &b, &z).unwrap());
        let d0 = (&a - &b).norm();
        for (k, (x, y)) in ta.iter().zip(&tb).enumerate() {
            prop_assert!((x - y).norm() <= rho.powi(k as i32 + 1) * d0 + 1e-12);
        }
    }

    #[test]
    fn certified_sas_keeps_states_in_image_ball(seed in 0u64..1000, n1 in 1usize..4, n in 1usize..3, fp in 0.1f64..0.99, fq in 0.1f64..0.99) {
        let (k, l) = (0.45, 3.0);
        let sas = SasParams::<f64>::random(&RandomSas {
            state_dim: n1, input_dim: n, output_dim: 1, degrees: (2, 2), k, fill_p: fp, fill_q: fq, seed,
        }).unwrap();
        let verdict = sas_certificate(&sas, k, l, 500, seed).unwrap();
        prop_assert!(verdict.certified(), "{:?}", verdict.failures);
        let mut g = rng::seeded(seed + 7);
        for _ in 0..200 {
            let x: DVector<f64> = rng::in_ball(&mut g, n1, l);
            let z: DVector<f64> = rng::in_ball(&mut g, n, 1.0 - 1e-9);
            let next = sas.step(&x, &z).unwrap();
            prop_assert!(next.norm() <= k * l + k + 1e-12);
        }
    }
}

#[test]
fn single_precision_norms_agree_with_double() {
    let values = [0.5, -0.25, 0.75, 0.0, -1.0];
    let z64 = signal(&values);
    let z32 = BoundedSignal::<f32>::from_scalars(&values.map(|v| v as f32), 1.0, Padding::Zero).unwrap();
    let (w64, w32) = (WeightingSequence::geometric(0.5).unwrap(), WeightingSequence::<f32>::geometric(0.5).unwrap());
    let (a, b) = (weighted_norm(&z64, &w64).unwrap().value, weighted_norm(&z32, &w32).unwrap().value);
    assert!((a - b as f64).abs() < 1e-6);
    let m = DMatrix::<f32>::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
    assert!((rcuniv::linalg::spectral_norm(&m).unwrap() - 0.5).abs() < 1e-6);
}
