use serde::Serialize;

use super::{BoundedSignal, Padding, WeightingSequence};
use crate::{rng, Error, Real, Result};

/// A norm evaluated on a finite window with a certified allowance for what the
/// padded past could add: `value ≤ true norm ≤ value + tail_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormReport<T: Real> {
    pub value: T,
    pub tail_bound: T,
    pub exact: bool,
}

/// `‖z‖_w = sup_t ‖z_t‖ w_{−t}` over the window, with the padding tail bounded by `M·w_T`.
pub fn weighted_norm<T: Real>(z: &BoundedSignal<T>, w: &WeightingSequence<T>) -> Result<NormReport<T>> {
    if z.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let len = z.len();
    let value = z
        .window()
        .iter()
        .rev()
        .enumerate()
        .map(|(lag, zt)| zt.norm() * w.weight(lag))
        .fold(T::zero(), |m, v| if v > m { v } else { m });
    let (tail_bound, exact) = match z.padding() {
        Padding::Zero => (T::zero(), true),
        Padding::Constant => {
            // the padded tail is constant, so its weighted sup sits at lag T
            let tail = z.padding_value().norm() * w.weight(len);
            (z.bound() * w.weight(len), tail <= value)
        }
    };
    Ok(NormReport { value, tail_bound, exact })
}

/// `‖z‖_∞`. The padding never exceeds the window maximum (it is zero or the
/// oldest entry), so the result is always exact.
pub fn sup_norm<T: Real>(z: &BoundedSignal<T>) -> Result<NormReport<T>> {
    if z.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let value = z.window().iter().map(|v| v.norm()).fold(T::zero(), |m, v| if v > m { v } else { m });
    Ok(NormReport { value, tail_bound: T::zero(), exact: true })
}

/// `D^M_w(x, y) = sup_t min(‖x_t − y_t‖, M) · w_{−t}` over the denoted sequences.
///
/// Beyond both windows the difference is constant (both sequences are padded),
/// so the tail contributes exactly `min(‖p_x − p_y‖, M) · w_{T_max}`.
pub fn weighted_metric<T: Real>(
    x: &BoundedSignal<T>,
    y: &BoundedSignal<T>,
    w: &WeightingSequence<T>,
    m: T,
) -> Result<T> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    if !(m > T::zero()) {
        return Err(Error::InvalidParameter("metric clamp M must be positive".into()));
    }
    let span = x.len().max(y.len());
    let clamp = |d: T| if d < m { d } else { m };
    let mut sup = T::zero();
    for lag in 0..span {
        let t = -(lag as i64);
        let d = clamp((x.at(t) - y.at(t)).norm()) * w.weight(lag);
        if d > sup {
            sup = d;
        }
    }
    let tail = clamp((x.padding_value() - y.padding_value()).norm()) * w.weight(span);
    Ok(if tail > sup { tail } else { sup })
}

/// Upper bound `2M·w_T` on `‖z − z′‖_w` for `z, z′ ∈ K_M` agreeing on the last `T` steps.
pub fn tail_divergence_bound<T: Real>(len: usize, m: T, w: &WeightingSequence<T>) -> T {
    T::lit(2.0) * m * w.weight(len)
}

/// Deterministic draws of `count` zero-padded signals with entries uniform on
/// the closed ball of radius `m`.
pub fn sample_km<T: Real>(dim: usize, m: T, len: usize, count: usize, seed: u64) -> Result<Vec<BoundedSignal<T>>> {
    if dim == 0 || len == 0 || !(m > T::zero()) {
        return Err(Error::InvalidParameter("sample_km needs positive dimension, bound and length".into()));
    }
    let mut rng = rng::seeded(seed);
    (0..count)
        .map(|_| {
            let window = (0..len).map(|_| rng::in_ball(&mut rng, dim, m.as_f64())).collect::<Vec<_>>();
            let window = window.into_iter().map(|v| rng::clamp_norm(v, m)).collect();
            BoundedSignal::new(dim, window, m, Padding::Zero)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn geo(r: f64) -> WeightingSequence<f64> {
        WeightingSequence::geometric(r).unwrap()
    }

    #[test]
    fn weighted_norm_examples() {
        let zero = BoundedSignal::from_scalars(&[0.0; 6], 1.0, Padding::Zero).unwrap();
        let r = weighted_norm(&zero, &geo(0.3)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.exact);

        let c = BoundedSignal::from_scalars(&[-0.7; 5], 1.0, Padding::Constant).unwrap();
        let r = weighted_norm(&c, &geo(0.5)).unwrap();
        assert_eq!(r.value, 0.7);
        assert!(r.exact);

        let spike = BoundedSignal::from_scalars(&[0.0, 3.0, 0.0, 0.0], 3.0, Padding::Zero).unwrap();
        assert_eq!(weighted_norm(&spike, &geo(0.5)).unwrap().value, 0.75);
    }

    #[test]
    fn constant_padding_reports_tail() {
        let z = BoundedSignal::from_scalars(&[1.0, 0.0, 0.0], 1.0, Padding::Constant).unwrap();
        let r = weighted_norm(&z, &geo(0.5)).unwrap();
        assert_eq!(r.value, 0.25);
        assert_eq!(r.tail_bound, 0.125);
        assert!(r.exact);
        let big_recent = BoundedSignal::from_scalars(&[0.1, 0.0, 0.0], 1.0, Padding::Constant).unwrap();
        assert!(weighted_norm(&big_recent, &geo(0.9)).unwrap().exact);
    }

    #[test]
    fn sup_norm_examples() {
        let z = BoundedSignal::new(
            2,
            vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, -2.0])],
            2.0,
            Padding::Zero,
        )
        .unwrap();
        assert_eq!(sup_norm(&z).unwrap().value, 2.0);
        let c = BoundedSignal::from_scalars(&[0.9, 0.2, 0.1], 1.0, Padding::Constant).unwrap();
        assert_eq!(sup_norm(&c).unwrap().value, 0.9);
    }

    #[test]
    fn metric_examples() {
        let x = BoundedSignal::from_scalars(&[0.3, 0.1, 5.0], 5.0, Padding::Zero).unwrap();
        let y = BoundedSignal::from_scalars(&[0.3, 0.1, 0.0], 5.0, Padding::Zero).unwrap();
        assert_eq!(weighted_metric(&x, &x, &geo(0.5), 1.0).unwrap(), 0.0);
        assert_eq!(weighted_metric(&x, &y, &geo(0.5), 1.0).unwrap(), 1.0);

        let a = BoundedSignal::from_scalars(&[0.4, 0.0, 0.0, 0.0], 1.0, Padding::Zero).unwrap();
        let b = BoundedSignal::from_scalars(&[0.0, 0.0, 0.0, 0.0], 1.0, Padding::Zero).unwrap();
        assert!((weighted_metric(&a, &b, &geo(0.5), 1.0).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn metric_handles_unequal_windows() {
        let a = BoundedSignal::from_scalars(&[0.5, 0.0], 1.0, Padding::Constant).unwrap();
        let b = BoundedSignal::from_scalars(&[0.0, 0.0, 0.0, 0.0], 1.0, Padding::Zero).unwrap();
        // a continues as 0.5 forever into the past; the largest weight there is at lag 1
        let d = weighted_metric(&a, &b, &geo(0.5), 1.0).unwrap();
        assert_eq!(d, 0.25);
    }

    #[test]
    fn tail_bound_examples() {
        assert_eq!(tail_divergence_bound(0, 1.5, &geo(0.5)), 3.0);
        assert!((tail_divergence_bound(10, 1.0, &geo(0.5)) - 1.953125e-3).abs() < 1e-15);
        let tab = WeightingSequence::tabulated(vec![1.0f64, 0.5, 0.1, 0.01], 0.5).unwrap();
        assert!((tail_divergence_bound(3, 2.0, &tab) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn sampling_contract() {
        assert!(sample_km::<f64>(2, 1.0, 5, 0, 1).unwrap().is_empty());
        let a = sample_km::<f64>(3, 0.8, 20, 4, 11).unwrap();
        let b = sample_km::<f64>(3, 0.8, 20, 4, 11).unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert!(s.window().iter().all(|v| v.norm() <= 0.8));
        }
    }
}
