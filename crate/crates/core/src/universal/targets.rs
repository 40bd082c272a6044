use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::filtercore::{Filter, FilterFlags, FilterOutput};
use crate::seqspace::BoundedSignal;
use crate::{Error, Real, Result};

/// One Volterra monomial `coef · Π_j z_{t−lags[j]}` of a scalar input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolterraTerm {
    pub coef: f64,
    pub lags: Vec<usize>,
}

#[derive(Clone, Debug)]
pub enum TargetFilter<T: Real> {
    /// NARMA recursion of the given order driven by `u = (z/M + 1)/4 ∈ [0, 0.5]`.
    Narma { order: usize, input_bound: T, washout: usize },
    /// Truncated Volterra series of a scalar input.
    Volterra { terms: Vec<VolterraTerm>, depth: usize, degree: usize, input_bound: T },
    User(Filter<T>),
}

impl<T: Real> TargetFilter<T> {
    pub fn narma(order: usize, input_bound: T, washout: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!("NARMA order {order} must be at least 2")));
        }
        if !(input_bound > T::zero()) {
            return Err(Error::InvalidParameter("input bound must be positive".into()));
        }
        Ok(Self::Narma { order, input_bound, washout })
    }

    /// Checks every term against the declared memory depth (lags below it)
    /// and degree (at most that many factors).
    pub fn volterra(terms: Vec<VolterraTerm>, depth: usize, degree: usize, input_bound: T) -> Result<Self> {
        for (i, term) in terms.iter().enumerate() {
            if !term.coef.is_finite() {
                return Err(Error::Kernel(format!("term {i}: coefficient is not finite")));
            }
            if term.lags.len() > degree {
                return Err(Error::Kernel(format!("term {i}: {} factors exceed degree {degree}", term.lags.len())));
            }
            if let Some(&lag) = term.lags.iter().find(|&&l| l >= depth) {
                return Err(Error::Kernel(format!("term {i}: lag {lag} is not below depth {depth}")));
            }
        }
        Ok(Self::Volterra { terms, depth, degree, input_bound })
    }

    pub fn input_bound(&self) -> T {
        match self {
            Self::Narma { input_bound, .. } | Self::Volterra { input_bound, .. } => *input_bound,
            Self::User(f) => f.input_bound(),
        }
    }

    /// Human-readable description of the input map, for reports.
    pub fn input_map(&self) -> String {
        match self {
            Self::Narma { input_bound, .. } => format!("u = (z/{:?} + 1)/4 maps [-M, M] onto [0, 0.5]", input_bound),
            _ => "identity".into(),
        }
    }

    pub fn to_filter(&self) -> Filter<T> {
        match self {
            Self::Narma { order, input_bound, washout } => narma_filter(*order, *input_bound, *washout),
            Self::Volterra { terms, depth, input_bound, .. } => volterra_filter(terms.clone(), *depth, *input_bound),
            Self::User(f) => f.clone(),
        }
    }
}

/// Output `y_t` of the NARMA recursion
/// `y_t = 0.3y_{t−1} + 0.05y_{t−1}Σ_{i<order} y_{t−1−i} + 1.5u_{t−order}u_{t−1} + 0.1`,
/// with zero history before the window and `y` clamped to `[0, 1]`.
pub fn narma_outputs(u: &[f64], order: usize) -> Vec<f64> {
    let mut y = vec![0.0; u.len()];
    let at = |v: &[f64], i: isize| if i >= 0 { v[i as usize] } else { 0.0 };
    for t in 0..u.len() as isize {
        let prev = at(&y, t - 1);
        let sum: f64 = (0..order as isize).map(|i| at(&y, t - 1 - i)).sum();
        let next = 0.3 * prev + 0.05 * prev * sum + 1.5 * at(u, t - order as isize) * at(u, t - 1) + 0.1;
        y[t as usize] = next.clamp(0.0, 1.0);
    }
    y
}

fn narma_filter<T: Real>(order: usize, m: T, washout: usize) -> Filter<T> {
    let mf = m.as_f64();
    Filter::new(format!("narma{order}"), 1, m, 1, FilterFlags::CAUSAL_TI, Some(washout), move |z: &BoundedSignal<T>| {
        if z.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: z.dim() });
        }
        let u: Vec<f64> = z.window().iter().map(|v| 0.25 * (v[0].as_f64() / mf + 1.0)).collect();
        let y = narma_outputs(&u, order).into_iter().map(|v| DVector::from_element(1, T::lit(v))).collect();
        Ok(FilterOutput { signal: BoundedSignal::enclosing(1, y, z.padding())?, clean_from: washout.min(z.len()) })
    })
}

fn volterra_filter<T: Real>(terms: Vec<VolterraTerm>, depth: usize, m: T) -> Filter<T> {
    let memory = depth.saturating_sub(1);
    Filter::windowed("volterra", 1, m, 1, FilterFlags::CAUSAL_TI, memory, move |z, t| {
        let v: f64 = terms
            .iter()
            .map(|term| term.coef * term.lags.iter().map(|&l| z.at(t - l as i64)[0].as_f64()).product::<f64>())
            .sum();
        DVector::from_element(1, T::lit(v))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqspace::Padding;

    #[test]
    fn zero_input_narma_reaches_its_fixed_point() {
        // y = 0.3y + 0.05·y·10y + 0.1, i.e. 0.5y² − 0.7y + 0.1 = 0, smaller root
        let oracle = (0.7 - (0.49f64 - 0.2).sqrt()) / 1.0;
        let y = narma_outputs(&[0.0; 400], 10);
        assert!((y[399] - oracle).abs() < 1e-12, "{} vs {oracle}", y[399]);
        // the first steps only see the affine part
        assert!((y[0] - 0.1).abs() < 1e-15);
        assert!((y[1] - (0.3 * 0.1 + 0.05 * 0.1 * 0.1 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn narma_filter_maps_minus_m_to_zero_input() {
        let f = TargetFilter::narma(10, 2.0, 50).unwrap().to_filter();
        let z = BoundedSignal::from_scalars(&[-2.0; 100], 2.0, Padding::Zero).unwrap();
        let out = f.evaluate(&z).unwrap();
        assert_eq!(out.clean_from, 50);
        assert_eq!(out.last()[0], narma_outputs(&[0.0; 100], 10)[99]);
    }

    #[test]
    fn degree_one_volterra_is_a_convolution() {
        let h = [0.5, -0.25, 0.125];
        let terms = h.iter().enumerate().map(|(k, &c)| VolterraTerm { coef: c, lags: vec![k] }).collect();
        let f = TargetFilter::volterra(terms, 3, 1, 1.0).unwrap().to_filter();
        let zs = [0.1, -0.4, 0.9, 0.3, -0.7, 0.2];
        let z = BoundedSignal::from_scalars(&zs, 1.0, Padding::Zero).unwrap();
        let out = f.evaluate(&z).unwrap();
        assert_eq!(out.clean_from, 2);
        for t in 2..zs.len() {
            let conv: f64 = (0..3).map(|k| h[k] * zs[t - k]).sum();
            assert!((out.signal.window()[t][0] - conv).abs() < 1e-15);
        }
    }

    #[test]
    fn volterra_cross_term_matches_narma() {
        // 1.5·u_{t−10}·u_{t−1}
        let f = TargetFilter::volterra(vec![VolterraTerm { coef: 1.5, lags: vec![1, 10] }], 11, 2, 1.0).unwrap().to_filter();
        let us: Vec<f64> = (0..30).map(|i| 0.5 * ((i * 7 % 11) as f64) / 11.0).collect();
        let z = BoundedSignal::from_scalars(&us, 1.0, Padding::Zero).unwrap();
        let out = f.evaluate(&z).unwrap();
        for t in 10..us.len() {
            assert!((out.signal.window()[t][0] - 1.5 * us[t - 10] * us[t - 1]).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_kernels_are_rejected() {
        let bad_lag = vec![VolterraTerm { coef: 1.0, lags: vec![5] }];
        assert!(matches!(TargetFilter::<f64>::volterra(bad_lag, 5, 1, 1.0), Err(Error::Kernel(_))));
        let bad_deg = vec![VolterraTerm { coef: 1.0, lags: vec![0, 1, 2] }];
        assert!(matches!(TargetFilter::<f64>::volterra(bad_deg, 5, 2, 1.0), Err(Error::Kernel(_))));
        let nan = vec![VolterraTerm { coef: f64::NAN, lags: vec![] }];
        assert!(matches!(TargetFilter::<f64>::volterra(nan, 5, 2, 1.0), Err(Error::Kernel(_))));
    }
}
