use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// How the left-infinite sequence continues before the stored window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Zero,
    /// Repeat the oldest window entry, the one at `t = −(T−1)`.
    Constant,
}

/// Finite window of a left-infinite sequence in `K_M`.
///
/// Entries are indexed `t = −(T−1)..=0` and stored oldest first, so the most
/// recent value `z_0` is the last element.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedSignal<T: Real> {
    dim: usize,
    window: Vec<DVector<T>>,
    bound: T,
    padding: Padding,
}

pub(crate) fn bound_slack<T: Real>(bound: T) -> T {
    bound * T::default_epsilon() * T::lit(8.0)
}

impl<T: Real> BoundedSignal<T> {
    pub fn new(dim: usize, window: Vec<DVector<T>>, bound: T, padding: Padding) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::EmptyWindow);
        }
        if !(bound > T::zero()) || !bound.is_finite_val() {
            return Err(Error::InvalidParameter("signal bound must be positive and finite".into()));
        }
        let len = window.len() as i64;
        let limit = bound + bound_slack(bound);
        for (i, z) in window.iter().enumerate() {
            if z.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: z.len() });
            }
            if z.iter().any(|v| !v.is_finite_val()) {
                return Err(Error::NonFinite("signal entry"));
            }
            let norm = z.norm();
            if norm > limit {
                return Err(Error::BoundViolation {
                    t: i as i64 - (len - 1),
                    norm: norm.as_f64(),
                    bound: bound.as_f64(),
                });
            }
        }
        Ok(Self { dim, window, bound, padding })
    }

    /// Scalar signal from values ordered oldest first.
    pub fn from_scalars(values: &[T], bound: T, padding: Padding) -> Result<Self> {
        let window = values.iter().map(|&v| DVector::from_element(1, v)).collect();
        Self::new(1, window, bound, padding)
    }

    /// Signal whose bound is the largest entry norm (used for filter outputs).
    pub fn enclosing(dim: usize, window: Vec<DVector<T>>, padding: Padding) -> Result<Self> {
        let max = window.iter().map(|z| z.norm()).fold(T::zero(), |m, v| if v > m { v } else { m });
        let bound = if max > T::zero() { max } else { T::one() };
        Self::new(dim, window, bound, padding)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn window(&self) -> &[DVector<T>] {
        &self.window
    }

    /// Time index of the oldest stored entry, `−(T−1)`.
    pub fn oldest_time(&self) -> i64 {
        -(self.window.len() as i64 - 1)
    }

    pub fn time_of(&self, index: usize) -> i64 {
        index as i64 + self.oldest_time()
    }

    /// Window index of time `t`, if stored.
    pub fn index_of(&self, t: i64) -> Option<usize> {
        if t > 0 || t < self.oldest_time() {
            None
        } else {
            Some((t - self.oldest_time()) as usize)
        }
    }

    pub fn padding_value(&self) -> DVector<T> {
        match self.padding {
            Padding::Zero => DVector::zeros(self.dim),
            Padding::Constant => self.window[0].clone(),
        }
    }

    /// Value of the denoted left-infinite sequence at `t ≤ 0`.
    ///
    /// # Panics
    /// If `t > 0`.
    pub fn at(&self, t: i64) -> DVector<T> {
        assert!(t <= 0, "signals live on non-positive times, got t={t}");
        match self.index_of(t) {
            Some(i) => self.window[i].clone(),
            None => self.padding_value(),
        }
    }

    /// Restriction to times `≤ t`, re-indexed so that `t` becomes the new `0`.
    pub fn truncated_to(&self, t: i64) -> Result<Self> {
        let idx = self
            .index_of(t)
            .ok_or_else(|| Error::InvalidParameter(format!("time {t} is outside the window")))?;
        Ok(Self {
            dim: self.dim,
            window: self.window[..=idx].to_vec(),
            bound: self.bound,
            padding: self.padding,
        })
    }

    pub fn with_bound(&self, bound: T) -> Result<Self> {
        Self::new(self.dim, self.window.clone(), bound, self.padding)
    }

    pub fn map_window(&self, f: impl FnMut(&DVector<T>) -> DVector<T>) -> Result<Self> {
        let window: Vec<_> = self.window.iter().map(f).collect();
        let dim = window.first().map_or(self.dim, |v| v.len());
        Self::enclosing(dim, window, self.padding)
    }

    pub fn into_window(self) -> Vec<DVector<T>> {
        self.window
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_and_padding() {
        let z = BoundedSignal::from_scalars(&[1.0, 2.0, 3.0], 3.0, Padding::Zero).unwrap();
        assert_eq!(z.oldest_time(), -2);
        assert_eq!(z.at(0)[0], 3.0);
        assert_eq!(z.at(-2)[0], 1.0);
        assert_eq!(z.at(-5)[0], 0.0);
        let c = BoundedSignal::from_scalars(&[1.0, 2.0, 3.0], 3.0, Padding::Constant).unwrap();
        assert_eq!(c.at(-9)[0], 1.0);
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(matches!(
            BoundedSignal::<f64>::from_scalars(&[], 1.0, Padding::Zero),
            Err(Error::EmptyWindow)
        ));
        assert!(matches!(
            BoundedSignal::from_scalars(&[0.5, 1.5], 1.0, Padding::Zero),
            Err(Error::BoundViolation { t: 0, .. })
        ));
        let w = vec![DVector::from_vec(vec![0.1, 0.2]), DVector::from_vec(vec![0.1])];
        assert!(matches!(
            BoundedSignal::new(2, w, 1.0, Padding::Zero),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn truncation_keeps_the_past() {
        let z = BoundedSignal::from_scalars(&[1.0, 2.0, 3.0, 4.0], 4.0, Padding::Constant).unwrap();
        let tr = z.truncated_to(-1).unwrap();
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.at(0)[0], 3.0);
        assert_eq!(tr.at(-7)[0], 1.0);
    }
}
