use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// A decreasing weighting sequence `w: ℕ → (0, 1]` with zero limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightingSequence<T: Real> {
    /// `w_t = λ^t`.
    Geometric { rate: T },
    /// Explicit leading values followed by a geometric tail:
    /// `w_t = values[last] · tail_rate^(t − last)` past the table.
    Tabulated { values: Vec<T>, tail_rate: T },
}

impl<T: Real> WeightingSequence<T> {
    pub fn geometric(rate: T) -> Result<Self> {
        if !(rate > T::zero() && rate < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "geometric rate must lie in (0,1), got {:?}",
                rate
            )));
        }
        Ok(Self::Geometric { rate })
    }

    pub fn tabulated(values: Vec<T>, tail_rate: T) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("tabulated weighting needs at least one value".into()));
        }
        if !(tail_rate > T::zero() && tail_rate < T::one()) {
            return Err(Error::InvalidParameter("tail rate must lie in (0,1)".into()));
        }
        let mut prev = T::one();
        for (t, &v) in values.iter().enumerate() {
            if !(v > T::zero() && v <= T::one()) {
                return Err(Error::InvalidParameter(format!("w_{t} = {v:?} is outside (0,1]")));
            }
            if v > prev {
                return Err(Error::InvalidParameter(format!("weighting increases at t={t}")));
            }
            prev = v;
        }
        Ok(Self::Tabulated { values, tail_rate })
    }

    /// `w_t`.
    pub fn weight(&self, t: usize) -> T {
        match self {
            Self::Geometric { rate } => pow(*rate, t),
            Self::Tabulated { values, tail_rate } => {
                if t < values.len() {
                    values[t]
                } else {
                    let last = values.len() - 1;
                    values[last] * pow(*tail_rate, t - last)
                }
            }
        }
    }

    /// Smallest `T` with `w_T < eta`.
    pub fn index_below(&self, eta: T) -> Result<usize> {
        if !(eta > T::zero()) {
            return Err(Error::InvalidParameter("eta must be positive".into()));
        }
        let (start, base, rate) = match self {
            Self::Geometric { rate } => (0usize, T::one(), *rate),
            Self::Tabulated { values, tail_rate } => {
                if let Some(t) = values.iter().position(|&v| v < eta) {
                    return Ok(t);
                }
                (values.len() - 1, values[values.len() - 1], *tail_rate)
            }
        };
        if base < eta {
            return Ok(start);
        }
        // base·rate^k < eta  ⇔  k > ln(eta/base)/ln(rate)
        let guess = ((eta / base).as_f64().ln() / rate.as_f64().ln()).floor().max(0.0) as usize;
        let mut k = guess.saturating_sub(1);
        while self.weight(start + k) >= eta {
            k += 1;
        }
        while k > 0 && self.weight(start + k - 1) < eta {
            k -= 1;
        }
        Ok(start + k)
    }
}

fn pow<T: Real>(base: T, t: usize) -> T {
    if t <= i32::MAX as usize {
        base.powi(t as i32)
    } else {
        T::zero()
    }
}
