use std::fmt;
use std::sync::Arc;

use crate::{Error, Real, Result};

/// Grid used to validate activations: points over `[−20, 20]`.
const GRID_POINTS: usize = 100_000;
const GRID_HALF_WIDTH: f64 = 20.0;

/// Squashing function `σ` with its Lipschitz constant `L_σ`.
#[derive(Clone)]
pub enum Activation {
    Tanh,
    /// `2/(1 + e^{−x}) − 1`, evaluated as `tanh(x/2)`.
    LogisticRescaled,
    Custom { name: String, lipschitz: f64, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tanh => f.write_str("Tanh"),
            Self::LogisticRescaled => f.write_str("LogisticRescaled"),
            Self::Custom { name, lipschitz, .. } => write!(f, "Custom({name}, L={lipschitz})"),
        }
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Tanh, Self::Tanh) | (Self::LogisticRescaled, Self::LogisticRescaled) => true,
            (Self::Custom { f: a, .. }, Self::Custom { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Largest finite-difference slope, monotonicity and range on the check grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivationScan {
    pub max_slope: f64,
    pub non_decreasing: bool,
    pub in_range: bool,
}

pub fn scan(f: impl Fn(f64) -> f64) -> ActivationScan {
    let h = 2.0 * GRID_HALF_WIDTH / (GRID_POINTS - 1) as f64;
    let mut prev = f(-GRID_HALF_WIDTH);
    let mut out = ActivationScan { max_slope: 0.0, non_decreasing: true, in_range: (-1.0..=1.0).contains(&prev) };
    for i in 1..GRID_POINTS {
        let y = f(-GRID_HALF_WIDTH + i as f64 * h);
        out.in_range &= (-1.0..=1.0).contains(&y);
        out.non_decreasing &= y >= prev;
        out.max_slope = out.max_slope.max((y - prev).abs() / h);
        prev = y;
    }
    out
}

impl Activation {
    /// A user activation, accepted only if sampling agrees with its declared
    /// Lipschitz constant, it is non-decreasing and it maps into `[−1, 1]`.
    pub fn custom(name: impl Into<String>, lipschitz: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let name = name.into();
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::InvalidParameter(format!("activation {name}: Lipschitz constant must be positive")));
        }
        let s = scan(&f);
        if !s.non_decreasing || !s.in_range {
            return Err(Error::InvalidParameter(format!("activation {name} is not a squashing function")));
        }
        if s.max_slope > lipschitz * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "activation {name}: sampled slope {} exceeds declared Lipschitz constant {lipschitz}",
                s.max_slope
            )));
        }
        Ok(Self::Custom { name, lipschitz, f: Arc::new(f) })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Tanh => "tanh",
            Self::LogisticRescaled => "logistic-rescaled",
            Self::Custom { name, .. } => name,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "tanh" => Ok(Self::Tanh),
            "logistic-rescaled" => Ok(Self::LogisticRescaled),
            other => Err(Error::UnsupportedKind(format!("activation {other}"))),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Tanh => 1.0,
            Self::LogisticRescaled => 0.5,
            Self::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn apply<T: Real>(&self, x: T) -> T {
        match self {
            Self::Tanh => x.tanh(),
            Self::LogisticRescaled => (x * T::lit(0.5)).tanh(),
            Self::Custom { f, .. } => T::lit(f(x.as_f64())),
        }
    }
}
