use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::seqspace::BoundedSignal;
use crate::{Error, Real, Result};

pub type FunctionalFn<T> = dyn Fn(&BoundedSignal<T>) -> Result<DVector<T>> + Send + Sync;

/// A map `H: K_M → ℝ^d` from left-infinite inputs to vectors.
#[derive(Clone)]
pub struct Functional<T: Real> {
    label: String,
    input_dim: usize,
    input_bound: T,
    output_dim: usize,
    /// `Some(m)`: the value depends only on `z_{−m..=0}` (window plus padding).
    memory: Option<usize>,
    eval: Arc<FunctionalFn<T>>,
}

impl<T: Real> fmt::Debug for Functional<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional")
            .field("label", &self.label)
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .field("memory", &self.memory)
            .finish()
    }
}

impl<T: Real> Functional<T> {
    pub fn new(
        label: impl Into<String>,
        input_dim: usize,
        input_bound: T,
        output_dim: usize,
        memory: Option<usize>,
        eval: impl Fn(&BoundedSignal<T>) -> Result<DVector<T>> + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), input_dim, input_bound, output_dim, memory, eval: Arc::new(eval) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn input_bound(&self) -> T {
        self.input_bound
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn memory(&self) -> Option<usize> {
        self.memory
    }

    pub fn evaluate(&self, z: &BoundedSignal<T>) -> Result<DVector<T>> {
        if z.dim() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: z.dim() });
        }
        let y = (self.eval)(z)?;
        if y.len() != self.output_dim {
            return Err(Error::DimensionMismatch { expected: self.output_dim, found: y.len() });
        }
        Ok(y)
    }

    /// `H(z) = c`.
    pub fn constant(input_dim: usize, input_bound: T, value: DVector<T>) -> Self {
        let d = value.len();
        Self::new("constant", input_dim, input_bound, d, Some(0), move |_| Ok(value.clone()))
    }

    /// `H(z) = z_0`.
    pub fn current_value(input_dim: usize, input_bound: T) -> Self {
        Self::new("current-value", input_dim, input_bound, input_dim, Some(0), |z| Ok(z.at(0)))
    }

    /// `H(z) = Σ_k coeffs[k] · z_{−k}`.
    pub fn linear_fir(input_dim: usize, input_bound: T, coeffs: Vec<T>) -> Self {
        let memory = coeffs.len().saturating_sub(1);
        Self::new("linear-fir", input_dim, input_bound, input_dim, Some(memory), move |z| {
            let mut acc = DVector::zeros(z.dim());
            for (k, &a) in coeffs.iter().enumerate() {
                acc += z.at(-(k as i64)) * a;
            }
            Ok(acc)
        })
    }

    /// Pointwise `self + alpha · other`.
    pub fn combine(&self, alpha: T, other: &Self) -> Result<Self> {
        if self.input_dim != other.input_dim || self.output_dim != other.output_dim {
            return Err(Error::DimensionMismatch { expected: self.output_dim, found: other.output_dim });
        }
        let (a, b) = (self.clone(), other.clone());
        let memory = match (self.memory, other.memory) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        let bound = if self.input_bound < other.input_bound { self.input_bound } else { other.input_bound };
        Ok(Self::new(
            format!("{} + {:?}·{}", self.label, alpha, other.label),
            self.input_dim,
            bound,
            self.output_dim,
            memory,
            move |z| Ok(a.evaluate(z)? + b.evaluate(z)? * alpha),
        ))
    }
}
