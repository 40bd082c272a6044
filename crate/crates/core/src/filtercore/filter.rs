use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use super::Functional;
use crate::seqspace::BoundedSignal;
use crate::{Error, Real, Result};

/// Output window of a filter evaluation. Entries before `clean_from` may depend
/// on the padding rule rather than on the input alone.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutput<T: Real> {
    pub signal: BoundedSignal<T>,
    pub clean_from: usize,
}

impl<T: Real> FilterOutput<T> {
    pub fn is_clean(&self, index: usize) -> bool {
        index >= self.clean_from
    }

    pub fn last(&self) -> &DVector<T> {
        self.signal.window().last().expect("non-empty")
    }
}

pub type FilterFn<T> = dyn Fn(&BoundedSignal<T>) -> Result<FilterOutput<T>> + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct FilterFlags {
    pub causal: bool,
    pub time_invariant: bool,
}

impl FilterFlags {
    pub const CAUSAL_TI: Self = Self { causal: true, time_invariant: true };
}

/// A map `U: K_M → (ℝ^d)^{ℤ₋}` evaluated on windows, producing an output window
/// of the same length.
#[derive(Clone)]
pub struct Filter<T: Real> {
    label: String,
    input_dim: usize,
    input_bound: T,
    output_dim: usize,
    flags: FilterFlags,
    memory: Option<usize>,
    eval: Arc<FilterFn<T>>,
}

impl<T: Real> fmt::Debug for Filter<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Filter")
            .field("label", &self.label)
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .field("flags", &self.flags)
            .field("memory", &self.memory)
            .finish()
    }
}

impl<T: Real> Filter<T> {
    pub fn new(
        label: impl Into<String>,
        input_dim: usize,
        input_bound: T,
        output_dim: usize,
        flags: FilterFlags,
        memory: Option<usize>,
        eval: impl Fn(&BoundedSignal<T>) -> Result<FilterOutput<T>> + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), input_dim, input_bound, output_dim, flags, memory, eval: Arc::new(eval) }
    }

    /// Filter whose output at `t` is `f(z, t)` with `f` reading at most `memory`
    /// steps into the past.
    pub fn windowed(
        label: impl Into<String>,
        input_dim: usize,
        input_bound: T,
        output_dim: usize,
        flags: FilterFlags,
        memory: usize,
        f: impl Fn(&BoundedSignal<T>, i64) -> DVector<T> + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, input_dim, input_bound, output_dim, flags, Some(memory), move |z| {
            let window: Vec<_> = (0..z.len()).map(|i| f(z, z.time_of(i))).collect();
            Ok(FilterOutput {
                signal: BoundedSignal::enclosing(output_dim, window, z.padding())?,
                clean_from: memory.min(z.len()),
            })
        })
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

    pub fn flags(&self) -> FilterFlags {
        self.flags
    }

    pub fn memory(&self) -> Option<usize> {
        self.memory
    }

    pub fn evaluate(&self, z: &BoundedSignal<T>) -> Result<FilterOutput<T>> {
        if z.dim() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: z.dim() });
        }
        let out = (self.eval)(z)?;
        if out.signal.len() != z.len() {
            return Err(Error::DimensionMismatch { expected: z.len(), found: out.signal.len() });
        }
        if out.signal.dim() != self.output_dim {
            return Err(Error::DimensionMismatch { expected: self.output_dim, found: out.signal.dim() });
        }
        Ok(out)
    }

    pub fn identity(dim: usize, bound: T) -> Self {
        Self::windowed("identity", dim, bound, dim, FilterFlags::CAUSAL_TI, 0, |z, t| z.at(t))
    }

    /// `U(z)_t = z_{t−k}`.
    pub fn delay(dim: usize, bound: T, k: usize) -> Self {
        Self::windowed(format!("delay-{k}"), dim, bound, dim, FilterFlags::CAUSAL_TI, k, move |z, t| {
            z.at(t - k as i64)
        })
    }

    /// `U(z)_t = Σ_{j<k} z_{t−j}`.
    pub fn moving_sum(dim: usize, bound: T, k: usize) -> Self {
        let memory = k.saturating_sub(1);
        Self::windowed(format!("moving-sum-{k}"), dim, bound, dim, FilterFlags::CAUSAL_TI, memory, move |z, t| {
            (0..k as i64).fold(DVector::zeros(dim), |acc, j| acc + z.at(t - j))
        })
    }

    /// Pointwise `self + alpha · other`.
    pub fn combine(&self, alpha: T, other: &Self) -> Result<Self> {
        if self.input_dim != other.input_dim || self.output_dim != other.output_dim {
            return Err(Error::DimensionMismatch { expected: self.output_dim, found: other.output_dim });
        }
        let (a, b) = (self.clone(), other.clone());
        let flags = FilterFlags {
            causal: a.flags.causal && b.flags.causal,
            time_invariant: a.flags.time_invariant && b.flags.time_invariant,
        };
        let memory = match (a.memory, b.memory) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        let bound = if a.input_bound < b.input_bound { a.input_bound } else { b.input_bound };
        let d = self.output_dim;
        Ok(Self::new(
            format!("{} + {:?}·{}", a.label, alpha, b.label),
            self.input_dim,
            bound,
            d,
            flags,
            memory,
            move |z| {
                let ua = a.evaluate(z)?;
                let ub = b.evaluate(z)?;
                let window: Vec<_> =
                    ua.signal.window().iter().zip(ub.signal.window()).map(|(x, y)| x + y * alpha).collect();
                Ok(FilterOutput {
                    signal: BoundedSignal::enclosing(d, window, z.padding())?,
                    clean_from: ua.clean_from.max(ub.clean_from),
                })
            },
        ))
    }
}

/// `T_τ(z)_t = z_{t−τ}` restricted to the window: the `τ` most recent entries
/// are dropped and the window shrinks by `τ`.
pub fn time_delay<T: Real>(z: &BoundedSignal<T>, tau: usize) -> Result<BoundedSignal<T>> {
    if tau >= z.len() {
        return Err(Error::EmptyWindow);
    }
    BoundedSignal::new(z.dim(), z.window()[..z.len() - tau].to_vec(), z.bound(), z.padding())
}

/// `T_τ` keeping the window length: the `τ` vacated oldest slots are filled
/// from the padding rule.
pub fn time_delay_padded<T: Real>(z: &BoundedSignal<T>, tau: usize) -> Result<BoundedSignal<T>> {
    let len = z.len();
    let window: Vec<_> = (0..len).map(|i| z.at(z.time_of(i) - tau as i64)).collect();
    BoundedSignal::new(z.dim(), window, z.bound(), z.padding())
}

/// `Ψ(U) = H_U`, `H_U(z) = U(z)_0`. Only defined for causal time-invariant filters.
pub fn functional_from_filter<T: Real>(u: &Filter<T>) -> Result<Functional<T>> {
    if !(u.flags.causal && u.flags.time_invariant) {
        return Err(Error::NotCausalTi(u.label.clone()));
    }
    let inner = u.clone();
    Ok(Functional::new(
        format!("psi({})", u.label),
        u.input_dim,
        u.input_bound,
        u.output_dim,
        u.memory,
        move |z| Ok(inner.evaluate(z)?.last().clone()),
    ))
}

/// `Φ(H) = U_H`, `U_H(z)_t = H((P_{ℤ₋} ∘ T_{−t})(z))`.
pub fn filter_from_functional<T: Real>(h: &Functional<T>) -> Filter<T> {
    let inner = h.clone();
    let d = h.output_dim();
    let memory = h.memory();
    Filter::new(
        format!("phi({})", h.label()),
        h.input_dim(),
        h.input_bound(),
        d,
        FilterFlags::CAUSAL_TI,
        memory,
        move |z| {
            let window = (0..z.len())
                .map(|i| inner.evaluate(&z.truncated_to(z.time_of(i))?))
                .collect::<Result<Vec<_>>>()?;
            Ok(FilterOutput {
                signal: BoundedSignal::enclosing(d, window, z.padding())?,
                clean_from: memory.unwrap_or(0).min(z.len()),
            })
        },
    )
}
