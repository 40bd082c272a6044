use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{rng, Error, Real, Result};

pub type StateMap<T> = dyn Fn(&DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync;
pub type Readout<T> = dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMethod {
    /// `‖F(u,z) − F(v,z)‖ ≤ r‖u − v‖` holds by construction on the whole domain.
    Analytic,
    /// `r` is only a sampled lower bound on the Lipschitz constant.
    SampledLowerBoundOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionCertificate<T: Real> {
    pub rate: T,
    pub method: CertificateMethod,
    pub note: String,
}

impl<T: Real> ContractionCertificate<T> {
    pub fn analytic(rate: T, note: impl Into<String>) -> Result<Self> {
        if !(rate >= T::zero() && rate < T::one()) {
            return Err(Error::InvalidParameter(format!("contraction rate {rate:?} is outside [0,1)")));
        }
        Ok(Self { rate, method: CertificateMethod::Analytic, note: note.into() })
    }

    pub fn sampled(rate: T, note: impl Into<String>) -> Self {
        Self { rate, method: CertificateMethod::SampledLowerBoundOnly, note: note.into() }
    }

    pub fn is_analytic(&self) -> bool {
        self.method == CertificateMethod::Analytic
    }
}

/// Absolute slack allowed on ball memberships, covering rounding in `F`.
pub fn domain_slack<T: Real>(radius: T) -> T {
    let rel = radius * T::default_epsilon() * T::lit(16.0);
    let abs = T::lit(1e-9);
    if rel > abs {
        rel
    } else {
        abs
    }
}

/// A reservoir system `x_t = F(x_{t−1}, z_t)`, `y_t = h(x_t)` on the closed
/// balls of radius `L` (states) and `M` (inputs).
#[derive(Clone)]
pub struct ReservoirSystem<T: Real> {
    label: String,
    state_dim: usize,
    input_dim: usize,
    output_dim: usize,
    state_bound: T,
    input_bound: T,
    map: Arc<StateMap<T>>,
    readout: Arc<Readout<T>>,
    certificate: Option<ContractionCertificate<T>>,
}

impl<T: Real> fmt::Debug for ReservoirSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReservoirSystem")
            .field("label", &self.label)
            .field("dims", &(self.state_dim, self.input_dim, self.output_dim))
            .field("state_bound", &self.state_bound)
            .field("input_bound", &self.input_bound)
            .field("certificate", &self.certificate)
            .finish()
    }
}

/// Number of random points used by the construction-time invariance check.
const SPOT_CHECKS: usize = 256;

pub struct SystemSpec<T: Real> {
    pub label: String,
    pub state_dim: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub state_bound: T,
    pub input_bound: T,
}

impl<T: Real> ReservoirSystem<T> {
    /// Builds the system and spot-checks that `F` maps the state ball into
    /// itself on sampled interior and boundary points.
    pub fn new(
        spec: SystemSpec<T>,
        map: impl Fn(&DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync + 'static,
        readout: impl Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(spec.state_bound > T::zero() && spec.input_bound > T::zero()) {
            return Err(Error::InvalidParameter("state and input bounds must be positive".into()));
        }
        let sys = Self {
            label: spec.label,
            state_dim: spec.state_dim,
            input_dim: spec.input_dim,
            output_dim: spec.output_dim,
            state_bound: spec.state_bound,
            input_bound: spec.input_bound,
            map: Arc::new(map),
            readout: Arc::new(readout),
            certificate: None,
        };
        sys.spot_check()?;
        Ok(sys)
    }

    /// Linear readout `h(x) = W x`.
    pub fn with_linear_readout(
        spec: SystemSpec<T>,
        map: impl Fn(&DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync + 'static,
        w: DMatrix<T>,
    ) -> Result<Self> {
        if w.ncols() != spec.state_dim || w.nrows() != spec.output_dim {
            return Err(Error::DimensionMismatch { expected: spec.state_dim, found: w.ncols() });
        }
        Self::new(spec, map, move |x| &w * x)
    }

    fn spot_check(&self) -> Result<()> {
        let mut r = rng::stream(0x5eed, &self.label);
        let limit = self.state_bound + domain_slack(self.state_bound);
        for i in 0..SPOT_CHECKS {
            let (x, z): (DVector<T>, DVector<T>) = if i % 4 == 0 {
                (
                    rng::on_sphere(&mut r, self.state_dim, self.state_bound.as_f64()),
                    rng::on_sphere(&mut r, self.input_dim, self.input_bound.as_f64()),
                )
            } else {
                (
                    rng::in_ball(&mut r, self.state_dim, self.state_bound.as_f64()),
                    rng::in_ball(&mut r, self.input_dim, self.input_bound.as_f64()),
                )
            };
            let fx = (self.map)(&x, &z);
            if fx.len() != self.state_dim {
                return Err(Error::DimensionMismatch { expected: self.state_dim, found: fx.len() });
            }
            if !(fx.norm() <= limit) {
                return Err(Error::DomainViolation(format!(
                    "{}: F leaves the state ball of radius {:?} (‖F(x,z)‖ = {:?})",
                    self.label,
                    self.state_bound,
                    fx.norm()
                )));
            }
            let y = (self.readout)(&fx);
            if y.len() != self.output_dim {
                return Err(Error::DimensionMismatch { expected: self.output_dim, found: y.len() });
            }
        }
        Ok(())
    }

    pub fn with_certificate(mut self, cert: ContractionCertificate<T>) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn certificate(&self) -> Option<&ContractionCertificate<T>> {
        self.certificate.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn state_bound(&self) -> T {
        self.state_bound
    }

    pub fn input_bound(&self) -> T {
        self.input_bound
    }

    /// `F(x, z)` without domain checks.
    pub fn map_raw(&self, x: &DVector<T>, z: &DVector<T>) -> DVector<T> {
        (self.map)(x, z)
    }

    pub fn readout(&self, x: &DVector<T>) -> DVector<T> {
        (self.readout)(x)
    }

    /// One checked step `x ↦ F(x, z)`.
    pub fn step(&self, x: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, found: x.len() });
        }
        if z.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: z.len() });
        }
        let l_lim = self.state_bound + domain_slack(self.state_bound);
        if !(x.norm() <= l_lim) {
            return Err(Error::DomainViolation(format!("‖x‖ = {:?} exceeds L = {:?}", x.norm(), self.state_bound)));
        }
        let m_lim = self.input_bound + domain_slack(self.input_bound);
        if !(z.norm() <= m_lim) {
            return Err(Error::DomainViolation(format!("‖z‖ = {:?} exceeds M = {:?}", z.norm(), self.input_bound)));
        }
        let next = (self.map)(x, z);
        if !(next.norm() <= l_lim) {
            return Err(Error::DomainViolation(format!(
                "F(x,z) has norm {:?} beyond L = {:?}",
                next.norm(),
                self.state_bound
            )));
        }
        Ok(next)
    }
}


#[cfg(test)]
pub(crate) use tests::scalar_linear;
