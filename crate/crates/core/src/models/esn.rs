use nalgebra::{DMatrix, DVector};

use super::Activation;
use crate::linalg::spectral_norm;
use crate::reservoir::{ContractionCertificate, ReservoirSystem, SystemSpec};
use crate::{rng, Error, Real, Result};

/// Echo state network `x_t = σ(A x_{t−1} + C z_t + ζ)`, `y_t = W x_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct EsnParams<T: Real> {
    pub a: DMatrix<T>,
    pub c: DMatrix<T>,
    pub zeta: DVector<T>,
    pub w: DMatrix<T>,
    pub activation: Activation,
}

fn check_finite<T: Real>(it: impl IntoIterator<Item = T>, what: &'static str) -> Result<()> {
    if it.into_iter().all(|v| v.is_finite_val()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_shape(what: &str, rows: usize, cols: usize, want_rows: usize, want_cols: usize) -> Result<()> {
    if rows != want_rows || cols != want_cols {
        return Err(Error::Schema(format!("{what} is {rows}x{cols}, expected {want_rows}x{want_cols}")));
    }
    Ok(())
}

/// Options for [`EsnParams::random`].
#[derive(Clone, Debug)]
pub struct RandomEsn {
    pub state_dim: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Target value of `‖A‖₂·L_σ`.
    pub rho: f64,
    pub input_scale: f64,
    pub bias_scale: f64,
    pub activation: Activation,
    pub seed: u64,
}

impl<T: Real> EsnParams<T> {
    pub fn new(a: DMatrix<T>, c: DMatrix<T>, zeta: DVector<T>, w: DMatrix<T>, activation: Activation) -> Result<Self> {
        let n = a.nrows();
        check_shape("A", a.nrows(), a.ncols(), n, n)?;
        check_shape("C", c.nrows(), c.ncols(), n, c.ncols())?;
        check_shape("zeta", zeta.len(), 1, n, 1)?;
        check_shape("W", w.nrows(), w.ncols(), w.nrows(), n)?;
        check_finite(a.iter().copied(), "A")?;
        check_finite(c.iter().copied(), "C")?;
        check_finite(zeta.iter().copied(), "zeta")?;
        check_finite(w.iter().copied(), "W")?;
        Ok(Self { a, c, zeta, w, activation })
    }

    /// Uniform `[−1, 1]` entries with `A` rescaled so that `‖A‖₂·L_σ = ρ`.
    pub fn random(spec: &RandomEsn) -> Result<Self> {
        if !(spec.rho >= 0.0 && spec.rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho {} must lie in [0, 1)", spec.rho)));
        }
        let n = spec.state_dim;
        let draw = |name: &str, rows: usize, cols: usize, scale: f64| {
            let mut r = rng::stream(spec.seed, name);
            DMatrix::<T>::from_fn(rows, cols, |_, _| T::lit(scale * rng::uniform(&mut r, -1.0, 1.0)))
        };
        let raw = draw("esn-a", n, n, 1.0);
        let c = draw("esn-c", n, spec.input_dim, spec.input_scale);
        let zeta = draw("esn-zeta", n, 1, spec.bias_scale).column(0).into_owned();
        let norm = spectral_norm(&raw)?.as_f64();
        let a = if norm > 0.0 { raw * T::lit(spec.rho / (norm * spec.activation.lipschitz())) } else { raw };
        Self::new(a, c, zeta, DMatrix::zeros(spec.output_dim, n), spec.activation.clone())
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.nrows()
    }

    /// States stay in `[−1, 1]^N`, so `√N` bounds their norm.
    pub fn state_bound(&self) -> T {
        T::lit((self.state_dim() as f64).sqrt())
    }

    pub fn step(&self, x: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch { expected: self.state_dim(), found: x.len() });
        }
        if z.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: z.len() });
        }
        Ok(self.step_unchecked(x, z))
    }

    pub(crate) fn step_unchecked(&self, x: &DVector<T>, z: &DVector<T>) -> DVector<T> {
        let act = &self.activation;
        (&self.a * x + &self.c * z + &self.zeta).map(|v| act.apply(v))
    }

    /// Analytic certificate with `r = ‖A‖₂·L_σ` when that is below one.
    pub fn esp_certificate(&self) -> Option<ContractionCertificate<T>> {
        let r = spectral_norm(&self.a).ok()?.as_f64() * self.activation.lipschitz();
        if r < 1.0 {
            ContractionCertificate::analytic(T::lit(r), format!("‖A‖₂·L_σ with σ = {}", self.activation.name())).ok()
        } else {
            None
        }
    }

    /// The network as a reservoir system on the `√N` state ball and the input
    /// ball of radius `input_bound`, carrying its certificate when one exists.
    pub fn to_system(&self, input_bound: T) -> Result<ReservoirSystem<T>> {
        let p = self.clone();
        let sys = ReservoirSystem::with_linear_readout(
            SystemSpec {
                label: format!("esn N={}", self.state_dim()),
                state_dim: self.state_dim(),
                input_dim: self.input_dim(),
                output_dim: self.output_dim(),
                state_bound: self.state_bound(),
                input_bound,
            },
            move |x, z| p.step_unchecked(x, z),
            self.w.clone(),
        )?;
        Ok(match self.esp_certificate() {
            Some(c) => sys.with_certificate(c),
            None => sys,
        })
    }

    pub fn with_readout(&self, w: DMatrix<T>) -> Result<Self> {
        Self::new(self.a.clone(), self.c.clone(), self.zeta.clone(), w, self.activation.clone())
    }

    /// Random perturbation `(A+ΔA, C+ΔC, ζ+Δζ)` with
    /// `L_σ(‖ΔA‖₂√N + ‖ΔC‖₂M + ‖Δζ‖) = η`, which bounds the sup distance of
    /// the two state maps over the `√N` × `M` balls by `η`.
    pub fn perturb(&self, eta: f64, input_bound: f64, seed: u64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("perturbation size {eta}")));
        }
        let n = self.state_dim();
        let mut r = rng::stream(seed, "esn-perturb");
        let mut draw = |rows: usize, cols: usize| DMatrix::<T>::from_fn(rows, cols, |_, _| T::lit(rng::uniform(&mut r, -1.0, 1.0)));
        let (da, dc, dz) = (draw(n, n), draw(n, self.input_dim()), draw(n, 1));
        let size = self.activation.lipschitz()
            * (spectral_norm(&da)?.as_f64() * (n as f64).sqrt()
                + spectral_norm(&dc)?.as_f64() * input_bound
                + dz.norm().as_f64());
        let s = if size > 0.0 { T::lit(eta / size) } else { T::zero() };
        Self::new(
            &self.a + da * s,
            &self.c + dc * s,
            &self.zeta + dz.column(0) * s,
            self.w.clone(),
            self.activation.clone(),
        )
    }
}
