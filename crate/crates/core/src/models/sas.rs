use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::linalg::spectral_norm;
use crate::reservoir::{ContractionCertificate, ReservoirSystem, SystemSpec};
use crate::{rng, Error, Real, Result};

/// Exponent tuple `(i₁, …, i_n)` of the monomial `z₁^{i₁}···z_n^{i_n}`.
pub type MultiIndex = Vec<u32>;

/// Strict inequalities in the certificate are enforced with this margin.
pub const STRICT_MARGIN: f64 = 1e-12;

/// State-affine system `x_t = p(z_t) x_{t−1} + q(z_t)`, `y_t = W₁ x_t` with
/// matrix polynomials stored sparsely by exponent tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct SasParams<T: Real> {
    state_dim: usize,
    input_dim: usize,
    p_degree: u32,
    q_degree: u32,
    p: BTreeMap<MultiIndex, DMatrix<T>>,
    q: BTreeMap<MultiIndex, DVector<T>>,
    w: DMatrix<T>,
}

fn monomial<T: Real>(index: &[u32], z: &DVector<T>) -> T {
    index.iter().zip(z.iter()).fold(T::one(), |acc, (&e, &zi)| acc * zi.powi(e as i32))
}

impl<T: Real> SasParams<T> {
    pub fn new(
        state_dim: usize,
        input_dim: usize,
        degrees: (u32, u32),
        p: BTreeMap<MultiIndex, DMatrix<T>>,
        q: BTreeMap<MultiIndex, DVector<T>>,
        w: DMatrix<T>,
    ) -> Result<Self> {
        let check_index = |idx: &MultiIndex, deg: u32, which: &str| -> Result<()> {
            if idx.len() != input_dim {
                return Err(Error::Schema(format!("{which}: exponent tuple {idx:?} has length {}, expected {input_dim}", idx.len())));
            }
            if idx.iter().sum::<u32>() > deg {
                return Err(Error::Schema(format!("{which}: monomial {idx:?} exceeds degree {deg}")));
            }
            Ok(())
        };
        for (idx, m) in &p {
            check_index(idx, degrees.0, "p")?;
            if m.nrows() != state_dim || m.ncols() != state_dim {
                return Err(Error::Schema(format!("p{idx:?} is {}x{}, expected {state_dim}x{state_dim}", m.nrows(), m.ncols())));
            }
            if m.iter().any(|v| !v.is_finite_val()) {
                return Err(Error::NonFinite("p coefficient"));
            }
        }
        for (idx, v) in &q {
            check_index(idx, degrees.1, "q")?;
            if v.len() != state_dim {
                return Err(Error::Schema(format!("q{idx:?} has length {}, expected {state_dim}", v.len())));
            }
            if v.iter().any(|v| !v.is_finite_val()) {
                return Err(Error::NonFinite("q coefficient"));
            }
        }
        if w.ncols() != state_dim {
            return Err(Error::Schema(format!("W has {} columns, expected {state_dim}", w.ncols())));
        }
        if w.iter().any(|v| !v.is_finite_val()) {
            return Err(Error::NonFinite("W"));
        }
        Ok(Self { state_dim, input_dim, p_degree: degrees.0, q_degree: degrees.1, p, q, w })
    }

    /// Scalar state and input with `p(z) = Σ p_k z^k`, `q(z) = Σ q_k z^k`.
    pub fn scalar(p: &[f64], q: &[f64], w: f64) -> Result<Self> {
        let deg = |c: &[f64]| c.len().saturating_sub(1) as u32;
        let pm = p.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| (vec![k as u32], DMatrix::from_element(1, 1, T::lit(*c)))).collect();
        let qm = q.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| (vec![k as u32], DVector::from_element(1, T::lit(*c)))).collect();
        Self::new(1, 1, (deg(p), deg(q)), pm, qm, DMatrix::from_element(1, 1, T::lit(w)))
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn degrees(&self) -> (u32, u32) {
        (self.p_degree, self.q_degree)
    }

    pub fn p_terms(&self) -> &BTreeMap<MultiIndex, DMatrix<T>> {
        &self.p
    }

    pub fn q_terms(&self) -> &BTreeMap<MultiIndex, DVector<T>> {
        &self.q
    }

    pub fn readout(&self) -> &DMatrix<T> {
        &self.w
    }

    pub fn eval_p(&self, z: &DVector<T>) -> DMatrix<T> {
        let mut acc = DMatrix::zeros(self.state_dim, self.state_dim);
        for (idx, a) in &self.p {
            acc += a * monomial(idx, z);
        }
        acc
    }

    pub fn eval_q(&self, z: &DVector<T>) -> DVector<T> {
        let mut acc = DVector::zeros(self.state_dim);
        for (idx, b) in &self.q {
            acc += b * monomial(idx, z);
        }
        acc
    }

    pub(crate) fn step_unchecked(&self, x: &DVector<T>, z: &DVector<T>) -> DVector<T> {
        self.eval_p(z) * x + self.eval_q(z)
    }

    /// `p(z) x + q(z)` for `z` in the open unit ball.
    pub fn step(&self, x: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, found: x.len() });
        }
        if z.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: z.len() });
        }
        if !(z.norm() < T::one()) {
            return Err(Error::DomainViolation(format!("SAS input norm {:?} is not below 1", z.norm())));
        }
        Ok(self.step_unchecked(x, z))
    }

    /// `Σ‖A_i‖₂`, an upper bound of `σ_max(p(z))` on the unit ball since every
    /// monomial has modulus at most one there.
    pub fn p_coefficient_bound(&self) -> Result<f64> {
        self.p.values().try_fold(0.0, |acc, a| Ok(acc + spectral_norm(a)?.as_f64()))
    }

    /// `Σ‖B_i‖`, the matching bound for `q`.
    pub fn q_coefficient_bound(&self) -> f64 {
        self.q.values().map(|b| b.norm().as_f64()).sum()
    }

    /// Largest sampled `σ_max(p(z))` and `‖q(z)‖` over `samples` draws in the
    /// unit ball (half uniform, half on the sphere).
    pub fn sampled_maxima(&self, samples: usize, seed: u64) -> Result<(f64, f64)> {
        let mut r = rng::stream(seed, "sas-sampled-maxima");
        let (mut pm, mut qm) = (0.0f64, 0.0f64);
        for i in 0..samples {
            let z: DVector<T> = if i % 2 == 0 {
                rng::in_ball(&mut r, self.input_dim, 1.0)
            } else {
                rng::on_sphere(&mut r, self.input_dim, 1.0)
            };
            pm = pm.max(spectral_norm(&self.eval_p(&z))?.as_f64());
            qm = qm.max(self.eval_q(&z).norm().as_f64());
        }
        Ok((pm, qm))
    }

    /// Contraction with rate `Σ‖A_i‖₂` whenever that is below one. The ball of
    /// radius `Σ‖B_i‖/(1 − Σ‖A_i‖₂)` is then invariant.
    pub fn generic_certificate(&self) -> Result<Option<(ContractionCertificate<T>, f64)>> {
        let pb = self.p_coefficient_bound()?;
        if pb >= 1.0 - STRICT_MARGIN {
            return Ok(None);
        }
        let radius = self.q_coefficient_bound() / (1.0 - pb);
        Ok(Some((ContractionCertificate::analytic(T::lit(pb), "SAS coefficient bound of p")?, radius)))
    }

    /// Reservoir system on the closed balls of radius `state_bound` and 1.
    /// Polynomials are continuous, so the bounds on the open unit ball carry
    /// over to its closure.
    pub fn to_system(&self, state_bound: T, cert: Option<ContractionCertificate<T>>) -> Result<ReservoirSystem<T>> {
        let p = self.clone();
        let sys = ReservoirSystem::with_linear_readout(
            SystemSpec {
                label: format!("sas N={} n={}", self.state_dim, self.input_dim),
                state_dim: self.state_dim,
                input_dim: self.input_dim,
                output_dim: self.output_dim(),
                state_bound,
                input_bound: T::one(),
            },
            move |x, z| p.step_unchecked(x, z),
            self.w.clone(),
        )?;
        Ok(match cert {
            Some(c) => sys.with_certificate(c),
            None => sys,
        })
    }

    /// System from the generic certificate, on the smallest invariant ball
    /// that also contains `min_state_bound`.
    pub fn to_generic_system(&self, min_state_bound: f64) -> Result<ReservoirSystem<T>> {
        let (cert, radius) = self
            .generic_certificate()?
            .ok_or_else(|| Error::MissingCertificate("SAS coefficient bound of p is not below 1".into()))?;
        self.to_system(T::lit(radius.max(min_state_bound)), Some(cert))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SasVerdict {
    pub k: f64,
    pub l: f64,
    pub p_bound: f64,
    pub q_bound: f64,
    pub p_sampled: f64,
    pub q_sampled: f64,
    /// `KL + K`, the bound on `‖F_SAS‖` over the state ball.
    pub image_bound: f64,
    pub failures: Vec<String>,
}

impl SasVerdict {
    pub fn certified(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn certificate<T: Real>(&self) -> Option<ContractionCertificate<T>> {
        if !self.certified() {
            return None;
        }
        ContractionCertificate::analytic(T::lit(self.k), format!("SAS with K = {}, L = {}", self.k, self.l)).ok()
    }
}

/// Checks `max σ_max(p(z)) < K`, `max ‖q(z)‖ < K` via the coefficient bounds,
/// cross-checked by sampling, and `0 < K < L/(L+1)`. On success `F_SAS` is an
/// `K`-contraction of the `L`-ball into the ball of radius `KL + K < L`.
pub fn sas_certificate<T: Real>(p: &SasParams<T>, k: f64, l: f64, samples: usize, seed: u64) -> Result<SasVerdict> {
    let mut failures = Vec::new();
    if !(k > 0.0 && l > 0.0) {
        failures.push(format!("K = {k} and L = {l} must be positive"));
    }
    let p_bound = p.p_coefficient_bound()?;
    let q_bound = p.q_coefficient_bound();
    let (p_sampled, q_sampled) = p.sampled_maxima(samples, seed)?;
    if !(p_bound < k - STRICT_MARGIN) {
        failures.push(format!("coefficient bound of p is {p_bound}, not below K = {k}"));
    }
    if !(q_bound < k - STRICT_MARGIN) {
        failures.push(format!("coefficient bound of q is {q_bound}, not below K = {k}"));
    }
    if p_sampled > p_bound + STRICT_MARGIN {
        failures.push(format!("sampled σ_max(p(z)) = {p_sampled} exceeds its coefficient bound {p_bound}"));
    }
    if q_sampled > q_bound + STRICT_MARGIN {
        failures.push(format!("sampled ‖q(z)‖ = {q_sampled} exceeds its coefficient bound {q_bound}"));
    }
    let ratio = l / (l + 1.0);
    if !(k < ratio - STRICT_MARGIN) {
        failures.push(format!("K = {k} is not below L/(L+1) = {ratio}"));
    }
    Ok(SasVerdict { k, l, p_bound, q_bound, p_sampled, q_sampled, image_bound: k * l + k, failures })
}

/// Random SAS whose coefficient sums are `fill_p·K` and `fill_q·K`. Every
/// multi-index up to the degree gets a coefficient.
#[derive(Clone, Debug)]
pub struct RandomSas {
    pub state_dim: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub degrees: (u32, u32),
    pub k: f64,
    pub fill_p: f64,
    pub fill_q: f64,
    pub seed: u64,
}

/// All exponent tuples of length `n` with total degree at most `deg`.
pub fn multi_indices(n: usize, deg: u32) -> Vec<MultiIndex> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, deg, &mut Vec::with_capacity(n), &mut out);
    out
}

impl<T: Real> SasParams<T> {
    pub fn random(spec: &RandomSas) -> Result<Self> {
        let (n1, n) = (spec.state_dim, spec.input_dim);
        let mut r = rng::stream(spec.seed, "sas-random");
        let mut p: BTreeMap<MultiIndex, DMatrix<T>> = multi_indices(n, spec.degrees.0)
            .into_iter()
            .map(|idx| (idx, DMatrix::from_fn(n1, n1, |_, _| T::lit(rng::uniform(&mut r, -1.0, 1.0)))))
            .collect();
        let mut q: BTreeMap<MultiIndex, DVector<T>> = multi_indices(n, spec.degrees.1)
            .into_iter()
            .map(|idx| (idx, DVector::from_fn(n1, |_, _| T::lit(rng::uniform(&mut r, -1.0, 1.0)))))
            .collect();
        let w = DMatrix::from_fn(spec.output_dim, n1, |_, _| T::lit(rng::uniform(&mut r, -1.0, 1.0)));
        let pb = p.values().try_fold(0.0, |acc, a| Ok::<_, Error>(acc + spectral_norm(a)?.as_f64()))?;
        let qb: f64 = q.values().map(|b| b.norm().as_f64()).sum();
        let (sp, sq) = (T::lit(spec.fill_p * spec.k / pb), T::lit(spec.fill_q * spec.k / qb));
        p.values_mut().for_each(|a| *a *= sp);
        q.values_mut().for_each(|b| *b *= sq);
        Self::new(n1, n, spec.degrees, p, q, w)
    }
}
