use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use super::design::{ball_product_design, DesignSizes};
use super::{run_auto, run_filter, washout_length, ReservoirSystem};
use crate::filtercore::{ProbeReport, Witness};
use crate::seqspace::BoundedSignal;
use crate::{rng, Error, Real, Result};

/// Largest sampled ratio `‖F(u,z) − F(v,z)‖ / ‖u − v‖`. A lower bound on the
/// Lipschitz constant of `F` in the state.
pub fn contraction_lower_bound<T: Real>(s: &ReservoirSystem<T>, samples: usize, seed: u64) -> f64 {
    let mut r = rng::stream(seed, "contraction-lower-bound");
    let (l, m) = (s.state_bound().as_f64(), s.input_bound().as_f64());
    let mut best = 0.0f64;
    for i in 0..samples {
        let u: DVector<T> = rng::in_ball(&mut r, s.state_dim(), l);
        let z: DVector<T> = rng::in_ball(&mut r, s.input_dim(), m);
        // alternate far-apart pairs with nearby ones to catch local slopes
        let v: DVector<T> = if i % 2 == 0 {
            rng::in_ball(&mut r, s.state_dim(), l)
        } else {
            let h = l * 10f64.powf(-r.random_range(2.0..6.0));
            rng::clamp_norm(&u + rng::on_sphere::<T, _>(&mut r, s.state_dim(), h), s.state_bound())
        };
        let den = (&u - &v).norm().as_f64();
        if den <= 1e-14 * l.max(1.0) {
            continue;
        }
        let num = (s.map_raw(&u, &z) - s.map_raw(&v, &z)).norm().as_f64();
        best = best.max(num / den);
    }
    best
}

/// How the sup distance `‖F₁ − F₂‖_∞` entering the bound is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SupBound {
    /// Known upper bound, e.g. a constant offset.
    Analytic { value: f64 },
    /// Sampled estimate multiplied by a safety factor.
    Sampled { safety: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InternalApproxConfig {
    pub washout_tol: f64,
    pub compare_tol: f64,
    pub sup_bound: SupBound,
    pub design: DesignSizes,
    pub seed: u64,
}

impl Default for InternalApproxConfig {
    fn default() -> Self {
        Self {
            washout_tol: 1e-9,
            compare_tol: 1e-6,
            sup_bound: SupBound::Sampled { safety: 1.5 },
            design: DesignSizes { quasi_random: 2000, random: 2000, boundary: 500 },
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InternalApproxReport {
    /// Sampled lower estimate of `‖F₁ − F₂‖_∞`.
    pub d_f: f64,
    /// Upper bound used in `bound`.
    pub d_f_upper: f64,
    pub d_f_source: SupBound,
    pub rate: f64,
    pub bound: f64,
    /// Largest clean-index state distance over the input samples.
    pub measured: f64,
    pub tol: f64,
    pub pass: bool,
    pub second_unique: bool,
    pub probe: ProbeReport,
}

/// Sampled `‖F₁ − F₂‖_∞` over the state × input ball product of `s1`.
pub fn map_sup_distance<T: Real>(s1: &ReservoirSystem<T>, s2: &ReservoirSystem<T>, design: DesignSizes, seed: u64) -> f64 {
    ball_product_design(s1.state_dim(), s1.state_bound(), s1.input_dim(), s1.input_bound(), design, seed)
        .iter()
        .map(|(x, z)| (s1.map_raw(x, z) - s2.map_raw(x, z)).norm().as_f64())
        .fold(0.0, f64::max)
}

/// Checks `|||U_{F₁} − U_{F₂}|||_∞ ≤ ‖F₁ − F₂‖_∞ / (1 − r)` on the given inputs,
/// where `r` is the analytic contraction rate of `s1`. `s2` is run with its own
/// certificate when it has one, otherwise with the washout of `s1`.
pub fn internal_approx_check<T: Real>(
    s1: &ReservoirSystem<T>,
    s2: &ReservoirSystem<T>,
    inputs: &[BoundedSignal<T>],
    cfg: &InternalApproxConfig,
) -> Result<InternalApproxReport> {
    let cert = s1
        .certificate()
        .filter(|c| c.is_analytic())
        .ok_or_else(|| Error::MissingCertificate(format!("{} has no analytic contraction certificate", s1.label())))?;
    if s1.state_dim() != s2.state_dim() {
        return Err(Error::DimensionMismatch { expected: s1.state_dim(), found: s2.state_dim() });
    }
    if s1.input_dim() != s2.input_dim() {
        return Err(Error::DimensionMismatch { expected: s1.input_dim(), found: s2.input_dim() });
    }
    let rate = cert.rate.as_f64();
    let d_f = map_sup_distance(s1, s2, cfg.design, cfg.seed);
    let d_f_upper = match cfg.sup_bound {
        SupBound::Analytic { value } => {
            if value + cfg.compare_tol < d_f {
                return Err(Error::InvalidParameter(format!(
                    "declared sup distance {value} is below the sampled value {d_f}"
                )));
            }
            value
        }
        SupBound::Sampled { safety } => {
            if safety < 1.0 {
                return Err(Error::InvalidParameter(format!("safety factor {safety} must be at least 1")));
            }
            d_f * safety
        }
    };
    let bound = d_f_upper / (1.0 - rate);
    let tol = T::lit(cfg.washout_tol);
    let washout = washout_length(cert.rate, s1.state_bound(), tol)?;
    let mut probe = ProbeReport::new(cfg.seed);
    let mut second_unique = true;
    for (k, z) in inputs.iter().enumerate() {
        let a = run_filter(s1, cert, z, tol)?;
        let b = run_auto(s2, z, tol, washout)?;
        second_unique &= b.unique;
        for i in a.clean_from.max(b.clean_from)..z.len() {
            let dev = (&a.states.window()[i] - &b.states.window()[i]).norm().as_f64();
            probe.record(dev, || Witness {
                description: format!("input {k}, t={}", z.time_of(i)),
                first: z.window().iter().map(|v| v.iter().map(|x| x.as_f64()).collect()).collect(),
                second: Vec::new(),
            });
        }
        probe.samples += 1;
    }
    let measured = probe.worst_deviation;
    Ok(InternalApproxReport {
        d_f,
        d_f_upper,
        d_f_source: cfg.sup_bound,
        rate,
        bound,
        measured,
        tol: cfg.compare_tol,
        pass: measured <= bound + cfg.compare_tol,
        second_unique,
        probe,
    })
}

/// Worst sampled residual of `f(F₁(x,z)) = F₂(f(x),z)` and `h₁(x) = h₂(f(x))`
/// for a linear `f`, with `x` and `z` drawn from the balls of `s1`.
pub fn morphism_check<T: Real>(
    f: &DMatrix<T>,
    s1: &ReservoirSystem<T>,
    s2: &ReservoirSystem<T>,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let sizes = DesignSizes { quasi_random: samples / 2, random: samples - samples / 2 - samples / 10, boundary: samples / 10 };
    let points = ball_product_design(s1.state_dim(), s1.state_bound(), s1.input_dim(), s1.input_bound(), sizes, seed);
    morphism_check_on(f, s1, s2, &points, seed)
}

/// [`morphism_check`] on caller-supplied `(x, z)` pairs.
pub fn morphism_check_on<T: Real>(
    f: &DMatrix<T>,
    s1: &ReservoirSystem<T>,
    s2: &ReservoirSystem<T>,
    points: &[(DVector<T>, DVector<T>)],
    seed: u64,
) -> Result<ProbeReport> {
    if f.ncols() != s1.state_dim() {
        return Err(Error::DimensionMismatch { expected: s1.state_dim(), found: f.ncols() });
    }
    if f.nrows() != s2.state_dim() {
        return Err(Error::DimensionMismatch { expected: s2.state_dim(), found: f.nrows() });
    }
    if s1.input_dim() != s2.input_dim() {
        return Err(Error::DimensionMismatch { expected: s1.input_dim(), found: s2.input_dim() });
    }
    if s1.output_dim() != s2.output_dim() {
        return Err(Error::DimensionMismatch { expected: s1.output_dim(), found: s2.output_dim() });
    }
    let mut probe = ProbeReport::new(seed);
    for (x, z) in points {
        let fx = f * x;
        let eq = (f * s1.map_raw(x, z) - s2.map_raw(&fx, z)).norm().as_f64();
        let ro = (s1.readout(x) - s2.readout(&fx)).norm().as_f64();
        probe.record(eq.max(ro), || Witness {
            description: if eq >= ro { "state equivariance".into() } else { "readout invariance".into() },
            first: vec![x.iter().map(|v| v.as_f64()).collect()],
            second: vec![z.iter().map(|v| v.as_f64()).collect()],
        });
        probe.samples += 1;
    }
    Ok(probe)
}
