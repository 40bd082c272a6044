//! Randomized falsification probes. Every probe is seeded, reports the number
//! of samples tried and, when it finds a nonzero deviation, a witness pair.
//! Suprema over `K_M` are only ever reported as sampled lower bounds.

use nalgebra::DVector;
use rand::Rng;
use serde::{Serialize, Serializer};

use super::{time_delay_padded, Filter, Functional};
use crate::seqspace::{sample_km, BoundedSignal, WeightingSequence};
use crate::{rng, Error, Real, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub description: String,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

impl Witness {
    fn new<T: Real>(description: String, a: &BoundedSignal<T>, b: &BoundedSignal<T>) -> Self {
        let dump = |s: &BoundedSignal<T>| s.window().iter().map(|v| v.iter().map(|x| x.as_f64()).collect()).collect();
        Self { description, first: dump(a), second: dump(b) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub worst_deviation: f64,
    #[serde(rename = "witness_ref", serialize_with = "witness_ref")]
    pub witness: Option<Witness>,
    pub seed: u64,
}

fn witness_ref<S: Serializer>(w: &Option<Witness>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match w {
        Some(w) => s.serialize_some(&w.description),
        None => s.serialize_none(),
    }
}

impl ProbeReport {
    pub(crate) fn new(seed: u64) -> Self {
        Self { samples: 0, worst_deviation: 0.0, witness: None, seed }
    }

    pub(crate) fn record(&mut self, dev: f64, witness: impl FnOnce() -> Witness) {
        if dev > self.worst_deviation {
            self.worst_deviation = dev;
            self.witness = Some(witness());
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn fresh_signal<T: Real, R: Rng>(rng: &mut R, dim: usize, bound: T, len: usize) -> Result<BoundedSignal<T>> {
    let window = (0..len).map(|_| rng::in_ball(rng, dim, bound.as_f64())).collect();
    BoundedSignal::new(dim, window, bound, crate::seqspace::Padding::Zero)
}

/// Draws pairs that agree up to a random cut `t` and reports the largest
/// output difference at times `s ≤ t`.
pub fn causality_probe<T: Real>(u: &Filter<T>, len: usize, samples: usize, seed: u64) -> Result<ProbeReport> {
    if len == 0 {
        return Err(Error::EmptyWindow);
    }
    let mut rng = rng::seeded(seed);
    let mut report = ProbeReport::new(seed);
    let (n, m) = (u.input_dim(), u.input_bound());
    for sample in 0..samples {
        let z = fresh_signal(&mut rng, n, m, len)?;
        let cut = rng.random_range(0..len);
        let tail = fresh_signal(&mut rng, n, m, len)?;
        let mut wv = z.window().to_vec();
        wv[cut + 1..].clone_from_slice(&tail.window()[cut + 1..]);
        let w = BoundedSignal::new(n, wv, m, z.padding())?;
        let (uz, uw) = (u.evaluate(&z)?, u.evaluate(&w)?);
        for s in 0..=cut {
            let dev = (&uz.signal.window()[s] - &uw.signal.window()[s]).norm().as_f64();
            report.record(dev, || {
                Witness::new(
                    format!("sample {sample}: inputs agree up to t={}, outputs differ at t={}", z.time_of(cut), z.time_of(s)),
                    &z,
                    &w,
                )
            });
        }
        report.samples += 1;
    }
    Ok(report)
}

/// Compares `T_τ ∘ U` with `U ∘ T_τ` for `1 ≤ τ ≤ τ_max` on indices that are
/// clean in both evaluations. The delay keeps the window length, filling the
/// vacated past from the padding rule.
pub fn time_invariance_probe<T: Real>(
    u: &Filter<T>,
    tau_max: usize,
    len: usize,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if tau_max >= len {
        return Err(Error::InvalidParameter(format!("tau_max {tau_max} must be below the window length {len}")));
    }
    let mut rng = rng::seeded(seed);
    let mut report = ProbeReport::new(seed);
    for sample in 0..samples {
        let z = fresh_signal(&mut rng, u.input_dim(), u.input_bound(), len)?;
        let uz = u.evaluate(&z)?;
        for tau in 1..=tau_max {
            let zd = time_delay_padded(&z, tau)?;
            let u_zd = u.evaluate(&zd)?;
            let start = (uz.clean_from + tau).max(u_zd.clean_from);
            for i in start..len {
                let a = &uz.signal.window()[i - tau];
                let b = &u_zd.signal.window()[i];
                let dev = (a - b).norm().as_f64();
                report.record(dev, || {
                    Witness::new(format!("sample {sample}: tau={tau}, t={}", z.time_of(i)), &z, &zd)
                });
            }
        }
        report.samples += 1;
    }
    Ok(report)
}

/// Which entries of `z` the FMP probe is allowed to move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Each sample picks one of the strategies below at random.
    Mixed,
    /// Only lags `< k` are perturbed.
    RecentOnly(usize),
    /// Only lags `≥ k` are perturbed.
    RemoteOnly(usize),
}

/// Generates pairs `(z, s)` in `K_M` with `‖z − s‖_w < δ` and reports the
/// worst `‖H(z) − H(s)‖`, an empirical modulus of continuity at scale `δ`.
#[allow(clippy::too_many_arguments)]
pub fn fmp_probe<T: Real>(
    h: &Functional<T>,
    w: &WeightingSequence<T>,
    delta: T,
    mode: PerturbationMode,
    len: usize,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut report = ProbeReport::new(seed);
    let (n, m) = (h.input_dim(), h.input_bound());
    let margin = T::lit(0.999);
    for sample in 0..samples {
        let z = fresh_signal(&mut rng, n, m, len)?;
        let (lo, hi) = match mode {
            PerturbationMode::RecentOnly(k) => (0, k.min(len)),
            PerturbationMode::RemoteOnly(k) => (k.min(len), len),
            PerturbationMode::Mixed => match rng.random_range(0..3) {
                0 => (0, len),
                1 => (0, rng.random_range(1..=len)),
                _ => (rng.random_range(0..len), len),
            },
        };
        let mut sv = z.window().to_vec();
        for lag in lo..hi {
            let idx = len - 1 - lag;
            let radius = delta * margin / w.weight(lag);
            let moved = if radius >= T::lit(2.0) * m {
                rng::in_ball(&mut rng, n, m.as_f64())
            } else {
                let step: DVector<T> = rng::in_ball(&mut rng, n, radius.as_f64());
                &z.window()[idx] + step
            };
            sv[idx] = rng::clamp_norm(moved, m);
        }
        let s = BoundedSignal::new(n, sv, m, z.padding())?;
        debug_assert!({
            let d = crate::seqspace::weighted_metric(&z, &s, w, T::lit(4.0) * m)?;
            d < delta
        });
        let dev = (h.evaluate(&z)? - h.evaluate(&s)?).norm().as_f64();
        report.record(dev, || Witness::new(format!("sample {sample}: lags {lo}..{hi} perturbed"), &z, &s));
        report.samples += 1;
    }
    Ok(report)
}

/// Monte-Carlo lower estimate of `|||U₁ − U₂|||_∞` over `K_M`, taken over
/// indices clean in both evaluations.
pub fn filter_sup_distance<T: Real>(
    u1: &Filter<T>,
    u2: &Filter<T>,
    m: T,
    len: usize,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    check_specs(u1, u2)?;
    let inputs = sample_km(u1.input_dim(), m, len, samples, seed)?;
    filter_distance_on(u1, u2, &inputs, seed)
}

/// `filter_sup_distance` on caller-supplied inputs.
pub fn filter_distance_on<T: Real>(
    u1: &Filter<T>,
    u2: &Filter<T>,
    inputs: &[BoundedSignal<T>],
    seed: u64,
) -> Result<ProbeReport> {
    check_specs(u1, u2)?;
    let mut report = ProbeReport::new(seed);
    for (sample, z) in inputs.iter().enumerate() {
        let (a, b) = (u1.evaluate(z)?, u2.evaluate(z)?);
        let start = a.clean_from.max(b.clean_from);
        for i in start..z.len() {
            let dev = (&a.signal.window()[i] - &b.signal.window()[i]).norm().as_f64();
            report.record(dev, || Witness::new(format!("sample {sample}, t={}", z.time_of(i)), z, z));
        }
        report.samples += 1;
    }
    Ok(report)
}

fn check_specs<T: Real>(u1: &Filter<T>, u2: &Filter<T>) -> Result<()> {
    if u1.input_dim() != u2.input_dim() {
        return Err(Error::DimensionMismatch { expected: u1.input_dim(), found: u2.input_dim() });
    }
    if u1.output_dim() != u2.output_dim() {
        return Err(Error::DimensionMismatch { expected: u1.output_dim(), found: u2.output_dim() });
    }
    Ok(())
}

/// Sampled lower estimate of `|||U|||_∞ = sup_z sup_t ‖U(z)_t‖` on clean indices.
pub fn filter_sup_estimate<T: Real>(u: &Filter<T>, inputs: &[BoundedSignal<T>]) -> Result<f64> {
    let mut sup = 0.0f64;
    for z in inputs {
        let out = u.evaluate(z)?;
        for v in &out.signal.window()[out.clean_from..] {
            sup = sup.max(v.norm().as_f64());
        }
    }
    Ok(sup)
}

/// Sampled lower estimate of `|||H|||_∞ = sup_z ‖H(z)‖`.
pub fn functional_sup_estimate<T: Real>(h: &Functional<T>, inputs: &[BoundedSignal<T>]) -> Result<f64> {
    inputs.iter().try_fold(0.0f64, |acc, z| Ok(acc.max(h.evaluate(z)?.norm().as_f64())))
}
