use nalgebra::DVector;
use serde::Serialize;

use super::{domain_slack, ContractionCertificate, ReservoirSystem};
use crate::filtercore::{Filter, FilterFlags, FilterOutput};
use crate::seqspace::BoundedSignal;
use crate::{Error, Real, Result};

/// Smallest `n` with `2L·rⁿ ≤ tol`: after `n` steps from any initial state in
/// the `L`-ball a contraction with rate `r` is within `tol` of its echo state.
pub fn washout_length<T: Real>(rate: T, state_bound: T, tol: T) -> Result<usize> {
    let (r, l, tol) = (rate.as_f64(), state_bound.as_f64(), tol.as_f64());
    if !(0.0..1.0).contains(&r) {
        return Err(Error::MissingCertificate(format!("rate {r} is not a contraction rate")));
    }
    if !(l > 0.0 && tol > 0.0) {
        return Err(Error::InvalidParameter("L and tol must be positive".into()));
    }
    if 2.0 * l <= tol {
        return Ok(0);
    }
    if r == 0.0 {
        return Ok(1);
    }
    let holds = |n: i64| 2.0 * l * r.powi(n as i32) <= tol;
    let mut n = ((tol / (2.0 * l)).ln() / r.ln()).ceil().max(0.0) as i64;
    // the closed form can be off by one after rounding in ln
    while n > 0 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
    }
    Ok(n as usize)
}

/// Result of iterating a reservoir system over an input window from the zero
/// state. Entries before `clean_from` still carry initial-state influence.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput<T: Real> {
    pub states: BoundedSignal<T>,
    pub outputs: BoundedSignal<T>,
    pub clean_from: usize,
    /// `false` when the run comes without a contraction certificate, so the
    /// result is one solution among possibly many.
    pub unique: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub len: usize,
    pub clean_from: usize,
    pub unique: bool,
    pub max_state_norm: f64,
}

impl<T: Real> RunOutput<T> {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            len: self.states.len(),
            clean_from: self.clean_from,
            unique: self.unique,
            max_state_norm: self.states.window().iter().map(|x| x.norm().as_f64()).fold(0.0, f64::max),
        }
    }

    pub fn clean_states(&self) -> &[DVector<T>] {
        &self.states.window()[self.clean_from..]
    }

    pub fn clean_outputs(&self) -> &[DVector<T>] {
        &self.outputs.window()[self.clean_from..]
    }
}

/// Iterates `x_t = F(x_{t−1}, z_t)` from `x0` and returns every state.
pub fn trajectory<T: Real>(s: &ReservoirSystem<T>, x0: &DVector<T>, z: &BoundedSignal<T>) -> Result<Vec<DVector<T>>> {
    if z.dim() != s.input_dim() {
        return Err(Error::DimensionMismatch { expected: s.input_dim(), found: z.dim() });
    }
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(z.len());
    for zt in z.window() {
        x = s.step(&x, zt)?;
        out.push(x.clone());
    }
    Ok(out)
}

fn iterate<T: Real>(s: &ReservoirSystem<T>, z: &BoundedSignal<T>, clean_from: usize, unique: bool) -> Result<RunOutput<T>> {
    let states = trajectory(s, &DVector::zeros(s.state_dim()), z)?;
    let outputs: Vec<_> = states.iter().map(|x| s.readout(x)).collect();
    let state_bound = s.state_bound() + domain_slack(s.state_bound());
    Ok(RunOutput {
        states: BoundedSignal::new(s.state_dim(), states, state_bound, z.padding())?,
        outputs: BoundedSignal::enclosing(s.output_dim(), outputs, z.padding())?,
        clean_from: clean_from.min(z.len()),
        unique,
    })
}

fn analytic_rate<T: Real>(cert: Option<&ContractionCertificate<T>>, label: &str) -> Result<T> {
    match cert {
        Some(c) if c.is_analytic() => Ok(c.rate),
        Some(_) => Err(Error::MissingCertificate(format!("{label}: only a sampled contraction estimate is available"))),
        None => Err(Error::MissingCertificate(format!("{label}: no contraction certificate"))),
    }
}

/// Evaluates the reservoir filter `U_F(z)` on a window, starting from the zero
/// state. States from index `washout_length(r, L, tol)` on are within `tol`
/// of the echo state solution.
pub fn run_filter<T: Real>(
    s: &ReservoirSystem<T>,
    cert: &ContractionCertificate<T>,
    z: &BoundedSignal<T>,
    tol: T,
) -> Result<RunOutput<T>> {
    let rate = analytic_rate(Some(cert), s.label())?;
    let n = washout_length(rate, s.state_bound(), tol)?;
    if z.len() <= n {
        return Err(Error::WindowTooShort { required: n + 1, found: z.len() });
    }
    iterate(s, z, n, true)
}

/// Same iteration as [`run_filter`] for systems without a contraction
/// certificate. The result is flagged as carrying no uniqueness guarantee and
/// `washout` is only a caller-chosen discard length.
pub fn run_generalized<T: Real>(s: &ReservoirSystem<T>, z: &BoundedSignal<T>, washout: usize) -> Result<RunOutput<T>> {
    iterate(s, z, washout, false)
}

/// Runs with the system's own certificate when it is analytic, otherwise as a
/// generalized run with the given fallback washout.
pub fn run_auto<T: Real>(s: &ReservoirSystem<T>, z: &BoundedSignal<T>, tol: T, fallback_washout: usize) -> Result<RunOutput<T>> {
    match s.certificate() {
        Some(c) if c.is_analytic() => run_filter(s, c, z, tol),
        _ => run_generalized(s, z, fallback_washout),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterView {
    States,
    Outputs,
}

/// The reservoir filter of an analytically certified system as a causal,
/// time-invariant [`Filter`] whose memory is the washout length. Windows no
/// longer than the washout are still evaluated, with no entry marked clean.
pub fn reservoir_filter<T: Real>(s: &ReservoirSystem<T>, tol: T, view: FilterView) -> Result<Filter<T>> {
    let rate = analytic_rate(s.certificate(), s.label())?;
    let n = washout_length(rate, s.state_bound(), tol)?;
    let sys = s.clone();
    let out_dim = match view {
        FilterView::States => s.state_dim(),
        FilterView::Outputs => s.output_dim(),
    };
    Ok(Filter::new(
        format!("U[{}]", s.label()),
        s.input_dim(),
        s.input_bound(),
        out_dim,
        FilterFlags::CAUSAL_TI,
        Some(n),
        move |z| {
            let run = iterate(&sys, z, n, true)?;
            let signal = match view {
                FilterView::States => run.states,
                FilterView::Outputs => run.outputs,
            };
            Ok(FilterOutput { signal, clean_from: run.clean_from })
        },
    ))
}

/// Filter of a system without certificate. No causality or time-invariance
/// claim is attached.
pub fn generalized_filter<T: Real>(s: &ReservoirSystem<T>, washout: usize, view: FilterView) -> Filter<T> {
    let sys = s.clone();
    let out_dim = match view {
        FilterView::States => s.state_dim(),
        FilterView::Outputs => s.output_dim(),
    };
    Filter::new(
        format!("generalized U[{}]", s.label()),
        s.input_dim(),
        s.input_bound(),
        out_dim,
        FilterFlags::default(),
        Some(washout),
        move |z| {
            let run = run_generalized(&sys, z, washout)?;
            let signal = match view {
                FilterView::States => run.states,
                FilterView::Outputs => run.outputs,
            };
            Ok(FilterOutput { signal, clean_from: run.clean_from })
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtercore::{causality_probe, time_invariance_probe};
    use crate::reservoir::{scalar_linear, SystemSpec};
    use crate::rng;
    use crate::seqspace::Padding;

    fn oracle_washout(r: f64, l: f64, tol: f64) -> usize {
        (0..).find(|&n| 2.0 * l * r.powi(n) <= tol).unwrap() as usize
    }

    #[test]
    fn washout_examples() {
        assert_eq!(washout_length(0.5, 1.0, 1e-6).unwrap(), 21);
        assert_eq!(washout_length(0.9, 1.0, 1e-6).unwrap(), 138);
        assert_eq!(washout_length(0.5, 1.0, 2.0).unwrap(), 0);
        assert_eq!(washout_length(0.0, 1.0, 1e-6).unwrap(), 1);
        assert!(washout_length(1.0, 1.0, 1e-6).is_err());
        for &(r, l, tol) in &[(0.3, 2.0, 1e-9), (0.99, 0.5, 1e-3), (0.5, 1.0, 0.5), (0.25, 4.0, 1e-12)] {
            assert_eq!(washout_length(r, l, tol).unwrap(), oracle_washout(r, l, tol), "r={r} L={l} tol={tol}");
        }
    }

    fn certified(a: f64, l: f64) -> ReservoirSystem<f64> {
        scalar_linear(a, l, 1.0).with_certificate(ContractionCertificate::analytic(a, "linear").unwrap())
    }

    #[test]
    fn constant_input_converges_to_fixed_point() {
        let s = certified(0.5, 2.0);
        let z = BoundedSignal::from_scalars(&[1.0; 60], 1.0, Padding::Constant).unwrap();
        let run = run_filter(&s, s.certificate().unwrap(), &z, 1e-9).unwrap();
        assert_eq!(run.clean_from, washout_length(0.5, 2.0, 1e-9).unwrap());
        assert!(run.unique);
        for x in run.clean_states() {
            assert!((x[0] - 2.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn zero_input_tanh_decays_to_zero() {
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.4]);
        let rate = crate::linalg::spectral_norm(&a).unwrap();
        let l = 2f64.sqrt();
        let s = ReservoirSystem::new(
            SystemSpec { label: "tanh".into(), state_dim: 2, input_dim: 1, output_dim: 2, state_bound: l, input_bound: 1.0 },
            move |x: &DVector<f64>, z: &DVector<f64>| (&a * x + DVector::from_element(2, z[0])).map(f64::tanh),
            |x| x.clone(),
        )
        .unwrap()
        .with_certificate(ContractionCertificate::analytic(rate, "spectral").unwrap());
        let z = BoundedSignal::from_scalars(&[0.0; 80], 1.0, Padding::Zero).unwrap();
        let run = run_filter(&s, s.certificate().unwrap(), &z, 1e-9).unwrap();
        assert!(run.clean_states().iter().all(|x| x.norm() <= 1e-9));
    }

    #[test]
    fn short_window_is_rejected() {
        let s = certified(0.5, 2.0);
        let z = BoundedSignal::from_scalars(&[0.0; 22], 1.0, Padding::Zero).unwrap();
        assert!(matches!(
            run_filter(&s, s.certificate().unwrap(), &z, 1e-6),
            Err(Error::WindowTooShort { required: 23, found: 22 })
        ));
        let sampled = ContractionCertificate::sampled(0.5, "");
        let z = BoundedSignal::from_scalars(&[0.0; 40], 1.0, Padding::Zero).unwrap();
        assert!(matches!(run_filter(&s, &sampled, &z, 1e-6), Err(Error::MissingCertificate(_))));
    }

    #[test]
    fn initial_state_is_forgotten_on_clean_indices() {
        let s = certified(0.7, 4.0);
        let tol = 1e-8;
        let mut r = rng::seeded(5);
        for _ in 0..20 {
            let z = BoundedSignal::new(1, (0..120).map(|_| rng::in_ball(&mut r, 1, 1.0)).collect(), 1.0, Padding::Zero).unwrap();
            let run = run_filter(&s, s.certificate().unwrap(), &z, tol).unwrap();
            let x0: DVector<f64> = rng::in_ball(&mut r, 1, 4.0);
            let other = trajectory(&s, &x0, &z).unwrap();
            for i in run.clean_from..z.len() {
                assert!((&run.states.window()[i] - &other[i]).norm() <= 2.0 * tol);
            }
        }
    }

    #[test]
    fn reservoir_filters_are_causal_and_time_invariant() {
        let s = certified(0.6, 3.0);
        let tol = 1e-10;
        let u = reservoir_filter(&s, tol, FilterView::Outputs).unwrap();
        assert_eq!(u.flags(), FilterFlags::CAUSAL_TI);
        let c = causality_probe(&u, 80, 20, 1).unwrap();
        assert!(c.worst_deviation <= 2.0 * tol, "{}", c.worst_deviation);
        let ti = time_invariance_probe(&u, 5, 80, 20, 2).unwrap();
        assert!(ti.worst_deviation <= 2.0 * tol, "{}", ti.worst_deviation);
    }

    #[test]
    fn generalized_runs_are_flagged() {
        let s = scalar_linear(0.5, 2.0, 1.0);
        let z = BoundedSignal::from_scalars(&[0.5; 10], 1.0, Padding::Zero).unwrap();
        let run = run_generalized(&s, &z, 4).unwrap();
        assert!(!run.unique);
        assert_eq!(run.clean_from, 4);
        assert!(reservoir_filter(&s, 1e-6, FilterView::States).is_err());
        assert_eq!(generalized_filter(&s, 3, FilterView::States).flags(), FilterFlags::default());
    }
}
