use nalgebra::DMatrix;
use serde::Serialize;

use super::construct::{sas_to_esn, SasToEsnConfig, SasToEsnReport, SAS_INPUT_RADIUS};
use super::readout::collect_training_pairs;
use super::readout::fit_readout;
use super::targets::TargetFilter;
use crate::filtercore::{Filter, FilterFlags, FilterOutput};
use crate::models::{Activation, EsnParams, RandomEsn, SasParams, SasVerdict};
use crate::reservoir::{run_auto, washout_length};
use crate::seqspace::{sample_km, BoundedSignal};
use crate::{rng, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PracticalConfig {
    pub state_dim: usize,
    /// Contraction rate `‖A‖₂·L_σ` of the random reservoir.
    pub rho: f64,
    pub input_scale: f64,
    pub bias_scale: f64,
    pub activation: Activation,
    pub ridge: f64,
    pub train_inputs: usize,
    pub train_len: usize,
    pub test_inputs: usize,
    pub test_len: usize,
    pub washout_tol: f64,
    pub seed: u64,
}

impl Default for PracticalConfig {
    fn default() -> Self {
        Self {
            state_dim: 50,
            rho: 0.5,
            input_scale: 1.0,
            bias_scale: 0.2,
            activation: Activation::Tanh,
            ridge: 1e-8,
            train_inputs: 10,
            train_len: 500,
            test_inputs: 100,
            test_len: 300,
            washout_tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstructiveConfig {
    pub sas: SasParams<f64>,
    pub verdict: SasVerdict,
    pub eps: f64,
    pub chain: SasToEsnConfig,
    pub test_inputs: usize,
    pub test_len: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub enum Pipeline {
    Practical(PracticalConfig),
    Constructive(Box<ConstructiveConfig>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub pipeline: &'static str,
    pub reservoir_size: usize,
    /// Contraction rate of the ESN, when it carries an analytic certificate.
    pub rate: Option<f64>,
    pub washout: usize,
    pub train_sup_error: f64,
    pub test_sup_error: f64,
    pub test_rmse: f64,
    pub input_map: String,
    /// Sup error on each test input, in order.
    pub per_sample_test_errors: Vec<f64>,
    pub construction: Option<SasToEsnReport>,
    pub seed: u64,
}

/// The ESN output filter, run from the zero state. Uses the certificate's
/// washout when there is one and `fallback_washout` otherwise.
pub fn esn_output_filter(esn: &EsnParams<f64>, input_bound: f64, tol: f64, fallback_washout: usize) -> Result<Filter<f64>> {
    let sys = esn.to_system(input_bound)?;
    let flags = if sys.certificate().is_some() { FilterFlags::CAUSAL_TI } else { FilterFlags::default() };
    let memory = match sys.certificate() {
        Some(c) => washout_length(c.rate, sys.state_bound(), tol)?,
        None => fallback_washout,
    };
    Ok(Filter::new(format!("esn N={}", esn.state_dim()), esn.input_dim(), input_bound, esn.output_dim(), flags, Some(memory), move |z| {
        let run = run_auto(&sys, z, tol, fallback_washout)?;
        Ok(FilterOutput { signal: run.outputs, clean_from: run.clean_from })
    }))
}

struct Errors {
    sup: f64,
    rmse: f64,
    per_sample: Vec<f64>,
}

fn compare(model: &Filter<f64>, target: &Filter<f64>, inputs: &[BoundedSignal<f64>]) -> Result<Errors> {
    let (mut sq, mut count) = (0.0, 0usize);
    let mut per_sample = Vec::with_capacity(inputs.len());
    for z in inputs {
        let (a, b) = (model.evaluate(z)?, target.evaluate(z)?);
        let mut worst = 0.0f64;
        for i in a.clean_from.max(b.clean_from)..z.len() {
            let d = (&a.signal.window()[i] - &b.signal.window()[i]).norm();
            worst = worst.max(d);
            sq += d * d;
            count += 1;
        }
        per_sample.push(worst);
    }
    if count == 0 {
        return Err(Error::WindowTooShort { required: model.memory().unwrap_or(0) + 1, found: inputs.first().map_or(0, |z| z.len()) });
    }
    Ok(Errors { sup: per_sample.iter().copied().fold(0.0, f64::max), rmse: (sq / count as f64).sqrt(), per_sample })
}

/// Approximates `target` by an ESN, either with a random certified reservoir
/// and a trained readout, or by converting a supplied certified SAS system.
pub fn end_to_end_approximate(target: &TargetFilter<f64>, pipeline: &Pipeline) -> Result<(EsnParams<f64>, EvaluationReport)> {
    match pipeline {
        Pipeline::Practical(cfg) => practical(target, cfg),
        Pipeline::Constructive(cfg) => constructive(target, cfg),
    }
}

fn practical(target: &TargetFilter<f64>, cfg: &PracticalConfig) -> Result<(EsnParams<f64>, EvaluationReport)> {
    let m = target.input_bound();
    let tf = target.to_filter();
    if tf.input_dim() == 0 {
        return Err(Error::InvalidParameter("target has no inputs".into()));
    }
    let esn = EsnParams::random(&RandomEsn {
        state_dim: cfg.state_dim,
        input_dim: tf.input_dim(),
        output_dim: tf.output_dim(),
        rho: cfg.rho,
        input_scale: cfg.input_scale / m,
        bias_scale: cfg.bias_scale,
        activation: cfg.activation.clone(),
        seed: rng::substream_seed(cfg.seed, "reservoir"),
    })?;
    let sys = esn.to_system(m)?;
    let cert = sys.certificate().cloned().ok_or_else(|| Error::MissingCertificate("random reservoir".into()))?;
    let washout = washout_length(cert.rate, sys.state_bound(), cfg.washout_tol)?;
    let train = sample_km(tf.input_dim(), m, cfg.train_len, cfg.train_inputs, rng::substream_seed(cfg.seed, "train"))?;
    let test = sample_km(tf.input_dim(), m, cfg.test_len, cfg.test_inputs, rng::substream_seed(cfg.seed, "test"))?;
    let mut teachers = Vec::with_capacity(train.len());
    let mut start = washout;
    for z in &train {
        let out = tf.evaluate(z)?;
        start = start.max(out.clean_from);
        teachers.push(out.signal);
    }
    let (states, ys) = collect_training_pairs(&sys, &cert, &train, &teachers, start, cfg.washout_tol)?;
    let w: DMatrix<f64> = fit_readout(&states, &ys, cfg.ridge)?;
    let esn = esn.with_readout(w)?;
    let model = esn_output_filter(&esn, m, cfg.washout_tol, washout)?;
    let train_err = compare(&model, &tf, &train)?;
    let test_err = compare(&model, &tf, &test)?;
    let report = EvaluationReport {
        pipeline: "practical",
        reservoir_size: esn.state_dim(),
        rate: Some(cert.rate),
        washout,
        train_sup_error: train_err.sup,
        test_sup_error: test_err.sup,
        test_rmse: test_err.rmse,
        input_map: target.input_map(),
        per_sample_test_errors: test_err.per_sample,
        construction: None,
        seed: cfg.seed,
    };
    Ok((esn, report))
}

fn constructive(target: &TargetFilter<f64>, cfg: &ConstructiveConfig) -> Result<(EsnParams<f64>, EvaluationReport)> {
    let tf = target.to_filter();
    if tf.input_dim() != cfg.sas.input_dim() || tf.output_dim() != cfg.sas.output_dim() {
        return Err(Error::DimensionMismatch { expected: cfg.sas.input_dim(), found: tf.input_dim() });
    }
    let (esn, chain) = sas_to_esn(&cfg.sas, &cfg.verdict, cfg.eps, &cfg.chain)?;
    let washout = chain.washout;
    let model = esn_output_filter(&esn, 1.0, cfg.chain.washout_tol, washout)?;
    let m = SAS_INPUT_RADIUS.min(tf.input_bound());
    let train = sample_km(tf.input_dim(), m, cfg.test_len, cfg.test_inputs.div_ceil(10), rng::substream_seed(cfg.seed, "train"))?;
    let test = sample_km(tf.input_dim(), m, cfg.test_len, cfg.test_inputs, rng::substream_seed(cfg.seed, "test"))?;
    let train_err = compare(&model, &tf, &train)?;
    let test_err = compare(&model, &tf, &test)?;
    let report = EvaluationReport {
        pipeline: "constructive",
        reservoir_size: esn.state_dim(),
        rate: esn.esp_certificate().map(|c| c.rate),
        washout,
        train_sup_error: train_err.sup,
        test_sup_error: test_err.sup,
        test_rmse: test_err.rmse,
        input_map: target.input_map(),
        per_sample_test_errors: test_err.per_sample,
        construction: Some(chain),
        seed: cfg.seed,
    };
    Ok((esn, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtercore::{filter_from_functional, Functional};
    use crate::models::sas_certificate;

    #[test]
    fn practical_pipeline_learns_the_current_value() {
        let id = TargetFilter::User(filter_from_functional(&Functional::current_value(1, 1.0)));
        let cfg = PracticalConfig { state_dim: 20, rho: 0.5, input_scale: 0.2, test_inputs: 20, ..Default::default() };
        let (_, rep) = end_to_end_approximate(&id, &Pipeline::Practical(cfg)).unwrap();
        assert!(rep.test_sup_error <= 0.05, "{}", rep.test_sup_error);
    }

    #[test]
    fn realizable_target_is_learned_to_high_accuracy() {
        // Same reservoir as the pipeline draws with seed 3, and a fixed readout.
        let cfg = PracticalConfig { state_dim: 15, test_inputs: 10, ridge: 0.0, seed: 3, ..Default::default() };
        let same = EsnParams::random(&RandomEsn {
            state_dim: 15,
            input_dim: 1,
            output_dim: 1,
            rho: cfg.rho,
            input_scale: cfg.input_scale,
            bias_scale: cfg.bias_scale,
            activation: Activation::Tanh,
            seed: rng::substream_seed(3, "reservoir"),
        })
        .unwrap();
        let w = DMatrix::from_fn(1, 15, |_, j| ((j as f64) * 0.37).sin());
        let teacher = esn_output_filter(&same.with_readout(w).unwrap(), 1.0, 1e-12, 0).unwrap();
        let (_, rep) = end_to_end_approximate(&TargetFilter::User(teacher), &Pipeline::Practical(cfg)).unwrap();
        assert!(rep.test_sup_error <= 1e-8, "{}", rep.test_sup_error);
    }

    #[test]
    fn constructive_pipeline_matches_its_own_sas() {
        let sas = SasParams::scalar(&[0.0, 0.3], &[0.0, 0.2], 1.0).unwrap();
        let verdict = sas_certificate(&sas, 0.6, 2.0, 1000, 2).unwrap();
        let sys = sas.to_system(2.0, verdict.certificate()).unwrap();
        let target = TargetFilter::User(crate::reservoir::reservoir_filter(&sys, 1e-9, crate::reservoir::FilterView::Outputs).unwrap());
        let cfg = ConstructiveConfig {
            sas,
            verdict,
            eps: 0.2,
            chain: SasToEsnConfig { verify_inputs: 10, ..Default::default() },
            test_inputs: 10,
            test_len: 200,
            seed: 1,
        };
        let (_, rep) = end_to_end_approximate(&target, &Pipeline::Constructive(Box::new(cfg))).unwrap();
        let chain = rep.construction.as_ref().unwrap();
        assert!(chain.pass);
        assert!(rep.test_sup_error <= chain.output_bound + 1e-6, "{rep:?}");
    }
}
