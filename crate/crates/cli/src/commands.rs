use std::fmt;
use std::path::Path;

use rcuniv::models::{load_model, sas_certificate, Activation, Model, SasModel, SasParams};
use rcuniv::reservoir::{
    internal_approx_check, run_filter, run_generalized, washout_length, InternalApproxConfig, RunOutput, SupBound,
};
use rcuniv::seqspace::csv::read_signal_csv;
use rcuniv::seqspace::sample_km;
use rcuniv::universal::{
    end_to_end_approximate, esn_output_filter, make_error_budget, ConstructiveConfig, FitConfig, Pipeline, PracticalConfig,
    SasToEsnConfig, TargetFilter,
};
use rcuniv::{linalg, rng, Certificate, Error, System};
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, PipelineKind, Target};
use crate::output::OutDir;

/// Exit codes: 1 usage or input error, 2 negative verdict, 3 pipeline stage failure.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl fmt::Display) -> Self {
        Self { code: 1, message: message.to_string() }
    }

    pub fn negative(message: impl fmt::Display) -> Self {
        Self { code: 2, message: message.to_string() }
    }

    pub fn stage(stage: &str, err: impl fmt::Display) -> Self {
        Self { code: 3, message: format!("stage `{stage}` failed: {err}") }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e)
    }
}

pub type Outcome = Result<u8, Failure>;

fn model_path(cfg: &Config) -> Result<&Path, Failure> {
    cfg.model.path.as_deref().ok_or_else(|| Failure::usage("no model given (use --model or [model] path)"))
}

fn load(path: &Path) -> Result<Model<f64>, Failure> {
    load_model(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct CertifyReport {
    kind: &'static str,
    certified: bool,
    rate: Option<f64>,
    details: serde_json::Value,
    message: String,
}

pub fn certify(cfg: &Config, out: &OutDir) -> Outcome {
    let model = load(model_path(cfg)?)?;
    let report = match &model {
        Model::Esn(p) => {
            let norm = linalg::spectral_norm(&p.a).map_err(Failure::usage)?;
            let ls = p.activation.lipschitz();
            let product = norm * ls;
            let certified = product < 1.0;
            CertifyReport {
                kind: "esn",
                certified,
                rate: certified.then_some(product),
                details: json!({ "spectral_norm_a": norm, "activation": p.activation.name(), "lipschitz": ls, "product": product }),
                message: if certified {
                    format!("certified: ‖A‖₂·L_σ = {product} < 1")
                } else {
                    format!("not certified: ‖A‖₂·L_σ = {norm}·{ls} = {product} ≥ 1")
                },
            }
        }
        Model::Sas(m) => match (m.k, m.state_bound) {
            (Some(k), Some(l)) => {
                let v = sas_certificate(&m.params, k, l, cfg.sampling.certificate_samples, cfg.seeds.root)
                    .map_err(Failure::usage)?;
                CertifyReport {
                    kind: "sas",
                    certified: v.certified(),
                    rate: v.certified().then_some(k),
                    message: if v.certified() {
                        format!("certified: K = {k}, L = {l}, ‖F‖ ≤ KL + K = {}", v.image_bound)
                    } else {
                        format!("not certified: {}", v.failures.join("; "))
                    },
                    details: serde_json::to_value(&v).expect("verdict serializes"),
                }
            }
            _ => {
                let pb = m.params.p_coefficient_bound().map_err(Failure::usage)?;
                let qb = m.params.q_coefficient_bound();
                let cert = m.params.generic_certificate().map_err(Failure::usage)?;
                let certified = cert.is_some();
                CertifyReport {
                    kind: "sas",
                    certified,
                    rate: cert.as_ref().map(|(c, _)| c.rate),
                    details: json!({ "p_bound": pb, "q_bound": qb, "invariant_radius": cert.as_ref().map(|(_, r)| *r) }),
                    message: if certified {
                        format!("certified: Σ‖A_i‖₂ = {pb} < 1 (no K, L given; invariant radius {})", qb / (1.0 - pb))
                    } else {
                        format!("not certified: Σ‖A_i‖₂ = {pb} ≥ 1 and no K, L given")
                    },
                }
            }
        },
    };
    out.write_json("report.json", &report)?;
    println!("{}", report.message);
    Ok(if report.certified { 0 } else { 2 })
}

/// Reservoir system of a model on inputs bounded by `input_bound`, with its
/// analytic certificate when one can be established.
pub fn build_system(model: &Model<f64>, input_bound: f64, cfg: &Config) -> Result<(System, Option<Certificate>), Failure> {
    match model {
        Model::Esn(p) => {
            let s = p.to_system(input_bound).map_err(Failure::usage)?;
            let c = s.certificate().cloned();
            Ok((s, c))
        }
        Model::Sas(m) => {
            if input_bound > 1.0 {
                return Err(Failure::usage(format!("SAS inputs must lie in the unit ball, got bound {input_bound}")));
            }
            sas_system(m, cfg)
        }
    }
}

fn sas_system(m: &SasModel<f64>, cfg: &Config) -> Result<(System, Option<Certificate>), Failure> {
    if let (Some(k), Some(l)) = (m.k, m.state_bound) {
        let v = sas_certificate(&m.params, k, l, cfg.sampling.certificate_samples, cfg.seeds.root).map_err(Failure::usage)?;
        let cert = v.certificate::<f64>();
        let s = m.params.to_system(l, cert.clone()).map_err(Failure::usage)?;
        return Ok((s, cert));
    }
    match m.params.to_generic_system(m.state_bound.unwrap_or(0.0)) {
        Ok(s) => {
            let c = s.certificate().cloned();
            Ok((s, c))
        }
        Err(_) => match m.state_bound {
            Some(l) => Ok((m.params.to_system(l, None).map_err(Failure::usage)?, None)),
            None => Err(Failure::usage("SAS model has neither a contraction certificate nor a state bound")),
        },
    }
}

fn run_csv(run: &RunOutput<f64>) -> String {
    let (n, d) = (run.states.dim(), run.outputs.dim());
    let mut s = String::from("t,clean");
    (1..=n).for_each(|i| s.push_str(&format!(",x{i}")));
    (1..=d).for_each(|i| s.push_str(&format!(",y{i}")));
    s.push('\n');
    for (i, (x, y)) in run.states.window().iter().zip(run.outputs.window()).enumerate() {
        s.push_str(&format!("{},{}", run.states.time_of(i), u8::from(i >= run.clean_from)));
        for v in x.iter().chain(y.iter()) {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

pub fn run(cfg: &Config, out: &OutDir) -> Outcome {
    let model = load(model_path(cfg)?)?;
    let input = cfg.input.path.as_deref().ok_or_else(|| Failure::usage("no input CSV given (use --input or [input] path)"))?;
    let z = read_signal_csv::<f64>(input).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
    let (sys, cert) = build_system(&model, z.bound(), cfg)?;
    if z.dim() != sys.input_dim() {
        return Err(Failure::usage(format!("input has dimension {}, model expects {}", z.dim(), sys.input_dim())));
    }
    let tol = cfg.tolerances.washout;
    let result = match &cert {
        Some(c) => run_filter(&sys, c, &z, tol),
        None => {
            eprintln!("warning: no contraction certificate; the run is one solution without uniqueness guarantee");
            run_generalized(&sys, &z, 0)
        }
    };
    let run = result.map_err(|e| match e {
        Error::WindowTooShort { required, found } => Failure::usage(format!(
            "input window has length {found}, but washout at tol {tol} needs {} steps, so at least {required} entries are required",
            required - 1
        )),
        other => Failure::usage(other),
    })?;
    out.write("output.csv", &run_csv(&run))?;
    let summary = run.summary();
    out.write_json(
        "report.json",
        &json!({ "run": summary, "rate": cert.as_ref().map(|c| c.rate), "washout_tol": tol, "state_bound": sys.state_bound() }),
    )?;
    println!("wrote {} rows, clean from index {}{}", summary.len, summary.clean_from, if summary.unique { "" } else { " (no uniqueness certificate)" });
    Ok(0)
}

pub fn verify_bound(cfg: &Config, out: &OutDir) -> Outcome {
    let m = cfg.sampling.input_bound;
    let first = load(model_path(cfg)?)?;
    let (s1, c1) = build_system(&first, m, cfg)?;
    if c1.as_ref().is_none_or(|c| !c.is_analytic()) {
        return Err(Failure::usage("the first model has no analytic contraction certificate"));
    }
    let (s2, sup_bound) = match (&cfg.verify.second, cfg.verify.perturbation) {
        (Some(path), None) => {
            let (s, _) = build_system(&load(path)?, m, cfg)?;
            let bound = match cfg.verify.sup_bound {
                Some(value) => SupBound::Analytic { value },
                None => SupBound::Sampled { safety: cfg.verify.safety },
            };
            (s, bound)
        }
        (None, Some(eta)) => {
            let Model::Esn(p) = &first else {
                return Err(Failure::usage("perturbations are only defined for ESN models"));
            };
            let q = p.perturb(eta, m, rng::substream_seed(cfg.seeds.root, "perturbation")).map_err(Failure::usage)?;
            (q.to_system(m).map_err(Failure::usage)?, SupBound::Analytic { value: eta })
        }
        _ => return Err(Failure::usage("give exactly one of [verify] second or [verify] perturbation")),
    };
    let inputs = sample_km(s1.input_dim(), m, cfg.sampling.len, cfg.sampling.inputs, rng::substream_seed(cfg.seeds.root, "verify-inputs"))
        .map_err(Failure::usage)?;
    let icfg = InternalApproxConfig {
        washout_tol: cfg.tolerances.washout,
        compare_tol: cfg.tolerances.compare,
        sup_bound,
        seed: cfg.seeds.root,
        ..Default::default()
    };
    let rep = internal_approx_check(&s1, &s2, &inputs, &icfg).map_err(|e| match e {
        Error::MissingCertificate(_) | Error::WindowTooShort { .. } | Error::DimensionMismatch { .. } => Failure::usage(e),
        other => Failure::stage("internal-approximation", other),
    })?;
    out.write_json("report.json", &rep)?;
    println!(
        "d_F = {:.6e} (upper {:.6e}), bound = {:.6e}, measured = {:.6e}: {}",
        rep.d_f,
        rep.d_f_upper,
        rep.bound,
        rep.measured,
        if rep.pass { "pass" } else { "FAIL" }
    );
    Ok(if rep.pass { 0 } else { 2 })
}

fn target_filter(cfg: &Config) -> Result<TargetFilter<f64>, Failure> {
    let m = cfg.sampling.input_bound;
    match cfg.target.as_ref().ok_or_else(|| Failure::usage("no [target] section"))? {
        Target::Narma { order, washout } => TargetFilter::narma(*order, m, *washout).map_err(Failure::usage),
        Target::Volterra { terms, depth, degree } => {
            TargetFilter::volterra(terms.clone(), *depth, *degree, m).map_err(Failure::usage)
        }
        Target::Model { path } => {
            let model = load(path)?;
            let (sys, cert) = build_system(&model, m, cfg)?;
            let tol = cfg.tolerances.washout;
            let washout = match &cert {
                Some(c) => washout_length(c.rate, sys.state_bound(), tol).map_err(Failure::usage)?,
                None => return Err(Failure::usage("target model has no contraction certificate")),
            };
            let f = match &model {
                Model::Esn(p) => esn_output_filter(p, m, tol, washout).map_err(Failure::usage)?,
                Model::Sas(_) => rcuniv::reservoir::reservoir_filter(&sys, tol, rcuniv::reservoir::FilterView::Outputs)
                    .map_err(Failure::usage)?,
            };
            Ok(TargetFilter::User(f))
        }
    }
}

fn stage_failure(e: Error) -> Failure {
    match e {
        Error::Budget(_) | Error::InvalidParameter(_) => Failure::usage(e),
        Error::FitFailed { .. } => Failure::stage("fit", e),
        Error::MissingCertificate(_) => Failure::stage("certificate", e),
        Error::WindowTooShort { .. } => Failure::stage("evaluation", e),
        other => Failure::stage("pipeline", other),
    }
}

pub fn approximate(cfg: &Config, out: &OutDir) -> Outcome {
    let target = target_filter(cfg)?;
    let p = &cfg.pipeline;
    let activation = Activation::from_name(&p.activation).map_err(Failure::usage)?;
    let pipeline = match p.kind {
        PipelineKind::Practical => Pipeline::Practical(PracticalConfig {
            state_dim: p.state_dim,
            rho: p.rho,
            input_scale: p.input_scale,
            bias_scale: p.bias_scale,
            activation,
            ridge: p.ridge,
            train_inputs: p.train_inputs,
            train_len: p.train_len,
            test_inputs: cfg.sampling.inputs,
            test_len: cfg.sampling.len,
            washout_tol: cfg.tolerances.washout,
            seed: cfg.seeds.root,
        }),
        PipelineKind::Constructive => {
            let path = p.sas.as_deref().ok_or_else(|| Failure::usage("constructive pipeline needs [pipeline] sas"))?;
            let Model::Sas(m) = load(path)? else {
                return Err(Failure::usage(format!("{} is not a SAS model", path.display())));
            };
            let (k, l) = match (p.k.or(m.k), p.l.or(m.state_bound)) {
                (Some(k), Some(l)) => (k, l),
                _ => return Err(Failure::usage("constructive pipeline needs K and L")),
            };
            // The constants must admit a budget before any certificate work.
            make_error_budget(cfg.budget.eps, k, l, k * l + k, 1.0).map_err(Failure::usage)?;
            let sas: SasParams<f64> = m.params;
            let verdict = sas_certificate(&sas, k, l, cfg.sampling.certificate_samples, cfg.seeds.root).map_err(Failure::usage)?;
            if !verdict.certified() {
                return Err(Failure::negative(format!("SAS not certified: {}", verdict.failures.join("; "))));
            }
            let chain = SasToEsnConfig {
                fit: FitConfig {
                    widths: p.widths.clone(),
                    ridge: p.nn_ridge,
                    feature_scale: p.feature_scale,
                    activation,
                    ..Default::default()
                },
                verify_inputs: cfg.sampling.inputs,
                verify_len: cfg.sampling.len,
                washout_tol: cfg.tolerances.washout,
                compare_tol: cfg.tolerances.compare,
                seed: cfg.seeds.root,
                ..Default::default()
            };
            Pipeline::Constructive(Box::new(ConstructiveConfig {
                sas,
                verdict,
                eps: cfg.budget.eps,
                chain,
                test_inputs: cfg.sampling.inputs,
                test_len: cfg.sampling.len,
                seed: cfg.seeds.root,
            }))
        }
    };
    let (esn, report) = end_to_end_approximate(&target, &pipeline).map_err(stage_failure)?;
    out.write("model.json", &rcuniv::models::model_to_json(&Model::Esn(esn)).map_err(Failure::usage)?)?;
    out.write_json("report.json", &report)?;
    let mut csv = String::from("sample,sup_error\n");
    for (i, e) in report.per_sample_test_errors.iter().enumerate() {
        csv.push_str(&format!("{i},{e}\n"));
    }
    out.write("errors.csv", &csv)?;
    let chain_ok = report.construction.as_ref().is_none_or(|c| c.pass);
    let met = cfg.budget.target_error.is_none_or(|t| report.test_sup_error <= t);
    println!(
        "N = {}, test sup error = {:.6e}, test rmse = {:.6e}{}",
        report.reservoir_size,
        report.test_sup_error,
        report.test_rmse,
        match cfg.budget.target_error {
            Some(t) => format!(", target {t:e} {}", if met { "met" } else { "missed" }),
            None => String::new(),
        }
    );
    if !chain_ok {
        println!("construction chain check failed; see report.json");
    }
    Ok(if met && chain_ok { 0 } else { 2 })
}
