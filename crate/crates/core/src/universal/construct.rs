use nalgebra::DVector;
use serde::Serialize;

use super::budget::{make_error_budget, ErrorBudget};
use super::nn::{assemble_esn, fit_nn_reservoir, FitAttempt, FitConfig, FitDomain};
use crate::filtercore::ProbeReport;
use crate::linalg::spectral_norm;
use crate::models::{EsnParams, SasParams, SasVerdict};
use crate::reservoir::design::{ball_product_design, DesignSizes};
use crate::reservoir::{morphism_check, morphism_check_on, run_filter, run_generalized};
use crate::seqspace::{sample_km, BoundedSignal};
use crate::{rng, Error, Result};

/// The open unit ball of SAS inputs is sampled through this closed ball.
pub const SAS_INPUT_RADIUS: f64 = 1.0 - 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SasToEsnConfig {
    pub fit: FitConfig,
    /// Points used to estimate `L₁ = sup ‖F_SAS‖` over the state × input balls.
    pub l1_design: DesignSizes,
    pub morphism_samples: usize,
    pub verify_inputs: usize,
    pub verify_len: usize,
    pub washout_tol: f64,
    pub compare_tol: f64,
    pub seed: u64,
}

impl Default for SasToEsnConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            l1_design: DesignSizes { quasi_random: 4000, random: 4000, boundary: 2000 },
            morphism_samples: 1000,
            verify_inputs: 100,
            verify_len: 200,
            washout_tol: 1e-9,
            compare_tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SasToEsnReport {
    pub budget: ErrorBudget,
    pub width: usize,
    pub fit_history: Vec<FitAttempt>,
    pub design_residual: f64,
    pub holdout_residual: f64,
    /// `ρ`, the larger of the design and hold-out residuals.
    pub residual: f64,
    /// Morphism residual on sampled points of the ESN state ball.
    pub morphism_residual: f64,
    /// Morphism residual on states visited by ESN trajectories.
    pub morphism_residual_on_trajectories: f64,
    /// Largest `‖E x_t‖` seen along ESN trajectories; must stay within `L`.
    pub max_projected_state: f64,
    pub washout: usize,
    pub measured_state_distance: f64,
    pub state_bound: f64,
    pub measured_output_distance: f64,
    pub output_bound: f64,
    pub verify_inputs: usize,
    pub compare_tol: f64,
    pub pass: bool,
    #[serde(skip)]
    pub morphism: Option<ProbeReport>,
}

/// Sampled `sup ‖F_SAS(x, z)‖` over the `L`-ball times the input ball.
pub fn sas_image_sup(sas: &SasParams<f64>, l: f64, design: DesignSizes, seed: u64) -> f64 {
    ball_product_design(sas.state_dim(), l, sas.input_dim(), SAS_INPUT_RADIUS, design, seed)
        .iter()
        .map(|(x, z)| (sas.eval_p(z) * x + sas.eval_q(z)).norm())
        .fold(0.0, f64::max)
}

/// Replaces a certified SAS system by an ESN: fits `F_NN ≈ F_SAS` to `ε₂`,
/// assembles `A = GE`, `W = W₁E`, then measures every link of the error
/// chain. The report's `pass` is false if any measured quantity exceeds its
/// bound.
pub fn sas_to_esn(
    sas: &SasParams<f64>,
    verdict: &SasVerdict,
    eps: f64,
    cfg: &SasToEsnConfig,
) -> Result<(EsnParams<f64>, SasToEsnReport)> {
    let cert = verdict
        .certificate::<f64>()
        .ok_or_else(|| Error::MissingCertificate(format!("SAS certificate failed: {}", verdict.failures.join("; "))))?;
    let (k, l) = (verdict.k, verdict.l);
    let l1 = sas_image_sup(sas, l, cfg.l1_design, rng::substream_seed(cfg.seed, "l1"));
    let w1 = sas.readout();
    let budget = make_error_budget(eps, k, l, l1, spectral_norm(w1)?)?;

    let domain = FitDomain { state_dim: sas.state_dim(), input_dim: sas.input_dim(), state_bound: l, input_bound: SAS_INPUT_RADIUS };
    let target = |x: &DVector<f64>, z: &DVector<f64>| sas.eval_p(z) * x + sas.eval_q(z);
    let fit_cfg = FitConfig { seed: rng::substream_seed(cfg.seed, "fit"), ..cfg.fit.clone() };
    let fit = fit_nn_reservoir(&target, &domain, budget.eps2, &fit_cfg)?;
    if !fit.reached {
        return Err(Error::FitFailed { target: budget.eps2, best: fit.residual(), width: fit.params.width() });
    }
    let rho = fit.residual();
    let (esn, e) = assemble_esn(&fit.params, w1)?;

    let sas_sys = sas.to_system(l, Some(cert.clone()))?;
    let nn_sys = fit.params.to_system(l, 1.0, w1)?;
    let esn_sys = esn.to_system(1.0)?;
    let morph = morphism_check(&e, &esn_sys, &nn_sys, cfg.morphism_samples, rng::substream_seed(cfg.seed, "morphism"))?;

    let inputs: Vec<BoundedSignal<f64>> = sample_km(
        sas.input_dim(),
        SAS_INPUT_RADIUS,
        cfg.verify_len,
        cfg.verify_inputs,
        rng::substream_seed(cfg.seed, "verify-inputs"),
    )?;
    let mut visited = Vec::new();
    let (mut d_state, mut d_out, mut max_proj) = (0.0f64, 0.0f64, 0.0f64);
    let mut washout = 0;
    for z in &inputs {
        let a = run_filter(&sas_sys, &cert, z, cfg.washout_tol)?;
        let b = run_generalized(&esn_sys, z, a.clean_from)?;
        washout = a.clean_from;
        for (i, x) in b.states.window().iter().enumerate() {
            let ex = &e * x;
            max_proj = max_proj.max(ex.norm());
            if i >= a.clean_from {
                d_state = d_state.max((&a.states.window()[i] - ex).norm());
                d_out = d_out.max((&a.outputs.window()[i] - &b.outputs.window()[i]).norm());
            }
        }
        if visited.len() < cfg.morphism_samples {
            visited.extend(b.states.window().iter().zip(z.window()).map(|(x, zt)| (x.clone(), zt.clone())));
        }
    }
    visited.truncate(cfg.morphism_samples);
    let morph_traj = morphism_check_on(&e, &esn_sys, &nn_sys, &visited, cfg.seed)?;

    let state_bound = budget.state_bound(rho);
    let output_bound = budget.output_bound(rho);
    let pass = d_state <= state_bound + cfg.compare_tol
        && d_out <= output_bound + cfg.compare_tol
        && max_proj <= l + cfg.compare_tol
        && morph.worst_deviation <= 1e-12;
    let report = SasToEsnReport {
        budget,
        width: fit.params.width(),
        fit_history: fit.history.clone(),
        design_residual: fit.design_residual,
        holdout_residual: fit.holdout_residual,
        residual: rho,
        morphism_residual: morph.worst_deviation,
        morphism_residual_on_trajectories: morph_traj.worst_deviation,
        max_projected_state: max_proj,
        washout,
        measured_state_distance: d_state,
        state_bound,
        measured_output_distance: d_out,
        output_bound,
        verify_inputs: inputs.len(),
        compare_tol: cfg.compare_tol,
        pass,
        morphism: Some(morph),
    };
    Ok((esn, report))
}
