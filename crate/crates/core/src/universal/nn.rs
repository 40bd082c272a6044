use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::linalg::ridge_solve;
use crate::models::{Activation, EsnParams};
use crate::reservoir::design::{ball_product_design, DesignSizes};
use crate::reservoir::{ReservoirSystem, SystemSpec};
use crate::{rng, Error, Real, Result};

/// One-hidden-layer reservoir map `F_NN(x, z) = E σ(G x + C z + ζ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NnReservoirParams<T: Real> {
    pub e: DMatrix<T>,
    pub g: DMatrix<T>,
    pub c: DMatrix<T>,
    pub zeta: DVector<T>,
    pub activation: Activation,
}

impl<T: Real> NnReservoirParams<T> {
    pub fn new(e: DMatrix<T>, g: DMatrix<T>, c: DMatrix<T>, zeta: DVector<T>, activation: Activation) -> Result<Self> {
        let width = g.nrows();
        if e.ncols() != width {
            return Err(Error::DimensionMismatch { expected: width, found: e.ncols() });
        }
        if g.ncols() != e.nrows() {
            return Err(Error::DimensionMismatch { expected: e.nrows(), found: g.ncols() });
        }
        if c.nrows() != width {
            return Err(Error::DimensionMismatch { expected: width, found: c.nrows() });
        }
        if zeta.len() != width {
            return Err(Error::DimensionMismatch { expected: width, found: zeta.len() });
        }
        if e.iter().chain(g.iter()).chain(c.iter()).chain(zeta.iter()).any(|v| !v.is_finite_val()) {
            return Err(Error::NonFinite("hidden-layer parameters"));
        }
        Ok(Self { e, g, c, zeta, activation })
    }

    pub fn width(&self) -> usize {
        self.g.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.e.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn hidden(&self, x: &DVector<T>, z: &DVector<T>) -> DVector<T> {
        hidden(&self.g, &self.c, &self.zeta, &self.activation, x, z)
    }

    pub fn map(&self, x: &DVector<T>, z: &DVector<T>) -> DVector<T> {
        &self.e * self.hidden(x, z)
    }

    /// `(F_NN, h_{W₁})` as a reservoir system on the given balls. No
    /// certificate is attached.
    pub fn to_system(&self, state_bound: T, input_bound: T, w1: &DMatrix<T>) -> Result<ReservoirSystem<T>> {
        let p = self.clone();
        ReservoirSystem::with_linear_readout(
            SystemSpec {
                label: format!("nn width={}", self.width()),
                state_dim: self.state_dim(),
                input_dim: self.input_dim(),
                output_dim: w1.nrows(),
                state_bound,
                input_bound,
            },
            move |x, z| p.map(x, z),
            w1.clone(),
        )
    }
}

fn hidden<T: Real>(g: &DMatrix<T>, c: &DMatrix<T>, zeta: &DVector<T>, act: &Activation, x: &DVector<T>, z: &DVector<T>) -> DVector<T> {
    (g * x + c * z + zeta).map(|v| act.apply(v))
}

/// Least-squares output weights for fixed hidden features, with the sup
/// residual on the fitting points.
pub fn fit_output_weights<T: Real>(
    g: &DMatrix<T>,
    c: &DMatrix<T>,
    zeta: &DVector<T>,
    activation: &Activation,
    points: &[(DVector<T>, DVector<T>)],
    targets: &[DVector<T>],
    ridge: T,
) -> Result<(DMatrix<T>, f64)> {
    if points.len() != targets.len() || points.is_empty() {
        return Err(Error::InvalidParameter("points and targets must be non-empty and aligned".into()));
    }
    let width = g.nrows();
    let out = targets[0].len();
    let mut h = DMatrix::zeros(points.len(), width);
    let mut y = DMatrix::zeros(points.len(), out);
    for (i, ((x, z), t)) in points.iter().zip(targets).enumerate() {
        h.row_mut(i).copy_from(&hidden(g, c, zeta, activation, x, z).transpose());
        y.row_mut(i).copy_from(&t.transpose());
    }
    let e = ridge_solve(&h, &y, ridge)?;
    let resid = (&h * e.transpose() - &y).row_iter().map(|r| r.norm().as_f64()).fold(0.0, f64::max);
    Ok((e, resid))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub widths: Vec<usize>,
    pub design: DesignSizes,
    pub holdout: DesignSizes,
    pub ridge: f64,
    /// Hidden pre-activations are of order `feature_scale` on the domain.
    pub feature_scale: f64,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            widths: vec![8, 16, 32, 64, 128, 256],
            design: DesignSizes { quasi_random: 3000, random: 1500, boundary: 500 },
            holdout: DesignSizes { quasi_random: 0, random: 2000, boundary: 500 },
            ridge: 1e-10,
            feature_scale: 1.5,
            activation: Activation::Tanh,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitAttempt {
    pub width: usize,
    pub design_residual: f64,
    pub holdout_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NnFit<T: Real> {
    pub params: NnReservoirParams<T>,
    pub design_residual: f64,
    pub holdout_residual: f64,
    pub target: f64,
    pub reached: bool,
    pub history: Vec<FitAttempt>,
}

impl<T: Real> NnFit<T> {
    /// Reported residual: the larger of design and hold-out sup errors.
    pub fn residual(&self) -> f64 {
        self.design_residual.max(self.holdout_residual)
    }
}

/// The state and input balls of a fitting domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitDomain<T: Real> {
    pub state_dim: usize,
    pub input_dim: usize,
    pub state_bound: T,
    pub input_bound: T,
}

/// Random hidden layer of the given width: `G ~ U(±s/L)`, `C ~ U(±s/M)`,
/// `ζ ~ U(±s)`.
pub fn random_features<T: Real>(domain: &FitDomain<T>, width: usize, scale: f64, seed: u64) -> (DMatrix<T>, DMatrix<T>, DVector<T>) {
    let mut r = rng::stream(seed, &format!("nn-features-{width}"));
    let gs = scale / domain.state_bound.as_f64();
    let cs = scale / domain.input_bound.as_f64();
    let g = DMatrix::from_fn(width, domain.state_dim, |_, _| T::lit(rng::uniform(&mut r, -gs, gs)));
    let c = DMatrix::from_fn(width, domain.input_dim, |_, _| T::lit(rng::uniform(&mut r, -cs, cs)));
    let zeta = DVector::from_fn(width, |_, _| T::lit(rng::uniform(&mut r, -scale, scale)));
    (g, c, zeta)
}

/// Fits `F_NN ≈ target` on the ball product, growing the width until both the
/// design and hold-out sup residuals are at most `eps2`. Returns the best fit
/// seen, flagged with whether `eps2` was reached.
pub fn fit_nn_reservoir<T: Real>(
    target: &dyn Fn(&DVector<T>, &DVector<T>) -> DVector<T>,
    domain: &FitDomain<T>,
    eps2: f64,
    cfg: &FitConfig,
) -> Result<NnFit<T>> {
    if cfg.widths.is_empty() {
        return Err(Error::InvalidParameter("empty width schedule".into()));
    }
    let design = ball_product_design(
        domain.state_dim,
        domain.state_bound,
        domain.input_dim,
        domain.input_bound,
        cfg.design,
        rng::substream_seed(cfg.seed, "nn-design"),
    );
    let holdout = ball_product_design(
        domain.state_dim,
        domain.state_bound,
        domain.input_dim,
        domain.input_bound,
        cfg.holdout,
        rng::substream_seed(cfg.seed, "nn-holdout"),
    );
    let design_y: Vec<_> = design.iter().map(|(x, z)| target(x, z)).collect();
    let holdout_y: Vec<_> = holdout.iter().map(|(x, z)| target(x, z)).collect();
    let mut best: Option<NnFit<T>> = None;
    let mut history = Vec::new();
    for &width in &cfg.widths {
        let (g, c, zeta) = random_features(domain, width, cfg.feature_scale, cfg.seed);
        let (e, design_residual) = fit_output_weights(&g, &c, &zeta, &cfg.activation, &design, &design_y, T::lit(cfg.ridge))?;
        let params = NnReservoirParams::new(e, g, c, zeta, cfg.activation.clone())?;
        let holdout_residual = holdout
            .iter()
            .zip(&holdout_y)
            .map(|((x, z), y)| (params.map(x, z) - y).norm().as_f64())
            .fold(0.0, f64::max);
        history.push(FitAttempt { width, design_residual, holdout_residual });
        let fit = NnFit { params, design_residual, holdout_residual, target: eps2, reached: false, history: Vec::new() };
        let done = fit.residual() <= eps2;
        if best.as_ref().is_none_or(|b| fit.residual() < b.residual()) || done {
            best = Some(fit);
        }
        if done {
            break;
        }
    }
    let mut best = best.expect("schedule is non-empty");
    best.reached = best.residual() <= eps2;
    best.history = history;
    Ok(best)
}

/// ESN with `A = G E`, `C`, `ζ` from the hidden layer and `W = W₁ E`; also
/// returns `E`, the morphism from the ESN to `(F_NN, h_{W₁})`.
pub fn assemble_esn<T: Real>(nn: &NnReservoirParams<T>, w1: &DMatrix<T>) -> Result<(EsnParams<T>, DMatrix<T>)> {
    if w1.ncols() != nn.state_dim() {
        return Err(Error::DimensionMismatch { expected: nn.state_dim(), found: w1.ncols() });
    }
    let a = &nn.g * &nn.e;
    let w = w1 * &nn.e;
    let esn = EsnParams::new(a, nn.c.clone(), nn.zeta.clone(), w, nn.activation.clone())?;
    Ok((esn, nn.e.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::morphism_check;

    fn domain(l: f64, m: f64) -> FitDomain<f64> {
        FitDomain { state_dim: 1, input_dim: 1, state_bound: l, input_bound: m }
    }

    #[test]
    fn constant_target_is_fitted() {
        let c = DVector::from_element(1, 0.37);
        let cc = c.clone();
        let fit = fit_nn_reservoir(&move |_: &DVector<f64>, _: &DVector<f64>| cc.clone(), &domain(1.0, 1.0), 1e-6, &FitConfig::default()).unwrap();
        assert!(fit.reached, "{:?}", fit.history);
        assert!(fit.residual() <= 1e-6);
    }

    #[test]
    fn target_in_feature_span_is_recovered() {
        let dom = domain(1.0, 1.0);
        let (g, c, zeta) = random_features(&dom, 12, 1.5, 4);
        let mut r = rng::seeded(1);
        let e = DMatrix::from_fn(1, 12, |_, _| rng::uniform(&mut r, -1.0, 1.0));
        let nn = NnReservoirParams::new(e.clone(), g.clone(), c.clone(), zeta.clone(), Activation::Tanh).unwrap();
        let sizes = DesignSizes { quasi_random: 300, random: 200, boundary: 20 };
        let points = ball_product_design(1, 1.0, 1, 1.0, sizes, 3);
        let ys: Vec<_> = points.iter().map(|(x, z)| nn.map(x, z)).collect();
        let (e2, resid) = fit_output_weights(&g, &c, &zeta, &Activation::Tanh, &points, &ys, 0.0).unwrap();
        assert!(resid <= 1e-10, "{resid}");
        assert!((e2 - e).norm() < 1e-6);
    }

    #[test]
    fn scalar_sas_map_is_fitted() {
        let target = |x: &DVector<f64>, z: &DVector<f64>| DVector::from_element(1, 0.3 * z[0] * x[0] + 0.2 * z[0]);
        let fit = fit_nn_reservoir(&target, &domain(1.0, 0.9), 0.01, &FitConfig::default()).unwrap();
        assert!(fit.reached, "{:?}", fit.history);
        assert!(fit.holdout_residual <= 0.01 && fit.design_residual <= 0.01);
    }

    #[test]
    fn exhausted_schedule_is_flagged() {
        let target = |x: &DVector<f64>, z: &DVector<f64>| DVector::from_element(1, (8.0 * x[0]).sin() * z[0]);
        let cfg = FitConfig { widths: vec![2, 3], ..Default::default() };
        let fit = fit_nn_reservoir(&target, &domain(1.0, 1.0), 1e-6, &cfg).unwrap();
        assert!(!fit.reached);
        assert_eq!(fit.history.len(), 2);
    }

    #[test]
    fn identity_assembly() {
        let id = DMatrix::<f64>::identity(3, 3);
        let nn = NnReservoirParams::new(id.clone(), id.clone(), DMatrix::from_element(3, 1, 0.5), DVector::zeros(3), Activation::Tanh).unwrap();
        let w1 = DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]);
        let (esn, f) = assemble_esn(&nn, &w1).unwrap();
        assert_eq!(esn.a, id);
        assert_eq!(esn.w, w1);
        assert_eq!(f, id);
        assert!(assemble_esn(&nn, &DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn assembled_esn_is_intertwined_with_the_hidden_layer_map() {
        let target = |x: &DVector<f64>, z: &DVector<f64>| DVector::from_element(1, 0.3 * z[0] * x[0] + 0.2 * z[0]);
        let fit = fit_nn_reservoir(&target, &domain(2.0, 1.0), 0.04, &FitConfig::default()).unwrap();
        let w1 = DMatrix::from_element(1, 1, 1.0);
        let (esn, f) = assemble_esn(&fit.params, &w1).unwrap();
        for x in [0.3, -1.2] {
            let x = DVector::from_element(esn.state_dim(), x / esn.state_dim() as f64);
            assert!(((&esn.w * &x) - &w1 * (&f * &x)).norm() < 1e-12);
        }
        let esn_sys = esn.to_system(1.0).unwrap();
        let nn_sys = fit.params.to_system(2.0, 1.0, &w1).unwrap();
        let rep = morphism_check(&f, &esn_sys, &nn_sys, 1000, 5).unwrap();
        assert!(rep.worst_deviation <= 1e-12, "{} at width {}", rep.worst_deviation, fit.params.width());
    }
}
