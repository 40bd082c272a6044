use nalgebra::{DMatrix, DVector};

use crate::linalg::ridge_solve;
use crate::reservoir::{run_filter, washout_length, ContractionCertificate, ReservoirSystem};
use crate::seqspace::BoundedSignal;
use crate::{Error, Real, Result};

/// Ridge solution `W` of `min Σ‖W x_i − y_i‖² + λ‖W‖²_F`.
pub fn fit_readout<T: Real>(states: &[DVector<T>], teachers: &[DVector<T>], lambda: T) -> Result<DMatrix<T>> {
    if states.len() != teachers.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), found: teachers.len() });
    }
    let (n, d) = match (states.first(), teachers.first()) {
        (Some(x), Some(y)) => (x.len(), y.len()),
        _ => return Err(Error::InvalidParameter("no training samples".into())),
    };
    let x = DMatrix::from_fn(states.len(), n, |i, j| states[i][j]);
    let y = DMatrix::from_fn(teachers.len(), d, |i, j| teachers[i][j]);
    ridge_solve(&x, &y, lambda)
}

/// Collects reservoir states and teacher values at indices from `washout` on
/// and fits the readout. `washout` must cover the washout length of the
/// certificate at tolerance `tol`; teachers must be aligned with the inputs.
pub fn train_readout<T: Real>(
    s: &ReservoirSystem<T>,
    cert: &ContractionCertificate<T>,
    inputs: &[BoundedSignal<T>],
    teachers: &[BoundedSignal<T>],
    lambda: T,
    washout: usize,
    tol: T,
) -> Result<DMatrix<T>> {
    let (states, ys) = collect_training_pairs(s, cert, inputs, teachers, washout, tol)?;
    fit_readout(&states, &ys, lambda)
}

pub(crate) fn collect_training_pairs<T: Real>(
    s: &ReservoirSystem<T>,
    cert: &ContractionCertificate<T>,
    inputs: &[BoundedSignal<T>],
    teachers: &[BoundedSignal<T>],
    washout: usize,
    tol: T,
) -> Result<(Vec<DVector<T>>, Vec<DVector<T>>)> {
    if inputs.len() != teachers.len() {
        return Err(Error::DimensionMismatch { expected: inputs.len(), found: teachers.len() });
    }
    let needed = washout_length(cert.rate, s.state_bound(), tol)?;
    if washout < needed {
        return Err(Error::InvalidParameter(format!("washout {washout} is shorter than the required {needed}")));
    }
    let mut states = Vec::new();
    let mut ys = Vec::new();
    for (z, y) in inputs.iter().zip(teachers) {
        if z.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: z.len(), found: y.len() });
        }
        let run = run_filter(s, cert, z, tol)?;
        for i in washout.max(run.clean_from)..z.len() {
            states.push(run.states.window()[i].clone());
            ys.push(y.window()[i].clone());
        }
    }
    Ok((states, ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::SystemSpec;
    use crate::seqspace::sample_km;

    #[test]
    fn identity_and_scalar_examples() {
        let xs: Vec<DVector<f64>> = (0..10).map(|i| DVector::from_vec(vec![i as f64, (i * i) as f64 * 0.1, 1.0])).collect();
        let w = fit_readout(&xs, &xs, 0.0).unwrap();
        assert!((w - DMatrix::identity(3, 3)).norm() < 1e-10);
        let xs: Vec<DVector<f64>> = (1..6).map(|i| DVector::from_element(1, i as f64)).collect();
        let ys: Vec<DVector<f64>> = xs.iter().map(|x| x * 3.0).collect();
        assert!((fit_readout(&xs, &ys, 0.0).unwrap()[(0, 0)] - 3.0).abs() < 1e-12);
        assert!(fit_readout(&xs, &ys, 1e14).unwrap()[(0, 0)].abs() < 1e-9);
        let dup: Vec<DVector<f64>> = (0..5).map(|i| DVector::from_vec(vec![i as f64, 2.0 * i as f64])).collect();
        assert!(matches!(fit_readout(&dup, &ys, 0.0), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn training_recovers_a_readout_of_the_same_reservoir() {
        let a = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.2, 0.3]);
        let r = crate::linalg::spectral_norm(&a).unwrap();
        let s = ReservoirSystem::new(
            SystemSpec { label: "toy".into(), state_dim: 2, input_dim: 1, output_dim: 2, state_bound: 2f64.sqrt(), input_bound: 1.0 },
            move |x: &DVector<f64>, z: &DVector<f64>| (&a * x + DVector::from_vec(vec![z[0], -0.5 * z[0]])).map(f64::tanh),
            |x| x.clone(),
        )
        .unwrap();
        let cert = ContractionCertificate::analytic(r, "tanh").unwrap();
        let inputs = sample_km(1, 1.0, 80, 5, 1).unwrap();
        let w_true = DMatrix::from_row_slice(1, 2, &[1.5, -0.7]);
        let teachers: Vec<_> = inputs
            .iter()
            .map(|z| {
                let run = crate::reservoir::run_filter(&s, &cert, z, 1e-12).unwrap();
                run.states.map_window(|x| &w_true * x).unwrap()
            })
            .collect();
        let n = washout_length(r, s.state_bound(), 1e-12).unwrap();
        let w = train_readout(&s, &cert, &inputs, &teachers, 0.0, n, 1e-12).unwrap();
        assert!((w - w_true).norm() < 1e-9);
        assert!(train_readout(&s, &cert, &inputs, &teachers, 0.0, n - 1, 1e-12).is_err());
    }
}
