use serde::Serialize;

use crate::{Error, Result};

/// Split of a target uniform error `ε` between the SAS stage (`ε₁ = ε/2`) and
/// the hidden-layer fit (`ε₂`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub k: f64,
    pub l: f64,
    pub l1: f64,
    pub w1_norm: f64,
}

/// `ε₂ = min{ε(1−K)/(2‖W₁‖₂), (L−L₁)/2}` without any validation.
pub fn epsilon2(eps: f64, k: f64, l: f64, l1: f64, w1_norm: f64) -> f64 {
    (eps * (1.0 - k) / (2.0 * w1_norm)).min((l - l1) / 2.0)
}

/// Validates `ε > 0`, `0 < K < L/(L+1)`, `L₁ < L`, `‖W₁‖₂ > 0` and fills in the
/// budget.
pub fn make_error_budget(eps: f64, k: f64, l: f64, l1: f64, w1_norm: f64) -> Result<ErrorBudget> {
    let all = [eps, k, l, l1, w1_norm];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::Budget("all budget inputs must be finite".into()));
    }
    if eps <= 0.0 {
        return Err(Error::Budget(format!("ε = {eps} must be positive")));
    }
    if l <= 0.0 {
        return Err(Error::Budget(format!("L = {l} must be positive")));
    }
    if !(k > 0.0 && k < l / (l + 1.0)) {
        return Err(Error::Budget(format!("0 < K < L/(L+1) fails: K = {k}, L/(L+1) = {}", l / (l + 1.0))));
    }
    if !(l1 < l) {
        return Err(Error::Budget(format!("L₁ < L fails: L₁ = {l1}, L = {l}")));
    }
    if w1_norm <= 0.0 {
        return Err(Error::Budget(format!("‖W₁‖₂ = {w1_norm} must be positive")));
    }
    Ok(ErrorBudget { eps, eps1: eps / 2.0, eps2: epsilon2(eps, k, l, l1, w1_norm), k, l, l1, w1_norm })
}

impl ErrorBudget {
    /// Which branch of the minimum defines `ε₂`.
    pub fn binding_branch(&self) -> &'static str {
        if self.eps * (1.0 - self.k) / (2.0 * self.w1_norm) <= (self.l - self.l1) / 2.0 {
            "accuracy"
        } else {
            "ball"
        }
    }

    /// Bound on the state-filter distance implied by a fit residual `rho`.
    pub fn state_bound(&self, rho: f64) -> f64 {
        rho / (1.0 - self.k)
    }

    /// Bound on the output-filter distance implied by a fit residual `rho`.
    pub fn output_bound(&self, rho: f64) -> f64 {
        self.w1_norm * rho / (1.0 - self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_example() {
        // min{0.1·0.5/4, (1 − 0.8)/2}
        let e = epsilon2(0.1, 0.5, 1.0, 0.8, 2.0);
        assert!((e - 0.0125).abs() < 1e-15);
    }

    #[test]
    fn example_with_valid_constants() {
        let b = make_error_budget(0.2, 0.6, 2.0, 0.8, 1.0).unwrap();
        assert!((b.eps2 - 0.04).abs() < 1e-15);
        assert_eq!(b.eps1, 0.1);
        assert_eq!(b.binding_branch(), "accuracy");
    }

    #[test]
    fn violated_conditions_are_named() {
        let msg = |r: Result<ErrorBudget>| match r {
            Err(Error::Budget(m)) => m,
            other => panic!("{other:?}"),
        };
        assert!(msg(make_error_budget(0.1, 0.5, 1.0, 0.8, 2.0)).contains("L/(L+1)"));
        assert!(msg(make_error_budget(0.1, 0.3, 1.0, 1.0, 2.0)).contains("L₁"));
        assert!(msg(make_error_budget(0.0, 0.3, 1.0, 0.5, 2.0)).contains("ε"));
        assert!(msg(make_error_budget(0.1, 0.3, 1.0, 0.5, 0.0)).contains("W₁"));
    }

    #[test]
    fn large_readout_norm_selects_accuracy_branch() {
        let b = make_error_budget(0.1, 0.3, 1.0, 0.5, 1e6).unwrap();
        assert_eq!(b.binding_branch(), "accuracy");
        assert_eq!(b.eps2, 0.1 * 0.7 / 2e6);
        let b = make_error_budget(10.0, 0.3, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(b.binding_branch(), "ball");
        assert_eq!(b.eps2, 0.25);
    }
}
