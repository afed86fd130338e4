use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyParams, PenaltyVariant};
use crate::jacobian::DEFAULT_CORRECTION_EPS;
use crate::linsolve::DEFAULT_TOL;

/// A rejected configuration value.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid value for `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Parameters of the outer iteration and the multilevel driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Diffusion weight on the displacement.
    pub tau1: f64,
    /// Weight of the control function `φ(f)`.
    pub tau2: f64,
    /// Diffusion weight on `f`.
    pub tau3: f64,
    /// Initial penalty weight, restored at the start of every level.
    pub lambda1: f64,
    /// Proximal weight.
    pub gamma: f64,
    /// Penalty growth factor per iteration.
    pub rho: f64,
    pub levels: usize,
    /// Iteration cap per level.
    pub max_iter: usize,
    pub eps_l: f64,
    pub eps_u: f64,
    pub variant: PenaltyVariant,
    /// Folding threshold for the correction step and the reported guarantee.
    pub correction_eps: f64,
    /// Run the correction step after every displacement update.
    pub correction: bool,
    /// Images are divided by this before entering the solver.
    pub intensity_scale: f64,
    /// How many times the displacement step may be shortened per iteration.
    pub max_backtracks: usize,
    /// Relative residual tolerance of the linear solves.
    pub solver_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau1: 0.3,
            tau2: 1e-2,
            tau3: 1e-3,
            lambda1: 0.8,
            gamma: 18.0,
            rho: 1.05,
            levels: 3,
            max_iter: 100,
            eps_l: 1e-3,
            eps_u: 1e-2,
            variant: PenaltyVariant::Phi1,
            correction_eps: DEFAULT_CORRECTION_EPS,
            correction: true,
            intensity_scale: 255.0,
            max_backtracks: 12,
            solver_tol: DEFAULT_TOL,
        }
    }
}

fn finite_at_least(field: &str, v: f64, lo: f64, strict: bool) -> Result<(), ConfigError> {
    let ok = v.is_finite() && if strict { v > lo } else { v >= lo };
    if ok {
        Ok(())
    } else {
        let op = if strict { ">" } else { ">=" };
        Err(ConfigError::new(
            field,
            format!("{v} must be finite and {op} {lo}"),
        ))
    }
}

impl SolverConfig {
    /// The diffusion baseline: no constraint, no control function, no
    /// smoothing of `f`.
    pub fn diffusion_baseline() -> Self {
        Self {
            tau2: 0.0,
            tau3: 0.0,
            lambda1: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        finite_at_least("tau1", self.tau1, 0.0, true)?;
        finite_at_least("tau2", self.tau2, 0.0, false)?;
        finite_at_least("tau3", self.tau3, 0.0, false)?;
        finite_at_least("lambda", self.lambda1, 0.0, false)?;
        finite_at_least("gamma", self.gamma, 0.0, true)?;
        finite_at_least("rho", self.rho, 1.0, true)?;
        finite_at_least("eps_l", self.eps_l, 0.0, true)?;
        finite_at_least("eps_u", self.eps_u, 0.0, true)?;
        finite_at_least("correction_eps", self.correction_eps, 0.0, true)?;
        finite_at_least("intensity_scale", self.intensity_scale, 0.0, true)?;
        finite_at_least("solver_tol", self.solver_tol, 0.0, true)?;
        if self.levels == 0 {
            return Err(ConfigError::new("levels", "must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::new("max_iter", "must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn energy_params(&self, lambda: f64) -> EnergyParams {
        EnergyParams {
            tau1: self.tau1,
            tau2: self.tau2,
            tau3: self.tau3,
            gamma: self.gamma,
            lambda,
            variant: self.variant,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SolverConfig::default();
        c.validate().unwrap();
        assert_eq!(c.variant, PenaltyVariant::Phi1);
        assert_eq!(c.eps_l, 1e-3);
        assert_eq!(c.eps_u, 1e-2);
        assert_eq!(c.correction_eps, 1e-2);
        SolverConfig::diffusion_baseline().validate().unwrap();
    }

    #[test]
    fn rejects_rho_one() {
        let c = SolverConfig {
            rho: 1.0,
            ..Default::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "rho");
    }

    #[test]
    fn rejects_bad_fields() {
        let c = SolverConfig {
            gamma: 0.0,
            ..Default::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "gamma");
        let c = SolverConfig {
            tau2: f64::NAN,
            ..Default::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "tau2");
        let c = SolverConfig {
            levels: 0,
            ..Default::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "levels");
    }
}
