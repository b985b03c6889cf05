use serde::Serialize;

use crate::error::{Error, Result};

/// Interaction rate, payoff and total mass of a kinetic model.
///
/// `eta` is the rate actually multiplying the collision operator. For the
/// diffusively rescaled systems use [`ModelParams::rescaled`], which folds
/// the `1/ε²` time acceleration into `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub eta: f64,
    pub h: f64,
    pub rho: f64,
    pub constrained: bool,
}

impl ModelParams {
    pub fn new(eta: f64, h: f64, rho: f64, constrained: bool) -> Result<Self> {
        for (name, v) in [("eta", eta), ("h", h), ("rho", rho)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            eta,
            h,
            rho,
            constrained,
        })
    }

    /// Parameters of the rescaled system with payoff `eps` and time sped up
    /// by `1/eps²`.
    pub fn rescaled(eta: f64, eps: f64, rho: f64, constrained: bool) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        Self::new(eta / (eps * eps), eps, rho, constrained)
    }

    /// `λ = 2ρη/3`, the total jump rate of the linear model.
    pub fn lambda(&self) -> f64 {
        2.0 * self.rho * self.eta / 3.0
    }

    /// Horizon `3/(8ηρ)` below which the fixed-point map of the constrained
    /// model contracts. Informational only.
    pub fn contraction_horizon(&self) -> f64 {
        3.0 / (8.0 * self.eta * self.rho)
    }

    /// Largest RK4 step accepted by the kinetic solvers: half of `3/(4ηρ)`.
    pub fn max_kinetic_dt(&self) -> f64 {
        0.5 * 3.0 / (4.0 * self.eta * self.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, false).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, false).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN, false).is_err());
    }

    #[test]
    fn rescaling_folds_eps_into_rate() {
        let p = ModelParams::rescaled(3.0, 0.5, 1.0, false).unwrap();
        assert_eq!(p.eta, 12.0);
        assert_eq!(p.h, 0.5);
        assert_eq!(p.lambda(), 8.0);
        assert_eq!(p.max_kinetic_dt(), 0.375 / 12.0);
    }
}
