use super::DynamicsError;

/// Rates of the driven, lossy resonator. All in units of the drive strength
/// when `epsilon = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Two-photon drive strength.
    pub epsilon: f64,
    /// Kerr nonlinearity `K`.
    pub kerr: f64,
    /// Single-photon loss rate.
    pub kappa: f64,
    /// Engineered two-photon loss rate.
    pub kappa2: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, kerr: f64, kappa: f64, kappa2: f64) -> Result<Self, DynamicsError> {
        let p = Self {
            epsilon,
            kerr,
            kappa,
            kappa2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the model invariants, including `epsilon > 0`.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.validate_rates()?;
        if self.epsilon <= 0.0 {
            return Err(DynamicsError::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Finite, nonnegative rates. The numerical routines only need this, so a
    /// drive-free (`epsilon = 0`) generator can still be integrated.
    pub fn validate_rates(&self) -> Result<(), DynamicsError> {
        let fields = [
            ("epsilon", self.epsilon),
            ("kerr", self.kerr),
            ("kappa", self.kappa),
            ("kappa2", self.kappa2),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(DynamicsError::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in fields {
            if v < 0.0 {
                return Err(DynamicsError::InvalidParams(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn has_dissipation(&self) -> bool {
        self.kappa > 0.0 || self.kappa2 > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_signs() {
        assert!(ModelParams::new(1.0, 0.25, 0.01, 0.0).is_ok());
        assert!(ModelParams::new(0.0, 0.25, 0.01, 0.0).is_err());
        assert!(ModelParams::new(1.0, -0.1, 0.01, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, -0.01, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.0, f64::NAN).is_err());
    }
}
