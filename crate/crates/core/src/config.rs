use crate::error::{Error, Result};

/// `ln(max(x, e))`: natural log clamped so that tiny arguments give 1.
pub fn clamped_ln(x: f64) -> f64 {
    x.max(std::f64::consts::E).ln()
}

/// Parameters shared by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Accuracy parameter in (0, 1).
    pub epsilon: f64,
    /// Failure budget in (0, 1).
    pub delta: f64,
    /// Fixed sample size; replaces the formulas below when set.
    pub s_override: Option<usize>,
    /// Constant of the uniform sample-size formula.
    pub c_sample: f64,
    /// Constant of the polylog sample-size formula (row-norm and sketch).
    pub c_rownorm: f64,
    /// Constant in the off-diagonal zeroing threshold.
    pub c_log: f64,
    /// Column sampling constant for the top-eigenvector estimator.
    pub c_col: f64,
    /// Rows of the sign matrix used for sketched row norms.
    pub jl_dim: usize,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            epsilon: 0.25,
            delta: 1.0 / 3.0,
            s_override: None,
            c_sample: 1.0,
            c_rownorm: 0.002,
            c_log: 1.0,
            c_col: 10.0,
            jl_dim: 64,
            seed: 0,
        }
    }
}

fn check_unit(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::config(field, format!("must lie in (0, 1), got {v}")));
    }
    Ok(())
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(field, format!("must be positive, got {v}")));
    }
    Ok(())
}

impl EstimatorConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        EstimatorConfig {
            epsilon,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("epsilon", self.epsilon)?;
        check_unit("delta", self.delta)?;
        check_positive("c_sample", self.c_sample)?;
        check_positive("c_rownorm", self.c_rownorm)?;
        check_positive("c_log", self.c_log)?;
        check_positive("c_col", self.c_col)?;
        if self.s_override == Some(0) {
            return Err(Error::config("s", "must be >= 1"));
        }
        if self.jl_dim == 0 {
            return Err(Error::config("jl_dim", "must be >= 1"));
        }
        Ok(())
    }

    /// `ceil(c_sample / (eps^2 delta) * ln(1 / (eps delta)))`, independent of `n`.
    pub fn uniform_sample_size(&self) -> usize {
        if let Some(s) = self.s_override {
            return s;
        }
        let (e, d) = (self.epsilon, self.delta);
        let s = self.c_sample / (e * e * d) * clamped_ln(1.0 / (e * d));
        (s.ceil() as usize).max(1)
    }

    /// `ceil(c_rownorm * ln^4(dim) * ln^2(1/eps) / eps^2)`.
    pub fn rownorm_sample_size(&self, dim: usize) -> usize {
        if let Some(s) = self.s_override {
            return s;
        }
        let e = self.epsilon;
        let s =
            self.c_rownorm * clamped_ln(dim as f64).powi(4) * clamped_ln(1.0 / e).powi(2) / (e * e);
        (s.ceil() as usize).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_size_has_no_n_dependence() {
        let cfg = EstimatorConfig {
            epsilon: 0.25,
            delta: 1.0 / 3.0,
            c_sample: 1.0,
            ..Default::default()
        };
        // 1 / (0.0625 / 3) * ln(12) = 48 * 2.4849 = 119.27
        assert_eq!(cfg.uniform_sample_size(), 120);
        let fixed = EstimatorConfig {
            s_override: Some(17),
            ..cfg
        };
        assert_eq!(fixed.uniform_sample_size(), 17);
    }

    #[test]
    fn log_is_clamped() {
        assert_eq!(clamped_ln(1.0), 1.0);
        assert!((clamped_ln(100.0) - 100f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(EstimatorConfig::with_epsilon(1.5).validate().is_err());
        let bad = EstimatorConfig {
            s_override: Some(0),
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { field, .. }) if field == "s"));
    }
}
