use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of repeated sampling. `lambda` is always `epsilon·(p+1)/m`
/// for the `p` the parameters were bound to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub epsilon: f64,
    pub m: usize,
    pub phi1: f64,
    pub phi2: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl SamplingParams {
    pub fn new(epsilon: f64, m: usize, phi1: f64, phi2: f64, p: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{epsilon} not in (0, 1)")));
        }
        if m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        if p == 0 {
            return Err(Error::param("p", "must be at least 1"));
        }
        let params = SamplingParams {
            epsilon,
            m,
            phi1,
            phi2,
            lambda: epsilon * (p as f64 + 1.0) / m as f64,
            seed: 0,
        };
        params.validate()?;
        Ok(params)
    }

    /// `m = 1 + ⌈√((p+1)/2)⌉`, `φ₁ = 1`, `φ₂ = 1/2`.
    pub fn p_system(p: usize, epsilon: f64) -> Result<Self> {
        let m = 1 + ((p as f64 + 1.0) / 2.0).sqrt().ceil() as usize;
        Self::new(epsilon, m, 1.0, 0.5, p)
    }

    /// `m = 1`, `φ₁ = 1/(p+1)`, `φ₂ = 1`.
    pub fn p_extendible(p: usize, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 1, 1.0 / (p as f64 + 1.0), 1.0, p)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{} not in (0, 1)", self.epsilon)));
        }
        if self.m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        for (name, v) in [("phi1", self.phi1), ("phi2", self.phi2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} not in [0, 1]")));
            }
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("{} must be positive", self.lambda)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_system_preset() {
        let p = SamplingParams::p_system(1, 0.1).unwrap();
        assert_eq!((p.m, p.phi1, p.phi2), (2, 1.0, 0.5));
        assert!((p.lambda - 0.1).abs() < 1e-15);
        assert_eq!(SamplingParams::p_system(7, 0.1).unwrap().m, 3);
        assert_eq!(SamplingParams::p_system(2, 0.1).unwrap().m, 3);
        assert_eq!(SamplingParams::p_system(3, 0.1).unwrap().m, 3);
    }

    #[test]
    fn p_extendible_preset() {
        let p = SamplingParams::p_extendible(1, 0.01).unwrap();
        assert_eq!((p.m, p.phi1, p.phi2), (1, 0.5, 1.0));
        assert_eq!(SamplingParams::p_extendible(3, 0.1).unwrap().phi1, 0.25);
        assert_eq!(SamplingParams::p_extendible(1, 0.5).unwrap().lambda, 1.0);
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(SamplingParams::p_system(0, 0.1).is_err());
        assert!(SamplingParams::p_system(1, 0.0).is_err());
        assert!(SamplingParams::p_system(1, 1.0).is_err());
        assert!(SamplingParams::new(0.1, 0, 1.0, 0.5, 1).is_err());
        assert!(SamplingParams::new(0.1, 2, 1.5, 0.5, 1).is_err());
        assert!(SamplingParams::new(0.1, 2, 1.0, -0.1, 1).is_err());
    }
}
