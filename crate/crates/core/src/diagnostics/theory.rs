//! Closed-form scaling predictions for mixing thresholds and decay rates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Which imperfection model a prediction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Static,
    Single,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Static => "static",
            ModelKind::Single => "single",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(ModelKind::Static),
            "single" => Ok(ModelKind::Single),
            other => Err(domain(format!("unknown model '{other}', expected static or single"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    EntropySingle,
    EntropyStatic,
    ThresholdSingle,
    ThresholdStatic,
    Gamma,
    TauChi,
}

/// Fitted prefactors of `2^S = A eps^2 N` and `2^S = B eps^2 n_q^5 N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub a: f64,
    pub b: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { a: 0.37, b: 0.25 }
    }
}

impl Constants {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(domain(format!("constants must be positive, got A={a}, B={b}")));
        }
        Ok(Self { a, b })
    }
}

/// Predictor for one model with given constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub model: ModelKind,
    pub constants: Constants,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("imperfection strength must be positive, got {eps}")))
    }
}

fn dim(n_qubits: usize) -> f64 {
    (n_qubits as f64).exp2()
}

impl TheoryPrediction {
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            constants: Constants::default(),
        }
    }

    /// Number of mixed unperturbed states per unit `eps^2 N`.
    fn prefactor(&self, n_qubits: usize) -> f64 {
        match self.model {
            ModelKind::Single => self.constants.a,
            ModelKind::Static => self.constants.b * (n_qubits as f64).powi(5),
        }
    }

    /// `S = log2(A eps^2 N)` or `log2(B eps^2 n_q^5 N)`; may be negative.
    pub fn entropy(&self, eps: f64, n_qubits: usize) -> Result<f64> {
        check_eps(eps)?;
        Ok((self.prefactor(n_qubits) * eps * eps * dim(n_qubits)).log2())
    }

    /// `A^{-1/2} N^{-1/2}` or `B^{-1/2} N^{-1/2} n_q^{-5/2}`.
    pub fn threshold(&self, n_qubits: usize) -> f64 {
        (self.prefactor(n_qubits) * dim(n_qubits)).sqrt().recip()
    }

    /// Strength at which the fitted line reaches `S = 1`, a factor `sqrt 2`
    /// above [`threshold`](Self::threshold).
    pub fn threshold_s1(&self, n_qubits: usize) -> f64 {
        std::f64::consts::SQRT_2 * self.threshold(n_qubits)
    }

    /// Decay-rate scaling `eps^2` or `eps^2 n_q^5`, without the constant.
    pub fn gamma(&self, eps: f64, n_qubits: usize) -> Result<f64> {
        check_eps(eps)?;
        Ok(match self.model {
            ModelKind::Single => eps * eps,
            ModelKind::Static => eps * eps * (n_qubits as f64).powi(5),
        })
    }

    pub fn tau_chi(&self, eps: f64, n_qubits: usize) -> Result<f64> {
        Ok(self.gamma(eps, n_qubits)?.recip())
    }

    /// Evaluates `formula`. The entropy and threshold formulas carry their own
    /// model; `gamma` and `tau_chi` use `self.model`.
    pub fn predict(&self, formula: Formula, eps: f64, n_qubits: usize) -> Result<f64> {
        let with = |model| TheoryPrediction {
            model,
            constants: self.constants,
        };
        match formula {
            Formula::EntropySingle => with(ModelKind::Single).entropy(eps, n_qubits),
            Formula::EntropyStatic => with(ModelKind::Static).entropy(eps, n_qubits),
            Formula::ThresholdSingle => Ok(with(ModelKind::Single).threshold(n_qubits)),
            Formula::ThresholdStatic => Ok(with(ModelKind::Static).threshold(n_qubits)),
            Formula::Gamma => self.gamma(eps, n_qubits),
            Formula::TauChi => self.tau_chi(eps, n_qubits),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_thresholds() {
        let stat = TheoryPrediction::new(ModelKind::Static);
        assert!((stat.threshold(9) - 3.64e-4).abs() < 0.005e-4);
        let single = TheoryPrediction::new(ModelKind::Single);
        assert!((single.threshold(11) - 3.63e-2).abs() < 0.005e-2);
    }

    #[test]
    fn entropy_vanishes_at_threshold() {
        for model in [ModelKind::Single, ModelKind::Static] {
            let t = TheoryPrediction::new(model);
            for nq in 4..12 {
                assert!(t.entropy(t.threshold(nq), nq).unwrap().abs() < 1e-12);
                assert!((t.entropy(t.threshold_s1(nq), nq).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_and_lifetime() {
        let t = TheoryPrediction::new(ModelKind::Static);
        let g = t.predict(Formula::Gamma, 1e-3, 3).unwrap();
        assert!((g - 243e-6).abs() < 1e-18);
        assert!((t.predict(Formula::TauChi, 1e-3, 3).unwrap() * g - 1.0).abs() < 1e-12);
        assert!(t.gamma(0.0, 3).is_err());
        assert!(t.entropy(-1.0, 3).is_err());
    }

    #[test]
    fn constants_validation() {
        assert!(Constants::new(0.0, 1.0).is_err());
        assert_eq!(Constants::default(), Constants::new(0.37, 0.25).unwrap());
    }
}
