use crate::error::{Error, Result};
use crate::models::{Architecture, Model, ModelInput};

/// Convex weights of the two ensemble members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleWeights {
    w_bigru: f64,
    w_cnn: f64,
}

impl Default for EnsembleWeights {
    fn default() -> Self {
        EnsembleWeights {
            w_bigru: 0.6,
            w_cnn: 0.4,
        }
    }
}

impl EnsembleWeights {
    pub fn new(w_bigru: f64, w_cnn: f64) -> Result<Self> {
        if !(w_bigru >= 0.0 && w_cnn >= 0.0) || (w_bigru + w_cnn - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "ensemble weights must be non-negative and sum to 1, got {w_bigru} and {w_cnn}"
            )));
        }
        Ok(EnsembleWeights { w_bigru, w_cnn })
    }

    pub fn bigru(&self) -> f64 {
        self.w_bigru
    }

    pub fn cnn(&self) -> f64 {
        self.w_cnn
    }
}

/// Weighted average of the two members' probabilities.
pub fn ensemble_predict(p_bigru: f64, p_cnn: f64, w: &EnsembleWeights) -> Result<f64> {
    for p in [p_bigru, p_cnn] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
    }
    Ok(w.w_bigru * p_bigru + w.w_cnn * p_cnn)
}

/// [`ensemble_predict`] applied per class.
pub fn ensemble_probs(p_bigru: &[f64], p_cnn: &[f64], w: &EnsembleWeights) -> Result<Vec<f64>> {
    if p_bigru.len() != p_cnn.len() {
        return Err(Error::DimensionMismatch {
            op: "ensemble",
            left: vec![p_bigru.len()],
            right: vec![p_cnn.len()],
        });
    }
    p_bigru.iter().zip(p_cnn).map(|(&a, &b)| ensemble_predict(a, b, w)).collect()
}

/// Class index for a probability output. A single probability is the
/// positive-class probability and must exceed 0.5; a tie goes to class 0.
/// For vectors the first maximal entry wins.
pub fn decide(probs: &[f64]) -> usize {
    match probs {
        [p] => usize::from(*p > 0.5),
        _ => {
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = i;
                }
            }
            best
        }
    }
}

/// The BiGRU and CNN members with their combination weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub bigru: Model,
    pub cnn: Model,
    pub weights: EnsembleWeights,
}

impl Ensemble {
    pub fn new(bigru: Model, cnn: Model, weights: EnsembleWeights) -> Result<Self> {
        if bigru.spec().architecture != Architecture::KeisBigru || cnn.spec().architecture != Architecture::KeisCnn {
            return Err(Error::invalid("ensemble members must be a keis_bigru and a keis_cnn model"));
        }
        if bigru.spec().head != cnn.spec().head {
            return Err(Error::invalid("ensemble members disagree on the output head"));
        }
        Ok(Ensemble { bigru, cnn, weights })
    }

    pub fn predict(&self, input: &ModelInput) -> Result<Vec<f64>> {
        ensemble_probs(&self.bigru.predict(input)?, &self.cnn.predict(input)?, &self.weights)
    }
}
