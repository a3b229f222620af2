use crate::error::{Error, Result};

/// Probabilities are clamped to `[FLOOR, 1 - FLOOR]` before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Single sigmoid output; `gold` is 0 or 1.
    BinaryCrossEntropy,
    /// Softmax output; `gold` is a class index.
    CategoricalCrossEntropy,
}

/// Loss value and its gradient with respect to `pred`.
pub fn loss(kind: LossKind, pred: &[f64], gold: usize) -> Result<(f64, Vec<f64>)> {
    match kind {
        LossKind::BinaryCrossEntropy => {
            if pred.len() != 1 || gold > 1 {
                return Err(Error::invalid(format!(
                    "binary cross-entropy needs one probability and a 0/1 label, got {} values and label {gold}",
                    pred.len()
                )));
            }
            let p = pred[0].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            let (value, grad) = if gold == 1 {
                (-p.ln(), -1.0 / p)
            } else {
                (-(1.0 - p).ln(), 1.0 / (1.0 - p))
            };
            Ok((value, vec![grad]))
        }
        LossKind::CategoricalCrossEntropy => {
            if gold >= pred.len() {
                return Err(Error::invalid(format!(
                    "class {gold} outside a {}-way prediction",
                    pred.len()
                )));
            }
            let p = pred[gold].clamp(PROB_FLOOR, 1.0);
            let mut grad = vec![0.0; pred.len()];
            grad[gold] = -1.0 / p;
            Ok((-p.ln(), grad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_values() {
        let (l, _) = loss(LossKind::BinaryCrossEntropy, &[0.5], 1).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        let (l1, _) = loss(LossKind::BinaryCrossEntropy, &[1.0], 1).unwrap();
        let (l0, _) = loss(LossKind::BinaryCrossEntropy, &[0.0], 0).unwrap();
        assert!(l1 < 1e-11 && l0 < 1e-11);
    }

    #[test]
    fn cce_uniform() {
        let third = 1.0 / 3.0;
        let (l, g) = loss(LossKind::CategoricalCrossEntropy, &[third; 3], 2).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-15);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn saturated_prediction_stays_finite() {
        let (l, g) = loss(LossKind::BinaryCrossEntropy, &[0.0], 1).unwrap();
        assert!(l.is_finite() && g[0].is_finite());
    }

    #[test]
    fn bad_labels() {
        assert!(loss(LossKind::BinaryCrossEntropy, &[0.5], 2).is_err());
        assert!(loss(LossKind::CategoricalCrossEntropy, &[0.5, 0.5], 2).is_err());
    }
}
