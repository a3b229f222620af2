use std::fmt::Write as _;

use serde::Serialize;

use crate::data_eval::LabelSchema;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub labels: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// `confusion[gold][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub support: Vec<usize>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion counts for class indices below `n_classes`.
pub fn confusion_matrix(preds: &[usize], golds: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    if preds.len() != golds.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    let mut m = vec![vec![0; n_classes]; n_classes];
    for (&p, &g) in preds.iter().zip(golds) {
        if p >= n_classes || g >= n_classes {
            return Err(Error::Data(format!("class index {} outside {n_classes} classes", p.max(g))));
        }
        m[g][p] += 1;
    }
    Ok(m)
}

fn report_from_confusion(labels: &[String], confusion: Vec<Vec<usize>>) -> MetricsReport {
    let n = labels.len();
    let support: Vec<usize> = confusion.iter().map(|row| row.iter().sum()).collect();
    let total: usize = support.iter().sum();
    let mut per_class = Vec::with_capacity(n);
    for (c, label) in labels.iter().enumerate() {
        let tp = confusion[c][c];
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support[c]);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            label: label.clone(),
            precision,
            recall,
            f1,
            support: support[c],
        });
    }
    let correct: usize = (0..n).map(|c| confusion[c][c]).sum();
    MetricsReport {
        labels: labels.to_vec(),
        macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n as f64,
        per_class,
        accuracy: ratio(correct, total),
        confusion,
        support,
    }
}

/// Scores class indices against `schema`. Every schema class counts toward
/// macro-F1, including ones with no support.
pub fn score(preds: &[usize], golds: &[usize], schema: &LabelSchema) -> Result<MetricsReport> {
    let confusion = confusion_matrix(preds, golds, schema.len())?;
    Ok(report_from_confusion(schema.labels(), confusion))
}

/// [`score`] over label strings.
pub fn score_labels<S: AsRef<str>>(preds: &[S], golds: &[S], schema: &LabelSchema) -> Result<MetricsReport> {
    let to_idx = |xs: &[S]| -> Result<Vec<usize>> {
        xs.iter()
            .map(|x| {
                schema
                    .index(x.as_ref())
                    .ok_or_else(|| Error::Data(format!("label {:?} not in schema", x.as_ref())))
            })
            .collect()
    };
    score(&to_idx(preds)?, &to_idx(golds)?, schema)
}

/// Macro-F1 over `n_classes` classes.
pub fn macro_f1(preds: &[usize], golds: &[usize], n_classes: usize) -> Result<f64> {
    let labels: Vec<String> = (0..n_classes).map(|c| c.to_string()).collect();
    Ok(report_from_confusion(&labels, confusion_matrix(preds, golds, n_classes)?).macro_f1)
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "support");
        for m in &self.per_class {
            let _ = writeln!(
                s,
                "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                m.label, m.precision, m.recall, m.f1, m.support
            );
        }
        let _ = writeln!(s, "\nmacro_f1 {:.4}\naccuracy {:.4}\n\nconfusion (rows gold, columns predicted)", self.macro_f1, self.accuracy);
        let _ = writeln!(s, "{:<8} {}", "", self.labels.iter().map(|l| format!("{l:>6}")).collect::<String>());
        for (label, row) in self.labels.iter().zip(&self.confusion) {
            let _ = writeln!(s, "{label:<8} {}", row.iter().map(|c| format!("{c:>6}")).collect::<String>());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case() {
        let schema = LabelSchema::custom(&["A", "B"]).unwrap();
        let r = score_labels(&["A", "A", "A", "A"], &["A", "A", "B", "B"], &schema).unwrap();
        assert!((r.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_class[1].f1, 0.0);
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.confusion, [[2, 0], [2, 0]]);
    }

    #[test]
    fn perfect() {
        let schema = LabelSchema::custom(&["x", "y", "z"]).unwrap();
        let r = score(&[0, 1, 2, 2], &[0, 1, 2, 2], &schema).unwrap();
        assert_eq!(r.accuracy, 1.0);
        // a class with no support scores 0, so perfection needs every class present
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn errors() {
        let schema = LabelSchema::custom(&["A", "B"]).unwrap();
        assert!(score(&[0], &[0, 1], &schema).is_err());
        assert!(score_labels(&["C"], &["A"], &schema).is_err());
    }

    #[test]
    fn json_keys() {
        let schema = LabelSchema::custom(&["A", "B"]).unwrap();
        let r = score(&[0, 1], &[0, 0], &schema).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["per_class", "macro_f1", "accuracy", "confusion", "support"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(r.to_text().contains("macro_f1 0.3333"));
    }
}
