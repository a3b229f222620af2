use std::collections::HashSet;

use crate::data_eval::LabelSchema;
use crate::error::{Error, Result};

/// One row of a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub label: usize,
    /// `[P(positive)]` for binary schemas, one value per class otherwise.
    pub probs: Vec<f64>,
}

pub fn prediction_header(schema: &LabelSchema) -> String {
    if schema.len() == 2 {
        "id\tpredicted_label\tprobability".to_string()
    } else {
        let cols: Vec<String> = schema.labels().iter().map(|l| format!("p_{l}")).collect();
        format!("id\tpredicted_label\t{}", cols.join("\t"))
    }
}

pub fn write_predictions(rows: &[Prediction], schema: &LabelSchema) -> String {
    let mut s = prediction_header(schema);
    s.push('\n');
    for r in rows {
        s.push_str(&r.id);
        s.push('\t');
        s.push_str(schema.label(r.label).unwrap_or("?"));
        for p in &r.probs {
            s.push('\t');
            s.push_str(&p.to_string());
        }
        s.push('\n');
    }
    s
}

pub fn parse_predictions(text: &str, source_name: &str, schema: &LabelSchema) -> Result<Vec<Prediction>> {
    let mut lines = text.lines().enumerate();
    let header = prediction_header(schema);
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == header => {}
        Some((_, h)) => {
            return Err(Error::parse(source_name, 1, format!("expected header {header:?}, found {h:?}")));
        }
        None => return Err(Error::parse(source_name, 1, "empty prediction file")),
    }
    let width = if schema.len() == 2 { 3 } else { 2 + schema.len() };
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != width {
            return Err(Error::parse(source_name, ln, format!("expected {width} fields, found {}", f.len())));
        }
        if f[0].is_empty() || !seen.insert(f[0]) {
            return Err(Error::parse(source_name, ln, format!("empty or duplicate id {:?}", f[0])));
        }
        let label = schema
            .index(f[1])
            .ok_or_else(|| Error::parse(source_name, ln, format!("label {:?} not in schema", f[1])))?;
        let probs = f[2..]
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| Error::parse(source_name, ln, format!("invalid probability {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(Prediction {
            id: f[0].to_string(),
            label,
            probs,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_eval::Task;

    #[test]
    fn roundtrip_both_widths() {
        for task in [Task::A, Task::C] {
            let schema = LabelSchema::for_task(task);
            let probs = if task == Task::A { vec![0.75] } else { vec![0.2, 0.3, 0.5] };
            let rows = vec![Prediction { id: "7".into(), label: 1, probs }];
            let text = write_predictions(&rows, &schema);
            assert_eq!(parse_predictions(&text, "p", &schema).unwrap(), rows);
        }
    }

    #[test]
    fn wrong_header() {
        let schema = LabelSchema::for_task(Task::A);
        assert!(parse_predictions("id\tlabel\n", "p", &schema).is_err());
    }
}
