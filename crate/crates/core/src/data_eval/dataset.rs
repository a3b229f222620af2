use std::collections::HashSet;
use std::path::Path;

use crate::data_eval::LabelSchema;
use crate::error::{Error, Result};
use crate::numeric::RngStream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataRecord {
    pub id: String,
    pub text: String,
    /// Index into the dataset's schema; `None` for unlabeled input.
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub schema: LabelSchema,
    pub records: Vec<DataRecord>,
}

impl Dataset {
    pub fn new(schema: LabelSchema, records: Vec<DataRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Data(format!("duplicate id {:?}", r.id)));
            }
            if r.label.is_some_and(|l| l >= schema.len()) {
                return Err(Error::Data(format!("record {:?} has a label outside the schema", r.id)));
            }
            if r.id.is_empty() || r.id.contains(['\t', '\n', '\r']) || r.text.contains(['\t', '\n', '\r']) {
                return Err(Error::Data(format!("record {:?} contains a tab or line break", r.id)));
            }
        }
        Ok(Dataset { schema, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.records.iter().all(|r| r.label.is_some())
    }

    /// Per-class record counts in schema order.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0; self.schema.len()];
        for r in &self.records {
            if let Some(l) = r.label {
                counts[l] += 1;
            }
        }
        self.schema.labels().iter().cloned().zip(counts).collect()
    }

    pub fn labels(&self) -> Result<Vec<usize>> {
        self.records
            .iter()
            .map(|r| r.label.ok_or_else(|| Error::Data(format!("record {:?} is unlabeled", r.id))))
            .collect()
    }
}

/// Parses tab-separated `id, text[, label]` lines. A first line whose first
/// field is `id` is taken as a header and skipped; empty lines are ignored.
pub fn parse_tsv(text: &str, source_name: &str, schema: &LabelSchema, labeled: bool) -> Result<Dataset> {
    let expected = if labeled { 3 } else { 2 };
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.split('\n').enumerate() {
        let ln = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() || (i == 0 && line.split('\t').next() == Some("id")) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != expected {
            return Err(Error::parse(
                source_name,
                ln,
                format!("expected {expected} tab-separated fields, found {}", fields.len()),
            ));
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(Error::parse(source_name, ln, "empty id"));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(source_name, ln, format!("duplicate id {id:?}")));
        }
        let label = if labeled {
            let raw = fields[2];
            Some(schema.index(raw).ok_or_else(|| {
                Error::parse(
                    source_name,
                    ln,
                    format!("label {:?} not in schema {:?}", raw.trim(), schema.labels()),
                )
            })?)
        } else {
            None
        };
        records.push(DataRecord {
            id: id.to_string(),
            text: fields[1].to_string(),
            label,
        });
    }
    Ok(Dataset {
        schema: schema.clone(),
        records,
    })
}

pub fn load_tsv(path: &Path, schema: &LabelSchema, labeled: bool) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ds = parse_tsv(&text, &path.display().to_string(), schema, labeled)?;
    if labeled {
        let counts: Vec<String> = ds.class_counts().iter().map(|(l, c)| format!("{l}:{c}")).collect();
        log::info!("{}: {} records ({})", path.display(), ds.len(), counts.join(", "));
    }
    Ok(ds)
}

/// Number of tab-separated fields on the first data line, if any.
pub fn sniff_field_count(text: &str) -> Option<usize> {
    text.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .find(|(i, l)| !l.is_empty() && !(*i == 0 && l.split('\t').next() == Some("id")))
        .map(|(_, l)| l.split('\t').count())
}

/// Serializes with an `id, tweet[, label]` header line.
pub fn write_tsv(dataset: &Dataset) -> String {
    let labeled = dataset.is_labeled() && !dataset.is_empty();
    let mut out = String::from(if labeled { "id\ttweet\tlabel\n" } else { "id\ttweet\n" });
    for r in &dataset.records {
        out.push_str(&r.id);
        out.push('\t');
        out.push_str(&r.text);
        if let (true, Some(l)) = (labeled, r.label) {
            out.push('\t');
            out.push_str(dataset.schema.label(l).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}

/// Per-class validation counts: `round(count × fraction)` for each class.
pub fn stratified_counts(counts: &[usize], val_fraction: f64) -> Vec<usize> {
    counts
        .iter()
        .map(|&c| ((c as f64 * val_fraction).round() as usize).min(c))
        .collect()
}

/// Splits a labeled dataset class by class; both halves keep file order.
pub fn stratified_split(dataset: &Dataset, val_fraction: f64, rng: &mut RngStream) -> Result<(Dataset, Dataset)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::invalid(format!("validation fraction must lie in (0, 1), got {val_fraction}")));
    }
    let labels = dataset.labels()?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.schema.len()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::Data(format!(
            "class {} has no records to split",
            dataset.schema.label(empty).unwrap_or("?")
        )));
    }
    let targets = stratified_counts(&by_class.iter().map(Vec::len).collect::<Vec<_>>(), val_fraction);
    let mut in_val = vec![false; dataset.len()];
    for (members, k) in by_class.iter_mut().zip(targets) {
        rng.shuffle(members);
        for &i in &members[..k] {
            in_val[i] = true;
        }
    }
    let pick = |want: bool| Dataset {
        schema: dataset.schema.clone(),
        records: dataset
            .records
            .iter()
            .zip(&in_val)
            .filter(|(_, &v)| v == want)
            .map(|(r, _)| r.clone())
            .collect(),
    };
    Ok((pick(false), pick(true)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_eval::Task;

    fn schema_a() -> LabelSchema {
        LabelSchema::for_task(Task::A)
    }

    #[test]
    fn danish_row() {
        let ds = parse_tsv("1713\tHaha, det er genialt!\tNOT\n", "t", &schema_a(), true).unwrap();
        assert_eq!(ds.records[0].id, "1713");
        assert_eq!(ds.records[0].label, Some(0));
    }

    #[test]
    fn lowercase_label_rejected() {
        let err = parse_tsv("id\ttweet\tlabel\n1\tx\toff\n", "f.tsv", &schema_a(), true).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("f.tsv:2:") && msg.contains("\"off\""), "{msg}");
    }

    #[test]
    fn field_count_and_duplicates() {
        assert!(parse_tsv("1\tx\n", "f", &schema_a(), true).is_err());
        assert!(parse_tsv("1\tx\tNOT\n1\ty\tOFF\n", "f", &schema_a(), true).is_err());
        assert!(parse_tsv("1\tx\n2\ty\n", "f", &schema_a(), false).is_ok());
    }

    #[test]
    fn class_counts_reported() {
        let mut text = String::new();
        for i in 0..2000 {
            text.push_str(&format!("{i}\tt\t{}\n", if i < 402 { "OFF" } else { "NOT" }));
        }
        let ds = parse_tsv(&text, "f", &schema_a(), true).unwrap();
        assert_eq!(ds.class_counts(), [("NOT".to_string(), 1598), ("OFF".to_string(), 402)]);
    }

    #[test]
    fn tsv_roundtrip() {
        let ds = parse_tsv("a\tone two\tOFF\nb\t\tNOT\n", "f", &schema_a(), true).unwrap();
        assert_eq!(parse_tsv(&write_tsv(&ds), "g", &schema_a(), true).unwrap(), ds);
    }

    #[test]
    fn proportional_counts() {
        assert_eq!(stratified_counts(&[30, 70], 0.2), [6, 14]);
        assert_eq!(stratified_counts(&[398, 2568], 0.2), [80, 514]);
    }

    #[test]
    fn split_is_exhaustive_and_seeded() {
        let mut text = String::new();
        for i in 0..100 {
            text.push_str(&format!("{i}\tt{i}\t{}\n", if i % 10 < 3 { "OFF" } else { "NOT" }));
        }
        let ds = parse_tsv(&text, "f", &schema_a(), true).unwrap();
        let (train, val) = stratified_split(&ds, 0.2, &mut RngStream::new(4, 0)).unwrap();
        assert_eq!(val.class_counts(), [("NOT".to_string(), 14), ("OFF".to_string(), 6)]);
        assert_eq!(train.len() + val.len(), 100);
        let again = stratified_split(&ds, 0.2, &mut RngStream::new(4, 0)).unwrap();
        assert_eq!(again.1, val);
        let only_not = parse_tsv("1\tx\tNOT\n", "f", &schema_a(), true).unwrap();
        assert!(stratified_split(&only_not, 0.2, &mut RngStream::new(0, 0)).is_err());
    }
}
