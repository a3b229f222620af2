use proptest::prelude::*;
use tweetnet::data_eval::{parse_tsv, score, stratified_split, write_tsv, DataRecord, Dataset, LabelSchema, Task};
use tweetnet::numeric::RngStream;

fn dataset(task: Task) -> impl Strategy<Value = Dataset> {
    let n = LabelSchema::for_task(task).len();
    prop::collection::vec(("[^\t\n\r]{0,30}", 0..n), 1..40).prop_map(move |rows| {
        let records = rows
            .into_iter()
            .enumerate()
            .map(|(i, (text, label))| DataRecord {
                id: format!("{}", 1000 + i),
                text,
                label: Some(label),
            })
            .collect();
        Dataset::new(LabelSchema::for_task(task), records).unwrap()
    })
}

fn labels(n: usize, len: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    len.prop_flat_map(move |k| (prop::collection::vec(0..n, k), prop::collection::vec(0..n, k)))
}

proptest! {
    #[test]
    fn tsv_roundtrip(d in prop_oneof![dataset(Task::A), dataset(Task::C)]) {
        let text = write_tsv(&d);
        let back = parse_tsv(&text, "mem", &d.schema, true).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(write_tsv(&back), text);
    }

    #[test]
    fn split_reunion(d in dataset(Task::A), seed in any::<u64>(), fraction in 0.05f64..0.95) {
        let counts = d.class_counts();
        prop_assume!(counts.iter().all(|(_, c)| *c > 0));
        let (train, val) = stratified_split(&d, fraction, &mut RngStream::new(seed, 0)).unwrap();
        let mut all: Vec<DataRecord> = train.records.iter().chain(&val.records).cloned().collect();
        all.sort_by(|a, b| a.id.cmp(&b.id));
        prop_assert_eq!(all, d.records.clone());
        let again = stratified_split(&d, fraction, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(again, (train, val));
    }

    #[test]
    fn macro_f1_bounds((preds, golds) in labels(3, 1..30)) {
        let r = score(&preds, &golds, &LabelSchema::for_task(Task::C)).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.macro_f1));
        let mean = r.per_class.iter().map(|c| c.f1).sum::<f64>() / 3.0;
        prop_assert!((r.macro_f1 - mean).abs() < 1e-12);
        for (row, s) in r.confusion.iter().zip(&r.support) {
            prop_assert_eq!(row.iter().sum::<usize>(), *s);
        }
        if preds == golds {
            prop_assert_eq!(r.accuracy, 1.0);
        }
    }

    #[test]
    fn diagonal_confusion_gives_accuracy(golds in prop::collection::vec(0usize..2, 1..30)) {
        let r = score(&golds, &golds, &LabelSchema::for_task(Task::A)).unwrap();
        if golds.contains(&0) && golds.contains(&1) {
            prop_assert_eq!(r.macro_f1, r.accuracy);
        }
    }
}
