#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::data_eval::{parse_tsv, write_tsv, LabelSchema, Task};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for task in [Task::A, Task::C] {
        let schema = LabelSchema::for_task(task);
        for labeled in [true, false] {
            if let Ok(d) = parse_tsv(text, "fuzz", &schema, labeled) {
                let again = parse_tsv(&write_tsv(&d), "fuzz", &schema, labeled).unwrap();
                assert_eq!(again, d);
            }
        }
    }
});
