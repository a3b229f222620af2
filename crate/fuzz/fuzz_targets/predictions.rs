#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::cli::{parse_predictions, write_predictions};
use tweetnet::data_eval::{LabelSchema, Task};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for task in [Task::A, Task::C] {
        let schema = LabelSchema::for_task(task);
        if let Ok(rows) = parse_predictions(text, "fuzz", &schema) {
            let again = parse_predictions(&write_predictions(&rows, &schema), "fuzz", &schema).unwrap();
            assert_eq!(again, rows);
        }
    }
});
