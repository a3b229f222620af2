#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::optim::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = Checkpoint::from_bytes(data) {
        assert_eq!(ckpt.to_bytes().unwrap(), data);
    }
});
