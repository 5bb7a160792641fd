//! Fuzz the binary checkpoint decoder: hostile headers and truncated bodies
//! must fail cleanly, and every accepted input must re-encode to the same
//! bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qball::checkpoint::{read_checkpoint_bytes, write_checkpoint};

fuzz_target!(|data: &[u8]| {
    if let Ok(state) = read_checkpoint_bytes(data) {
        let mut buf = Vec::with_capacity(data.len());
        write_checkpoint(&state, &mut buf).expect("re-encoding a decoded checkpoint");
        assert_eq!(data, buf.as_slice(), "decode/encode round trip changed bytes");
    }
});
