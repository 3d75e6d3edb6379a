#![no_main]

use csanno::pretag::{bw_decode, bw_encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let decoded = bw_decode(data);
    let _ = bw_encode(&decoded.text);
});
