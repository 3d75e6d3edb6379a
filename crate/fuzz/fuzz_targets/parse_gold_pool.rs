#![no_main]

use csanno::crowd::parse_gold_pool;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_gold_pool(data);
});
