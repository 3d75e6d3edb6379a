#![no_main]

use csanno::pretag::{clean_text, NormalizationTable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(table) = NormalizationTable::parse(data) {
        let _ = clean_text("ولكن مش خيال :) 2014", &table);
    }
});
