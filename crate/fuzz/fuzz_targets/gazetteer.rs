#![no_main]

use csanno::pretag::{Gazetteer, NormalizationTable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = Gazetteer::parse(data, None);
    let _ = Gazetteer::parse(data, Some(&NormalizationTable::default()));
});
