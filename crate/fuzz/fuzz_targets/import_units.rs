#![no_main]

use csanno::corpusstore::import_units;
use csanno::pretag::NormalizationTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = import_units(data, &NormalizationTable::default());
});
