#![no_main]

use csanno::pretag::{clean_text, tokenize, NormalizationTable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let table = NormalizationTable::default();
    let text = clean_text(data, &table).text;
    assert_eq!(clean_text(&text, &table).text, text);
    for t in tokenize(&text) {
        assert_eq!(t.span.slice(&text), Some(t.surface.as_str()));
    }
});
