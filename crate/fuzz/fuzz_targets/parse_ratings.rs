#![no_main]

use csanno::agreement::{overlap_from_ratings, parse_ratings};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // split into two annotators on the first form feed
    let (a, b) = data.split_once('\x0c').unwrap_or((data, ""));
    if let (Ok(a), Ok(b)) = (parse_ratings(a), parse_ratings(b)) {
        let _ = overlap_from_ratings(&[("a".into(), a), ("b".into(), b)]);
    }
});
