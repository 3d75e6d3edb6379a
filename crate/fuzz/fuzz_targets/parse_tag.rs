#![no_main]

use csanno::tagschema::{parse_tag, TagKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    for kind in [TagKind::Cs, TagKind::Pos, TagKind::Typo] {
        let _ = parse_tag(kind, data);
    }
});
