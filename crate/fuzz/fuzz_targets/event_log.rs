#![no_main]

use csanno::corpusstore::EventLog;
use csanno::platform::{Event, Platform};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(records) = EventLog::<Event>::parse(data) {
        let mut p = Platform::default();
        for r in records {
            let _ = p.apply(&r.event, r.at);
        }
    }
});
