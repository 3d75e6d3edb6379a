#![no_main]

use csanno::platform::Settings;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(s) = Settings::parse(data) {
        let _ = (s.qc(), s.crowd());
    }
});
