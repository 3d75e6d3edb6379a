#![no_main]

use csanno::corpusstore::{export_xml, import_xml, Selection};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // anything that imports must export again and re-import to the same bytes
    if let Ok(corpus) = import_xml(data) {
        if let Ok(out) = export_xml(&corpus, &Selection::LeadAccepted) {
            let again = import_xml(&out).expect("exported XML re-imports");
            assert_eq!(export_xml(&again, &Selection::LeadAccepted).unwrap(), out);
        }
    }
});
