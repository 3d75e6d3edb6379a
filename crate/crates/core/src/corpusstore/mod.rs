//! Corpus storage: unit import, annotation versions with provenance,
//! canonical XML export/import, statistics and the append-only event log.

mod corpus;
mod import;
mod log;
mod stats;
mod xml;

pub use corpus::{
    AnnotationVersion, Corpus, CorpusUnit, ProvenanceEntry, Selection, ADJUDICATED, MACHINE_AUTHOR,
};
pub use import::import_units;
pub use log::{EventLog, LogRecord};
pub use stats::{corpus_stats, render_stats, CorpusStats, STATS_HEADER};
pub use xml::{export_xml, import_xml, SCHEMA_VERSION};
