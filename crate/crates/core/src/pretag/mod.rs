//! Deterministic preprocessing: cleaning, tokenization, Buckwalter
//! transliteration and rule-based tagging of high-confidence categories.

mod autotag;
mod buckwalter;
mod normalize;
mod tokenize;

pub use autotag::{auto_tag, merge_pretags, AutoTagger, Gazetteer, PretagResult, SoundRule};
pub use buckwalter::{
    bw_decode, bw_encode, is_mapped_arabic, Transliteration, TABLE as BUCKWALTER_TABLE,
};
pub use normalize::{clean_text, Cleaned, NormalizationOptions, NormalizationTable};
pub use tokenize::{tokenize, EMOTICONS_V1};

use crate::tagschema::{Genre, Unit};

/// Cleans and tokenizes one raw record into a unit.
pub fn build_unit(
    id: &str,
    genre: Genre,
    dialect: &str,
    raw: &str,
    table: &NormalizationTable,
) -> Unit {
    let text = clean_text(raw, table).text;
    let tokens = tokenize(&text);
    Unit {
        id: id.to_string(),
        genre,
        dialect: dialect.to_string(),
        text,
        tokens,
    }
}
