use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::corpus::{Corpus, Selection};
use crate::tagschema::{CsTag, Genre};

/// Size and tag distribution summary of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub name: String,
    pub genres: Vec<Genre>,
    pub dialects: Vec<String>,
    pub tokens: usize,
    /// Distinct token surfaces.
    pub types: usize,
    /// Counts over the selected versions; every tag is present.
    pub distribution: BTreeMap<CsTag, usize>,
}

/// Counts tokens and types over all units, and CS tags over the version
/// chosen by `selection`. Units without a selected version add to the token
/// counts only.
pub fn corpus_stats(corpus: &Corpus, selection: &Selection) -> CorpusStats {
    let mut genres = BTreeSet::new();
    let mut dialects = BTreeSet::new();
    let mut types = HashSet::new();
    let mut distribution: BTreeMap<CsTag, usize> = CsTag::ALL.iter().map(|&t| (t, 0)).collect();
    let mut tokens = 0;
    for cu in &corpus.units {
        genres.insert(cu.unit.genre);
        dialects.insert(cu.unit.dialect.clone());
        tokens += cu.unit.tokens.len();
        types.extend(cu.unit.tokens.iter().map(|t| t.surface.as_str()));
        if let Some(v) = selection.pick(cu) {
            for tag in v.tokens.iter().flatten().filter_map(|a| a.cs) {
                *distribution.get_mut(&tag).expect("all tags present") += 1;
            }
        }
    }
    CorpusStats {
        name: corpus.id.clone(),
        genres: genres.into_iter().collect(),
        dialects: dialects.into_iter().collect(),
        tokens,
        types: types.len(),
        distribution,
    }
}

pub const STATS_HEADER: &str = "Corpus\tGenres\tDialect\tTokens\tTypes\tTag Distributions";

fn report_tag(tag: CsTag) -> &'static str {
    match tag {
        CsTag::Emotion => "Emoticon",
        t => t.as_str(),
    }
}

impl CorpusStats {
    /// One tab-separated row, tags in table order.
    pub fn render_row(&self) -> String {
        let genres: Vec<&str> = self.genres.iter().map(|g| g.report_label()).collect();
        let dist: Vec<String> = CsTag::ALL
            .iter()
            .map(|t| {
                format!(
                    "{}:{}",
                    report_tag(*t),
                    self.distribution.get(t).copied().unwrap_or(0)
                )
            })
            .collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.name,
            genres.join(", "),
            self.dialects.join(", "),
            self.tokens,
            self.types,
            dist.join(", ")
        )
    }
}

pub fn render_stats(rows: &[CorpusStats]) -> String {
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.render_row());
        out.push('\n');
    }
    out
}
