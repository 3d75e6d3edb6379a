use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::normalize::{clean_text, NormalizationTable};
use super::tokenize::{is_emoji, is_emoticon, is_punct, is_url_or_email};
use crate::error::{Error, Result};
use crate::tagschema::{CsTag, Origin, TokenAnnotation, Unit};

/// Named-entity surface forms, matched exactly against cleaned tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    entries: BTreeSet<String>,
}

impl Gazetteer {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for e in entries {
            let e = e.into();
            if e.is_empty() {
                return Err(Error::Config("gazetteer entries must be non-empty".into()));
            }
            set.insert(e);
        }
        Ok(Gazetteer { entries: set })
    }

    /// One entry per line. Blank lines are skipped; entries are cleaned with
    /// `table` when given so they compare against cleaned tokens.
    pub fn parse(input: &str, table: Option<&NormalizationTable>) -> Self {
        let entries = input
            .lines()
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .map(|l| match table {
                Some(t) => clean_text(l, t).text,
                None => l.trim().to_string(),
            })
            .filter(|l| !l.is_empty())
            .collect();
        Gazetteer { entries }
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.entries.contains(surface)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Whole-token repetition heuristic for sound words ("hahaha", "ههههه").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundRule {
    pub min_repeats: usize,
    pub max_unit_len: usize,
}

impl Default for SoundRule {
    fn default() -> Self {
        SoundRule {
            min_repeats: 3,
            max_unit_len: 2,
        }
    }
}

impl SoundRule {
    pub fn matches(&self, surface: &str) -> bool {
        let chars: Vec<char> = surface.chars().flat_map(char::to_lowercase).collect();
        if chars.is_empty() || !chars.iter().all(|c| c.is_alphabetic()) {
            return false;
        }
        (1..=self.max_unit_len).any(|unit| {
            chars.len().is_multiple_of(unit)
                && chars.len() / unit >= self.min_repeats
                && chars.chunks(unit).all(|c| c == &chars[..unit])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PretagResult {
    pub unit: Unit,
    pub annotations: Vec<Option<TokenAnnotation>>,
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[0-9٠-٩۰-۹]+(?:[.,٫٬/:\-][0-9٠-٩۰-۹]+)*$").unwrap())
}

fn is_arabic_diacritic(c: char) -> bool {
    matches!(c as u32, 0x064B..=0x065F | 0x0670)
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic() || (matches!(c as u32, 0x00C0..=0x024F) && c.is_alphabetic())
}

/// Rule cascade for confidently machine-taggable tokens.
#[derive(Debug, Clone, Default)]
pub struct AutoTagger {
    pub gazetteer: Gazetteer,
    pub sound: SoundRule,
}

impl AutoTagger {
    pub fn new(gazetteer: Gazetteer) -> Self {
        AutoTagger {
            gazetteer,
            sound: SoundRule::default(),
        }
    }

    /// First matching rule wins.
    pub fn classify(&self, surface: &str) -> Option<CsTag> {
        let all = |f: fn(char) -> bool| !surface.is_empty() && surface.chars().all(f);
        if is_url_or_email(surface) {
            Some(CsTag::Url)
        } else if is_emoticon(surface) {
            // listed emoticons are made of punctuation, so they go first
            Some(CsTag::Emotion)
        } else if all(is_punct) {
            Some(CsTag::Punctuation)
        } else if number_regex().is_match(surface) {
            Some(CsTag::Number)
        } else if all(is_arabic_diacritic) {
            Some(CsTag::Diacritics)
        } else if all(is_emoji) && surface.chars().any(|c| c != '\u{200D}' && c != '\u{FE0F}') {
            Some(CsTag::Emotion)
        } else if self.sound.matches(surface) {
            Some(CsTag::Sound)
        } else if all(is_latin_letter) {
            Some(CsTag::Latin)
        } else if self.gazetteer.contains(surface) {
            Some(CsTag::Ne)
        } else {
            None
        }
    }

    pub fn auto_tag(&self, unit: &Unit) -> PretagResult {
        let annotations = unit
            .tokens
            .iter()
            .map(|t| self.classify(&t.surface).map(TokenAnnotation::machine))
            .collect();
        PretagResult {
            unit: unit.clone(),
            annotations,
        }
    }
}

pub fn auto_tag(unit: &Unit, gazetteer: &Gazetteer) -> PretagResult {
    AutoTagger::new(gazetteer.clone()).auto_tag(unit)
}

/// Lays machine tags over `existing` without touching human annotations.
pub fn merge_pretags(
    existing: &mut [Option<TokenAnnotation>],
    machine: &[Option<TokenAnnotation>],
) {
    for (slot, m) in existing.iter_mut().zip(machine) {
        let human = slot.as_ref().is_some_and(|a| a.origin == Origin::Human);
        if !human && m.is_some() {
            *slot = m.clone();
        }
    }
}
