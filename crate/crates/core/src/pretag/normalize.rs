use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationOptions {
    pub fold_presentation_forms: bool,
    pub strip_control: bool,
    pub unify_whitespace: bool,
}

impl Default for NormalizationOptions {
    fn default() -> Self {
        NormalizationOptions {
            fold_presentation_forms: true,
            strip_control: true,
            unify_whitespace: true,
        }
    }
}

/// Character replacement table plus the option passes run after it.
///
/// No replacement may contain a mapped character, which keeps a single pass
/// idempotent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizationTable {
    mapping: BTreeMap<char, String>,
    pub options: NormalizationOptions,
}

impl NormalizationTable {
    pub fn new(
        mapping: impl IntoIterator<Item = (char, String)>,
        options: NormalizationOptions,
    ) -> Result<Self> {
        let mut table = NormalizationTable {
            mapping: BTreeMap::new(),
            options,
        };
        for (from, to) in mapping {
            table.insert(from, to)?;
        }
        table.check_closed()?;
        Ok(table)
    }

    fn insert(&mut self, from: char, to: String) -> Result<()> {
        if self.mapping.insert(from, to).is_some() {
            return Err(Error::Config(format!(
                "duplicate mapping for U+{:04X}",
                from as u32
            )));
        }
        Ok(())
    }

    fn check_closed(&self) -> Result<()> {
        for (from, to) in &self.mapping {
            if let Some(c) = to.chars().find(|c| self.mapping.contains_key(c)) {
                return Err(Error::Config(format!(
                    "replacement for U+{:04X} contains mapped character U+{:04X}",
                    *from as u32, c as u32
                )));
            }
        }
        Ok(())
    }

    pub fn mapping(&self) -> &BTreeMap<char, String> {
        &self.mapping
    }

    /// Parses the two-column table format.
    ///
    /// Each data line is `char<TAB>replacement`, where either column may use
    /// `U+XXXX` escapes (space separated for multi-character replacements).
    /// An empty replacement deletes the character. Lines starting with `#` are
    /// comments; `%option<TAB>name<TAB>true|false` sets an option.
    pub fn parse(input: &str) -> Result<Self> {
        let mut table = NormalizationTable::default();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let malformed = |reason: &str| Error::MalformedLine {
                line: line_no,
                reason: reason.to_string(),
            };
            if cols[0] == "%option" {
                if cols.len() != 3 {
                    return Err(malformed("option lines need a name and a value"));
                }
                let value = match cols[2] {
                    "true" => true,
                    "false" => false,
                    _ => return Err(malformed("option value must be true or false")),
                };
                match cols[1] {
                    "fold-presentation-forms" => table.options.fold_presentation_forms = value,
                    "strip-control" => table.options.strip_control = value,
                    "unify-whitespace" => table.options.unify_whitespace = value,
                    _ => return Err(malformed("unknown option")),
                }
                continue;
            }
            if cols.len() != 2 {
                return Err(malformed("expected two tab-separated columns"));
            }
            let from = decode_column(cols[0]).ok_or_else(|| malformed("bad source column"))?;
            let mut chars = from.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(malformed("source column must be a single character"));
            };
            let to = decode_column(cols[1]).ok_or_else(|| malformed("bad replacement column"))?;
            table.insert(c, to).map_err(|e| malformed(&e.to_string()))?;
        }
        table.check_closed()?;
        Ok(table)
    }
}

fn decode_column(col: &str) -> Option<String> {
    if col.starts_with("U+") {
        col.split(' ')
            .map(|part| {
                let hex = part.strip_prefix("U+")?;
                char::from_u32(u32::from_str_radix(hex, 16).ok()?)
            })
            .collect()
    } else {
        Some(col.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cleaned {
    pub text: String,
    /// Characters that passed through untouched but look suspect
    /// (private use, replacement character, noncharacters).
    pub warnings: usize,
}

fn is_presentation_form(c: char) -> bool {
    matches!(c as u32, 0xFB50..=0xFDFF | 0xFE70..=0xFEFF)
}

fn is_suspect(c: char) -> bool {
    let cp = c as u32;
    matches!(cp, 0xE000..=0xF8FF | 0xF0000..=0x10FFFF | 0xFFFD | 0xFDD0..=0xFDEF)
        || (cp & 0xFFFE) == 0xFFFE
}

fn single_pass(raw: &str, table: &NormalizationTable) -> String {
    let opts = table.options;
    let composed: String = raw.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for c in composed.chars() {
        if opts.fold_presentation_forms && is_presentation_form(c) && c != '\u{FEFF}' {
            out.extend(std::iter::once(c).nfkc());
        } else {
            out.push(c);
        }
    }
    let mut mapped = String::with_capacity(out.len());
    for c in out.chars() {
        match table.mapping.get(&c) {
            Some(rep) => mapped.push_str(rep),
            None => mapped.push(c),
        }
    }
    if opts.strip_control {
        mapped.retain(|c| !(c.is_control() && !c.is_whitespace()) && c != '\u{FEFF}');
    }
    if opts.unify_whitespace {
        mapped = mapped.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    mapped.nfc().collect()
}

/// Cleans raw text: canonical composition, presentation-form folding, the
/// table mapping, then control stripping and whitespace unification.
pub fn clean_text(raw: &str, table: &NormalizationTable) -> Cleaned {
    let mut text = single_pass(raw, table);
    // Composition can expose new mapped sequences; settle to a fixpoint.
    for _ in 0..4 {
        let next = single_pass(&text, table);
        if next == text {
            break;
        }
        text = next;
    }
    let warnings = text.chars().filter(|c| is_suspect(*c)).count();
    Cleaned { text, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lam_alef_ligature_is_folded() {
        let t = NormalizationTable::default();
        assert_eq!(clean_text("\u{FEFB}", &t).text, "\u{0644}\u{0627}");
        assert_eq!(clean_text("ﻻ", &t).text, "لا");
    }

    #[test]
    fn plain_ascii_is_identity() {
        assert_eq!(
            clean_text("abc", &NormalizationTable::default()).text,
            "abc"
        );
    }

    #[test]
    fn controls_are_stripped() {
        assert_eq!(
            clean_text("a\u{0000}b", &NormalizationTable::default()).text,
            "ab"
        );
        let keep = NormalizationTable::new(
            [],
            NormalizationOptions {
                strip_control: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(clean_text("a\u{0000}b", &keep).text, "a\u{0000}b");
    }

    #[test]
    fn suspect_characters_are_counted() {
        let c = clean_text("a\u{E000}b\u{FFFD}", &NormalizationTable::default());
        assert_eq!(c.text, "a\u{E000}b\u{FFFD}");
        assert_eq!(c.warnings, 2);
    }

    #[test]
    fn mapping_applies() {
        let t = NormalizationTable::new(
            [('\u{0640}', String::new()), ('ی', "ي".into())],
            Default::default(),
        )
        .unwrap();
        assert_eq!(clean_text("كـتـاب ی", &t).text, "كتاب ي");
    }

    #[test]
    fn table_file_parsing() {
        let src = "# comment\nU+0640\t\nی\tي\n%option\tunify-whitespace\tfalse\n";
        let t = NormalizationTable::parse(src).unwrap();
        assert_eq!(t.mapping().len(), 2);
        assert_eq!(t.mapping()[&'\u{0640}'], "");
        assert!(!t.options.unify_whitespace);
    }

    #[test]
    fn table_rejects_duplicates_and_chains() {
        let err = NormalizationTable::parse("a\tb\na\tc\n").unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 2, .. }));
        assert!(NormalizationTable::parse("a\tb\nb\tc\n").is_err());
        assert!(matches!(
            NormalizationTable::parse("ab\tc\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }
}
