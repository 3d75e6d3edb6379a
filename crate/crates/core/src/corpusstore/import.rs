use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::pretag::{build_unit, NormalizationTable};
use crate::tagschema::{Genre, Unit};

/// Reads `id<TAB>genre<TAB>dialect<TAB>text` records, one per line, and
/// cleans and tokenizes each text. Blank lines are skipped.
pub fn import_units(input: &str, table: &NormalizationTable) -> Result<Vec<Unit>> {
    let mut seen = HashSet::new();
    let mut units = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedLine {
            line: line_no,
            reason,
        };
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        let [id, genre, dialect, text] = cols[..] else {
            return Err(bad(format!(
                "expected 4 tab-separated fields, got {}",
                cols.len()
            )));
        };
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(bad(
                "unit id must be non-empty and contain no whitespace".into()
            ));
        }
        let genre: Genre = genre.parse().map_err(|e: Error| bad(e.to_string()))?;
        if dialect.is_empty() {
            return Err(bad("empty dialect".into()));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                line: line_no,
                id: id.to_string(),
            });
        }
        units.push(build_unit(id, genre, dialect, text, table));
    }
    Ok(units)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_lines() {
        let src = "u1\ttweet\tEGY\tمرحبا .\nu2\tcommentary\tEGY\tمش خيال\nu3\tdiscussion-forum\tEGY\tsee http://t.co/x\n";
        let units = import_units(src, &NormalizationTable::default()).unwrap();
        assert_eq!(units.len(), 3);
        assert_eq!(units[0].tokens.len(), 2);
        assert_eq!(units[0].genre, Genre::Tweet);
        assert_eq!(units[0].dialect, "EGY");
        assert!(units.iter().all(|u| u.check_tokens().is_ok()));
    }

    #[test]
    fn duplicate_id_cites_line() {
        let src = "u1\ttweet\tEGY\ta\nu1\ttweet\tEGY\tb\n";
        let err = import_units(src, &NormalizationTable::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { line: 2, ref id } if id == "u1"));
    }

    #[test]
    fn malformed_lines() {
        let t = NormalizationTable::default();
        assert!(matches!(
            import_units("u1\ttweet\tEGY\n", &t),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            import_units("\nu1\tblog\tEGY\tx\n", &t),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            import_units("\ttweet\tEGY\tx\n", &t),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn text_may_contain_tabs() {
        let units = import_units("u1\ttweet\tEGY\ta\tb\n", &NormalizationTable::default()).unwrap();
        assert_eq!(units[0].text, "a b");
    }
}
