//! Inter-annotator agreement: observed agreement, Fleiss' kappa, per-tag
//! positive specific agreement and disagreement listings.
//!
//! All scores are computed on an [`AgreementMatrix`], an items × categories
//! grid of rating counts with a constant number of raters per item. Scores
//! that cannot be computed are reported as `None` instead of a fabricated
//! number.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagschema::CsTag;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementMatrix {
    raters: usize,
    categories: usize,
    counts: Vec<u32>,
}

impl AgreementMatrix {
    /// Builds a matrix from per-item count rows. Every row must have
    /// `categories` cells summing to `raters`.
    pub fn new(raters: usize, categories: usize, rows: &[Vec<u32>]) -> Result<Self> {
        if raters < 2 {
            return Err(Error::InvalidMatrix(
                "need at least 2 raters per item".into(),
            ));
        }
        if categories == 0 {
            return Err(Error::InvalidMatrix("need at least 1 category".into()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidMatrix("need at least 1 item".into()));
        }
        let mut counts = Vec::with_capacity(rows.len() * categories);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != categories {
                return Err(Error::InvalidMatrix(format!(
                    "item {i} has {} cells, expected {categories}",
                    row.len()
                )));
            }
            let sum: u64 = row.iter().map(|&c| u64::from(c)).sum();
            if sum != raters as u64 {
                return Err(Error::InvalidMatrix(format!(
                    "item {i} sums to {sum}, expected {raters}"
                )));
            }
            counts.extend_from_slice(row);
        }
        Ok(AgreementMatrix {
            raters,
            categories,
            counts,
        })
    }

    /// Builds a matrix from raw labels, one `Vec` of rater labels per item.
    pub fn from_labels<C: PartialEq>(items: &[Vec<C>], categories: &[C]) -> Result<Self> {
        let raters = items.first().map_or(0, Vec::len);
        let mut rows = Vec::with_capacity(items.len());
        for (i, labels) in items.iter().enumerate() {
            if labels.len() != raters {
                return Err(Error::InvalidMatrix(format!(
                    "item {i} has {} ratings, expected {raters}",
                    labels.len()
                )));
            }
            let mut row = vec![0u32; categories.len()];
            for l in labels {
                let j = categories.iter().position(|c| c == l).ok_or_else(|| {
                    Error::InvalidMatrix(format!("item {i} uses an unknown category"))
                })?;
                row[j] += 1;
            }
            rows.push(row);
        }
        Self::new(raters, categories.len(), &rows)
    }

    pub fn items(&self) -> usize {
        self.counts.len() / self.categories
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn row(&self, item: usize) -> &[u32] {
        &self.counts[item * self.categories..(item + 1) * self.categories]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks(self.categories)
    }

    /// Collapses to two columns: `category` vs everything else.
    pub fn binarize(&self, category: usize) -> AgreementMatrix {
        let n = self.raters as u32;
        let counts = self
            .rows()
            .flat_map(|r| [r[category], n - r[category]])
            .collect();
        AgreementMatrix {
            raters: self.raters,
            categories: 2,
            counts,
        }
    }

    fn pair_agreement(&self, row: &[u32]) -> f64 {
        let n = self.raters as f64;
        let agree: f64 = row
            .iter()
            .map(|&c| f64::from(c) * (f64::from(c) - 1.0))
            .sum();
        agree / (n * (n - 1.0))
    }
}

/// Mean over items of the fraction of agreeing rater pairs.
pub fn observed_agreement(m: &AgreementMatrix) -> f64 {
    let total: f64 = m.rows().map(|r| m.pair_agreement(r)).sum();
    total / m.items() as f64
}

/// Fleiss' kappa. When all ratings fall in one category the chance term is 1;
/// that case yields 1.0 for perfect agreement and `None` otherwise.
pub fn fleiss_kappa(m: &AgreementMatrix) -> Option<f64> {
    let items = m.items() as f64;
    let n = m.raters() as f64;
    let p_bar = observed_agreement(m);
    let mut totals = vec![0u64; m.categories()];
    for row in m.rows() {
        for (t, &c) in totals.iter_mut().zip(row) {
            *t += u64::from(c);
        }
    }
    let p_e: f64 = totals
        .iter()
        .map(|&t| {
            let p = t as f64 / (items * n);
            p * p
        })
        .sum();
    let single_category = totals.iter().filter(|&&t| t > 0).count() == 1;
    if single_category || p_e >= 1.0 {
        return (p_bar == 1.0).then_some(1.0);
    }
    Some((p_bar - p_e) / (1.0 - p_e))
}

/// Positive specific agreement for one category, `2a / (2a + d)` over rater
/// pairs, where `a` pairs both chose it and `d` pairs split on it. `None`
/// when nobody used the category.
pub fn per_tag_agreement(m: &AgreementMatrix, category: usize) -> Option<f64> {
    let n = m.raters() as u64;
    let (mut both, mut split) = (0u64, 0u64);
    for row in m.rows() {
        let c = u64::from(row[category]);
        both += c * c.saturating_sub(1) / 2;
        split += c * (n - c);
    }
    let denom = 2 * both + split;
    (denom > 0).then(|| (2 * both) as f64 / denom as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagAgreement {
    /// Positive specific agreement; `None` without data.
    pub psa: Option<f64>,
    /// Fleiss' kappa on the tag-vs-rest collapse.
    pub kappa: Option<f64>,
    /// Observed agreement on the tag-vs-rest collapse.
    pub percent: f64,
    /// Number of ratings carrying the tag.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub overall_percent: f64,
    pub kappa: Option<f64>,
    pub per_tag: BTreeMap<CsTag, TagAgreement>,
    pub item_count: usize,
    pub rater_count: usize,
}

impl AgreementReport {
    /// Scores a matrix whose columns are the 16 CS tags in table order.
    pub fn from_matrix(m: &AgreementMatrix) -> Result<Self> {
        if m.categories() != CsTag::ALL.len() {
            return Err(Error::InvalidMatrix(
                "report matrices must have one column per CS tag".into(),
            ));
        }
        let per_tag = CsTag::ALL
            .iter()
            .enumerate()
            .map(|(j, tag)| {
                let bin = m.binarize(j);
                let support: u64 = m.rows().map(|r| u64::from(r[j])).sum();
                (
                    *tag,
                    TagAgreement {
                        psa: per_tag_agreement(m, j),
                        kappa: if support > 0 {
                            fleiss_kappa(&bin)
                        } else {
                            None
                        },
                        percent: observed_agreement(&bin),
                        support,
                    },
                )
            })
            .collect();
        Ok(AgreementReport {
            overall_percent: observed_agreement(m),
            kappa: fleiss_kappa(m),
            per_tag,
            item_count: m.items(),
            rater_count: m.raters(),
        })
    }

    pub fn tag_score(&self, tag: CsTag) -> Option<f64> {
        self.per_tag.get(&tag).and_then(|t| t.psa)
    }
}

/// One unit annotated by several annotators, CS tags only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapUnit {
    pub unit_id: String,
    pub surfaces: Vec<String>,
    /// (annotator id, one tag per token)
    pub ratings: Vec<(String, Vec<CsTag>)>,
}

impl OverlapUnit {
    fn check(&self) -> Result<()> {
        if self
            .ratings
            .iter()
            .any(|(_, tags)| tags.len() != self.surfaces.len())
        {
            return Err(Error::Alignment {
                unit: self.unit_id.clone(),
            });
        }
        Ok(())
    }
}

/// Agreement matrix over all tokens of `units`; every unit must carry the
/// same number of annotators.
pub fn matrix_from_units(units: &[OverlapUnit]) -> Result<AgreementMatrix> {
    let mut items = Vec::new();
    for u in units {
        u.check()?;
        for t in 0..u.surfaces.len() {
            items.push(
                u.ratings
                    .iter()
                    .map(|(_, tags)| tags[t])
                    .collect::<Vec<_>>(),
            );
        }
    }
    AgreementMatrix::from_labels(&items, CsTag::ALL)
}

/// Groups units by annotator count and reports each stratum separately.
pub fn stratified_reports(units: &[OverlapUnit]) -> Result<BTreeMap<usize, AgreementReport>> {
    let mut strata: BTreeMap<usize, Vec<OverlapUnit>> = BTreeMap::new();
    for u in units {
        u.check()?;
        if u.ratings.len() >= 2 && !u.surfaces.is_empty() {
            strata.entry(u.ratings.len()).or_default().push(u.clone());
        }
    }
    strata
        .into_iter()
        .map(|(n, us)| Ok((n, AgreementReport::from_matrix(&matrix_from_units(&us)?)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementRecord {
    pub unit_id: String,
    pub token_index: usize,
    pub surface: String,
    /// (pseudonym, tag) in pseudonym order
    pub tags: Vec<(String, CsTag)>,
}

/// Assigns `Annotator1`, `Annotator2`, ... by first appearance.
#[derive(Debug, Clone, Default)]
pub struct Pseudonyms {
    map: HashMap<String, String>,
    order: Vec<String>,
}

impl Pseudonyms {
    pub fn get(&mut self, annotator: &str) -> String {
        if let Some(p) = self.map.get(annotator) {
            return p.clone();
        }
        let p = format!("Annotator{}", self.order.len() + 1);
        self.map.insert(annotator.to_string(), p.clone());
        self.order.push(annotator.to_string());
        p
    }

    /// (pseudonym, real id) pairs.
    pub fn key(&self) -> Vec<(String, String)> {
        self.order
            .iter()
            .map(|a| (self.map[a].clone(), a.clone()))
            .collect()
    }
}

/// Lists every token whose annotators did not all agree, in corpus order.
pub fn disagreement_report(units: &[OverlapUnit]) -> Result<Vec<DisagreementRecord>> {
    disagreement_report_with(units, &mut Pseudonyms::default())
}

pub fn disagreement_report_with(
    units: &[OverlapUnit],
    names: &mut Pseudonyms,
) -> Result<Vec<DisagreementRecord>> {
    let mut out = Vec::new();
    for u in units {
        u.check()?;
        if u.ratings.len() < 2 {
            return Err(Error::InvalidMatrix(format!(
                "unit {} has fewer than 2 annotators",
                u.unit_id
            )));
        }
        let mut ratings: Vec<&(String, Vec<CsTag>)> = u.ratings.iter().collect();
        ratings.sort_by(|a, b| a.0.cmp(&b.0));
        let handles: Vec<String> = ratings.iter().map(|(a, _)| names.get(a)).collect();
        for (t, surface) in u.surfaces.iter().enumerate() {
            let first = ratings[0].1[t];
            if ratings.iter().all(|(_, tags)| tags[t] == first) {
                continue;
            }
            let mut tags: Vec<(String, CsTag)> = handles
                .iter()
                .cloned()
                .zip(ratings.iter().map(|(_, tags)| tags[t]))
                .collect();
            tags.sort_by(|a, b| a.0.cmp(&b.0));
            out.push(DisagreementRecord {
                unit_id: u.unit_id.clone(),
                token_index: t,
                surface: surface.clone(),
                tags,
            });
        }
    }
    Ok(out)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}%", v * 100.0))
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Per-tag and overall table, one row per tag in table order.
pub fn render_table(report: &AgreementReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>8} {:>8} {:>8} {:>8}",
        "Label", "Percent", "Kappa", "PSA", "Support"
    );
    for (tag, t) in &report.per_tag {
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>8} {:>8} {:>8}",
            tag.as_str(),
            pct(Some(t.percent)),
            num(t.kappa),
            pct(t.psa),
            t.support
        );
    }
    let _ = writeln!(
        s,
        "{:<12} {:>8} {:>8} {:>8} {:>8}",
        "Overall",
        pct(Some(report.overall_percent)),
        num(report.kappa),
        "",
        report.item_count
    );
    s
}

/// CSV with the fixed columns `tag,percent,kappa,psa,support`. Missing
/// scores are empty cells.
pub fn render_csv(report: &AgreementReport) -> String {
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    let mut s = String::from("tag,percent,kappa,psa,support\n");
    for (tag, t) in &report.per_tag {
        let _ = writeln!(
            s,
            "{},{:.6},{},{},{}",
            tag.as_str(),
            t.percent,
            opt(t.kappa),
            opt(t.psa),
            t.support
        );
    }
    let _ = writeln!(
        s,
        "Overall,{:.6},{},,{}",
        report.overall_percent,
        opt(report.kappa),
        report.item_count
    );
    s
}

pub fn render_disagreements(records: &[DisagreementRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let tags: Vec<String> = r.tags.iter().map(|(a, t)| format!("{a}={t}")).collect();
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            r.unit_id,
            r.token_index,
            r.surface,
            tags.join("\t")
        );
    }
    s
}

/// One line of an annotation table: `unit_id<TAB>token_index<TAB>surface<TAB>cs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub unit_id: String,
    pub token_index: usize,
    pub surface: String,
    pub tag: CsTag,
}

/// Reads one annotator's table. Blank lines and lines starting with `#`
/// are skipped.
pub fn parse_ratings(input: &str) -> Result<Vec<Rating>> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| Error::MalformedLine {
            line: line_no,
            reason,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        let [unit_id, index, surface, tag] = cols[..] else {
            return Err(bad(format!(
                "expected 4 tab-separated fields, got {}",
                cols.len()
            )));
        };
        let token_index: usize = index
            .parse()
            .map_err(|_| bad(format!("bad token index {index:?}")))?;
        let tag: CsTag = tag.parse().map_err(|e: Error| bad(e.to_string()))?;
        if unit_id.is_empty() || surface.is_empty() {
            return Err(bad("empty unit id or surface".into()));
        }
        if !seen.insert((unit_id.to_string(), token_index)) {
            return Err(Error::DuplicateId {
                line: line_no,
                id: format!("{unit_id}:{token_index}"),
            });
        }
        out.push(Rating {
            unit_id: unit_id.into(),
            token_index,
            surface: surface.into(),
            tag,
        });
    }
    Ok(out)
}

/// Builds the units rated by at least two annotators. Each annotator must
/// cover a unit's tokens `0..n` without gaps, and all annotators must agree
/// on the surfaces.
pub fn overlap_from_ratings(tables: &[(String, Vec<Rating>)]) -> Result<Vec<OverlapUnit>> {
    let mut by_unit: BTreeMap<&str, Vec<(&str, Vec<&Rating>)>> = BTreeMap::new();
    for (annotator, rows) in tables {
        let mut per: BTreeMap<&str, Vec<&Rating>> = BTreeMap::new();
        for r in rows {
            per.entry(r.unit_id.as_str()).or_default().push(r);
        }
        for (unit, mut rs) in per {
            rs.sort_by_key(|r| r.token_index);
            by_unit
                .entry(unit)
                .or_default()
                .push((annotator.as_str(), rs));
        }
    }
    let mut out = Vec::new();
    for (unit, anns) in by_unit {
        if anns.len() < 2 {
            continue;
        }
        let misaligned = || Error::Alignment {
            unit: unit.to_string(),
        };
        let surfaces: Vec<String> = anns[0].1.iter().map(|r| r.surface.clone()).collect();
        let mut ratings = Vec::new();
        for (annotator, rs) in &anns {
            let contiguous = rs.iter().enumerate().all(|(i, r)| r.token_index == i);
            let same = rs.len() == surfaces.len()
                && rs.iter().zip(&surfaces).all(|(r, s)| &r.surface == s);
            if !contiguous || !same {
                return Err(misaligned());
            }
            ratings.push((annotator.to_string(), rs.iter().map(|r| r.tag).collect()));
        }
        out.push(OverlapUnit {
            unit_id: unit.to_string(),
            surfaces,
            ratings,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_matrices() {
        assert!(AgreementMatrix::new(1, 2, &[vec![1, 0]]).is_err());
        assert!(AgreementMatrix::new(2, 2, &[]).is_err());
        assert!(AgreementMatrix::new(2, 2, &[vec![1, 0]]).is_err());
        assert!(AgreementMatrix::new(2, 2, &[vec![1, 1, 0]]).is_err());
    }

    #[test]
    fn hand_computed_kappa() {
        // (A,A), (A,B), (B,B), (B,B)
        let m =
            AgreementMatrix::new(2, 2, &[vec![2, 0], vec![1, 1], vec![0, 2], vec![0, 2]]).unwrap();
        assert_eq!(observed_agreement(&m), 0.75);
        let k = fleiss_kappa(&m).unwrap();
        assert!((k - 7.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_degenerate() {
        let m = AgreementMatrix::new(3, 2, &[vec![3, 0], vec![0, 3]]).unwrap();
        assert_eq!(fleiss_kappa(&m), Some(1.0));
        let single = AgreementMatrix::new(2, 3, &[vec![2, 0, 0], vec![2, 0, 0]]).unwrap();
        assert_eq!(fleiss_kappa(&single), Some(1.0));
        let split = AgreementMatrix::new(2, 2, &[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(observed_agreement(&split), 0.0);
    }

    #[test]
    fn psa_no_data() {
        let m = AgreementMatrix::new(2, 3, &[vec![2, 0, 0], vec![1, 1, 0]]).unwrap();
        assert_eq!(per_tag_agreement(&m, 2), None);
        assert_eq!(per_tag_agreement(&m, 0), Some(2.0 / 3.0));
    }

    #[test]
    fn misaligned_units_error() {
        let u = OverlapUnit {
            unit_id: "u7".into(),
            surfaces: vec!["a".into(), "b".into()],
            ratings: vec![
                ("x".into(), vec![CsTag::Msa, CsTag::Msa]),
                ("y".into(), vec![CsTag::Msa]),
            ],
        };
        let err = disagreement_report(&[u]).unwrap_err();
        assert!(matches!(err, Error::Alignment { ref unit } if unit == "u7"));
    }

    #[test]
    fn strata_split_by_rater_count() {
        let two = OverlapUnit {
            unit_id: "a".into(),
            surfaces: vec!["x".into()],
            ratings: vec![
                ("p".into(), vec![CsTag::Msa]),
                ("q".into(), vec![CsTag::Msa]),
            ],
        };
        let three = OverlapUnit {
            unit_id: "b".into(),
            surfaces: vec!["y".into()],
            ratings: vec![
                ("p".into(), vec![CsTag::Da]),
                ("q".into(), vec![CsTag::Da]),
                ("r".into(), vec![CsTag::Msa]),
            ],
        };
        let r = stratified_reports(&[two, three]).unwrap();
        assert_eq!(r.keys().copied().collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(r[&2].overall_percent, 1.0);
        assert_eq!(r[&3].item_count, 1);
    }

    #[test]
    fn csv_columns() {
        let m = AgreementMatrix::from_labels(&[vec![CsTag::Msa, CsTag::Msa]], CsTag::ALL).unwrap();
        let csv = render_csv(&AgreementReport::from_matrix(&m).unwrap());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("tag,percent,kappa,psa,support"));
        assert_eq!(lines.next(), Some("MSA,1.000000,1.000000,1.000000,2"));
        assert_eq!(lines.next(), Some("DA,1.000000,,,0"));
        assert_eq!(csv.lines().count(), 18);
    }

    #[test]
    fn rating_tables() {
        let a = parse_ratings("# header\nu1\t0\tx\tMSA\nu1\t1\ty\tDA\nu2\t0\tz\tMSA\n").unwrap();
        let b = parse_ratings("u1\t1\ty\tDA\nu1\t0\tx\tDA\n").unwrap();
        let units = overlap_from_ratings(&[("a".into(), a.clone()), ("b".into(), b)]).unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(
            units[0].ratings[1],
            ("b".to_string(), vec![CsTag::Da, CsTag::Da])
        );

        let gap = parse_ratings("u1\t0\tx\tMSA\nu1\t2\ty\tDA\n").unwrap();
        assert!(matches!(
            overlap_from_ratings(&[("a".into(), a), ("c".into(), gap)]),
            Err(Error::Alignment { .. })
        ));
        assert!(matches!(
            parse_ratings("u1\t0\tx\tMSA\nu1\t0\tx\tDA\n"),
            Err(Error::DuplicateId { line: 2, .. })
        ));
        assert!(matches!(
            parse_ratings("u1\tx\tx\tMSA\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }
}
