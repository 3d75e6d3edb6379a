use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagschema::{validate_annotation, DocumentMeta, Origin, TokenAnnotation, Unit};

/// Author name of adjudicated versions.
pub const ADJUDICATED: &str = "adjudicated";
/// Author name of the pre-tagging pipeline.
pub const MACHINE_AUTHOR: &str = "machine:pretag";

/// One author's annotations of one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationVersion {
    pub author: String,
    /// Accepted by the lead in review.
    pub accepted: bool,
    pub tokens: Vec<Option<TokenAnnotation>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusUnit {
    pub unit: Unit,
    /// Sorted by author.
    pub versions: Vec<AnnotationVersion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub unit_id: String,
    pub token_index: usize,
    pub author: String,
    pub origin: Origin,
}

/// Which version of each unit to export or count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "author")]
pub enum Selection {
    Annotator(String),
    Adjudicated,
    /// First accepted version in author order.
    LeadAccepted,
}

impl std::str::FromStr for Selection {
    type Err = Error;

    /// `lead-accepted`, `adjudicated` or `annotator:<id>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lead-accepted" => Ok(Selection::LeadAccepted),
            "adjudicated" => Ok(Selection::Adjudicated),
            _ => match s.strip_prefix("annotator:") {
                Some(a) if !a.is_empty() => Ok(Selection::Annotator(a.to_string())),
                _ => Err(Error::Parse(format!("unknown selection {s:?}"))),
            },
        }
    }
}

impl Selection {
    pub fn pick<'a>(&self, unit: &'a CorpusUnit) -> Option<&'a AnnotationVersion> {
        match self {
            Selection::Annotator(a) => unit.versions.iter().find(|v| &v.author == a),
            Selection::Adjudicated => unit.versions.iter().find(|v| v.author == ADJUDICATED),
            Selection::LeadAccepted => unit.versions.iter().find(|v| v.accepted),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub id: String,
    pub meta: DocumentMeta,
    pub units: Vec<CorpusUnit>,
    pub provenance: Vec<ProvenanceEntry>,
}

impl Corpus {
    pub fn new(id: &str, meta: DocumentMeta) -> Result<Self> {
        meta.validate()?;
        Ok(Corpus {
            id: id.to_string(),
            meta,
            units: Vec::new(),
            provenance: Vec::new(),
        })
    }

    pub fn add_unit(&mut self, unit: Unit) -> Result<()> {
        if self.unit(&unit.id).is_some() {
            return Err(Error::State(format!("duplicate unit id {}", unit.id)));
        }
        unit.check_tokens()?;
        self.units.push(CorpusUnit {
            unit,
            versions: Vec::new(),
        });
        Ok(())
    }

    pub fn unit(&self, id: &str) -> Option<&CorpusUnit> {
        self.units.iter().find(|u| u.unit.id == id)
    }

    /// Stores (or replaces) one author's version of a unit. Every annotation
    /// must validate against its token.
    pub fn add_version(&mut self, unit_id: &str, version: AnnotationVersion) -> Result<()> {
        let cu = self
            .units
            .iter_mut()
            .find(|u| u.unit.id == unit_id)
            .ok_or_else(|| Error::NotFound(format!("unit {unit_id}")))?;
        if version.tokens.len() != cu.unit.tokens.len() {
            return Err(Error::InvalidUnit {
                unit: unit_id.to_string(),
                reason: format!(
                    "{} annotations for {} tokens",
                    version.tokens.len(),
                    cu.unit.tokens.len()
                ),
            });
        }
        for (tok, ann) in cu.unit.tokens.iter().zip(&version.tokens) {
            if let Some(ann) = ann {
                if let Some(v) = validate_annotation(tok, ann).first() {
                    return Err(Error::InvalidAnnotation {
                        path: format!("{unit_id}:{}", tok.index),
                        reason: v.message.clone(),
                    });
                }
            }
        }
        for (i, ann) in version.tokens.iter().enumerate() {
            if let Some(ann) = ann {
                self.provenance.push(ProvenanceEntry {
                    unit_id: unit_id.to_string(),
                    token_index: i,
                    author: version.author.clone(),
                    origin: ann.origin,
                });
            }
        }
        cu.versions.retain(|v| v.author != version.author);
        let at = cu.versions.partition_point(|v| v.author < version.author);
        cu.versions.insert(at, version);
        Ok(())
    }

    pub fn token_count(&self) -> usize {
        self.units.iter().map(|u| u.unit.tokens.len()).sum()
    }
}
