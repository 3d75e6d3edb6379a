//! Closed tag vocabularies, the token/annotation data model, structural
//! validation of annotations, and code-switch point derivation.
//!
//! Every tag is stored under a canonical ASCII identifier. Display variants
//! (for example `NE_Com` for `NE-Com`, or `Emoticon` for `Emotion`) resolve
//! through [`ALIASES`], the single alias table used by every parser in the
//! crate.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Which of the three token-level tag lists a label belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagKind {
    Cs,
    Pos,
    Typo,
}

impl fmt::Display for TagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagKind::Cs => "cs",
            TagKind::Pos => "pos",
            TagKind::Typo => "typo",
        })
    }
}

impl FromStr for TagKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cs" => Ok(TagKind::Cs),
            "pos" => Ok(TagKind::Pos),
            "typo" => Ok(TagKind::Typo),
            other => Err(Error::Parse(format!("unknown tag kind {other:?}"))),
        }
    }
}

/// Display variants accepted by the parsers, mapped onto canonical names.
pub const ALIASES: &[(TagKind, &str, &str)] = &[
    (TagKind::Cs, "Emoticon", "Emotion"),
    (TagKind::Cs, "Punct", "Punctuation"),
    (TagKind::Cs, "Mixed-Arabic", "MA"),
    (TagKind::Cs, "Mixed-Foreign", "MF"),
    (TagKind::Pos, "NE_Com", "NE-Com"),
    (TagKind::Pos, "MWE_Com", "MWE-Com"),
    (TagKind::Pos, "NOUN-PROP", "NOUN_PROP"),
];

fn resolve_alias(kind: TagKind, label: &str) -> &str {
    ALIASES
        .iter()
        .find(|(k, alias, _)| *k == kind && *alias == label)
        .map(|(_, _, canonical)| *canonical)
        .unwrap_or(label)
}

macro_rules! closed_tag {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:expr, [ $( $variant:ident => $label:literal ),+ $(,)? ]
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $( $variant ),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[ $( $name::$variant ),+ ];

            pub fn as_str(self) -> &'static str {
                match self {
                    $( $name::$variant => $label ),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let canonical = resolve_alias($kind, s);
                match canonical {
                    $( $label => Ok($name::$variant), )+
                    _ => Err(Error::UnknownLabel { kind: $kind, label: s.to_string() }),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

closed_tag! {
    /// The 16 code-switching labels, in table order.
    CsTag, TagKind::Cs, [
        Msa => "MSA",
        Da => "DA",
        Ambiguous => "Ambiguous",
        Ma => "MA",
        Fw => "FW",
        Mf => "MF",
        Ne => "NE",
        Unk => "UNK",
        Latin => "Latin",
        Url => "URL",
        Punctuation => "Punctuation",
        Number => "Number",
        Diacritics => "Diacritics",
        Emotion => "Emotion",
        Sound => "Sound",
        Other => "Other",
    ]
}

closed_tag! {
    /// The 14 part-of-speech labels.
    PosTag, TagKind::Pos, [
        Noun => "NOUN",
        Verb => "VERB",
        Adj => "ADJ",
        Pron => "PRON",
        NounProp => "NOUN_PROP",
        Part => "PART",
        Prep => "PREP",
        Adv => "ADV",
        Det => "DET",
        Conj => "CONJ",
        Interj => "INTERJ",
        Abbrev => "ABBREV",
        MweCom => "MWE-Com",
        NeCom => "NE-Com",
    ]
}

closed_tag! {
    /// Orthographic error flag. `Correct` is the default.
    TypoTag, TagKind::Typo, [
        Correct => "Correct",
        Typo => "Typo",
    ]
}

// the enum comes from closed_tag!, which has no #[default] hook
#[allow(clippy::derivable_impls)]
impl Default for TypoTag {
    fn default() -> Self {
        TypoTag::Correct
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagClass {
    Linguistic,
    NonLinguistic,
}

impl CsTag {
    /// 1-based row in the CS label table.
    pub fn row(self) -> usize {
        CsTag::ALL.iter().position(|t| *t == self).unwrap() + 1
    }

    pub fn class(self) -> TagClass {
        tag_class(self)
    }

    /// Tags that take part in switch-point comparison.
    pub fn is_language(self) -> bool {
        matches!(
            self,
            CsTag::Msa | CsTag::Da | CsTag::Fw | CsTag::Ma | CsTag::Mf
        )
    }

    /// Categories the pre-tagger is allowed to assign.
    pub fn is_machine_taggable(self) -> bool {
        matches!(
            self,
            CsTag::Ne
                | CsTag::Latin
                | CsTag::Url
                | CsTag::Punctuation
                | CsTag::Number
                | CsTag::Diacritics
                | CsTag::Emotion
                | CsTag::Sound
        )
    }

    /// The nine labels verified by crowd workers.
    pub fn is_crowd_label(self) -> bool {
        self.row() <= 8 || self == CsTag::Other
    }
}

/// A tag value of any of the three kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnyTag {
    Cs(CsTag),
    Pos(PosTag),
    Typo(TypoTag),
}

impl fmt::Display for AnyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnyTag::Cs(t) => t.fmt(f),
            AnyTag::Pos(t) => t.fmt(f),
            AnyTag::Typo(t) => t.fmt(f),
        }
    }
}

/// Parses `label` as a member of the tag list named by `kind`.
pub fn parse_tag(kind: TagKind, label: &str) -> Result<AnyTag> {
    Ok(match kind {
        TagKind::Cs => AnyTag::Cs(label.parse()?),
        TagKind::Pos => AnyTag::Pos(label.parse()?),
        TagKind::Typo => AnyTag::Typo(label.parse()?),
    })
}

/// Rows 1-7 are linguistic, rows 8-16 are not.
pub fn tag_class(tag: CsTag) -> TagClass {
    if tag.row() <= 7 {
        TagClass::Linguistic
    } else {
        TagClass::NonLinguistic
    }
}

/// Half-open character range `[start, end)`, counted in Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Extracts the characters covered by this span, or `None` when out of range.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.start > self.end {
            return None;
        }
        let mut indices = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()));
        let begin = indices.nth(self.start)?;
        let finish = if self.end == self.start {
            begin
        } else {
            indices.nth(self.end - self.start - 1)?
        };
        Some(&text[begin..finish])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub index: usize,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Machine,
    Human,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Machine => "machine",
            Origin::Human => "human",
        })
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "machine" => Ok(Origin::Machine),
            "human" => Ok(Origin::Human),
            other => Err(Error::Parse(format!("unknown origin {other:?}"))),
        }
    }
}

/// Language of a single morpheme inside a mixed token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MorphemeLang {
    #[serde(rename = "MSA")]
    Msa,
    #[serde(rename = "DA")]
    Da,
    #[serde(rename = "FOREIGN")]
    Foreign,
}

impl MorphemeLang {
    pub fn as_str(self) -> &'static str {
        match self {
            MorphemeLang::Msa => "MSA",
            MorphemeLang::Da => "DA",
            MorphemeLang::Foreign => "FOREIGN",
        }
    }
}

impl fmt::Display for MorphemeLang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MorphemeLang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MSA" => Ok(MorphemeLang::Msa),
            "DA" => Ok(MorphemeLang::Da),
            "FOREIGN" => Ok(MorphemeLang::Foreign),
            other => Err(Error::Parse(format!("unknown morpheme language {other:?}"))),
        }
    }
}

/// A morpheme sub-span, relative to the start of its token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Morpheme {
    pub span: Span,
    pub lang: MorphemeLang,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenAnnotation {
    #[serde(default)]
    pub cs: Option<CsTag>,
    #[serde(default)]
    pub pos: Option<PosTag>,
    #[serde(default)]
    pub typo: TypoTag,
    pub origin: Origin,
    /// A human has reviewed and kept a machine tag.
    #[serde(default)]
    pub confirmed: bool,
    #[serde(default)]
    pub morphemes: Option<Vec<Morpheme>>,
}

impl TokenAnnotation {
    pub fn human(cs: CsTag, pos: PosTag) -> Self {
        TokenAnnotation {
            cs: Some(cs),
            pos: Some(pos),
            typo: TypoTag::Correct,
            origin: Origin::Human,
            confirmed: false,
            morphemes: None,
        }
    }

    pub fn machine(cs: CsTag) -> Self {
        TokenAnnotation {
            cs: Some(cs),
            pos: None,
            typo: TypoTag::Correct,
            origin: Origin::Machine,
            confirmed: false,
            morphemes: None,
        }
    }

    pub fn with_morphemes(mut self, morphemes: Vec<Morpheme>) -> Self {
        self.morphemes = Some(morphemes);
        self
    }

    /// Counts toward task completion: all three tags present and, for machine
    /// tags, confirmed by a human.
    pub fn is_complete(&self) -> bool {
        self.cs.is_some() && self.pos.is_some() && (self.origin == Origin::Human || self.confirmed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Genre {
    DiscussionForum,
    Commentary,
    Tweet,
}

impl Genre {
    pub const ALL: &'static [Genre] = &[Genre::DiscussionForum, Genre::Commentary, Genre::Tweet];

    pub fn as_str(self) -> &'static str {
        match self {
            Genre::DiscussionForum => "discussion-forum",
            Genre::Commentary => "commentary",
            Genre::Tweet => "tweet",
        }
    }

    /// Label used in corpus statistics reports.
    pub fn report_label(self) -> &'static str {
        match self {
            Genre::DiscussionForum => "Discussion Forums",
            Genre::Commentary => "News / Commentaries",
            Genre::Tweet => "Tweets",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Genre {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Genre::ALL
            .iter()
            .copied()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown genre {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub id: String,
    pub genre: Genre,
    pub dialect: String,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Unit {
    /// Checks the token invariants against the unit text.
    pub fn check_tokens(&self) -> Result<()> {
        let mut prev_end = 0usize;
        for (i, tok) in self.tokens.iter().enumerate() {
            let bad = |why: &str| Error::InvalidUnit {
                unit: self.id.clone(),
                reason: format!("token {i}: {why}"),
            };
            if tok.index != i {
                return Err(bad("index out of sequence"));
            }
            if tok.surface.is_empty() || tok.span.is_empty() {
                return Err(bad("empty token"));
            }
            if tok.span.start < prev_end {
                return Err(bad("overlapping span"));
            }
            match tok.span.slice(&self.text) {
                Some(s) if s == tok.surface => {}
                _ => return Err(bad("surface does not match span")),
            }
            prev_end = tok.span.end;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Speaker {
    pub age: Option<String>,
    pub gender: Option<String>,
    pub education: Option<String>,
    pub language_background: Option<String>,
    pub regional_origin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub source: String,
    pub languages: Vec<String>,
    pub speaker: Option<Speaker>,
    pub genre: Genre,
}

impl DocumentMeta {
    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() {
            return Err(Error::Parse("document languages must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwitchPoint {
    pub from_index: usize,
    pub to_index: usize,
    pub from_lang: CsTag,
    pub to_lang: CsTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    MorphemesTooFew,
    MorphemesNotPartition,
    MorphemesMonolingual,
    MaRequiresMsaAndDa,
    MfRequiresForeignAndArabic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Violation {
            code,
            message: message.into(),
        }
    }
}

/// Checks `ann` against its token. An empty list means the annotation is valid.
pub fn validate_annotation(token: &Token, ann: &TokenAnnotation) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(morphemes) = ann.morphemes.as_deref() else {
        return out;
    };
    if morphemes.len() < 2 {
        out.push(Violation::new(
            ViolationCode::MorphemesTooFew,
            "morpheme list needs at least 2 entries",
        ));
    }
    let token_len = token.span.len();
    let mut cursor = 0usize;
    let mut partition = true;
    for m in morphemes {
        if m.span.start != cursor || m.span.is_empty() {
            partition = false;
            break;
        }
        cursor = m.span.end;
    }
    if !partition || cursor != token_len {
        out.push(Violation::new(
            ViolationCode::MorphemesNotPartition,
            format!("morpheme spans must partition 0..{token_len}"),
        ));
    }
    let langs: BTreeSet<MorphemeLang> = morphemes.iter().map(|m| m.lang).collect();
    if langs.len() < 2 {
        out.push(Violation::new(
            ViolationCode::MorphemesMonolingual,
            "morphemes must carry at least 2 distinct languages",
        ));
    }
    match ann.cs {
        Some(CsTag::Ma)
            if !(langs.contains(&MorphemeLang::Msa) && langs.contains(&MorphemeLang::Da)) =>
        {
            out.push(Violation::new(
                ViolationCode::MaRequiresMsaAndDa,
                "MA requires MSA+DA morphemes",
            ));
        }
        Some(CsTag::Mf)
            if !(langs.contains(&MorphemeLang::Foreign)
                && (langs.contains(&MorphemeLang::Msa) || langs.contains(&MorphemeLang::Da))) =>
        {
            out.push(Violation::new(
                ViolationCode::MfRequiresForeignAndArabic,
                "MF requires FOREIGN with MSA or DA morphemes",
            ));
        }
        _ => {}
    }
    out
}

/// How tokens outside the language tags are treated when looking for switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchMode {
    /// NE, Ambiguous and non-linguistic tokens are skipped.
    #[default]
    Transparent,
    /// Only directly adjacent language-tagged tokens are compared; any other
    /// tag breaks the chain.
    StrictAdjacent,
}

/// Derives switch points from per-token CS tags in token order.
pub fn derive_cs_points(tags: &[Option<CsTag>], mode: SwitchMode) -> Result<Vec<SwitchPoint>> {
    if let Some(missing) = tags.iter().position(Option::is_none) {
        return Err(Error::MissingTag { index: missing });
    }
    let mut out = Vec::new();
    let mut last: Option<(usize, CsTag)> = None;
    for (i, tag) in tags.iter().map(|t| t.unwrap()).enumerate() {
        if !tag.is_language() {
            if mode == SwitchMode::StrictAdjacent {
                last = None;
            }
            continue;
        }
        if let Some((j, prev)) = last {
            if prev != tag {
                out.push(SwitchPoint {
                    from_index: j,
                    to_index: i,
                    from_lang: prev,
                    to_lang: tag,
                });
            }
        }
        last = Some((i, tag));
    }
    Ok(out)
}

/// Convenience wrapper over annotations instead of bare tags.
pub fn derive_cs_points_from(
    annotations: &[TokenAnnotation],
    mode: SwitchMode,
) -> Result<Vec<SwitchPoint>> {
    let tags: Vec<Option<CsTag>> = annotations.iter().map(|a| a.cs).collect();
    derive_cs_points(&tags, mode)
}
