//! Canonical XML serialization of a corpus.
//!
//! Element order, attribute order, indentation (two spaces), encoding
//! (UTF-8) and line endings (LF) are fixed, so exporting an imported export
//! reproduces it byte for byte. The element set is documented in
//! `docs/xml-schema.md`.

use std::fmt::Write as _;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::corpus::{AnnotationVersion, Corpus, Selection};
use crate::error::{Error, Result};
use crate::tagschema::{
    derive_cs_points, validate_annotation, CsTag, DocumentMeta, Genre, Morpheme, MorphemeLang,
    Origin, PosTag, Span, Speaker, SwitchMode, SwitchPoint, Token, TokenAnnotation, TypoTag, Unit,
};

pub const SCHEMA_VERSION: &str = "csanno/1";
const MAX_DEPTH: usize = 16;

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

fn open(out: &mut String, depth: usize, name: &str, attrs: &[(&str, String)], empty: bool) {
    out.push_str(&"  ".repeat(depth));
    out.push('<');
    out.push_str(name);
    for (k, v) in attrs {
        let _ = write!(out, " {k}=\"{}\"", escape_attr(v));
    }
    out.push_str(if empty { "/>\n" } else { ">\n" });
}

fn close(out: &mut String, depth: usize, name: &str) {
    let _ = writeln!(out, "{}</{name}>", "  ".repeat(depth));
}

/// Serializes the selected version of every unit.
///
/// Fails with the offending `unit:token` ids when a unit has no selected
/// version or a selected token lacks its CS or POS tag.
pub fn export_xml(corpus: &Corpus, selection: &Selection) -> Result<Vec<u8>> {
    let mut missing = Vec::new();
    let mut chosen = Vec::with_capacity(corpus.units.len());
    for cu in &corpus.units {
        match selection.pick(cu) {
            None => missing.push(cu.unit.id.clone()),
            Some(v) => {
                for (i, a) in v.tokens.iter().enumerate() {
                    if !a
                        .as_ref()
                        .is_some_and(|a| a.cs.is_some() && a.pos.is_some())
                    {
                        missing.push(format!("{}:{i}", cu.unit.id));
                    }
                }
                chosen.push((cu, v));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Incomplete { missing });
    }

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    open(
        &mut out,
        0,
        "corpus",
        &[("id", corpus.id.clone()), ("schema", SCHEMA_VERSION.into())],
        false,
    );
    write_meta(&mut out, &corpus.meta);
    for (cu, version) in chosen {
        let u = &cu.unit;
        open(
            &mut out,
            1,
            "unit",
            &[
                ("id", u.id.clone()),
                ("genre", u.genre.to_string()),
                ("dialect", u.dialect.clone()),
                ("annotator", version.author.clone()),
                ("accepted", version.accepted.to_string()),
            ],
            false,
        );
        let _ = writeln!(out, "    <text>{}</text>", escape_text(&u.text));
        for (tok, ann) in u.tokens.iter().zip(&version.tokens) {
            let ann = ann.as_ref().expect("checked above");
            let attrs = [
                ("index", tok.index.to_string()),
                ("start", tok.span.start.to_string()),
                ("end", tok.span.end.to_string()),
                ("surface", tok.surface.clone()),
                ("cs", ann.cs.expect("checked above").to_string()),
                ("pos", ann.pos.expect("checked above").to_string()),
                ("typo", ann.typo.to_string()),
                ("origin", ann.origin.to_string()),
                ("confirmed", ann.confirmed.to_string()),
            ];
            match &ann.morphemes {
                None => open(&mut out, 2, "token", &attrs, true),
                Some(ms) => {
                    open(&mut out, 2, "token", &attrs, false);
                    for m in ms {
                        open(
                            &mut out,
                            3,
                            "morpheme",
                            &[
                                ("start", m.span.start.to_string()),
                                ("end", m.span.end.to_string()),
                                ("lang", m.lang.to_string()),
                            ],
                            true,
                        );
                    }
                    close(&mut out, 2, "token");
                }
            }
        }
        let tags: Vec<Option<CsTag>> = version
            .tokens
            .iter()
            .map(|a| a.as_ref().and_then(|a| a.cs))
            .collect();
        let points = derive_cs_points(&tags, SwitchMode::Transparent)?;
        if points.is_empty() {
            open(&mut out, 2, "cs-points", &[], true);
        } else {
            open(&mut out, 2, "cs-points", &[], false);
            for p in points {
                open(
                    &mut out,
                    3,
                    "switch",
                    &[
                        ("from", p.from_index.to_string()),
                        ("to", p.to_index.to_string()),
                        ("from-lang", p.from_lang.to_string()),
                        ("to-lang", p.to_lang.to_string()),
                    ],
                    true,
                );
            }
            close(&mut out, 2, "cs-points");
        }
        close(&mut out, 1, "unit");
    }
    close(&mut out, 0, "corpus");
    Ok(out.into_bytes())
}

fn write_meta(out: &mut String, meta: &DocumentMeta) {
    open(
        out,
        1,
        "document",
        &[
            ("source", meta.source.clone()),
            ("genre", meta.genre.to_string()),
        ],
        false,
    );
    for lang in &meta.languages {
        let _ = writeln!(out, "    <language>{}</language>", escape_text(lang));
    }
    if let Some(s) = &meta.speaker {
        let attrs: Vec<(&str, String)> = [
            ("age", &s.age),
            ("gender", &s.gender),
            ("education", &s.education),
            ("language-background", &s.language_background),
            ("regional-origin", &s.regional_origin),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        open(out, 2, "speaker", &attrs, true);
    }
    close(out, 1, "document");
}

/// Minimal element tree used while importing.
#[derive(Debug, Default)]
struct Element {
    name: String,
    path: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
    text: String,
}

impl Element {
    fn schema(&self, reason: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path.clone(),
            reason: reason.into(),
        }
    }

    fn allow_attrs(&self, allowed: &[&str]) -> Result<()> {
        match self
            .attrs
            .iter()
            .find(|(k, _)| !allowed.contains(&k.as_str()))
        {
            Some((k, _)) => Err(self.schema(format!("unexpected attribute {k}"))),
            None => Ok(()),
        }
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn req(&self, key: &str) -> Result<&str> {
        self.opt(key).ok_or_else(|| Error::Schema {
            path: format!("{}@{key}", self.path),
            reason: "missing attribute".into(),
        })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.req(key)?.parse().map_err(|e: T::Err| Error::Schema {
            path: format!("{}@{key}", self.path),
            reason: e.to_string(),
        })
    }

    fn no_children(&self) -> Result<()> {
        if self.children.is_empty() {
            Ok(())
        } else {
            Err(self.schema("unexpected child elements"))
        }
    }

    fn no_text(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            Ok(())
        } else {
            Err(self.schema("unexpected text content"))
        }
    }
}

fn xml_err(e: impl std::fmt::Display, reader_pos: u64) -> Error {
    Error::Schema {
        path: format!("byte {reader_pos}"),
        reason: e.to_string(),
    }
}

fn parse_tree(input: &str) -> Result<Element> {
    let mut reader = Reader::from_str(input);
    reader.config_mut().trim_text(false);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;
    let mut counters: Vec<std::collections::HashMap<String, usize>> = vec![Default::default()];

    let start_el = |e: &quick_xml::events::BytesStart<'_>,
                    stack: &Vec<Element>,
                    counters: &mut Vec<std::collections::HashMap<String, usize>>,
                    pos: u64|
     -> Result<Element> {
        let name = std::str::from_utf8(e.name().as_ref())
            .map_err(|err| xml_err(err, pos))?
            .to_string();
        let n = counters
            .last_mut()
            .unwrap()
            .entry(name.clone())
            .or_insert(0);
        *n += 1;
        let parent = stack.last().map_or("", |p| p.path.as_str());
        let path = format!("{parent}/{name}[{n}]");
        let mut attrs = Vec::new();
        for a in e.attributes() {
            let a = a.map_err(|err| xml_err(err, pos))?;
            let key = std::str::from_utf8(a.key.as_ref())
                .map_err(|err| xml_err(err, pos))?
                .to_string();
            let value = a
                .unescape_value()
                .map_err(|err| xml_err(err, pos))?
                .into_owned();
            attrs.push((key, value));
        }
        Ok(Element {
            name,
            path,
            attrs,
            ..Default::default()
        })
    };

    loop {
        let pos = reader.buffer_position();
        let event = reader.read_event().map_err(|e| xml_err(e, pos))?;
        match event {
            Event::Decl(_) | Event::Comment(_) => {}
            Event::PI(_) | Event::DocType(_) => {
                return Err(xml_err(
                    "processing instructions and DTDs are not allowed",
                    pos,
                ))
            }
            Event::Start(e) => {
                if root.is_some() {
                    return Err(xml_err("content after the root element", pos));
                }
                if stack.len() >= MAX_DEPTH {
                    return Err(xml_err("nesting too deep", pos));
                }
                let el = start_el(&e, &stack, &mut counters, pos)?;
                stack.push(el);
                counters.push(Default::default());
            }
            Event::Empty(e) => {
                if root.is_some() {
                    return Err(xml_err("content after the root element", pos));
                }
                let el = start_el(&e, &stack, &mut counters, pos)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::End(_) => {
                counters.pop();
                let el = stack
                    .pop()
                    .ok_or_else(|| xml_err("unbalanced end tag", pos))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(|e| xml_err(e, pos))?;
                match stack.last_mut() {
                    Some(el) => el.text.push_str(&s),
                    None if s.trim().is_empty() => {}
                    None => return Err(xml_err("text outside the root element", pos)),
                }
            }
            Event::CData(t) => {
                let s = std::str::from_utf8(&t)
                    .map_err(|e| xml_err(e, pos))?
                    .to_string();
                match stack.last_mut() {
                    Some(el) => el.text.push_str(&s),
                    None => return Err(xml_err("text outside the root element", pos)),
                }
            }
            Event::Eof => break,
        }
    }
    if !stack.is_empty() {
        return Err(xml_err(
            "unexpected end of document",
            reader.buffer_position(),
        ));
    }
    root.ok_or_else(|| xml_err("no root element", 0))
}

/// Parses a canonical export back into a corpus.
///
/// Switch points are recomputed from the token tags and must equal the
/// serialized ones; a mismatch signals corruption.
pub fn import_xml(bytes: &[u8]) -> Result<Corpus> {
    let input = std::str::from_utf8(bytes).map_err(|e| Error::Schema {
        path: "/".into(),
        reason: e.to_string(),
    })?;
    let root = parse_tree(input)?;
    if root.name != "corpus" {
        return Err(root.schema("root element must be corpus"));
    }
    root.allow_attrs(&["id", "schema"])?;
    root.no_text()?;
    if root.req("schema")? != SCHEMA_VERSION {
        return Err(Error::Schema {
            path: format!("{}@schema", root.path),
            reason: "unsupported schema version".into(),
        });
    }
    let id = root.req("id")?.to_string();
    let mut children = root.children.iter();
    let doc = children
        .next()
        .filter(|c| c.name == "document")
        .ok_or_else(|| root.schema("document element must come first"))?;
    let meta = read_meta(doc)?;
    let mut corpus = Corpus::new(&id, meta).map_err(|e| doc.schema(e.to_string()))?;
    for el in children {
        if el.name != "unit" {
            return Err(el.schema("expected unit element"));
        }
        read_unit(el, &mut corpus)?;
    }
    Ok(corpus)
}

fn read_meta(doc: &Element) -> Result<DocumentMeta> {
    doc.allow_attrs(&["source", "genre"])?;
    doc.no_text()?;
    let mut languages = Vec::new();
    let mut speaker = None;
    for c in &doc.children {
        match c.name.as_str() {
            "language" if speaker.is_none() => {
                c.allow_attrs(&[])?;
                c.no_children()?;
                if c.text.is_empty() {
                    return Err(c.schema("empty language"));
                }
                languages.push(c.text.clone());
            }
            "speaker" if speaker.is_none() => {
                c.allow_attrs(&[
                    "age",
                    "gender",
                    "education",
                    "language-background",
                    "regional-origin",
                ])?;
                c.no_children()?;
                c.no_text()?;
                let get = |k: &str| c.opt(k).map(str::to_string);
                speaker = Some(Speaker {
                    age: get("age"),
                    gender: get("gender"),
                    education: get("education"),
                    language_background: get("language-background"),
                    regional_origin: get("regional-origin"),
                });
            }
            _ => return Err(c.schema("unexpected element in document")),
        }
    }
    if languages.is_empty() {
        return Err(doc.schema("at least one language is required"));
    }
    Ok(DocumentMeta {
        source: doc.req("source")?.to_string(),
        languages,
        speaker,
        genre: doc.parse::<Genre>("genre")?,
    })
}

fn read_unit(el: &Element, corpus: &mut Corpus) -> Result<()> {
    el.allow_attrs(&["id", "genre", "dialect", "annotator", "accepted"])?;
    el.no_text()?;
    let id = el.req("id")?.to_string();
    if corpus.unit(&id).is_some() {
        return Err(Error::Schema {
            path: format!("{}@id", el.path),
            reason: format!("duplicate unit id {id}"),
        });
    }
    let mut children = el.children.iter().peekable();
    let text_el = children
        .next()
        .filter(|c| c.name == "text")
        .ok_or_else(|| el.schema("text element must come first"))?;
    text_el.allow_attrs(&[])?;
    text_el.no_children()?;
    let text = text_el.text.clone();

    let mut tokens = Vec::new();
    let mut anns = Vec::new();
    while let Some(c) = children.next_if(|c| c.name == "token") {
        let (tok, ann) = read_token(c, &text, tokens.len())?;
        tokens.push(tok);
        anns.push(Some(ann));
    }
    let points_el = children
        .next()
        .filter(|c| c.name == "cs-points")
        .ok_or_else(|| el.schema("cs-points element expected after tokens"))?;
    // reserved for syntactic annotation; content is ignored
    children.next_if(|c| c.name == "syntax");
    if let Some(extra) = children.next() {
        return Err(extra.schema("unexpected element in unit"));
    }

    let unit = Unit {
        id: id.clone(),
        genre: el.parse("genre")?,
        dialect: el.req("dialect")?.to_string(),
        text,
        tokens,
    };
    unit.check_tokens().map_err(|e| el.schema(e.to_string()))?;

    points_el.allow_attrs(&[])?;
    points_el.no_text()?;
    let mut stored = Vec::new();
    for s in &points_el.children {
        if s.name != "switch" {
            return Err(s.schema("expected switch element"));
        }
        s.allow_attrs(&["from", "to", "from-lang", "to-lang"])?;
        s.no_children()?;
        stored.push(SwitchPoint {
            from_index: s.parse("from")?,
            to_index: s.parse("to")?,
            from_lang: s.parse("from-lang")?,
            to_lang: s.parse("to-lang")?,
        });
    }
    let tags: Vec<Option<CsTag>> = anns
        .iter()
        .map(|a: &Option<TokenAnnotation>| a.as_ref().and_then(|a| a.cs))
        .collect();
    if derive_cs_points(&tags, SwitchMode::Transparent)? != stored {
        return Err(Error::CsPointsMismatch { unit: id });
    }

    let version = AnnotationVersion {
        author: el.req("annotator")?.to_string(),
        accepted: el.parse("accepted")?,
        tokens: anns,
    };
    corpus
        .add_unit(unit)
        .map_err(|e| el.schema(e.to_string()))?;
    corpus
        .add_version(&id, version)
        .map_err(|e| el.schema(e.to_string()))?;
    Ok(())
}

fn read_token(el: &Element, text: &str, expected_index: usize) -> Result<(Token, TokenAnnotation)> {
    el.allow_attrs(&[
        "index",
        "start",
        "end",
        "surface",
        "cs",
        "pos",
        "typo",
        "origin",
        "confirmed",
    ])?;
    el.no_text()?;
    let index: usize = el.parse("index")?;
    if index != expected_index {
        return Err(Error::Schema {
            path: format!("{}@index", el.path),
            reason: format!("expected {expected_index}"),
        });
    }
    let span = Span::new(el.parse("start")?, el.parse("end")?);
    let surface = el.req("surface")?.to_string();
    if span.slice(text) != Some(surface.as_str()) {
        return Err(Error::Schema {
            path: format!("{}@surface", el.path),
            reason: "does not match the text span".into(),
        });
    }
    let mut morphemes = Vec::new();
    for m in &el.children {
        if m.name != "morpheme" {
            return Err(m.schema("expected morpheme element"));
        }
        m.allow_attrs(&["start", "end", "lang"])?;
        m.no_children()?;
        morphemes.push(Morpheme {
            span: Span::new(m.parse("start")?, m.parse("end")?),
            lang: m.parse::<MorphemeLang>("lang")?,
        });
    }
    let ann = TokenAnnotation {
        cs: Some(el.parse::<CsTag>("cs")?),
        pos: Some(el.parse::<PosTag>("pos")?),
        typo: el.parse::<TypoTag>("typo")?,
        origin: el.parse::<Origin>("origin")?,
        confirmed: el.parse("confirmed")?,
        morphemes: (!morphemes.is_empty()).then_some(morphemes),
    };
    let token = Token {
        surface,
        index,
        span,
    };
    if let Some(v) = validate_annotation(&token, &ann).first() {
        return Err(Error::InvalidAnnotation {
            path: el.path.clone(),
            reason: v.message.clone(),
        });
    }
    Ok((token, ann))
}
