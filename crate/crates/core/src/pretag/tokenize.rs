use std::sync::OnceLock;

use regex::Regex;

use crate::tagschema::{Span, Token};

/// Emoticon inventory, version 1. Matched as whole strings.
pub const EMOTICONS_V1: &[&str] = &[
    ":)", ":-)", ":(", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P", ":p", ":-p", ":'(", ":O",
    ":o", ":-O", ":/", ":-/", ":|", ":-|", ":*", ":-*", "<3", "</3", "xD", "XD", "^_^", "^^",
    "-_-", "o_O", "O_o", "T_T", ":3", "B)", "8)", "=)", "=(", ":))", ":((", ":)))", "(:", "):",
];

pub(crate) fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"(?i)(?:(?:https?|ftp)://|www\.)[^\s]*[^\s.,;:!?'")\]}>«»،؛؟…]|[a-z0-9._%+\-]+@[a-z0-9\-]+(?:\.[a-z0-9\-]+)*\.[a-z]{2,}"#,
        )
        .unwrap()
    })
}

pub(crate) fn is_url_or_email(s: &str) -> bool {
    url_regex()
        .find(s)
        .is_some_and(|m| m.start() == 0 && m.end() == s.len())
}

pub(crate) fn is_emoticon(s: &str) -> bool {
    EMOTICONS_V1.contains(&s)
}

pub(crate) fn is_emoji(c: char) -> bool {
    matches!(
        c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2B05..=0x2B55 | 0x3030 | 0x303D | 0x3297 | 0x3299 | 0x200D | 0xFE0F
    )
}

pub(crate) fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '،' | '؛'
                | '؟'
                | '٪'
                | '٫'
                | '٬'
                | '۔'
                | '«'
                | '»'
                | '…'
                | '“'
                | '”'
                | '‘'
                | '’'
                | '‚'
                | '„'
                | '–'
                | '—'
                | '•'
                | '·'
                | '¡'
                | '¿'
                | '§'
                | '¶'
                | '°'
                | '‹'
                | '›'
                | '﴾'
                | '﴿'
        )
        || matches!(c as u32, 0x2010..=0x2027 | 0x2030..=0x205E | 0x3001..=0x3003 | 0x3008..=0x3011)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Detach {
    Punct,
    Emoji,
}

fn detach_class(c: char) -> Option<Detach> {
    if is_emoji(c) {
        Some(Detach::Emoji)
    } else if is_punct(c) {
        Some(Detach::Punct)
    } else {
        None
    }
}

struct Emitter<'a> {
    text: &'a str,
    tokens: Vec<Token>,
}

impl Emitter<'_> {
    fn push(&mut self, start: usize, end: usize, byte_start: usize, byte_end: usize) {
        if start == end {
            return;
        }
        let index = self.tokens.len();
        self.tokens.push(Token {
            surface: self.text[byte_start..byte_end].to_string(),
            index,
            span: Span::new(start, end),
        });
    }
}

/// Splits cleaned text into tokens.
///
/// Whitespace separates chunks. Inside a chunk, URLs, e-mail addresses and
/// listed emoticons are kept whole; leading and trailing punctuation or
/// emoji runs are detached into their own tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut em = Emitter {
        text,
        tokens: Vec::new(),
    };
    // (char offset, byte offset) for each char, plus an end sentinel
    let offsets: Vec<(usize, usize)> = text
        .char_indices()
        .enumerate()
        .map(|(ci, (bi, _))| (ci, bi))
        .chain(std::iter::once((text.chars().count(), text.len())))
        .collect();
    let chars: Vec<char> = text.chars().collect();

    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        chunk(&mut em, &chars, &offsets, start, i);
    }
    em.tokens
}

fn chunk(
    em: &mut Emitter<'_>,
    chars: &[char],
    offsets: &[(usize, usize)],
    start: usize,
    end: usize,
) {
    let bstart = offsets[start].1;
    let bend = offsets[end].1;
    let s = &em.text[bstart..bend];
    let char_at = |byte: usize| -> usize { start + s[..byte].chars().count() };

    let mut protected: Vec<(usize, usize)> = url_regex()
        .find_iter(s)
        .map(|m| (char_at(m.start()), char_at(m.end())))
        .collect();

    // emoticons in the gaps between URLs, bounded by non-alphanumerics
    let mut gaps = Vec::new();
    let mut cursor = start;
    for &(ps, pe) in &protected {
        gaps.push((cursor, ps));
        cursor = pe;
    }
    gaps.push((cursor, end));
    for (gs, ge) in gaps {
        let mut k = gs;
        while k < ge {
            let mut best = None;
            for emo in EMOTICONS_V1 {
                let n = emo.chars().count();
                if k + n <= ge && chars[k..k + n].iter().copied().eq(emo.chars()) {
                    let before_ok = k == gs || !chars[k - 1].is_alphanumeric();
                    let after_ok = k + n == ge || !chars[k + n].is_alphanumeric();
                    if before_ok && after_ok && best.is_none_or(|b| n > b) {
                        best = Some(n);
                    }
                }
            }
            if let Some(n) = best {
                protected.push((k, k + n));
                k += n;
            } else {
                k += 1;
            }
        }
    }
    protected.sort_unstable();

    let mut cursor = start;
    for (ps, pe) in protected {
        plain(em, chars, offsets, cursor, ps);
        em.push(ps, pe, offsets[ps].1, offsets[pe].1);
        cursor = pe;
    }
    plain(em, chars, offsets, cursor, end);
}

/// A segment without protected patterns.
fn plain(
    em: &mut Emitter<'_>,
    chars: &[char],
    offsets: &[(usize, usize)],
    start: usize,
    end: usize,
) {
    if start >= end {
        return;
    }
    let mut lead = start;
    while lead < end && detach_class(chars[lead]).is_some() {
        lead += 1;
    }
    if lead == end {
        runs(em, chars, offsets, start, end);
        return;
    }
    let mut trail = end;
    while trail > lead && detach_class(chars[trail - 1]).is_some() {
        trail -= 1;
    }
    runs(em, chars, offsets, start, lead);
    em.push(lead, trail, offsets[lead].1, offsets[trail].1);
    runs(em, chars, offsets, trail, end);
}

/// Emits maximal same-class runs of detachable characters.
fn runs(
    em: &mut Emitter<'_>,
    chars: &[char],
    offsets: &[(usize, usize)],
    start: usize,
    end: usize,
) {
    let mut k = start;
    while k < end {
        let class = detach_class(chars[k]);
        let run_start = k;
        while k < end && detach_class(chars[k]) == class {
            k += 1;
        }
        em.push(run_start, k, offsets[run_start].1, offsets[k].1);
    }
}
