//! A flat USFM tokenizer.
//!
//! A document is a sequence of markers, each carrying the raw text that
//! follows it up to the next marker. Closing markers (`\add*`) are elements
//! of their own, so text after a character span hangs off its closing marker.

use crate::book::BookId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsfmElement {
    /// Marker name without the backslash, `+` prefix or `*` suffix.
    pub marker: String,
    pub closing: bool,
    /// Nested character style (`\+nd`).
    pub nested: bool,
    /// Chapter or verse number, book code, or note caller.
    pub param: Option<String>,
    /// Attributes given after `|` inside a character span.
    pub attributes: Vec<(String, String)>,
    pub text: String,
}

impl UsfmElement {
    fn new(marker: &str, closing: bool, nested: bool) -> UsfmElement {
        UsfmElement {
            marker: marker.to_string(),
            closing,
            nested,
            param: None,
            attributes: Vec::new(),
            text: String::new(),
        }
    }

    /// Verse span of a `\v` element, segment letters ignored.
    pub fn verse_span(&self) -> Option<(u16, u16)> {
        if self.marker != "v" || self.closing {
            return None;
        }
        parse_verse_param(self.param.as_deref()?).map(|(a, b, _)| (a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsfmDocument {
    pub book: BookId,
    pub elements: Vec<UsfmElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UsfmError {
    #[error("invalid UTF-8 at byte {offset}")]
    Encoding { offset: usize },
    #[error("no \\id marker")]
    MissingBookId,
    #[error("unknown book code {code:?} at byte {offset}")]
    UnknownBook { code: String, offset: usize },
    #[error("malformed marker at byte {offset}: {message}")]
    MalformedMarker { offset: usize, message: String },
    #[error("{what} out of order at byte {offset}")]
    OutOfOrder { what: &'static str, offset: usize },
}

const PARAM_MARKERS: [&str; 9] = ["id", "c", "v", "f", "fe", "ef", "x", "ex", "ca"];

/// Parse `N`, `N-M`, `Na`, `N-Mb`. Returns (start, end, has_segment).
fn parse_verse_param(p: &str) -> Option<(u16, u16, bool)> {
    let num = |s: &str| -> Option<(u16, bool)> {
        let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
        let rest = &s[digits.len()..];
        if digits.is_empty() || !rest.chars().all(|c| c.is_ascii_alphabetic()) {
            return None;
        }
        Some((digits.parse().ok()?, !rest.is_empty()))
    };
    match p.split_once('-') {
        Some((a, b)) => {
            let (a, sa) = num(a)?;
            let (b, sb) = num(b)?;
            (a <= b).then_some((a, b, sa || sb))
        }
        None => num(p).map(|(a, s)| (a, a, s)),
    }
}

fn parse_attributes(marker: &str, raw: &str) -> Vec<(String, String)> {
    let raw = raw.trim();
    if !raw.contains('=') {
        let key = if marker == "w" { "lemma" } else { "default" };
        return vec![(key.to_string(), raw.to_string())];
    }
    let mut out = Vec::new();
    let mut rest = raw;
    while let Some(eq) = rest.find('=') {
        let key = rest[..eq].trim().to_string();
        let after = rest[eq + 1..].trim_start();
        let Some(body) = after.strip_prefix('"') else { break };
        let Some(close) = body.find('"') else { break };
        out.push((key, body[..close].to_string()));
        rest = &body[close + 1..];
    }
    out
}

/// Split a multi-book file at each line starting with `\id `. Bytes before
/// the first marker are dropped.
pub fn split_books(input: &[u8]) -> Vec<&[u8]> {
    let mut starts = Vec::new();
    let mut at_line_start = true;
    for (i, &b) in input.iter().enumerate() {
        if at_line_start && input[i..].starts_with(b"\\id ") {
            starts.push(i);
        }
        at_line_start = b == b'\n';
    }
    starts.push(input.len());
    starts.windows(2).map(|w| &input[w[0]..w[1]]).collect()
}

/// Tokenize a USFM book. Errors carry byte offsets into `input`.
pub fn parse_usfm(input: &[u8]) -> Result<UsfmDocument, UsfmError> {
    let text = std::str::from_utf8(input).map_err(|e| UsfmError::Encoding {
        offset: e.valid_up_to(),
    })?;
    let (text, base) = match text.strip_prefix('\u{feff}') {
        Some(t) => (t, 3),
        None => (text, 0),
    };
    let bytes = text.as_bytes();
    let mut elements: Vec<UsfmElement> = Vec::new();
    let mut book = None;
    let mut chapter = 0u16;
    let mut last_verse: Option<(u16, bool)> = None;
    let mut pos = 0;
    while pos < bytes.len() {
        let next = text[pos..].find('\\').map_or(bytes.len(), |i| pos + i);
        if next > pos {
            if let Some(el) = elements.last_mut() {
                el.text.push_str(&text[pos..next]);
            }
        }
        if next >= bytes.len() {
            break;
        }
        let offset = base + next;
        let mut i = next + 1;
        let nested = bytes.get(i) == Some(&b'+');
        if nested {
            i += 1;
        }
        let name_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
            i += 1;
        }
        let name = &text[name_start..i];
        let closing = bytes.get(i) == Some(&b'*');
        if closing {
            i += 1;
        }
        if name.is_empty() {
            if closing {
                // `\*` ends a milestone. Attributes before it belong to the
                // milestone; text after it is ordinary content.
                if let Some(open) = elements.last_mut() {
                    if !open.closing {
                        if let Some(bar) = open.text.rfind('|') {
                            open.attributes = parse_attributes(&open.marker, &open.text[bar + 1..]);
                            open.text.truncate(bar);
                        }
                    }
                }
                elements.push(UsfmElement::new("", true, false));
                pos = i;
                continue;
            }
            return Err(UsfmError::MalformedMarker {
                offset,
                message: "backslash not followed by a marker name".into(),
            });
        }
        if !name.as_bytes()[0].is_ascii_alphabetic() {
            return Err(UsfmError::MalformedMarker {
                offset,
                message: format!("marker name {name:?} must start with a letter"),
            });
        }
        if closing {
            if let Some(open) = elements.last_mut() {
                if !open.closing && open.marker == name {
                    if let Some(bar) = open.text.rfind('|') {
                        open.attributes = parse_attributes(name, &open.text[bar + 1..]);
                        open.text.truncate(bar);
                    }
                }
            }
            elements.push(UsfmElement::new(name, true, nested));
            pos = i;
            continue;
        }
        if i < bytes.len() && (bytes[i] as char).is_ascii_whitespace() {
            i += 1;
        }
        let mut el = UsfmElement::new(name, false, nested);
        if PARAM_MARKERS.contains(&name) {
            while i < bytes.len() && bytes[i] == b' ' {
                i += 1;
            }
            let start = i;
            while i < bytes.len() && !(bytes[i] as char).is_ascii_whitespace() && bytes[i] != b'\\' {
                i += 1;
            }
            let param = &text[start..i];
            if param.is_empty() {
                return Err(UsfmError::MalformedMarker {
                    offset,
                    message: format!("\\{name} needs a parameter"),
                });
            }
            if i < bytes.len() && (bytes[i] as char).is_ascii_whitespace() {
                i += 1;
            }
            match name {
                "id" => {
                    if book.is_some() {
                        return Err(UsfmError::MalformedMarker {
                            offset,
                            message: "second \\id marker".into(),
                        });
                    }
                    book = Some(BookId::from_code(param).map_err(|_| UsfmError::UnknownBook {
                        code: param.to_string(),
                        offset,
                    })?);
                }
                "c" => {
                    let c: u16 = param.parse().map_err(|_| UsfmError::MalformedMarker {
                        offset,
                        message: format!("bad chapter number {param:?}"),
                    })?;
                    if c == 0 || c <= chapter {
                        return Err(UsfmError::OutOfOrder { what: "chapter", offset });
                    }
                    chapter = c;
                    last_verse = None;
                }
                "v" => {
                    let (start, end, seg) =
                        parse_verse_param(param).ok_or_else(|| UsfmError::MalformedMarker {
                            offset,
                            message: format!("bad verse number {param:?}"),
                        })?;
                    if chapter == 0 {
                        return Err(UsfmError::OutOfOrder { what: "verse before chapter", offset });
                    }
                    let continues = matches!(last_verse, Some((prev, prev_seg)) if seg && prev_seg && start == prev);
                    if start == 0 || (!continues && last_verse.is_some_and(|(prev, _)| start <= prev)) {
                        return Err(UsfmError::OutOfOrder { what: "verse", offset });
                    }
                    last_verse = Some((end, seg));
                }
                _ => {}
            }
            el.param = Some(param.to_string());
        }
        if book.is_none() && name != "id" {
            return Err(UsfmError::MissingBookId);
        }
        elements.push(el);
        pos = i;
    }
    Ok(UsfmDocument {
        book: book.ok_or(UsfmError::MissingBookId)?,
        elements,
    })
}

impl UsfmDocument {
    /// Render back to USFM. Parsing the result yields an equal document.
    pub fn to_usfm(&self) -> String {
        let mut out = String::new();
        for el in &self.elements {
            out.push('\\');
            if el.nested {
                out.push('+');
            }
            out.push_str(&el.marker);
            if el.closing {
                out.push('*');
            } else {
                out.push(' ');
                if let Some(p) = &el.param {
                    out.push_str(p);
                    out.push(' ');
                }
            }
            out.push_str(&el.text);
            if !el.attributes.is_empty() {
                out.push('|');
                let attrs: Vec<String> = el
                    .attributes
                    .iter()
                    .map(|(k, v)| format!("{k}=\"{v}\""))
                    .collect();
                out.push_str(&attrs.join(" "));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundles_split_at_id_lines() {
        let b = b"junk\n\\id GEN\n\\c 1\n\\id EXO x\n\\v 1 a \\id no\n";
        let parts = split_books(b);
        assert_eq!(parts.len(), 2);
        assert!(parts[0].starts_with(b"\\id GEN"));
        assert!(parts[1].ends_with(b"\\id no\n"));
        assert!(split_books(b"none").is_empty());
    }

    #[test]
    fn basic_structure() {
        let doc = parse_usfm(b"\\id GEN test\n\\c 1\n\\p\n\\v 1 In the beginning\n\\v 2 And\n").unwrap();
        assert_eq!(doc.book, BookId::from_code("GEN").unwrap());
        let verses: Vec<_> = doc.elements.iter().filter_map(|e| e.verse_span()).collect();
        assert_eq!(verses, vec![(1, 1), (2, 2)]);
        let v1 = doc.elements.iter().find(|e| e.marker == "v").unwrap();
        assert_eq!(v1.text, "In the beginning\n");
    }

    #[test]
    fn word_attributes_split() {
        let doc = parse_usfm(b"\\id JHN\n\\c 1\n\\v 1 \\w grace|lemma=\"charis\" strong=\"G5485\"\\w* end").unwrap();
        let w = doc.elements.iter().find(|e| e.marker == "w" && !e.closing).unwrap();
        assert_eq!(w.text, "grace");
        assert_eq!(w.attributes[0], ("lemma".to_string(), "charis".to_string()));
        assert_eq!(w.attributes[1].0, "strong");
        let close = doc.elements.iter().find(|e| e.marker == "w" && e.closing).unwrap();
        assert_eq!(close.text, " end");
    }

    #[test]
    fn pipe_outside_span_is_text() {
        let doc = parse_usfm("\\id MAT\n\\c 1\n\\v 1 एक | दो\n".as_bytes()).unwrap();
        assert!(doc.elements.last().unwrap().text.contains('|'));
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse_usfm(b"\\c 1\n"), Err(UsfmError::MissingBookId));
        assert_eq!(
            parse_usfm(b"\\id GEN\n\\c 1\n\\v 1 a \\ b"),
            Err(UsfmError::MalformedMarker {
                offset: 20,
                message: "backslash not followed by a marker name".into()
            })
        );
        assert!(matches!(parse_usfm(b"\\id GEN\n\\c 2\n\\c 1\n"), Err(UsfmError::OutOfOrder { offset: 13, .. })));
        assert!(matches!(parse_usfm(b"\\id GEN\n\\c 1\n\\v 2 a\n\\v 2 b"), Err(UsfmError::OutOfOrder { .. })));
        assert!(matches!(parse_usfm(b"\\id QQQ\n"), Err(UsfmError::UnknownBook { offset: 0, .. })));
        assert_eq!(parse_usfm(b"\\id GEN \xff"), Err(UsfmError::Encoding { offset: 8 }));
    }

    #[test]
    fn segments_and_ranges() {
        let doc = parse_usfm(b"\\id GEN\n\\c 1\n\\v 1a x \\v 1b y \\v 2-3 z").unwrap();
        let spans: Vec<_> = doc.elements.iter().filter_map(|e| e.verse_span()).collect();
        assert_eq!(spans, vec![(1, 1), (1, 1), (2, 3)]);
    }

    #[test]
    fn milestones_are_ignored() {
        let doc = parse_usfm(b"\\id GEN\n\\c 1\n\\v 1 a \\qt-s |who=\"x\"\\* b \\qt-e\\* c").unwrap();
        let ms = doc.elements.iter().find(|e| e.marker == "qt-s").unwrap();
        assert_eq!(ms.attributes, vec![("who".to_string(), "x".to_string())]);
        assert_eq!(ms.text, "");
        assert_eq!(parse_usfm(doc.to_usfm().as_bytes()).unwrap(), doc);
    }

    #[test]
    fn serialization_round_trips() {
        let src = "\\id PSA x\n\\c 3\n\\d A psalm \\add of\\add* David\n\\q1\n\\v 1 Lord \\f + \\fr 3.1 \\ft note\\f* how\n\\v 2-3 \\+nd many\\+nd*\n";
        let doc = parse_usfm(src.as_bytes()).unwrap();
        assert_eq!(parse_usfm(doc.to_usfm().as_bytes()).unwrap(), doc);
    }
}
