//! Verse-per-line extracts aligned to the canonical index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::book::{BookId, CanonSection};
use crate::usfm::{UsfmDocument, UsfmElement};
use crate::versification::{CanonicalIndex, VerseRef, VersificationTable};

/// Text of a line that continues a verse range started on an earlier line.
pub const RANGE_MARKER: &str = "<range>";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtractLine {
    Text(String),
    Range,
    Empty,
}

impl ExtractLine {
    pub fn is_text(&self) -> bool {
        matches!(self, ExtractLine::Text(_))
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ExtractLine::Empty)
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            ExtractLine::Text(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for ExtractLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractLine::Text(t) => f.write_str(t),
            ExtractLine::Range => f.write_str(RANGE_MARKER),
            ExtractLine::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractFile {
    pub translation_id: String,
    pub lines: Vec<ExtractLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("book {0} supplied twice")]
    DuplicateBook(BookId),
    #[error("extract has {actual} lines, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("book {book} is not part of the {scheme} scheme")]
    BookNotInScheme { book: BookId, scheme: String },
    #[error("line {line}: text contains a line break or marker residue")]
    BadLine { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractWarning {
    pub verse: Option<VerseRef>,
    pub message: String,
}

impl fmt::Display for ExtractWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verse {
            Some(v) => write!(f, "{v}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl ExtractFile {
    pub fn empty(translation_id: &str, len: usize) -> ExtractFile {
        ExtractFile {
            translation_id: translation_id.to_string(),
            lines: vec![ExtractLine::Empty; len],
        }
    }

    /// File name for a translation id of the form `iso-edition`.
    pub fn file_name(translation_id: &str) -> String {
        format!("{translation_id}.txt")
    }

    /// LF-terminated lines, no byte-order mark.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(translation_id: &str, text: &str, expected_len: usize) -> Result<ExtractFile, ExtractError> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        let lines: Vec<ExtractLine> = if body.is_empty() && expected_len == 0 {
            Vec::new()
        } else {
            body.split('\n')
                .map(|l| match l {
                    "" => ExtractLine::Empty,
                    RANGE_MARKER => ExtractLine::Range,
                    t => ExtractLine::Text(t.to_string()),
                })
                .collect()
        };
        if lines.len() != expected_len {
            return Err(ExtractError::LengthMismatch {
                expected: expected_len,
                actual: lines.len(),
            });
        }
        Ok(ExtractFile {
            translation_id: translation_id.to_string(),
            lines,
        })
    }

    pub fn nonempty_count(&self) -> usize {
        self.lines.iter().filter(|l| !l.is_empty()).count()
    }

    pub fn get(&self, index: &CanonicalIndex, r: &VerseRef) -> Option<&ExtractLine> {
        index.position(r).and_then(|i| self.lines.get(i))
    }
}

fn base_name(marker: &str) -> &str {
    marker.trim_end_matches(|c: char| c.is_ascii_digit())
}

/// Spans whose content never belongs to verse text.
const NOTE_SPANS: [&str; 11] = ["f", "fe", "ef", "x", "ex", "fig", "rq", "ca", "va", "vp", "cat"];

/// Paragraph markers whose text is not verse text.
const NON_TEXT_PARAGRAPHS: [&str; 38] = [
    "id", "ide", "h", "toc", "toca", "mt", "mte", "ms", "mr", "s", "sr", "r", "d", "sp", "cl", "cd",
    "rem", "sts", "usfm", "restore", "lit", "iex", "imt", "imte", "is", "ip", "ipi", "ipq", "ipr",
    "im", "imi", "imq", "iq", "ib", "ili", "iot", "io", "ie",
];

/// Character styles whose content is kept.
const CHAR_STYLES: [&str; 55] = [
    "add", "bk", "dc", "k", "nd", "ord", "pn", "png", "addpn", "qt", "sig", "sls", "tl", "wj", "em",
    "bd", "it", "bdit", "no", "sc", "sup", "w", "wg", "wh", "wa", "rb", "pro", "jmp", "ndx", "lik",
    "liv", "litl", "qs", "qac", "xt", "fr", "ft", "fq", "fqa", "fk", "fl", "fw", "fp", "fv", "fdc",
    "xo", "xk", "xq", "xta", "xop", "xot", "xnt", "xdc", "periph", "cp",
];

fn is_milestone(marker: &str) -> bool {
    marker.is_empty() || marker.ends_with("-s") || marker.ends_with("-e")
}

fn is_char_like(marker: &str) -> bool {
    CHAR_STYLES.contains(&marker) || is_milestone(marker)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct SegmentKey {
    chapter: u16,
    start: u16,
    end: u16,
}

/// Collapse runs of whitespace and USFM spacing conventions to single spaces.
pub fn collapse_whitespace(s: &str) -> String {
    s.replace("//", " ")
        .replace('~', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Group a document's verse text by verse marker, in document order.
fn collect_segments(doc: &UsfmDocument, table: &VersificationTable) -> Vec<(SegmentKey, String)> {
    let mut segments: Vec<(SegmentKey, String)> = Vec::new();
    let mut chapter = 0u16;
    let mut current: Option<usize> = None;
    let mut in_note: Option<&str> = None;
    let mut skip_paragraph = false;

    let push_text = |segments: &mut Vec<(SegmentKey, String)>, current: Option<usize>, el: &UsfmElement| {
        if let Some(i) = current {
            segments[i].1.push_str(&el.text);
        }
    };

    for el in &doc.elements {
        let name = base_name(&el.marker);
        if let Some(note) = in_note {
            if el.closing && el.marker == note {
                in_note = None;
                if !skip_paragraph {
                    push_text(&mut segments, current, el);
                }
                continue;
            }
            let boundary = !el.closing && !is_char_like(name) && !NOTE_SPANS.contains(&name);
            if !boundary {
                continue;
            }
            in_note = None;
        }
        if el.closing {
            if !skip_paragraph {
                push_text(&mut segments, current, el);
            }
            continue;
        }
        match name {
            "c" => {
                chapter = el.param.as_deref().and_then(|p| p.parse().ok()).unwrap_or(chapter);
                current = None;
                skip_paragraph = false;
            }
            "v" => {
                skip_paragraph = false;
                current = el.verse_span().map(|(start, end)| {
                    let key = SegmentKey { chapter, start, end };
                    match segments.last() {
                        Some((k, _)) if *k == key => segments.len() - 1,
                        _ => {
                            segments.push((key, String::new()));
                            segments.len() - 1
                        }
                    }
                });
                push_text(&mut segments, current, el);
            }
            "d" if chapter > 0 && table.maps_title(doc.book, chapter) => {
                skip_paragraph = false;
                let key = SegmentKey { chapter, start: 0, end: 0 };
                segments.push((key, String::new()));
                current = Some(segments.len() - 1);
                push_text(&mut segments, current, el);
            }
            n if NOTE_SPANS.contains(&n) => in_note = Some(el.marker.as_str()),
            n if NON_TEXT_PARAGRAPHS.contains(&n) => skip_paragraph = true,
            n if is_char_like(n) => {
                if !skip_paragraph {
                    push_text(&mut segments, current, el);
                }
            }
            _ => {
                skip_paragraph = false;
                push_text(&mut segments, current, el);
            }
        }
    }
    segments
}

/// Every verse number a document declares, ranges expanded.
pub fn observed_verses(doc: &UsfmDocument) -> BTreeSet<VerseRef> {
    let mut out = BTreeSet::new();
    let mut chapter = 0u16;
    for el in &doc.elements {
        if el.closing {
            continue;
        }
        if el.marker == "c" {
            chapter = el.param.as_deref().and_then(|p| p.parse().ok()).unwrap_or(chapter);
        } else if let Some((a, b)) = el.verse_span() {
            out.extend((a..=b).map(|v| VerseRef::new(doc.book, chapter, v)));
        }
    }
    out
}

/// Line placements produced by one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractContribution {
    pub placements: Vec<(usize, ExtractLine)>,
    pub warnings: Vec<ExtractWarning>,
}

/// Place a document's verse text on canonical lines. The first verse of a
/// joined range carries the text and the rest become range lines; split
/// verses continue onto the following Original verses as range lines.
pub fn extract_verses(
    doc: &UsfmDocument,
    table: &VersificationTable,
    index: &CanonicalIndex,
) -> Result<ExtractContribution, ExtractError> {
    if !table.has_book(doc.book) {
        return Err(ExtractError::BookNotInScheme {
            book: doc.book,
            scheme: table.scheme().to_string(),
        });
    }
    let mut out = ExtractContribution::default();
    for (key, raw) in collect_segments(doc, table) {
        let text = collapse_whitespace(&raw);
        let mut placed_text = false;
        for v in key.start..=key.end {
            let sv = VerseRef::new(doc.book, key.chapter, v);
            if !table.contains(&sv) {
                out.warnings.push(ExtractWarning {
                    verse: Some(sv),
                    message: format!("not a verse of the {} scheme; dropped", table.scheme()),
                });
                continue;
            }
            let targets = table.original_targets(&sv, index);
            if targets.is_empty() {
                if !text.is_empty() {
                    out.warnings.push(ExtractWarning {
                        verse: Some(sv),
                        message: "no counterpart in the canonical index; dropped".into(),
                    });
                }
                continue;
            }
            if text.is_empty() {
                continue;
            }
            for t in targets {
                let line = index.position(&t).expect("targets are in the index");
                if placed_text {
                    out.placements.push((line, ExtractLine::Range));
                } else {
                    out.placements.push((line, ExtractLine::Text(text.clone())));
                    placed_text = true;
                }
            }
        }
    }
    Ok(out)
}

fn merge(slot: &mut ExtractLine, incoming: ExtractLine) {
    *slot = match (std::mem::replace(slot, ExtractLine::Empty), incoming) {
        (ExtractLine::Text(a), ExtractLine::Text(b)) => ExtractLine::Text(format!("{a} {b}")),
        (ExtractLine::Text(a), _) | (_, ExtractLine::Text(a)) => ExtractLine::Text(a),
        (ExtractLine::Range, _) | (_, ExtractLine::Range) => ExtractLine::Range,
        _ => ExtractLine::Empty,
    };
}

/// Assemble a full extract from a translation's books.
pub fn build_extract(
    translation_id: &str,
    documents: &[UsfmDocument],
    table: &VersificationTable,
    index: &CanonicalIndex,
) -> Result<(ExtractFile, Vec<ExtractWarning>), ExtractError> {
    let mut seen = BTreeSet::new();
    for doc in documents {
        if !seen.insert(doc.book) {
            return Err(ExtractError::DuplicateBook(doc.book));
        }
    }
    let mut file = ExtractFile::empty(translation_id, index.len());
    let mut warnings = Vec::new();
    for doc in documents {
        match extract_verses(doc, table, index) {
            Ok(c) => {
                for (line, value) in c.placements {
                    merge(&mut file.lines[line], value);
                }
                warnings.extend(c.warnings);
            }
            Err(e) => warnings.push(ExtractWarning {
                verse: None,
                message: format!("{e}; book skipped"),
            }),
        }
    }
    for i in 0..file.lines.len() {
        if file.lines[i] != ExtractLine::Range {
            continue;
        }
        let anchored = i > 0
            && !file.lines[i - 1].is_empty()
            && index.get(i - 1).map(|r| r.book) == index.get(i).map(|r| r.book);
        if !anchored {
            file.lines[i] = ExtractLine::Empty;
            warnings.push(ExtractWarning {
                verse: index.get(i),
                message: "range continuation without a preceding verse; left empty".into(),
            });
        }
    }
    if file.lines.len() != index.len() {
        return Err(ExtractError::LengthMismatch {
            expected: index.len(),
            actual: file.lines.len(),
        });
    }
    Ok((file, warnings))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationMeta {
    pub id: String,
    pub family: String,
    pub country: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionCounts {
    pub ot: usize,
    pub nt: usize,
    pub dt: usize,
}

impl SectionCounts {
    pub fn total(&self) -> usize {
        self.ot + self.nt + self.dt
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_translation: BTreeMap<String, SectionCounts>,
    pub by_family: BTreeMap<String, usize>,
    pub by_country: BTreeMap<String, usize>,
}

/// Non-empty verse counts per section, and translation tallies by family and
/// country for translations that have metadata.
pub fn corpus_stats(
    extracts: &[&ExtractFile],
    metadata: &BTreeMap<String, TranslationMeta>,
    index: &CanonicalIndex,
) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for ex in extracts {
        let mut counts = SectionCounts::default();
        for (i, line) in ex.lines.iter().enumerate() {
            if line.is_empty() {
                continue;
            }
            match index.get(i).map(|r| r.book.section()) {
                Some(CanonSection::OldTestament) => counts.ot += 1,
                Some(CanonSection::NewTestament) => counts.nt += 1,
                Some(CanonSection::Deuterocanon) => counts.dt += 1,
                None => {}
            }
        }
        stats.per_translation.insert(ex.translation_id.clone(), counts);
        if let Some(meta) = metadata.get(&ex.translation_id) {
            *stats.by_family.entry(meta.family.clone()).or_default() += 1;
            *stats.by_country.entry(meta.country.clone()).or_default() += 1;
        }
    }
    stats
}
