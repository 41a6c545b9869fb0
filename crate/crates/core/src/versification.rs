//! Versification tables, the canonical verse index and verse mapping.
//!
//! Tables use the Paratext `.vrs` line format. Mapping lines read
//! `SCHEME-SIDE = ORIGINAL-SIDE`; the Original table itself never remaps.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::book::{BookId, CanonSection};

/// Number of lines in the canonical index.
pub const CANONICAL_LEN: usize = 41_899;
/// Number of New Testament lines in the canonical index.
pub const NT_LEN: usize = 7_957;

/// A verse position. Verse 0 is the title slot of a chapter and only exists
/// where a table maps it explicitly.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VerseRef {
    pub book: BookId,
    pub chapter: u16,
    pub verse: u16,
}

impl VerseRef {
    pub fn new(book: BookId, chapter: u16, verse: u16) -> VerseRef {
        VerseRef { book, chapter, verse }
    }
}

impl fmt::Display for VerseRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}:{}", self.book, self.chapter, self.verse)
    }
}

impl fmt::Debug for VerseRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed verse reference {0:?}")]
pub struct BadVerseRef(pub String);

impl FromStr for VerseRef {
    type Err = BadVerseRef;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadVerseRef(s.to_string());
        let (book, cv) = s.trim().split_once(' ').ok_or_else(bad)?;
        let (c, v) = cv.trim().split_once(':').ok_or_else(bad)?;
        Ok(VerseRef {
            book: BookId::from_code(book).map_err(|_| bad())?,
            chapter: c.parse().map_err(|_| bad())?,
            verse: v.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for VerseRef {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VerseRef {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VersificationScheme {
    Original,
    English,
    RussianProtestant,
    RussianOrthodox,
    Septuagint,
    Vulgate,
}

impl VersificationScheme {
    /// All schemes, in the order used to break inference ties.
    pub const PRIORITY: [VersificationScheme; 6] = [
        VersificationScheme::English,
        VersificationScheme::Original,
        VersificationScheme::RussianProtestant,
        VersificationScheme::RussianOrthodox,
        VersificationScheme::Septuagint,
        VersificationScheme::Vulgate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VersificationScheme::Original => "Original",
            VersificationScheme::English => "English",
            VersificationScheme::RussianProtestant => "RussianProtestant",
            VersificationScheme::RussianOrthodox => "RussianOrthodox",
            VersificationScheme::Septuagint => "Septuagint",
            VersificationScheme::Vulgate => "Vulgate",
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            VersificationScheme::Original => "org",
            VersificationScheme::English => "eng",
            VersificationScheme::RussianProtestant => "rsc",
            VersificationScheme::RussianOrthodox => "rso",
            VersificationScheme::Septuagint => "lxx",
            VersificationScheme::Vulgate => "vul",
        }
    }

    /// Text of the bundled `.vrs` table.
    pub fn bundled_text(self) -> &'static str {
        match self {
            VersificationScheme::Original => include_str!("../data/versification/org.vrs"),
            VersificationScheme::English => include_str!("../data/versification/eng.vrs"),
            VersificationScheme::RussianProtestant => {
                include_str!("../data/versification/rsc.vrs")
            }
            VersificationScheme::RussianOrthodox => include_str!("../data/versification/rso.vrs"),
            VersificationScheme::Septuagint => include_str!("../data/versification/lxx.vrs"),
            VersificationScheme::Vulgate => include_str!("../data/versification/vul.vrs"),
        }
    }

    fn slot(self) -> usize {
        Self::PRIORITY.iter().position(|s| *s == self).unwrap()
    }
}

impl fmt::Display for VersificationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VersificationScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '-', ' '], "");
        Self::PRIORITY
            .iter()
            .copied()
            .find(|sc| sc.name().to_ascii_lowercase() == key || sc.file_stem() == key)
            .ok_or_else(|| format!("unknown versification scheme {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VersificationError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown book code {code:?}")]
    UnknownBook { line: usize, code: String },
    #[error("line {line}: {verse} is already mapped by line {first_line}")]
    OverlappingMapping {
        line: usize,
        verse: VerseRef,
        first_line: usize,
    },
    #[error("canonical index has {actual} entries, expected {expected}; per-book deltas: {}", format_deltas(.deltas))]
    IndexLength {
        expected: usize,
        actual: usize,
        deltas: Vec<(BookId, i64)>,
    },
    #[error("the canonical index must be built from the Original table, not {0}")]
    NotOriginal(VersificationScheme),
    #[error("{verse} is not a valid verse under {scheme}")]
    InvalidRef {
        verse: VerseRef,
        scheme: VersificationScheme,
    },
    #[error("no candidate versification tables")]
    NoCandidates,
}

fn format_deltas(deltas: &[(BookId, i64)]) -> String {
    deltas
        .iter()
        .map(|(b, d)| format!("{b} {d:+}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// How conflicting mapping lines are treated while loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MappingPolicy {
    /// Overlapping claims, reversed ranges and ranges of unequal length are
    /// rejected.
    #[default]
    Strict,
    /// The first line claiming a verse wins; later claims become secondary
    /// targets. Malformed ranges are skipped with a warning.
    FirstClaim,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

/// A contiguous verse span within one chapter, segment suffixes removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerseSpan {
    pub book: BookId,
    pub chapter: u16,
    pub start: u16,
    pub end: u16,
}

impl VerseSpan {
    fn verses(&self) -> impl Iterator<Item = VerseRef> + '_ {
        (self.start..=self.end).map(|v| VerseRef::new(self.book, self.chapter, v))
    }

    fn len(&self) -> usize {
        (self.end - self.start) as usize + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingLine {
    pub line: usize,
    pub scheme_side: VerseSpan,
    pub original_side: VerseSpan,
}

#[derive(Debug, Clone)]
pub struct VersificationTable {
    scheme: VersificationScheme,
    extents: BTreeMap<BookId, Vec<u16>>,
    excluded: BTreeSet<VerseRef>,
    mapping_lines: Vec<MappingLine>,
    forward: HashMap<VerseRef, Vec<VerseRef>>,
    forward_line: HashMap<VerseRef, usize>,
    reverse: HashMap<VerseRef, VerseRef>,
    reverse_line: HashMap<VerseRef, usize>,
    warnings: Vec<LoadWarning>,
}

/// Parse a `.vrs` table with strict mapping checks.
pub fn load_versification_table(
    text: &str,
    scheme: VersificationScheme,
) -> Result<VersificationTable, VersificationError> {
    VersificationTable::parse(text, scheme, MappingPolicy::Strict)
}

/// One of the bundled tables. These follow Paratext conventions, which
/// include split-verse and duplicate claims, so they load first-claim.
pub fn builtin_table(scheme: VersificationScheme) -> &'static VersificationTable {
    static TABLES: OnceLock<Vec<VersificationTable>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        VersificationScheme::PRIORITY
            .iter()
            .map(|s| {
                VersificationTable::parse(s.bundled_text(), *s, MappingPolicy::FirstClaim)
                    .expect("bundled versification table is well formed")
            })
            .collect()
    });
    &tables[scheme.slot()]
}

/// The canonical index built from the bundled Original table.
pub fn builtin_index() -> &'static CanonicalIndex {
    static INDEX: OnceLock<CanonicalIndex> = OnceLock::new();
    INDEX.get_or_init(|| {
        canonical_index(builtin_table(VersificationScheme::Original))
            .expect("bundled Original table yields the canonical index")
    })
}

fn parse_book(token: &str, line: usize) -> Result<BookId, VersificationError> {
    BookId::from_code(token).map_err(|_| VersificationError::UnknownBook {
        line,
        code: token.to_string(),
    })
}

fn parse_num(s: &str, line: usize, what: &str) -> Result<u16, VersificationError> {
    s.parse().map_err(|_| VersificationError::Parse {
        line,
        message: format!("bad {what} {s:?}"),
    })
}

/// Parse `BOOK C:V[seg][-V[seg]]`.
fn parse_span(text: &str, line: usize) -> Result<VerseSpan, VersificationError> {
    let text = text.trim();
    let err = |m: &str| VersificationError::Parse {
        line,
        message: format!("{m} in {text:?}"),
    };
    let (book, rest) = text
        .split_once(char::is_whitespace)
        .ok_or_else(|| err("missing chapter and verse"))?;
    let book = parse_book(book, line)?;
    let (chapter, verses) = rest.trim().split_once(':').ok_or_else(|| err("missing ':'"))?;
    let chapter = parse_num(chapter.trim(), line, "chapter")?;
    let strip = |v: &str| v.trim().trim_end_matches(|c: char| c.is_ascii_lowercase()).to_string();
    let (start, end) = match verses.split_once('-') {
        Some((a, b)) => (strip(a), strip(b)),
        None => (strip(verses), strip(verses)),
    };
    Ok(VerseSpan {
        book,
        chapter,
        start: parse_num(&start, line, "verse")?,
        end: parse_num(&end, line, "verse")?,
    })
}

impl VersificationTable {
    pub fn parse(
        text: &str,
        scheme: VersificationScheme,
        policy: MappingPolicy,
    ) -> Result<VersificationTable, VersificationError> {
        let mut table = VersificationTable {
            scheme,
            extents: BTreeMap::new(),
            excluded: BTreeSet::new(),
            mapping_lines: Vec::new(),
            forward: HashMap::new(),
            forward_line: HashMap::new(),
            reverse: HashMap::new(),
            reverse_line: HashMap::new(),
            warnings: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(rest) = content.strip_prefix('-') {
                let span = parse_span(rest, line)?;
                if span.start > span.end {
                    return Err(VersificationError::Parse {
                        line,
                        message: "reversed excluded-verse range".into(),
                    });
                }
                table.excluded.extend(span.verses());
            } else if let Some((left, right)) = content.split_once('=') {
                let scheme_side = parse_span(left, line)?;
                let original_side = parse_span(right, line)?;
                table.mapping_lines.push(MappingLine {
                    line,
                    scheme_side,
                    original_side,
                });
            } else {
                table.parse_extents(content, line, policy)?;
            }
        }
        if scheme != VersificationScheme::Original {
            let lines = std::mem::take(&mut table.mapping_lines);
            for m in &lines {
                table.apply_mapping(m, policy)?;
            }
            table.mapping_lines = lines;
        }
        Ok(table)
    }

    fn parse_extents(
        &mut self,
        content: &str,
        line: usize,
        policy: MappingPolicy,
    ) -> Result<(), VersificationError> {
        let mut tokens = content.split_whitespace();
        let book = parse_book(tokens.next().unwrap_or_default(), line)?;
        // Chapters may be skipped; a skipped chapter has no verses.
        let mut verses: Vec<u16> = Vec::new();
        for token in tokens {
            match token.split_once(':') {
                Some((c, v)) => {
                    let chapter = parse_num(c, line, "chapter")? as usize;
                    if chapter <= verses.len() {
                        return Err(VersificationError::Parse {
                            line,
                            message: format!("chapter {chapter} out of sequence for {book}"),
                        });
                    }
                    verses.resize(chapter - 1, 0);
                    verses.push(parse_num(v, line, "verse count")?);
                }
                None => verses.push(parse_num(token, line, "verse count")?),
            }
        }
        if self.extents.contains_key(&book) {
            match policy {
                MappingPolicy::Strict => {
                    return Err(VersificationError::Parse {
                        line,
                        message: format!("book {book} defined twice"),
                    })
                }
                MappingPolicy::FirstClaim => {
                    self.warnings.push(LoadWarning {
                        line,
                        message: format!("book {book} defined twice; later definition ignored"),
                    });
                    return Ok(());
                }
            }
        }
        self.extents.insert(book, verses);
        Ok(())
    }

    fn apply_mapping(&mut self, m: &MappingLine, policy: MappingPolicy) -> Result<(), VersificationError> {
        let strict = policy == MappingPolicy::Strict;
        let (s, o) = (m.scheme_side, m.original_side);
        if s.start > s.end || o.start > o.end {
            if strict {
                return Err(VersificationError::Parse {
                    line: m.line,
                    message: "reversed verse range".into(),
                });
            }
            self.warnings.push(LoadWarning {
                line: m.line,
                message: "reversed verse range skipped".into(),
            });
            return Ok(());
        }
        let left: Vec<VerseRef> = s.verses().collect();
        let right: Vec<VerseRef> = o.verses().collect();
        let mut pairs = Vec::new();
        if left.len() == right.len() {
            pairs.extend(left.iter().copied().zip(right.iter().copied()));
        } else if left.len() == 1 {
            pairs.extend(right.iter().map(|r| (left[0], *r)));
        } else if right.len() == 1 {
            pairs.extend(left.iter().map(|l| (*l, right[0])));
        } else {
            if strict {
                return Err(VersificationError::Parse {
                    line: m.line,
                    message: format!("ranges of unequal length ({} and {})", s.len(), o.len()),
                });
            }
            self.warnings.push(LoadWarning {
                line: m.line,
                message: format!("ranges of unequal length ({} and {}) paired from the start", s.len(), o.len()),
            });
            let n = left.len().min(right.len());
            pairs.extend(left[..n].iter().copied().zip(right[..n].iter().copied()));
            pairs.extend(left[n..].iter().map(|l| (*l, right[n - 1])));
            pairs.extend(right[n..].iter().map(|r| (left[n - 1], *r)));
        }
        for (l, r) in pairs {
            match self.forward_line.get(&l) {
                None => {
                    self.forward.insert(l, vec![r]);
                    self.forward_line.insert(l, m.line);
                }
                Some(&first) => {
                    let targets = self.forward.get_mut(&l).unwrap();
                    if targets.contains(&r) {
                        continue;
                    }
                    if first != m.line && strict {
                        return Err(VersificationError::OverlappingMapping {
                            line: m.line,
                            verse: l,
                            first_line: first,
                        });
                    }
                    targets.push(r);
                }
            }
            match self.reverse_line.get(&r) {
                None => {
                    self.reverse.insert(r, l);
                    self.reverse_line.insert(r, m.line);
                }
                Some(&first) => {
                    if first != m.line && strict && self.reverse[&r] != l {
                        return Err(VersificationError::OverlappingMapping {
                            line: m.line,
                            verse: r,
                            first_line: first,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scheme(&self) -> VersificationScheme {
        self.scheme
    }

    pub fn warnings(&self) -> &[LoadWarning] {
        &self.warnings
    }

    pub fn mapping_lines(&self) -> &[MappingLine] {
        &self.mapping_lines
    }

    pub fn books(&self) -> impl Iterator<Item = BookId> + '_ {
        self.extents.keys().copied()
    }

    pub fn has_book(&self, book: BookId) -> bool {
        self.extents.contains_key(&book)
    }

    pub fn chapter_count(&self, book: BookId) -> usize {
        self.extents.get(&book).map_or(0, Vec::len)
    }

    /// Last verse number of a chapter.
    pub fn extent(&self, book: BookId, chapter: u16) -> Option<u16> {
        let chapters = self.extents.get(&book)?;
        if chapter == 0 {
            return None;
        }
        chapters.get(chapter as usize - 1).copied()
    }

    pub fn is_excluded(&self, r: &VerseRef) -> bool {
        self.excluded.contains(r)
    }

    /// True when the verse exists under this scheme (possibly excluded).
    pub fn contains(&self, r: &VerseRef) -> bool {
        if r.verse == 0 {
            return self.forward.contains_key(r);
        }
        self.extent(r.book, r.chapter).is_some_and(|e| r.verse <= e)
    }

    /// True when the scheme explicitly maps a chapter title slot.
    pub fn maps_title(&self, book: BookId, chapter: u16) -> bool {
        self.forward.contains_key(&VerseRef::new(book, chapter, 0))
    }

    /// All Original-side counterparts of a scheme verse in index order of
    /// claim: the primary counterpart first, then split-verse continuations.
    /// Counterparts outside the canonical index are dropped. Excluded verses
    /// have none.
    pub fn original_targets(&self, r: &VerseRef, index: &CanonicalIndex) -> Vec<VerseRef> {
        if self.excluded.contains(r) {
            return Vec::new();
        }
        match self.forward.get(r) {
            Some(targets) => targets.iter().copied().filter(|t| index.contains(t)).collect(),
            None if index.contains(r) => vec![*r],
            None => Vec::new(),
        }
    }

    fn first_original(&self, r: &VerseRef) -> VerseRef {
        self.forward.get(r).map_or(*r, |t| t[0])
    }

    fn scheme_counterpart(&self, o: &VerseRef) -> Option<VerseRef> {
        match self.reverse.get(o) {
            Some(s) => Some(*s),
            None if !self.forward.contains_key(o) => Some(*o),
            None => None,
        }
    }

    /// Every valid, non-excluded verse of this scheme in canonical order.
    pub fn verses(&self) -> impl Iterator<Item = VerseRef> + '_ {
        self.extents.iter().flat_map(move |(book, chapters)| {
            chapters.iter().enumerate().flat_map(move |(c, &n)| {
                (1..=n)
                    .map(move |v| VerseRef::new(*book, c as u16 + 1, v))
                    .filter(move |r| !self.excluded.contains(r))
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapDirection {
    ToOriginal,
    FromOriginal,
}

/// Map a verse between a scheme and the Original scheme. `Ok(None)` means the
/// verse has no counterpart (excluded, or outside the other side).
pub fn map_ref(
    r: VerseRef,
    table: &VersificationTable,
    direction: MapDirection,
    index: &CanonicalIndex,
) -> Result<Option<VerseRef>, VersificationError> {
    match direction {
        MapDirection::ToOriginal => {
            if !table.contains(&r) {
                return Err(VersificationError::InvalidRef {
                    verse: r,
                    scheme: table.scheme,
                });
            }
            if table.is_excluded(&r) {
                return Ok(None);
            }
            let o = table.first_original(&r);
            Ok(index.contains(&o).then_some(o))
        }
        MapDirection::FromOriginal => {
            if !index.contains(&r) {
                return Err(VersificationError::InvalidRef {
                    verse: r,
                    scheme: VersificationScheme::Original,
                });
            }
            Ok(table
                .scheme_counterpart(&r)
                .filter(|s| table.contains(s) && !table.is_excluded(s)))
        }
    }
}

/// The ordered list of Original-scheme verses that defines extract lines.
#[derive(Debug, Clone)]
pub struct CanonicalIndex {
    refs: Vec<VerseRef>,
    positions: HashMap<VerseRef, usize>,
}

/// Per-book verse counts of the standard Original table.
const REFERENCE_BOOK_COUNTS: [(&str, usize); 89] = [
    ("GEN", 1533), ("EXO", 1213), ("LEV", 859), ("NUM", 1289), ("DEU", 959), ("JOS", 658),
    ("JDG", 618), ("RUT", 85), ("1SA", 811), ("2SA", 695), ("1KI", 817), ("2KI", 719),
    ("1CH", 943), ("2CH", 822), ("EZR", 280), ("NEH", 405), ("EST", 167), ("JOB", 1070),
    ("PSA", 2527), ("PRO", 915), ("ECC", 222), ("SNG", 117), ("ISA", 1291), ("JER", 1364),
    ("LAM", 154), ("EZK", 1273), ("DAN", 357), ("HOS", 197), ("JOL", 73), ("AMO", 146),
    ("OBA", 21), ("JON", 48), ("MIC", 105), ("NAM", 47), ("HAB", 56), ("ZEP", 53), ("HAG", 38),
    ("ZEC", 211), ("MAL", 55), ("MAT", 1071), ("MRK", 678), ("LUK", 1151), ("JHN", 879),
    ("ACT", 1006), ("ROM", 433), ("1CO", 437), ("2CO", 256), ("GAL", 149), ("EPH", 155),
    ("PHP", 104), ("COL", 95), ("1TH", 89), ("2TH", 47), ("1TI", 113), ("2TI", 83), ("TIT", 46),
    ("PHM", 25), ("HEB", 303), ("JAS", 108), ("1PE", 105), ("2PE", 61), ("1JN", 105), ("2JN", 13),
    ("3JN", 15), ("JUD", 25), ("REV", 405), ("TOB", 248), ("JDT", 340), ("ESG", 267), ("WIS", 435),
    ("SIR", 1401), ("BAR", 141), ("LJE", 72), ("S3Y", 67), ("SUS", 64), ("BEL", 42), ("1MA", 924),
    ("2MA", 555), ("3MA", 228), ("4MA", 482), ("1ES", 434), ("2ES", 944), ("MAN", 15), ("PS2", 7),
    ("ODA", 275), ("PSS", 293), ("EZA", 715), ("JUB", 1217), ("ENO", 1563),
];

/// Build the canonical index from the Original table: every listed verse of
/// every book in canonical order, skipping variant texts and excluded verses.
pub fn canonical_index(original: &VersificationTable) -> Result<CanonicalIndex, VersificationError> {
    if original.scheme != VersificationScheme::Original {
        return Err(VersificationError::NotOriginal(original.scheme));
    }
    let refs: Vec<VerseRef> = original
        .verses()
        .filter(|r| !r.book.is_variant_text())
        .collect();
    if refs.len() != CANONICAL_LEN {
        let mut actual: BTreeMap<BookId, usize> = BTreeMap::new();
        for r in &refs {
            *actual.entry(r.book).or_default() += 1;
        }
        let mut expected: BTreeMap<BookId, usize> = BTreeMap::new();
        for (code, n) in REFERENCE_BOOK_COUNTS {
            expected.insert(BookId::from_code(code).unwrap(), n);
        }
        let books: BTreeSet<BookId> = actual.keys().chain(expected.keys()).copied().collect();
        let deltas = books
            .into_iter()
            .filter_map(|b| {
                let d = actual.get(&b).copied().unwrap_or(0) as i64
                    - expected.get(&b).copied().unwrap_or(0) as i64;
                (d != 0).then_some((b, d))
            })
            .collect();
        return Err(VersificationError::IndexLength {
            expected: CANONICAL_LEN,
            actual: refs.len(),
            deltas,
        });
    }
    Ok(CanonicalIndex::from_refs(refs))
}

impl CanonicalIndex {
    fn from_refs(refs: Vec<VerseRef>) -> CanonicalIndex {
        let positions = refs.iter().enumerate().map(|(i, r)| (*r, i)).collect();
        CanonicalIndex { refs, positions }
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    pub fn get(&self, line: usize) -> Option<VerseRef> {
        self.refs.get(line).copied()
    }

    pub fn position(&self, r: &VerseRef) -> Option<usize> {
        self.positions.get(r).copied()
    }

    pub fn contains(&self, r: &VerseRef) -> bool {
        self.positions.contains_key(r)
    }

    pub fn refs(&self) -> &[VerseRef] {
        &self.refs
    }

    pub fn iter(&self) -> impl Iterator<Item = VerseRef> + '_ {
        self.refs.iter().copied()
    }

    pub fn section_len(&self, section: CanonSection) -> usize {
        self.refs.iter().filter(|r| r.book.section() == section).count()
    }

    /// Line positions of one book, which are contiguous.
    pub fn book_lines(&self, book: BookId) -> std::ops::Range<usize> {
        let start = self.refs.partition_point(|r| r.book < book);
        let end = self.refs.partition_point(|r| r.book <= book);
        start..end
    }

    /// The `vref.txt` rendering: one `BOOK C:V` line per entry.
    pub fn to_vref_text(&self) -> String {
        let mut out = String::with_capacity(self.refs.len() * 12);
        for r in &self.refs {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// Result of comparing observed verses against candidate schemes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeInference {
    pub scheme: VersificationScheme,
    /// Mismatch count per candidate, in the order candidates were given.
    pub mismatches: Vec<(VersificationScheme, usize)>,
}

/// Count how badly a set of observed verses fits a table: one per chapter
/// whose highest observed verse differs from the table's extent, plus one
/// per observed verse the table excludes.
pub fn scheme_mismatch(observed: &BTreeSet<VerseRef>, table: &VersificationTable) -> usize {
    let mut maxima: BTreeMap<(BookId, u16), u16> = BTreeMap::new();
    for r in observed.iter().filter(|r| r.verse > 0) {
        let m = maxima.entry((r.book, r.chapter)).or_default();
        *m = (*m).max(r.verse);
    }
    let chapter_mismatch = maxima
        .iter()
        .filter(|((b, c), max)| table.extent(*b, *c) != Some(**max))
        .count();
    let excluded = observed.iter().filter(|r| table.is_excluded(r)).count();
    chapter_mismatch + excluded
}

/// Pick the candidate with the fewest mismatches; ties go to the earlier
/// scheme in [`VersificationScheme::PRIORITY`].
pub fn infer_scheme(
    observed: &BTreeSet<VerseRef>,
    candidates: &[&VersificationTable],
) -> Result<SchemeInference, VersificationError> {
    let mismatches: Vec<(VersificationScheme, usize)> = candidates
        .iter()
        .map(|t| (t.scheme, scheme_mismatch(observed, t)))
        .collect();
    let best = mismatches
        .iter()
        .min_by_key(|(s, n)| (*n, s.slot()))
        .ok_or(VersificationError::NoCandidates)?;
    Ok(SchemeInference {
        scheme: best.0,
        mismatches,
    })
}
