//! Three-letter book identifiers in canonical order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Book codes in canonical order. Positions 0..39 are the Old Testament,
/// 39..66 the New Testament, the rest deuterocanonical or extra-canonical.
const CODES: [&str; 108] = [
    "GEN", "EXO", "LEV", "NUM", "DEU", "JOS", "JDG", "RUT", "1SA", "2SA", "1KI", "2KI", "1CH",
    "2CH", "EZR", "NEH", "EST", "JOB", "PSA", "PRO", "ECC", "SNG", "ISA", "JER", "LAM", "EZK",
    "DAN", "HOS", "JOL", "AMO", "OBA", "JON", "MIC", "NAM", "HAB", "ZEP", "HAG", "ZEC", "MAL",
    "MAT", "MRK", "LUK", "JHN", "ACT", "ROM", "1CO", "2CO", "GAL", "EPH", "PHP", "COL", "1TH",
    "2TH", "1TI", "2TI", "TIT", "PHM", "HEB", "JAS", "1PE", "2PE", "1JN", "2JN", "3JN", "JUD",
    "REV", "TOB", "JDT", "ESG", "WIS", "SIR", "BAR", "LJE", "S3Y", "SUS", "BEL", "1MA", "2MA",
    "3MA", "4MA", "1ES", "2ES", "MAN", "PS2", "ODA", "PSS", "JSA", "JDB", "TBS", "SST", "DNT",
    "BLT", "3ES", "EZA", "5EZ", "6EZ", "DAG", "PS3", "2BA", "LBA", "JUB", "ENO", "1MQ", "2MQ",
    "3MQ", "REP", "4BA", "LAO",
];

const OT_END: u8 = 39;
const NT_END: u8 = 66;

/// Alternate spellings accepted on input.
const ALIASES: [(&str, &str); 1] = [("NAH", "NAM")];

/// Old Greek variant texts that duplicate other books and have no line of
/// their own in the canonical index.
const VARIANT_TEXTS: [&str; 6] = ["JSA", "JDB", "TBS", "SST", "DNT", "BLT"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CanonSection {
    OldTestament,
    NewTestament,
    Deuterocanon,
}

impl fmt::Display for CanonSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CanonSection::OldTestament => "OT",
            CanonSection::NewTestament => "NT",
            CanonSection::Deuterocanon => "DT",
        })
    }
}

/// A book of the canon. Ordering follows canonical order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BookId(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown book code {0:?}")]
pub struct UnknownBook(pub String);

impl BookId {
    pub const COUNT: usize = CODES.len();

    pub fn from_code(code: &str) -> Result<BookId, UnknownBook> {
        let upper = code.trim().to_ascii_uppercase();
        let upper = ALIASES
            .iter()
            .find(|(alias, _)| *alias == upper)
            .map(|(_, real)| real.to_string())
            .unwrap_or(upper);
        CODES
            .iter()
            .position(|c| *c == upper)
            .map(|i| BookId(i as u8))
            .ok_or_else(|| UnknownBook(code.to_string()))
    }

    /// Book by zero-based canonical position.
    pub fn from_index(index: usize) -> Option<BookId> {
        (index < CODES.len()).then_some(BookId(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn code(self) -> &'static str {
        CODES[self.0 as usize]
    }

    pub fn section(self) -> CanonSection {
        if self.0 < OT_END {
            CanonSection::OldTestament
        } else if self.0 < NT_END {
            CanonSection::NewTestament
        } else {
            CanonSection::Deuterocanon
        }
    }

    pub fn is_deuterocanonical(self) -> bool {
        self.section() == CanonSection::Deuterocanon
    }

    pub fn is_variant_text(self) -> bool {
        VARIANT_TEXTS.contains(&self.code())
    }

    pub fn all() -> impl Iterator<Item = BookId> {
        (0..CODES.len()).map(|i| BookId(i as u8))
    }

    pub fn old_testament() -> impl Iterator<Item = BookId> {
        (0..OT_END).map(BookId)
    }

    pub fn new_testament() -> impl Iterator<Item = BookId> {
        (OT_END..NT_END).map(BookId)
    }
}

impl fmt::Debug for BookId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for BookId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for BookId {
    type Err = UnknownBook;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BookId::from_code(s)
    }
}

impl Serialize for BookId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for BookId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BookId::from_code(&s).map_err(serde::de::Error::custom)
    }
}

/// Parse a whitespace- or comma-separated list of book codes.
pub fn parse_book_list(s: &str) -> Result<Vec<BookId>, UnknownBook> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(BookId::from_code)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections() {
        assert_eq!(BookId::old_testament().count(), 39);
        assert_eq!(BookId::new_testament().count(), 27);
        assert_eq!(BookId::from_code("MAL").unwrap().section(), CanonSection::OldTestament);
        assert_eq!(BookId::from_code("MAT").unwrap().section(), CanonSection::NewTestament);
        assert_eq!(BookId::from_code("TOB").unwrap().section(), CanonSection::Deuterocanon);
    }

    #[test]
    fn alias_and_case() {
        assert_eq!(BookId::from_code("nah").unwrap(), BookId::from_code("NAM").unwrap());
        assert!(BookId::from_code("FRT").is_err());
        assert!(BookId::from_code("XYZ").is_err());
    }

    #[test]
    fn ordering_is_canonical() {
        let gen = BookId::from_code("GEN").unwrap();
        let rev = BookId::from_code("REV").unwrap();
        let tob = BookId::from_code("TOB").unwrap();
        assert!(gen < rev && rev < tob);
        for b in BookId::all() {
            assert_eq!(BookId::from_code(b.code()).unwrap(), b);
        }
    }
}
