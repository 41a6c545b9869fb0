mod common;

use std::path::PathBuf;

use versekit::extract::RANGE_MARKER;
use versekit::versification::{builtin_index, builtin_table, VerseRef, VersificationScheme};
use versekit::{build_extract, parse_usfm, split_books, ExtractFile, ExtractLine};

fn fixture(name: &str) -> PathBuf {
    common::fixture_dir().join("extract").join(name)
}

fn three_book_extract() -> ExtractFile {
    let bytes = std::fs::read(fixture("three_books.usfm")).unwrap();
    let docs: Vec<_> = split_books(&bytes).into_iter().map(|b| parse_usfm(b).unwrap()).collect();
    assert_eq!(docs.len(), 3);
    let (file, warnings) =
        build_extract("fix-test", &docs, builtin_table(VersificationScheme::Original), builtin_index()).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    file
}

/// Set VERSEKIT_BLESS=1 to regenerate the golden file after an intended change.
#[test]
fn three_books_match_golden_extract() {
    let text = three_book_extract().to_text();
    let golden = fixture("three_books.extract.txt");
    if std::env::var_os("VERSEKIT_BLESS").is_some() {
        std::fs::write(&golden, &text).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).unwrap();
    assert!(text == expected, "extract differs from {}", golden.display());
    assert_eq!(text.lines().filter(|l| *l == RANGE_MARKER).count(), 1);
    assert_eq!(text.matches('\n').count(), builtin_index().len());
}

#[test]
fn three_books_line_contents() {
    let file = three_book_extract();
    let index = builtin_index();
    let at = |s: &str| file.get(index, &s.parse::<VerseRef>().unwrap()).unwrap().clone();
    assert_eq!(at("OBA 1:1"), ExtractLine::Text("The vision of Obadiah. Thus says the Lord about Edom:".into()));
    assert_eq!(at("OBA 1:2"), ExtractLine::Text("I will make you small among the nations; you will be utterly despised.".into()));
    assert_eq!(at("OBA 1:3"), ExtractLine::Text("The pride of your heart has deceived you.".into()));
    assert_eq!(at("OBA 1:4"), ExtractLine::Empty);
    assert_eq!(at("PHM 1:1"), ExtractLine::Text("Paul, a prisoner of Christ Jesus, and Timothy our brother,".into()));
    assert_eq!(at("PHM 1:4"), ExtractLine::Text("I always thank my God, because I hear of your love and faith.".into()));
    assert_eq!(at("PHM 1:5"), ExtractLine::Range);
    assert_eq!(at("PHM 1:6"), ExtractLine::Text("I pray that sharing your faith may become effective.".into()));
    assert_eq!(at("3JN 1:3"), ExtractLine::Text("For I rejoiced greatly when the brothers came.".into()));
    assert_eq!(file.nonempty_count(), 12);
}

#[test]
fn golden_parses_back() {
    let text = std::fs::read_to_string(fixture("three_books.extract.txt")).unwrap();
    let parsed = ExtractFile::parse("fix-test", &text, builtin_index().len()).unwrap();
    assert_eq!(parsed, three_book_extract());
}
