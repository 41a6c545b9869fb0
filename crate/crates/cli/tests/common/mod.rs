//! Synthetic fixture corpus and helpers for driving the binary.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use versekit::book::BookId;
use versekit::synth::SeededRng;
use versekit::versification::builtin_index;

pub const BOOKS: &str = "MAT MRK LUK JHN ACT 1TH 2TH 1TI 2TI TIT";

const SRC_SYLLABLES: [&str; 10] = ["ka", "lo", "mi", "ne", "su", "ta", "ri", "po", "fi", "da"];
const TGT_SYLLABLES: [&str; 10] = ["ba", "ko", "le", "mu", "ni", "sa", "te", "vo", "gu", "ze"];
const REL_SYLLABLES: [&str; 10] = ["be", "ku", "li", "mo", "na", "se", "ti", "va", "go", "zu"];
const LEMMAS: usize = 300;

fn word(syl: &[&str; 10], lemma: usize) -> String {
    (lemma + 10).to_string().bytes().map(|d| syl[(d - b'0') as usize]).collect()
}

/// One translation of the fixture corpus.
struct Translation {
    id: &'static str,
    render: fn(&[usize], &mut SeededRng) -> String,
    /// Verses written as a joined range `\v a-b`.
    ranges: &'static [(&'static str, u16, u16, u16)],
}

fn source(lemmas: &[usize], rng: &mut SeededRng) -> String {
    lemmas
        .iter()
        .map(|&l| {
            let w = word(&SRC_SYLLABLES, l);
            // Some "fi" syllables are typeset as a ligature.
            if rng.below(4) == 0 {
                w.replacen("fi", "\u{FB01}", 1)
            } else {
                w
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn target_a(lemmas: &[usize], _: &mut SeededRng) -> String {
    let mut words: Vec<String> = lemmas.iter().map(|&l| word(&TGT_SYLLABLES, l)).collect();
    let n = words.len();
    words.swap(n - 1, n - 2);
    words.join(" ") + " ,"
}

fn target_b(lemmas: &[usize], rng: &mut SeededRng) -> String {
    lemmas
        .iter()
        .map(|&l| if rng.below(3) == 0 { word(&TGT_SYLLABLES, rng.below(LEMMAS)) } else { word(&TGT_SYLLABLES, l) })
        .collect::<Vec<_>>()
        .join(" ")
}

fn related(lemmas: &[usize], rng: &mut SeededRng) -> String {
    let mut out = Vec::new();
    for &l in lemmas {
        if rng.below(6) == 0 {
            continue;
        }
        out.push(if rng.below(4) == 0 { word(&REL_SYLLABLES, rng.below(LEMMAS)) } else { word(&REL_SYLLABLES, l) });
    }
    out.join(" ")
}

const TRANSLATIONS: [Translation; 4] = [
    Translation { id: "src-fix", render: source, ranges: &[("MAT", 1, 2, 3), ("ACT", 2, 7, 8)] },
    Translation { id: "tga-fix", render: target_a, ranges: &[("JHN", 3, 4, 5)] },
    Translation { id: "tgb-fix", render: target_b, ranges: &[] },
    Translation { id: "rel-fix", render: related, ranges: &[] },
];

/// Lemma sequence of a verse, identical across translations.
fn verse_lemmas(book: usize, chapter: u16, verse: u16) -> Vec<usize> {
    let mut rng = SeededRng::new((book as u64) << 32 | (chapter as u64) << 16 | verse as u64);
    let n = rng.range(4, 11);
    (0..n)
        .map(|_| {
            let cap = rng.below(LEMMAS) + 1;
            rng.below(cap)
        })
        .collect()
}

fn usfm_book(t: &Translation, book: BookId, book_no: usize) -> String {
    let index = builtin_index();
    let mut verses: BTreeMap<u16, Vec<u16>> = BTreeMap::new();
    for v in index.iter().filter(|v| v.book == book) {
        verses.entry(v.chapter).or_default().push(v.verse);
    }
    let mut rng = SeededRng::new(book_no as u64 * 7919 + t.id.len() as u64);
    let mut s = format!("\\id {book} {} fixture\n\\h {book}\n\\mt1 {book}\n", t.id);
    for (chapter, vs) in verses {
        write!(s, "\\c {chapter}\n\\s1 Section {chapter}\n\\p\n").unwrap();
        let mut skip_to = 0;
        for v in vs {
            if v <= skip_to {
                continue;
            }
            let range = t.ranges.iter().find(|r| r.0 == book.code() && r.1 == chapter && r.2 == v);
            let mut text = (t.render)(&verse_lemmas(book_no, chapter, v), &mut rng);
            let label = match range {
                Some(&(_, _, a, b)) => {
                    text.push(' ');
                    text.push_str(&(t.render)(&verse_lemmas(book_no, chapter, b), &mut rng));
                    skip_to = b;
                    format!("{a}-{b}")
                }
                None => v.to_string(),
            };
            if v % 37 == 0 {
                write!(text, "\\f + \\fr {chapter}.{v} \\ft Or another reading\\f*").unwrap();
            }
            if v % 53 == 0 {
                write!(text, " \\x - \\xo {chapter}.{v} \\xt Mrk 1.1\\x*").unwrap();
            }
            writeln!(s, "\\v {label} {text}").unwrap();
        }
    }
    s
}

pub fn sha256_file(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

/// Write the fixture corpus, family file and config under `root`; returns
/// the config path. Outputs go to `root/out`.
pub fn write_fixture(root: &Path) -> PathBuf {
    let sources = root.join("sources");
    std::fs::create_dir_all(&sources).unwrap();
    let books: Vec<BookId> = BOOKS.split(' ').map(|b| b.parse().unwrap()).collect();
    let mut manifest = String::from("# fixture corpus\ntranslation_id\tlicense\tsource\tsha256\tfamily\tcountry\n");
    for (ti, t) in TRANSLATIONS.iter().enumerate() {
        let (rel, sha) = if ti == 1 {
            // Directory source, one file per book.
            let dir = sources.join(t.id);
            std::fs::create_dir_all(&dir).unwrap();
            let mut all = Vec::new();
            for (i, &b) in books.iter().enumerate() {
                let text = usfm_book(t, b, i);
                std::fs::write(dir.join(format!("{:02}-{b}.usfm", i + 1)), &text).unwrap();
                all.extend_from_slice(text.as_bytes());
            }
            (format!("sources/{}", t.id), hex::encode(Sha256::digest(&all)))
        } else {
            let text: String = books.iter().enumerate().map(|(i, &b)| usfm_book(t, b, i)).collect();
            let path = sources.join(format!("{}.usfm", t.id));
            std::fs::write(&path, text).unwrap();
            (format!("sources/{}.usfm", t.id), sha256_file(&path))
        };
        let license = if t.id == "rel-fix" { "CC BY-NC-ND" } else if ti == 0 { "Public Domain" } else { "CC BY-SA" };
        writeln!(manifest, "{}\t{license}\t{rel}\t{sha}\tFixture\tXX", t.id).unwrap();
    }
    std::fs::write(root.join("corpus.tsv"), manifest).unwrap();

    let mut family = String::from("family = \"Fixture\"\n\n[rules]\n");
    for (id, roles, scope) in [
        ("src-fix", "[\"source\"]", "NT"),
        ("tga-fix", "[\"target\"]", "NT"),
        ("tgb-fix", "[\"target\"]", "NT"),
        ("rel-fix", "[\"related\"]", "NT"),
    ] {
        write!(family, "\n[[candidates]]\nid = \"{id}\"\nroles = {roles}\nscope = \"{scope}\"\nscript = \"Latin\"\ncountry = \"XX\"\nbranch = \"Fixture\"\n").unwrap();
    }
    std::fs::write(root.join("fixture-family.toml"), family).unwrap();

    let config = root.join("versekit.toml");
    std::fs::write(&config, CONFIG).unwrap();
    config
}

pub const CONFIG: &str = r#"config_version = 1
seed = 11
corpus_manifest = "corpus.tsv"
corpus_dir = "corpus"
output_dir = "out"

[extract.versification]
src-fix = "org"

[pairs]
families = ["fixture-family.toml"]
ibm1_iterations = 4
hmm_iterations = 4

[split]
tasks = ["cv", "gospel", "epistles", "related:gospel"]

[align]
iterations = 5

[metrics]
vocab_size = 200
"#;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_versekit")
}

/// Run the binary with `args` plus `--config config`, output redirected to `out`.
pub fn versekit(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .arg("--config")
        .arg(config)
        .env("VERSEKIT_OUTPUT_DIR", out)
        .env("VERSEKIT_LOG", "warn")
        .output()
        .expect("spawn versekit")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file under `root`, keyed by relative path.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let Ok(entries) = std::fs::read_dir(dir) else { return };
        for e in entries {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Outputs a seed change may legitimately touch.
pub fn seed_dependent(rel: &str) -> bool {
    rel.contains("__cv-fold") || rel.starts_with("subword/") || rel.starts_with("score/") || rel.starts_with("reports/")
}

/// Paths present in only one tree or with different contents.
pub fn differing(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().filter(|k| a.get(*k) != b.get(*k)).cloned().collect()
}
