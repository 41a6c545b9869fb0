//! Plain-text split manifests with a trailing SHA-256 checksum.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::splits::{CvParams, SplitManifest, TaskKind, TaskSpec};
use super::TaskError;
use crate::book::{parse_book_list, BookId};
use crate::versification::VerseRef;

pub const MANIFEST_HEADER: &str = "versekit-split-manifest 1";
const CHECKSUM_PREFIX: &str = "checksum\t";

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), ToString::to_string)
}

fn book_list(b: &BTreeSet<BookId>) -> String {
    if b.is_empty() {
        "-".into()
    } else {
        b.iter().map(|b| b.code()).collect::<Vec<_>>().join(" ")
    }
}

/// Hex SHA-256 of the manifest body (everything before the checksum line).
pub fn manifest_checksum(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

impl SplitManifest {
    pub fn to_text(&self) -> String {
        let mut s = format!("{MANIFEST_HEADER}\n");
        let cv = self
            .task
            .cv
            .map_or_else(|| "-".to_string(), |c| format!("test={} val={} folds={} seed={}", c.test_size, c.val_size, c.folds, c.seed));
        let missing = if self.missing_test_books.is_empty() {
            "-".to_string()
        } else {
            self.missing_test_books.iter().map(|b| b.code()).collect::<Vec<_>>().join(" ")
        };
        for (k, v) in [
            ("task", self.task.kind.to_string()),
            ("train_books", book_list(&self.task.train_books)),
            ("test_books", book_list(&self.task.test_books)),
            ("cv", cv),
            ("source", self.source.clone()),
            ("target", self.target.clone()),
            ("related", opt(&self.related)),
            ("fold", opt(&self.fold)),
            ("generator", self.generator.clone()),
            ("fingerprint", opt(&self.fingerprint)),
            ("tool", concat!("versekit ", env!("CARGO_PKG_VERSION")).to_string()),
            ("missing_test_books", missing),
        ] {
            let _ = writeln!(s, "{k}\t{v}");
        }
        let mut section = |name: &str, list: &[VerseRef]| {
            let _ = writeln!(s, "[{name}]");
            for v in list {
                let _ = writeln!(s, "{v}");
            }
        };
        section("train", &self.train);
        section("validation", &self.validation);
        section("test", &self.test);
        if let Some(r) = &self.related_train {
            section("related_train", r);
        }
        let sum = manifest_checksum(&s);
        let _ = writeln!(s, "{CHECKSUM_PREFIX}{sum}");
        s
    }

    pub fn parse(text: &str) -> Result<SplitManifest, TaskError> {
        let err = |line: usize, message: String| TaskError::Manifest { line, message };
        let body_end = text.rfind(CHECKSUM_PREFIX).ok_or_else(|| err(0, "missing checksum".into()))?;
        let (body, tail) = text.split_at(body_end);
        let stated = tail[CHECKSUM_PREFIX.len()..].trim_end_matches('\n');
        if stated != manifest_checksum(body) {
            return Err(TaskError::ChecksumMismatch);
        }
        let mut lines = body.lines().enumerate().map(|(i, l)| (i + 1, l));
        if lines.next().map(|l| l.1) != Some(MANIFEST_HEADER) {
            return Err(err(1, "not a split manifest".into()));
        }
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        let mut sections: BTreeMap<String, Vec<VerseRef>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (n, l) in lines {
            if let Some(name) = l.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
                if !["train", "validation", "test", "related_train"].contains(&name) || sections.contains_key(name) {
                    return Err(err(n, format!("unexpected section {name}")));
                }
                sections.insert(name.to_string(), Vec::new());
                current = Some(name.to_string());
            } else if let Some(sec) = &current {
                let v: VerseRef = l.parse().map_err(|e| err(n, format!("{e}")))?;
                sections.get_mut(sec).expect("open section").push(v);
            } else {
                let (k, v) = l.split_once('\t').ok_or_else(|| err(n, "expected key<TAB>value".into()))?;
                if fields.insert(k, v).is_some() {
                    return Err(err(n, format!("duplicate field {k}")));
                }
            }
        }
        let field = |k: &str| fields.get(k).copied().ok_or_else(|| err(0, format!("missing field {k}")));
        let none_if_dash = |v: &str| if v == "-" { None } else { Some(v.to_string()) };
        let books = |k: &str| -> Result<BTreeSet<BookId>, TaskError> {
            let v = field(k)?;
            if v == "-" {
                return Ok(BTreeSet::new());
            }
            Ok(parse_book_list(v).map_err(|e| err(0, format!("{k}: {e}")))?.into_iter().collect())
        };
        let kind: TaskKind = field("task")?.parse()?;
        let cv = match field("cv")? {
            "-" => None,
            v => {
                let mut kv = BTreeMap::new();
                for part in v.split_whitespace() {
                    let (a, b) = part.split_once('=').ok_or_else(|| err(0, format!("bad cv field {part}")))?;
                    let n: u64 = b.parse().map_err(|_| err(0, format!("bad cv value {part}")))?;
                    kv.insert(a, n);
                }
                let g = |k: &str| kv.get(k).copied().ok_or_else(|| err(0, format!("cv missing {k}")));
                Some(CvParams { test_size: g("test")? as usize, val_size: g("val")? as usize, folds: g("folds")? as usize, seed: g("seed")? })
            }
        };
        let fold = match field("fold")? {
            "-" => None,
            v => Some(v.parse().map_err(|_| err(0, format!("bad fold {v}")))?),
        };
        let missing: Vec<BookId> = match field("missing_test_books")? {
            "-" => Vec::new(),
            v => parse_book_list(v).map_err(|e| err(0, e.to_string()))?,
        };
        let mut take = |k: &str| sections.remove(k);
        let m = SplitManifest {
            task: TaskSpec { kind, train_books: books("train_books")?, test_books: books("test_books")?, cv },
            source: field("source")?.to_string(),
            target: field("target")?.to_string(),
            related: none_if_dash(field("related")?),
            fold,
            generator: field("generator")?.to_string(),
            fingerprint: none_if_dash(field("fingerprint")?),
            train: take("train").ok_or_else(|| err(0, "missing [train]".into()))?,
            validation: take("validation").ok_or_else(|| err(0, "missing [validation]".into()))?,
            test: take("test").ok_or_else(|| err(0, "missing [test]".into()))?,
            related_train: take("related_train"),
            missing_test_books: missing,
        };
        field("tool")?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<SplitManifest, TaskError> {
        let text = std::fs::read_to_string(path).map_err(|e| TaskError::Io(format!("{}: {e}", path.display())))?;
        SplitManifest::parse(&text)
    }

    /// File name for this manifest inside a split directory.
    pub fn file_name(&self) -> String {
        let task = self.task.kind.to_string().replace(':', "-");
        match self.fold {
            Some(k) => format!("{}__{}__{task}-fold{k}.manifest", self.source, self.target),
            None => format!("{}__{}__{task}.manifest", self.source, self.target),
        }
    }
}
