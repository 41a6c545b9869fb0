//! Benchmark task definitions and train / validation / test verse splits.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::book::{parse_book_list, BookId, CanonSection};
use crate::extract::ExtractFile;
use crate::synth::SeededRng;
use crate::versification::{CanonicalIndex, VerseRef};

/// Identity of the shuffle used for CV splits; recorded in manifests.
pub const GENERATOR_ID: &str = "chacha8-fisher-yates-v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Cv,
    GospelTranslation,
    EpistleTranslation,
    NtCompletion,
    EarlyOt,
    LateOt,
    RelatedLanguage(Box<TaskKind>),
}

impl TaskKind {
    pub fn base(&self) -> &TaskKind {
        match self {
            TaskKind::RelatedLanguage(b) => b,
            k => k,
        }
    }

    pub fn is_related(&self) -> bool {
        matches!(self, TaskKind::RelatedLanguage(_))
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Cv => f.write_str("cv"),
            TaskKind::GospelTranslation => f.write_str("gospel"),
            TaskKind::EpistleTranslation => f.write_str("epistles"),
            TaskKind::NtCompletion => f.write_str("nt-completion"),
            TaskKind::EarlyOt => f.write_str("early-ot"),
            TaskKind::LateOt => f.write_str("late-ot"),
            TaskKind::RelatedLanguage(b) => write!(f, "related:{b}"),
        }
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "cv" => TaskKind::Cv,
            "gospel" => TaskKind::GospelTranslation,
            "epistles" => TaskKind::EpistleTranslation,
            "nt-completion" => TaskKind::NtCompletion,
            "early-ot" => TaskKind::EarlyOt,
            "late-ot" => TaskKind::LateOt,
            _ => match s.strip_prefix("related:") {
                Some(b) => {
                    let base: TaskKind = b.parse()?;
                    if base == TaskKind::Cv || base.is_related() {
                        return Err(TaskError::InvalidTask(s.to_string()));
                    }
                    TaskKind::RelatedLanguage(Box::new(base))
                }
                None => return Err(TaskError::InvalidTask(s.to_string())),
            },
        })
    }
}

impl Serialize for TaskKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TaskKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvParams {
    pub test_size: usize,
    pub val_size: usize,
    pub folds: usize,
    pub seed: u64,
}

impl CvParams {
    pub fn new(seed: u64) -> Self {
        Self { test_size: 250, val_size: 250, folds: 5, seed }
    }

    /// Shared verses needed for disjoint test and validation slices.
    pub fn required(&self) -> usize {
        self.folds * (self.test_size + self.val_size)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub train_books: BTreeSet<BookId>,
    pub test_books: BTreeSet<BookId>,
    pub cv: Option<CvParams>,
}

const MINOR_PROPHETS: &str = "HOS JOL AMO OBA MIC NAH HAB ZEP HAG ZEC MAL";

fn books(list: &str) -> BTreeSet<BookId> {
    parse_book_list(list).expect("built-in book list").into_iter().collect()
}

fn nt() -> BTreeSet<BookId> {
    BookId::new_testament().collect()
}

fn whole_bible() -> BTreeSet<BookId> {
    BookId::old_testament().chain(BookId::new_testament()).collect()
}

impl TaskSpec {
    pub fn cv(params: CvParams) -> TaskSpec {
        TaskSpec { kind: TaskKind::Cv, train_books: BTreeSet::new(), test_books: BTreeSet::new(), cv: Some(params) }
    }

    /// Fixed book sets for the non-CV tasks.
    pub fn book_task(kind: TaskKind) -> Result<TaskSpec, TaskError> {
        let (train, test) = match kind.base() {
            TaskKind::Cv => return Err(TaskError::InvalidTask(kind.to_string())),
            TaskKind::GospelTranslation => (books("MRK"), books("MAT")),
            TaskKind::EpistleTranslation => (books("MAT MRK LUK JHN ACT"), books("1TH 2TH 1TI 2TI TIT")),
            TaskKind::NtCompletion => {
                let test = books("ROM REV");
                (nt().difference(&test).copied().collect(), test)
            }
            TaskKind::EarlyOt => (nt(), books("GEN EXO LEV NUM DEU RUT PSA JON")),
            TaskKind::LateOt => {
                let test = books(MINOR_PROPHETS);
                (whole_bible().difference(&test).copied().collect(), test)
            }
            TaskKind::RelatedLanguage(_) => return Err(TaskError::InvalidTask(kind.to_string())),
        };
        Ok(TaskSpec { kind, train_books: train, test_books: test, cv: None })
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        if !self.train_books.is_disjoint(&self.test_books) {
            return Err(TaskError::InvalidTask(format!("{}: train and test books overlap", self.kind)));
        }
        if self.train_books.iter().chain(&self.test_books).any(|b| b.section() == CanonSection::Deuterocanon) {
            return Err(TaskError::InvalidTask(format!("{}: deuterocanonical book in a task", self.kind)));
        }
        match (&self.kind, &self.cv) {
            (TaskKind::Cv, Some(_)) if self.train_books.is_empty() && self.test_books.is_empty() => Ok(()),
            (TaskKind::Cv, _) => Err(TaskError::InvalidTask("cv task needs parameters and no book sets".into())),
            (_, Some(_)) => Err(TaskError::InvalidTask(format!("{}: cv parameters on a book task", self.kind))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitManifest {
    pub task: TaskSpec,
    pub source: String,
    pub target: String,
    pub related: Option<String>,
    /// CV fold number, counted from 0.
    pub fold: Option<usize>,
    pub generator: String,
    /// Config fingerprint of the run that produced the manifest.
    pub fingerprint: Option<String>,
    pub train: Vec<VerseRef>,
    pub validation: Vec<VerseRef>,
    pub test: Vec<VerseRef>,
    pub related_train: Option<Vec<VerseRef>>,
    /// Test books with no target text at all.
    pub missing_test_books: Vec<BookId>,
}

impl SplitManifest {
    /// Structural checks that need no extracts.
    pub fn validate(&self) -> Result<(), TaskError> {
        self.task.validate()?;
        let sets = [("train", &self.train), ("validation", &self.validation), ("test", &self.test)];
        let mut seen: BTreeSet<VerseRef> = BTreeSet::new();
        for (name, list) in sets {
            for v in list {
                if !seen.insert(*v) {
                    return Err(TaskError::Overlap { verse: *v, set: name });
                }
            }
        }
        for v in seen.iter().chain(self.related_train.iter().flatten()) {
            if v.book.section() == CanonSection::Deuterocanon {
                return Err(TaskError::InvalidTask(format!("deuterocanonical verse {v}")));
            }
        }
        if self.task.kind != TaskKind::Cv {
            let outside = |list: &[VerseRef], books: &BTreeSet<BookId>| list.iter().find(|v| !books.contains(&v.book)).copied();
            if let Some(v) = outside(&self.train, &self.task.train_books).or_else(|| outside(&self.test, &self.task.test_books)) {
                return Err(TaskError::InvalidTask(format!("{v} lies outside the task's books")));
            }
        }
        if self.task.kind.is_related() != self.related_train.is_some() || self.task.kind.is_related() != self.related.is_some() {
            return Err(TaskError::InvalidTask("related verses must come with a related-language task".into()));
        }
        Ok(())
    }

    /// Check every listed verse has text in the extracts it is drawn from.
    pub fn check_against(
        &self,
        source: &ExtractFile,
        target: &ExtractFile,
        related: Option<&ExtractFile>,
        index: &CanonicalIndex,
    ) -> Result<(), TaskError> {
        let has_text = |f: &ExtractFile, v: &VerseRef| index.position(v).and_then(|i| f.lines.get(i)).is_some_and(|l| l.is_text());
        for v in self.train.iter().chain(&self.validation).chain(&self.test) {
            for f in [source, target] {
                if !has_text(f, v) {
                    return Err(TaskError::NoText { verse: *v, translation: f.translation_id.clone() });
                }
            }
        }
        if let (Some(list), Some(r)) = (&self.related_train, related) {
            for v in list {
                for f in [source, r] {
                    if !has_text(f, v) {
                        return Err(TaskError::NoText { verse: *v, translation: f.translation_id.clone() });
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_len(f: &ExtractFile, index: &CanonicalIndex) -> Result<(), TaskError> {
    if f.lines.len() != index.len() {
        return Err(TaskError::ExtractLength { translation: f.translation_id.clone(), lines: f.lines.len(), expected: index.len() });
    }
    Ok(())
}

/// Canonical positions where both extracts hold text.
fn shared_positions(a: &ExtractFile, b: &ExtractFile, index: &CanonicalIndex) -> Result<Vec<usize>, TaskError> {
    check_len(a, index)?;
    check_len(b, index)?;
    Ok((0..index.len())
        .filter(|&i| a.lines[i].is_text() && b.lines[i].is_text())
        .filter(|&i| index.get(i).is_some_and(|v| v.book.section() != CanonSection::Deuterocanon))
        .collect())
}

fn refs(index: &CanonicalIndex, mut pos: Vec<usize>) -> Vec<VerseRef> {
    pos.sort_unstable();
    pos.into_iter().map(|i| index.get(i).expect("position in index")).collect()
}

/// Five-fold random splits over the verses both translations contain.
pub fn build_cv_splits(
    source: &ExtractFile,
    target: &ExtractFile,
    index: &CanonicalIndex,
    params: CvParams,
) -> Result<Vec<SplitManifest>, TaskError> {
    let mut shared = shared_positions(source, target, index)?;
    if params.folds == 0 || shared.len() < params.required() {
        return Err(TaskError::InsufficientVerses { needed: params.required(), available: shared.len() });
    }
    SeededRng::new(params.seed).shuffle(&mut shared);
    let n = shared.len();
    let spec = TaskSpec::cv(params);
    let mut out = Vec::with_capacity(params.folds);
    for k in 0..params.folds {
        let t0 = params.test_size * k;
        let test: Vec<usize> = (t0..t0 + params.test_size).map(|i| shared[i % n]).collect();
        let v0 = t0 + params.test_size;
        let validation: Vec<usize> = (v0..v0 + params.val_size).map(|i| shared[i % n]).collect();
        let held: BTreeSet<usize> = test.iter().chain(&validation).copied().collect();
        let train: Vec<usize> = shared.iter().copied().filter(|p| !held.contains(p)).collect();
        out.push(SplitManifest {
            task: spec.clone(),
            source: source.translation_id.clone(),
            target: target.translation_id.clone(),
            related: None,
            fold: Some(k),
            generator: GENERATOR_ID.to_string(),
            fingerprint: None,
            train: refs(index, train),
            validation: refs(index, validation),
            test: refs(index, test),
            related_train: None,
            missing_test_books: Vec::new(),
        });
    }
    Ok(out)
}

/// Book-based split; a related-language task also lists the related
/// translation's verses covering the base task's train and test sets.
pub fn build_book_split(
    spec: &TaskSpec,
    source: &ExtractFile,
    target: &ExtractFile,
    related: Option<&ExtractFile>,
    index: &CanonicalIndex,
) -> Result<SplitManifest, TaskError> {
    spec.validate()?;
    if spec.kind == TaskKind::Cv {
        return Err(TaskError::InvalidTask("cv is not a book task".into()));
    }
    let shared = shared_positions(source, target, index)?;
    let book_of = |i: usize| index.get(i).expect("position in index").book;
    let train: Vec<usize> = shared.iter().copied().filter(|&i| spec.train_books.contains(&book_of(i))).collect();
    let test: Vec<usize> = shared.iter().copied().filter(|&i| spec.test_books.contains(&book_of(i))).collect();
    let target_books: BTreeSet<BookId> = (0..index.len()).filter(|&i| target.lines[i].is_text()).map(book_of).collect();
    let missing: Vec<BookId> = spec.test_books.iter().copied().filter(|b| !target_books.contains(b)).collect();
    if missing.len() == spec.test_books.len() {
        return Err(TaskError::TestBooksMissing(missing));
    }
    let (related_id, related_train) = match (&spec.kind, related) {
        (TaskKind::RelatedLanguage(_), Some(r)) => {
            check_len(r, index)?;
            let rel: Vec<usize> = train.iter().chain(&test).copied().filter(|&i| r.lines[i].is_text()).collect();
            (Some(r.translation_id.clone()), Some(refs(index, rel)))
        }
        (TaskKind::RelatedLanguage(_), None) => return Err(TaskError::InvalidTask("related-language task needs a related extract".into())),
        _ => (None, None),
    };
    Ok(SplitManifest {
        task: spec.clone(),
        source: source.translation_id.clone(),
        target: target.translation_id.clone(),
        related: related_id,
        fold: None,
        generator: GENERATOR_ID.to_string(),
        fingerprint: None,
        train: refs(index, train),
        validation: Vec::new(),
        test: refs(index, test),
        related_train,
        missing_test_books: missing,
    })
}
