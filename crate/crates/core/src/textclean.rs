//! Character-level cleaning of extract text.
//!
//! Rules come from a tab-separated file (see `data/clean_rules.tsv`). Each
//! line is cleaned by running the enabled rules in priority order and
//! repeating until a pass changes nothing, so the result is a fixed point.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_script::{Script, UnicodeScript};

use crate::extract::{ExtractFile, ExtractLine, RANGE_MARKER};

/// Share of letters a script needs before lookalike rules for it switch on.
pub const DOMINANT_SCRIPT_SHARE: f64 = 0.8;

/// Upper bound on passes per line. The shipped rules settle in two.
const MAX_PASSES: usize = 16;

const BUILTIN_RULES: &str = include_str!("../data/clean_rules.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleCategory {
    SequenceOrder,
    Composition,
    Lookalike,
    CharNormalization,
    PunctuationSpacing,
    Ligature,
    ReplacementChar,
}

impl RuleCategory {
    pub const ALL: [RuleCategory; 7] = [
        RuleCategory::SequenceOrder,
        RuleCategory::Composition,
        RuleCategory::Lookalike,
        RuleCategory::CharNormalization,
        RuleCategory::PunctuationSpacing,
        RuleCategory::Ligature,
        RuleCategory::ReplacementChar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleCategory::SequenceOrder => "sequence-order",
            RuleCategory::Composition => "composition",
            RuleCategory::Lookalike => "lookalike",
            RuleCategory::CharNormalization => "char-normalization",
            RuleCategory::PunctuationSpacing => "punctuation-spacing",
            RuleCategory::Ligature => "ligature",
            RuleCategory::ReplacementChar => "replacement-char",
        }
    }

    /// Lower runs first. Rules sharing a priority keep file order.
    pub fn priority(self) -> u8 {
        match self {
            RuleCategory::SequenceOrder | RuleCategory::Composition => 0,
            RuleCategory::Lookalike | RuleCategory::CharNormalization => 1,
            RuleCategory::PunctuationSpacing => 2,
            RuleCategory::Ligature => 3,
            RuleCategory::ReplacementChar => 4,
        }
    }
}

impl fmt::Display for RuleCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown rule category {s:?}"))
    }
}

/// Transforms too irregular for a literal pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Nfc,
    NuktaOrder,
    SpaceBeforeComma,
    DuplicateComma,
    SpaceAfterComma,
    FffdQuotes,
}

impl Builtin {
    fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "nfc" => Builtin::Nfc,
            "nukta-order" => Builtin::NuktaOrder,
            "space-before-comma" => Builtin::SpaceBeforeComma,
            "duplicate-comma" => Builtin::DuplicateComma,
            "space-after-comma" => Builtin::SpaceAfterComma,
            "fffd-quotes" => Builtin::FffdQuotes,
            _ => return None,
        })
    }

    fn apply(self, s: &str) -> (String, usize) {
        match self {
            Builtin::Nfc => {
                let out: String = s.nfc().collect();
                let n = usize::from(out != s);
                (out, n)
            }
            Builtin::NuktaOrder => reorder_nukta(s),
            Builtin::SpaceBeforeComma => space_before_comma(s),
            Builtin::DuplicateComma => duplicate_comma(s),
            Builtin::SpaceAfterComma => space_after_comma(s),
            Builtin::FffdQuotes => fffd_quotes(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Literal(String),
    Builtin(Builtin),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RuleContext {
    Always,
    /// Active only when the named script dominates the translation.
    Script(String),
    /// Active only when enabled for the translation by id.
    OptIn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanRule {
    pub id: String,
    pub category: RuleCategory,
    pub pattern: Pattern,
    pub replacement: String,
    pub context: RuleContext,
}

impl CleanRule {
    fn is_active(&self, ctx: &CleanContext) -> bool {
        match &self.context {
            RuleContext::Always => true,
            RuleContext::Script(s) => ctx.dominant_script.as_deref() == Some(s.as_str()),
            RuleContext::OptIn => ctx.opt_in.contains(&self.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CleanError {
    #[error("rule file line {line}: {message}")]
    RuleParse { line: usize, message: String },
    #[error("duplicate rule id {0:?}")]
    DuplicateRule(String),
}

/// A validated rule list, held in application order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<CleanRule>,
}

impl RuleSet {
    pub fn parse(text: &str) -> Result<RuleSet, CleanError> {
        let mut rules = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| CleanError::RuleParse { line, message };
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 5 {
                return Err(err(format!("expected 5 tab-separated columns, found {}", cols.len())));
            }
            let id = cols[0].trim().to_string();
            if id.is_empty() {
                return Err(err("empty rule id".into()));
            }
            let category: RuleCategory = cols[1].trim().parse().map_err(err)?;
            let pattern = if let Some(name) = cols[2].strip_prefix('@') {
                Pattern::Builtin(
                    Builtin::from_name(name).ok_or_else(|| err(format!("unknown built-in @{name}")))?,
                )
            } else {
                let lit = unescape(cols[2]).map_err(err)?;
                if lit.is_empty() {
                    return Err(err("empty pattern".into()));
                }
                Pattern::Literal(lit)
            };
            let replacement = if cols[3] == "-" { String::new() } else { unescape(cols[3]).map_err(err)? };
            let context = match cols[4].trim() {
                "-" | "" => RuleContext::Always,
                "opt-in" => RuleContext::OptIn,
                other => match other.strip_prefix("script=") {
                    Some(name) if Script::from_full_name(name).is_some() => RuleContext::Script(name.to_string()),
                    Some(name) => return Err(err(format!("unknown script {name:?}"))),
                    None => return Err(err(format!("bad context {other:?}"))),
                },
            };
            if category == RuleCategory::Lookalike {
                let single = matches!(&pattern, Pattern::Literal(p) if p.chars().count() == 1);
                if !single || !matches!(context, RuleContext::Script(_)) {
                    return Err(err("lookalike rules map one character and need a script context".into()));
                }
            }
            if let Pattern::Literal(p) = &pattern {
                if replacement.contains(p.as_str()) {
                    return Err(err("replacement contains its own pattern".into()));
                }
            }
            if !seen.insert(id.clone()) {
                return Err(CleanError::DuplicateRule(id));
            }
            rules.push(CleanRule { id, category, pattern, replacement, context });
        }
        rules.sort_by_key(|r| r.category.priority());
        Ok(RuleSet { rules })
    }

    /// The rules shipped with the crate.
    pub fn builtin() -> &'static RuleSet {
        static SET: OnceLock<RuleSet> = OnceLock::new();
        SET.get_or_init(|| RuleSet::parse(BUILTIN_RULES).expect("shipped rule file parses"))
    }

    pub fn rules(&self) -> &[CleanRule] {
        &self.rules
    }

    pub fn get(&self, id: &str) -> Option<&CleanRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// A set holding only the named rule.
    pub fn only(&self, id: &str) -> Option<RuleSet> {
        self.get(id).map(|r| RuleSet { rules: vec![r.clone()] })
    }
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('u') => {
                if chars.next() != Some('{') {
                    return Err(format!("bad escape in {s:?}"));
                }
                let hex: String = chars.by_ref().take_while(|&c| c != '}').collect();
                let cp = u32::from_str_radix(&hex, 16).map_err(|_| format!("bad code point {hex:?}"))?;
                out.push(char::from_u32(cp).ok_or_else(|| format!("invalid code point {hex}"))?);
            }
            other => return Err(format!("bad escape \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

/// Per-translation settings that decide which rules run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleanContext {
    /// Full Unicode script name, e.g. "Cyrillic".
    pub dominant_script: Option<String>,
    /// Ids of opt-in rules enabled for this translation.
    pub opt_in: BTreeSet<String>,
}

impl CleanContext {
    pub fn with_script(script: &str) -> CleanContext {
        CleanContext { dominant_script: Some(script.to_string()), opt_in: BTreeSet::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedRule {
    pub rule: String,
    pub count: usize,
}

enum Step<'a> {
    Rule(&'a CleanRule),
    Lookalikes { script: Script, map: HashMap<char, (&'a CleanRule, String)> },
}

/// Rules resolved against a context. Reuse one per translation.
pub struct Cleaner<'a> {
    steps: Vec<Step<'a>>,
}

impl<'a> Cleaner<'a> {
    pub fn new(rules: &'a RuleSet, ctx: &CleanContext) -> Cleaner<'a> {
        let mut steps = Vec::new();
        let mut lookalike_at: Option<usize> = None;
        for rule in rules.rules.iter().filter(|r| r.is_active(ctx)) {
            if rule.category != RuleCategory::Lookalike {
                steps.push(Step::Rule(rule));
                continue;
            }
            // Active lookalikes all share the dominant script, so one step holds them.
            let Pattern::Literal(p) = &rule.pattern else { continue };
            let from = p.chars().next().expect("validated single char");
            let idx = *lookalike_at.get_or_insert_with(|| {
                let name = ctx.dominant_script.as_deref().unwrap_or_default();
                let script = Script::from_full_name(name).unwrap_or(Script::Unknown);
                steps.push(Step::Lookalikes { script, map: HashMap::new() });
                steps.len() - 1
            });
            if let Step::Lookalikes { map, .. } = &mut steps[idx] {
                map.entry(from).or_insert((rule, rule.replacement.clone()));
            }
        }
        Cleaner { steps }
    }

    /// Clean one line, returning the text and per-rule change counts.
    pub fn clean(&self, line: &str) -> (String, Vec<AppliedRule>) {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut cur = line.to_string();
        for _ in 0..MAX_PASSES {
            let before = cur.clone();
            for step in &self.steps {
                match step {
                    Step::Rule(rule) => {
                        let (next, n) = apply_rule(rule, &cur);
                        if n > 0 {
                            *counts.entry(&rule.id).or_default() += n;
                            cur = next;
                        }
                    }
                    Step::Lookalikes { script, map } => {
                        cur = apply_lookalikes(&cur, *script, map, &mut counts);
                    }
                }
            }
            if cur == before {
                break;
            }
        }
        let applied = counts
            .into_iter()
            .map(|(rule, count)| AppliedRule { rule: rule.to_string(), count })
            .collect();
        (cur, applied)
    }
}

/// Clean a single line under `ctx`.
pub fn clean_text(line: &str, ctx: &CleanContext, rules: &RuleSet) -> (String, Vec<AppliedRule>) {
    Cleaner::new(rules, ctx).clean(line)
}

fn apply_rule(rule: &CleanRule, s: &str) -> (String, usize) {
    match &rule.pattern {
        Pattern::Builtin(b) => b.apply(s),
        Pattern::Literal(p) => {
            let n = s.matches(p.as_str()).count();
            if n == 0 {
                (s.to_string(), 0)
            } else {
                (s.replace(p.as_str(), &rule.replacement), n)
            }
        }
    }
}

/// Replace lookalikes word by word. A word is touched only if it already
/// has a letter of the dominant script or every letter in it is a lookalike,
/// so foreign words written wholly in another script survive.
fn apply_lookalikes<'a>(
    s: &str,
    script: Script,
    map: &HashMap<char, (&'a CleanRule, String)>,
    counts: &mut BTreeMap<&'a str, usize>,
) -> String {
    let mut out = String::with_capacity(s.len());
    for (is_space, word) in split_words(s) {
        if is_space || !word.chars().any(|c| map.contains_key(&c)) {
            out.push_str(word);
            continue;
        }
        let native = word.chars().any(|c| c.is_alphabetic() && c.script() == script);
        let all_lookalike = word.chars().all(|c| !c.is_alphabetic() || map.contains_key(&c));
        if !(native || all_lookalike) {
            out.push_str(word);
            continue;
        }
        for c in word.chars() {
            match map.get(&c) {
                Some((rule, rep)) => {
                    out.push_str(rep);
                    *counts.entry(rule.id.as_str()).or_default() += 1;
                }
                None => out.push(c),
            }
        }
    }
    out
}

/// Alternating runs of whitespace and non-whitespace.
fn split_words(s: &str) -> impl Iterator<Item = (bool, &str)> {
    let mut rest = s;
    std::iter::from_fn(move || {
        let first = rest.chars().next()?;
        let space = first.is_whitespace();
        let end = rest
            .char_indices()
            .find(|&(_, c)| c.is_whitespace() != space)
            .map_or(rest.len(), |(i, _)| i);
        let (word, tail) = rest.split_at(end);
        rest = tail;
        Some((space, word))
    })
}

// Offsets within each Indic block (U+0900..U+0D7F, 0x80 apart).
fn indic_offset(c: char) -> Option<u32> {
    let cp = c as u32;
    (0x0900..0x0D80).contains(&cp).then_some(cp & 0x7F)
}

fn is_nukta(c: char) -> bool {
    indic_offset(c) == Some(0x3C)
}

fn is_indic_consonant(c: char) -> bool {
    matches!(indic_offset(c), Some(0x15..=0x39) | Some(0x58..=0x5F))
}

/// Dependent vowel signs and the trailing nasal/visarga signs.
fn is_indic_sign(c: char) -> bool {
    matches!(
        indic_offset(c),
        Some(0x01..=0x03) | Some(0x3A..=0x3B) | Some(0x3E..=0x4C) | Some(0x55..=0x57) | Some(0x62..=0x63)
    )
}

fn reorder_nukta(s: &str) -> (String, usize) {
    let mut out: Vec<char> = Vec::with_capacity(s.len());
    let mut moves = 0;
    for c in s.chars() {
        if is_nukta(c) {
            let mut j = out.len();
            while j > 0 && is_indic_sign(out[j - 1]) {
                j -= 1;
            }
            if j < out.len() && j > 0 && is_indic_consonant(out[j - 1]) {
                out.insert(j, c);
                moves += 1;
                continue;
            }
        }
        out.push(c);
    }
    (out.into_iter().collect(), moves)
}

/// Compose a cluster and put a nukta directly after its consonant, ahead of
/// any vowel sign.
pub fn normalize_order(cluster: &str) -> String {
    let composed: String = cluster.nfc().collect();
    reorder_nukta(&composed).0
}

fn is_inline_space(c: char) -> bool {
    c.is_whitespace() && c != '\n'
}

fn space_before_comma(s: &str) -> (String, usize) {
    let mut out = String::with_capacity(s.len());
    let mut pending = String::new();
    let mut n = 0;
    for c in s.chars() {
        if is_inline_space(c) {
            pending.push(c);
            continue;
        }
        if c == ',' && !pending.is_empty() {
            n += 1;
        } else {
            out.push_str(&pending);
        }
        pending.clear();
        out.push(c);
    }
    out.push_str(&pending);
    (out, n)
}

fn duplicate_comma(s: &str) -> (String, usize) {
    let mut out = String::with_capacity(s.len());
    let mut n = 0;
    let mut prev_comma = false;
    for c in s.chars() {
        if c == ',' && prev_comma {
            n += 1;
            continue;
        }
        prev_comma = c == ',';
        out.push(c);
    }
    (out, n)
}

fn space_after_comma(s: &str) -> (String, usize) {
    let mut out = String::with_capacity(s.len() + 8);
    let mut n = 0;
    let mut prev_comma = false;
    for c in s.chars() {
        if prev_comma && c.is_alphabetic() {
            out.push(' ');
            n += 1;
        }
        prev_comma = c == ',';
        out.push(c);
    }
    (out, n)
}

fn fffd_quotes(s: &str) -> (String, usize) {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut n = 0;
    for (i, &c) in chars.iter().enumerate() {
        if c != '\u{FFFD}' {
            out.push(c);
            continue;
        }
        n += 1;
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let opens = prev.map_or(true, |p| p.is_whitespace() || "([{\u{201C}\u{2018}".contains(p));
        let q = if opens {
            '\u{201C}'
        } else if prev.is_some_and(char::is_alphabetic) && next.is_some_and(char::is_alphabetic) {
            '\u{2019}'
        } else {
            '\u{201D}'
        };
        out.push(q);
    }
    (out, n)
}

pub fn is_private_use(c: char) -> bool {
    matches!(c as u32, 0xE000..=0xF8FF | 0xF0000..=0xFFFFD | 0x100000..=0x10FFFD)
}

fn letter_script(c: char) -> Option<Script> {
    if !c.is_alphabetic() {
        return None;
    }
    match c.script() {
        Script::Common | Script::Inherited | Script::Unknown => None,
        s => Some(s),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FlagKind {
    PrivateUse,
    WrongScript { script: String },
}

/// A character the cleaner left alone but a reviewer should see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanFlag {
    /// 1-based line in the extract file.
    pub line: usize,
    /// 1-based character column.
    pub column: usize,
    pub ch: char,
    #[serde(flatten)]
    pub kind: FlagKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub translation_id: String,
    pub dominant_script: Option<String>,
    /// Letter counts by script name.
    pub letters: BTreeMap<String, usize>,
    /// Changes by rule id. Empty for a pre-clean analysis.
    pub changes: BTreeMap<String, usize>,
    pub lines_changed: usize,
    pub flags: Vec<CleanFlag>,
}

impl CleanReport {
    pub fn total_changes(&self) -> usize {
        self.changes.values().sum()
    }

    pub fn private_use(&self) -> impl Iterator<Item = &CleanFlag> {
        self.flags.iter().filter(|f| f.kind == FlagKind::PrivateUse)
    }

    pub fn wrong_script(&self) -> impl Iterator<Item = &CleanFlag> {
        self.flags.iter().filter(|f| matches!(f.kind, FlagKind::WrongScript { .. }))
    }

    /// Tab-separated rows: translation, rule, category, changes. One row
    /// per rule in `rules`, zeros included.
    pub fn tsv_rows(&self, rules: &RuleSet) -> String {
        let mut out = String::new();
        for r in rules.rules() {
            let n = self.changes.get(&r.id).copied().unwrap_or(0);
            out.push_str(&format!("{}\t{}\t{}\t{}\n", self.translation_id, r.id, r.category, n));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: script {}, {} changes on {} lines",
            self.translation_id,
            self.dominant_script.as_deref().unwrap_or("mixed"),
            self.total_changes(),
            self.lines_changed
        );
        let pu = self.private_use().count();
        let ws = self.wrong_script().count();
        if pu + ws > 0 {
            s.push_str(&format!("; flagged {pu} private-use, {ws} wrong-script"));
        }
        s
    }
}

pub const CLEAN_TSV_HEADER: &str = "translation\trule\tcategory\tchanges\n";

/// Census of letters by script, dominant script, and flags.
pub fn analyze_text(extract: &ExtractFile) -> CleanReport {
    let mut letters: BTreeMap<&'static str, usize> = BTreeMap::new();
    for line in &extract.lines {
        if let Some(t) = line.text() {
            for s in t.chars().filter_map(letter_script) {
                *letters.entry(s.full_name()).or_default() += 1;
            }
        }
    }
    let total: usize = letters.values().sum();
    let dominant = letters
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .filter(|(_, &n)| total > 0 && n as f64 >= DOMINANT_SCRIPT_SHARE * total as f64)
        .map(|(&s, _)| s);

    let mut flags = Vec::new();
    for (i, line) in extract.lines.iter().enumerate() {
        let Some(t) = line.text() else { continue };
        for (col, c) in t.chars().enumerate() {
            let kind = if is_private_use(c) {
                FlagKind::PrivateUse
            } else {
                match (letter_script(c), dominant) {
                    (Some(s), Some(d)) if s.full_name() != d => FlagKind::WrongScript { script: s.full_name().to_string() },
                    _ => continue,
                }
            };
            flags.push(CleanFlag { line: i + 1, column: col + 1, ch: c, kind });
        }
    }
    CleanReport {
        translation_id: extract.translation_id.clone(),
        dominant_script: dominant.map(String::from),
        letters: letters.into_iter().map(|(s, n)| (s.to_string(), n)).collect(),
        changes: BTreeMap::new(),
        lines_changed: 0,
        flags,
    }
}

/// Clean every text line of an extract. The dominant script is recomputed on
/// the output until it stops moving, so cleaning the result again is a no-op.
/// Flags in the report describe what remains after cleaning.
pub fn clean_extract(extract: &ExtractFile, rules: &RuleSet, opt_in: &BTreeSet<String>) -> (ExtractFile, CleanReport) {
    let mut cur = extract.clone();
    let mut changes: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..4 {
        let ctx = CleanContext { dominant_script: analyze_text(&cur).dominant_script, opt_in: opt_in.clone() };
        let cleaner = Cleaner::new(rules, &ctx);
        let mut changed = false;
        for line in cur.lines.iter_mut() {
            let ExtractLine::Text(t) = line else { continue };
            let (out, applied) = cleaner.clean(t);
            if out == *t || out == RANGE_MARKER {
                continue;
            }
            changed = true;
            for a in applied {
                *changes.entry(a.rule).or_default() += a.count;
            }
            *line = if out.is_empty() { ExtractLine::Empty } else { ExtractLine::Text(out) };
        }
        if !changed {
            break;
        }
    }
    let lines_changed = extract.lines.iter().zip(&cur.lines).filter(|(a, b)| a != b).count();
    let mut report = analyze_text(&cur);
    report.changes = changes;
    report.lines_changed = lines_changed;
    (cur, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(s: &str, script: Option<&str>) -> String {
        let ctx = CleanContext { dominant_script: script.map(String::from), opt_in: BTreeSet::new() };
        clean_text(s, &ctx, RuleSet::builtin()).0
    }

    fn extract(lines: &[&str]) -> ExtractFile {
        ExtractFile {
            translation_id: "xyz-test".into(),
            lines: lines
                .iter()
                .map(|l| if l.is_empty() { ExtractLine::Empty } else { ExtractLine::Text(l.to_string()) })
                .collect(),
        }
    }

    #[test]
    fn builtin_rules_parse_in_priority_order() {
        let rules = RuleSet::builtin().rules();
        assert!(rules.len() > 40);
        assert!(rules.windows(2).all(|w| w[0].category.priority() <= w[1].category.priority()));
    }

    #[test]
    fn ligature() {
        assert_eq!(clean("\u{FB01}", Some("Latin")), "fi");
        assert_eq!(clean("o\u{FB03}ce", None), "office");
    }

    #[test]
    fn latin_a_in_cyrillic_word() {
        assert_eq!(clean("Aнна", Some("Cyrillic")), "\u{0410}нна");
        // No gate without a dominant Cyrillic context.
        assert_eq!(clean("Aнна", None), "Aнна");
        // A genuine Latin word stays.
        assert_eq!(clean("Jesus", Some("Cyrillic")), "Jesus");
    }

    #[test]
    fn comma_spacing() {
        assert_eq!(clean("a ,b,, c", None), "a, b, c");
        assert_eq!(clean("1,000", None), "1,000");
    }

    #[test]
    fn reversed_c() {
        assert_eq!(clean("\u{2184}k\u{2184}", None), "\u{0254}k\u{0254}");
    }

    #[test]
    fn fffd_needs_opt_in() {
        let rules = RuleSet::builtin();
        let line = "\u{FFFD}Go,\u{FFFD} he said. Don\u{FFFD}t";
        assert_eq!(clean(line, None), line);
        let ctx = CleanContext { dominant_script: None, opt_in: ["fffd-quotes".to_string()].into() };
        assert_eq!(clean_text(line, &ctx, rules).0, "\u{201C}Go,\u{201D} he said. Don\u{2019}t");
    }

    #[test]
    fn nukta_order() {
        // ka, vowel sign ii, nukta
        assert_eq!(normalize_order("\u{0915}\u{0940}\u{093C}"), "\u{0915}\u{093C}\u{0940}");
        assert_eq!(normalize_order("\u{0915}\u{093C}\u{0940}"), "\u{0915}\u{093C}\u{0940}");
        assert_eq!(normalize_order("e\u{0301}"), "\u{00E9}");
    }

    #[test]
    fn danda() {
        assert_eq!(clean("कहा|", Some("Devanagari")), "कहा\u{0964}");
        assert_eq!(clean("कहा |", Some("Devanagari")), "कहा \u{0964}");
        assert_eq!(clean("hello|", Some("Devanagari")), "hello|");
    }

    #[test]
    fn analysis_flags() {
        let e = extract(&["In the beginning", "", "God created"]);
        let r = analyze_text(&e);
        assert_eq!(r.dominant_script.as_deref(), Some("Latin"));
        assert!(r.flags.is_empty());

        let e = extract(&["abc", "d\u{E001}e"]);
        let r = analyze_text(&e);
        assert_eq!(r.private_use().map(|f| (f.line, f.column)).collect::<Vec<_>>(), vec![(2, 2)]);

        let cyr = "в начале сотворил бог небо и землю земля же была безвидна и пуста";
        let e = extract(&[cyr, "Aминь oн cел"]);
        let r = analyze_text(&e);
        assert_eq!(r.dominant_script.as_deref(), Some("Cyrillic"));
        assert_eq!(r.wrong_script().count(), 3);
        assert!(r.wrong_script().all(|f| f.line == 2));
    }

    #[test]
    fn clean_extract_report() {
        let cyr = "в начале сотворил бог небо и землю земля же была безвидна и пуста";
        let e = extract(&[cyr, "Aминь oн ceл ,да", "", "\u{E000}z"]);
        let (out, report) = clean_extract(&e, RuleSet::builtin(), &BTreeSet::new());
        assert_eq!(out.lines.len(), e.lines.len());
        assert_eq!(out.lines[1], ExtractLine::Text("Аминь он сел, да".into()));
        assert_eq!(report.lines_changed, 1);
        assert_eq!(report.total_changes(), 6);
        assert_eq!(report.wrong_script().count(), 1); // the lone z
        assert_eq!(report.private_use().count(), 1);
        let (again, r2) = clean_extract(&out, RuleSet::builtin(), &BTreeSet::new());
        assert_eq!(again, out);
        assert_eq!(r2.total_changes(), 0);
    }

    #[test]
    fn rule_file_errors() {
        let bad = "x\tlookalike\tab\tc\tscript=Latin\n";
        assert!(matches!(RuleSet::parse(bad), Err(CleanError::RuleParse { line: 1, .. })));
        let bad = "# c\nx\tligature\ta\tb\n";
        assert!(matches!(RuleSet::parse(bad), Err(CleanError::RuleParse { line: 2, .. })));
        let dup = "x\tligature\ta\tb\t-\nx\tligature\tc\td\t-\n";
        assert_eq!(RuleSet::parse(dup), Err(CleanError::DuplicateRule("x".into())));
        let grow = "x\tligature\ta\taa\t-\n";
        assert!(RuleSet::parse(grow).is_err());
    }
}
