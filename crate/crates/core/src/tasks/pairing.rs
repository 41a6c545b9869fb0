//! Source / target / related translation selection from alignment scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::TaskError;

/// Translation scope, ordered from least to most content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scope {
    #[serde(rename = "NT")]
    Nt,
    #[serde(rename = "NT+")]
    NtPlus,
    Bible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Target,
    Related,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Source => "source",
            Role::Target => "target",
            Role::Related => "related",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub roles: Vec<Role>,
    pub scope: Scope,
    pub script: String,
    pub country: String,
    #[serde(default)]
    pub branch: String,
}

impl Candidate {
    /// ISO code prefix of a translation id such as `mal-malc`.
    pub fn language(&self) -> &str {
        language_of(&self.id)
    }
}

fn language_of(id: &str) -> &str {
    id.split('-').next().unwrap_or(id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionRules {
    /// A related candidate is an outlier when its score exceeds the next
    /// best by this factor...
    pub exclusion_ratio: f64,
    /// ...and also exceeds this absolute score.
    pub exclusion_floor: f64,
    /// Related candidates scoring at least this against another candidate
    /// are treated as copies of one another and dropped.
    pub near_duplicate: f64,
    /// A related candidate of wider scope is preferred when its score is at
    /// least this fraction of the best score.
    pub scope_tolerance: f64,
    /// Curator's choice of target, overriding the scope and score rules.
    pub target_priority: Option<String>,
}

impl Default for SelectionRules {
    fn default() -> Self {
        Self {
            exclusion_ratio: 1.25,
            exclusion_floor: 0.40,
            near_duplicate: 0.80,
            scope_tolerance: 0.86,
            target_priority: None,
        }
    }
}

impl SelectionRules {
    /// Rules matching scores multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            exclusion_floor: self.exclusion_floor * factor,
            near_duplicate: self.near_duplicate * factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingCandidateSet {
    pub family: String,
    pub candidates: Vec<Candidate>,
    /// Symmetric alignment scores; either key order is accepted on lookup.
    #[serde(default)]
    pub scores: BTreeMap<String, BTreeMap<String, f64>>,
}

/// On-disk pairing configuration: a candidate set plus its rule parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingConfig {
    pub family: String,
    #[serde(default)]
    pub rules: SelectionRules,
    pub candidates: Vec<Candidate>,
    #[serde(default)]
    pub scores: BTreeMap<String, BTreeMap<String, f64>>,
}

impl PairingConfig {
    pub fn from_toml(text: &str) -> Result<Self, TaskError> {
        let cfg: PairingConfig = toml::from_str(text).map_err(|e| TaskError::Config(e.to_string()))?;
        let mut seen = BTreeSet::new();
        for c in &cfg.candidates {
            if !seen.insert(c.id.as_str()) {
                return Err(TaskError::Config(format!("duplicate candidate {}", c.id)));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pairing config serializes")
    }

    pub fn candidate_set(&self) -> PairingCandidateSet {
        PairingCandidateSet { family: self.family.clone(), candidates: self.candidates.clone(), scores: self.scores.clone() }
    }
}

impl PairingCandidateSet {
    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        let get = |x: &str, y: &str| self.scores.get(x).and_then(|m| m.get(y)).copied();
        get(a, b).or_else(|| get(b, a))
    }

    pub fn set_score(&mut self, a: &str, b: &str, score: f64) {
        if let Some(m) = self.scores.get_mut(b) {
            if m.contains_key(a) {
                m.insert(a.to_string(), score);
                return;
            }
        }
        self.scores.entry(a.to_string()).or_default().insert(b.to_string(), score);
    }

    pub fn candidate(&self, id: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }

    pub fn with_role(&self, role: Role) -> Vec<&Candidate> {
        self.candidates.iter().filter(|c| c.roles.contains(&role)).collect()
    }

    /// Every score multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        for row in s.scores.values_mut() {
            for v in row.values_mut() {
                *v *= factor;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditRule {
    Candidates,
    OnlyOption,
    CuratorPriority,
    ScopeTier,
    BestPair,
    ChosenElsewhere,
    SameLanguage,
    Unscored,
    SourceScoreFallback,
    NearDuplicate,
    AdaptationOutlier,
    SameBranch,
    ScriptMatch,
    ScopePreference,
    HighestScore,
    TieBreak,
}

impl AuditRule {
    /// Rules inferred from outcomes rather than stated procedure.
    pub fn is_heuristic(self) -> bool {
        matches!(self, AuditRule::NearDuplicate | AuditRule::AdaptationOutlier | AuditRule::ScriptMatch | AuditRule::ScopePreference)
    }
}

/// One rule application: which candidates of a role survived it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditStep {
    pub role: Role,
    pub rule: AuditRule,
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingDecision {
    pub family: String,
    pub source: String,
    pub target: String,
    pub related: String,
    pub audit: Vec<AuditStep>,
}

impl PairingDecision {
    /// Re-derive the three choices from the audit trail alone, checking that
    /// each step only narrows the previous survivors of its role.
    pub fn replay(&self) -> Result<(String, String, String), TaskError> {
        let mut live: BTreeMap<Role, BTreeSet<&str>> = BTreeMap::new();
        for (i, step) in self.audit.iter().enumerate() {
            let kept: BTreeSet<&str> = step.kept.iter().map(String::as_str).collect();
            let dropped: BTreeSet<&str> = step.dropped.iter().map(String::as_str).collect();
            let bad = || TaskError::AuditReplay(format!("step {i} ({:?}) does not follow from the previous state", step.rule));
            match live.get(&step.role) {
                None if step.rule == AuditRule::Candidates => {}
                None => return Err(bad()),
                Some(cur) => {
                    let union: BTreeSet<&str> = kept.union(&dropped).copied().collect();
                    if &union != cur || !kept.is_disjoint(&dropped) {
                        return Err(bad());
                    }
                }
            }
            live.insert(step.role, kept);
        }
        let one = |r: Role| -> Result<String, TaskError> {
            match live.get(&r) {
                Some(s) if s.len() == 1 => Ok(s.iter().next().expect("one").to_string()),
                _ => Err(TaskError::AuditReplay(format!("{r} is not decided by the audit"))),
            }
        };
        Ok((one(Role::Source)?, one(Role::Target)?, one(Role::Related)?))
    }

    pub fn audit_text(&self) -> String {
        let mut s = String::new();
        for step in &self.audit {
            let h = if step.rule.is_heuristic() { " [heuristic]" } else { "" };
            s.push_str(&format!(
                "{}\t{:?}{}\tkept={}\tdropped={}\t{}\n",
                step.role,
                step.rule,
                h,
                step.kept.join(","),
                step.dropped.join(","),
                step.note
            ));
        }
        s
    }
}

struct Audit {
    steps: Vec<AuditStep>,
}

impl Audit {
    fn push(&mut self, role: Role, rule: AuditRule, before: &[&Candidate], kept: &[&Candidate], note: String) {
        let keep: BTreeSet<&str> = kept.iter().map(|c| c.id.as_str()).collect();
        self.steps.push(AuditStep {
            role,
            rule,
            kept: kept.iter().map(|c| c.id.clone()).collect(),
            dropped: before.iter().filter(|c| !keep.contains(c.id.as_str())).map(|c| c.id.clone()).collect(),
            note,
        });
    }
}

/// Keep `pred` matches if any exist and they are a strict subset.
fn narrow<'a>(
    audit: &mut Audit,
    role: Role,
    rule: AuditRule,
    cur: Vec<&'a Candidate>,
    pred: impl Fn(&Candidate) -> bool,
    note: &str,
) -> Vec<&'a Candidate> {
    let kept: Vec<&Candidate> = cur.iter().copied().filter(|c| pred(c)).collect();
    if kept.is_empty() || kept.len() == cur.len() {
        return cur;
    }
    audit.push(role, rule, &cur, &kept, note.to_string());
    kept
}

fn fmt_score(x: f64) -> String {
    format!("{x:.4}")
}

pub fn select_pairing(set: &PairingCandidateSet, rules: &SelectionRules) -> Result<PairingDecision, TaskError> {
    let mut audit = Audit { steps: Vec::new() };
    let roles = [Role::Source, Role::Target, Role::Related];
    for r in roles {
        let c = set.with_role(r);
        if c.is_empty() {
            return Err(TaskError::EmptyRole(r));
        }
        audit.push(r, AuditRule::Candidates, &c, &c, format!("{} candidates", c.len()));
    }

    // Target.
    let all_targets = set.with_role(Role::Target);
    let sources = set.with_role(Role::Source);
    let target: &Candidate = if all_targets.len() == 1 {
        all_targets[0]
    } else if let Some(p) = &rules.target_priority {
        let t = all_targets.iter().copied().find(|c| &c.id == p).ok_or_else(|| TaskError::UnknownCandidate(p.clone()))?;
        audit.push(Role::Target, AuditRule::CuratorPriority, &all_targets, &[t], format!("curator priority for {p}"));
        t
    } else {
        let top = all_targets.iter().map(|c| c.scope).max().expect("nonempty");
        let tier = narrow(&mut audit, Role::Target, AuditRule::ScopeTier, all_targets.clone(), |c| c.scope == top, &format!("scope {top:?} preferred"));
        let mut best: Option<(f64, &Candidate, &Candidate)> = None;
        for t in &tier {
            for s in &sources {
                if s.id == t.id {
                    continue;
                }
                if let Some(v) = set.score(&s.id, &t.id) {
                    let better = match best {
                        None => true,
                        Some((bv, _, bs)) => v > bv || (v == bv && s.scope > bs.scope),
                    };
                    if better {
                        best = Some((v, t, s));
                    }
                }
            }
        }
        let (v, t, s) = best.ok_or(TaskError::NoScores(Role::Target))?;
        audit.push(Role::Target, AuditRule::BestPair, &tier, &[t], format!("best pair {} / {} = {}", s.id, t.id, fmt_score(v)));
        t
    };
    if all_targets.len() == 1 {
        audit.push(Role::Target, AuditRule::OnlyOption, &all_targets, &[target], "only option".into());
    }

    // Source.
    let mut cur: Vec<&Candidate> = sources.iter().copied().collect();
    if cur.iter().any(|c| c.id == target.id) {
        let kept: Vec<&Candidate> = cur.iter().copied().filter(|c| c.id != target.id).collect();
        audit.push(Role::Source, AuditRule::ChosenElsewhere, &cur, &kept, format!("{} is the target", target.id));
        cur = kept;
    }
    let source: &Candidate = match cur.len() {
        0 => return Err(TaskError::EmptyRole(Role::Source)),
        1 => {
            audit.push(Role::Source, AuditRule::OnlyOption, &cur, &cur, "only option".into());
            cur[0]
        }
        _ => {
            let scored: Vec<&Candidate> = cur.iter().copied().filter(|c| set.score(&c.id, &target.id).is_some()).collect();
            if scored.is_empty() {
                return Err(TaskError::NoScores(Role::Source));
            }
            if scored.len() < cur.len() {
                audit.push(Role::Source, AuditRule::Unscored, &cur, &scored, format!("no score against {}", target.id));
            }
            pick_highest(&mut audit, Role::Source, scored, |c| set.score(&c.id, &target.id).expect("scored"), &target.id)
        }
    };

    // Related.
    let related_all = set.with_role(Role::Related);
    let mut cur: Vec<&Candidate> = related_all.clone();
    let kept: Vec<&Candidate> = cur.iter().copied().filter(|c| c.id != target.id && c.id != source.id).collect();
    if kept.len() < cur.len() {
        audit.push(Role::Related, AuditRule::ChosenElsewhere, &cur, &kept, "already chosen as source or target".into());
        cur = kept;
    }
    let kept: Vec<&Candidate> = cur.iter().copied().filter(|c| c.language() != target.language()).collect();
    if kept.len() < cur.len() {
        audit.push(Role::Related, AuditRule::SameLanguage, &cur, &kept, format!("same language as {}", target.id));
        cur = kept;
    }
    if cur.is_empty() {
        return Err(TaskError::AllRelatedExcluded);
    }
    let related: &Candidate = if cur.len() == 1 {
        audit.push(Role::Related, AuditRule::OnlyOption, &cur, &cur, "only option".into());
        cur[0]
    } else {
        let mut anchor = target;
        if cur.iter().all(|c| set.score(&c.id, &target.id).is_none()) {
            let kept: Vec<&Candidate> = cur.iter().copied().filter(|c| set.score(&c.id, &source.id).is_some()).collect();
            if kept.is_empty() {
                return Err(TaskError::NoScores(Role::Related));
            }
            audit.push(Role::Related, AuditRule::SourceScoreFallback, &cur, &kept, format!("no scores against {}; ranking against {}", target.id, source.id));
            cur = kept;
            anchor = source;
        }
        let score = |c: &Candidate| set.score(&c.id, &anchor.id);
        let kept: Vec<&Candidate> = cur.iter().copied().filter(|c| score(c).is_some()).collect();
        if kept.len() < cur.len() {
            audit.push(Role::Related, AuditRule::Unscored, &cur, &kept, format!("no score against {}", anchor.id));
            cur = kept;
        }
        // Copies of one another.
        let kept: Vec<&Candidate> = cur
            .iter()
            .copied()
            .filter(|c| !related_all.iter().any(|d| d.id != c.id && d.id != anchor.id && set.score(&c.id, &d.id).is_some_and(|v| v >= rules.near_duplicate)))
            .collect();
        if kept.len() < cur.len() {
            audit.push(Role::Related, AuditRule::NearDuplicate, &cur, &kept, format!("score >= {} with another candidate", rules.near_duplicate));
            cur = kept;
        }
        // Suspiciously strong outliers, peeled one at a time.
        loop {
            let mut ranked: Vec<&Candidate> = cur.clone();
            ranked.sort_by(|a, b| score(b).expect("scored").total_cmp(&score(a).expect("scored")));
            if ranked.len() < 2 {
                break;
            }
            let (top, next) = (score(ranked[0]).expect("scored"), score(ranked[1]).expect("scored"));
            if top > rules.exclusion_ratio * next && top > rules.exclusion_floor {
                let kept: Vec<&Candidate> = cur.iter().copied().filter(|c| c.id != ranked[0].id).collect();
                audit.push(
                    Role::Related,
                    AuditRule::AdaptationOutlier,
                    &cur,
                    &kept,
                    format!("{} = {} exceeds {} x next best {} and floor {}", ranked[0].id, fmt_score(top), rules.exclusion_ratio, fmt_score(next), rules.exclusion_floor),
                );
                cur = kept;
            } else {
                break;
            }
        }
        if cur.is_empty() {
            return Err(TaskError::AllRelatedExcluded);
        }
        if !target.branch.is_empty() {
            cur = narrow(&mut audit, Role::Related, AuditRule::SameBranch, cur, |c| c.branch == target.branch, &format!("same branch as target ({})", target.branch));
        }
        cur = narrow(&mut audit, Role::Related, AuditRule::ScriptMatch, cur, |c| c.script == target.script, &format!("same script as target ({})", target.script));
        let best = cur.iter().map(|c| score(c).expect("scored")).fold(f64::NEG_INFINITY, f64::max);
        for tier in [Scope::Bible, Scope::NtPlus, Scope::Nt] {
            let tier_best = cur.iter().filter(|c| c.scope == tier).map(|c| score(c).expect("scored")).fold(f64::NEG_INFINITY, f64::max);
            if tier_best >= rules.scope_tolerance * best {
                cur = narrow(
                    &mut audit,
                    Role::Related,
                    AuditRule::ScopePreference,
                    cur,
                    |c| c.scope == tier,
                    &format!("scope {tier:?} within {} of best {}", rules.scope_tolerance, fmt_score(best)),
                );
                break;
            }
        }
        let anchor_id = anchor.id.clone();
        pick_highest(&mut audit, Role::Related, cur, |c| score(c).expect("scored"), &anchor_id)
    };

    Ok(PairingDecision {
        family: set.family.clone(),
        source: source.id.clone(),
        target: target.id.clone(),
        related: related.id.clone(),
        audit: audit.steps,
    })
}

/// Highest score wins; ties go to the wider scope, then to file order.
fn pick_highest<'a>(audit: &mut Audit, role: Role, cur: Vec<&'a Candidate>, score: impl Fn(&Candidate) -> f64, against: &str) -> &'a Candidate {
    if cur.len() == 1 {
        audit.push(role, AuditRule::OnlyOption, &cur, &cur, "only option".into());
        return cur[0];
    }
    let best = cur.iter().map(|c| score(c)).fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<&Candidate> = cur.iter().copied().filter(|c| score(c) == best).collect();
    audit.push(role, AuditRule::HighestScore, &cur, &top, format!("{} against {against}", fmt_score(best)));
    if top.len() == 1 {
        return top[0];
    }
    let widest = top.iter().map(|c| c.scope).max().expect("nonempty");
    let pick = top.iter().copied().find(|c| c.scope == widest).expect("nonempty");
    audit.push(role, AuditRule::TieBreak, &top, &[pick], format!("tie broken by scope {widest:?}, then listing order"));
    pick
}
