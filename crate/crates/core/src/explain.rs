//! Contrast between the optimal and a user policy's feature expectations,
//! and its rendering into template-based sentences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counterfactual::{FeasibilityReport, TruncationCause};
use crate::features::FeatureExpectation;
use crate::sar::{Cell, FeatureVector, FeatureWeights, Scenario};

pub const TEMPLATE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TEMPLATE_SET: &str = "default";
const DEFAULT_TEMPLATES: &str = include_str!("../templates/default.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplainError {
    #[error("feature dimensions differ: optimal {optimal}, user {user}, weights {alpha}, labels {labels}")]
    DimensionMismatch {
        optimal: usize,
        user: usize,
        alpha: usize,
        labels: usize,
    },
    #[error("unknown template set {0:?}")]
    UnknownTemplateSet(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unsupported template format-version {0}")]
    UnsupportedVersion(String),
    #[error("template set has no {0:?} entry")]
    MissingKey(String),
    #[error("template {key:?} uses unknown slot {{{slot}}}")]
    UnknownSlot { key: String, slot: String },
    #[error("unknown template key {0:?}")]
    UnknownKey(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureKind {
    Interest { cell: Cell },
    Target,
    Battery,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FeatureLabel {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

/// Labels in feature order for `scenario`.
pub fn feature_labels(scenario: &Scenario) -> Vec<FeatureLabel> {
    let names = scenario.feature_labels();
    let mut kinds: Vec<FeatureKind> = scenario
        .cells_of_interest
        .iter()
        .map(|c| FeatureKind::Interest { cell: c.cell })
        .collect();
    kinds.push(FeatureKind::Target);
    kinds.push(FeatureKind::Battery);
    names
        .into_iter()
        .zip(kinds)
        .map(|(name, kind)| FeatureLabel { name, kind })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bucket {
    AlmostNever,
    FarLess,
    AboutHalf,
    Less,
    AboutAsOften,
    More,
    AboutTwice,
    ManyTimes,
    /// The user policy's occupancy is zero and the optimal one's is not.
    OnlyOptimal,
    /// Both occupancies are zero.
    Neither,
}

impl Bucket {
    pub fn key(self) -> &'static str {
        match self {
            Bucket::AlmostNever => "almost-never",
            Bucket::FarLess => "far-less",
            Bucket::AboutHalf => "about-half",
            Bucket::Less => "less",
            Bucket::AboutAsOften => "about-as-often",
            Bucket::More => "more",
            Bucket::AboutTwice => "about-twice",
            Bucket::ManyTimes => "many-times",
            Bucket::OnlyOptimal => "only-optimal",
            Bucket::Neither => "neither",
        }
    }
}

/// `r` falls in this rule's bucket when `r < max`, or `r <= max` if
/// `inclusive`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketRule {
    pub max: f64,
    pub inclusive: bool,
    pub bucket: Bucket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExplainConfig {
    /// Checked in order; ratios above every rule are `above`.
    pub buckets: Vec<BucketRule>,
    pub above: Bucket,
    /// The weighting sentence needs the dominant weight to be at least this
    /// many times every other nonzero weight.
    pub weighting_factor: f64,
    /// Non-dominant features are mentioned when their contribution gap is at
    /// least this fraction of the value gap.
    pub mention_threshold: f64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        let rule = |max, inclusive, bucket| BucketRule { max, inclusive, bucket };
        Self {
            buckets: vec![
                rule(0.05, false, Bucket::AlmostNever),
                rule(0.4, false, Bucket::FarLess),
                rule(0.6, true, Bucket::AboutHalf),
                rule(0.9, false, Bucket::Less),
                rule(1.1, true, Bucket::AboutAsOften),
                rule(1.8, false, Bucket::More),
                rule(2.5, true, Bucket::AboutTwice),
            ],
            above: Bucket::ManyTimes,
            weighting_factor: 10.0,
            mention_threshold: 0.01,
        }
    }
}

impl ExplainConfig {
    pub fn classify(&self, optimal: f64, user: f64) -> (Option<f64>, Bucket) {
        if user == 0.0 {
            return (
                None,
                if optimal == 0.0 {
                    Bucket::Neither
                } else {
                    Bucket::OnlyOptimal
                },
            );
        }
        let r = optimal / user;
        let bucket = self
            .buckets
            .iter()
            .find(|b| if b.inclusive { r <= b.max } else { r < b.max })
            .map_or(self.above, |b| b.bucket);
        (Some(r), bucket)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RatioFact {
    pub feature: usize,
    /// `μ*_k / μ^hu_k`; absent when the user occupancy is zero.
    pub ratio: Option<f64>,
    pub bucket: Bucket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ContrastReport {
    pub labels: Vec<FeatureLabel>,
    pub mu_optimal: FeatureVector,
    pub mu_user: FeatureVector,
    pub alpha: FeatureWeights,
    pub contributions_optimal: Vec<f64>,
    pub contributions_user: Vec<f64>,
    pub value_optimal: f64,
    pub value_user: f64,
    /// Index maximizing `|α_k (μ*_k − μ^hu_k)|`; absent when every gap is zero.
    pub dominant_feature: Option<usize>,
    pub ratio_facts: Vec<RatioFact>,
    /// Cells of interest neither policy reaches because the user path was cut
    /// short by the battery.
    pub infeasible_features: Vec<usize>,
    /// Features other than the dominant one whose contribution gap clears
    /// the mention threshold.
    pub mentioned_features: Vec<usize>,
    pub weighting_clause: bool,
}

impl ContrastReport {
    pub fn contribution_gap(&self, k: usize) -> f64 {
        self.contributions_optimal[k] - self.contributions_user[k]
    }

    pub fn value_gap(&self) -> f64 {
        self.value_optimal - self.value_user
    }
}

pub fn contrast(
    mu_optimal: &FeatureExpectation,
    mu_user: &FeatureExpectation,
    alpha: &FeatureWeights,
    labels: &[FeatureLabel],
    feasibility: Option<&FeasibilityReport>,
    config: &ExplainConfig,
) -> Result<ContrastReport, ExplainError> {
    let k = alpha.len();
    if mu_optimal.mu.len() != k || mu_user.mu.len() != k || labels.len() != k {
        return Err(ExplainError::DimensionMismatch {
            optimal: mu_optimal.mu.len(),
            user: mu_user.mu.len(),
            alpha: k,
            labels: labels.len(),
        });
    }
    let opt = &mu_optimal.mu;
    let user = &mu_user.mu;
    let contributions_optimal: Vec<f64> = (0..k).map(|i| alpha.0[i] * opt[i]).collect();
    let contributions_user: Vec<f64> = (0..k).map(|i| alpha.0[i] * user[i]).collect();
    let value_optimal = alpha.dot(opt);
    let value_user = alpha.dot(user);

    let gaps: Vec<f64> = (0..k)
        .map(|i| (contributions_optimal[i] - contributions_user[i]).abs())
        .collect();
    let mut dominant = None;
    for (i, &g) in gaps.iter().enumerate() {
        if g > 0.0 && dominant.is_none_or(|d: usize| g > gaps[d]) {
            dominant = Some(i);
        }
    }

    let ratio_facts = (0..k)
        .map(|i| {
            let (ratio, bucket) = config.classify(opt[i], user[i]);
            RatioFact {
                feature: i,
                ratio,
                bucket,
            }
        })
        .collect();

    let battery_cut = feasibility.is_some_and(|f| f.truncation_cause == TruncationCause::Battery);
    let infeasible_features: Vec<usize> = if battery_cut {
        let unreached = &feasibility.expect("checked above").unreached_cells;
        labels
            .iter()
            .enumerate()
            .filter(|(i, l)| match l.kind {
                FeatureKind::Interest { cell } => opt[*i] == 0.0 && user[*i] == 0.0 && unreached.contains(&cell),
                _ => false,
            })
            .map(|(i, _)| i)
            .collect()
    } else {
        Vec::new()
    };

    let value_gap = (value_optimal - value_user).abs();
    let mentioned_features = (0..k)
        .filter(|&i| {
            Some(i) != dominant
                && gaps[i] > 0.0
                && gaps[i] >= config.mention_threshold * value_gap
                && !infeasible_features.contains(&i)
        })
        .collect();

    let weighting_clause = dominant.is_some_and(|d| {
        let a = alpha.0[d].abs();
        let others: Vec<f64> = (0..k)
            .filter(|&i| i != d && alpha.0[i] != 0.0)
            .map(|i| alpha.0[i].abs())
            .collect();
        !others.is_empty() && others.iter().all(|&o| a >= config.weighting_factor * o) && value_optimal > value_user
    });

    Ok(ContrastReport {
        labels: labels.to_vec(),
        mu_optimal: opt.clone(),
        mu_user: user.clone(),
        alpha: alpha.clone(),
        contributions_optimal,
        contributions_user,
        value_optimal,
        value_user,
        dominant_feature: dominant,
        ratio_facts,
        infeasible_features,
        mentioned_features,
        weighting_clause,
    })
}

/// Where a number in the text came from, e.g. `mu-optimal[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Substitution {
    pub sentence: usize,
    pub slot: String,
    pub text: String,
    pub source: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Sentence {
    pub template_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExplanationText {
    pub template_set: String,
    pub sentences: Vec<Sentence>,
    pub substitutions: Vec<Substitution>,
}

impl ExplanationText {
    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn template_ids(&self) -> Vec<&str> {
        self.sentences.iter().map(|s| s.template_id.as_str()).collect()
    }
}

/// Keys every template set defines, with the slots each may use.
const KEYS: &[(&str, &[&str])] = &[
    ("battery", &["features"]),
    ("frequency.target", &["comparison", "optimal", "user"]),
    ("frequency.interest", &["feature", "comparison", "optimal", "user"]),
    ("frequency.battery", &["comparison", "optimal", "user"]),
    ("only-optimal.target", &["optimal"]),
    ("only-optimal.interest", &["feature", "optimal"]),
    ("only-optimal.battery", &["optimal"]),
    ("weighting", &["feature", "others"]),
    ("value.optimal-ahead", &["value_optimal", "value_user"]),
    ("value.user-ahead", &["value_optimal", "value_user"]),
    ("identical", &[]),
    ("name.target", &[]),
    ("name.interest", &["label", "cell"]),
    ("name.battery", &[]),
    ("list.pair", &["first", "second"]),
    ("list.more", &["items", "last"]),
    ("bucket.almost-never", &[]),
    ("bucket.far-less", &[]),
    ("bucket.about-half", &[]),
    ("bucket.less", &[]),
    ("bucket.about-as-often", &[]),
    ("bucket.more", &[]),
    ("bucket.about-twice", &[]),
    ("bucket.many-times", &[]),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub id: String,
    entries: BTreeMap<String, String>,
}

impl TemplateSet {
    /// Parses the `key = text` resource format.
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut version = None;
        let mut id = None;
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(TemplateError::Syntax {
                    line,
                    message: "expected `key = text`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "format-version" => version = Some(value.to_string()),
                "id" => id = Some(value.to_string()),
                _ => {
                    let Some((_, allowed)) = KEYS.iter().find(|(k, _)| *k == key) else {
                        return Err(TemplateError::UnknownKey(key.into()));
                    };
                    for slot in slots(value).map_err(|message| TemplateError::Syntax { line, message })? {
                        if !allowed.contains(&slot) {
                            return Err(TemplateError::UnknownSlot {
                                key: key.into(),
                                slot: slot.into(),
                            });
                        }
                    }
                    if entries.insert(key.to_string(), value.to_string()).is_some() {
                        return Err(TemplateError::Syntax {
                            line,
                            message: format!("duplicate key {key:?}"),
                        });
                    }
                }
            }
        }
        match version {
            Some(v) if v == TEMPLATE_FORMAT_VERSION.to_string() => {}
            Some(v) => return Err(TemplateError::UnsupportedVersion(v)),
            None => return Err(TemplateError::MissingKey("format-version".into())),
        }
        let id = id.ok_or_else(|| TemplateError::MissingKey("id".into()))?;
        for (key, _) in KEYS {
            if !entries.contains_key(*key) {
                return Err(TemplateError::MissingKey((*key).into()));
            }
        }
        Ok(Self { id, entries })
    }

    /// A template set shipped with the crate.
    pub fn builtin(id: &str) -> Result<Self, ExplainError> {
        match id {
            DEFAULT_TEMPLATE_SET => Ok(Self::parse(DEFAULT_TEMPLATES)?),
            _ => Err(ExplainError::UnknownTemplateSet(id.into())),
        }
    }

    fn fill(&self, key: &str, values: &[(&str, &str)]) -> String {
        let template = &self.entries[key];
        let mut out = String::with_capacity(template.len());
        let mut rest = template.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let close = rest[open..].find('}').expect("validated at parse time") + open;
            let slot = &rest[open + 1..close];
            let value = values
                .iter()
                .find(|(k, _)| *k == slot)
                .map(|(_, v)| *v)
                .unwrap_or_default();
            out.push_str(value);
            rest = &rest[close + 1..];
        }
        out.push_str(rest);
        out
    }
}

fn slots(template: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find(['{', '}']) {
        if rest.as_bytes()[open] == b'}' {
            return Err("unmatched `}`".into());
        }
        let close = rest[open + 1..]
            .find(['{', '}'])
            .filter(|&i| rest.as_bytes()[open + 1 + i] == b'}')
            .ok_or("unterminated slot")?
            + open
            + 1;
        let name = &rest[open + 1..close];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("bad slot name {name:?}"));
        }
        out.push(name);
        rest = &rest[close + 1..];
    }
    Ok(out)
}

pub fn format_number(x: f64) -> String {
    format!("{x:.3}")
}

struct Renderer<'a> {
    set: &'a TemplateSet,
    report: &'a ContrastReport,
    out: ExplanationText,
}

impl Renderer<'_> {
    fn push(&mut self, key: &str, values: &[(&str, &str)], numbers: &[(&str, &str, f64)]) {
        let sentence = self.out.sentences.len();
        let mut all: Vec<(&str, &str)> = values.to_vec();
        let formatted: Vec<String> = numbers.iter().map(|(_, _, v)| format_number(*v)).collect();
        for ((slot, source, value), text) in numbers.iter().zip(&formatted) {
            all.push((slot, text));
            self.out.substitutions.push(Substitution {
                sentence,
                slot: (*slot).into(),
                text: text.clone(),
                source: (*source).into(),
                value: *value,
            });
        }
        let text = self.set.fill(key, &all);
        self.out.sentences.push(Sentence {
            template_id: key.into(),
            text,
        });
    }

    fn name(&self, k: usize) -> String {
        let label = &self.report.labels[k];
        match label.kind {
            FeatureKind::Target => self.set.fill("name.target", &[]),
            FeatureKind::Battery => self.set.fill("name.battery", &[]),
            FeatureKind::Interest { cell } => {
                let cell = format!("[{},{}]", cell.x, cell.y);
                self.set
                    .fill("name.interest", &[("label", &label.name), ("cell", &cell)])
            }
        }
    }

    fn list(&self, items: &[String]) -> String {
        match items {
            [] => String::new(),
            [one] => one.clone(),
            [first, second] => self.set.fill("list.pair", &[("first", first), ("second", second)]),
            [init @ .., last] => self
                .set
                .fill("list.more", &[("items", &init.join(", ")), ("last", last)]),
        }
    }

    fn frequency(&mut self, k: usize) {
        let fact = &self.report.ratio_facts[k];
        let kind = match self.report.labels[k].kind {
            FeatureKind::Target => "target",
            FeatureKind::Interest { .. } => "interest",
            FeatureKind::Battery => "battery",
        };
        let feature = self.name(k);
        let src_opt = format!("mu-optimal[{k}]");
        let src_user = format!("mu-user[{k}]");
        let (opt, user) = (self.report.mu_optimal[k], self.report.mu_user[k]);
        match fact.bucket {
            Bucket::Neither => {}
            Bucket::OnlyOptimal => {
                let key = format!("only-optimal.{kind}");
                self.push(&key, &[("feature", &feature)], &[("optimal", &src_opt, opt)]);
            }
            bucket => {
                let comparison = self.set.fill(&format!("bucket.{}", bucket.key()), &[]);
                let key = format!("frequency.{kind}");
                self.push(
                    &key,
                    &[("feature", &feature), ("comparison", &comparison)],
                    &[("optimal", &src_opt, opt), ("user", &src_user, user)],
                );
            }
        }
    }
}

/// Renders `report` with a built-in template set.
pub fn render_explanation(report: &ContrastReport, template_set: &str) -> Result<ExplanationText, ExplainError> {
    Ok(render_with(report, &TemplateSet::builtin(template_set)?))
}

/// Sentence order: battery infeasibility, the dominant feature's frequency
/// comparison, other mentioned features, the weighting rationale, the value
/// comparison.
pub fn render_with(report: &ContrastReport, set: &TemplateSet) -> ExplanationText {
    let mut r = Renderer {
        set,
        report,
        out: ExplanationText {
            template_set: set.id.clone(),
            sentences: Vec::new(),
            substitutions: Vec::new(),
        },
    };
    if !report.infeasible_features.is_empty() {
        let names: Vec<String> = report.infeasible_features.iter().map(|&k| r.name(k)).collect();
        let features = r.list(&names);
        r.push("battery", &[("features", &features)], &[]);
    }
    let Some(dominant) = report.dominant_feature else {
        if report.infeasible_features.is_empty() {
            r.push("identical", &[], &[]);
        }
        return r.out;
    };
    r.frequency(dominant);
    for &k in &report.mentioned_features {
        r.frequency(k);
    }
    if report.weighting_clause {
        let others: Vec<String> = (0..report.alpha.len())
            .filter(|&i| i != dominant && report.alpha.0[i] != 0.0)
            .map(|i| r.name(i))
            .collect();
        let feature = r.name(dominant);
        let others = r.list(&others);
        r.push("weighting", &[("feature", &feature), ("others", &others)], &[]);
    }
    let key = if report.value_optimal >= report.value_user {
        "value.optimal-ahead"
    } else {
        "value.user-ahead"
    };
    r.push(
        key,
        &[],
        &[
            ("value_optimal", "value-optimal", report.value_optimal),
            ("value_user", "value-user", report.value_user),
        ],
    );
    r.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Method;

    fn fe(v: &[f64]) -> FeatureExpectation {
        FeatureExpectation {
            mu: FeatureVector(v.to_vec()),
            method: Method::Exact,
            standard_errors: None,
            truncation_residual_bound: 0.0,
        }
    }

    fn case1_labels() -> Vec<FeatureLabel> {
        let s = Scenario::new(5, Cell::new(1, 1), 500.0, 25).with_interest(Cell::new(1, 5), 3.0);
        feature_labels(&s)
    }

    #[test]
    fn builtin_set_parses() {
        let set = TemplateSet::builtin("default").unwrap();
        assert_eq!(set.id, "default");
        assert!(matches!(
            TemplateSet::builtin("nope"),
            Err(ExplainError::UnknownTemplateSet(_))
        ));
    }

    #[test]
    fn case_study_rows() {
        let alpha = FeatureWeights(vec![3.0, 500.0, 0.0]);
        let report = contrast(
            &fe(&[0.036, 0.731, 0.0]),
            &fe(&[0.684, 0.296, 0.0]),
            &alpha,
            &case1_labels(),
            None,
            &ExplainConfig::default(),
        )
        .unwrap();
        assert_eq!(report.dominant_feature, Some(1));
        assert_eq!(report.ratio_facts[1].bucket, Bucket::AboutTwice);
        assert_eq!(report.ratio_facts[2].bucket, Bucket::Neither);
        assert!(report.weighting_clause);
        let text = render_explanation(&report, "default").unwrap().text();
        assert!(text.contains("finds the target about twice as often"), "{text}");
        assert!(
            text.contains("much higher weighting than the cell of interest"),
            "{text}"
        );
    }

    #[test]
    fn identical_inputs() {
        let alpha = FeatureWeights(vec![3.0, 500.0, 0.0]);
        let mu = fe(&[0.2, 0.3, 0.1]);
        let report = contrast(&mu, &mu, &alpha, &case1_labels(), None, &ExplainConfig::default()).unwrap();
        assert_eq!(report.value_optimal, report.value_user);
        assert_eq!(report.dominant_feature, None);
        let text = render_explanation(&report, "default").unwrap();
        assert_eq!(text.text(), "Both policies perform identically in expectation.");
    }

    #[test]
    fn dimension_mismatch() {
        let alpha = FeatureWeights(vec![3.0, 500.0, 0.0]);
        let err = contrast(
            &fe(&[0.0; 3]),
            &fe(&[0.0; 4]),
            &alpha,
            &case1_labels(),
            None,
            &ExplainConfig::default(),
        );
        assert!(matches!(err, Err(ExplainError::DimensionMismatch { .. })));
    }

    #[test]
    fn bucket_edges() {
        let c = ExplainConfig::default();
        assert_eq!(c.classify(0.049, 1.0).1, Bucket::AlmostNever);
        assert_eq!(c.classify(0.05, 1.0).1, Bucket::FarLess);
        assert_eq!(c.classify(0.6, 1.0).1, Bucket::AboutHalf);
        assert_eq!(c.classify(1.0, 1.0).1, Bucket::AboutAsOften);
        assert_eq!(c.classify(1.8, 1.0).1, Bucket::AboutTwice);
        assert_eq!(c.classify(2.5, 1.0).1, Bucket::AboutTwice);
        assert_eq!(c.classify(2.51, 1.0).1, Bucket::ManyTimes);
        assert_eq!(c.classify(0.3, 0.0).1, Bucket::OnlyOptimal);
        assert_eq!(c.classify(0.0, 0.0).1, Bucket::Neither);
    }

    #[test]
    fn template_errors() {
        let base = "format-version = 1\nid = x\n";
        assert!(matches!(TemplateSet::parse(base), Err(TemplateError::MissingKey(_))));
        assert!(matches!(
            TemplateSet::parse("format-version = 2\nid = x\n"),
            Err(TemplateError::UnsupportedVersion(_))
        ));
        assert!(matches!(
            TemplateSet::parse(&format!("{base}battery = reach {{nope}}\n")),
            Err(TemplateError::UnknownSlot { .. })
        ));
        assert!(matches!(
            TemplateSet::parse(&format!("{base}battery = reach {{features\n")),
            Err(TemplateError::Syntax { .. })
        ));
        assert!(matches!(
            TemplateSet::parse(&format!("{base}what = x\n")),
            Err(TemplateError::UnknownKey(_))
        ));
        assert!(matches!(
            TemplateSet::parse("no equals"),
            Err(TemplateError::Syntax { line: 1, .. })
        ));
    }
}
