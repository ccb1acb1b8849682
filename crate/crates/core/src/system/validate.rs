use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{ContentId, ContextBlock, ContextId, OutcomeAlphabet, System, VariableId};
use crate::index::MixedRadix;
use crate::rational::{format_rational, parse_rational};
use crate::Rational;

/// Untrusted system description, field-for-field the JSON file format.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSystem {
    pub contents: IndexMap<String, Vec<String>>,
    pub contexts: Vec<String>,
    pub blocks: Vec<RawBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBlock {
    pub context: String,
    pub variables: Vec<RawVariable>,
    pub pmf: IndexMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawVariable {
    pub content: String,
    /// Optional per-variable alphabet; must repeat the content's alphabet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<String>>,
}

/// One violated invariant and where it was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Issue {
    Malformed { message: String },
    EmptyContentId,
    EmptyAlphabet { content: String },
    EmptyOutcomeLabel { content: String },
    DuplicateOutcome { content: String, label: String },
    CommaInOutcome { content: String, label: String },
    EmptyContextId,
    DuplicateContext { context: String },
    UnknownContext { block: usize, context: String },
    DuplicateBlock { context: String },
    MissingBlock { context: String },
    EmptyBlock { context: String },
    UnknownContent { context: String, content: String },
    DuplicateVariable { context: String, content: String },
    AlphabetMismatch { context: String, content: String, declared: Vec<String>, found: Vec<String> },
    KeyArity { context: String, key: String, expected: usize, found: usize },
    UnknownOutcome { context: String, key: String, label: String },
    DuplicateKey { context: String, key: String },
    BadProbability { context: String, key: String, message: String },
    NegativeProbability { context: String, key: String, value: String },
    NotNormalized { context: String, sum: String },
    UnusedContent { content: String },
}

impl Issue {
    pub fn kind(&self) -> &'static str {
        match self {
            Issue::Malformed { .. } => "malformed",
            Issue::EmptyContentId => "empty-content-id",
            Issue::EmptyAlphabet { .. } => "empty-alphabet",
            Issue::EmptyOutcomeLabel { .. } => "empty-outcome-label",
            Issue::DuplicateOutcome { .. } => "duplicate-outcome",
            Issue::CommaInOutcome { .. } => "comma-in-outcome",
            Issue::EmptyContextId => "empty-context-id",
            Issue::DuplicateContext { .. } => "duplicate-context",
            Issue::UnknownContext { .. } => "unknown-context",
            Issue::DuplicateBlock { .. } => "duplicate-block",
            Issue::MissingBlock { .. } => "missing-block",
            Issue::EmptyBlock { .. } => "empty-block",
            Issue::UnknownContent { .. } => "unknown-content",
            Issue::DuplicateVariable { .. } => "duplicate-variable",
            Issue::AlphabetMismatch { .. } => "alphabet-mismatch",
            Issue::KeyArity { .. } => "key-arity",
            Issue::UnknownOutcome { .. } => "unknown-outcome",
            Issue::DuplicateKey { .. } => "duplicate-key",
            Issue::BadProbability { .. } => "bad-probability",
            Issue::NegativeProbability { .. } => "negative-probability",
            Issue::NotNormalized { .. } => "pmf-not-normalized",
            Issue::UnusedContent { .. } => "unused-content",
        }
    }

    pub fn location(&self) -> String {
        match self {
            Issue::Malformed { .. } => "document".into(),
            Issue::EmptyContentId | Issue::EmptyContextId => "contents/contexts".into(),
            Issue::EmptyAlphabet { content }
            | Issue::EmptyOutcomeLabel { content }
            | Issue::DuplicateOutcome { content, .. }
            | Issue::CommaInOutcome { content, .. }
            | Issue::UnusedContent { content } => format!("content '{content}'"),
            Issue::DuplicateContext { context } | Issue::MissingBlock { context } => {
                format!("context '{context}'")
            }
            Issue::UnknownContext { block, context } => format!("blocks[{block}] (context '{context}')"),
            Issue::DuplicateBlock { context }
            | Issue::EmptyBlock { context }
            | Issue::NotNormalized { context, .. } => format!("block '{context}'"),
            Issue::UnknownContent { context, content }
            | Issue::DuplicateVariable { context, content }
            | Issue::AlphabetMismatch { context, content, .. } => {
                format!("block '{context}', variable {content}@{context}")
            }
            Issue::KeyArity { context, key, .. }
            | Issue::UnknownOutcome { context, key, .. }
            | Issue::DuplicateKey { context, key }
            | Issue::BadProbability { context, key, .. }
            | Issue::NegativeProbability { context, key, .. } => {
                format!("block '{context}', pmf key '{key}'")
            }
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Malformed { message } => write!(f, "malformed system description: {message}"),
            Issue::EmptyContentId => f.write_str("content id is empty"),
            Issue::EmptyAlphabet { .. } => f.write_str("outcome alphabet is empty"),
            Issue::EmptyOutcomeLabel { .. } => f.write_str("outcome label is empty"),
            Issue::DuplicateOutcome { label, .. } => write!(f, "duplicate outcome label '{label}'"),
            Issue::CommaInOutcome { label, .. } => {
                write!(f, "outcome label '{label}' contains a comma")
            }
            Issue::EmptyContextId => f.write_str("context id is empty"),
            Issue::DuplicateContext { .. } => f.write_str("duplicate context"),
            Issue::UnknownContext { .. } => f.write_str("unknown context"),
            Issue::DuplicateBlock { .. } => f.write_str("more than one block for this context"),
            Issue::MissingBlock { .. } => f.write_str("context has no block"),
            Issue::EmptyBlock { .. } => f.write_str("block has no variables"),
            Issue::UnknownContent { content, .. } => write!(f, "unknown content '{content}'"),
            Issue::DuplicateVariable { .. } => f.write_str("duplicate variable"),
            Issue::AlphabetMismatch { declared, found, .. } => write!(
                f,
                "alphabet mismatch: content declares {{{}}} but variable uses {{{}}}",
                declared.join(","),
                found.join(",")
            ),
            Issue::KeyArity { expected, found, .. } => {
                write!(f, "joint outcome has {found} components, expected {expected}")
            }
            Issue::UnknownOutcome { label, .. } => write!(f, "outcome '{label}' not in alphabet"),
            Issue::DuplicateKey { .. } => f.write_str("joint outcome listed twice"),
            Issue::BadProbability { message, .. } => write!(f, "bad probability: {message}"),
            Issue::NegativeProbability { value, .. } => write!(f, "negative probability {value}"),
            Issue::NotNormalized { sum, .. } => write!(f, "pmf not normalized (sums to {sum})"),
            Issue::UnusedContent { .. } => f.write_str("content appears in no context"),
        }
    }
}

/// Every invariant violation found in a candidate system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "valid": false,
            "issues": self.issues.iter().map(|i| serde_json::json!({
                "kind": i.kind(),
                "location": i.location(),
                "message": i.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation issue(s)", self.issues.len())?;
        for issue in &self.issues {
            write!(f, "\n  {}: {}", issue.location(), issue)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

fn probability_text(value: &serde_json::Value) -> Result<String, String> {
    match value {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(format!("expected a \"p/q\" or decimal string, found {other}")),
    }
}

/// Checks every invariant of the data model and builds a [`System`], or
/// reports all violations found.
pub fn validate_system(raw: &RawSystem) -> Result<System, ValidationReport> {
    let mut issues = Vec::new();

    let mut contents: IndexMap<ContentId, OutcomeAlphabet> = IndexMap::new();
    for (id, labels) in &raw.contents {
        if id.is_empty() {
            issues.push(Issue::EmptyContentId);
        }
        if labels.is_empty() {
            issues.push(Issue::EmptyAlphabet { content: id.clone() });
        }
        let mut seen = HashSet::new();
        for label in labels {
            if label.is_empty() {
                issues.push(Issue::EmptyOutcomeLabel { content: id.clone() });
            } else if label.contains(',') {
                issues.push(Issue::CommaInOutcome { content: id.clone(), label: label.clone() });
            }
            if !seen.insert(label.as_str()) {
                issues.push(Issue::DuplicateOutcome { content: id.clone(), label: label.clone() });
            }
        }
        contents.insert(ContentId::new(id.clone()), OutcomeAlphabet(labels.clone()));
    }

    let mut contexts = Vec::with_capacity(raw.contexts.len());
    let mut context_set = HashSet::new();
    for id in &raw.contexts {
        if id.is_empty() {
            issues.push(Issue::EmptyContextId);
        }
        if context_set.insert(id.as_str()) {
            contexts.push(ContextId::new(id.clone()));
        } else {
            issues.push(Issue::DuplicateContext { context: id.clone() });
        }
    }

    let mut blocks_by_context: HashMap<&str, ContextBlock> = HashMap::new();
    let mut used_contents: HashSet<&str> = HashSet::new();
    for (index, block) in raw.blocks.iter().enumerate() {
        let ctx = block.context.as_str();
        if !context_set.contains(ctx) {
            issues.push(Issue::UnknownContext { block: index, context: ctx.into() });
            continue;
        }
        if blocks_by_context.contains_key(ctx) {
            issues.push(Issue::DuplicateBlock { context: ctx.into() });
            continue;
        }
        if let Some(b) = validate_block(block, &contents, &mut issues) {
            for v in &block.variables {
                used_contents.insert(v.content.as_str());
            }
            blocks_by_context.insert(ctx, b);
        } else {
            for v in &block.variables {
                used_contents.insert(v.content.as_str());
            }
        }
    }

    let mut blocks = Vec::with_capacity(contexts.len());
    for ctx in &contexts {
        match blocks_by_context.remove(ctx.as_str()) {
            Some(b) => blocks.push(b),
            None if raw.blocks.iter().any(|b| b.context == ctx.as_str()) => {}
            None => issues.push(Issue::MissingBlock { context: ctx.to_string() }),
        }
    }

    for id in raw.contents.keys() {
        if !used_contents.contains(id.as_str()) {
            issues.push(Issue::UnusedContent { content: id.clone() });
        }
    }

    if issues.is_empty() {
        Ok(System {
            contents,
            contexts,
            blocks,
            provenance: raw.provenance.clone(),
        })
    } else {
        Err(ValidationReport { issues })
    }
}

fn validate_block(
    raw: &RawBlock,
    contents: &IndexMap<ContentId, OutcomeAlphabet>,
    issues: &mut Vec<Issue>,
) -> Option<ContextBlock> {
    let ctx = raw.context.as_str();
    let before = issues.len();
    if raw.variables.is_empty() {
        issues.push(Issue::EmptyBlock { context: ctx.into() });
        return None;
    }

    let mut alphabets = Vec::with_capacity(raw.variables.len());
    let mut seen = HashSet::new();
    for var in &raw.variables {
        if !seen.insert(var.content.as_str()) {
            issues.push(Issue::DuplicateVariable { context: ctx.into(), content: var.content.clone() });
        }
        match contents.get(&ContentId::new(var.content.clone())) {
            None => issues.push(Issue::UnknownContent { context: ctx.into(), content: var.content.clone() }),
            Some(alphabet) => {
                if let Some(found) = &var.outcomes {
                    if found != alphabet.labels() {
                        issues.push(Issue::AlphabetMismatch {
                            context: ctx.into(),
                            content: var.content.clone(),
                            declared: alphabet.labels().to_vec(),
                            found: found.clone(),
                        });
                    }
                }
                alphabets.push(alphabet);
            }
        }
    }
    if issues.len() > before {
        return None;
    }

    let arity = raw.variables.len();
    let mut pmf = BTreeMap::new();
    let mut total = Rational::zero();
    for (key, value) in &raw.pmf {
        let labels: Vec<&str> = key.split(',').collect();
        if labels.len() != arity {
            issues.push(Issue::KeyArity {
                context: ctx.into(),
                key: key.clone(),
                expected: arity,
                found: labels.len(),
            });
            continue;
        }
        let mut tuple = Vec::with_capacity(arity);
        for (label, alphabet) in labels.iter().zip(&alphabets) {
            match alphabet.position(label) {
                Some(i) => tuple.push(i),
                None => issues.push(Issue::UnknownOutcome {
                    context: ctx.into(),
                    key: key.clone(),
                    label: (*label).into(),
                }),
            }
        }
        if tuple.len() != arity {
            continue;
        }
        let p = match probability_text(value).and_then(|t| parse_rational(&t).map_err(|e| e.to_string())) {
            Ok(p) => p,
            Err(message) => {
                issues.push(Issue::BadProbability { context: ctx.into(), key: key.clone(), message });
                continue;
            }
        };
        if p.is_negative() {
            issues.push(Issue::NegativeProbability {
                context: ctx.into(),
                key: key.clone(),
                value: format_rational(&p),
            });
            continue;
        }
        total += &p;
        if pmf.contains_key(&tuple) {
            issues.push(Issue::DuplicateKey { context: ctx.into(), key: key.clone() });
            continue;
        }
        if !p.is_zero() {
            pmf.insert(tuple, p);
        } else {
            pmf.entry(tuple).or_insert_with(Rational::zero);
        }
    }
    if issues.len() == before && !total.is_one() {
        issues.push(Issue::NotNormalized { context: ctx.into(), sum: format_rational(&total) });
    }
    if issues.len() > before {
        return None;
    }
    pmf.retain(|_, p| !p.is_zero());

    Some(ContextBlock {
        context: ContextId::new(ctx),
        variables: raw
            .variables
            .iter()
            .map(|v| VariableId::new(v.content.clone(), ctx))
            .collect(),
        radix: MixedRadix::new(alphabets.iter().map(|a| a.len()).collect()),
        pmf,
    })
}
