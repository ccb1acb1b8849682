use indexmap::IndexMap;
use thiserror::Error;

use super::{validate_system, RawBlock, RawSystem, RawVariable, System, ValidationReport};
use crate::rational::format_rational;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(#[from] ValidationReport),
}

/// Parses and validates a system document. JSON syntax errors are kept apart
/// from structural problems, which land in the validation report.
pub fn parse_system(text: &str) -> Result<System, LoadError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    system_from_json(value)
}

pub fn system_from_json(value: serde_json::Value) -> Result<System, LoadError> {
    let raw: RawSystem = serde_json::from_value(value).map_err(|e| {
        ValidationReport {
            issues: vec![super::Issue::Malformed { message: e.to_string() }],
        }
    })?;
    Ok(validate_system(&raw)?)
}

/// Canonical raw form: declared orders, nonzero atoms in lexicographic
/// outcome order, probabilities as `p/q`.
pub fn system_to_raw(system: &System) -> RawSystem {
    let contents = system
        .contents()
        .map(|(id, alphabet)| (id.to_string(), alphabet.labels().to_vec()))
        .collect();
    let blocks = system
        .blocks()
        .iter()
        .map(|block| {
            let alphabets: Vec<_> = block
                .variables()
                .iter()
                .map(|v| system.alphabet(&v.content).expect("validated content"))
                .collect();
            let pmf: IndexMap<String, serde_json::Value> = block
                .atoms()
                .iter()
                .map(|(tuple, p)| {
                    let key = tuple
                        .iter()
                        .zip(&alphabets)
                        .map(|(&i, a)| a.label(i))
                        .collect::<Vec<_>>()
                        .join(",");
                    (key, serde_json::Value::String(format_rational(p)))
                })
                .collect();
            RawBlock {
                context: block.context().to_string(),
                variables: block
                    .variables()
                    .iter()
                    .map(|v| RawVariable { content: v.content.to_string(), outcomes: None })
                    .collect(),
                pmf,
            }
        })
        .collect();
    RawSystem {
        contents,
        contexts: system.contexts().iter().map(|c| c.to_string()).collect(),
        blocks,
        provenance: system.provenance().cloned(),
    }
}

pub fn system_to_json(system: &System) -> String {
    let mut text = serde_json::to_string_pretty(&system_to_raw(system)).expect("raw system serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn syntax_errors_are_not_validation_reports() {
        assert!(matches!(parse_system("{not json"), Err(LoadError::Json(_))));
        match parse_system(r#"{"contents": 3}"#) {
            Err(LoadError::Invalid(report)) => assert_eq!(report.issues[0].kind(), "malformed"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_output_uses_lowest_terms() {
        let s = parse_system(
            r#"{"contents":{"X":["h","t"]},"contexts":["c"],
               "blocks":[{"context":"c","variables":[{"content":"X"}],"pmf":{"t":"0.50","h":"2/4"}}]}"#,
        )
        .unwrap();
        let json: serde_json::Value = serde_json::from_str(&system_to_json(&s)).unwrap();
        assert_eq!(json["blocks"][0]["pmf"], serde_json::json!({"h": "1/2", "t": "1/2"}));
    }

    fn arb_system() -> impl Strategy<Value = RawSystem> {
        // 1-3 contents with 1-3 outcomes, 1-3 contexts each holding a nonempty
        // subset of contents, weights from small integers.
        (1usize..=3, 1usize..=3, any::<u64>()).prop_map(|(n_contents, n_contexts, seed)| {
            let mut state = seed;
            let mut next = move |m: u64| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) % m
            };
            let mut raw = RawSystem::default();
            for c in 0..n_contents {
                let k = 1 + next(3) as usize;
                raw.contents.insert(format!("C{c}"), (0..k).map(|o| format!("o{o}")).collect());
            }
            let mut used = vec![false; n_contents];
            for x in 0..n_contexts {
                let ctx = format!("x{x}");
                raw.contexts.push(ctx.clone());
                let mut members: Vec<usize> = (0..n_contents).filter(|_| next(2) == 0).collect();
                if members.is_empty() {
                    members.push(next(n_contents as u64) as usize);
                }
                if x == n_contexts - 1 {
                    for (c, u) in used.iter().enumerate() {
                        if !u && !members.contains(&c) {
                            members.push(c);
                        }
                    }
                }
                for &m in &members {
                    used[m] = true;
                }
                let radices: Vec<usize> = members.iter().map(|&m| raw.contents[m].len()).collect();
                let mr = crate::index::MixedRadix::new(radices);
                let mut weights: Vec<u64> = (0..mr.count().unwrap()).map(|_| next(4)).collect();
                if weights.iter().all(|&w| w == 0) {
                    weights[0] = 1;
                }
                let total: u64 = weights.iter().sum();
                let mut pmf = IndexMap::new();
                for (code, &w) in weights.iter().enumerate() {
                    if w == 0 {
                        continue;
                    }
                    let key = mr
                        .decode(code)
                        .iter()
                        .zip(&members)
                        .map(|(&o, &m)| raw.contents[m][o].clone())
                        .collect::<Vec<_>>()
                        .join(",");
                    pmf.insert(key, serde_json::Value::String(format!("{w}/{total}")));
                }
                raw.blocks.push(RawBlock {
                    context: ctx,
                    variables: members
                        .iter()
                        .map(|&m| RawVariable { content: format!("C{m}"), outcomes: None })
                        .collect(),
                    pmf,
                });
            }
            raw
        })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(raw in arb_system()) {
            let system = validate_system(&raw).unwrap();
            let text = system_to_json(&system);
            let reparsed = parse_system(&text).unwrap();
            prop_assert_eq!(&reparsed, &system);
            prop_assert_eq!(system_to_json(&reparsed), text);
        }

        #[test]
        fn marginals_are_normalized(raw in arb_system()) {
            let system = validate_system(&raw).unwrap();
            for v in system.roster() {
                let m = system.marginal(&v).unwrap();
                prop_assert!(m.iter().all(|p| *p >= crate::Rational::from_integer(0.into())));
                prop_assert_eq!(m.iter().sum::<crate::Rational>(), crate::Rational::from_integer(1.into()));
            }
        }

        #[test]
        fn connections_partition_roster_by_content(raw in arb_system()) {
            let system = validate_system(&raw).unwrap();
            let mut seen = Vec::new();
            for c in system.connections() {
                prop_assert!(c.arity() >= 2);
                prop_assert!(c.variables.iter().all(|v| v.content == c.content));
                seen.extend(c.variables);
            }
            for v in system.roster() {
                let multi = system.roster().iter().filter(|w| w.content == v.content).count() >= 2;
                prop_assert_eq!(seen.contains(&v), multi);
            }
        }

        #[test]
        fn validation_is_total(text in ".{0,200}") {
            let _ = parse_system(&text);
        }
    }
}
