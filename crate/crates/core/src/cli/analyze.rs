use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::{emit, load, read_input, write_output, Failure, Format, EXIT_GUARD, EXIT_INVALID, EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE};
use crate::bell::{chsh, correlation_table, BellError};
use crate::coupling::{
    certificate_to_json, identity_coupling_feasible, max_connection_equality, max_total_connection_equality,
    CouplingConfig, CouplingError, FeasibilityResult,
};
use crate::rational::format_rational;
use crate::system::{parse_system, LoadError, System};

/// Full report for one system, the witnesses it refers to, and the exit
/// code its verdict maps to.
pub struct Analysis {
    pub report: Value,
    pub witnesses: Value,
    pub code: i32,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs every analysis on `system`. `input_sha256` is recorded verbatim.
pub fn analysis_report(system: &System, input_sha256: &str, skip_lp: bool, config: &CouplingConfig) -> Result<Analysis, CouplingError> {
    let consistency = system.consistency();
    let failures: Vec<Value> = consistency
        .failures
        .iter()
        .map(|f| {
            let marginals: Map<String, Value> = f
                .marginals
                .iter()
                .map(|(v, m)| (v.to_string(), json!(m.iter().map(format_rational).collect::<Vec<_>>())))
                .collect();
            json!({"connection": f.connection.to_string(), "marginals": marginals})
        })
        .collect();

    let chsh_section = match correlation_table(system) {
        Ok(table) => {
            let mut section = chsh(&table).to_json();
            let e = &table.expectations;
            section["expectations"] = json!([
                [format_rational(&e[0][0]), format_rational(&e[0][1])],
                [format_rational(&e[1][0]), format_rational(&e[1][1])],
            ]);
            section["alice"] = json!(table.alice.iter().map(|c| c.to_string()).collect::<Vec<_>>());
            section["bob"] = json!(table.bob.iter().map(|c| c.to_string()).collect::<Vec<_>>());
            section["advisory"] = json!(!consistency.consistent);
            section
        }
        Err(BellError::Shape(why)) => json!({"applicable": false, "reason": why}),
        Err(e) => json!({"applicable": false, "reason": e.to_string()}),
    };

    let mut maxima = Vec::new();
    let mut all_pairwise = true;
    for c in system.connections() {
        match max_connection_equality(system, &c) {
            Ok(m) => maxima.push(json!({"connection": c.to_string(), "max": format_rational(&m)})),
            Err(CouplingError::UnsupportedArity { arity, .. }) => {
                all_pairwise = false;
                maxima.push(json!({"connection": c.to_string(), "max": null, "unsupported_arity": arity}));
            }
            Err(e) => return Err(e),
        }
    }

    let mut witnesses = Map::new();
    let (identity, total, contextual) = if skip_lp {
        (json!({"status": "skipped"}), Value::Null, Value::Null)
    } else {
        let identity = identity_coupling_feasible(system, config)?;
        let identity_json = match &identity {
            FeasibilityResult::Feasible { witness } => {
                witnesses.insert("identity_coupling".into(), json!({"witness": witness.to_json(system)}));
                json!({"status": "feasible"})
            }
            FeasibilityResult::Infeasible { certificate } => {
                witnesses.insert("identity_coupling".into(), json!({"certificate": certificate_to_json(certificate)}));
                json!({"status": "infeasible"})
            }
        };
        if all_pairwise {
            let opt = max_total_connection_equality(system, config)?;
            witnesses.insert("max_total_connection_equality".into(), json!({"witness": opt.witness.to_json(system)}));
            let total = json!({
                "optimum": format_rational(&opt.optimum),
                "sum_of_maxima": format_rational(&opt.sum_of_maxima),
            });
            (identity_json, total, json!(opt.is_contextual()))
        } else {
            (identity_json, json!({"skipped": "connection of arity other than 2"}), Value::Null)
        }
    };

    let verdict = match contextual {
        Value::Bool(true) => "contextual",
        Value::Bool(false) => "noncontextual",
        _ => "not-applicable",
    };
    let code = if contextual == Value::Bool(true) { EXIT_NEGATIVE } else { EXIT_OK };

    let report = json!({
        "tool": {"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")},
        "input": {"sha256": input_sha256},
        "system": {
            "contents": system.content_ids().map(|c| c.to_string()).collect::<Vec<_>>(),
            "contexts": system.contexts().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "variables": system.variable_count(),
            "connections": system.connections().len(),
        },
        "consistency": {"consistent": consistency.consistent, "failures": failures},
        "chsh": chsh_section,
        "identity_coupling": identity,
        "connection_maxima": maxima,
        "total_connection_equality": total,
        "contextual": contextual,
        "verdict": verdict,
    });
    Ok(Analysis { report, witnesses: Value::Object(witnesses), code })
}

pub(super) fn cmd_analyze(path: &Path, skip_lp: bool, witness: Option<&str>, format: Format, config: &CouplingConfig) -> Result<i32, Failure> {
    let bytes = read_input(path)?;
    let system = match load(&bytes, format)? {
        Ok(system) => system,
        Err(code) => return Ok(code),
    };
    let mut analysis = analysis_report(&system, &digest(&bytes), skip_lp, config)?;
    analysis.report["input"]["path"] = json!(path.display().to_string());
    match witness {
        Some("-") => analysis.report["witnesses"] = analysis.witnesses,
        Some(out) => {
            write_output(Some(Path::new(out)), &(serde_json::to_string_pretty(&analysis.witnesses).expect("JSON") + "\n"))?;
            analysis.report["witness_path"] = json!(out);
        }
        None => {}
    }
    emit(&analysis.report, format)?;
    Ok(analysis.code)
}

/// Analyzes one file for batch mode, folding every failure into the entry.
fn batch_entry(path: &Path, skip_lp: bool, config: &CouplingConfig) -> (i32, Value) {
    let name = path.display().to_string();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return (EXIT_USAGE, json!({"path": name, "exit": EXIT_USAGE, "error": e.to_string()})),
    };
    let text = String::from_utf8_lossy(&bytes);
    let system = match parse_system(&text) {
        Ok(s) => s,
        Err(LoadError::Json(e)) => return (EXIT_USAGE, json!({"path": name, "exit": EXIT_USAGE, "error": e.to_string()})),
        Err(LoadError::Invalid(report)) => {
            return (EXIT_INVALID, json!({"path": name, "exit": EXIT_INVALID, "validation": report.to_json()}))
        }
    };
    match analysis_report(&system, &digest(&bytes), skip_lp, config) {
        Ok(mut a) => {
            a.report["input"]["path"] = json!(name);
            (a.code, json!({"path": name, "exit": a.code, "report": a.report}))
        }
        Err(e) => {
            let f = Failure::from(e);
            (f.code, json!({"path": name, "exit": f.code, "error": f.message}))
        }
    }
}

pub(super) fn cmd_batch(dir: &Path, skip_lp: bool, format: Format, config: &CouplingConfig) -> Result<i32, Failure> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Failure { code: EXIT_USAGE, message: format!("{}: {e}", dir.display()) })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let entries: Vec<(i32, Value)> = files.par_iter().map(|p| batch_entry(p, skip_lp, config)).collect();
    // Worst outcome wins, with the guard and usage codes above verdicts.
    let rank = |c: i32| match c {
        EXIT_OK => 0,
        EXIT_NEGATIVE => 1,
        EXIT_INVALID => 2,
        EXIT_GUARD => 3,
        _ => 4,
    };
    let code = entries.iter().map(|(c, _)| *c).max_by_key(|&c| rank(c)).unwrap_or(EXIT_OK);
    emit(&json!({"reports": entries.into_iter().map(|(_, v)| v).collect::<Vec<_>>()}), format)?;
    Ok(code)
}
