//! The `cbd` command line: `validate`, `analyze`, `generate` and `couple`.
//!
//! Exit codes: 0 success or non-contextual, 1 contextual or infeasible,
//! 2 invalid system, 3 usage, I/O or parse error, 4 size guard.

mod analyze;
mod render;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::coupling::{
    certificate_to_json, constrained_coupling_feasible, identity_coupling_feasible, max_total_connection_equality,
    product_coupling, CouplingConfig, CouplingError, Demand, FeasibilityResult, DEFAULT_VAR_CAP,
};
use crate::generators::{
    deterministic_system, pr_box, random_consistent_system, singlet_system, AngleSpec, Design, DEFAULT_PRECISION,
};
use crate::lp::LpError;
use crate::rational::{format_rational, parse_rational};
use crate::system::{parse_system, system_to_json, ContentId, LoadError, System};
use crate::Rational;

pub use analyze::analysis_report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "cbd", version, about = "Coupling analysis of content/context-indexed systems of random variables")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Refuse LPs with more decision variables than this.
    #[arg(long, global = true, default_value_t = DEFAULT_VAR_CAP)]
    lp_var_cap: u128,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a system file against every structural invariant.
    Validate {
        /// System file, or `-` for standard input.
        path: PathBuf,
    },
    /// Consistency, CHSH, identity coupling and connection optimum for a system.
    #[command(group(ArgGroup::new("input").required(true).args(["path", "batch"])))]
    Analyze {
        path: Option<PathBuf>,
        /// Skip every linear program.
        #[arg(long)]
        skip_lp: bool,
        /// Write witness couplings and certificates here (`-` embeds them in the report).
        #[arg(long)]
        witness: Option<String>,
        /// Analyze every `.json` file in a directory.
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Write a generated system as JSON.
    Generate {
        #[arg(value_enum)]
        kind: GenerateKind,
        /// Four angles alice1,alice2,bob1,bob2 (`pi/4`, `3/4 pi` or radians).
        #[arg(long, default_value = "0,pi/2,pi/4,3pi/4")]
        angles: String,
        #[arg(long, default_value = "1")]
        visibility: String,
        /// Denominator bound for rounded correlations.
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `AxB[:k]`, `cyclic:n[:k]` or `mars[:k]`.
        #[arg(long, default_value = "2x2")]
        shape: String,
        /// Denominator of randomly drawn marginals.
        #[arg(long, default_value_t = 12)]
        denominator: u64,
        #[arg(long)]
        uniform_marginals: bool,
        /// `content=outcome` pairs separated by commas; defaults to the first
        /// outcome everywhere.
        #[arg(long)]
        assign: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one coupling query and write its witness or certificate.
    #[command(group(ArgGroup::new("query").required(true).args(["identity", "product", "maximize", "demands"])))]
    Couple {
        path: PathBuf,
        #[arg(long)]
        identity: bool,
        #[arg(long)]
        product: bool,
        #[arg(long)]
        maximize: bool,
        /// `content@ctx1~ctx2>=bound`; repeat the flag or separate with `;`.
        #[arg(long)]
        demands: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenerateKind {
    Singlet,
    Prbox,
    Deterministic,
    Random,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<CouplingError> for Failure {
    fn from(e: CouplingError) -> Self {
        let code = match e {
            CouplingError::TooLarge { .. } | CouplingError::Lp(LpError::IterationLimit { .. }) => EXIT_GUARD,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let config = CouplingConfig::with_var_cap(cli.lp_var_cap);
    let result = match cli.command {
        Command::Validate { path } => cmd_validate(&path, cli.format),
        Command::Analyze { path, skip_lp, witness, batch } => match (path, batch) {
            (_, Some(dir)) => analyze::cmd_batch(&dir, skip_lp, cli.format, &config),
            (Some(path), None) => analyze::cmd_analyze(&path, skip_lp, witness.as_deref(), cli.format, &config),
            (None, None) => Err(Failure::usage("analyze needs a path or --batch")),
        },
        Command::Generate {
            kind,
            angles,
            visibility,
            precision,
            seed,
            shape,
            denominator,
            uniform_marginals,
            assign,
            out,
        } => cmd_generate(GenerateArgs {
            kind,
            angles: &angles,
            visibility: &visibility,
            precision,
            seed,
            shape: &shape,
            denominator,
            uniform_marginals,
            assign: assign.as_deref(),
            out: out.as_deref(),
        }),
        Command::Couple { path, identity, product, maximize, demands, out } => {
            let query = if identity {
                Query::Identity
            } else if product {
                Query::Product
            } else if maximize {
                Query::Maximize
            } else {
                Query::Demands(demands)
            };
            cmd_couple(&path, query, out.as_deref(), cli.format, &config)
        }
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("cbd: {}", f.message);
            f.code
        }
    }
}

pub(crate) fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::usage(format!("reading standard input: {e}")))?;
        return Ok(buf);
    }
    fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub(crate) fn emit(value: &Value, format: Format) -> Result<(), Failure> {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n",
        Format::Text => render::text(value),
    };
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::usage(format!("writing standard output: {e}")))
}

pub(crate) fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
        }
        _ => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("writing standard output: {e}"))),
    }
}

/// Loads a system; a validation failure is reported on stdout with exit 2.
pub(crate) fn load(bytes: &[u8], format: Format) -> Result<Result<System, i32>, Failure> {
    let text = std::str::from_utf8(bytes).map_err(|e| Failure::usage(format!("input is not UTF-8: {e}")))?;
    match parse_system(text) {
        Ok(system) => Ok(Ok(system)),
        Err(LoadError::Json(e)) => Err(Failure::usage(format!("invalid JSON: {e}"))),
        Err(LoadError::Invalid(report)) => {
            emit(&report.to_json(), format)?;
            Ok(Err(EXIT_INVALID))
        }
    }
}

fn cmd_validate(path: &Path, format: Format) -> Result<i32, Failure> {
    let bytes = read_input(path)?;
    let system = match load(&bytes, format)? {
        Ok(system) => system,
        Err(code) => return Ok(code),
    };
    emit(
        &json!({
            "valid": true,
            "contents": system.content_count(),
            "contexts": system.contexts().len(),
            "variables": system.variable_count(),
            "connections": system.connections().len(),
        }),
        format,
    )?;
    Ok(EXIT_OK)
}

struct GenerateArgs<'a> {
    kind: GenerateKind,
    angles: &'a str,
    visibility: &'a str,
    precision: u64,
    seed: u64,
    shape: &'a str,
    denominator: u64,
    uniform_marginals: bool,
    assign: Option<&'a str>,
    out: Option<&'a Path>,
}

fn cmd_generate(args: GenerateArgs<'_>) -> Result<i32, Failure> {
    let failure = |e: crate::generators::GenerateError| Failure::usage(e.to_string());
    let system = match args.kind {
        GenerateKind::Singlet => {
            let angles: AngleSpec = args.angles.parse().map_err(failure)?;
            let visibility = parse_rational(args.visibility)
                .map_err(|e| Failure::usage(format!("--visibility {:?}: {e}", args.visibility)))?;
            singlet_system(&angles, &visibility, args.precision).map_err(failure)?
        }
        GenerateKind::Prbox => pr_box(),
        GenerateKind::Deterministic => {
            let design: Design = args.shape.parse().map_err(failure)?;
            let assignment = match args.assign {
                None => design.constant_assignment(0),
                Some(spec) => spec
                    .split(',')
                    .map(|pair| {
                        let (c, o) = pair
                            .split_once('=')
                            .ok_or_else(|| Failure::usage(format!("--assign entry {pair:?} is not content=outcome")))?;
                        Ok((ContentId::new(c.trim()), o.trim().to_string()))
                    })
                    .collect::<Result<_, Failure>>()?,
            };
            deterministic_system(&design, &assignment).map_err(failure)?
        }
        GenerateKind::Random => {
            let design: Design = args.shape.parse().map_err(failure)?;
            random_consistent_system(args.seed, &design, args.denominator, args.uniform_marginals)
        }
    };
    write_output(args.out, &system_to_json(&system))?;
    Ok(EXIT_OK)
}

enum Query {
    Identity,
    Product,
    Maximize,
    Demands(Vec<String>),
}

/// Parses `content@ctx1~ctx2>=bound` against the system's connections.
pub fn parse_demand(system: &System, spec: &str) -> Result<Demand, Failure> {
    let bad = |why: &str| Failure::usage(format!("demand {spec:?}: {why}"));
    let (target, bound) = spec.split_once(">=").ok_or_else(|| bad("expected content@ctx1~ctx2>=bound"))?;
    let lower = parse_rational(bound.trim()).map_err(|e| bad(&e.to_string()))?;
    let (content, contexts) = target.trim().split_once('@').ok_or_else(|| bad("missing '@'"))?;
    let mut named: Vec<&str> = contexts.split('~').map(str::trim).collect();
    named.sort_unstable();
    let connection = system
        .connection(&ContentId::new(content.trim()))
        .ok_or_else(|| bad("content has no connection"))?;
    if connection.arity() != 2 {
        return Err(bad(&format!("connection {connection} has {} members; only pairs are supported", connection.arity())));
    }
    let mut actual: Vec<&str> = connection.variables.iter().map(|v| v.context.as_str()).collect();
    actual.sort_unstable();
    if named != actual {
        return Err(bad(&format!("the connection of {content} is {connection}")));
    }
    if lower < Rational::zero() || lower > Rational::one() {
        return Err(bad("bound must lie in [0, 1]"));
    }
    Ok(Demand { connection, lower })
}

fn feasibility_json(query: &str, system: &System, result: &FeasibilityResult) -> Value {
    match result {
        FeasibilityResult::Feasible { witness } => {
            json!({"query": query, "status": "feasible", "witness": witness.to_json(system)})
        }
        FeasibilityResult::Infeasible { certificate } => {
            json!({"query": query, "status": "infeasible", "certificate": certificate_to_json(certificate)})
        }
    }
}

fn cmd_couple(path: &Path, query: Query, out: Option<&Path>, format: Format, config: &CouplingConfig) -> Result<i32, Failure> {
    let bytes = read_input(path)?;
    let system = match load(&bytes, format)? {
        Ok(system) => system,
        Err(code) => return Ok(code),
    };
    let (value, code) = match query {
        Query::Identity => {
            let result = identity_coupling_feasible(&system, config)?;
            let code = if result.is_feasible() { EXIT_OK } else { EXIT_NEGATIVE };
            (feasibility_json("identity", &system, &result), code)
        }
        Query::Product => {
            let coupling = product_coupling(&system, config)?;
            (json!({"query": "product", "status": "feasible", "witness": coupling.to_json(&system)}), EXIT_OK)
        }
        Query::Maximize => {
            let opt = max_total_connection_equality(&system, config)?;
            let value = json!({
                "query": "maximize",
                "status": "feasible",
                "optimum": format_rational(&opt.optimum),
                "sum_of_maxima": format_rational(&opt.sum_of_maxima),
                "contextual": opt.is_contextual(),
                "connections": opt.maxima.iter().map(|(c, m)| json!({
                    "connection": c.to_string(),
                    "max": format_rational(m),
                    "achieved": format_rational(&opt.witness.equality_probability(c)),
                })).collect::<Vec<_>>(),
                "dual": opt.dual.iter().map(format_rational).collect::<Vec<_>>(),
                "witness": opt.witness.to_json(&system),
            });
            (value, EXIT_OK)
        }
        Query::Demands(specs) => {
            let demands = specs
                .iter()
                .flat_map(|s| s.split(';'))
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_demand(&system, s))
                .collect::<Result<Vec<_>, _>>()?;
            let result = constrained_coupling_feasible(&system, &demands, config)?;
            let code = if result.is_feasible() { EXIT_OK } else { EXIT_NEGATIVE };
            (feasibility_json("demands", &system, &result), code)
        }
    };
    match (out, format) {
        (Some(p), _) if p != Path::new("-") => {
            write_output(Some(p), &(serde_json::to_string_pretty(&value).expect("JSON") + "\n"))?;
            emit(&json!({"query": value["query"], "status": value["status"], "written": p.display().to_string()}), format)?;
        }
        _ => emit(&value, format)?,
    }
    Ok(code)
}
