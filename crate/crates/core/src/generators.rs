//! Canonical systems: singlet correlations with optional white noise, the PR
//! box, deterministic point-mass systems, and seeded random consistently
//! connected systems for fuzzing.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::rational::{format_rational, from_f64, limit_denominator, parse_rational};
use crate::system::{validate_system, ContentId, RawBlock, RawSystem, RawVariable, System};
use crate::Rational;

/// Default denominator bound for rounded correlations.
pub const DEFAULT_PRECISION: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("precision bound must be at least 1")]
    PrecisionTooSmall,
    #[error("visibility {0} is outside [0, 1]")]
    BadVisibility(String),
    #[error("assignment does not cover content {0}")]
    MissingContent(String),
    #[error("{value:?} is not an outcome of content {content}")]
    UnknownOutcome { content: String, value: String },
    #[error("cannot parse angle {0:?}")]
    BadAngle(String),
    #[error("expected four comma-separated angles (alice1,alice2,bob1,bob2), got {0:?}")]
    BadAngleList(String),
    #[error("unknown design {0:?}; expected AxB[:k], cyclic:n[:k] or mars[:k]")]
    BadDesign(String),
}

/// A measurement direction: either an exact rational multiple of π or a
/// plain number of radians.
#[derive(Debug, Clone, PartialEq)]
pub enum Angle {
    PiMultiple(Rational),
    Radians(f64),
}

impl Angle {
    pub fn radians(&self) -> f64 {
        match self {
            Angle::PiMultiple(r) => r.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI,
            Angle::Radians(x) => *x,
        }
    }

    fn minus(&self, other: &Angle) -> Angle {
        match (self, other) {
            (Angle::PiMultiple(a), Angle::PiMultiple(b)) => Angle::PiMultiple(a - b),
            _ => Angle::Radians(self.radians() - other.radians()),
        }
    }

    /// `cos` exactly, when the angle is a multiple of π/12 with a rational
    /// cosine.
    fn exact_cos(&self) -> Option<Rational> {
        let Angle::PiMultiple(r) = self else { return None };
        let twelfths = r * Rational::from_integer(12.into());
        if !twelfths.is_integer() {
            return None;
        }
        let k = twelfths.to_integer().mod_floor(&BigInt::from(24)).to_i64()?;
        let half = Rational::new(1.into(), 2.into());
        match k {
            0 => Some(Rational::one()),
            4 | 20 => Some(half),
            6 | 18 => Some(Rational::zero()),
            8 | 16 => Some(-half),
            12 => Some(-Rational::one()),
            _ => None,
        }
    }
}

impl FromStr for Angle {
    type Err = GenerateError;

    /// Accepts `pi`, `-pi`, `pi/4`, `3pi/4`, `3/4 pi`, `0.5 pi` and plain
    /// radians such as `0.785`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || GenerateError::BadAngle(text.to_string());
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad());
        }
        let Some(at) = compact.find("pi") else {
            let x: f64 = compact.parse().map_err(|_| bad())?;
            return match x {
                0.0 => Ok(Angle::PiMultiple(Rational::zero())),
                x if x.is_finite() => Ok(Angle::Radians(x)),
                _ => Err(bad()),
            };
        };
        let (head, tail) = (&compact[..at], &compact[at + 2..]);
        let head = head.strip_suffix('*').unwrap_or(head);
        let coefficient = match head {
            "" | "+" => Rational::one(),
            "-" => -Rational::one(),
            h => parse_rational(h).map_err(|_| bad())?,
        };
        let divisor = match tail {
            "" => Rational::one(),
            t => {
                let d = t.strip_prefix('/').ok_or_else(bad)?;
                let d = parse_rational(d).map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                d
            }
        };
        Ok(Angle::PiMultiple(coefficient / divisor))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::PiMultiple(r) => write!(f, "{} pi", format_rational(r)),
            Angle::Radians(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSpec {
    pub alice: [Angle; 2],
    pub bob: [Angle; 2],
}

impl AngleSpec {
    /// Alice at 0 and π/2, Bob at π/4 and 3π/4.
    pub fn benchmark() -> Self {
        let pi = |n: i64, d: i64| Angle::PiMultiple(Rational::new(n.into(), d.into()));
        Self {
            alice: [pi(0, 1), pi(1, 2)],
            bob: [pi(1, 4), pi(3, 4)],
        }
    }
}

impl FromStr for AngleSpec {
    type Err = GenerateError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 4 {
            return Err(GenerateError::BadAngleList(text.to_string()));
        }
        let a: Vec<Angle> = parts.iter().map(|p| p.parse()).collect::<Result<_, _>>()?;
        Ok(Self {
            alice: [a[0].clone(), a[1].clone()],
            bob: [a[2].clone(), a[3].clone()],
        })
    }
}

impl fmt::Display for AngleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.alice[0], self.alice[1], self.bob[0], self.bob[1])
    }
}

/// `cos(angle)` as a rational with denominator at most `precision`.
pub fn rounded_cos(angle: &Angle, precision: u64) -> Rational {
    let bound = BigInt::from(precision);
    let value = angle
        .exact_cos()
        .unwrap_or_else(|| from_f64(angle.radians().cos()).expect("cosine is finite"));
    limit_denominator(&value, &bound)
}

const PLUS: &str = "+1";
const MINUS: &str = "-1";

fn binary() -> Vec<String> {
    vec![PLUS.to_string(), MINUS.to_string()]
}

fn labels(k: usize) -> Vec<String> {
    if k == 2 {
        binary()
    } else {
        (0..k).map(|i| i.to_string()).collect()
    }
}

/// Layout of contents and contexts, without probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Design {
    /// Alice has `alice` settings, Bob `bob`; context `cij` holds `Ai` and `Bj`.
    Bell { alice: usize, bob: usize, outcomes: usize },
    /// Contents `X1..Xn`; context `ci` holds `Xi` and `X(i+1 mod n)`.
    Cyclic { n: usize, outcomes: usize },
    /// One content `X` recorded alone in contexts `low` and `high`.
    Mars { outcomes: usize },
}

impl Design {
    pub fn bell(alice: usize, bob: usize, outcomes: usize) -> Self {
        Design::Bell { alice, bob, outcomes }
    }

    pub fn cyclic(n: usize, outcomes: usize) -> Self {
        Design::Cyclic { n, outcomes }
    }

    pub fn mars(outcomes: usize) -> Self {
        Design::Mars { outcomes }
    }

    fn outcomes(&self) -> usize {
        match self {
            Design::Bell { outcomes, .. } | Design::Cyclic { outcomes, .. } | Design::Mars { outcomes } => *outcomes,
        }
    }

    pub fn contents(&self) -> Vec<String> {
        match self {
            Design::Bell { alice, bob, .. } => (1..=*alice)
                .map(|i| format!("A{i}"))
                .chain((1..=*bob).map(|j| format!("B{j}")))
                .collect(),
            Design::Cyclic { n, .. } => (1..=*n).map(|i| format!("X{i}")).collect(),
            Design::Mars { .. } => vec!["X".to_string()],
        }
    }

    /// `(context, contents in declared order)` per context.
    pub fn contexts(&self) -> Vec<(String, Vec<String>)> {
        match self {
            Design::Bell { alice, bob, .. } => (1..=*alice)
                .flat_map(|i| (1..=*bob).map(move |j| (format!("c{i}{j}"), vec![format!("A{i}"), format!("B{j}")])))
                .collect(),
            Design::Cyclic { n, .. } => (1..=*n)
                .map(|i| (format!("c{i}"), vec![format!("X{i}"), format!("X{}", i % n + 1)]))
                .collect(),
            Design::Mars { .. } => vec![
                ("low".to_string(), vec!["X".to_string()]),
                ("high".to_string(), vec!["X".to_string()]),
            ],
        }
    }

    /// Every content mapped to its `index`-th outcome label.
    pub fn constant_assignment(&self, index: usize) -> BTreeMap<ContentId, String> {
        let label = labels(self.outcomes())[index].clone();
        self.contents().into_iter().map(|c| (ContentId::new(c), label.clone())).collect()
    }
}

impl FromStr for Design {
    type Err = GenerateError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || GenerateError::BadDesign(text.to_string());
        let num = |s: &str| s.parse::<usize>().ok();
        let parts: Vec<&str> = text.trim().split(':').collect();
        let outcomes = |i: usize| match parts.get(i) {
            None => Some(2),
            Some(s) => num(s).filter(|&k| k >= 1),
        };
        let design = match parts[0] {
            "cyclic" if parts.len() <= 3 => {
                let n = parts.get(1).and_then(|s| num(s)).filter(|&n| n >= 2).ok_or_else(bad)?;
                Design::cyclic(n, outcomes(2).ok_or_else(bad)?)
            }
            "mars" if parts.len() <= 2 => Design::mars(outcomes(1).ok_or_else(bad)?),
            shape if parts.len() <= 2 => {
                let (a, b) = shape.split_once('x').ok_or_else(bad)?;
                let (a, b) = (num(a).filter(|&a| a >= 1).ok_or_else(bad)?, num(b).filter(|&b| b >= 1).ok_or_else(bad)?);
                Design::bell(a, b, outcomes(1).ok_or_else(bad)?)
            }
            _ => return Err(bad()),
        };
        Ok(design)
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Design::Bell { alice, bob, outcomes } => write!(f, "{alice}x{bob}:{outcomes}"),
            Design::Cyclic { n, outcomes } => write!(f, "cyclic:{n}:{outcomes}"),
            Design::Mars { outcomes } => write!(f, "mars:{outcomes}"),
        }
    }
}

fn build(
    contents: IndexMap<String, Vec<String>>,
    blocks: Vec<(String, Vec<String>, Vec<(Vec<usize>, Rational)>)>,
    provenance: Value,
) -> System {
    let contexts = blocks.iter().map(|(c, _, _)| c.clone()).collect();
    let blocks = blocks
        .into_iter()
        .map(|(context, vars, pmf)| {
            let pmf = pmf
                .into_iter()
                .filter(|(_, p)| !p.is_zero())
                .map(|(tuple, p)| {
                    let key = tuple
                        .iter()
                        .zip(&vars)
                        .map(|(&o, v)| contents[v][o].as_str())
                        .collect::<Vec<_>>()
                        .join(",");
                    (key, Value::String(format_rational(&p)))
                })
                .collect();
            RawBlock {
                context,
                variables: vars.into_iter().map(|content| RawVariable { content, outcomes: None }).collect(),
                pmf,
            }
        })
        .collect();
    let raw = RawSystem { contents, contexts, blocks, provenance: Some(provenance) };
    validate_system(&raw).expect("generated systems are valid by construction")
}

fn alice_bob(blocks: impl Fn(usize, usize) -> Vec<(Vec<usize>, Rational)>, provenance: Value) -> System {
    let design = Design::bell(2, 2, 2);
    let contents = design.contents().into_iter().map(|c| (c, binary())).collect();
    let blocks = design
        .contexts()
        .into_iter()
        .enumerate()
        .map(|(k, (context, vars))| (context, vars, blocks(k / 2, k % 2)))
        .collect();
    build(contents, blocks, provenance)
}

/// Pmf of a ±1 pair with uniform marginals and correlation `e`.
fn correlated_pair(e: &Rational) -> Vec<(Vec<usize>, Rational)> {
    let quarter = Rational::new(1.into(), 4.into());
    let same = &quarter * (Rational::one() + e);
    let differ = &quarter * (Rational::one() - e);
    vec![
        (vec![0, 0], same.clone()),
        (vec![0, 1], differ.clone()),
        (vec![1, 0], differ),
        (vec![1, 1], same),
    ]
}

/// Singlet correlations `E_ij = −v·cos(α_i − β_j)` with uniform marginals.
/// The cosine is rounded to the nearest rational with denominator at most
/// `precision` and then scaled by `v` exactly.
pub fn singlet_system(angles: &AngleSpec, visibility: &Rational, precision: u64) -> Result<System, GenerateError> {
    if precision < 1 {
        return Err(GenerateError::PrecisionTooSmall);
    }
    if visibility.is_negative() || visibility > &Rational::one() {
        return Err(GenerateError::BadVisibility(format_rational(visibility)));
    }
    let mut correlations = [[Rational::zero(), Rational::zero()], [Rational::zero(), Rational::zero()]];
    for (i, a) in angles.alice.iter().enumerate() {
        for (j, b) in angles.bob.iter().enumerate() {
            correlations[i][j] = -(visibility * rounded_cos(&a.minus(b), precision));
        }
    }
    let provenance = json!({
        "generator": "singlet",
        "formula": "E_ij = -v*cos(alpha_i - beta_j), Pr[a,b] = (1 + a*b*E_ij)/4",
        "angles": angles.to_string(),
        "visibility": format_rational(visibility),
        "precision": precision,
        "rounding": "cos rounded to denominator <= precision, then scaled by v",
        "correlations": correlations.iter().flatten().map(format_rational).collect::<Vec<_>>(),
    });
    Ok(alice_bob(|i, j| correlated_pair(&correlations[i][j]), provenance))
}

/// The Popescu–Rohrlich box: outcomes agree in contexts 11, 12, 21 and
/// disagree in 22, all marginals uniform.
pub fn pr_box() -> System {
    let provenance = json!({
        "generator": "prbox",
        "correlations": ["1/1", "1/1", "1/1", "-1/1"],
    });
    alice_bob(
        |i, j| {
            let e = if i == 1 && j == 1 { -Rational::one() } else { Rational::one() };
            correlated_pair(&e)
        },
        provenance,
    )
}

/// Every block a point mass on the outcomes fixed by `assignment`.
pub fn deterministic_system(design: &Design, assignment: &BTreeMap<ContentId, String>) -> Result<System, GenerateError> {
    let alphabet = labels(design.outcomes());
    let mut chosen: IndexMap<String, usize> = IndexMap::new();
    for content in design.contents() {
        let label = assignment
            .get(&ContentId::new(content.as_str()))
            .ok_or_else(|| GenerateError::MissingContent(content.clone()))?;
        let position = alphabet.iter().position(|l| l == label).ok_or_else(|| GenerateError::UnknownOutcome {
            content: content.clone(),
            value: label.clone(),
        })?;
        chosen.insert(content, position);
    }
    let contents = design.contents().into_iter().map(|c| (c, alphabet.clone())).collect();
    let blocks = design
        .contexts()
        .into_iter()
        .map(|(context, vars)| {
            let tuple = vars.iter().map(|v| chosen[v]).collect();
            (context, vars, vec![(tuple, Rational::one())])
        })
        .collect();
    let provenance = json!({
        "generator": "deterministic",
        "design": design.to_string(),
        "assignment": chosen.iter().map(|(c, &o)| (c.clone(), Value::String(alphabet[o].clone()))).collect::<serde_json::Map<_, _>>(),
    });
    Ok(build(contents, blocks, provenance))
}

/// Pmf with denominator `denominator`: a random composition of it.
fn random_marginal(rng: &mut ChaCha8Rng, k: usize, denominator: u64) -> Vec<Rational> {
    let mut cuts: Vec<u64> = (0..k - 1).map(|_| rng.random_range(0..=denominator)).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let d = BigInt::from(denominator);
    let mut out = Vec::with_capacity(k);
    for c in cuts.into_iter().chain(std::iter::once(denominator)) {
        out.push(Rational::new(BigInt::from(c - prev), d.clone()));
        prev = c;
    }
    out
}

/// A coupling of `marginals` built by repeatedly putting the smallest
/// remaining mass of randomly chosen outcomes on their joint tuple.
fn greedy_coupling(rng: &mut ChaCha8Rng, marginals: &[Vec<Rational>]) -> BTreeMap<Vec<usize>, Rational> {
    let mut remaining: Vec<Vec<Rational>> = marginals.to_vec();
    let mut joint = BTreeMap::new();
    loop {
        let mut tuple = Vec::with_capacity(remaining.len());
        for r in &remaining {
            let live: Vec<usize> = (0..r.len()).filter(|&o| r[o].is_positive()).collect();
            if live.is_empty() {
                return joint;
            }
            tuple.push(live[rng.random_range(0..live.len())]);
        }
        let mass = tuple
            .iter()
            .zip(&remaining)
            .map(|(&o, r)| r[o].clone())
            .min()
            .expect("at least one variable");
        for (&o, r) in tuple.iter().zip(remaining.iter_mut()) {
            r[o] -= &mass;
        }
        *joint.entry(tuple).or_insert_with(Rational::zero) += mass;
    }
}

fn product_joint(marginals: &[Vec<Rational>]) -> BTreeMap<Vec<usize>, Rational> {
    let mut joint: BTreeMap<Vec<usize>, Rational> = BTreeMap::from([(Vec::new(), Rational::one())]);
    for m in marginals {
        joint = joint
            .into_iter()
            .flat_map(|(t, p)| {
                m.iter().enumerate().map(move |(o, q)| {
                    let mut t = t.clone();
                    t.push(o);
                    (t, &p * q)
                })
            })
            .collect();
    }
    joint
}

/// Seeded random system whose connections are exactly consistent: each
/// content's marginal is drawn first (a random composition of
/// `denominator`, or uniform), then each block's joint is a random mixture
/// of greedy couplings and the independent coupling of those marginals.
pub fn random_consistent_system(seed: u64, design: &Design, denominator: u64, uniform_marginals: bool) -> System {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let denominator = denominator.max(1);
    let k = design.outcomes();
    let alphabet = labels(k);
    let marginals: IndexMap<String, Vec<Rational>> = design
        .contents()
        .into_iter()
        .map(|c| {
            let m = if uniform_marginals {
                vec![Rational::new(1.into(), BigInt::from(k)); k]
            } else {
                random_marginal(&mut rng, k, denominator)
            };
            (c, m)
        })
        .collect();

    let blocks = design
        .contexts()
        .into_iter()
        .map(|(context, vars)| {
            let ms: Vec<Vec<Rational>> = vars.iter().map(|v| marginals[v].clone()).collect();
            let greedy = rng.random_range(1..=3);
            let mut parts: Vec<(u32, BTreeMap<Vec<usize>, Rational>)> = (0..greedy)
                .map(|_| (rng.random_range(0..=4), greedy_coupling(&mut rng, &ms)))
                .collect();
            parts.push((rng.random_range(0..=2), product_joint(&ms)));
            if parts.iter().all(|(w, _)| *w == 0) {
                parts[0].0 = 1;
            }
            let total: u32 = parts.iter().map(|(w, _)| w).sum();
            let mut joint: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
            for (w, part) in parts {
                let w = Rational::new(w.into(), total.into());
                for (t, p) in part {
                    *joint.entry(t).or_insert_with(Rational::zero) += &w * p;
                }
            }
            (context, vars, joint.into_iter().collect())
        })
        .collect();

    let contents = design.contents().into_iter().map(|c| (c, alphabet.clone())).collect();
    let provenance = json!({
        "generator": "random",
        "seed": seed,
        "design": design.to_string(),
        "denominator": denominator,
        "uniform_marginals": uniform_marginals,
    });
    build(contents, blocks, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::system_to_json;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn angle_parsing() {
        assert_eq!("pi".parse::<Angle>().unwrap(), Angle::PiMultiple(q(1, 1)));
        assert_eq!("3pi/4".parse::<Angle>().unwrap(), Angle::PiMultiple(q(3, 4)));
        assert_eq!("3/4 pi".parse::<Angle>().unwrap(), Angle::PiMultiple(q(3, 4)));
        assert_eq!("-pi/2".parse::<Angle>().unwrap(), Angle::PiMultiple(q(-1, 2)));
        assert_eq!("0.5".parse::<Angle>().unwrap(), Angle::Radians(0.5));
        assert!("pi/0".parse::<Angle>().is_err());
        assert!("north".parse::<Angle>().is_err());
        let spec: AngleSpec = "0,pi/2,pi/4,3pi/4".parse().unwrap();
        assert_eq!(spec, AngleSpec::benchmark());
        assert!("0,pi".parse::<AngleSpec>().is_err());
    }

    #[test]
    fn special_cosines_are_exact() {
        for (k, expected) in [(0, q(1, 1)), (4, q(1, 2)), (6, q(0, 1)), (8, q(-1, 2)), (12, q(-1, 1)), (-4, q(1, 2)), (28, q(1, 2))] {
            let angle = Angle::PiMultiple(q(k, 12));
            assert_eq!(rounded_cos(&angle, 2), expected, "k={k}");
        }
        let quarter = rounded_cos(&Angle::PiMultiple(q(1, 4)), DEFAULT_PRECISION);
        assert!((quarter.to_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn design_parsing() {
        assert_eq!("2x2".parse::<Design>().unwrap(), Design::bell(2, 2, 2));
        assert_eq!("2x3:3".parse::<Design>().unwrap(), Design::bell(2, 3, 3));
        assert_eq!("cyclic:5".parse::<Design>().unwrap(), Design::cyclic(5, 2));
        assert_eq!("cyclic:4:3".parse::<Design>().unwrap(), Design::cyclic(4, 3));
        assert_eq!("mars".parse::<Design>().unwrap(), Design::mars(2));
        for bad in ["", "2x", "cyclic", "cyclic:1", "3y3", "2x2:0", "mars:2:2"] {
            assert!(bad.parse::<Design>().is_err(), "{bad}");
        }
        for d in [Design::bell(2, 3, 3), Design::cyclic(5, 2), Design::mars(4)] {
            assert_eq!(d.to_string().parse::<Design>().unwrap(), d);
        }
    }

    #[test]
    fn singlet_marginals_are_uniform() {
        let system = singlet_system(&AngleSpec::benchmark(), &q(1, 1), DEFAULT_PRECISION).unwrap();
        assert!(system.is_consistently_connected());
        for v in system.roster() {
            assert_eq!(system.marginal(&v).unwrap(), vec![q(1, 2), q(1, 2)]);
        }
        assert!(system.provenance().is_some());
    }

    #[test]
    fn singlet_rejects_bad_arguments() {
        let spec = AngleSpec::benchmark();
        assert_eq!(singlet_system(&spec, &q(1, 1), 0).unwrap_err(), GenerateError::PrecisionTooSmall);
        assert!(matches!(singlet_system(&spec, &q(3, 2), 10), Err(GenerateError::BadVisibility(_))));
        assert!(matches!(singlet_system(&spec, &q(-1, 2), 10), Err(GenerateError::BadVisibility(_))));
    }

    #[test]
    fn zero_visibility_is_uniform_noise() {
        let system = singlet_system(&AngleSpec::benchmark(), &q(0, 1), 1000).unwrap();
        for block in system.blocks() {
            assert_eq!(block.atoms().len(), 4);
            assert!(block.atoms().values().all(|p| p == &q(1, 4)));
        }
    }

    #[test]
    fn aligned_settings_anticorrelate() {
        let spec: AngleSpec = "0.3,1,0.3,2".parse().unwrap();
        let system = singlet_system(&spec, &q(2, 3), 1000).unwrap();
        let block = &system.blocks()[0];
        // E = -2/3 means Pr[equal] = (1 - 2/3)/2.
        assert_eq!(block.probability(&[0, 0]), q(1, 12));
        assert_eq!(block.probability(&[0, 1]), q(5, 12));
    }

    #[test]
    fn pr_box_marginals_uniform() {
        let system = pr_box();
        assert!(system.is_consistently_connected());
        for v in system.roster() {
            assert_eq!(system.marginal(&v).unwrap(), vec![q(1, 2), q(1, 2)]);
        }
        assert_eq!(system.blocks()[3].probability(&[0, 1]), q(1, 2));
    }

    #[test]
    fn deterministic_requires_full_assignment() {
        let design = Design::bell(2, 2, 2);
        let mut assignment = design.constant_assignment(0);
        assert!(deterministic_system(&design, &assignment).unwrap().is_consistently_connected());
        assignment.insert(ContentId::new("A1"), "7".into());
        assert!(matches!(deterministic_system(&design, &assignment), Err(GenerateError::UnknownOutcome { .. })));
        assignment.remove(&ContentId::new("A1"));
        assert_eq!(
            deterministic_system(&design, &assignment).unwrap_err(),
            GenerateError::MissingContent("A1".into())
        );
    }

    #[test]
    fn random_systems_are_reproducible_and_consistent() {
        for design in [Design::bell(2, 2, 2), Design::bell(2, 3, 3), Design::cyclic(5, 2), Design::mars(3)] {
            for seed in 0..20 {
                let a = random_consistent_system(seed, &design, 12, false);
                let b = random_consistent_system(seed, &design, 12, false);
                assert_eq!(system_to_json(&a), system_to_json(&b));
                assert!(a.is_consistently_connected(), "{design} seed {seed}");
            }
        }
        let u = random_consistent_system(1, &Design::bell(2, 2, 2), 12, true);
        for v in u.roster() {
            assert_eq!(u.marginal(&v).unwrap(), vec![q(1, 2), q(1, 2)]);
        }
    }
}
