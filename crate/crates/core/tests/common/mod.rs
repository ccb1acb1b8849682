#![allow(dead_code)]

use cbd::generators::{random_consistent_system, Design};
use cbd::system::{system_from_json, system_to_raw, validate_system};
use cbd::{Rational, System};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Shapes small enough for both the reduced LP and the vertex oracle.
pub fn oracle_designs() -> Vec<Design> {
    vec![
        Design::bell(2, 2, 2),
        Design::bell(2, 3, 2),
        Design::bell(3, 2, 2),
        Design::bell(2, 2, 3),
        Design::cyclic(3, 2),
        Design::cyclic(4, 2),
        Design::cyclic(5, 2),
        Design::cyclic(3, 3),
        Design::mars(3),
    ]
}

/// Random system that is inconsistently connected in general: block 0 of
/// one random system replaced by block 0 of another.
pub fn spliced_system(seed: u64, design: &Design, denominator: u64) -> System {
    let base = random_consistent_system(seed, design, denominator, false);
    let donor = random_consistent_system(seed.wrapping_add(0x9e37_79b9), design, denominator, false);
    let mut raw = system_to_raw(&base);
    raw.blocks[0] = system_to_raw(&donor).blocks[0].clone();
    validate_system(&raw).expect("splicing keeps every invariant")
}

/// Fuzz input number `i`: mostly consistent, every fourth one spliced.
pub fn mixed_system(i: u64) -> System {
    let designs = oracle_designs();
    let design = &designs[(i as usize) % designs.len()];
    if i % 4 == 3 {
        spliced_system(i, design, 8)
    } else {
        random_consistent_system(i, design, 8 + i % 5, false)
    }
}

/// Random pmf on `k` outcomes with denominator `d`.
pub fn random_pmf(rng: &mut ChaCha8Rng, k: usize, d: i64) -> Vec<Rational> {
    let mut cuts: Vec<i64> = (0..k - 1).map(|_| rng.random_range(0..=d)).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::new();
    for c in cuts.into_iter().chain(std::iter::once(d)) {
        out.push(q(c - prev, d));
        prev = c;
    }
    out
}

/// One content `X` recorded alone in contexts `c1` (pmf `p`) and `c2` (pmf `r`).
pub fn transport_system(p: &[Rational], r: &[Rational]) -> System {
    let labels: Vec<String> = (0..p.len()).map(|i| format!("x{i}")).collect();
    let pmf = |v: &[Rational]| -> Value {
        labels
            .iter()
            .zip(v)
            .map(|(l, x)| (l.clone(), json!(cbd::rational::format_rational(x))))
            .collect::<serde_json::Map<_, _>>()
            .into()
    };
    system_from_json(json!({
        "contents": {"X": labels},
        "contexts": ["c1", "c2"],
        "blocks": [
            {"context": "c1", "variables": [{"content": "X"}], "pmf": pmf(p)},
            {"context": "c2", "variables": [{"content": "X"}], "pmf": pmf(r)},
        ],
    }))
    .expect("transport system is valid")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
