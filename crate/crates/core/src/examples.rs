//! Labelled example atoms: file format and negative sampling.
//!
//! One example per line, `+ atom.` for positives and `- atom.` for
//! negatives; `%` starts a comment.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::frontend::{format_atom, parse_atom, Atom, PredicateId, Program, Term};
use crate::store::KnowledgeStore;

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub atom: Atom,
    /// 1 for positives, 0 for negatives.
    pub label: f64,
}

impl Example {
    pub fn is_positive(&self) -> bool {
        self.label > 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ExampleError {
    pub line: usize,
    pub message: String,
}

pub fn parse_examples(src: &str) -> Result<Vec<Example>, ExampleError> {
    let mut out = Vec::new();
    for (k, raw) in src.lines().enumerate() {
        let line = k + 1;
        let text = raw.split('%').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |message: String| ExampleError { line, message };
        let (label, rest) = match text.chars().next() {
            Some('+') => (1.0, &text[1..]),
            Some('-') => (0.0, &text[1..]),
            _ => return Err(err("expected `+` or `-` before the atom".into())),
        };
        let atom = parse_atom(rest.trim()).map_err(|e| err(e.to_string()))?;
        if atom.terms.iter().any(|t| !matches!(t, Term::Constant(_))) {
            return Err(err(format!("example `{}` must have constant arguments", format_atom(&atom))));
        }
        out.push(Example { atom, label });
    }
    Ok(out)
}

pub fn format_examples(examples: &[Example]) -> String {
    let mut s = String::new();
    for e in examples {
        s.push_str(if e.is_positive() { "+ " } else { "- " });
        s.push_str(&format_atom(&e.atom));
        s.push_str(".\n");
    }
    s
}

/// Problems that prevent scoring the examples against the program.
pub fn check_examples(examples: &[Example], program: &Program, store: &KnowledgeStore) -> Vec<String> {
    let defined: BTreeSet<PredicateId> = program
        .facts
        .iter()
        .map(|f| f.atom.id())
        .chain(program.rules.iter().map(|r| r.head.id()))
        .collect();
    let mut problems = Vec::new();
    let mut reported = BTreeSet::new();
    for e in examples {
        let id = e.atom.id();
        if !defined.contains(&id) && reported.insert(format!("p:{id}")) {
            problems.push(format!("example predicate {id} has neither facts nor rules"));
        }
        for t in &e.atom.terms {
            if let Term::Constant(c) = t {
                if store.entities.index_of(c).is_none() && reported.insert(format!("e:{c}")) {
                    problems.push(format!("entity `{c}` in example `{}` is not in the knowledge base", format_atom(&e.atom)));
                }
            }
        }
    }
    problems
}

/// Local closed world negatives: for each binary positive `p(a, b)`, up to
/// `k` atoms `p(a, c)` per first argument `a`, where `c` appears as a second
/// argument of `p` (in facts or positives) and `p(a, c)` is not positive.
pub fn generate_negatives(positives: &[Example], program: &Program, k: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seconds: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let push_second = |pred: &str, c: &str, seconds: &mut BTreeMap<String, Vec<String>>| {
        let list = seconds.entry(pred.to_string()).or_default();
        if !list.iter().any(|x| x == c) {
            list.push(c.to_string());
        }
    };
    for f in &program.facts {
        if f.atom.arity() == 2 {
            if let Term::Constant(c) = &f.atom.terms[1] {
                push_second(&f.atom.predicate, c, &mut seconds);
            }
        }
    }
    let mut positive_set: BTreeSet<(String, String, String)> = BTreeSet::new();
    let mut firsts: Vec<(String, String)> = Vec::new();
    for e in positives.iter().filter(|e| e.is_positive() && e.atom.arity() == 2) {
        let (Term::Constant(a), Term::Constant(b)) = (&e.atom.terms[0], &e.atom.terms[1]) else {
            continue;
        };
        push_second(&e.atom.predicate, b, &mut seconds);
        positive_set.insert((e.atom.predicate.clone(), a.clone(), b.clone()));
        let key = (e.atom.predicate.clone(), a.clone());
        if !firsts.contains(&key) {
            firsts.push(key);
        }
    }
    let mut out = Vec::new();
    for (pred, a) in firsts {
        let mut candidates: Vec<&String> = seconds[&pred]
            .iter()
            .filter(|c| !positive_set.contains(&(pred.clone(), a.clone(), (*c).clone())))
            .collect();
        candidates.shuffle(&mut rng);
        for c in candidates.into_iter().take(k) {
            out.push(Example {
                atom: Atom::new(pred.clone(), vec![Term::Constant(a.clone()), Term::Constant(c.clone())]),
                label: 0.0,
            });
        }
    }
    out
}
