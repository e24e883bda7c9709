//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use difflog::autodiff::Value;
use difflog::compiler::{compile_rule, Step, DEFAULT_MAX_PARTIAL_PATHS};
use difflog::examples::Example;
use difflog::frontend::{parse_atom, parse_program};
use difflog::store::SlotId;
use difflog::{Model, ModelOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Triple = (String, String, String);

/// A binary body literal `pred(a, b)` over rule variables.
#[derive(Debug, Clone)]
pub struct Lit {
    pub pred: String,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone)]
pub struct RandomRule {
    pub head: String,
    /// Position of the head in the stratification order.
    pub level: usize,
    pub body: Vec<Lit>,
}

/// A function-free program with unit weights and non-recursive binary
/// rules whose bodies connect `X` to `Y` without free terms. Bodies are
/// chains of literals in random orientation, plus `p(V, V)` loops, so
/// every term graph is a tree.
#[derive(Debug, Clone)]
pub struct RandomProgram {
    pub entities: Vec<String>,
    pub facts: BTreeSet<Triple>,
    pub rules: Vec<RandomRule>,
    pub heads: Vec<String>,
    pub source: String,
}

pub fn random_program(seed: u64) -> RandomProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=10);
    let entities: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let base: Vec<String> = (0..rng.gen_range(1..=3)).map(|i| format!("b{i}")).collect();
    let mut facts = BTreeSet::new();
    for p in &base {
        for _ in 0..rng.gen_range(1..=2 * n) {
            let a = entities.choose(&mut rng).unwrap().clone();
            let b = entities.choose(&mut rng).unwrap().clone();
            facts.insert((p.clone(), a, b));
        }
    }
    let mut rules = Vec::new();
    let mut heads: Vec<String> = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let level = rng.gen_range(0..=heads.len().min(2));
        if level == heads.len() {
            heads.push(format!("h{level}"));
        }
        let mut usable: Vec<String> = base.clone();
        usable.extend(heads[..level].iter().cloned());
        let pick = |rng: &mut ChaCha8Rng, a: &str, b: &str| {
            let pred = usable.choose(rng).unwrap().clone();
            if rng.gen_bool(0.5) {
                Lit {
                    pred,
                    a: a.into(),
                    b: b.into(),
                }
            } else {
                Lit {
                    pred,
                    a: b.into(),
                    b: a.into(),
                }
            }
        };
        let len = rng.gen_range(1..=3);
        let mut chain = vec!["X".to_string()];
        for k in 1..len {
            chain.push(format!("Z{k}"));
        }
        chain.push("Y".to_string());
        let mut body: Vec<Lit> = chain.windows(2).map(|w| pick(&mut rng, &w[0], &w[1])).collect();
        if rng.gen_bool(0.3) {
            let v = chain.choose(&mut rng).unwrap().clone();
            let lit = pick(&mut rng, &v, &v);
            body.insert(rng.gen_range(0..=body.len()), lit);
        }
        rules.push(RandomRule {
            head: heads[level].clone(),
            level,
            body,
        });
    }
    for h in &heads {
        if rng.gen_bool(0.3) {
            let a = entities.choose(&mut rng).unwrap().clone();
            let b = entities.choose(&mut rng).unwrap().clone();
            facts.insert((h.clone(), a, b));
        }
    }
    let mut source = String::new();
    for (p, a, b) in &facts {
        source.push_str(&format!("{p}({a}, {b}).\n"));
    }
    for r in &rules {
        let body: Vec<String> = r.body.iter().map(|l| format!("{}({}, {})", l.pred, l.a, l.b)).collect();
        source.push_str(&format!("{}(X, Y) :- {}.\n", r.head, body.join(", ")));
    }
    RandomProgram {
        entities,
        facts,
        rules,
        heads,
        source,
    }
}

/// Every provable ground atom, by enumerating all variable assignments.
pub fn derive(p: &RandomProgram) -> BTreeSet<Triple> {
    let mut known = p.facts.clone();
    let mut order: Vec<&RandomRule> = p.rules.iter().collect();
    order.sort_by_key(|r| r.level);
    for rule in order {
        let mut vars: Vec<&str> = vec!["X", "Y"];
        for l in &rule.body {
            for v in [l.a.as_str(), l.b.as_str()] {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        let n = p.entities.len();
        let mut assign = vec![0usize; vars.len()];
        let slot = |v: &str| vars.iter().position(|x| *x == v).unwrap();
        let mut derived = Vec::new();
        loop {
            let holds = rule.body.iter().all(|l| {
                known.contains(&(
                    l.pred.clone(),
                    p.entities[assign[slot(&l.a)]].clone(),
                    p.entities[assign[slot(&l.b)]].clone(),
                ))
            });
            if holds {
                derived.push((rule.head.clone(), p.entities[assign[0]].clone(), p.entities[assign[1]].clone()));
            }
            let mut k = 0;
            while k < assign.len() {
                assign[k] += 1;
                if assign[k] < n {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
            if k == assign.len() {
                break;
            }
        }
        known.extend(derived);
    }
    known
}

/// True when some compiled path of the program uses `any/n`.
pub fn uses_any(source: &str) -> bool {
    let program = parse_program(source).unwrap();
    program.rules.iter().any(|r| {
        let c = compile_rule(r, r.head.arity() - 1, DEFAULT_MAX_PARTIAL_PATHS).unwrap();
        c.plan.paths.iter().any(|p| p.steps.contains(&Step::Any))
    })
}

pub fn vector(model: &Model, query: &str) -> Vec<f64> {
    match model.query(&parse_atom(query).unwrap()).unwrap() {
        Value::Vector(v) => v,
        other => panic!("expected a vector for {query}, got {other:?}"),
    }
}

pub fn scalar(model: &Model, query: &str) -> f64 {
    match model.query(&parse_atom(query).unwrap()).unwrap() {
        Value::Scalar(s) => s,
        other => panic!("expected a scalar for {query}, got {other:?}"),
    }
}

/// Names of the entities with a positive score.
pub fn support(model: &Model, scores: &[f64]) -> BTreeSet<String> {
    scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 0.0)
        .map(|(i, _)| model.store.entities.name(i).to_string())
        .collect()
}

/// Compares the network's support with the oracle for every head
/// predicate, forward from each entity and transposed into each entity.
/// Returns the first mismatch.
pub fn check_grounding(p: &RandomProgram) -> Result<usize, String> {
    let model = Model::from_source(&p.source, ModelOptions::default()).map_err(|e| e.to_string())?;
    let truth = derive(p);
    let mut queries = 0;
    for h in &p.heads {
        for e in model.store.entities.names() {
            let fwd = support(&model, &vector(&model, &format!("{h}({e}, Y)")));
            let want: BTreeSet<String> =
                truth.iter().filter(|t| &t.0 == h && &t.1 == e).map(|t| t.2.clone()).collect();
            if fwd != want {
                return Err(format!("{h}({e}, Y): network {fwd:?}, oracle {want:?}\n{}", p.source));
            }
            let inv = support(&model, &vector(&model, &format!("{h}(X, {e})")));
            let want: BTreeSet<String> =
                truth.iter().filter(|t| &t.0 == h && &t.2 == e).map(|t| t.1.clone()).collect();
            if inv != want {
                return Err(format!("{h}(X, {e}): network {inv:?}, oracle {want:?}\n{}", p.source));
            }
            queries += 2;
        }
    }
    Ok(queries)
}

/// Entities reachable from `from` in at most `max_len` edges.
pub fn reachable_within(edges: &BTreeSet<(usize, usize)>, from: usize, max_len: usize) -> BTreeSet<usize> {
    let mut frontier: BTreeSet<usize> = BTreeSet::from([from]);
    let mut seen = BTreeSet::new();
    for _ in 0..max_len {
        let next: BTreeSet<usize> = edges
            .iter()
            .filter(|(a, _)| frontier.contains(a))
            .map(|&(_, b)| b)
            .collect();
        seen.extend(next.iter().copied());
        frontier = next;
    }
    seen
}

/// Analytic gradients against central finite differences of the loss.
pub struct GradientCheck {
    pub coordinates: usize,
    /// Coordinates with a gradient above 1e-9 in magnitude.
    pub nonzero: usize,
    /// Worst relative error over the nonzero coordinates.
    pub worst_relative: f64,
    pub failures: Vec<String>,
}

pub fn gradient_check(model: &Model, examples: &[Example], h: f64) -> GradientCheck {
    let (_, grads) = model.loss_and_gradients(examples).unwrap();
    let mut probe = model.clone();
    let mut coordinates = 0;
    let mut nonzero = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for slot in model.store.learnable_slots() {
        let name = model.store.predicate(slot).id.to_string();
        for j in 0..model.weights.slot(slot).len() {
            let base = model.weights.slot(slot)[j];
            probe.weights.slot_mut(slot)[j] = base + h;
            let up = probe.loss_and_gradients(examples).unwrap().0;
            probe.weights.slot_mut(slot)[j] = base - h;
            let down = probe.loss_and_gradients(examples).unwrap().0;
            probe.weights.slot_mut(slot)[j] = base;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.slot(slot)[j];
            let abs = (numeric - analytic).abs();
            let rel = abs / numeric.abs().max(analytic.abs()).max(f64::MIN_POSITIVE);
            coordinates += 1;
            if analytic.abs() > 1e-9 {
                nonzero += 1;
                worst = worst.max(rel);
            }
            if abs >= 1e-7 && rel >= 1e-4 {
                failures.push(format!("{name}[{j}]: analytic {analytic:e}, numeric {numeric:e}"));
            }
        }
    }
    GradientCheck {
        coordinates,
        nonzero,
        worst_relative: worst,
        failures,
    }
}

/// Learnable weights of a unary predicate as an entity-name map.
pub fn unary_weights(model: &Model, slot: SlotId) -> BTreeMap<String, f64> {
    let pred = model.store.predicate(slot);
    pred.coordinate_atoms(&model.store.entities)
        .into_iter()
        .zip(model.weights.slot(slot))
        .map(|(a, &w)| (a.terms[0].as_constant().unwrap().to_string(), w))
        .collect()
}

/// Identical parse of the emitted text.
pub fn round_trips(source: &str) -> Result<(), String> {
    use difflog::frontend::emit_program;
    let a = parse_program(source).map_err(|e| e.to_string())?;
    let text = emit_program(&a);
    let b = parse_program(&text).map_err(|e| format!("{e} in\n{text}"))?;
    if a != b {
        return Err(format!("emitted program differs:\n{text}"));
    }
    if emit_program(&b) != text {
        return Err("emission is not idempotent".into());
    }
    Ok(())
}

/// The worked cosine program over `features` latent features.
pub fn cosine_program(features: usize, entities: usize) -> String {
    let mut s = String::from("#function(square_root/1, square_root).\n#function(inverse/1, inverse).\n");
    for i in 1..=features {
        s.push_str(&format!("#learnable(l{i}/1, dense).\n"));
    }
    for e in 0..entities {
        s.push_str(&format!("entity(x{e}).\n"));
    }
    for i in 1..=features {
        s.push_str(&format!("h{i}(X, Y) :- l{i}(X), l{i}(Y).\n"));
    }
    for i in 1..=features {
        s.push_str(&format!("num(X, Y) :- h{i}(X, Y).\n"));
    }
    for i in 1..=features {
        s.push_str(&format!("square_sum(X) :- l{i}(X), l{i}(X).\n"));
    }
    s.push_str("norm(X) :- square_sum(X), square_root(X).\n");
    s.push_str("den(X, Y) :- norm(X), norm(Y).\n");
    s.push_str("inv_den(X, Y) :- den(X, Y), inverse(Y).\n");
    s.push_str("similarity(X, Y) :- num(X, Y), inv_den(X, Y).\n");
    s
}

/// Separable link task: `target(a, b)` holds when `link(a, b)` and `b` is
/// one of the first half of the entities. Returns (program, train, test).
pub fn separable_task(seed: u64) -> (String, Vec<Example>, Vec<Example>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 20;
    let good = |b: usize| b < n / 2;
    let mut src = String::from("#learnable(score/1, dense).\n");
    let mut pairs = Vec::new();
    for a in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&b| b != a).collect();
        others.shuffle(&mut rng);
        for &b in others.iter().take(6) {
            pairs.push((a, b));
            src.push_str(&format!("link(n{a}, n{b}).\n"));
        }
    }
    src.push_str("target(X, Y) :- link(X, Y), score(Y).\n");
    // Every second argument occurs in training; the rest go to test.
    let mut seen = BTreeSet::new();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    pairs.shuffle(&mut rng);
    for (a, b) in pairs {
        let ex = Example {
            atom: parse_atom(&format!("target(n{a}, n{b})")).unwrap(),
            label: if good(b) { 1.0 } else { 0.0 },
        };
        if seen.insert(b) || rng.gen_bool(0.6) {
            train.push(ex);
        } else {
            test.push(ex);
        }
    }
    (src, train, test)
}
