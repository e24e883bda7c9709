//! Layer graph construction with bounded unfolding of recursive predicates.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::autodiff::Builtin;
use crate::compiler::{compile_rule, CompileError, CompiledRule, DagEdgeKind, LiteralRole, DEFAULT_MAX_PARTIAL_PATHS};
use crate::frontend::{attribute_predicates, format_atom, format_rule, PredicateId, Program, Rule};
use crate::store::{KnowledgeStore, SlotId};

use super::Combiners;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Transposed,
}

impl Direction {
    fn index(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Transposed => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct RuleLayer {
    pub rule_index: usize,
    pub rule: Rule,
    pub direction: Direction,
    pub compiled: CompiledRule,
    /// Layer of each body literal per traversal direction.
    pub body_layers: Vec<[Option<LayerId>; 2]>,
}

impl RuleLayer {
    pub fn body_layer(&self, index: usize, direction: Direction) -> LayerId {
        self.body_layers[index][direction.index()].expect("body layer built")
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Layer {
    Fact {
        predicate: PredicateId,
        slot: SlotId,
        direction: Direction,
    },
    Function {
        predicate: PredicateId,
        builtin: Builtin,
    },
    /// A predicate with no facts and no remaining rules; evaluates to zero.
    Empty { predicate: PredicateId },
    Rule(RuleLayer),
    Literal {
        predicate: PredicateId,
        direction: Direction,
        children: Vec<LayerId>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("predicate {0} has neither facts nor rules")]
    UndefinedTarget(PredicateId),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("{0}")]
    Program(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub roots: BTreeMap<(PredicateId, Direction), LayerId>,
    pub depth: usize,
    pub combiners: Combiners,
    /// Compilation warnings, e.g. body literals no path reaches.
    pub warnings: Vec<String>,
    attributes: BTreeSet<PredicateId>,
}

impl Network {
    pub fn layer(&self, id: LayerId) -> &Layer {
        &self.layers[id.0]
    }

    pub fn root(&self, predicate: &PredicateId, direction: Direction) -> Option<LayerId> {
        self.roots
            .get(&(predicate.clone(), normalize(predicate, direction, &self.attributes)))
            .copied()
    }
}

/// Unary, propositional and attribute predicates have a single direction.
fn normalize(predicate: &PredicateId, direction: Direction, attributes: &BTreeSet<PredicateId>) -> Direction {
    if predicate.arity == 2 && !attributes.contains(predicate) {
        direction
    } else {
        Direction::Forward
    }
}

/// Predicates that take part in a cycle of the head-to-body dependency graph.
pub fn recursive_predicates(program: &Program) -> BTreeSet<PredicateId> {
    let mut deps: BTreeMap<PredicateId, BTreeSet<PredicateId>> = BTreeMap::new();
    for r in &program.rules {
        deps.entry(r.head.id()).or_default().extend(r.body.iter().map(|a| a.id()));
    }
    let mut out = BTreeSet::new();
    for start in deps.keys() {
        let mut stack: Vec<&PredicateId> = deps[start].iter().collect();
        let mut seen = BTreeSet::new();
        while let Some(p) = stack.pop() {
            if p == start {
                out.insert(start.clone());
                break;
            }
            if seen.insert(p) {
                if let Some(next) = deps.get(p) {
                    stack.extend(next.iter());
                }
            }
        }
    }
    out
}

type Counts = BTreeMap<PredicateId, usize>;

struct Builder<'a> {
    program: &'a Program,
    store: &'a KnowledgeStore,
    depth: usize,
    recursive: BTreeSet<PredicateId>,
    attributes: BTreeSet<PredicateId>,
    functions: HashMap<PredicateId, Builtin>,
    compiled: HashMap<(usize, usize), CompiledRule>,
    memo: HashMap<(PredicateId, Direction, Counts), LayerId>,
    leaf_memo: HashMap<(PredicateId, Direction), LayerId>,
    layers: Vec<Layer>,
    warnings: Vec<String>,
    warned: BTreeSet<usize>,
}

impl<'a> Builder<'a> {
    fn push(&mut self, layer: Layer) -> LayerId {
        self.layers.push(layer);
        LayerId(self.layers.len() - 1)
    }

    fn has_rules(&self, predicate: &PredicateId) -> bool {
        self.program.rules.iter().any(|r| &r.head.id() == predicate)
    }

    /// Fact layer of a stored predicate, or an empty layer.
    fn leaf(&mut self, predicate: &PredicateId, direction: Direction) -> LayerId {
        if let Some(&id) = self.leaf_memo.get(&(predicate.clone(), direction)) {
            return id;
        }
        let layer = match self.store.slot(predicate) {
            Some(slot) => Layer::Fact {
                predicate: predicate.clone(),
                slot,
                direction,
            },
            None => Layer::Empty {
                predicate: predicate.clone(),
            },
        };
        let id = self.push(layer);
        self.leaf_memo.insert((predicate.clone(), direction), id);
        id
    }

    fn compiled(&mut self, rule_index: usize, dest_index: usize) -> Result<CompiledRule, CompileError> {
        if let Some(c) = self.compiled.get(&(rule_index, dest_index)) {
            return Ok(c.clone());
        }
        let rule = &self.program.rules[rule_index];
        let c = compile_rule(rule, dest_index, DEFAULT_MAX_PARTIAL_PATHS)?;
        if self.warned.insert(rule_index) {
            for &i in &c.plan.unreachable {
                self.warnings.push(format!(
                    "literal `{}` in rule `{}` is not connected to any path and is ignored",
                    format_atom(&rule.body[i]),
                    format_rule(rule)
                ));
            }
        }
        self.compiled.insert((rule_index, dest_index), c.clone());
        Ok(c)
    }

    fn literal(&mut self, predicate: &PredicateId, direction: Direction, counts: &Counts) -> Result<LayerId, NetworkError> {
        let direction = normalize(predicate, direction, &self.attributes);
        if let Some(&builtin) = self.functions.get(predicate) {
            if let Some(&id) = self.leaf_memo.get(&(predicate.clone(), Direction::Forward)) {
                return Ok(id);
            }
            let id = self.push(Layer::Function {
                predicate: predicate.clone(),
                builtin,
            });
            self.leaf_memo.insert((predicate.clone(), Direction::Forward), id);
            return Ok(id);
        }
        let is_recursive = self.recursive.contains(predicate);
        let seen = counts.get(predicate).copied().unwrap_or(0);
        if is_recursive && seen > self.depth {
            return Ok(self.leaf(predicate, direction));
        }
        if !self.has_rules(predicate) {
            return Ok(self.leaf(predicate, direction));
        }
        let key = (predicate.clone(), direction, counts.clone());
        if let Some(&id) = self.memo.get(&key) {
            return Ok(id);
        }
        let mut inner = counts.clone();
        if is_recursive {
            *inner.entry(predicate.clone()).or_default() += 1;
        }
        let mut children = Vec::new();
        if self.store.slot(predicate).is_some() {
            children.push(self.leaf(predicate, direction));
        }
        let dest_index = match direction {
            Direction::Forward => predicate.arity - 1,
            Direction::Transposed => 0,
        };
        for rule_index in 0..self.program.rules.len() {
            if self.program.rules[rule_index].head.id() != *predicate {
                continue;
            }
            let layer = self.rule_layer(rule_index, dest_index, direction, &inner)?;
            children.push(layer);
        }
        let id = self.push(Layer::Literal {
            predicate: predicate.clone(),
            direction,
            children,
        });
        self.memo.insert(key, id);
        Ok(id)
    }

    fn rule_layer(
        &mut self,
        rule_index: usize,
        dest_index: usize,
        direction: Direction,
        counts: &Counts,
    ) -> Result<LayerId, NetworkError> {
        let compiled = self.compiled(rule_index, dest_index)?;
        let rule = self.program.rules[rule_index].clone();
        let mut body_layers: Vec<[Option<LayerId>; 2]> = vec![[None, None]; rule.body.len()];
        let mut wanted: Vec<(usize, Direction)> = Vec::new();
        for dag in &compiled.dags {
            for e in &dag.edges {
                if let DagEdgeKind::Literal { index, transposed } = e.kind {
                    let d = if transposed { Direction::Transposed } else { Direction::Forward };
                    wanted.push((index, d));
                }
            }
        }
        for (i, role) in compiled.plan.graph.roles.iter().enumerate() {
            if matches!(role, LiteralRole::Loop(_) | LiteralRole::Ground) && !compiled.plan.unreachable.contains(&i) {
                wanted.push((i, Direction::Forward));
            }
        }
        for (index, d) in wanted {
            if body_layers[index][d.index()].is_none() {
                let id = self.literal(&rule.body[index].id(), d, counts)?;
                body_layers[index][d.index()] = Some(id);
            }
        }
        Ok(self.push(Layer::Rule(RuleLayer {
            rule_index,
            rule,
            direction,
            compiled,
            body_layers,
        })))
    }
}

/// Builds root literal layers for `targets`, unfolding recursive predicates
/// `depth` times.
pub fn build_network(
    program: &Program,
    store: &KnowledgeStore,
    targets: &[(PredicateId, Direction)],
    depth: usize,
) -> Result<Network, NetworkError> {
    let (and, or) = program.combiners();
    let combiners = Combiners::from_names(and, or).map_err(NetworkError::Program)?;
    let mut functions = HashMap::new();
    for (id, name) in program.directives.iter().filter_map(|d| match d {
        crate::frontend::Directive::Function { predicate, builtin } => Some((predicate.clone(), builtin.clone())),
        _ => None,
    }) {
        let builtin =
            Builtin::from_name(&name).ok_or_else(|| NetworkError::Program(format!("unknown builtin `{name}`")))?;
        functions.insert(id, builtin);
    }
    let mut b = Builder {
        program,
        store,
        depth,
        recursive: recursive_predicates(program),
        attributes: attribute_predicates(program).into_iter().collect(),
        functions,
        compiled: HashMap::new(),
        memo: HashMap::new(),
        leaf_memo: HashMap::new(),
        layers: Vec::new(),
        warnings: Vec::new(),
        warned: BTreeSet::new(),
    };
    let mut roots = BTreeMap::new();
    for (predicate, direction) in targets {
        if store.slot(predicate).is_none() && !b.has_rules(predicate) && !b.functions.contains_key(predicate) {
            return Err(NetworkError::UndefinedTarget(predicate.clone()));
        }
        let direction = normalize(predicate, *direction, &b.attributes);
        let id = b.literal(predicate, direction, &Counts::new())?;
        roots.insert((predicate.clone(), direction), id);
    }
    Ok(Network {
        layers: b.layers,
        roots,
        depth,
        combiners,
        warnings: b.warnings,
        attributes: b.attributes,
    })
}

/// Every predicate with facts or rules, in both directions where meaningful.
pub fn all_targets(program: &Program, store: &KnowledgeStore) -> Vec<(PredicateId, Direction)> {
    let attributes: BTreeSet<PredicateId> = attribute_predicates(program).into_iter().collect();
    let mut preds: BTreeSet<PredicateId> = store.predicates().map(|(_, p)| p.id.clone()).collect();
    preds.extend(program.rules.iter().map(|r| r.head.id()));
    let mut out = Vec::new();
    for p in preds {
        out.push((p.clone(), Direction::Forward));
        if normalize(&p, Direction::Transposed, &attributes) == Direction::Transposed {
            out.push((p, Direction::Transposed));
        }
    }
    out
}
