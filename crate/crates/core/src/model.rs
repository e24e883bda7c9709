//! A program loaded into a store and compiled into a network.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::autodiff::{EvalError, Gradients, Value, Var};
use crate::examples::Example;
use crate::frontend::{
    format_atom, parse_program, validate_program, Atom, Diagnostic, Fact, ParseError, PredicateId, Program, Term,
};
use crate::network::{all_targets, build_network, Direction, Evaluator, Network, NetworkError};
use crate::store::{KnowledgeStore, StoreError, StoreOptions, WeightTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Diagnostics(Vec<Diagnostic>),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown predicate {0}")]
    UnknownPredicate(PredicateId),
    #[error("unsupported query `{0}`")]
    BadQuery(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelOptions {
    /// Seed for dense initialisation of learnable predicates.
    pub seed: u64,
    /// Recursion depth; the program's directive (or 1) when absent.
    pub depth: Option<usize>,
}

/// Shape of a query atom.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    /// `p(a, Y)` or `p(X, a)`: scores over all entities.
    Vector {
        predicate: PredicateId,
        direction: Direction,
        inputs: Vec<usize>,
    },
    /// `p(X)`: the score of every entity.
    AllEntities { predicate: PredicateId },
    /// A ground atom or a propositional predicate.
    Ground(Atom),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub program: Program,
    pub store: KnowledgeStore,
    pub weights: WeightTable,
    pub network: Network,
}

impl Model {
    pub fn new(program: Program, options: ModelOptions) -> Result<Model, ModelError> {
        let errors: Vec<Diagnostic> = validate_program(&program).into_iter().filter(|d| d.is_error()).collect();
        if !errors.is_empty() {
            return Err(ModelError::Diagnostics(errors));
        }
        let store = KnowledgeStore::build(&program, StoreOptions { seed: options.seed });
        let depth = options.depth.unwrap_or_else(|| program.recursion_depth());
        let targets = all_targets(&program, &store);
        let network = build_network(&program, &store, &targets, depth)?;
        let weights = store.initial_weights();
        Ok(Model {
            program,
            store,
            weights,
            network,
        })
    }

    pub fn from_source(src: &str, options: ModelOptions) -> Result<Model, ModelError> {
        Model::new(parse_program(src)?, options)
    }

    pub fn depth(&self) -> usize {
        self.network.depth
    }

    pub fn classify_query(&self, atom: &Atom) -> Result<Query, ModelError> {
        let id = atom.id();
        if self.network.root(&id, Direction::Forward).is_none() {
            return Err(ModelError::UnknownPredicate(id));
        }
        let vars: Vec<usize> = (0..atom.arity()).filter(|&k| atom.terms[k].is_variable()).collect();
        let entity = |t: &Term| -> Result<usize, ModelError> {
            match t {
                Term::Constant(c) => Ok(self.store.entities.resolve(c)?),
                _ => Err(ModelError::BadQuery(format_atom(atom))),
            }
        };
        let n = atom.arity();
        match vars.as_slice() {
            [] => {
                for t in &atom.terms {
                    entity(t)?;
                }
                Ok(Query::Ground(atom.clone()))
            }
            [0] if n == 1 => Ok(Query::AllEntities { predicate: id }),
            [k] if *k == n - 1 => Ok(Query::Vector {
                predicate: id,
                direction: Direction::Forward,
                inputs: atom.terms[..n - 1].iter().map(entity).collect::<Result<_, _>>()?,
            }),
            [0] if n == 2 => {
                if !self.network.roots.contains_key(&(id.clone(), Direction::Transposed)) {
                    return Err(ModelError::BadQuery(format_atom(atom)));
                }
                Ok(Query::Vector {
                    predicate: id,
                    direction: Direction::Transposed,
                    inputs: vec![entity(&atom.terms[1])?],
                })
            }
            _ => Err(ModelError::BadQuery(format_atom(atom))),
        }
    }

    fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(&self.network, &self.store, &self.weights)
    }

    /// Scores of a query over the entity index, or a single score.
    pub fn query(&self, atom: &Atom) -> Result<Value, ModelError> {
        let mut ev = self.evaluator();
        let n = self.store.n();
        match self.classify_query(atom)? {
            Query::Vector {
                predicate,
                direction,
                inputs,
            } => {
                let root = self.network.root(&predicate, direction).unwrap();
                let xs: Vec<Var> = inputs.iter().map(|&i| ev.one_hot(i)).collect();
                let out = ev.eval(root, &xs)?;
                Ok(Value::Vector(ev.value(out).as_vector(n)))
            }
            Query::AllEntities { predicate } => {
                let root = self.network.root(&predicate, Direction::Forward).unwrap();
                let mut scores = vec![0.0; n];
                for (i, s) in scores.iter_mut().enumerate() {
                    let x = ev.one_hot(i);
                    let out = ev.eval(root, &[x])?;
                    *s = ev.value(out).at(i);
                }
                Ok(Value::Vector(scores))
            }
            Query::Ground(a) => {
                let v = self.score_on(&mut ev, &[a])?;
                Ok(Value::Scalar(ev.value(v[0]).at(0)))
            }
        }
    }

    /// Records the score of every ground atom on the evaluator's tape; atoms
    /// sharing predicate and inputs share one forward pass.
    pub fn score_on(&self, ev: &mut Evaluator<'_>, atoms: &[Atom]) -> Result<Vec<Var>, ModelError> {
        let mut outs = Vec::with_capacity(atoms.len());
        let mut forward: BTreeMap<(PredicateId, Vec<usize>), Var> = BTreeMap::new();
        for atom in atoms {
            let id = atom.id();
            let root = self
                .network
                .root(&id, Direction::Forward)
                .ok_or_else(|| ModelError::UnknownPredicate(id.clone()))?;
            let idx: Vec<usize> = atom
                .terms
                .iter()
                .map(|t| match t {
                    Term::Constant(c) => Ok(self.store.entities.resolve(c)?),
                    _ => Err(ModelError::BadQuery(format_atom(atom))),
                })
                .collect::<Result<_, _>>()?;
            let (inputs, read) = match idx.len() {
                0 => (Vec::new(), None),
                1 => (idx.clone(), Some(idx[0])),
                k => (idx[..k - 1].to_vec(), Some(idx[k - 1])),
            };
            let key = (id, inputs.clone());
            let out = match forward.get(&key) {
                Some(&v) => v,
                None => {
                    let xs: Vec<Var> = if inputs.is_empty() {
                        vec![ev.tape_mut().ones()]
                    } else {
                        inputs.iter().map(|&i| ev.one_hot(i)).collect()
                    };
                    let v = ev.eval(root, &xs)?;
                    forward.insert(key, v);
                    v
                }
            };
            outs.push(match read {
                Some(j) => ev.tape_mut().gather(out, j),
                None => ev.tape_mut().gather(out, 0),
            });
        }
        Ok(outs)
    }

    pub fn predict(&self, atoms: &[Atom]) -> Result<Vec<f64>, ModelError> {
        let mut ev = self.evaluator();
        let vars = self.score_on(&mut ev, atoms)?;
        Ok(vars.iter().map(|&v| ev.value(v).at(0)).collect())
    }

    /// Mean squared error over the examples and its gradient with respect
    /// to the learnable weights.
    pub fn loss_and_gradients(&self, examples: &[Example]) -> Result<(f64, Gradients), ModelError> {
        let mut ev = self.evaluator();
        let atoms: Vec<Atom> = examples.iter().map(|e| e.atom.clone()).collect();
        let vars = self.score_on(&mut ev, &atoms)?;
        let count = examples.len().max(1) as f64;
        let mut loss = 0.0;
        let mut seeds = Vec::with_capacity(vars.len());
        for (e, &v) in examples.iter().zip(&vars) {
            let d = ev.value(v).at(0) - e.label;
            loss += d * d;
            seeds.push((v, Value::Scalar(2.0 * d / count)));
        }
        let grads = ev.tape().backward_many(seeds);
        Ok((loss / count, grads))
    }

    /// The program with learnable fact weights replaced by their current
    /// values; coordinates created by dense initialisation become new facts.
    pub fn export_program(&self) -> Program {
        let mut program = self.program.clone();
        let mut covered: BTreeMap<PredicateId, Vec<bool>> = BTreeMap::new();
        for fact in &mut program.facts {
            let id = fact.atom.id();
            let Some(slot) = self.store.slot(&id) else { continue };
            let pred = self.store.predicate(slot);
            if pred.learnable.is_none() {
                continue;
            }
            if let Some(pos) = pred.position_of(&fact.atom, &self.store.entities) {
                fact.weight = self.weights.slot(slot)[pos];
                covered.entry(id).or_insert_with(|| vec![false; self.weights.slot(slot).len()])[pos] = true;
            }
        }
        for slot in self.store.learnable_slots() {
            let pred = self.store.predicate(slot);
            let w = self.weights.slot(slot);
            let seen = covered.get(&pred.id);
            for (pos, atom) in pred.coordinate_atoms(&self.store.entities).into_iter().enumerate() {
                if seen.is_some_and(|s| s[pos]) {
                    continue;
                }
                program.facts.push(Fact::new(atom, w[pos]));
            }
        }
        program.spans = Default::default();
        program
    }
}
