//! Entity index and per-predicate tensors.
//!
//! Every stored predicate becomes one [`PredicateTensor`]: binary facts a
//! sparse `n × n` matrix, unary facts a vector, propositional facts a scalar,
//! and facts with numeric second arguments an attribute pair of value and
//! weight vectors. Weights of every coordinate are kept in a [`WeightTable`]
//! so that training can update the learnable ones without touching the
//! structure.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::frontend::{Atom, Fact, LearnableInit, PredicateId, Program, Term};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("predicate {0} is not stored as a binary matrix")]
    NotBinary(PredicateId),
}

/// Bijection between entity names and `[0, n)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityIndex {
    names: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl EntityIndex {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn insert(&mut self, name: &str) -> usize {
        if let Some(&i) = self.lookup.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.lookup.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<usize, StoreError> {
        self.index_of(name).ok_or_else(|| StoreError::UnknownEntity(name.to_string()))
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn one_hot(&self, name: &str) -> Result<Vec<f64>, StoreError> {
        let i = self.resolve(name)?;
        let mut v = vec![0.0; self.len()];
        v[i] = 1.0;
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredicateTensor {
    BinarySparse(SparseMatrix),
    /// Stored coordinates and their weights.
    UnaryVector { indices: Vec<usize>, weights: Vec<f64> },
    PropositionalScalar(f64),
    /// Stored coordinates, attribute values and fact weights.
    Attribute {
        indices: Vec<usize>,
        values: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl PredicateTensor {
    /// Weight of every stored coordinate, in coordinate order.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            PredicateTensor::BinarySparse(m) => m.data().to_vec(),
            PredicateTensor::UnaryVector { weights, .. } => weights.clone(),
            PredicateTensor::PropositionalScalar(w) => vec![*w],
            PredicateTensor::Attribute { weights, .. } => weights.clone(),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, PredicateTensor::BinarySparse(_))
    }

    /// Number of coordinates with a non-zero weight.
    pub fn nnz(&self) -> usize {
        self.weights().iter().filter(|&&w| w != 0.0).count()
    }

    /// Dense `n`-vector view of a unary or attribute tensor; attributes give
    /// `values ⊙ weights`.
    pub fn dense_vector(&self, n: usize) -> Option<Vec<f64>> {
        let mut out = vec![0.0; n];
        match self {
            PredicateTensor::UnaryVector { indices, weights } => {
                for (&i, &w) in indices.iter().zip(weights) {
                    out[i] = w;
                }
            }
            PredicateTensor::Attribute {
                indices,
                values,
                weights,
            } => {
                for ((&i, &v), &w) in indices.iter().zip(values).zip(weights) {
                    out[i] = v * w;
                }
            }
            _ => return None,
        }
        Some(out)
    }
}

/// Transposes a binary tensor.
pub fn transpose_tensor(id: &PredicateId, tensor: &PredicateTensor) -> Result<PredicateTensor, StoreError> {
    match tensor {
        PredicateTensor::BinarySparse(m) => Ok(PredicateTensor::BinarySparse(m.transpose())),
        _ => Err(StoreError::NotBinary(id.clone())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredPredicate {
    pub id: PredicateId,
    pub tensor: PredicateTensor,
    pub learnable: Option<LearnableInit>,
}

impl StoredPredicate {
    /// The fact atom of every stored coordinate, in coordinate order.
    pub fn coordinate_atoms(&self, entities: &EntityIndex) -> Vec<Atom> {
        let name = |i: usize| Term::Constant(entities.name(i).to_string());
        let pred = &self.id.name;
        match &self.tensor {
            PredicateTensor::BinarySparse(m) => m
                .coordinates()
                .map(|(i, j)| Atom::new(pred.clone(), vec![name(i), name(j)]))
                .collect(),
            PredicateTensor::UnaryVector { indices, .. } => indices
                .iter()
                .map(|&i| Atom::new(pred.clone(), vec![name(i)]))
                .collect(),
            PredicateTensor::PropositionalScalar(_) => vec![Atom::new(pred.clone(), vec![])],
            PredicateTensor::Attribute { indices, values, .. } => indices
                .iter()
                .zip(values)
                .map(|(&i, &v)| Atom::new(pred.clone(), vec![name(i), Term::Number(v)]))
                .collect(),
        }
    }

    /// Coordinate position of a ground fact atom of this predicate.
    pub fn position_of(&self, atom: &Atom, entities: &EntityIndex) -> Option<usize> {
        let entity = |t: &Term| t.as_constant().and_then(|c| entities.index_of(c));
        match &self.tensor {
            PredicateTensor::BinarySparse(m) => m.position(entity(&atom.terms[0])?, entity(&atom.terms[1])?),
            PredicateTensor::UnaryVector { indices, .. } | PredicateTensor::Attribute { indices, .. } => {
                let i = entity(&atom.terms[0])?;
                indices.binary_search(&i).ok()
            }
            PredicateTensor::PropositionalScalar(_) => Some(0),
        }
    }
}

/// Handle to a stored predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeStore {
    pub entities: EntityIndex,
    predicates: Vec<StoredPredicate>,
    by_id: HashMap<PredicateId, SlotId>,
}

/// Current weight of every stored coordinate, one slot per predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    slots: Vec<Vec<f64>>,
}

impl WeightTable {
    pub fn slot(&self, id: SlotId) -> &[f64] {
        &self.slots[id.0]
    }

    pub fn slot_mut(&mut self, id: SlotId) -> &mut [f64] {
        &mut self.slots[id.0]
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StoreOptions {
    /// Seed for dense initialisation of learnable predicates.
    pub seed: u64,
}

pub fn build_store(program: &Program) -> KnowledgeStore {
    KnowledgeStore::build(program, StoreOptions::default())
}

impl KnowledgeStore {
    pub fn build(program: &Program, options: StoreOptions) -> Self {
        let mut entities = EntityIndex::default();
        for fact in &program.facts {
            for t in &fact.atom.terms {
                if let Term::Constant(c) = t {
                    entities.insert(c);
                }
            }
        }
        for rule in &program.rules {
            for atom in std::iter::once(&rule.head).chain(rule.body.iter()) {
                for t in &atom.terms {
                    if let Term::Constant(c) = t {
                        entities.insert(c);
                    }
                }
            }
        }
        let n = entities.len();

        // Group facts by predicate, preserving first-appearance order.
        let mut order: Vec<PredicateId> = Vec::new();
        let mut grouped: HashMap<PredicateId, Vec<&Fact>> = HashMap::new();
        for fact in &program.facts {
            let id = fact.atom.id();
            grouped
                .entry(id.clone())
                .or_insert_with(|| {
                    order.push(id);
                    Vec::new()
                })
                .push(fact);
        }
        for d in &program.directives {
            if let crate::frontend::Directive::Learnable { predicate, .. } = d {
                if !grouped.contains_key(predicate) {
                    grouped.insert(predicate.clone(), Vec::new());
                    order.push(predicate.clone());
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut predicates = Vec::with_capacity(order.len());
        let mut by_id = HashMap::new();
        for id in order {
            let facts = &grouped[&id];
            let learnable = program.learnable(&id);
            let keep = |w: f64| w != 0.0 || learnable.is_some();
            let dense = learnable == Some(LearnableInit::Dense);
            let entity = |t: &Term| entities.index_of(t.as_constant().expect("validated constant")).unwrap();
            let tensor = if facts.iter().any(|f| f.is_attribute()) {
                let mut cells: Vec<(usize, f64, f64)> = Vec::new();
                for f in facts.iter().filter(|f| f.is_attribute()) {
                    if !keep(f.weight) {
                        continue;
                    }
                    let Term::Number(value) = f.atom.terms[1] else { unreachable!() };
                    cells.push((entity(&f.atom.terms[0]), value, f.weight));
                }
                let (indices, values, weights) = dedup_sorted(cells);
                PredicateTensor::Attribute {
                    indices,
                    values,
                    weights,
                }
            } else {
                match id.arity {
                    0 => {
                        let declared = facts.last().map(|f| f.weight);
                        let w = match (declared, dense) {
                            (Some(w), _) => w,
                            (None, true) => rng.gen_range(-0.5..=0.5),
                            (None, false) => 0.0,
                        };
                        PredicateTensor::PropositionalScalar(w)
                    }
                    1 => {
                        let mut cells: Vec<(usize, f64, f64)> = facts
                            .iter()
                            .filter(|f| keep(f.weight))
                            .map(|f| (entity(&f.atom.terms[0]), 0.0, f.weight))
                            .collect();
                        if dense {
                            let declared = dedup_sorted(cells.clone()).0;
                            for i in 0..n {
                                if declared.binary_search(&i).is_err() {
                                    cells.push((i, 0.0, rng.gen_range(-0.5..=0.5)));
                                }
                            }
                        }
                        let (indices, _, weights) = dedup_sorted(cells);
                        PredicateTensor::UnaryVector { indices, weights }
                    }
                    _ => {
                        let mut triplets: Vec<(usize, usize, f64)> = facts
                            .iter()
                            .filter(|f| keep(f.weight))
                            .map(|f| (entity(&f.atom.terms[0]), entity(&f.atom.terms[1]), f.weight))
                            .collect();
                        if dense {
                            let declared = SparseMatrix::from_triplets(n, n, &triplets);
                            for i in 0..n {
                                for j in 0..n {
                                    if declared.position(i, j).is_none() {
                                        triplets.push((i, j, rng.gen_range(-0.5..=0.5)));
                                    }
                                }
                            }
                        }
                        PredicateTensor::BinarySparse(SparseMatrix::from_triplets(n, n, &triplets))
                    }
                }
            };
            by_id.insert(id.clone(), SlotId(predicates.len()));
            predicates.push(StoredPredicate { id, tensor, learnable });
        }

        KnowledgeStore {
            entities,
            predicates,
            by_id,
        }
    }

    pub fn n(&self) -> usize {
        self.entities.len()
    }

    pub fn slot(&self, id: &PredicateId) -> Option<SlotId> {
        self.by_id.get(id).copied()
    }

    pub fn get(&self, id: &PredicateId) -> Option<&StoredPredicate> {
        self.slot(id).map(|s| &self.predicates[s.0])
    }

    pub fn predicate(&self, slot: SlotId) -> &StoredPredicate {
        &self.predicates[slot.0]
    }

    pub fn predicates(&self) -> impl Iterator<Item = (SlotId, &StoredPredicate)> {
        self.predicates.iter().enumerate().map(|(i, p)| (SlotId(i), p))
    }

    pub fn learnable_slots(&self) -> Vec<SlotId> {
        self.predicates()
            .filter(|(_, p)| p.learnable.is_some())
            .map(|(s, _)| s)
            .collect()
    }

    pub fn one_hot(&self, name: &str) -> Result<Vec<f64>, StoreError> {
        self.entities.one_hot(name)
    }

    pub fn initial_weights(&self) -> WeightTable {
        WeightTable {
            slots: self.predicates.iter().map(|p| p.tensor.weights()).collect(),
        }
    }
}

/// Sorts by entity index; later duplicates replace earlier ones.
fn dedup_sorted(mut cells: Vec<(usize, f64, f64)>) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // stable sort keeps declaration order among equal indices
    cells.sort_by_key(|c| c.0);
    let mut indices: Vec<usize> = Vec::new();
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for (i, v, w) in cells {
        if indices.last() == Some(&i) {
            *values.last_mut().unwrap() = v;
            *weights.last_mut().unwrap() = w;
        } else {
            indices.push(i);
            values.push(v);
            weights.push(w);
        }
    }
    (indices, values, weights)
}
