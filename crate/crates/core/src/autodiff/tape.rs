//! Forward evaluation with a recorded tape and reverse-mode gradients.

use thiserror::Error;

use super::builtin::{inverse, sigmoid, Builtin};
use crate::store::{KnowledgeStore, PredicateTensor, SlotId, WeightTable};

/// A scalar or an entity-indexed vector. Scalars broadcast against vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Value {
    pub fn as_vector(&self, n: usize) -> Vec<f64> {
        match self {
            Value::Scalar(s) => vec![*s; n],
            Value::Vector(v) => v.clone(),
        }
    }

    /// Entry `i`, broadcasting scalars.
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Value::Scalar(s) => *s,
            Value::Vector(v) => v[i],
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Value::Scalar(_))
    }

    fn zeros_like(&self) -> Value {
        match self {
            Value::Scalar(_) => Value::Scalar(0.0),
            Value::Vector(v) => Value::Vector(vec![0.0; v.len()]),
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            Value::Scalar(s) => s.is_finite(),
            Value::Vector(v) => v.iter().all(|x| x.is_finite()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("square_root of negative value {0}")]
    NegativeSquareRoot(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Mul,
    Add,
    Min,
    Max,
    /// `a + b - a b`.
    ProbSum,
}

impl BinaryOp {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Mul => a * b,
            BinaryOp::Add => a + b,
            BinaryOp::Min => a.min(b),
            BinaryOp::Max => a.max(b),
            BinaryOp::ProbSum => a + b - a * b,
        }
    }

    /// Partial derivatives with respect to `a` and `b`.
    fn partials(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            BinaryOp::Mul => (b, a),
            BinaryOp::Add => (1.0, 1.0),
            BinaryOp::Min => {
                if a <= b {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            }
            BinaryOp::Max => {
                if a >= b {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            }
            BinaryOp::ProbSum => (1.0 - b, 1.0 - a),
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Fact { x: Var, slot: SlotId, transposed: bool },
    Binary { a: Var, b: Var, op: BinaryOp },
    Apply { x: Var, builtin: Builtin },
    Gather { x: Var, index: usize },
    Assemble { parts: Vec<(usize, Var)> },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Value,
    /// Depends on a learnable weight.
    needs_grad: bool,
}

/// Gradient of the output with respect to every learnable weight slot.
/// Frozen slots hold empty vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub slots: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(store: &KnowledgeStore, weights: &WeightTable) -> Self {
        Gradients {
            slots: store
                .predicates()
                .map(|(s, p)| {
                    if p.learnable.is_some() {
                        vec![0.0; weights.slot(s).len()]
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
        }
    }

    pub fn slot(&self, id: SlotId) -> &[f64] {
        &self.slots[id.0]
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

pub struct Tape<'a> {
    store: &'a KnowledgeStore,
    weights: &'a WeightTable,
    nodes: Vec<Node>,
}

impl<'a> Tape<'a> {
    pub fn new(store: &'a KnowledgeStore, weights: &'a WeightTable) -> Self {
        Tape {
            store,
            weights,
            nodes: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.store.n()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Value {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Value, needs_grad: bool) -> Var {
        self.nodes.push(Node { op, value, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn leaf(&mut self, value: Value) -> Var {
        self.push(Op::Leaf, value, false)
    }

    pub fn ones(&mut self) -> Var {
        let n = self.n();
        self.leaf(Value::Vector(vec![1.0; n]))
    }

    pub fn zeros(&mut self) -> Var {
        let n = self.n();
        self.leaf(Value::Vector(vec![0.0; n]))
    }

    pub fn one_hot(&mut self, index: usize) -> Var {
        let mut v = vec![0.0; self.n()];
        v[index] = 1.0;
        self.leaf(Value::Vector(v))
    }

    /// Applies the stored tensor of `slot` to `x`: a vector-matrix product for
    /// binary predicates, element-wise products for unary and attribute
    /// predicates, and the scalar weight for propositional ones.
    pub fn fact(&mut self, x: Var, slot: SlotId, transposed: bool) -> Var {
        let n = self.n();
        let pred = self.store.predicate(slot);
        let w = self.weights.slot(slot);
        let xv = &self.nodes[x.0].value;
        let value = match &pred.tensor {
            PredicateTensor::BinarySparse(m) => {
                let xs = xv.as_vector(n);
                let mut out = vec![0.0; n];
                if transposed {
                    m.vec_mul_transpose(w, &xs, &mut out);
                } else {
                    m.vec_mul(w, &xs, &mut out);
                }
                Value::Vector(out)
            }
            PredicateTensor::UnaryVector { indices, .. } => {
                let mut out = vec![0.0; n];
                for (&i, &wk) in indices.iter().zip(w) {
                    out[i] = xv.at(i) * wk;
                }
                Value::Vector(out)
            }
            PredicateTensor::Attribute { indices, values, .. } => {
                let mut out = vec![0.0; n];
                for ((&i, &vk), &wk) in indices.iter().zip(values).zip(w) {
                    out[i] = xv.at(i) * vk * wk;
                }
                Value::Vector(out)
            }
            PredicateTensor::PropositionalScalar(_) => Value::Scalar(w[0]),
        };
        let needs = pred.learnable.is_some() || self.needs(x);
        self.push(Op::Fact { x, slot, transposed }, value, needs)
    }

    pub fn binary(&mut self, a: Var, b: Var, op: BinaryOp) -> Var {
        let value = match (&self.nodes[a.0].value, &self.nodes[b.0].value) {
            (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(op.apply(*x, *y)),
            (va, vb) => {
                let n = self.store.n();
                Value::Vector((0..n).map(|i| op.apply(va.at(i), vb.at(i))).collect())
            }
        };
        let needs = self.needs(a) || self.needs(b);
        self.push(Op::Binary { a, b, op }, value, needs)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, BinaryOp::Mul)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, BinaryOp::Add)
    }

    pub fn apply(&mut self, x: Var, builtin: Builtin) -> Result<Var, EvalError> {
        let xv = &self.nodes[x.0].value;
        let value = match builtin {
            Builtin::Sum => Value::Scalar(match xv {
                Value::Scalar(s) => *s,
                Value::Vector(v) => v.iter().sum(),
            }),
            Builtin::Mean => Value::Scalar(match xv {
                Value::Scalar(s) => *s,
                Value::Vector(v) => {
                    let k = v.iter().filter(|&&e| e != 0.0).count();
                    if k == 0 {
                        0.0
                    } else {
                        v.iter().sum::<f64>() / k as f64
                    }
                }
            }),
            _ => {
                let f = |e: f64| -> Result<f64, EvalError> {
                    Ok(match builtin {
                        Builtin::Tanh => e.tanh(),
                        Builtin::Sigmoid => sigmoid(e),
                        Builtin::Inverse => inverse(e),
                        Builtin::SquareRoot => {
                            if e < 0.0 {
                                return Err(EvalError::NegativeSquareRoot(e));
                            }
                            e.sqrt()
                        }
                        Builtin::Sum | Builtin::Mean => unreachable!(),
                    })
                };
                match xv {
                    Value::Scalar(s) => Value::Scalar(f(*s)?),
                    Value::Vector(v) => Value::Vector(v.iter().map(|&e| f(e)).collect::<Result<_, _>>()?),
                }
            }
        };
        let needs = self.needs(x);
        Ok(self.push(Op::Apply { x, builtin }, value, needs))
    }

    /// Entry `index` of `x` as a scalar.
    pub fn gather(&mut self, x: Var, index: usize) -> Var {
        let value = Value::Scalar(self.nodes[x.0].value.at(index));
        let needs = self.needs(x);
        self.push(Op::Gather { x, index }, value, needs)
    }

    /// Vector whose entry `i` is the scalar `v` for each `(i, v)` part; zero elsewhere.
    pub fn assemble(&mut self, parts: Vec<(usize, Var)>) -> Var {
        let mut out = vec![0.0; self.n()];
        for &(i, v) in &parts {
            out[i] += self.nodes[v.0].value.at(0);
        }
        let needs = parts.iter().any(|&(_, v)| self.needs(v));
        self.push(Op::Assemble { parts }, Value::Vector(out), needs)
    }

    pub fn is_finite(&self, v: Var) -> bool {
        self.nodes[v.0].value.all_finite()
    }

    /// Reverse pass from `output` seeded with `seed` (same shape as the output).
    pub fn backward(&self, output: Var, seed: Value) -> Gradients {
        self.backward_many(vec![(output, seed)])
    }

    /// Reverse pass from several outputs at once; seeds of the same output add.
    pub fn backward_many(&self, seeds: Vec<(Var, Value)>) -> Gradients {
        let mut grads = Gradients::zeros(self.store, self.weights);
        let Some(last) = seeds.iter().map(|(v, _)| v.0).max() else {
            return grads;
        };
        let mut adj: Vec<Option<Value>> = vec![None; last + 1];
        for (v, seed) in seeds {
            let shape = self.nodes[v.0].value.clone();
            let delta = match seed {
                Value::Scalar(s) => vec![s],
                Value::Vector(d) => d,
            };
            accumulate(&mut adj, v, &shape, delta);
        }
        let n = self.n();
        for k in (0..=last).rev() {
            let node = &self.nodes[k];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = adj[k].take() else { continue };
            match &node.op {
                Op::Leaf => {}
                Op::Fact { x, slot, transposed } => {
                    self.fact_backward(*x, *slot, *transposed, &g, &mut grads, &mut adj);
                }
                Op::Binary { a, b, op } => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let len = if node.value.is_scalar() { 1 } else { n };
                    let mut ga = vec![0.0; len];
                    let mut gb = vec![0.0; len];
                    for i in 0..len {
                        let (pa, pb) = op.partials(va.at(i), vb.at(i));
                        ga[i] = g.at(i) * pa;
                        gb[i] = g.at(i) * pb;
                    }
                    if self.needs(*a) {
                        accumulate(&mut adj, *a, va, ga);
                    }
                    if self.needs(*b) {
                        accumulate(&mut adj, *b, vb, gb);
                    }
                }
                Op::Apply { x, builtin } => {
                    let xv = &self.nodes[x.0].value;
                    let gx: Vec<f64> = match (builtin, xv) {
                        (Builtin::Sum, Value::Vector(v)) => vec![g.at(0); v.len()],
                        (Builtin::Mean, Value::Vector(v)) => {
                            let k = v.iter().filter(|&&e| e != 0.0).count().max(1) as f64;
                            v.iter().map(|&e| if e != 0.0 { g.at(0) / k } else { 0.0 }).collect()
                        }
                        (Builtin::Sum | Builtin::Mean, Value::Scalar(_)) => vec![g.at(0)],
                        _ => {
                            let len = if xv.is_scalar() { 1 } else { n };
                            (0..len)
                                .map(|i| {
                                    let (e, y) = (xv.at(i), node.value.at(i));
                                    let d = match builtin {
                                        Builtin::Tanh => 1.0 - y * y,
                                        Builtin::Sigmoid => y * (1.0 - y),
                                        Builtin::Inverse => {
                                            if e == 0.0 {
                                                0.0
                                            } else {
                                                -1.0 / (e * e)
                                            }
                                        }
                                        Builtin::SquareRoot => {
                                            if y == 0.0 {
                                                0.0
                                            } else {
                                                0.5 / y
                                            }
                                        }
                                        Builtin::Sum | Builtin::Mean => unreachable!(),
                                    };
                                    g.at(i) * d
                                })
                                .collect()
                        }
                    };
                    accumulate(&mut adj, *x, xv, gx);
                }
                Op::Gather { x, index } => {
                    let xv = &self.nodes[x.0].value;
                    let gx = match xv {
                        Value::Scalar(_) => vec![g.at(0)],
                        Value::Vector(v) => {
                            let mut d = vec![0.0; v.len()];
                            d[*index] = g.at(0);
                            d
                        }
                    };
                    accumulate(&mut adj, *x, xv, gx);
                }
                Op::Assemble { parts } => {
                    for &(i, v) in parts {
                        if self.needs(v) {
                            let vv = &self.nodes[v.0].value;
                            accumulate(&mut adj, v, vv, vec![g.at(i)]);
                        }
                    }
                }
            }
        }
        grads
    }

    fn fact_backward(
        &self,
        x: Var,
        slot: SlotId,
        transposed: bool,
        g: &Value,
        grads: &mut Gradients,
        adj: &mut [Option<Value>],
    ) {
        let n = self.n();
        let pred = self.store.predicate(slot);
        let w = self.weights.slot(slot);
        let xv = &self.nodes[x.0].value;
        let learnable = pred.learnable.is_some();
        let want_x = self.needs(x);
        match &pred.tensor {
            PredicateTensor::BinarySparse(m) => {
                let gy = g.as_vector(n);
                let xs = xv.as_vector(n);
                if learnable {
                    let gw = &mut grads.slots[slot.0];
                    if transposed {
                        m.vec_mul_transpose_value_grad(&xs, &gy, gw);
                    } else {
                        m.vec_mul_value_grad(&xs, &gy, gw);
                    }
                }
                if want_x {
                    let mut gx = vec![0.0; n];
                    if transposed {
                        m.vec_mul(w, &gy, &mut gx);
                    } else {
                        m.vec_mul_transpose(w, &gy, &mut gx);
                    }
                    accumulate(adj, x, xv, gx);
                }
            }
            PredicateTensor::UnaryVector { indices, .. } => {
                let mut gx = vec![0.0; n];
                for (k, &i) in indices.iter().enumerate() {
                    if learnable {
                        grads.slots[slot.0][k] += g.at(i) * xv.at(i);
                    }
                    gx[i] = g.at(i) * w[k];
                }
                if want_x {
                    accumulate(adj, x, xv, gx);
                }
            }
            PredicateTensor::Attribute { indices, values, .. } => {
                let mut gx = vec![0.0; n];
                for (k, &i) in indices.iter().enumerate() {
                    if learnable {
                        grads.slots[slot.0][k] += g.at(i) * xv.at(i) * values[k];
                    }
                    gx[i] = g.at(i) * values[k] * w[k];
                }
                if want_x {
                    accumulate(adj, x, xv, gx);
                }
            }
            PredicateTensor::PropositionalScalar(_) => {
                if learnable {
                    grads.slots[slot.0][0] += g.at(0);
                }
            }
        }
    }
}

/// Adds `delta` (entry-wise, of operand-or-broadcast length) into the
/// adjoint of `v`, summing when `v` is a scalar.
fn accumulate(adj: &mut [Option<Value>], v: Var, shape: &Value, delta: Vec<f64>) {
    let slot = adj[v.0].get_or_insert_with(|| shape.zeros_like());
    match slot {
        Value::Scalar(s) => *s += delta.iter().sum::<f64>(),
        Value::Vector(acc) => {
            if delta.len() == 1 {
                for a in acc.iter_mut() {
                    *a += delta[0];
                }
            } else {
                for (a, d) in acc.iter_mut().zip(delta) {
                    *a += d;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, PredicateId};
    use crate::store::build_store;

    #[test]
    fn linear_weight_gradient() {
        let store = build_store(&parse_program("#learnable(w/0). w.").unwrap());
        let weights = store.initial_weights();
        let mut t = Tape::new(&store, &weights);
        let x = t.leaf(Value::Scalar(1.0));
        let slot = store.slot(&PredicateId::new("w", 0)).unwrap();
        let w = t.fact(x, slot, false);
        let y = t.mul(w, x);
        assert_eq!(t.value(y), &Value::Scalar(1.0));
        let g = t.backward(y, Value::Scalar(1.0));
        assert_eq!(g.slot(slot), &[1.0]);
    }

    #[test]
    fn tanh_at_zero_passes_gradient() {
        let store = build_store(&parse_program("#learnable(w/0). 0::w.").unwrap());
        let weights = store.initial_weights();
        let slot = store.slot(&PredicateId::new("w", 0)).unwrap();
        let mut t = Tape::new(&store, &weights);
        let x = t.leaf(Value::Scalar(0.0));
        let w = t.fact(x, slot, false);
        let y = t.apply(w, Builtin::Tanh).unwrap();
        assert_eq!(t.value(y), &Value::Scalar(0.0));
        assert_eq!(t.backward(y, Value::Scalar(1.0)).slot(slot), &[1.0]);
    }

    #[test]
    fn builtin_values() {
        let store = build_store(&parse_program("p(a, b). p(b, c).").unwrap());
        let weights = store.initial_weights();
        let mut t = Tape::new(&store, &weights);
        let x = t.leaf(Value::Vector(vec![0.0, 30.0, 40.0]));
        let m = t.apply(x, Builtin::Mean).unwrap();
        assert_eq!(t.value(m), &Value::Scalar(35.0));
        let s = t.apply(x, Builtin::Sum).unwrap();
        assert_eq!(t.value(s), &Value::Scalar(70.0));
        let v = t.leaf(Value::Vector(vec![2.0, 0.0, 4.0]));
        let inv = t.apply(v, Builtin::Inverse).unwrap();
        assert_eq!(t.value(inv), &Value::Vector(vec![0.5, 0.0, 0.25]));
        let r = t.apply(v, Builtin::SquareRoot).unwrap();
        assert_eq!(t.value(r), &Value::Vector(vec![2f64.sqrt(), 0.0, 2.0]));
        let neg = t.leaf(Value::Vector(vec![-1.0, 0.0, 0.0]));
        assert_eq!(t.apply(neg, Builtin::SquareRoot), Err(EvalError::NegativeSquareRoot(-1.0)));
        let z = t.leaf(Value::Vector(vec![0.0; 3]));
        let th = t.apply(z, Builtin::Tanh).unwrap();
        assert_eq!(t.value(th), &Value::Vector(vec![0.0; 3]));
    }

    #[test]
    fn sparse_products_and_gradients() {
        let store = build_store(&parse_program("#learnable(p/2). p(a,b). 2::p(a,c). 0.5::p(b,c).").unwrap());
        let weights = store.initial_weights();
        let slot = store.slot(&PredicateId::new("p", 2)).unwrap();
        let mut t = Tape::new(&store, &weights);
        let a = t.one_hot(0);
        let y = t.fact(a, slot, false);
        assert_eq!(t.value(y), &Value::Vector(vec![0.0, 1.0, 2.0]));
        let c = t.one_hot(2);
        let yt = t.fact(c, slot, true);
        assert_eq!(t.value(yt), &Value::Vector(vec![2.0, 0.5, 0.0]));
        // d/dW of sum(one_hot(a) P) is 1 on row a.
        let s = t.apply(y, Builtin::Sum).unwrap();
        assert_eq!(t.backward(s, Value::Scalar(1.0)).slot(slot), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn frozen_program_has_no_gradient() {
        let store = build_store(&parse_program("p(a,b).").unwrap());
        let weights = store.initial_weights();
        let slot = store.slot(&PredicateId::new("p", 2)).unwrap();
        let mut t = Tape::new(&store, &weights);
        let a = t.one_hot(0);
        let y = t.fact(a, slot, false);
        let g = t.backward(y, Value::Vector(vec![1.0, 1.0]));
        assert!(g.slot(slot).is_empty());
    }
}
