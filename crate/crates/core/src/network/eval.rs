//! Evaluation of layers onto a tape.

use std::collections::HashMap;

use super::build::{Direction, Layer, LayerId, Network, RuleLayer};
use crate::autodiff::{EvalError, Tape, Value, Var};
use crate::compiler::{DagEdgeKind, RuleDag};
use crate::frontend::Term;
use crate::store::{KnowledgeStore, WeightTable};

/// Records layer evaluations on a tape, sharing repeated sub-computations.
pub struct Evaluator<'a> {
    net: &'a Network,
    store: &'a KnowledgeStore,
    tape: Tape<'a>,
    memo: HashMap<(LayerId, Vec<Var>), Var>,
    one_hots: HashMap<usize, Var>,
    ones: Option<Var>,
    zeros: Option<Var>,
}

impl<'a> Evaluator<'a> {
    pub fn new(net: &'a Network, store: &'a KnowledgeStore, weights: &'a WeightTable) -> Self {
        Evaluator {
            net,
            store,
            tape: Tape::new(store, weights),
            memo: HashMap::new(),
            one_hots: HashMap::new(),
            ones: None,
            zeros: None,
        }
    }

    pub fn tape(&self) -> &Tape<'a> {
        &self.tape
    }

    pub fn tape_mut(&mut self) -> &mut Tape<'a> {
        &mut self.tape
    }

    pub fn value(&self, v: Var) -> &Value {
        self.tape.value(v)
    }

    pub fn one_hot(&mut self, index: usize) -> Var {
        if let Some(&v) = self.one_hots.get(&index) {
            return v;
        }
        let v = self.tape.one_hot(index);
        self.one_hots.insert(index, v);
        v
    }

    fn ones(&mut self) -> Var {
        match self.ones {
            Some(v) => v,
            None => {
                let v = self.tape.ones();
                self.ones = Some(v);
                v
            }
        }
    }

    fn zeros(&mut self) -> Var {
        match self.zeros {
            Some(v) => v,
            None => {
                let v = self.tape.zeros();
                self.zeros = Some(v);
                v
            }
        }
    }

    fn entity(&self, term: &Term) -> usize {
        let name = term.as_constant().expect("constant term");
        self.store.entities.index_of(name).expect("rule constants are indexed")
    }

    fn and(&mut self, a: Var, b: Var) -> Var {
        let op = self.net.combiners.and_op();
        self.tape.binary(a, b, op)
    }

    /// Evaluates `layer` on its inputs: one vector per head position other
    /// than the output position (a single vector for unary predicates).
    pub fn eval(&mut self, layer: LayerId, inputs: &[Var]) -> Result<Var, EvalError> {
        let key = (layer, inputs.to_vec());
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let net = self.net;
        let out = match net.layer(layer) {
            Layer::Fact { slot, direction, .. } => {
                self.tape.fact(inputs[0], *slot, *direction == Direction::Transposed)
            }
            Layer::Function { builtin, .. } => self.tape.apply(inputs[0], *builtin)?,
            Layer::Empty { .. } => self.zeros(),
            Layer::Literal { children, .. } => {
                let mut acc: Option<Var> = None;
                for &c in children {
                    let v = self.eval(c, inputs)?;
                    acc = Some(match acc {
                        None => v,
                        Some(a) => self.tape.binary(a, v, net.combiners.or_op()),
                    });
                }
                match acc {
                    Some(v) => v,
                    None => self.zeros(),
                }
            }
            Layer::Rule(rule) => self.eval_rule(rule, inputs)?,
        };
        self.memo.insert(key, out);
        Ok(out)
    }

    fn nonzero(&self, v: Var) -> Vec<usize> {
        match self.tape.value(v) {
            Value::Scalar(s) if *s != 0.0 => (0..self.store.n()).collect(),
            Value::Scalar(_) => Vec::new(),
            Value::Vector(x) => (0..x.len()).filter(|&i| x[i] != 0.0).collect(),
        }
    }

    /// `out_i = v_i * f(one_hot(i))_i` over the non-zero entries of `v`.
    fn per_entity<F>(&mut self, v: Var, mut f: F) -> Result<Var, EvalError>
    where
        F: FnMut(&mut Self, Var) -> Result<Var, EvalError>,
    {
        let mut parts = Vec::new();
        for i in self.nonzero(v) {
            let e = self.one_hot(i);
            let r = f(self, e)?;
            let ri = self.tape.gather(r, i);
            let vi = self.tape.gather(v, i);
            parts.push((i, self.tape.mul(ri, vi)));
        }
        Ok(self.tape.assemble(parts))
    }

    fn eval_rule(&mut self, rl: &'a RuleLayer, inputs: &[Var]) -> Result<Var, EvalError> {
        let plan = &rl.compiled.plan;
        let mut result = if plan.is_unary() && rl.rule.head.arity() == 1 {
            let x = inputs[0];
            if rl.compiled.is_local() {
                self.eval_dag(rl, &rl.compiled.dags[0], x)?
            } else {
                self.per_entity(x, |ev, e| ev.eval_dag(rl, &rl.compiled.dags[0], e))?
            }
        } else {
            let dest_index = match rl.direction {
                Direction::Forward => rl.rule.head.arity() - 1,
                Direction::Transposed => 0,
            };
            let positions: Vec<usize> = (0..rl.rule.head.arity()).filter(|&k| k != dest_index).collect();
            let mut acc: Option<Var> = None;
            for dag in &rl.compiled.dags {
                let mut x: Option<Var> = None;
                for (slot, &k) in positions.iter().enumerate() {
                    if plan.graph.node(&rl.rule.head.terms[k]) == Some(dag.source) {
                        x = Some(match x {
                            None => inputs[slot],
                            Some(prev) => self.and(prev, inputs[slot]),
                        });
                    }
                }
                let x = x.expect("every source has an input");
                let d = if dag.source == dag.destination && !rl.compiled.is_local() {
                    self.per_entity(x, |ev, e| ev.eval_dag(rl, dag, e))?
                } else {
                    self.eval_dag(rl, dag, x)?
                };
                acc = Some(match acc {
                    None => d,
                    Some(a) => self.and(a, d),
                });
            }
            acc.expect("at least one input")
        };
        for &g in &plan.disconnected_grounds {
            let s = self.eval_ground(rl, g)?;
            result = self.tape.mul(result, s);
        }
        Ok(result)
    }

    fn eval_ground(&mut self, rl: &'a RuleLayer, index: usize) -> Result<Var, EvalError> {
        let lit = &rl.rule.body[index];
        let layer = rl.body_layer(index, Direction::Forward);
        match lit.terms.as_slice() {
            [] => {
                let ones = self.ones();
                self.eval(layer, &[ones])
            }
            [c] => {
                let i = self.entity(c);
                let e = self.one_hot(i);
                let r = self.eval(layer, &[e])?;
                Ok(self.tape.gather(r, i))
            }
            [a, b] => {
                let (i, j) = (self.entity(a), self.entity(b));
                let e = self.one_hot(i);
                let r = self.eval(layer, &[e])?;
                Ok(self.tape.gather(r, j))
            }
            _ => unreachable!("body literals have arity at most two"),
        }
    }

    /// Applies the loop literals of `node` to `v` in body order.
    fn apply_loops(&mut self, rl: &'a RuleLayer, node: usize, mut v: Var) -> Result<Var, EvalError> {
        for l in rl.compiled.plan.graph.loops_at(node) {
            let layer = rl.body_layer(l, Direction::Forward);
            v = if rl.rule.body[l].arity() == 2 {
                // p(X, X): the diagonal of the relation
                self.per_entity(v, |ev, e| ev.eval(layer, &[e]))?
            } else {
                self.eval(layer, &[v])?
            };
        }
        Ok(v)
    }

    fn mask(&mut self, rl: &RuleLayer, node: usize, v: Var) -> Var {
        match &rl.compiled.plan.graph.nodes[node] {
            Term::Constant(_) => {
                let i = self.entity(&rl.compiled.plan.graph.nodes[node]);
                let e = self.one_hot(i);
                self.tape.mul(v, e)
            }
            _ => v,
        }
    }

    fn incoming(&mut self, rl: &'a RuleLayer, dag: &RuleDag, node: usize, values: &HashMap<usize, Var>) -> Result<Option<Var>, EvalError> {
        let mut acc: Option<Var> = None;
        for e in dag.incoming(node) {
            let v = match e.kind {
                DagEdgeKind::Literal { index, transposed } => {
                    let d = if transposed { Direction::Transposed } else { Direction::Forward };
                    let layer = rl.body_layer(index, d);
                    self.eval(layer, &[values[&e.from]])?
                }
                DagEdgeKind::FreeAny => self.ones(),
            };
            acc = Some(match acc {
                None => v,
                Some(a) => self.and(a, v),
            });
        }
        Ok(acc)
    }

    fn eval_dag(&mut self, rl: &'a RuleLayer, dag: &RuleDag, x: Var) -> Result<Var, EvalError> {
        let mut values: HashMap<usize, Var> = HashMap::new();
        for &node in &dag.order {
            if node == dag.destination && node != dag.source {
                continue;
            }
            let base = if node == dag.source {
                x
            } else {
                match self.incoming(rl, dag, node, &values)? {
                    Some(v) => v,
                    None => self.ones(),
                }
            };
            let masked = self.mask(rl, node, base);
            let v = self.apply_loops(rl, node, masked)?;
            values.insert(node, v);
        }
        let any_scalar = match &dag.any {
            None => None,
            Some(any) => {
                let mut s: Option<Var> = None;
                for t in &any.terms {
                    let sum = self.tape.apply(values[t], crate::autodiff::Builtin::Sum)?;
                    s = Some(match s {
                        None => sum,
                        Some(p) => self.tape.mul(p, sum),
                    });
                }
                s
            }
        };
        let dest = dag.destination;
        if dest == dag.source {
            let v = values[&dest];
            return Ok(match any_scalar {
                Some(s) => self.tape.mul(v, s),
                None => v,
            });
        }
        let base = self.incoming(rl, dag, dest, &values)?;
        Ok(match any_scalar {
            Some(s) => {
                let ones = self.ones();
                let masked = self.mask(rl, dest, ones);
                let looped = self.apply_loops(rl, dest, masked)?;
                let any_part = self.tape.mul(looped, s);
                match base {
                    Some(b) => self.and(b, any_part),
                    None => any_part,
                }
            }
            None => {
                let b = base.expect("destination has incoming edges");
                let masked = self.mask(rl, dest, b);
                self.apply_loops(rl, dest, masked)?
            }
        })
    }
}
