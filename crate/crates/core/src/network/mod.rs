//! Layer networks compiled from programs, and their evaluation.

mod build;
pub mod dot;
mod eval;

pub use build::{all_targets, build_network, recursive_predicates, Direction, Layer, LayerId, Network, NetworkError, RuleLayer};
pub use eval::Evaluator;

use crate::autodiff::BinaryOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AndCombiner {
    Product,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrCombiner {
    Sum,
    Max,
    /// `a + b - a b`.
    NoisyOr,
}

/// Element-wise functions used for logical AND and OR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Combiners {
    pub and: AndCombiner,
    pub or: OrCombiner,
}

impl Default for Combiners {
    fn default() -> Self {
        Combiners {
            and: AndCombiner::Product,
            or: OrCombiner::Sum,
        }
    }
}

impl Combiners {
    pub fn from_names(and: &str, or: &str) -> Result<Self, String> {
        let and = match and {
            "product" => AndCombiner::Product,
            "min" => AndCombiner::Min,
            other => return Err(format!("unknown AND combiner `{other}` (expected product or min)")),
        };
        let or = match or {
            "sum" => OrCombiner::Sum,
            "max" => OrCombiner::Max,
            "noisy_or" => OrCombiner::NoisyOr,
            other => return Err(format!("unknown OR combiner `{other}` (expected sum, max or noisy_or)")),
        };
        Ok(Combiners { and, or })
    }

    pub(crate) fn and_op(self) -> BinaryOp {
        match self.and {
            AndCombiner::Product => BinaryOp::Mul,
            AndCombiner::Min => BinaryOp::Min,
        }
    }

    pub(crate) fn or_op(self) -> BinaryOp {
        match self.or {
            OrCombiner::Sum => BinaryOp::Add,
            OrCombiner::Max => BinaryOp::Max,
            OrCombiner::NoisyOr => BinaryOp::ProbSum,
        }
    }
}
