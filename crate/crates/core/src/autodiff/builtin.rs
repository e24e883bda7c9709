//! Numeric builtins usable as function predicates.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Tanh,
    Sigmoid,
    SquareRoot,
    /// Element-wise reciprocal with `inverse(0) = 0`.
    Inverse,
    /// Mean over the non-zero entries; a reduction.
    Mean,
    /// Sum of all entries; a reduction.
    Sum,
}

impl Builtin {
    pub const ALL: [Builtin; 6] = [
        Builtin::Tanh,
        Builtin::Sigmoid,
        Builtin::SquareRoot,
        Builtin::Inverse,
        Builtin::Mean,
        Builtin::Sum,
    ];

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Tanh => "tanh",
            Builtin::Sigmoid => "sigmoid",
            Builtin::SquareRoot => "square_root",
            Builtin::Inverse => "inverse",
            Builtin::Mean => "mean",
            Builtin::Sum => "sum",
        }
    }

    pub fn is_reduction(self) -> bool {
        matches!(self, Builtin::Mean | Builtin::Sum)
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn inverse(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        1.0 / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for b in Builtin::ALL {
            assert_eq!(Builtin::from_name(b.name()), Some(b));
        }
        assert_eq!(Builtin::from_name("relu"), None);
    }

    #[test]
    fn scalar_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
        assert_eq!(inverse(2.0), 0.5);
        assert_eq!(inverse(0.0), 0.0);
    }
}
