//! Atomic floating-point operations and literal constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The closed set of atomic operations a corpus routine may execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Pow,
}

impl OpKind {
    pub const ALL: [OpKind; 17] = [
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::Div,
        OpKind::Sin,
        OpKind::Cos,
        OpKind::Tan,
        OpKind::Asin,
        OpKind::Acos,
        OpKind::Atan,
        OpKind::Exp,
        OpKind::Log,
        OpKind::Sqrt,
        OpKind::Sinh,
        OpKind::Cosh,
        OpKind::Tanh,
        OpKind::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Div => "div",
            OpKind::Sin => "sin",
            OpKind::Cos => "cos",
            OpKind::Tan => "tan",
            OpKind::Asin => "asin",
            OpKind::Acos => "acos",
            OpKind::Atan => "atan",
            OpKind::Exp => "exp",
            OpKind::Log => "log",
            OpKind::Sqrt => "sqrt",
            OpKind::Sinh => "sinh",
            OpKind::Cosh => "cosh",
            OpKind::Tanh => "tanh",
            OpKind::Pow => "pow",
        }
    }

    /// Number of operands: 2 for the arithmetic ops and `pow`, 1 otherwise.
    pub fn arity(self) -> usize {
        match self {
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div | OpKind::Pow => 2,
            _ => 1,
        }
    }

    pub fn is_unary(self) -> bool {
        self.arity() == 1
    }

    /// Evaluates the operation in binary64, round-to-nearest.
    ///
    /// Panics if `operands.len()` differs from [`OpKind::arity`].
    pub fn apply(self, operands: &[f64]) -> f64 {
        assert_eq!(operands.len(), self.arity(), "{self} takes {} operands", self.arity());
        let a = operands[0];
        match self {
            OpKind::Add => a + operands[1],
            OpKind::Sub => a - operands[1],
            OpKind::Mul => a * operands[1],
            OpKind::Div => a / operands[1],
            OpKind::Pow => a.powf(operands[1]),
            OpKind::Sin => a.sin(),
            OpKind::Cos => a.cos(),
            OpKind::Tan => a.tan(),
            OpKind::Asin => a.asin(),
            OpKind::Acos => a.acos(),
            OpKind::Atan => a.atan(),
            OpKind::Exp => a.exp(),
            OpKind::Log => a.ln(),
            OpKind::Sqrt => a.sqrt(),
            OpKind::Sinh => a.sinh(),
            OpKind::Cosh => a.cosh(),
            OpKind::Tanh => a.tanh(),
        }
    }

    /// True when the operands lie outside the operation's mathematical domain.
    ///
    /// NaN and infinite operands are not violations; they propagate.
    pub fn violates_domain(self, operands: &[f64]) -> bool {
        let a = operands[0];
        match self {
            OpKind::Div => operands[1] == 0.0,
            OpKind::Log => a <= 0.0,
            OpKind::Sqrt => a < 0.0,
            OpKind::Asin | OpKind::Acos => a.abs() > 1.0,
            OpKind::Pow => {
                let b = operands[1];
                (a < 0.0 && b.is_finite() && b.fract() != 0.0) || (a == 0.0 && b < 0.0)
            }
            _ => false,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpKind::ALL
            .iter()
            .copied()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::UnknownOp(s.to_string()))
    }
}

/// A numeric constant that appears in a routine's source.
///
/// The double value is what binary64 evaluation sees; the decimal text is
/// what the high-precision oracle parses, so a constant such as `0.4`
/// contributes its own representation error to the measured error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Literal {
    pub value: f64,
    pub text: &'static str,
}

impl Literal {
    pub const fn new(value: f64, text: &'static str) -> Self {
        Literal { value, text }
    }
}

/// Builds a [`Literal`] from a float literal, keeping its source text.
#[macro_export]
macro_rules! lit {
    ($x:literal) => {
        $crate::op::Literal::new($x, stringify!($x))
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for op in OpKind::ALL {
            assert_eq!(op.name().parse::<OpKind>().unwrap(), op);
        }
        assert!("frobnicate".parse::<OpKind>().is_err());
    }

    #[test]
    fn arity_split() {
        let binary: Vec<_> = OpKind::ALL.iter().filter(|op| op.arity() == 2).collect();
        assert_eq!(binary.len(), 5);
    }

    #[test]
    fn domain_checks() {
        assert!(OpKind::Log.violates_domain(&[0.0]));
        assert!(OpKind::Log.violates_domain(&[-1.0]));
        assert!(!OpKind::Log.violates_domain(&[f64::NAN]));
        assert!(OpKind::Div.violates_domain(&[1.0, 0.0]));
        assert!(OpKind::Div.violates_domain(&[0.0, -0.0]));
        assert!(!OpKind::Sub.violates_domain(&[f64::INFINITY, f64::INFINITY]));
        assert!(OpKind::Asin.violates_domain(&[1.5]));
        assert!(!OpKind::Sqrt.violates_domain(&[-0.0]));
        assert!(OpKind::Pow.violates_domain(&[-2.0, 0.5]));
        assert!(!OpKind::Pow.violates_domain(&[-2.0, 3.0]));
    }

    #[test]
    fn literal_keeps_text() {
        let c = lit!(0.4);
        assert_eq!(c.text, "0.4");
        assert_eq!(c.value, 0.4);
    }
}
