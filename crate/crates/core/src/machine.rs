//! The generic numeric interface routines are written against.
//!
//! A routine is an ordinary generic function over [`Machine`]. Each call to
//! [`Machine::unary`] or [`Machine::binary`] is one atomic operation; the
//! machine numbers them in call order, so for the straight-line routines in
//! the corpus the n-th call is always static site `n`. Constants are not
//! operations and do not consume a site number.

use crate::op::{Literal, OpKind};

pub trait Machine {
    type Value: Clone;

    fn constant(&mut self, c: Literal) -> Self::Value;
    fn unary(&mut self, op: OpKind, a: &Self::Value) -> Self::Value;
    fn binary(&mut self, op: OpKind, a: &Self::Value, b: &Self::Value) -> Self::Value;

    fn add(&mut self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        self.binary(OpKind::Add, a, b)
    }
    fn sub(&mut self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        self.binary(OpKind::Sub, a, b)
    }
    fn mul(&mut self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        self.binary(OpKind::Mul, a, b)
    }
    fn div(&mut self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        self.binary(OpKind::Div, a, b)
    }
    fn pow(&mut self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        self.binary(OpKind::Pow, a, b)
    }
    fn sin(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Sin, a)
    }
    fn cos(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Cos, a)
    }
    fn tan(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Tan, a)
    }
    fn asin(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Asin, a)
    }
    fn acos(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Acos, a)
    }
    fn atan(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Atan, a)
    }
    fn exp(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Exp, a)
    }
    fn log(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Log, a)
    }
    fn sqrt(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Sqrt, a)
    }
    fn sinh(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Sinh, a)
    }
    fn cosh(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Cosh, a)
    }
    fn tanh(&mut self, a: &Self::Value) -> Self::Value {
        self.unary(OpKind::Tanh, a)
    }
}

/// A binary64 machine as a trait object; every double-precision mode
/// (plain, traced, perturbed, site enumeration) is one of these.
pub type DoubleMachine<'a> = dyn Machine<Value = f64> + 'a;

/// Records only the op kinds a routine executes, without computing anything
/// meaningful. Used to enumerate static sites.
#[derive(Debug, Default)]
pub(crate) struct ShapeRecorder {
    pub ops: Vec<OpKind>,
}

impl Machine for ShapeRecorder {
    type Value = f64;

    fn constant(&mut self, c: Literal) -> f64 {
        c.value
    }

    fn unary(&mut self, op: OpKind, _a: &f64) -> f64 {
        self.ops.push(op);
        0.0
    }

    fn binary(&mut self, op: OpKind, _a: &f64, _b: &f64) -> f64 {
        self.ops.push(op);
        0.0
    }
}
