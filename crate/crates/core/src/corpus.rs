//! The benchmark routines.
//!
//! Each routine is written once as a generic function over [`Machine`] and
//! instantiated for binary64 (plain, traced, perturbed) and for the
//! high-precision oracle. Routines are straight-line: no data-dependent
//! branches, so op-call order gives stable site numbers.

use std::fmt;

use astro_float::BigFloat;

use crate::error::{Error, Result};
use crate::lit;
use crate::machine::{DoubleMachine, Machine};
use crate::oracle::HighPrecision;

/// A closed interval of admissible input values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const REALS: Interval = Interval::new(-f64::MAX, f64::MAX);
    /// `(0, MAX]`, represented from the smallest positive subnormal.
    pub const POSITIVE: Interval = Interval::new(f64::from_bits(1), f64::MAX);

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Intersection, or `None` when empty.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

pub type DoubleRoutine = fn(&mut DoubleMachine<'static>, &[f64]) -> f64;
pub type HighRoutine = fn(&mut HighPrecision, &[BigFloat]) -> BigFloat;

/// The instantiations of one generic routine.
#[derive(Clone, Copy)]
pub struct Evaluator {
    pub double: DoubleRoutine,
    pub high: HighRoutine,
}

macro_rules! evaluator {
    ($routine:ident) => {
        Evaluator {
            double: $routine::<DoubleMachine<'static>>,
            high: $routine::<HighPrecision>,
        }
    };
}

pub struct CorpusFunction {
    pub id: &'static str,
    pub formula: &'static str,
    pub arity: usize,
    /// One interval per input.
    pub domain: &'static [Interval],
    pub evaluator: Evaluator,
}

impl fmt::Debug for CorpusFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorpusFunction")
            .field("id", &self.id)
            .field("formula", &self.formula)
            .field("arity", &self.arity)
            .field("domain", &self.domain)
            .finish()
    }
}

impl CorpusFunction {
    pub fn check_arity(&self, got: usize) -> Result<()> {
        if got != self.arity {
            return Err(Error::Arity {
                function: self.id.to_string(),
                expected: self.arity,
                got,
            });
        }
        Ok(())
    }

    pub fn in_domain(&self, inputs: &[f64]) -> bool {
        inputs.len() == self.arity && self.domain.iter().zip(inputs).all(|(d, &x)| d.contains(x))
    }
}

/// An input box expected to contain error-inducing inputs, with the oracle
/// relative error a grid scan of the box is expected to exceed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessRegion {
    pub bounds: &'static [Interval],
    pub error_scale: f64,
}

#[derive(Debug)]
pub struct CorpusEntry {
    pub function: CorpusFunction,
    /// `(site index, description)` of known error-prone operations.
    pub known_bug_sites: &'static [(usize, &'static str)],
    pub known_witness_regions: &'static [WitnessRegion],
}

fn sin_minus_constant<M: Machine + ?Sized>(m: &mut M, x: &[M::Value]) -> M::Value {
    let s = m.sin(&x[0]);
    let c = m.constant(lit!(0.4));
    m.sub(&s, &c)
}

fn one_minus_cos_over_square<M: Machine + ?Sized>(m: &mut M, x: &[M::Value]) -> M::Value {
    let x = &x[0];
    let c = m.cos(x);
    let one = m.constant(lit!(1.0));
    let num = m.sub(&one, &c);
    let den = m.mul(x, x);
    m.div(&num, &den)
}

fn expm1_minus_x<M: Machine + ?Sized>(m: &mut M, x: &[M::Value]) -> M::Value {
    let x = &x[0];
    let e = m.exp(x);
    let one = m.constant(lit!(1.0));
    let t = m.sub(&e, &one);
    m.sub(&t, x)
}

fn log_over_x_minus_one<M: Machine + ?Sized>(m: &mut M, x: &[M::Value]) -> M::Value {
    let x = &x[0];
    let l = m.log(x);
    let one = m.constant(lit!(1.0));
    let d = m.sub(x, &one);
    m.div(&l, &d)
}

fn newton_cubic<M: Machine + ?Sized>(m: &mut M, x: &[M::Value]) -> M::Value {
    let x = &x[0];
    let sq = m.mul(x, x);
    let cube = m.mul(&sq, x);
    let two = m.constant(lit!(2.0));
    let twice = m.mul(&two, x);
    let t = m.sub(&cube, &twice);
    let five = m.constant(lit!(5.0));
    m.sub(&t, &five)
}

fn sum2<M: Machine + ?Sized>(m: &mut M, v: &[M::Value]) -> M::Value {
    m.add(&v[0], &v[1])
}

fn difference_over_sum<M: Machine + ?Sized>(m: &mut M, v: &[M::Value]) -> M::Value {
    let num = m.sub(&v[0], &v[1]);
    let den = m.add(&v[0], &v[1]);
    m.div(&num, &den)
}

fn spherical_bessel_j1<M: Machine + ?Sized>(m: &mut M, x: &[M::Value]) -> M::Value {
    let x = &x[0];
    let s = m.sin(x);
    let sq = m.mul(x, x);
    let a = m.div(&s, &sq);
    let c = m.cos(x);
    let b = m.div(&c, x);
    m.sub(&a, &b)
}

const SMALL_POSITIVE: Interval = Interval::new(f64::from_bits(1), 1e6);

static REGISTRY: [CorpusEntry; 8] = [
    CorpusEntry {
        function: CorpusFunction {
            id: "f1",
            formula: "sin(x) - 0.4",
            arity: 1,
            domain: &[Interval::REALS],
            evaluator: evaluator!(sin_minus_constant),
        },
        known_bug_sites: &[(1, "sin(x) - 0.4 cancels where sin(x) = 0.4")],
        known_witness_regions: &[
            WitnessRegion {
                bounds: &[Interval::new(0.41151684606744, 0.41151684606754)],
                error_scale: 1e-3,
            },
            WitnessRegion {
                bounds: &[Interval::new(2.73007580752227, 2.73007580752235)],
                error_scale: 1e-3,
            },
        ],
    },
    CorpusEntry {
        function: CorpusFunction {
            id: "f2",
            formula: "(1 - cos(x)) / x^2",
            arity: 1,
            domain: &[SMALL_POSITIVE],
            evaluator: evaluator!(one_minus_cos_over_square),
        },
        known_bug_sites: &[(1, "1 - cos(x) cancels as x -> 0")],
        known_witness_regions: &[
            WitnessRegion {
                bounds: &[Interval::new(1e-8, 3e-7)],
                error_scale: 1e-3,
            },
            // just below 2pi, not an approximation of it
            #[allow(clippy::approx_constant)]
            WitnessRegion {
                bounds: &[Interval::new(6.283185, 6.2831856)],
                error_scale: 1e-3,
            },
        ],
    },
    CorpusEntry {
        function: CorpusFunction {
            id: "f3",
            formula: "exp(x) - 1 - x",
            arity: 1,
            domain: &[Interval::REALS],
            evaluator: evaluator!(expm1_minus_x),
        },
        known_bug_sites: &[
            (1, "exp(x) - 1 cancels as x -> 0"),
            (2, "(exp(x) - 1) - x cancels as x -> 0"),
        ],
        known_witness_regions: &[
            WitnessRegion {
                bounds: &[Interval::new(1e-9, 4e-7)],
                error_scale: 1e-3,
            },
            WitnessRegion {
                bounds: &[Interval::new(-2.9e-7, -1e-9)],
                error_scale: 1e-3,
            },
        ],
    },
    CorpusEntry {
        function: CorpusFunction {
            id: "f4",
            formula: "log(x) / (x - 1)",
            arity: 1,
            domain: &[Interval::POSITIVE],
            evaluator: evaluator!(log_over_x_minus_one),
        },
        known_bug_sites: &[
            (0, "log(x) -> 0 as x -> 1"),
            (1, "x - 1 cancels as x -> 1"),
        ],
        known_witness_regions: &[],
    },
    CorpusEntry {
        function: CorpusFunction {
            id: "f5",
            formula: "x^3 - 2x - 5",
            arity: 1,
            domain: &[Interval::REALS],
            evaluator: evaluator!(newton_cubic),
        },
        known_bug_sites: &[(4, "x^3 - 2x - 5 cancels at its real root 2.0945514815...")],
        known_witness_regions: &[
            WitnessRegion {
                bounds: &[Interval::new(2.09455148154223, 2.09455148154242)],
                error_scale: 1e-3,
            },
        ],
    },
    CorpusEntry {
        function: CorpusFunction {
            id: "f6",
            formula: "x + y",
            arity: 2,
            domain: &[Interval::REALS, Interval::REALS],
            evaluator: evaluator!(sum2),
        },
        known_bug_sites: &[(0, "x + y cancels where y = -x")],
        known_witness_regions: &[],
    },
    CorpusEntry {
        function: CorpusFunction {
            id: "f7",
            formula: "(x - y) / (x + y)",
            arity: 2,
            domain: &[Interval::REALS, Interval::REALS],
            evaluator: evaluator!(difference_over_sum),
        },
        known_bug_sites: &[(0, "x - y cancels where y = x"), (1, "x + y cancels where y = -x")],
        known_witness_regions: &[],
    },
    CorpusEntry {
        function: CorpusFunction {
            id: "f8",
            formula: "sin(x)/x^2 - cos(x)/x",
            arity: 1,
            domain: &[SMALL_POSITIVE],
            evaluator: evaluator!(spherical_bessel_j1),
        },
        known_bug_sites: &[(5, "the two terms cancel as x -> 0 and where tan(x) = x")],
        known_witness_regions: &[
            WitnessRegion {
                bounds: &[Interval::new(1e-9, 7.8e-7)],
                error_scale: 1e-3,
            },
            WitnessRegion {
                bounds: &[Interval::new(4.49340945790901, 4.49340945790909)],
                error_scale: 1e-3,
            },
        ],
    },
];

pub fn registry() -> &'static [CorpusEntry] {
    &REGISTRY
}

pub fn lookup(id: &str) -> Result<&'static CorpusEntry> {
    REGISTRY
        .iter()
        .find(|e| e.function.id == id)
        .ok_or_else(|| Error::UnknownFunction(id.to_string()))
}
