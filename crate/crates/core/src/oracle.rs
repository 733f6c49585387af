//! Arbitrary-precision re-evaluation of corpus routines.
//!
//! The routine's single generic definition is instantiated over
//! [`HighPrecision`], a [`Machine`] whose values are `astro_float::BigFloat`
//! at a fixed working precision with round-to-nearest-even. Inputs are the
//! exact binary64 witnesses; literal constants are parsed from their
//! decimal source text.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::corpus::CorpusFunction;
use crate::error::{Error, Result};
use crate::machine::Machine;
use crate::op::{Literal, OpKind};
use crate::trace::{evaluate_plain, SiteId};

pub const DEFAULT_PRECISION_BITS: usize = 256;
pub const DEFAULT_MAX_PRECISION_BITS: usize = 8192;
/// Bits two successive precisions must agree to before a result is accepted.
const AGREEMENT_BITS: i32 = 80;
const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OracleConfig {
    /// Working precision of the first evaluation.
    pub precision_bits: usize,
    /// Ceiling for precision doubling.
    pub max_precision_bits: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            precision_bits: DEFAULT_PRECISION_BITS,
            max_precision_bits: DEFAULT_MAX_PRECISION_BITS,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.precision_bits < 128 {
            return Err(Error::InvalidConfig(format!(
                "precision_bits must be at least 128, got {}",
                self.precision_bits
            )));
        }
        if self.max_precision_bits < self.precision_bits {
            return Err(Error::InvalidConfig("max_precision_bits is below precision_bits".into()));
        }
        Ok(())
    }
}

pub struct HighPrecision {
    function: &'static str,
    precision: usize,
    consts: Consts,
    next: usize,
    fault: Option<(SiteId, OpKind)>,
}

impl HighPrecision {
    pub fn new(function: &'static str, precision: usize) -> Self {
        HighPrecision {
            function,
            precision,
            consts: Consts::new().expect("allocating the constant cache"),
            next: 0,
            fault: None,
        }
    }

    pub fn lift(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.precision)
    }

    fn violates_domain(op: OpKind, a: &BigFloat, b: Option<&BigFloat>) -> bool {
        let positive = |v: &BigFloat| v.is_positive() && !v.is_zero();
        match op {
            OpKind::Div => b.is_some_and(BigFloat::is_zero),
            OpKind::Log => !a.is_nan() && !positive(a),
            OpKind::Sqrt => a.is_negative() && !a.is_zero(),
            OpKind::Asin | OpKind::Acos => {
                let one = BigFloat::from_f64(1.0, 64);
                a.abs().cmp(&one).is_some_and(|c| c > 0)
            }
            OpKind::Pow => {
                let b = b.expect("pow is binary");
                (a.is_negative() && !a.is_zero() && !b.is_int()) || (a.is_zero() && b.is_negative())
            }
            _ => false,
        }
    }

    fn record_fault(&mut self, op: OpKind) -> BigFloat {
        let site = SiteId::new(self.function, self.next - 1);
        self.fault.get_or_insert((site, op));
        BigFloat::nan(None)
    }
}

impl Machine for HighPrecision {
    type Value = BigFloat;

    fn constant(&mut self, c: Literal) -> BigFloat {
        BigFloat::parse(c.text, Radix::Dec, self.precision, RM, &mut self.consts)
    }

    fn unary(&mut self, op: OpKind, a: &BigFloat) -> BigFloat {
        self.next += 1;
        if Self::violates_domain(op, a, None) {
            return self.record_fault(op);
        }
        let p = self.precision;
        let cc = &mut self.consts;
        match op {
            OpKind::Sin => a.sin(p, RM, cc),
            OpKind::Cos => a.cos(p, RM, cc),
            OpKind::Tan => a.tan(p, RM, cc),
            OpKind::Asin => a.asin(p, RM, cc),
            OpKind::Acos => a.acos(p, RM, cc),
            OpKind::Atan => a.atan(p, RM, cc),
            OpKind::Exp => a.exp(p, RM, cc),
            OpKind::Log => a.ln(p, RM, cc),
            OpKind::Sqrt => a.sqrt(p, RM),
            OpKind::Sinh => a.sinh(p, RM, cc),
            OpKind::Cosh => a.cosh(p, RM, cc),
            OpKind::Tanh => a.tanh(p, RM, cc),
            _ => unreachable!("{op} is binary"),
        }
    }

    fn binary(&mut self, op: OpKind, a: &BigFloat, b: &BigFloat) -> BigFloat {
        self.next += 1;
        if Self::violates_domain(op, a, Some(b)) {
            return self.record_fault(op);
        }
        let p = self.precision;
        match op {
            OpKind::Add => a.add(b, p, RM),
            OpKind::Sub => a.sub(b, p, RM),
            OpKind::Mul => a.mul(b, p, RM),
            OpKind::Div => a.div(b, p, RM),
            OpKind::Pow => a.pow(b, p, RM, &mut self.consts),
            _ => unreachable!("{op} is unary"),
        }
    }
}

/// `f` at exact binary64 `inputs`, evaluated once at `precision` bits.
pub fn evaluate_at(f: &CorpusFunction, inputs: &[f64], precision: usize) -> Result<BigFloat> {
    f.check_arity(inputs.len())?;
    let mut m = HighPrecision::new(f.id, precision);
    let lifted: Vec<BigFloat> = inputs.iter().map(|&v| m.lift(v)).collect();
    let out = (f.evaluator.high)(&mut m, &lifted);
    match m.fault {
        Some((site, op)) => Err(Error::OracleDomain { site, op }),
        None => Ok(out),
    }
}

fn agree(a: &BigFloat, b: &BigFloat) -> bool {
    if a.is_nan() || b.is_nan() {
        return a.is_nan() && b.is_nan();
    }
    if a.is_inf() || b.is_inf() {
        return a == b;
    }
    if b.is_zero() {
        return false;
    }
    let p = 128;
    let d = a.sub(b, p, RM).abs();
    if d.is_zero() {
        return true;
    }
    match (d.exponent(), b.exponent()) {
        (Some(ed), Some(eb)) => ed < eb - AGREEMENT_BITS,
        _ => false,
    }
}

/// High-precision value of `f` at exact binary64 `inputs`, with the
/// precision it was accepted at.
///
/// Starts at `precision_bits` and doubles until two successive precisions
/// agree to [`AGREEMENT_BITS`] bits, returning the more precise value. A
/// zero never counts as agreement, since a cancellation that exhausts the
/// working precision also yields zero; exact zeros run to the ceiling.
pub fn evaluate_high_with_precision(f: &CorpusFunction, inputs: &[f64], cfg: &OracleConfig) -> Result<(BigFloat, usize)> {
    cfg.validate()?;
    let mut p = cfg.precision_bits;
    let mut prev = evaluate_at(f, inputs, p)?;
    while p < cfg.max_precision_bits {
        let next_p = (2 * p).min(cfg.max_precision_bits);
        let next = evaluate_at(f, inputs, next_p)?;
        let done = agree(&prev, &next);
        prev = next;
        p = next_p;
        if done {
            break;
        }
    }
    Ok((prev, p))
}

/// High-precision value of `f` at exact binary64 `inputs`.
pub fn evaluate_high(f: &CorpusFunction, inputs: &[f64], cfg: &OracleConfig) -> Result<BigFloat> {
    evaluate_high_with_precision(f, inputs, cfg).map(|(v, _)| v)
}

/// Relative error of `approx` against `exact`, falling back to absolute
/// error when `exact` is zero.
pub fn relative_error_against(approx: f64, exact: &BigFloat, precision: usize) -> f64 {
    if approx.is_nan() || exact.is_nan() {
        return f64::NAN;
    }
    if approx.is_infinite() {
        return f64::INFINITY;
    }
    let d = BigFloat::from_f64(approx, precision);
    let diff = d.sub(exact, precision, RM).abs();
    if exact.is_zero() {
        return to_f64(&diff);
    }
    to_f64(&diff.div(&exact.abs(), precision, RM))
}

/// Binary64 result, high-precision reference and their relative error.
#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub double: f64,
    pub reference: BigFloat,
    pub rel_error: f64,
}

impl OracleComparison {
    pub fn reference_decimal(&self, digits: usize) -> String {
        to_decimal(&self.reference, digits)
    }
}

pub fn compare_with_oracle(f: &CorpusFunction, inputs: &[f64], cfg: &OracleConfig) -> Result<OracleComparison> {
    let double = evaluate_plain(f, inputs)?;
    let (reference, precision) = evaluate_high_with_precision(f, inputs, cfg)?;
    let rel_error = relative_error_against(double, &reference, precision);
    Ok(OracleComparison {
        double,
        reference,
        rel_error,
    })
}

/// `|(double - exact) / exact|` for `f` at `inputs`, absolute when the
/// exact value is zero.
pub fn oracle_relative_error(f: &CorpusFunction, inputs: &[f64], cfg: &OracleConfig) -> Result<f64> {
    compare_with_oracle(f, inputs, cfg).map(|c| c.rel_error)
}

/// Nearest binary64 value.
pub fn to_f64(v: &BigFloat) -> f64 {
    if v.is_nan() {
        return f64::NAN;
    }
    if v.is_inf_pos() {
        return f64::INFINITY;
    }
    if v.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if v.is_zero() {
        return if v.is_negative() { -0.0 } else { 0.0 };
    }
    full_decimal(v)
        .parse()
        .expect("astro-float decimal output parses as f64")
}

fn full_decimal(v: &BigFloat) -> String {
    let mut cc = Consts::new().expect("allocating the constant cache");
    v.format(Radix::Dec, RM, &mut cc)
        .expect("formatting a finite BigFloat")
}

/// Scientific decimal with `digits` significant digits, rounded half up.
pub fn to_decimal(v: &BigFloat, digits: usize) -> String {
    if v.is_nan() || v.is_inf() {
        return crate::trace::fmt_float(to_f64(v));
    }
    if v.is_zero() {
        return "0".to_string();
    }
    let full = full_decimal(v);
    let (sign, rest) = match full.strip_prefix('-') {
        Some(r) => ("-", r),
        None => ("", full.as_str()),
    };
    let (mantissa, exp) = match rest.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().expect("decimal exponent")),
        None => (rest, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let mut ds: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).map(|b| b - b'0').collect();
    // normalise to d.ddd form
    let lead = ds.iter().position(|&d| d != 0).unwrap_or(0);
    let mut exp = exp + int_part.len() as i64 - 1 - lead as i64;
    ds.drain(..lead);
    if ds.len() > digits {
        let round_up = ds[digits] >= 5;
        ds.truncate(digits);
        if round_up {
            let mut i = digits;
            loop {
                if i == 0 {
                    ds.insert(0, 1);
                    ds.truncate(digits);
                    exp += 1;
                    break;
                }
                i -= 1;
                if ds[i] == 9 {
                    ds[i] = 0;
                } else {
                    ds[i] += 1;
                    break;
                }
            }
        }
    }
    let text: String = ds.iter().map(|d| char::from(b'0' + d)).collect();
    let (head, tail) = text.split_at(1);
    if tail.is_empty() {
        format!("{sign}{head}e{exp}")
    } else {
        format!("{sign}{head}.{tail}e{exp}")
    }
}
