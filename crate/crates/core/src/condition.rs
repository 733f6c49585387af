//! Per-operation condition numbers and the scenarios in which they explode.
//!
//! For a unary op `f` the condition number is `|x f'(x) / f(x)|`. For
//! `add`/`sub` it is the larger of the operand-wise conditions
//! `|a / (a ± b)|` and `|b / (a ± b)|`. `mul` and `div` have condition 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::op::OpKind;
use crate::trace::{ExecutionTrace, SiteId, TraceRecord};

/// Default threshold above which a site counts as dangerous.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e5;

/// Condition number of the operation recorded in `record`.
///
/// Uses the recorded result as `f(x)`, so an exactly-zero result with a
/// nonzero numerator gives `+inf`.
pub fn condition_number(record: &TraceRecord) -> Result<f64> {
    if record.operands.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidRecord {
            site: record.site,
            reason: "non-finite operand",
        });
    }
    if record.result.is_nan() {
        return Err(Error::InvalidRecord {
            site: record.site,
            reason: "NaN result",
        });
    }
    Ok(gamma(record.op, &record.operands, record.result))
}

/// Condition formula evaluated on raw operands and result.
pub fn gamma(op: OpKind, operands: &[f64], r: f64) -> f64 {
    let x = operands[0];
    match op {
        OpKind::Add | OpKind::Sub => {
            let num = x.abs().max(operands[1].abs());
            ratio(num, r)
        }
        OpKind::Mul | OpKind::Div => 1.0,
        OpKind::Pow => {
            let b = operands[1];
            if x == 0.0 || b == 0.0 {
                b.abs()
            } else {
                b.abs().max((b * x.abs().ln()).abs())
            }
        }
        OpKind::Sin => limit_one(x, || ratio(x * x.cos(), r)),
        OpKind::Cos => ratio(x * x.sin(), r),
        OpKind::Tan => limit_one(x, || {
            if r == 0.0 {
                f64::INFINITY
            } else {
                x.abs() * (1.0 / r.abs() + r.abs())
            }
        }),
        OpKind::Asin | OpKind::Acos => {
            if op == OpKind::Asin && x == 0.0 {
                return 1.0;
            }
            ratio(x, (1.0 - x * x).sqrt() * r)
        }
        OpKind::Atan => limit_one(x, || ratio(x, (1.0 + x * x) * r)),
        OpKind::Exp => x.abs(),
        OpKind::Log => ratio(1.0, r),
        OpKind::Sqrt => 0.5,
        OpKind::Sinh => limit_one(x, || ratio(x, x.tanh())),
        OpKind::Cosh => (x * x.tanh()).abs(),
        OpKind::Tanh => limit_one(x, || ratio(2.0 * x, (2.0 * x).sinh())),
    }
}

/// `|num / den|` with `0/0 = 0` and `c/0 = inf`.
fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        (num / den).abs()
    }
}

// ops whose formula is 0/0 at x = 0 but tends to 1
fn limit_one(x: f64, formula: impl FnOnce() -> f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        formula()
    }
}

/// Index of the operand with the largest operand-wise condition number:
/// the operand whose relative error the op amplifies most.
pub fn sensitive_operand(op: OpKind, operands: &[f64]) -> usize {
    match op {
        OpKind::Add | OpKind::Sub if operands[1].abs() > operands[0].abs() => 1,
        OpKind::Pow => {
            let (a, b) = (operands[0], operands[1]);
            if a != 0.0 && (b * a.abs().ln()).abs() > b.abs() {
                1
            } else {
                0
            }
        }
        _ => 0,
    }
}

/// Human-readable condition formula for `op`.
pub fn formula_text(op: OpKind) -> &'static str {
    match op {
        OpKind::Add => "max(|a|,|b|)/|a+b|",
        OpKind::Sub => "max(|a|,|b|)/|a-b|",
        OpKind::Mul | OpKind::Div => "1",
        OpKind::Pow => "max(|b|, |b ln a|)",
        OpKind::Sin => "|x cos(x)/sin(x)|",
        OpKind::Cos => "|x tan(x)|",
        OpKind::Tan => "|x (1+tan(x)^2)/tan(x)|",
        OpKind::Asin => "|x/(sqrt(1-x^2) asin(x))|",
        OpKind::Acos => "|x/(sqrt(1-x^2) acos(x))|",
        OpKind::Atan => "|x/((1+x^2) atan(x))|",
        OpKind::Exp => "|x|",
        OpKind::Log => "|1/log(x)|",
        OpKind::Sqrt => "1/2",
        OpKind::Sinh => "|x/tanh(x)|",
        OpKind::Cosh => "|x tanh(x)|",
        OpKind::Tanh => "|2x/sinh(2x)|",
    }
}

/// What the result of an operation approaches when its condition number blows up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Target {
    FixedValue(f64),
    Infinity,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::FixedValue(v) => write!(f, "result -> {v}"),
            Target::Infinity => f.write_str("|result| -> inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DangerSpec {
    pub op: OpKind,
    pub target: Target,
}

/// The table of danger specs used to seed residual equations.
///
/// Overflow-type targets (`exp`, `sinh`, `cosh` growing without bound) are
/// off by default: driving them to infinity finds range errors, not
/// amplified rounding error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub overflow_targets: bool,
}

impl Catalog {
    pub fn specs(&self, op: OpKind) -> Vec<DangerSpec> {
        use OpKind::*;
        let targets: &[Target] = match op {
            Add | Sub | Sin | Cos | Log => &[Target::FixedValue(0.0)],
            Tan => &[Target::FixedValue(0.0), Target::Infinity],
            Exp | Sinh | Cosh if self.overflow_targets => &[Target::Infinity],
            _ => &[],
        };
        targets.iter().map(|&target| DangerSpec { op, target }).collect()
    }
}

/// Danger specs of `op` in the default catalog.
pub fn danger_specs(op: OpKind) -> Vec<DangerSpec> {
    Catalog::default().specs(op)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlaggedSites {
    /// Sites above threshold with their condition numbers, in trace order.
    pub sites: Vec<(SiteId, f64)>,
    /// Records skipped because they could not be conditioned.
    pub skipped: usize,
}

/// Sites in `trace` whose condition number exceeds `threshold`.
pub fn flag_dangerous_sites(trace: &ExecutionTrace, threshold: f64) -> FlaggedSites {
    let mut out = FlaggedSites::default();
    for record in &trace.records {
        match condition_number(record) {
            Ok(g) if g > threshold => out.sites.push((record.site, g)),
            Ok(_) => {}
            Err(_) => out.skipped += 1,
        }
    }
    if out.skipped > 0 {
        log::warn!("skipped {} unconditionable record(s)", out.skipped);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::lookup;
    use crate::trace::evaluate_traced;

    fn record(op: OpKind, operands: &[f64], result: f64) -> TraceRecord {
        TraceRecord {
            site: SiteId::new("t", 0),
            op,
            operands: operands.to_vec(),
            result,
        }
    }

    #[test]
    fn sub_examples() {
        assert_eq!(condition_number(&record(OpKind::Sub, &[1.0, 0.0], 1.0)).unwrap(), 1.0);

        let a = 0.3999999999995527;
        let g = condition_number(&record(OpKind::Sub, &[a, 0.4], a - 0.4)).unwrap();
        // 0.4 / 4.4730885662147557e-13
        assert!((g / 8.942367093e11 - 1.0).abs() < 1e-6, "{g}");
    }

    #[test]
    fn cos_at_quarter_pi() {
        let x = std::f64::consts::FRAC_PI_4;
        let g = condition_number(&record(OpKind::Cos, &[x], x.cos())).unwrap();
        assert!((g - x * x.tan()).abs() < 1e-15);
        assert!((g - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn zero_results() {
        let g = condition_number(&record(OpKind::Sub, &[0.5, 0.5], 0.0)).unwrap();
        assert_eq!(g, f64::INFINITY);
        let g = condition_number(&record(OpKind::Add, &[0.0, 0.0], 0.0)).unwrap();
        assert_eq!(g, 0.0);
        let g = condition_number(&record(OpKind::Log, &[1.0], 0.0)).unwrap();
        assert_eq!(g, f64::INFINITY);
        let g = condition_number(&record(OpKind::Sin, &[0.0], 0.0)).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn invalid_records() {
        assert!(condition_number(&record(OpKind::Sub, &[f64::NAN, 1.0], f64::NAN)).is_err());
        assert!(condition_number(&record(OpKind::Sin, &[f64::INFINITY], f64::NAN)).is_err());
    }

    #[test]
    fn catalog_entries() {
        let fixed0 = |op| vec![DangerSpec { op, target: Target::FixedValue(0.0) }];
        assert_eq!(danger_specs(OpKind::Sub), fixed0(OpKind::Sub));
        assert_eq!(danger_specs(OpKind::Sin), fixed0(OpKind::Sin));
        assert!(danger_specs(OpKind::Mul).is_empty());
        assert!(danger_specs(OpKind::Exp).is_empty());
        assert_eq!(danger_specs(OpKind::Tan).len(), 2);
        let overflow = Catalog { overflow_targets: true };
        assert_eq!(overflow.specs(OpKind::Sinh)[0].target, Target::Infinity);
    }

    #[test]
    fn flagging_f1() {
        let f = &lookup("f1").unwrap().function;
        let (_, trace) = evaluate_traced(f, &[0.411516846067]).unwrap();
        let flagged = flag_dangerous_sites(&trace, DEFAULT_COND_THRESHOLD);
        assert_eq!(flagged.sites.len(), 1);
        assert_eq!(flagged.sites[0].0.index, 1);
        assert!((flagged.sites[0].1 / 8.942367093e11 - 1.0).abs() < 1e-6);

        let (_, trace) = evaluate_traced(f, &[0.5]).unwrap();
        assert!(flag_dangerous_sites(&trace, DEFAULT_COND_THRESHOLD).sites.is_empty());
        let sub = condition_number(&trace.records[1]).unwrap();
        assert!((sub - 6.0362).abs() < 1e-3, "{sub}");

        let empty = ExecutionTrace {
            records: vec![],
            final_result: 0.0,
        };
        assert!(flag_dangerous_sites(&empty, 1e5).sites.is_empty());
    }

    #[test]
    fn sensitive_operands() {
        assert_eq!(sensitive_operand(OpKind::Sub, &[0.4, 0.4]), 0);
        assert_eq!(sensitive_operand(OpKind::Sub, &[0.0, 1e-16]), 1);
        assert_eq!(sensitive_operand(OpKind::Sin, &[3.0]), 0);
    }
}
