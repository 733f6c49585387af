//! Shadow execution of corpus routines in binary64.
//!
//! One machine, [`Recorder`], implements every double-precision mode. It
//! numbers operations as they execute, optionally keeps a full trace,
//! optionally captures one watched site, and optionally injects a relative
//! perturbation into one site's operand. All modes run the exact same
//! arithmetic, so their results agree bit for bit wherever they should.

use std::fmt;
use std::io::Write;

use crate::condition::sensitive_operand;
use crate::corpus::CorpusFunction;
use crate::error::{DomainError, Error, Result};
use crate::machine::{Machine, ShapeRecorder};
use crate::op::{Literal, OpKind};

/// A static operation site: the n-th atomic operation of a routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteId {
    pub function: &'static str,
    pub index: usize,
}

impl SiteId {
    pub fn new(function: &'static str, index: usize) -> Self {
        SiteId { function, index }
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.function, self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub site: SiteId,
    pub op: OpKind,
    pub operands: Vec<f64>,
    pub result: f64,
}

impl TraceRecord {
    /// Re-evaluates the op on the recorded operands.
    pub fn replay(&self) -> f64 {
        self.op.apply(&self.operands)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub records: Vec<TraceRecord>,
    pub final_result: f64,
}

impl ExecutionTrace {
    pub fn record_at(&self, index: usize) -> Option<&TraceRecord> {
        self.records.iter().find(|r| r.site.index == index)
    }

    /// Writes the trace as CSV: `site,op,operand1,operand2,result`, floats in
    /// shortest round-trip form, `operand2` empty for unary ops.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["site", "op", "operand1", "operand2", "result"])?;
        for r in &self.records {
            let second = r.operands.get(1).map(|v| fmt_float(*v)).unwrap_or_default();
            w.write_record([
                r.site.index.to_string(),
                r.op.to_string(),
                fmt_float(r.operands[0]),
                second,
                fmt_float(r.result),
            ])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<trace>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Shortest decimal string that parses back to the same double.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        let mut buf = ryu::Buffer::new();
        buf.format_finite(v).to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Injection {
    pub site: usize,
    pub delta: f64,
}

/// The binary64 execution engine behind every double-precision mode.
#[derive(Debug)]
pub(crate) struct Recorder {
    function: &'static str,
    next: usize,
    records: Option<Vec<TraceRecord>>,
    watch: Option<usize>,
    watched: Option<TraceRecord>,
    injection: Option<Injection>,
    injected: bool,
    fault: Option<DomainError>,
}

impl Recorder {
    pub fn plain(function: &'static str) -> Self {
        Recorder {
            function,
            next: 0,
            records: None,
            watch: None,
            watched: None,
            injection: None,
            injected: false,
            fault: None,
        }
    }

    pub fn traced(function: &'static str) -> Self {
        Recorder {
            records: Some(Vec::new()),
            ..Recorder::plain(function)
        }
    }

    pub fn watching(function: &'static str, site: usize) -> Self {
        Recorder {
            watch: Some(site),
            ..Recorder::plain(function)
        }
    }

    pub fn perturbing(function: &'static str, injection: Injection) -> Self {
        Recorder {
            injection: Some(injection),
            ..Recorder::plain(function)
        }
    }

    pub fn watched(&self) -> Option<&TraceRecord> {
        self.watched.as_ref()
    }

    pub fn injected(&self) -> bool {
        self.injected
    }

    pub fn take_fault(&mut self) -> Option<DomainError> {
        self.fault.take()
    }

    pub fn into_records(self) -> Vec<TraceRecord> {
        self.records.unwrap_or_default()
    }

    fn execute(&mut self, op: OpKind, mut operands: Vec<f64>) -> f64 {
        let index = self.next;
        self.next += 1;
        if self.fault.is_some() {
            return f64::NAN;
        }
        if let Some(inj) = self.injection {
            if inj.site == index {
                self.injected = true;
                if inj.delta != 0.0 {
                    let k = sensitive_operand(op, &operands);
                    operands[k] *= 1.0 + inj.delta;
                }
            }
        }
        let site = SiteId::new(self.function, index);
        if op.violates_domain(&operands) {
            self.fault = Some(DomainError {
                site,
                op,
                operands,
                partial_trace: self.records.take().unwrap_or_default(),
            });
            return f64::NAN;
        }
        let result = op.apply(&operands);
        let watched = self.watch == Some(index);
        if watched || self.records.is_some() {
            let record = TraceRecord {
                site,
                op,
                operands,
                result,
            };
            if watched {
                self.watched = Some(record.clone());
            }
            if let Some(records) = self.records.as_mut() {
                records.push(record);
            }
        }
        result
    }
}

impl Machine for Recorder {
    type Value = f64;

    fn constant(&mut self, c: Literal) -> f64 {
        c.value
    }

    fn unary(&mut self, op: OpKind, a: &f64) -> f64 {
        self.execute(op, vec![*a])
    }

    fn binary(&mut self, op: OpKind, a: &f64, b: &f64) -> f64 {
        self.execute(op, vec![*a, *b])
    }
}

/// Runs `f` on `machine` after checking arity; returns the output or the
/// domain fault the run hit.
pub(crate) fn run_double(f: &CorpusFunction, machine: &mut Recorder, inputs: &[f64]) -> Result<f64> {
    f.check_arity(inputs.len())?;
    let out = (f.evaluator.double)(machine, inputs);
    match machine.take_fault() {
        Some(fault) => Err(fault.into()),
        None => Ok(out),
    }
}

/// IEEE-754 binary64 evaluation of `f`.
pub fn evaluate_plain(f: &CorpusFunction, inputs: &[f64]) -> Result<f64> {
    run_double(f, &mut Recorder::plain(f.id), inputs)
}

/// Evaluates `f` and records every atomic operation in execution order.
///
/// On a domain fault the returned [`Error::Domain`] carries the records of
/// the operations that completed before it.
pub fn evaluate_traced(f: &CorpusFunction, inputs: &[f64]) -> Result<(f64, ExecutionTrace)> {
    let mut m = Recorder::traced(f.id);
    let out = run_double(f, &mut m, inputs)?;
    let trace = ExecutionTrace {
        records: m.into_records(),
        final_result: out,
    };
    Ok((out, trace))
}

/// Every static site of `f` with its op, in definition order.
pub fn site_table(f: &CorpusFunction) -> Vec<(SiteId, OpKind)> {
    let mut shape = ShapeRecorder::default();
    let inputs = vec![0.0; f.arity];
    (f.evaluator.double)(&mut shape, &inputs);
    shape
        .ops
        .into_iter()
        .enumerate()
        .map(|(i, op)| (SiteId::new(f.id, i), op))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::lookup;

    fn f(id: &str) -> &'static CorpusFunction {
        &lookup(id).unwrap().function
    }

    #[test]
    fn plain_values() {
        let out = evaluate_plain(f("f1"), &[0.411516846067]).unwrap();
        assert_eq!(0.411516846067f64.sin(), 0.3999999999995527);
        assert_eq!(out, 0.3999999999995527 - 0.4);
        assert!((out - -4.473e-13).abs() < 1e-16);
        assert_eq!(evaluate_plain(f("f5"), &[2.0]).unwrap(), -1.0);
        assert_eq!(evaluate_plain(f("f1"), &[0.0]).unwrap(), -0.4);
    }

    #[test]
    fn f1_trace_has_two_records() {
        let (out, trace) = evaluate_traced(f("f1"), &[0.5]).unwrap();
        assert_eq!(trace.records.len(), 2);
        let s = 0.5f64.sin();
        assert_eq!(trace.records[0].op, OpKind::Sin);
        assert_eq!(trace.records[0].operands, vec![0.5]);
        assert_eq!(trace.records[0].result, s);
        assert_eq!(trace.records[1].op, OpKind::Sub);
        assert_eq!(trace.records[1].operands, vec![s, 0.4]);
        assert_eq!(trace.records[1].site.index, 1);
        assert_eq!(out, s - 0.4);
    }

    #[test]
    fn f5_trace_covers_the_decomposition() {
        let (out, trace) = evaluate_traced(f("f5"), &[2.0]).unwrap();
        assert_eq!(out, -1.0);
        let ops: Vec<_> = trace.records.iter().map(|r| r.op).collect();
        use OpKind::*;
        assert_eq!(ops, vec![Mul, Mul, Mul, Sub, Sub]);
        assert_eq!(trace.records[1].result, 8.0);
        assert_eq!(trace.records[2].result, 4.0);
        assert_eq!(trace.records[3].result, 4.0);
    }

    #[test]
    fn f6_exact_cancellation() {
        let (out, trace) = evaluate_traced(f("f6"), &[1.0, -1.0]).unwrap();
        assert_eq!(out, 0.0);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].op, OpKind::Add);
    }

    #[test]
    fn site_tables() {
        let ops = |id| site_table(f(id)).into_iter().map(|(_, op)| op).collect::<Vec<_>>();
        use OpKind::*;
        assert_eq!(ops("f1"), vec![Sin, Sub]);
        assert_eq!(ops("f6"), vec![Add]);
        assert_eq!(ops("f2"), vec![Cos, Sub, Mul, Div]);
        let table = site_table(f("f1"));
        assert_eq!(table[1].0, SiteId::new("f1", 1));
    }

    #[test]
    fn domain_fault_keeps_partial_trace() {
        let err = evaluate_traced(f("f2"), &[0.0]).unwrap_err();
        let Error::Domain(fault) = err else {
            panic!("expected a domain error, got {err}");
        };
        assert_eq!(fault.op, OpKind::Div);
        assert_eq!(fault.site.index, 3);
        let ops: Vec<_> = fault.partial_trace.iter().map(|r| r.op).collect();
        assert_eq!(ops, vec![OpKind::Cos, OpKind::Sub, OpKind::Mul]);

        assert!(matches!(evaluate_plain(f("f4"), &[-1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn non_finite_results_are_not_errors() {
        let out = evaluate_plain(f("f3"), &[1000.0]).unwrap();
        assert!(out.is_infinite());
        let out = evaluate_plain(f("f1"), &[f64::INFINITY]).unwrap();
        assert!(out.is_nan());
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(evaluate_plain(f("f6"), &[1.0]), Err(Error::Arity { .. })));
    }

    #[test]
    fn csv_dump() {
        let (_, trace) = evaluate_traced(f("f1"), &[0.5]).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "site,op,operand1,operand2,result");
        assert_eq!(lines[1], format!("0,sin,0.5,,{}", fmt_float(0.5f64.sin())));
        assert!(lines[2].starts_with("1,sub,"));
        let cols: Vec<_> = lines[2].split(',').collect();
        assert_eq!(cols[3].parse::<f64>().unwrap(), 0.4);
        assert_eq!(cols[4].parse::<f64>().unwrap(), 0.5f64.sin() - 0.4);
    }

    #[test]
    fn fmt_float_is_shortest() {
        assert_eq!(fmt_float(0.1), "0.1");
        assert_eq!(fmt_float(1e300), "1e300");
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
    }
}
