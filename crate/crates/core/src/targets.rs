//! Residual equations built from dangerous operation sites.

use std::fmt;

use crate::condition::{Catalog, DangerSpec, Target};
use crate::corpus::CorpusFunction;
use crate::error::{Error, Result};
use crate::trace::{evaluate_traced, run_double, Recorder, SiteId, TraceRecord};

/// One residual equation: drive the result of `site` to `spec.target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualTarget {
    pub site: SiteId,
    pub spec: DangerSpec,
}

impl fmt::Display for ResidualTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.site, self.spec.op, self.spec.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualEvaluation {
    pub value: f64,
    pub site_executed: bool,
}

/// Targets for every record in trace order, then catalog order.
pub fn targets_in_trace(records: &[TraceRecord], catalog: &Catalog) -> Vec<ResidualTarget> {
    records
        .iter()
        .flat_map(|r| {
            catalog
                .specs(r.op)
                .into_iter()
                .map(move |spec| ResidualTarget { site: r.site, spec })
        })
        .collect()
}

/// Traces `f` at `probe` and builds one target per (executed site, danger spec).
pub fn enumerate_targets(f: &CorpusFunction, probe: &[f64]) -> Result<Vec<ResidualTarget>> {
    enumerate_targets_with(f, probe, &Catalog::default())
}

pub fn enumerate_targets_with(f: &CorpusFunction, probe: &[f64], catalog: &Catalog) -> Result<Vec<ResidualTarget>> {
    let (_, trace) = evaluate_traced(f, probe)?;
    Ok(targets_in_trace(&trace.records, catalog))
}

/// Like [`enumerate_targets_with`], but a domain fault yields the targets of
/// the sites that ran before it.
pub fn enumerate_targets_lenient(f: &CorpusFunction, probe: &[f64], catalog: &Catalog) -> Result<Vec<ResidualTarget>> {
    match evaluate_traced(f, probe) {
        Ok((_, trace)) => Ok(targets_in_trace(&trace.records, catalog)),
        Err(Error::Domain(fault)) => Ok(targets_in_trace(&fault.partial_trace, catalog)),
        Err(e) => Err(e),
    }
}

fn residual_of(spec: &DangerSpec, result: f64) -> f64 {
    match spec.target {
        Target::FixedValue(v) => result - v,
        Target::Infinity => 1.0 / result,
    }
}

/// `g(inputs)` for target `t`: re-runs `f` and reads the site's result.
///
/// A site that does not run, including one after a domain fault, gives
/// `NaN` with `site_executed = false`. Only arity errors are returned.
pub fn residual(f: &CorpusFunction, t: &ResidualTarget, inputs: &[f64]) -> Result<ResidualEvaluation> {
    let mut m = Recorder::watching(f.id, t.site.index);
    match run_double(f, &mut m, inputs) {
        Ok(_) | Err(Error::Domain(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(match m.watched() {
        Some(r) => ResidualEvaluation {
            value: residual_of(&t.spec, r.result),
            site_executed: true,
        },
        None => ResidualEvaluation {
            value: f64::NAN,
            site_executed: false,
        },
    })
}

/// `residual` as a plain scalar field, `NaN` on any failure.
pub fn residual_fn<'a>(f: &'a CorpusFunction, t: &'a ResidualTarget) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |x| residual(f, t, x).map(|r| r.value).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::lookup;
    use crate::op::OpKind;

    fn f(id: &str) -> &'static CorpusFunction {
        &lookup(id).unwrap().function
    }

    fn fixed0(function: &'static str, index: usize, op: OpKind) -> ResidualTarget {
        ResidualTarget {
            site: SiteId::new(function, index),
            spec: DangerSpec {
                op,
                target: Target::FixedValue(0.0),
            },
        }
    }

    #[test]
    fn f1_targets() {
        let ts = enumerate_targets(f("f1"), &[0.5]).unwrap();
        assert_eq!(ts, vec![fixed0("f1", 0, OpKind::Sin), fixed0("f1", 1, OpKind::Sub)]);
    }

    #[test]
    fn f6_targets() {
        let ts = enumerate_targets(f("f6"), &[1.0, 2.0]).unwrap();
        assert_eq!(ts, vec![fixed0("f6", 0, OpKind::Add)]);
    }

    #[test]
    fn f2_at_zero() {
        assert!(matches!(enumerate_targets(f("f2"), &[0.0]), Err(Error::Domain(_))));
        let ts = enumerate_targets_lenient(f("f2"), &[0.0], &Catalog::default()).unwrap();
        assert_eq!(ts, vec![fixed0("f2", 0, OpKind::Cos), fixed0("f2", 1, OpKind::Sub)]);
    }

    #[test]
    fn residual_values() {
        let t = fixed0("f1", 1, OpKind::Sub);
        let r = residual(f("f1"), &t, &[0.411516846067]).unwrap();
        assert!(r.site_executed);
        assert_eq!(r.value, 0.3999999999995527 - 0.4);

        // nearest double to asin(0.4)
        let r = residual(f("f1"), &t, &[0.41151684606748806]).unwrap();
        assert!(r.value.abs() <= 1e-12);

        let t = fixed0("f6", 0, OpKind::Add);
        assert_eq!(residual(f("f6"), &t, &[1.0, -1.0]).unwrap().value, 0.0);
    }

    #[test]
    fn unexecuted_site_is_nan() {
        // f2's div site faults at 0, so nothing is recorded for it
        let t = fixed0("f2", 3, OpKind::Div);
        let r = residual(f("f2"), &t, &[0.0]).unwrap();
        assert!(!r.site_executed && r.value.is_nan());
        // the cos site before the fault still runs
        let t = fixed0("f2", 0, OpKind::Cos);
        let r = residual(f("f2"), &t, &[0.0]).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn infinity_target_is_reciprocal() {
        let spec = DangerSpec {
            op: OpKind::Tan,
            target: Target::Infinity,
        };
        assert_eq!(residual_of(&spec, -4.0), -0.25);
    }
}
