//! Perturbation filtering of candidates and oracle validation.
//!
//! A candidate site is confirmed when a relative perturbation of size
//! `delta` injected at that site changes the final output by more than
//! `bug_threshold`. The perturbation is applied to the operand the op is
//! most sensitive to, so it is amplified by the site's condition number the
//! same way the rounding error carried by that operand is.

use serde::{Deserialize, Serialize};

use crate::condition::{condition_number, DEFAULT_COND_THRESHOLD};
use crate::corpus::CorpusFunction;
use crate::error::{Error, Result};
use crate::op::OpKind;
use crate::oracle::{oracle_relative_error, OracleConfig};
use crate::trace::{evaluate_plain, evaluate_traced, run_double, site_table, Injection, Recorder, SiteId};

/// Oracle relative error above which an input is error-inducing.
pub const SIGNIFICANCE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub delta: f64,
    pub cond_threshold: f64,
    pub bug_threshold: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            delta: 1e-14,
            cond_threshold: DEFAULT_COND_THRESHOLD,
            bug_threshold: 1e-10,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must be in (0, 1), got {}", self.delta)));
        }
        if !(self.cond_threshold > 0.0 && self.bug_threshold > 0.0) {
            return Err(Error::InvalidConfig("thresholds must be positive".into()));
        }
        Ok(())
    }
}

fn check_site(f: &CorpusFunction, site: SiteId) -> Result<()> {
    if site.function != f.id || site.index >= site_table(f).len() {
        return Err(Error::NoSuchSite {
            function: f.id.to_string(),
            index: site.index,
        });
    }
    Ok(())
}

/// Runs `f` in binary64 with the sensitive operand of `site` scaled by
/// `1 + delta`.
pub fn evaluate_perturbed(f: &CorpusFunction, inputs: &[f64], site: SiteId, delta: f64) -> Result<f64> {
    check_site(f, site)?;
    let mut m = Recorder::perturbing(
        f.id,
        Injection {
            site: site.index,
            delta,
        },
    );
    let out = run_double(f, &mut m, inputs);
    if !m.injected() {
        return Err(Error::SiteNotExecuted(site));
    }
    out
}

/// `|perturbed - plain| / |plain|`.
///
/// When the plain output is exactly zero the difference is measured
/// relative to the perturbed output instead: 0 if both are zero, else 1.
pub fn relative_change(plain: f64, perturbed: f64) -> f64 {
    if plain == 0.0 {
        if perturbed == 0.0 {
            0.0
        } else if perturbed.is_nan() {
            f64::NAN
        } else {
            1.0
        }
    } else {
        ((perturbed - plain) / plain).abs()
    }
}

pub fn perturbed_relative_error(
    f: &CorpusFunction,
    inputs: &[f64],
    site: SiteId,
    cfg: &PerturbationConfig,
) -> Result<f64> {
    let perturbed = evaluate_perturbed(f, inputs, site, cfg.delta)?;
    let plain = evaluate_plain(f, inputs)?;
    Ok(relative_change(plain, perturbed))
}

pub fn is_significant(err: f64) -> bool {
    err > SIGNIFICANCE_THRESHOLD
}

#[derive(Debug, Clone, PartialEq)]
pub struct BugRecord {
    pub site: SiteId,
    pub op: OpKind,
    pub witness: Vec<f64>,
    pub condition_number: f64,
    pub perturbed_rel_error: f64,
    pub oracle_rel_error: f64,
    pub confirmed: bool,
}

impl BugRecord {
    pub fn function_id(&self) -> &'static str {
        self.site.function
    }

    pub fn significant(&self) -> bool {
        is_significant(self.oracle_rel_error)
    }
}

/// Measures `site` at `witness` and decides whether it is a bug.
///
/// A site that does not execute, or an input the binary64 routine rejects,
/// gives an unconfirmed record with NaN metrics.
pub fn confirm_site(
    f: &CorpusFunction,
    site: SiteId,
    op: OpKind,
    witness: &[f64],
    pcfg: &PerturbationConfig,
    ocfg: &OracleConfig,
) -> BugRecord {
    let mut rec = BugRecord {
        site,
        op,
        witness: witness.to_vec(),
        condition_number: f64::NAN,
        perturbed_rel_error: f64::NAN,
        oracle_rel_error: f64::NAN,
        confirmed: false,
    };
    let Ok((_, trace)) = evaluate_traced(f, witness) else {
        return rec;
    };
    let Some(record) = trace.record_at(site.index) else {
        return rec;
    };
    rec.condition_number = condition_number(record).unwrap_or(f64::NAN);
    rec.perturbed_rel_error = perturbed_relative_error(f, witness, site, pcfg).unwrap_or(f64::NAN);
    rec.oracle_rel_error = oracle_relative_error(f, witness, ocfg).unwrap_or(f64::NAN);
    rec.confirmed = rec.condition_number > pcfg.cond_threshold && rec.perturbed_rel_error > pcfg.bug_threshold;
    rec
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // truncated pi on purpose
mod tests {
    use super::*;
    use crate::corpus::lookup;

    fn f(id: &str) -> &'static CorpusFunction {
        &lookup(id).unwrap().function
    }

    const ASIN_04: f64 = 0.41151684606748806;

    #[test]
    fn zero_output_stays_zero() {
        let out = evaluate_perturbed(f("f6"), &[1.0, -1.0], SiteId::new("f6", 0), 0.0).unwrap();
        assert_eq!(out, 0.0);
        // perturbing the operand breaks the exact cancellation
        let out = evaluate_perturbed(f("f6"), &[1.0, -1.0], SiteId::new("f6", 0), 1e-14).unwrap();
        assert_eq!(out, (1.0 + 1e-14) - 1.0);
    }

    #[test]
    fn benign_sin_site() {
        let x = 0.5f64;
        let plain = evaluate_plain(f("f1"), &[x]).unwrap();
        let p = evaluate_perturbed(f("f1"), &[x], SiteId::new("f1", 0), 1e-14).unwrap();
        // first order: x cos(x) * delta
        let expect = x * x.cos() * 1e-14;
        assert!(((p - plain) - expect).abs() < 1e-16, "{}", p - plain);
    }

    #[test]
    fn false_positive_near_pi() {
        let cfg = PerturbationConfig::default();
        let e = perturbed_relative_error(f("f1"), &[3.14159265358979], SiteId::new("f1", 0), &cfg).unwrap();
        assert!(e < 1e-10, "{e}");
    }

    #[test]
    fn cancellation_propagates() {
        let cfg = PerturbationConfig::default();
        let e = perturbed_relative_error(f("f1"), &[ASIN_04], SiteId::new("f1", 1), &cfg).unwrap();
        assert!(e > 1e-6, "{e}");
        let zero = PerturbationConfig { delta: 0.0, ..cfg };
        assert_eq!(perturbed_relative_error(f("f1"), &[ASIN_04], SiteId::new("f1", 1), &zero).unwrap(), 0.0);
    }

    #[test]
    fn site_errors() {
        // log faults at site 0, so the div never runs
        let err = evaluate_perturbed(f("f4"), &[-1.0], SiteId::new("f4", 2), 1e-14).unwrap_err();
        assert!(matches!(err, Error::SiteNotExecuted(_)), "{err}");
        // the div is reached and faults
        let err = evaluate_perturbed(f("f2"), &[0.0], SiteId::new("f2", 3), 1e-14).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
        let err = evaluate_perturbed(f("f1"), &[0.0], SiteId::new("f1", 9), 1e-14).unwrap_err();
        assert!(matches!(err, Error::NoSuchSite { .. }));
    }

    #[test]
    fn relative_change_rules() {
        assert_eq!(relative_change(0.0, 0.0), 0.0);
        assert_eq!(relative_change(0.0, 1e-30), 1.0);
        assert_eq!(relative_change(2.0, 3.0), 0.5);
        assert!(relative_change(1.0, f64::NAN).is_nan());
    }

    #[test]
    fn significance() {
        assert!(is_significant(0.01));
        assert!(!is_significant(7.09e-5));
        assert!(!is_significant(f64::NAN));
        assert!(!is_significant(1e-3));
    }

    #[test]
    fn confirming() {
        let (p, o) = (PerturbationConfig::default(), OracleConfig::default());
        let rec = confirm_site(f("f1"), SiteId::new("f1", 1), OpKind::Sub, &[0.411516846067], &p, &o);
        assert!(rec.confirmed);
        assert!((rec.oracle_rel_error / 8.79835064938e-5 - 1.0).abs() < 1e-9);
        assert!(!rec.significant());

        let rec = confirm_site(f("f1"), SiteId::new("f1", 0), OpKind::Sin, &[3.14159265358979], &p, &o);
        assert!(!rec.confirmed);

        let rec = confirm_site(f("f2"), SiteId::new("f2", 3), OpKind::Div, &[0.0], &p, &o);
        assert!(!rec.confirmed && rec.condition_number.is_nan());
    }
}
