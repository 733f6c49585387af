//! Machine-readable run reports.
//!
//! Floats are written in shortest round-trip form; non-finite values become
//! the strings `"inf"`, `"-inf"` and `"nan"`, so a report parses back to the
//! same bits and re-serializes to the same bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{DetectionStats, FunctionResult, PipelineConfig};
use crate::error::{Error, Result};
use crate::filter::{is_significant, BugRecord};
use crate::op::OpKind;
use crate::trace::fmt_float;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `f64` that tolerates non-finite values in JSON.
pub mod float {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&crate::trace::fmt_float(*v))
        }
    }

    struct FloatVisitor;

    impl Visitor<'_> for FloatVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(FloatVisitor)
    }
}

pub mod float_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct F(#[serde(with = "super::float")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| F(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<F>::deserialize(d)?.into_iter().map(|F(x)| x).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub site: usize,
    pub op: OpKind,
    #[serde(with = "float_vec")]
    pub witness: Vec<f64>,
    #[serde(with = "float")]
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugEntry {
    pub site: usize,
    pub op: OpKind,
    #[serde(with = "float_vec")]
    pub witness: Vec<f64>,
    #[serde(with = "float")]
    pub oracle_rel_error: f64,
    #[serde(with = "float")]
    pub condition_number: f64,
    #[serde(with = "float")]
    pub perturbed_rel_error: f64,
    pub significant: bool,
}

impl From<&BugRecord> for BugEntry {
    fn from(b: &BugRecord) -> Self {
        BugEntry {
            site: b.site.index,
            op: b.op,
            witness: b.witness.clone(),
            oracle_rel_error: b.oracle_rel_error,
            condition_number: b.condition_number,
            perturbed_rel_error: b.perturbed_rel_error,
            significant: b.significant(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionReport {
    pub function: String,
    pub seed: u64,
    pub candidates: Vec<CandidateEntry>,
    pub bugs: Vec<BugEntry>,
    pub stats: DetectionStats,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WallTimes {
    pub detect: f64,
    pub confirm: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub results: Vec<FunctionReport>,
    pub wall_times: WallTimes,
}

impl RunReport {
    pub fn new(config: &PipelineConfig, results: &[FunctionResult], total_seconds: f64) -> Self {
        let seed = config.detection.rng_seed;
        let functions = results
            .iter()
            .map(|r| FunctionReport {
                function: r.function.to_string(),
                seed,
                candidates: r
                    .candidates
                    .iter()
                    .map(|c| CandidateEntry {
                        site: c.target.site.index,
                        op: c.target.spec.op,
                        witness: c.witness.clone(),
                        residual: c.residual_at_witness,
                        iterations: c.solve.iterations,
                    })
                    .collect(),
                bugs: r.bugs.iter().map(BugEntry::from).collect(),
                stats: r.stats.clone(),
            })
            .collect();
        RunReport {
            tool_version: TOOL_VERSION.to_string(),
            config: config.clone(),
            results: functions,
            wall_times: WallTimes {
                detect: results.iter().map(|r| r.detect_seconds).sum(),
                confirm: results.iter().map(|r| r.confirm_seconds).sum(),
                total: total_seconds,
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per (function, bug site).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "function",
            "site",
            "op",
            "witness",
            "cond",
            "perturbed_err",
            "oracle_err",
            "significant",
        ])?;
        for r in &self.results {
            for b in &r.bugs {
                let witness: Vec<String> = b.witness.iter().map(|&v| fmt_float(v)).collect();
                w.write_record([
                    r.function.clone(),
                    b.site.to_string(),
                    b.op.to_string(),
                    witness.join(";"),
                    fmt_float(b.condition_number),
                    fmt_float(b.perturbed_rel_error),
                    fmt_float(b.oracle_rel_error),
                    b.significant.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn bug_count(&self) -> usize {
        self.results.iter().map(|r| r.bugs.len()).sum()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub fn emit_report(report: &RunReport, path: &Path, format: ReportFormat) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Json => out.write_all(report.to_json()?.as_bytes()).map_err(io_err(path))?,
        ReportFormat::Csv => report.write_csv(&mut out).map_err(|e| match e {
            Error::Io { source, .. } => io_err(path)(source),
            other => other,
        })?,
    }
    out.flush().map_err(io_err(path))
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    RunReport::from_json(&text)
}

/// Confirmed bugs whose oracle error is not significant.
pub fn insignificant_bugs(report: &RunReport) -> Vec<(&str, &BugEntry)> {
    report
        .results
        .iter()
        .flat_map(|r| r.bugs.iter().map(move |b| (r.function.as_str(), b)))
        .filter(|(_, b)| !is_significant(b.oracle_rel_error))
        .collect()
}
