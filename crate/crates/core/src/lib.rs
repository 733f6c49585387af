//! Detection of floating-point error-inducing inputs.
//!
//! Dangerous operation sites (large condition number) are turned into
//! residual equations, solved with Newton-Raphson, filtered by perturbation
//! injection and checked against a high-precision oracle.
//!
//! ```
//! use fperr_core::{corpus, detect::{analyze, PipelineConfig}};
//!
//! let f1 = &corpus::lookup("f1").unwrap().function;
//! let result = analyze(f1, &PipelineConfig::with_seed(0)).unwrap();
//! assert!(result.bugs.iter().any(|b| b.site.index == 1));
//! ```

pub mod condition;
pub mod corpus;
pub mod detect;
pub mod error;
pub mod filter;
pub mod machine;
pub mod newton;
pub mod op;
pub mod oracle;
pub mod report;
pub mod targets;
pub mod trace;

pub use condition::{condition_number, danger_specs, flag_dangerous_sites, Catalog, DangerSpec, Target};
pub use corpus::{lookup, registry, CorpusEntry, CorpusFunction, Interval};
pub use detect::{analyze, dedup_bugs, detect, CandidateInput, DetectionConfig, PipelineConfig};
pub use error::{DomainError, Error, Result};
pub use filter::{confirm_site, evaluate_perturbed, is_significant, perturbed_relative_error, BugRecord, PerturbationConfig};
pub use machine::Machine;
pub use newton::{newton_solve, newton_solve_multi, SolveOutcome, SolveStatus, SolverConfig};
pub use op::{Literal, OpKind};
pub use oracle::{oracle_relative_error, OracleConfig};
pub use report::RunReport;
pub use targets::{enumerate_targets, residual, ResidualTarget};
pub use trace::{evaluate_plain, evaluate_traced, site_table, ExecutionTrace, SiteId, TraceRecord};
