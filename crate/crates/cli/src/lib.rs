//! `fperr` command-line front end.
//!
//! Exit codes: 0 when the command ran, 1 on usage or input errors, 2 when
//! `--fail-on-bugs` is set and a bug was confirmed.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fperr_core::condition::formula_text;
use fperr_core::detect::FunctionResult;
use fperr_core::oracle::compare_with_oracle;
use fperr_core::report::{emit_report, ReportFormat};
use fperr_core::targets::residual_fn;
use fperr_core::trace::fmt_float;
use fperr_core::{
    analyze, evaluate_traced, is_significant, lookup, newton_solve, newton_solve_multi, registry,
    site_table, CorpusFunction, Error, OpKind, PipelineConfig, ResidualTarget, RunReport,
};

mod table;

use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUGS: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fperr", version, about = "Find inputs that trigger large floating-point error")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// RNG seed for initial points
    #[arg(long, global = true, env = "FPERR_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the report as JSON to this path
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the report (or a solve path) as CSV to this path
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Starting precision of the oracle
    #[arg(long, global = true, value_name = "BITS")]
    precision_bits: Option<usize>,
    /// Condition number above which a site is dangerous
    #[arg(long, global = true)]
    cond_threshold: Option<f64>,
    /// Relative perturbation injected at a candidate site
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Newton iteration cap
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Exit with status 2 when any bug is confirmed
    #[arg(long, global = true)]
    fail_on_bugs: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the corpus
    List,
    /// Dump the operation trace of one evaluation as CSV
    Trace {
        function: String,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        input: Vec<f64>,
    },
    /// List residual targets from a probe evaluation
    Targets {
        function: String,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        probe: Vec<f64>,
    },
    /// Run Newton on one site's residual
    Solve {
        function: String,
        #[arg(long)]
        site: usize,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        from: Vec<f64>,
        /// Which danger spec of the site's op, in catalog order
        #[arg(long, default_value_t = 0)]
        spec: usize,
        /// Write the iterate path as CSV
        #[arg(long, value_name = "PATH")]
        path: Option<PathBuf>,
    },
    /// Detect and confirm bugs in one function or `all`
    Detect { function: String },
    /// Compare binary64 with the oracle at one input
    Validate {
        function: String,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        input: Vec<f64>,
    },
    /// Print the danger catalog
    Catalog,
}

enum Failure {
    Usage(String),
    Bugs,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let shown = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{shown}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{shown}");
                EXIT_OK
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Bugs) => EXIT_BUGS,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn pipeline_config(g: &GlobalOpts) -> PipelineConfig {
    let mut cfg = PipelineConfig::with_seed(g.seed);
    if let Some(bits) = g.precision_bits {
        cfg.oracle.precision_bits = bits;
        cfg.oracle.max_precision_bits = cfg.oracle.max_precision_bits.max(bits);
    }
    if let Some(t) = g.cond_threshold {
        cfg.detection.cond_threshold = t;
        cfg.perturbation.cond_threshold = t;
    }
    if let Some(d) = g.delta {
        cfg.perturbation.delta = d;
    }
    if let Some(n) = g.max_iter {
        cfg.detection.solver.max_iter = n;
    }
    cfg
}

fn function(id: &str) -> Result<&'static CorpusFunction, Failure> {
    Ok(&lookup(id)?.function)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let cfg = pipeline_config(&cli.global);
    cfg.validate()?;
    match &cli.command {
        Command::List => list(out),
        Command::Catalog => catalog(&cfg, out),
        Command::Trace { function: id, input } => trace(function(id)?, input, cli.global.csv.as_deref(), out),
        Command::Targets { function: id, probe } => targets(function(id)?, probe, &cfg, out),
        Command::Solve {
            function: id,
            site,
            from,
            spec,
            path,
        } => {
            let path = path.as_deref().or(cli.global.csv.as_deref());
            solve(function(id)?, *site, *spec, from, &cfg, path, out)
        }
        Command::Detect { function } => detect(function, &cfg, &cli.global, out),
        Command::Validate { function: id, input } => validate(function(id)?, input, &cfg, out),
    }
}

fn list(out: &mut dyn Write) -> Outcome {
    let mut t = Table::new(["id", "arity", "domain", "formula", "known bug sites"]);
    for e in registry() {
        let f = &e.function;
        let domain: Vec<String> = f
            .domain
            .iter()
            .map(|d| format!("[{}, {}]", fmt_float(d.lo), fmt_float(d.hi)))
            .collect();
        let sites: Vec<String> = e.known_bug_sites.iter().map(|(s, why)| format!("#{s} {why}")).collect();
        t.row([
            f.id.to_string(),
            f.arity.to_string(),
            domain.join(" x "),
            f.formula.to_string(),
            sites.join("; "),
        ]);
    }
    t.write(out)?;
    Ok(())
}

fn catalog(cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let mut t = Table::new(["op", "danger targets", "condition number"]);
    for op in OpKind::ALL {
        let specs = cfg.detection.catalog.specs(op);
        let targets: Vec<String> = specs.iter().map(|s| s.target.to_string()).collect();
        let targets = if targets.is_empty() { "-".to_string() } else { targets.join(", ") };
        t.row([op.to_string(), targets, formula_text(op).to_string()]);
    }
    t.write(out)?;
    Ok(())
}

fn trace(f: &CorpusFunction, input: &[f64], csv: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let (_, trace) = evaluate_traced(f, input)?;
    trace.write_csv(&mut *out)?;
    if let Some(path) = csv {
        trace.write_csv(create(path)?)?;
    }
    Ok(())
}

fn targets(f: &CorpusFunction, probe: &[f64], cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let ts = fperr_core::targets::enumerate_targets_with(f, probe, &cfg.detection.catalog)?;
    let mut t = Table::new(["site", "op", "target"]);
    for target in &ts {
        t.row([target.site.index.to_string(), target.spec.op.to_string(), target.spec.target.to_string()]);
    }
    t.write(out)?;
    writeln!(out, "{} target(s)", ts.len())?;
    Ok(())
}

fn solve(
    f: &'static CorpusFunction,
    site: usize,
    spec: usize,
    from: &[f64],
    cfg: &PipelineConfig,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    f.check_arity(from.len())?;
    let table = site_table(f);
    let (id, op) = *table.get(site).ok_or(Error::NoSuchSite {
        function: f.id.to_string(),
        index: site,
    })?;
    let specs = cfg.detection.catalog.specs(op);
    let spec = *specs
        .get(spec)
        .ok_or_else(|| Failure::Usage(format!("{op} at {id} has {} danger spec(s), asked for #{spec}", specs.len())))?;
    let target = ResidualTarget { site: id, spec };
    let g = residual_fn(f, &target);
    let solver = &cfg.detection.solver;
    let outcome = if from.len() == 1 {
        newton_solve(|x| g(&[x]), from[0], solver)
    } else {
        newton_solve_multi(&g, from, solver)
    };
    writeln!(out, "target: {target}")?;
    let mut t = Table::new(["step", "x", "g"]);
    for (k, p) in outcome.path.iter().enumerate() {
        let x: Vec<String> = p.x.iter().map(|&v| fmt_float(v)).collect();
        t.row([k.to_string(), x.join(", "), fmt_float(p.g)]);
    }
    t.write(out)?;
    let root: Vec<String> = outcome.root.iter().map(|&v| fmt_float(v)).collect();
    writeln!(out, "status: {}", outcome.status)?;
    writeln!(out, "iterations: {}", outcome.iterations)?;
    writeln!(out, "root: {}", root.join(", "))?;
    writeln!(out, "residual: {}", fmt_float(outcome.residual()))?;
    if let Some(path) = path {
        outcome.write_path_csv(create(path)?)?;
    }
    Ok(())
}

fn detect(which: &str, cfg: &PipelineConfig, g: &GlobalOpts, out: &mut dyn Write) -> Outcome {
    let functions: Vec<&'static CorpusFunction> = if which == "all" {
        registry().iter().map(|e| &e.function).collect()
    } else {
        vec![function(which)?]
    };
    let start = Instant::now();
    let results = functions
        .into_iter()
        .map(|f| analyze(f, cfg))
        .collect::<Result<Vec<FunctionResult>, Error>>()?;
    let report = RunReport::new(cfg, &results, start.elapsed().as_secs_f64());

    let mut t = Table::new(["function", "site", "op", "witness", "cond", "perturbed err", "oracle err", "significant"]);
    for r in &report.results {
        for b in &r.bugs {
            let w: Vec<String> = b.witness.iter().map(|&v| fmt_float(v)).collect();
            t.row([
                r.function.clone(),
                b.site.to_string(),
                b.op.to_string(),
                w.join(", "),
                format!("{:.3e}", b.condition_number),
                format!("{:.3e}", b.perturbed_rel_error),
                format!("{:.3e}", b.oracle_rel_error),
                if b.significant { "yes" } else { "no" }.to_string(),
            ]);
        }
    }
    t.write(out)?;
    let mut s = Table::new(["function", "seeds", "solves", "converged", "dangerous", "candidates", "bugs"]);
    for r in &report.results {
        s.row([
            r.function.clone(),
            r.stats.seeds.to_string(),
            r.stats.solves.to_string(),
            r.stats.converged.to_string(),
            r.stats.dangerous.to_string(),
            r.candidates.len().to_string(),
            r.bugs.len().to_string(),
        ]);
    }
    writeln!(out)?;
    s.write(out)?;
    writeln!(
        out,
        "{} bug(s), seed {}, {:.3} s",
        report.bug_count(),
        cfg.detection.rng_seed,
        report.wall_times.total
    )?;

    if let Some(path) = &g.json {
        emit_report(&report, path, ReportFormat::Json)?;
    }
    if let Some(path) = &g.csv {
        emit_report(&report, path, ReportFormat::Csv)?;
    }
    if g.fail_on_bugs && report.bug_count() > 0 {
        return Err(Failure::Bugs);
    }
    Ok(())
}

fn validate(f: &CorpusFunction, input: &[f64], cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let c = compare_with_oracle(f, input, &cfg.oracle)?;
    let x: Vec<String> = input.iter().map(|&v| fmt_float(v)).collect();
    writeln!(out, "function:    {} = {}", f.id, f.formula)?;
    writeln!(out, "input:       {}", x.join(", "))?;
    let (_, trace) = evaluate_traced(f, input)?;
    for r in &trace.records {
        let ops: Vec<String> = r.operands.iter().map(|&v| fmt_float(v)).collect();
        writeln!(out, "  #{} {}({}) = {}", r.site.index, r.op, ops.join(", "), fmt_float(r.result))?;
    }
    writeln!(out, "double:      {}", fmt_float(c.double))?;
    writeln!(out, "oracle:      {}", c.reference_decimal(40))?;
    writeln!(out, "rel error:   {:.6e}", c.rel_error)?;
    writeln!(out, "significant: {}", if is_significant(c.rel_error) { "yes" } else { "no" })?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}
