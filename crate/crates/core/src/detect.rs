//! The end-to-end search: seed, enumerate targets, solve, confirm, dedup.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::condition::{condition_number, Catalog, DEFAULT_COND_THRESHOLD};
use crate::corpus::{CorpusFunction, Interval};
use crate::error::{Error, Result};
use crate::filter::{confirm_site, BugRecord, PerturbationConfig};
use crate::newton::{newton_solve, newton_solve_multi, SolveOutcome, SolveStatus, SolverConfig};
use crate::oracle::OracleConfig;
use crate::targets::{enumerate_targets_lenient, residual, residual_fn, ResidualTarget};
use crate::trace::{evaluate_plain, evaluate_traced};

/// Positive endpoints of the default partition, including 0. The outermost
/// endpoint, 1.8e308, exceeds the largest double and is stored as infinity,
/// which is what the decimal literal rounds to.
pub const POSITIVE_ENDPOINTS: [f64; 17] = [
    0.0, 1e-100, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 1e5, 1e8, 1e11, 1e14, 1e17, 1e20, f64::INFINITY,
];

/// Upper bound on the number of lattice seeds for multi-input functions.
pub const MAX_LATTICE_SEEDS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    #[serde(with = "crate::report::float_vec")]
    pub endpoints: Vec<f64>,
}

impl IntervalPartition {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    pub fn new(endpoints: Vec<f64>) -> Result<Self> {
        if endpoints.len() < 2 || endpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("partition endpoints must be strictly increasing".into()));
        }
        Ok(IntervalPartition { endpoints })
    }

    pub fn len(&self) -> usize {
        self.endpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.endpoints[i], self.endpoints[i + 1])
    }
}

impl Default for IntervalPartition {
    fn default() -> Self {
        default_partition()
    }
}

/// 33 endpoints, 32 intervals, symmetric about 0.
pub fn default_partition() -> IntervalPartition {
    let mut endpoints: Vec<f64> = POSITIVE_ENDPOINTS[1..].iter().rev().map(|v| -v).collect();
    endpoints.extend_from_slice(&POSITIVE_ENDPOINTS);
    IntervalPartition { endpoints }
}

fn clamp_finite(v: f64) -> f64 {
    v.clamp(-f64::MAX, f64::MAX)
}

/// One double strictly inside `(lo, hi)`, or `None` if there is none.
///
/// Same-sign intervals spanning more than two decades are sampled
/// log-uniformly in magnitude, everything else uniformly.
fn sample_open(lo: f64, hi: f64, rng: &mut impl Rng) -> Option<f64> {
    let (a, b) = (clamp_finite(lo), clamp_finite(hi));
    if a.next_up() >= b {
        return None;
    }
    let same_sign = (a >= 0.0 && b > 0.0) || (a < 0.0 && b <= 0.0);
    let (ma, mb) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
    let log_uniform = same_sign && ma > 0.0 && mb / ma > 100.0;
    for _ in 0..64 {
        let u: f64 = rng.random();
        let x = if log_uniform {
            let m = (ma.ln() + u * (mb.ln() - ma.ln())).exp();
            if a < 0.0 {
                -m
            } else {
                m
            }
        } else {
            // halves keep b - a from overflowing
            2.0 * (0.5 * a + u * (0.5 * b - 0.5 * a))
        };
        if a < x && x < b && x.is_finite() {
            return Some(x);
        }
    }
    Some(0.5 * a + 0.5 * b).filter(|&m| a < m && m < b)
}

/// One point strictly inside each interval of `p`, deterministic in `seed`.
pub fn sample_initial_points(p: &IntervalPartition, seed: u64) -> Vec<f64> {
    seeds_1d(p, &Interval::new(f64::NEG_INFINITY, f64::INFINITY), seed)
}

/// Interval `i` of `p` clipped to `domain`, open at the partition ends.
fn clip(p: &IntervalPartition, i: usize, domain: &Interval) -> Option<(f64, f64)> {
    let (lo, hi) = p.interval(i);
    let lo = lo.max(domain.lo.next_down());
    let hi = hi.min(domain.hi.next_up());
    (lo < hi).then_some((lo, hi))
}

/// Seeds for a one-input function: one per partition interval that meets
/// the domain. Every interval draws from the generator, so the points for
/// shared intervals do not depend on the domain.
fn seeds_1d(p: &IntervalPartition, domain: &Interval, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..p.len() {
        let mut sub = rng.clone();
        rng.random::<u64>();
        if let Some((lo, hi)) = clip(p, i, domain) {
            if let Some(x) = sample_open(lo, hi, &mut sub) {
                out.push(x);
            }
        }
    }
    out
}

/// `k` samples along one axis: the partition is cut into `k` runs of
/// adjacent intervals, one interval is picked from each run and sampled.
fn axis_samples(p: &IntervalPartition, domain: &Interval, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = p.len();
    let k = k.clamp(1, n);
    let mut out = Vec::new();
    for j in 0..k {
        let (start, end) = (j * n / k, (j + 1) * n / k);
        let usable: Vec<_> = (start..end).filter_map(|i| clip(p, i, domain)).collect();
        if usable.is_empty() {
            continue;
        }
        let (lo, hi) = usable[rng.random_range(0..usable.len())];
        if let Some(x) = sample_open(lo, hi, rng) {
            out.push(x);
        }
    }
    out
}

/// Cross product of per-axis samples, capped at [`MAX_LATTICE_SEEDS`].
fn seeds_lattice(p: &IntervalPartition, domain: &[Interval], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes: Vec<Vec<f64>> = domain.iter().map(|d| axis_samples(p, d, k, &mut rng)).collect();
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut q = prefix.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    if points.len() > MAX_LATTICE_SEEDS {
        let mut keep = rand::seq::index::sample(&mut rng, points.len(), MAX_LATTICE_SEEDS).into_vec();
        keep.sort_unstable();
        points = keep.into_iter().map(|i| points[i].clone()).collect();
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub partition: IntervalPartition,
    pub rng_seed: u64,
    pub solver: SolverConfig,
    pub cond_threshold: f64,
    pub multi_input_seeds_per_dim: usize,
    pub catalog: Catalog,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            partition: default_partition(),
            rng_seed: 0,
            solver: SolverConfig::default(),
            cond_threshold: DEFAULT_COND_THRESHOLD,
            multi_input_seeds_per_dim: 4,
            catalog: Catalog::default(),
        }
    }
}

impl DetectionConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.cond_threshold > 0.0) {
            return Err(Error::InvalidConfig("cond_threshold must be positive".into()));
        }
        if self.multi_input_seeds_per_dim == 0 {
            return Err(Error::InvalidConfig("multi_input_seeds_per_dim must be at least 1".into()));
        }
        IntervalPartition::new(self.partition.endpoints.clone()).map(|_| ())
    }
}

/// Initial points `detect` uses for `f`.
pub fn initial_points(f: &CorpusFunction, cfg: &DetectionConfig) -> Vec<Vec<f64>> {
    if f.arity == 1 {
        seeds_1d(&cfg.partition, &f.domain[0], cfg.rng_seed)
            .into_iter()
            .map(|x| vec![x])
            .collect()
    } else {
        seeds_lattice(&cfg.partition, f.domain, cfg.multi_input_seeds_per_dim, cfg.rng_seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateInput {
    pub target: ResidualTarget,
    pub seed: Vec<f64>,
    pub witness: Vec<f64>,
    pub residual_at_witness: f64,
    pub solve: SolveOutcome,
}

impl CandidateInput {
    pub fn function_id(&self) -> &'static str {
        self.target.site.function
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub seeds: usize,
    pub targets: usize,
    pub solves: usize,
    pub converged: usize,
    pub flat_derivative: usize,
    pub small_step: usize,
    pub max_iterations: usize,
    pub diverged: usize,
    /// Converged witnesses moved to a neighbouring double because the
    /// routine itself faults at the solver's root.
    pub nudged: usize,
    /// Converged roots outside the function's declared domain, dropped.
    pub out_of_domain: usize,
    /// Converged candidates whose site is above the condition threshold.
    pub dangerous: usize,
}

impl DetectionStats {
    fn tally(&mut self, status: SolveStatus) {
        self.solves += 1;
        match status {
            SolveStatus::ConvergedResidual => self.converged += 1,
            SolveStatus::StoppedFlatDerivative => self.flat_derivative += 1,
            SolveStatus::StoppedSmallStep => self.small_step += 1,
            SolveStatus::MaxIterations => self.max_iterations += 1,
            SolveStatus::Diverged => self.diverged += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub candidates: Vec<CandidateInput>,
    pub stats: DetectionStats,
}

fn solve_target(f: &CorpusFunction, t: &ResidualTarget, x0: &[f64], cfg: &SolverConfig) -> SolveOutcome {
    let g = residual_fn(f, t);
    if x0.len() == 1 {
        newton_solve(|x| g(&[x]), x0[0], cfg)
    } else {
        newton_solve_multi(g, x0, cfg)
    }
}

/// When the routine faults at the solver's root (for instance `0/0` exactly
/// at the singular point), tries the neighbouring doubles of every
/// coordinate for one where it runs and the residual still converges.
fn settle_witness(f: &CorpusFunction, t: &ResidualTarget, root: &[f64], tol_f: f64) -> Option<(Vec<f64>, bool)> {
    let ok = |x: &[f64]| {
        evaluate_plain(f, x).is_ok()
            && residual(f, t, x).is_ok_and(|r| r.site_executed && r.value.abs() < tol_f)
    };
    if evaluate_plain(f, root).is_ok() {
        return Some((root.to_vec(), false));
    }
    for i in 0..root.len() {
        for step in [f64::next_up, f64::next_down] {
            let mut x = root.to_vec();
            x[i] = step(x[i]);
            if ok(&x) {
                return Some((x, true));
            }
        }
    }
    None
}

enum JobOutcome {
    Unsolved,
    OutOfDomain,
    Unsettled,
    Found(CandidateInput, bool),
}

fn run_job(f: &CorpusFunction, t: &ResidualTarget, seed: &[f64], cfg: &DetectionConfig) -> (SolveStatus, JobOutcome) {
    let solve = solve_target(f, t, seed, &cfg.solver);
    let status = solve.status;
    if !status.converged() {
        return (status, JobOutcome::Unsolved);
    }
    if !f.in_domain(&solve.root) {
        return (status, JobOutcome::OutOfDomain);
    }
    let Some((witness, nudged)) = settle_witness(f, t, &solve.root, cfg.solver.tol_f) else {
        return (status, JobOutcome::Unsettled);
    };
    let residual_at_witness = residual(f, t, &witness).map_or(f64::NAN, |r| r.value);
    let cand = CandidateInput {
        target: *t,
        seed: seed.to_vec(),
        witness,
        residual_at_witness,
        solve,
    };
    (status, JobOutcome::Found(cand, nudged))
}

#[cfg(feature = "parallel")]
fn map_jobs<J: Sync, R: Send>(jobs: &[J], work: impl Fn(&J) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    jobs.par_iter().map(work).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_jobs<J, R>(jobs: &[J], work: impl Fn(&J) -> R) -> Vec<R> {
    jobs.iter().map(work).collect()
}

fn site_condition(f: &CorpusFunction, c: &CandidateInput) -> f64 {
    evaluate_traced(f, &c.witness)
        .ok()
        .and_then(|(_, tr)| tr.record_at(c.target.site.index).and_then(|r| condition_number(r).ok()))
        .unwrap_or(f64::NAN)
}

/// Seeds, enumerates targets per seed, and solves every (seed, target) pair.
/// Returns converged candidates in (seed, target) order.
pub fn detect(f: &CorpusFunction, cfg: &DetectionConfig) -> Result<Detection> {
    cfg.validate()?;
    let start = Instant::now();
    let mut stats = DetectionStats::default();
    let seeds = initial_points(f, cfg);
    stats.seeds = seeds.len();

    let mut jobs = Vec::new();
    for seed in &seeds {
        let targets = enumerate_targets_lenient(f, seed, &cfg.catalog)?;
        stats.targets += targets.len();
        jobs.extend(targets.into_iter().map(|t| (seed.clone(), t)));
    }

    let results = map_jobs(&jobs, |(seed, t)| run_job(f, t, seed, cfg));
    let mut candidates = Vec::new();
    for (status, outcome) in results {
        stats.tally(status);
        match outcome {
            JobOutcome::Found(cand, nudged) => {
                stats.nudged += usize::from(nudged);
                if site_condition(f, &cand) > cfg.cond_threshold {
                    stats.dangerous += 1;
                }
                candidates.push(cand);
            }
            JobOutcome::OutOfDomain => stats.out_of_domain += 1,
            JobOutcome::Unsolved | JobOutcome::Unsettled => {}
        }
    }
    log::debug!(
        "{}: {} candidates from {} solves in {:.3}s",
        f.id,
        candidates.len(),
        stats.solves,
        start.elapsed().as_secs_f64()
    );
    Ok(Detection { candidates, stats })
}

/// Confirms every distinct (site, witness) among `cands`, in first-seen order.
pub fn confirm_all(
    f: &CorpusFunction,
    cands: &[CandidateInput],
    pcfg: &PerturbationConfig,
    ocfg: &OracleConfig,
) -> Vec<BugRecord> {
    let mut seen = std::collections::HashSet::new();
    let unique: Vec<&CandidateInput> = cands
        .iter()
        .filter(|c| {
            let key = (c.target.site, c.witness.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            seen.insert(key)
        })
        .collect();
    map_jobs(&unique, |c| {
        confirm_site(f, c.target.site, c.target.spec.op, &c.witness, pcfg, ocfg)
    })
}

fn rank(err: f64) -> f64 {
    if err.is_nan() {
        f64::NEG_INFINITY
    } else {
        err
    }
}

/// One confirmed record per site, the one with the largest oracle error
/// (earliest on ties), ordered by site.
pub fn dedup_bugs(verdicts: &[BugRecord]) -> Vec<BugRecord> {
    let mut best: BTreeMap<_, &BugRecord> = BTreeMap::new();
    for v in verdicts.iter().filter(|v| v.confirmed) {
        best.entry(v.site)
            .and_modify(|b| {
                if rank(v.oracle_rel_error) > rank(b.oracle_rel_error) {
                    *b = v;
                }
            })
            .or_insert(v);
    }
    best.into_values().cloned().collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub detection: DetectionConfig,
    pub perturbation: PerturbationConfig,
    pub oracle: OracleConfig,
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        let mut cfg = PipelineConfig::default();
        cfg.detection.rng_seed = seed;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.detection.validate()?;
        self.perturbation.validate()?;
        self.oracle.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionResult {
    pub function: &'static str,
    pub candidates: Vec<CandidateInput>,
    pub verdicts: Vec<BugRecord>,
    pub bugs: Vec<BugRecord>,
    pub stats: DetectionStats,
    pub detect_seconds: f64,
    pub confirm_seconds: f64,
}

/// Detection, confirmation and dedup for one function.
pub fn analyze(f: &CorpusFunction, cfg: &PipelineConfig) -> Result<FunctionResult> {
    cfg.validate()?;
    let t0 = Instant::now();
    let detection = detect(f, &cfg.detection)?;
    let detect_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let verdicts = confirm_all(f, &detection.candidates, &cfg.perturbation, &cfg.oracle);
    let bugs = dedup_bugs(&verdicts);
    Ok(FunctionResult {
        function: f.id,
        candidates: detection.candidates,
        verdicts,
        bugs,
        stats: detection.stats,
        detect_seconds,
        confirm_seconds: t1.elapsed().as_secs_f64(),
    })
}
