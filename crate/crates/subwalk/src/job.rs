//! Batch jobs: a TOML config schema, whole-file validation that reports
//! every problem at once, and a runner that writes one row per (query
//! point, time) as CSV or JSON lines with deterministic bytes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::domain::DomainGeometry;
use crate::error::{Result, SolverError};
use crate::estimator::{elliptic_estimate, is_grid_multiple, parabolic_estimate, McConfig, PointEstimate};
use crate::path::DEFAULT_MAX_STEPS;
use crate::problem::{validate_alpha, ExactSolution, Forcing, ProblemSpec, ScalarField};
use crate::reference::{benchmark_catalog, BenchmarkKind};
use crate::rng::derive_seed;

/// Environment variable consulted for the worker count when neither the
/// config file nor a flag sets one.
pub const WORKERS_ENV: &str = "SUBWALK_WORKERS";

/// Result file format.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

/// A parsed job file. Field meanings are documented in the shipped config
/// schema; unknown keys are rejected at parse time.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub problem: ProblemConfig,
    pub query: QueryConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
}

/// Either a named catalog benchmark or an inline constant-data problem.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub benchmark: Option<String>,
    pub kind: Option<String>,
    pub alpha: Option<f64>,
    pub domain: Option<DomainConfig>,
    pub f_const: Option<f64>,
    pub g_const: Option<f64>,
    pub r_const: Option<f64>,
    pub exact_const: Option<f64>,
}

/// Exactly one of the three shapes must be set.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(rename = "box")]
    pub box_bounds: Option<BoxBounds>,
    pub interval: Option<IntervalBounds>,
    pub ball: Option<BallBounds>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalBounds {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallBounds {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Query geometry: explicit points, an equispaced segment, or both, plus a
/// time grid for time-dependent jobs.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub points: Option<Vec<Vec<f64>>>,
    pub segment: Option<SegmentConfig>,
    pub times: Option<TimesSpec>,
}

/// `count` equispaced points on the segment from `from` to `to`; with
/// endpoints included the spacing is `1/(count-1)`, otherwise the points
/// sit strictly inside at `k/(count+1)`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub count: usize,
    #[serde(default = "default_true")]
    pub include_endpoints: bool,
}

fn default_true() -> bool {
    true
}

/// Either an explicit list or an inclusive arithmetic grid.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum TimesSpec {
    List(Vec<f64>),
    Grid { start: f64, stop: f64, step: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_paths: u64,
    pub dt: f64,
    pub seed: u64,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Command-line values that take precedence over the job file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n_paths: Option<u64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl JobConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SolverError::InvalidConfig(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn apply_overrides(&mut self, ov: &Overrides) {
        if let Some(n) = ov.n_paths {
            self.run.n_paths = n;
        }
        if let Some(dt) = ov.dt {
            self.run.dt = dt;
        }
        if let Some(seed) = ov.seed {
            self.run.seed = seed;
        }
        if let Some(w) = ov.workers {
            self.run.workers = Some(w);
        }
        if let Some(out) = &ov.out {
            self.output.path = out.clone();
        }
        if let Some(fmt) = ov.format {
            self.output.format = fmt;
        }
    }
}

/// One validation failure, naming the offending config field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every invariant of the config and returns the full list of
/// violations (empty means the job is runnable). Never mutates and never
/// touches the filesystem or environment.
pub fn validate_config(cfg: &JobConfig) -> Vec<Violation> {
    resolve(cfg).1
}

struct ResolvedJob {
    problem: ProblemSpec,
    exact: Option<ExactSolution>,
    steady: bool,
    points: Vec<Vec<f64>>,
    times: Vec<f64>,
}

struct ProblemResolution {
    built: Option<(ProblemSpec, Option<ExactSolution>)>,
    steady: Option<bool>,
    domain: Option<DomainGeometry>,
}

fn const_field(c: f64) -> ScalarField {
    Arc::new(move |_: &[f64]| c)
}

fn build_domain(dc: &DomainConfig, v: &mut Vec<Violation>) -> Option<DomainGeometry> {
    let chosen =
        dc.box_bounds.is_some() as u8 + dc.interval.is_some() as u8 + dc.ball.is_some() as u8;
    if chosen != 1 {
        v.push(Violation::new(
            "problem.domain",
            "exactly one of box, interval, or ball must be given",
        ));
        return None;
    }
    let built = if let Some(b) = &dc.box_bounds {
        DomainGeometry::axis_box(b.min.clone(), b.max.clone())
    } else if let Some(i) = &dc.interval {
        DomainGeometry::interval(i.a, i.b)
    } else {
        let b = dc.ball.as_ref().expect("one variant is set");
        DomainGeometry::ball(b.center.clone(), b.radius)
    };
    match built {
        Ok(d) => Some(d),
        Err(e) => {
            v.push(Violation::new("problem.domain", e.to_string()));
            None
        }
    }
}

fn resolve_problem(pc: &ProblemConfig, v: &mut Vec<Violation>) -> ProblemResolution {
    let none = ProblemResolution { built: None, steady: None, domain: None };
    if let Some(name) = &pc.benchmark {
        let inline_used = pc.kind.is_some()
            || pc.alpha.is_some()
            || pc.domain.is_some()
            || pc.f_const.is_some()
            || pc.g_const.is_some()
            || pc.r_const.is_some()
            || pc.exact_const.is_some();
        if inline_used {
            v.push(Violation::new(
                "problem",
                "benchmark and inline problem fields are mutually exclusive",
            ));
            return none;
        }
        return match benchmark_catalog(name) {
            Ok(b) => {
                let steady = matches!(b.kind, BenchmarkKind::Elliptic);
                ProblemResolution {
                    domain: Some(b.problem.domain().clone()),
                    built: Some((b.problem, Some(b.exact))),
                    steady: Some(steady),
                }
            }
            Err(e) => {
                v.push(Violation::new("problem.benchmark", e.to_string()));
                none
            }
        };
    }

    let kind = match pc.kind.as_deref() {
        Some(k @ ("parabolic" | "elliptic" | "survival")) => Some(k),
        Some(other) => {
            v.push(Violation::new(
                "problem.kind",
                format!("unknown kind \"{other}\" (expected parabolic, elliptic, or survival)"),
            ));
            None
        }
        None => {
            v.push(Violation::new(
                "problem.kind",
                "required for inline problems (or set problem.benchmark)",
            ));
            None
        }
    };
    let alpha = match pc.alpha {
        Some(a) => match validate_alpha(a) {
            Ok(()) => Some(a),
            Err(e) => {
                v.push(Violation::new("problem.alpha", e.to_string()));
                None
            }
        },
        None => {
            v.push(Violation::new("problem.alpha", "required for inline problems"));
            None
        }
    };
    let domain = match &pc.domain {
        Some(dc) => build_domain(dc, v),
        None => {
            v.push(Violation::new("problem.domain", "required for inline problems"));
            None
        }
    };
    let steady = kind.map(|k| k == "elliptic");
    let (Some(kind), Some(alpha), Some(domain)) = (kind, alpha, domain.clone()) else {
        return ProblemResolution { built: None, steady, domain };
    };

    let before = v.len();
    let built = match kind {
        "survival" => {
            for (field, set) in [
                ("f_const", pc.f_const.is_some()),
                ("g_const", pc.g_const.is_some()),
                ("r_const", pc.r_const.is_some()),
                ("exact_const", pc.exact_const.is_some()),
            ] {
                if set {
                    v.push(Violation::new(
                        format!("problem.{field}"),
                        "survival jobs fix f = 1, g = 0, r = 0 and have no constant reference",
                    ));
                }
            }
            ProblemSpec::survival(alpha, domain.clone()).ok().map(|spec| (spec, None))
        }
        "elliptic" => {
            if pc.f_const.is_some() {
                v.push(Violation::new(
                    "problem.f_const",
                    "steady-state problems take no initial datum",
                ));
            }
            let g = pc.g_const.unwrap_or(0.0);
            let r = pc.r_const.unwrap_or(0.0);
            let forcing =
                if r == 0.0 { Forcing::Zero } else { Forcing::Stationary(const_field(r)) };
            let exact = pc.exact_const.map(|c| ExactSolution::Spatial(const_field(c)));
            ProblemSpec::new(alpha, domain.clone(), const_field(0.0), const_field(g), forcing)
                .ok()
                .map(|spec| (spec, exact))
        }
        _ => {
            let f = pc.f_const.unwrap_or(0.0);
            let g = pc.g_const.unwrap_or(0.0);
            let r = pc.r_const.unwrap_or(0.0);
            let forcing =
                if r == 0.0 { Forcing::Zero } else { Forcing::Stationary(const_field(r)) };
            let exact = pc.exact_const.map(|c| ExactSolution::Spatial(const_field(c)));
            ProblemSpec::new(alpha, domain.clone(), const_field(f), const_field(g), forcing)
                .ok()
                .map(|spec| {
                    let spec = if f == g { spec } else { spec.mark_boundary_incompatible() };
                    (spec, exact)
                })
        }
    };
    let built = if v.len() > before { None } else { built };
    ProblemResolution { built, steady, domain: Some(domain) }
}

fn expand_points(q: &QueryConfig, v: &mut Vec<Violation>) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    if let Some(pts) = &q.points {
        for (i, p) in pts.iter().enumerate() {
            out.push((format!("query.points[{i}]"), p.clone()));
        }
    }
    if let Some(seg) = &q.segment {
        if seg.from.len() != seg.to.len() {
            v.push(Violation::new(
                "query.segment",
                "from and to must have the same dimension",
            ));
        } else if seg.count == 0 {
            v.push(Violation::new("query.segment", "count must be at least 1"));
        } else if seg.include_endpoints && seg.count == 1 {
            v.push(Violation::new(
                "query.segment",
                "count must be at least 2 when endpoints are included",
            ));
        } else {
            for k in 0..seg.count {
                let s = if seg.include_endpoints {
                    k as f64 / (seg.count - 1) as f64
                } else {
                    (k + 1) as f64 / (seg.count + 1) as f64
                };
                let p: Vec<f64> =
                    seg.from.iter().zip(&seg.to).map(|(&a, &b)| a + s * (b - a)).collect();
                out.push((format!("query.segment[{k}]"), p));
            }
        }
    } else if out.is_empty() {
        v.push(Violation::new("query", "at least one query point is required"));
    }
    out
}

fn expand_times(spec: &Option<TimesSpec>, v: &mut Vec<Violation>) -> Vec<f64> {
    match spec {
        None => Vec::new(),
        Some(TimesSpec::List(ts)) => {
            for &t in ts {
                if !(t >= 0.0 && t.is_finite()) {
                    v.push(Violation::new(
                        "query.times",
                        format!("times must be nonnegative and finite, got {t}"),
                    ));
                }
            }
            ts.clone()
        }
        Some(TimesSpec::Grid { start, stop, step }) => {
            let ok = *start >= 0.0
                && start.is_finite()
                && *step > 0.0
                && step.is_finite()
                && *stop >= *start
                && stop.is_finite();
            if !ok {
                v.push(Violation::new(
                    "query.times",
                    format!(
                        "grid needs 0 <= start <= stop and step > 0, got start = {start}, \
                         stop = {stop}, step = {step}"
                    ),
                ));
                return Vec::new();
            }
            let mut ts = Vec::new();
            for k in 0.. {
                let t = start + k as f64 * step;
                if t > stop + 1e-9 * step {
                    break;
                }
                ts.push(t);
            }
            ts
        }
    }
}

fn resolve(cfg: &JobConfig) -> (Option<ResolvedJob>, Vec<Violation>) {
    let mut v = Vec::new();
    if cfg.run.n_paths == 0 {
        v.push(Violation::new("run.n_paths", "must be at least 1"));
    }
    let dt = cfg.run.dt;
    let dt_ok = dt > 0.0 && dt.is_finite();
    if !dt_ok {
        v.push(Violation::new("run.dt", format!("must be positive and finite, got {dt}")));
    }
    if cfg.run.workers == Some(0) {
        v.push(Violation::new("run.workers", "must be at least 1"));
    }
    if cfg.output.path.as_os_str().is_empty() {
        v.push(Violation::new("output.path", "must not be empty"));
    }

    let problem = resolve_problem(&cfg.problem, &mut v);
    let labeled = expand_points(&cfg.query, &mut v);
    let times = expand_times(&cfg.query.times, &mut v);

    if let Some(dom) = &problem.domain {
        for (label, p) in &labeled {
            match dom.closure_contains(p) {
                Ok(true) => {}
                Ok(false) => {
                    v.push(Violation::new(label.clone(), "query outside closure of domain"));
                }
                Err(e) => v.push(Violation::new(label.clone(), e.to_string())),
            }
        }
    }
    match problem.steady {
        Some(true) => {
            if !times.is_empty() {
                v.push(Violation::new("query.times", "steady-state jobs take no time grid"));
            }
        }
        Some(false) if times.is_empty() => {
            v.push(Violation::new(
                "query.times",
                "a time grid of dt multiples is required for this job",
            ));
        }
        _ => {}
    }
    if problem.steady != Some(true) && dt_ok {
        for &t in &times {
            if t >= 0.0 && t.is_finite() && !is_grid_multiple(t, dt) {
                v.push(Violation::new(
                    "query.times",
                    format!("time {t} is not a multiple of dt = {dt}"),
                ));
            }
        }
    }

    if !v.is_empty() {
        return (None, v);
    }
    let (spec, exact) = problem.built.expect("no violations implies a built problem");
    let steady = problem.steady.expect("no violations implies a known job kind");
    let points = labeled.into_iter().map(|(_, p)| p).collect();
    (Some(ResolvedJob { problem: spec, exact, steady, points, times }), v)
}

/// Where the results landed and how many rows were written.
#[derive(Clone, Debug)]
pub struct JobSummary {
    pub path: PathBuf,
    pub rows: u64,
}

/// Validates the config, estimates every (point, time) query, and writes
/// the result file. Rows are ordered by point, then by time. Identical
/// configs (including the seed) produce byte-identical files for any
/// worker count.
pub fn run_job(cfg: &JobConfig) -> Result<JobSummary> {
    let (job, violations) = resolve(cfg);
    if !violations.is_empty() {
        let msg =
            violations.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("\n");
        return Err(SolverError::InvalidConfig(msg));
    }
    let job = job.expect("no violations implies a resolved job");
    let workers = resolve_workers(cfg.run.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SolverError::InvalidParameter(format!("could not build the worker pool: {e}")))?;
    let rows = pool.install(|| collect_rows(cfg, &job))?;
    let text = match cfg.output.format {
        OutputFormat::Csv => render_csv(&rows, job.problem.domain().dim(), &cfg.run),
        OutputFormat::Jsonl => render_jsonl(&rows, &cfg.run),
    };
    if let Some(parent) = cfg.output.path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&cfg.output.path, text)?;
    Ok(JobSummary { path: cfg.output.path.clone(), rows: rows.len() as u64 })
}

/// Worker count precedence: config (already merged with any flag) first,
/// then the environment variable, then the library default (0 lets the
/// pool size itself).
fn resolve_workers(configured: Option<usize>) -> Result<usize> {
    if let Some(w) = configured {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w >= 1)
            .ok_or_else(|| {
                SolverError::InvalidConfig(format!(
                    "{WORKERS_ENV} must be a positive integer, got \"{s}\""
                ))
            }),
        Err(_) => Ok(0),
    }
}

struct Row {
    est: PointEstimate,
    exact: Option<f64>,
}

fn collect_rows(cfg: &JobConfig, job: &ResolvedJob) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (pi, point) in job.points.iter().enumerate() {
        let mc = McConfig {
            n_paths: cfg.run.n_paths,
            dt: cfg.run.dt,
            seed: derive_seed(cfg.run.seed, pi as u64),
            max_steps: DEFAULT_MAX_STEPS,
        };
        if job.steady {
            let est = elliptic_estimate(&job.problem, point, &mc)?;
            let exact = job.exact.as_ref().map(|e| e.eval(None, point)).transpose()?;
            rows.push(Row { est, exact });
        } else {
            for est in parabolic_estimate(&job.problem, point, &job.times, &mc)? {
                let exact = job.exact.as_ref().map(|e| e.eval(est.t, point)).transpose()?;
                rows.push(Row { est, exact });
            }
        }
    }
    Ok(rows)
}

/// 17 significant digits, enough to round-trip any f64 exactly.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn render_csv(rows: &[Row], dim: usize, run: &RunConfig) -> String {
    let has_exact = rows.iter().all(|r| r.exact.is_some()) && !rows.is_empty();
    let mut out = String::new();
    for i in 0..dim {
        out.push_str(&format!("x{i},"));
    }
    out.push_str("t,estimate,std_error,");
    if has_exact {
        out.push_str("exact,abs_error,");
    }
    out.push_str("n_paths,dt,seed\n");
    for row in rows {
        for c in &row.est.x {
            out.push_str(&fmt_float(*c));
            out.push(',');
        }
        if let Some(t) = row.est.t {
            out.push_str(&fmt_float(t));
        }
        out.push(',');
        out.push_str(&fmt_float(row.est.value));
        out.push(',');
        out.push_str(&fmt_float(row.est.std_error));
        out.push(',');
        if has_exact {
            let exact = row.exact.expect("reference rows carry a value");
            out.push_str(&fmt_float(exact));
            out.push(',');
            out.push_str(&fmt_float((row.est.value - exact).abs()));
            out.push(',');
        }
        out.push_str(&format!("{},{},{}\n", row.est.n_paths, fmt_float(run.dt), run.seed));
    }
    out
}

fn render_jsonl(rows: &[Row], run: &RunConfig) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str("{\"x\":[");
        for (i, c) in row.est.x.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_float(*c));
        }
        out.push_str("],\"t\":");
        match row.est.t {
            Some(t) => out.push_str(&fmt_float(t)),
            None => out.push_str("null"),
        }
        out.push_str(&format!(",\"estimate\":{}", fmt_float(row.est.value)));
        out.push_str(&format!(",\"std_error\":{}", fmt_float(row.est.std_error)));
        if let Some(exact) = row.exact {
            out.push_str(&format!(",\"exact\":{}", fmt_float(exact)));
            out.push_str(&format!(
                ",\"abs_error\":{}",
                fmt_float((row.est.value - exact).abs())
            ));
        }
        out.push_str(&format!(
            ",\"n_paths\":{},\"dt\":{},\"seed\":{}}}\n",
            row.est.n_paths,
            fmt_float(run.dt),
            run.seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn violations(toml_text: &str) -> Vec<Violation> {
        validate_config(&JobConfig::from_toml_str(toml_text).unwrap())
    }

    fn benchmark_job(out: &str) -> String {
        format!(
            r#"
[problem]
benchmark = "square_elliptic"

[query]
points = [[0.25, 0.5], [0.5, 0.5]]

[run]
n_paths = 300
dt = 1e-3
seed = 7

[output]
path = "{out}"
"#
        )
    }

    #[test]
    fn benchmark_jobs_parse_and_validate_cleanly() {
        let cfg = JobConfig::from_toml_str(&benchmark_job("out.csv")).unwrap();
        assert!(validate_config(&cfg).is_empty());
        assert_eq!(cfg.output.format, OutputFormat::Csv);
        assert_eq!(cfg.run.workers, None);
    }

    #[test]
    fn unknown_keys_are_rejected_at_parse_time() {
        let text = benchmark_job("out.csv").replace("[run]", "[run]\nn_pths = 3");
        let err = JobConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, SolverError::InvalidConfig(_)));
    }

    #[test]
    fn violation_messages_match_the_documented_phrasings() {
        let v = violations(
            r#"
[problem]
kind = "parabolic"
alpha = 2.0
[problem.domain]
box = { min = [0.0, 0.0], max = [1.0, 1.0] }

[query]
points = [[1.2, 0.5]]
times = [0.00015]

[run]
n_paths = 100
dt = 1e-4
seed = 1

[output]
path = "x.csv"
"#,
        );
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v.iter().any(|x| x.field == "problem.alpha"
            && x.message.contains("alpha must lie in (0,2)")));
        assert!(v.iter().any(|x| x.field == "query.points[0]"
            && x.message == "query outside closure of domain"));
        assert!(v.iter().any(|x| x.field == "query.times"
            && x.message.contains("not a multiple of dt")));
    }

    #[test]
    fn benchmark_and_inline_fields_are_exclusive() {
        let v = violations(
            r#"
[problem]
benchmark = "square_elliptic"
alpha = 1.5

[query]
points = [[0.5, 0.5]]

[run]
n_paths = 10
dt = 1e-3
seed = 0

[output]
path = "x.csv"
"#,
        );
        assert!(v.iter().any(|x| x.field == "problem" && x.message.contains("mutually exclusive")));
    }

    #[test]
    fn unknown_benchmarks_and_bad_run_blocks_are_reported_together() {
        let v = violations(
            r#"
[problem]
benchmark = "pentagon_elliptic"

[query]
points = []

[run]
n_paths = 0
dt = 0.0
seed = 0
workers = 0

[output]
path = ""
"#,
        );
        let fields: Vec<&str> = v.iter().map(|x| x.field.as_str()).collect();
        for expected in
            ["problem.benchmark", "query", "run.n_paths", "run.dt", "run.workers", "output.path"]
        {
            assert!(fields.contains(&expected), "missing {expected} in {fields:?}");
        }
        assert!(v
            .iter()
            .any(|x| x.field == "problem.benchmark" && x.message.contains("unknown benchmark")));
    }

    #[test]
    fn domains_require_exactly_one_shape() {
        let none = violations(
            r#"
[problem]
kind = "survival"
alpha = 1.0
[problem.domain]

[query]
points = [[0.5]]
times = [0.01]

[run]
n_paths = 10
dt = 1e-2
seed = 0

[output]
path = "x.csv"
"#,
        );
        assert!(none.iter().any(|x| x.field == "problem.domain"
            && x.message.contains("exactly one of box, interval, or ball")));
        let two = violations(
            r#"
[problem]
kind = "survival"
alpha = 1.0
[problem.domain]
interval = { a = 0.0, b = 1.0 }
ball = { center = [0.0], radius = 1.0 }

[query]
points = [[0.5]]
times = [0.01]

[run]
n_paths = 10
dt = 1e-2
seed = 0

[output]
path = "x.csv"
"#,
        );
        assert!(two.iter().any(|x| x.field == "problem.domain"
            && x.message.contains("exactly one of box, interval, or ball")));
    }

    #[test]
    fn time_grids_are_required_only_for_time_dependent_jobs() {
        let steady_with_times = violations(
            r#"
[problem]
kind = "elliptic"
alpha = 1.0
g_const = 1.0
[problem.domain]
interval = { a = 0.0, b = 1.0 }

[query]
points = [[0.5]]
times = [0.01]

[run]
n_paths = 10
dt = 1e-2
seed = 0

[output]
path = "x.csv"
"#,
        );
        assert!(steady_with_times
            .iter()
            .any(|x| x.field == "query.times" && x.message.contains("no time grid")));
        let parabolic_without = violations(
            r#"
[problem]
kind = "parabolic"
alpha = 1.0
[problem.domain]
interval = { a = 0.0, b = 1.0 }

[query]
points = [[0.5]]

[run]
n_paths = 10
dt = 1e-2
seed = 0

[output]
path = "x.csv"
"#,
        );
        assert!(parabolic_without
            .iter()
            .any(|x| x.field == "query.times" && x.message.contains("required")));
    }

    #[test]
    fn survival_jobs_reject_data_constants() {
        let v = violations(
            r#"
[problem]
kind = "survival"
alpha = 1.0
f_const = 1.0
[problem.domain]
interval = { a = 0.0, b = 1.0 }

[query]
points = [[0.5]]
times = [0.01]

[run]
n_paths = 10
dt = 1e-2
seed = 0

[output]
path = "x.csv"
"#,
        );
        assert!(v.iter().any(|x| x.field == "problem.f_const"));
    }

    #[test]
    fn segments_expand_to_equispaced_points() {
        let mut v = Vec::new();
        let q = QueryConfig {
            points: None,
            segment: Some(SegmentConfig {
                from: vec![0.0, 0.0],
                to: vec![1.0, 1.0],
                count: 3,
                include_endpoints: true,
            }),
            times: None,
        };
        let pts = expand_points(&q, &mut v);
        assert!(v.is_empty());
        assert_eq!(
            pts.iter().map(|(_, p)| p.clone()).collect::<Vec<_>>(),
            vec![vec![0.0, 0.0], vec![0.5, 0.5], vec![1.0, 1.0]]
        );
        let q_inner = QueryConfig {
            points: None,
            segment: Some(SegmentConfig {
                from: vec![0.0],
                to: vec![1.0],
                count: 3,
                include_endpoints: false,
            }),
            times: None,
        };
        let pts = expand_points(&q_inner, &mut v);
        assert_eq!(
            pts.iter().map(|(_, p)| p.clone()).collect::<Vec<_>>(),
            vec![vec![0.25], vec![0.5], vec![0.75]]
        );
    }

    #[test]
    fn time_grids_expand_inclusively() {
        let mut v = Vec::new();
        let ts = expand_times(
            &Some(TimesSpec::Grid { start: 0.0, stop: 0.5, step: 0.1 }),
            &mut v,
        );
        assert!(v.is_empty());
        assert_eq!(ts.len(), 6);
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 0.5);
    }

    #[test]
    fn constant_problems_report_zero_error_in_every_row() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("rows.csv");
        let text = format!(
            r#"
[problem]
kind = "parabolic"
alpha = 1.5
f_const = 3.25
g_const = 3.25
exact_const = 3.25
[problem.domain]
box = {{ min = [0.0, 0.0], max = [1.0, 1.0] }}

[query]
points = [[0.25, 0.5], [0.75, 0.5]]
times = [0.0, 0.02]

[run]
n_paths = 50
dt = 1e-2
seed = 3

[output]
path = "{}"
"#,
            out.display()
        );
        let cfg = JobConfig::from_toml_str(&text).unwrap();
        let summary = run_job(&cfg).unwrap();
        assert_eq!(summary.rows, 4);
        let body = fs::read_to_string(&out).unwrap();
        let mut lines = body.lines();
        assert_eq!(
            lines.next().unwrap(),
            "x0,x1,t,estimate,std_error,exact,abs_error,n_paths,dt,seed"
        );
        let zero = fmt_float(0.0);
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 10);
            assert_eq!(cols[3], fmt_float(3.25));
            assert_eq!(cols[6], zero, "abs_error nonzero in {line}");
            assert_eq!(cols[7], "50");
            assert_eq!(cols[9], "3");
        }
    }

    #[test]
    fn reruns_are_byte_identical_for_any_worker_count() {
        let dir = tempdir().unwrap();
        let out_a = dir.path().join("a.csv");
        let out_b = dir.path().join("b.csv");
        let mut cfg = JobConfig::from_toml_str(&benchmark_job(&out_a.display().to_string()))
            .unwrap();
        cfg.run.workers = Some(1);
        run_job(&cfg).unwrap();
        cfg.run.workers = Some(3);
        cfg.output.path = out_b.clone();
        run_job(&cfg).unwrap();
        let a = fs::read(&out_a).unwrap();
        let b = fs::read(&out_b).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    #[test]
    fn jsonl_rows_are_valid_json_with_null_steady_times() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("rows.jsonl");
        let mut cfg =
            JobConfig::from_toml_str(&benchmark_job(&out.display().to_string())).unwrap();
        cfg.output.format = OutputFormat::Jsonl;
        let summary = run_job(&cfg).unwrap();
        assert_eq!(summary.rows, 2);
        let body = fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.len(), 2);
        for line in lines {
            let row: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(row["t"].is_null());
            assert_eq!(row["x"].as_array().unwrap().len(), 2);
            assert!(row["estimate"].is_f64());
            assert!(row["std_error"].is_f64());
            assert!(row["exact"].is_f64());
            assert!(row["abs_error"].is_f64());
            assert_eq!(row["n_paths"].as_u64(), Some(300));
            assert_eq!(row["seed"].as_u64(), Some(7));
        }
    }

    #[test]
    fn survival_rows_omit_reference_columns() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("rows.csv");
        let text = format!(
            r#"
[problem]
kind = "survival"
alpha = 1.3
[problem.domain]
interval = {{ a = 0.0, b = 1.0 }}

[query]
points = [[0.5]]
times = {{ start = 0.0, stop = 0.1, step = 0.05 }}

[run]
n_paths = 40
dt = 1e-2
seed = 5

[output]
path = "{}"
"#,
            out.display()
        );
        let cfg = JobConfig::from_toml_str(&text).unwrap();
        let summary = run_job(&cfg).unwrap();
        assert_eq!(summary.rows, 3);
        let body = fs::read_to_string(&out).unwrap();
        assert_eq!(
            body.lines().next().unwrap(),
            "x0,t,estimate,std_error,n_paths,dt,seed"
        );
    }

    #[test]
    fn invalid_configs_fail_run_job_with_every_violation_listed() {
        let mut cfg = JobConfig::from_toml_str(&benchmark_job("out.csv")).unwrap();
        cfg.query.points = Some(vec![vec![1.2, 0.5], vec![-0.1, 0.5]]);
        let err = run_job(&cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("invalid job configuration"), "{msg}");
        assert!(msg.contains("query.points[0]"), "{msg}");
        assert!(msg.contains("query.points[1]"), "{msg}");
    }

    #[test]
    fn overrides_take_precedence_over_the_file() {
        let mut cfg = JobConfig::from_toml_str(&benchmark_job("out.csv")).unwrap();
        cfg.apply_overrides(&Overrides {
            n_paths: Some(77),
            dt: Some(5e-4),
            seed: Some(99),
            workers: Some(2),
            out: Some(PathBuf::from("elsewhere.jsonl")),
            format: Some(OutputFormat::Jsonl),
        });
        assert_eq!(cfg.run.n_paths, 77);
        assert_eq!(cfg.run.dt, 5e-4);
        assert_eq!(cfg.run.seed, 99);
        assert_eq!(cfg.run.workers, Some(2));
        assert_eq!(cfg.output.path, PathBuf::from("elsewhere.jsonl"));
        assert_eq!(cfg.output.format, OutputFormat::Jsonl);
    }

    #[test]
    fn job_files_load_from_disk_and_missing_files_are_io_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("job.toml");
        fs::write(&path, benchmark_job("out.csv")).unwrap();
        let cfg = JobConfig::from_path(&path).unwrap();
        assert_eq!(cfg.run.n_paths, 300);
        let missing = JobConfig::from_path(&dir.path().join("absent.toml")).unwrap_err();
        assert!(matches!(missing, SolverError::Io(_)));
    }
}
