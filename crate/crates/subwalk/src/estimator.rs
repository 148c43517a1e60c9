//! Monte Carlo estimators for the time-dependent, steady-state, and
//! survival problems, plus convergence sweeps against reference solutions.
//!
//! Paths are simulated independently, one RNG stream per path index, and
//! reduced in fixed batch order so results are bitwise identical for any
//! worker count.

use rayon::prelude::*;

use crate::domain::DomainGeometry;
use crate::error::{Result, SolverError};
use crate::path::{
    generate_stopped_path, generate_subordinator, subordinate, DEFAULT_MAX_STEPS,
};
use crate::problem::{ExactSolution, Forcing, ProblemSpec};
use crate::rng::{derive_seed, RngStream};

/// Paths per reduction batch. Fixing the batch size (rather than deriving
/// it from the worker count) keeps the reduction tree, and therefore every
/// floating-point result, independent of parallelism.
const BATCH_SIZE: u64 = 256;

/// Simulation budget for one estimator call.
#[derive(Clone, Debug)]
pub struct McConfig {
    pub n_paths: u64,
    pub dt: f64,
    pub seed: u64,
    pub max_steps: u64,
}

impl McConfig {
    pub fn new(n_paths: u64, dt: f64, seed: u64) -> Self {
        Self { n_paths, dt, seed, max_steps: DEFAULT_MAX_STEPS }
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }
}

/// One Monte Carlo answer: sample mean over paths and its standard error
/// (sample standard deviation over sqrt of the path count).
#[derive(Clone, Debug)]
pub struct PointEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub dt: f64,
    /// Query time; absent for steady-state estimates.
    pub t: Option<f64>,
    pub x: Vec<f64>,
}

/// Streaming mean and scaled variance (Welford update, Chan merge). For
/// bit-identical per-path values the spread term stays exactly zero.
#[derive(Clone)]
struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    fn new() -> Self {
        Self { n: 0, mean: 0.0, m2: 0.0 }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.n += other.n;
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / ((self.n - 1) as f64 * self.n as f64)).sqrt()
    }
}

fn validate_mc(cfg: &McConfig) -> Result<()> {
    if cfg.n_paths == 0 {
        return Err(SolverError::InvalidParameter(
            "n_paths must be at least 1".to_string(),
        ));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "dt must be positive and finite, got {}",
            cfg.dt
        )));
    }
    if cfg.max_steps == 0 {
        return Err(SolverError::InvalidParameter(
            "max_steps must be at least 1".to_string(),
        ));
    }
    Ok(())
}

enum QuerySite {
    Interior,
    Boundary,
}

fn classify_query(dom: &DomainGeometry, x: &[f64]) -> Result<QuerySite> {
    if dom.contains(x)? {
        Ok(QuerySite::Interior)
    } else if dom.closure_contains(x)? {
        Ok(QuerySite::Boundary)
    } else {
        Err(SolverError::InvalidParameter(format!(
            "query point {x:?} lies outside the closure of the domain"
        )))
    }
}

/// True when `t` sits on the grid `{0, dt, 2 dt, ...}` up to float rounding.
pub(crate) fn is_grid_multiple(t: f64, dt: f64) -> bool {
    let ratio = t / dt;
    (ratio - ratio.round()).abs() <= 1e-9 + 1e-12 * ratio
}

/// Grid index of a query time, required to be a nonnegative multiple of
/// `dt` up to float rounding.
fn time_to_step(t: f64, dt: f64) -> Result<usize> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "query times must be nonnegative and finite, got {t}"
        )));
    }
    if !is_grid_multiple(t, dt) {
        return Err(SolverError::InvalidParameter(format!(
            "query time {t} is not a multiple of dt = {dt}"
        )));
    }
    Ok((t / dt).round() as usize)
}

/// Runs `per_path` for path indices `0..cfg.n_paths` in fixed-size batches
/// and merges the per-slot moments in batch order. The partition and the
/// merge order depend only on the path count, so any worker count produces
/// identical floating-point results.
fn accumulate_paths<F>(cfg: &McConfig, n_slots: usize, per_path: F) -> Result<Vec<RunningMoments>>
where
    F: Fn(u64, &mut [f64]) -> Result<()> + Sync,
{
    let n_batches = cfg.n_paths.div_ceil(BATCH_SIZE);
    let batches: Vec<Result<Vec<RunningMoments>>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH_SIZE;
            let hi = (lo + BATCH_SIZE).min(cfg.n_paths);
            let mut acc = vec![RunningMoments::new(); n_slots];
            let mut slots = vec![0.0; n_slots];
            for p in lo..hi {
                per_path(p, &mut slots)?;
                for (a, &v) in acc.iter_mut().zip(slots.iter()) {
                    a.push(v);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![RunningMoments::new(); n_slots];
    for batch in batches {
        let batch = batch?;
        for (t, a) in total.iter_mut().zip(&batch) {
            t.merge(a);
        }
    }
    Ok(total)
}

/// Estimates the time-dependent solution at one spatial point and several
/// query times (each a multiple of `dt`, in any order).
///
/// Each path contributes, at time index `N`: the initial datum at the
/// subordinated position while the clock is before the exit time, the
/// boundary datum at the absorbed position afterwards, plus `dt` times the
/// forcing summed over subordinated steps `1..=min(N, M)` where `M` is the
/// absorption step. The forcing sum stops growing once the path is
/// absorbed. Queries at boundary points return the boundary datum exactly.
pub fn parabolic_estimate(
    spec: &ProblemSpec,
    x: &[f64],
    times: &[f64],
    cfg: &McConfig,
) -> Result<Vec<PointEstimate>> {
    validate_mc(cfg)?;
    let dom = spec.domain();
    dom.check_dim(x)?;
    let steps: Vec<usize> = times
        .iter()
        .map(|&t| time_to_step(t, cfg.dt))
        .collect::<Result<_>>()?;
    if let QuerySite::Boundary = classify_query(dom, x)? {
        let value = (spec.boundary())(x);
        return Ok(times
            .iter()
            .map(|&t| PointEstimate {
                value,
                std_error: 0.0,
                n_paths: cfg.n_paths,
                dt: cfg.dt,
                t: Some(t),
                x: x.to_vec(),
            })
            .collect());
    }
    if times.is_empty() {
        return Ok(Vec::new());
    }

    let half_index = spec.alpha() / 2.0;
    let f = spec.initial().clone();
    let g = spec.boundary().clone();
    let forcing = spec.forcing().clone();
    let dom = dom.clone();
    let x0 = x.to_vec();
    let dt = cfg.dt;
    let seed = cfg.seed;
    let max_steps = cfg.max_steps;

    let per_path = move |p: u64, out: &mut [f64]| -> Result<()> {
        let mut rng = RngStream::new(seed, p);
        let stopped = generate_stopped_path(&x0, &dom, dt, &mut rng, max_steps)?;
        let sub =
            generate_subordinator(half_index, stopped.exit_time_rounded(), dt, &mut rng, max_steps)?;
        let composed = subordinate(&stopped, &sub)?;
        let m = composed.n_steps();
        match &forcing {
            Forcing::Zero => {
                for (slot, &n) in out.iter_mut().zip(&steps) {
                    let pos = composed.position_at(n);
                    *slot = if composed.alive_at(n) { f(pos) } else { g(pos) };
                }
            }
            Forcing::Stationary(r) => {
                let mut cum = Vec::with_capacity(m + 1);
                cum.push(0.0);
                let mut run = 0.0;
                for n in 1..=m {
                    run += r(composed.position_at(n));
                    cum.push(run);
                }
                for (slot, &n) in out.iter_mut().zip(&steps) {
                    let pos = composed.position_at(n);
                    let base = if composed.alive_at(n) { f(pos) } else { g(pos) };
                    *slot = base + dt * cum[n.min(m)];
                }
            }
            Forcing::TimeVarying(r) => {
                for (slot, &n) in out.iter_mut().zip(&steps) {
                    let pos = composed.position_at(n);
                    let base = if composed.alive_at(n) { f(pos) } else { g(pos) };
                    let t_query = n as f64 * dt;
                    let mut run = 0.0;
                    for k in 1..=n.min(m) {
                        run += r(t_query - k as f64 * dt, composed.position_at(k));
                    }
                    *slot = base + dt * run;
                }
            }
        }
        Ok(())
    };

    let moments = accumulate_paths(cfg, times.len(), per_path)?;
    Ok(times
        .iter()
        .zip(moments)
        .map(|(&t, w)| PointEstimate {
            value: w.mean,
            std_error: w.std_error(),
            n_paths: cfg.n_paths,
            dt: cfg.dt,
            t: Some(t),
            x: x.to_vec(),
        })
        .collect())
}

/// Estimates the steady-state solution at one point: per path, the boundary
/// datum at the exit position plus `dt` times the forcing summed over every
/// subordinated step up to absorption. Requires time-independent forcing.
pub fn elliptic_estimate(spec: &ProblemSpec, x: &[f64], cfg: &McConfig) -> Result<PointEstimate> {
    validate_mc(cfg)?;
    let dom = spec.domain();
    dom.check_dim(x)?;
    if !spec.forcing().is_stationary() {
        return Err(SolverError::InvalidParameter(
            "the steady-state estimator requires time-independent forcing".to_string(),
        ));
    }
    if let QuerySite::Boundary = classify_query(dom, x)? {
        return Ok(PointEstimate {
            value: (spec.boundary())(x),
            std_error: 0.0,
            n_paths: cfg.n_paths,
            dt: cfg.dt,
            t: None,
            x: x.to_vec(),
        });
    }

    let half_index = spec.alpha() / 2.0;
    let g = spec.boundary().clone();
    let forcing = spec.forcing().clone();
    let dom = dom.clone();
    let x0 = x.to_vec();
    let dt = cfg.dt;
    let seed = cfg.seed;
    let max_steps = cfg.max_steps;

    let per_path = move |p: u64, out: &mut [f64]| -> Result<()> {
        let mut rng = RngStream::new(seed, p);
        let stopped = generate_stopped_path(&x0, &dom, dt, &mut rng, max_steps)?;
        let sub =
            generate_subordinator(half_index, stopped.exit_time_rounded(), dt, &mut rng, max_steps)?;
        let composed = subordinate(&stopped, &sub)?;
        let mut value = g(stopped.last_position());
        if let Forcing::Stationary(r) = &forcing {
            let mut run = 0.0;
            for n in 1..=composed.n_steps() {
                run += r(composed.position_at(n));
            }
            value += dt * run;
        }
        out[0] = value;
        Ok(())
    };

    let moments = accumulate_paths(cfg, 1, per_path)?;
    Ok(PointEstimate {
        value: moments[0].mean,
        std_error: moments[0].std_error(),
        n_paths: cfg.n_paths,
        dt: cfg.dt,
        t: None,
        x: x.to_vec(),
    })
}

/// Estimates the survival probability (the chance the subordinated path is
/// still inside the domain) at the query times. Identical, path by path, to
/// [`parabolic_estimate`] with initial datum 1, boundary datum 0, and no
/// forcing.
pub fn survival_estimate(
    alpha: f64,
    dom: &DomainGeometry,
    x: &[f64],
    times: &[f64],
    cfg: &McConfig,
) -> Result<Vec<PointEstimate>> {
    let spec = ProblemSpec::survival(alpha, dom.clone())?;
    parabolic_estimate(&spec, x, times, cfg)
}

/// A sweep problem: fixed query geometry plus a reference to measure errors
/// against. An empty time grid selects the steady-state estimator.
#[derive(Clone, Debug)]
pub struct SweepJob {
    pub problem: ProblemSpec,
    pub exact: Option<ExactSolution>,
    pub points: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub seed: u64,
    pub max_steps: u64,
}

/// Error statistics of one (path count, step size) sweep cell over all
/// query points and times.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub n_paths: u64,
    pub dt: f64,
    pub max_abs_error: f64,
    pub rms_error: f64,
}

/// Runs the estimator across a grid of path counts and step sizes and
/// reports errors against the job's reference solution. Each cell and each
/// point gets an independent derived seed, so cells are statistically
/// independent but the whole table is reproducible from `job.seed`.
pub fn convergence_sweep(
    job: &SweepJob,
    path_counts: &[u64],
    dts: &[f64],
) -> Result<Vec<SweepCell>> {
    let exact = job.exact.as_ref().ok_or_else(|| {
        SolverError::InvalidParameter(
            "convergence sweeps need a reference solution to measure errors against".to_string(),
        )
    })?;
    if job.points.is_empty() {
        return Err(SolverError::InvalidParameter(
            "convergence sweeps need at least one query point".to_string(),
        ));
    }
    if path_counts.is_empty() || dts.is_empty() {
        return Err(SolverError::InvalidParameter(
            "path counts and step sizes must be nonempty".to_string(),
        ));
    }
    let steady = job.times.is_empty();
    let mut cells = Vec::with_capacity(path_counts.len() * dts.len());
    for (i, &n_paths) in path_counts.iter().enumerate() {
        for (j, &dt) in dts.iter().enumerate() {
            let cell_seed = derive_seed(job.seed, (i * dts.len() + j) as u64);
            let mut max_abs: f64 = 0.0;
            let mut sum_sq = 0.0;
            let mut count = 0u64;
            for (pi, point) in job.points.iter().enumerate() {
                let cfg = McConfig {
                    n_paths,
                    dt,
                    seed: derive_seed(cell_seed, pi as u64),
                    max_steps: job.max_steps,
                };
                if steady {
                    let est = elliptic_estimate(&job.problem, point, &cfg)?;
                    let err = (est.value - exact.eval(None, point)?).abs();
                    max_abs = max_abs.max(err);
                    sum_sq += err * err;
                    count += 1;
                } else {
                    let ests = parabolic_estimate(&job.problem, point, &job.times, &cfg)?;
                    for est in ests {
                        let err = (est.value - exact.eval(est.t, point)?).abs();
                        max_abs = max_abs.max(err);
                        sum_sq += err * err;
                        count += 1;
                    }
                }
            }
            cells.push(SweepCell {
                n_paths,
                dt,
                max_abs_error: max_abs,
                rms_error: (sum_sq / count as f64).sqrt(),
            });
        }
    }
    Ok(cells)
}
