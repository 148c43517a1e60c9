//! Discrete path generation: Brownian paths stopped at the domain boundary,
//! one-sided stable subordinator paths truncated at the exit time, and their
//! composition into subordinate stopped paths on a common time grid.

use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use crate::domain::DomainGeometry;
use crate::error::{Result, SolverError};
use crate::rng::RngStream;
use crate::stable::{fill_gaussian_step, raw_stable_increment, StableParams};

/// Step cap used when callers do not configure one. Exit is almost surely
/// finite; the cap turns a malformed-domain hang into an error.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000_000;

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "dt must be positive and finite, got {dt}"
        )));
    }
    Ok(())
}

/// Index of the smallest grid multiple of `dt` at or above `v`, with a snap
/// window so a value that is a grid multiple up to float rounding maps to
/// that multiple instead of the next one.
pub(crate) fn ceil_grid(v: f64, dt: f64) -> usize {
    let ratio = v / dt;
    let nearest = ratio.round();
    let idx = if (ratio - nearest).abs() <= 1e-9 + 1e-12 * ratio.abs() {
        nearest
    } else {
        ratio.ceil()
    };
    idx as usize
}

/// A Brownian path on the grid `0, dt, 2*dt, ...`, absorbed at the boundary.
///
/// Positions before the last are interior; the last is the boundary
/// replacement of the first exterior proposal. The rounded exit time is the
/// number of steps taken times `dt`.
#[derive(Clone, Debug)]
pub struct StoppedPath {
    dim: usize,
    dt: f64,
    coords: Vec<f64>,
}

impl StoppedPath {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of stored positions, including the start and the boundary end.
    pub fn n_points(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Number of steps taken before absorption.
    pub fn exit_steps(&self) -> usize {
        self.n_points() - 1
    }

    /// Exit time rounded up to the grid: `exit_steps * dt`.
    pub fn exit_time_rounded(&self) -> f64 {
        self.exit_steps() as f64 * self.dt
    }

    /// True for every constructed path: the generator returns only after the
    /// path is absorbed on the boundary.
    pub fn exited(&self) -> bool {
        true
    }

    /// Position at grid step `i`; steps past the exit stay at the boundary.
    pub fn position(&self, i: usize) -> &[f64] {
        let i = i.min(self.exit_steps());
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// The absorbing boundary point.
    pub fn last_position(&self) -> &[f64] {
        self.position(self.exit_steps())
    }

    /// Debug dump, one `t,x_1,...,x_d` row per position. The layout is not a
    /// stability-guaranteed format.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for i in 0..self.n_points() {
            write!(out, "{:.17e}", i as f64 * self.dt)?;
            for v in self.position(i) {
                write!(out, ",{v:.17e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Runs the Euler walk `X_{t+dt} = X_t + sqrt(2*dt) * Z` from `x0` until the
/// first exterior proposal, which is replaced by its boundary point.
pub fn generate_stopped_path(
    x0: &[f64],
    dom: &DomainGeometry,
    dt: f64,
    rng: &mut RngStream,
    max_steps: u64,
) -> Result<StoppedPath> {
    dom.check_dim(x0)?;
    check_dt(dt)?;
    if !dom.contains_unchecked(x0) {
        return Err(SolverError::InvalidParameter(format!(
            "start point must lie in the open domain, got {x0:?}"
        )));
    }
    if max_steps == 0 {
        return Err(SolverError::InvalidParameter(
            "max_steps must be at least 1".to_string(),
        ));
    }
    let dim = dom.dim();
    let step = SQRT_2 * dt.sqrt();
    let mut coords = Vec::with_capacity(64 * dim);
    coords.extend_from_slice(x0);
    let mut current = x0.to_vec();
    let mut proposal = vec![0.0; dim];
    for _ in 0..max_steps {
        fill_gaussian_step(step, rng, &mut proposal);
        for (p, c) in proposal.iter_mut().zip(&current) {
            *p += c;
        }
        if dom.contains_unchecked(&proposal) {
            coords.extend_from_slice(&proposal);
            current.copy_from_slice(&proposal);
        } else {
            let exit = dom.exit_point(&current, &proposal)?;
            coords.extend_from_slice(&exit);
            return Ok(StoppedPath { dim, dt, coords });
        }
    }
    Err(SolverError::RunawayPath(max_steps))
}

/// A one-sided stable subordinator on the grid, truncated at a target time.
///
/// Values start at 0, increase strictly, and end exactly at the target
/// passed to [`generate_subordinator`].
#[derive(Clone, Debug)]
pub struct SubordinatorPath {
    dt: f64,
    values: Vec<f64>,
}

impl SubordinatorPath {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of increments; the truncated value sits at step `n_steps`.
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    /// Final value, equal to the truncation target exactly.
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("values nonempty by construction")
    }

    #[cfg(test)]
    pub(crate) fn from_values(dt: f64, values: Vec<f64>) -> Self {
        Self { dt, values }
    }
}

/// Accumulates increments `dt^(1/a) * S` from 0 and truncates the first
/// value at or above `tau_rounded` down to `tau_rounded` exactly.
pub fn generate_subordinator(
    a: f64,
    tau_rounded: f64,
    dt: f64,
    rng: &mut RngStream,
    max_steps: u64,
) -> Result<SubordinatorPath> {
    let params = StableParams::subordinator(a)?;
    check_dt(dt)?;
    if !(tau_rounded > 0.0 && tau_rounded.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "truncation time must be positive and finite, got {tau_rounded}"
        )));
    }
    if max_steps == 0 {
        return Err(SolverError::InvalidParameter(
            "max_steps must be at least 1".to_string(),
        ));
    }
    let dt_pow = dt.powf(params.inv_a());
    let mut values = Vec::with_capacity(16);
    values.push(0.0);
    let mut total = 0.0;
    for _ in 0..max_steps {
        total += raw_stable_increment(&params, dt_pow, rng);
        if total >= tau_rounded {
            values.push(tau_rounded);
            return Ok(SubordinatorPath { dt, values });
        }
        values.push(total);
    }
    Err(SolverError::RunawayPath(max_steps))
}

/// A stopped path watched through a subordinator clock: step `n` of the
/// subordinated path reads the stopped path at index `ceil(T(n*dt)/dt)`,
/// clamped to the boundary point, and is alive while `T(n*dt)` is strictly
/// below the exit time.
#[derive(Clone, Debug)]
pub struct SubordinatedPath<'a> {
    stopped: &'a StoppedPath,
    indices: Vec<usize>,
    alive: Vec<bool>,
}

impl<'a> SubordinatedPath<'a> {
    pub fn dt(&self) -> f64 {
        self.stopped.dt
    }

    /// Number of subordinator steps represented (positions `0..=n_steps`).
    pub fn n_steps(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Brownian sample index read at subordinated step `n`; steps past the
    /// stored range stay at the boundary index.
    pub fn index_at(&self, n: usize) -> usize {
        self.indices[n.min(self.indices.len() - 1)]
    }

    /// Whether the subordinated clock is still before the exit time at step
    /// `n`. Steps past the stored range are absorbed.
    pub fn alive_at(&self, n: usize) -> bool {
        n < self.alive.len() && self.alive[n]
    }

    pub fn position_at(&self, n: usize) -> &[f64] {
        self.stopped.position(self.index_at(n))
    }
}

/// Composes a stopped path with a subordinator on the same grid.
pub fn subordinate<'a>(
    stopped: &'a StoppedPath,
    sub: &SubordinatorPath,
) -> Result<SubordinatedPath<'a>> {
    if stopped.dt != sub.dt {
        return Err(SolverError::InvalidParameter(format!(
            "grid mismatch: stopped path dt = {}, subordinator dt = {}",
            stopped.dt, sub.dt
        )));
    }
    let exit_time = stopped.exit_time_rounded();
    if sub.final_value() != exit_time {
        return Err(SolverError::ContractViolation(format!(
            "subordinator was truncated at {} but the path exits at {exit_time}",
            sub.final_value()
        )));
    }
    let last = stopped.exit_steps();
    let mut indices = Vec::with_capacity(sub.values.len());
    let mut alive = Vec::with_capacity(sub.values.len());
    for &v in &sub.values {
        indices.push(ceil_grid(v, sub.dt).min(last));
        alive.push(v < exit_time);
    }
    Ok(SubordinatedPath { stopped, indices, alive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_interval() -> DomainGeometry {
        DomainGeometry::interval(0.0, 1.0).unwrap()
    }

    fn mean_exit_time(dt: f64, n_paths: u64, seed: u64) -> (f64, f64) {
        let dom = unit_interval();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for p in 0..n_paths {
            let mut rng = RngStream::new(seed, p);
            let path =
                generate_stopped_path(&[0.5], &dom, dt, &mut rng, DEFAULT_MAX_STEPS).unwrap();
            let tau = path.exit_time_rounded();
            sum += tau;
            sum_sq += tau * tau;
        }
        let n = n_paths as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn grid_ceiling_snaps_float_noise_and_rounds_up_otherwise() {
        // 3 * 0.1 = 0.30000000000000004 in binary; the ratio snaps back.
        assert_eq!(ceil_grid(3.0 * 0.1, 0.1), 3);
        assert_eq!(ceil_grid(0.3, 0.1), 3);
        assert_eq!(ceil_grid(0.25, 0.1), 3);
        assert_eq!(ceil_grid(0.0, 0.1), 0);
        assert_eq!(ceil_grid(2.3e-4, 1e-4), 3);
        // A genuine offset from the grid still rounds up.
        assert_eq!(ceil_grid(3.0001, 1.0), 4);
        // Large indices stay exact thanks to the relative term.
        assert_eq!(ceil_grid(999_983.0 * 1e-4, 1e-4), 999_983);
    }

    #[test]
    fn stopped_path_geometry_invariants_hold() {
        let dom = DomainGeometry::unit_box(2).unwrap();
        let mut rng = RngStream::new(7, 0);
        let path =
            generate_stopped_path(&[0.5, 0.5], &dom, 1e-3, &mut rng, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(path.dim(), 2);
        assert!(path.exited());
        assert!(path.n_points() >= 2);
        for i in 0..path.exit_steps() {
            assert!(dom.contains(path.position(i)).unwrap(), "step {i} left early");
        }
        assert!(dom.on_boundary(path.last_position()).unwrap());
        assert_eq!(path.exit_time_rounded(), path.exit_steps() as f64 * 1e-3);
        // Reads past the end stay absorbed at the boundary.
        assert_eq!(path.position(path.exit_steps() + 50), path.last_position());
    }

    #[test]
    fn stopped_path_rejects_bad_starts_and_steps() {
        let dom = unit_interval();
        let mut rng = RngStream::new(1, 0);
        assert!(generate_stopped_path(&[1.0], &dom, 1e-3, &mut rng, 10).is_err());
        assert!(generate_stopped_path(&[1.7], &dom, 1e-3, &mut rng, 10).is_err());
        assert!(generate_stopped_path(&[0.5], &dom, 0.0, &mut rng, 10).is_err());
        assert!(generate_stopped_path(&[0.5, 0.5], &dom, 1e-3, &mut rng, 10).is_err());
        assert!(generate_stopped_path(&[0.5], &dom, 1e-3, &mut rng, 0).is_err());
    }

    #[test]
    fn runaway_walks_hit_the_step_cap() {
        let dom = DomainGeometry::interval(0.0, 1e6).unwrap();
        let mut rng = RngStream::new(2, 0);
        let err = generate_stopped_path(&[5e5], &dom, 1e-4, &mut rng, 5).unwrap_err();
        assert!(matches!(err, SolverError::RunawayPath(5)));
    }

    #[test]
    fn stopped_paths_replay_identically() {
        let dom = DomainGeometry::unit_box(3).unwrap();
        let x0 = [0.3, 0.5, 0.7];
        let mut a = RngStream::new(42, 9);
        let mut b = RngStream::new(42, 9);
        let pa = generate_stopped_path(&x0, &dom, 1e-3, &mut a, DEFAULT_MAX_STEPS).unwrap();
        let pb = generate_stopped_path(&x0, &dom, 1e-3, &mut b, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(pa.coords, pb.coords);
    }

    // The Euler walk detects the exit only on the grid and replaces the
    // overshoot by a boundary point, so the rounded exit time overestimates
    // the continuous mean exit time x0*(1-x0)/2 = 0.125 by O(sqrt(dt)); at
    // dt = 1e-4 the estimator concentrates near 0.1284.
    #[test]
    fn interval_exit_time_sits_in_the_discrete_band() {
        let (mean, se) = mean_exit_time(1e-4, 100_000, 2024);
        assert!(se < 6e-4, "standard error {se} unexpectedly large");
        assert!(
            (0.126..=0.131).contains(&mean),
            "mean rounded exit time {mean} outside the expected discrete band"
        );
    }

    #[test]
    fn exit_time_overshoot_shrinks_with_dt() {
        let (coarse, se_c) = mean_exit_time(1e-3, 30_000, 11);
        let (fine, se_f) = mean_exit_time(1e-4, 30_000, 12);
        assert!(
            coarse - fine > 3.0 * (se_c + se_f),
            "coarse {coarse} vs fine {fine} (SEs {se_c}, {se_f})"
        );
        assert!(fine > 0.125, "discrete estimate {fine} should stay above the continuous value");
    }

    #[test]
    fn subordinator_truncates_exactly_at_the_target() {
        for (a, tau, dt, seed) in [(0.866, 0.01, 1e-4, 3u64), (0.9, 0.37, 0.1, 4u64)] {
            let mut rng = RngStream::new(seed, 0);
            let sub =
                generate_subordinator(a, tau, dt, &mut rng, DEFAULT_MAX_STEPS).unwrap();
            let vals = sub.values();
            assert_eq!(vals[0], 0.0);
            assert_eq!(sub.final_value(), tau);
            assert_eq!(sub.n_steps(), vals.len() - 1);
            for w in vals.windows(2) {
                assert!(w[0] < w[1], "values must increase strictly: {w:?}");
            }
            for &v in &vals[..vals.len() - 1] {
                assert!(v < tau);
            }
        }
    }

    #[test]
    fn single_step_overshoot_gives_a_two_point_path() {
        // P(one increment of T over dt=1 staying below 1e-6) is below any
        // float resolution for a = 1/2, so the first step always overshoots.
        let mut rng = RngStream::new(5, 0);
        let sub = generate_subordinator(0.5, 1e-6, 1.0, &mut rng, 100).unwrap();
        assert_eq!(sub.values(), &[0.0, 1e-6]);
    }

    #[test]
    fn subordinator_rejects_bad_parameters() {
        let mut rng = RngStream::new(6, 0);
        assert!(generate_subordinator(1.2, 0.1, 1e-4, &mut rng, 100).is_err());
        assert!(generate_subordinator(0.5, 0.0, 1e-4, &mut rng, 100).is_err());
        assert!(generate_subordinator(0.5, -1.0, 1e-4, &mut rng, 100).is_err());
        assert!(generate_subordinator(0.5, 0.1, 0.0, &mut rng, 100).is_err());
        assert!(generate_subordinator(0.5, 0.1, 1e-4, &mut rng, 0).is_err());
        let err = generate_subordinator(0.5, 1e9, 1e-4, &mut rng, 3).unwrap_err();
        assert!(matches!(err, SolverError::RunawayPath(3)));
    }

    #[test]
    fn subordinators_replay_identically() {
        let mut a = RngStream::new(13, 4);
        let mut b = RngStream::new(13, 4);
        let sa = generate_subordinator(0.7, 0.02, 1e-4, &mut a, 1 << 20).unwrap();
        let sb = generate_subordinator(0.7, 0.02, 1e-4, &mut b, 1 << 20).unwrap();
        assert_eq!(sa.values(), sb.values());
    }

    #[test]
    fn mean_first_passage_steps_scale_with_the_stability_index() {
        // E[steps to pass tau] grows like tau^a, so doubling tau multiplies
        // the mean step count by about 2^a.
        let a = 0.6;
        let dt = 1e-4;
        let reps = 3000u64;
        let mut means = [0.0f64; 2];
        for (slot, tau) in [(0usize, 0.01f64), (1, 0.02)] {
            let mut total = 0usize;
            for r in 0..reps {
                let mut rng = RngStream::new(100 + slot as u64, r);
                let sub = generate_subordinator(a, tau, dt, &mut rng, 1 << 24).unwrap();
                total += sub.n_steps();
            }
            means[slot] = total as f64 / reps as f64;
        }
        let ratio = means[1] / means[0];
        let expected = 2f64.powf(a);
        assert!(
            (ratio - expected).abs() / expected < 0.12,
            "step ratio {ratio} vs 2^a = {expected} (means {means:?})"
        );
    }

    #[test]
    fn identity_clock_reproduces_the_stopped_path() {
        let dom = unit_interval();
        let dt = 0.1;
        let mut rng = RngStream::new(21, 0);
        let path = generate_stopped_path(&[0.5], &dom, dt, &mut rng, DEFAULT_MAX_STEPS).unwrap();
        let m = path.exit_steps();
        let values: Vec<f64> = (0..=m).map(|k| k as f64 * dt).collect();
        let sub = SubordinatorPath::from_values(dt, values);
        let composed = subordinate(&path, &sub).unwrap();
        assert_eq!(composed.n_steps(), m);
        for n in 0..=m {
            assert_eq!(composed.index_at(n), n);
            assert_eq!(composed.position_at(n), path.position(n));
            assert_eq!(composed.alive_at(n), n < m);
        }
    }

    #[test]
    fn hand_computed_clock_reads_the_expected_indices() {
        // A ten-step path with clock readings (0, 2.3dt, tau) must read
        // Brownian indices (0, ceil(2.3) = 3, 10) and die exactly at tau.
        let dom = unit_interval();
        let dt = 1e-3;
        let mut path = None;
        for stream in 0..10_000 {
            let mut rng = RngStream::new(31, stream);
            let p =
                generate_stopped_path(&[0.9], &dom, dt, &mut rng, DEFAULT_MAX_STEPS).unwrap();
            if p.exit_steps() == 10 {
                path = Some(p);
                break;
            }
        }
        let path = path.expect("no ten-step exit among 10^4 paths");
        let tau = path.exit_time_rounded();
        let sub = SubordinatorPath::from_values(dt, vec![0.0, 2.3 * dt, tau]);
        let composed = subordinate(&path, &sub).unwrap();
        assert_eq!(composed.indices(), &[0, 3, 10]);
        assert!(composed.alive_at(0));
        assert!(composed.alive_at(1));
        assert!(!composed.alive_at(2));
        assert!(!composed.alive_at(7));
        assert_eq!(composed.position_at(2), path.last_position());
        assert_eq!(composed.position_at(9), path.last_position());
    }

    #[test]
    fn composition_rejects_mismatched_grids_and_targets() {
        let dom = unit_interval();
        let mut rng = RngStream::new(41, 0);
        let path =
            generate_stopped_path(&[0.5], &dom, 1e-3, &mut rng, DEFAULT_MAX_STEPS).unwrap();
        let sub = SubordinatorPath::from_values(1e-4, vec![0.0, path.exit_time_rounded()]);
        assert!(matches!(
            subordinate(&path, &sub).unwrap_err(),
            SolverError::InvalidParameter(_)
        ));
        let wrong_target = SubordinatorPath::from_values(1e-3, vec![0.0, 1.0e9]);
        assert!(matches!(
            subordinate(&path, &wrong_target).unwrap_err(),
            SolverError::ContractViolation(_)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn subordinated_paths_keep_their_invariants(
            seed in 0u64..1_000_000,
            a in 0.3f64..0.95,
            x0 in 0.05f64..0.95,
        ) {
            let dom = unit_interval();
            let dt = 1e-3;
            let mut rng = RngStream::new(seed, 0);
            let path =
                generate_stopped_path(&[x0], &dom, dt, &mut rng, DEFAULT_MAX_STEPS).unwrap();
            let sub = generate_subordinator(
                a, path.exit_time_rounded(), dt, &mut rng, DEFAULT_MAX_STEPS,
            ).unwrap();
            let composed = subordinate(&path, &sub).unwrap();

            let idx = composed.indices();
            prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]), "indices decrease: {idx:?}");
            let mut dead_seen = false;
            for n in 0..=composed.n_steps() {
                if dead_seen {
                    prop_assert!(!composed.alive_at(n), "path revived at step {n}");
                }
                dead_seen |= !composed.alive_at(n);
            }
            // The clock ends at the exit time, so the composition ends at
            // the stopped path's boundary point.
            prop_assert!(dead_seen);
            prop_assert_eq!(composed.index_at(composed.n_steps()), path.exit_steps());
            prop_assert_eq!(
                composed.position_at(composed.n_steps()),
                path.last_position()
            );
        }

        #[test]
        fn predicate_domains_absorb_outside_the_open_set(seed in 0u64..10_000) {
            let dom = DomainGeometry::predicate(
                std::sync::Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1] < 1.0),
                vec![-1.0, -1.0],
                vec![1.0, 1.0],
            ).unwrap();
            let mut rng = RngStream::new(seed, 0);
            let path =
                generate_stopped_path(&[0.0, 0.0], &dom, 1e-2, &mut rng, DEFAULT_MAX_STEPS)
                    .unwrap();
            for i in 0..path.exit_steps() {
                prop_assert!(dom.contains(path.position(i)).unwrap());
            }
            let last = path.last_position();
            prop_assert!(!dom.contains(last).unwrap());
            let r = (last[0] * last[0] + last[1] * last[1]).sqrt();
            prop_assert!((r - 1.0).abs() < 1e-6, "exit radius {r}");
        }
    }
}
