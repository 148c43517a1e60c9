//! Non-stochastic references: Dirichlet eigenpairs of intervals and boxes,
//! truncated eigenfunction series for the fractional heat semigroup, and a
//! catalog of benchmark problems with closed-form solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::DomainGeometry;
use crate::error::{Result, SolverError};
use crate::problem::{ExactSolution, Forcing, ProblemSpec, ScalarField};

/// One Dirichlet eigenpair of the Laplacian on an axis-aligned box: mode
/// indices `k`, eigenvalue `sum((k_i
/// * pi / L_i)^2)`, and the L2-normalized product-of-sines eigenfunction.
#[derive(Clone, Debug)]
pub struct BoxEigenpair {
    k: Vec<u32>,
    lambda: f64,
    mins: Vec<f64>,
    lens: Vec<f64>,
}

impl BoxEigenpair {
    pub fn mode(&self) -> &[u32] {
        &self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    /// Evaluates the eigenfunction `prod sqrt(2/L_i) sin(k_i pi (x_i - a_i)
    /// / L_i)`.
    pub fn eigenfunction(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.k.len() {
            return Err(SolverError::DimensionMismatch {
                expected: self.k.len(),
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut value = 1.0;
        for i in 0..self.k.len() {
            let li = self.lens[i];
            value *=
                (2.0 / li).sqrt() * (self.k[i] as f64 * PI * (x[i] - self.mins[i]) / li).sin();
        }
        value
    }
}

fn box_corners(dom: &DomainGeometry) -> Result<(Vec<f64>, Vec<f64>)> {
    match dom {
        DomainGeometry::Interval { a, b } => Ok((vec![*a], vec![b - a])),
        DomainGeometry::AxisBox { min, max } => {
            let lens = max.iter().zip(min).map(|(hi, lo)| hi - lo).collect();
            Ok((min.clone(), lens))
        }
        other => Err(SolverError::UnsupportedDomain(format!(
            "eigenfunction series need an interval or an axis-aligned box, got {other:?}"
        ))),
    }
}

fn advance_mode(k: &mut [u32], cap: u32) -> bool {
    for i in (0..k.len()).rev() {
        if k[i] < cap {
            k[i] += 1;
            for slot in &mut k[i + 1..] {
                *slot = 1;
            }
            return true;
        }
    }
    false
}

/// The `count` smallest Dirichlet eigenpairs of the box, sorted by
/// eigenvalue ascending with ties broken lexicographically on the mode.
///
/// The search enumerates modes up to a per-coordinate cap and grows the cap
/// until the `count`-th candidate is strictly below every eigenvalue the cap
/// could have excluded.
pub fn box_eigenpairs(dom: &DomainGeometry, count: usize) -> Result<Vec<BoxEigenpair>> {
    let (mins, lens) = box_corners(dom)?;
    if count == 0 {
        return Err(SolverError::InvalidParameter(
            "at least one eigenpair must be requested".to_string(),
        ));
    }
    let d = lens.len();
    let weights: Vec<f64> = lens.iter().map(|&li| (PI / li) * (PI / li)).collect();
    let ground: f64 = weights.iter().sum();
    let mut cap = ((count as f64).powf(1.0 / d as f64).ceil() as u32).max(1);
    loop {
        let mut modes: Vec<(f64, Vec<u32>)> = Vec::new();
        let mut k = vec![1u32; d];
        loop {
            let lambda: f64 = k
                .iter()
                .zip(&weights)
                .map(|(&ki, &w)| (ki as f64) * (ki as f64) * w)
                .sum();
            modes.push((lambda, k.clone()));
            if !advance_mode(&mut k, cap) {
                break;
            }
        }
        modes.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let cheapest_excluded = weights
            .iter()
            .map(|&w| {
                let c = (cap + 1) as f64;
                ground - w + c * c * w
            })
            .fold(f64::INFINITY, f64::min);
        if modes.len() >= count && modes[count - 1].0 < cheapest_excluded {
            return Ok(modes
                .into_iter()
                .take(count)
                .map(|(lambda, k)| BoxEigenpair {
                    k,
                    lambda,
                    mins: mins.clone(),
                    lens: lens.clone(),
                })
                .collect());
        }
        cap *= 2;
    }
}

/// A truncated eigenfunction expansion evolved by the fractional heat
/// semigroup: `sum c_j exp(-t lambda_j^(alpha/2)) e_j(x)`.
#[derive(Clone, Debug)]
pub struct SeriesSolution {
    alpha: f64,
    half_order: f64,
    pairs: Vec<BoxEigenpair>,
    coeffs: Vec<f64>,
    tail_sq: f64,
}

impl SeriesSolution {
    /// Series from an explicit finite expansion; the represented datum is
    /// exactly the given combination, so no mass is truncated away.
    pub fn from_modes(alpha: f64, pairs: Vec<BoxEigenpair>, coeffs: Vec<f64>) -> Result<Self> {
        Self::build(alpha, pairs, coeffs, None)
    }

    /// Series truncating a datum of known squared L2 mass; the neglected
    /// tail mass is recorded and available as [`SeriesSolution::tail_norm_sq`].
    pub fn with_total_mass(
        alpha: f64,
        pairs: Vec<BoxEigenpair>,
        coeffs: Vec<f64>,
        l2_mass_sq: f64,
    ) -> Result<Self> {
        Self::build(alpha, pairs, coeffs, Some(l2_mass_sq))
    }

    fn build(
        alpha: f64,
        pairs: Vec<BoxEigenpair>,
        coeffs: Vec<f64>,
        l2_mass_sq: Option<f64>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(SolverError::InvalidParameter(format!(
                "alpha must lie in (0,2), got {alpha}"
            )));
        }
        if pairs.is_empty() || pairs.len() != coeffs.len() {
            return Err(SolverError::InvalidParameter(format!(
                "series needs matching nonempty modes and coefficients, got {} and {}",
                pairs.len(),
                coeffs.len()
            )));
        }
        let dim = pairs[0].dim();
        if pairs.iter().any(|p| p.dim() != dim) {
            return Err(SolverError::InvalidParameter(
                "all series modes must share one dimension".to_string(),
            ));
        }
        let captured: f64 = coeffs.iter().map(|c| c * c).sum();
        let tail_sq = match l2_mass_sq {
            Some(mass) => (mass - captured).max(0.0),
            None => 0.0,
        };
        Ok(Self {
            alpha,
            half_order: alpha / 2.0,
            pairs,
            coeffs,
            tail_sq,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn truncation(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[BoxEigenpair] {
        &self.pairs
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Squared L2 mass of the datum outside the kept modes (0 for series
    /// built from explicit finite expansions).
    pub fn tail_norm_sq(&self) -> f64 {
        self.tail_sq
    }
}

/// Evaluates the series at time `t >= 0` and point `x`.
pub fn heat_series_eval(sol: &SeriesSolution, t: f64, x: &[f64]) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "time must be nonnegative and finite, got {t}"
        )));
    }
    let dim = sol.pairs[0].dim();
    if x.len() != dim {
        return Err(SolverError::DimensionMismatch { expected: dim, got: x.len() });
    }
    let mut value = 0.0;
    for (pair, c) in sol.pairs.iter().zip(&sol.coeffs) {
        value += c * (-t * pair.lambda.powf(sol.half_order)).exp() * pair.eval_unchecked(x);
    }
    Ok(value)
}

/// The expansion of the constant datum 1 on a box, for survival
/// probabilities: coefficients `prod sqrt(2 L_i) (1 - (-1)^(k_i)) / (k_i
/// pi)`, so modes with any even index vanish.
pub fn survival_series(dom: &DomainGeometry, alpha: f64, count: usize) -> Result<SeriesSolution> {
    let pairs = box_eigenpairs(dom, count)?;
    let coeffs: Vec<f64> = pairs
        .iter()
        .map(|p| {
            p.k.iter()
                .zip(&p.lens)
                .map(|(&ki, &li)| {
                    if ki % 2 == 0 {
                        0.0
                    } else {
                        2.0 * (2.0 * li).sqrt() / (ki as f64 * PI)
                    }
                })
                .product()
        })
        .collect();
    let volume: f64 = pairs[0].lens.iter().product();
    SeriesSolution::with_total_mass(alpha, pairs, coeffs, volume)
}

/// Whether a benchmark solves the time-dependent or the steady-state
/// problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchmarkKind {
    Parabolic,
    Elliptic,
}

/// A named problem with a closed-form reference solution.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: &'static str,
    pub kind: BenchmarkKind,
    pub problem: ProblemSpec,
    pub exact: ExactSolution,
}

/// The valid [`benchmark_catalog`] names.
pub const BENCHMARK_NAMES: [&str; 4] = [
    "square_parabolic",
    "square_elliptic",
    "cube_parabolic",
    "cube_elliptic",
];

fn sin_mode(x: &[f64], m: f64) -> f64 {
    x.iter().map(|&v| (m * PI * v).sin()).product()
}

fn constant_field(c: f64) -> ScalarField {
    Arc::new(move |_: &[f64]| c)
}

/// Looks up one of the four named benchmarks. Each couples a problem with
/// the closed-form solution used as the error reference.
pub fn benchmark_catalog(name: &str) -> Result<Benchmark> {
    match name {
        "square_parabolic" => {
            let alpha = 3f64.sqrt();
            let c1 = (2.0 * PI * PI).powf(-alpha / 2.0);
            let decay = (8.0 * PI * PI).powf(alpha / 2.0);
            let u = Arc::new(move |t: f64, x: &[f64]| {
                x[1] + c1 * sin_mode(x, 1.0) + (-decay * t).exp() * sin_mode(x, 2.0)
            });
            let at_zero = u.clone();
            let problem = ProblemSpec::new(
                alpha,
                DomainGeometry::unit_box(2)?,
                Arc::new(move |x: &[f64]| at_zero(0.0, x)),
                Arc::new(|x: &[f64]| x[1]),
                Forcing::Stationary(Arc::new(|x: &[f64]| sin_mode(x, 1.0))),
            )?;
            Ok(Benchmark {
                name: "square_parabolic",
                kind: BenchmarkKind::Parabolic,
                problem,
                exact: ExactSolution::Spacetime(u),
            })
        }
        "square_elliptic" => {
            let alpha = 3f64.sqrt();
            let c2 = 137.0 * (13.0 * PI * PI).powf(-alpha / 2.0);
            let u: ScalarField = Arc::new(move |x: &[f64]| {
                x[1] + c2 * (2.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).sin()
            });
            let problem = ProblemSpec::new(
                alpha,
                DomainGeometry::unit_box(2)?,
                Arc::new(|x: &[f64]| x[1]),
                Arc::new(|x: &[f64]| x[1]),
                Forcing::Stationary(Arc::new(|x: &[f64]| {
                    137.0 * (2.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).sin()
                })),
            )?;
            Ok(Benchmark {
                name: "square_elliptic",
                kind: BenchmarkKind::Elliptic,
                problem,
                exact: ExactSolution::Spatial(u),
            })
        }
        "cube_parabolic" => {
            let alpha = 2f64.sqrt();
            let c3 = (3.0 * PI * PI).powf(-alpha / 2.0);
            let decay = (12.0 * PI * PI).powf(alpha / 2.0);
            let u = Arc::new(move |t: f64, x: &[f64]| {
                1.0 + c3 * sin_mode(x, 1.0) + (-decay * t).exp() * sin_mode(x, 2.0)
            });
            let at_zero = u.clone();
            let problem = ProblemSpec::new(
                alpha,
                DomainGeometry::unit_box(3)?,
                Arc::new(move |x: &[f64]| at_zero(0.0, x)),
                constant_field(1.0),
                Forcing::Stationary(Arc::new(|x: &[f64]| sin_mode(x, 1.0))),
            )?;
            Ok(Benchmark {
                name: "cube_parabolic",
                kind: BenchmarkKind::Parabolic,
                problem,
                exact: ExactSolution::Spacetime(u),
            })
        }
        "cube_elliptic" => {
            let alpha = 2f64.sqrt();
            let c3 = (3.0 * PI * PI).powf(-alpha / 2.0);
            let u: ScalarField = Arc::new(move |x: &[f64]| 1.0 + c3 * sin_mode(x, 1.0));
            let problem = ProblemSpec::new(
                alpha,
                DomainGeometry::unit_box(3)?,
                constant_field(1.0),
                constant_field(1.0),
                Forcing::Stationary(Arc::new(|x: &[f64]| sin_mode(x, 1.0))),
            )?;
            Ok(Benchmark {
                name: "cube_elliptic",
                kind: BenchmarkKind::Elliptic,
                problem,
                exact: ExactSolution::Spatial(u),
            })
        }
        other => Err(SolverError::UnknownBenchmark(other.to_string())),
    }
}
