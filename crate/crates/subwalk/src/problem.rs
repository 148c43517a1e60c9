//! Problem descriptions: fractional order, domain, initial and boundary
//! data, and forcing, plus closed-form reference solutions where known.

use std::fmt;
use std::sync::Arc;

use crate::domain::DomainGeometry;
use crate::error::{Result, SolverError};
use crate::stable::MAX_STABLE_INDEX;

/// A function of space alone.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A function of time and space, called as `(t, x)`.
pub type SpacetimeField = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// The forcing term of the problem.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    /// Time-independent forcing, usable by both the time-dependent and the
    /// steady-state estimators.
    Stationary(ScalarField),
    /// Time-dependent forcing, called as `(t, x)`. Only the time-dependent
    /// estimator accepts it.
    TimeVarying(SpacetimeField),
}

impl Forcing {
    pub fn is_stationary(&self) -> bool {
        !matches!(self, Self::TimeVarying(_))
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "Forcing::Zero",
            Self::Stationary(_) => "Forcing::Stationary(..)",
            Self::TimeVarying(_) => "Forcing::TimeVarying(..)",
        })
    }
}

/// A Dirichlet problem for the fractional operator of order `alpha/2`:
/// initial datum `f` on the domain, boundary datum `g`, forcing `r`.
#[derive(Clone)]
pub struct ProblemSpec {
    alpha: f64,
    domain: DomainGeometry,
    initial: ScalarField,
    boundary: ScalarField,
    forcing: Forcing,
    boundary_compatible: bool,
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(SolverError::InvalidParameter(format!(
            "alpha must lie in (0,2), got {alpha}"
        )));
    }
    if alpha / 2.0 > MAX_STABLE_INDEX {
        return Err(SolverError::InvalidParameter(format!(
            "alpha must be at most {} for sampler stability near the classical limit, got {alpha}",
            2.0 * MAX_STABLE_INDEX
        )));
    }
    Ok(())
}

impl ProblemSpec {
    /// Builds a problem, recording that `f` extends continuously to the
    /// boundary values `g` (the usual well-posed case). Use
    /// [`ProblemSpec::mark_boundary_incompatible`] when it does not.
    pub fn new(
        alpha: f64,
        domain: DomainGeometry,
        initial: ScalarField,
        boundary: ScalarField,
        forcing: Forcing,
    ) -> Result<Self> {
        validate_alpha(alpha)?;
        Ok(Self {
            alpha,
            domain,
            initial,
            boundary,
            forcing,
            boundary_compatible: true,
        })
    }

    /// The survival problem: initial datum 1, boundary datum 0, no forcing.
    /// Its solution is the probability that the subordinated path has not
    /// been absorbed yet. The data are deliberately incompatible at the
    /// boundary (1 vs 0).
    pub fn survival(alpha: f64, domain: DomainGeometry) -> Result<Self> {
        let spec = Self::new(
            alpha,
            domain,
            Arc::new(|_: &[f64]| 1.0),
            Arc::new(|_: &[f64]| 0.0),
            Forcing::Zero,
        )?;
        Ok(spec.mark_boundary_incompatible())
    }

    /// Records that the initial datum does not extend continuously by the
    /// boundary datum. Estimates remain defined; continuity of the solution
    /// up to the boundary is no longer guaranteed.
    pub fn mark_boundary_incompatible(mut self) -> Self {
        self.boundary_compatible = false;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn domain(&self) -> &DomainGeometry {
        &self.domain
    }

    pub fn initial(&self) -> &ScalarField {
        &self.initial
    }

    pub fn boundary(&self) -> &ScalarField {
        &self.boundary
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn boundary_compatible(&self) -> bool {
        self.boundary_compatible
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("alpha", &self.alpha)
            .field("domain", &self.domain)
            .field("forcing", &self.forcing)
            .field("boundary_compatible", &self.boundary_compatible)
            .finish_non_exhaustive()
    }
}

/// A known closed-form solution, used as the error reference in sweeps and
/// benchmark output.
#[derive(Clone)]
pub enum ExactSolution {
    /// Time-dependent solution `u(t, x)`.
    Spacetime(SpacetimeField),
    /// Steady-state solution `u(x)`.
    Spatial(ScalarField),
}

impl ExactSolution {
    /// Evaluates the reference. Time-dependent references require `t`;
    /// steady-state references ignore it.
    pub fn eval(&self, t: Option<f64>, x: &[f64]) -> Result<f64> {
        match self {
            Self::Spacetime(u) => {
                let t = t.ok_or_else(|| {
                    SolverError::InvalidParameter(
                        "a time-dependent reference needs a query time".to_string(),
                    )
                })?;
                Ok(u(t, x))
            }
            Self::Spatial(u) => Ok(u(x)),
        }
    }
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spacetime(_) => "ExactSolution::Spacetime(..)",
            Self::Spatial(_) => "ExactSolution::Spatial(..)",
        })
    }
}
