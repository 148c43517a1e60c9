//! Domain geometry: open-set membership, boundary projection, and the exit
//! points used to stop Brownian paths.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SolverError};

/// Relative tolerance of the bisection used to locate exit points on
/// predicate domains, applied to the domain diameter.
const BISECTION_REL_TOL: f64 = 1e-10;

/// An open, bounded, nonempty region.
///
/// Membership is open-set membership: boundary points are not inside. Boxes
/// and balls carry exact geometry; predicate domains carry a caller-supplied
/// membership test together with a bounding box that must enclose them.
#[derive(Clone)]
pub enum DomainGeometry {
    /// Open interval (a, b).
    Interval { a: f64, b: f64 },
    /// Axis-aligned open box, the product of the intervals (min[i], max[i]).
    AxisBox { min: Vec<f64>, max: Vec<f64> },
    /// Open Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Caller-supplied open membership test restricted to a bounding box.
    Predicate {
        inside: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
        bbox_min: Vec<f64>,
        bbox_max: Vec<f64>,
    },
}

fn check_finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "{name} must have finite coordinates, got {xs:?}"
        )));
    }
    Ok(())
}

fn check_corners(min: &[f64], max: &[f64]) -> Result<()> {
    if min.is_empty() || min.len() != max.len() {
        return Err(SolverError::InvalidParameter(format!(
            "box corners must be nonempty and of equal dimension, got {} and {}",
            min.len(),
            max.len()
        )));
    }
    check_finite("box corner", min)?;
    check_finite("box corner", max)?;
    if min.iter().zip(max).any(|(lo, hi)| !(lo < hi)) {
        return Err(SolverError::InvalidParameter(
            "box must satisfy min < max in every coordinate".to_string(),
        ));
    }
    Ok(())
}

impl DomainGeometry {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        check_corners(&[a], &[b])?;
        Ok(Self::Interval { a, b })
    }

    pub fn axis_box(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        check_corners(&min, &max)?;
        Ok(Self::AxisBox { min, max })
    }

    /// The open unit box (0,1)^dim.
    pub fn unit_box(dim: usize) -> Result<Self> {
        Self::axis_box(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(SolverError::InvalidParameter(
                "ball center must be nonempty".to_string(),
            ));
        }
        check_finite("ball center", &center)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SolverError::InvalidParameter(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self::Ball { center, radius })
    }

    /// Domain given by an open membership predicate. The bounding box must
    /// enclose the domain; membership outside it reports false regardless of
    /// the predicate.
    pub fn predicate(
        inside: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
        bbox_min: Vec<f64>,
        bbox_max: Vec<f64>,
    ) -> Result<Self> {
        check_corners(&bbox_min, &bbox_max)?;
        Ok(Self::Predicate { inside, bbox_min, bbox_max })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            Self::AxisBox { min, .. } => min.len(),
            Self::Ball { center, .. } => center.len(),
            Self::Predicate { bbox_min, .. } => bbox_min.len(),
        }
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Euclidean diameter (of the bounding box for predicate domains).
    pub fn diameter(&self) -> f64 {
        match self {
            Self::Interval { a, b } => b - a,
            Self::AxisBox { min, max } => dist(min, max),
            Self::Ball { radius, .. } => 2.0 * radius,
            Self::Predicate { bbox_min, bbox_max, .. } => dist(bbox_min, bbox_max),
        }
    }

    /// True iff `x` lies in the open set. Boundary points are outside.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.contains_unchecked(x))
    }

    /// Membership without the dimension check, for per-step use on points
    /// the path engine already validated.
    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        match self {
            Self::Interval { a, b } => *a < x[0] && x[0] < *b,
            Self::AxisBox { min, max } => x
                .iter()
                .zip(min.iter().zip(max))
                .all(|(v, (lo, hi))| lo < v && v < hi),
            Self::Ball { center, radius } => dist_sq(x, center) < radius * radius,
            Self::Predicate { inside, bbox_min, bbox_max } => {
                x.iter()
                    .zip(bbox_min.iter().zip(bbox_max))
                    .all(|(v, (lo, hi))| lo < v && v < hi)
                    && inside(x)
            }
        }
    }

    /// True iff `x` lies in the closure (interior or boundary). For
    /// predicate domains the boundary is not representable, so this is the
    /// same as `contains`.
    pub fn closure_contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(match self {
            Self::Interval { a, b } => *a <= x[0] && x[0] <= *b,
            Self::AxisBox { min, max } => x
                .iter()
                .zip(min.iter().zip(max))
                .all(|(v, (lo, hi))| lo <= v && v <= hi),
            Self::Ball { center, radius } => dist_sq(x, center) <= radius * radius,
            Self::Predicate { .. } => self.contains_unchecked(x),
        })
    }

    /// True iff `x` is in the closure but not the interior.
    pub fn on_boundary(&self, x: &[f64]) -> Result<bool> {
        Ok(self.closure_contains(x)? && !self.contains_unchecked(x))
    }

    /// Nearest boundary point to an exterior point, for box and ball
    /// domains where the projection is analytic. Ties on box corners
    /// resolve by component-wise clamping. Predicate domains have no
    /// nearest-point geometry; their exit points come from `exit_point`.
    pub fn project_to_boundary(&self, x_exterior: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x_exterior)?;
        if self.contains_unchecked(x_exterior) {
            return Err(SolverError::ContractViolation(format!(
                "project_to_boundary requires a point outside the open domain, got {x_exterior:?}"
            )));
        }
        match self {
            Self::Interval { a, b } => Ok(vec![x_exterior[0].clamp(*a, *b)]),
            Self::AxisBox { min, max } => Ok(x_exterior
                .iter()
                .zip(min.iter().zip(max))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect()),
            Self::Ball { center, radius } => {
                let d = dist(x_exterior, center);
                if d == 0.0 {
                    // Unreachable for a valid radius; kept as a guard.
                    return Err(SolverError::ContractViolation(
                        "cannot project the ball center".to_string(),
                    ));
                }
                Ok(center
                    .iter()
                    .zip(x_exterior)
                    .map(|(c, v)| c + (v - c) * (radius / d))
                    .collect())
            }
            Self::Predicate { .. } => Err(SolverError::UnsupportedDomain(
                "nearest-point projection is undefined for predicate domains; \
                 use exit_point with the last interior position"
                    .to_string(),
            )),
        }
    }

    /// Replacement point for the first exterior position of a path.
    ///
    /// Box and ball domains use the nearest-point projection of the
    /// exterior point. Predicate domains bisect the segment from the last
    /// interior position against the membership test until the bracket is
    /// shorter than `1e-10 * diameter`, and return the non-interior end so
    /// the path is absorbed there.
    pub fn exit_point(&self, last_inside: &[f64], first_outside: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(last_inside)?;
        self.check_dim(first_outside)?;
        if !self.contains_unchecked(last_inside) {
            return Err(SolverError::ContractViolation(
                "exit_point requires an interior bracket start".to_string(),
            ));
        }
        if self.contains_unchecked(first_outside) {
            return Err(SolverError::ContractViolation(
                "exit_point requires an exterior bracket end".to_string(),
            ));
        }
        match self {
            Self::Predicate { .. } => {
                let tol = BISECTION_REL_TOL * self.diameter();
                let mut inside = last_inside.to_vec();
                let mut outside = first_outside.to_vec();
                let mut mid = vec![0.0; inside.len()];
                while dist(&inside, &outside) > tol {
                    for ((m, i), o) in mid.iter_mut().zip(&inside).zip(&outside) {
                        *m = 0.5 * (i + o);
                    }
                    if self.contains_unchecked(&mid) {
                        inside.copy_from_slice(&mid);
                    } else {
                        outside.copy_from_slice(&mid);
                    }
                }
                Ok(outside)
            }
            _ => self.project_to_boundary(first_outside),
        }
    }
}

impl fmt::Debug for DomainGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Interval { a, b } => write!(f, "Interval({a}, {b})"),
            Self::AxisBox { min, max } => write!(f, "AxisBox({min:?}, {max:?})"),
            Self::Ball { center, radius } => write!(f, "Ball({center:?}, r={radius})"),
            Self::Predicate { bbox_min, bbox_max, .. } => {
                write!(f, "Predicate(bbox {bbox_min:?}..{bbox_max:?})")
            }
        }
    }
}

fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    dist_sq(x, y).sqrt()
}
