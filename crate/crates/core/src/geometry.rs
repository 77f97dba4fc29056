//! Model spaces and their curvature constants.
//!
//! Three model kinds are supported: Euclidean space with a quadratic
//! potential, the real line with a smooth potential, and the round sphere
//! with zero potential. All curvature constants are closed-form.

use crate::numerics::golden_min;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("unsupported space/potential combination: {0}")]
    UnsupportedSpace(String),
    #[error("hypothesis margin is non-positive: K* = {0}")]
    NonPositiveMargin(f64),
}

/// Potential V defining the reference measure e^{-V} vol.
///
/// Scalar (1-D or radial) potentials carry analytic derivatives up to third
/// order so that curvature constants and the pointwise bound beta(x) are
/// exact rather than sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// V = 0.
    Zero,
    /// V(x) = k x^2 / 2 (coordinatewise in n dimensions).
    Quadratic { k: f64 },
    /// V(x) = (x^2 + a x^4) / 2 on the line, a > 0.
    Quartic { a: f64 },
}

impl PotentialSpec {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { k } => 0.5 * k * x * x,
            PotentialSpec::Quartic { a } => 0.5 * (x * x + a * x.powi(4)),
        }
    }

    pub fn grad(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { k } => k * x,
            PotentialSpec::Quartic { a } => x + 2.0 * a * x.powi(3),
        }
    }

    pub fn hess(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { k } => *k,
            PotentialSpec::Quartic { a } => 1.0 + 6.0 * a * x * x,
        }
    }

    pub fn third(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { .. } => 0.0,
            PotentialSpec::Quartic { a } => 12.0 * a * x,
        }
    }

    /// True when Hess_V is the same constant everywhere.
    pub fn hess_exact(&self) -> bool {
        matches!(self, PotentialSpec::Zero | PotentialSpec::Quadratic { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// R^n.
    EuclideanN(usize),
    /// R^1 with a general potential.
    Line,
    /// Unit sphere S^n, n >= 2.
    SphereN(usize),
}

/// A model Riemannian space together with its potential.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpace {
    pub kind: SpaceKind,
    pub potential: PotentialSpec,
}

impl ModelSpace {
    pub fn gaussian(n: usize, k: f64) -> Self {
        ModelSpace {
            kind: SpaceKind::EuclideanN(n),
            potential: PotentialSpec::Quadratic { k },
        }
    }

    pub fn line(potential: PotentialSpec) -> Self {
        ModelSpace {
            kind: SpaceKind::Line,
            potential,
        }
    }

    pub fn sphere(n: usize) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::UnsupportedSpace(format!(
                "sphere requires n >= 2, got {n}"
            )));
        }
        Ok(ModelSpace {
            kind: SpaceKind::SphereN(n),
            potential: PotentialSpec::Zero,
        })
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            SpaceKind::EuclideanN(n) | SpaceKind::SphereN(n) => n,
            SpaceKind::Line => 1,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self.kind {
            SpaceKind::SphereN(n) => {
                if n < 2 {
                    return Err(GeometryError::UnsupportedSpace("sphere needs n >= 2".into()));
                }
                if self.potential != PotentialSpec::Zero {
                    return Err(GeometryError::UnsupportedSpace(
                        "sphere supports only V = 0".into(),
                    ));
                }
            }
            SpaceKind::EuclideanN(n) => {
                if n < 1 {
                    return Err(GeometryError::UnsupportedSpace("dimension must be >= 1".into()));
                }
                if matches!(self.potential, PotentialSpec::Quartic { .. }) && n > 1 {
                    return Err(GeometryError::UnsupportedSpace(
                        "quartic potential is line-only".into(),
                    ));
                }
            }
            SpaceKind::Line => {}
        }
        Ok(())
    }

    /// Smallest eigenvalue of Ric_V at a point (scalar coordinate for 1-D).
    pub fn k_v(&self, x: f64) -> f64 {
        match self.kind {
            SpaceKind::EuclideanN(_) | SpaceKind::Line => self.potential.hess(x),
            SpaceKind::SphereN(n) => (n - 1) as f64,
        }
    }

    /// Pointwise bound beta(x) = |grad Ric_V + d*R + R(grad V)|(x).
    ///
    /// On the flat models R = 0, so this reduces to the third derivative of
    /// the potential; on the sphere with V = 0 it vanishes identically.
    pub fn beta_at(&self, x: f64) -> f64 {
        match self.kind {
            SpaceKind::EuclideanN(_) | SpaceKind::Line => self.potential.third(x).abs(),
            SpaceKind::SphereN(_) => 0.0,
        }
    }
}

/// Curvature constants consumed by the bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureConstants {
    /// Lower bound of Ric_V.
    pub k: f64,
    /// Whether Ric_V equals k identically.
    pub ric_exact: bool,
    /// alpha1 = sup |R|.
    pub alpha1: f64,
    /// alpha2 = sup |R~| (Hilbert-Schmidt flavor); alpha2 <= n * alpha1.
    pub alpha2: f64,
    /// beta = sup |grad Ric_V + d*R + R(grad V)|; may be infinite.
    pub beta: f64,
    /// alpha = k - 2 alpha1.
    pub alpha: f64,
    /// alpha~ = k - 2 alpha2.
    pub alpha_tilde: f64,
    pub dimension: usize,
}

/// Probe grid used for infima over unbounded coordinates.
const PROBE_HALF_WIDTH: f64 = 10.0;
const PROBE_POINTS: usize = 2001;

fn probe_inf(f: impl Fn(f64) -> f64) -> f64 {
    let n = PROBE_POINTS;
    let mut best = f64::INFINITY;
    let mut best_x = 0.0;
    for i in 0..n {
        let x = -PROBE_HALF_WIDTH + 2.0 * PROBE_HALF_WIDTH * i as f64 / (n - 1) as f64;
        let v = f(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    // golden-section refinement around the grid minimizer
    let h = 2.0 * PROBE_HALF_WIDTH / (n - 1) as f64;
    let (_, refined) = golden_min(&f, best_x - h, best_x + h, 1e-10);
    refined.min(best)
}

/// Closed-form curvature constants for the three model kinds.
pub fn curvature_constants(space: &ModelSpace) -> Result<CurvatureConstants, GeometryError> {
    space.validate()?;
    let (k, ric_exact, alpha1, alpha2, beta, dim) = match space.kind {
        SpaceKind::EuclideanN(_) | SpaceKind::Line => {
            let n = space.dimension();
            let (k, exact) = match &space.potential {
                PotentialSpec::Zero => {
                    return Err(GeometryError::UnsupportedSpace(
                        "flat space with V = 0 carries no probability measure".into(),
                    ))
                }
                PotentialSpec::Quadratic { k } => (*k, true),
                PotentialSpec::Quartic { .. } => (probe_inf(|x| space.potential.hess(x)), false),
            };
            let beta = match &space.potential {
                PotentialSpec::Quartic { .. } => f64::INFINITY,
                _ => 0.0,
            };
            (k, exact, 0.0, 0.0, beta, n)
        }
        SpaceKind::SphereN(n) => {
            let nf = n as f64;
            // |R~| = sqrt(2n(n-1)) and |R| = n-1 for the round sphere
            (
                nf - 1.0,
                true,
                nf - 1.0,
                (2.0 * nf * (nf - 1.0)).sqrt(),
                0.0,
                n,
            )
        }
    };
    Ok(CurvatureConstants {
        k,
        ric_exact,
        alpha1,
        alpha2,
        beta,
        alpha: k - 2.0 * alpha1,
        alpha_tilde: k - 2.0 * alpha2,
        dimension: dim,
    })
}

/// Margin K* = inf_x { K_V(x) - (2(p-1)/p) (delta beta(x))^{p/(p-1)} }.
///
/// The caller checks K* > 0; a non-positive value means the unbounded-beta
/// hypothesis fails for this (p, delta).
pub fn theorem3_condition(space: &ModelSpace, p: f64, delta: f64) -> Result<f64, GeometryError> {
    assert!(p > 1.0, "p must exceed 1");
    assert!(delta > 0.0, "delta must be positive");
    space.validate()?;
    let expo = p / (p - 1.0);
    let coef = 2.0 * (p - 1.0) / p;
    Ok(probe_inf(|x| {
        space.k_v(x) - coef * (delta * space.beta_at(x)).powf(expo)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_constants() {
        let c = curvature_constants(&ModelSpace::gaussian(1, 1.0)).unwrap();
        assert_eq!(c.k, 1.0);
        assert_eq!(c.alpha1, 0.0);
        assert_eq!(c.alpha2, 0.0);
        assert_eq!(c.beta, 0.0);
        assert!(c.ric_exact);
    }

    #[test]
    fn sphere2_constants() {
        let c = curvature_constants(&ModelSpace::sphere(2).unwrap()).unwrap();
        assert_eq!(c.k, 1.0);
        assert_relative_eq!(c.alpha2, 2.0, epsilon = 1e-15);
        assert_eq!(c.beta, 0.0);
        assert_relative_eq!(c.alpha_tilde, -3.0, epsilon = 1e-15);
        assert!(c.ric_exact);
    }

    #[test]
    fn sphere_radical_closed_form() {
        for n in 2..=12 {
            let c = curvature_constants(&ModelSpace::sphere(n).unwrap()).unwrap();
            let nf = n as f64;
            assert_eq!(c.alpha2, (2.0 * nf * (nf - 1.0)).sqrt());
            assert_eq!(c.k, nf - 1.0);
            // |R~| <= n |R|
            assert!(c.alpha2 <= nf * c.alpha1 + 1e-15);
        }
    }

    #[test]
    fn quartic_line_pointwise() {
        let a = 0.7;
        let space = ModelSpace::line(PotentialSpec::Quartic { a });
        assert_relative_eq!(space.k_v(1.5), 1.0 + 6.0 * a * 2.25, epsilon = 1e-14);
        assert_relative_eq!(space.beta_at(-1.5), 12.0 * a * 1.5, epsilon = 1e-14);
        let c = curvature_constants(&space).unwrap();
        assert_relative_eq!(c.k, 1.0, epsilon = 1e-9);
        assert!(!c.ric_exact);
        assert!(c.beta.is_infinite());
    }

    #[test]
    fn theorem3_quartic_margin() {
        // p = 2, delta^2 = 1/(24a): u'' - (delta u''')^2 >= 1 with equality
        let a = 1.0;
        let space = ModelSpace::line(PotentialSpec::Quartic { a });
        let delta = (1.0 / (24.0 * a)).sqrt();
        let kstar = theorem3_condition(&space, 2.0, delta).unwrap();
        assert_relative_eq!(kstar, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn theorem3_gaussian_trivial() {
        let space = ModelSpace::gaussian(3, 1.0);
        let kstar = theorem3_condition(&space, 1.5, 42.0).unwrap();
        assert_relative_eq!(kstar, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn theorem3_large_delta_fails() {
        let space = ModelSpace::line(PotentialSpec::Quartic { a: 1.0 });
        let kstar = theorem3_condition(&space, 2.0, 10.0).unwrap();
        assert!(kstar < 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let pots = [
            PotentialSpec::Quadratic { k: 1.3 },
            PotentialSpec::Quartic { a: 0.4 },
        ];
        let h = 1e-5;
        for pot in &pots {
            for i in 0..100 {
                let x = -4.0 + 8.0 * i as f64 / 99.0;
                let fd_grad = (pot.value(x + h) - pot.value(x - h)) / (2.0 * h);
                let fd_hess = (pot.grad(x + h) - pot.grad(x - h)) / (2.0 * h);
                let fd_third = (pot.hess(x + h) - pot.hess(x - h)) / (2.0 * h);
                assert_relative_eq!(pot.grad(x), fd_grad, epsilon = 1e-5, max_relative = 1e-5);
                assert_relative_eq!(pot.hess(x), fd_hess, epsilon = 1e-5, max_relative = 1e-5);
                assert_relative_eq!(pot.third(x), fd_third, epsilon = 1e-4, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn alpha_tilde_definition_consistency() {
        for n in 2..=8 {
            let c = curvature_constants(&ModelSpace::sphere(n).unwrap()).unwrap();
            assert_eq!(c.alpha_tilde, c.k - 2.0 * c.alpha2);
        }
    }

    #[test]
    fn pointwise_kv_respects_global_bound() {
        let space = ModelSpace::line(PotentialSpec::Quartic { a: 0.9 });
        let c = curvature_constants(&space).unwrap();
        for i in 0..200 {
            let x = -8.0 + 16.0 * i as f64 / 199.0;
            assert!(space.k_v(x) >= c.k - 1e-9);
        }
    }
}
