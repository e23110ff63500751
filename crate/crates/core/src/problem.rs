//! Problem data for the coupled system
//!
//! ```text
//! -div( a ∇u / (b + |z|)² ) + u = f
//! -div( A ∇z / (B + |u|)² ) + z = F
//! ```
//!
//! with scalar coefficients, zero Dirichlet data, and the structural bounds
//! `alpha <= a, A <= beta`, `lambda <= b, B <= gamma`.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

/// Structural constants: `alpha <= a <= beta`, `lambda <= b <= gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralBounds {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl StructuralBounds {
    pub fn new(alpha: f64, beta: f64, lambda: f64, gamma: f64) -> Result<Self> {
        let bounds = StructuralBounds { alpha, beta, lambda, gamma };
        bounds.check()?;
        Ok(bounds)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("lambda", self.lambda), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConstant(format!("{name} must be positive, got {v}")));
            }
        }
        if self.alpha > self.beta {
            return Err(Error::InvalidConstant(format!("alpha ({}) exceeds beta ({})", self.alpha, self.beta)));
        }
        if self.lambda > self.gamma {
            return Err(Error::InvalidConstant(format!("lambda ({}) exceeds gamma ({})", self.lambda, self.gamma)));
        }
        Ok(())
    }
}

/// Coefficients and datum of one equation of the pair.
///
/// For the `u`-equation `diffusion = a`, `offset = b`, `source = f`; the
/// offset is added to the modulus of the *other* unknown inside the
/// coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub diffusion: ScalarField,
    pub offset: ScalarField,
    pub source: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub u_eq: Equation,
    pub z_eq: Equation,
    pub bounds: StructuralBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    BelowAlpha,
    AboveBeta,
    BelowLambda,
    AboveGamma,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::BelowAlpha => "below alpha",
            BoundKind::AboveBeta => "above beta",
            BoundKind::BelowLambda => "below lambda",
            BoundKind::AboveGamma => "above gamma",
        })
    }
}

/// One violated pointwise bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub kind: BoundKind,
    pub node: usize,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} at node {} (value {})", self.field, self.kind, self.node, self.value)
    }
}

impl ProblemSpec {
    /// Builds a spec without checking it; see [`ProblemSpec::validate`].
    pub fn new(grid: Grid, u_eq: Equation, z_eq: Equation, bounds: StructuralBounds) -> Self {
        ProblemSpec { grid, u_eq, z_eq, bounds }
    }

    /// Constant coefficients `a = A`, `b = B` with the tightest bounds.
    pub fn constant(grid: Grid, diffusion: f64, offset: f64, f: ScalarField, big_f: ScalarField) -> Result<Self> {
        let bounds = StructuralBounds::new(diffusion, diffusion, offset, offset)?;
        let eq = |source| Equation {
            diffusion: ScalarField::constant(grid, diffusion),
            offset: ScalarField::constant(grid, offset),
            source,
        };
        let spec = ProblemSpec::new(grid, eq(f), eq(big_f), bounds);
        spec.validate()?;
        Ok(spec)
    }

    /// The same spec with the two equations exchanged.
    pub fn swapped(&self) -> Self {
        ProblemSpec {
            grid: self.grid,
            u_eq: self.z_eq.clone(),
            z_eq: self.u_eq.clone(),
            bounds: self.bounds,
        }
    }

    /// The same coefficients with new data `(f, F)`.
    pub fn with_sources(&self, f: ScalarField, big_f: ScalarField) -> Self {
        let mut spec = self.clone();
        spec.u_eq.source = f;
        spec.z_eq.source = big_f;
        spec
    }

    fn named_fields(&self) -> [(&'static str, &ScalarField); 6] {
        [
            ("a", &self.u_eq.diffusion),
            ("b", &self.u_eq.offset),
            ("f", &self.u_eq.source),
            ("A", &self.z_eq.diffusion),
            ("B", &self.z_eq.offset),
            ("F", &self.z_eq.source),
        ]
    }

    /// Checks grids, structural constants, and every pointwise bound.
    ///
    /// Grid mismatches and bad constants are reported before bound
    /// violations; all violated bounds are listed with their nodes.
    pub fn validate(&self) -> Result<()> {
        for (name, field) in self.named_fields() {
            if *field.grid() != self.grid {
                return Err(Error::GridMismatch(format!("field {name} is not on the problem grid")));
            }
        }
        self.bounds.check()?;
        let StructuralBounds { alpha, beta, lambda, gamma } = self.bounds;
        let mut violations = Vec::new();
        let mut check = |name: &'static str, field: &ScalarField, lo: f64, hi: f64, kinds: (BoundKind, BoundKind)| {
            for (node, &value) in field.values().iter().enumerate() {
                if value < lo {
                    violations.push(Violation { field: name, kind: kinds.0, node, value });
                } else if value > hi {
                    violations.push(Violation { field: name, kind: kinds.1, node, value });
                }
            }
        };
        let diffusion_kinds = (BoundKind::BelowAlpha, BoundKind::AboveBeta);
        let offset_kinds = (BoundKind::BelowLambda, BoundKind::AboveGamma);
        check("a", &self.u_eq.diffusion, alpha, beta, diffusion_kinds);
        check("A", &self.z_eq.diffusion, alpha, beta, diffusion_kinds);
        check("b", &self.u_eq.offset, lambda, gamma, offset_kinds);
        check("B", &self.z_eq.offset, lambda, gamma, offset_kinds);
        // sources are finite by construction of ScalarField
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Bounds(violations))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_spec(grid: Grid) -> ProblemSpec {
        let f = ScalarField::from_fn(grid, |[x, _]| x * 10.0 - 3.0).unwrap();
        ProblemSpec::constant(grid, 1.0, 1.0, f.clone(), f).unwrap()
    }

    #[test]
    fn constant_fields_meet_bounds_with_equality() {
        let spec = unit_spec(Grid::unit(2, 4).unwrap());
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn diffusion_below_alpha_everywhere() {
        let grid = Grid::line(5, 1.0).unwrap();
        let mut spec = unit_spec(grid);
        spec.u_eq.diffusion = ScalarField::constant(grid, 0.5);
        match spec.validate() {
            Err(Error::Bounds(v)) => {
                assert_eq!(v.len(), 5);
                assert!(v.iter().all(|x| x.field == "a" && x.kind == BoundKind::BelowAlpha));
                assert_eq!(v.iter().map(|x| x.node).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn offset_above_gamma() {
        let grid = Grid::line(3, 1.0).unwrap();
        let mut spec = unit_spec(grid);
        spec.u_eq.offset = ScalarField::constant(grid, 2.0);
        match spec.validate() {
            Err(Error::Bounds(v)) => {
                assert!(v.iter().all(|x| x.field == "b" && x.kind == BoundKind::AboveGamma));
                assert_eq!(v[0].to_string(), "b above gamma at node 0 (value 2)");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_grid_is_structural() {
        let grid = Grid::line(3, 1.0).unwrap();
        let mut spec = unit_spec(grid);
        spec.z_eq.source = ScalarField::zeros(Grid::line(4, 1.0).unwrap());
        assert!(matches!(spec.validate(), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn zero_lambda_rejected() {
        let err = StructuralBounds::new(1.0, 1.0, 0.0, 1.0).unwrap_err();
        assert_eq!(err.to_string(), "lambda must be positive, got 0");
        assert!(StructuralBounds::new(2.0, 1.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn single_node_perturbation_flips_verdict(node in 0usize..12, below in any::<bool>(), eps in 1e-9f64..1.0) {
            let grid = Grid::rectangle(4, 3, 1.0, 1.0).unwrap();
            let bounds = StructuralBounds::new(0.5, 2.0, 0.25, 3.0).unwrap();
            let eq = || Equation {
                diffusion: ScalarField::from_fn(grid, |[x, y]| 0.5 + 1.5 * x * y).unwrap(),
                offset: ScalarField::from_fn(grid, |[x, _]| 0.25 + 2.75 * x).unwrap(),
                source: ScalarField::constant(grid, 1.0),
            };
            let mut spec = ProblemSpec::new(grid, eq(), eq(), bounds);
            prop_assert!(spec.validate().is_ok());
            let mut values = spec.z_eq.offset.values().to_vec();
            values[node] = if below { 0.25 - eps } else { 3.0 + eps };
            spec.z_eq.offset = ScalarField::new(grid, values).unwrap();
            match spec.validate() {
                Err(Error::Bounds(v)) => {
                    prop_assert_eq!(v.len(), 1);
                    prop_assert_eq!(v[0].node, node);
                    prop_assert_eq!(v[0].field, "B");
                }
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
    }
}
