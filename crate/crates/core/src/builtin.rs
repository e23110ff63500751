//! Named problem setups that need no external files.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::problem::{Equation, ProblemSpec, StructuralBounds};

/// Interior nodes per axis used unless a caller overrides it (`h = 1/64`).
pub const DEFAULT_NODES: usize = 63;

pub const NAMES: [&str; 4] = ["zero", "unit-square-constant", "symmetric", "spike"];

/// Centre of the spike datum; irrational coordinates keep it off every node.
pub const SPIKE_CENTER: [f64; 2] = [0.353_553_390_593_273_8, 0.577_350_269_189_625_8];

/// The named case on the unit square with `nodes × nodes` interior nodes.
pub fn builtin(name: &str, nodes: usize) -> Result<ProblemSpec> {
    let grid = Grid::unit(2, nodes)?;
    let field = |f: fn([f64; 2]) -> f64| ScalarField::from_fn(grid, f);
    match name {
        "zero" => ProblemSpec::constant(grid, 1.0, 1.0, ScalarField::zeros(grid), ScalarField::zeros(grid)),
        "unit-square-constant" => {
            ProblemSpec::constant(grid, 1.0, 1.0, ScalarField::constant(grid, 1.0), ScalarField::constant(grid, 1.0))
        }
        "symmetric" => {
            // a = A in [1, 2], b = B in [0.5, 1], f = F sign-changing
            let a = field(|[x, y]| 1.0 + (PI * x).sin() * (PI * y).sin())?;
            let b = field(|[x, y]| 0.5 + 0.25 * (x + y))?;
            let f = field(|[x, y]| 8.0 * (2.0 * PI * x).sin() * (PI * y).cos() + 4.0)?;
            let eq = Equation { diffusion: a, offset: b, source: f };
            let spec = ProblemSpec::new(grid, eq.clone(), eq, StructuralBounds::new(1.0, 2.0, 0.5, 1.0)?);
            spec.validate()?;
            Ok(spec)
        }
        "spike" => {
            let f = field(|[x, y]| {
                let r = ((x - SPIKE_CENTER[0]).powi(2) + (y - SPIKE_CENTER[1]).powi(2)).sqrt();
                r.powf(-0.5)
            })?;
            ProblemSpec::constant(grid, 1.0, 1.0, f.clone(), f)
        }
        other => Err(Error::InvalidField(format!(
            "unknown builtin case {other:?}; expected one of {}",
            NAMES.join(", ")
        ))),
    }
}
