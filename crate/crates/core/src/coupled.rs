//! Alternating Picard iteration for the truncated coupled system
//!
//! ```text
//! -div( a ∇w / (b + |T_ρ(W)|)² ) + w = g
//! -div( A ∇W / (B + |T_σ(w)|)² ) + W = G
//! ```
//!
//! Each sweep freezes `W`, solves the linear `w`-problem, then freezes the
//! fresh `w` and solves for `W`. Starting from zero, every iterate is a
//! convex combination of solutions of M-matrix systems, so
//! `‖w‖∞ <= ‖g‖∞` and `‖W‖∞ <= ‖G‖∞` hold along the whole trajectory.

use crate::audit::audit_linfty;
use crate::discretization::{assemble, solve_spd_from, SparseOperator};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::problem::{Equation, ProblemSpec};
use crate::report::{Norms, SolveReport};
use crate::truncation::{degenerate_coefficient, TruncationLevel};

/// Consecutive non-decreasing differences that trigger a damping halving.
const STALL_LIMIT: usize = 5;
/// Consecutive decreasing (or drifting) differences that let a halved
/// damping double again.
const RECOVERY_LIMIT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    /// Stopping tolerance on the undamped update: the larger `L²` distance
    /// between an iterate and the linear solves it feeds.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial relaxation factor in `(0, 1]`.
    pub damping: f64,
    /// Relative residual tolerance of each inner linear solve.
    pub linear_tolerance: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig { tolerance: 1e-8, max_iterations: 200, damping: 1.0, linear_tolerance: 1e-10 }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConstant(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConstant(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.linear_tolerance > 0.0) {
            return Err(Error::InvalidConstant(format!(
                "linear tolerance must be positive, got {}",
                self.linear_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConstant("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Truncation applied to the *other* unknown inside each equation's
/// coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevels {
    /// Level on `|z|` inside the `u`-equation (ρ).
    pub z_in_u_eq: TruncationLevel,
    /// Level on `|u|` inside the `z`-equation (σ).
    pub u_in_z_eq: TruncationLevel,
}

impl TruncationLevels {
    pub const NONE: TruncationLevels =
        TruncationLevels { z_in_u_eq: TruncationLevel::Infinite, u_in_z_eq: TruncationLevel::Infinite };
}

/// `ρ = ‖g‖∞`, `σ = ‖G‖∞`.
pub fn auto_levels(g: &ScalarField, big_g: &ScalarField) -> TruncationLevels {
    TruncationLevels {
        z_in_u_eq: TruncationLevel::Finite(g.linf_norm()),
        u_in_z_eq: TruncationLevel::Finite(big_g.linf_norm()),
    }
}

/// Levels that can never be active at a solution: the level on `|W|` is
/// `‖G‖∞` and the level on `|w|` is `‖g‖∞`, which are the bounds the
/// maximum principle gives for those unknowns.
pub fn barrier_levels(g: &ScalarField, big_g: &ScalarField) -> TruncationLevels {
    TruncationLevels {
        z_in_u_eq: TruncationLevel::Finite(big_g.linf_norm()),
        u_in_z_eq: TruncationLevel::Finite(g.linf_norm()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSolution {
    pub u: ScalarField,
    pub z: ScalarField,
    pub report: SolveReport,
}

/// Operator of one equation with the other unknown frozen.
pub fn frozen_operator(eq: &Equation, other: &ScalarField, level: TruncationLevel) -> Result<SparseOperator> {
    let d = degenerate_coefficient(&eq.diffusion, &eq.offset, other, level)?;
    assemble(&d)
}

pub fn solve_truncated(spec: &ProblemSpec, levels: TruncationLevels, cfg: &FixedPointConfig) -> Result<CoupledSolution> {
    let zero = ScalarField::zeros(spec.grid);
    solve_truncated_from(spec, levels, cfg, &zero, &zero)
}

/// As [`solve_truncated`], starting from `(u0, z0)` instead of zero.
pub fn solve_truncated_from(
    spec: &ProblemSpec,
    levels: TruncationLevels,
    cfg: &FixedPointConfig,
    u0: &ScalarField,
    z0: &ScalarField,
) -> Result<CoupledSolution> {
    spec.validate()?;
    cfg.validate()?;
    u0.same_grid(&spec.u_eq.source)?;
    z0.same_grid(&spec.z_eq.source)?;

    let mut u = u0.clone();
    let mut z = z0.clone();
    let mut theta = cfg.damping;
    let mut halvings = 0u32;
    let mut stalled = 0usize;
    let mut improving = 0usize;
    let mut history: Vec<f64> = Vec::new();
    let mut prev_step: Option<(ScalarField, ScalarField)> = None;

    let relax = |old: &ScalarField, new: &ScalarField, theta: f64| -> Result<ScalarField> {
        if theta == 1.0 {
            Ok(new.clone())
        } else {
            old.zip_map(new, |o, n| (1.0 - theta) * o + theta * n)
        }
    };

    let mut converged = false;
    while history.len() < cfg.max_iterations {
        let op_u = frozen_operator(&spec.u_eq, &z, levels.z_in_u_eq)?;
        let u_hat = solve_spd_from(&op_u, &spec.u_eq.source, &u, cfg.linear_tolerance)?;
        let u_next = relax(&u, &u_hat, theta)?;

        let op_z = frozen_operator(&spec.z_eq, &u_next, levels.u_in_z_eq)?;
        let z_hat = solve_spd_from(&op_z, &spec.z_eq.source, &z, cfg.linear_tolerance)?;
        let z_next = relax(&z, &z_hat, theta)?;

        // the undamped update measures the distance from a fixed point,
        // whatever θ has shrunk to
        let update = u_hat.sub(&u)?.l2_norm().max(z_hat.sub(&z)?.l2_norm());
        let step = (u_next.sub(&u)?, z_next.sub(&z)?);
        let diff = step.0.l2_norm().max(step.1.l2_norm());
        if let (Some(&prev), Some(prev_step)) = (history.last(), &prev_step) {
            if diff < prev {
                stalled = 0;
                improving += 1;
            } else if growth_ratio(&step, prev_step) < 1.0 {
                // oscillating or spiralling growth: a smaller θ contracts it
                stalled += 1;
                improving = 0;
            } else {
                // drift along a direction with Re λ >= 1, e.g. leaving a
                // saddle; damping cannot help and would only slow it down
                stalled = 0;
                improving += 1;
            }
        }
        history.push(diff);
        prev_step = Some(step);
        u = u_next;
        z = z_next;

        if update <= cfg.tolerance {
            converged = true;
            break;
        }
        if stalled >= STALL_LIMIT {
            theta *= 0.5;
            halvings += 1;
            stalled = 0;
        } else if improving >= RECOVERY_LIMIT && theta < cfg.damping {
            theta = (2.0 * theta).min(cfg.damping);
            improving = 0;
        }
    }

    if !converged {
        return Err(Error::FixedPoint { history, halvings });
    }

    let audits = vec![
        audit_linfty(&u, &spec.u_eq.source).with_context("u"),
        audit_linfty(&z, &spec.z_eq.source).with_context("z"),
    ];
    let report = SolveReport {
        converged,
        iterations: history.len(),
        differences: history,
        damping: theta,
        halvings,
        u_norms: norms(&u),
        z_norms: norms(&z),
        audits,
    };
    Ok(CoupledSolution { u, z, report })
}

/// `<s, p> / <p, p>` over both unknowns: the real part of the dominant
/// eigenvalue of the iteration, as seen from two consecutive steps.
fn growth_ratio(step: &(ScalarField, ScalarField), prev: &(ScalarField, ScalarField)) -> f64 {
    let dot = |a: &ScalarField, b: &ScalarField| a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>();
    let pp = dot(&prev.0, &prev.0) + dot(&prev.1, &prev.1);
    if pp == 0.0 {
        return 0.0;
    }
    (dot(&step.0, &prev.0) + dot(&step.1, &prev.1)) / pp
}

pub fn norms(v: &ScalarField) -> Norms {
    Norms { l2: v.l2_norm(), linf: v.linf_norm(), w11: crate::discretization::gradient_l1(v) }
}

fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Nodal residual of one equation, relative to the datum (absolute when
/// the datum vanishes).
fn equation_residual(eq: &Equation, own: &ScalarField, other: &ScalarField, level: TruncationLevel) -> Result<f64> {
    let op = frozen_operator(eq, other, level)?;
    let applied = op.mul(own.values())?;
    let r: Vec<f64> = applied.iter().zip(eq.source.values()).map(|(a, g)| a - g).collect();
    let scale = euclidean(eq.source.values());
    let abs = euclidean(&r);
    Ok(if scale > 0.0 { abs / scale } else { abs })
}

/// Residuals `(r1, r2)` of the two discrete equations at `(u, z)`.
pub fn residuals(spec: &ProblemSpec, u: &ScalarField, z: &ScalarField, levels: TruncationLevels) -> Result<(f64, f64)> {
    let r1 = equation_residual(&spec.u_eq, u, z, levels.z_in_u_eq)?;
    let r2 = equation_residual(&spec.z_eq, z, u, levels.u_in_z_eq)?;
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::problem::StructuralBounds;

    fn constant_spec(grid: Grid, g: f64, big_g: f64) -> ProblemSpec {
        ProblemSpec::constant(grid, 1.0, 1.0, ScalarField::constant(grid, g), ScalarField::constant(grid, big_g)).unwrap()
    }

    #[test]
    fn level_choices() {
        let grid = Grid::line(5, 1.0).unwrap();
        let levels = auto_levels(&ScalarField::constant(grid, 5.0), &ScalarField::constant(grid, -3.0));
        assert_eq!(levels.z_in_u_eq, TruncationLevel::Finite(5.0));
        assert_eq!(levels.u_in_z_eq, TruncationLevel::Finite(3.0));
        let zero = auto_levels(&ScalarField::zeros(grid), &ScalarField::zeros(grid));
        assert_eq!(zero.z_in_u_eq, TruncationLevel::Finite(0.0));
        let spike = ScalarField::new(grid, vec![0.0, 1.0, -2.5, 0.3, 0.0]).unwrap();
        assert_eq!(auto_levels(&spike, &spike).z_in_u_eq, TruncationLevel::Finite(2.5));
        let swapped = barrier_levels(&ScalarField::constant(grid, 5.0), &ScalarField::constant(grid, 3.0));
        assert_eq!(swapped.z_in_u_eq, TruncationLevel::Finite(3.0));
    }

    #[test]
    fn zero_data_converges_immediately() {
        let spec = constant_spec(Grid::unit(2, 7).unwrap(), 0.0, 0.0);
        let levels = auto_levels(&spec.u_eq.source, &spec.z_eq.source);
        let sol = solve_truncated(&spec, levels, &FixedPointConfig::default()).unwrap();
        assert_eq!(sol.report.iterations, 1);
        assert!(sol.u.values().iter().chain(sol.z.values()).all(|&v| v == 0.0));
        assert!(sol.report.all_audits_pass());
    }

    #[test]
    fn symmetric_data_gives_equal_components() {
        let grid = Grid::unit(2, 11).unwrap();
        let f = ScalarField::from_fn(grid, |[x, y]| 3.0 * (x + y)).unwrap();
        let spec = ProblemSpec::constant(grid, 1.0, 0.5, f.clone(), f).unwrap();
        let cfg = FixedPointConfig { tolerance: 1e-11, ..Default::default() };
        let sol = solve_truncated(&spec, TruncationLevels::NONE, &cfg).unwrap();
        assert!(sol.u.sub(&sol.z).unwrap().linf_norm() < 1e-9);
    }

    #[test]
    fn residual_examples() {
        let grid = Grid::line(9, 1.0).unwrap();
        let spec = constant_spec(grid, 1.0, 1.0);
        let zero = ScalarField::zeros(grid);
        let (r1, r2) = residuals(&spec, &zero, &zero, TruncationLevels::NONE).unwrap();
        assert_eq!((r1, r2), (1.0, 1.0));

        let levels = auto_levels(&spec.u_eq.source, &spec.z_eq.source);
        let cfg = FixedPointConfig { tolerance: 1e-13, linear_tolerance: 1e-12, ..Default::default() };
        let sol = solve_truncated(&spec, levels, &cfg).unwrap();
        let (r1, r2) = residuals(&spec, &sol.u, &sol.z, levels).unwrap();
        assert!(r1 <= 10.0 * cfg.linear_tolerance && r2 <= 10.0 * cfg.linear_tolerance, "{r1} {r2}");

        let mut bumped = sol.u.values().to_vec();
        bumped[4] += 1.0;
        let bumped = ScalarField::new(grid, bumped).unwrap();
        let (r1b, _) = residuals(&spec, &bumped, &sol.z, levels).unwrap();
        assert!(r1b > r1);
    }

    #[test]
    fn invalid_configuration() {
        let bad = FixedPointConfig { damping: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = FixedPointConfig { tolerance: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(FixedPointConfig::default().validate().is_ok());
    }

    #[test]
    fn nonconvergence_carries_history() {
        let grid = Grid::unit(2, 9).unwrap();
        let f = ScalarField::from_fn(grid, |[x, y]| 20.0 * (x - y)).unwrap();
        let spec = ProblemSpec::constant(grid, 1.0, 0.5, f.clone(), f.map(|v| -v)).unwrap();
        let cfg = FixedPointConfig { max_iterations: 2, tolerance: 1e-14, ..Default::default() };
        match solve_truncated(&spec, TruncationLevels::NONE, &cfg) {
            Err(Error::FixedPoint { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_spec_is_rejected_before_iterating() {
        let grid = Grid::line(5, 1.0).unwrap();
        let mut spec = constant_spec(grid, 1.0, 1.0);
        spec.bounds = StructuralBounds { alpha: 2.0, beta: 3.0, lambda: 1.0, gamma: 1.0 };
        assert!(matches!(
            solve_truncated(&spec, TruncationLevels::NONE, &FixedPointConfig::default()),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn growth_ratio_separates_oscillation_from_drift() {
        let g = Grid::line(3, 1.0).unwrap();
        let f = |v: [f64; 3]| ScalarField::new(g, v.to_vec()).unwrap();
        let prev = (f([1.0, -2.0, 0.5]), f([0.0, 1.0, 1.0]));
        let scaled = |c: f64| (prev.0.map(|x| c * x), prev.1.map(|x| c * x));
        assert!((growth_ratio(&scaled(-1.2), &prev) + 1.2).abs() < 1e-12);
        assert!((growth_ratio(&scaled(1.1), &prev) - 1.1).abs() < 1e-12);
        let zero = (ScalarField::zeros(g), ScalarField::zeros(g));
        assert_eq!(growth_ratio(&prev, &zero), 0.0);
    }

    #[test]
    fn damped_steps_below_roundoff_are_not_convergence() {
        // θ fixed tiny: every damped step is lost to rounding, so only the
        // undamped update may decide convergence
        let grid = Grid::line(5, 1.0).unwrap();
        let spec = constant_spec(grid, 1.0, 1.0);
        let cfg = FixedPointConfig { damping: 1e-300, max_iterations: 20, ..FixedPointConfig::default() };
        assert!(matches!(solve_truncated(&spec, TruncationLevels::NONE, &cfg), Err(Error::FixedPoint { .. })));
    }
}
