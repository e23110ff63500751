//! Numerical audits of the a priori estimates on computed solutions.
//!
//! Every check produces an [`AuditRecord`] carrying both sides of the
//! inequality, so a verdict can be recomputed from the record alone.
//! Continuum inequalities are checked with a relative slack of
//! [`ESTIMATE_TOLERANCE`]; the sup-norm barrier with [`BARRIER_TOLERANCE`].

use std::f64::consts::PI;

use crate::discretization::{dual_cell_gradients, dual_cell_max_abs, flux_l2_squared, flux_pairing, gradient_l1, weighted_gradient_energy};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::problem::{ProblemSpec, StructuralBounds};
use crate::report::AuditRecord;
use crate::truncation::{degenerate_coefficient, truncation_remainder, TruncationLevel};

pub const BARRIER_TOLERANCE: f64 = 1.0 + 1e-8;
pub const ESTIMATE_TOLERANCE: f64 = 1.05;

/// Sorted, nonnegative truncation thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid(Vec<f64>);

impl KGrid {
    pub fn new(mut levels: Vec<f64>) -> Result<Self> {
        if levels.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(Error::InvalidConstant("thresholds must be finite and nonnegative".into()));
        }
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        Ok(KGrid(levels))
    }

    /// `0` plus the quartiles of `|u|` (nearest-rank).
    pub fn from_quartiles(u: &ScalarField) -> Self {
        let mut mags: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let mut levels = vec![0.0];
        if let Some(last) = mags.len().checked_sub(1) {
            for q in [0.25, 0.5, 0.75] {
                levels.push(mags[(q * last as f64).round() as usize]);
            }
        }
        KGrid::new(levels).expect("magnitudes are finite and nonnegative")
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }
}

/// `Σ_{|u| >= k} f² h^dim`.
pub fn level_set_data_mass(u: &ScalarField, f: &ScalarField, k: f64) -> f64 {
    u.values()
        .iter()
        .zip(f.values())
        .filter(|(u, _)| u.abs() >= k)
        .map(|(_, f)| f * f)
        .sum::<f64>()
        * u.grid().cell_volume()
}

fn remainder_field(u: &ScalarField, k: f64) -> ScalarField {
    let level = TruncationLevel::Finite(k);
    u.map(|v| truncation_remainder(v, level))
}

/// Sup-norm barrier `‖w‖∞ <= ‖g‖∞`.
pub fn audit_linfty(w: &ScalarField, g: &ScalarField) -> AuditRecord {
    AuditRecord::new("linf_barrier", "", w.linf_norm(), g.linf_norm(), BARRIER_TOLERANCE)
}

/// `‖G_k(u)‖₂ <= (Σ_{|u|>=k} f² h^dim)^{1/2}`.
pub fn audit_truncated_l2(u: &ScalarField, f: &ScalarField, k: f64) -> Result<AuditRecord> {
    u.same_grid(f)?;
    let lhs = remainder_field(u, k).l2_norm();
    let rhs = level_set_data_mass(u, f, k).sqrt();
    Ok(AuditRecord::new("truncated_l2", format!("k={k}"), lhs, rhs, ESTIMATE_TOLERANCE))
}

/// `α Σ_faces (ΔG_k(u)/h)² / (b+|z|)²_face h^dim <= Σ_{|u|>=k} f² h^dim`.
pub fn audit_weighted_gradient(
    u: &ScalarField,
    z: &ScalarField,
    f: &ScalarField,
    b: &ScalarField,
    k: f64,
    alpha: f64,
) -> Result<AuditRecord> {
    u.same_grid(f)?;
    let weight = degenerate_coefficient(&ScalarField::constant(*u.grid(), 1.0), b, z, TruncationLevel::Infinite)?;
    let lhs = alpha * weighted_gradient_energy(&remainder_field(u, k), &weight)?;
    let rhs = level_set_data_mass(u, f, k);
    Ok(AuditRecord::new("weighted_gradient", format!("k={k}"), lhs, rhs, ESTIMATE_TOLERANCE))
}

/// `Σ |∇_h u| h^dim <= ‖f‖₂ (‖b‖₂ + ‖f‖₂) / √α`.
pub fn audit_w11(u: &ScalarField, f: &ScalarField, b: &ScalarField, alpha: f64) -> AuditRecord {
    let rhs = f.l2_norm() * (b.l2_norm() + f.l2_norm()) / alpha.sqrt();
    AuditRecord::new("w11", "", gradient_l1(u), rhs, ESTIMATE_TOLERANCE)
}

/// The `W^{1,1}` bounds for both unknowns.
///
/// The `z` bound is emitted twice: once with the constant `‖b‖₂ + ‖f‖₂`
/// borrowed from the `u`-equation, once with the symmetric `‖B‖₂ + ‖F‖₂`.
/// A chained check `Σ|∇_h u| <= (Σ f²/α)^{1/2} (‖b‖₂ + ‖z‖₂)` follows the
/// Cauchy–Schwarz step the bounds rest on.
pub fn w11_audits(spec: &ProblemSpec, u: &ScalarField, z: &ScalarField) -> Vec<AuditRecord> {
    let alpha = spec.bounds.alpha;
    let (f, b) = (&spec.u_eq.source, &spec.u_eq.offset);
    let (big_f, big_b) = (&spec.z_eq.source, &spec.z_eq.offset);
    let printed_z = big_f.l2_norm() * (b.l2_norm() + f.l2_norm()) / alpha.sqrt();
    vec![
        AuditRecord { name: "w11_u".into(), ..audit_w11(u, f, b, alpha) },
        AuditRecord::new("w11_z_printed", "", gradient_l1(z), printed_z, ESTIMATE_TOLERANCE),
        AuditRecord { name: "w11_z_symmetric".into(), ..audit_w11(z, big_f, big_b, alpha) },
        audit_w11_chain(u, z, f, b, alpha).with_context("u"),
        audit_w11_chain(z, u, big_f, big_b, alpha).with_context("z"),
    ]
}

/// `Σ |∇_h u| h^dim <= (Σ f² h^dim / α)^{1/2} (‖b‖₂ + ‖z‖₂)`.
pub fn audit_w11_chain(u: &ScalarField, z: &ScalarField, f: &ScalarField, b: &ScalarField, alpha: f64) -> AuditRecord {
    let energy_bound = level_set_data_mass(u, f, 0.0);
    let rhs = (energy_bound / alpha).sqrt() * (b.l2_norm() + z.l2_norm());
    AuditRecord::new("w11_chain", "", gradient_l1(u), rhs, ESTIMATE_TOLERANCE)
}

/// Number of nodes (or cells) making up a set of relative measure `fraction`.
fn top_count(fraction: f64, total: usize) -> usize {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
    ((fraction * total as f64).ceil() as usize).clamp(1, total)
}

/// Indices sorted by decreasing `key`, ties broken by index.
fn ranked(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    order
}

/// Worst-case `∫_E u²` over node sets `E` of relative size `fraction`.
///
/// The maximising set of a given cardinality consists of the nodes with the
/// largest `|u|`, so the supremum is exact on the grid.
pub fn equiintegrability_profile(u: &ScalarField, fractions: &[f64]) -> Vec<(f64, f64)> {
    let squares: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    let order = ranked(&squares);
    let vol = u.grid().cell_volume();
    fractions
        .iter()
        .map(|&delta| {
            let m = top_count(delta, order.len());
            (delta, order[..m].iter().map(|&k| squares[k]).sum::<f64>() * vol)
        })
        .collect()
}

/// `∫_{E*} u² <= min_k [2k²|E*| + 2 Σ_{|u|>=k} f² h^dim]` for the worst
/// set `E*` of relative size `fraction`.
pub fn audit_equiintegrability(u: &ScalarField, f: &ScalarField, kgrid: &KGrid, fraction: f64) -> Result<AuditRecord> {
    u.same_grid(f)?;
    let (_, mass) = equiintegrability_profile(u, &[fraction])[0];
    let measure = top_count(fraction, u.len()) as f64 * u.grid().cell_volume();
    let rhs = kgrid
        .levels()
        .iter()
        .map(|&k| 2.0 * k * k * measure + 2.0 * level_set_data_mass(u, f, k))
        .fold(f64::INFINITY, f64::min);
    Ok(AuditRecord::new("equiintegrability", format!("delta={fraction}"), mass, rhs, ESTIMATE_TOLERANCE))
}

/// Worst-case gradient mass `Σ_{E*} |∇_h u| h^dim` over sets of dual cells of
/// relative size `fraction`, against
/// `(Σ f² h^dim / α)^{1/2} [ (∫_{E*} b²)^{1/2} + (∫_{E*} z²)^{1/2} ]`.
///
/// On each cell `b` and `|z|` take their largest value over the cell's
/// interior corners.
pub fn gradient_equiintegrability_profile(
    u: &ScalarField,
    z: &ScalarField,
    f: &ScalarField,
    b: &ScalarField,
    alpha: f64,
    fractions: &[f64],
) -> Result<Vec<AuditRecord>> {
    u.same_grid(z)?;
    u.same_grid(f)?;
    u.same_grid(b)?;
    let grads = dual_cell_gradients(u);
    let b_cells = dual_cell_max_abs(b);
    let z_cells = dual_cell_max_abs(z);
    let order = ranked(&grads);
    let vol = u.grid().cell_volume();
    let data = (level_set_data_mass(u, f, 0.0) / alpha).sqrt();
    Ok(fractions
        .iter()
        .map(|&delta| {
            let set = &order[..top_count(delta, order.len())];
            let sum = |v: &[f64], p: i32| set.iter().map(|&c| v[c].powi(p)).sum::<f64>() * vol;
            let lhs = sum(&grads, 1);
            let rhs = data * (sum(&b_cells, 2).sqrt() + sum(&z_cells, 2).sqrt());
            AuditRecord::new("gradient_equiintegrability", format!("delta={delta}"), lhs, rhs, ESTIMATE_TOLERANCE)
        })
        .collect())
}

/// The per-rung estimate audits for both unknowns: truncated `L²` and
/// weighted-gradient bounds at every threshold, then the `W^{1,1}` bounds.
pub fn estimate_audits(spec: &ProblemSpec, u: &ScalarField, z: &ScalarField, k_u: &KGrid, k_z: &KGrid) -> Result<Vec<AuditRecord>> {
    let alpha = spec.bounds.alpha;
    let mut records = Vec::new();
    for (name, own, other, eq, kgrid) in [("u", u, z, &spec.u_eq, k_u), ("z", z, u, &spec.z_eq, k_z)] {
        for &k in kgrid.levels() {
            let ctx = format!("{name} k={k}");
            records.push(audit_truncated_l2(own, &eq.source, k)?.with_context(ctx.clone()));
            records.push(audit_weighted_gradient(own, other, &eq.source, &eq.offset, k, alpha)?.with_context(ctx));
        }
    }
    records.extend(w11_audits(spec, u, z));
    Ok(records)
}

/// Tensor sine modes `sin(mπx/Lx) sin(mπy/Ly)`, `m = 1, 2, 3`.
pub fn default_test_functions(grid: &Grid) -> Vec<ScalarField> {
    (1..=3)
        .map(|m| {
            let m = f64::from(m);
            let (lx, ly) = (grid.extent(0), grid.extent(1));
            let two_d = grid.dim() == 2;
            ScalarField::from_fn(*grid, |[x, y]| {
                let sx = (m * PI * x / lx).sin();
                if two_d { sx * (m * PI * y / ly).sin() } else { sx }
            })
            .expect("sine modes are finite")
        })
        .collect()
}

/// One solved rung as seen by the flux diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct RungView<'a> {
    pub n: u32,
    pub u: &'a ScalarField,
    pub z: &'a ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxCauchyRow {
    /// `"u"` or `"z"`.
    pub equation: &'static str,
    pub test: usize,
    pub n_from: u32,
    pub n_to: u32,
    pub pairing_from: f64,
    pub pairing_to: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxNormRow {
    pub equation: &'static str,
    pub n: u32,
    /// `Σ_faces (D_face Δu/h)² h^dim` with the untruncated coefficient.
    pub flux_l2_squared: f64,
    /// `β² ‖f‖₂² / (λ² α)`.
    pub bound: f64,
    /// `α² ‖f‖₂² / λ²`.
    pub bound_printed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FluxTable {
    pub cauchy: Vec<FluxCauchyRow>,
    pub norms: Vec<FluxNormRow>,
}

impl FluxTable {
    /// Largest pairing difference between the last two rungs.
    pub fn top_difference(&self) -> f64 {
        let last = self.cauchy.iter().map(|r| r.n_to).max();
        self.cauchy.iter().filter(|r| Some(r.n_to) == last).fold(0.0, |m, r| m.max(r.difference))
    }

    pub fn bound_audits(&self) -> Vec<AuditRecord> {
        self.norms
            .iter()
            .map(|r| {
                AuditRecord::new("flux_l2", format!("{} n={}", r.equation, r.n), r.flux_l2_squared, r.bound, ESTIMATE_TOLERANCE)
            })
            .collect()
    }
}

/// Fluxes of consecutive rungs tested against fixed test functions, plus
/// their `L²` norms against the bound implied by the weighted-gradient
/// estimate.
pub fn flux_convergence(spec: &ProblemSpec, rungs: &[RungView<'_>], tests: &[ScalarField]) -> Result<FluxTable> {
    let StructuralBounds { alpha, beta, lambda, .. } = spec.bounds;
    let mut table = FluxTable::default();
    let mut previous: Option<(u32, Vec<[f64; 2]>)> = None;
    for rung in rungs {
        let d_u = degenerate_coefficient(&spec.u_eq.diffusion, &spec.u_eq.offset, rung.z, TruncationLevel::Infinite)?;
        let d_z = degenerate_coefficient(&spec.z_eq.diffusion, &spec.z_eq.offset, rung.u, TruncationLevel::Infinite)?;
        let pairings = tests
            .iter()
            .map(|phi| Ok([flux_pairing(rung.u, phi, &d_u)?, flux_pairing(rung.z, phi, &d_z)?]))
            .collect::<Result<Vec<_>>>()?;
        if let Some((n_prev, prev)) = &previous {
            for (test, (p, q)) in prev.iter().zip(&pairings).enumerate() {
                for (eq, name) in ["u", "z"].into_iter().enumerate() {
                    table.cauchy.push(FluxCauchyRow {
                        equation: name,
                        test,
                        n_from: *n_prev,
                        n_to: rung.n,
                        pairing_from: p[eq],
                        pairing_to: q[eq],
                        difference: (q[eq] - p[eq]).abs(),
                    });
                }
            }
        }
        for (name, own, d, data) in [("u", rung.u, &d_u, &spec.u_eq.source), ("z", rung.z, &d_z, &spec.z_eq.source)] {
            let f2 = data.l2_norm().powi(2);
            table.norms.push(FluxNormRow {
                equation: name,
                n: rung.n,
                flux_l2_squared: flux_l2_squared(own, d)?,
                bound: beta * beta * f2 / (lambda * lambda * alpha),
                bound_printed: alpha * alpha * f2 / (lambda * lambda),
            });
        }
        previous = Some((rung.n, pairings));
    }
    Ok(table)
}
