//! Flux-form finite differences for `-div(D ∇·) + I` with zero Dirichlet data.
//!
//! Unknowns live on interior nodes; boundary nodes are eliminated. Face
//! coefficients are harmonic means of the two nodal values (a face touching
//! the boundary takes its interior node's value), which keeps the assembled
//! matrix a symmetric M-matrix with diagonal surplus exactly 1 per row.
//!
//! All integrals use the midpoint weight `h^dim` per node or face, matching
//! [`ScalarField::l2_norm`].

mod cg;
mod sparse;

pub use cg::{solve_raw, solve_spd, solve_spd_from};
pub use sparse::SparseOperator;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Face, Grid};

/// Face values of a nodal coefficient, in [`Grid::faces`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCoefficients {
    grid: Grid,
    values: Vec<f64>,
}

impl FaceCoefficients {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Faces paired with their coefficients.
    pub fn iter(&self) -> impl Iterator<Item = (Face, f64)> + '_ {
        self.grid.faces().zip(self.values.iter().copied())
    }
}

pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

pub fn face_average(d: &ScalarField) -> Result<FaceCoefficients> {
    if let Some((node, &value)) = d.values().iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::NonPositiveCoefficient { node, value });
    }
    let v = d.values();
    let grid = *d.grid();
    let values = grid
        .faces()
        .map(|face| match (face.lower, face.upper) {
            (Some(l), Some(u)) => harmonic_mean(v[l], v[u]),
            (Some(n), None) | (None, Some(n)) => v[n],
            (None, None) => unreachable!("every face touches an interior node"),
        })
        .collect();
    Ok(FaceCoefficients { grid, values })
}

/// Assembles `-div(D ∇·) + I`.
pub fn assemble(d: &ScalarField) -> Result<SparseOperator> {
    assemble_with_reaction(d, 1.0)
}

/// Assembles `-div(D ∇·) + reaction · I`; `reaction = 0` gives the pure
/// diffusion part used for energy consistency checks.
pub fn assemble_with_reaction(d: &ScalarField, reaction: f64) -> Result<SparseOperator> {
    let faces = face_average(d)?;
    Ok(assemble_faces(&faces, reaction))
}

pub fn assemble_faces(faces: &FaceCoefficients, reaction: f64) -> SparseOperator {
    let grid = faces.grid;
    let n = grid.len();
    let inv_h2 = [1.0 / grid.spacing(0).powi(2), 1.0 / grid.spacing(1).powi(2)];
    let mut diag = vec![reaction; n];
    let mut off: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(4); n];
    for (face, c) in faces.iter() {
        let w = c * inv_h2[face.axis];
        match (face.lower, face.upper) {
            (Some(l), Some(u)) => {
                diag[l] += w;
                diag[u] += w;
                off[l].push((u, -w));
                off[u].push((l, -w));
            }
            (Some(k), None) | (None, Some(k)) => diag[k] += w,
            (None, None) => {}
        }
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(5 * n);
    let mut values = Vec::with_capacity(5 * n);
    row_offsets.push(0);
    for (row, mut entries) in off.into_iter().enumerate() {
        entries.push((row, diag[row]));
        entries.sort_by_key(|&(c, _)| c);
        for (c, v) in entries {
            col_indices.push(c);
            values.push(v);
        }
        row_offsets.push(col_indices.len());
    }
    SparseOperator::from_csr(row_offsets, col_indices, values).expect("assembled CSR is well formed")
}

pub fn apply(op: &SparseOperator, v: &ScalarField) -> Result<ScalarField> {
    let out = op.mul(v.values())?;
    ScalarField::new(*v.grid(), out)
}

/// Difference quotient of `v` across a face, with zero boundary values.
fn face_slope(face: &Face, v: &[f64], grid: &Grid) -> f64 {
    let at = |k: Option<usize>| k.map_or(0.0, |k| v[k]);
    (at(face.upper) - at(face.lower)) / grid.spacing(face.axis)
}

/// `Σ_faces D_face (Δu/h)(Δφ/h) h^dim`: the discrete form `∫ D ∇u·∇φ`.
pub fn flux_pairing(u: &ScalarField, phi: &ScalarField, d: &ScalarField) -> Result<f64> {
    u.same_grid(phi)?;
    u.same_grid(d)?;
    let faces = face_average(d)?;
    let grid = u.grid();
    let sum: f64 = faces
        .iter()
        .map(|(face, c)| c * face_slope(&face, u.values(), grid) * face_slope(&face, phi.values(), grid))
        .sum();
    Ok(sum * grid.cell_volume())
}

/// `Σ_faces D_face (Δu/h)² h^dim`, the discrete `∫ D |∇u|²`.
pub fn weighted_gradient_energy(u: &ScalarField, d: &ScalarField) -> Result<f64> {
    flux_pairing(u, u, d)
}

/// `Σ_faces (D_face Δu/h)² h^dim`, the discrete `∫ |D ∇u|²`.
pub fn flux_l2_squared(u: &ScalarField, d: &ScalarField) -> Result<f64> {
    u.same_grid(d)?;
    let faces = face_average(d)?;
    let grid = u.grid();
    let sum: f64 = faces.iter().map(|(face, c)| (c * face_slope(&face, u.values(), grid)).powi(2)).sum();
    Ok(sum * grid.cell_volume())
}

/// Gradient magnitude on every dual cell.
///
/// A dual cell is the lattice cell spanned by neighbouring nodes (boundary
/// nodes included, with value 0). Each gradient component is the mean of the
/// cell's two edge difference quotients along that axis; in 1D the cell has
/// a single edge.
pub fn dual_cell_gradients(u: &ScalarField) -> Vec<f64> {
    let grid = u.grid();
    let v = u.values();
    let at = |k: Option<usize>| k.map_or(0.0, |k| v[k]);
    (0..grid.dual_cell_count())
        .map(|cell| match grid.dual_cell_corners(cell).as_slice() {
            [left, right] => ((at(*right) - at(*left)) / grid.spacing(0)).abs(),
            [sw, se, nw, ne] => {
                let (sw, se, nw, ne) = (at(*sw), at(*se), at(*nw), at(*ne));
                let gx = ((se - sw) + (ne - nw)) / (2.0 * grid.spacing(0));
                let gy = ((nw - sw) + (ne - se)) / (2.0 * grid.spacing(1));
                gx.hypot(gy)
            }
            _ => unreachable!(),
        })
        .collect()
}

/// Largest `|v|` over the interior corners of every dual cell.
pub fn dual_cell_max_abs(v: &ScalarField) -> Vec<f64> {
    let grid = v.grid();
    (0..grid.dual_cell_count())
        .map(|cell| {
            grid.dual_cell_corners(cell)
                .as_slice()
                .iter()
                .flatten()
                .fold(0.0_f64, |m, &k| m.max(v.values()[k].abs()))
        })
        .collect()
}

/// Discrete `W^{1,1}_0` seminorm `Σ_cells |∇_h u| h^dim` over dual cells.
pub fn gradient_l1(u: &ScalarField) -> f64 {
    dual_cell_gradients(u).iter().sum::<f64>() * u.grid().cell_volume()
}
