//! Uniform vertex-centred Cartesian grids on intervals and rectangles.
//!
//! Only interior nodes carry unknowns; the boundary is implicit and every
//! solution field vanishes there. Node `(i, j)` of a 2D grid has flat index
//! `j * nx + i`, so `x` runs fastest (row-major with rows along `y`).

use crate::error::{Error, Result};

/// Minimum number of interior nodes per axis.
pub const MIN_NODES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    nodes: [usize; 2],
    extent: [f64; 2],
}

impl Grid {
    pub fn new(dim: usize, nodes: &[usize], extent: &[f64]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if nodes.len() != dim || extent.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} node counts and {dim} extents, got {} and {}",
                nodes.len(),
                extent.len()
            )));
        }
        let mut grid = Grid { dim, nodes: [1, 1], extent: [1.0, 1.0] };
        for axis in 0..dim {
            if nodes[axis] < MIN_NODES {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} needs at least {MIN_NODES} interior nodes, got {}",
                    nodes[axis]
                )));
            }
            if !(extent[axis].is_finite() && extent[axis] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} extent must be a positive length, got {}",
                    extent[axis]
                )));
            }
            grid.nodes[axis] = nodes[axis];
            grid.extent[axis] = extent[axis];
        }
        Ok(grid)
    }

    pub fn line(nodes: usize, length: f64) -> Result<Self> {
        Self::new(1, &[nodes], &[length])
    }

    pub fn rectangle(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(2, &[nx, ny], &[lx, ly])
    }

    /// Unit interval or unit square with the same node count on every axis.
    pub fn unit(dim: usize, nodes: usize) -> Result<Self> {
        Self::new(dim, &vec![nodes; dim], &vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / (self.nodes[axis] + 1) as f64
    }

    /// Number of interior nodes (the unknown count).
    pub fn len(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `h^dim`; the midpoint-quadrature weight of a node.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|axis| self.spacing(axis)).product()
    }

    /// Measure of the whole domain.
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|axis| self.extent[axis]).product()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nodes[0] + i
    }

    /// Inverse of [`Grid::index`].
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nodes[0], index / self.nodes[0])
    }

    /// Physical position of an interior node; the second coordinate is 0 in 1D.
    pub fn position(&self, index: usize) -> [f64; 2] {
        let (i, j) = self.coords(index);
        let x = (i + 1) as f64 * self.spacing(0);
        let y = if self.dim == 2 { (j + 1) as f64 * self.spacing(1) } else { 0.0 };
        [x, y]
    }

    /// Flat index of the node at signed lattice position `(i, j)`, or `None`
    /// when it lies on the boundary (where all fields are zero).
    pub(crate) fn interior(&self, i: isize, j: isize) -> Option<usize> {
        let inside = |v: isize, n: usize| v >= 0 && (v as usize) < n;
        if inside(i, self.nodes[0]) && inside(j, self.nodes[1]) {
            Some(self.index(i as usize, j as usize))
        } else {
            None
        }
    }

    /// All faces of the stencil, boundary faces included.
    ///
    /// Each face joins two lattice neighbours along `axis`; a side is `None`
    /// when that neighbour is a boundary node.
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        let (nx, ny) = (self.nodes[0] as isize, self.nodes[1] as isize);
        let x_faces = (0..ny).flat_map(move |j| {
            (0..=nx).map(move |i| Face {
                axis: 0,
                lower: self.interior(i - 1, j),
                upper: self.interior(i, j),
            })
        });
        let y_faces = (0..=ny).filter(move |_| self.dim == 2).flat_map(move |j| {
            (0..nx).map(move |i| Face {
                axis: 1,
                lower: self.interior(i, j - 1),
                upper: self.interior(i, j),
            })
        });
        x_faces.chain(y_faces)
    }

    /// Number of faces along each axis, in the order produced by [`Grid::faces`].
    pub fn face_counts(&self) -> [usize; 2] {
        let (nx, ny) = (self.nodes[0], self.nodes[1]);
        if self.dim == 1 {
            [nx + 1, 0]
        } else {
            [(nx + 1) * ny, nx * (ny + 1)]
        }
    }

    /// Dual cells: the `(nx+1)` (times `(ny+1)` in 2D) lattice cells whose
    /// corners are nodes, boundary nodes included.
    pub fn dual_cell_count(&self) -> usize {
        if self.dim == 1 {
            self.nodes[0] + 1
        } else {
            (self.nodes[0] + 1) * (self.nodes[1] + 1)
        }
    }

    /// Corner nodes of dual cell `c` as `Option<index>`; boundary corners are
    /// `None`. 1D cells have two corners, 2D cells four, ordered
    /// `[(i-1,j-1), (i,j-1), (i-1,j), (i,j)]`.
    pub(crate) fn dual_cell_corners(&self, cell: usize) -> DualCorners {
        if self.dim == 1 {
            let i = cell as isize;
            DualCorners::Line([self.interior(i - 1, 0), self.interior(i, 0)])
        } else {
            let stride = self.nodes[0] + 1;
            let (i, j) = ((cell % stride) as isize, (cell / stride) as isize);
            DualCorners::Square([
                self.interior(i - 1, j - 1),
                self.interior(i, j - 1),
                self.interior(i - 1, j),
                self.interior(i, j),
            ])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub lower: Option<usize>,
    pub upper: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum DualCorners {
    Line([Option<usize>; 2]),
    Square([Option<usize>; 4]),
}

impl DualCorners {
    pub(crate) fn as_slice(&self) -> &[Option<usize>] {
        match self {
            DualCorners::Line(c) => c,
            DualCorners::Square(c) => c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_excludes_boundary_nodes() {
        let g = Grid::line(3, 1.0).unwrap();
        assert_eq!(g.spacing(0), 0.25);
        assert_eq!(g.len(), 3);
        assert_eq!(g.position(0), [0.25, 0.0]);
        assert_eq!(g.position(2), [0.75, 0.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, &[4, 4, 4], &[1.0, 1.0, 1.0]).is_err());
        assert!(Grid::line(2, 1.0).is_err());
        assert!(Grid::line(5, 0.0).is_err());
        assert!(Grid::line(5, f64::NAN).is_err());
        assert!(Grid::new(2, &[4], &[1.0]).is_err());
    }

    #[test]
    fn row_major_indexing() {
        let g = Grid::rectangle(4, 3, 2.0, 1.0).unwrap();
        assert_eq!(g.index(1, 2), 9);
        assert_eq!(g.coords(9), (1, 2));
        let [x, y] = g.position(9);
        assert!((x - 0.8).abs() < 1e-15 && (y - 0.75).abs() < 1e-15);
        assert!((g.cell_volume() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn face_enumeration_counts() {
        let g = Grid::rectangle(4, 3, 1.0, 1.0).unwrap();
        let faces: Vec<_> = g.faces().collect();
        let [fx, fy] = g.face_counts();
        assert_eq!(faces.len(), fx + fy);
        assert_eq!(fx, 15);
        assert_eq!(fy, 16);
        // every interior node touches 2 faces per axis
        let mut touches = vec![0; g.len()];
        for f in &faces {
            for n in [f.lower, f.upper].into_iter().flatten() {
                touches[n] += 1;
            }
        }
        assert!(touches.iter().all(|&t| t == 4));
        let boundary = faces.iter().filter(|f| f.lower.is_none() || f.upper.is_none()).count();
        assert_eq!(boundary, 2 * 3 + 2 * 4);
    }

    #[test]
    fn dual_cells_cover_lattice() {
        let g = Grid::rectangle(3, 3, 1.0, 1.0).unwrap();
        assert_eq!(g.dual_cell_count(), 16);
        let corner = g.dual_cell_corners(0);
        assert_eq!(corner.as_slice(), &[None, None, None, Some(0)]);
        let line = Grid::line(3, 1.0).unwrap();
        assert_eq!(line.dual_cell_corners(3).as_slice(), &[Some(2), None]);
    }
}
