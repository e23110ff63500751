//! Nodal scalar fields and their discrete norms.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Values at the interior nodes of a [`Grid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "grid has {} interior nodes but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at node {node}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        assert!(value.is_finite(), "constant field value must be finite");
        ScalarField { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f` at every interior node position.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.position(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pointwise map. Panics if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        assert!(values.iter().all(|v| v.is_finite()), "map produced a non-finite value");
        ScalarField { grid: self.grid, values }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid, values)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)))
        }
    }

    /// Midpoint-quadrature `L²` norm: `sqrt(Σ v² h^dim)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Midpoint-quadrature integral `Σ v h^dim`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Writes the field in the text field format: a `grid` header line
    /// followed by one value per line.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        let g = &self.grid;
        if g.dim() == 1 {
            writeln!(out, "grid 1 {} {}", g.nodes(0), g.extent(0))?;
        } else {
            writeln!(out, "grid 2 {} {} {} {}", g.nodes(0), g.nodes(1), g.extent(0), g.extent(1))?;
        }
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter_map(|(n, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((n + 1, other)),
        });
        let (line_no, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty field file".into() })?;
        let header = header?;
        let grid = parse_header(&header).map_err(|message| Error::Parse { line: line_no, message })?;
        let mut values = Vec::with_capacity(grid.len());
        for (line_no, line) in lines {
            let line = line?;
            let v: f64 = line.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("expected a number, found {:?}", line.trim()),
            })?;
            values.push(v);
        }
        ScalarField::new(grid, values).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })
    }
}

fn parse_header(header: &str) -> std::result::Result<Grid, String> {
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.first() != Some(&"grid") {
        return Err(format!("expected header starting with `grid`, found {header:?}"));
    }
    let dim: usize = tokens.get(1).and_then(|t| t.parse().ok()).ok_or("missing or invalid dimension")?;
    if tokens.len() != 2 + 2 * dim {
        return Err(format!("a {dim}-dimensional header needs {} fields, found {}", 2 + 2 * dim, tokens.len()));
    }
    let nodes = tokens[2..2 + dim]
        .iter()
        .map(|t| t.parse::<usize>().map_err(|_| format!("invalid node count {t:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let extent = tokens[2 + dim..]
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| format!("invalid extent {t:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Grid::new(dim, &nodes, &extent).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_field_norms() {
        let g = Grid::unit(2, 5).unwrap();
        let z = ScalarField::zeros(g);
        assert_eq!(z.l2_norm(), 0.0);
        assert_eq!(z.linf_norm(), 0.0);
    }

    #[test]
    fn constant_one_on_unit_interval() {
        for m in [3usize, 7, 31, 255] {
            let g = Grid::line(m, 1.0).unwrap();
            let h = g.spacing(0);
            let one = ScalarField::constant(g, 1.0);
            assert!((one.l2_norm() - (m as f64 * h).sqrt()).abs() < 1e-14);
        }
        let fine = ScalarField::constant(Grid::line(9999, 1.0).unwrap(), 1.0);
        assert!((fine.l2_norm() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn single_spike_linf() {
        let g = Grid::line(5, 1.0).unwrap();
        let v = ScalarField::new(g, vec![0.0, 0.0, -3.0, 0.0, 0.0]).unwrap();
        assert_eq!(v.linf_norm(), 3.0);
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = Grid::line(3, 1.0).unwrap();
        assert!(ScalarField::new(g, vec![1.0, 2.0]).is_err());
        assert!(ScalarField::new(g, vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(ScalarField::new(g, vec![1.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn mismatched_grids() {
        let a = ScalarField::zeros(Grid::line(3, 1.0).unwrap());
        let b = ScalarField::zeros(Grid::line(4, 1.0).unwrap());
        assert!(matches!(a.sub(&b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn field_file_round_trip() {
        let g = Grid::rectangle(3, 4, 1.5, 2.0).unwrap();
        let v = ScalarField::from_fn(g, |[x, y]| (x * 7.3).sin() * y - 1e-7).unwrap();
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("grid 2 3 4 1.5 2\n"));
        assert!(!text.contains('e'), "values must be written in decimal notation");
        let back = ScalarField::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn field_file_errors_name_the_line() {
        let text = "grid 1 3 1.0\n0.5\nabc\n0.1\n";
        match ScalarField::read_from(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ScalarField::read_from("grid 1 3 1.0\n0.5\n".as_bytes()).is_err());
        assert!(ScalarField::read_from("mesh 1 3 1.0\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn l2_matches_quadrature_and_bounds_linf(
            values in proptest::collection::vec(-1e3f64..1e3, 12),
        ) {
            let g = Grid::rectangle(4, 3, 1.0, 2.0).unwrap();
            let v = ScalarField::new(g, values.clone()).unwrap();
            let sum: f64 = values.iter().map(|x| x * x).sum();
            let vol = g.cell_volume();
            prop_assert!((v.l2_norm().powi(2) - sum * vol).abs() <= 1e-12 * (1.0 + sum * vol));
            prop_assert!(v.linf_norm() <= v.l2_norm() / vol.sqrt() * (1.0 + 1e-12));
        }
    }
}
