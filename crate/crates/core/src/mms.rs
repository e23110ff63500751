//! Manufactured solutions: closed-form `(u*, z*)` with hand-derived
//! derivatives, the data `(f, F)` they induce, and convergence studies.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::coupled::{solve_truncated, FixedPointConfig, TruncationLevels};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::problem::{Equation, ProblemSpec, StructuralBounds};

pub type Scalar = fn([f64; 2]) -> f64;
pub type Vector = fn([f64; 2]) -> [f64; 2];

/// A smooth function on the unit interval or square. The laplacian is
/// required for unknowns and ignored for coefficients.
#[derive(Clone, Copy)]
pub struct ClosedForm {
    pub value: Scalar,
    pub gradient: Vector,
    pub laplacian: Option<Scalar>,
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ClosedForm")
    }
}

impl ClosedForm {
    pub const fn unknown(value: Scalar, gradient: Vector, laplacian: Scalar) -> Self {
        ClosedForm { value, gradient, laplacian: Some(laplacian) }
    }

    pub const fn coefficient(value: Scalar, gradient: Vector) -> Self {
        ClosedForm { value, gradient, laplacian: None }
    }

    pub const ZERO: ClosedForm = ClosedForm::unknown(|_| 0.0, |_| [0.0, 0.0], |_| 0.0);
    pub const ONE: ClosedForm = ClosedForm::coefficient(|_| 1.0, |_| [0.0, 0.0]);
}

/// Points sampled per axis (boundary included) when a case is registered.
const SAMPLES: usize = 129;
const SIGN_EPS: f64 = 1e-12;
/// Relative agreement required between analytic and finite-difference data
/// at `h <= 1/64`.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-3;

/// The cross-check tolerance at spacing `h`, relaxed as `h²` above `1/64`.
pub fn cross_check_tolerance(h: f64) -> f64 {
    CROSS_CHECK_TOLERANCE * (64.0 * h).max(1.0).powi(2)
}

#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    name: String,
    dim: usize,
    u: ClosedForm,
    z: ClosedForm,
    a: ClosedForm,
    big_a: ClosedForm,
    b: ClosedForm,
    big_b: ClosedForm,
    /// `|u*| = sign_u * u*` everywhere.
    sign_u: f64,
    sign_z: f64,
}

fn sample_points(dim: usize) -> Vec<([f64; 2], bool)> {
    let t = |i: usize| i as f64 / (SAMPLES - 1) as f64;
    let edge = |i: usize| i == 0 || i == SAMPLES - 1;
    if dim == 1 {
        (0..SAMPLES).map(|i| ([t(i), 0.0], edge(i))).collect()
    } else {
        (0..SAMPLES)
            .flat_map(|j| (0..SAMPLES).map(move |i| ([t(i), t(j)], edge(i) || edge(j))))
            .collect()
    }
}

/// Orientation `s` with `|v| = s v` on the samples, or `None` on a sign change.
fn orientation(v: Scalar, points: &[([f64; 2], bool)]) -> Option<f64> {
    let (lo, hi) = points
        .iter()
        .map(|&(p, _)| v(p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    match (lo < -SIGN_EPS, hi > SIGN_EPS) {
        (true, true) => None,
        (true, false) => Some(-1.0),
        _ => Some(1.0),
    }
}

fn is_zero(v: Scalar, points: &[([f64; 2], bool)]) -> bool {
    points.iter().all(|&(p, _)| v(p).abs() <= SIGN_EPS)
}

impl ManufacturedCase {
    /// Registers a case after checking that the unknowns vanish on the
    /// boundary, that each unknown keeps one sign wherever its modulus
    /// enters a nonzero equation, and that `a, A, b, B > 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        u: ClosedForm,
        z: ClosedForm,
        a: ClosedForm,
        big_a: ClosedForm,
        b: ClosedForm,
        big_b: ClosedForm,
    ) -> Result<Self> {
        let name = name.into();
        let reject = |why: String| Err(Error::ManufacturedCase(format!("{name}: {why}")));
        if dim != 1 && dim != 2 {
            return reject(format!("dimension must be 1 or 2, got {dim}"));
        }
        if u.laplacian.is_none() || z.laplacian.is_none() {
            return reject("unknowns need a laplacian".into());
        }
        let points = sample_points(dim);
        for (label, v) in [("u*", u.value), ("z*", z.value)] {
            if let Some(&(p, _)) = points.iter().find(|&&(p, edge)| edge && v(p).abs() > SIGN_EPS) {
                return reject(format!("{label} does not vanish on the boundary at {p:?}"));
            }
        }
        for (label, c) in [("a", a.value), ("A", big_a.value), ("b", b.value), ("B", big_b.value)] {
            if let Some(&(p, _)) = points.iter().find(|&&(p, _)| !(c(p) > 0.0)) {
                return reject(format!("{label} is not positive at {p:?}"));
            }
        }
        let z_active = !is_zero(z.value, &points);
        let u_active = !is_zero(u.value, &points);
        // |z*| enters the u-equation, which only sees it through ∇u* and vice versa
        let sign_z = match orientation(z.value, &points) {
            Some(s) => s,
            None if !u_active => 1.0,
            None => return reject("z* changes sign, so |z*| has a kink".into()),
        };
        let sign_u = match orientation(u.value, &points) {
            Some(s) => s,
            None if !z_active => 1.0,
            None => return reject("u* changes sign, so |u*| has a kink".into()),
        };
        Ok(ManufacturedCase { name, dim, u, z, a, big_a, b, big_b, sign_u, sign_z })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `u*` sampled at the interior nodes of `grid`.
    pub fn sample_u(&self, grid: Grid) -> ScalarField {
        sample(grid, self.u.value)
    }

    pub fn sample_z(&self, grid: Grid) -> ScalarField {
        sample(grid, self.z.value)
    }

    fn parts(&self, which: Which) -> (&ClosedForm, &ClosedForm, &ClosedForm, &ClosedForm, f64) {
        match which {
            Which::U => (&self.u, &self.z, &self.a, &self.b, self.sign_z),
            Which::Z => (&self.z, &self.u, &self.big_a, &self.big_b, self.sign_u),
        }
    }

    /// Diffusion `a / (b + |v|)²` and its gradient.
    fn coefficient(&self, which: Which, p: [f64; 2]) -> (f64, [f64; 2]) {
        let (_, other, a, b, sign) = self.parts(which);
        let s = (b.value)(p) + (other.value)(p).abs();
        let (ga, gb, gv) = ((a.gradient)(p), (b.gradient)(p), (other.gradient)(p));
        let av = (a.value)(p);
        let c = av / (s * s);
        let grad = [0, 1].map(|i| ga[i] / (s * s) - 2.0 * av * (gb[i] + sign * gv[i]) / (s * s * s));
        (c, grad)
    }

    /// Analytic source `-div(c ∇w) + w` at `p`.
    fn source_at(&self, which: Which, p: [f64; 2]) -> f64 {
        let (w, ..) = self.parts(which);
        let (c, gc) = self.coefficient(which, p);
        let gw = (w.gradient)(p);
        let lap = (w.laplacian.expect("checked at registration"))(p);
        let advect: f64 = (0..self.dim).map(|i| gc[i] * gw[i]).sum();
        -(advect + c * lap) + (w.value)(p)
    }

    /// The same source with the divergence of the analytic flux taken by
    /// centred differences of step `delta`.
    fn source_fd_at(&self, which: Which, p: [f64; 2], delta: f64) -> f64 {
        let (w, ..) = self.parts(which);
        let flux = |q: [f64; 2], i: usize| self.coefficient(which, q).0 * (w.gradient)(q)[i];
        let div: f64 = (0..self.dim)
            .map(|i| {
                let (mut lo, mut hi) = (p, p);
                lo[i] -= delta / 2.0;
                hi[i] += delta / 2.0;
                (flux(hi, i) - flux(lo, i)) / delta
            })
            .sum();
        -div + (w.value)(p)
    }

    /// Worst relative mismatch over the interior nodes of `grid` between
    /// the analytic data and the flux-difference data at step `h / 8`,
    /// together with the analogous check of every shipped gradient.
    pub fn cross_check(&self, grid: Grid) -> f64 {
        let delta = grid.spacing(0) / 8.0;
        let points: Vec<[f64; 2]> = (0..grid.len()).map(|k| grid.position(k)).collect();
        let rel = |pairs: Vec<(f64, f64)>| {
            let scale = pairs.iter().fold(0.0f64, |m, &(a, _)| m.max(a.abs()));
            let diff = pairs.iter().fold(0.0f64, |m, &(a, b)| m.max((a - b).abs()));
            if diff == 0.0 {
                0.0
            } else {
                diff / scale
            }
        };
        let mut worst = 0.0f64;
        for which in [Which::U, Which::Z] {
            worst = worst.max(rel(points
                .iter()
                .map(|&p| (self.source_at(which, p), self.source_fd_at(which, p, delta)))
                .collect()));
        }
        for form in [&self.u, &self.z, &self.a, &self.big_a, &self.b, &self.big_b] {
            for i in 0..self.dim {
                worst = worst.max(rel(points
                    .iter()
                    .map(|&p| {
                        let (mut lo, mut hi) = (p, p);
                        lo[i] -= delta;
                        hi[i] += delta;
                        ((form.gradient)(p)[i], ((form.value)(hi) - (form.value)(lo)) / (2.0 * delta))
                    })
                    .collect()));
            }
        }
        worst
    }

    /// Data `(f, F)` on `grid`, after the finite-difference cross-check.
    pub fn manufacture(&self, grid: Grid) -> Result<(ScalarField, ScalarField)> {
        if grid.dim() != self.dim {
            return Err(Error::ManufacturedCase(format!(
                "{}: case is {}-dimensional, grid is {}-dimensional",
                self.name,
                self.dim,
                grid.dim()
            )));
        }
        let mismatch = self.cross_check(grid);
        if !(mismatch <= cross_check_tolerance(grid.spacing(0))) {
            return Err(Error::ManufacturedCase(format!(
                "{}: analytic derivatives disagree with finite differences (relative {mismatch:e})",
                self.name
            )));
        }
        Ok((
            ScalarField::from_fn(grid, |p| self.source_at(Which::U, p))?,
            ScalarField::from_fn(grid, |p| self.source_at(Which::Z, p))?,
        ))
    }

    /// The full problem on `grid` with manufactured data and tight bounds.
    pub fn problem(&self, grid: Grid) -> Result<ProblemSpec> {
        let (f, big_f) = self.manufacture(grid)?;
        let fields = [self.a, self.big_a, self.b, self.big_b].map(|c| sample(grid, c.value));
        let range = |x: &ScalarField, y: &ScalarField| {
            x.values().iter().chain(y.values()).fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        };
        let (alpha, beta) = range(&fields[0], &fields[1]);
        let (lambda, gamma) = range(&fields[2], &fields[3]);
        let [a, big_a, b, big_b] = fields;
        let spec = ProblemSpec::new(
            grid,
            Equation { diffusion: a, offset: b, source: f },
            Equation { diffusion: big_a, offset: big_b, source: big_f },
            StructuralBounds::new(alpha, beta, lambda, gamma)?,
        );
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy)]
enum Which {
    U,
    Z,
}

fn sample(grid: Grid, v: Scalar) -> ScalarField {
    ScalarField::from_fn(grid, v).expect("closed forms are finite on the unit domain")
}

/// Observed order between consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    /// First resolution: nothing to compare against.
    None,
    /// The finer error vanishes.
    Exact,
    Value(f64),
}

impl Order {
    fn between(coarse: f64, fine: f64) -> Order {
        if fine == 0.0 {
            Order::Exact
        } else {
            Order::Value((coarse / fine).log2())
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Order::Value(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::None => Ok(()),
            Order::Exact => f.write_str("exact"),
            Order::Value(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    /// Cells per axis; the grid has `cells - 1` interior nodes per axis.
    pub cells: usize,
    pub h: f64,
    pub error_u: f64,
    pub error_z: f64,
    pub order_u: Order,
    pub order_z: Order,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub case: String,
    pub rows: Vec<RateRow>,
}

pub const RATES_CSV_HEADER: &str = "case,h,error_u,error_z,order_u,order_z";

impl RateTable {
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{RATES_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", self.case, r.h, r.error_u, r.error_z, r.order_u, r.order_z)?;
        }
        Ok(())
    }

    /// Order between the last two rows.
    pub fn final_orders(&self) -> (Order, Order) {
        self.rows.last().map_or((Order::None, Order::None), |r| (r.order_u, r.order_z))
    }
}

/// Solves the manufactured problem at each resolution (cells per axis,
/// each twice the previous, at least three) without truncation and
/// tabulates discrete `L²` errors and observed orders.
pub fn convergence_study(case: &ManufacturedCase, resolutions: &[usize], cfg: &FixedPointConfig) -> Result<RateTable> {
    if resolutions.len() < 3 {
        return Err(Error::ManufacturedCase(format!("need at least 3 resolutions, got {}", resolutions.len())));
    }
    if resolutions[0] < 4 || resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::ManufacturedCase(format!(
            "resolutions must start at 4 or more cells and double each time, got {resolutions:?}"
        )));
    }
    let solved: Vec<Result<(f64, f64)>> = resolutions
        .par_iter()
        .map(|&cells| {
            let grid = Grid::unit(case.dim, cells - 1)?;
            let spec = case.problem(grid)?;
            let sol = solve_truncated(&spec, TruncationLevels::NONE, cfg)?;
            Ok((
                sol.u.sub(&case.sample_u(grid))?.l2_norm(),
                sol.z.sub(&case.sample_z(grid))?.l2_norm(),
            ))
        })
        .collect();
    let mut table = RateTable { case: case.name.clone(), rows: Vec::with_capacity(resolutions.len()) };
    for (&cells, outcome) in resolutions.iter().zip(solved) {
        let (error_u, error_z) = match outcome {
            Ok(e) => e,
            Err(source) => return Err(Error::StudyAborted { partial: Box::new(table), source: Box::new(source) }),
        };
        let (order_u, order_z) = match table.rows.last() {
            None => (Order::None, Order::None),
            Some(prev) => (Order::between(prev.error_u, error_u), Order::between(prev.error_z, error_z)),
        };
        table.rows.push(RateRow { cells, h: 1.0 / cells as f64, error_u, error_z, order_u, order_z });
    }
    Ok(table)
}

/// The shipped cases.
pub mod cases {
    use super::*;

    fn zero_case() -> ManufacturedCase {
        let z = ClosedForm::ZERO;
        ManufacturedCase::new("zero", 2, z, z, ClosedForm::ONE, ClosedForm::ONE, ClosedForm::ONE, ClosedForm::ONE)
            .expect("valid case")
    }

    /// `u* = sin(πx)`, unit coefficients, `z* = 0`.
    fn laplace_1d() -> ManufacturedCase {
        let u = ClosedForm::unknown(|p| (PI * p[0]).sin(), |p| [PI * (PI * p[0]).cos(), 0.0], |p| {
            -PI * PI * (PI * p[0]).sin()
        });
        let one = ClosedForm::ONE;
        ManufacturedCase::new("laplace-1d", 1, u, ClosedForm::ZERO, one, one, one, one).expect("valid case")
    }

    /// `u* = x(1-x)eˣ`, `a = 1 + x²`, `b = 1 + x/2`, `z* = 0`.
    fn frozen_1d() -> ManufacturedCase {
        let u = ClosedForm::unknown(
            |p| (p[0] - p[0] * p[0]) * p[0].exp(),
            |p| [(1.0 - p[0] - p[0] * p[0]) * p[0].exp(), 0.0],
            |p| -(3.0 * p[0] + p[0] * p[0]) * p[0].exp(),
        );
        let a = ClosedForm::coefficient(|p| 1.0 + p[0] * p[0], |p| [2.0 * p[0], 0.0]);
        let b = ClosedForm::coefficient(|p| 1.0 + 0.5 * p[0], |_| [0.5, 0.0]);
        let one = ClosedForm::ONE;
        ManufacturedCase::new("frozen-1d", 1, u, ClosedForm::ZERO, a, one, b, one).expect("valid case")
    }

    /// `u* = sin(πx)sin(2πy)`, `a = 1 + xy`, `b = 1 + x/2`, `z* = 0`.
    fn frozen_2d() -> ManufacturedCase {
        let u = ClosedForm::unknown(
            |p| (PI * p[0]).sin() * (2.0 * PI * p[1]).sin(),
            |p| {
                [
                    PI * (PI * p[0]).cos() * (2.0 * PI * p[1]).sin(),
                    2.0 * PI * (PI * p[0]).sin() * (2.0 * PI * p[1]).cos(),
                ]
            },
            |p| -5.0 * PI * PI * (PI * p[0]).sin() * (2.0 * PI * p[1]).sin(),
        );
        let a = ClosedForm::coefficient(|p| 1.0 + p[0] * p[1], |p| [p[1], p[0]]);
        let b = ClosedForm::coefficient(|p| 1.0 + 0.5 * p[0], |_| [0.5, 0.0]);
        let one = ClosedForm::ONE;
        ManufacturedCase::new("frozen-2d", 2, u, ClosedForm::ZERO, a, one, b, one).expect("valid case")
    }

    /// `u* = sin(πx)sin(πy)`, `z* = 16x(1-x)y(1-y)`, unit coefficients.
    fn coupled_2d() -> ManufacturedCase {
        let u = ClosedForm::unknown(
            |p| (PI * p[0]).sin() * (PI * p[1]).sin(),
            |p| [PI * (PI * p[0]).cos() * (PI * p[1]).sin(), PI * (PI * p[0]).sin() * (PI * p[1]).cos()],
            |p| -2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin(),
        );
        let z = ClosedForm::unknown(
            |p| 16.0 * p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]),
            |p| {
                [
                    16.0 * (1.0 - 2.0 * p[0]) * p[1] * (1.0 - p[1]),
                    16.0 * p[0] * (1.0 - p[0]) * (1.0 - 2.0 * p[1]),
                ]
            },
            |p| -32.0 * (p[1] * (1.0 - p[1]) + p[0] * (1.0 - p[0])),
        );
        let one = ClosedForm::ONE;
        ManufacturedCase::new("coupled-2d", 2, u, z, one, one, one, one).expect("valid case")
    }

    pub const NAMES: [&str; 5] = ["zero", "laplace-1d", "frozen-1d", "frozen-2d", "coupled-2d"];

    pub fn all() -> Vec<ManufacturedCase> {
        vec![zero_case(), laplace_1d(), frozen_1d(), frozen_2d(), coupled_2d()]
    }

    pub fn by_name(name: &str) -> Option<ManufacturedCase> {
        all().into_iter().find(|c| c.name() == name)
    }
}
