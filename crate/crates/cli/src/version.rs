//! Version line with a fingerprint of the numerical conventions, so that
//! archived CSV files can be matched to the scheme that produced them.

use sha2::{Digest, Sha256};

use degen_core::discretization::{assemble, gradient_l1};
use degen_core::field::ScalarField;
use degen_core::grid::Grid;
use degen_core::truncation::{degenerate_coefficient, truncation_remainder, TruncationLevel};

pub const CONVENTIONS: &str = "grid=vertex-centred interior nodes, h=L/(n+1), row-major j*nx+i; \
boundary=zero Dirichlet by elimination; faces=harmonic mean, boundary faces take the interior value; \
stencil=3/5-point flux form plus identity reaction; quadrature=nodal midpoint; \
w11=dual-cell axis-averaged differences, Euclidean norm; data approximant=f/(1+|f|/n)";

/// Numbers produced by the actual stencil, gradient and truncation code on
/// a fixed probe, so that a change in any of them changes the digest.
fn probe() -> Vec<f64> {
    let grid = Grid::rectangle(4, 3, 1.0, 0.75).expect("probe grid");
    let field = |f: fn([f64; 2]) -> f64| ScalarField::from_fn(grid, f).expect("probe field");
    let a = field(|[x, y]| 1.0 + x + 2.0 * y);
    let b = field(|[x, _]| 0.5 + x);
    let v = field(|[x, y]| (3.0 * x - y).sin() * 4.0);
    let d = degenerate_coefficient(&a, &b, &v, TruncationLevel::Finite(1.5)).expect("probe coefficient");
    let op = assemble(&d).expect("probe operator");
    let mut out: Vec<f64> = op.values().to_vec();
    out.extend(op.col_indices().iter().map(|&c| c as f64));
    out.push(gradient_l1(&v));
    out.push(truncation_remainder(-7.25, TruncationLevel::Finite(2.0)));
    out
}

pub fn fingerprint() -> String {
    let mut h = Sha256::new();
    h.update(CONVENTIONS.as_bytes());
    for x in probe() {
        h.update(x.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

pub fn version_line() -> String {
    format!("degen-sys {} conventions {}", env!("CARGO_PKG_VERSION"), fingerprint())
}
