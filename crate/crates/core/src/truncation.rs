//! Truncation at level `k`, its remainder, the bounded data approximants,
//! and the degenerate diffusion coefficient `a / (b + |T_k(v)|)²`.

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// A truncation threshold, or no truncation at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationLevel {
    Finite(f64),
    Infinite,
}

impl TruncationLevel {
    /// A finite level. Zero is allowed: it clamps everything to 0.
    pub fn finite(k: f64) -> Result<Self> {
        if k.is_finite() && k >= 0.0 {
            Ok(TruncationLevel::Finite(k))
        } else {
            Err(Error::InvalidConstant(format!("truncation level must be finite and nonnegative, got {k}")))
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            TruncationLevel::Finite(k) => k,
            TruncationLevel::Infinite => f64::INFINITY,
        }
    }
}

/// `T_k(s)`: `s` inside `[-k, k]`, `k * sign(s)` outside.
pub fn truncate(s: f64, k: TruncationLevel) -> f64 {
    match k {
        TruncationLevel::Infinite => s,
        TruncationLevel::Finite(k) => s.clamp(-k, k),
    }
}

/// `G_k(s) = s - T_k(s)`, the excess beyond the band.
///
/// Returns a double `g` next to `s - T_k(s)` for which `T_k(s) + g == s`
/// holds in floating point. Such a `g` does not always exist: when every
/// candidate sum is a rounding tie that breaks away from `s` (for example
/// `s = 1.75 + 2^-52`, `k = 0.5 + 2^-53`), the correctly rounded difference
/// is returned and the identity is off by one ulp of `s`.
pub fn truncation_remainder(s: f64, k: TruncationLevel) -> f64 {
    let t = truncate(s, k);
    let g = s - t;
    if g + t == s {
        return g;
    }
    // s - t rounded away from the value that reproduces s
    [g.next_up(), g.next_down()].into_iter().find(|&c| c + t == s).unwrap_or(g)
}

/// Pointwise `f / (1 + |f| / n)`, bounded by `n` and by `|f|`.
pub fn approximate_datum(f: &ScalarField, n: u32) -> ScalarField {
    assert!(n >= 1, "approximation index must be at least 1");
    let n = f64::from(n);
    f.map(|v| v / (1.0 + v.abs() / n))
}

/// Nodal coefficient `a / (b + |T_level(v)|)²`.
pub fn degenerate_coefficient(
    a: &ScalarField,
    b: &ScalarField,
    v: &ScalarField,
    level: TruncationLevel,
) -> Result<ScalarField> {
    a.same_grid(b)?;
    a.same_grid(v)?;
    if let Some((node, &value)) = b.values().iter().enumerate().find(|(_, &x)| x <= 0.0) {
        return Err(Error::NonPositiveOffset { node, value });
    }
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .zip(v.values())
        .map(|((&a, &b), &v)| {
            let s = b + truncate(v, level).abs();
            a / (s * s)
        })
        .collect();
    ScalarField::new(*a.grid(), values)
}
