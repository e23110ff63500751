use std::fmt;

/// One checked inequality `lhs <= rhs * tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub name: String,
    /// Where the check was taken: rung, threshold, fraction, ...
    pub context: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl AuditRecord {
    pub fn new(name: impl Into<String>, context: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        assert!(tolerance >= 1.0, "tolerance factor must be at least 1");
        AuditRecord {
            name: name.into(),
            context: context.into(),
            lhs,
            rhs,
            tolerance,
            passed: lhs <= rhs * tolerance,
        }
    }

    pub fn margin(&self) -> f64 {
        self.rhs * self.tolerance - self.lhs
    }

    /// Whether the stored verdict agrees with the stored numbers.
    pub fn is_consistent(&self) -> bool {
        self.passed == (self.lhs <= self.rhs * self.tolerance)
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = context.into();
        self
    }
}

impl fmt::Display for AuditRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {:.6e} <= {:.6e} x {}: {}",
            self.name,
            self.context,
            self.lhs,
            self.rhs,
            self.tolerance,
            if self.passed { "pass" } else { "FAIL" }
        )
    }
}

/// Summary norms of one unknown.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    /// Discrete `W^{1,1}_0` seminorm, see [`crate::discretization::gradient_l1`].
    pub w11: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Successive-iterate `L²` differences, one per iteration.
    pub differences: Vec<f64>,
    pub damping: f64,
    pub halvings: u32,
    pub u_norms: Norms,
    pub z_norms: Norms,
    pub audits: Vec<AuditRecord>,
}

impl SolveReport {
    pub fn all_audits_pass(&self) -> bool {
        self.audits.iter().all(|a| a.passed)
    }
}
