//! The approximation ladder: bounded data `f_n = f / (1 + |f|/n)` and the
//! coupled solutions `(u_n, z_n)` along an increasing schedule of `n`.

use std::io::Write;

use rayon::prelude::*;

use crate::audit::RungView;
use crate::coupled::{barrier_levels, residuals, solve_truncated, solve_truncated_from, CoupledSolution, FixedPointConfig, TruncationLevels};
use crate::discretization::gradient_l1;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::problem::ProblemSpec;
use crate::report::SolveReport;
use crate::truncation::approximate_datum;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderSchedule(Vec<u32>);

impl LadderSchedule {
    pub fn new(ns: Vec<u32>) -> Result<Self> {
        if ns.is_empty() {
            return Err(Error::Schedule("schedule is empty".into()));
        }
        if ns[0] < 1 {
            return Err(Error::Schedule("indices must be at least 1".into()));
        }
        if ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schedule(format!("indices must be strictly increasing, got {ns:?}")));
        }
        Ok(LadderSchedule(ns))
    }

    /// `1, 2, 4, ..., max` (powers of two up to `max`).
    pub fn dyadic(max: u32) -> Result<Self> {
        Self::new(std::iter::successors(Some(1u32), |&n| n.checked_mul(2)).take_while(|&n| n <= max).collect())
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }
}

impl Default for LadderSchedule {
    fn default() -> Self {
        Self::dyadic(64).expect("default schedule is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartMode {
    /// Each rung starts from the previous rung's solution.
    #[default]
    Warm,
    /// Every rung starts from zero; rungs are solved in parallel.
    Cold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rung {
    pub n: u32,
    pub u: ScalarField,
    pub z: ScalarField,
    pub levels: TruncationLevels,
    pub report: SolveReport,
    pub u_l2: f64,
    pub z_l2: f64,
    pub u_w11: f64,
    pub z_w11: f64,
    /// `‖f_n - f‖₂`.
    pub f_error: f64,
    /// `‖F_n - F‖₂`.
    pub big_f_error: f64,
    /// `‖u_n - u_prev‖₂` against the previous rung, if any.
    pub cauchy_u: Option<f64>,
    pub cauchy_z: Option<f64>,
}

impl Rung {
    pub fn view(&self) -> RungView<'_> {
        RungView { n: self.n, u: &self.u, z: &self.z }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub rungs: Vec<Rung>,
}

pub const LADDER_CSV_HEADER: &str =
    "n,converged,iterations,u_l2,z_l2,u_w11,z_w11,f_error_l2,F_error_l2,cauchy_u_l2,cauchy_z_l2";

impl LadderReport {
    pub fn top(&self) -> &Rung {
        self.rungs.last().expect("a ladder has at least one rung")
    }

    pub fn views(&self) -> Vec<RungView<'_>> {
        self.rungs.iter().map(Rung::view).collect()
    }

    /// One row per rung; Cauchy columns are empty on the first rung.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{LADDER_CSV_HEADER}")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rungs {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.report.converged,
                r.report.iterations,
                r.u_l2,
                r.z_l2,
                r.u_w11,
                r.z_w11,
                r.f_error,
                r.big_f_error,
                opt(r.cauchy_u),
                opt(r.cauchy_z)
            )?;
        }
        Ok(())
    }
}

fn solve_rung(spec: &ProblemSpec, n: u32, cfg: &FixedPointConfig, start: Option<(&ScalarField, &ScalarField)>) -> Result<(Rung, CoupledSolution)> {
    let f_n = approximate_datum(&spec.u_eq.source, n);
    let big_f_n = approximate_datum(&spec.z_eq.source, n);
    let levels = barrier_levels(&f_n, &big_f_n);
    let rung_spec = spec.with_sources(f_n.clone(), big_f_n.clone());
    let solved = match start {
        Some((u0, z0)) => solve_truncated_from(&rung_spec, levels, cfg, u0, z0),
        None => solve_truncated(&rung_spec, levels, cfg),
    }
    .map_err(|e| Error::Rung { n, source: Box::new(e) })?;
    let rung = Rung {
        n,
        u: solved.u.clone(),
        z: solved.z.clone(),
        levels,
        report: solved.report.clone(),
        u_l2: solved.u.l2_norm(),
        z_l2: solved.z.l2_norm(),
        u_w11: gradient_l1(&solved.u),
        z_w11: gradient_l1(&solved.z),
        f_error: f_n.sub(&spec.u_eq.source)?.l2_norm(),
        big_f_error: big_f_n.sub(&spec.z_eq.source)?.l2_norm(),
        cauchy_u: None,
        cauchy_z: None,
    };
    Ok((rung, solved))
}

pub fn run_ladder(spec: &ProblemSpec, schedule: &LadderSchedule, cfg: &FixedPointConfig) -> Result<LadderReport> {
    run_ladder_with(spec, schedule, cfg, StartMode::Warm)
}

pub fn run_ladder_with(spec: &ProblemSpec, schedule: &LadderSchedule, cfg: &FixedPointConfig, mode: StartMode) -> Result<LadderReport> {
    spec.validate()?;
    let mut rungs = match mode {
        StartMode::Warm => {
            let mut rungs: Vec<Rung> = Vec::with_capacity(schedule.indices().len());
            for &n in schedule.indices() {
                let start = rungs.last().map(|r| (&r.u, &r.z));
                let (rung, _) = solve_rung(spec, n, cfg, start)?;
                rungs.push(rung);
            }
            rungs
        }
        StartMode::Cold => schedule
            .indices()
            .par_iter()
            .map(|&n| solve_rung(spec, n, cfg, None).map(|(rung, _)| rung))
            .collect::<Result<Vec<_>>>()?,
    };
    for j in 1..rungs.len() {
        let (prev, cur) = rungs.split_at_mut(j);
        let (prev, cur) = (&prev[j - 1], &mut cur[0]);
        cur.cauchy_u = Some(cur.u.sub(&prev.u)?.l2_norm());
        cur.cauchy_z = Some(cur.z.sub(&prev.z)?.l2_norm());
    }
    Ok(LadderReport { rungs })
}

/// Residuals of the untruncated system with the original data `(f, F)`.
pub fn limit_residual(spec: &ProblemSpec, u: &ScalarField, z: &ScalarField) -> Result<(f64, f64)> {
    residuals(spec, u, z, TruncationLevels::NONE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn schedule_validation() {
        assert_eq!(LadderSchedule::default().indices(), &[1, 2, 4, 8, 16, 32, 64]);
        assert!(LadderSchedule::new(vec![]).is_err());
        assert!(LadderSchedule::new(vec![0, 1]).is_err());
        assert!(LadderSchedule::new(vec![1, 4, 4]).is_err());
        assert!(LadderSchedule::new(vec![3]).is_ok());
    }

    #[test]
    fn zero_data_ladder() {
        let grid = Grid::unit(2, 7).unwrap();
        let zero = ScalarField::zeros(grid);
        let spec = ProblemSpec::constant(grid, 1.0, 1.0, zero.clone(), zero).unwrap();
        let report = run_ladder(&spec, &LadderSchedule::default(), &FixedPointConfig::default()).unwrap();
        assert_eq!(report.rungs.len(), 7);
        for r in &report.rungs {
            assert!(r.u.values().iter().chain(r.z.values()).all(|&v| v == 0.0));
            assert!(r.cauchy_u.unwrap_or(0.0) == 0.0 && r.cauchy_z.unwrap_or(0.0) == 0.0);
        }
        let (r1, r2) = limit_residual(&spec, &report.top().u, &report.top().z).unwrap();
        assert_eq!((r1, r2), (0.0, 0.0));
    }

    #[test]
    fn data_error_bound_for_large_n() {
        let grid = Grid::line(31, 1.0).unwrap();
        let f = ScalarField::from_fn(grid, |[x, _]| 3.0 * (7.0 * x).sin()).unwrap();
        let m = f.linf_norm();
        for n in [(10.0 * m).ceil() as u32, 64, 200] {
            let err = approximate_datum(&f, n).sub(&f).unwrap().l2_norm();
            assert!(err <= f.l2_norm() / 10.0, "n = {n}");
        }
    }

    #[test]
    fn warm_and_cold_agree_and_csv_shape() {
        let grid = Grid::unit(2, 9).unwrap();
        let f = ScalarField::from_fn(grid, |[x, y]| 6.0 * x * y + 1.0).unwrap();
        let spec = ProblemSpec::constant(grid, 1.0, 1.0, f.clone(), f.map(|v| 0.5 * v)).unwrap();
        let cfg = FixedPointConfig::default();
        let schedule = LadderSchedule::dyadic(16).unwrap();
        let warm = run_ladder_with(&spec, &schedule, &cfg, StartMode::Warm).unwrap();
        let cold = run_ladder_with(&spec, &schedule, &cfg, StartMode::Cold).unwrap();
        for (w, c) in warm.rungs.iter().zip(&cold.rungs) {
            assert!(w.u.sub(&c.u).unwrap().linf_norm() <= 10.0 * cfg.tolerance);
            assert!(w.z.sub(&c.z).unwrap().linf_norm() <= 10.0 * cfg.tolerance);
        }
        assert!(warm.rungs.windows(2).all(|w| w[1].f_error < w[0].f_error));
        let mut buf = Vec::new();
        warm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 1 + schedule.indices().len());
        assert!(lines[1].ends_with(",,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 11));
    }
}
