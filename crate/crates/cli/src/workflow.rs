//! The four experiment workflows and the files they write.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use degen_core::audit::{
    audit_equiintegrability, default_test_functions, estimate_audits, flux_convergence,
    gradient_equiintegrability_profile, FluxTable, KGrid,
};
use degen_core::coupled::{
    auto_levels, barrier_levels, residuals, solve_truncated, CoupledSolution, FixedPointConfig, TruncationLevels,
};
use degen_core::field::ScalarField;
use degen_core::ladder::{limit_residual, run_ladder_with, LadderReport, Rung};
use degen_core::mms::{cases, convergence_study, cross_check_tolerance, Order, RateTable};
use degen_core::grid::Grid;
use degen_core::problem::ProblemSpec;
use degen_core::report::AuditRecord;
use degen_core::truncation::approximate_datum;

use crate::config::{ExperimentConfig, Truncation, DEFAULT_MMS_CASE, DEFAULT_RESOLUTIONS};

/// What a finished workflow reports back to the exit-status logic.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub audits: Vec<AuditRecord>,
}

impl Outcome {
    pub fn all_passed(&self) -> bool {
        self.audits.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditRecord> {
        self.audits.iter().filter(|a| !a.passed)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_field(dir: &Path, name: &str, v: &ScalarField) -> Result<()> {
    v.write_to(create(dir, name)?)?;
    Ok(())
}

fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, name)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AuditRow<'a> {
    name: &'a str,
    context: &'a str,
    lhs: f64,
    rhs: f64,
    margin: f64,
    verdict: &'static str,
}

fn write_audits(dir: &Path, audits: &[AuditRecord]) -> Result<()> {
    // header is written even when there are no rows
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(dir, "audits.csv")?);
    w.write_record(["name", "context", "lhs", "rhs", "margin", "verdict"])?;
    for a in audits {
        w.serialize(AuditRow {
            name: &a.name,
            context: &a.context,
            lhs: a.lhs,
            rhs: a.rhs,
            margin: a.margin(),
            verdict: if a.passed { "pass" } else { "fail" },
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SolveRow {
    converged: bool,
    iterations: usize,
    damping: f64,
    halvings: u32,
    u_l2: f64,
    u_linf: f64,
    u_w11: f64,
    z_l2: f64,
    z_linf: f64,
    z_w11: f64,
    residual_u: f64,
    residual_z: f64,
}

fn levels_for(spec: &ProblemSpec, choice: Truncation) -> TruncationLevels {
    let (f, big_f) = (&spec.u_eq.source, &spec.z_eq.source);
    match choice {
        Truncation::Barrier => barrier_levels(f, big_f),
        Truncation::Auto => auto_levels(f, big_f),
        Truncation::None => TruncationLevels::NONE,
    }
}

fn kgrid(cfg: &ExperimentConfig, v: &ScalarField) -> Result<KGrid> {
    Ok(match &cfg.audit.k_grid {
        Some(levels) => KGrid::new(levels.clone())?,
        None => KGrid::from_quartiles(v),
    })
}

fn write_solution(dir: &Path, spec: &ProblemSpec, sol: &CoupledSolution, levels: TruncationLevels) -> Result<()> {
    write_field(dir, "solution_u.field", &sol.u)?;
    write_field(dir, "solution_z.field", &sol.z)?;
    let (residual_u, residual_z) = residuals(spec, &sol.u, &sol.z, levels)?;
    let r = &sol.report;
    write_rows(
        dir,
        "report.csv",
        [SolveRow {
            converged: r.converged,
            iterations: r.iterations,
            damping: r.damping,
            halvings: r.halvings,
            u_l2: r.u_norms.l2,
            u_linf: r.u_norms.linf,
            u_w11: r.u_norms.w11,
            z_l2: r.z_norms.l2,
            z_linf: r.z_norms.linf,
            z_w11: r.z_norms.w11,
            residual_u,
            residual_z,
        }],
    )?;
    #[derive(Serialize)]
    struct HistoryRow {
        iteration: usize,
        difference: f64,
    }
    write_rows(
        dir,
        "history.csv",
        r.differences.iter().enumerate().map(|(i, &difference)| HistoryRow { iteration: i + 1, difference }),
    )
}

/// One coupled solve with the configured data and truncation.
pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let spec = cfg.problem()?;
    let levels = levels_for(&spec, cfg.solver.truncation);
    let sol = solve_truncated(&spec, levels, &cfg.fixed_point()?)?;
    let mut audits = sol.report.audits.clone();
    audits.extend(estimate_audits(&spec, &sol.u, &sol.z, &kgrid(cfg, &sol.u)?, &kgrid(cfg, &sol.z)?)?);
    write_solution(out, &spec, &sol, levels)?;
    write_audits(out, &audits)?;
    Ok(Outcome { audits })
}

/// The spec with the rung's bounded data `(f_n, F_n)`.
fn rung_spec(spec: &ProblemSpec, n: u32) -> ProblemSpec {
    spec.with_sources(approximate_datum(&spec.u_eq.source, n), approximate_datum(&spec.z_eq.source, n))
}

fn rung_audits(cfg: &ExperimentConfig, spec: &ProblemSpec, rung: &Rung) -> Result<Vec<AuditRecord>> {
    let at = |a: AuditRecord| {
        let context = if a.context.is_empty() { format!("n={}", rung.n) } else { format!("n={} {}", rung.n, a.context) };
        a.with_context(context)
    };
    let rs = rung_spec(spec, rung.n);
    let mut audits: Vec<AuditRecord> = rung.report.audits.iter().cloned().map(at).collect();
    let estimates = estimate_audits(&rs, &rung.u, &rung.z, &kgrid(cfg, &rung.u)?, &kgrid(cfg, &rung.z)?)?;
    audits.extend(estimates.into_iter().map(at));
    Ok(audits)
}

fn ladder_outputs(cfg: &ExperimentConfig, out: &Path) -> Result<(ProblemSpec, LadderReport, Vec<AuditRecord>)> {
    let spec = cfg.problem()?;
    let report = run_ladder_with(&spec, &cfg.schedule()?, &cfg.fixed_point()?, cfg.start_mode())?;
    let mut audits = Vec::new();
    for rung in &report.rungs {
        audits.extend(rung_audits(cfg, &spec, rung)?);
    }
    let top = report.top();
    write_field(out, "solution_u.field", &top.u)?;
    write_field(out, "solution_z.field", &top.z)?;
    report.write_csv(create(out, "report.csv")?)?;
    #[derive(Serialize)]
    struct LimitRow {
        n: u32,
        residual_u: f64,
        residual_z: f64,
    }
    let limits = report
        .rungs
        .iter()
        .map(|r| {
            let (residual_u, residual_z) = limit_residual(&spec, &r.u, &r.z)?;
            Ok(LimitRow { n: r.n, residual_u, residual_z })
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(out, "limit.csv", limits)?;
    Ok((spec, report, audits))
}

/// The approximation ladder with per-rung estimate audits.
pub fn ladder(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let (_, _, audits) = ladder_outputs(cfg, out)?;
    write_audits(out, &audits)?;
    Ok(Outcome { audits })
}

fn write_flux(out: &Path, flux: &FluxTable) -> Result<()> {
    #[derive(Serialize)]
    struct CauchyRow<'a> {
        equation: &'a str,
        test: usize,
        n_from: u32,
        n_to: u32,
        pairing_from: f64,
        pairing_to: f64,
        difference: f64,
    }
    write_rows(
        out,
        "flux.csv",
        flux.cauchy.iter().map(|r| CauchyRow {
            equation: r.equation,
            test: r.test + 1,
            n_from: r.n_from,
            n_to: r.n_to,
            pairing_from: r.pairing_from,
            pairing_to: r.pairing_to,
            difference: r.difference,
        }),
    )?;
    #[derive(Serialize)]
    struct NormRow<'a> {
        equation: &'a str,
        n: u32,
        flux_l2_squared: f64,
        bound: f64,
        bound_printed: f64,
    }
    write_rows(
        out,
        "flux_norms.csv",
        flux.norms.iter().map(|r| NormRow {
            equation: r.equation,
            n: r.n,
            flux_l2_squared: r.flux_l2_squared,
            bound: r.bound,
            bound_printed: r.bound_printed,
        }),
    )
}

/// The ladder plus equiintegrability and flux-convergence diagnostics.
pub fn audit(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let (spec, report, mut audits) = ladder_outputs(cfg, out)?;
    let delta = cfg.delta()?;
    let alpha = spec.bounds.alpha;
    for rung in &report.rungs {
        let rs = rung_spec(&spec, rung.n);
        for (name, own, other, eq) in [("u", &rung.u, &rung.z, &rs.u_eq), ("z", &rung.z, &rung.u, &rs.z_eq)] {
            let ctx = |a: AuditRecord| {
                let context = format!("n={} {name} {}", rung.n, a.context);
                a.with_context(context)
            };
            audits.push(ctx(audit_equiintegrability(own, &eq.source, &kgrid(cfg, own)?, delta)?));
            let gradient = gradient_equiintegrability_profile(own, other, &eq.source, &eq.offset, alpha, &[delta])?;
            audits.extend(gradient.into_iter().map(ctx));
        }
    }
    let flux = flux_convergence(&spec, &report.views(), &default_test_functions(&spec.grid))?;
    audits.extend(flux.bound_audits());
    write_flux(out, &flux)?;
    write_audits(out, &audits)?;
    Ok(Outcome { audits })
}

/// A manufactured-solution convergence study.
pub fn mms(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let name = cfg.mms.case.as_deref().unwrap_or(DEFAULT_MMS_CASE);
    let case = cases::by_name(name)
        .with_context(|| format!("unknown manufactured case {name:?}; expected one of {}", cases::NAMES.join(", ")))?;
    let resolutions = cfg.mms.resolutions.clone().unwrap_or(DEFAULT_RESOLUTIONS.to_vec());
    let fp: FixedPointConfig = cfg.fixed_point()?;
    let table: RateTable = convergence_study(&case, &resolutions, &fp)?;
    table.write_csv(create(out, "rates.csv")?)?;

    let finest = *resolutions.last().expect("study checked the resolutions");
    let grid = Grid::unit(case.dim(), finest - 1)?;
    let spec = case.problem(grid)?;
    let sol = solve_truncated(&spec, TruncationLevels::NONE, &fp)?;
    let mut audits = sol.report.audits.clone();
    audits.push(AuditRecord::new("mms_cross_check", format!("h={}", grid.spacing(0)), case.cross_check(grid), cross_check_tolerance(grid.spacing(0)), 1.0));
    if let Some(min) = cfg.mms.min_order {
        anyhow::ensure!(min.is_finite(), "mms.min_order must be finite, got {min}");
        let (order_u, order_z) = table.final_orders();
        for (unknown, order) in [("u", order_u), ("z", order_z)] {
            // an exact solution has no order to audit
            if let Order::Value(p) = order {
                audits.push(AuditRecord::new("mms_order", format!("{unknown} h={}", grid.spacing(0)), min, p, 1.0));
            }
        }
    }
    write_solution(out, &spec, &sol, TruncationLevels::NONE)?;
    write_audits(out, &audits)?;
    Ok(Outcome { audits })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Ladder,
    Audit,
    Mms,
}

/// Loads the config, creates the output directory, and runs one workflow.
pub fn run(command: Command, config: &Path, out: Option<&Path>) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(config)?;
    let dir = cfg.output_dir(out);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    match command {
        Command::Solve => solve(&cfg, &dir),
        Command::Ladder => ladder(&cfg, &dir),
        Command::Audit => audit(&cfg, &dir),
        Command::Mms => mms(&cfg, &dir),
    }
}
