use degen_core::builtin::builtin;
use degen_core::coupled::{barrier_levels, residuals, FixedPointConfig};
use degen_core::discretization::gradient_l1;
use degen_core::error::Error;
use degen_core::field::ScalarField;
use degen_core::grid::Grid;
use degen_core::ladder::{limit_residual, run_ladder, LadderSchedule};
use degen_core::problem::ProblemSpec;
use degen_core::truncation::approximate_datum;

#[test]
fn uniform_w11_bound_along_the_ladder() {
    for name in ["unit-square-constant", "symmetric", "spike"] {
        let spec = builtin(name, 31).unwrap();
        let report = run_ladder(&spec, &LadderSchedule::default(), &FixedPointConfig::default()).unwrap();
        let f = spec.u_eq.source.l2_norm();
        let bound = f * (spec.u_eq.offset.l2_norm() + f) / spec.bounds.alpha.sqrt();
        for rung in &report.rungs {
            assert!(rung.u_w11 <= 1.05 * bound, "{name} n={}", rung.n);
            assert_eq!(rung.u_w11, gradient_l1(&rung.u));
        }
    }
}

#[test]
fn limit_residual_is_the_data_mismatch_once_truncation_is_inactive() {
    let grid = Grid::unit(2, 15).unwrap();
    let f = ScalarField::from_fn(grid, |[x, y]| 2.0 + x - y).unwrap();
    let big_f = ScalarField::from_fn(grid, |[x, y]| 1.0 + x * y).unwrap();
    let spec = ProblemSpec::constant(grid, 1.0, 1.0, f.clone(), big_f.clone()).unwrap();
    let n_max = (10.0 * f.linf_norm().max(big_f.linf_norm())).ceil() as u32;
    let cfg = FixedPointConfig { tolerance: 1e-12, linear_tolerance: 1e-12, ..FixedPointConfig::default() };
    let report = run_ladder(&spec, &LadderSchedule::new(vec![1, n_max]).unwrap(), &cfg).unwrap();
    let top = report.top();
    let (f_n, big_f_n) = (approximate_datum(&f, n_max), approximate_datum(&big_f, n_max));
    let levels = barrier_levels(&f_n, &big_f_n);
    let (t1, t2) = residuals(&spec.with_sources(f_n.clone(), big_f_n.clone()), &top.u, &top.z, levels).unwrap();
    let (l1, l2) = limit_residual(&spec, &top.u, &top.z).unwrap();
    let mismatch = |a: &ScalarField, b: &ScalarField| a.sub(b).unwrap().l2_norm() / b.l2_norm();
    assert!((l1 - mismatch(&f_n, &f)).abs() <= 10.0 * t1.max(1e-12));
    assert!((l2 - mismatch(&big_f_n, &big_f)).abs() <= 10.0 * t2.max(1e-12));
}

#[test]
fn limit_residual_decreases_along_the_ladder() {
    for name in ["unit-square-constant", "symmetric", "spike"] {
        let spec = builtin(name, 31).unwrap();
        let report = run_ladder(&spec, &LadderSchedule::default(), &FixedPointConfig::default()).unwrap();
        let r: Vec<(f64, f64)> = report.rungs.iter().map(|g| limit_residual(&spec, &g.u, &g.z).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1].0 <= w[0].0 && w[1].1 <= w[0].1), "{name}: {r:?}");
    }
}

#[test]
fn data_error_strictly_decreases() {
    let spec = builtin("spike", 31).unwrap();
    let report = run_ladder(&spec, &LadderSchedule::default(), &FixedPointConfig::default()).unwrap();
    assert!(report.rungs.windows(2).all(|w| w[1].f_error < w[0].f_error && w[1].big_f_error < w[0].big_f_error));
}

#[test]
fn nonconvergence_names_the_rung() {
    let spec = builtin("unit-square-constant", 15).unwrap();
    let cfg = FixedPointConfig { max_iterations: 1, ..FixedPointConfig::default() };
    match run_ladder(&spec, &LadderSchedule::default(), &cfg) {
        Err(Error::Rung { n, .. }) => assert_eq!(n, 1),
        other => panic!("unexpected {other:?}"),
    }
}
