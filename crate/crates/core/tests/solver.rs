use approx::assert_abs_diff_eq;
use jitterpart::discrepancy::expected_l2sq;
use jitterpart::integral_equation::PolynomialCurve;
use jitterpart::regions::{make_half_plane, Profile};
use jitterpart::solver::{
    clamp_monotone, initial_guess, solve_fixed_alpha, solve_for_p, stationarity_check, stationarity_of, sweep,
    symmetrize, Clamp, Collocation, GnStatus, Initialization, SolveOutcome, SolverConfig, StationarityConfig,
};
use jitterpart::Error;
use proptest::prelude::*;

const REFERENCE_GRID: [f64; 7] = [0.423, 0.473, 0.523, 0.573, 0.623, 0.673, 0.723];

fn line_config() -> SolverConfig {
    SolverConfig {
        init: Initialization::Line,
        ..SolverConfig::default()
    }
}

fn check_outcome(o: &SolveOutcome, cfg: &SolverConfig) {
    assert!(o.converged, "p={} did not converge", o.p_target);
    assert!((o.p_achieved - o.p_target).abs() <= cfg.area_tol);
    assert_abs_diff_eq!(o.curve.area(), o.p_achieved, epsilon = 1e-12);
    assert!(o.curve.monotonicity_violation(10_000) <= 1e-9);
    assert!(o.curve.symmetry_error(1_000) <= 1e-6);
    assert!(o.residual_rms <= cfg.residual_tol);
}

#[test]
fn config_validation() {
    assert!(SolverConfig::default().validate().is_ok());
    let bad = [
        SolverConfig { degree: 11, ..SolverConfig::default() },
        SolverConfig { degree: 1, ..SolverConfig::default() },
        SolverConfig { n_nodes: 5, ..SolverConfig::default() },
        SolverConfig { area_tol: 0.0, ..SolverConfig::default() },
        SolverConfig { constraint_weight: f64::NAN, ..SolverConfig::default() },
    ];
    for cfg in &bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
        assert!(solve_for_p(0.5, cfg).is_err());
    }
    for p in [0.1, 0.29, 0.81, f64::NAN] {
        assert!(matches!(solve_for_p(p, &SolverConfig::default()), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn line_start_matches_the_anti_diagonal() {
    let cfg = line_config();
    let leg = initial_guess(1.0, &cfg).unwrap();
    let curve = PolynomialCurve::from_legendre(&leg, 1.0).unwrap();
    for x in [0.0, 0.3, 1.0] {
        assert_abs_diff_eq!(curve.value(x), 1.0 - x, epsilon = 1e-12);
    }
}

/// Unweighted node RMS of the anti-diagonal residual `A(x) - A(1 - x)`,
/// `A(x) = -2x^2 + 5x^3/3`, over `n` Gauss nodes on `[0, end]`.
fn anti_diagonal_node_rms(end: f64, n: usize) -> f64 {
    let a = |t: f64| -2.0 * t * t + 5.0 * t.powi(3) / 3.0;
    let rule = jitterpart::quadrature::gauss_legendre(n, 0.0, end).unwrap();
    (rule.nodes.iter().map(|&x| (a(x) - a(1.0 - x)).powi(2)).sum::<f64>() / n as f64).sqrt()
}

#[test]
fn gauss_newton_improves_the_anti_diagonal() {
    let raw = SolverConfig { collocation: Collocation::Raw, ..line_config() };
    let s = solve_fixed_alpha(1.0, 0.5, &raw, None).unwrap();
    assert_abs_diff_eq!(s.initial_rms, anti_diagonal_node_rms(1.0, 200), epsilon = 1e-9);
    assert_abs_diff_eq!(s.initial_rms, 0.318, epsilon = 1e-3);
    assert!(s.residual_rms < s.initial_rms);

    // The closure collocates on [0, x0] = [0, 1/2] only.
    let s = solve_fixed_alpha(1.0, 0.5, &line_config(), None).unwrap();
    assert_abs_diff_eq!(s.initial_rms, anti_diagonal_node_rms(0.5, 200), epsilon = 1e-9);
    assert!(s.residual_rms < 1e-3 && s.residual_rms < s.initial_rms, "rms {}", s.residual_rms);
}

#[test]
fn restarting_from_a_solution_stays_put() {
    let cfg = SolverConfig::default();
    let o = solve_for_p(0.573, &cfg).unwrap();
    let first = solve_fixed_alpha(o.alpha, 0.573, &cfg, None).unwrap();
    let again = solve_fixed_alpha(o.alpha, 0.573, &cfg, Some(&first.legendre)).unwrap();
    assert!(again.residual_rms <= first.residual_rms * (1.0 + 1e-9));
    assert!(again.iterations <= 2, "{} iterations, {:?}", again.iterations, again.status);
    let drift: f64 = first.legendre.iter().zip(&again.legendre).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-6, "drift {drift}");
    assert!(matches!(again.status, GnStatus::StepConverged | GnStatus::Stalled));
}

#[test]
fn clamp_fixtures() {
    let line = PolynomialCurve::new(vec![1.0, -1.0], 1.0).unwrap();
    assert_eq!(clamp_monotone(&line, 0.1).x_max, 0.0);
    let parabola = PolynomialCurve::new(vec![0.8, 0.1, -1.0], 0.9).unwrap();
    let c = clamp_monotone(&parabola, 0.1);
    // A flat maximum pins its location only to about sqrt(machine epsilon).
    assert_abs_diff_eq!(c.x_max, 0.05, epsilon = 1e-7);
    assert_abs_diff_eq!(c.y_max, 0.8025, epsilon = 1e-12);
}

#[test]
fn symmetrize_fixtures() {
    let line = PolynomialCurve::new(vec![0.9, -1.0], 0.9).unwrap();
    let s = symmetrize(&line, Clamp { x_max: 0.0, y_max: 0.9 }).unwrap();
    assert_abs_diff_eq!(s.x0, 0.45, epsilon = 1e-12);
    assert_abs_diff_eq!(s.value(0.7), 0.2, epsilon = 1e-12);
    assert_abs_diff_eq!(Profile::area(&s), 0.405, epsilon = 1e-12);

    let parabola = PolynomialCurve::new(vec![0.8, 0.1, -1.0], 0.9).unwrap();
    let s = symmetrize(&parabola, clamp_monotone(&parabola, 0.1)).unwrap();
    assert!(s.clamped());
    assert_abs_diff_eq!(s.value(0.0), 0.8025, epsilon = 1e-12);
    assert!(s.value(s.value(0.0) - 1e-9) >= s.x_max);
    assert!(s.symmetry_error(1000) <= 1e-6);

    let above = PolynomialCurve::new(vec![2.0, -0.1], 1.0).unwrap();
    assert!(matches!(
        symmetrize(&above, Clamp { x_max: 0.0, y_max: 2.0 }),
        Err(Error::NoFixedPoint { .. })
    ));
}

#[test]
fn clamp_appears_for_small_areas() {
    let cfg = SolverConfig::default();
    let o = solve_for_p(0.423, &cfg).unwrap();
    check_outcome(&o, &cfg);
    assert!(o.curve.x_max > 0.0 && o.curve.x_max < 0.3, "x_max {}", o.curve.x_max);
    let half = solve_for_p(0.5, &cfg).unwrap();
    check_outcome(&half, &cfg);
    assert!(half.curve.x_max > 0.0 && half.curve.x_max < 0.08);
}

#[test]
fn repeated_solves_are_bit_identical() {
    let cfg = SolverConfig::default();
    let a = serde_json::to_string(&solve_for_p(0.55, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&solve_for_p(0.55, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn solution_beats_the_anti_diagonal_at_equal_split() {
    let cfg = SolverConfig::default();
    let o = solve_for_p(0.5, &cfg).unwrap();
    let start = expected_l2sq(&make_half_plane(1.0, 1.0, 1.0).unwrap(), cfg.quad_tol_disc).unwrap().value;
    assert!(o.discrepancy.value <= start, "{} vs {start}", o.discrepancy.value);
    assert!(o.discrepancy.value < 0.0470);
}

#[test]
fn reference_grid_sweep() {
    let cfg = SolverConfig::default();
    let table = sweep(&REFERENCE_GRID, &cfg);
    assert_eq!(table.rows.len(), 7);
    for row in &table.rows {
        check_outcome(row.outcome.as_ref().unwrap(), &cfg);
    }
    assert_eq!(table.argmin, Some(0.573));
    let values: Vec<f64> = table.rows.iter().map(|r| r.discrepancy()).collect();
    // Unimodal around the minimum.
    assert!(values[..4].windows(2).all(|w| w[0] > w[1]));
    assert!(values[3..].windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn sweep_rows_are_independent() {
    let cfg = SolverConfig::default();
    let single = sweep(&[0.5], &cfg);
    assert_eq!(single.rows.len(), 1);
    let direct = solve_for_p(0.5, &cfg).unwrap();
    assert_eq!(
        serde_json::to_string(single.rows[0].outcome.as_ref().unwrap()).unwrap(),
        serde_json::to_string(&direct).unwrap()
    );
    let mixed = sweep(&[0.9, 0.5], &cfg);
    assert!(mixed.rows[0].outcome.is_none() && mixed.rows[0].error.is_some());
    assert!(mixed.rows[0].discrepancy().is_nan());
    assert_eq!(mixed.argmin, Some(0.5));
}

#[test]
fn refined_grid_locates_the_optimum() {
    let grid: Vec<f64> = (0..=5).map(|i| 0.55 + 0.01 * i as f64).collect();
    let table = sweep(&grid, &SolverConfig::default());
    let best = table.argmin.unwrap();
    assert!((best - 0.573).abs() <= 0.01, "argmin {best}");
}

#[test]
fn stationarity_separates_optimum_from_anti_diagonal() {
    let o = solve_for_p(0.573, &SolverConfig::default()).unwrap();
    let opt = stationarity_check(&o, 4, 1e-4).unwrap();
    assert!(opt <= 5e-3, "{opt}");
    let anti = PolynomialCurve::new(vec![1.0, -1.0], 1.0).unwrap();
    let sc = StationarityConfig { n_directions: 4, tol: 1e-8, ..StationarityConfig::default() };
    assert!(stationarity_of(&anti, &sc).unwrap() > 5e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn symmetrized_curves_are_monotone_and_symmetric(
        c1 in -1.5f64..-0.5, c2 in -0.6f64..0.3, c3 in -0.3f64..0.3, alpha in 0.6f64..1.0,
    ) {
        // Pin g(alpha) = 0 through the constant term.
        let c0 = -(c1 * alpha + c2 * alpha * alpha + c3 * alpha.powi(3));
        prop_assume!(c0 > 0.2 && c0 < 1.5);
        let curve = PolynomialCurve::new(vec![c0, c1, c2, c3], alpha).unwrap();
        let Ok(s) = symmetrize(&curve, clamp_monotone(&curve, 0.1)) else {
            return Ok(());
        };
        prop_assert!(s.monotonicity_violation(10_000) <= 1e-9);
        prop_assert!(s.symmetry_error(1_000) <= 1e-6);
        let g0 = s.value(0.0);
        prop_assert!(s.value(g0) <= 1e-9);
    }
}
