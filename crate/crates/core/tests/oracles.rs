use homlab_core::cell::{homogenize_matrix, homogenize_p_energy};
use homlab_core::fields::*;
use homlab_core::numerics::{minimize_p_energy, DofMap, Grid, PEnergyFunctional, SolverConfig, Topology};
use homlab_core::rve::{local_min_energy, window_sequence};
use homlab_core::stability::*;

fn solver() -> SolverConfig {
    SolverConfig::default()
}

fn layered(breaks: &[f64], values: &[f64]) -> CoefficientField {
    CoefficientField::new(FieldKind::Layered1d {
        breakpoints: breaks.to_vec(),
        values: values.to_vec(),
    })
}

/// `(∫₀¹ a^{-1/(p-1)})^{-(p-1)}` for a step function given by breakpoints.
fn layered_mean(breaks: &[f64], values: &[f64], p: f64) -> f64 {
    let mut s = 0.0;
    for (i, v) in values.iter().enumerate() {
        let end = breaks.get(i + 1).copied().unwrap_or(1.0);
        s += (end - breaks[i]) * v.powf(-1.0 / (p - 1.0));
    }
    s.powf(-(p - 1.0))
}

#[test]
fn one_dimensional_cells_give_the_harmonic_mean() {
    let breaks = [0.0, 0.125, 0.5, 0.8125];
    let values = [3.0, 0.7, 5.0, 1.9];
    let a = layered(&breaks, &values);
    let m = homogenize_matrix(&MatrixField::isotropic(a.clone(), 1), 64, &solver()).unwrap();
    let oracle = layered_mean(&breaks, &values, 2.0);
    assert!((m.entry(0, 0) - oracle).abs() < 1e-9, "{} vs {oracle}", m.entry(0, 0));
    let v = local_min_energy(&EnergyDensity::isotropic(a), &[3.5], 5.0, &[1.0], 64, &solver()).unwrap();
    assert!((v - oracle).abs() < 1e-9);
}

#[test]
fn one_dimensional_p_energy_matches_closed_form() {
    let breaks = [0.0, 0.25, 0.5];
    let values = [1.0, 2.0, 4.0];
    let a = layered(&breaks, &values);
    for (p, xi) in [(1.5, 1.0), (3.0, 0.5), (4.0, -2.0)] {
        let v = homogenize_p_energy(&a, p, &[xi], 256, &solver()).unwrap();
        let oracle = layered_mean(&breaks, &values, p) * f64::abs(xi).powf(p);
        assert!((v - oracle).abs() <= 1e-6 * oracle, "p = {p}: {v} vs {oracle}");
    }
}

#[test]
fn newton_iterates_never_raise_the_energy() {
    let grid = Grid::new(2, 16, &[0.0, 0.0], 1.0, Topology::Torus).unwrap();
    let a = CoefficientField::checkerboard(1.0, 4.0);
    let coeffs: Vec<Option<f64>> = (0..grid.num_elements())
        .map(|e| Some(a.eval(&grid.element_center(e))))
        .collect();
    let dofs = DofMap::periodic(&grid).unwrap();
    for p in [1.5, 3.0, 5.0] {
        let functional = PEnergyFunctional::new(&grid, &dofs, &coeffs, p, &[1.0, 0.3], 1.0).unwrap();
        let m = minimize_p_energy(&functional, &vec![0.0; dofs.n_free()], &solver()).unwrap();
        assert!(m.energies.len() >= 2);
        assert!(m.energies.windows(2).all(|w| w[1] <= w[0]), "p = {p}");
    }
}

#[test]
fn smooth_coefficients_converge_under_refinement() {
    let term = TrigTerm {
        amplitude: 1.0,
        frequency: vec![1.0, 1.0],
        phase: 0.0,
    };
    let a = MatrixField::isotropic(CoefficientField::trig_clamped(2.0, vec![term], FieldBounds::new(0.5, 5.0)), 2);
    let v: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| homogenize_matrix(&a, n, &solver()).unwrap().entry(0, 0))
        .collect();
    let ratio = (v[2] - v[1]).abs() / (v[1] - v[0]).abs();
    assert!(ratio <= 0.75, "{v:?}");
}

#[test]
fn checkerboard_differences_shrink_with_resolution() {
    let a = MatrixField::isotropic(CoefficientField::checkerboard(1.0, 4.0), 2);
    let v: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&n| homogenize_matrix(&a, n, &solver()).unwrap().entry(0, 0))
        .collect();
    let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{v:?}");
}

#[test]
fn constant_nonsymmetric_matrix_is_its_own_limit() {
    let rows = vec![vec![2.0, 1.0], vec![-1.0, 2.0]];
    let m = homogenize_matrix(&MatrixField::constant(&rows).unwrap(), 16, &solver()).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((m.entry(i, j) - rows[i][j]).abs() < 1e-10);
        }
    }
}

#[test]
fn every_sparse_rule_has_vanishing_mean() {
    use PerturbationSupport::*;
    let rules = [
        Ball { radius: 1.0 },
        PowerOfTwoCells { width: 1.0 },
        PowerOfTwoCells { width: 0.5 },
        LpDecay { exponent: 0.5 },
        LpDecay { exponent: 1.5 },
    ];
    for dim in [1, 2] {
        for support in rules {
            let base = CoefficientField::constant(2.0);
            let f = EnergyDensity::isotropic(base.clone());
            let g = EnergyDensity::isotropic(CoefficientField::perturbed(base, SparsePerturbationRule::new(support, 1.0)));
            let trace: Vec<f64> = [8.0, 16.0, 32.0, 64.0]
                .iter()
                .map(|&r| mean_abs_statistic(&f, &g, 1.0, r, 8, dim).unwrap())
                .collect();
            assert!(trace.windows(2).all(|w| w[1] < w[0]), "{support:?} d = {dim}: {trace:?}");
            assert!(trace[3] < 0.5 * trace[0]);
            assert_eq!(trace_verdict(&trace), ConditionVerdict::Vanishing);
        }
    }
}

#[test]
fn canonical_counterexamples_conclude_as_expected() {
    let suite = counterexample_suite(&CounterexampleConfig::default()).unwrap();
    suite.check().unwrap();
    assert!(suite.has_non_necessity_instance());
    assert!(suite.reports.iter().all(|r| !r.soundness_violation));
}

#[test]
fn half_space_windows_see_one_phase() {
    let f = EnergyDensity::isotropic(CoefficientField::half_space_step(2.0, 0.5));
    for (x0, expected) in [(-4.0, 1.5), (4.0, 2.5)] {
        let est = window_sequence(&f, &[x0], &[1.0], &[2.0, 4.0, 8.0], 16, &solver()).unwrap();
        assert!((est.last() - expected).abs() < 1e-10);
    }
    // a window straddling the interface mixes both phases harmonically
    let v = local_min_energy(&f, &[0.0], 4.0, &[1.0], 16, &solver()).unwrap();
    assert!((v - 2.0 / (1.0 / 1.5 + 1.0 / 2.5)).abs() < 1e-10);
}

#[test]
fn almost_periodic_approximants_approach_the_harmonic_mean() {
    let terms = vec![
        TrigTerm {
            amplitude: 1.0,
            frequency: vec![1.0],
            phase: 0.0,
        },
        TrigTerm {
            amplitude: 1.0,
            frequency: vec![std::f64::consts::SQRT_2],
            phase: 0.0,
        },
    ];
    let a = CoefficientField::trig_clamped(2.0, terms, FieldBounds::new(1.0, 3.5));
    let trace = run_approximation_scheme(&a, &ApproximationConfig::new(1, 5)).unwrap();
    // harmonic mean over a long interval by midpoint quadrature
    let (len, n) = (20000.0, 2_000_000usize);
    let h = len / n as f64;
    let inv: f64 = (0..n).map(|i| 1.0 / a.eval(&[(i as f64 + 0.5) * h])).sum::<f64>() / n as f64;
    let oracle = 1.0 / inv;
    let last = trace.entries.last().unwrap().homogenized[0][0];
    assert!((last - oracle).abs() / oracle < 2e-3, "{last} vs {oracle}");
    assert!(trace.approximates);
}

#[test]
fn repeated_solves_are_bit_identical() {
    let a = MatrixField::isotropic(CoefficientField::checkerboard(1.0, 4.0), 2);
    let first = homogenize_matrix(&a, 64, &solver()).unwrap();
    let second = homogenize_matrix(&a, 64, &solver()).unwrap();
    assert_eq!(first, second);
}
