//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use homlab_core::cell::{homogenize_matrix, homogenize_p_energy};
use homlab_core::fields::*;
use homlab_core::numerics::SolverConfig;
use homlab_core::perforation::{
    extend_over_ball, lambda_problem_experiment, masked_window_value, penalization_sandwich,
    symmetric_difference_density, LambdaSetup, PerforationPerturbation, PerforationSet, Source,
};
use homlab_core::rve::{flux_average_window, window_sequence};
use homlab_core::stability::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn solver() -> SolverConfig {
    SolverConfig::default()
}

fn c1_harmonic_mean() -> Outcome {
    let a = CoefficientField::two_phase(1.0, 4.0);
    let v = homogenize_p_energy(&a, 2.0, &[1.0], 1024, &solver()).map_err(|e| e.to_string())?;
    // harmonic mean of 1 and 4
    let oracle = 2.0 / (1.0 + 0.25);
    ensure((v - oracle).abs() <= 1e-3, format!("value {v:.8}, oracle {oracle}"))
}

fn c2_layered() -> Outcome {
    let a = MatrixField::isotropic(CoefficientField::two_phase(1.0, 4.0), 2);
    let m = homogenize_matrix(&a, 256, &solver()).map_err(|e| e.to_string())?;
    let oracle = [[2.0 / 1.25, 0.0], [0.0, 2.5]];
    let err = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (m.entry(i, j) - oracle[i][j]).abs())
        .fold(0.0, f64::max);
    ensure(err <= 2e-2, format!("max entry error {err:.2e}"))
}

fn c3_checkerboard_duality() -> Outcome {
    let a = MatrixField::isotropic(CoefficientField::checkerboard(1.0, 4.0), 2);
    let dual = MatrixField::isotropic(CoefficientField::checkerboard(4.0, 1.0), 2);
    let mut errs = Vec::new();
    let mut last = (0.0, 0.0);
    for res in [64, 128, 256] {
        let m = homogenize_matrix(&a, res, &solver()).map_err(|e| e.to_string())?;
        let md = homogenize_matrix(&dual, res, &solver()).map_err(|e| e.to_string())?;
        // Keller-Dykhne: sqrt(1 * 4) I, and A(a) A(4/a) = 4 I
        errs.push((m.entry(0, 0) - 2.0).abs() / 2.0);
        last = (m.entry(0, 0), m.entry(0, 0) * md.entry(0, 0));
    }
    let improving = errs.windows(2).all(|w| w[1] < w[0]);
    ensure(
        errs[2] <= 0.05 && (last.1 - 4.0).abs() / 4.0 <= 0.05 && improving,
        format!("A11 {:.5}, product {:.5}, relative errors {}", last.0, last.1, sci(&errs)),
    )
}

/// Direct minimization of `½(a₁|g|^p + a₂|2ξ−g|^p)` over the gradient `g` in the
/// first phase, by golden-section search.
fn brute_force_two_phase(a1: f64, a2: f64, p: f64, xi: f64) -> f64 {
    let e = |g: f64| 0.5 * (a1 * g.abs().powf(p) + a2 * (2.0 * xi - g).abs().powf(p));
    let (mut lo, mut hi) = (-4.0 * xi.abs() - 1.0, 4.0 * xi.abs() + 1.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if e(m1) < e(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    e(0.5 * (lo + hi))
}

fn c4_p_laplacian() -> Outcome {
    let a = CoefficientField::two_phase(1.0, 4.0);
    let v = homogenize_p_energy(&a, 3.0, &[1.0], 1024, &solver()).map_err(|e| e.to_string())?;
    let brute = brute_force_two_phase(1.0, 4.0, 3.0, 1.0);
    let closed = 0.75f64.powi(-2);
    ensure(
        (v - closed).abs() <= 1e-3 && (v - brute).abs() <= 1e-3,
        format!("value {v:.6}, brute force {brute:.6}, closed form {closed:.6}"),
    )
}

fn c5_windows_to_cell() -> Outcome {
    let field = CoefficientField::checkerboard(1.0, 4.0);
    let res = 16;
    let cell = homogenize_matrix(&MatrixField::isotropic(field.clone(), 2), res, &solver())
        .map_err(|e| e.to_string())?
        .entry(0, 0);
    let est = window_sequence(
        &EnergyDensity::isotropic(field),
        &[0.0, 0.0],
        &[1.0, 0.0],
        &[4.0, 8.0, 16.0],
        res,
        &solver(),
    )
    .map_err(|e| e.to_string())?;
    let gaps: Vec<f64> = est.values.iter().map(|v| (v - cell).abs()).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    ensure(
        gaps[2] / cell <= 0.01 && decreasing,
        format!("cell {cell:.5}, windows {:.5?}, gaps {}", est.values, sci(&gaps)),
    )
}

fn sweep_pairs() -> Vec<(usize, CoefficientField, SparsePerturbationRule)> {
    use PerturbationSupport::*;
    let r = SparsePerturbationRule::new;
    let b1 = CoefficientField::two_phase(1.0, 4.0);
    let b2 = CoefficientField::checkerboard(1.0, 4.0);
    vec![
        (1, b1.clone(), r(Ball { radius: 1.0 }, 1.0)),
        (1, b1.clone(), r(Ball { radius: 2.0 }, -0.5)),
        (1, b1.clone(), r(PowerOfTwoCells { width: 1.0 }, 1.0)),
        (1, b1.clone(), r(PowerOfTwoCells { width: 0.5 }, 0.5)),
        (1, b1.clone(), r(LpDecay { exponent: 0.5 }, 1.0)),
        (1, b1, r(LpDecay { exponent: 1.0 }, -0.5)),
        (2, b2.clone(), r(Ball { radius: 1.0 }, 1.0)),
        (2, b2.clone(), r(PowerOfTwoCells { width: 1.0 }, 1.0)),
        (2, b2.clone(), r(LpDecay { exponent: 1.0 }, 1.0)),
        (2, b2, r(LpDecay { exponent: 1.5 }, -0.5)),
    ]
}

fn c6_soundness_sweep() -> Outcome {
    let mut agree = 0;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for (i, (d, base, rule)) in sweep_pairs().into_iter().enumerate() {
        let f = EnergyDensity::isotropic(base.clone());
        let g = EnergyDensity::isotropic(CoefficientField::perturbed_within(base, rule, FieldBounds::new(0.5, 5.0)));
        let cfg = if d == 1 {
            StabilityConfig::windows(1, vec![vec![0.0]], vec![8.0, 16.0, 32.0, 64.0], 16)
        } else {
            StabilityConfig::windows(2, vec![vec![0.0, 0.0]], vec![4.0, 8.0, 16.0], 4)
        };
        let r = run_stability_pair(&format!("pair{i}"), &f, &g, &cfg).map_err(|e| e.to_string())?;
        agree += (r.conclusion == Conclusion::ConditionHoldsLimitsAgree) as usize;
        violations += r.soundness_violation as usize;
        worst = worst.max(r.discrepancy / r.tolerance);
    }
    ensure(
        agree == 10 && violations == 0,
        format!("{agree}/10 agree, {violations} soundness violations, max discrepancy/tolerance {worst:.3}"),
    )
}

fn c7_non_necessity() -> Outcome {
    let suite = counterexample_suite(&CounterexampleConfig::default()).map_err(|e| e.to_string())?;
    let r = &suite.reports[0];
    // |a(y) − b(y)| = 3 everywhere for the swapped phases (1, 4) and (4, 1)
    let trace_err = r
        .statistic_trace
        .iter()
        .map(|p| (p.value - 3.0 * p.t * p.t).abs())
        .fold(0.0, f64::max);
    ensure(
        trace_err <= 1e-12 && r.discrepancy <= 1e-3 && r.conclusion == Conclusion::ConditionFailsLimitsAgree,
        format!(
            "{}: trace error {trace_err:.1e}, discrepancy {:.1e}, {}",
            r.name,
            r.discrepancy,
            r.conclusion.name()
        ),
    )
}

fn c8_half_space() -> Outcome {
    let f = EnergyDensity::isotropic(CoefficientField::half_space_step(2.0, 0.5));
    let sizes = [2.0, 4.0, 8.0];
    let lo = window_sequence(&f, &[-4.0], &[1.0], &sizes, 16, &solver()).map_err(|e| e.to_string())?;
    let hi = window_sequence(&f, &[4.0], &[1.0], &sizes, 16, &solver()).map_err(|e| e.to_string())?;
    let tol = 1e-8;
    ensure(
        (hi.last() - 2.5).abs() <= tol && (lo.last() - 1.5).abs() <= tol,
        format!("x0 = 4: {:.10}, x0 = -4: {:.10}", hi.last(), lo.last()),
    )
}

fn c9_flux() -> Outcome {
    let a = MatrixField::constant(&[vec![2.0, 1.0], vec![-1.0, 2.0]]).map_err(|e| e.to_string())?;
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
    };
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let xi = [next(), next()];
        let flux = flux_average_window(&a, &[0.3, -0.7], 4.0, &xi, 8, &solver()).map_err(|e| e.to_string())?;
        let exact = [2.0 * xi[0] + xi[1], -xi[0] + 2.0 * xi[1]];
        worst = worst.max((flux[0] - exact[0]).abs()).max((flux[1] - exact[1]).abs());
    }
    ensure(worst <= 1e-10, format!("max flux error {worst:.2e} over 5 directions"))
}

fn c10_penalization() -> Outcome {
    let e = PerforationSet::balls(0.25);
    let r = penalization_sandwich(&e, &[4, 16, 64, 256], &[1.0, 0.0], 64, &solver()).map_err(|e| e.to_string())?;
    let below = r.rows.iter().all(|row| r.masked <= row.penalized);
    let bounded = r.rows.iter().all(|row| row.penalized <= row.upper_bound);
    let gap = (r.rows[3].penalized - r.masked) / r.masked;
    ensure(
        below && bounded && r.strictly_decreasing && gap <= 0.02,
        format!(
            "masked {:.6}, penalized {:.6?}, C {:.4}, final gap {:.2}%",
            r.masked,
            r.rows.iter().map(|x| x.penalized).collect::<Vec<_>>(),
            r.extension_constant,
            100.0 * gap
        ),
    )
}

fn c11_extension_homothety() -> Outcome {
    let u = |x: [f64; 2]| x[0];
    let small = extend_over_ball(&u, 0.25, 32).map_err(|e| e.to_string())?.ratio;
    let large = extend_over_ball(&u, 2.0, 32).map_err(|e| e.to_string())?.ratio;
    ensure(
        (small - large).abs() <= 1e-3,
        format!("ratio at s = 0.25: {small:.8}, at s = 2: {large:.8}"),
    )
}

fn c12_perforation_perturbation() -> Outcome {
    let e = PerforationSet::balls(0.25);
    let other = e.with_perturbation(PerforationPerturbation::SparseRemoval);
    let mut rel = Vec::new();
    for r in [8.0, 16.0] {
        let a = masked_window_value(&e, &[0.0, 0.0], r, &[1.0, 0.0], 16, &solver()).map_err(|e| e.to_string())?;
        let b = masked_window_value(&other, &[0.0, 0.0], r, &[1.0, 0.0], 16, &solver()).map_err(|e| e.to_string())?;
        rel.push((a - b).abs() / a);
    }
    let dens: Vec<f64> = [16.0, 32.0, 64.0]
        .iter()
        .map(|&r| symmetric_difference_density(&e, &other, r, 32, 2))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(
        rel[1] <= 0.05 && rel[1] < rel[0] && dens.windows(2).all(|w| w[1] < w[0]),
        format!("relative window differences (R = 8, 16) {}, densities {}", sci(&rel), sci(&dens)),
    )
}

fn c13_lambda_problem() -> Outcome {
    let setup = LambdaSetup {
        lambda: 1.0,
        source: Source::Gaussian {
            amplitude: 1.0,
            width: 0.125,
        },
        epsilons: vec![0.25, 0.125, 0.0625],
        box_size: 2.0,
        n_penal: 256,
        resolution: 256,
        cell_resolution: 128,
    };
    let r = lambda_problem_experiment(&PerforationSet::balls(0.25), &setup, &solver()).map_err(|e| e.to_string())?;
    let control = lambda_problem_experiment(&PerforationSet::empty(), &setup, &solver()).map_err(|e| e.to_string())?;
    let control_max = control.distances.iter().cloned().fold(0.0, f64::max);
    let control_tol = solver().rel_tolerance.sqrt() * control.reference_norm;
    ensure(
        r.strictly_decreasing() && control_max <= control_tol,
        format!(
            "distances {}, no-hole control {control_max:.1e} (bound {control_tol:.1e})",
            sci(&r.distances)
        ),
    )
}

fn c14_stochastic() -> Outcome {
    let base = CoefficientField::random_checkerboard(1.0, 4.0, 0.5, 0);
    let rule = SparsePerturbationRule::new(PerturbationSupport::PowerOfTwoCells { width: 1.0 }, 3.0);
    let f = FieldFamily::new(EnergyDensity::isotropic(base.clone()));
    let g = FieldFamily::new(EnergyDensity::isotropic(CoefficientField::perturbed_within(
        base,
        rule,
        FieldBounds::new(1.0, 4.0),
    )));
    let r = stochastic_stability_experiment(&f, &g, &StochasticConfig::new(2, 16, 2024)).map_err(|e| e.to_string())?;
    let trace: Vec<f64> = r.expectation_trace.iter().map(|t| t.1).collect();
    let decreasing = trace.windows(2).all(|w| w[1] < w[0]);
    ensure(
        decreasing && r.intervals_overlap,
        format!(
            "expectation trace {trace:.4?}, A11 {:.4} vs {:.4}, overlap {}",
            r.mean_f[0][0], r.mean_g[0][0], r.intervals_overlap
        ),
    )
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| matches!(p.extension().and_then(|s| s.to_str()), Some("csv" | "svg")))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).expect("readable output"))
        })
        .collect();
    files.sort();
    files
}

fn c15_reproducibility() -> Outcome {
    let specs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&specs)
        .map_err(|e| e.to_string())?
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for spec in &names {
        let text = std::fs::read_to_string(spec).map_err(|e| e.to_string())?;
        let kind = homlab::parse_spec(&text).map_err(|e| e.to_string())?.experiment.kind();
        let mut runs = Vec::new();
        for run in ["a", "b"] {
            let out = tmp.path().join(run).join(kind);
            let status = Command::new(env!("CARGO_BIN_EXE_homlab"))
                .args([kind, "--seed", "7", "--spec"])
                .arg(spec)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{} exited with {}", spec.display(), status.status));
            }
            runs.push(outputs(&out));
        }
        if runs[0] != runs[1] {
            return Err(format!("{} produced different bytes", spec.display()));
        }
        compared += runs[0].len();
    }
    ensure(
        compared > 0,
        format!("{} specs, {compared} CSV/SVG files byte-identical across two runs", names.len()),
    )
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("1D harmonic mean", c1_harmonic_mean),
        ("layered 2D", c2_layered),
        ("checkerboard duality", c3_checkerboard_duality),
        ("p-Laplacian 1D", c4_p_laplacian),
        ("windows approach the cell value", c5_windows_to_cell),
        ("stability soundness sweep", c6_soundness_sweep),
        ("non-necessity counterexample", c7_non_necessity),
        ("non-homogenizable half space", c8_half_space),
        ("flux of a constant nonsymmetric matrix", c9_flux),
        ("penalization sandwich", c10_penalization),
        ("extension homothety", c11_extension_homothety),
        ("perforation perturbation", c12_perforation_perturbation),
        ("lambda problem convergence", c13_lambda_problem),
        ("stochastic stability", c14_stochastic),
        ("reproducibility", c15_reproducibility),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
