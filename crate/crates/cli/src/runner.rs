//! Runs a parsed spec and writes its tables and plots.

use std::path::{Path, PathBuf};

use homlab_core::cell::{homogenize_matrix, homogenize_p_energy_samples, HomogenizedForm};
use homlab_core::fields::{EnergyDensity, FieldFamily};
use homlab_core::perforation::{
    lambda_problem_experiment, masked_window_value, penalization_sandwich, symmetric_difference_density,
};
use homlab_core::rve::window_sequence;
use homlab_core::stability::{
    counterexample_suite, run_stability_pair, stochastic_stability_experiment, CounterexampleConfig,
    HomogenizedOutput, StabilityConfig, StabilityReport, StochasticConfig,
};
use thiserror::Error;

use crate::output::{plot_series, write_atomic, OutputError, PlotOptions, Series, Table};
use crate::spec::{
    CellSpec, CounterexampleSpec, Experiment, ExperimentSpec, PerforationSpec, RveSpec, StabilitySpec,
    StochasticSpec,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Solver(#[from] homlab_core::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub plots: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
    /// Set when any report combines a vanishing statistic with differing limits.
    pub soundness_violation: bool,
}

struct Artifacts {
    tables: Vec<(String, Table)>,
    plots: Vec<(String, Vec<Series>, PlotOptions)>,
    json: Vec<(String, serde_json::Value)>,
    outcome: RunOutcome,
}

impl Artifacts {
    fn new() -> Self {
        Artifacts {
            tables: Vec::new(),
            plots: Vec::new(),
            json: Vec::new(),
            outcome: RunOutcome::default(),
        }
    }

    fn plot(&mut self, name: &str, series: Vec<Series>, title: &str, x: &str, y: &str, log_x: bool) {
        self.plots.push((
            name.to_string(),
            series,
            PlotOptions {
                title: title.to_string(),
                x_label: x.to_string(),
                y_label: y.to_string(),
                log_x,
            },
        ));
    }

    fn line(&mut self, s: String) {
        self.outcome.summary.push(s);
    }
}

fn matrix_cells(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

fn matrix_header(prefix: &str, d: usize) -> Vec<String> {
    let mut h = Vec::new();
    for i in 1..=d {
        for j in 1..=d {
            h.push(format!("{prefix}{i}{j}"));
        }
    }
    h
}

fn run_cell(spec: &ExperimentSpec, c: &CellSpec, art: &mut Artifacts) -> Result<(), RunError> {
    let levels: Vec<usize> = (0..c.levels).rev().map(|k| c.resolution >> k).collect();
    match &c.field {
        EnergyDensity::PPower { a, p } => {
            let mut t = Table::new(&["resolution", "sample", "xi", "value"]);
            let mut series: Vec<Series> = c
                .xis
                .iter()
                .enumerate()
                .map(|(i, _)| Series {
                    label: format!("xi {}", i + 1),
                    points: Vec::new(),
                })
                .collect();
            for &res in &levels {
                let r = homogenize_p_energy_samples(a, *p, &c.xis, res, &spec.solver)
                    .map_err(|e| e.at_stage(format!("cell resolution {res}")))?;
                let HomogenizedForm::EnergySamples(samples) = &r.form else { unreachable!() };
                for (i, (xi, v)) in samples.iter().enumerate() {
                    let xi_s: Vec<String> = xi.iter().map(|x| crate::output::fmt_num(*x)).collect();
                    t.push(vec![res.into(), (i + 1).into(), xi_s.join(" ").into(), (*v).into()]);
                    series[i].points.push((res as f64, *v));
                }
            }
            art.line(format!("p-energy cell values for {}", c.field.describe()));
            art.tables.push(("cell".into(), t));
            if levels.len() >= 2 {
                art.plot("cell", series, "cell value vs resolution", "resolution", "value", true);
            }
        }
        _ => {
            let a = c.field.as_matrix_field(c.dim).expect("quadratic density");
            let mut header = vec!["resolution".to_string()];
            header.extend(matrix_header("a", c.dim));
            header.push("energy_flux_gap".into());
            let mut t = Table {
                header,
                rows: Vec::new(),
            };
            let mut series = vec![Series {
                label: "a11".into(),
                points: Vec::new(),
            }];
            if c.dim == 2 {
                series.push(Series {
                    label: "a22".into(),
                    points: Vec::new(),
                });
            }
            for &res in &levels {
                let r = homogenize_matrix(&a, res, &spec.solver).map_err(|e| e.at_stage(format!("cell resolution {res}")))?;
                let m = r.matrix().expect("matrix").clone();
                let mut row: Vec<crate::output::Cell> = vec![res.into()];
                row.extend(matrix_cells(&m).into_iter().map(Into::into));
                row.push(r.energy_flux_gap.map_or(crate::output::Cell::Text("".into()), Into::into));
                t.push(row);
                for (k, s) in series.iter_mut().enumerate() {
                    s.points.push((res as f64, m[k][k]));
                }
                art.line(format!("resolution {res}: {:?}", m));
            }
            art.tables.push(("cell".into(), t));
            if levels.len() >= 2 {
                art.plot("cell", series, "homogenized entries vs resolution", "resolution", "value", true);
            }
        }
    }
    Ok(())
}

fn run_rve(spec: &ExperimentSpec, r: &RveSpec, art: &mut Artifacts) -> Result<(), RunError> {
    let mut t = Table::new(&["center", "R", "value", "increment"]);
    let mut summary = Table::new(&["center", "value", "cauchy_gap", "homogenizable"]);
    let mut series = Vec::new();
    for x0 in &r.centers {
        let est = window_sequence(&r.field, x0, &r.xi, &r.window_sizes, r.resolution_per_unit, &spec.solver)
            .map_err(|e| e.at_stage("windows"))?;
        let label: Vec<String> = x0.iter().map(|v| crate::output::fmt_num(*v)).collect();
        let label = label.join(" ");
        for (rr, v, gap) in est.rows() {
            let gap = if gap.is_nan() { crate::output::Cell::Text("".into()) } else { gap.into() };
            t.push(vec![label.clone().into(), rr.into(), v.into(), gap]);
        }
        summary.push(vec![
            label.clone().into(),
            est.last().into(),
            est.cauchy_gap.into(),
            est.homogenizable.into(),
        ]);
        art.line(format!(
            "center [{label}]: value {:.6} gap {:.3e} homogenizable {}",
            est.last(),
            est.cauchy_gap,
            est.homogenizable
        ));
        series.push(Series {
            label: format!("x0 = {label}"),
            points: est.window_sizes.iter().copied().zip(est.values.iter().copied()).collect(),
        });
    }
    art.tables.push(("windows".into(), t));
    art.tables.push(("summary".into(), summary));
    art.plot("windows", series, "window estimate vs R", "R", "value", true);
    Ok(())
}

fn stability_tables(name: &str, rep: &StabilityReport, art: &mut Artifacts) {
    let mut t = Table::new(&["t", "R", "psi", "signed_mean"]);
    for p in &rep.statistic_trace {
        let signed = rep
            .signed_mean_trace
            .iter()
            .find(|(r, _)| *r == p.r)
            .map_or(crate::output::Cell::Text("".into()), |(_, v)| (*v).into());
        t.push(vec![p.t.into(), p.r.into(), p.value.into(), signed]);
    }
    art.tables.push((name.to_string(), t));
    let mut by_t: Vec<Series> = Vec::new();
    for p in &rep.statistic_trace {
        let label = format!("t = {}", crate::output::fmt_num(p.t));
        match by_t.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((p.r, p.value)),
            None => by_t.push(Series {
                label,
                points: vec![(p.r, p.value)],
            }),
        }
    }
    art.plot(name, by_t, &format!("{name}: statistic vs R"), "R", "psi", true);
    art.json.push((format!("{name}_report"), serde_json::to_value(rep).expect("serializable")));
    art.outcome.soundness_violation |= rep.soundness_violation;
    art.line(format!(
        "{}: {:?}, discrepancy {:.3e}, tolerance {:.3e} -> {}",
        rep.name,
        rep.condition_verdict,
        rep.discrepancy,
        rep.tolerance,
        rep.conclusion.name()
    ));
    for d in &rep.diagnostics {
        art.line(format!("  {d}"));
    }
}

fn summary_row(t: &mut Table, rep: &StabilityReport) {
    t.push(vec![
        rep.name.clone().into(),
        rep.f_id.clone().into(),
        rep.g_id.clone().into(),
        format!("{:?}", rep.condition_verdict).to_lowercase().into(),
        rep.discrepancy.into(),
        rep.tolerance.into(),
        rep.conclusion.name().into(),
        rep.soundness_violation.into(),
    ]);
}

const SUMMARY_HEADER: [&str; 8] = [
    "name",
    "f",
    "g",
    "verdict",
    "discrepancy",
    "tolerance",
    "conclusion",
    "soundness_violation",
];

fn run_stability(spec: &ExperimentSpec, s: &StabilitySpec, art: &mut Artifacts) -> Result<(), RunError> {
    let cfg = StabilityConfig {
        dim: s.dim,
        t_list: s.t_list.clone(),
        r_list: s.r_list.clone(),
        quadrature_resolution: s.quadrature_resolution,
        method: s.homogenization.clone(),
        xis: s.xis.clone(),
        tolerance: s.tolerance,
        tolerance_floor: s.tolerance_floor,
        solver: spec.solver,
    };
    let rep = run_stability_pair(&spec.name, &s.f, &s.g, &cfg)?;
    let mut sum = Table::new(&SUMMARY_HEADER);
    summary_row(&mut sum, &rep);
    let mut h = Table::new(&["density", "index", "value"]);
    for (label, out) in [("f", &rep.homogenized_f), ("g", &rep.homogenized_g)] {
        let values: Vec<f64> = match out {
            HomogenizedOutput::Cell { result } => match &result.form {
                HomogenizedForm::Matrix(m) => matrix_cells(m),
                HomogenizedForm::EnergySamples(v) => v.iter().map(|x| x.1).collect(),
            },
            HomogenizedOutput::Windows { estimates } => estimates.iter().map(|e| e.last()).collect(),
        };
        for (i, v) in values.into_iter().enumerate() {
            h.push(vec![label.into(), (i + 1).into(), v.into()]);
        }
    }
    stability_tables("statistic", &rep, art);
    art.tables.push(("homogenized".into(), h));
    art.tables.push(("summary".into(), sum));
    Ok(())
}

fn run_counterexamples(spec: &ExperimentSpec, c: &CounterexampleSpec, art: &mut Artifacts) -> Result<(), RunError> {
    let cfg = CounterexampleConfig {
        r_list: c.r_list.clone(),
        quadrature_resolution: c.quadrature_resolution,
        cell_resolution_1d: c.cell_resolution_1d,
        cell_resolution_2d: c.cell_resolution_2d,
        window_offset: c.window_offset,
        window_sizes: c.window_sizes.clone(),
        window_resolution: c.window_resolution,
        solver: spec.solver,
    };
    let suite = counterexample_suite(&cfg)?;
    for rep in &suite.reports {
        stability_tables(&rep.name, rep, art);
    }
    art.line(format!(
        "non-necessity instance present: {}",
        suite.has_non_necessity_instance()
    ));
    Ok(())
}

fn run_perforation(spec: &ExperimentSpec, p: &PerforationSpec, art: &mut Artifacts) -> Result<(), RunError> {
    let sand = penalization_sandwich(&p.set, &p.n_list, &p.xi, p.resolution, &spec.solver)
        .map_err(|e| e.at_stage("penalization"))?;
    let mut t = Table::new(&["n", "penalized", "masked", "upper_bound"]);
    for r in &sand.rows {
        t.push(vec![r.n.into(), r.penalized.into(), sand.masked.into(), r.upper_bound.into()]);
    }
    art.line(format!(
        "masked {:.6}, extension constant {:.6}, sandwich holds {}, strictly decreasing {}",
        sand.masked, sand.extension_constant, sand.sandwich_holds, sand.strictly_decreasing
    ));
    art.tables.push(("penalization".into(), t));
    if sand.rows.len() >= 2 {
        let pts = |f: &dyn Fn(&homlab_core::perforation::PenalizationRow) -> f64| {
            sand.rows.iter().map(|r| (r.n as f64, f(r))).collect()
        };
        art.plot(
            "penalization",
            vec![
                Series {
                    label: "penalized".into(),
                    points: pts(&|r| r.penalized),
                },
                Series {
                    label: "masked".into(),
                    points: pts(&|_| sand.masked),
                },
                Series {
                    label: "upper bound".into(),
                    points: pts(&|r| r.upper_bound),
                },
            ],
            "penalized cell value vs n",
            "n",
            "value",
            true,
        );
    }
    if let Some(setup) = &p.lambda {
        let rep = lambda_problem_experiment(&p.set, setup, &spec.solver).map_err(|e| e.at_stage("lambda problem"))?;
        let mut t = Table::new(&["epsilon", "l2_distance"]);
        for (e, d) in rep.epsilons.iter().zip(&rep.distances) {
            t.push(vec![(*e).into(), (*d).into()]);
        }
        art.line(format!(
            "lambda problem: theta {:.6}, distances {:?}, strictly decreasing {}",
            rep.theta,
            rep.distances,
            rep.strictly_decreasing()
        ));
        art.tables.push(("lambda".into(), t));
        if rep.epsilons.len() >= 2 {
            art.plot(
                "lambda",
                vec![Series {
                    label: "L2 distance".into(),
                    points: rep.epsilons.iter().copied().zip(rep.distances.iter().copied()).collect(),
                }],
                "distance to the homogenized solution vs epsilon",
                "epsilon",
                "distance",
                true,
            );
        }
    }
    if let Some(study) = &p.perturbation {
        let other = p.set.with_perturbation(study.other);
        let mut t = Table::new(&["R", "masked", "masked_perturbed", "relative_difference"]);
        let mut rel = Vec::new();
        for &r in &study.window_sizes {
            let a = masked_window_value(&p.set, &[0.0, 0.0], r, &p.xi, study.resolution_per_unit, &spec.solver)
                .map_err(|e| e.at_stage(format!("window {r}")))?;
            let b = masked_window_value(&other, &[0.0, 0.0], r, &p.xi, study.resolution_per_unit, &spec.solver)
                .map_err(|e| e.at_stage(format!("perturbed window {r}")))?;
            let d = (a - b).abs() / a.abs();
            rel.push((r, d));
            t.push(vec![r.into(), a.into(), b.into(), d.into()]);
        }
        let mut s = Table::new(&["R", "symmetric_difference"]);
        let mut dens = Vec::new();
        for &r in &study.density_windows {
            let v = symmetric_difference_density(&p.set, &other, r, study.quadrature_resolution, 2)?;
            dens.push((r, v));
            s.push(vec![r.into(), v.into()]);
        }
        art.tables.push(("perturbation_windows".into(), t));
        art.tables.push(("symmetric_difference".into(), s));
        art.plot(
            "perturbation_windows",
            vec![Series {
                label: "relative difference".into(),
                points: rel,
            }],
            "masked window values: relative difference vs R",
            "R",
            "relative difference",
            true,
        );
        art.plot(
            "symmetric_difference",
            vec![Series {
                label: "density".into(),
                points: dens,
            }],
            "symmetric difference density vs R",
            "R",
            "density",
            true,
        );
    }
    Ok(())
}

fn run_stochastic(spec: &ExperimentSpec, s: &StochasticSpec, art: &mut Artifacts) -> Result<(), RunError> {
    let cfg = StochasticConfig {
        dim: s.dim,
        trials: s.trials,
        seed: spec.seed,
        box_size: s.box_size,
        resolution: s.resolution,
        r_list: s.r_list.clone(),
        quadrature_resolution: s.quadrature_resolution,
        solver: spec.solver,
    };
    let rep = stochastic_stability_experiment(&FieldFamily::new(s.f.clone()), &FieldFamily::new(s.g.clone()), &cfg)?;
    let d = s.dim;
    let mut header = vec!["trial".to_string()];
    header.extend(matrix_header("f", d));
    header.extend(matrix_header("g", d));
    let mut trials = Table {
        header,
        rows: Vec::new(),
    };
    for (i, (a, b)) in rep.samples_f.iter().zip(&rep.samples_g).enumerate() {
        let mut row: Vec<crate::output::Cell> = vec![i.into()];
        row.extend(matrix_cells(a).into_iter().map(Into::into));
        row.extend(matrix_cells(b).into_iter().map(Into::into));
        trials.push(row);
    }
    let mut agg = Table::new(&["entry", "mean_f", "se_f", "mean_g", "se_g", "paired_mean", "paired_se"]);
    for i in 0..d {
        for j in 0..d {
            agg.push(vec![
                format!("{}{}", i + 1, j + 1).into(),
                rep.mean_f[i][j].into(),
                rep.std_error_f[i][j].into(),
                rep.mean_g[i][j].into(),
                rep.std_error_g[i][j].into(),
                rep.paired_mean[i][j].into(),
                rep.paired_std_error[i][j].into(),
            ]);
        }
    }
    let mut tr = Table::new(&["R", "mean", "se"]);
    for &(r, m, se) in &rep.expectation_trace {
        tr.push(vec![r.into(), m.into(), se.into()]);
    }
    art.tables.push(("trials".into(), trials));
    art.tables.push(("aggregate".into(), agg));
    art.tables.push(("expectation".into(), tr));
    art.plot(
        "expectation",
        vec![Series {
            label: "expectation".into(),
            points: rep.expectation_trace.iter().map(|t| (t.0, t.1)).collect(),
        }],
        "expected statistic vs R",
        "R",
        "psi",
        true,
    );
    art.line(format!(
        "verdict {:?}, intervals overlap {}, paired discrepancy {:.3e}",
        rep.condition_verdict, rep.intervals_overlap, rep.discrepancy
    ));
    for dgn in &rep.diagnostics {
        art.line(format!("  {dgn}"));
    }
    art.outcome.soundness_violation |= !rep.diagnostics.is_empty();
    Ok(())
}

fn write_all(spec: &ExperimentSpec, art: Artifacts, options: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut outcome = art.outcome;
    let file = |stem: &str, ext: &str| options.out_dir.join(format!("{}_{stem}.{ext}", spec.name));
    let mut write = |path: PathBuf, bytes: &[u8]| -> Result<(), RunError> {
        write_atomic(&path, bytes)?;
        outcome.files.push(path);
        Ok(())
    };
    for (stem, t) in &art.tables {
        write(file(stem, "csv"), t.to_csv()?.as_bytes())?;
    }
    for (stem, v) in &art.json {
        let mut s = serde_json::to_string_pretty(v).expect("serializable");
        s.push('\n');
        write(file(stem, "json"), s.as_bytes())?;
    }
    if options.plots {
        for (stem, series, opts) in &art.plots {
            write(file(stem, "svg"), plot_series(series, opts)?.as_bytes())?;
        }
    }
    write(file("spec", "json"), spec.to_json().as_bytes())?;
    Ok(outcome)
}

/// Runs the experiment and writes `<out>/<name>_<table>.csv` files, SVG
/// plots unless disabled, and the canonical spec.
pub fn run(spec: &ExperimentSpec, options: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut art = Artifacts::new();
    match &spec.experiment {
        Experiment::Cell(c) => run_cell(spec, c, &mut art)?,
        Experiment::Rve(r) => run_rve(spec, r, &mut art)?,
        Experiment::Stability(s) => run_stability(spec, s, &mut art)?,
        Experiment::Perforation(p) => run_perforation(spec, p, &mut art)?,
        Experiment::Stochastic(s) => run_stochastic(spec, s, &mut art)?,
        Experiment::Counterexamples(c) => run_counterexamples(spec, c, &mut art)?,
    }
    write_all(spec, art, options)
}

/// Writes the error, with its stage annotations, to `<out>/<name>_error.log`.
pub fn write_error_log(spec: &ExperimentSpec, out_dir: &Path, err: &RunError) -> Result<PathBuf, OutputError> {
    let path = out_dir.join(format!("{}_error.log", spec.name));
    write_atomic(&path, format!("{err}\n").as_bytes())?;
    Ok(path)
}
