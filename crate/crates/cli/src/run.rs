use std::fs;
use std::path::{Path, PathBuf};

use fujita_graph::graph::{fit_volume_growth, graph_to_json, Graph, StructuralConstants, VolumeGrowthFit};
use fujita_graph::heat_kernel::{spectral_decompose, spectral_decompose_capped, BoundCheckReport, BoundVerdict, KernelAxiomReport};
use fujita_graph::operators::{falsify_curvature, CurvatureReport, CurvatureVerdict, FalsifyConfig, Field};
use fujita_graph::picard::{
    crosscheck_with_integrator, grid_refinement_study, picard_solve, PicardConfig, PicardState, PicardSummary,
    RefinementReport, TimeGrid,
};
use fujita_graph::semilinear::{
    classify_trajectory, fujita_sweep, integrate_semilinear, verify_j0_comparison, Classification, IntegrationControl,
    ProblemSpec, SweepConfig, SweepMember, TrajectoryStatus,
};
use serde::Serialize;

use crate::config::{Command, GridKind, RunConfig};
use crate::error::{CliError, Result};
use crate::plot::{sweep_svg, trajectory_svg, PlotOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// One-line summary for standard output.
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

/// Writes through a temporary sibling and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
        s.push('\n');
        self.text(name, &s)
    }
}

fn graph_of(cfg: &RunConfig) -> Result<Graph> {
    match &cfg.graph {
        Some(spec) => spec.build(&cfg.base_dir),
        None => Err(CliError::Config("missing [graph] section".into())),
    }
}

/// Dispatches the configured command and writes its artifacts under `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut w = Writer { dir: out_dir.to_path_buf(), written: Vec::new() };
    let summary = match cfg.command {
        Command::Graph => run_graph(cfg, &mut w)?,
        Command::Kernel => run_kernel(cfg, &mut w)?,
        Command::Curvature => run_curvature(cfg, &mut w)?,
        Command::Simulate => run_simulate(cfg, &mut w)?,
        Command::Sweep => run_sweep(cfg, &mut w)?,
        Command::Picard => run_picard(cfg, &mut w)?,
    };
    Ok(RunOutcome { summary, artifacts: w.written })
}

#[derive(Serialize)]
struct GraphReport {
    vertices: usize,
    edges: usize,
    diameter: usize,
    total_measure: f64,
    constants: StructuralConstants,
    volume_fit: Option<VolumeGrowthFit>,
}

fn run_graph(cfg: &RunConfig, w: &mut Writer) -> Result<String> {
    let g = graph_of(cfg)?;
    let params = cfg.report.clone().unwrap_or_default();
    let volume_fit = match params.fit_radii {
        Some((lo, hi)) => {
            let centers = if params.centers.is_empty() { vec![0] } else { params.centers.clone() };
            Some(fit_volume_growth(&g, &centers, lo..=hi)?)
        }
        None => None,
    };
    let report = GraphReport {
        vertices: g.vertex_count(),
        edges: g.edges().len(),
        diameter: g.diameter(),
        total_measure: g.total_measure(),
        constants: g.structural_constants(),
        volume_fit,
    };
    w.text("graph.json", &graph_to_json(&g))?;
    w.json("graph_report.json", &report)?;
    let mut s = format!(
        "graph {} vertices {} edges diameter {} D_mu={} D_omega={}",
        report.vertices, report.edges, report.diameter, report.constants.d_mu, report.constants.d_omega
    );
    if let Some(f) = &report.volume_fit {
        s.push_str(&format!(" m_fit={:.4}", f.exponent_m));
    }
    Ok(s)
}

#[derive(Serialize)]
struct KernelReport {
    axioms: KernelAxiomReport,
    bounds: Vec<BoundCheckReport>,
}

fn run_kernel(cfg: &RunConfig, w: &mut Writer) -> Result<String> {
    let g = graph_of(cfg)?;
    let params = cfg.kernel.clone().unwrap_or_default();
    let hk = spectral_decompose_capped(&g, params.size_cap)?;
    let axioms = hk.verify_kernel_axioms(&params.times)?;
    let bounds = hk.verify_bounds(&params.bounds)?;
    for (k, b) in bounds.iter().enumerate() {
        if !b.samples.is_empty() {
            w.text(&format!("bound_{k}_samples.csv"), &b.samples_csv())?;
        }
    }
    let holding = bounds.iter().filter(|b| b.verdict == BoundVerdict::Holds).count();
    let summary = format!(
        "kernel symmetry={:.1e} min_p={:.3e} conservation={:.1e} semigroup={:.1e} heat={:.1e} bounds_hold={}/{}",
        axioms.symmetry_error,
        axioms.min_kernel_value,
        axioms.conservation_defect,
        axioms.semigroup_error,
        axioms.heat_equation_residual,
        holding,
        bounds.len()
    );
    w.json("kernel_report.json", &KernelReport { axioms, bounds })?;
    Ok(summary)
}

fn run_curvature(cfg: &RunConfig, w: &mut Writer) -> Result<String> {
    let g = graph_of(cfg)?;
    let p = cfg.curvature.as_ref().expect("validated");
    let fc = FalsifyConfig {
        budget: p.budget,
        seed: cfg.seed,
        log_box: p.log_box,
        tolerance: p.tolerance,
        ..FalsifyConfig::default()
    };
    let reports: Vec<CurvatureReport> = falsify_curvature(&g, p.condition, p.n, p.k, &fc)?;
    w.json("curvature_report.json", &reports)?;
    let n = reports.len();
    let violated = reports.iter().filter(|r| r.verdict == CurvatureVerdict::Violated).count();
    Ok(if violated == 0 {
        format!("no_violation_found {n}/{n} vertices")
    } else {
        format!("violated {violated}/{n} vertices")
    })
}

#[derive(Serialize)]
struct SimulateReport {
    alpha: f64,
    status: TrajectoryStatus,
    bracket_width: Option<f64>,
    recorded_times: usize,
    classification: Classification,
}

fn run_simulate(cfg: &RunConfig, w: &mut Writer) -> Result<String> {
    let g = graph_of(cfg)?;
    let p = cfg.simulate.as_ref().expect("validated");
    let a = p.initial.realize(&g, p.scale)?;
    // Build the problem spec first so its preconditions fail before any integration.
    let spec = if p.j0_comparison || p.base_vertex.is_some() {
        Some(ProblemSpec::new(&g, p.alpha, a.clone(), p.base_vertex)?)
    } else {
        None
    };
    let traj = integrate_semilinear(&g, p.alpha, &a, &p.control)?;
    let class = classify_trajectory(&traj, p.control.horizon, p.decay);
    let csv = traj.to_csv();
    w.text("trajectory.csv", &csv)?;
    if p.plot {
        let opts = PlotOptions {
            title: Some(format!("u_t = Δu + u^(1+α), α = {}", p.alpha)),
            y_max: p.plot_y_max,
        };
        w.text("trajectory.svg", &trajectory_svg(&csv, &opts)?)?;
    }
    if let (true, Some(spec)) = (p.j0_comparison, &spec) {
        let hk = spectral_decompose(&g)?;
        let res = verify_j0_comparison(&traj, &hk, spec.base_vertex(), p.alpha)?;
        let mut out = String::from("t,j0,u_e,residual\n");
        for r in &res {
            out.push_str(&format!("{},{},{},{}\n", r.t, r.j0, r.u_e, r.residual));
        }
        w.text("j0_comparison.csv", &out)?;
    }
    let report = SimulateReport {
        alpha: p.alpha,
        status: traj.status,
        bracket_width: traj.status.bracket_width(),
        recorded_times: traj.len(),
        classification: class.clone(),
    };
    w.json("simulate_report.json", &report)?;
    Ok(match traj.status {
        TrajectoryStatus::BlewUp { estimate, .. } => {
            format!("blew_up T_b={estimate:.9} verdict={}", class.verdict.label())
        }
        TrajectoryStatus::CompletedHorizon => format!(
            "completed_horizon T={} final_sup={:.6e} verdict={}",
            traj.final_time(),
            class.final_sup,
            class.verdict.label()
        ),
        TrajectoryStatus::StepUnderflow { time } => {
            format!("step_underflow t={time:.9} verdict={}", class.verdict.label())
        }
    })
}

fn run_sweep(cfg: &RunConfig, w: &mut Writer) -> Result<String> {
    let p = cfg.sweep.as_ref().expect("validated");
    let members = if p.graphs.is_empty() {
        vec![SweepMember { name: "graph".into(), graph: graph_of(cfg)? }]
    } else {
        p.graphs
            .iter()
            .map(|m| Ok(SweepMember { name: m.name.clone(), graph: m.graph.build(&cfg.base_dir)? }))
            .collect::<Result<Vec<_>>>()?
    };
    let sc = SweepConfig {
        alphas: p.alphas.clone(),
        scales: p.scales.clone(),
        profile: p.profile.clone(),
        control: p.control.clone(),
        criterion: p.decay,
        fit_radii: p.fit_radii.0..=p.fit_radii.1,
    };
    let table = fujita_sweep(&members, &sc)?;
    let csv = table.to_csv();
    w.text("sweep.csv", &csv)?;
    if p.plot {
        let opts = PlotOptions { title: Some(format!("sweep, horizon {}", table.horizon)), y_max: None };
        w.text("sweep.svg", &sweep_svg(&csv, &opts)?)?;
    }
    let count = |label: &str| table.rows.iter().filter(|r| r.verdict.label() == label).count();
    Ok(format!(
        "sweep {} cells blow_up={} decay_on_horizon={} undetermined={}",
        table.rows.len(),
        count("blow_up"),
        count("decay_on_horizon"),
        count("undetermined")
    ))
}

#[derive(Serialize)]
struct PicardReport {
    summary: PicardSummary,
    /// Max |u_picard − u_ode| over grid nodes, when the integrator reached the horizon.
    crosscheck_gap: Option<f64>,
    crosscheck_note: Option<String>,
    refinement: Option<RefinementReport>,
}

fn run_picard(cfg: &RunConfig, w: &mut Writer) -> Result<String> {
    let g = graph_of(cfg)?;
    let p = cfg.picard.as_ref().expect("validated");
    let hk = spectral_decompose(&g)?;
    let grid = match p.grid {
        GridKind::Uniform => TimeGrid::uniform(p.horizon, p.intervals, p.quadrature)?,
        GridKind::Geometric => TimeGrid::geometric(p.horizon, p.intervals, p.ratio, p.quadrature)?,
    };
    let a = match &p.initial {
        Some(profile) => profile.realize(&g, p.scale)?,
        None => {
            let rho = PicardState::weight(&hk, &grid, p.gamma, p.base_vertex)?;
            Field::new(rho.rho()[0].iter().map(|v| p.delta * v).collect())?
        }
    };
    let pc = PicardConfig {
        alpha: p.alpha,
        gamma: p.gamma,
        base_vertex: Some(p.base_vertex),
        max_iter: p.max_iter,
        tol: p.tol,
        delta: Some(p.delta),
        analytic_constants: p.analytic_m.zip(p.analytic_ratio),
    };
    let res = picard_solve(&hk, &a, &grid, &pc)?;

    let (crosscheck_gap, crosscheck_note) = if p.crosscheck {
        let ctl = IntegrationControl {
            rel_tol: 1e-10,
            abs_tol: 1e-16,
            horizon: grid.horizon(),
            stop_times: grid.nodes().to_vec(),
            ..IntegrationControl::default()
        };
        let traj = integrate_semilinear(&g, p.alpha, &a, &ctl)?;
        if traj.status == TrajectoryStatus::CompletedHorizon {
            (Some(crosscheck_with_integrator(&hk, &res, &traj)?), None)
        } else {
            (None, Some(format!("integrator stopped early: {}", traj.status.label())))
        }
    } else {
        (None, None)
    };
    let refinement = if p.refinement_levels >= 3 {
        Some(grid_refinement_study(&hk, &a, &grid, &pc, p.refinement_levels)?)
    } else {
        None
    };

    let csv = res.solution.to_csv(&g, p.alpha);
    w.text("picard_solution.csv", &csv)?;
    if p.plot {
        let opts = PlotOptions { title: Some(format!("Picard fixed point, α = {}", p.alpha)), y_max: None };
        w.text("picard_solution.svg", &trajectory_svg(&csv, &opts)?)?;
    }
    let summary = res.summary(p.alpha);
    let mut line = format!(
        "picard {} iterations={} kappa_emp={:.3e} kappa_an={:.3e} residual={:.1e}",
        if res.converged { "converged" } else { "not_converged" },
        res.iterations,
        res.kappa_empirical,
        res.kappa_analytic,
        res.fixed_point_residual
    );
    if let Some(gap) = crosscheck_gap {
        line.push_str(&format!(" ode_gap={gap:.1e}"));
    }
    w.json("picard_report.json", &PicardReport { summary, crosscheck_gap, crosscheck_note, refinement })?;
    Ok(line)
}
