//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use fujita_graph::graph::{build_cycle, build_lattice_torus, fit_volume_growth, Graph, MeasureMode};
use fujita_graph::heat_kernel::{
    spectral_decompose, BoundCheckConfig, BoundSpec, BoundVerdict, HeatKernelOperator, TimeSampling,
};
use fujita_graph::operators::{
    curvature_residual, falsify_curvature, CurvatureCondition, CurvatureVerdict, FalsifyConfig, Field,
};
use fujita_graph::picard::{
    apply_phi, crosscheck_with_integrator, delta_admissible, grid_refinement_study, picard_solve, PicardConfig,
    PicardState, Quadrature, TimeGrid,
};
use fujita_graph::semilinear::{
    integrate_semilinear, linear_comparison_defect, mass_balance_defect, verify_j0_comparison, IntegrationControl,
    ProblemSpec, TrajectoryStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c6() -> Graph {
    build_cycle(6, 1.0, MeasureMode::Normalized).unwrap()
}

fn ramp(scale: f64) -> Field {
    Field::new((1..=6).map(|i| i as f64 * scale).collect()).unwrap()
}

/// Random recursive tree plus Erdős–Rényi extras; weights and measure in [0.5, 2].
fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    let n = rng.random_range(5..=40);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((u, v, rng.random_range(0.5..2.0)));
    }
    for u in 0..n {
        for v in u + 2..n {
            if rng.random_bool(0.25) && !edges.iter().any(|&(a, b, _)| a == u && b == v) {
                edges.push((u, v, rng.random_range(0.5..2.0)));
            }
        }
    }
    let mu = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    Graph::new(mu, &edges, None).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let times = [0.1, 0.5, 1.0, 5.0];
    let (mut sym, mut minp, mut cons, mut semi, mut heat) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let g = random_graph(&mut rng);
        let r = spectral_decompose(&g).map_err(|e| e.to_string())?.verify_kernel_axioms(&times).map_err(|e| e.to_string())?;
        sym = sym.max(r.symmetry_error);
        minp = minp.min(r.min_kernel_value);
        cons = cons.max(r.conservation_defect);
        semi = semi.max(r.semigroup_error);
        heat = heat.max(r.heat_equation_residual);
    }
    check(
        sym <= 1e-10 && minp > 0.0 && cons <= 1e-9 && semi <= 1e-9 && heat <= 1e-5,
        format!("symmetry {sym:.1e}, min p {minp:.2e}, conservation {cons:.1e}, semigroup {semi:.1e}, heat residual {heat:.1e}"),
    )
}

fn criterion_2() -> Outcome {
    let g = Graph::new(vec![1.0, 1.0], &[(0, 1, 1.0)], None).unwrap();
    let hk = spectral_decompose(&g).unwrap();
    let mut worst: f64 = 0.0;
    for t in [0.1f64, 1.0, 10.0] {
        let exact = (1.0 + (-2.0 * t).exp()) / 2.0;
        worst = worst.max((hk.kernel_value(t, 0, 0).unwrap() - exact).abs());
    }
    check(worst <= 1e-12, format!("max |p(t,a,a) − (1+e^(−2t))/2| = {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let g = build_cycle(512, 1.0, MeasureMode::Normalized).unwrap();
    let hk = spectral_decompose(&g).map_err(|e| e.to_string())?;
    let configs = [
        BoundCheckConfig {
            bound: BoundSpec::Upper { c1: None },
            times: TimeSampling { t_min: 1.0, t_max: 7000.0, count: 80, log_spacing: true },
            pairs: vec![(0, 0)],
            time_guard: None,
            keep_samples: false,
        },
        BoundCheckConfig {
            bound: BoundSpec::VolumeLower { c0_big: 6.0, volume_hypothesis: None },
            times: TimeSampling { t_min: std::f64::consts::E, t_max: 2000.0, count: 80, log_spacing: true },
            pairs: vec![(0, 0)],
            time_guard: None,
            keep_samples: false,
        },
    ];
    let reports = hk.verify_bounds(&configs).map_err(|e| e.to_string())?;
    let c1 = reports[0].fitted_c1.unwrap_or(f64::NAN);
    let lower = &reports[1];
    check(
        (0.1..=10.0).contains(&c1) && lower.verdict == BoundVerdict::Holds,
        format!("fitted C1 = {c1:.3}; lower bound with C0=6 {:?} (min ratio {:.3})", lower.verdict, lower.worst_ratio),
    )
}

fn criterion_4() -> Outcome {
    let cycle = build_cycle(512, 1.0, MeasureMode::Normalized).unwrap();
    let torus = build_lattice_torus(&[32, 32], MeasureMode::Normalized).unwrap();
    let m1 = fit_volume_growth(&cycle, &[0], 1..=100).map_err(|e| e.to_string())?.exponent_m;
    let m2 = fit_volume_growth(&torus, &[0], 1..=10).map_err(|e| e.to_string())?.exponent_m;
    check(
        (0.95..=1.05).contains(&m1) && (1.8..=2.2).contains(&m2),
        format!("m(C_512) = {m1:.4}, m(32x32 torus) = {m2:.4}"),
    )
}

fn criterion_5() -> Outcome {
    let g = c6();
    let cfg = FalsifyConfig { budget: 10_000, seed: 11, ..FalsifyConfig::default() };
    let cond = CurvatureCondition::CdePrime;
    let clean = falsify_curvature(&g, cond, 4.53, 0.0, &cfg).map_err(|e| e.to_string())?;
    let again = falsify_curvature(&g, cond, 4.53, 0.0, &cfg).map_err(|e| e.to_string())?;
    let deterministic = serde_json::to_string(&clean).unwrap() == serde_json::to_string(&again).unwrap();
    let none = clean.iter().filter(|r| r.verdict == CurvatureVerdict::NoViolationFound).count();
    let hot = falsify_curvature(&g, cond, 4.53, 100.0, &cfg).map_err(|e| e.to_string())?;
    let mut confirmed = 0;
    for r in &hot {
        if r.verdict == CurvatureVerdict::Violated {
            let w = r.witness.as_ref().ok_or("violation without witness")?;
            if curvature_residual(&g, r.vertex, w, cond, 4.53, 100.0).map_err(|e| e.to_string())? < 0.0 {
                confirmed += 1;
            }
        }
    }
    check(
        none == 6 && confirmed == 6 && deterministic,
        format!("K=0: no violation at {none}/6; K=100: confirmed violations at {confirmed}/6; deterministic {deterministic}"),
    )
}

fn blow_up_time(g: &Graph, alpha: f64, a: &Field, rel_tol: f64) -> Result<f64, String> {
    let ctl = IntegrationControl { rel_tol, horizon: 10.0, ..Default::default() };
    let traj = integrate_semilinear(g, alpha, a, &ctl).map_err(|e| e.to_string())?;
    traj.status.blow_up_time().ok_or_else(|| format!("no blow-up: {:?}", traj.status))
}

fn criterion_6() -> Outcome {
    let g = c6();
    let t8 = blow_up_time(&g, 1.0, &ramp(1.0), 1e-8)?;
    let t10 = blow_up_time(&g, 1.0, &ramp(1.0), 1e-10)?;
    let agree = (t8 - t10).abs() / t10;
    let tc = blow_up_time(&g, 1.0, &Field::constant(6, 2.0), 1e-8)?;
    let oracle = (tc - 0.5).abs() / 0.5;
    check(
        agree <= 0.01 && oracle <= 0.01,
        format!("T_b = {t8:.8} (1e-8) vs {t10:.8} (1e-10), rel. diff {agree:.1e}; constant data T_b = {tc:.8}, rel. error {oracle:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let g = c6();
    let ctl = IntegrationControl { horizon: 100.0, ..Default::default() };
    let traj = integrate_semilinear(&g, 3.0, &ramp(1e-4), &ctl).map_err(|e| e.to_string())?;
    let completed = traj.status == TrajectoryStatus::CompletedHorizon;
    let max_sup = traj.sup_norms().into_iter().fold(0.0, f64::max);
    let last = traj.final_state();
    let spread = last.max() - last.min();
    let mass_gain = traj.mass_series.last().unwrap() - traj.mass_series[0];
    // Mass relative to the total measure: the per-vertex average of u.
    let mean_gain = mass_gain / g.total_measure();
    check(
        completed && max_sup <= 6e-4 * (1.0 + 1e-12) && spread <= 1e-10 && mean_gain <= 1e-11,
        format!(
            "{}; max sup {max_sup:.3e}; spread at T {spread:.1e}; mean-value increase {mean_gain:.2e} (∫u dμ increase {mass_gain:.2e})",
            traj.status.label()
        ),
    )
}

fn criterion_8() -> Outcome {
    let g = c6();
    let hk = spectral_decompose(&g).unwrap();
    let spec = ProblemSpec::new(&g, 1.0, ramp(1.0), None).unwrap();
    let tb = blow_up_time(&g, 1.0, spec.initial(), 1e-10)?;
    let times: Vec<f64> = (1..=50).map(|k| 0.9 * tb * k as f64 / 50.0).collect();
    let ctl = IntegrationControl { rel_tol: 1e-10, horizon: 0.9 * tb, stop_times: times.clone(), ..Default::default() };
    let traj = spec.integrate(&ctl).map_err(|e| e.to_string())?;
    let res = verify_j0_comparison(&traj, &hk, spec.base_vertex(), 1.0).map_err(|e| e.to_string())?;
    let sampled: Vec<f64> = res
        .iter()
        .filter(|p| times.iter().any(|t| (t - p.t).abs() <= 1e-12 * t.max(1.0)))
        .map(|p| p.residual)
        .collect();
    let worst = sampled.iter().copied().fold(f64::INFINITY, f64::min);

    let c = 2.0;
    let times_c: Vec<f64> = (1..=50).map(|k| 0.45 * k as f64 / 50.0).collect();
    let ctl = IntegrationControl { rel_tol: 1e-10, horizon: 0.45, stop_times: times_c, ..Default::default() };
    let traj = integrate_semilinear(&g, 1.0, &Field::constant(6, c), &ctl).map_err(|e| e.to_string())?;
    let eq = verify_j0_comparison(&traj, &hk, 0, 1.0).map_err(|e| e.to_string())?;
    let eq_err = eq.iter().map(|p| p.residual.abs()).fold(0.0, f64::max);
    check(
        sampled.len() == 50 && worst >= -1e-6 && eq_err <= 1e-6,
        format!("{} sampled residuals, min {worst:.3e}; constant-data |residual| ≤ {eq_err:.1e}", sampled.len()),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_mass, mut worst_cmp) = (0.0f64, 0.0f64);
    let mut ok = true;
    for _ in 0..10 {
        let g = random_graph(&mut rng);
        let n = g.vertex_count();
        let alpha = rng.random_range(1.0..3.0);
        let a = Field::new((0..n).map(|_| rng.random_range(0.0..1e-2)).collect()).unwrap();
        let ctl = IntegrationControl { horizon: 10.0, ..Default::default() };
        let traj = integrate_semilinear(&g, alpha, &a, &ctl).map_err(|e| e.to_string())?;
        let hk = spectral_decompose(&g).map_err(|e| e.to_string())?;
        let mass_scale = traj.mass_series.iter().copied().fold(0.0, f64::max);
        let mass_tol = 10.0 * (ctl.rel_tol * mass_scale + ctl.abs_tol * g.total_measure());
        let cmp_tol = 10.0 * (ctl.rel_tol * a.max() + ctl.abs_tol);
        let dm = mass_balance_defect(&g, alpha, &traj).map_err(|e| e.to_string())?;
        let dc = linear_comparison_defect(&traj, &hk);
        ok &= dm <= mass_tol && dc <= cmp_tol;
        worst_mass = worst_mass.max(dm / mass_tol);
        worst_cmp = worst_cmp.max(dc / cmp_tol);
    }
    check(ok, format!("worst mass defect {worst_mass:.2e} × tolerance; worst (P_t a − u)+ {worst_cmp:.2e} × tolerance"))
}

fn c64_setup() -> (HeatKernelOperator, TimeGrid, Field, f64) {
    let g = build_cycle(64, 1.0, MeasureMode::Normalized).unwrap();
    let hk = spectral_decompose(&g).unwrap();
    let grid = TimeGrid::uniform(10.0, 200, Quadrature::Trapezoid).unwrap();
    let delta = 0.1;
    let rho = PicardState::weight(&hk, &grid, 1.0, 0).unwrap();
    let a = Field::new(rho.rho()[0].iter().map(|v| delta * v).collect()).unwrap();
    (hk, grid, a, delta)
}

fn criterion_10() -> Outcome {
    let (hk, grid, a, delta) = c64_setup();
    let cfg = PicardConfig { alpha: 3.0, gamma: 1.0, base_vertex: Some(0), max_iter: 100, tol: 1e-14, delta: Some(delta), analytic_constants: None };
    let res = picard_solve(&hk, &a, &grid, &cfg).map_err(|e| e.to_string())?;
    let admissible = delta_admissible(delta, 3.0, res.c_tilde_empirical);

    let ctl = IntegrationControl { rel_tol: 1e-10, abs_tol: 1e-16, horizon: 10.0, stop_times: grid.nodes().to_vec(), ..Default::default() };
    let traj = integrate_semilinear(hk.graph(), 3.0, &a, &ctl).map_err(|e| e.to_string())?;
    let gap = crosscheck_with_integrator(&hk, &res, &traj).map_err(|e| e.to_string())?;

    let coarse = TimeGrid::uniform(10.0, 100, Quadrature::Trapezoid).unwrap();
    let refinement = grid_refinement_study(&hk, &a, &coarse, &cfg, 3).map_err(|e| e.to_string())?;
    let order = refinement.orders.iter().copied().fold(f64::INFINITY, f64::min);

    check(
        admissible
            && res.converged
            && res.kappa_empirical <= res.kappa_analytic + 0.05
            && res.kappa_analytic + 0.05 < 1.0
            && res.fixed_point_residual <= 1e-8
            && res.envelope_ok
            && gap <= 1e-6
            && order >= 1.8,
        format!(
            "δ={delta} admissible {admissible}; {} iterations; κ_emp {:.2e} ≤ κ_an {:.2e}; residual {:.1e}; envelope {}; ODE gap {gap:.1e}; refinement order {order:.2}",
            res.iterations, res.kappa_empirical, res.kappa_analytic, res.fixed_point_residual, res.envelope_ok
        ),
    )
}

fn criterion_11() -> Outcome {
    let (hk, grid, _, _) = c64_setup();
    let alpha = 3.0;
    let rho = PicardState::weight(&hk, &grid, 1.0, 0).unwrap();
    let c_tilde = apply_phi(&hk, &rho, alpha).unwrap().norm_value();
    let m = 0.8;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let random_state = |rng: &mut ChaCha8Rng| {
        let scale = rng.random_range(0.0..m);
        let values = rho
            .rho()
            .iter()
            .map(|r| Field::new(r.iter().map(|w| scale * rng.random::<f64>() * w).collect()).unwrap())
            .collect();
        rho.with_iterate(values).unwrap()
    };
    let (mut worst_growth, mut worst_lipschitz) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..20 {
        let u = random_state(&mut rng);
        let v = random_state(&mut rng);
        let pu = apply_phi(&hk, &u, alpha).unwrap();
        let pv = apply_phi(&hk, &v, alpha).unwrap();
        worst_growth = worst_growth.max(pu.norm_value() - c_tilde * u.norm_value().powf(1.0 + alpha));
        let diff = |a: &PicardState, b: &PicardState| {
            let d = a.iterate().iter().zip(b.iterate()).map(|(x, y)| {
                Field::new(x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()).collect()).unwrap()
            });
            rho.with_iterate(d.collect()).unwrap().norm_value()
        };
        worst_lipschitz = worst_lipschitz.max(diff(&pu, &pv) - c_tilde * (1.0 + alpha) * m.powf(alpha) * diff(&u, &v));
    }
    check(
        worst_growth <= 1e-10 && worst_lipschitz <= 1e-10,
        format!("grid C̃ = {c_tilde:.4e}; max(||Φu|| − C̃||u||^(1+α)) = {worst_growth:.2e}; max Lipschitz excess = {worst_lipschitz:.2e}"),
    )
}

fn criterion_12() -> Outcome {
    let configs = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for name in ["ramp_blowup", "small_data_decay"] {
        let mut outputs = Vec::new();
        for pass in 0..2 {
            let out = scratch.path().join(format!("{name}_{pass}"));
            let o = std::process::Command::new(env!("CARGO_BIN_EXE_fujita"))
                .arg("--config")
                .arg(configs.join(format!("{name}.toml")))
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("{name}: {}", String::from_utf8_lossy(&o.stderr).trim()));
            }
            outputs.push(out);
        }
        for file in ["trajectory.csv", "trajectory.svg"] {
            let a = std::fs::read(outputs[0].join(file)).map_err(|e| e.to_string())?;
            let b = std::fs::read(outputs[1].join(file)).map_err(|e| e.to_string())?;
            if a.is_empty() || a != b {
                return Err(format!("{name}/{file} differs between runs"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} artifacts byte-identical across repeated runs"))
}

fn main() {
    let criteria: [(&str, Criterion); 12] = [
        ("heat-kernel axioms on 20 random graphs", criterion_1),
        ("K_2 closed form", criterion_2),
        ("upper and volume lower bounds on C_512", criterion_3),
        ("volume-growth exponents", criterion_4),
        ("curvature falsification on C_6", criterion_5),
        ("blow-up on C_6 with ramp data", criterion_6),
        ("small-data decay on C_6", criterion_7),
        ("J_0 inequality along the blow-up run", criterion_8),
        ("mass balance and linear comparison", criterion_9),
        ("Picard contraction on C_64", criterion_10),
        ("Φ bounds on random states", criterion_11),
        ("CLI determinism", criterion_12),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {} ({name}) [{secs:.1}s]: {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{secs:.1}s]: {d}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
