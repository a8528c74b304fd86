mod common;

use common::random_graph;
use fujita_graph::graph::{build_cycle, MeasureMode};
use fujita_graph::heat_kernel::{spectral_decompose, HeatKernelOperator};
use fujita_graph::operators::Field;
use fujita_graph::picard::{
    apply_phi, crosscheck_with_integrator, picard_solve, weighted_norm, PicardConfig, PicardState, Quadrature,
    TimeGrid,
};
use fujita_graph::semilinear::{integrate_semilinear, IntegrationControl};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cycle_kernel(n: usize) -> HeatKernelOperator {
    spectral_decompose(&build_cycle(n, 1.0, MeasureMode::Normalized).unwrap()).unwrap()
}

/// Nonnegative states w·ρ with w drawn from [0, amp).
fn random_state(rho: &PicardState, seed: u64, amp: f64) -> PicardState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let it = rho
        .rho()
        .iter()
        .map(|r| Field::new(r.values().iter().map(|v| v * rng.random_range(0.0..amp)).collect()).unwrap())
        .collect();
    rho.with_iterate(it).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_is_monotone_and_fixes_zero(seed in any::<u64>(), alpha in 0.5f64..4.0, midpoint in any::<bool>()) {
        let hk = cycle_kernel(12);
        let q = if midpoint { Quadrature::Midpoint } else { Quadrature::Trapezoid };
        let grid = TimeGrid::uniform(3.0, 30, q).unwrap();
        let rho = PicardState::weight(&hk, &grid, 1.0, 0).unwrap();
        let u = random_state(&rho, seed, 1.0);
        let bump: Vec<Field> = u.iterate().iter().zip(rho.rho())
            .map(|(a, r)| Field::new(a.values().iter().zip(r.values()).map(|(x, y)| x + 0.5 * y).collect()).unwrap())
            .collect();
        let v = rho.with_iterate(bump).unwrap();
        let (pu, pv) = (apply_phi(&hk, &u, alpha).unwrap(), apply_phi(&hk, &v, alpha).unwrap());
        for (a, b) in pu.iterate().iter().zip(pv.iterate()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!(*x >= 0.0 && *x <= *y * (1.0 + 1e-12));
            }
        }
        let zero = rho.with_iterate(vec![Field::zeros(12); grid.nodes().len()]).unwrap();
        prop_assert_eq!(apply_phi(&hk, &zero, alpha).unwrap().norm_value(), 0.0);
    }

    #[test]
    fn weighted_norm_scales(seed in any::<u64>(), c in 0.0f64..10.0) {
        let hk = cycle_kernel(10);
        let grid = TimeGrid::uniform(2.0, 10, Quadrature::Trapezoid).unwrap();
        let rho = PicardState::weight(&hk, &grid, 1.0, 3).unwrap();
        let u = random_state(&rho, seed, 1.0);
        let scaled: Vec<Field> = u.iterate().iter().map(|f| f.map(|v| c * v).unwrap()).collect();
        let cu = rho.with_iterate(scaled).unwrap();
        let (n1, nc) = (weighted_norm(&hk, &u).unwrap(), weighted_norm(&hk, &cu).unwrap());
        prop_assert!((nc - c * n1).abs() <= 1e-12 * (1.0 + nc));
        prop_assert!((weighted_norm(&hk, &rho).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn small_data_iteration_invariants(n in 4usize..14, seed in any::<u64>(), delta in 0.01f64..0.2) {
        let g = random_graph(n, seed);
        let hk = spectral_decompose(&g).unwrap();
        let grid = TimeGrid::uniform(4.0, 40, Quadrature::Trapezoid).unwrap();
        let rho = PicardState::weight(&hk, &grid, 1.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let a = Field::new(rho.rho()[0].values().iter().map(|v| delta * v * rng.random_range(0.0..1.0)).collect()).unwrap();
        let cfg = PicardConfig { alpha: 3.0, delta: Some(delta), base_vertex: Some(0), ..PicardConfig::default() };
        let res = picard_solve(&hk, &a, &grid, &cfg).unwrap();
        prop_assert!(res.converged);
        prop_assert!(res.envelope_ok);
        prop_assert!(res.norm_recursion_ok);
        prop_assert_eq!(res.data_within_delta, Some(true));
        prop_assert!(res.delta_effective <= delta * (1.0 + 1e-12));
        prop_assert!(res.fixed_point_residual <= 1e-10);
        prop_assert!(res.solution.iterate().iter().all(|u| u.min() >= 0.0));
        // Iterates increase from the linear baseline: u_n ≤ u_{n+1}.
        prop_assert!(res.norms.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
        prop_assert!(res.kappa_empirical <= res.kappa_analytic + 0.05);
    }
}

#[test]
fn constant_data_agrees_with_integrator_before_blow_up() {
    let hk = cycle_kernel(6);
    let (c, alpha, horizon) = (0.5f64, 1.0, 0.8);
    assert!(alpha * c.powf(alpha) * horizon < 0.5);
    let grid = TimeGrid::uniform(horizon, 400, Quadrature::Trapezoid).unwrap();
    let a = Field::constant(6, c);
    let res = picard_solve(&hk, &a, &grid, &PicardConfig { alpha, ..PicardConfig::default() }).unwrap();
    assert!(res.converged);
    let ctl = IntegrationControl {
        rel_tol: 1e-11,
        abs_tol: 1e-16,
        horizon,
        stop_times: grid.nodes().to_vec(),
        ..IntegrationControl::default()
    };
    let traj = integrate_semilinear(hk.graph(), alpha, &a, &ctl).unwrap();
    let gap = crosscheck_with_integrator(&hk, &res, &traj).unwrap();
    assert!(gap <= 1e-6, "gap {gap}");
    let exact = c * (1.0 - alpha * c.powf(alpha) * horizon).powf(-1.0 / alpha);
    assert!((res.solution.iterate().last().unwrap().max() - exact).abs() <= 1e-5);
}

#[test]
fn zero_data_crosscheck_is_exact() {
    let hk = cycle_kernel(8);
    let grid = TimeGrid::uniform(1.0, 10, Quadrature::Trapezoid).unwrap();
    let a = Field::zeros(8);
    let res = picard_solve(&hk, &a, &grid, &PicardConfig::default()).unwrap();
    let ctl = IntegrationControl { horizon: 1.0, stop_times: grid.nodes().to_vec(), ..IntegrationControl::default() };
    let traj = integrate_semilinear(hk.graph(), 3.0, &a, &ctl).unwrap();
    assert_eq!(crosscheck_with_integrator(&hk, &res, &traj).unwrap(), 0.0);
}
