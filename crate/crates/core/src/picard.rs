//! Mild-solution construction for small data: u = u₀ + Φu with
//! u₀(t) = P_t a and (Φu)(t) = ∫_0^t P_{t−s} u(s)^{1+α} ds, iterated in the
//! weighted sup-norm ||v|| = sup |v(t,x)| / p(t+γ, e, x) restricted to a time
//! grid.
//!
//! All semigroup applications go through uniformization, so the far tails of
//! ρ(t,x) = p(t+γ,e,x), which can sit dozens of orders of magnitude below
//! machine epsilon, are resolved with full relative accuracy.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::heat_kernel::{uniformized_semigroup, HeatKernelOperator};
use crate::operators::{check_len, integrate_slice, Field};
use crate::semilinear::{argmax, trajectory_csv, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Composite trapezoid in s for s ↦ P_{t−s} u(s)^{1+α}.
    #[default]
    Trapezoid,
    /// One point per interval: P_{h/2} applied to ((u_{i−1}+u_i)/2)^{1+α}.
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    quadrature: Quadrature,
}

impl TimeGrid {
    /// Nodes must start at 0, increase strictly and span at least two intervals.
    pub fn new(nodes: Vec<f64>, quadrature: Quadrature) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::invalid("time grid needs at least two intervals"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::invalid("time grid must start at 0"));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("time grid must be finite and strictly increasing"));
        }
        Ok(TimeGrid { nodes, quadrature })
    }

    pub fn uniform(horizon: f64, intervals: usize, quadrature: Quadrature) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon {horizon} must be positive")));
        }
        let h = horizon / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|i| i as f64 * h).collect();
        if let Some(last) = nodes.last_mut() {
            *last = horizon;
        }
        Self::new(nodes, quadrature)
    }

    /// Step sizes growing by `ratio` from interval to interval.
    pub fn geometric(horizon: f64, intervals: usize, ratio: f64, quadrature: Quadrature) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon {horizon} must be positive")));
        }
        if !(ratio >= 1.0 && ratio.is_finite()) {
            return Err(Error::invalid(format!("geometric ratio {ratio} must be at least 1")));
        }
        let weights: Vec<f64> = (0..intervals).map(|i| ratio.powi(i as i32)).collect();
        let total: f64 = weights.iter().sum();
        let mut nodes = Vec::with_capacity(intervals + 1);
        let mut t = 0.0;
        nodes.push(t);
        for w in &weights {
            t += horizon * w / total;
            nodes.push(t);
        }
        if let Some(last) = nodes.last_mut() {
            *last = horizon;
        }
        Self::new(nodes, quadrature)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Weights (left, right) of each interval's endpoints for the trapezoid
    /// rule, or (h, 0) for the midpoint rule.
    pub fn interval_weights(&self) -> Vec<(f64, f64)> {
        self.nodes
            .windows(2)
            .map(|w| {
                let h = w[1] - w[0];
                match self.quadrature {
                    Quadrature::Trapezoid => (0.5 * h, 0.5 * h),
                    Quadrature::Midpoint => (h, 0.0),
                }
            })
            .collect()
    }

    /// Every interval split in half; the old nodes sit at the even indices.
    pub fn refined(&self) -> TimeGrid {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.horizon());
        TimeGrid { nodes, quadrature: self.quadrature }
    }
}

/// A space-time field on a grid together with the weight ρ it is measured against.
#[derive(Debug, Clone)]
pub struct PicardState {
    grid: TimeGrid,
    gamma: f64,
    base_vertex: usize,
    rho: Arc<Vec<Field>>,
    iterate: Vec<Field>,
    norm_value: f64,
}

impl PicardState {
    /// The weight itself, u(t, x) = ρ(t, x) = p(t+γ, e, x).
    pub fn weight(hk: &HeatKernelOperator, grid: &TimeGrid, gamma: f64, e: usize) -> Result<PicardState> {
        let g = hk.graph();
        g.check_vertex(e)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma = {gamma} must be positive")));
        }
        let mut start = vec![0.0; g.vertex_count()];
        start[e] = 1.0 / g.mu(e);
        let mut cur = uniformized_semigroup(g, gamma, &start);
        let mut rho = Vec::with_capacity(grid.nodes.len());
        rho.push(Field::from_vec_unchecked(cur.clone()));
        for w in grid.nodes.windows(2) {
            cur = uniformized_semigroup(g, w[1] - w[0], &cur);
            rho.push(Field::from_vec_unchecked(cur.clone()));
        }
        let iterate = rho.clone();
        Ok(PicardState {
            grid: grid.clone(),
            gamma,
            base_vertex: e,
            rho: Arc::new(rho),
            norm_value: 1.0,
            iterate,
        })
    }

    /// Same grid and weight, different values. Values must be nonnegative.
    pub fn with_iterate(&self, iterate: Vec<Field>) -> Result<PicardState> {
        if iterate.len() != self.iterate.len() {
            return Err(Error::LengthMismatch { expected: self.iterate.len(), got: iterate.len() });
        }
        for u in &iterate {
            if u.len() != self.vertex_count() {
                return Err(Error::LengthMismatch { expected: self.vertex_count(), got: u.len() });
            }
            if let Some(x) = u.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeState { vertex: x, value: u[x] });
            }
        }
        Ok(self.replace(iterate))
    }

    fn replace(&self, iterate: Vec<Field>) -> PicardState {
        let norm_value = weighted_sup(&iterate, &self.rho);
        PicardState {
            grid: self.grid.clone(),
            gamma: self.gamma,
            base_vertex: self.base_vertex,
            rho: Arc::clone(&self.rho),
            iterate,
            norm_value,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn base_vertex(&self) -> usize {
        self.base_vertex
    }

    pub fn iterate(&self) -> &[Field] {
        &self.iterate
    }

    /// ρ(t_i, ·) at each grid node.
    pub fn rho(&self) -> &[Field] {
        &self.rho
    }

    pub fn norm_value(&self) -> f64 {
        self.norm_value
    }

    pub fn vertex_count(&self) -> usize {
        self.rho[0].len()
    }

    /// Trajectory CSV (same schema as the integrator output).
    pub fn to_csv(&self, g: &Graph, alpha: f64) -> String {
        let mass: Vec<f64> = self.iterate.iter().map(|u| integrate_slice(g, u)).collect();
        let reaction: Vec<f64> = self
            .iterate
            .iter()
            .map(|u| g.measure().iter().zip(u.iter()).map(|(m, v)| m * v.powf(1.0 + alpha)).sum())
            .collect();
        trajectory_csv(&self.grid.nodes, &self.iterate, &mass, &reaction)
    }
}

fn weighted_sup(values: &[Field], rho: &[Field]) -> f64 {
    let mut best: f64 = 0.0;
    for (u, r) in values.iter().zip(rho) {
        for (v, w) in u.iter().zip(r.iter()) {
            let q = if *v == 0.0 {
                0.0
            } else if *w > 0.0 {
                v.abs() / w
            } else {
                f64::INFINITY
            };
            best = best.max(q);
        }
    }
    best
}

fn diff_norm(a: &PicardState, b: &PicardState) -> f64 {
    let diff: Vec<Field> = a
        .iterate
        .iter()
        .zip(&b.iterate)
        .map(|(x, y)| Field::from_vec_unchecked(x.iter().zip(y.iter()).map(|(p, q)| p - q).collect()))
        .collect();
    weighted_sup(&diff, &a.rho)
}

fn check_graph(hk: &HeatKernelOperator, state: &PicardState) -> Result<()> {
    if hk.vertex_count() != state.vertex_count() {
        return Err(Error::Mismatch(format!(
            "state has {} vertices but the kernel graph has {}",
            state.vertex_count(),
            hk.vertex_count()
        )));
    }
    Ok(())
}

/// u₀(t_i) = P_{t_i} a.
pub fn linear_baseline(hk: &HeatKernelOperator, a: &Field, grid: &TimeGrid, gamma: f64, e: usize) -> Result<PicardState> {
    let g = hk.graph();
    check_len(g, a)?;
    if let Some(x) = a.iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeState { vertex: x, value: a[x] });
    }
    let weight = PicardState::weight(hk, grid, gamma, e)?;
    let mut iterate = Vec::with_capacity(grid.nodes.len());
    let mut cur = a.to_vec();
    iterate.push(a.clone());
    for w in grid.nodes.windows(2) {
        cur = uniformized_semigroup(g, w[1] - w[0], &cur);
        iterate.push(Field::from_vec_unchecked(cur.clone()));
    }
    Ok(weight.replace(iterate))
}

pub fn weighted_norm(hk: &HeatKernelOperator, state: &PicardState) -> Result<f64> {
    check_graph(hk, state)?;
    Ok(state.norm_value)
}

/// Quadrature of (Φu)(t_i) = ∫_0^{t_i} P_{t_i−s} u(s)^{1+α} ds on the state's grid.
///
/// Uses Φ(t_i) = P_h Φ(t_{i−1}) + ∫_{t_{i−1}}^{t_i}, which for the trapezoid
/// rule is exactly the composite rule over [0, t_i]; the s = t_i endpoint
/// enters through the identity P_0 = I.
pub fn apply_phi(hk: &HeatKernelOperator, state: &PicardState, alpha: f64) -> Result<PicardState> {
    check_graph(hk, state)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha = {alpha} must be positive")));
    }
    let g = hk.graph();
    let n = state.vertex_count();
    let p = 1.0 + alpha;
    let power = |u: &[f64]| -> Vec<f64> { u.iter().map(|v| v.max(0.0).powf(p)).collect() };
    let nodes = &state.grid.nodes;
    let mut out = Vec::with_capacity(nodes.len());
    let mut phi = vec![0.0; n];
    out.push(Field::from_vec_unchecked(phi.clone()));
    let mut prev_pow = power(&state.iterate[0]);
    for i in 1..nodes.len() {
        let h = nodes[i] - nodes[i - 1];
        let cur_pow = power(&state.iterate[i]);
        match state.grid.quadrature {
            Quadrature::Trapezoid => {
                for (f, q) in phi.iter_mut().zip(&prev_pow) {
                    *f += 0.5 * h * q;
                }
                phi = uniformized_semigroup(g, h, &phi);
                for (f, q) in phi.iter_mut().zip(&cur_pow) {
                    *f += 0.5 * h * q;
                }
            }
            Quadrature::Midpoint => {
                let mid: Vec<f64> = state.iterate[i - 1]
                    .iter()
                    .zip(state.iterate[i].iter())
                    .map(|(a, b)| (0.5 * (a + b)).max(0.0).powf(p))
                    .collect();
                phi = uniformized_semigroup(g, 0.5 * h, &phi);
                for (f, q) in phi.iter_mut().zip(&mid) {
                    *f += h * q;
                }
                phi = uniformized_semigroup(g, 0.5 * h, &phi);
            }
        }
        // Round-off can leave tiny negative values only if inputs were negative;
        // clamp for safety.
        for f in phi.iter_mut() {
            if *f < 0.0 {
                *f = 0.0;
            }
        }
        out.push(Field::from_vec_unchecked(phi.clone()));
        prev_pow = cur_pow;
    }
    Ok(state.replace(out))
}

/// C̃ = (−2γ/(2−mα)) (C₁/c₁)^α γ^{−mα/2}; defined only for mα > 2.
pub fn c_tilde(gamma: f64, alpha: f64, m: f64, ratio_c1_over_c1: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(alpha > 0.0) || !(m > 0.0) || !(ratio_c1_over_c1 > 0.0) {
        return Err(Error::invalid("gamma, alpha, m and C1/c1 must be positive"));
    }
    let ma = m * alpha;
    if !(ma > 2.0) {
        return Err(Error::invalid(format!("m·alpha = {ma} must exceed 2")));
    }
    Ok(-2.0 * gamma / (2.0 - ma) * ratio_c1_over_c1.powf(alpha) * gamma.powf(-ma / 2.0))
}

/// Membership in {δ : 0 < δ < 1, δ^{α/2}(1+δ^{α/4})^{1+α} < δ^{α/4}, C̃ δ^{α/2} < 1}.
pub fn delta_admissible(delta: f64, alpha: f64, c_tilde_value: f64) -> bool {
    if !(delta > 0.0 && delta < 1.0) {
        return false;
    }
    let q = delta.powf(alpha / 4.0);
    let h = delta.powf(alpha / 2.0);
    h * (1.0 + q).powf(1.0 + alpha) < q && c_tilde_value * h < 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Defaults to the argmax of a (lowest index on ties).
    #[serde(default)]
    pub base_vertex: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    /// Claimed small-data level; checked against a ≤ δ·p(γ, e, ·).
    #[serde(default)]
    pub delta: Option<f64>,
    /// (m, C₁/c₁) for the closed-form C̃, reported alongside the grid value.
    #[serde(default)]
    pub analytic_constants: Option<(f64, f64)>,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            alpha: 3.0,
            gamma: 1.0,
            base_vertex: None,
            max_iter: 100,
            tol: 1e-13,
            delta: None,
            analytic_constants: None,
        }
    }
}

/// Successive-difference norms must grow this many times in a row to count as divergence.
pub const DIVERGENCE_STREAK: usize = 5;

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub baseline: PicardState,
    pub solution: PicardState,
    pub converged: bool,
    pub iterations: usize,
    /// ||u_n|| for n = 0, 1, …
    pub norms: Vec<f64>,
    /// ||u_{n+1} − u_n||.
    pub successive_diff_norms: Vec<f64>,
    pub kappa_empirical: f64,
    pub kappa_analytic: f64,
    /// Grid value max ||Φρ||.
    pub c_tilde_empirical: f64,
    pub c_tilde_analytic: Option<f64>,
    /// Running max of iterate norms.
    pub m_bound: f64,
    /// ||u₀||.
    pub delta_effective: f64,
    pub delta_claimed: Option<f64>,
    /// a ≤ δ·p(γ,e,·) for the claimed δ, if one was given.
    pub data_within_delta: Option<bool>,
    pub delta_admissible: Option<bool>,
    pub fixed_point_residual: f64,
    pub envelope_ok: bool,
    /// ||u_{n+1}|| ≤ ||u₀|| + C̃ ||u_n||^{1+α} at every iterate.
    pub norm_recursion_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardSummary {
    pub alpha: f64,
    pub gamma: f64,
    pub base_vertex: usize,
    pub horizon: f64,
    pub intervals: usize,
    pub quadrature: Quadrature,
    pub converged: bool,
    pub iterations: usize,
    pub norms: Vec<f64>,
    pub successive_diff_norms: Vec<f64>,
    pub kappa_empirical: f64,
    pub kappa_analytic: f64,
    pub c_tilde_empirical: f64,
    pub c_tilde_analytic: Option<f64>,
    pub m_bound: f64,
    pub delta_effective: f64,
    pub delta_claimed: Option<f64>,
    pub data_within_delta: Option<bool>,
    pub delta_admissible: Option<bool>,
    pub fixed_point_residual: f64,
    pub envelope_ok: bool,
    pub norm_recursion_ok: bool,
}

impl PicardResult {
    pub fn summary(&self, alpha: f64) -> PicardSummary {
        let grid = self.solution.grid();
        PicardSummary {
            alpha,
            gamma: self.solution.gamma,
            base_vertex: self.solution.base_vertex,
            horizon: grid.horizon(),
            intervals: grid.intervals(),
            quadrature: grid.quadrature(),
            converged: self.converged,
            iterations: self.iterations,
            norms: self.norms.clone(),
            successive_diff_norms: self.successive_diff_norms.clone(),
            kappa_empirical: self.kappa_empirical,
            kappa_analytic: self.kappa_analytic,
            c_tilde_empirical: self.c_tilde_empirical,
            c_tilde_analytic: self.c_tilde_analytic,
            m_bound: self.m_bound,
            delta_effective: self.delta_effective,
            delta_claimed: self.delta_claimed,
            data_within_delta: self.data_within_delta,
            delta_admissible: self.delta_admissible,
            fixed_point_residual: self.fixed_point_residual,
            envelope_ok: self.envelope_ok,
            norm_recursion_ok: self.norm_recursion_ok,
        }
    }
}

fn add_states(a: &PicardState, b: &PicardState) -> PicardState {
    let sum = a
        .iterate
        .iter()
        .zip(&b.iterate)
        .map(|(x, y)| Field::from_vec_unchecked(x.iter().zip(y.iter()).map(|(p, q)| p + q).collect()))
        .collect();
    a.replace(sum)
}

/// Iterates u_{n+1} = u₀ + Φu_n until ||u_{n+1} − u_n|| ≤ tol.
///
/// Iterates increase monotonically, so growth of the iterate norms is
/// expected even when converging; divergence is declared when the
/// successive-difference norms grow [`DIVERGENCE_STREAK`] times in a row or
/// stop being finite.
pub fn picard_solve(hk: &HeatKernelOperator, a: &Field, grid: &TimeGrid, cfg: &PicardConfig) -> Result<PicardResult> {
    let alpha = cfg.alpha;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha = {alpha} must be positive")));
    }
    if cfg.max_iter == 0 || !(cfg.tol >= 0.0) {
        return Err(Error::invalid("max_iter must be positive and tol nonnegative"));
    }
    let e = match cfg.base_vertex {
        Some(e) => e,
        None => argmax(a),
    };
    let baseline = linear_baseline(hk, a, grid, cfg.gamma, e)?;
    let weight = PicardState::weight(hk, grid, cfg.gamma, e)?;
    let c_tilde_empirical = apply_phi(hk, &weight, alpha)?.norm_value;
    let c_tilde_analytic = match cfg.analytic_constants {
        Some((m, ratio)) => Some(c_tilde(cfg.gamma, alpha, m, ratio)?),
        None => None,
    };

    let mut norms = vec![baseline.norm_value];
    let mut diffs: Vec<f64> = Vec::new();
    let mut cur = baseline.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        iterations = it;
        let next = add_states(&baseline, &apply_phi(hk, &cur, alpha)?);
        let d = diff_norm(&next, &cur);
        if !d.is_finite() || !next.norm_value.is_finite() {
            diffs.push(d);
            return Err(Error::Divergence { iterations: it, norms: diffs });
        }
        diffs.push(d);
        norms.push(next.norm_value);
        cur = next;
        if d <= cfg.tol {
            converged = true;
            break;
        }
        let k = diffs.len();
        if k > DIVERGENCE_STREAK && diffs[k - DIVERGENCE_STREAK - 1..].windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Divergence { iterations: it, norms: diffs });
        }
    }

    let m_bound = norms.iter().copied().fold(0.0, f64::max);
    let noise = 1e-13 * m_bound.max(f64::MIN_POSITIVE);
    let kappa_empirical = diffs
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > noise)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let kappa_analytic = c_tilde_empirical * (1.0 + alpha) * m_bound.powf(alpha);

    let residual_state = add_states(&baseline, &apply_phi(hk, &cur, alpha)?);
    let fixed_point_residual = diff_norm(&cur, &residual_state);

    let envelope_ok = cur.iterate.iter().zip(cur.rho.iter()).all(|(u, r)| {
        u.iter()
            .zip(r.iter())
            .all(|(v, w)| *v >= 0.0 && *v <= m_bound * w * (1.0 + 1e-12))
    });
    let delta_effective = norms[0];
    let norm_recursion_ok = norms
        .windows(2)
        .all(|w| w[1] <= (delta_effective + c_tilde_empirical * w[0].powf(1.0 + alpha)) * (1.0 + 1e-10));

    let data_within_delta = cfg.delta.map(|d| {
        a.iter()
            .zip(weight.rho[0].iter())
            .all(|(v, r)| *v <= d * r * (1.0 + 1e-12))
    });
    let delta_admissible = cfg.delta.map(|d| delta_admissible(d, alpha, c_tilde_empirical));

    Ok(PicardResult {
        baseline,
        solution: cur,
        converged,
        iterations,
        norms,
        successive_diff_norms: diffs,
        kappa_empirical,
        kappa_analytic,
        c_tilde_empirical,
        c_tilde_analytic,
        m_bound,
        delta_effective,
        delta_claimed: cfg.delta,
        data_within_delta,
        delta_admissible,
        fixed_point_residual,
        envelope_ok,
        norm_recursion_ok,
    })
}

/// Max |u_picard − u_ode| over grid nodes and vertices. The trajectory must
/// have landed on every grid node and start from the same data.
pub fn crosscheck_with_integrator(hk: &HeatKernelOperator, result: &PicardResult, traj: &Trajectory) -> Result<f64> {
    check_graph(hk, &result.solution)?;
    let sol = &result.solution;
    if traj.states[0].len() != sol.vertex_count() {
        return Err(Error::Mismatch("trajectory and Picard solution live on different graphs".into()));
    }
    if traj.states[0] != sol.iterate[0] {
        return Err(Error::Mismatch("trajectory and Picard solution start from different data".into()));
    }
    let mut gap: f64 = 0.0;
    for (t, u) in sol.grid.nodes.iter().zip(&sol.iterate) {
        let v = traj
            .state_at(*t)
            .ok_or_else(|| Error::Mismatch(format!("trajectory has no state at grid time {t}")))?;
        for (p, q) in u.iter().zip(v.iter()) {
            gap = gap.max((p - q).abs());
        }
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub intervals: Vec<usize>,
    /// Max absolute change on the coarser grid's nodes between consecutive levels.
    pub differences: Vec<f64>,
    /// log₂ of consecutive difference ratios.
    pub orders: Vec<f64>,
}

/// Solves on `levels` successively halved grids and estimates the convergence order.
pub fn grid_refinement_study(
    hk: &HeatKernelOperator,
    a: &Field,
    grid: &TimeGrid,
    cfg: &PicardConfig,
    levels: usize,
) -> Result<RefinementReport> {
    if levels < 3 {
        return Err(Error::invalid("refinement needs at least three levels"));
    }
    let mut grids = vec![grid.clone()];
    for _ in 1..levels {
        let next = grids.last().unwrap().refined();
        grids.push(next);
    }
    let sols = grids
        .iter()
        .map(|g| picard_solve(hk, a, g, cfg).map(|r| r.solution))
        .collect::<Result<Vec<_>>>()?;
    let mut differences = Vec::new();
    for w in sols.windows(2) {
        let mut d: f64 = 0.0;
        for (i, u) in w[0].iterate.iter().enumerate() {
            for (p, q) in u.iter().zip(w[1].iterate[2 * i].iter()) {
                d = d.max((p - q).abs());
            }
        }
        differences.push(d);
    }
    let orders = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(RefinementReport { intervals: grids.iter().map(|g| g.intervals()).collect(), differences, orders })
}
