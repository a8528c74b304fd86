//! The semilinear problem u_t = Δu + u^{1+α}, u(0) = a ≥ 0, on a finite graph.
//!
//! Integration uses the Dormand–Prince 5(4) pair with a PI step controller.
//! Blow-up is declared when the sup-norm crosses a threshold; the blow-up
//! time is then bracketed by comparison with scalar ODEs. At the maximising
//! vertex Δu ≤ 0, so the sup-norm S obeys S' ≤ S^{1+α}, while every vertex
//! satisfies u' ≥ −D_μ u + u^{1+α}. From a state with sup-norm S at time t
//! this gives
//!
//! ```text
//! t + 1/(α S^α)  ≤  T_b  ≤  t + ln(S^α / (S^α − D_μ)) / (α D_μ)   (S^α > D_μ).
//! ```

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{fit_volume_growth, Graph};
use crate::heat_kernel::HeatKernelOperator;
use crate::operators::{check_len, integrate_slice, laplacian_at, Field};

/// A validated instance of the Cauchy problem with nontrivial data.
#[derive(Debug, Clone)]
pub struct ProblemSpec<'g> {
    graph: &'g Graph,
    alpha: f64,
    initial: Field,
    base_vertex: usize,
}

impl<'g> ProblemSpec<'g> {
    /// `base_vertex` defaults to the argmax of `initial`, lowest index on ties.
    pub fn new(graph: &'g Graph, alpha: f64, initial: Field, base_vertex: Option<usize>) -> Result<Self> {
        check_alpha(alpha)?;
        check_initial(graph, &initial)?;
        if !(initial.max() > 0.0) {
            return Err(Error::invalid("initial data must not vanish identically"));
        }
        let e = match base_vertex {
            Some(e) => {
                graph.check_vertex(e)?;
                e
            }
            None => argmax(&initial),
        };
        if !(initial[e] > 0.0) {
            return Err(Error::invalid(format!("initial data vanishes at base vertex {e}")));
        }
        Ok(ProblemSpec { graph, alpha, initial, base_vertex: e })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn initial(&self) -> &Field {
        &self.initial
    }

    pub fn base_vertex(&self) -> usize {
        self.base_vertex
    }

    pub fn integrate(&self, control: &IntegrationControl) -> Result<Trajectory> {
        integrate_semilinear(self.graph, self.alpha, &self.initial, control)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha = {alpha} must be positive")))
    }
}

fn check_initial(g: &Graph, a: &[f64]) -> Result<()> {
    check_len(g, a)?;
    match a.iter().position(|&v| v < 0.0) {
        Some(x) => Err(Error::NegativeState { vertex: x, value: a[x] }),
        None => Ok(()),
    }
}

/// Δu + u^{1+α}.
pub fn reaction_rhs(g: &Graph, u: &Field, alpha: f64) -> Result<Field> {
    check_alpha(alpha)?;
    check_initial(g, u)?;
    let mut out = vec![0.0; u.len()];
    rhs_into(g, u, alpha, &mut out);
    Ok(Field::from_vec_unchecked(out))
}

fn rhs_into(g: &Graph, u: &[f64], alpha: f64, out: &mut [f64]) {
    let p = 1.0 + alpha;
    for (x, o) in out.iter_mut().enumerate() {
        *o = laplacian_at(g, u, x) + u[x].max(0.0).powf(p);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub horizon: f64,
    pub blow_up_threshold: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Times the integrator lands on exactly (in addition to every accepted step).
    pub stop_times: Vec<f64>,
}

impl Default for IntegrationControl {
    fn default() -> Self {
        IntegrationControl {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            horizon: 10.0,
            blow_up_threshold: 1e8,
            min_step: 1e-12,
            max_steps: 10_000_000,
            stop_times: Vec::new(),
        }
    }
}

impl IntegrationControl {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("horizon", self.horizon),
            ("blow_up_threshold", self.blow_up_threshold),
            ("min_step", self.min_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} = {v} must be positive and finite")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be positive"));
        }
        if self.stop_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("stop times must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    CompletedHorizon,
    BlewUp {
        /// Midpoint of the comparison bracket.
        estimate: f64,
        lower: f64,
        upper: f64,
    },
    StepUnderflow { time: f64 },
}

impl TrajectoryStatus {
    pub fn blow_up_time(&self) -> Option<f64> {
        match self {
            TrajectoryStatus::BlewUp { estimate, .. } => Some(*estimate),
            _ => None,
        }
    }

    /// upper − lower of the blow-up bracket.
    pub fn bracket_width(&self) -> Option<f64> {
        match self {
            TrajectoryStatus::BlewUp { lower, upper, .. } => Some(upper - lower),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TrajectoryStatus::CompletedHorizon => "completed_horizon",
            TrajectoryStatus::BlewUp { .. } => "blew_up",
            TrajectoryStatus::StepUnderflow { .. } => "step_underflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub status: TrajectoryStatus,
    /// ∫ u dμ at each recorded time.
    pub mass_series: Vec<f64>,
    /// ∫ u^{1+α} dμ at each recorded time.
    pub reaction_series: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Field {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial time")
    }

    pub fn sup_norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect()
    }

    /// Recorded state at time `t`, if the integrator landed on it.
    pub fn state_at(&self, t: f64) -> Option<&Field> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.times.iter().position(|s| (s - t).abs() <= tol).map(|k| &self.states[k])
    }

    /// CSV with header `time,u_0,…,u_{n-1},mass,reaction`.
    pub fn to_csv(&self) -> String {
        trajectory_csv(&self.times, &self.states, &self.mass_series, &self.reaction_series)
    }
}

pub(crate) fn trajectory_csv(times: &[f64], states: &[Field], mass: &[f64], reaction: &[f64]) -> String {
    let n = states.first().map_or(0, |s| s.len());
    let mut out = String::from("time");
    for x in 0..n {
        out.push_str(&format!(",u_{x}"));
    }
    out.push_str(",mass,reaction\n");
    for k in 0..times.len() {
        out.push_str(&times[k].to_string());
        for v in states[k].iter() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push_str(&format!(",{},{}\n", mass[k], reaction[k]));
    }
    out
}

// Dormand–Prince 5(4) tableau (autonomous system, so the nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from nonnegative data `initial` (which may vanish identically).
pub fn integrate_semilinear(g: &Graph, alpha: f64, initial: &Field, control: &IntegrationControl) -> Result<Trajectory> {
    check_alpha(alpha)?;
    check_initial(g, initial)?;
    control.validate()?;

    let n = g.vertex_count();
    let p = 1.0 + alpha;
    let d_mu = g.structural_constants().d_mu;
    let reaction = |u: &[f64]| g.measure().iter().zip(u).map(|(m, v)| m * v.powf(p)).sum::<f64>();
    let sup = |u: &[f64]| u.iter().fold(0.0f64, |m, v| m.max(*v));

    let mut stops: Vec<f64> = control
        .stop_times
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s < control.horizon)
        .collect();
    stops.push(control.horizon);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let mut next_stop = 0;

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![initial.clone()],
        status: TrajectoryStatus::CompletedHorizon,
        mass_series: vec![integrate_slice(g, initial)],
        reaction_series: vec![reaction(initial)],
    };

    let mut t = 0.0;
    let mut y = initial.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    rhs_into(g, &y, alpha, &mut k[0]);

    let scale_norm = |v: &[f64], y: &[f64]| {
        v.iter()
            .zip(y)
            .map(|(a, b)| a.abs() / (control.abs_tol + control.rel_tol * b.abs()))
            .fold(0.0f64, f64::max)
    };
    let mut h = {
        let d0 = scale_norm(&y, &y);
        let d1 = scale_norm(&k[0], &y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(control.horizon)
    };
    let mut err_prev: f64 = 1.0;
    let mut steps = 0usize;

    if sup(&y) >= control.blow_up_threshold {
        traj.status = blow_up_bracket(t, sup(&y), alpha, d_mu);
        return Ok(traj);
    }

    while next_stop < stops.len() {
        if steps >= control.max_steps {
            traj.status = TrajectoryStatus::StepUnderflow { time: t };
            return Ok(traj);
        }
        let target = stops[next_stop];
        let mut hits_stop = false;
        if t + h >= target {
            h = target - t;
            hits_stop = true;
        }
        if h < control.min_step && !hits_stop {
            let s = sup(&y);
            let growing = traj.times.len() < 2 || s > sup(&traj.states[traj.states.len() - 2]);
            traj.status = if growing && s.powf(alpha) > d_mu {
                blow_up_bracket(t, s, alpha, d_mu)
            } else {
                TrajectoryStatus::StepUnderflow { time: t }
            };
            return Ok(traj);
        }
        steps += 1;

        for (s, row) in A.iter().enumerate().skip(1) {
            let (done, rest) = k.split_at_mut(s);
            for i in 0..n {
                let mut acc = y[i];
                for (a_sj, kj) in row.iter().zip(done.iter()) {
                    acc += h * a_sj * kj[i];
                }
                stage[i] = acc;
            }
            rhs_into(g, &stage, alpha, &mut rest[0]);
        }
        // The seventh stage point is the fifth-order solution (FSAL).
        y_new.copy_from_slice(&stage);

        let mut err: f64 = 0.0;
        let mut finite = true;
        for i in 0..n {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let sc = control.abs_tol + control.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / sc);
            finite &= y_new[i].is_finite();
        }
        if !finite || !err.is_finite() {
            h *= 0.5;
            continue;
        }
        if err > 1.0 {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            continue;
        }
        if y_new.iter().any(|&v| v < -control.abs_tol) {
            h *= 0.5;
            continue;
        }
        for v in y_new.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }

        // Accept.
        t = if hits_stop { target } else { t + h };
        std::mem::swap(&mut y, &mut y_new);
        if hits_stop {
            next_stop += 1;
        }
        rhs_into(g, &y, alpha, &mut k[0]);
        traj.times.push(t);
        traj.states.push(Field::from_vec_unchecked(y.clone()));
        traj.mass_series.push(integrate_slice(g, &y));
        traj.reaction_series.push(reaction(&y));

        let s = sup(&y);
        if s >= control.blow_up_threshold {
            traj.status = blow_up_bracket(t, s, alpha, d_mu);
            return Ok(traj);
        }

        let err_c = err.max(1e-10);
        let fac = 0.9 * err_c.powf(-0.17) * err_prev.powf(0.04);
        h *= fac.clamp(0.2, 10.0);
        err_prev = err_c;
    }
    Ok(traj)
}

fn blow_up_bracket(t: f64, sup: f64, alpha: f64, d_mu: f64) -> TrajectoryStatus {
    let w = sup.powf(alpha);
    let lower = t + 1.0 / (alpha * w);
    let upper = if w > d_mu {
        // ln(w / (w − D)) = −ln(1 − D/w)
        t + (-(-d_mu / w).ln_1p()) / (alpha * d_mu)
    } else {
        f64::INFINITY
    };
    let estimate = if upper.is_finite() { 0.5 * (lower + upper) } else { lower };
    TrajectoryStatus::BlewUp { estimate, lower, upper }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMeasure {
    /// Compares max_x u.
    SupNorm,
    /// Compares max_x u − min_x u.
    Spread,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayCriterion {
    pub measure: DecayMeasure,
    pub factor: f64,
}

impl Default for DecayCriterion {
    fn default() -> Self {
        DecayCriterion { measure: DecayMeasure::SupNorm, factor: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BlowUp,
    DecayOnHorizon,
    Undetermined,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::BlowUp => "blow_up",
            Verdict::DecayOnHorizon => "decay_on_horizon",
            Verdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub horizon: f64,
    pub criterion: DecayCriterion,
    pub blow_up_time: Option<f64>,
    pub initial_sup: f64,
    pub final_sup: f64,
    pub max_sup: f64,
    pub min_sup: f64,
    pub initial_spread: f64,
    pub final_spread: f64,
    /// (mass(T) − mass(0)) / T.
    pub mass_growth_rate: f64,
}

fn spread(u: &[f64]) -> f64 {
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    hi - lo
}

/// Finite-horizon surrogate for global existence versus blow-up.
pub fn classify_trajectory(traj: &Trajectory, horizon: f64, criterion: DecayCriterion) -> Classification {
    let sups = traj.sup_norms();
    let first = &traj.states[0];
    let last = traj.final_state();
    let t_end = traj.final_time();
    let initial_sup = sups[0];
    let final_sup = *sups.last().unwrap();
    let initial_spread = spread(first);
    let final_spread = spread(last);
    let mass_growth_rate = if t_end > 0.0 {
        (traj.mass_series.last().unwrap() - traj.mass_series[0]) / t_end
    } else {
        0.0
    };
    let reached = t_end >= horizon * (1.0 - 1e-12);
    let verdict = match traj.status {
        TrajectoryStatus::BlewUp { .. } => Verdict::BlowUp,
        TrajectoryStatus::CompletedHorizon if reached => {
            let (start, end) = match criterion.measure {
                DecayMeasure::SupNorm => (initial_sup, final_sup),
                DecayMeasure::Spread => (initial_spread, final_spread),
            };
            if end <= criterion.factor * start {
                Verdict::DecayOnHorizon
            } else {
                Verdict::Undetermined
            }
        }
        _ => Verdict::Undetermined,
    };
    Classification {
        verdict,
        horizon,
        criterion,
        blow_up_time: traj.status.blow_up_time(),
        initial_sup,
        final_sup,
        max_sup: sups.iter().copied().fold(0.0, f64::max),
        min_sup: sups.iter().copied().fold(f64::INFINITY, f64::min),
        initial_spread,
        final_spread,
        mass_growth_rate,
    }
}

/// J₀(t) = Σ_x μ(x) p(t, e, x) a(x).
pub fn j0_functional(hk: &HeatKernelOperator, a: &Field, t: f64, e: usize) -> Result<f64> {
    let g = hk.graph();
    check_initial(g, a)?;
    g.check_vertex(e)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time {t} must be positive")));
    }
    Ok((0..g.vertex_count())
        .map(|x| g.mu(x) * hk.kernel_value_unchecked(t, e, x) * a[x])
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct J0ComparisonPoint {
    pub t: f64,
    pub j0: f64,
    pub u_e: f64,
    /// J₀^{-α} − u(t,e)^{-α} − αt; nonnegative for exact solutions.
    pub residual: f64,
}

/// Evaluates J₀(t)^{-α} − u(t,e)^{-α} − αt at every recorded time.
pub fn verify_j0_comparison(traj: &Trajectory, hk: &HeatKernelOperator, e: usize, alpha: f64) -> Result<Vec<J0ComparisonPoint>> {
    check_alpha(alpha)?;
    hk.graph().check_vertex(e)?;
    let a = &traj.states[0];
    let mut out = Vec::with_capacity(traj.len());
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let u_e = state[e];
        if !(u_e > 0.0) {
            return Err(Error::Singular(format!("u(t, e) = {u_e} at t = {t}")));
        }
        let j0 = if *t > 0.0 { j0_functional(hk, a, *t, e)? } else { a[e] };
        let residual = j0.powf(-alpha) - u_e.powf(-alpha) - alpha * t;
        out.push(J0ComparisonPoint { t: *t, j0, u_e, residual });
    }
    Ok(out)
}

/// Largest |(mass_k − mass_0) − ∫_0^{t_k} reaction dt|. The reaction series is
/// integrated with the corrected trapezoid rule h/2 (R₀+R₁) + h²/12 (R₀′−R₁′),
/// where R′ = ∫(1+α)u^α u_t dμ is evaluated exactly from each stored state.
pub fn mass_balance_defect(g: &Graph, alpha: f64, traj: &Trajectory) -> Result<f64> {
    check_alpha(alpha)?;
    let n = g.vertex_count();
    let mut ut = vec![0.0; n];
    let mut slopes = Vec::with_capacity(traj.len());
    for u in &traj.states {
        check_len(g, u)?;
        rhs_into(g, u, alpha, &mut ut);
        let d: f64 = (0..n).map(|x| g.mu(x) * (1.0 + alpha) * u[x].powf(alpha) * ut[x]).sum();
        slopes.push(d);
    }
    let mut quad = 0.0;
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        quad += 0.5 * dt * (traj.reaction_series[k] + traj.reaction_series[k - 1])
            + dt * dt / 12.0 * (slopes[k - 1] - slopes[k]);
        worst = worst.max((traj.mass_series[k] - traj.mass_series[0] - quad).abs());
    }
    Ok(worst)
}

/// Largest amount by which the linear flow P_t a exceeds u(t, ·).
pub fn linear_comparison_defect(traj: &Trajectory, hk: &HeatKernelOperator) -> f64 {
    let a = &traj.states[0];
    let coeffs = hk.to_spectral(a);
    let mut worst: f64 = 0.0;
    for (t, u) in traj.times.iter().zip(&traj.states).skip(1) {
        let lin = hk.synthesize(&coeffs, *t);
        for (l, v) in lin.iter().zip(u.iter()) {
            worst = worst.max(l - v);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NonexistenceConstants {
    /// (t log t)^{mα} ≥ α C̄^α t with C̄ = μ(e) a(e) / (4 c₀ C₀^m).
    VolumeUpper { c0: f64, c0_big: f64 },
    /// t^{mα/2} ≥ α C̄′^α t with C̄′ supplied directly.
    CurvatureLower { c_bar_prime: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub constants: NonexistenceConstants,
    pub m: f64,
    pub alpha: f64,
    /// C̄ or C̄′ as used.
    pub c_bar: f64,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Time beyond which the inequality fails at every later grid point,
    /// refined by bisection; `None` when it holds at the last grid time.
    pub crossing_time: Option<f64>,
    /// First time at which J₀(t)^{-α} < αt; an upper bound on the blow-up time.
    pub j0_bound_time: Option<f64>,
}

fn bisect(mut lo: f64, mut hi: f64, holds: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Evaluates the contradiction inequality of the nonexistence argument on a
/// time grid.
#[allow(clippy::too_many_arguments)]
pub fn nonexistence_inequality_check(
    hk: &HeatKernelOperator,
    a: &Field,
    e: usize,
    alpha: f64,
    m: f64,
    constants: NonexistenceConstants,
    times: &[f64],
) -> Result<NonexistenceReport> {
    let g = hk.graph();
    check_alpha(alpha)?;
    check_initial(g, a)?;
    g.check_vertex(e)?;
    if !(m > 0.0) {
        return Err(Error::invalid(format!("volume exponent m = {m} must be positive")));
    }
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("time grid must be nonempty with positive entries"));
    }
    let c_bar = match constants {
        NonexistenceConstants::VolumeUpper { c0, c0_big } => {
            let d_mu = g.structural_constants().d_mu;
            if !(c0_big > 2.0 * d_mu * std::f64::consts::E) {
                return Err(Error::invalid(format!(
                    "C0 = {c0_big} must exceed 2·D_mu·e = {}",
                    2.0 * d_mu * std::f64::consts::E
                )));
            }
            if !(c0 > 0.0) {
                return Err(Error::invalid("c0 must be positive"));
            }
            g.mu(e) * a[e] / (4.0 * c0 * c0_big.powf(m))
        }
        NonexistenceConstants::CurvatureLower { c_bar_prime } => {
            if !(c_bar_prime > 0.0) {
                return Err(Error::invalid("C̄′ must be positive"));
            }
            c_bar_prime
        }
    };
    // Work with logarithms: holds ⇔ log_lhs ≥ log_rhs.
    let log_gap = |t: f64| -> Option<f64> {
        let log_lhs = match constants {
            NonexistenceConstants::VolumeUpper { .. } => {
                let tl = t * t.ln();
                if tl <= 0.0 {
                    return None;
                }
                m * alpha * tl.ln()
            }
            NonexistenceConstants::CurvatureLower { .. } => 0.5 * m * alpha * t.ln(),
        };
        Some(log_lhs - (alpha.ln() + alpha * c_bar.ln() + t.ln()))
    };
    let mut grid = times.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let mut used = Vec::new();
    for &t in &grid {
        if log_gap(t).is_some() {
            let l = match constants {
                NonexistenceConstants::VolumeUpper { .. } => (t * t.ln()).powf(m * alpha),
                NonexistenceConstants::CurvatureLower { .. } => t.powf(0.5 * m * alpha),
            };
            used.push(t);
            lhs.push(l);
            rhs.push(alpha * c_bar.powf(alpha) * t);
        }
    }
    if used.is_empty() {
        return Err(Error::invalid("no grid time where the inequality is defined"));
    }
    let holds = |t: f64| log_gap(t).is_some_and(|g| g >= 0.0);
    let crossing_time = if holds(*used.last().unwrap()) {
        None
    } else {
        match used.iter().rposition(|&t| holds(t)) {
            Some(k) => Some(bisect(used[k], used[k + 1], holds)),
            None => Some(used[0]),
        }
    };

    let j0_holds = |t: f64| j0_functional(hk, a, t, e).map(|j| j.powf(-alpha) >= alpha * t).unwrap_or(false);
    let j0_bound_time = match grid.iter().position(|&t| !j0_holds(t)) {
        Some(0) => Some(grid[0]),
        Some(k) => Some(bisect(grid[k - 1], grid[k], j0_holds)),
        None => None,
    };

    Ok(NonexistenceReport {
        constants,
        m,
        alpha,
        c_bar,
        times: used,
        lhs,
        rhs,
        crossing_time,
        j0_bound_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    /// a(x_i) = i + 1.
    Ramp,
    Constant,
    Indicator { vertex: usize },
    Values { values: Vec<f64> },
}

impl InitialProfile {
    pub fn realize(&self, g: &Graph, scale: f64) -> Result<Field> {
        let n = g.vertex_count();
        let base: Vec<f64> = match self {
            InitialProfile::Ramp => (1..=n).map(|i| i as f64).collect(),
            InitialProfile::Constant => vec![1.0; n],
            InitialProfile::Indicator { vertex } => {
                g.check_vertex(*vertex)?;
                (0..n).map(|x| if x == *vertex { 1.0 } else { 0.0 }).collect()
            }
            InitialProfile::Values { values } => {
                check_len(g, values)?;
                values.clone()
            }
        };
        let a = Field::new(base.into_iter().map(|v| v * scale).collect())?;
        check_initial(g, &a)?;
        Ok(a)
    }
}

#[derive(Debug, Clone)]
pub struct SweepMember {
    pub name: String,
    pub graph: Graph,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub scales: Vec<f64>,
    pub profile: InitialProfile,
    pub control: IntegrationControl,
    pub criterion: DecayCriterion,
    /// Radii for the volume-growth fit around vertex 0.
    pub fit_radii: RangeInclusive<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub graph: String,
    pub m_fit: f64,
    pub alpha: f64,
    pub m_alpha: f64,
    pub scale: f64,
    pub verdict: Verdict,
    pub blow_up_time: Option<f64>,
    pub final_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub horizon: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// CSV with header `graph,m_fit,alpha,m_alpha,scale,verdict,tb_or_final_sup`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("graph,m_fit,alpha,m_alpha,scale,verdict,tb_or_final_sup\n");
        for r in &self.rows {
            let last = r.blow_up_time.unwrap_or(r.final_sup);
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.graph,
                r.m_fit,
                r.alpha,
                r.m_alpha,
                r.scale,
                r.verdict.label(),
                last
            ));
        }
        out
    }
}

/// Classifies every (graph, α, scale) cell of the sweep.
pub fn fujita_sweep(members: &[SweepMember], cfg: &SweepConfig) -> Result<SweepTable> {
    if members.is_empty() || cfg.alphas.is_empty() || cfg.scales.is_empty() {
        return Err(Error::invalid("sweep needs at least one graph, alpha and scale"));
    }
    for &alpha in &cfg.alphas {
        check_alpha(alpha)?;
    }
    if cfg.scales.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::invalid("scales must be finite and nonnegative"));
    }
    cfg.control.validate()?;
    let fits: Vec<f64> = members
        .iter()
        .map(|m| {
            fit_volume_growth(&m.graph, &[0], cfg.fit_radii.clone())
                .map(|f| f.exponent_m)
                .unwrap_or(f64::NAN)
        })
        .collect();
    let cells: Vec<(usize, f64, f64)> = (0..members.len())
        .flat_map(|k| cfg.alphas.iter().flat_map(move |&a| cfg.scales.iter().map(move |&s| (k, a, s))))
        .collect();
    let rows = cells
        .into_par_iter()
        .map(|(k, alpha, scale)| {
            let member = &members[k];
            let a = cfg.profile.realize(&member.graph, scale)?;
            let traj = integrate_semilinear(&member.graph, alpha, &a, &cfg.control)?;
            let class = classify_trajectory(&traj, cfg.control.horizon, cfg.criterion);
            Ok(SweepRow {
                graph: member.name.clone(),
                m_fit: fits[k],
                alpha,
                m_alpha: fits[k] * alpha,
                scale,
                verdict: class.verdict,
                blow_up_time: class.blow_up_time,
                final_sup: class.final_sup,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { horizon: cfg.control.horizon, rows })
}
