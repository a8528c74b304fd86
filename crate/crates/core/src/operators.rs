//! The μ-Laplacian, the gradient forms Γ and Γ₂, integration against μ, and
//! sampling-based falsification of the exponential curvature-dimension
//! inequalities CDE and CDE′.

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A real function on the vertices of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(x));
        }
        Ok(Field(values))
    }

    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.0.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Field(values)
    }
}

impl Deref for Field {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Field {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Field::new(values)
    }
}

pub(crate) fn check_len(g: &Graph, f: &[f64]) -> Result<()> {
    if f.len() == g.vertex_count() {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected: g.vertex_count(), got: f.len() })
    }
}

#[inline]
pub(crate) fn laplacian_at(g: &Graph, f: &[f64], x: usize) -> f64 {
    let fx = f[x];
    g.neighbors(x).iter().map(|&(y, w)| w * (f[y] - fx)).sum::<f64>() / g.mu(x)
}

#[inline]
pub(crate) fn gamma_at(g: &Graph, f: &[f64], h: &[f64], x: usize) -> f64 {
    let (fx, hx) = (f[x], h[x]);
    g.neighbors(x)
        .iter()
        .map(|&(y, w)| w * (f[y] - fx) * (h[y] - hx))
        .sum::<f64>()
        / (2.0 * g.mu(x))
}

pub(crate) fn laplacian_into(g: &Graph, f: &[f64], out: &mut [f64]) {
    for (x, o) in out.iter_mut().enumerate() {
        *o = laplacian_at(g, f, x);
    }
}

/// Δf(x) = (1/μ(x)) Σ_y ω_xy (f(y) − f(x)).
pub fn laplacian(g: &Graph, f: &Field) -> Result<Field> {
    check_len(g, f)?;
    let mut out = vec![0.0; f.len()];
    laplacian_into(g, f, &mut out);
    Ok(Field(out))
}

/// Γ(f, h)(x) = (1/2μ(x)) Σ_y ω_xy (f(y) − f(x))(h(y) − h(x)).
pub fn gamma(g: &Graph, f: &Field, h: &Field) -> Result<Field> {
    check_len(g, f)?;
    check_len(g, h)?;
    Ok(Field((0..f.len()).map(|x| gamma_at(g, f, h, x)).collect()))
}

/// Γ₂(f) = ½ [ΔΓ(f) − 2Γ(f, Δf)].
pub fn gamma2(g: &Graph, f: &Field) -> Result<Field> {
    check_len(g, f)?;
    let n = f.len();
    let gf: Vec<f64> = (0..n).map(|x| gamma_at(g, f, f, x)).collect();
    let mut lf = vec![0.0; n];
    laplacian_into(g, f, &mut lf);
    Ok(Field(
        (0..n)
            .map(|x| 0.5 * (laplacian_at(g, &gf, x) - 2.0 * gamma_at(g, f, &lf, x)))
            .collect(),
    ))
}

/// ∫ f dμ = Σ_x μ(x) f(x).
pub fn integrate(g: &Graph, f: &Field) -> Result<f64> {
    check_len(g, f)?;
    Ok(integrate_slice(g, f))
}

pub(crate) fn integrate_slice(g: &Graph, f: &[f64]) -> f64 {
    g.measure().iter().zip(f).map(|(m, v)| m * v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureCondition {
    /// Γ₂(f) − Γ(f, Γ(f)/f) ≥ (1/n)(Δf)² + KΓ(f) for positive f with Δf(x) < 0.
    #[serde(rename = "CDE")]
    Cde,
    /// Γ₂(f) − Γ(f, Γ(f)/f) ≥ (1/n) f²(Δ log f)² + KΓ(f) for all positive f.
    #[serde(rename = "CDE_PRIME")]
    CdePrime,
}

/// Both sides of a curvature inequality evaluated at one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSides {
    pub lhs: f64,
    pub rhs: f64,
}

impl CurvatureSides {
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// Residual scaled by 1 + |LHS| + |RHS|.
    pub fn normalized(&self) -> f64 {
        self.residual() / (1.0 + self.lhs.abs() + self.rhs.abs())
    }
}

/// Evaluates both sides at `x` without checking preconditions. Only values
/// of `f` on B(x, 2) are read.
fn curvature_sides_unchecked(g: &Graph, x: usize, f: &[f64], condition: CurvatureCondition, n: f64, k: f64) -> CurvatureSides {
    let nbrs = g.neighbors(x);
    let gamma_f = |v: usize| gamma_at(g, f, f, v);
    let lap_f = |v: usize| laplacian_at(g, f, v);

    let gx = gamma_f(x);
    let lx = lap_f(x);
    let mu_x = g.mu(x);
    let fx = f[x];
    let q_x = gx / fx;

    // ΔΓ(f)(x), Γ(f, Δf)(x), Γ(f, Γ(f)/f)(x), accumulated over neighbours.
    let mut lap_gamma = 0.0;
    let mut gamma_f_lap = 0.0;
    let mut gamma_f_quot = 0.0;
    for &(y, w) in nbrs {
        let gy = gamma_f(y);
        let df = f[y] - fx;
        lap_gamma += w * (gy - gx);
        gamma_f_lap += w * df * (lap_f(y) - lx);
        gamma_f_quot += w * df * (gy / f[y] - q_x);
    }
    lap_gamma /= mu_x;
    gamma_f_lap /= 2.0 * mu_x;
    gamma_f_quot /= 2.0 * mu_x;

    let gamma2 = 0.5 * (lap_gamma - 2.0 * gamma_f_lap);
    let lhs = gamma2 - gamma_f_quot;
    let quadratic = match condition {
        CurvatureCondition::Cde => lx * lx,
        CurvatureCondition::CdePrime => {
            let log_fx = fx.ln();
            let lap_log = nbrs.iter().map(|&(y, w)| w * (f[y].ln() - log_fx)).sum::<f64>() / mu_x;
            fx * fx * lap_log * lap_log
        }
    };
    CurvatureSides { lhs, rhs: quadratic / n + k * gx }
}

fn check_curvature_inputs(g: &Graph, x: usize, f: &[f64], condition: CurvatureCondition, n: f64) -> Result<()> {
    check_len(g, f)?;
    g.check_vertex(x)?;
    if !(n > 0.0) {
        return Err(Error::invalid(format!("dimension parameter n = {n} must be positive")));
    }
    for y in g.ball(x, 2)? {
        if !(f[y] > 0.0) {
            return Err(Error::CurvaturePrecondition {
                vertex: x,
                reason: format!("test function is {} at vertex {y} in B(x,2)", f[y]),
            });
        }
    }
    if condition == CurvatureCondition::Cde && laplacian_at(g, f, x) >= 0.0 {
        return Err(Error::CurvaturePrecondition {
            vertex: x,
            reason: "CDE requires Δf(x) < 0".into(),
        });
    }
    Ok(())
}

pub fn curvature_sides(g: &Graph, x: usize, f: &Field, condition: CurvatureCondition, n: f64, k: f64) -> Result<CurvatureSides> {
    check_curvature_inputs(g, x, f, condition, n)?;
    Ok(curvature_sides_unchecked(g, x, f, condition, n, k))
}

/// LHS − RHS of the curvature inequality at `x`; negative means `f`
/// violates the condition there.
pub fn curvature_residual(g: &Graph, x: usize, f: &Field, condition: CurvatureCondition, n: f64, k: f64) -> Result<f64> {
    curvature_sides(g, x, f, condition, n, k).map(|s| s.residual())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureVerdict {
    NoViolationFound,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub condition: CurvatureCondition,
    pub n: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub vertex: usize,
    pub verdict: CurvatureVerdict,
    pub witness: Option<Field>,
    /// LHS − RHS for the witness, or for the best candidate when no
    /// violation was found.
    pub witness_residual: f64,
    pub best_normalized_residual: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FalsifyConfig {
    /// Random test functions drawn per vertex.
    pub budget: usize,
    pub seed: u64,
    /// log f is drawn uniformly from [−log_box, log_box] on B(x, 2).
    pub log_box: f64,
    /// Relative violation tolerance on (LHS − RHS)/(1 + |LHS| + |RHS|).
    pub tolerance: f64,
    /// Number of best random candidates refined by local descent.
    pub refine_candidates: usize,
    pub max_sweeps: usize,
}

impl Default for FalsifyConfig {
    fn default() -> Self {
        FalsifyConfig {
            budget: 10_000,
            seed: 0,
            log_box: 3.0,
            tolerance: 1e-9,
            refine_candidates: 8,
            max_sweeps: 200,
        }
    }
}

/// Searches for positive test functions violating CDE(x, n, K) or
/// CDE′(x, n, K) at every vertex. A clean report only means that no
/// violation was found under the given budget and seed.
pub fn falsify_curvature(
    g: &Graph,
    condition: CurvatureCondition,
    n: f64,
    k: f64,
    config: &FalsifyConfig,
) -> Result<Vec<CurvatureReport>> {
    if config.budget == 0 {
        return Err(Error::invalid("falsification budget must be at least 1"));
    }
    if !(n > 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("curvature parameters n = {n}, K = {k} are not admissible")));
    }
    if !(config.log_box > 0.0) || !(config.tolerance >= 0.0) {
        return Err(Error::invalid("log_box must be positive and tolerance nonnegative"));
    }
    (0..g.vertex_count())
        .into_par_iter()
        .map(|x| falsify_at(g, x, condition, n, k, config))
        .collect()
}

struct Candidate {
    logs: Vec<f64>,
    score: f64,
}

fn falsify_at(g: &Graph, x: usize, condition: CurvatureCondition, n: f64, k: f64, config: &FalsifyConfig) -> Result<CurvatureReport> {
    let ball = g.ball(x, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(x as u64);

    let mut f = vec![1.0; g.vertex_count()];
    let score = |logs: &[f64], f: &mut Vec<f64>| -> Option<CurvatureSides> {
        for (&y, &l) in ball.iter().zip(logs) {
            f[y] = l.exp();
        }
        if condition == CurvatureCondition::Cde && laplacian_at(g, f, x) >= 0.0 {
            return None;
        }
        let sides = curvature_sides_unchecked(g, x, f, condition, n, k);
        sides.residual().is_finite().then_some(sides)
    };

    let keep = config.refine_candidates.max(1);
    let mut best: Vec<Candidate> = Vec::with_capacity(keep + 1);
    let mut logs = vec![0.0; ball.len()];
    for _ in 0..config.budget {
        for l in logs.iter_mut() {
            *l = rng.random_range(-config.log_box..=config.log_box);
        }
        let Some(sides) = score(&logs, &mut f) else { continue };
        let s = sides.normalized();
        if best.len() < keep || s < best[best.len() - 1].score {
            best.push(Candidate { logs: logs.clone(), score: s });
            best.sort_by(|a, b| a.score.total_cmp(&b.score));
            best.truncate(keep);
        }
    }

    // Coordinate-wise pattern search on the log-values.
    let limit = 3.0 * config.log_box;
    for cand in best.iter_mut() {
        let mut step = config.log_box / 4.0;
        let mut sweeps = 0;
        while step > 1e-7 && sweeps < config.max_sweeps {
            sweeps += 1;
            let mut improved = false;
            for c in 0..cand.logs.len() {
                for dir in [1.0, -1.0] {
                    let old = cand.logs[c];
                    let trial = (old + dir * step).clamp(-limit, limit);
                    cand.logs[c] = trial;
                    match score(&cand.logs, &mut f) {
                        Some(sides) if sides.normalized() < cand.score => {
                            cand.score = sides.normalized();
                            improved = true;
                        }
                        _ => cand.logs[c] = old,
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
    }
    best.sort_by(|a, b| a.score.total_cmp(&b.score));

    let mut report = CurvatureReport {
        condition,
        n,
        k,
        vertex: x,
        verdict: CurvatureVerdict::NoViolationFound,
        witness: None,
        witness_residual: f64::NAN,
        best_normalized_residual: f64::NAN,
        trials: config.budget,
        seed: config.seed,
    };
    if let Some(top) = best.first() {
        let sides = score(&top.logs, &mut f).expect("refined candidate stays admissible");
        report.witness_residual = sides.residual();
        report.best_normalized_residual = sides.normalized();
        if sides.normalized() < -config.tolerance && sides.residual() < 0.0 {
            report.verdict = CurvatureVerdict::Violated;
            report.witness = Some(Field(f.clone()));
        }
    }
    Ok(report)
}
