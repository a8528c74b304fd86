//! Heat kernel of the μ-Laplacian via dense symmetric eigendecomposition.
//!
//! With M = diag μ, the generator Δ = M⁻¹(W − diag m) is similar to the
//! symmetric matrix S = M^{-1/2}(W − diag m)M^{-1/2}. If S = Φ Λ Φᵀ then
//!
//! ```text
//! p(t, x, y) = Σ_k e^{λ_k t} φ_k(x) φ_k(y) / (√μ(x) √μ(y)),
//! P_t f(x)   = Σ_y μ(y) p(t, x, y) f(y).
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operators::{check_len, laplacian_into, Field};

pub const DEFAULT_SIZE_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct HeatKernelOperator {
    graph: Graph,
    eigenvalues: Vec<f64>,
    eigenbasis: DMatrix<f64>,
    measure_roots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemigroupMethod {
    Spectral,
    /// Truncated exponential series Σ_{k ≤ order} t^k Δ^k f / k!.
    Series { order: usize, tolerance: f64 },
    /// e^{-ct} Σ (ct)^k P^k f / k! with P = I + Δ/c, c = D_μ. Every term is
    /// nonnegative for f ≥ 0, so entries keep full relative accuracy even
    /// where the kernel is far below machine epsilon.
    Uniformized,
}

pub fn spectral_decompose(g: &Graph) -> Result<HeatKernelOperator> {
    spectral_decompose_capped(g, DEFAULT_SIZE_CAP)
}

pub fn spectral_decompose_capped(g: &Graph, cap: usize) -> Result<HeatKernelOperator> {
    let n = g.vertex_count();
    if n > cap {
        return Err(Error::SizeOverCap { vertices: n, cap });
    }
    let roots: Vec<f64> = g.measure().iter().map(|m| m.sqrt()).collect();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        s[(x, x)] = -g.weighted_degree(x) / g.mu(x);
        for &(y, w) in g.neighbors(x) {
            s[(x, y)] = w / (roots[x] * roots[y]);
        }
    }
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigensolver("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut basis = DMatrix::<f64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(k));
    }

    let scale = eigenvalues.iter().map(|l| l.abs()).fold(1.0, f64::max);
    if eigenvalues[0].abs() > 1e-8 * scale {
        return Err(Error::Eigensolver(format!("top eigenvalue {} is not zero", eigenvalues[0])));
    }
    if n > 1 && eigenvalues[1] >= 0.0 {
        return Err(Error::Eigensolver("zero eigenvalue is not simple".into()));
    }
    // The stationary mode is known in closed form.
    eigenvalues[0] = 0.0;
    let norm = g.total_measure().sqrt();
    for x in 0..n {
        basis[(x, 0)] = roots[x] / norm;
    }

    Ok(HeatKernelOperator { graph: g.clone(), eigenvalues, eigenbasis: basis, measure_roots: roots })
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time {t} must be positive and finite")))
    }
}

impl HeatKernelOperator {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Eigenvalues of the generator, 0 = λ_0 > λ_1 ≥ λ_2 ≥ …
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors of the symmetrized generator, one per column.
    pub fn eigenbasis(&self) -> &DMatrix<f64> {
        &self.eigenbasis
    }

    pub fn measure_roots(&self) -> &[f64] {
        &self.measure_roots
    }

    pub fn vertex_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// max |ΦᵀΦ − I|.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenbasis.transpose() * &self.eigenbasis;
        let n = self.vertex_count();
        (gram - DMatrix::<f64>::identity(n, n)).amax()
    }

    pub fn kernel_value(&self, t: f64, x: usize, y: usize) -> Result<f64> {
        check_time(t)?;
        self.graph.check_vertex(x)?;
        self.graph.check_vertex(y)?;
        Ok(self.kernel_value_unchecked(t, x, y))
    }

    pub(crate) fn kernel_value_unchecked(&self, t: f64, x: usize, y: usize) -> f64 {
        let phi = &self.eigenbasis;
        let sum: f64 = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, l)| (l * t).exp() * phi[(x, k)] * phi[(y, k)])
            .sum();
        sum / (self.measure_roots[x] * self.measure_roots[y])
    }

    /// Full matrix p(t, ·, ·).
    pub fn kernel_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        check_time(t)?;
        Ok(self.kernel_matrix_unchecked(t))
    }

    fn kernel_matrix_unchecked(&self, t: f64) -> DMatrix<f64> {
        self.spectral_matrix(|lambda| (lambda * t).exp())
    }

    /// M^{-1/2} Φ diag(w(λ_k)) Φᵀ M^{-1/2}.
    fn spectral_matrix(&self, w: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.vertex_count();
        let mut scaled = self.eigenbasis.clone();
        for k in 0..n {
            scaled.column_mut(k).scale_mut(w(self.eigenvalues[k]));
        }
        let mut p = scaled * self.eigenbasis.transpose();
        for x in 0..n {
            for y in 0..n {
                p[(x, y)] /= self.measure_roots[x] * self.measure_roots[y];
            }
        }
        p
    }

    /// Coefficients of `f` in the eigenbasis: c_k = Σ_y √μ(y) φ_k(y) f(y).
    pub(crate) fn to_spectral(&self, f: &[f64]) -> DVector<f64> {
        let weighted = DVector::from_iterator(f.len(), f.iter().zip(&self.measure_roots).map(|(v, r)| v * r));
        self.eigenbasis.tr_mul(&weighted)
    }

    /// Inverse of [`Self::to_spectral`] after evolving each mode for time `t`.
    pub(crate) fn synthesize(&self, coeffs: &DVector<f64>, t: f64) -> Vec<f64> {
        let evolved = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(&self.eigenvalues).map(|(c, l)| c * (l * t).exp()),
        );
        let v = &self.eigenbasis * evolved;
        v.iter().zip(&self.measure_roots).map(|(a, r)| a / r).collect()
    }

    pub(crate) fn evolve_spectral(&self, t: f64, f: &[f64]) -> Vec<f64> {
        self.synthesize(&self.to_spectral(f), t)
    }

    /// P_t f.
    pub fn apply_semigroup(&self, t: f64, f: &Field, method: SemigroupMethod) -> Result<Field> {
        check_time(t)?;
        check_len(&self.graph, f)?;
        match method {
            SemigroupMethod::Spectral => Ok(Field::from_vec_unchecked(self.evolve_spectral(t, f))),
            SemigroupMethod::Series { order, tolerance } => {
                if order == 0 {
                    return Err(Error::invalid("series order must be at least 1"));
                }
                let bound = series_truncation_bound(&self.graph, t, f, order);
                if !(bound <= tolerance) {
                    return Err(Error::TruncationInsufficient { bound, tolerance });
                }
                let n = f.len();
                let mut term = f.to_vec();
                let mut sum = term.clone();
                let mut next = vec![0.0; n];
                for k in 1..=order {
                    laplacian_into(&self.graph, &term, &mut next);
                    let c = t / k as f64;
                    for (tk, nk) in term.iter_mut().zip(&next) {
                        *tk = c * nk;
                    }
                    for (s, tk) in sum.iter_mut().zip(&term) {
                        *s += tk;
                    }
                }
                Ok(Field::from_vec_unchecked(sum))
            }
            SemigroupMethod::Uniformized => Ok(Field::from_vec_unchecked(uniformized_semigroup(&self.graph, t, f))),
        }
    }

    /// Checks the five standard kernel properties at the given times over
    /// all vertex pairs.
    pub fn verify_kernel_axioms(&self, times: &[f64]) -> Result<KernelAxiomReport> {
        if times.is_empty() {
            return Err(Error::invalid("need at least one time"));
        }
        for &t in times {
            check_time(t)?;
        }
        let g = &self.graph;
        let n = self.vertex_count();
        let mut report = KernelAxiomReport {
            symmetry_error: 0.0,
            min_kernel_value: f64::INFINITY,
            conservation_defect: 0.0,
            semigroup_error: 0.0,
            heat_equation_residual: 0.0,
            heat_equation_residual_abs: 0.0,
            times: times.to_vec(),
        };
        let mut col = vec![0.0; n];
        let mut lap = vec![0.0; n];
        for &t in times {
            let p = self.kernel_matrix_unchecked(t);
            for x in 0..n {
                let mut mass = 0.0;
                for y in 0..n {
                    report.symmetry_error = report.symmetry_error.max((p[(x, y)] - p[(y, x)]).abs());
                    report.min_kernel_value = report.min_kernel_value.min(p[(x, y)]);
                    mass += g.mu(y) * p[(x, y)];
                }
                report.conservation_defect = report.conservation_defect.max((mass - 1.0).abs());
            }

            let h = HEAT_FD_STEP.min(0.5 * t);
            // Central difference (p(t+h) − p(t−h)) / 2h taken mode by mode, which
            // avoids cancelling the stationary part.
            let fd = self.spectral_matrix(|lambda| (lambda * t).exp() * (lambda * h).sinh() / h);
            let mut abs_err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for y in 0..n {
                for x in 0..n {
                    col[x] = p[(x, y)];
                }
                laplacian_into(g, &col, &mut lap);
                for x in 0..n {
                    abs_err = abs_err.max((fd[(x, y)] - lap[x]).abs());
                    scale = scale.max(lap[x].abs());
                }
            }
            report.heat_equation_residual_abs = report.heat_equation_residual_abs.max(abs_err);
            let rel = if scale > 0.0 { abs_err / scale } else { abs_err };
            report.heat_equation_residual = report.heat_equation_residual.max(rel);
        }

        let mut pairs = vec![(times[0], times[0])];
        pairs.extend(times.windows(2).map(|w| (w[0], w[1])));
        let mu = DMatrix::from_diagonal(&DVector::from_column_slice(g.measure()));
        for (t, s) in pairs {
            let lhs = self.kernel_matrix_unchecked(t) * &mu * self.kernel_matrix_unchecked(s);
            let rhs = self.kernel_matrix_unchecked(t + s);
            report.semigroup_error = report.semigroup_error.max((lhs - rhs).amax());
        }
        Ok(report)
    }

    /// Samples heat-kernel bounds on the configured ranges.
    pub fn verify_bounds(&self, configs: &[BoundCheckConfig]) -> Result<Vec<BoundCheckReport>> {
        configs.iter().map(|c| self.verify_bound(c)).collect()
    }

    fn verify_bound(&self, cfg: &BoundCheckConfig) -> Result<BoundCheckReport> {
        let g = &self.graph;
        let d_mu = g.structural_constants().d_mu;
        match cfg.bound {
            BoundSpec::VolumeLower { c0_big, .. } if !(c0_big > 2.0 * d_mu * std::f64::consts::E) => {
                return Err(Error::invalid(format!(
                    "C0 = {c0_big} must exceed 2·D_mu·e = {}",
                    2.0 * d_mu * std::f64::consts::E
                )));
            }
            BoundSpec::Upper { c1: Some(c) } if !(c > 0.0) => {
                return Err(Error::invalid("C1 must be positive"));
            }
            _ => {}
        }
        if cfg.pairs.is_empty() {
            return Err(Error::EmptySampleRange("no vertex pairs".into()));
        }
        for &(x, y) in &cfg.pairs {
            g.check_vertex(x)?;
            g.check_vertex(y)?;
        }
        let mut clipped = false;
        let times: Vec<f64> = cfg
            .times
            .points()?
            .into_iter()
            .filter(|&t| {
                let ok = cfg.bound.admits(t) && cfg.time_guard.is_none_or(|guard| cfg.bound.kernel_time(t) <= guard);
                clipped |= !ok;
                ok
            })
            .collect();
        if times.is_empty() {
            return Err(Error::EmptySampleRange(format!(
                "no admissible sample time in [{}, {}]",
                cfg.times.t_min, cfg.times.t_max
            )));
        }

        let profiles: Vec<Vec<f64>> = cfg.pairs.iter().map(|&(x, _)| g.volume_profile(x)).collect::<Result<_>>()?;
        let distances: Vec<usize> = cfg.pairs.iter().map(|&(x, y)| g.distance(x, y)).collect::<Result<_>>()?;
        let volume = |k: usize, r: f64| -> f64 {
            let p = &profiles[k];
            let idx = if r.is_finite() && r >= 0.0 { (r.floor() as usize).min(p.len() - 1) } else { p.len() - 1 };
            p[idx]
        };

        let mut samples = Vec::with_capacity(times.len() * cfg.pairs.len());
        for &t in &times {
            for (k, &(x, y)) in cfg.pairs.iter().enumerate() {
                let kt = cfg.bound.kernel_time(t);
                let p = self.kernel_value_unchecked(kt, x, y);
                // For the upper bound the stored rhs is 1/V(x, √t), scaled by C1 below.
                let rhs = match cfg.bound {
                    BoundSpec::Upper { .. } => 1.0 / volume(k, t.sqrt()),
                    BoundSpec::GaussianLower { c2, c3, n } => {
                        let d = distances[k] as f64;
                        c2 * t.powf(-n) * (-c3 * d * d / (t - 1.0)).exp()
                    }
                    BoundSpec::OnDiagLower { c } => c / volume(k, t),
                    BoundSpec::VolumeLower { c0_big, .. } => 1.0 / (4.0 * volume(k, c0_big * t * t.ln())),
                };
                samples.push(BoundSample { t, x, y, p, bound_rhs: rhs });
            }
        }

        let mut fitted_c1 = None;
        let (verdict, worst) = match cfg.bound {
            BoundSpec::Upper { c1 } => {
                let (fit, at) = samples
                    .iter()
                    .map(|s| (s.p / s.bound_rhs, (s.t, s.x, s.y)))
                    .max_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("nonempty samples");
                fitted_c1 = Some(fit);
                let c = c1.unwrap_or(fit);
                for s in samples.iter_mut() {
                    s.bound_rhs *= c;
                }
                (fit <= c, (fit / c, at.0, at.1, at.2))
            }
            _ => {
                let (ratio, at) = samples
                    .iter()
                    .map(|s| (s.p / s.bound_rhs, s))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("nonempty samples");
                (ratio >= 1.0, (ratio, at.t, at.x, at.y))
            }
        };

        let volume_hypothesis_holds = match cfg.bound {
            BoundSpec::VolumeLower { volume_hypothesis: Some(h), .. } => Some(cfg.pairs.iter().enumerate().all(|(k, _)| {
                let p = &profiles[k];
                (h.r0.ceil() as usize..p.len()).all(|r| r == 0 || p[r] <= h.c0 * (r as f64).powf(h.m))
            })),
            _ => None,
        };

        Ok(BoundCheckReport {
            bound_id: cfg.bound.id(),
            constants: cfg.bound,
            fitted_c1,
            t_min: times[0],
            t_max: *times.last().unwrap(),
            clipped,
            sample_count: samples.len(),
            verdict: if verdict { BoundVerdict::Holds } else { BoundVerdict::Fails },
            worst_ratio: worst.0,
            worst_at: (worst.1, worst.2, worst.3),
            volume_hypothesis_holds,
            samples: if cfg.keep_samples { samples } else { Vec::new() },
        })
    }
}

/// P_t f by uniformization, split into chunks with D_μ·Δt ≤ 1.
///
/// Terms are summed until each one is below 1e-17 of the running entry and
/// every entry has been reached (or the term count exceeds |V| + 200).
pub fn uniformized_semigroup(g: &Graph, t: f64, f: &[f64]) -> Vec<f64> {
    let n = g.vertex_count();
    let c = g.structural_constants().d_mu;
    if t == 0.0 {
        return f.to_vec();
    }
    let chunks = (c * t).ceil().max(1.0) as usize;
    let tau = c * t / chunks as f64;
    let max_terms = n + 200;
    let mut cur = f.to_vec();
    let mut term = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for _ in 0..chunks {
        term.copy_from_slice(&cur);
        acc.copy_from_slice(&cur);
        for k in 1..=max_terms {
            laplacian_into(g, &term, &mut next);
            let s = tau / k as f64;
            for x in 0..n {
                term[x] = s * (term[x] + next[x] / c);
            }
            let mut done = true;
            for x in 0..n {
                acc[x] += term[x];
                if term[x].abs() > 1e-17 * acc[x].abs() || (acc[x] == 0.0 && k < n) {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        let damp = (-tau).exp();
        for x in 0..n {
            cur[x] = damp * acc[x];
        }
    }
    cur
}

const HEAT_FD_STEP: f64 = 1e-5;

/// A e^{2 D_μ t} (2 D_μ t)^N / N! with A = max |f|, evaluated in log space.
pub fn series_truncation_bound(g: &Graph, t: f64, f: &[f64], order: usize) -> f64 {
    let a = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if a == 0.0 {
        return 0.0;
    }
    let z = 2.0 * g.structural_constants().d_mu * t;
    let log_fact: f64 = (1..=order).map(|k| (k as f64).ln()).sum();
    (a.ln() + z + order as f64 * z.ln() - log_fact).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAxiomReport {
    pub symmetry_error: f64,
    pub min_kernel_value: f64,
    /// max_x |Σ_y μ(y) p(t,x,y) − 1|.
    pub conservation_defect: f64,
    pub semigroup_error: f64,
    /// max |∂_t p − Δ_x p| over pairs, divided by max |Δ_x p| at that time.
    pub heat_equation_residual: f64,
    pub heat_equation_residual_abs: f64,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeHypothesis {
    /// V(x, r) ≤ c0 r^m for r ≥ r0.
    pub c0: f64,
    pub m: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case")]
pub enum BoundSpec {
    /// p(t,x,y) ≤ C₁ / V(x, √t). Without `c1` the minimal constant is fitted.
    #[serde(rename = "upper")]
    Upper { c1: Option<f64> },
    /// p(t,x,y) ≥ C₂ t^{-n} exp(−C₃ d²(x,y)/(t−1)) for t > 1.
    #[serde(rename = "gaussian_lower")]
    GaussianLower { c2: f64, c3: f64, n: f64 },
    /// p(2t², x, x) ≥ C / V(x, t) for t > ½.
    #[serde(rename = "on_diagonal_lower")]
    OnDiagLower { c: f64 },
    /// p(t,x,x) ≥ 1 / (4 V(x, C₀ t log t)), C₀ > 2 D_μ e.
    #[serde(rename = "volume_lower")]
    VolumeLower {
        c0_big: f64,
        volume_hypothesis: Option<VolumeHypothesis>,
    },
}

impl BoundSpec {
    pub fn id(&self) -> BoundId {
        match self {
            BoundSpec::Upper { .. } => BoundId::Upper,
            BoundSpec::GaussianLower { .. } => BoundId::GaussianLower,
            BoundSpec::OnDiagLower { .. } => BoundId::OnDiagLower,
            BoundSpec::VolumeLower { .. } => BoundId::VolumeLower,
        }
    }

    fn admits(&self, t: f64) -> bool {
        match self {
            BoundSpec::Upper { .. } => t > 0.0,
            BoundSpec::GaussianLower { .. } => t > 1.0,
            BoundSpec::OnDiagLower { .. } => t > 0.5,
            BoundSpec::VolumeLower { .. } => t > 1.0,
        }
    }

    /// Time at which the kernel is evaluated for sample parameter `t`.
    fn kernel_time(&self, t: f64) -> f64 {
        match self {
            BoundSpec::OnDiagLower { .. } => 2.0 * t * t,
            _ => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    #[serde(rename = "upper")]
    Upper,
    #[serde(rename = "gaussian_lower")]
    GaussianLower,
    #[serde(rename = "on_diagonal_lower")]
    OnDiagLower,
    #[serde(rename = "volume_lower")]
    VolumeLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSampling {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
    #[serde(default)]
    pub log_spacing: bool,
}

impl TimeSampling {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.t_min > 0.0 && self.t_max >= self.t_min && self.t_max.is_finite()) || self.count == 0 {
            return Err(Error::EmptySampleRange(format!(
                "time range [{}, {}] with {} points",
                self.t_min, self.t_max, self.count
            )));
        }
        if self.count == 1 {
            return Ok(vec![self.t_min]);
        }
        let k = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                let s = i as f64 / k;
                if self.log_spacing {
                    (self.t_min.ln() + s * (self.t_max.ln() - self.t_min.ln())).exp()
                } else {
                    self.t_min + s * (self.t_max - self.t_min)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCheckConfig {
    pub bound: BoundSpec,
    pub times: TimeSampling,
    pub pairs: Vec<(usize, usize)>,
    /// Largest kernel time admitted; larger samples are dropped and flagged.
    pub time_guard: Option<f64>,
    #[serde(default)]
    pub keep_samples: bool,
}

/// Kernel-time guard (min L / 6)² keeping a torus faithful to ℤ^m.
pub fn torus_time_guard(dims: &[usize]) -> f64 {
    let l = dims.iter().copied().min().unwrap_or(0) as f64;
    (l / 6.0).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVerdict {
    Holds,
    Fails,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub t: f64,
    pub x: usize,
    pub y: usize,
    pub p: f64,
    pub bound_rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub bound_id: BoundId,
    pub constants: BoundSpec,
    pub fitted_c1: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub clipped: bool,
    pub sample_count: usize,
    pub verdict: BoundVerdict,
    /// p / rhs at the worst sample: the maximum for the upper bound (holds
    /// iff ≤ 1), the minimum for lower bounds (holds iff ≥ 1).
    pub worst_ratio: f64,
    pub worst_at: (f64, usize, usize),
    pub volume_hypothesis_holds: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub samples: Vec<BoundSample>,
}

impl BoundCheckReport {
    /// Sample points as CSV with header `t,x,y,p,bound_rhs`.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("t,x,y,p,bound_rhs\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{},{}\n", s.t, s.x, s.y, s.p, s.bound_rhs));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_cycle, MeasureMode};

    fn k2() -> HeatKernelOperator {
        spectral_decompose(&Graph::new(vec![1.0, 1.0], &[(0, 1, 1.0)], None).unwrap()).unwrap()
    }

    #[test]
    fn k2_spectrum_and_closed_form() {
        let hk = k2();
        assert!((hk.eigenvalues()[0]).abs() < 1e-15);
        assert!((hk.eigenvalues()[1] + 2.0).abs() < 1e-14);
        let t = 1.0;
        let same = (1.0 + (-2.0f64 * t).exp()) / 2.0;
        let other = (1.0 - (-2.0f64 * t).exp()) / 2.0;
        assert!((hk.kernel_value(t, 0, 0).unwrap() - same).abs() < 1e-14);
        assert!((hk.kernel_value(t, 0, 1).unwrap() - other).abs() < 1e-14);
        assert!((same - 0.567_667_641_618_306_3).abs() < 1e-15);
    }

    #[test]
    fn c6_spectrum_matches_circulant_oracle() {
        let hk = spectral_decompose(&build_cycle(6, 1.0, MeasureMode::Normalized).unwrap()).unwrap();
        let mut oracle: Vec<f64> = (0..6)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / 6.0).cos() - 1.0)
            .collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (l, o) in hk.eigenvalues().iter().zip(&oracle) {
            assert!((l - o).abs() < 1e-12, "{l} vs {o}");
        }
        assert!(hk.orthonormality_error() < 1e-10);
    }

    #[test]
    fn size_cap_enforced() {
        let g = build_cycle(10, 1.0, MeasureMode::Unit).unwrap();
        assert!(matches!(spectral_decompose_capped(&g, 8), Err(Error::SizeOverCap { .. })));
    }

    #[test]
    fn nonpositive_time_rejected() {
        assert!(k2().kernel_value(0.0, 0, 1).is_err());
        assert!(k2().apply_semigroup(-1.0, &Field::zeros(2), SemigroupMethod::Spectral).is_err());
    }

    #[test]
    fn semigroup_methods_agree_on_k2() {
        let hk = k2();
        let f = Field::new(vec![1.0, 0.0]).unwrap();
        let spectral = hk.apply_semigroup(1.0, &f, SemigroupMethod::Spectral).unwrap();
        assert!((spectral[0] - 0.567_667_641_618_306_3).abs() < 1e-14);
        assert!((spectral[1] - 0.432_332_358_381_693_7).abs() < 1e-14);
        let series = hk
            .apply_semigroup(1.0, &f, SemigroupMethod::Series { order: 40, tolerance: 1e-10 })
            .unwrap();
        assert!((series[0] - spectral[0]).abs() < 1e-10);
        assert!((series[1] - spectral[1]).abs() < 1e-10);
    }

    #[test]
    fn constants_are_conserved() {
        let hk = spectral_decompose(&build_cycle(7, 1.3, MeasureMode::Unit).unwrap()).unwrap();
        for t in [0.01, 1.0, 50.0] {
            let out = hk.apply_semigroup(t, &Field::constant(7, 2.5), SemigroupMethod::Spectral).unwrap();
            assert!(out.iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
    }

    #[test]
    fn short_series_reports_truncation_bound() {
        let hk = k2();
        let f = Field::new(vec![1.0, 0.0]).unwrap();
        match hk.apply_semigroup(1.0, &f, SemigroupMethod::Series { order: 3, tolerance: 1e-10 }) {
            Err(Error::TruncationInsufficient { bound, .. }) => {
                // e² · 2³ / 3!
                let expected = std::f64::consts::E.powi(2) * 8.0 / 6.0;
                assert!((bound - expected).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn k2_axioms() {
        let r = k2().verify_kernel_axioms(&[0.5, 1.0]).unwrap();
        assert!(r.symmetry_error <= 1e-9);
        assert!(r.min_kernel_value > 0.0);
        assert!(r.conservation_defect <= 1e-9);
        assert!(r.semigroup_error <= 1e-9);
        assert!(r.heat_equation_residual <= 1e-7);
    }

    #[test]
    fn volume_lower_rejects_small_c0() {
        let g = build_cycle(16, 1.0, MeasureMode::Normalized).unwrap();
        let hk = spectral_decompose(&g).unwrap();
        let cfg = BoundCheckConfig {
            bound: BoundSpec::VolumeLower { c0_big: 1.0, volume_hypothesis: None },
            times: TimeSampling { t_min: 3.0, t_max: 10.0, count: 5, log_spacing: false },
            pairs: vec![(0, 0)],
            time_guard: None,
            keep_samples: false,
        };
        assert!(matches!(hk.verify_bounds(&[cfg]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn guard_clips_and_flags() {
        let g = build_cycle(24, 1.0, MeasureMode::Normalized).unwrap();
        let hk = spectral_decompose(&g).unwrap();
        let cfg = BoundCheckConfig {
            bound: BoundSpec::Upper { c1: None },
            times: TimeSampling { t_min: 1.0, t_max: 100.0, count: 20, log_spacing: true },
            pairs: vec![(0, 0), (0, 3)],
            time_guard: Some(torus_time_guard(&[24])),
            keep_samples: true,
        };
        let r = &hk.verify_bounds(&[cfg]).unwrap()[0];
        assert!(r.clipped);
        assert!(r.t_max <= 16.0);
        assert_eq!(r.verdict, BoundVerdict::Holds);
        assert!((r.worst_ratio - 1.0).abs() < 1e-12);
        assert!(r.samples_csv().starts_with("t,x,y,p,bound_rhs\n"));
        assert_eq!(r.samples_csv().lines().count(), r.sample_count + 1);
    }

    #[test]
    fn uniformized_matches_spectral_and_resolves_tails() {
        let g = build_cycle(7, 1.0, MeasureMode::Normalized).unwrap();
        let hk = spectral_decompose(&g).unwrap();
        let f = Field::new(vec![0.5, 1.0, 0.0, 2.0, 0.0, 0.1, 3.0]).unwrap();
        for t in [0.01, 0.7, 3.0, 25.0] {
            let a = hk.apply_semigroup(t, &f, SemigroupMethod::Spectral).unwrap();
            let b = hk.apply_semigroup(t, &f, SemigroupMethod::Uniformized).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-13, "t={t}: {x} vs {y}");
            }
        }
        // Far tail of p(1, 0, ·) on C_64: e^{-1} (I_d(1) + I_{64-d}(1)) / 2, far below round-off.
        let g = build_cycle(64, 1.0, MeasureMode::Normalized).unwrap();
        let mut delta = vec![0.0; 64];
        delta[0] = 0.5;
        let p = uniformized_semigroup(&g, 1.0, &delta);
        let bessel = |d: i32, t: f64| {
            (0..60).map(|k| {
                let lg: f64 = (1..=k).map(|j| (j as f64).ln()).sum::<f64>()
                    + (1..=(k + d)).map(|j| (j as f64).ln()).sum::<f64>();
                ((2 * k + d) as f64 * (t / 2.0).ln() - lg).exp()
            }).sum::<f64>()
        };
        for d in [0, 5, 20, 32] {
            let exact = (-1.0f64).exp() * (bessel(d, 1.0) + bessel(64 - d, 1.0)) / 2.0;
            assert!(((p[d as usize] - exact) / exact).abs() < 1e-12, "d={d}: {} vs {exact}", p[d as usize]);
        }
    }
}
