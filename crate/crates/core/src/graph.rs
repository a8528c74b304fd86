//! Finite weighted graphs with a vertex measure.
//!
//! A [`Graph`] carries symmetric positive edge weights ω and a positive
//! vertex measure μ. Construction validates the standing assumptions used by
//! every other module: symmetry, no loops, μ > 0, no isolated vertex and a
//! single connected component. Vertices are dense indices `0..n`.

use std::collections::VecDeque;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the vertex measure of a built graph is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    /// μ ≡ 1, the combinatorial Laplacian.
    Unit,
    /// μ(x) = m(x) = Σ_y ω_xy, the normalized Laplacian.
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    measure: Vec<f64>,
    // Neighbour lists sorted by index; every entry has positive weight.
    adjacency: Vec<Vec<(usize, f64)>>,
    labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    /// μ_max / ω_min.
    pub d_omega: f64,
    /// max_x m(x)/μ(x).
    pub d_mu: f64,
    pub omega_min: f64,
    pub mu_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrowthFit {
    pub exponent_m: f64,
    pub prefactor_c: f64,
    /// Root-mean-square misfit of the log-log regression.
    pub residual: f64,
    /// Radii actually used after dropping saturated balls.
    pub radius_range: (usize, usize),
    /// True when the requested range had to be shortened.
    pub clipped: bool,
}

impl Graph {
    /// Builds and validates a graph from a measure and an undirected edge list.
    ///
    /// Each edge may be listed once in either orientation; listing both
    /// orientations is allowed only when the weights agree. Zero weights are
    /// treated as absent edges.
    pub fn new(measure: Vec<f64>, edges: &[(usize, usize, f64)], labels: Option<Vec<String>>) -> Result<Self> {
        let n = measure.len();
        if n == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: l.len() });
            }
        }
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidEdge {
                    i,
                    j,
                    reason: format!("endpoint outside 0..{n}"),
                });
            }
            if i == j {
                return Err(Error::InvalidEdge { i, j, reason: "loops are not allowed".into() });
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidEdge { i, j, reason: format!("weight {w} is not a finite nonnegative number") });
            }
            if w == 0.0 {
                continue;
            }
            let (a, b) = (i.min(j), i.max(j));
            match adjacency[a].iter().find(|(y, _)| *y == b) {
                Some(&(_, existing)) if existing == w => continue,
                Some(&(_, existing)) => {
                    return Err(Error::AsymmetricWeights { i: a, j: b, forward: existing, backward: w });
                }
                None => {
                    adjacency[a].push((b, w));
                    adjacency[b].push((a, w));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(y, _)| y);
        }
        for (x, &m) in measure.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::NonPositiveMeasure { vertex: x, value: m });
            }
        }
        if let Some(x) = adjacency.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedVertex(x));
        }
        let graph = Graph { measure, adjacency, labels };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    /// Same as [`Graph::new`] but with μ derived from `mode`.
    pub fn with_measure_mode(n: usize, edges: &[(usize, usize, f64)], mode: MeasureMode) -> Result<Self> {
        let measure = match mode {
            MeasureMode::Unit => vec![1.0; n],
            MeasureMode::Normalized => {
                let mut m = vec![0.0; n];
                for &(i, j, w) in edges {
                    if i < n && j < n && i != j {
                        m[i] += w;
                        m[j] += w;
                    }
                }
                m
            }
        };
        Graph::new(measure, edges, None)
    }

    pub fn vertex_count(&self) -> usize {
        self.measure.len()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn mu(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Option<Vec<String>>) -> Result<()> {
        if let Some(l) = &labels {
            if l.len() != self.vertex_count() {
                return Err(Error::LengthMismatch { expected: self.vertex_count(), got: l.len() });
            }
        }
        self.labels = labels;
        Ok(())
    }

    /// Neighbours of `x` with their edge weights, sorted by index.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// Edge weight ω_xy, zero for non-edges.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.adjacency[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .map(|k| self.adjacency[x][k].1)
            .unwrap_or(0.0)
    }

    /// Weighted degree m(x) = Σ_y ω_xy.
    pub fn weighted_degree(&self, x: usize) -> f64 {
        self.adjacency[x].iter().map(|&(_, w)| w).sum()
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    /// Edges as `(i, j, ω)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, list) in self.adjacency.iter().enumerate() {
            for &(j, w) in list {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::UnknownVertex { vertex: x, vertex_count: self.vertex_count() })
        }
    }

    fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &(y, _) in &self.adjacency[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        count
    }

    /// Hop distances from `x` to every vertex.
    pub fn distances_from(&self, x: usize) -> Result<Vec<usize>> {
        self.check_vertex(x)?;
        let mut dist = vec![usize::MAX; self.vertex_count()];
        dist[x] = 0;
        let mut queue = VecDeque::from([x]);
        while let Some(v) = queue.pop_front() {
            for &(y, _) in &self.adjacency[v] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[v] + 1;
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    pub fn distance(&self, x: usize, y: usize) -> Result<usize> {
        self.check_vertex(y)?;
        Ok(self.distances_from(x)?[y])
    }

    /// Vertices of the closed ball B(x, r), in index order.
    pub fn ball(&self, x: usize, r: usize) -> Result<Vec<usize>> {
        let dist = self.distances_from(x)?;
        Ok((0..self.vertex_count()).filter(|&y| dist[y] <= r).collect())
    }

    /// V(x, r) = Σ_{d(x,y) ≤ r} μ(y).
    pub fn ball_volume(&self, x: usize, r: usize) -> Result<f64> {
        let dist = self.distances_from(x)?;
        Ok(dist
            .iter()
            .zip(&self.measure)
            .filter(|(d, _)| **d <= r)
            .map(|(_, m)| m)
            .sum())
    }

    /// Cumulative ball volumes `V(x, r)` for `r = 0..=eccentricity(x)`.
    pub fn volume_profile(&self, x: usize) -> Result<Vec<f64>> {
        let dist = self.distances_from(x)?;
        let ecc = dist.iter().copied().max().unwrap_or(0);
        let mut shell = vec![0.0; ecc + 1];
        for (d, m) in dist.iter().zip(&self.measure) {
            shell[*d] += m;
        }
        let mut acc = 0.0;
        Ok(shell
            .into_iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect())
    }

    pub fn diameter(&self) -> usize {
        (0..self.vertex_count())
            .map(|x| self.distances_from(x).map(|d| d.into_iter().max().unwrap_or(0)).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn structural_constants(&self) -> StructuralConstants {
        let omega_min = self
            .adjacency
            .iter()
            .flat_map(|l| l.iter().map(|&(_, w)| w))
            .fold(f64::INFINITY, f64::min);
        let mu_max = self.measure.iter().copied().fold(0.0, f64::max);
        let d_mu = (0..self.vertex_count())
            .map(|x| self.weighted_degree(x) / self.measure[x])
            .fold(0.0, f64::max);
        StructuralConstants { d_omega: mu_max / omega_min, d_mu, omega_min, mu_max }
    }
}

pub fn build_cycle(n: usize, weight: f64, mode: MeasureMode) -> Result<Graph> {
    if n < 3 {
        return Err(Error::invalid(format!("cycle length {n} < 3")));
    }
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::invalid(format!("cycle weight {weight} must be positive")));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, weight)).collect();
    Graph::with_measure_mode(n, &edges, mode)
}

/// Discrete torus ℤ_{L_1} × … × ℤ_{L_m} with unit weights.
///
/// Vertex index is row-major with the last dimension fastest.
pub fn build_lattice_torus(dims: &[usize], mode: MeasureMode) -> Result<Graph> {
    if dims.is_empty() {
        return Err(Error::invalid("torus needs at least one dimension"));
    }
    if let Some(&l) = dims.iter().find(|&&l| l < 3) {
        return Err(Error::invalid(format!("torus side length {l} < 3")));
    }
    let n: usize = dims.iter().product();
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len() - 1).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut edges = Vec::with_capacity(n * dims.len());
    for v in 0..n {
        for (k, &len) in dims.iter().enumerate() {
            let coord = (v / strides[k]) % len;
            let next = v - coord * strides[k] + ((coord + 1) % len) * strides[k];
            edges.push((v, next, 1.0));
        }
    }
    Graph::with_measure_mode(n, &edges, mode)
}

/// On-disk graph description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: usize,
    pub mu: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl From<&Graph> for GraphFile {
    fn from(g: &Graph) -> Self {
        GraphFile {
            vertices: g.vertex_count(),
            mu: g.measure.clone(),
            edges: g.edges(),
            labels: g.labels.clone(),
        }
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Graph> {
        if file.mu.len() != file.vertices {
            return Err(Error::Parse(format!(
                "\"mu\" has {} entries but \"vertices\" is {}",
                file.mu.len(),
                file.vertices
            )));
        }
        if let Some(l) = &file.labels {
            if l.len() != file.vertices {
                return Err(Error::Parse(format!(
                    "\"labels\" has {} entries but \"vertices\" is {}",
                    l.len(),
                    file.vertices
                )));
            }
        }
        Graph::new(file.mu, &file.edges, file.labels)
    }
}

pub fn graph_from_json(text: &str) -> Result<Graph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Graph::try_from(file)
}

pub fn graph_to_json(g: &Graph) -> String {
    serde_json::to_string_pretty(&GraphFile::from(g)).expect("graph file serialization is infallible")
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let text = std::fs::read_to_string(path)?;
    graph_from_json(&text)
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut text = graph_to_json(g);
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Least-squares estimate of the volume-growth exponent m in V(x,r) ≈ c·r^m.
///
/// Balls are compared against the half-cell radius r + ½, which is the
/// radius of the continuum region that the lattice ball B(x, r) tiles
/// (V = 2(2r+1) on a normalized cycle is exactly 4(r+½)). Log-volumes are
/// averaged over `centers` before the regression. Radii at which any sampled
/// ball covers the whole graph are dropped.
pub fn fit_volume_growth(g: &Graph, centers: &[usize], radii: RangeInclusive<usize>) -> Result<VolumeGrowthFit> {
    let (r_lo, r_hi) = (*radii.start(), *radii.end());
    if centers.is_empty() {
        return Err(Error::invalid("volume fit needs at least one center"));
    }
    if r_lo < 1 || r_hi < r_lo + 1 {
        return Err(Error::invalid(format!("volume fit radius range {r_lo}..={r_hi} needs 1 <= r_min < r_max")));
    }
    let total = g.total_measure();
    let profiles = centers.iter().map(|&x| g.volume_profile(x)).collect::<Result<Vec<_>>>()?;
    let saturated = |r: usize| profiles.iter().any(|p| r + 1 >= p.len() || p[r] >= total);
    let used: Vec<usize> = radii.filter(|&r| !saturated(r)).collect();
    if used.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "fewer than two unsaturated radii in {r_lo}..={r_hi}"
        )));
    }
    let xs: Vec<f64> = used.iter().map(|&r| (r as f64 + 0.5).ln()).collect();
    let ys: Vec<f64> = used
        .iter()
        .map(|&r| profiles.iter().map(|p| p[r].ln()).sum::<f64>() / profiles.len() as f64)
        .collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    if !slope.is_finite() {
        return Err(Error::DegenerateFit("non-finite slope".into()));
    }
    let first = used[0];
    let last = *used.last().unwrap();
    Ok(VolumeGrowthFit {
        exponent_m: slope,
        prefactor_c: intercept.exp(),
        residual,
        radius_range: (first, last),
        clipped: first != r_lo || last != r_hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2() -> Graph {
        Graph::new(vec![1.0, 1.0], &[(0, 1, 1.0)], None).unwrap()
    }

    #[test]
    fn cycle_normalized_measure_equals_degree() {
        let g = build_cycle(6, 1.0, MeasureMode::Normalized).unwrap();
        for x in 0..6 {
            assert_eq!(g.mu(x), 2.0);
            assert_eq!(g.weighted_degree(x), 2.0);
        }
    }

    #[test]
    fn triangle_unit() {
        let g = build_cycle(3, 1.0, MeasureMode::Unit).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert!((0..3).all(|x| g.mu(x) == 1.0 && g.weighted_degree(x) == 2.0));
    }

    #[test]
    fn short_cycle_rejected() {
        assert!(matches!(build_cycle(2, 1.0, MeasureMode::Unit), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn torus_shapes() {
        let t1 = build_lattice_torus(&[64], MeasureMode::Normalized).unwrap();
        assert_eq!(t1, build_cycle(64, 1.0, MeasureMode::Normalized).unwrap());
        let t2 = build_lattice_torus(&[8, 8], MeasureMode::Normalized).unwrap();
        assert_eq!(t2.vertex_count(), 64);
        assert!((0..64).all(|x| t2.mu(x) == 4.0 && t2.degree(x) == 4));
        assert!(matches!(build_lattice_torus(&[8, 2], MeasureMode::Unit), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn cycle_distances() {
        let g = build_cycle(6, 1.0, MeasureMode::Normalized).unwrap();
        assert_eq!(g.distance(0, 3).unwrap(), 3);
        assert_eq!(g.distance(0, 5).unwrap(), 1);
        assert_eq!(g.distance(4, 4).unwrap(), 0);
        assert!(matches!(g.distance(0, 6), Err(Error::UnknownVertex { .. })));
    }

    #[test]
    fn cycle_ball_volumes() {
        let g = build_cycle(6, 1.0, MeasureMode::Normalized).unwrap();
        assert_eq!(g.ball_volume(0, 0).unwrap(), 2.0);
        assert_eq!(g.ball_volume(0, 1).unwrap(), 6.0);
        assert_eq!(g.ball_volume(0, 3).unwrap(), 12.0);
        assert_eq!(g.ball_volume(0, 7).unwrap(), 12.0);
        assert_eq!(g.volume_profile(2).unwrap(), vec![2.0, 6.0, 10.0, 12.0]);
    }

    #[test]
    fn structural_constants_examples() {
        let c6 = build_cycle(6, 1.0, MeasureMode::Normalized).unwrap().structural_constants();
        assert_eq!(c6.d_mu, 1.0);
        assert_eq!(c6.d_omega, 2.0);
        let c = k2().structural_constants();
        assert_eq!((c.d_mu, c.d_omega), (1.0, 1.0));
    }

    #[test]
    fn validation_errors_are_distinct() {
        assert!(matches!(
            Graph::new(vec![1.0, 1.0], &[(0, 1, 1.0), (1, 0, 2.0)], None),
            Err(Error::AsymmetricWeights { .. })
        ));
        assert!(matches!(
            Graph::new(vec![1.0, 0.0], &[(0, 1, 1.0)], None),
            Err(Error::NonPositiveMeasure { vertex: 1, .. })
        ));
        assert!(matches!(
            Graph::new(vec![1.0; 4], &[(0, 1, 1.0), (2, 3, 1.0)], None),
            Err(Error::Disconnected { components: 2 })
        ));
        assert!(matches!(Graph::new(vec![1.0; 3], &[(0, 1, 1.0)], None), Err(Error::IsolatedVertex(2))));
        assert!(matches!(Graph::new(vec![1.0; 2], &[(0, 0, 1.0)], None), Err(Error::InvalidEdge { .. })));
        // Same weight listed in both orientations is fine.
        assert!(Graph::new(vec![1.0, 1.0], &[(0, 1, 1.5), (1, 0, 1.5)], None).is_ok());
    }

    #[test]
    fn json_round_trip_with_labels() {
        let mut g = build_cycle(6, 1.0, MeasureMode::Normalized).unwrap();
        g.set_labels(Some((1..=6).map(|i| format!("x_{i}")).collect())).unwrap();
        let back = graph_from_json(&graph_to_json(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_rejects_unknown_keys_and_bad_lengths() {
        let bad = r#"{"vertices": 2, "mu": [1, 1], "edges": [[0, 1, 1]], "colour": 3}"#;
        assert!(matches!(graph_from_json(bad), Err(Error::Parse(_))));
        let short = r#"{"vertices": 3, "mu": [1, 1], "edges": [[0, 1, 1]]}"#;
        assert!(matches!(graph_from_json(short), Err(Error::Parse(_))));
    }

    #[test]
    fn volume_fit_on_small_cycle_is_degenerate() {
        let g = build_cycle(6, 1.0, MeasureMode::Normalized).unwrap();
        assert!(matches!(fit_volume_growth(&g, &[0], 3..=5), Err(Error::DegenerateFit(_))));
        // r = 1, 2 remain unsaturated and give V = 4(r + 1/2) exactly.
        let fit = fit_volume_growth(&g, &[0, 3], 1..=5).unwrap();
        assert!((fit.exponent_m - 1.0).abs() < 1e-12);
        assert!(fit.clipped);
        assert_eq!(fit.radius_range, (1, 2));
    }
}
