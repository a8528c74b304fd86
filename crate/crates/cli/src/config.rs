//! TOML run configuration. One file drives exactly one command.

use std::path::{Path, PathBuf};

use fujita_graph::error::Error as CoreError;
use fujita_graph::graph::{build_cycle, build_lattice_torus, load_graph, Graph, MeasureMode};
use fujita_graph::heat_kernel::{BoundCheckConfig, DEFAULT_SIZE_CAP};
use fujita_graph::operators::CurvatureCondition;
use fujita_graph::picard::Quadrature;
use fujita_graph::semilinear::{DecayCriterion, InitialProfile, IntegrationControl};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Graph,
    Kernel,
    Curvature,
    Simulate,
    Sweep,
    Picard,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Graph => "graph",
            Command::Kernel => "kernel",
            Command::Curvature => "curvature",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Picard => "picard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    Cycle,
    Torus,
}

/// Either a builder with its parameters or a graph file, never both.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub builder: Option<Builder>,
    pub file: Option<PathBuf>,
    /// Cycle length.
    pub n: Option<usize>,
    /// Torus side lengths.
    pub dims: Option<Vec<usize>>,
    /// Cycle edge weight (default 1).
    pub weight: Option<f64>,
    /// Measure for builders (default normalized).
    pub measure: Option<MeasureMode>,
}

impl GraphSpec {
    fn check(&self, what: &str) -> Result<()> {
        match (&self.builder, &self.file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(format!("{what}: ambiguous graph source (both builder and file given)")))
            }
            (None, None) => return Err(CliError::Config(format!("{what}: needs either builder or file"))),
            _ => {}
        }
        let stray = |field: &str| CliError::Config(format!("{what}: `{field}` does not apply to this graph source"));
        match self.builder {
            Some(Builder::Cycle) => {
                if self.n.is_none() {
                    return Err(CliError::Config(format!("{what}: cycle builder needs `n`")));
                }
                if self.dims.is_some() {
                    return Err(stray("dims"));
                }
            }
            Some(Builder::Torus) => {
                if self.dims.is_none() {
                    return Err(CliError::Config(format!("{what}: torus builder needs `dims`")));
                }
                if self.n.is_some() {
                    return Err(stray("n"));
                }
                if self.weight.is_some() {
                    return Err(stray("weight"));
                }
            }
            None => {
                for (field, set) in [
                    ("n", self.n.is_some()),
                    ("dims", self.dims.is_some()),
                    ("weight", self.weight.is_some()),
                    ("measure", self.measure.is_some()),
                ] {
                    if set {
                        return Err(stray(field));
                    }
                }
            }
        }
        Ok(())
    }

    /// Relative file paths are resolved against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Graph> {
        self.check("graph")?;
        let mode = self.measure.unwrap_or(MeasureMode::Normalized);
        let g = match (self.builder, &self.file) {
            (Some(Builder::Cycle), _) => build_cycle(self.n.unwrap_or(0), self.weight.unwrap_or(1.0), mode)?,
            (Some(Builder::Torus), _) => build_lattice_torus(self.dims.as_deref().unwrap_or(&[]), mode)?,
            (None, Some(path)) => load_graph(base_dir.join(path))?,
            (None, None) => unreachable!("checked above"),
        };
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphReportParams {
    /// Inclusive radius range for the volume-growth fit around `centers`.
    pub fit_radii: Option<(usize, usize)>,
    pub centers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    /// Times at which the kernel axioms are checked.
    pub times: Vec<f64>,
    pub size_cap: usize,
    pub bounds: Vec<BoundCheckConfig>,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams { times: vec![0.1, 0.5, 1.0, 5.0], size_cap: DEFAULT_SIZE_CAP, bounds: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureParams {
    pub condition: CurvatureCondition,
    pub n: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_log_box")]
    pub log_box: f64,
    #[serde(default = "default_curvature_tol")]
    pub tolerance: f64,
}

fn default_budget() -> usize {
    10_000
}
fn default_log_box() -> f64 {
    3.0
}
fn default_curvature_tol() -> f64 {
    1e-9
}
fn default_scale() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub alpha: f64,
    pub initial: InitialProfile,
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub base_vertex: Option<usize>,
    #[serde(default)]
    pub control: IntegrationControl,
    #[serde(default)]
    pub decay: DecayCriterion,
    #[serde(default = "default_true")]
    pub plot: bool,
    /// Clip the plot's y axis here (useful for blow-up runs).
    pub plot_y_max: Option<f64>,
    /// Also write the J₀ inequality residuals along the trajectory.
    #[serde(default)]
    pub j0_comparison: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedGraph {
    pub name: String,
    pub graph: GraphSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    /// Defaults to the top-level graph when empty.
    #[serde(default)]
    pub graphs: Vec<NamedGraph>,
    pub alphas: Vec<f64>,
    pub scales: Vec<f64>,
    #[serde(default = "default_profile")]
    pub profile: InitialProfile,
    #[serde(default)]
    pub control: IntegrationControl,
    #[serde(default)]
    pub decay: DecayCriterion,
    #[serde(default = "default_fit_radii")]
    pub fit_radii: (usize, usize),
    #[serde(default = "default_true")]
    pub plot: bool,
}

fn default_profile() -> InitialProfile {
    InitialProfile::Ramp
}
fn default_fit_radii() -> (usize, usize) {
    (1, 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    #[default]
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardParams {
    pub alpha: f64,
    #[serde(default = "default_scale")]
    pub gamma: f64,
    /// Small-data level; the data default to a = δ·p(γ, e, ·).
    pub delta: f64,
    /// Explicit initial data instead of the δ-scaled kernel profile.
    pub initial: Option<InitialProfile>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub base_vertex: usize,
    pub horizon: f64,
    pub intervals: usize,
    #[serde(default)]
    pub grid: GridKind,
    /// Step growth ratio for geometric grids.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_picard_tol")]
    pub tol: f64,
    /// Volume exponent m and C₁/c₁ for the closed-form constant.
    pub analytic_m: Option<f64>,
    pub analytic_ratio: Option<f64>,
    /// Compare against the ODE integrator on the grid nodes.
    #[serde(default = "default_true")]
    pub crosscheck: bool,
    /// Number of grid halvings for an order estimate (0 or ≥ 3).
    #[serde(default)]
    pub refinement_levels: usize,
    #[serde(default = "default_true")]
    pub plot: bool,
}

fn default_ratio() -> f64 {
    1.05
}
fn default_max_iter() -> usize {
    100
}
fn default_picard_tol() -> f64 {
    1e-13
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub graph: Option<GraphSpec>,
    pub report: Option<GraphReportParams>,
    pub kernel: Option<KernelParams>,
    pub curvature: Option<CurvatureParams>,
    pub simulate: Option<SimulateParams>,
    pub sweep: Option<SweepParams>,
    pub picard: Option<PicardParams>,
    /// Directory relative graph-file paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CoreError::InvalidParameter(format!("{name} = {v} must be positive")).into())
    }
}

impl RunConfig {
    /// Structural and precondition checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        let blocks = [
            (Command::Graph, "report", self.report.is_some()),
            (Command::Kernel, "kernel", self.kernel.is_some()),
            (Command::Curvature, "curvature", self.curvature.is_some()),
            (Command::Simulate, "simulate", self.simulate.is_some()),
            (Command::Sweep, "sweep", self.sweep.is_some()),
            (Command::Picard, "picard", self.picard.is_some()),
        ];
        for (cmd, block, present) in blocks {
            if present && cmd != self.command {
                return Err(CliError::Config(format!(
                    "[{block}] does not apply to command `{}`",
                    self.command.name()
                )));
            }
        }
        let needs_block = |present: bool| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!("command `{0}` needs a [{0}] block", self.command.name())))
            }
        };
        let sweep_graphs = self.sweep.as_ref().is_some_and(|s| !s.graphs.is_empty());
        match (&self.graph, self.command) {
            (Some(_), Command::Sweep) if sweep_graphs => {
                return Err(CliError::Config("give either [graph] or [[sweep.graphs]], not both".into()))
            }
            (Some(g), _) => g.check("[graph]")?,
            (None, Command::Sweep) if sweep_graphs => {}
            (None, _) => return Err(CliError::Config("missing [graph] section".into())),
        }

        match self.command {
            Command::Graph | Command::Kernel => {
                if let Some(k) = &self.kernel {
                    if k.times.is_empty() {
                        return Err(CoreError::InvalidParameter("kernel.times must not be empty".into()).into());
                    }
                    for &t in &k.times {
                        positive("kernel time", t)?;
                    }
                }
            }
            Command::Curvature => {
                let c = self.curvature.as_ref();
                needs_block(c.is_some())?;
                let c = c.unwrap();
                positive("curvature.n", c.n)?;
                if !c.k.is_finite() {
                    return Err(CoreError::InvalidParameter("curvature.K must be finite".into()).into());
                }
                if c.budget == 0 {
                    return Err(CoreError::InvalidParameter("curvature.budget must be positive".into()).into());
                }
                positive("curvature.log_box", c.log_box)?;
            }
            Command::Simulate => {
                let s = self.simulate.as_ref();
                needs_block(s.is_some())?;
                let s = s.unwrap();
                positive("simulate.alpha", s.alpha)?;
                if !(s.scale >= 0.0 && s.scale.is_finite()) {
                    return Err(CoreError::InvalidParameter("simulate.scale must be nonnegative".into()).into());
                }
                s.control.validate()?;
                positive("simulate.decay.factor", s.decay.factor)?;
            }
            Command::Sweep => {
                let s = self.sweep.as_ref();
                needs_block(s.is_some())?;
                let s = s.unwrap();
                if s.alphas.is_empty() || s.scales.is_empty() {
                    return Err(CoreError::InvalidParameter("sweep.alphas and sweep.scales must be nonempty".into()).into());
                }
                for &a in &s.alphas {
                    positive("sweep alpha", a)?;
                }
                for g in &s.graphs {
                    g.graph.check(&format!("sweep graph `{}`", g.name))?;
                    if g.name.contains(',') || g.name.contains('\n') {
                        return Err(CliError::Config(format!("sweep graph name `{}` must not contain commas", g.name)));
                    }
                }
                s.control.validate()?;
                if s.fit_radii.0 < 1 || s.fit_radii.0 >= s.fit_radii.1 {
                    return Err(CoreError::InvalidParameter("sweep.fit_radii must satisfy 1 ≤ lo < hi".into()).into());
                }
            }
            Command::Picard => {
                let p = self.picard.as_ref();
                needs_block(p.is_some())?;
                let p = p.unwrap();
                positive("picard.alpha", p.alpha)?;
                positive("picard.gamma", p.gamma)?;
                positive("picard.delta", p.delta)?;
                positive("picard.horizon", p.horizon)?;
                if p.intervals < 2 {
                    return Err(CoreError::InvalidParameter("picard.intervals must be at least 2".into()).into());
                }
                if p.refinement_levels == 1 || p.refinement_levels == 2 {
                    return Err(CoreError::InvalidParameter("picard.refinement_levels must be 0 or at least 3".into()).into());
                }
                if p.analytic_m.is_some() != p.analytic_ratio.is_some() {
                    return Err(CliError::Config("give both analytic_m and analytic_ratio, or neither".into()));
                }
            }
        }
        Ok(())
    }
}

/// Parses a config, applies `key=value` overrides (dotted TOML paths), and validates.
pub fn parse_config(text: &str, overrides: &[String], base_dir: &Path) -> Result<RunConfig> {
    let mut cfg: RunConfig = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?
    } else {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Config(format!("config after overrides: {e}")))?
    };
    cfg.base_dir = base_dir.to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, overrides, &base)
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` is malformed")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("override key `{key}`: `{part}` is not a table"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAMP_BLOWUP: &str = r#"
command = "simulate"
[graph]
builder = "cycle"
n = 6
[simulate]
alpha = 1.0
initial = { kind = "values", values = [1, 2, 3, 4, 5, 6] }
"#;

    fn parse(text: &str, ov: &[&str]) -> Result<RunConfig> {
        let ov: Vec<String> = ov.iter().map(|s| s.to_string()).collect();
        parse_config(text, &ov, Path::new("."))
    }

    #[test]
    fn ramp_blowup_config_parses() {
        let cfg = parse(RAMP_BLOWUP, &[]).unwrap();
        assert_eq!(cfg.command, Command::Simulate);
        let s = cfg.simulate.unwrap();
        assert_eq!(s.alpha, 1.0);
        assert_eq!(s.initial, InitialProfile::Values { values: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0] });
        assert_eq!(s.control, IntegrationControl::default());
        let g = cfg.graph.unwrap().build(Path::new(".")).unwrap();
        assert_eq!(g.vertex_count(), 6);
        assert_eq!(g.mu(0), 2.0);
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = parse(RAMP_BLOWUP, &["simulate.alpha=2", "simulate.control.rel_tol=1e-10", "graph.n=8"]).unwrap();
        let s = cfg.simulate.unwrap();
        assert_eq!(s.alpha, 2.0);
        assert_eq!(s.control.rel_tol, 1e-10);
        assert_eq!(cfg.graph.unwrap().n, Some(8));
        assert!(matches!(parse(RAMP_BLOWUP, &["simulate.alpha"]), Err(CliError::Config(_))));
        assert!(matches!(parse(RAMP_BLOWUP, &["command.x=1"]), Err(CliError::Config(_))));
    }

    #[test]
    fn ambiguous_graph_source_rejected() {
        let text = RAMP_BLOWUP.replace("n = 6", "n = 6\nfile = \"g.json\"");
        let err = parse(&text, &[]).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("ambiguous")), "{err}");
    }

    #[test]
    fn zero_alpha_is_invalid_parameter() {
        let err = parse(RAMP_BLOWUP, &["simulate.alpha=0"]).unwrap_err();
        assert_eq!(err.category(), "invalid-parameter");
    }

    #[test]
    fn unknown_keys_and_stray_blocks_rejected() {
        let err = parse(&RAMP_BLOWUP.replace("alpha = 1.0", "alpha = 1.0\nbeta = 2"), &[]).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("beta")), "{err}");
        let err = parse(&format!("{RAMP_BLOWUP}\n[picard]\nalpha = 3\ndelta = 0.1\nhorizon = 1\nintervals = 4\n"), &[]).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("[picard]")), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse("command = \"graph\"\n[graph\nbuilder = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
