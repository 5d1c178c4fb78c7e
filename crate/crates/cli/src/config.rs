//! Experiment configuration (TOML) and its semantic lint.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use griffith_core::cleavage::{CleavageTemplate, Schedule, SolveMode};
use griffith_core::density::{density_from_id, EnergyDensity, Material, StVenantKirchhoff, DEFAULT_BOX_BOUND};
use griffith_core::domain::Axis;
use griffith_core::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Cleavage,
    Gamma,
    Rigidity,
    Loads,
    PartitionDemo,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Cleavage => "cleavage",
            Experiment::Gamma => "gamma",
            Experiment::Rigidity => "rigidity",
            Experiment::Loads => "loads",
            Experiment::PartitionDemo => "partition-demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exec: Exec,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub cleavage: CleavageSection,
    #[serde(default)]
    pub gamma: GammaSection,
    #[serde(default)]
    pub rigidity: RigiditySection,
    #[serde(default)]
    pub loads: LoadsSection,
    #[serde(default)]
    pub partition_demo: PartitionDemoSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            experiment: Experiment::Cleavage,
            seed: 0,
            exec: Exec::default(),
            density: DensitySection::default(),
            mesh: MeshSection::default(),
            cleavage: CleavageSection::default(),
            gamma: GammaSection::default(),
            rigidity: RigiditySection::default(),
            loads: LoadsSection::default(),
            partition_demo: PartitionDemoSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    /// `dist2` or `svk`.
    pub id: String,
    pub box_bound: f64,
    /// Lamé parameters, `svk` only.
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
}

impl Default for DensitySection {
    fn default() -> Self {
        DensitySection {
            id: "dist2".into(),
            box_bound: DEFAULT_BOX_BOUND,
            mu: None,
            lambda: None,
        }
    }
}

impl DensitySection {
    pub fn material(&self) -> anyhow::Result<Material> {
        let density: Arc<dyn EnergyDensity> = match (self.id.as_str(), self.mu, self.lambda) {
            ("svk", mu, lambda) if mu.is_some() || lambda.is_some() => {
                let d = StVenantKirchhoff::default();
                Arc::new(StVenantKirchhoff {
                    mu: mu.unwrap_or(d.mu),
                    lambda: lambda.unwrap_or(d.lambda),
                    ..d
                })
            }
            (id, None, None) => density_from_id(id)?,
            (id, _, _) => bail!("density '{id}' takes no Lamé parameters"),
        };
        Ok(Material::new(density, self.box_bound))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub l: f64,
    /// Cells across `(0, l)`.
    pub nx: usize,
    pub ny: usize,
    /// Collar width; rounded to whole cells, at least one when positive.
    pub eta: Option<f64>,
    /// Collar cells per side, used when `eta` is absent.
    pub collar: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            l: 1.0,
            nx: 32,
            ny: 32,
            eta: None,
            collar: 2,
        }
    }
}

impl MeshSection {
    pub fn collar_cells(&self) -> usize {
        match self.eta {
            Some(eta) if eta > 0.0 => ((eta * self.nx as f64 / self.l).round() as usize).max(1),
            Some(_) => 0,
            None => self.collar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleavageSection {
    pub a_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub mode: SolveMode,
    pub schedule: Schedule,
}

impl Default for CleavageSection {
    fn default() -> Self {
        CleavageSection {
            a_grid: (-6..=6).map(|k| 0.25 * k as f64).collect(),
            eps_grid: vec![1e-4],
            mode: SolveMode::Candidates,
            schedule: Schedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSection {
    /// Random triples drawn when no triple file is given.
    pub triples: usize,
    pub max_components: usize,
    /// Bound on the translation part of the random rigid motions.
    pub shift: f64,
    pub eps_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub xi: Vec<String>,
    /// JSON triple document; overrides the random draw.
    pub triple_file: Option<PathBuf>,
}

impl Default for GammaSection {
    fn default() -> Self {
        GammaSection {
            triples: 5,
            max_components: 4,
            shift: 0.5,
            eps_grid: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            sigma_grid: vec![0.0, 1e-2, 1e-1, 1.0],
            xi: vec!["e1".into(), "e2".into()],
            triple_file: None,
        }
    }
}

impl GammaSection {
    pub fn axes(&self) -> anyhow::Result<Vec<Axis>> {
        self.xi
            .iter()
            .map(|s| Axis::parse(s).with_context(|| format!("unknown slicing direction '{s}' (expected e1 or e2)")))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigiditySection {
    /// Cells across `(0, 3)`; a multiple of 3.
    pub nx: usize,
    pub ny: usize,
    /// Translation of the middle strip in units of `√ε`.
    pub shift: [f64; 2],
    pub eps_grid: Vec<f64>,
    pub threshold: f64,
    pub tail: usize,
    pub tolerance: f64,
}

impl Default for RigiditySection {
    fn default() -> Self {
        RigiditySection {
            nx: 48,
            ny: 16,
            shift: [0.3, -0.4],
            eps_grid: vec![1e-2, 1e-3, 1e-4],
            threshold: 10.0,
            tail: 3,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadsSection {
    pub lambda: f64,
    pub eps_grid: Vec<f64>,
    pub max_components: usize,
    pub shift: f64,
}

impl Default for LoadsSection {
    fn default() -> Self {
        LoadsSection {
            lambda: 1.0,
            eps_grid: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            max_components: 3,
            shift: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionDemoSection {
    pub max_components: usize,
    /// Component pairs merged in the demo; defaults to `(0, 1)`.
    pub merges: Vec<[usize; 2]>,
}

impl Default for PartitionDemoSection {
    fn default() -> Self {
        PartitionDemoSection {
            max_components: 5,
            merges: Vec::new(),
        }
    }
}

/// One lint finding, located by its key path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> anyhow::Result<Config> {
        toml::from_str(text).map_err(|e| anyhow::anyhow!("{origin}: {e}"))
    }

    pub fn load(path: &Path) -> anyhow::Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Config::parse(&text, &path.display().to_string())
    }

    pub fn template(&self) -> anyhow::Result<CleavageTemplate> {
        Ok(CleavageTemplate {
            l: self.mesh.l,
            nx: self.mesh.nx,
            ny: self.mesh.ny,
            collar: self.mesh.collar_cells(),
            material: self.density.material()?,
            mode: self.cleavage.mode,
            schedule: self.cleavage.schedule,
        })
    }

    /// Semantic problems; empty when the configuration is usable.
    pub fn lint(&self) -> Vec<Problem> {
        let mut out = Vec::new();
        let mut push = |path: &str, message: String| {
            out.push(Problem {
                path: path.into(),
                message,
            })
        };
        if let Err(e) = self.density.material() {
            push("density.id", e.to_string());
        }
        if !(self.density.box_bound > 2f64.sqrt()) {
            push(
                "density.box_bound",
                format!("M = {} must exceed |Id| = √2", self.density.box_bound),
            );
        }
        let m = &self.mesh;
        if !(m.l > 0.0 && m.l.is_finite()) {
            push("mesh.l", format!("l = {} must be positive", m.l));
        }
        if m.nx < 2 || m.ny < 2 {
            push("mesh", format!("need nx, ny >= 2, got {}x{}", m.nx, m.ny));
        }
        if let Some(eta) = m.eta {
            if !(eta >= 0.0 && eta.is_finite()) {
                push("mesh.eta", format!("eta = {eta} must be >= 0"));
            }
        }
        let eps_sections: [(&str, &[f64], bool); 4] = [
            (
                "cleavage.eps_grid",
                &self.cleavage.eps_grid,
                self.experiment == Experiment::Cleavage,
            ),
            (
                "gamma.eps_grid",
                &self.gamma.eps_grid,
                self.experiment == Experiment::Gamma,
            ),
            (
                "rigidity.eps_grid",
                &self.rigidity.eps_grid,
                self.experiment == Experiment::Rigidity,
            ),
            (
                "loads.eps_grid",
                &self.loads.eps_grid,
                self.experiment == Experiment::Loads,
            ),
        ];
        for (path, grid, active) in eps_sections {
            if !active {
                continue;
            }
            if grid.is_empty() {
                push(path, "empty".into());
            }
            if let Some(e) = grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
                push(path, format!("contains {e}; every eps must be positive and finite"));
            }
            if grid.windows(2).any(|w| !(w[1] < w[0])) {
                push(path, "must be strictly decreasing".into());
            }
        }
        match self.experiment {
            Experiment::Cleavage => {
                let c = &self.cleavage;
                if c.a_grid.is_empty() {
                    push("cleavage.a_grid", "empty".into());
                }
                if let Some(a) = c.a_grid.iter().find(|a| !a.is_finite()) {
                    push("cleavage.a_grid", format!("contains {a}"));
                }
                if m.collar_cells() == 0 {
                    push(
                        "mesh.collar",
                        "the cleavage problem needs a collar of at least one cell".into(),
                    );
                }
                let a_max = c
                    .a_grid
                    .iter()
                    .filter(|a| a.is_finite())
                    .fold(0.0f64, |s, a| s.max(a.abs()));
                let e_max = c
                    .eps_grid
                    .iter()
                    .filter(|e| **e > 0.0 && e.is_finite())
                    .fold(0.0f64, |s, e| s.max(*e));
                // competitors have gradient diag(1 + a√ε, 1): need |1 + a√ε|² + 1 ≤ M²
                let bound = (self.density.box_bound.powi(2) - 1.0).max(0.0).sqrt() - 1.0;
                let reach = a_max * e_max.sqrt();
                if reach > bound {
                    push(
                        "cleavage.a_grid",
                        format!(
                            "max |a|·√eps = {reach:.4} exceeds the admissible bound {bound:.4} from M = {}",
                            self.density.box_bound
                        ),
                    );
                }
            }
            Experiment::Gamma => {
                let g = &self.gamma;
                if let Err(e) = g.axes() {
                    push("gamma.xi", e.to_string());
                }
                if let Some(s) = g.sigma_grid.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
                    push("gamma.sigma_grid", format!("contains {s}; sigma must be >= 0"));
                }
                if g.triple_file.is_none() && (g.triples == 0 || g.max_components == 0) {
                    push("gamma", "triples and max_components must be positive".into());
                }
                if g.eps_grid.len() < 3 {
                    push("gamma.eps_grid", "rate fits need at least 3 values".into());
                }
            }
            Experiment::Rigidity => {
                let r = &self.rigidity;
                if !r.nx.is_multiple_of(3) || r.nx < 3 {
                    push("rigidity.nx", format!("{} is not a positive multiple of 3", r.nx));
                }
                if r.tail == 0 || !(r.threshold > 0.0) {
                    push("rigidity", "tail and threshold must be positive".into());
                }
            }
            Experiment::Loads => {
                if !(self.loads.lambda >= 0.0) {
                    push("loads.lambda", format!("lambda = {} must be >= 0", self.loads.lambda));
                }
                if self.loads.max_components == 0 {
                    push("loads.max_components", "must be positive".into());
                }
            }
            Experiment::PartitionDemo => {
                if self.partition_demo.max_components == 0 {
                    push("partition_demo.max_components", "must be positive".into());
                }
            }
        }
        out
    }
}
