//! Run directories, manifests, tables and summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use griffith_core::density::{alpha_and_fa, hessian_q};

use crate::config::Config;

/// Environment variable overriding the output root.
pub const OUT_ENV: &str = "GRIFFITH_OUT";

pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Creates `root/<name>-<UTC timestamp>`, adding a counter if that exists;
/// never reuses a directory.
pub fn fresh_dir(root: &Path, name: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    for k in 0..1000 {
        let dir = if k == 0 {
            root.join(format!("{name}-{stamp}"))
        } else {
            root.join(format!("{name}-{stamp}-{k}"))
        };
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    bail!("no free run directory under {}", root.display())
}

/// Uses `dir` when it is new or empty.
pub fn claim_dir(dir: &Path) -> anyhow::Result<PathBuf> {
    if dir.exists() {
        if fs::read_dir(dir)?.next().is_some() {
            bail!("{} is not empty; refusing to overwrite a previous run", dir.display());
        }
    } else {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(dir.to_path_buf())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityInfo {
    pub id: String,
    pub box_bound: f64,
    /// Coefficients of `Q` on `(E11, E22, √2·E12)`.
    pub q: [[f64; 3]; 3],
    pub alpha: f64,
    pub fa: [f64; 4],
}

impl DensityInfo {
    pub fn of(config: &Config) -> anyhow::Result<Self> {
        let material = config.density.material()?;
        let q = hessian_q(material.density.as_ref())?;
        let c = alpha_and_fa(&q, 1.0)?;
        Ok(DensityInfo {
            id: material.density.id().to_string(),
            box_bound: material.box_bound,
            q: q.coeffs,
            alpha: c.alpha,
            fa: c.fa.0,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub experiment: String,
    pub created: String,
    pub seed: u64,
    pub exec: String,
    pub parallel_feature: bool,
    pub config: Config,
    pub density: DensityInfo,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, Value>,
}

/// Collects the files of one run.
pub struct RunDir {
    pub dir: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    pub fn new(dir: PathBuf) -> Self {
        RunDir { dir, files: Vec::new() }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> anyhow::Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    /// Opens a file for streaming writers.
    pub fn create(&mut self, name: &str) -> anyhow::Result<fs::File> {
        let path = self.path(name);
        fs::File::create(&path).with_context(|| format!("writing {}", path.display()))
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> anyhow::Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Human-readable summary of a run directory, rebuilt from its manifest
/// and files.
pub fn render_summary(dir: &Path, manifest: &Manifest) -> String {
    let mut s = String::new();
    let d = &manifest.density;
    s.push_str(&format!("experiment: {}\n", manifest.experiment));
    s.push_str(&format!("created: {}\n", manifest.created));
    s.push_str(&format!("seed: {}  exec: {}\n", manifest.seed, manifest.exec));
    s.push_str(&format!(
        "density: {} (M = {}), alpha = {:.6}\n",
        d.id, d.box_bound, d.alpha
    ));
    s.push('\n');
    let width = manifest.summary.keys().map(|k| k.len()).max().unwrap_or(0);
    for (k, v) in &manifest.summary {
        s.push_str(&format!("{k:<width$}  {}\n", render_value(v)));
    }
    s.push_str("\nfiles:\n");
    for f in &manifest.files {
        if f == "summary.txt" {
            s.push_str(&format!("  {f}\n"));
            continue;
        }
        let path = dir.join(f);
        let status = match fs::read_to_string(&path) {
            Ok(body) if f.ends_with(".csv") => format!("{} rows", body.lines().count().saturating_sub(1)),
            Ok(body) => format!("{} bytes", body.len()),
            Err(_) => "missing".into(),
        };
        s.push_str(&format!("  {f} ({status})\n"));
    }
    s
}

pub fn write_summary(dir: &Path, manifest: &Manifest) -> anyhow::Result<String> {
    let body = render_summary(dir, manifest);
    let mut f = fs::File::create(dir.join("summary.txt"))?;
    f.write_all(body.as_bytes())?;
    Ok(body)
}
