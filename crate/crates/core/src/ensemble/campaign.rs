//! Execution and persistence of the `(xi_l, m)` run matrix.
//!
//! A campaign directory holds `manifest.json`, `runs.txt` (one line per run)
//! and `fields/xi{l}_m{m}.khe` with the final conserved fields plus `S`.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coeffs::PerturbationCoeffs;
use super::collocation::CollocationGrid;
use super::kh::{kh_initial_field, KhConfig};
use crate::config::canonical_hash;
use crate::error::{Error, Result};
use crate::gas::GasParams;
use crate::mesh::{GridField, MeshHierarchy};
use crate::solver::{advance, SolverConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub m0: u32,
    pub levels: usize,
    pub collocation: CollocationGrid,
    pub kh: KhConfig,
    pub gamma: f64,
    pub solver: SolverConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            m0: 2,
            levels: 3,
            collocation: CollocationGrid::default(),
            kh: KhConfig::default(),
            gamma: 1.4,
            solver: SolverConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        self.hierarchy()?;
        self.collocation.validate()?;
        self.kh.validate(self.collocation.max_abs())?;
        GasParams::new(self.gamma)?;
        self.solver.validate()
    }

    pub fn hierarchy(&self) -> Result<MeshHierarchy> {
        MeshHierarchy::new(self.m0 as i64, self.levels as i64)
    }

    pub fn gas(&self) -> Result<GasParams> {
        GasParams::new(self.gamma)
    }

    /// SHA-256 over the canonical JSON of the configuration and the coefficients.
    pub fn hash(&self, coeffs: &PerturbationCoeffs) -> Result<String> {
        #[derive(Serialize)]
        struct Keyed<'a> {
            config: &'a CampaignConfig,
            coeffs: String,
        }
        canonical_hash(&Keyed {
            config: self,
            coeffs: coeffs.hash(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Blowup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// 0-based collocation index.
    pub xi_index: usize,
    /// 1-based mesh level.
    pub level: usize,
    pub n: usize,
    pub xi: f64,
    pub path: String,
    pub status: RunStatus,
    pub time: f64,
    pub steps: u64,
    pub min_rho: f64,
    pub min_p: f64,
    pub fallbacks: u64,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn line(&self) -> String {
        format!(
            "{} {} {} {} {:e} {:e} {} {:?}",
            self.xi_index,
            self.level,
            self.time,
            self.steps,
            self.min_rho,
            self.min_p,
            self.fallbacks,
            self.status
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub config_hash: String,
    pub coeff_hash: String,
    pub config: CampaignConfig,
    pub coeffs: PerturbationCoeffs,
    pub xi: Vec<f64>,
    pub sizes: Vec<usize>,
    pub records: Vec<RunRecord>,
    pub sealed: bool,
}

impl Manifest {
    fn skeleton(config: &CampaignConfig, coeffs: &PerturbationCoeffs) -> Result<Self> {
        Ok(Self {
            schema: MANIFEST_SCHEMA,
            config_hash: config.hash(coeffs)?,
            coeff_hash: coeffs.hash(),
            config: config.clone(),
            coeffs: coeffs.clone(),
            xi: config.collocation.nodes(),
            sizes: config.hierarchy()?.sizes(),
            records: Vec::new(),
            sealed: false,
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        std::fs::rename(&tmp, dir.join(MANIFEST_FILE))?;
        let mut lines = String::from("# xi_index level t steps min_rho min_p fallbacks status\n");
        for r in &self.records {
            lines.push_str(&r.line());
            lines.push('\n');
        }
        std::fs::write(dir.join("runs.txt"), lines)?;
        Ok(())
    }

    fn upsert(&mut self, rec: RunRecord) {
        self.records
            .retain(|r| !(r.xi_index == rec.xi_index && r.level == rec.level));
        self.records.push(rec);
        self.records.sort_by_key(|r| (r.xi_index, r.level));
    }

    pub fn record(&self, xi_index: usize, level: usize) -> Option<&RunRecord> {
        self.records
            .iter()
            .find(|r| r.xi_index == xi_index && r.level == level)
    }

    /// Pairs without a successful record.
    pub fn missing(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for l in 0..self.xi.len() {
            for m in 1..=self.sizes.len() {
                match self.record(l, m) {
                    Some(r) if r.status == RunStatus::Ok => {}
                    _ => out.push((l, m)),
                }
            }
        }
        out
    }
}

/// How to treat results already on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    #[default]
    Reuse,
    Refresh,
}

#[derive(Debug, Clone, Copy)]
pub struct CampaignOptions {
    pub workers: usize,
    pub cache: CachePolicy,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            cache: CachePolicy::Reuse,
        }
    }
}

fn field_path(l: usize, m: usize) -> String {
    format!("fields/xi{l:03}_m{m}.khe")
}

fn run_one(
    config: &CampaignConfig,
    coeffs: &PerturbationCoeffs,
    hier: &MeshHierarchy,
    g: &GasParams,
    dir: &Path,
    l: usize,
    m: usize,
) -> Result<RunRecord> {
    let xi = config.collocation.node(l);
    let init = kh_initial_field(hier, m, xi, coeffs, &config.kh, g)?;
    let path = field_path(l, m);
    let mut rec = RunRecord {
        xi_index: l,
        level: m,
        n: hier.n(m),
        xi,
        path: path.clone(),
        status: RunStatus::Ok,
        time: 0.0,
        steps: 0,
        min_rho: f64::NAN,
        min_p: f64::NAN,
        fallbacks: 0,
        wall_time_s: 0.0,
        error: None,
    };
    match advance(&init, g, &config.solver) {
        Ok(res) => {
            res.field.save(&dir.join(&path))?;
            rec.time = res.time;
            rec.steps = res.steps;
            rec.min_rho = res.min_rho;
            rec.min_p = res.min_p;
            rec.fallbacks = res.fallbacks;
            rec.wall_time_s = res.wall_time_s;
        }
        Err(e @ (Error::Blowup { .. } | Error::MaxStepsExceeded { .. })) => {
            log::warn!("run xi#{l} level {m} failed: {e}");
            rec.status = RunStatus::Blowup;
            rec.error = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(rec)
}

/// Runs every missing `(xi_l, m)` pair and seals the manifest.
///
/// Results whose manifest carries the same configuration hash are reused.
/// Failed runs are recorded and reported as [`Error::PartialCampaign`].
pub fn run_campaign(
    config: &CampaignConfig,
    coeffs: &PerturbationCoeffs,
    dir: &Path,
    opts: CampaignOptions,
) -> Result<Manifest> {
    config.validate()?;
    coeffs.validate()?;
    std::fs::create_dir_all(dir.join("fields"))?;
    let hier = config.hierarchy()?;
    let g = config.gas()?;
    let mut manifest = Manifest::skeleton(config, coeffs)?;
    if opts.cache == CachePolicy::Reuse {
        if let Ok(old) = Manifest::load(dir) {
            if old.config_hash == manifest.config_hash {
                for r in old.records {
                    if r.status == RunStatus::Ok && dir.join(&r.path).exists() {
                        manifest.upsert(r);
                    }
                }
            } else {
                log::info!("configuration changed; recomputing {}", dir.display());
            }
        }
    }
    let todo = manifest.missing();
    log::info!(
        "campaign {}: {} of {} runs to compute",
        &manifest.config_hash[..12],
        todo.len(),
        manifest.xi.len() * manifest.sizes.len()
    );
    manifest.save(dir)?;

    let shared = Mutex::new(manifest);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcome: Result<()> = pool.install(|| {
        todo.par_iter().try_for_each(|&(l, m)| {
            let rec = run_one(config, coeffs, &hier, &g, dir, l, m)?;
            let mut guard = shared.lock().expect("manifest writer poisoned");
            guard.upsert(rec);
            guard.save(dir)
        })
    });
    let mut manifest = shared.into_inner().expect("manifest writer poisoned");
    outcome?;
    let missing = manifest.missing();
    manifest.sealed = missing.is_empty();
    manifest.save(dir)?;
    if !missing.is_empty() {
        return Err(Error::PartialCampaign { runs: missing });
    }
    Ok(manifest)
}

/// Read-only view of a sealed campaign directory.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Campaign {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = Manifest::load(dir)?;
        let missing = manifest.missing();
        if !manifest.sealed || !missing.is_empty() {
            return Err(Error::PartialCampaign { runs: missing });
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn hierarchy(&self) -> Result<MeshHierarchy> {
        self.manifest.config.hierarchy()
    }

    pub fn gas(&self) -> Result<GasParams> {
        self.manifest.config.gas()
    }

    pub fn levels(&self) -> usize {
        self.manifest.sizes.len()
    }

    pub fn nodes(&self) -> usize {
        self.manifest.xi.len()
    }

    pub fn field(&self, xi_index: usize, level: usize) -> Result<GridField> {
        let rec = self
            .manifest
            .record(xi_index, level)
            .ok_or(Error::MissingLevel(level))?;
        GridField::load(&self.dir.join(&rec.path))
    }

    /// Fields for levels `1..=levels` at one collocation node.
    pub fn level_fields(&self, xi_index: usize) -> Result<Vec<GridField>> {
        (1..=self.levels())
            .map(|m| self.field(xi_index, m))
            .collect()
    }
}
