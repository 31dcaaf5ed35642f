//! User-facing run configuration and canonical hashing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cweno::{CwenoConfig, CwenoMode};
use crate::diagnostics::Window;
use crate::ensemble::{CachePolicy, CampaignConfig, CollocationGrid, KhConfig};
use crate::error::{Error, Result};
use crate::solver::{Reconstruction, SolverConfig};

/// SHA-256 (hex) of the compact JSON serialization of `value`. Struct fields
/// serialize in declaration order and maps are ordered, so equal values hash equally.
pub fn canonical_hash<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub m0: u32,
    pub levels: usize,
    pub nodes: usize,
    pub xi_range: [f64; 2],
    pub tau: Vec<f64>,
    pub gamma: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub seed: u64,
    pub coeffs: PathBuf,
    pub output: PathBuf,
    /// Campaign cache root; defaults to `<output>/campaigns`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    pub cache: CachePolicy,
    /// Worker threads; 0 means all available cores.
    pub workers: usize,
    pub cweno_mode: CwenoMode,
    pub reconstruction: Reconstruction,
    pub ratio_threshold: f64,
    pub windows: BTreeMap<String, [f64; 4]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut windows = BTreeMap::new();
        windows.insert("D1".to_string(), [0.46, 0.54, 0.71, 0.79]);
        windows.insert("D2".to_string(), [0.76, 0.84, 0.71, 0.79]);
        Self {
            m0: 2,
            levels: 3,
            nodes: 101,
            xi_range: [-1.0, 1.0],
            tau: vec![1.1],
            gamma: 1.4,
            cfl: 0.45,
            t_end: 2.0,
            seed: 1,
            coeffs: PathBuf::from("coeffs.txt"),
            output: PathBuf::from("out"),
            cache_dir: None,
            cache: CachePolicy::Reuse,
            workers: 0,
            cweno_mode: CwenoMode::Nonlinear,
            reconstruction: Reconstruction::Characteristic,
            ratio_threshold: 1e-10,
            windows,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn cweno(&self) -> CwenoConfig {
        CwenoConfig {
            mode: self.cweno_mode,
            ..CwenoConfig::default()
        }
    }

    pub fn windows(&self) -> Result<Vec<Window>> {
        self.windows
            .iter()
            .map(|(name, r)| Window::new(name, r[0], r[1], r[2], r[3]))
            .collect()
    }

    pub fn campaign(&self, tau: f64) -> CampaignConfig {
        CampaignConfig {
            m0: self.m0,
            levels: self.levels,
            collocation: CollocationGrid {
                a: self.xi_range[0],
                b: self.xi_range[1],
                count: self.nodes,
            },
            kh: KhConfig {
                tau,
                ..KhConfig::default()
            },
            gamma: self.gamma,
            solver: SolverConfig {
                cfl: self.cfl,
                t_end: self.t_end,
                reconstruction: self.reconstruction,
                ..SolverConfig::default()
            },
        }
    }

    pub fn cache_root(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| self.output.join("campaigns"))
    }

    /// Directory holding the campaign for one value of `tau`.
    pub fn campaign_dir(&self, tau: f64) -> PathBuf {
        self.cache_root().join(format!("tau_{tau}"))
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.output.join("analysis")
    }

    /// Hash of the settings that determine computed values. Paths, cache
    /// policy and worker count are left out.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.coeffs = PathBuf::new();
        c.output = PathBuf::new();
        c.cache_dir = None;
        c.cache = CachePolicy::Reuse;
        c.workers = 0;
        canonical_hash(&c)
    }

    /// Checks every module's preconditions.
    pub fn validate(&self) -> Result<()> {
        if self.tau.is_empty() {
            return Err(Error::Config("tau list is empty".into()));
        }
        for &tau in &self.tau {
            self.campaign(tau).validate()?;
        }
        self.cweno().validate()?;
        if !(self.ratio_threshold >= 0.0) {
            return Err(Error::Config("ratio_threshold must be >= 0".into()));
        }
        self.windows()?;
        Ok(())
    }

    /// Extra preconditions of the analysis stages.
    pub fn validate_for_analysis(&self) -> Result<()> {
        if self.nodes < crate::cweno::DEGREE + 1 {
            return Err(Error::Config(format!(
                "analysis integrates over xi with CWENO7 and needs at least {} collocation nodes, got {}",
                crate::cweno::DEGREE + 1,
                self.nodes
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = RunConfig::from_toml(
            "levels = 4\ntau = [0.0, 1.1]\n[windows]\nW = [0.1, 0.2, 0.3, 0.4]\n",
        )
        .unwrap();
        assert_eq!(cfg.levels, 4);
        assert_eq!(cfg.nodes, 101);
        assert_eq!(cfg.windows.len(), 1);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let cfg = RunConfig {
            cfl: 1.5,
            ..RunConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        let cfg = RunConfig {
            tau: vec![2.0],
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            nodes: 3,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_ok());
        assert!(cfg.validate_for_analysis().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(canonical_hash(&a).unwrap(), canonical_hash(&b).unwrap());
        b.seed = 2;
        assert_ne!(canonical_hash(&a).unwrap(), canonical_hash(&b).unwrap());
    }

    #[test]
    fn value_hash_ignores_paths_and_workers() {
        let a = RunConfig::default();
        let b = RunConfig {
            output: "elsewhere".into(),
            cache_dir: Some("/tmp/cache".into()),
            workers: 7,
            cache: CachePolicy::Refresh,
            ..a.clone()
        };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c = RunConfig {
            t_end: 1.0,
            ..a.clone()
        };
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(b.campaign_dir(1.1), PathBuf::from("/tmp/cache/tau_1.1"));
        assert_eq!(a.campaign_dir(0.0), PathBuf::from("out/campaigns/tau_0"));
    }
}
