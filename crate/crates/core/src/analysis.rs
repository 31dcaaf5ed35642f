//! End-to-end diagnostics over sealed campaigns and their file outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cweno::{refine_values, CwenoConfig};
use crate::diagnostics::{
    cesaro_from_projected, defect_fields, defect_residuals, histogram_stats, project_levels,
    window_histogram, xi_statistics, Residual, Window, WindowHistogram,
};
use crate::ensemble::Campaign;
use crate::error::{Error, Result};
use crate::mesh::GridField;
use crate::pod::{center_snapshots, k_at, pod_svd, PodResult, SnapshotMatrix};

/// Analysis stages selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stages {
    pub cesaro: bool,
    pub stats: bool,
    pub defects: bool,
    pub hist: bool,
    pub pod: bool,
}

impl Stages {
    pub const NAMES: [&'static str; 5] = ["cesaro", "stats", "defects", "hist", "pod"];

    pub fn all() -> Self {
        Self {
            cesaro: true,
            stats: true,
            defects: true,
            hist: true,
            pod: true,
        }
    }

    pub fn none() -> Self {
        Self {
            cesaro: false,
            stats: false,
            defects: false,
            hist: false,
            pod: false,
        }
    }

    pub fn parse<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut out = Self::none();
        for name in names {
            match name.as_ref() {
                "cesaro" => out.cesaro = true,
                "stats" => out.stats = true,
                "defects" => out.defects = true,
                "hist" => out.hist = true,
                "pod" => out.pod = true,
                "all" => out = Self::all(),
                other => {
                    return Err(Error::Config(format!(
                        "unknown stage {other}; expected one of {:?}",
                        Self::NAMES
                    )))
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub cweno: CwenoConfig,
    pub ratio_threshold: f64,
    pub windows: Vec<Window>,
    pub k_threshold: f64,
    pub stages: Stages,
    /// Keep centered snapshot matrices in the report.
    pub keep_snapshots: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            cweno: CwenoConfig::default(),
            ratio_threshold: 1e-10,
            windows: Vec::new(),
            k_threshold: 0.95,
            stages: Stages::all(),
            keep_snapshots: false,
        }
    }
}

/// Quantities whose xi-mean and xi-deviation fields are formed at every `M`.
pub const MEAN_QUANTITIES: [&str; 6] = ["rho", "mx", "my", "S", "tr", "edef"];

/// Quantities whose window histograms are formed at `M_max`.
pub const HISTOGRAM_QUANTITIES: [&str; 3] = ["rho", "S", "tr"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PodTarget {
    /// Density on the level-`m` grid.
    RhoRaw,
    /// Cesaro-averaged density on the level-`M` grid.
    RhoCesaro,
    Edef,
    Tr,
}

impl PodTarget {
    pub const ALL: [PodTarget; 4] = [Self::RhoRaw, Self::RhoCesaro, Self::Edef, Self::Tr];

    pub fn name(self) -> &'static str {
        match self {
            Self::RhoRaw => "rho_raw",
            Self::RhoCesaro => "rho_cesaro",
            Self::Edef => "edef",
            Self::Tr => "tr",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PodRow {
    pub target: PodTarget,
    /// `m` for raw fields, `M` for Cesaro quantities.
    pub level: usize,
    pub k: usize,
    pub singular_values: Vec<f64>,
    #[serde(skip)]
    pub modes: Option<GridField>,
    #[serde(skip)]
    pub snapshots: Option<SnapshotMatrix>,
}

/// Relative slack allowed on either end of the ratio band.
pub const BAND_SLACK: f64 = 0.05;

/// Pointwise ratio-band census over every xi at one `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub levels: usize,
    /// Share of active nodes inside the exact band.
    pub fraction: f64,
    /// Share of active nodes inside the band widened by [`BAND_SLACK`].
    pub fraction_tol: f64,
    pub active: usize,
    /// `fraction_tol` restricted to nodes shared with level 1.
    pub fraction_tol_coarse: f64,
    pub min_tr: f64,
    pub min_edef: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowStat {
    pub window: String,
    pub quantity: String,
    pub mean: f64,
    pub std: f64,
    #[serde(skip)]
    pub histogram: Option<WindowHistogram>,
}

/// Everything derived from one campaign (one value of `tau`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauReport {
    pub tau: f64,
    pub config_hash: String,
    pub levels: usize,
    pub n: usize,
    pub nodes: usize,
    pub ratio_band: (f64, f64),
    pub ratio: Vec<RatioRow>,
    pub residuals: Vec<Residual>,
    /// Largest xi-deviation per quantity over all nodes and all `M`.
    pub sigma_max: BTreeMap<String, f64>,
    pub windows: Vec<WindowStat>,
    pub skipped_windows: Vec<String>,
    pub pod: Vec<PodRow>,
    #[serde(skip)]
    pub mean_fields: Vec<GridField>,
    #[serde(skip)]
    pub std_fields: Vec<GridField>,
}

impl TauReport {
    pub fn pod_row(&self, target: PodTarget, level: usize) -> Option<&PodRow> {
        self.pod
            .iter()
            .find(|r| r.target == target && r.level == level)
    }
}

/// Per-xi fields on the level-`M` grid for one prefix average.
struct PrefixData {
    values: [Vec<f64>; 6],
    /// `[active, inside, inside_tol]` over all nodes and over nodes of level 1.
    census: [[usize; 3]; 2],
    min_tr: f64,
    min_edef: f64,
}

struct XiData {
    raw_rho: Vec<Vec<f64>>,
    prefixes: Vec<PrefixData>,
}

fn xi_data(c: &Campaign, l: usize, opts: &AnalysisOptions, band: (f64, f64)) -> Result<XiData> {
    let hier = c.hierarchy()?;
    let g = c.gas()?;
    let levels = c.levels();
    let per_level = c.level_fields(l)?;
    let raw_rho = per_level
        .iter()
        .map(|f| f.require("rho").map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;
    let prefixes = (1..=levels)
        .map(|m| {
            let projected = project_levels(&per_level[..m], &hier, m, &g, &opts.cweno)?;
            let ces = cesaro_from_projected(&projected)?;
            let d = defect_fields(&ces, &g, opts.ratio_threshold)?;
            let n = hier.n(m);
            let stride = 1usize << (m - 1);
            let mut census = [[0usize; 3]; 2];
            for (i, r) in d.ratio.iter().enumerate() {
                if r.is_nan() {
                    continue;
                }
                let coarse = (i % n) % stride == 0 && (i / n) % stride == 0;
                for row in census.iter_mut().take(if coarse { 2 } else { 1 }) {
                    row[0] += 1;
                    row[1] += usize::from(*r >= band.0 && *r <= band.1);
                    row[2] += usize::from(
                        *r >= band.0 * (1.0 - BAND_SLACK) && *r <= band.1 * (1.0 + BAND_SLACK),
                    );
                }
            }
            Ok(PrefixData {
                values: [
                    ces.get("rho").to_vec(),
                    ces.get("mx").to_vec(),
                    ces.get("my").to_vec(),
                    ces.get("S").to_vec(),
                    d.tr.clone(),
                    d.edef.clone(),
                ],
                census,
                min_tr: d.tr.iter().copied().fold(f64::INFINITY, f64::min),
                min_edef: d.edef.iter().copied().fold(f64::INFINITY, f64::min),
            })
        })
        .collect::<Result<_>>()?;
    Ok(XiData { raw_rho, prefixes })
}

fn share(count: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        count as f64 / total as f64
    }
}

fn pod_row(
    target: PodTarget,
    level: usize,
    n: usize,
    snaps: &[Vec<f64>],
    opts: &AnalysisOptions,
) -> Result<PodRow> {
    let s = center_snapshots(snaps, target.name())?;
    let r: PodResult = pod_svd(&s)?;
    let shown = r.modes.ncols().min(4);
    let mut modes = GridField::new(level, n);
    for c in 0..shown {
        modes.insert(
            &format!("mode{}", c + 1),
            (0..r.modes.nrows()).map(|i| r.modes[(i, c)]).collect(),
        )?;
    }
    Ok(PodRow {
        target,
        level,
        k: k_at(&r, opts.k_threshold),
        singular_values: r.singular_values,
        modes: Some(modes),
        snapshots: opts.keep_snapshots.then_some(s),
    })
}

/// Runs the selected diagnostics on one sealed campaign.
pub fn analyze_campaign(c: &Campaign, opts: &AnalysisOptions) -> Result<TauReport> {
    let hier = c.hierarchy()?;
    let g = c.gas()?;
    let levels = c.levels();
    let nodes = c.nodes();
    let n = hier.n(levels);
    let band = g.defect_ratio_band();
    let grid = &c.manifest.config.collocation;
    let data: Vec<XiData> = (0..nodes)
        .into_par_iter()
        .map(|l| xi_data(c, l, opts, band))
        .collect::<Result<_>>()?;

    let ratio = (0..levels)
        .map(|k| {
            let mut census = [[0usize; 3]; 2];
            let (mut min_tr, mut min_edef) = (f64::INFINITY, f64::INFINITY);
            for d in &data {
                let p = &d.prefixes[k];
                for (acc, row) in census.iter_mut().zip(&p.census) {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += v;
                    }
                }
                min_tr = min_tr.min(p.min_tr);
                min_edef = min_edef.min(p.min_edef);
            }
            RatioRow {
                levels: k + 1,
                fraction: share(census[0][1], census[0][0]),
                fraction_tol: share(census[0][2], census[0][0]),
                active: census[0][0],
                fraction_tol_coarse: share(census[1][2], census[1][0]),
                min_tr,
                min_edef,
            }
        })
        .collect();

    let mut mean_fields = Vec::new();
    let mut std_fields = Vec::new();
    let mut sigma_max = BTreeMap::new();
    let need_stats =
        opts.stages.cesaro || opts.stages.stats || opts.stages.defects || opts.stages.hist;
    if need_stats {
        for k in 0..levels {
            let mut mean = GridField::new(k + 1, hier.n(k + 1));
            let mut std = GridField::new(k + 1, hier.n(k + 1));
            for (q, name) in MEAN_QUANTITIES.iter().enumerate() {
                let samples: Vec<Vec<f64>> = data
                    .iter()
                    .map(|d| d.prefixes[k].values[q].clone())
                    .collect();
                let (m, s) = xi_statistics(&samples, grid, &opts.cweno)?;
                let top = s.iter().copied().fold(0.0, f64::max);
                let e = sigma_max.entry(name.to_string()).or_insert(0.0f64);
                *e = e.max(top);
                mean.insert(name, m)?;
                std.insert(name, s)?;
            }
            mean_fields.push(mean);
            std_fields.push(std);
        }
    }

    let residuals = if need_stats {
        let mut tr = Vec::new();
        let mut edef = Vec::new();
        for f in &mean_fields {
            let up = levels - f.level;
            tr.push(refine_values(f.require("tr")?, f.n, up, &opts.cweno)?);
            edef.push(refine_values(f.require("edef")?, f.n, up, &opts.cweno)?);
        }
        defect_residuals(&tr, &edef, n)?
    } else {
        Vec::new()
    };

    let mut windows = Vec::new();
    let mut skipped_windows = Vec::new();
    if opts.stages.hist || opts.stages.stats {
        let finest = mean_fields.last().ok_or(Error::MissingLevel(levels))?;
        for w in &opts.windows {
            if w.nodes(n).len() < crate::diagnostics::MIN_WINDOW_NODES {
                log::warn!(
                    "window {} covers too few nodes on the {n}x{n} grid; skipped",
                    w.name
                );
                skipped_windows.push(w.name.clone());
                continue;
            }
            for q in HISTOGRAM_QUANTITIES {
                let h = window_histogram(finest.require(q)?, n, w)?;
                let (mean, std) = histogram_stats(&h)?;
                windows.push(WindowStat {
                    window: w.name.clone(),
                    quantity: q.to_string(),
                    mean,
                    std,
                    histogram: Some(h),
                });
            }
        }
    }

    let mut pod = Vec::new();
    if opts.stages.pod {
        let mut jobs: Vec<(PodTarget, usize)> = Vec::new();
        for target in PodTarget::ALL {
            for m in 1..=levels {
                jobs.push((target, m));
            }
        }
        pod = jobs
            .par_iter()
            .map(|&(target, m)| {
                let snaps: Vec<Vec<f64>> = match target {
                    PodTarget::RhoRaw => data.iter().map(|d| d.raw_rho[m - 1].clone()).collect(),
                    PodTarget::RhoCesaro => data
                        .iter()
                        .map(|d| d.prefixes[m - 1].values[0].clone())
                        .collect(),
                    PodTarget::Tr => data
                        .iter()
                        .map(|d| d.prefixes[m - 1].values[4].clone())
                        .collect(),
                    PodTarget::Edef => data
                        .iter()
                        .map(|d| d.prefixes[m - 1].values[5].clone())
                        .collect(),
                };
                pod_row(target, m, hier.n(m), &snaps, opts)
            })
            .collect::<Result<_>>()?;
    }

    Ok(TauReport {
        tau: c.manifest.config.kh.tau,
        config_hash: c.manifest.config_hash.clone(),
        levels,
        n,
        nodes,
        ratio_band: band,
        ratio,
        residuals,
        sigma_max,
        windows,
        skipped_windows,
        pod,
        mean_fields,
        std_fields,
    })
}

/// One file written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactIndex {
    pub config_hash: String,
    pub campaigns: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

pub const INDEX_FILE: &str = "index.json";
pub const SUMMARY_FILE: &str = "summary.json";

struct Writer {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn field(&mut self, rel: &str, f: &GridField, csv: bool) -> Result<()> {
        let mut bin = Vec::new();
        f.write_binary(&mut bin)?;
        self.put(&format!("{rel}.khe"), &bin)?;
        if csv {
            for name in f.names().to_vec() {
                let mut text = Vec::new();
                f.write_csv(&name, &mut text)?;
                self.put(&format!("{rel}_{name}.csv"), &text)?;
            }
        }
        Ok(())
    }
}

/// Writes CSV tables, field maps, a JSON summary and the artifact index.
pub fn write_outputs(
    reports: &[TauReport],
    stages: Stages,
    dir: &Path,
    config_hash: &str,
) -> Result<ArtifactIndex> {
    let mut w = Writer {
        root: dir.to_path_buf(),
        artifacts: Vec::new(),
    };
    let mut reports: Vec<&TauReport> = reports.iter().collect();
    reports.sort_by(|a, b| a.tau.total_cmp(&b.tau));

    if stages.defects {
        let mut text = String::from("M,tau,eps_R,eps_E\n");
        for r in &reports {
            for row in &r.residuals {
                writeln!(
                    text,
                    "{},{},{:e},{:e}",
                    row.levels, r.tau, row.eps_r, row.eps_e
                )
                .unwrap();
            }
        }
        w.put("defects.csv", text.as_bytes())?;
        let mut text = String::from(
            "M,tau,fraction,fraction_tol,fraction_tol_coarse,active,min_tr,min_edef\n",
        );
        for r in &reports {
            for row in &r.ratio {
                writeln!(
                    text,
                    "{},{},{:e},{:e},{:e},{},{:e},{:e}",
                    row.levels,
                    r.tau,
                    row.fraction,
                    row.fraction_tol,
                    row.fraction_tol_coarse,
                    row.active,
                    row.min_tr,
                    row.min_edef
                )
                .unwrap();
            }
        }
        w.put("ratio.csv", text.as_bytes())?;
    }
    if stages.stats {
        let mut text = String::from("window,quantity,tau,mean,std\n");
        for r in &reports {
            for s in &r.windows {
                writeln!(
                    text,
                    "{},{},{},{:e},{:e}",
                    s.window, s.quantity, r.tau, s.mean, s.std
                )
                .unwrap();
            }
        }
        w.put("stats.csv", text.as_bytes())?;
        let mut text = String::from("quantity,tau,max_std\n");
        for r in &reports {
            for (q, v) in &r.sigma_max {
                writeln!(text, "{q},{},{v:e}", r.tau).unwrap();
            }
        }
        w.put("sigma.csv", text.as_bytes())?;
    }
    if stages.hist {
        for r in &reports {
            for s in &r.windows {
                let Some(h) = &s.histogram else { continue };
                let mut text = String::from("bin_left,bin_right,count,density\n");
                for (i, c) in h.counts.iter().enumerate() {
                    writeln!(
                        text,
                        "{:e},{:e},{c},{:e}",
                        h.edges[i],
                        h.edges[i + 1],
                        h.density[i]
                    )
                    .unwrap();
                }
                w.put(
                    &format!("hist/{}_{}_tau{}.csv", s.window, s.quantity, r.tau),
                    text.as_bytes(),
                )?;
            }
        }
    }
    for r in &reports {
        let base = format!("fields/tau{}", r.tau);
        if stages.cesaro || stages.defects {
            for (k, f) in r.mean_fields.iter().enumerate() {
                let last = k + 1 == r.mean_fields.len();
                w.field(&format!("{base}/mean_M{}", k + 1), f, last)?;
            }
        }
        if stages.stats {
            if let Some(f) = r.std_fields.last() {
                w.field(&format!("{base}/std_M{}", r.std_fields.len()), f, true)?;
            }
        }
        if stages.pod {
            for row in &r.pod {
                if row.level == r.levels {
                    if let Some(modes) = &row.modes {
                        w.field(&format!("{base}/modes_{}", row.target.name()), modes, false)?;
                    }
                }
            }
        }
    }
    if stages.pod {
        let mut text = String::from("target,level,tau,j,s\n");
        for r in &reports {
            for row in &r.pod {
                for (j, s) in row.singular_values.iter().enumerate() {
                    writeln!(
                        text,
                        "{},{},{},{},{s:e}",
                        row.target.name(),
                        row.level,
                        r.tau,
                        j + 1
                    )
                    .unwrap();
                }
            }
        }
        w.put("pod/singular_values.csv", text.as_bytes())?;
        for target in PodTarget::ALL {
            w.put(
                &format!("pod/k_{}.csv", target.name()),
                k_table(&reports, target).as_bytes(),
            )?;
        }
    }
    let summary = serde_json::to_string_pretty(&reports)?;
    w.put(SUMMARY_FILE, summary.as_bytes())?;
    let index = ArtifactIndex {
        config_hash: config_hash.to_string(),
        campaigns: reports.iter().map(|r| r.config_hash.clone()).collect(),
        artifacts: w.artifacts,
    };
    std::fs::write(dir.join(INDEX_FILE), serde_json::to_string_pretty(&index)?)?;
    Ok(index)
}

/// Mode counts with one row per level and one column per `tau`.
pub fn k_table(reports: &[&TauReport], target: PodTarget) -> String {
    let label = if target == PodTarget::RhoRaw {
        "m"
    } else {
        "M"
    };
    let mut text = String::from(label);
    for r in reports {
        write!(text, ",tau={}", r.tau).unwrap();
    }
    text.push('\n');
    let levels = reports.iter().map(|r| r.levels).max().unwrap_or(0);
    for m in 1..=levels {
        write!(text, "{m}").unwrap();
        for r in reports {
            match r.pod_row(target, m) {
                Some(row) => write!(text, ",{}", row.k).unwrap(),
                None => text.push(','),
            }
        }
        text.push('\n');
    }
    text
}

pub fn load_summary(dir: &Path) -> Result<Vec<TauReport>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(
        dir.join(SUMMARY_FILE),
    )?)?)
}

/// Plain-text digest of analysis results.
pub fn render_report(reports: &[TauReport]) -> String {
    let mut t = String::new();
    for r in reports {
        writeln!(
            t,
            "tau = {} (campaign {}, M_max = {}, N = {}, L = {})",
            r.tau,
            r.config_hash.get(..12).unwrap_or(&r.config_hash),
            r.levels,
            r.n,
            r.nodes
        )
        .unwrap();
        if !r.residuals.is_empty() {
            writeln!(t, "  {:>3} {:>12} {:>12}", "M", "eps_R", "eps_E").unwrap();
            for row in &r.residuals {
                writeln!(
                    t,
                    "  {:>3} {:>12.4e} {:>12.4e}",
                    row.levels, row.eps_r, row.eps_e
                )
                .unwrap();
            }
        }
        if !r.ratio.is_empty() {
            writeln!(
                t,
                "  ratio band [{:.4}, {:.4}]",
                r.ratio_band.0, r.ratio_band.1
            )
            .unwrap();
            writeln!(
                t,
                "  {:>3} {:>8} {:>9} {:>9}",
                "M", "active", "in band", "with 5%"
            )
            .unwrap();
            for row in &r.ratio {
                writeln!(
                    t,
                    "  {:>3} {:>8} {:>8.2}% {:>8.2}%",
                    row.levels,
                    row.active,
                    100.0 * row.fraction,
                    100.0 * row.fraction_tol
                )
                .unwrap();
            }
        }
        if !r.sigma_max.is_empty() {
            let parts: Vec<String> = r
                .sigma_max
                .iter()
                .map(|(q, v)| format!("{q} {v:.3e}"))
                .collect();
            writeln!(t, "  max std: {}", parts.join(", ")).unwrap();
        }
        for w in &r.windows {
            writeln!(
                t,
                "  {} {}: mean {:.6e}, std {:.6e}",
                w.window, w.quantity, w.mean, w.std
            )
            .unwrap();
        }
        if !r.skipped_windows.is_empty() {
            writeln!(t, "  skipped windows: {}", r.skipped_windows.join(", ")).unwrap();
        }
    }
    if reports.iter().any(|r| !r.pod.is_empty()) {
        let refs: Vec<&TauReport> = reports.iter().collect();
        for target in PodTarget::ALL {
            writeln!(t, "K_0.95 for {}:", target.name()).unwrap();
            for line in k_table(&refs, target).lines() {
                writeln!(t, "  {line}").unwrap();
            }
        }
    }
    t
}

/// Re-hashes every artifact listed in `dir/index.json`; returns mismatching paths.
pub fn verify_index(dir: &Path) -> Result<Vec<String>> {
    let index: ArtifactIndex =
        serde_json::from_str(&std::fs::read_to_string(dir.join(INDEX_FILE))?)?;
    let mut bad = Vec::new();
    for a in &index.artifacts {
        let ok = std::fs::read(dir.join(&a.path))
            .map(|b| hex::encode(Sha256::digest(&b)) == a.sha256)
            .unwrap_or(false);
        if !ok {
            bad.push(a.path.clone());
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_parse() {
        assert_eq!(Stages::parse(&["all"]).unwrap(), Stages::all());
        let s = Stages::parse(&["pod", "hist"]).unwrap();
        assert!(s.pod && s.hist && !s.stats && !s.cesaro && !s.defects);
        assert!(Stages::parse(&["bogus"]).is_err());
    }

    fn mk(tau: f64, ks: &[usize]) -> TauReport {
        TauReport {
            tau,
            config_hash: String::new(),
            levels: ks.len(),
            n: 1,
            nodes: 1,
            ratio_band: (0.5, 1.25),
            ratio: Vec::new(),
            residuals: Vec::new(),
            sigma_max: BTreeMap::new(),
            windows: Vec::new(),
            skipped_windows: Vec::new(),
            pod: ks
                .iter()
                .enumerate()
                .map(|(i, &k)| PodRow {
                    target: PodTarget::RhoRaw,
                    level: i + 1,
                    k,
                    singular_values: Vec::new(),
                    modes: None,
                    snapshots: None,
                })
                .collect(),
            mean_fields: Vec::new(),
            std_fields: Vec::new(),
        }
    }

    #[test]
    fn k_table_layout() {
        let a = mk(0.0, &[0, 0]);
        let b = mk(1.1, &[3, 5]);
        let t = k_table(&[&a, &b], PodTarget::RhoRaw);
        assert_eq!(t, "m,tau=0,tau=1.1\n1,0,3\n2,0,5\n");
    }

    #[test]
    fn summary_round_trips_and_renders() {
        let mut r = mk(1.1, &[1, 2]);
        r.residuals = vec![Residual {
            levels: 1,
            eps_r: 0.25,
            eps_e: 0.125,
        }];
        r.sigma_max.insert("rho".into(), 0.5);
        let dir = tempfile::tempdir().unwrap();
        let index = write_outputs(&[r], Stages::all(), dir.path(), "h").unwrap();
        assert!(index.artifacts.iter().any(|a| a.path == "defects.csv"));
        assert!(verify_index(dir.path()).unwrap().is_empty());
        let back = load_summary(dir.path()).unwrap();
        assert_eq!(back.len(), 1);
        let text = render_report(&back);
        assert!(text.contains("2.5000e-1"), "{text}");
        assert!(text.contains("rho 5.000e-1"), "{text}");
        assert!(
            text.contains("K_0.95 for rho_raw:\n  m,tau=1.1\n  1,1\n  2,2\n"),
            "{text}"
        );
        std::fs::write(dir.path().join("defects.csv"), "tampered").unwrap();
        assert_eq!(
            verify_index(dir.path()).unwrap(),
            vec!["defects.csv".to_string()]
        );
    }
}
