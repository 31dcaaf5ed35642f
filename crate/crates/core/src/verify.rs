//! Built-in oracle suite. Each check carries the id of the acceptance
//! criterion it decides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    analyze_campaign, write_outputs, AnalysisOptions, ArtifactIndex, PodTarget, Stages, TauReport,
};
use crate::config::RunConfig;
use crate::cweno::{quadrature_moments, refine_1d, CwenoConfig, Density, PiecewisePoly};
use crate::diagnostics::{cesaro_from_projected, defect_fields, with_auxiliaries};
use crate::ensemble::{
    generate_coeffs, kh_initial_field, run_campaign, CachePolicy, Campaign, CampaignOptions,
    KhConfig,
};
use crate::error::{Error, Result};
use crate::gas::{entropy_from_rho_p, pressure_raw, prim_to_cons, GasParams, PrimitiveState};
use crate::mesh::{ConservedField, GridField, MeshHierarchy};
use crate::numeric::fitted_order;
use crate::pod::{k_at, pod_svd, pod_svd_with, SnapshotMatrix, SvdRoute};
use crate::solver::{advance, SolverConfig};

pub const CRITERIA: [&str; 9] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} {} {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Scratch directory for campaigns and analysis outputs.
    pub work_dir: PathBuf,
    /// Criteria to run; empty means all.
    pub only: Vec<String>,
    /// Worker count for the parallel rerun of the determinism check.
    pub parallel_workers: usize,
    /// Interpolation settings under test in the CWENO criterion.
    pub cweno: CwenoConfig,
}

impl VerifyOptions {
    pub fn new(work_dir: &Path) -> Self {
        Self {
            work_dir: work_dir.to_path_buf(),
            only: Vec::new(),
            parallel_workers: 8,
            cweno: CwenoConfig::default(),
        }
    }
}

/// Desk-scale KH campaign settings shared by the ensemble criteria.
pub fn desk_config(tau: f64) -> RunConfig {
    RunConfig {
        m0: 2,
        levels: 4,
        nodes: 9,
        tau: vec![tau],
        t_end: 1.0,
        ..RunConfig::default()
    }
}

/// Campaign, analysis and file outputs for one desk configuration.
pub struct DeskRun {
    pub report: TauReport,
    pub index: ArtifactIndex,
    pub dir: PathBuf,
}

pub fn desk_pipeline(rc: &RunConfig, dir: &Path, workers: usize) -> Result<DeskRun> {
    let tau = rc.tau[0];
    let coeffs = generate_coeffs(rc.seed);
    let campaign_dir = dir.join("campaign");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    run_campaign(
        &rc.campaign(tau),
        &coeffs,
        &campaign_dir,
        CampaignOptions {
            workers,
            cache: CachePolicy::Refresh,
        },
    )?;
    let campaign = Campaign::open(&campaign_dir)?;
    let opts = AnalysisOptions {
        cweno: rc.cweno(),
        ratio_threshold: rc.ratio_threshold,
        windows: rc.windows()?,
        keep_snapshots: true,
        ..AnalysisOptions::default()
    };
    let report = pool.install(|| analyze_campaign(&campaign, &opts))?;
    let out = dir.join("analysis");
    std::fs::create_dir_all(&out)?;
    let index = write_outputs(
        std::slice::from_ref(&report),
        Stages::all(),
        &out,
        &rc.hash()?,
    )?;
    Ok(DeskRun {
        report,
        index,
        dir: out,
    })
}

/// Eigenvalues of a symmetric matrix (row-major `n x n`) by cyclic Jacobi
/// rotations, sorted in decreasing order.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= 1e-30 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Largest `|s_j^2 - lambda_j|` over `lambda_1`, with `lambda` from the Gram
/// matrix of `s` by Jacobi rotations.
pub fn gram_oracle_error(s: &SnapshotMatrix, singular_values: &[f64]) -> f64 {
    let l = s.cols();
    let mut gram = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..l {
            gram[i * l + j] = (0..s.rows()).map(|r| s.data[(r, i)] * s.data[(r, j)]).sum();
        }
    }
    let ev = jacobi_eigenvalues(&gram, l);
    let top = ev[0].abs();
    if top == 0.0 {
        return singular_values.iter().fold(0.0, |m, v| m.max(v * v));
    }
    ev.iter()
        .zip(singular_values)
        .map(|(lam, sv)| (sv * sv - lam.max(0.0)).abs() / top)
        .fold(0.0, f64::max)
}

fn advected_density(n: usize, g: &GasParams) -> Result<ConservedField> {
    let mut err = None;
    let f = ConservedField::from_fn(1, n, |x, y| {
        let w = PrimitiveState::new(1.0 + 0.2 * (2.0 * PI * (x + y)).sin(), 1.0, 1.0, 1.0);
        match prim_to_cons(&w, g) {
            Ok(u) => u.to_array(),
            Err(e) => {
                err = Some(e);
                [f64::NAN; 4]
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(f),
    }
}

fn relative_drift(before: [f64; 4], after: [f64; 4]) -> f64 {
    before
        .iter()
        .zip(&after)
        .map(|(a, b)| (b - a).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}

struct A1Result {
    order: f64,
    errors: Vec<f64>,
    drift: f64,
}

fn run_a1() -> Result<A1Result> {
    let g = GasParams::default();
    let lambda = 1.0 + (g.gamma() / 0.8).sqrt();
    let mut hs = Vec::new();
    let mut errors = Vec::new();
    let mut drift: f64 = 0.0;
    for n in [32usize, 64, 128] {
        let h = 1.0 / n as f64;
        let init = advected_density(n, &g)?;
        let cfg = SolverConfig {
            t_end: 1.0,
            max_dt: Some(0.45 * (1.0 / 32.0) / lambda * (32.0 * h).powf(5.0 / 3.0)),
            ..SolverConfig::default()
        };
        let res = advance(&init, &g, &cfg)?;
        let err: f64 = res
            .conserved
            .cells
            .iter()
            .zip(&init.cells)
            .map(|(a, b)| (a[0] - b[0]).abs())
            .sum::<f64>()
            * h
            * h;
        drift = drift.max(relative_drift(init.totals(), res.conserved.totals()));
        hs.push(h);
        errors.push(err);
    }
    Ok(A1Result {
        order: fitted_order(&hs, &errors),
        errors,
        drift,
    })
}

fn kh_tau0_drift() -> Result<f64> {
    let g = GasParams::default();
    let hier = MeshHierarchy::new(2, 4)?;
    let kh = KhConfig {
        tau: 0.0,
        ..KhConfig::default()
    };
    let init = kh_initial_field(&hier, 4, 0.0, &generate_coeffs(1), &kh, &g)?;
    let res = advance(
        &init,
        &g,
        &SolverConfig {
            t_end: 1.0,
            ..SolverConfig::default()
        },
    )?;
    Ok(relative_drift(init.totals(), res.conserved.totals()))
}

fn uniform_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn run_a3(cfg: &CwenoConfig) -> Result<(bool, String)> {
    let x = uniform_nodes(-1.0, 1.0, 15);
    let poly = |v: f64| {
        0.5 - v + 2.0 * v.powi(2) - 0.3 * v.powi(3) + v.powi(4) - 0.7 * v.powi(5) + 1.5 * v.powi(6)
    };
    let y: Vec<f64> = x.iter().map(|v| poly(*v)).collect();
    let linear = CwenoConfig {
        mode: crate::cweno::CwenoMode::Linear,
        ..*cfg
    };
    let pp = PiecewisePoly::build(&x, &y, &linear)?;
    let mut sextic: f64 = 0.0;
    for i in 0..=600 {
        let v = -1.0 + 2.0 * i as f64 / 600.0;
        sextic = sextic.max((pp.eval(v)? - poly(v)).abs());
    }

    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [16usize, 32, 64, 128] {
        let coarse: Vec<f64> = (0..n)
            .map(|j| (2.0 * PI * j as f64 / n as f64).sin())
            .collect();
        let fine = refine_1d(&coarse, cfg)?;
        let err = (0..n)
            .map(|j| (fine[2 * j + 1] - (2.0 * PI * (j as f64 + 0.5) / n as f64).sin()).abs())
            .fold(0.0, f64::max);
        hs.push(1.0 / n as f64);
        errs.push(err);
    }
    let order = fitted_order(&hs, &errs);

    let mut overshoot: f64 = 0.0;
    for jump_at in [0.2, 0.37, 0.5, 0.81] {
        let x = uniform_nodes(0.0, 1.0, 41);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| if v < jump_at { 0.0 } else { 1.0 })
            .collect();
        let pp = PiecewisePoly::build(&x, &y, cfg)?;
        for i in 0..=2000 {
            let v = pp.eval(i as f64 / 2000.0)?;
            overshoot = overshoot.max(v - 1.0).max(-v);
        }
        let periodic: Vec<f64> = (0..40)
            .map(|j| {
                if (j as f64) / 40.0 < jump_at {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        for v in refine_1d(&periodic, cfg)? {
            overshoot = overshoot.max(v - 1.0).max(-v);
        }
    }
    let passed = sextic <= 1e-10 && order >= 6.5 && overshoot <= 0.05;
    Ok((
        passed,
        format!("sextic error {sextic:.2e}, sine order {order:.2}, step overshoot {overshoot:.2e} of jump"),
    ))
}

fn run_a4() -> Result<(bool, String)> {
    let x = uniform_nodes(-1.0, 1.0, 11);
    let mu = Density::Uniform { a: -1.0, b: 1.0 };
    let lin = CwenoConfig::linear();
    let y1: Vec<f64> = x.clone();
    let y2: Vec<f64> = x.iter().map(|v| v * v).collect();
    let (m1, s1) = quadrature_moments(&PiecewisePoly::build(&x, &y1, &lin)?, mu)?;
    let (m2, s2) = quadrature_moments(&PiecewisePoly::build(&x, &y2, &lin)?, mu)?;
    let e = [
        m1.abs(),
        (s1 - 1.0 / 3f64.sqrt()).abs(),
        (m2 - 1.0 / 3.0).abs(),
        (s2 - (4.0f64 / 45.0).sqrt()).abs(),
    ];
    let worst = e.iter().copied().fold(0.0, f64::max);
    Ok((
        worst <= 1e-12,
        format!("xi -> ({m1:.15}, {s1:.15}), xi^2 -> ({m2:.15}, {s2:.15}), max error {worst:.1e}"),
    ))
}

fn state_field(u: [f64; 4], g: &GasParams) -> Result<GridField> {
    let s = entropy_from_rho_p(u[0], pressure_raw(&u, g.gamma()), g);
    let f = GridField::new(1, 1)
        .with_component("rho", vec![u[0]])?
        .with_component("mx", vec![u[1]])?
        .with_component("my", vec![u[2]])?
        .with_component("S", vec![s])?;
    with_auxiliaries(&f, g)
}

/// Ratios of the kinetic pair `rho = 1, m = (+-1, 0)` and the density pair
/// `rho in {1, 3}, m = 0`, both at zero entropy.
fn synthetic_ratios() -> Result<(f64, f64)> {
    let g = GasParams::default();
    let energy = |rho: f64, m: f64| {
        let p = crate::gas::pressure_from_entropy(rho, 0.0, &g)?;
        Ok::<f64, Error>(g.c_v() * p + 0.5 * m * m / rho)
    };
    let kin = [
        [1.0, 1.0, 0.0, energy(1.0, 1.0)?],
        [1.0, -1.0, 0.0, energy(1.0, -1.0)?],
    ];
    let int = [
        [1.0, 0.0, 0.0, energy(1.0, 0.0)?],
        [3.0, 0.0, 0.0, energy(3.0, 0.0)?],
    ];
    let ratio = |pair: &[[f64; 4]; 2]| -> Result<f64> {
        let fields = vec![state_field(pair[0], &g)?, state_field(pair[1], &g)?];
        let d = defect_fields(&cesaro_from_projected(&fields)?, &g, 1e-10)?;
        Ok(d.ratio[0])
    };
    Ok((ratio(&kin)?, ratio(&int)?))
}

/// Largest defect magnitude of single-level averages over every xi.
fn single_level_defect(campaign: &Campaign) -> Result<f64> {
    let g = campaign.gas()?;
    let mut worst: f64 = 0.0;
    for l in 0..campaign.nodes() {
        let f = campaign.field(l, 1)?;
        let ces = cesaro_from_projected(&[with_auxiliaries(&f, &g)?])?;
        let d = defect_fields(&ces, &g, 1e-10)?;
        for v in d.tr.iter().chain(&d.edef).chain(&d.r12) {
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    fitted_order(x, y)
}

fn csv_values(dir: &Path, index: &ArtifactIndex) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for a in index.artifacts.iter().filter(|a| a.path.ends_with(".csv")) {
        let text = std::fs::read_to_string(dir.join(&a.path))?;
        out.insert(
            a.path.clone(),
            text.split(|c| c == ',' || c == '\n')
                .map(str::to_string)
                .collect(),
        );
    }
    Ok(out)
}

fn max_csv_difference(
    a: &BTreeMap<String, Vec<String>>,
    b: &BTreeMap<String, Vec<String>>,
) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (path, va) in a {
        let vb = b.get(path)?;
        if va.len() != vb.len() {
            return None;
        }
        for (x, y) in va.iter().zip(vb) {
            if x == y {
                continue;
            }
            let (Ok(p), Ok(q)) = (x.parse::<f64>(), y.parse::<f64>()) else {
                return None;
            };
            worst = worst.max((p - q).abs() / p.abs().max(q.abs()).max(1.0));
        }
    }
    Some(worst)
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> SnapshotMatrix {
    let mut rng = crate::ensemble::SplitMix64::new(seed);
    SnapshotMatrix {
        data: faer::Mat::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0)),
        tag: "random".into(),
    }
}

fn low_rank_matrix(rows: usize, cols: usize, rank: usize, seed: u64) -> SnapshotMatrix {
    let mut rng = crate::ensemble::SplitMix64::new(seed);
    let a = faer::Mat::from_fn(rows, rank, |_, _| rng.uniform(-1.0, 1.0));
    let b = faer::Mat::from_fn(rank, cols, |_, _| rng.uniform(-1.0, 1.0));
    SnapshotMatrix {
        data: &a * &b,
        tag: format!("rank{rank}"),
    }
}

/// Lazily built desk campaigns shared by several criteria.
struct Shared {
    work: PathBuf,
    parallel_workers: usize,
    desk: Option<Result<DeskRun>>,
    tau0: Option<Result<DeskRun>>,
}

impl Shared {
    fn desk(&mut self) -> std::result::Result<&DeskRun, String> {
        if self.desk.is_none() {
            let dir = self.work.join("desk_tau1.1_w1");
            self.desk = Some(desk_pipeline(&desk_config(1.1), &dir, 1));
        }
        self.desk
            .as_ref()
            .unwrap()
            .as_ref()
            .map_err(|e| e.to_string())
    }

    fn tau0(&mut self) -> std::result::Result<&DeskRun, String> {
        if self.tau0.is_none() {
            let dir = self.work.join("desk_tau0_w1");
            self.tau0 = Some(desk_pipeline(&desk_config(0.0), &dir, 1));
        }
        self.tau0
            .as_ref()
            .unwrap()
            .as_ref()
            .map_err(|e| e.to_string())
    }
}

fn check(
    id: &str,
    title: &str,
    f: impl FnOnce() -> std::result::Result<(bool, String), String>,
) -> Check {
    let t0 = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        id: id.to_string(),
        title: title.to_string(),
        passed,
        detail,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

fn e2s<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Reads the JSON summary written by [`run_verify`].
pub fn load_checks(path: &Path) -> Result<Vec<Check>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Runs the selected criteria in order; `on_check` sees each result as soon as
/// it is decided.
pub fn run_verify(opts: &VerifyOptions, mut on_check: impl FnMut(&Check)) -> Result<Vec<Check>> {
    std::fs::create_dir_all(&opts.work_dir)?;
    for id in &opts.only {
        if !CRITERIA.contains(&id.as_str()) {
            return Err(Error::Config(format!("unknown criterion {id}")));
        }
    }
    let wanted = |id: &str| opts.only.is_empty() || opts.only.iter().any(|o| o == id);
    let mut shared = Shared {
        work: opts.work_dir.clone(),
        parallel_workers: opts.parallel_workers,
        desk: None,
        tau0: None,
    };
    let mut a1: Option<std::result::Result<A1Result, String>> = None;
    let mut out = Vec::new();
    let mut push = |c: Check, out: &mut Vec<Check>| {
        on_check(&c);
        out.push(c);
    };

    let mut a1_seconds = 0.0;
    if wanted("A1") || wanted("A2") {
        let t0 = Instant::now();
        a1 = Some(e2s(run_a1()));
        a1_seconds = t0.elapsed().as_secs_f64();
    }
    if wanted("A1") {
        let mut c = check("A1", "solver order", || {
            let r = a1.as_ref().unwrap().as_ref().map_err(Clone::clone)?;
            Ok((
                (4.5..=5.5).contains(&r.order),
                format!(
                    "L1 order {:.3} from errors {:.3e}, {:.3e}, {:.3e}",
                    r.order, r.errors[0], r.errors[1], r.errors[2]
                ),
            ))
        });
        c.seconds += a1_seconds;
        push(c, &mut out);
    }
    if wanted("A2") {
        let c = check("A2", "conservation", || {
            let r = a1.as_ref().unwrap().as_ref().map_err(Clone::clone)?;
            let kh = e2s(kh_tau0_drift())?;
            Ok((
                r.drift <= 1e-11 && kh <= 1e-11,
                format!(
                    "relative drift {:.2e} (advection), {kh:.2e} (KH tau=0, N=56)",
                    r.drift
                ),
            ))
        });
        push(c, &mut out);
    }
    if wanted("A3") {
        push(
            check("A3", "CWENO order and exactness", || {
                e2s(run_a3(&opts.cweno))
            }),
            &mut out,
        );
    }
    if wanted("A4") {
        push(
            check("A4", "quadrature moments", || e2s(run_a4())),
            &mut out,
        );
    }
    if wanted("A5") {
        let c = check("A5", "defect ratio bound", || {
            let (lo, hi) = e2s(synthetic_ratios())?;
            let desk = shared.desk()?;
            let row = desk
                .report
                .ratio
                .iter()
                .find(|r| r.levels == 3)
                .ok_or("no M=3 row")?;
            let exact = (lo - 0.5).abs() <= 1e-12 && (hi - 1.25).abs() <= 1e-12;
            Ok((
                exact && row.fraction_tol >= 0.98,
                format!(
                    "synthetic ratios {lo:.15}, {hi:.15}; KH M=3: {:.2}% of {} nodes in band (exact band {:.2}%)",
                    100.0 * row.fraction_tol,
                    row.active,
                    100.0 * row.fraction
                ),
            ))
        });
        push(c, &mut out);
    }
    if wanted("A6") {
        let c = check("A6", "defect vanishing and degeneracy", || {
            let desk = shared.desk()?;
            let campaign = e2s(Campaign::open(&desk.dir.parent().unwrap().join("campaign")))?;
            let single = e2s(single_level_defect(&campaign))?;
            let tau0 = shared.tau0()?;
            let sigma = tau0.report.sigma_max.values().copied().fold(0.0, f64::max);
            let kmax = tau0.report.pod.iter().map(|r| r.k).max().unwrap_or(0);
            Ok((
                single <= 1e-12 && sigma <= 1e-12 && kmax == 0,
                format!("M=1 max |defect| {single:.1e}; tau=0 max sigma {sigma:.1e}, max K {kmax}"),
            ))
        });
        push(c, &mut out);
    }
    if wanted("A7") {
        let c = check("A7", "residual trend", || {
            let desk = shared.desk()?;
            let res = &desk.report.residuals;
            if res.len() < 4 {
                return Err(format!("need M_max >= 4, have {}", res.len()));
            }
            let decreasing = res[1].eps_r > res[2].eps_r && res[1].eps_e > res[2].eps_e;
            let body = &res[..res.len() - 1];
            let er: Vec<f64> = body.iter().map(|r| r.eps_r).collect();
            let ee: Vec<f64> = body.iter().map(|r| r.eps_e).collect();
            let slope = loglog_slope(&er, &ee);
            let table: Vec<String> = res
                .iter()
                .map(|r| format!("M={} ({:.3e}, {:.3e})", r.levels, r.eps_r, r.eps_e))
                .collect();
            Ok((
                decreasing && (0.7..=1.3).contains(&slope),
                format!("{}; slope {slope:.3}", table.join(", ")),
            ))
        });
        push(c, &mut out);
    }
    if wanted("A8") {
        let c = check("A8", "POD oracle and trends", || {
            let mut worst: f64 = 0.0;
            let mut matrices = vec![random_matrix(50, 8, 7), random_matrix(60, 12, 8)];
            let desk = shared.desk()?;
            matrices.extend(desk.report.pod.iter().filter_map(|r| r.snapshots.clone()));
            for s in &matrices {
                let r = e2s(pod_svd(s))?;
                let direct = e2s(pod_svd_with(s, SvdRoute::Direct))?;
                worst = worst
                    .max(gram_oracle_error(s, &r.singular_values))
                    .max(gram_oracle_error(s, &direct.singular_values));
            }
            let mut rank_ok = true;
            for rank in 1..=5 {
                let s = low_rank_matrix(80, 9, rank, 100 + rank as u64);
                for route in [SvdRoute::Gram, SvdRoute::Direct] {
                    rank_ok &= k_at(&e2s(pod_svd_with(&s, route))?, 1.0 - 1e-12) == rank;
                }
            }
            let k = |t: PodTarget, m: usize| desk.report.pod_row(t, m).map(|r| r.k);
            let raw: Vec<usize> = (1..=3).filter_map(|m| k(PodTarget::RhoRaw, m)).collect();
            let nondecreasing = raw.len() == 3 && raw.windows(2).all(|w| w[0] <= w[1]);
            let cesaro_fewer = (1..=desk.report.levels)
                .all(|m| matches!((k(PodTarget::RhoCesaro, m), k(PodTarget::RhoRaw, m)), (Some(a), Some(b)) if a <= b));
            let ces: Vec<usize> = (1..=desk.report.levels)
                .filter_map(|m| k(PodTarget::RhoCesaro, m))
                .collect();
            let raw_all: Vec<usize> = (1..=desk.report.levels)
                .filter_map(|m| k(PodTarget::RhoRaw, m))
                .collect();
            Ok((
                worst <= 1e-10 && rank_ok && nondecreasing && cesaro_fewer,
                format!(
                    "Gram oracle error {worst:.1e} over {} matrices; rank-k K exact: {rank_ok}; K_0.95 raw rho {raw_all:?}, Cesaro rho {ces:?}",
                    matrices.len()
                ),
            ))
        });
        push(c, &mut out);
    }
    if wanted("A9") {
        let c = check("A9", "determinism", || {
            let first = shared.desk()?;
            let (dir1, index1) = (first.dir.clone(), first.index.clone());
            let rc = desk_config(1.1);
            let again = e2s(desk_pipeline(
                &rc,
                &shared.work.join("desk_tau1.1_w1_rerun"),
                1,
            ))?;
            let hashes = |i: &ArtifactIndex| -> Vec<(String, String)> {
                i.artifacts
                    .iter()
                    .filter(|a| a.path.ends_with(".csv"))
                    .map(|a| (a.path.clone(), a.sha256.clone()))
                    .collect()
            };
            let identical = hashes(&index1) == hashes(&again.index);
            let w = shared.parallel_workers;
            let par = e2s(desk_pipeline(
                &rc,
                &shared.work.join(format!("desk_tau1.1_w{w}")),
                w,
            ))?;
            let a = e2s(csv_values(&dir1, &index1))?;
            let b = e2s(csv_values(&par.dir, &par.index))?;
            let diff = max_csv_difference(&a, &b);
            Ok((
                identical && diff.is_some_and(|d| d <= 1e-13),
                format!(
                    "{} CSV files; rerun with 1 worker hash-equal: {identical}; {w} workers max difference {}",
                    a.len(),
                    diff.map_or("structure differs".to_string(), |d| format!("{d:.1e}"))
                ),
            ))
        });
        push(c, &mut out);
    }
    let summary = serde_json::to_string_pretty(&out)?;
    std::fs::write(opts.work_dir.join("verify.json"), summary)?;
    Ok(out)
}
