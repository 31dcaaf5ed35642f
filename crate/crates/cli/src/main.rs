use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use khe_core::analysis::{
    analyze_campaign, load_summary, render_report, verify_index, write_outputs, AnalysisOptions,
    Stages,
};
use khe_core::config::RunConfig;
use khe_core::cweno::CwenoMode;
use khe_core::ensemble::{
    generate_coeffs, run_campaign, CachePolicy, Campaign, CampaignOptions, Manifest,
    PerturbationCoeffs,
};
use khe_core::verify::{run_verify, VerifyOptions};
use khe_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "khe",
    version,
    about = "Stochastic-collocation Kelvin-Helmholtz ensembles"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Interface amplitude(s); comma-separated for a sweep.
    #[arg(long, value_delimiter = ',')]
    tau: Vec<f64>,
    /// Collocation node count L.
    #[arg(long = "nodes", short = 'L')]
    nodes: Option<usize>,
    /// Number of mesh levels M.
    #[arg(long = "levels", short = 'M')]
    levels: Option<usize>,
    #[arg(long)]
    m0: Option<u32>,
    /// Final time T.
    #[arg(long = "t-end", short = 'T')]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Perturbation-coefficient file.
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Output root for analysis artifacts.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Campaign cache root.
    #[arg(long, env = "KHE_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Recompute runs already present in the cache.
    #[arg(long)]
    refresh: bool,
    #[arg(long, value_parser = parse_mode)]
    cweno_mode: Option<CwenoMode>,
}

fn parse_mode(s: &str) -> Result<CwenoMode, String> {
    match s {
        "nonlinear" => Ok(CwenoMode::Nonlinear),
        "linear" => Ok(CwenoMode::Linear),
        _ => Err(format!("expected linear or nonlinear, got {s}")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the perturbation-coefficient file.
    Coeffs {
        /// Destination (default: the configured coefficient path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace an existing file.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run (or resume) the campaign for every tau.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Analyze finished campaigns and write CSV and field artifacts.
    Analyze {
        /// Stages to run: cesaro, stats, defects, hist, pod or all.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        stages: Vec<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the built-in oracle suite.
    Verify {
        /// Criteria to run, e.g. A1,A3 (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Scratch directory (default: <output>/verify).
        #[arg(long)]
        work_dir: Option<PathBuf>,
        /// Worker count for the parallel determinism rerun.
        #[arg(long, default_value_t = 8)]
        parallel_workers: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check artifact hashes and summarize analysis results.
    Report {
        /// Analysis directory (default: <output>/analysis).
        #[arg(long)]
        dir: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

enum Failure {
    Config(String),
    Partial(String),
    Verify(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Other(_) => 1,
            Self::Config(_) => 2,
            Self::Partial(_) => 3,
            Self::Verify(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Partial(m) | Self::Verify(m) | Self::Other(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Self::Config(e.to_string()),
            Error::PartialCampaign { .. } => Self::Partial(e.to_string()),
            _ => Self::Other(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn load_config(
    path: Option<&Path>,
    o: &Overrides,
    workers: Option<usize>,
) -> Result<RunConfig, Failure> {
    let mut rc = match path {
        Some(p) => {
            RunConfig::load(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if !o.tau.is_empty() {
        rc.tau = o.tau.clone();
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = o.$field.clone() { rc.$field = v; })* };
    }
    set!(nodes, levels, m0, t_end, seed, cfl, gamma, coeffs, output, cweno_mode);
    if o.cache_dir.is_some() {
        rc.cache_dir = o.cache_dir.clone();
    }
    if o.refresh {
        rc.cache = CachePolicy::Refresh;
    }
    if let Some(w) = workers {
        rc.workers = w;
    }
    rc.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(rc)
}

fn worker_count(rc: &RunConfig) -> usize {
    match rc.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        w => w,
    }
}

fn cmd_coeffs(rc: &RunConfig, out: Option<PathBuf>, force: bool) -> CliResult {
    let path = out.unwrap_or_else(|| rc.coeffs.clone());
    let coeffs = generate_coeffs(rc.seed);
    coeffs.save(&path, force)?;
    println!(
        "wrote {} (seed {}, sha256 {})",
        path.display(),
        rc.seed,
        coeffs.hash()
    );
    Ok(())
}

fn load_coeffs(rc: &RunConfig) -> Result<PerturbationCoeffs, Failure> {
    PerturbationCoeffs::load(&rc.coeffs).map_err(|e| {
        Failure::Config(format!(
            "cannot read coefficient file {} ({e}); create it with `khe coeffs`",
            rc.coeffs.display()
        ))
    })
}

fn cmd_run(rc: &RunConfig) -> CliResult {
    let coeffs = load_coeffs(rc)?;
    let opts = CampaignOptions {
        workers: worker_count(rc),
        cache: rc.cache,
    };
    let mut partial = Vec::new();
    for &tau in &rc.tau {
        let dir = rc.campaign_dir(tau);
        match run_campaign(&rc.campaign(tau), &coeffs, &dir, opts) {
            Ok(m) => println!(
                "tau = {tau}: {} runs sealed in {}",
                m.records.len(),
                dir.display()
            ),
            Err(Error::PartialCampaign { runs }) => {
                eprintln!("tau = {tau}: {} runs failed or missing", runs.len());
                if let Ok(m) = Manifest::load(&dir) {
                    for r in m.records.iter().filter(|r| r.error.is_some()) {
                        eprintln!(
                            "  xi[{}] = {} level {}: {}",
                            r.xi_index,
                            r.xi,
                            r.level,
                            r.error.as_deref().unwrap_or_default()
                        );
                    }
                }
                partial.push(tau);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if partial.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(format!(
            "incomplete campaigns for tau = {partial:?}; rerun to resume"
        )))
    }
}

fn cmd_analyze(rc: &RunConfig, stages: &[String]) -> CliResult {
    rc.validate_for_analysis()?;
    let stages = Stages::parse(stages)?;
    let opts = AnalysisOptions {
        cweno: rc.cweno(),
        ratio_threshold: rc.ratio_threshold,
        windows: rc.windows()?,
        stages,
        ..AnalysisOptions::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(rc))
        .build()
        .map_err(|e| Failure::Other(e.to_string()))?;
    let mut reports = Vec::new();
    for &tau in &rc.tau {
        let campaign = Campaign::open(&rc.campaign_dir(tau)).map_err(|e| match e {
            Error::Io(io) => Failure::Partial(format!(
                "no campaign for tau = {tau} in {} ({io}); run `khe run` first",
                rc.campaign_dir(tau).display()
            )),
            other => other.into(),
        })?;
        reports.push(pool.install(|| analyze_campaign(&campaign, &opts))?);
    }
    let dir = rc.analysis_dir();
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    let index = write_outputs(&reports, stages, &dir, &rc.hash()?)?;
    println!("{} artifacts in {}", index.artifacts.len(), dir.display());
    Ok(())
}

fn cmd_verify(
    rc: &RunConfig,
    only: Vec<String>,
    work_dir: Option<PathBuf>,
    parallel_workers: usize,
) -> CliResult {
    let mut opts = VerifyOptions::new(&work_dir.unwrap_or_else(|| rc.output.join("verify")));
    opts.only = only;
    opts.parallel_workers = parallel_workers;
    opts.cweno = rc.cweno();
    let checks = run_verify(&opts, |c| println!("{}", c.line()))?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.id.as_str())
        .collect();
    println!("summary: {}", opts.work_dir.join("verify.json").display());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!(
            "failed criteria: {}",
            failed.join(", ")
        )))
    }
}

fn cmd_report(rc: &RunConfig, dir: Option<PathBuf>) -> CliResult {
    let dir = dir.unwrap_or_else(|| rc.analysis_dir());
    if !dir.join(khe_core::analysis::INDEX_FILE).exists() {
        return Err(Failure::Config(format!(
            "no analysis index in {}; run `khe analyze` first",
            dir.display()
        )));
    }
    let bad = verify_index(&dir)?;
    let reports = load_summary(&dir)?;
    print!("{}", render_report(&reports));
    if bad.is_empty() {
        println!(
            "all artifacts match {}",
            dir.join(khe_core::analysis::INDEX_FILE).display()
        );
        Ok(())
    } else {
        Err(Failure::Verify(format!(
            "artifacts differ from the index: {}",
            bad.join(", ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let cfg = cli.config.as_deref();
    let outcome = match cli.command {
        Command::Coeffs {
            out,
            force,
            overrides,
        } => load_config(cfg, &overrides, cli.workers).and_then(|rc| cmd_coeffs(&rc, out, force)),
        Command::Run { overrides } => {
            load_config(cfg, &overrides, cli.workers).and_then(|rc| cmd_run(&rc))
        }
        Command::Analyze { stages, overrides } => {
            load_config(cfg, &overrides, cli.workers).and_then(|rc| cmd_analyze(&rc, &stages))
        }
        Command::Verify {
            only,
            work_dir,
            parallel_workers,
            overrides,
        } => load_config(cfg, &overrides, cli.workers)
            .and_then(|rc| cmd_verify(&rc, only, work_dir, parallel_workers)),
        Command::Report { dir, overrides } => {
            load_config(cfg, &overrides, cli.workers).and_then(|rc| cmd_report(&rc, dir))
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = std::env::temp_dir().join(format!("khe-cli-unit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "levels = 2\nnodes = 9\nseed = 5\n").unwrap();
        let o = Overrides {
            nodes: Some(11),
            tau: vec![0.0, 0.5],
            refresh: true,
            ..Overrides::default()
        };
        let rc = load_config(Some(&path), &o, Some(3)).ok().unwrap();
        assert_eq!((rc.levels, rc.nodes, rc.seed, rc.workers), (2, 11, 5, 3));
        assert_eq!(rc.tau, vec![0.0, 0.5]);
        assert_eq!(rc.cache, CachePolicy::Refresh);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn errors_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::Config("x".into())).code(), 2);
        assert_eq!(
            Failure::from(Error::PartialCampaign { runs: vec![(0, 1)] }).code(),
            3
        );
        assert_eq!(Failure::from(Error::NonUniform).code(), 1);
        let bad = Overrides {
            cfl: Some(1.5),
            ..Overrides::default()
        };
        assert!(matches!(
            load_config(None, &bad, None),
            Err(Failure::Config(_))
        ));
    }

    #[test]
    fn cweno_modes_parse() {
        assert_eq!(parse_mode("linear").unwrap(), CwenoMode::Linear);
        assert!(parse_mode("cubic").is_err());
    }

    #[test]
    fn argument_definitions_are_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
