use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rmt_cvm::ensembles::{sample_haar_unitary, sample_wigner};
use rmt_cvm::limitlaw::{self, constants, sample_cue_limit, sample_wigner_limit};
use rmt_cvm::montecarlo::{
    self, cue_covariance_reports, parse_key_values, power_trace_mean_reports, power_trace_samples,
    reproduce_figures, run_replica_map, run_replicas, verify_trace_moments, write_figure_bundle,
    write_moment_reports, write_stat_values, CovarianceCase, Ensemble, ExperimentConfig, FigureCase, FigureConfig,
    MomentReport,
};
use rmt_cvm::spectral::{eigenphases, eigenvalues};
use rmt_cvm::statistics::StatValue;

#[derive(Parser, Debug)]
#[command(name = "rmtgof", version, about = "Goodness-of-fit experiments for random-matrix spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample spectra (eigenvalues, or eigenphases for cue).
    Sample(Common),
    /// Evaluate a statistic on independent replicas.
    Stat {
        #[command(flatten)]
        common: Common,
        /// cvm, ks, mcvm, mcvm_partial or cue_cvm
        #[arg(long)]
        statistic: Option<String>,
    },
    /// Monte Carlo check of the Chebyshev trace moments.
    VerifyMoments {
        #[command(flatten)]
        common: Common,
        /// Largest degree checked.
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Monte Carlo check of Haar power-trace moments and covariances.
    VerifyCue {
        #[command(flatten)]
        common: Common,
        /// Largest power checked.
        #[arg(long, default_value_t = 16)]
        j: usize,
    },
    /// Centered N^2 A_N against the limit law, with density curves.
    ReproduceFig {
        #[command(flatten)]
        common: Common,
        /// gaussian or rademacher
        #[arg(long, default_value = "gaussian")]
        case: String,
    },
    /// Draws from the limit law (Wigner parameters, or cue).
    LimitSample(Common),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// goe, gue, gaussian, rademacher or cue
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    beta: Option<u32>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    c4: Option<f64>,
    /// Matrix dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Mesoscopic exponent, in (0, 1/3).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    truncation: Option<usize>,
    /// Output directory; nothing is written elsewhere.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A problem with the request itself rather than with the computation.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl Common {
    /// Config file entries overlaid with the flags that were given.
    fn merged(&self, statistic: Option<&str>) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))
                    .map_err(|e| usage(format!("{e:#}")))?;
                parse_key_values(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut set = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                map.insert(key.to_string(), v);
            }
        };
        set("ensemble", self.ensemble.clone());
        set("beta", self.beta.map(|v| v.to_string()));
        set("sigma2", self.sigma2.map(|v| v.to_string()));
        set("c4", self.c4.map(|v| v.to_string()));
        set("n", self.n.map(|v| v.to_string()));
        set("alpha", self.alpha.map(|v| v.to_string()));
        set("replicas", self.replicas.map(|v| v.to_string()));
        set("seed", self.seed.map(|v| v.to_string()));
        set("truncation", self.truncation.map(|v| v.to_string()));
        set("out", self.out.as_ref().map(|p| p.display().to_string()));
        set("statistic", statistic.map(str::to_string));
        Ok(map)
    }
}

fn get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| usage(format!("invalid value '{v}' for {key}"))))
        .transpose()
}

fn out_dir(map: &BTreeMap<String, String>) -> Option<PathBuf> {
    map.get("out").map(PathBuf::from)
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn print_reports(out: &mut impl Write, reports: &[MomentReport]) -> Result<()> {
    writeln!(out, "{}", MomentReport::CSV_HEADER)?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

fn sample(common: &Common) -> Result<()> {
    let cfg = ExperimentConfig::from_key_values(&common.merged(None)?)?;
    let rows = run_replica_map(cfg.replicas, cfg.master_seed, |seed| match &cfg.ensemble {
        Ensemble::Wigner(p) => Ok(eigenvalues(&sample_wigner(p, seed)?)?.values().to_vec()),
        Ensemble::Cue { n } => Ok(eigenphases(&sample_haar_unitary(*n, seed)?)?.phases().to_vec()),
    })?;
    let cmd = command_line();
    let write = |w: &mut dyn Write| -> Result<()> {
        for (i, values) in rows.iter().enumerate() {
            for v in values {
                writeln!(w, "{i},{v:.15e}")?;
            }
        }
        Ok(())
    };
    match &cfg.out_dir {
        Some(dir) => {
            let mut w = montecarlo::create_csv(dir, "spectra.csv", &cmd, "replica,value")?;
            write(&mut w)?;
            w.flush()?;
            println!("wrote {}", dir.join("spectra.csv").display());
        }
        None => {
            let mut w = io::stdout().lock();
            writeln!(w, "replica,value")?;
            write(&mut w)?;
        }
    }
    Ok(())
}

fn stat(common: &Common, statistic: Option<&str>) -> Result<()> {
    let cfg = ExperimentConfig::from_key_values(&common.merged(statistic)?)?;
    let values = run_replicas(&cfg)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{}", StatValue::CSV_HEADER)?;
    for v in &values {
        writeln!(stdout, "{}", v.csv_row())?;
    }
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        write_stat_values(std::fs::File::create(dir.join("stats.csv"))?, &command_line(), &values)?;
    }
    Ok(())
}

fn verify_moments(common: &Common, k: usize) -> Result<()> {
    let map = common.merged(None)?;
    let mut cfg_map = map.clone();
    cfg_map.entry("replicas".into()).or_insert_with(|| "10000".into());
    let cfg = ExperimentConfig::from_key_values(&cfg_map)?;
    let Ensemble::Wigner(p) = &cfg.ensemble else {
        return Err(usage("verify-moments needs a Wigner ensemble"));
    };
    let reports = verify_trace_moments(p, cfg.replicas, cfg.master_seed, k)?;
    print_reports(&mut io::stdout().lock(), &reports)?;
    if let Some(dir) = &cfg.out_dir {
        let path = dir.join("moments.csv");
        std::fs::create_dir_all(dir)?;
        write_moment_reports(std::fs::File::create(&path)?, &command_line(), &reports)?;
    }
    Ok(())
}

fn verify_cue(common: &Common, j: usize) -> Result<()> {
    let mut map = common.merged(None)?;
    match map.get("ensemble").map(String::as_str) {
        None | Some("cue") => {
            map.insert("ensemble".into(), "cue".into());
        }
        Some(other) => return Err(usage(format!("verify-cue needs the cue ensemble, got '{other}'"))),
    }
    let n: usize = get(&map, "n")?.unwrap_or(8);
    let replicas: u64 = get(&map, "replicas")?.unwrap_or(100_000);
    let seed: u64 = get(&map, "seed")?.unwrap_or(0);
    if n == 0 || j == 0 || j > 3 * n {
        return Err(usage(format!("verify-cue needs n >= 1 and 1 <= j <= 3n; got n = {n}, j = {j}")));
    }
    if replicas < 2 {
        return Err(usage("verify-cue needs at least 2 replicas"));
    }
    let samples = power_trace_samples(n, j, replicas, seed)?;
    let means = power_trace_mean_reports(&samples, n);
    let covs = cue_covariance_reports(&samples, n);

    let mut stdout = io::stdout().lock();
    writeln!(stdout, "case,pairs,max_abs_z,pass")?;
    for case in [CovarianceCase::Small, CovarianceCase::Overlapping, CovarianceCase::Beyond] {
        let tag = format!("({})", case.label());
        let rows: Vec<&MomentReport> = covs.iter().filter(|r| r.name.ends_with(&tag)).collect();
        let worst = rows.iter().map(|r| r.z.abs()).fold(0.0f64, f64::max);
        writeln!(stdout, "{},{},{worst:.3},{}", case.label(), rows.len(), !rows.is_empty() && worst <= 5.0)?;
    }
    writeln!(stdout)?;
    print_reports(&mut stdout, &means)?;

    if let Some(dir) = out_dir(&map) {
        std::fs::create_dir_all(&dir)?;
        let cmd = command_line();
        write_moment_reports(std::fs::File::create(dir.join("cue_covariances.csv"))?, &cmd, &covs)?;
        write_moment_reports(std::fs::File::create(dir.join("power_trace_means.csv"))?, &cmd, &means)?;
    }
    Ok(())
}

fn reproduce_fig(common: &Common, case: &str) -> Result<()> {
    let map = common.merged(None)?;
    let dir = out_dir(&map).ok_or_else(|| usage("reproduce-fig needs --out"))?;
    let case: FigureCase = case.parse()?;
    for key in ["ensemble", "beta", "sigma2", "c4", "alpha"] {
        if map.contains_key(key) {
            return Err(usage(format!("reproduce-fig takes --case instead of {key}")));
        }
    }
    let mut cfg = FigureConfig::new(
        case,
        get(&map, "n")?.unwrap_or(400),
        get(&map, "replicas")?.unwrap_or(6000),
        get(&map, "seed")?.unwrap_or(0),
    );
    if let Some(k) = get(&map, "truncation")? {
        cfg.truncation = k;
    }
    let report = reproduce_figures(&cfg)?;
    let files = write_figure_bundle(&report, &dir, &command_line())?;
    println!("{}", montecarlo::TwoSampleResult::CSV_HEADER);
    println!("{}", report.ks.csv_row());
    println!("{}", report.control_ks.csv_row());
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn limit_sample(common: &Common) -> Result<()> {
    let map = common.merged(None)?;
    let draws: u64 = get(&map, "replicas")?.unwrap_or(100_000);
    let truncation: usize = get(&map, "truncation")?.unwrap_or(limitlaw::DEFAULT_TRUNCATION);
    let seed: u64 = get(&map, "seed")?.unwrap_or(0);
    if draws == 0 {
        return Err(usage("replicas must be at least 1"));
    }
    let values = if map.get("ensemble").map(String::as_str) == Some("cue") {
        run_replica_map(draws, seed, |s| Ok(sample_cue_limit(truncation, s)?.value))?
    } else {
        let (beta, sigma2, c4) = match map.get("ensemble") {
            Some(name) => {
                let n = get(&map, "n")?.unwrap_or(1);
                let Ensemble::Wigner(p) = Ensemble::from_name(name, n, get(&map, "beta")?)? else {
                    unreachable!("cue handled above");
                };
                if get::<f64>(&map, "sigma2")?.is_some_and(|s| s != p.sigma2)
                    || get::<f64>(&map, "c4")?.is_some_and(|c| c != p.c4)
                {
                    return Err(usage(format!("ensemble '{name}' fixes sigma2 and c4")));
                }
                (p.beta() as u32, p.sigma2, p.c4)
            }
            None => {
                let beta: u32 = get(&map, "beta")?.unwrap_or(1);
                let gaussian = 3.0 - beta as f64;
                (beta, get(&map, "sigma2")?.unwrap_or(gaussian), get(&map, "c4")?.unwrap_or(0.0))
            }
        };
        let c = constants(beta, sigma2, c4)?;
        run_replica_map(draws, seed, |s| Ok(sample_wigner_limit(&c, truncation, s)?.value))?
    };
    match out_dir(&map) {
        Some(dir) => {
            let cmd = command_line();
            let path = montecarlo::write_samples(&dir, "limit_samples.csv", &cmd, &values)?;
            println!("wrote {}", path.display());
            if values.len() >= 2 {
                let kde_path = montecarlo::write_kde(&dir, "kde_limit.csv", &cmd, &limitlaw::kde(&values, 512)?)?;
                println!("wrote {}", kde_path.display());
            }
        }
        None => {
            let mut w = io::stdout().lock();
            writeln!(w, "replica,value")?;
            for (i, v) in values.iter().enumerate() {
                writeln!(w, "{i},{v:.12e}")?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Sample(c) => sample(c),
        Command::Stat { common, statistic } => stat(common, statistic.as_deref()),
        Command::VerifyMoments { common, k } => verify_moments(common, *k),
        Command::VerifyCue { common, j } => verify_cue(common, *j),
        Command::ReproduceFig { common, case } => reproduce_fig(common, case),
        Command::LimitSample(c) => limit_sample(c),
    }
}

/// 1 for malformed requests, 2 for failures during the computation.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<rmt_cvm::Error>().map(rmt_cvm::Error::innermost) {
        Some(rmt_cvm::Error::InvalidParameter(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            if code == 1 {
                eprintln!("\nRun `rmtgof --help` for usage.");
            }
            ExitCode::from(code)
        }
    }
}
