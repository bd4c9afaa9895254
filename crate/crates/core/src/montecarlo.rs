//! Reproducible replica fan-out, moment reports with standard errors,
//! two-sample Kolmogorov–Smirnov comparisons and the figure experiments.
//!
//! Replica `i` of a run with master seed `m` always uses `SeedSpec::new(m, i)`,
//! and results are collected in replica order, so output does not depend on
//! the number of worker threads.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::chebyshev::{traces, traces_unclipped};
use crate::ensembles::{
    sample_deformed_wigner, sample_haar_unitary, sample_wigner, EnsembleParams, SeedSpec, Symmetry,
};
use crate::limitlaw::{self, centering_shift, constants, sample_wigner_limit, LimitLawConstants};
use crate::smoothing::MesoscopicScale;
use crate::spectral::{eigenphases, eigenvalues};
use crate::statistics::{
    cue_cvm_exact, cue_cvm_series, cvm_exact, ks_statistic, mcvm_partial_sum, mcvm_series, power_traces, StatKind,
    StatValue,
};
use crate::summation::compensated_sum;
use crate::{Error, Result};

/// Evaluates `f` for replicas `0..replicas` in parallel and returns the
/// results in replica order.
///
/// After the first failure no new replicas start; the error of the
/// lowest-indexed failed replica is returned with its index attached.
pub fn run_replica_map<T, F>(replicas: u64, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SeedSpec) -> Result<T> + Sync,
{
    let failed = AtomicBool::new(false);
    let results: Vec<Option<Result<T>>> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            if failed.load(Ordering::Relaxed) {
                return None;
            }
            let r = f(SeedSpec::new(master_seed, i));
            if r.is_err() {
                failed.store(true, Ordering::Relaxed);
            }
            Some(r)
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Some(Ok(v)) => out.push(v),
            Some(Err(e)) => {
                return Err(Error::Replica {
                    index: i as u64,
                    source: Box::new(e),
                })
            }
            None => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub enum Ensemble {
    Wigner(EnsembleParams),
    /// Haar-distributed unitary matrices.
    Cue { n: usize },
}

impl Ensemble {
    pub fn n(&self) -> usize {
        match self {
            Ensemble::Wigner(p) => p.n,
            Ensemble::Cue { n } => *n,
        }
    }

    /// Builds an ensemble by name: `goe`, `gue`, `gaussian` (needs `beta`),
    /// `rademacher` or `cue`.
    pub fn from_name(name: &str, n: usize, beta: Option<u32>) -> Result<Self> {
        let check_beta = |expected: u32| match beta {
            Some(b) if b != expected => Err(Error::invalid(format!(
                "ensemble '{name}' has beta = {expected}, but beta = {b} was requested"
            ))),
            _ => Ok(()),
        };
        match name {
            "goe" => {
                check_beta(1)?;
                Ok(Ensemble::Wigner(EnsembleParams::goe(n)?))
            }
            "gue" => {
                check_beta(2)?;
                Ok(Ensemble::Wigner(EnsembleParams::gue(n)?))
            }
            "gaussian" => {
                let b = beta.ok_or_else(|| Error::invalid("the gaussian ensemble needs beta = 1 or 2"))?;
                Ok(Ensemble::Wigner(EnsembleParams::gaussian(Symmetry::from_beta(b)?, n)?))
            }
            "rademacher" => {
                check_beta(1)?;
                Ok(Ensemble::Wigner(EnsembleParams::rademacher(n)?))
            }
            "cue" => {
                check_beta(2)?;
                if n == 0 {
                    return Err(Error::invalid("matrix dimension must be at least 1"));
                }
                Ok(Ensemble::Cue { n })
            }
            other => Err(Error::invalid(format!(
                "unknown ensemble '{other}' (expected goe, gue, gaussian, rademacher or cue)"
            ))),
        }
    }
}

/// One replicated statistic evaluation.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub ensemble: Ensemble,
    pub alpha: Option<f64>,
    pub replicas: u64,
    pub master_seed: u64,
    pub statistic: StatKind,
    /// Series length: the number of partial-sum terms for `mcvm_partial`,
    /// the number of powers for `cue_cvm` (the exact form is used if unset).
    pub truncation: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

const CONFIG_KEYS: [&str; 11] = [
    "ensemble", "n", "beta", "sigma2", "c4", "alpha", "replicas", "seed", "statistic", "truncation", "out",
];

/// Parses flat `key = value` text; `#` starts a comment line.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("config line {}: expected key = value", lineno + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() {
            return Err(Error::invalid(format!("config line {}: empty key", lineno + 1)));
        }
        if map.insert(k.clone(), v).is_some() {
            return Err(Error::invalid(format!("config line {}: duplicate key '{k}'", lineno + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::invalid(format!("invalid value '{v}' for {key}")))
        })
        .transpose()
}

impl ExperimentConfig {
    /// Builds and validates a config from `key = value` pairs.
    pub fn from_key_values(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::invalid(format!("unknown config key '{k}'")));
        }
        let name = map.get("ensemble").map(String::as_str).unwrap_or("goe");
        let n: usize = parse_value(map, "n")?.ok_or_else(|| Error::invalid("the dimension n is required"))?;
        let ensemble = Ensemble::from_name(name, n, parse_value(map, "beta")?)?;
        if let Ensemble::Wigner(p) = &ensemble {
            if let Some(s) = parse_value::<f64>(map, "sigma2")? {
                if s != p.sigma2 {
                    return Err(Error::invalid(format!(
                        "ensemble '{name}' fixes sigma2 = {}, got {s}",
                        p.sigma2
                    )));
                }
            }
            if let Some(c) = parse_value::<f64>(map, "c4")? {
                if c != p.c4 {
                    return Err(Error::invalid(format!("ensemble '{name}' fixes c4 = {}, got {c}", p.c4)));
                }
            }
        }
        let default_stat = if matches!(ensemble, Ensemble::Cue { .. }) { "cue_cvm" } else { "cvm" };
        let cfg = Self {
            ensemble,
            alpha: parse_value(map, "alpha")?,
            replicas: parse_value(map, "replicas")?.unwrap_or(1),
            master_seed: parse_value(map, "seed")?.unwrap_or(0),
            statistic: map.get("statistic").map(String::as_str).unwrap_or(default_stat).parse()?,
            truncation: parse_value(map, "truncation")?,
            out_dir: map.get("out").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::invalid("replicas must be at least 1"));
        }
        let cue = matches!(self.ensemble, Ensemble::Cue { .. });
        if cue != (self.statistic == StatKind::CueCvm) {
            return Err(Error::invalid(format!(
                "statistic '{}' is not available for this ensemble; cue_cvm requires the unitary ensemble and vice versa",
                self.statistic
            )));
        }
        if matches!(self.statistic, StatKind::Mcvm | StatKind::McvmPartial) {
            let alpha = self
                .alpha
                .ok_or_else(|| Error::invalid("the mesoscopic statistics need alpha in (0, 1/3)"))?;
            MesoscopicScale::new(alpha, self.ensemble.n())?;
        }
        if self.truncation == Some(0) {
            return Err(Error::invalid("truncation must be at least 1"));
        }
        Ok(())
    }

    fn scale(&self) -> Result<MesoscopicScale> {
        let alpha = self.alpha.ok_or_else(|| Error::invalid("alpha is required"))?;
        MesoscopicScale::new(alpha, self.ensemble.n())
    }
}

/// The configured statistic for one replica.
pub fn evaluate_replica(cfg: &ExperimentConfig, seed: SeedSpec) -> Result<StatValue> {
    let value = match &cfg.ensemble {
        Ensemble::Wigner(p) => {
            let s = eigenvalues(&sample_wigner(p, seed)?)?;
            match cfg.statistic {
                StatKind::Cvm => cvm_exact(&s),
                StatKind::Ks => ks_statistic(&s),
                StatKind::Mcvm => {
                    let scale = cfg.scale()?;
                    mcvm_series(&scale, &traces(&s.clipped(), scale.n_omega() + 2)?)?
                }
                StatKind::McvmPartial => {
                    let scale = cfg.scale()?;
                    let terms = cfg.truncation.unwrap_or(crate::statistics::partial_sum_max_terms(p.n));
                    mcvm_partial_sum(&scale, &traces_unclipped(&s, terms + 2)?, Some(terms))?
                }
                StatKind::CueCvm => return Err(Error::invalid("cue_cvm needs the unitary ensemble")),
            }
        }
        Ensemble::Cue { n } => {
            if cfg.statistic != StatKind::CueCvm {
                return Err(Error::invalid(format!("{} needs a Wigner ensemble", cfg.statistic)));
            }
            let phases = eigenphases(&sample_haar_unitary(*n, seed)?)?;
            match cfg.truncation {
                Some(j) => cue_cvm_series(&power_traces(&phases, j)?),
                None => cue_cvm_exact(&phases),
            }
        }
    };
    Ok(value.with_seed(seed))
}

/// All replicas of the configured experiment, in replica order.
pub fn run_replicas(cfg: &ExperimentConfig) -> Result<Vec<StatValue>> {
    cfg.validate()?;
    run_replica_map(cfg.replicas, cfg.master_seed, |seed| evaluate_replica(cfg, seed))
}

/// A Monte Carlo estimate compared with its analytic target.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
    pub z: f64,
}

impl MomentReport {
    pub const CSV_HEADER: &'static str = "name,estimate,se,target,z";

    fn new(name: String, estimate: f64, se: f64, target: f64) -> Self {
        let z = if se > 0.0 {
            (estimate - target) / se
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            name,
            estimate,
            se,
            target,
            z,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.10e},{:.10e},{:.10e},{:.4}",
            self.name, self.estimate, self.se, self.target, self.z
        )
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

fn central_moment(xs: &[f64], center: f64, p: i32) -> f64 {
    compensated_sum(xs.iter().map(|x| (x - center).powi(p))) / xs.len() as f64
}

/// Sample mean with standard error `s / sqrt(n)`.
pub fn mean_report(name: impl Into<String>, xs: &[f64], target: f64) -> MomentReport {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = if xs.len() > 1 {
        central_moment(xs, m, 2) * n / (n - 1.0)
    } else {
        0.0
    };
    MomentReport::new(name.into(), m, (var / n).sqrt(), target)
}

/// Unbiased sample variance with standard error `sqrt((m4 - m2^2)/n)`.
pub fn variance_report(name: impl Into<String>, xs: &[f64], target: f64) -> MomentReport {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = central_moment(xs, m, 2);
    let m4 = central_moment(xs, m, 4);
    let est = if xs.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    MomentReport::new(name.into(), est, ((m4 - m2 * m2).max(0.0) / n).sqrt(), target)
}

/// Sample covariance with the standard error of the mean of centered products.
pub fn covariance_report(name: impl Into<String>, xs: &[f64], ys: &[f64], target: f64) -> MomentReport {
    assert_eq!(xs.len(), ys.len(), "covariance needs paired samples");
    let n = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let products: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let mp = mean(&products);
    let est = if xs.len() > 1 { mp * n / (n - 1.0) } else { 0.0 };
    let sp = central_moment(&products, mp, 2);
    MomentReport::new(name.into(), est, (sp / n).sqrt(), target)
}

/// Limiting mean of `g_k = N t_k(H)`.
pub fn trace_mean_target(p: &EnsembleParams, k: usize) -> f64 {
    let beta = p.beta();
    let even = if k % 2 == 0 { 2.0 } else { 0.0 };
    (2.0 - beta) / 4.0 * even
        + if k == 2 { 0.5 * (p.sigma2 + beta - 3.0) } else { 0.0 }
        + if k == 4 { 8.0 * p.c4 } else { 0.0 }
}

/// Limiting variance of `g_k = N t_k(H)`.
pub fn trace_variance_target(p: &EnsembleParams, k: usize) -> f64 {
    let beta = p.beta();
    0.25 * ((3.0 - beta) * k as f64
        + if k == 1 { p.sigma2 + beta - 3.0 } else { 0.0 }
        + if k == 2 { 32.0 * p.c4 } else { 0.0 })
}

/// Leading-order `E t_k^2 = (Var g_k + (E g_k)^2) / N^2`.
pub fn trace_square_target(p: &EnsembleParams, k: usize) -> f64 {
    let n2 = (p.n as f64).powi(2);
    (trace_variance_target(p, k) + trace_mean_target(p, k).powi(2)) / n2
}

/// Leading-order `E t_k t_{k+2} = E g_k E g_{k+2} / N^2`.
pub fn trace_product_target(p: &EnsembleParams, k: usize) -> f64 {
    trace_mean_target(p, k) * trace_mean_target(p, k + 2) / (p.n as f64).powi(2)
}

/// Unclipped traces `(t_1, ..., t_K)` for each replica.
pub fn trace_samples(p: &EnsembleParams, replicas: u64, master_seed: u64, max_degree: usize) -> Result<Vec<Vec<f64>>> {
    run_replica_map(replicas, master_seed, |seed| {
        let s = eigenvalues(&sample_wigner(p, seed)?)?;
        Ok(traces_unclipped(&s, max_degree)?.as_slice().to_vec())
    })
}

/// Monte Carlo check of the trace moments for `k = 1..=K`: mean and
/// variance of `N t_k`, and `E t_k^2`, `E t_k t_{k+2}`.
///
/// Refuses `K > 4 N^{1/3}`, beyond which the targets are not expected to hold.
pub fn verify_trace_moments(
    p: &EnsembleParams,
    replicas: u64,
    master_seed: u64,
    max_degree: usize,
) -> Result<Vec<MomentReport>> {
    let limit = 4.0 * (p.n as f64).cbrt();
    if max_degree == 0 || max_degree as f64 > limit {
        return Err(Error::invalid(format!(
            "degree must lie in 1..={} (4 N^(1/3)) at N = {}",
            limit.floor(),
            p.n
        )));
    }
    if replicas < 2 {
        return Err(Error::invalid("moment checks need at least 2 replicas"));
    }
    let samples = trace_samples(p, replicas, master_seed, max_degree + 2)?;
    let nf = p.n as f64;
    let column = |k: usize| samples.iter().map(|t| t[k - 1]).collect::<Vec<f64>>();
    let mut out = Vec::with_capacity(4 * max_degree);
    for k in 1..=max_degree {
        let t = column(k);
        let t2 = column(k + 2);
        let g: Vec<f64> = t.iter().map(|x| nf * x).collect();
        out.push(mean_report(format!("E g_{k}"), &g, trace_mean_target(p, k)));
        out.push(variance_report(format!("Var g_{k}"), &g, trace_variance_target(p, k)));
        let sq: Vec<f64> = t.iter().map(|x| x * x).collect();
        out.push(mean_report(format!("E t_{k}^2"), &sq, trace_square_target(p, k)));
        let prod: Vec<f64> = t.iter().zip(&t2).map(|(a, b)| a * b).collect();
        out.push(mean_report(format!("E t_{k} t_{}", k + 2), &prod, trace_product_target(p, k)));
    }
    Ok(out)
}

/// Which branch of the covariance formula for `|Tr U^j|^2, |Tr U^k|^2` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceCase {
    /// `j + k <= N`
    Small,
    /// `j + k > N` with `j, k <= N`
    Overlapping,
    /// `j > N` or `k > N`
    Beyond,
}

impl CovarianceCase {
    pub fn label(self) -> &'static str {
        match self {
            CovarianceCase::Small => "j+k<=N",
            CovarianceCase::Overlapping => "j+k>N",
            CovarianceCase::Beyond => "j or k>N",
        }
    }
}

/// `Cov(|Tr U^j|^2, |Tr U^k|^2)` for Haar `U` of size `N`.
pub fn cue_covariance_target(n: usize, j: usize, k: usize) -> (f64, CovarianceCase) {
    let (nf, jf, kf) = (n as f64, j as f64, k as f64);
    let delta = if j == k { 1.0 } else { 0.0 };
    if j > n || k > n {
        let gap = (nf - (kf - jf).abs()).max(0.0);
        (nf * nf * delta - gap, CovarianceCase::Beyond)
    } else if j + k <= n {
        (jf * jf * delta, CovarianceCase::Small)
    } else {
        (jf * jf * delta + nf - jf - kf, CovarianceCase::Overlapping)
    }
}

/// `|Tr U^j|^2` for `j = 1..=J`, one row per replica.
pub fn power_trace_samples(n: usize, max_power: usize, replicas: u64, master_seed: u64) -> Result<Vec<Vec<f64>>> {
    run_replica_map(replicas, master_seed, |seed| {
        let phases = eigenphases(&sample_haar_unitary(n, seed)?)?;
        Ok(power_traces(&phases, max_power)?
            .as_slice()
            .iter()
            .map(|z| z.norm_sqr())
            .collect())
    })
}

/// `E |Tr U^j|^2` against `min(j, N)`.
pub fn power_trace_mean_reports(samples: &[Vec<f64>], n: usize) -> Vec<MomentReport> {
    let max_power = samples.first().map_or(0, Vec::len);
    (1..=max_power)
        .map(|j| {
            let col: Vec<f64> = samples.iter().map(|r| r[j - 1]).collect();
            mean_report(format!("E|Tr U^{j}|^2"), &col, j.min(n) as f64)
        })
        .collect()
}

/// Covariances of `|Tr U^j|^2` for all pairs `j <= k <= J`.
pub fn cue_covariance_reports(samples: &[Vec<f64>], n: usize) -> Vec<MomentReport> {
    let max_power = samples.first().map_or(0, Vec::len);
    let cols: Vec<Vec<f64>> = (0..max_power).map(|j| samples.iter().map(|r| r[j]).collect()).collect();
    let mut out = Vec::new();
    for j in 1..=max_power {
        for k in j..=max_power {
            let (target, case) = cue_covariance_target(n, j, k);
            out.push(covariance_report(
                format!("cov j={j} k={k} ({})", case.label()),
                &cols[j - 1],
                &cols[k - 1],
                target,
            ));
        }
    }
    out
}

/// Monte Carlo check of the CUE covariance formula for all `j <= k <= J`.
pub fn verify_cue_covariances(n: usize, max_power: usize, replicas: u64, master_seed: u64) -> Result<Vec<MomentReport>> {
    if max_power == 0 || max_power > 3 * n {
        return Err(Error::invalid(format!("J must lie in 1..={} (3N)", 3 * n)));
    }
    if replicas < 2 {
        return Err(Error::invalid("covariance checks need at least 2 replicas"));
    }
    let samples = power_trace_samples(n, max_power, replicas, master_seed)?;
    Ok(cue_covariance_reports(&samples, n))
}

/// Outcome of a two-sample Kolmogorov–Smirnov comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleResult {
    pub distance: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub threshold: f64,
    /// Asymptotic Kolmogorov p-value.
    pub p_value: f64,
    pub pass: bool,
}

impl TwoSampleResult {
    pub const CSV_HEADER: &'static str = "dist,n_a,n_b,pass";

    pub fn csv_row(&self) -> String {
        format!("{:.6},{},{},{}", self.distance, self.n_a, self.n_b, self.pass)
    }
}

fn sorted_finite(xs: &[f64], what: &str) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::invalid(format!("{what} sample is empty")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{what} sample has non-finite values")));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_a(x) - F_b(x)|` by a merge scan over the sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted_finite(a, "first")?, sorted_finite(b, "second")?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic Kolmogorov tail with the small-sample correction of
/// Stephens, `lambda = (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) d`.
pub fn ks_p_value(distance: f64, n_a: usize, n_b: usize) -> f64 {
    let ne = (n_a * n_b) as f64 / (n_a + n_b) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * distance;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut q = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        q += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * q).clamp(0.0, 1.0)
}

/// Two-sample KS test at the 1% level.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<TwoSampleResult> {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    two_sample_ks_with_threshold(a, b, 1.628 * ((na + nb) / (na * nb)).sqrt())
}

/// Two-sample KS comparison against a fixed distance threshold.
pub fn two_sample_ks_with_threshold(a: &[f64], b: &[f64], threshold: f64) -> Result<TwoSampleResult> {
    let distance = ks_distance(a, b)?;
    Ok(TwoSampleResult {
        distance,
        n_a: a.len(),
        n_b: b.len(),
        threshold,
        p_value: ks_p_value(distance, a.len(), b.len()),
        pass: distance <= threshold,
    })
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    limitlaw::quantile_sorted(&v, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureCase {
    Gaussian,
    Rademacher,
}

impl FigureCase {
    pub fn params(self, n: usize) -> Result<EnsembleParams> {
        match self {
            FigureCase::Gaussian => EnsembleParams::goe(n),
            FigureCase::Rademacher => EnsembleParams::rademacher(n),
        }
    }
}

impl std::str::FromStr for FigureCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "goe" => Ok(FigureCase::Gaussian),
            "rademacher" => Ok(FigureCase::Rademacher),
            other => Err(Error::invalid(format!("unknown case '{other}' (expected gaussian or rademacher)"))),
        }
    }
}

/// Distance allowed between centered `N^2 A_N` and limit samples.
pub const FIGURE_KS_THRESHOLD: f64 = 0.05;
/// Distance allowed between two independent limit samples.
pub const CONTROL_KS_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct FigureConfig {
    pub case: FigureCase,
    pub n: usize,
    pub replicas: u64,
    pub limit_draws: u64,
    pub truncation: usize,
    pub master_seed: u64,
    pub kde_points: usize,
}

impl FigureConfig {
    pub fn new(case: FigureCase, n: usize, replicas: u64, master_seed: u64) -> Self {
        Self {
            case,
            n,
            replicas,
            limit_draws: 100_000,
            truncation: limitlaw::DEFAULT_TRUNCATION,
            master_seed,
            kde_points: 512,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FigureReport {
    /// `N^2 A_N` per replica, minus the sample mean.
    pub data: Vec<f64>,
    /// Limit draws minus their sample mean.
    pub limit: Vec<f64>,
    /// An independent set of centered limit draws.
    pub control: Vec<f64>,
    pub data_kde: Vec<(f64, f64)>,
    pub limit_kde: Vec<(f64, f64)>,
    pub ks: TwoSampleResult,
    pub control_ks: TwoSampleResult,
    pub data_mean: f64,
}

fn centered(mut xs: Vec<f64>) -> (Vec<f64>, f64) {
    let m = mean(&xs);
    xs.iter_mut().for_each(|x| *x -= m);
    (xs, m)
}

/// Draws from the limit law truncated at `truncation`, replica `i` seeded by `(seed, i)`.
pub fn limit_samples(c: &LimitLawConstants, truncation: usize, draws: u64, master_seed: u64) -> Result<Vec<f64>> {
    run_replica_map(draws, master_seed, |seed| Ok(sample_wigner_limit(c, truncation, seed)?.value))
}

/// Centered `N^2 A_N` against the centered limit law, with KDE curves and
/// a limit-versus-limit control.
pub fn reproduce_figures(cfg: &FigureConfig) -> Result<FigureReport> {
    if cfg.replicas < 2 || cfg.limit_draws < 2 {
        return Err(Error::invalid("figure reproduction needs at least 2 replicas and 2 limit draws"));
    }
    let p = cfg.case.params(cfg.n)?;
    let n2 = (cfg.n as f64).powi(2);
    let raw = run_replica_map(cfg.replicas, cfg.master_seed, |seed| {
        let s = eigenvalues(&sample_wigner(&p, seed)?)?;
        Ok(n2 * cvm_exact(&s).value)
    })?;
    let (data, data_mean) = centered(raw);
    let c = constants(1, p.sigma2, p.c4)?;
    let root = SeedSpec::new(cfg.master_seed, 0);
    let (limit, _) = centered(limit_samples(&c, cfg.truncation, cfg.limit_draws, root.child(1).master_seed)?);
    let (control, _) = centered(limit_samples(&c, cfg.truncation, cfg.limit_draws, root.child(2).master_seed)?);
    Ok(FigureReport {
        data_kde: limitlaw::kde(&data, cfg.kde_points)?,
        limit_kde: limitlaw::kde(&limit, cfg.kde_points)?,
        ks: two_sample_ks_with_threshold(&data, &limit, FIGURE_KS_THRESHOLD)?,
        control_ks: two_sample_ks_with_threshold(&limit, &control, CONTROL_KS_THRESHOLD)?,
        data,
        limit,
        control,
        data_mean,
    })
}

/// Shifted `N^2 A_{N,omega}` against the limit law.
#[derive(Debug, Clone)]
pub struct MesoscopicCheck {
    /// `N^2 A_{N,omega} - alpha log N/(beta pi^2) - b_beta` per replica.
    pub shifted: Vec<f64>,
    pub limit: Vec<f64>,
    pub shift: f64,
    pub ks: TwoSampleResult,
}

/// Compares `N^2 A_{N,omega}` minus its deterministic centering with draws
/// of the limit law; no empirical centering is applied.
pub fn mesoscopic_limit_check(
    p: &EnsembleParams,
    alpha: f64,
    replicas: u64,
    limit_draws: u64,
    truncation: usize,
    master_seed: u64,
    threshold: f64,
) -> Result<MesoscopicCheck> {
    let scale = MesoscopicScale::new(alpha, p.n)?;
    let c = constants(p.beta() as u32, p.sigma2, p.c4)?;
    let shift = centering_shift(&c, alpha, p.n);
    let n2 = (p.n as f64).powi(2);
    let shifted = run_replica_map(replicas, master_seed, |seed| {
        let s = eigenvalues(&sample_wigner(p, seed)?)?;
        let tr = traces(&s.clipped(), scale.n_omega() + 2)?;
        Ok(n2 * mcvm_series(&scale, &tr)?.value - shift)
    })?;
    let root = SeedSpec::new(master_seed, 0);
    let limit = limit_samples(&c, truncation, limit_draws, root.child(1).master_seed)?;
    Ok(MesoscopicCheck {
        ks: two_sample_ks_with_threshold(&shifted, &limit, threshold)?,
        shifted,
        limit,
        shift,
    })
}

/// Partial-sum statistic of rank-one deformed matrices `H + s v v*`; the
/// direction of replica `i` is drawn from the child stream of its seed.
pub fn partial_sum_samples(
    p: &EnsembleParams,
    alpha: f64,
    strength: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<Vec<f64>> {
    let scale = MesoscopicScale::new(alpha, p.n)?;
    let terms = crate::statistics::partial_sum_max_terms(p.n);
    run_replica_map(replicas, master_seed, |seed| {
        let h = sample_deformed_wigner(p, strength, seed.child(1), seed)?;
        let s = eigenvalues(&h)?;
        Ok(mcvm_partial_sum(&scale, &traces_unclipped(&s, terms + 2)?, Some(terms))?.value)
    })
}

/// Opens `dir/name` and writes the command-line comment and the header.
pub fn create_csv(dir: &Path, name: &str, command_line: &str, header: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    writeln!(w, "# {command_line}")?;
    writeln!(w, "{header}")?;
    Ok(w)
}

/// Writes `replica,value` rows.
pub fn write_samples(dir: &Path, name: &str, command_line: &str, xs: &[f64]) -> Result<PathBuf> {
    let mut w = create_csv(dir, name, command_line, "replica,value")?;
    for (i, x) in xs.iter().enumerate() {
        writeln!(w, "{i},{x:.12e}")?;
    }
    w.flush()?;
    Ok(dir.join(name))
}

pub fn write_kde(dir: &Path, name: &str, command_line: &str, curve: &[(f64, f64)]) -> Result<PathBuf> {
    let mut w = create_csv(dir, name, command_line, "x,density")?;
    for (x, d) in curve {
        writeln!(w, "{x:.10e},{d:.10e}")?;
    }
    w.flush()?;
    Ok(dir.join(name))
}

/// Writes samples, density curves and KS summaries into `dir`.
pub fn write_figure_bundle(report: &FigureReport, dir: &Path, command_line: &str) -> Result<Vec<PathBuf>> {
    let mut paths = vec![
        write_samples(dir, "samples.csv", command_line, &report.data)?,
        write_samples(dir, "limit_samples.csv", command_line, &report.limit)?,
        write_kde(dir, "kde_samples.csv", command_line, &report.data_kde)?,
        write_kde(dir, "kde_limit.csv", command_line, &report.limit_kde)?,
    ];
    for (name, ks) in [("ks.csv", &report.ks), ("ks_control.csv", &report.control_ks)] {
        let mut w = create_csv(dir, name, command_line, TwoSampleResult::CSV_HEADER)?;
        writeln!(w, "{}", ks.csv_row())?;
        w.flush()?;
        paths.push(dir.join(name));
    }
    Ok(paths)
}

pub fn write_moment_reports<W: Write>(mut w: W, command_line: &str, reports: &[MomentReport]) -> Result<()> {
    writeln!(w, "# {command_line}")?;
    writeln!(w, "{}", MomentReport::CSV_HEADER)?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn write_stat_values<W: Write>(mut w: W, command_line: &str, values: &[StatValue]) -> Result<()> {
    writeln!(w, "# {command_line}")?;
    writeln!(w, "{}", StatValue::CSV_HEADER)?;
    for v in values {
        writeln!(w, "{}", v.csv_row())?;
    }
    Ok(())
}
