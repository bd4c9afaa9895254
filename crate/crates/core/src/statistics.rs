//! Goodness-of-fit statistics against the semicircle law and the uniform
//! law on the circle.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::chebyshev::ChebyshevTraces;
use crate::ensembles::SeedSpec;
use crate::smoothing::quadrature::{integrate_adaptive, QuadratureRule};
use crate::smoothing::{smoothed_esd_direct, smoothed_reference, MesoscopicScale};
use crate::spectral::{count_at_most, semicircle_cdf, ClippedSpectrum, Spectrum, UnitarySpectrum};
use crate::summation::{compensated_sum, NeumaierSum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatKind {
    Cvm,
    Ks,
    Mcvm,
    McvmPartial,
    CueCvm,
}

impl StatKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatKind::Cvm => "cvm",
            StatKind::Ks => "ks",
            StatKind::Mcvm => "mcvm",
            StatKind::McvmPartial => "mcvm_partial",
            StatKind::CueCvm => "cue_cvm",
        }
    }
}

impl std::str::FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cvm" => Ok(StatKind::Cvm),
            "ks" => Ok(StatKind::Ks),
            "mcvm" => Ok(StatKind::Mcvm),
            "mcvm_partial" | "mcvm-partial" => Ok(StatKind::McvmPartial),
            "cue_cvm" | "cue-cvm" | "cue" => Ok(StatKind::CueCvm),
            other => Err(Error::invalid(format!(
                "unknown statistic '{other}' (expected cvm, ks, mcvm, mcvm_partial or cue_cvm)"
            ))),
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluated statistic plus the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct StatValue {
    pub name: StatKind,
    pub value: f64,
    pub n: usize,
    pub alpha: Option<f64>,
    pub seed: Option<SeedSpec>,
    /// Upper bound on the discarded series tail, when the value is truncated.
    pub truncation_bound: Option<f64>,
}

impl StatValue {
    fn new(name: StatKind, value: f64, n: usize) -> Self {
        Self {
            name,
            value,
            n,
            alpha: None,
            seed: None,
            truncation_bound: None,
        }
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = Some(seed);
        self
    }

    pub const CSV_HEADER: &'static str = "name,N,alpha,seed,value,truncation_bound";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{:.17e},{}",
            self.name,
            self.n,
            self.alpha.map(|a| a.to_string()).unwrap_or_default(),
            seed,
            self.value,
            opt(self.truncation_bound)
        )
    }
}

/// Cramér–von Mises statistic `A_N = int (F_N - F)^2 dF` through the
/// sum form `(1/N) sum_i (F(lambda_i) - (N - i + 1/2)/N)^2 + 1/(12 N^2)`.
pub fn cvm_exact(s: &Spectrum) -> StatValue {
    let n = s.n();
    let nf = n as f64;
    let sum = compensated_sum(s.values().iter().enumerate().map(|(idx, &x)| {
        let target = (nf - idx as f64 - 0.5) / nf;
        (semicircle_cdf(x) - target).powi(2)
    }));
    StatValue::new(StatKind::Cvm, sum / nf + 1.0 / (12.0 * nf * nf), n)
}

/// `A_N` by Gauss–Legendre quadrature in `phi = arccos t` over each interval
/// on which `F_N` is constant.
pub fn cvm_quadrature(s: &Spectrum) -> StatValue {
    let n = s.n();
    let nf = n as f64;
    let mut breaks = Vec::with_capacity(n + 2);
    breaks.push(0.0);
    breaks.extend(s.clipped().values().iter().map(|x| x.acos()));
    breaks.push(PI);
    let mut acc = NeumaierSum::default();
    for (i, w) in breaks.windows(2).enumerate() {
        if w[1] <= w[0] {
            continue;
        }
        // phi in (phi_i, phi_{i+1}) means exactly N - i eigenvalues lie at or below cos(phi)
        let level = (n - i) as f64 / nf;
        let rule = QuadratureRule::gauss_legendre(24, w[0], w[1]);
        acc.add(rule.integrate(|phi| (level - semicircle_cdf(phi.cos())).powi(2) * 2.0 / PI * phi.sin().powi(2)));
    }
    StatValue::new(StatKind::Cvm, acc.value(), n)
}

/// `K_N = sup_t |F_N(t) - F(t)|`, checking both sides of every jump.
/// Tied eigenvalues form a single jump of the matching height.
pub fn ks_statistic(s: &Spectrum) -> StatValue {
    let v = s.values();
    let nf = s.n() as f64;
    let mut sup: f64 = 0.0;
    for &x in v {
        let at_most = count_at_most(v, x) as f64;
        let below = v.iter().rev().take_while(|&&y| y < x).count() as f64;
        let f = semicircle_cdf(x);
        sup = sup.max((f - at_most / nf).abs()).max((f - below / nf).abs());
    }
    StatValue::new(StatKind::Ks, sup, s.n())
}

/// `(2/pi^2) sum r^{2k} t_k^2 / k^2 - (2/pi^2) sum r^{2k+2} t_k t_{k+2} / (k(k+2)) + (1/pi^2) r^2 t_1^2`
/// for `k = 1..=terms`.
fn trilinear(traces: &ChebyshevTraces, terms: usize, r: f64) -> f64 {
    let mut acc = NeumaierSum::default();
    let mut r2k = 1.0;
    for k in 1..=terms {
        r2k *= r * r;
        let kf = k as f64;
        let tk = traces.get(k);
        acc.add(2.0 / (PI * PI) * r2k * tk * tk / (kf * kf));
        acc.add(-2.0 / (PI * PI) * r2k * r * r * tk * traces.get(k + 2) / (kf * (kf + 2.0)));
    }
    let t1 = traces.get(1);
    acc.add(r * r * t1 * t1 / (PI * PI));
    acc.value()
}

/// `4 (2/pi^2) sum_{k > n} r^{2k} (1/k^2 + 1/(k(k+2)))`, bounded by a
/// geometric majorant.
fn mcvm_tail_bound(r: f64, n: usize) -> f64 {
    let k = (n + 1) as f64;
    let r2 = r * r;
    8.0 / (PI * PI) * (2.0 / (k * k)) * r2.powf(k) / (1.0 - r2)
}

/// Mesoscopic CvM statistic `A_{N,omega}` from clipped-spectrum traces,
/// truncated at `n_omega`.
pub fn mcvm_series(scale: &MesoscopicScale, traces: &ChebyshevTraces) -> Result<StatValue> {
    let n = scale.n_omega();
    if !traces.clipped {
        return Err(Error::invalid("the mesoscopic statistic needs traces of the clipped spectrum"));
    }
    if traces.max_degree() < n + 2 {
        return Err(Error::invalid(format!(
            "traces reach degree {} but the series needs {}",
            traces.max_degree(),
            n + 2
        )));
    }
    let mut out = StatValue::new(StatKind::Mcvm, trilinear(traces, n, scale.r()), traces.n);
    out.alpha = scale.alpha();
    out.truncation_bound = Some(mcvm_tail_bound(scale.r(), n));
    Ok(out)
}

/// `A_{N,omega}` by adaptive quadrature of `(F_{N,omega} - F_omega)^2 dF`
/// in the angle variable.
pub fn mcvm_quadrature(scale: &MesoscopicScale, s: &ClippedSpectrum) -> Result<StatValue> {
    let value = integrate_adaptive(0.0, PI, 1e-13, |phi| {
        let t = phi.cos();
        let d = smoothed_esd_direct(scale, s, t) - smoothed_reference(scale, t);
        d * d * 2.0 / PI * phi.sin().powi(2)
    })?;
    let mut out = StatValue::new(StatKind::Mcvm, value, s.n());
    out.alpha = scale.alpha();
    Ok(out)
}

/// Largest admissible number of terms for [`mcvm_partial_sum`]: `floor(N^{1/3} / 2)`.
pub fn partial_sum_max_terms(n: usize) -> usize {
    ((n as f64).cbrt() / 2.0 + 1e-12).floor() as usize
}

/// Unsmoothed partial sum of the mesoscopic series on traces of the
/// unclipped spectrum, so eigenvalues outside `[-1, 1]` are seen in full.
///
/// `terms` defaults to [`partial_sum_max_terms`] and may not exceed it.
pub fn mcvm_partial_sum(
    scale: &MesoscopicScale,
    traces: &ChebyshevTraces,
    terms: Option<usize>,
) -> Result<StatValue> {
    let limit = partial_sum_max_terms(traces.n);
    let terms = terms.unwrap_or(limit);
    if terms == 0 || terms > limit {
        return Err(Error::invalid(format!(
            "partial sum needs 1 <= terms <= N^(1/3)/2 = {limit} at N = {}; got {terms}",
            traces.n
        )));
    }
    if traces.max_degree() < terms + 2 {
        return Err(Error::invalid(format!(
            "traces reach degree {} but the partial sum needs {}",
            traces.max_degree(),
            terms + 2
        )));
    }
    let mut out = StatValue::new(StatKind::McvmPartial, trilinear(traces, terms, 1.0), traces.n);
    out.alpha = scale.alpha();
    Ok(out)
}

/// `Tr U^j` for `j = 1..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTraces {
    values: Vec<Complex64>,
    pub n: usize,
}

impl PowerTraces {
    pub fn max_power(&self) -> usize {
        self.values.len()
    }

    /// `Tr U^j`, `1 <= j <= J`.
    pub fn get(&self, j: usize) -> Complex64 {
        self.values[j - 1]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }
}

/// `sum_i e^{i j theta_i}` by rotating each phase, `O(N J)`.
pub fn power_traces(u: &UnitarySpectrum, max_power: usize) -> Result<PowerTraces> {
    if max_power == 0 {
        return Err(Error::invalid("maximum power must be at least 1"));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); max_power];
    for &theta in u.phases() {
        let step = Complex64::from_polar(1.0, theta);
        let mut z = Complex64::new(1.0, 0.0);
        for (j, slot) in values.iter_mut().enumerate() {
            // re-anchor every 64 steps so rounding does not accumulate
            z = if (j + 1) % 64 == 0 {
                Complex64::from_polar(1.0, (j + 1) as f64 * theta)
            } else {
                z * step
            };
            *slot += z;
        }
    }
    Ok(PowerTraces { values, n: u.n() })
}

/// `(4/N^2) sum_{j <= J} |Tr U^j|^2 / j^2` with tail bound `4/J`.
pub fn cue_cvm_series(p: &PowerTraces) -> StatValue {
    let nf = p.n as f64;
    let sum = compensated_sum(
        p.values
            .iter()
            .enumerate()
            .map(|(idx, z)| z.norm_sqr() / ((idx + 1) as f64).powi(2)),
    );
    let mut out = StatValue::new(StatKind::CueCvm, 4.0 / (nf * nf) * sum, p.n);
    out.truncation_bound = Some(4.0 / p.max_power() as f64);
    out
}

/// `int int ((F_N(y) - F_N(x)) - (y - x)/(2pi))^2 dx dy` over `[0, 2pi)^2`,
/// as `4 pi int g^2 - 2 (int g)^2` with `g = F_N - x/(2pi)` integrated
/// exactly on each interval between phases.
pub fn cue_cvm_exact(u: &UnitarySpectrum) -> StatValue {
    let n = u.n();
    let nf = n as f64;
    let mut edges = Vec::with_capacity(n + 2);
    edges.push(0.0);
    edges.extend_from_slice(u.phases());
    edges.push(TAU);
    let mut int_g = NeumaierSum::default();
    let mut int_g2 = NeumaierSum::default();
    for (count, w) in edges.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let level = count as f64 / nf;
        let (ga, gb) = (level - a / TAU, level - b / TAU);
        // g is linear with slope -1/(2pi) on [a, b)
        int_g.add(0.5 * (ga + gb) * (b - a));
        int_g2.add((b - a) * (ga * ga + ga * gb + gb * gb) / 3.0);
    }
    let ig = int_g.value();
    let value = 4.0 * PI * int_g2.value() - 2.0 * ig * ig;
    StatValue::new(StatKind::CueCvm, value.max(0.0), n)
}
