//! Spectra and the semicircle reference law.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;

use crate::ensembles::{Entries, HaarUnitary, WignerMatrix};
use crate::{Error, Result};

/// Eigenvalues sorted in decreasing order, `values[0]` the largest.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Builds a spectrum from eigenvalues in any order.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a spectrum needs at least one eigenvalue"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite eigenvalue {bad}")));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn clipped(&self) -> ClippedSpectrum {
        ClippedSpectrum {
            values: self.values.iter().map(|&x| clip(x)).collect(),
        }
    }

    /// One eigenvalue per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "eigenvalue")?;
        for v in &self.values {
            writeln!(out, "{v:.17e}")?;
        }
        Ok(())
    }
}

/// `max(-1, min(x, 1))`.
pub fn clip(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Spectrum with every eigenvalue clipped to `[-1, 1]`, still decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedSpectrum {
    values: Vec<f64>,
}

impl ClippedSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Eigenphases in `[0, 2pi)`, sorted increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitarySpectrum {
    phases: Vec<f64>,
}

impl UnitarySpectrum {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::invalid("a unitary spectrum needs at least one phase"));
        }
        let mut phases: Vec<f64> = phases
            .into_iter()
            .map(|p| {
                if !p.is_finite() {
                    return Err(Error::invalid(format!("non-finite phase {p}")));
                }
                Ok(wrap_phase(p))
            })
            .collect::<Result<_>>()?;
        phases.sort_by(f64::total_cmp);
        Ok(Self { phases })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Eigenvalues of a symmetric or Hermitian matrix.
pub fn eigenvalues(h: &WignerMatrix) -> Result<Spectrum> {
    let n = h.n();
    let values = match &h.entries {
        Entries::Real(a) => faer::Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j])
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?,
        Entries::Complex(a) => faer::Mat::<Complex64>::from_fn(n, n, |i, j| a[i * n + j])
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?,
    };
    Spectrum::new(values)
}

/// Eigenphases of a unitary matrix.
pub fn eigenphases(u: &HaarUnitary) -> Result<UnitarySpectrum> {
    let n = u.n;
    let eig = faer::Mat::<Complex64>::from_fn(n, n, |i, j| u.entries[i * n + j])
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let mut phases = Vec::with_capacity(n);
    for z in eig {
        let modulus = z.norm();
        if (modulus - 1.0).abs() > 1e-8 {
            return Err(Error::Eigensolver(format!(
                "eigenvalue {z} is off the unit circle by {:e}",
                (modulus - 1.0).abs()
            )));
        }
        phases.push(z.im.atan2(z.re));
    }
    UnitarySpectrum::new(phases)
}

/// Semicircle density `(2/pi) sqrt((1 - x^2)_+)`.
pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        2.0 / PI * (1.0 - x * x).sqrt()
    }
}

/// Semicircle distribution function.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / PI
    }
}

/// Inverse of [`semicircle_cdf`] on `[0, 1]`.
///
/// Bisection down to `1e-12` followed by one Newton step; the density
/// vanishes at `+-1`, so Newton alone is not safe.
pub fn semicircle_quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability must lie in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return Ok(-1.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let rho = semicircle_density(x);
    if rho > 1e-6 {
        let polished = x - (semicircle_cdf(x) - p) / rho;
        if polished >= lo && polished <= hi {
            return Ok(polished);
        }
    }
    Ok(x)
}

/// Quantiles `mu_i` with `F(mu_i) = (N - i + 1/2)/N`, `i = 1..=N`, decreasing.
pub fn quantile_grid(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|i| semicircle_quantile((nf - i as f64 + 0.5) / nf).expect("level in (0, 1)"))
        .collect()
}

/// Empirical spectral distribution `F_N(t) = #{lambda_i <= t} / N`.
pub fn esd_eval(s: &Spectrum, t: f64) -> f64 {
    count_at_most(s.values(), t) as f64 / s.n() as f64
}

/// Number of entries `<= t` of a decreasing array.
pub(crate) fn count_at_most(decreasing: &[f64], t: f64) -> usize {
    decreasing.len() - decreasing.partition_point(|&v| v > t)
}
