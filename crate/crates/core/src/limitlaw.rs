//! Limit laws of the rescaled mesoscopic CvM statistic and of the CUE
//! statistic: constants, series samplers and kernel density estimates.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensembles::SeedSpec;
use crate::summation::compensated_sum;
use crate::{Error, Result};

/// Default series truncation for limit samples.
pub const DEFAULT_TRUNCATION: usize = 300;

/// Coefficients of the finite Gaussian polynomial `a_beta`, one per monomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ACoefficients {
    pub z2: f64,
    pub z4: f64,
    pub z6: f64,
    /// Coefficient of `Z_1^2 - 1`.
    pub z1_sq: f64,
    /// Coefficient of `Z_2^2 - 1`.
    pub z2_sq: f64,
    pub z1z3: f64,
    pub z2z4: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitLawConstants {
    pub beta: f64,
    pub sigma2: f64,
    pub c4: f64,
    pub b: f64,
    pub a: ACoefficients,
}

fn sqrt_checked(what: &str, v: f64) -> Result<f64> {
    if v < 0.0 {
        return Err(Error::invalid(format!(
            "{what} = {v} is negative; the fourth cumulant is below the admissible range"
        )));
    }
    Ok(v.sqrt())
}

/// `a_beta` coefficients and the shift `b_beta` for a Wigner model.
pub fn constants(beta: u32, sigma2: f64, c4: f64) -> Result<LimitLawConstants> {
    if beta != 1 && beta != 2 {
        return Err(Error::invalid(format!("beta must be 1 or 2, got {beta}")));
    }
    if !(sigma2 >= 0.0) || !c4.is_finite() {
        return Err(Error::invalid(format!("need sigma2 >= 0 and finite c4, got {sigma2}, {c4}")));
    }
    let b = beta as f64;
    let pi2 = PI * PI;
    let excess = sigma2 + b - 3.0;

    let root_z2 = sqrt_checked("1/beta + 8 c4", 1.0 / b + 8.0 * c4)?;
    let root_z2z4 = sqrt_checked("1 + 8 c4 beta", 1.0 + 8.0 * c4 * b)?;
    let a = ACoefficients {
        z2: ((4.0 * sigma2 - 16.0 * c4 - 6.0 + b) * root_z2 + 3.0 * (b - 2.0)) / (8.0 * pi2),
        z4: 2.0 * 2f64.sqrt() / (b.sqrt() * pi2) * (c4 - excess / 16.0),
        z6: -2.0 / ((3.0 * b).sqrt() * pi2) * c4,
        z1_sq: (3.0 * excess / 4.0 + 1.0 / (2.0 * b)) / pi2,
        z1z3: -(sigma2.sqrt() / (2.0 * b).sqrt() - 1.0 / b) / (3f64.sqrt() * pi2),
        z2_sq: 4.0 / pi2 * c4,
        z2z4: -(root_z2z4 - 1.0) / (2.0 * 2f64.sqrt() * b * pi2),
    };

    let shift = -(LN_2 - 0.5) / (b * pi2)
        + (2.0 - b) * (1.0 / 48.0 - 1.0 / (8.0 * pi2))
        + excess * (2.0 * sigma2 - b + 12.0) / (16.0 * pi2)
        + (19.0 - 2.0 * b - 3.0 * sigma2) / (3.0 * pi2) * c4
        + 8.0 / pi2 * c4 * c4;

    Ok(LimitLawConstants {
        beta: b,
        sigma2,
        c4,
        b: shift,
        a,
    })
}

/// Deterministic centering `alpha log N / (beta pi^2) + b_beta`.
pub fn centering_shift(c: &LimitLawConstants, alpha: f64, n: usize) -> f64 {
    alpha * (n as f64).ln() / (c.beta * PI * PI) + c.b
}

/// One draw from a truncated limit series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSample {
    pub value: f64,
    pub truncation: usize,
    pub beta: f64,
    /// Bound on the mean squared error of the truncation.
    pub tail_mse_bound: f64,
}

/// `(1/(beta pi^2)) sum_{k<=K} [(Z_k^2 - 1)/k - Z_k Z_{k+2}/sqrt(k(k+2))]`,
/// with `z[i]` holding `Z_{i+1}`.
fn quadratic_group(beta: f64, z: &[f64], truncation: usize) -> f64 {
    let sum = compensated_sum((1..=truncation).map(|k| {
        let kf = k as f64;
        let (zk, zk2) = (z[k - 1], z[k + 1]);
        (zk * zk - 1.0) / kf - zk * zk2 / (kf * (kf + 2.0)).sqrt()
    }));
    sum / (beta * PI * PI)
}

fn linear_coefficients(k: usize) -> (f64, f64) {
    let kf = k as f64;
    (
        (kf + 2.0) / (4.0 * kf.powf(1.5) * (kf + 1.0)),
        1.0 / (4.0 * kf * (kf + 1.0).sqrt()),
    )
}

/// `((2 - beta)/pi^2) sum_{k<=K/2} [c_k Z_{2k} - e_k Z_{2k+2}]`.
fn linear_group(beta: f64, z: &[f64], truncation: usize) -> f64 {
    if beta == 2.0 {
        return 0.0;
    }
    let sum = compensated_sum((1..=truncation / 2).map(|k| {
        let (c, e) = linear_coefficients(k);
        c * z[2 * k - 1] - e * z[2 * k + 1]
    }));
    (2.0 - beta) / (PI * PI) * sum
}

fn a_group(a: &ACoefficients, z: &[f64]) -> f64 {
    let zz = |i: usize| z[i - 1];
    compensated_sum([
        a.z2 * zz(2),
        a.z4 * zz(4),
        a.z6 * zz(6),
        a.z1_sq * (zz(1) * zz(1) - 1.0),
        a.z2_sq * (zz(2) * zz(2) - 1.0),
        a.z1z3 * zz(1) * zz(3),
        a.z2z4 * zz(2) * zz(4),
    ])
}

/// Adds values in increasing order, so the result depends only on the multiset.
fn sum_sorted(mut parts: [f64; 3]) -> f64 {
    parts.sort_by(f64::total_cmp);
    parts[0] + parts[1] + parts[2]
}

fn check_truncation(truncation: usize) -> Result<()> {
    if truncation < 8 {
        return Err(Error::invalid(format!("series truncation must be at least 8, got {truncation}")));
    }
    Ok(())
}

/// Bound on `E (full - truncated)^2` for the Wigner limit series.
pub fn wigner_limit_tail_bound(beta: f64, truncation: usize) -> f64 {
    let q = 1.0 / (beta * PI * PI);
    let l = (2.0 - beta) / (PI * PI);
    let m = (truncation / 2) as f64;
    q * q * 3.0 / truncation as f64 + l * l * 13.0 / (64.0 * m * m)
}

/// Evaluates the truncated limit series on a given Gaussian sequence
/// `z = (Z_1, ..., Z_{K+2})`.
pub fn wigner_limit_from_normals(c: &LimitLawConstants, z: &[f64]) -> Result<f64> {
    if z.len() < 10 {
        return Err(Error::invalid("need at least 10 Gaussian variables"));
    }
    let truncation = z.len() - 2;
    Ok(sum_sorted([
        quadratic_group(c.beta, z, truncation),
        linear_group(c.beta, z, truncation),
        a_group(&c.a, z),
    ]))
}

/// One sample of the Wigner limit law truncated at `K`, all three parts
/// driven by a single sequence `Z_1, ..., Z_{K+2}`.
pub fn sample_wigner_limit(c: &LimitLawConstants, truncation: usize, seed: SeedSpec) -> Result<LimitSample> {
    check_truncation(truncation)?;
    let mut rng = seed.rng();
    let z: Vec<f64> = (0..truncation + 2).map(|_| rng.sample(StandardNormal)).collect();
    Ok(LimitSample {
        value: wigner_limit_from_normals(c, &z)?,
        truncation,
        beta: c.beta,
        tail_mse_bound: wigner_limit_tail_bound(c.beta, truncation),
    })
}

/// Exact variance of the Wigner limit series truncated at `K`.
///
/// The sample is `sum D_k (Z_k^2 - 1) + sum P_{ij} Z_i Z_j + sum L_k Z_k`
/// with `i < j`, whose variance is `sum 2 D^2 + sum P^2 + sum L^2`.
pub fn wigner_limit_variance(c: &LimitLawConstants, truncation: usize) -> Result<f64> {
    check_truncation(truncation)?;
    let len = truncation + 2;
    let q = 1.0 / (c.beta * PI * PI);
    let l = (2.0 - c.beta) / (PI * PI);
    let mut diag = vec![0.0; len + 1];
    let mut pair_kk2 = vec![0.0; len + 1];
    let mut linear = vec![0.0; len + 1];
    for k in 1..=truncation {
        let kf = k as f64;
        diag[k] += q / kf;
        pair_kk2[k] -= q / (kf * (kf + 2.0)).sqrt();
    }
    for k in 1..=truncation / 2 {
        let (ck, ek) = linear_coefficients(k);
        linear[2 * k] += l * ck;
        linear[2 * k + 2] -= l * ek;
    }
    let a = &c.a;
    linear[2] += a.z2;
    linear[4] += a.z4;
    linear[6] += a.z6;
    diag[1] += a.z1_sq;
    diag[2] += a.z2_sq;
    pair_kk2[1] += a.z1z3;
    pair_kk2[2] += a.z2z4;
    Ok(compensated_sum(
        (1..=len).map(|k| 2.0 * diag[k] * diag[k] + pair_kk2[k] * pair_kk2[k] + linear[k] * linear[k]),
    ))
}

/// One sample of `sum_{j<=K} (|Y_j|^2 - 1)/j` with `Y_j` standard complex
/// Gaussian (real and imaginary parts of variance 1/2).
pub fn sample_cue_limit(truncation: usize, seed: SeedSpec) -> Result<LimitSample> {
    check_truncation(truncation)?;
    let mut rng = seed.rng();
    let value = compensated_sum((1..=truncation).map(|j| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        (0.5 * (re * re + im * im) - 1.0) / j as f64
    }));
    Ok(LimitSample {
        value,
        truncation,
        beta: 2.0,
        tail_mse_bound: 1.0 / truncation as f64,
    })
}

/// `sum_{j<=K} 1/j^2`, the variance of the truncated CUE limit.
pub fn cue_limit_variance(truncation: usize) -> f64 {
    compensated_sum((1..=truncation).rev().map(|j| 1.0 / (j as f64).powi(2)))
}

/// Silverman's rule `0.9 min(sd, IQR/1.34) n^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("bandwidth needs at least two samples"));
    }
    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / n;
    let sd = (compensated_sum(samples.iter().map(|x| (x - mean).powi(2))) / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::Numerical("samples have zero spread".into()));
    }
    Ok(0.9 * spread * n.powf(-0.2))
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Gaussian-kernel density estimate on an evenly spaced grid of `points`
/// covering the sample range padded by three bandwidths.
pub fn kde(samples: &[f64], points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::invalid("a density curve needs at least two grid points"));
    }
    let h = silverman_bandwidth(samples)?;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (lo, hi) = (lo - 3.0 * h, hi + 3.0 * h);
    let step = (hi - lo) / (points - 1) as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    Ok((0..points)
        .map(|i| {
            let x = lo + step * i as f64;
            // kernels beyond 8 bandwidths contribute below 1e-14
            let from = sorted.partition_point(|&s| s < x - 8.0 * h);
            let to = sorted.partition_point(|&s| s <= x + 8.0 * h);
            let d: f64 = sorted[from..to].iter().map(|&s| (-0.5 * ((x - s) / h).powi(2)).exp()).sum();
            (x, d * norm)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn gaussian_collapse() {
        for beta in [1u32, 2] {
            let b = beta as f64;
            let c = constants(beta, 3.0 - b, 0.0).unwrap();
            let a = c.a;
            for v in [a.z2, a.z4, a.z6, a.z2_sq, a.z1z3, a.z2z4] {
                assert!(v.abs() < 1e-12, "{a:?}");
            }
            assert!((a.z1_sq - 1.0 / (2.0 * b * PI * PI)).abs() < 1e-12);
            let expect = -(LN_2 - 0.5) / (b * PI * PI) + (2.0 - b) * (1.0 / 48.0 - 1.0 / (8.0 * PI * PI));
            assert!((c.b - expect).abs() < 1e-12);
        }
    }

    /// `b_beta` with every product expanded into monomials in `sigma2`, `c4`.
    fn b_expanded(beta: f64, s: f64, c4: f64) -> f64 {
        let p = PI * PI;
        let quad = (2.0 * s * s + s * (beta + 6.0) - beta * beta + 15.0 * beta - 36.0) / 16.0;
        (0.5 - LN_2) / (beta * p) + (2.0 - beta) / 48.0 - (2.0 - beta) / (8.0 * p)
            + quad / p
            + 19.0 * c4 / (3.0 * p)
            - 2.0 * beta * c4 / (3.0 * p)
            - s * c4 / p
            + 8.0 * c4 * c4 / p
    }

    #[test]
    fn shift_has_two_transcriptions() {
        let cases = [(1u32, 2.0, -1.0 / 16.0), (1, 2.0, 0.0), (2, 1.0, 0.0), (2, 1.7, 0.03), (1, 0.4, 0.2)];
        for (beta, s, c4) in cases {
            let c = constants(beta, s, c4).unwrap();
            assert!((c.b - b_expanded(beta as f64, s, c4)).abs() < 1e-14, "{beta} {s} {c4}");
        }
    }

    #[test]
    fn rademacher_coefficients() {
        let c = constants(1, 2.0, -1.0 / 16.0).unwrap();
        let p = PI * PI;
        // (8 + 1 - 6 + 1) sqrt(1/2) - 3
        assert!((c.a.z2 - (4.0 * 0.5f64.sqrt() - 3.0) / (8.0 * p)).abs() < 1e-15);
        assert!((c.a.z6 - 1.0 / (8.0 * 3f64.sqrt() * p)).abs() < 1e-15);
        assert!((c.a.z2z4 + (0.5f64.sqrt() - 1.0) / (2.0 * 2f64.sqrt() * p)).abs() < 1e-15);
        assert!(constants(1, 2.0, -0.2).is_err());
        assert!(constants(3, 2.0, 0.0).is_err());
    }

    #[test]
    fn centering_examples() {
        let c = constants(1, 2.0, 0.0).unwrap();
        assert_eq!(centering_shift(&c, 0.0, 400), c.b);
        let expect = 0.2 * 400f64.ln() / (PI * PI) + c.b;
        assert!((centering_shift(&c, 0.2, 400) - expect).abs() < 1e-15);
        let c2 = constants(2, 1.0, 0.0).unwrap();
        let expect = 0.2 * 400f64.ln() / (2.0 * PI * PI) + c2.b;
        assert!((centering_shift(&c2, 0.2, 400) - expect).abs() < 1e-15);
    }

    #[test]
    fn groups_share_one_sequence() {
        let c = constants(1, 2.0, -1.0 / 16.0).unwrap();
        let mut rng = SeedSpec::new(5, 0).rng();
        let z: Vec<f64> = (0..52).map(|_| rng.sample(StandardNormal)).collect();
        let (g1, g2, g3) = (quadratic_group(1.0, &z, 50), linear_group(1.0, &z, 50), a_group(&c.a, &z));
        let whole = wigner_limit_from_normals(&c, &z).unwrap();
        assert_eq!(sum_sorted([g3, g1, g2]), whole);
        assert_eq!(sum_sorted([g2, g3, g1]), whole);
        let s = sample_wigner_limit(&c, 50, SeedSpec::new(5, 0)).unwrap();
        assert_eq!(s.value, whole);
    }

    #[test]
    fn truncation_is_checked() {
        let c = constants(1, 2.0, 0.0).unwrap();
        assert!(sample_wigner_limit(&c, 7, SeedSpec::new(1, 0)).is_err());
        assert!(sample_cue_limit(7, SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn exact_variance_of_the_quadratic_group() {
        // GUE: only the quadratic group and the (Z_1^2 - 1) coefficient remain
        let c = constants(2, 1.0, 0.0).unwrap();
        let q = 1.0 / (2.0 * PI * PI);
        let k_max = 20;
        let mut expect = 0.0;
        for k in 1..=k_max {
            let kf = k as f64;
            let d = q / kf + if k == 1 { c.a.z1_sq } else { 0.0 };
            expect += 2.0 * d * d + q * q / (kf * (kf + 2.0));
        }
        assert!((wigner_limit_variance(&c, k_max).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn tail_bound_dominates_the_variance_gap() {
        for (beta, s, c4) in [(1u32, 2.0, 0.0), (1, 2.0, -1.0 / 16.0), (2, 1.0, 0.0)] {
            let c = constants(beta, s, c4).unwrap();
            let full = wigner_limit_variance(&c, 200_000).unwrap();
            for k in [8, 30, 300] {
                let gap = full - wigner_limit_variance(&c, k).unwrap();
                assert!(gap >= 0.0 && gap <= wigner_limit_tail_bound(c.beta, k));
            }
        }
    }

    #[test]
    fn cue_limit_variance_sums_to_zeta_two() {
        assert!((cue_limit_variance(10_000) - PI * PI / 6.0).abs() < 1e-4);
        // expectation of the finite-N statistic, (4/N^2)(log N + gamma + 1) at N = 10
        let e = 4.0 / 100.0 * (10f64.ln() + GAMMA + 1.0);
        assert!((e - 0.155_192).abs() < 1e-6);
    }

    #[test]
    fn kde_integrates_to_one() {
        let samples: Vec<f64> = (0..500).map(|i| ((i as f64) * 0.618).fract() - 0.5).collect();
        let curve = kde(&samples, 400).unwrap();
        let h = curve[1].0 - curve[0].0;
        let mass: f64 = curve.iter().map(|p| p.1).sum::<f64>() * h;
        assert!((mass - 1.0).abs() < 1e-3);
        assert!(kde(&[1.0], 10).is_err());
    }

    #[test]
    fn silverman_on_a_known_set() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        let sd = 2.5f64.sqrt();
        let iqr = 2.0;
        let expect = 0.9 * sd.min(iqr / 1.34) * 5f64.powf(-0.2);
        assert!((silverman_bandwidth(&s).unwrap() - expect).abs() < 1e-15);
    }
}
