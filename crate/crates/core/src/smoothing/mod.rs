//! Poisson-kernel smoothing on `(-1, 1)`.
//!
//! With `x = cos(theta)` and `y = cos(phi)` the kernels are
//! `P+-(x, y) = P(theta -+ phi)` where `P(psi) = (1 - r^2)/(1 - 2 r cos psi + r^2)`
//! is the classical Poisson kernel, so every integral against
//! `dy / sqrt(1 - y^2)` is done in the angle variable `phi`.

pub mod quadrature;

use std::f64::consts::{PI, TAU};

use crate::chebyshev::{chebyshev_t, semicircle_chebyshev_moment, ChebyshevTraces};
use crate::spectral::ClippedSpectrum;
use crate::{Error, Result};

use quadrature::integrate_adaptive;

/// Smoothing scale `omega = N^{-alpha}`, `r = 1 - omega` and the series
/// truncation index `n_omega = floor(omega^{-1} (log N)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MesoscopicScale {
    alpha: Option<f64>,
    n: usize,
    omega: f64,
    r: f64,
    n_omega: usize,
}

impl MesoscopicScale {
    /// Scale for the mesoscopic statistic; `alpha` must lie in `(0, 1/3)`.
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0 / 3.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1/3), the range of the mesoscopic limit theorem; got {alpha}"
            )));
        }
        let nf = n as f64;
        let omega = nf.powf(-alpha);
        let n_omega = (nf.ln().powi(2) / omega).floor() as usize;
        if n_omega < 1 || !(omega > 0.0 && omega < 1.0) {
            return Err(Error::invalid(format!(
                "dimension {n} is too small for a mesoscopic scale (n_omega = {n_omega})"
            )));
        }
        Ok(Self {
            alpha: Some(alpha),
            n,
            omega,
            r: 1.0 - omega,
            n_omega,
        })
    }

    /// Kernel-only scale with an explicit `omega` in `(0, 1]`.
    ///
    /// The truncation index is the smallest `n` whose geometric tail bound
    /// for the indicator series falls below `1e-16`.
    pub fn from_omega(omega: f64, n: usize) -> Result<Self> {
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(Error::invalid(format!("omega must lie in (0, 1], got {omega}")));
        }
        let r = 1.0 - omega;
        let mut n_omega = 1;
        while indicator_tail_bound(r, n_omega) > 1e-16 {
            n_omega += 1;
        }
        Ok(Self {
            alpha: None,
            n,
            omega,
            r,
            n_omega,
        })
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn n_omega(&self) -> usize {
        self.n_omega
    }
}

/// A truncated series value with an upper bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub tail_bound: f64,
}

/// `sum_{k > n} (2/(pi k)) r^k`, bounded by its geometric majorant.
fn indicator_tail_bound(r: f64, n: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let k = (n + 1) as f64;
    2.0 / (PI * k) * r.powf(k) / (1.0 - r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSign {
    Plus,
    Minus,
}

fn check_open(name: &str, v: f64) -> Result<()> {
    if !(v.abs() < 1.0) {
        return Err(Error::invalid(format!("{name} must lie in (-1, 1), got {v}")));
    }
    Ok(())
}

/// `P+-_omega(x, y)`.
pub fn poisson_kernel(scale: &MesoscopicScale, x: f64, y: f64, sign: KernelSign) -> Result<f64> {
    check_open("x", x)?;
    check_open("y", y)?;
    let r = scale.r;
    let root = ((1.0 - x * x) * (1.0 - y * y)).sqrt();
    let c = match sign {
        KernelSign::Plus => x * y + root,
        KernelSign::Minus => x * y - root,
    };
    Ok((1.0 - r * r) / (1.0 - 2.0 * r * c + r * r))
}

/// Classical Poisson kernel in the angle variable.
fn poisson_angle(r: f64, psi: f64) -> f64 {
    (1.0 - r * r) / (1.0 - 2.0 * r * psi.cos() + r * r)
}

/// Antiderivative of [`poisson_angle`], continuous on `(-2pi, 2pi)`.
fn poisson_antiderivative(r: f64, psi: f64) -> f64 {
    let half = 0.5 * psi;
    2.0 * ((1.0 + r) * half.sin()).atan2((1.0 - r) * half.cos())
}

/// `d_0^t = (2/pi) int_{-1}^t ds / sqrt(1 - s^2)`.
pub fn d_zero(t: f64) -> f64 {
    2.0 - 2.0 / PI * t.clamp(-1.0, 1.0).acos()
}

/// `d_k^t = -(2/(pi k)) sin(k arccos t)` for `k >= 1`.
pub fn d_coefficient(k: usize, t: f64) -> Result<f64> {
    if k == 0 {
        return Ok(d_zero(t));
    }
    if !(t.abs() <= 1.0) {
        return Err(Error::invalid(format!("t must lie in [-1, 1], got {t}")));
    }
    Ok(-2.0 / (PI * k as f64) * (k as f64 * t.acos()).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorMethod {
    /// `(1/2) d_0^t + sum_k d_k^t r^k T_k(x)` truncated at `n_omega`.
    Series,
    /// Adaptive Gauss–Legendre over the angle variable.
    Quadrature,
    /// Exact Poisson-integral antiderivative.
    ClosedForm,
}

/// Smoothed indicator `chi_omega^t(x)` of `1(. <= t)`.
pub fn smooth_indicator(scale: &MesoscopicScale, t: f64, x: f64, method: IndicatorMethod) -> Result<f64> {
    match method {
        IndicatorMethod::Series => smooth_indicator_series(scale, t, x).map(|b| b.value),
        IndicatorMethod::Quadrature => smooth_indicator_quadrature(scale, t, x),
        IndicatorMethod::ClosedForm => {
            check_open("t", t)?;
            check_open("x", x)?;
            Ok(indicator_closed_form(scale.r, t.acos(), x.acos()))
        }
    }
}

pub fn smooth_indicator_series(scale: &MesoscopicScale, t: f64, x: f64) -> Result<Bounded> {
    check_open("t", t)?;
    check_open("x", x)?;
    let (r, theta_t, theta_x) = (scale.r, t.acos(), x.acos());
    let mut value = 0.5 * d_zero(t);
    let mut rk = 1.0;
    for k in 1..=scale.n_omega {
        rk *= r;
        let kf = k as f64;
        value += -2.0 / (PI * kf) * (kf * theta_t).sin() * rk * (kf * theta_x).cos();
    }
    Ok(Bounded {
        value,
        tail_bound: indicator_tail_bound(r, scale.n_omega),
    })
}

pub fn smooth_indicator_quadrature(scale: &MesoscopicScale, t: f64, x: f64) -> Result<f64> {
    check_open("t", t)?;
    check_open("x", x)?;
    let (r, a, theta) = (scale.r, t.acos(), x.acos());
    let integral = integrate_adaptive(a, PI, 1e-12, |phi| poisson_angle(r, theta - phi) + poisson_angle(r, theta + phi))?;
    Ok(integral / TAU)
}

/// `chi` with `a = arccos t`, `theta = arccos x`, both in `[0, pi]`.
pub(crate) fn indicator_closed_form(r: f64, a: f64, theta: f64) -> f64 {
    let g = |psi: f64| poisson_antiderivative(r, psi);
    (g(theta - a) - g(theta - PI) + g(theta + PI) - g(theta + a)) / TAU
}

/// Poisson transform `f_omega(x)` of `f` by quadrature.
pub fn smooth_transform<F: Fn(f64) -> f64>(scale: &MesoscopicScale, f: F, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::invalid(format!("x must lie in [-1, 1], got {x}")));
    }
    let (r, theta) = (scale.r, x.acos());
    let integral = integrate_adaptive(0.0, PI, 1e-12, |phi| {
        (poisson_angle(r, theta - phi) + poisson_angle(r, theta + phi)) * f(phi.cos())
    })?;
    Ok(integral / TAU)
}

/// `F_{N,omega}(t)` from clipped-spectrum traces, truncated at `n_omega`.
pub fn smoothed_esd(scale: &MesoscopicScale, traces: &ChebyshevTraces, t: f64) -> Result<Bounded> {
    if traces.max_degree() < scale.n_omega {
        return Err(Error::invalid(format!(
            "traces reach degree {} but the scale needs {}",
            traces.max_degree(),
            scale.n_omega
        )));
    }
    if !(t.abs() <= 1.0) {
        return Err(Error::invalid(format!("t must lie in [-1, 1], got {t}")));
    }
    let theta_t = t.acos();
    let mut value = 0.5 * d_zero(t);
    let mut rk = 1.0;
    for k in 1..=scale.n_omega {
        rk *= scale.r;
        let kf = k as f64;
        let d = -2.0 / (PI * kf) * (kf * theta_t).sin();
        value += d * rk * (traces.get(k) + semicircle_chebyshev_moment(k));
    }
    Ok(Bounded {
        value,
        tail_bound: indicator_tail_bound(scale.r, scale.n_omega),
    })
}

/// `F_{N,omega}(t)` as the average of closed-form smoothed indicators.
pub fn smoothed_esd_direct(scale: &MesoscopicScale, s: &ClippedSpectrum, t: f64) -> f64 {
    let a = t.clamp(-1.0, 1.0).acos();
    let n = s.n() as f64;
    s.values()
        .iter()
        .map(|&x| indicator_closed_form(scale.r, a, x.acos()))
        .sum::<f64>()
        / n
}

/// `F_omega(t) = (1/2) d_0^t - (1/2) d_2^t r^2`.
pub fn smoothed_reference(scale: &MesoscopicScale, t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let d2 = -1.0 / PI * (2.0 * t.acos()).sin();
    0.5 * d_zero(t) - 0.5 * d2 * scale.r * scale.r
}

/// `F_omega(t)` term by term: `(1/2) d_0^t + sum_k d_k^t r^k int T_k rho_sc`.
pub fn smoothed_reference_series(scale: &MesoscopicScale, t: f64) -> Result<f64> {
    let mut value = 0.5 * d_zero(t);
    let mut rk = 1.0;
    for k in 1..=scale.n_omega.max(2) {
        rk *= scale.r;
        value += d_coefficient(k, t)? * rk * semicircle_chebyshev_moment(k);
    }
    Ok(value)
}

/// `T_k(x)` re-exported for series checks.
pub fn chebyshev(k: usize, x: f64) -> Result<f64> {
    chebyshev_t(k, x)
}
