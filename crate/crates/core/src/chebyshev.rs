//! Chebyshev polynomials of the first kind and centered trace statistics
//! `t_k(A) = (1/N) Tr T_k(A) - int T_k rho_sc`.

use crate::spectral::{ClippedSpectrum, Spectrum};
use crate::{Error, Result};

/// Above this degree the rounding of `arccos x` times `k` exceeds ~1e-13,
/// so `chebyshev_t` switches to index doubling in double-double.
const TRIG_MAX_DEGREE: usize = 256;

/// `T_k(x) = cos(k arccos x)` for `|x| <= 1`.
pub fn chebyshev_t(k: usize, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::invalid(format!("chebyshev_t needs |x| <= 1, got {x}")));
    }
    Ok(match k {
        0 => 1.0,
        1 => x,
        _ if k <= TRIG_MAX_DEGREE => (k as f64 * x.acos()).cos(),
        _ => chebyshev_t_doubling(k, x),
    })
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    /// `2 self - c` for a plain double `c`.
    fn twice_minus(self, c: f64) -> Dd {
        let s = Dd::two_sum(2.0 * self.hi, -c);
        Dd::renorm(s.hi, s.lo + 2.0 * self.lo)
    }
}

/// `T_{2n} = 2 T_n^2 - 1`, `T_{2n+1} = 2 T_n T_{n+1} - x`, carried in
/// double-double. Error grows like `k^2` times 2^-106.
fn chebyshev_t_doubling(k: usize, x: f64) -> f64 {
    let mut lo = Dd { hi: 1.0, lo: 0.0 };
    let mut hi = Dd { hi: x, lo: 0.0 };
    for bit in (0..usize::BITS - k.leading_zeros()).rev() {
        let mixed = lo.mul(hi).twice_minus(x);
        if (k >> bit) & 1 == 1 {
            lo = mixed;
            hi = hi.mul(hi).twice_minus(1.0);
        } else {
            hi = mixed;
            lo = lo.mul(lo).twice_minus(1.0);
        }
    }
    lo.hi + lo.lo
}

/// `T_k(x)` on the whole real line; `cosh` form outside `[-1, 1]`.
pub(crate) fn chebyshev_t_real(k: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        return chebyshev_t(k, x).expect("inside [-1, 1]");
    }
    let magnitude = (k as f64 * x.abs().acosh()).cosh();
    if x < 0.0 && k % 2 == 1 {
        -magnitude
    } else {
        magnitude
    }
}

/// `int T_k(x) rho_sc(x) dx`: 1 for `k = 0`, -1/2 for `k = 2`, 0 otherwise.
pub fn semicircle_chebyshev_moment(k: usize) -> f64 {
    match k {
        0 => 1.0,
        2 => -0.5,
        _ => 0.0,
    }
}

/// `(t_1, ..., t_K)` for one spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevTraces {
    values: Vec<f64>,
    /// Whether the clipped spectrum was used.
    pub clipped: bool,
    pub n: usize,
}

impl ChebyshevTraces {
    pub fn max_degree(&self) -> usize {
        self.values.len()
    }

    /// `t_k`, `1 <= k <= K`.
    pub fn get(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.values.len(), "degree {k} out of range 1..={}", self.values.len());
        self.values[k - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Builds traces from raw values `t_1..t_K`, e.g. for synthetic checks.
    pub fn from_values(values: Vec<f64>, n: usize, clipped: bool) -> Self {
        Self { values, clipped, n }
    }
}

/// Angles `theta_i = arccos(x_i)`, computed once per spectrum.
#[derive(Debug, Clone)]
pub struct AngleCache {
    angles: Vec<f64>,
}

impl AngleCache {
    pub fn new(s: &ClippedSpectrum) -> Self {
        Self {
            angles: s.values().iter().map(|x| x.acos()).collect(),
        }
    }

    /// `sum_i cos(k theta_i)` for `k = 1..=max_degree`, by running the
    /// rotation `e^{i(k+1)theta} = e^{ik theta} e^{i theta}` per angle.
    pub fn power_sums(&self, max_degree: usize) -> Vec<f64> {
        let mut sums = vec![0.0; max_degree];
        for &theta in &self.angles {
            let (s1, c1) = theta.sin_cos();
            let (mut c, mut s) = (1.0f64, 0.0f64);
            for slot in sums.iter_mut() {
                let next_c = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = next_c;
                *slot += c;
            }
        }
        sums
    }
}

/// Centered Chebyshev traces of a clipped spectrum, `O(N K)`.
pub fn traces(s: &ClippedSpectrum, max_degree: usize) -> Result<ChebyshevTraces> {
    if max_degree == 0 {
        return Err(Error::invalid("maximum degree must be at least 1"));
    }
    traces_from_angles(&AngleCache::new(s), s.n(), max_degree)
}

pub fn traces_from_angles(angles: &AngleCache, n: usize, max_degree: usize) -> Result<ChebyshevTraces> {
    if max_degree == 0 {
        return Err(Error::invalid("maximum degree must be at least 1"));
    }
    let nf = n as f64;
    let values = angles
        .power_sums(max_degree)
        .into_iter()
        .enumerate()
        .map(|(idx, sum)| sum / nf - semicircle_chebyshev_moment(idx + 1))
        .collect();
    Ok(ChebyshevTraces {
        values,
        clipped: true,
        n,
    })
}

/// Traces of the unclipped spectrum: clipped traces plus the exact
/// correction from eigenvalues outside `[-1, 1]`.
pub fn traces_unclipped(s: &Spectrum, max_degree: usize) -> Result<ChebyshevTraces> {
    let clipped = traces(&s.clipped(), max_degree)?;
    let corrections = outside_corrections(s, max_degree)?;
    let values = clipped
        .values
        .iter()
        .zip(&corrections)
        .map(|(t, c)| t + c)
        .collect();
    Ok(ChebyshevTraces {
        values,
        clipped: false,
        n: s.n(),
    })
}

/// `(1/N) sum_{|lambda_i| > 1} (T_k(lambda_i) - T_k(clip(lambda_i)))`, k = 1..=K.
fn outside_corrections(s: &Spectrum, max_degree: usize) -> Result<Vec<f64>> {
    let nf = s.n() as f64;
    let mut out = vec![0.0; max_degree];
    for &lambda in s.values().iter().filter(|x| x.abs() > 1.0) {
        let edge = lambda.signum();
        for (idx, slot) in out.iter_mut().enumerate() {
            let k = idx + 1;
            let outside = chebyshev_t_real(k, lambda);
            if !outside.is_finite() {
                return Err(Error::Numerical(format!(
                    "T_{k}({lambda}) overflows; eigenvalue too far outside the support"
                )));
            }
            *slot += (outside - chebyshev_t_real(k, edge)) / nf;
        }
    }
    Ok(out)
}

/// `max_{k <= K} |t_k(H) - t_k(clip H)|`.
pub fn clipping_gap(s: &Spectrum, max_degree: usize) -> Result<f64> {
    if max_degree == 0 {
        return Err(Error::invalid("maximum degree must be at least 1"));
    }
    if let Some(x) = s.values().iter().find(|x| x.abs() > 2.0) {
        return Err(Error::invalid(format!(
            "eigenvalue {x} lies beyond 2; the ensemble is not normalized to [-1, 1]"
        )));
    }
    Ok(outside_corrections(s, max_degree)?
        .into_iter()
        .fold(0.0, |m, c| m.max(c.abs())))
}
