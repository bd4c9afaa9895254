//! Random matrix samplers.
//!
//! Wigner matrices are normalized so that off-diagonal entries have
//! `E|H_ij|^2 = 1/(4N)` and diagonal entries `E|H_ii|^2 = sigma2/(4N)`; the
//! spectrum then fills `[-1, 1]`. Every sampler is a pure function of its
//! [`SeedSpec`].

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Deterministic seed for one replica.
///
/// The stream is ChaCha8 keyed by `master_seed` with `replica_index` as the
/// stream id, so replicas never share keystream and the draw sequence does
/// not depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replica_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replica_index: u64) -> Self {
        Self {
            master_seed,
            replica_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replica_index);
        rng
    }

    /// Seed for an auxiliary purpose (e.g. the deformation direction) that
    /// must be independent of the main stream of the same replica.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            master_seed: splitmix64(self.master_seed ^ splitmix64(tag.wrapping_add(1))),
            replica_index: self.replica_index,
        }
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.master_seed, self.replica_index)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Symmetry class: real symmetric (beta = 1) or complex Hermitian (beta = 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    Real,
    Complex,
}

impl Symmetry {
    pub fn from_beta(beta: u32) -> Result<Self> {
        match beta {
            1 => Ok(Symmetry::Real),
            2 => Ok(Symmetry::Complex),
            other => Err(Error::invalid(format!("beta must be 1 or 2, got {other}"))),
        }
    }

    pub fn beta(self) -> f64 {
        match self {
            Symmetry::Real => 1.0,
            Symmetry::Complex => 2.0,
        }
    }
}

/// A draw from a user-supplied entry distribution.
pub type EntrySampler = Arc<dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync>;

/// User-supplied entry law.
///
/// `off_diagonal` must produce standardized draws (mean 0, variance 1) whose
/// fourth moment is `fourth_moment`; for complex Hermitian matrices the real
/// and imaginary parts are two independent draws scaled by `1/sqrt(2)`.
/// `diagonal` must produce mean-zero draws of variance `diag_variance`.
/// Both moments must be declared; only moments 2 and 4 are audited.
#[derive(Clone)]
pub struct CustomLaw {
    pub name: String,
    pub off_diagonal: EntrySampler,
    pub diagonal: EntrySampler,
    pub fourth_moment: Option<f64>,
    pub diag_variance: Option<f64>,
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw")
            .field("name", &self.name)
            .field("fourth_moment", &self.fourth_moment)
            .field("diag_variance", &self.diag_variance)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum EntryLaw {
    Gaussian,
    /// `H = (W + W^T) / (2 sqrt(2N))` with i.i.d. +-1 entries of `W`.
    Rademacher,
    Custom(CustomLaw),
}

impl EntryLaw {
    pub fn name(&self) -> &str {
        match self {
            EntryLaw::Gaussian => "gaussian",
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::Custom(law) => &law.name,
        }
    }
}

/// Wigner model parameters.
///
/// `m4` is the off-diagonal fourth moment scale (`E|H_ij|^4 = m4/N^2`) and
/// `c4 = m4 - (4 - beta)/16` the associated fourth-cumulant parameter.
#[derive(Debug, Clone)]
pub struct EnsembleParams {
    pub symmetry: Symmetry,
    pub sigma2: f64,
    pub m4: f64,
    pub c4: f64,
    pub entry_law: EntryLaw,
    pub n: usize,
}

impl EnsembleParams {
    /// GOE (beta = 1, sigma2 = 2) or GUE (beta = 2, sigma2 = 1).
    pub fn gaussian(symmetry: Symmetry, n: usize) -> Result<Self> {
        let beta = symmetry.beta();
        let m4 = (4.0 - beta) / 16.0;
        Self::build(symmetry, 3.0 - beta, m4, EntryLaw::Gaussian, n)
    }

    pub fn goe(n: usize) -> Result<Self> {
        Self::gaussian(Symmetry::Real, n)
    }

    pub fn gue(n: usize) -> Result<Self> {
        Self::gaussian(Symmetry::Complex, n)
    }

    /// Real symmetric Rademacher ensemble: sigma2 = 2, m4 = 1/8, c4 = -1/16.
    pub fn rademacher(n: usize) -> Result<Self> {
        Self::build(Symmetry::Real, 2.0, 0.125, EntryLaw::Rademacher, n)
    }

    pub fn custom(symmetry: Symmetry, n: usize, law: CustomLaw) -> Result<Self> {
        let (Some(mu4), Some(sigma2)) = (law.fourth_moment, law.diag_variance) else {
            return Err(Error::invalid(format!(
                "custom entry law '{}' must declare its fourth moment and diagonal variance",
                law.name
            )));
        };
        let m4 = match symmetry {
            Symmetry::Real => mu4 / 16.0,
            Symmetry::Complex => (mu4 + 1.0) / 32.0,
        };
        Self::build(symmetry, sigma2, m4, EntryLaw::Custom(law), n)
    }

    fn build(symmetry: Symmetry, sigma2: f64, m4: f64, entry_law: EntryLaw, n: usize) -> Result<Self> {
        let params = Self {
            symmetry,
            sigma2,
            m4,
            c4: m4 - (4.0 - symmetry.beta()) / 16.0,
            entry_law,
            n,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn beta(&self) -> f64 {
        self.symmetry.beta()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::invalid(format!("sigma2 must be >= 0, got {}", self.sigma2)));
        }
        if !(self.m4.is_finite() && self.m4 >= 0.0) {
            return Err(Error::invalid(format!("m4 must be >= 0, got {}", self.m4)));
        }
        if self.c4 != self.m4 - (4.0 - self.beta()) / 16.0 {
            return Err(Error::invalid("c4 must equal m4 - (4 - beta)/16"));
        }
        match &self.entry_law {
            EntryLaw::Gaussian => {
                if self.sigma2 != 3.0 - self.beta() || self.c4 != 0.0 {
                    return Err(Error::invalid("gaussian entries force sigma2 = 3 - beta and c4 = 0"));
                }
            }
            EntryLaw::Rademacher => {
                if self.symmetry != Symmetry::Real {
                    return Err(Error::invalid("the rademacher ensemble is real symmetric only"));
                }
            }
            EntryLaw::Custom(law) => {
                if law.fourth_moment.is_none() || law.diag_variance.is_none() {
                    return Err(Error::invalid(format!(
                        "custom entry law '{}' must declare its moments",
                        law.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same law at a different dimension.
    pub fn with_dimension(&self, n: usize) -> Result<Self> {
        let mut p = self.clone();
        p.n = n;
        p.validate()?;
        Ok(p)
    }
}

/// Dense row-major entries of a symmetric or Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

#[derive(Debug, Clone)]
pub struct WignerMatrix {
    pub params: EnsembleParams,
    pub entries: Entries,
}

impl WignerMatrix {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let n = self.n();
        match &self.entries {
            Entries::Real(a) => Complex64::new(a[i * n + j], 0.0),
            Entries::Complex(a) => a[i * n + j],
        }
    }

    /// Exact (bitwise) symmetry or Hermiticity.
    pub fn is_self_adjoint(&self) -> bool {
        let n = self.n();
        match &self.entries {
            Entries::Real(a) => (0..n).all(|i| (0..i).all(|j| a[i * n + j].to_bits() == a[j * n + i].to_bits())),
            Entries::Complex(a) => (0..n).all(|i| {
                a[i * n + i].im == 0.0
                    && (0..i).all(|j| {
                        let (x, y) = (a[i * n + j], a[j * n + i].conj());
                        x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
                    })
            }),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.entry(i, i).re).sum()
    }
}

/// Samples a Wigner matrix with the given law.
pub fn sample_wigner(params: &EnsembleParams, seed: SeedSpec) -> Result<WignerMatrix> {
    params.validate()?;
    let n = params.n;
    let mut rng = seed.rng();
    let nf = n as f64;
    let entries = match params.symmetry {
        Symmetry::Real => {
            let mut a = vec![0.0; n * n];
            let off_scale = 1.0 / (2.0 * nf.sqrt());
            let diag_scale = 1.0 / (2.0 * nf.sqrt());
            let rad_scale = 1.0 / (2.0 * (2.0 * nf).sqrt());
            for i in 0..n {
                for j in i..n {
                    let x = match &params.entry_law {
                        EntryLaw::Gaussian => {
                            let z: f64 = rng.sample(StandardNormal);
                            if i == j {
                                z * params.sigma2.sqrt() * diag_scale
                            } else {
                                z * off_scale
                            }
                        }
                        EntryLaw::Rademacher => {
                            let w1 = rademacher(&mut rng);
                            let w2 = if i == j { w1 } else { rademacher(&mut rng) };
                            (w1 + w2) * rad_scale
                        }
                        EntryLaw::Custom(law) => {
                            if i == j {
                                (law.diagonal)(&mut rng) * diag_scale
                            } else {
                                (law.off_diagonal)(&mut rng) * off_scale
                            }
                        }
                    };
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
            Entries::Real(a)
        }
        Symmetry::Complex => {
            let mut a = vec![Complex64::new(0.0, 0.0); n * n];
            let scale = 1.0 / (2.0 * nf.sqrt());
            let half = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..n {
                for j in i..n {
                    let draw = |rng: &mut ChaCha8Rng| -> f64 {
                        match &params.entry_law {
                            EntryLaw::Custom(law) => {
                                if i == j {
                                    (law.diagonal)(rng)
                                } else {
                                    (law.off_diagonal)(rng)
                                }
                            }
                            _ => rng.sample(StandardNormal),
                        }
                    };
                    if i == j {
                        let d = draw(&mut rng);
                        let d = match params.entry_law {
                            EntryLaw::Custom(_) => d,
                            _ => d * params.sigma2.sqrt(),
                        };
                        a[i * n + i] = Complex64::new(d * scale, 0.0);
                    } else {
                        let re = draw(&mut rng) * half * scale;
                        let im = draw(&mut rng) * half * scale;
                        a[i * n + j] = Complex64::new(re, im);
                        a[j * n + i] = Complex64::new(re, -im);
                    }
                }
            }
            Entries::Complex(a)
        }
    };
    Ok(WignerMatrix {
        params: params.clone(),
        entries,
    })
}

fn rademacher(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Haar-distributed unitary matrix, row-major.
#[derive(Debug, Clone)]
pub struct HaarUnitary {
    pub n: usize,
    pub entries: Vec<Complex64>,
}

impl HaarUnitary {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    /// `max |(U* U - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self.entry(k, i).conj() * self.entry(k, j);
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.entry(i, i)).sum()
    }
}

/// Haar unitary via QR of a complex Ginibre matrix.
///
/// Column `j` of `Q` is multiplied by the unit phase of `R_jj`; without this
/// correction the result is not Haar distributed.
pub fn sample_haar_unitary(n: usize, seed: SeedSpec) -> Result<HaarUnitary> {
    if n == 0 {
        return Err(Error::invalid("matrix dimension must be at least 1"));
    }
    let mut rng = seed.rng();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut z = vec![Complex64::new(0.0, 0.0); n * n];
    for v in z.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = Complex64::new(re * half, im * half);
    }
    let ginibre = faer::Mat::<Complex64>::from_fn(n, n, |i, j| z[i * n + j]);
    let qr = ginibre.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let mut phases = Vec::with_capacity(n);
    for j in 0..n {
        let d = r[(j, j)];
        let modulus = d.norm();
        if !(modulus.is_finite() && modulus > f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "degenerate QR factor: |R[{j},{j}]| = {modulus:e}"
            )));
        }
        phases.push(d / modulus);
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = q[(i, j)] * phases[j];
        }
    }
    let u = HaarUnitary { n, entries };
    let defect = u.unitarity_defect();
    if !(defect <= 1e-10) {
        return Err(Error::Numerical(format!("orthonormalization lost unitarity: {defect:e}")));
    }
    Ok(u)
}

/// `H + strength * v v*` with `v` uniform on the unit sphere.
///
/// `direction_seed` drives `v` and `seed` drives `H`; `strength = 0` returns
/// exactly the matrix [`sample_wigner`] would.
pub fn sample_deformed_wigner(
    params: &EnsembleParams,
    strength: f64,
    direction_seed: SeedSpec,
    seed: SeedSpec,
) -> Result<WignerMatrix> {
    if !strength.is_finite() {
        return Err(Error::invalid("deformation strength must be finite"));
    }
    let mut h = sample_wigner(params, seed)?;
    if strength == 0.0 {
        return Ok(h);
    }
    let n = params.n;
    let mut rng = direction_seed.rng();
    match &mut h.entries {
        Entries::Real(a) => {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
            for i in 0..n {
                for j in i..n {
                    let x = a[i * n + j] + strength * v[i] * v[j];
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
        }
        Entries::Complex(a) => {
            let v: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let v: Vec<Complex64> = v.iter().map(|x| x / norm).collect();
            for i in 0..n {
                a[i * n + i] = Complex64::new(a[i * n + i].re + strength * v[i].norm_sqr(), 0.0);
                for j in (i + 1)..n {
                    let x = a[i * n + j] + v[i] * v[j].conj() * strength;
                    a[i * n + j] = x;
                    a[j * n + i] = x.conj();
                }
            }
        }
    }
    Ok(h)
}
