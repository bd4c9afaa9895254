//! Goodness-of-fit statistics for random-matrix spectra.
//!
//! The crate samples Wigner and Haar-unitary matrices, extracts their
//! spectra, and evaluates the Cramér–von Mises (CvM), Kolmogorov–Smirnov
//! and Poisson-smoothed (mesoscopic) CvM statistics against the semicircle
//! law, together with a CvM-type statistic for the circular unitary
//! ensemble. Samplers for the limiting laws and a reproducible Monte Carlo
//! harness sit on top.
//!
//! Module map:
//!
//! * [`ensembles`]: matrix samplers and deterministic seeding
//! * [`spectral`]: eigenvalues, eigenphases, semicircle CDF and quantiles
//! * [`chebyshev`]: Chebyshev polynomials and centered trace statistics
//! * [`smoothing`]: Poisson kernels, smoothed indicators and CDFs, quadrature
//! * [`statistics`]: the goodness-of-fit statistics themselves
//! * [`limitlaw`]: limit-law constants and samplers, kernel density estimates
//! * [`montecarlo`]: replica fan-out, moment reports, two-sample KS, figures

pub mod chebyshev;
pub mod ensembles;
mod error;
pub mod limitlaw;
pub mod montecarlo;
pub mod smoothing;
pub mod spectral;
pub mod statistics;
pub(crate) mod summation;

pub use error::{Error, Result};
