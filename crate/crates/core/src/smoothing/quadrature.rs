//! Fixed and adaptive quadrature rules.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Tag describing what a rule integrates against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Lebesgue measure on `[a, b]`.
    Interval { a: f64, b: f64 },
    /// `dx / sqrt(1 - x^2)` on `(-1, 1)`, total mass `pi`.
    ChebyshevWeight,
}

impl Domain {
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::ChebyshevWeight => PI,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: Domain,
}

impl QuadratureRule {
    /// Gauss–Legendre rule with `order` nodes on `[a, b]`.
    pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Self {
        let (x, w) = legendre_nodes(order);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Self {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|v| v * half).collect(),
            domain: Domain::Interval { a, b },
        }
    }

    /// `panels` equal sub-intervals, each with an `order`-point Gauss–Legendre rule.
    pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = legendre_nodes(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            for (t, v) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * width * t);
                weights.push(0.5 * width * v);
            }
        }
        Self {
            nodes,
            weights,
            domain: Domain::Interval { a, b },
        }
    }

    /// Gauss–Chebyshev (first kind) rule for `int f(x) / sqrt(1 - x^2) dx`;
    /// exact for polynomials of degree below `2 order`.
    pub fn gauss_chebyshev(order: usize) -> Self {
        let m = order as f64;
        Self {
            nodes: (1..=order).map(|j| ((2 * j - 1) as f64 * PI / (2.0 * m)).cos()).collect(),
            weights: vec![PI / m; order],
            domain: Domain::ChebyshevWeight,
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        crate::summation::compensated_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }

    pub fn weight_sum(&self) -> f64 {
        crate::summation::compensated_sum(self.weights.iter().copied())
    }
}

pub(crate) const PANEL_ORDER: usize = 16;
pub(crate) const DEFAULT_NODES: usize = 2048;
pub(crate) const MAX_NODES: usize = 1 << 16;

/// Composite Gauss–Legendre starting at 2048 nodes and doubling until two
/// successive results differ by less than `tol` (at most 2^16 nodes).
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> Result<f64> {
    let mut panels = DEFAULT_NODES / PANEL_ORDER;
    let mut previous = QuadratureRule::composite_gauss_legendre(a, b, panels, PANEL_ORDER).integrate(&mut f);
    loop {
        panels *= 2;
        let current = QuadratureRule::composite_gauss_legendre(a, b, panels, PANEL_ORDER).integrate(&mut f);
        if (current - previous).abs() < tol {
            return Ok(current);
        }
        if panels * PANEL_ORDER >= MAX_NODES {
            return Err(Error::QuadratureNonConvergence { previous, last: current });
        }
        previous = current;
    }
}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn legendre_nodes(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let m = order;
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0f64, 0.0f64);
            for j in 1..=m {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = m as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}
