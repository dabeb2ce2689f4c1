//! Nyström discretization of the combined-layer boundary operator on the
//! obstacle boundary.
//!
//! With `x(theta)` the counter-clockwise parameterization, `n(tau) =
//! (x2'(tau), -x1'(tau))` and `r = |x(t) - x(tau)|`, the free-space kernels
//!
//! ```text
//! L(t, tau) = (i k / 2) n(tau).(x(t) - x(tau)) H1(k r) / r     = 2 |x'| d_nu Phi
//! M(t, tau) = (i / 2) H0(k r) |x'(tau)|                        = 2 |x'| Phi
//! ```
//!
//! are split as `K1(t, tau) ln(4 sin^2((t - tau) / 2)) + K2(t, tau)` with
//!
//! ```text
//! L1 = -(k / 2 pi) n(tau).(x(t) - x(tau)) J1(k r) / r,   L1(t, t) = 0
//! M1 = -(1 / 2 pi) J0(k r) |x'(tau)|,
//! L2(t, t) = (x2' x1'' - x1' x2'') / (2 pi |x'|^2)
//! M2(t, t) = (i / 2 - C / pi - ln(k |x'| / 2) / pi) |x'|
//! ```
//!
//! The log factor is integrated exactly against the trigonometric interpolant
//! and the rest by the trapezoidal rule. The smooth reflected part of the
//! layered Green's function is added to `L2` and `M2`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{CurvePoint, ObstacleCurve, Point2};
use crate::greens::{LayeredGreens, Part};
use crate::specfun::{bessel01, EULER_GAMMA};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Equispaced nodes `theta_j = 2 pi j / m` on the obstacle boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNodes {
    pub theta: Vec<f64>,
    pub points: Vec<CurvePoint>,
}

impl BoundaryNodes {
    pub fn new(curve: &ObstacleCurve, m: usize) -> Result<Self> {
        if m < 8 || !m.is_multiple_of(2) {
            return Err(Error::validation("forward.m", "an even integer >= 8"));
        }
        let theta: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
        let points = theta.iter().map(|&t| curve.point(t)).collect::<Result<_>>()?;
        Ok(Self { theta, points })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Trapezoidal arc-length weight `2 pi |x'(theta_k)| / m`.
    pub fn arc_weight(&self, k: usize) -> f64 {
        TAU * self.points[k].speed / self.len() as f64
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.points.iter().map(|p| p.position).collect()
    }
}

/// Weight of node `t_j` for `int_0^{2pi} ln(4 sin^2((t - tau)/2)) g(tau) dtau`
/// with `s = t - t_j` and `m = 2 nh` nodes.
pub fn kress_log_weight(m: usize, s: f64) -> f64 {
    let nh = m / 2;
    let n = nh as f64;
    let sum: f64 = (1..nh).map(|k| (k as f64 * s).cos() / k as f64).sum();
    -TAU / n * sum - PI / (n * n) * (n * s).cos()
}

/// Weights of the trigonometric interpolant through `m` equispaced values.
pub fn trig_interpolation_weights(m: usize, t: f64) -> Vec<f64> {
    let nh = m / 2;
    (0..m)
        .map(|j| {
            let s = t - TAU * j as f64 / m as f64;
            let sum: f64 = (1..nh).map(|k| (k as f64 * s).cos()).sum();
            (1.0 + 2.0 * sum + (nh as f64 * s).cos()) / m as f64
        })
        .collect()
}

/// Free-space kernel parts `(L1, L2, M1, M2)` for a target off the source node.
fn split_parts(k: f64, target: Point2, s: f64, src: &CurvePoint) -> Result<[Complex64; 4]> {
    let diff = target - src.position;
    let r = diff.norm();
    let n = Point2::new(src.tangent.x2, -src.tangent.x1);
    let b = bessel01(k * r)?;
    let log = (4.0 * (0.5 * s).sin().powi(2)).ln();
    let nd = n.dot(diff);
    let l = I * (0.5 * k * nd / r) * b.h1();
    let l1 = -k / TAU * nd * b.j1 / r;
    let m = I * 0.5 * src.speed * b.h0();
    let m1 = -src.speed / TAU * b.j0;
    Ok([l1.into(), l - l1 * log, m1.into(), m - m1 * log])
}

fn diagonal_parts(k: f64, p: &CurvePoint) -> [Complex64; 4] {
    let (d, dd) = (p.tangent, p.second);
    let l2 = (d.x2 * dd.x1 - d.x1 * dd.x2) / (TAU * p.speed * p.speed);
    let m2 = (I * 0.5 - (EULER_GAMMA + (0.5 * k * p.speed).ln()) / PI) * p.speed;
    [0.0.into(), l2.into(), (-p.speed / TAU).into(), m2]
}

/// Rows of the discretized operator `(L - i M)` for targets `x(t)`, including
/// the reflected part of the layered Green's function. Targets coinciding
/// with a node use the diagonal limits.
pub fn operator_rows(greens: &LayeredGreens, nodes: &BoundaryNodes, curve: &ObstacleCurve, targets: &[f64]) -> Result<DMatrix<Complex64>> {
    let m = nodes.len();
    let k = greens.wavenumbers.k2;
    let trap = TAU / m as f64;
    let target_points: Vec<CurvePoint> = targets.iter().map(|&t| curve.point(t)).collect::<Result<_>>()?;

    // The lower/lower reflected part depends on the heights only through
    // their sum, so both points are moved to half of it.
    let mut pairs = Vec::with_capacity(targets.len() * m);
    for tp in &target_points {
        for src in &nodes.points {
            let h = 0.5 * (src.position.x2 + tp.position.x2);
            pairs.push((Point2::new(src.position.x1, h), Point2::new(tp.position.x1, h)));
        }
    }
    let psi = greens.evaluate_pairs(&pairs, Part::Smooth, true)?;

    let mut a = DMatrix::zeros(targets.len(), m);
    for (i, (&t, tp)) in targets.iter().zip(&target_points).enumerate() {
        for (j, src) in nodes.points.iter().enumerate() {
            let s = t - nodes.theta[j];
            let wrapped = s - TAU * (s / TAU).round();
            let [l1, l2, m1, m2] = if wrapped.abs() < 1e-13 {
                diagonal_parts(k, src)
            } else {
                split_parts(k, tp.position, s, src)?
            };
            let sample = psi[i * m + j];
            let nu = src.outward_normal;
            let l_psi = 2.0 * src.speed * (sample.grad[0] * nu.x1 + sample.grad[1] * nu.x2);
            let m_psi = 2.0 * src.speed * sample.value;
            a[(i, j)] = kress_log_weight(m, s) * (l1 - I * m1) + trap * (l2 + l_psi - I * (m2 + m_psi));
        }
    }
    Ok(a)
}
