//! Curves and point sets of the scattering scene.
//!
//! The interface is the graph `x2 = f(x1)` of a function that vanishes
//! outside a bounded support, so it coincides with the plane `x2 = 0` far
//! from the origin. The obstacle boundary is a closed counter-clockwise
//! parametric curve `theta -> x(theta)` on `[0, 2*pi)` lying strictly below
//! the interface.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x1 * rhs, self.x2 * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x1, -self.x2)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Point2::new(p[0], p[1])
    }
}

/// Cubic B-spline with support `[-2, 2]` and unit integral.
pub fn eval_spline_omega3(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        0.5 * a * a * a - a * a + 2.0 / 3.0
    } else if a < 2.0 {
        -a * a * a / 6.0 + a * a - 2.0 * a + 4.0 / 3.0
    } else {
        0.0
    }
}

/// Smooth cut-off: 1 on `|t| <= 4`, 0 on `|t| >= 5`.
pub fn eval_cutoff_f0(t: f64) -> f64 {
    let a = t.abs();
    if a <= 4.0 {
        1.0
    } else if a >= 5.0 {
        0.0
    } else {
        1.0 / (1.0 + (1.0 / (5.0 - a) + 1.0 / (4.0 - a)).exp())
    }
}

fn gauss(c: f64, center: f64, t: f64) -> f64 {
    let s = t - center;
    (-c * s * s).exp()
}

/// Natural cubic spline through tabulated `(t, f)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedSamples", into = "TabulatedSamples")]
pub struct TabulatedProfile {
    t: Vec<f64>,
    f: Vec<f64>,
    second: Vec<f64>,
    support: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedSamples {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
}

impl TryFrom<TabulatedSamples> for TabulatedProfile {
    type Error = Error;
    fn try_from(s: TabulatedSamples) -> Result<Self> {
        TabulatedProfile::new(s.t, s.f)
    }
}

impl From<TabulatedProfile> for TabulatedSamples {
    fn from(p: TabulatedProfile) -> Self {
        TabulatedSamples { t: p.t, f: p.f }
    }
}

const SUPPORT_THRESHOLD: f64 = 1e-14;

impl TabulatedProfile {
    pub fn new(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.len() != f.len() {
            return Err(Error::Config(format!(
                "custom interface has {} abscissae but {} values",
                t.len(),
                f.len()
            )));
        }
        if t.len() < 4 {
            return Err(Error::Config(
                "custom interface needs at least 4 tabulated samples".into(),
            ));
        }
        if t.iter().chain(&f).any(|v| !v.is_finite()) {
            return Err(Error::Config("custom interface samples must be finite".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "custom interface abscissae must be strictly increasing".into(),
            ));
        }
        let second = natural_spline_second_derivatives(&t, &f);
        let support = match (
            f.iter().position(|v| v.abs() > SUPPORT_THRESHOLD),
            f.iter().rposition(|v| v.abs() > SUPPORT_THRESHOLD),
        ) {
            (Some(lo), Some(hi)) => (t[lo.saturating_sub(1)], t[(hi + 1).min(t.len() - 1)]),
            _ => (0.0, 0.0),
        };
        Ok(Self {
            t,
            f,
            second,
            support,
        })
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        (self.support.1 > self.support.0).then_some(self.support)
    }

    fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support;
        if !(x > lo && x < hi) {
            return 0.0;
        }
        let k = match self.t.partition_point(|&v| v <= x) {
            0 => 0,
            p => (p - 1).min(self.t.len() - 2),
        };
        let h = self.t[k + 1] - self.t[k];
        let a = (self.t[k + 1] - x) / h;
        let b = (x - self.t[k]) / h;
        a * self.f[k]
            + b * self.f[k + 1]
            + ((a * a * a - a) * self.second[k] + (b * b * b - b) * self.second[k + 1]) * h * h / 6.0
    }
}

fn natural_spline_second_derivatives(t: &[f64], f: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut m = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in 1..n - 1 {
        let sig = (t[i] - t[i - 1]) / (t[i + 1] - t[i - 1]);
        let p = sig * m[i - 1] + 2.0;
        m[i] = (sig - 1.0) / p;
        let d = (f[i + 1] - f[i]) / (t[i + 1] - t[i]) - (f[i] - f[i - 1]) / (t[i] - t[i - 1]);
        u[i] = (6.0 * d / (t[i + 1] - t[i - 1]) - sig * u[i - 1]) / p;
    }
    m[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        m[i] = m[i] * m[i + 1] + u[i];
    }
    m
}

/// The function `f` whose graph is the rough interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterfaceProfile {
    #[default]
    Flat,
    SplineBump,
    ThreeBump,
    GaussianDip,
    TwoBump,
    FourBump,
    SixBump,
    Custom(TabulatedProfile),
}

impl InterfaceProfile {
    pub fn eval(&self, t: f64) -> f64 {
        use InterfaceProfile::*;
        match self {
            Flat => 0.0,
            SplineBump => -2.0 * eval_spline_omega3(t),
            ThreeBump => {
                2.0 * eval_spline_omega3(2.0 * t + 7.0) - 2.0 * eval_spline_omega3(2.0 * t)
                    + 2.0 * eval_spline_omega3(2.0 * t - 7.0)
            }
            GaussianDip => -1.5 * gauss(3.0, 3.0, t) * eval_cutoff_f0(t),
            TwoBump => (gauss(3.0, -2.0, t) + gauss(3.0, 2.0, t)) * eval_cutoff_f0(t),
            FourBump => {
                (gauss(8.0, -4.0, t) + gauss(8.0, -2.0, t) - 1.5 * gauss(6.0, 2.0, t)
                    + gauss(8.0, 4.0, t))
                    * eval_cutoff_f0(t)
            }
            SixBump => {
                (gauss(12.0, -4.0, t) + gauss(12.0, -2.5, t) - 2.0 * gauss(12.0, -1.0, t)
                    + gauss(10.0, 1.0, t)
                    + gauss(16.0, 2.5, t)
                    + gauss(12.0, 4.0, t))
                    * eval_cutoff_f0(t)
            }
            Custom(p) => p.eval(t),
        }
    }

    /// Closed interval outside of which `f` vanishes identically; `None` for a flat interface.
    pub fn support(&self) -> Option<(f64, f64)> {
        use InterfaceProfile::*;
        match self {
            Flat => None,
            SplineBump => Some((-2.0, 2.0)),
            ThreeBump => Some((-4.5, 4.5)),
            GaussianDip | TwoBump | FourBump | SixBump => Some((-5.0, 5.0)),
            Custom(p) => p.support(),
        }
    }

    pub fn is_flat(&self) -> bool {
        self.support().is_none()
    }

    pub fn formula(&self) -> &'static str {
        use InterfaceProfile::*;
        match self {
            Flat => "f(t)=0",
            SplineBump => "f(t)=-2*Omega3(t)",
            ThreeBump => "f(t)=2*Omega3(2t+7)-2*Omega3(2t)+2*Omega3(2t-7)",
            GaussianDip => "f(t)=-1.5e^{-3(t-3)^2}*f0(t)",
            TwoBump => "f(t)=[e^{-3(t+2)^2}+e^{-3(t-2)^2}]*f0(t)",
            FourBump => "f(t)=[e^{-8(t+4)^2}+e^{-8(t+2)^2}-1.5e^{-6(t-2)^2}+e^{-8(t-4)^2}]*f0(t)",
            SixBump => "f(t)=[e^{-12(t+4)^2}+e^{-12(t+2.5)^2}-2e^{-12(t+1)^2}+e^{-10(t-1)^2}+e^{-16(t-2.5)^2}+e^{-12(t-4)^2}]*f0(t)",
            Custom(_) => "f(t)=natural cubic spline through tabulated samples",
        }
    }

    /// Minimum and maximum of `f`, sampled densely over the support.
    pub fn range(&self) -> (f64, f64) {
        let Some((lo, hi)) = self.support() else {
            return (0.0, 0.0);
        };
        let samples = 4000;
        (0..=samples)
            .map(|k| self.eval(lo + (hi - lo) * k as f64 / samples as f64))
            .fold((0.0f64, 0.0f64), |(mn, mx), v| (mn.min(v), mx.max(v)))
    }
}

pub fn eval_interface(profile: &InterfaceProfile, t: f64) -> f64 {
    profile.eval(t)
}

/// Closed curve given by samples at equally spaced parameters, interpolated
/// by periodic cubic splines in each coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveSamples", into = "CurveSamples")]
pub struct TabulatedCurve {
    points: Vec<Point2>,
    second: Vec<Point2>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSamples {
    pub points: Vec<[f64; 2]>,
}

impl TryFrom<CurveSamples> for TabulatedCurve {
    type Error = Error;
    fn try_from(s: CurveSamples) -> Result<Self> {
        TabulatedCurve::new(s.points.into_iter().map(Point2::from).collect())
    }
}

impl From<TabulatedCurve> for CurveSamples {
    fn from(c: TabulatedCurve) -> Self {
        CurveSamples {
            points: c.points.iter().map(|p| [p.x1, p.x2]).collect(),
        }
    }
}

impl TabulatedCurve {
    /// Samples are taken at `theta_k = 2*pi*k/K`; clockwise input is reversed.
    pub fn new(mut points: Vec<Point2>) -> Result<Self> {
        if points.len() < 8 {
            return Err(Error::Config(
                "custom obstacle needs at least 8 boundary samples".into(),
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("custom obstacle samples must be finite".into()));
        }
        let n = points.len();
        let area: f64 = (0..n)
            .map(|k| {
                let (p, q) = (points[k], points[(k + 1) % n]);
                p.x1 * q.x2 - q.x1 * p.x2
            })
            .sum::<f64>()
            * 0.5;
        if area.abs() < 1e-12 {
            return Err(Error::Config("custom obstacle encloses no area".into()));
        }
        if area < 0.0 {
            points[1..].reverse();
        }
        let h = TAU / n as f64;
        let xs: Vec<f64> = points.iter().map(|p| p.x1).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.x2).collect();
        let mx = periodic_spline_second_derivatives(&xs, h);
        let my = periodic_spline_second_derivatives(&ys, h);
        let second = mx.into_iter().zip(my).map(|(a, b)| Point2::new(a, b)).collect();
        Ok(Self { points, second })
    }

    /// Position, first and second derivative at `theta`.
    fn eval(&self, theta: f64) -> (Point2, Point2, Point2) {
        let n = self.points.len();
        let h = TAU / n as f64;
        let s = theta.rem_euclid(TAU) / h;
        let k = (s.floor() as usize).min(n - 1);
        let b = s - k as f64;
        let a = 1.0 - b;
        let (y0, y1) = (self.points[k], self.points[(k + 1) % n]);
        let (m0, m1) = (self.second[k], self.second[(k + 1) % n]);
        let pos = y0 * a + y1 * b + (m0 * (a * a * a - a) + m1 * (b * b * b - b)) * (h * h / 6.0);
        let d1 = (y1 - y0) * (1.0 / h) + (m1 * (3.0 * b * b - 1.0) - m0 * (3.0 * a * a - 1.0)) * (h / 6.0);
        let d2 = m0 * a + m1 * b;
        (pos, d1, d2)
    }
}

fn periodic_spline_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    // M[k-1] + 4 M[k] + M[k+1] = 6 (y[k+1] - 2 y[k] + y[k-1]) / h^2, cyclic.
    let n = y.len();
    let rhs: Vec<f64> = (0..n)
        .map(|k| 6.0 * (y[(k + 1) % n] - 2.0 * y[k] + y[(k + n - 1) % n]) / (h * h))
        .collect();
    let mut m = vec![0.0; n];
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for k in 0..n {
            let v = (rhs[k] - m[(k + n - 1) % n] - m[(k + 1) % n]) / 4.0;
            delta = delta.max((v - m[k]).abs());
            m[k] = v;
        }
        let scale = m.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        if delta <= 1e-15 * scale {
            break;
        }
    }
    m
}

/// Boundary of the buried obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleCurve {
    #[default]
    None,
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// `rho(theta) = (0.5 + 0.4 cos + 0.1 sin 2theta) / (1 + 0.7 cos)` around `center`.
    Apple {
        center: [f64; 2],
    },
    /// `center + scale * (cos^3 + cos, sin^3 + sin)`.
    RoundedSquare {
        center: [f64; 2],
        scale: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
    Custom(TabulatedCurve),
}

/// Local frame of the obstacle boundary at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub position: Point2,
    /// `dx/dtheta`
    pub tangent: Point2,
    /// `d^2x/dtheta^2`
    pub second: Point2,
    pub outward_normal: Point2,
    pub speed: f64,
}

const MIN_SPEED: f64 = 1e-10;

fn apple_rho(theta: f64) -> (f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let p = 0.5 + 0.4 * c + 0.1 * s2;
    let dp = -0.4 * s + 0.2 * c2;
    let ddp = -0.4 * c - 0.4 * s2;
    let q = 1.0 + 0.7 * c;
    let dq = -0.7 * s;
    let ddq = -0.7 * c;
    let rho = p / q;
    let num = dp * q - p * dq;
    let drho = num / (q * q);
    let ddrho = (ddp * q - p * ddq) / (q * q) - 2.0 * dq * num / (q * q * q);
    (rho, drho, ddrho)
}

impl ObstacleCurve {
    pub fn is_none(&self) -> bool {
        matches!(self, ObstacleCurve::None)
    }

    /// Position and the first two `theta` derivatives.
    fn derivatives(&self, theta: f64) -> Result<(Point2, Point2, Point2)> {
        let (s, c) = theta.sin_cos();
        Ok(match self {
            ObstacleCurve::None => return Err(Error::NoObstacle),
            ObstacleCurve::Circle { center, radius: r } => (
                Point2::from(*center) + Point2::new(c, s) * *r,
                Point2::new(-s, c) * *r,
                Point2::new(-c, -s) * *r,
            ),
            ObstacleCurve::Ellipse {
                center,
                semi_axes: [a, b],
            } => (
                Point2::from(*center) + Point2::new(a * c, b * s),
                Point2::new(-a * s, b * c),
                Point2::new(-a * c, -b * s),
            ),
            ObstacleCurve::Apple { center } => {
                let (r, dr, ddr) = apple_rho(theta);
                let radial = Point2::new(c, s);
                let angular = Point2::new(-s, c);
                (
                    Point2::from(*center) + radial * r,
                    radial * dr + angular * r,
                    radial * (ddr - r) + angular * (2.0 * dr),
                )
            }
            ObstacleCurve::RoundedSquare { center, scale } => {
                let k = *scale;
                (
                    Point2::from(*center) + Point2::new(c * c * c + c, s * s * s + s) * k,
                    Point2::new(-s * (3.0 * c * c + 1.0), c * (3.0 * s * s + 1.0)) * k,
                    Point2::new(
                        -c * (3.0 * c * c + 1.0) + 6.0 * s * s * c,
                        -s * (3.0 * s * s + 1.0) + 6.0 * c * c * s,
                    ) * k,
                )
            }
            ObstacleCurve::Custom(curve) => curve.eval(theta),
        })
    }

    pub fn point(&self, theta: f64) -> Result<CurvePoint> {
        let (position, tangent, second) = self.derivatives(theta)?;
        let speed = tangent.norm();
        if !(speed > MIN_SPEED) {
            return Err(Error::DegenerateParameterization { theta, speed });
        }
        Ok(CurvePoint {
            position,
            tangent,
            second,
            outward_normal: Point2::new(tangent.x2 / speed, -tangent.x1 / speed),
            speed,
        })
    }

    pub fn formula(&self) -> String {
        match self {
            ObstacleCurve::None => "no obstacle".into(),
            ObstacleCurve::Circle { center, radius } => format!(
                "x(theta)=({}+{radius}cos(theta),{}+{radius}sin(theta))",
                center[0], center[1]
            ),
            ObstacleCurve::Apple { center } => format!(
                "x(theta)=({}+rho(theta)cos(theta),{}+rho(theta)sin(theta)), rho(theta)=(0.5+0.4cos(theta)+0.1sin(2theta))/(1+0.7cos(theta))",
                center[0], center[1]
            ),
            ObstacleCurve::RoundedSquare { center, scale } => format!(
                "x(theta)=({}+{scale}(cos^3(theta)+cos(theta)),{}+{scale}(sin^3(theta)+sin(theta)))",
                center[0], center[1]
            ),
            ObstacleCurve::Ellipse { center, semi_axes } => format!(
                "x(theta)=({}+{}cos(theta),{}+{}sin(theta))",
                center[0], semi_axes[0], center[1], semi_axes[1]
            ),
            ObstacleCurve::Custom(c) => format!(
                "periodic cubic spline through {} boundary samples",
                c.points.len()
            ),
        }
    }

    /// Highest point of the curve, sampled densely.
    pub fn top(&self) -> Result<f64> {
        let samples = 2000;
        let mut top = f64::NEG_INFINITY;
        for k in 0..samples {
            let theta = TAU * k as f64 / samples as f64;
            top = top.max(self.derivatives(theta)?.0.x2);
        }
        Ok(top)
    }

    /// Whether `p` lies inside the curve (winding number on a dense polygon).
    pub fn contains(&self, p: Point2) -> bool {
        let samples = 720;
        let Ok(poly) = (0..samples)
            .map(|k| self.derivatives(TAU * k as f64 / samples as f64).map(|d| d.0))
            .collect::<Result<Vec<_>>>()
        else {
            return false;
        };
        let mut inside = false;
        for k in 0..samples {
            let (a, b) = (poly[k], poly[(k + 1) % samples]);
            if (a.x2 > p.x2) != (b.x2 > p.x2) {
                let x = a.x1 + (p.x2 - a.x2) * (b.x1 - a.x1) / (b.x2 - a.x2);
                if p.x1 < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Dense polygonal approximation, used for distance queries.
    pub fn polygon(&self, samples: usize) -> Result<Vec<Point2>> {
        (0..samples)
            .map(|k| self.derivatives(TAU * k as f64 / samples as f64).map(|d| d.0))
            .collect()
    }
}

pub fn obstacle_point(curve: &ObstacleCurve, theta: f64) -> Result<CurvePoint> {
    curve.point(theta)
}

/// Sources and receivers `(x1, b)`, `|x1| <= a`, equally spaced with endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementLine {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Default for MeasurementLine {
    fn default() -> Self {
        Self {
            a: 20.0,
            b: 1.55,
            n: 401,
        }
    }
}

impl MeasurementLine {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::validation("measurement.a", "> 0"));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::validation("measurement.b", "> 0"));
        }
        if self.n < 2 {
            return Err(Error::validation("measurement.n", ">= 2"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.a / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<Point2> {
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|j| Point2::new(-self.a + 2.0 * self.a * j as f64 / last, self.b))
            .collect()
    }

    /// Composite trapezoid weights on the segment.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|j| if j == 0 || j + 1 == self.n { 0.5 * h } else { h })
            .collect()
    }
}

pub fn measurement_points(line: &MeasurementLine) -> Vec<Point2> {
    line.points()
}

/// Rectangular lattice of sampling points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingGrid {
    pub x1_range: [f64; 2],
    pub x2_range: [f64; 2],
    pub step_x1: f64,
    pub step_x2: f64,
}

impl Default for SamplingGrid {
    fn default() -> Self {
        Self {
            x1_range: [-5.0, 5.0],
            x2_range: [-8.5, 1.5],
            step_x1: 0.06,
            step_x2: 0.06,
        }
    }
}

fn axis_count(range: [f64; 2], step: f64) -> usize {
    ((range[1] - range[0]) / step + 1e-9).floor() as usize + 1
}

impl SamplingGrid {
    pub fn new(x1_range: [f64; 2], x2_range: [f64; 2], step: f64) -> Self {
        Self {
            x1_range,
            x2_range,
            step_x1: step,
            step_x2: step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("grid.step_x1", self.step_x1), ("grid.step_x2", self.step_x2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, "> 0"));
            }
        }
        for (name, r) in [("grid.x1", self.x1_range), ("grid.x2", self.x2_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[1] >= r[0]) {
                return Err(Error::validation(name, "a finite interval [min, max] with min <= max"));
            }
        }
        Ok(())
    }

    /// `(count along x1, count along x2)`; both endpoints of each range are
    /// reached only if they lie on the lattice `min + k * step`.
    pub fn shape(&self) -> (usize, usize) {
        (
            axis_count(self.x1_range, self.step_x1),
            axis_count(self.x2_range, self.step_x2),
        )
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x1_values(&self) -> Vec<f64> {
        (0..self.shape().0)
            .map(|k| self.x1_range[0] + k as f64 * self.step_x1)
            .collect()
    }

    pub fn x2_values(&self) -> Vec<f64> {
        (0..self.shape().1)
            .map(|k| self.x2_range[0] + k as f64 * self.step_x2)
            .collect()
    }

    /// Row-major points: `x2` varies slowest, `x1` fastest.
    pub fn points(&self) -> Vec<Point2> {
        let xs = self.x1_values();
        self.x2_values()
            .into_iter()
            .flat_map(|x2| xs.iter().map(move |&x1| Point2::new(x1, x2)))
            .collect()
    }

    /// Horizontal bands separated at the given heights, each a grid of its own.
    pub fn split_at(&self, cuts: &[f64]) -> Vec<SamplingGrid> {
        let mut edges: Vec<f64> = cuts
            .iter()
            .copied()
            .filter(|c| *c > self.x2_range[0] && *c < self.x2_range[1])
            .collect();
        edges.sort_by(f64::total_cmp);
        let mut bounds = vec![self.x2_range[0]];
        bounds.extend(edges);
        bounds.push(self.x2_range[1]);
        // Upper band first.
        bounds
            .windows(2)
            .rev()
            .map(|w| SamplingGrid {
                x2_range: [w[0], w[1]],
                ..*self
            })
            .collect()
    }
}

pub fn grid_points(grid: &SamplingGrid) -> Vec<Point2> {
    grid.points()
}

/// Distance from `p` to the closed polygon.
pub fn distance_to_polygon(p: Point2, poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|k| segment_distance(p, poly[k], poly[(k + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let s = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(a + ab * s)
}
