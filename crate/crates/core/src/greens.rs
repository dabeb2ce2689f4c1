//! Green's function of the two-layer background medium.
//!
//! Wavenumber `k1` fills `x2 > 0` and `k2` fills `x2 < 0`. With
//! `d = x1 - y1` every case is written as a free-space term plus
//! `(1/pi) int_0^inf F(xi) cos(xi d) dxi`, where `F` depends on the case:
//!
//! | field / source | free term   | `F(xi)`                                          |
//! |----------------|-------------|--------------------------------------------------|
//! | upper / upper  | `Phi_k1`    | `(i/2) R e^{i b1 (x2 + y2)} / b1`                 |
//! | lower / lower  | `Phi_k2`    | `-(i/2) R e^{-i b2 (x2 + y2)} / b2`               |
//! | lower / upper  | none        | `i e^{i (b1 y2 - b2 x2)} / (b1 + b2)`             |
//! | upper / lower  | none        | `i e^{i (b1 x2 - b2 y2)} / (b1 + b2)`             |
//!
//! with `bj = beta(xi, kj)` and `R = (b1 - b2) / (b1 + b2)`.
//!
//! For the two transmitted cases the free-space function `Phi_kbar` with
//! `kbar^2 = (k1^2 h_up + k2^2 h_down) / (h_up + h_down)` is optionally split
//! off; its spectral density `(i/2) e^{i bbar |x2 - y2|} / bbar` matches `F`
//! to second order in `1/xi`, which keeps the remainder integrable when both
//! points approach the interface. The identity holds for any fixed `kbar`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::quad::{integrate, QuadSettings, Segment};
use crate::specfun::{bessel01, phi_radial, COINCIDENCE_TOL};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveNumbers {
    pub k1: f64,
    pub k2: f64,
}

impl Default for WaveNumbers {
    fn default() -> Self {
        Self { k1: 1.0, k2: 2.0 }
    }
}

impl WaveNumbers {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        let w = Self { k1, k2 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::validation("wavenumbers.k1", "> 0"));
        }
        if !(self.k2 > 0.0 && self.k2.is_finite()) {
            return Err(Error::validation("wavenumbers.k2", "> 0"));
        }
        Ok(())
    }

    /// `k1^2 - k2^2`
    pub fn eta(&self) -> f64 {
        self.k1 * self.k1 - self.k2 * self.k2
    }

    /// Background wavenumber at height `x2`; the interface itself counts as upper.
    pub fn at(&self, x2: f64) -> f64 {
        if x2 >= 0.0 {
            self.k1
        } else {
            self.k2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SommerfeldConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest spectral truncation point; the remainder beyond it is estimated.
    pub xi_max: f64,
    /// Branch points closer than this are merged into one breakpoint.
    pub branch_split_pad: f64,
    pub max_subdivisions: usize,
    pub subtract_singularity: bool,
}

impl Default for SommerfeldConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            xi_max: 1e4,
            branch_split_pad: 1e-12,
            max_subdivisions: 4000,
            subtract_singularity: true,
        }
    }
}

impl SommerfeldConfig {
    pub fn validate(&self, wn: &WaveNumbers) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::validation("forward.sommerfeld.rel_tol", "> 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::validation("forward.sommerfeld.abs_tol", "> 0"));
        }
        if !(self.xi_max > wn.k1.max(wn.k2) + 1.0) {
            return Err(Error::validation(
                "forward.sommerfeld.xi_max",
                "> max(k1, k2) + 1",
            ));
        }
        if !(self.branch_split_pad >= 0.0) {
            return Err(Error::validation("forward.sommerfeld.branch_split_pad", ">= 0"));
        }
        if self.max_subdivisions < 16 {
            return Err(Error::validation("forward.sommerfeld.max_subdivisions", ">= 16"));
        }
        Ok(())
    }
}

/// Vertical wavenumber with `Re >= 0` and `Im >= 0`.
pub fn beta(xi: f64, kappa: f64) -> Complex64 {
    let a = xi.abs();
    if a < kappa {
        Complex64::new(((kappa - a) * (kappa + a)).sqrt(), 0.0)
    } else {
        Complex64::new(0.0, ((a - kappa) * (a + kappa)).sqrt())
    }
}

/// Which part of `G0(x, y)` to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// `G0` itself.
    Full,
    /// `G0 - Phi_k1`.
    Scattered,
    /// `G0` minus the free-space function of the common half-plane when both
    /// points share one, otherwise `G0`. Finite at coincident points.
    Smooth,
}

/// Value and gradient with respect to the field point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GreensSample {
    pub value: Complex64,
    pub grad: [Complex64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Case {
    UpperUpper,
    LowerLower,
    LowerUpper,
    UpperLower,
}

impl Case {
    fn of(x2: f64, y2: f64) -> Self {
        match (x2 >= 0.0, y2 >= 0.0) {
            (true, true) => Case::UpperUpper,
            (false, false) => Case::LowerLower,
            (false, true) => Case::LowerUpper,
            (true, false) => Case::UpperLower,
        }
    }

    fn is_cross(self) -> bool {
        matches!(self, Case::LowerUpper | Case::UpperLower)
    }
}

fn cexp(z: Complex64) -> Complex64 {
    if z.re < -700.0 {
        ZERO
    } else {
        z.exp()
    }
}

/// Spectral density `F` and its `x2` derivative for one height pair.
struct Spectral {
    case: Case,
    k1: f64,
    k2: f64,
    x2: f64,
    y2: f64,
    kbar: Option<f64>,
    equal: bool,
}

impl Spectral {
    fn eval(&self, xi: f64) -> (Complex64, Complex64) {
        let b1 = beta(xi, self.k1);
        let b2 = beta(xi, self.k2);
        let r = if self.equal { ZERO } else { (b1 - b2) / (b1 + b2) };
        let (mut f, mut df) = match self.case {
            Case::UpperUpper => {
                let e = cexp(I * b1 * (self.x2 + self.y2));
                (I * 0.5 * r * e / b1, -0.5 * r * e)
            }
            Case::LowerLower => {
                let e = cexp(-I * b2 * (self.x2 + self.y2));
                (-I * 0.5 * r * e / b2, -0.5 * r * e)
            }
            Case::LowerUpper => {
                let f = I * cexp(I * (b1 * self.y2 - b2 * self.x2)) / (b1 + b2);
                (f, -I * b2 * f)
            }
            Case::UpperLower => {
                let f = I * cexp(I * (b1 * self.x2 - b2 * self.y2)) / (b1 + b2);
                (f, I * b1 * f)
            }
        };
        if let Some(kb) = self.kbar {
            let bb = beta(xi, kb);
            let delta = (self.x2 - self.y2).abs();
            let e = cexp(I * bb * delta);
            f -= I * 0.5 * e / bb;
            df -= -0.5 * (self.x2 - self.y2).signum() * e;
        }
        (f, df)
    }

    /// Height controlling the exponential decay of `F`.
    fn decay_height(&self) -> f64 {
        match self.case {
            Case::UpperUpper | Case::LowerLower => (self.x2 + self.y2).abs(),
            _ => (self.x2 - self.y2).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    /// `xi = p + (q - p)(1 - cos t)/2`, `t` in `[0, pi]`.
    Cosine { p: f64, q: f64 },
    /// `xi = p + u^2`, `u` in `[0, 1]`.
    Square { p: f64 },
    Linear,
}

impl Map {
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Cosine { p, q } => {
                let h = (0.5 * t).sin();
                (p + (q - p) * h * h, 0.5 * (q - p) * t.sin())
            }
            Map::Square { p } => (p + t * t, 2.0 * t),
            Map::Linear => (t, 1.0),
        }
    }
}

/// Two-layer Green's function evaluator; immutable and shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredGreens {
    pub wavenumbers: WaveNumbers,
    pub config: SommerfeldConfig,
}

impl LayeredGreens {
    pub fn new(wavenumbers: WaveNumbers, config: SommerfeldConfig) -> Result<Self> {
        wavenumbers.validate()?;
        config.validate(&wavenumbers)?;
        Ok(Self { wavenumbers, config })
    }

    pub fn with_defaults(k1: f64, k2: f64) -> Result<Self> {
        Self::new(WaveNumbers::new(k1, k2)?, SommerfeldConfig::default())
    }

    fn kbar(&self, x2: f64, y2: f64) -> f64 {
        let (k1, k2) = (self.wavenumbers.k1, self.wavenumbers.k2);
        let (up, down) = if x2 >= 0.0 { (x2, -y2) } else { (y2, -x2) };
        let total = up + down;
        if total <= 0.0 {
            return k1;
        }
        ((k1 * k1 * up + k2 * k2 * down) / total).sqrt()
    }

    /// `(1/pi) int F cos(xi d)` and the matching gradient integrals, one
    /// entry per offset `d`.
    fn sommerfeld(
        &self,
        spec: &Spectral,
        offsets: &[f64],
        grad: bool,
    ) -> Result<Vec<(Complex64, [Complex64; 2])>> {
        let cfg = &self.config;
        let mut breaks = vec![0.0, spec.k1, spec.k2];
        breaks.extend(spec.kbar);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|b, a| (*b - *a).abs() <= cfg.branch_split_pad);
        let kmax = *breaks.last().unwrap_or(&0.0);

        let mut maps = Vec::new();
        let mut segments = Vec::new();
        for w in breaks.windows(2) {
            maps.push(Map::Cosine { p: w[0], q: w[1] });
            segments.push(Segment {
                kind: maps.len() - 1,
                a: 0.0,
                b: PI,
            });
        }
        maps.push(Map::Square { p: kmax });
        segments.push(Segment {
            kind: maps.len() - 1,
            a: 0.0,
            b: 1.0,
        });
        maps.push(Map::Linear);
        let linear = maps.len() - 1;

        let h = spec.decay_height();
        let start = kmax + 1.0;
        let mut end = if h > 0.0 { start + 40.0 / h } else { f64::INFINITY };
        let capped = end > cfg.xi_max;
        end = end.min(cfg.xi_max);
        let dmax = offsets.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut width = 2.0f64;
        if dmax > 0.0 {
            width = width.min(6.0 / dmax);
        }
        if h > 0.0 {
            width = width.min(4.0 / h);
        }
        let budget = (cfg.max_subdivisions / 2).max(1);
        let mut count = ((end - start) / width).ceil().max(1.0) as usize;
        if count > budget {
            count = budget;
        }
        let width = (end - start) / count as f64;
        for k in 0..count {
            segments.push(Segment {
                kind: linear,
                a: start + k as f64 * width,
                b: if k + 1 == count { end } else { start + (k + 1) as f64 * width },
            });
        }

        let per = if grad { 3 } else { 1 };
        let settings = QuadSettings {
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            max_panels: cfg.max_subdivisions.max(segments.len() + 16),
        };
        let out = integrate(&segments, per * offsets.len(), &settings, |kind, t, o| {
            let (xi, jac) = maps[kind].apply(t);
            let (f, df) = spec.eval(xi);
            // Nodes rounding onto a branch point would give inf * 0.
            let (f, df) = if f.is_finite() && df.is_finite() { (f * jac, df * jac) } else { (ZERO, ZERO) };
            for (i, d) in offsets.iter().enumerate() {
                let (s, c) = (xi * d).sin_cos();
                if grad {
                    o[3 * i] = f * c;
                    o[3 * i + 1] = -f * (xi * s);
                    o[3 * i + 2] = df * c;
                } else {
                    o[i] = f * c;
                }
            }
        })?;

        if capped {
            let (f, df) = spec.eval(end);
            let envelope = f.norm().max(df.norm()).max(end * f.norm());
            let tail = envelope * if h > 0.0 { (1.0 / h).min(end) } else { end } / PI;
            let scale = out.values.iter().fold(0.0f64, |m, v| m.max(v.norm())) / PI;
            let requested = cfg.abs_tol.max(cfg.rel_tol * scale);
            if tail > requested {
                return Err(Error::Accuracy {
                    achieved: tail,
                    requested,
                });
            }
        }

        Ok((0..offsets.len())
            .map(|i| {
                if grad {
                    (
                        out.values[3 * i] / PI,
                        [out.values[3 * i + 1] / PI, out.values[3 * i + 2] / PI],
                    )
                } else {
                    (out.values[i] / PI, [ZERO; 2])
                }
            })
            .collect())
    }

    /// `G0` parts for a fixed height pair `(x2, y2)` and many horizontal
    /// offsets `d = x1 - y1`; the spectral factors are shared by all offsets.
    pub fn g0_batch(
        &self,
        x2: f64,
        y2: f64,
        offsets: &[f64],
        part: Part,
        grad: bool,
    ) -> Result<Vec<GreensSample>> {
        let (k1, k2) = (self.wavenumbers.k1, self.wavenumbers.k2);
        let case = Case::of(x2, y2);
        let equal = k1 == k2;
        let kbar = (case.is_cross() && self.config.subtract_singularity).then(|| self.kbar(x2, y2));
        let spec = Spectral {
            case,
            k1,
            k2,
            x2,
            y2,
            kbar,
            equal,
        };

        // Unique |d|, keyed at 1e-9 resolution; cos is even and sin odd in d.
        let mut keys: BTreeMap<i64, usize> = BTreeMap::new();
        let mut unique = Vec::new();
        let index: Vec<usize> = offsets
            .iter()
            .map(|d| {
                let key = (d.abs() * 1e9).round() as i64;
                *keys.entry(key).or_insert_with(|| {
                    unique.push(d.abs());
                    unique.len() - 1
                })
            })
            .collect();

        let vanishes = match case {
            Case::UpperUpper | Case::LowerLower => equal,
            _ => equal && kbar.is_some(),
        };
        let spectral = if vanishes {
            vec![(ZERO, [ZERO; 2]); unique.len()]
        } else {
            self.sommerfeld(&spec, &unique, grad)?
        };

        // Closed-form free-space terms as (wavenumber, coefficient).
        let mut full = match case {
            Case::UpperUpper => vec![(k1, 1.0)],
            Case::LowerLower => vec![(k2, 1.0)],
            _ => kbar.map(|kb| vec![(kb, 1.0)]).unwrap_or_default(),
        };
        let free = match part {
            Part::Full => full,
            Part::Scattered if case == Case::UpperUpper => vec![],
            Part::Scattered => {
                full.push((k1, -1.0));
                full
            }
            Part::Smooth if case.is_cross() => full,
            Part::Smooth => vec![],
        };

        offsets
            .iter()
            .zip(&index)
            .map(|(&d, &u)| {
                let (v, g) = spectral[u];
                let sign = if d < 0.0 { -1.0 } else { 1.0 };
                let mut sample = GreensSample {
                    value: v,
                    grad: [g[0] * sign, g[1]],
                };
                if !free.is_empty() {
                    let dx = Point2::new(d, x2 - y2);
                    let r = dx.norm();
                    if r < COINCIDENCE_TOL {
                        return Err(Error::Singularity { separation: r });
                    }
                    for &(k, c) in &free {
                        if grad {
                            let b = bessel01(k * r)?;
                            sample.value += I * 0.25 * c * b.h0();
                            let s = -I * 0.25 * k * c * b.h1() / r;
                            sample.grad[0] += s * dx.x1;
                            sample.grad[1] += s * dx.x2;
                        } else {
                            sample.value += c * phi_radial(r, k)?;
                        }
                    }
                }
                Ok(sample)
            })
            .collect()
    }

    /// Evaluates many `(x, y)` pairs, grouping equal height pairs so each
    /// group costs one spectral integration.
    pub fn evaluate_pairs(&self, pairs: &[(Point2, Point2)], part: Part, grad: bool) -> Result<Vec<GreensSample>> {
        let mut groups: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
        for (i, (x, y)) in pairs.iter().enumerate() {
            groups.entry((x.x2.to_bits(), y.x2.to_bits())).or_default().push(i);
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let results: Vec<Vec<GreensSample>> = groups
            .par_iter()
            .map(|idx| {
                let (x, y) = pairs[idx[0]];
                let offsets: Vec<f64> = idx.iter().map(|&i| pairs[i].0.x1 - pairs[i].1.x1).collect();
                self.g0_batch(x.x2, y.x2, &offsets, part, grad)
            })
            .collect::<Result<_>>()?;
        let mut out = vec![GreensSample::default(); pairs.len()];
        for (idx, res) in groups.iter().zip(results) {
            for (&i, s) in idx.iter().zip(res) {
                out[i] = s;
            }
        }
        Ok(out)
    }

    fn single(&self, x: Point2, y: Point2, part: Part, grad: bool) -> Result<GreensSample> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Domain {
                function: "g0",
                value: f64::NAN,
                constraint: "finite coordinates",
            });
        }
        Ok(self.g0_batch(x.x2, y.x2, &[x.x1 - y.x1], part, grad)?[0])
    }

    /// Reflected part for two upper points.
    pub fn psi1(&self, x: Point2, y: Point2) -> Result<Complex64> {
        if !(x.x2 > 0.0 && y.x2 > 0.0) {
            return Err(Error::Domain {
                function: "psi1",
                value: x.x2.min(y.x2),
                constraint: "x2 > 0 and y2 > 0",
            });
        }
        Ok(self.single(x, y, Part::Smooth, false)?.value)
    }

    /// Transmitted field at a lower point `x` from an upper source `y`.
    pub fn psi2(&self, x: Point2, y: Point2) -> Result<Complex64> {
        if !(x.x2 < 0.0 && y.x2 > 0.0) {
            return Err(Error::Domain {
                function: "psi2",
                value: x.x2,
                constraint: "x2 < 0 < y2",
            });
        }
        Ok(self.single(x, y, Part::Full, false)?.value)
    }

    pub fn g0(&self, x: Point2, y: Point2) -> Result<Complex64> {
        Ok(self.single(x, y, Part::Full, false)?.value)
    }

    /// `G0 - Phi_k1`.
    pub fn g0_scattered(&self, x: Point2, y: Point2) -> Result<Complex64> {
        Ok(self.single(x, y, Part::Scattered, false)?.value)
    }

    /// Gradient of `G0` in the field point `x`.
    pub fn grad_g0(&self, x: Point2, y: Point2) -> Result<[Complex64; 2]> {
        Ok(self.single(x, y, Part::Full, true)?.grad)
    }

    pub fn g0_with_grad(&self, x: Point2, y: Point2, part: Part) -> Result<GreensSample> {
        self.single(x, y, part, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{grad_phi, phi};
    use rand::{Rng, SeedableRng};

    fn lg(k1: f64, k2: f64) -> LayeredGreens {
        LayeredGreens::with_defaults(k1, k2).unwrap()
    }

    fn p(a: f64, b: f64) -> Point2 {
        Point2::new(a, b)
    }

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(2024)
    }

    #[test]
    fn beta_branches() {
        assert_eq!(beta(0.0, 1.5), Complex64::new(1.5, 0.0));
        assert_eq!(beta(1.5, 1.5), ZERO);
        assert!((beta(3.0, 1.5) - Complex64::new(0.0, 1.5 * 3f64.sqrt())).norm() < 1e-15);
        for k in [1.0, 2.0] {
            for j in 0..=2000 {
                let xi = -100.0 + 0.1 * j as f64;
                let b = beta(xi, k);
                assert!(b.re >= 0.0 && b.im >= 0.0);
                assert!((b.norm_sqr() - (k * k - xi * xi).abs()).abs() < 1e-9 * (1.0 + xi * xi));
            }
        }
    }

    // Values from an independent 25-digit tanh-sinh evaluation of the same
    // spectral integrals with k1 = 1, k2 = 2.
    type OracleEntry = ((f64, f64), (f64, f64), f64, f64);
    const ORACLE: &[OracleEntry] = &[
        ((0.3, 1.0), (0.0, 1.0), 0.23749152608708186, 0.2203128912351197),
        ((1.0, -2.0), (0.0, 1.0), 0.088386843116474357, -0.024054249276389058),
        ((3.0, -4.0), (1.0, 2.0), 0.017634561095640415, -0.061506910623182659),
        ((1.0, 2.0), (3.0, -4.0), 0.017634561095640415, -0.061506910623182659),
        ((0.5, -1.0), (-0.7, -2.5), -0.012714864770826778, -0.075585456675533727),
        ((4.0, 1.55), (-2.0, 1.55), 0.052099779082850809, -0.0030593472762821904),
        ((0.2, -0.3), (0.0, 0.4), -0.033625071159021052, 0.17685460159923699),
    ];

    #[test]
    fn matches_high_precision_oracle() {
        for subtract in [true, false] {
            let g = LayeredGreens::new(
                WaveNumbers::new(1.0, 2.0).unwrap(),
                SommerfeldConfig {
                    subtract_singularity: subtract,
                    ..Default::default()
                },
            )
            .unwrap();
            for &(x, y, re, im) in ORACLE {
                let v = g.g0(p(x.0, x.1), p(y.0, y.1)).unwrap();
                let want = Complex64::new(re, im);
                assert!((v - want).norm() < 1e-9 * want.norm().max(0.1), "{x:?} {y:?}: {v} vs {want}");
            }
            let s = g.psi1(p(0.0, 1.0), p(0.0, 1.0)).unwrap();
            assert!((s - Complex64::new(0.034997365278151439, -0.02469521865214663)).norm() < 1e-10);
        }
    }

    #[test]
    fn equal_wavenumbers_collapse_to_free_space() {
        let g = lg(1.0, 1.0);
        assert_eq!(g.psi1(p(0.0, 2.0), p(0.0, 1.0)).unwrap(), ZERO);
        assert_eq!(g.g0(p(0.0, 2.0), p(0.0, 1.0)).unwrap(), phi(p(0.0, 2.0), p(0.0, 1.0), 1.0).unwrap());
        let plain = LayeredGreens::new(
            WaveNumbers::new(1.3, 1.3).unwrap(),
            SommerfeldConfig {
                subtract_singularity: false,
                ..Default::default()
            },
        )
        .unwrap();
        let mut r = rng();
        for _ in 0..10 {
            let x = p(r.random_range(-3.0..3.0), r.random_range(-3.0..-0.1));
            let y = p(r.random_range(-3.0..3.0), r.random_range(0.1..3.0));
            let want = phi(x, y, 1.3).unwrap();
            assert!((plain.g0(x, y).unwrap() - want).norm() < 1e-9);
            assert!((plain.g0(y, x).unwrap() - want).norm() < 1e-9);
            let gg = plain.grad_g0(x, y).unwrap();
            let gp = grad_phi(x, y, 1.3).unwrap();
            assert!((gg[0] - gp[0]).norm() < 1e-8 && (gg[1] - gp[1]).norm() < 1e-8);
        }
    }

    #[test]
    fn psi1_is_symmetric() {
        let g = lg(1.0, 2.0);
        let (x, y) = (p(0.4, 0.7), p(-1.1, 1.3));
        assert!((g.psi1(x, y).unwrap() - g.psi1(y, x).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn psi1_self_convergence() {
        let coarse = lg(1.0, 2.0);
        let fine = LayeredGreens::new(
            WaveNumbers::new(1.0, 2.0).unwrap(),
            SommerfeldConfig {
                rel_tol: 1e-13,
                max_subdivisions: 20000,
                ..Default::default()
            },
        )
        .unwrap();
        let x = p(0.0, 1.0);
        let a = coarse.psi1(x, x).unwrap();
        let b = fine.psi1(x, x).unwrap();
        assert!((a - b).norm() < 1e-8 * b.norm());
        // Halving the tolerance moves the result by less than the previous tolerance.
        let mut prev = a;
        for tol in [5e-11, 2.5e-11] {
            let g = LayeredGreens::new(
                WaveNumbers::new(1.0, 2.0).unwrap(),
                SommerfeldConfig {
                    rel_tol: tol,
                    ..Default::default()
                },
            )
            .unwrap();
            let v = g.psi1(p(2.0, 0.5), p(-1.0, 1.5)).unwrap();
            if tol < 5e-11 {
                assert!((v - prev).norm() < 2.0 * tol * v.norm());
            }
            prev = v;
        }
    }

    #[test]
    fn reciprocity_across_half_planes() {
        let g = lg(1.0, 2.0);
        let mut r = rng();
        for _ in 0..20 {
            let x = p(r.random_range(-4.0..4.0), r.random_range(0.2..4.0));
            let y = p(r.random_range(-4.0..4.0), r.random_range(-4.0..-0.2));
            let a = g.g0(x, y).unwrap();
            let b = g.g0(y, x).unwrap();
            assert!((a - b).norm() < 1e-8 * a.norm(), "{x:?} {y:?}");
        }
    }

    #[test]
    fn transmitted_field_decays() {
        let g = lg(1.0, 2.0);
        let y = p(0.0, 1.0);
        let m: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&r| g.psi2(p(0.5, -r), y).unwrap().norm()).collect();
        assert!(m[0] > m[1] && m[1] > m[2], "{m:?}");
    }

    #[test]
    fn continuity_across_interface() {
        let g = lg(1.0, 2.0);
        let y = p(0.0, 1.0);
        for x1 in [-2.0, 0.3, 1.7] {
            let jump = |h: f64| {
                let up = g.g0_with_grad(p(x1, h), y, Part::Full).unwrap();
                let dn = g.g0_with_grad(p(x1, -h), y, Part::Full).unwrap();
                (up.value - dn.value, up.grad[1] - dn.grad[1], up.grad[1] + dn.grad[1], up.value)
            };
            let (j1, d1, mean_slope, v) = jump(1e-4);
            let (j2, d2, _, _) = jump(5e-5);
            // One-sided values differ only by the drift 2h dG/dx2 plus O(h^2).
            assert!((j1 - mean_slope * 1e-4).norm() < 1e-4 * v.norm());
            // Linear Richardson extrapolation to h = 0.
            assert!((2.0 * j2 - j1).norm() < 1e-6 * v.norm());
            assert!((2.0 * d2 - d1).norm() < 1e-6 * v.norm().max(1.0));
        }
    }

    #[test]
    fn helmholtz_residual_below_interface() {
        let g = LayeredGreens::new(
            WaveNumbers::new(1.0, 2.0).unwrap(),
            SommerfeldConfig {
                rel_tol: 1e-13,
                max_subdivisions: 20000,
                ..Default::default()
            },
        )
        .unwrap();
        let x = p(0.5, -2.0);
        let y = p(0.0, 3.0);
        let res = |h: f64| {
            let offs = [0.0, h, -h];
            let mid = g.g0_batch(x.x2, y.x2, &offs.map(|o| x.x1 + o - y.x1), Part::Full, false).unwrap();
            let up = g.g0(x + p(0.0, h), y).unwrap();
            let dn = g.g0(x - p(0.0, h), y).unwrap();
            let lap = (mid[1].value + mid[2].value + up + dn - mid[0].value * 4.0) / (h * h);
            (lap + mid[0].value * 4.0).norm()
        };
        let (a, b) = (res(1e-2), res(5e-3));
        let order = (a / b).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order} ({a} -> {b})");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = lg(1.0, 2.0);
        let mut r = rng();
        let h = 1e-5;
        let mut tested = 0;
        while tested < 20 {
            let x = p(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
            let y = p(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
            if x.distance(y) < 0.5 || x.x2.abs() < 0.1 || y.x2.abs() < 0.05 {
                continue;
            }
            tested += 1;
            let gr = g.grad_g0(x, y).unwrap();
            for (i, e) in [p(h, 0.0), p(0.0, h)].into_iter().enumerate() {
                let fd = (g.g0(x + e, y).unwrap() - g.g0(x - e, y).unwrap()) / (2.0 * h);
                assert!((fd - gr[i]).norm() < 1e-5, "{x:?} {y:?} component {i}");
            }
        }
    }

    #[test]
    fn horizontal_gradient_is_odd_in_offset() {
        let g = lg(1.0, 2.0);
        let s = g.g0_batch(-1.0, 0.5, &[0.7, -0.7], Part::Smooth, true).unwrap();
        assert!((s[0].grad[0] + s[1].grad[0]).norm() < 1e-15);
        assert_eq!(s[0].value, s[1].value);
    }

    #[test]
    fn scattered_part() {
        let g = lg(1.0, 2.0);
        let y = p(0.0, 1.55);
        assert!(g.g0_scattered(y, y).unwrap().norm().is_finite());
        assert_eq!(lg(1.0, 1.0).g0_scattered(p(1.0, 2.0), y).unwrap(), ZERO);
        for x in [p(1.0, 0.5), p(1.0, -0.5)] {
            let lhs = g.g0_scattered(x, y).unwrap() + phi(x, y, 1.0).unwrap();
            assert!((lhs - g.g0(x, y).unwrap()).norm() < 1e-15);
        }
        assert!(matches!(g.g0(y, y), Err(Error::Singularity { .. })));
    }

    #[test]
    fn batch_matches_single_evaluation() {
        let g = lg(1.0, 2.0);
        let offs = [-3.0, -0.2, 0.0, 0.2, 1.1, 3.0];
        let batch = g.g0_batch(-0.7, 1.2, &offs, Part::Full, true).unwrap();
        for (d, s) in offs.iter().zip(&batch) {
            let one = g.g0_with_grad(p(*d, -0.7), p(0.0, 1.2), Part::Full).unwrap();
            assert!((one.value - s.value).norm() < 1e-9 * s.value.norm());
            assert!((one.grad[0] - s.grad[0]).norm() < 1e-9);
        }
        let pairs: Vec<_> = offs.iter().map(|&d| (p(d, -0.7), p(0.0, 1.2))).collect();
        let ev = g.evaluate_pairs(&pairs, Part::Full, true).unwrap();
        assert_eq!(ev, batch);
    }

    #[test]
    fn subtraction_is_an_identity() {
        let plain = LayeredGreens::new(
            WaveNumbers::new(1.0, 2.0).unwrap(),
            SommerfeldConfig {
                subtract_singularity: false,
                ..Default::default()
            },
        )
        .unwrap();
        let g = lg(1.0, 2.0);
        for (x, y) in [(p(0.3, -0.4), p(-0.2, 0.3)), (p(2.0, 0.9), p(0.0, -2.2))] {
            let a = g.g0_with_grad(x, y, Part::Full).unwrap();
            let b = plain.g0_with_grad(x, y, Part::Full).unwrap();
            assert!((a.value - b.value).norm() < 1e-9);
            assert!((a.grad[0] - b.grad[0]).norm() < 1e-8 && (a.grad[1] - b.grad[1]).norm() < 1e-8);
        }
    }

    #[test]
    fn domain_checks() {
        let g = lg(1.0, 2.0);
        assert!(matches!(g.psi1(p(0.0, -1.0), p(0.0, 1.0)), Err(Error::Domain { .. })));
        assert!(matches!(g.psi2(p(0.0, 1.0), p(0.0, 1.0)), Err(Error::Domain { .. })));
        assert!(WaveNumbers::new(1.0, -2.0).is_err());
        assert_eq!(
            WaveNumbers::new(1.0, -2.0).unwrap_err().to_string(),
            "wavenumbers.k2 must be > 0"
        );
    }
}
