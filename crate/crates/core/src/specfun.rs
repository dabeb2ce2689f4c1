//! Bessel and Hankel functions of orders 0 and 1 for positive real
//! arguments, and the free-space fundamental solution
//! `Phi_k(x, y) = (i/4) H0(k |x - y|)`.
//!
//! Three regimes: ascending series below 2, Miller backward recurrence with
//! Neumann series for `Y` up to 25, Hankel asymptotic expansion beyond.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Point2;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Points closer than this are treated as coincident by kernel evaluators.
pub const COINCIDENCE_TOL: f64 = 1e-12;

const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// `J0, J1, Y0, Y1` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bessel01 {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bessel01 {
    pub fn h0(&self) -> Complex64 {
        Complex64::new(self.j0, self.y0)
    }

    pub fn h1(&self) -> Complex64 {
        Complex64::new(self.j1, self.y1)
    }
}

pub fn bessel01(x: f64) -> Result<Bessel01> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "bessel",
            value: x,
            constraint: "x > 0 and finite",
        });
    }
    Ok(if x < SERIES_LIMIT {
        series(x)
    } else if x <= ASYMPTOTIC_LIMIT {
        miller(x)
    } else {
        asymptotic(x)
    })
}

pub fn bessel_j0(x: f64) -> Result<f64> {
    bessel01(x).map(|b| b.j0)
}

pub fn bessel_j1(x: f64) -> Result<f64> {
    bessel01(x).map(|b| b.j1)
}

pub fn bessel_y0(x: f64) -> Result<f64> {
    bessel01(x).map(|b| b.y0)
}

pub fn bessel_y1(x: f64) -> Result<f64> {
    bessel01(x).map(|b| b.y1)
}

pub fn hankel1_0(x: f64) -> Result<Complex64> {
    bessel01(x).map(|b| b.h0())
}

pub fn hankel1_1(x: f64) -> Result<Complex64> {
    bessel01(x).map(|b| b.h1())
}

fn series(x: f64) -> Bessel01 {
    let q = -0.25 * x * x;
    let l = (0.5 * x).ln() + EULER_GAMMA;
    // t0_k = q^k/(k!)^2, t1_k = q^k/(k!(k+1)!), h_k = harmonic number.
    let (mut t0, mut t1, mut h) = (1.0, 1.0, 0.0);
    let (mut s_j0, mut s_j1, mut s_y0) = (1.0, 1.0, 0.0);
    // psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
    let mut s_y1 = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        h += 1.0 / kf;
        s_j0 += t0;
        s_j1 += t1;
        s_y0 += h * t0;
        s_y1 += (2.0 * h + 1.0 / (kf + 1.0)) * t1;
        if t0.abs() < 1e-18 && t1.abs() < 1e-18 {
            break;
        }
    }
    let j0 = s_j0;
    let j1 = 0.5 * x * s_j1;
    let y0 = 2.0 / PI * (l * j0 - s_y0);
    // The -2 gamma part of the digamma sum combines with ln(x/2) into l.
    let y1 = 2.0 / PI * l * j1 - 2.0 / (PI * x) - 0.5 * x / PI * s_y1;
    Bessel01 { j0, j1, y0, y1 }
}

fn miller(x: f64) -> Bessel01 {
    let n = 2 * ((x + 20.0 + (40.0 * (x + 1.0)).sqrt()) / 2.0).floor() as usize;
    let mut j = vec![0.0; n + 2];
    j[n] = 1e-30;
    for k in (1..=n).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in &mut j[k - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().step_by(2).skip(1).sum::<f64>();
    for v in &mut j {
        *v /= norm;
    }
    let l = (0.5 * x).ln() + EULER_GAMMA;
    let (mut s, mut ds) = (0.0, 0.0);
    let mut k = 1;
    while 2 * k < n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * j[2 * k] / k as f64;
        ds += sign * 0.5 * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = 2.0 / PI * l * j[0] - 4.0 / PI * s;
    let dy0 = 2.0 / PI * (-l * j[1] + j[0] / x) - 4.0 / PI * ds;
    Bessel01 {
        j0: j[0],
        j1: j[1],
        y0,
        y1: -dy0,
    }
}

/// `(P, Q)` of the Hankel expansion for order `nu`.
fn pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        // Signs follow i^k: k=1 -> +Q, k=2 -> -P, k=3 -> -Q, k=4 -> +P.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if mag < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn asymptotic(x: f64) -> Bessel01 {
    let amp = (2.0 / (PI * x)).sqrt();
    let (p0, q0) = pq(0.0, x);
    let (p1, q1) = pq(1.0, x);
    let (s, c) = x.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // chi0 = x - pi/4, chi1 = x - 3pi/4
    let (c0, s0) = (r * (c + s), r * (s - c));
    let (c1, s1) = (r * (s - c), -r * (c + s));
    Bessel01 {
        j0: amp * (p0 * c0 - q0 * s0),
        y0: amp * (p0 * s0 + q0 * c0),
        j1: amp * (p1 * c1 - q1 * s1),
        y1: amp * (p1 * s1 + q1 * c1),
    }
}

fn separation(x: Point2, y: Point2) -> Result<f64> {
    let r = x.distance(y);
    if r < COINCIDENCE_TOL {
        return Err(Error::Singularity { separation: r });
    }
    Ok(r)
}

/// `(i/4) H0(k r)` for `r > 0`.
pub fn phi_radial(r: f64, kappa: f64) -> Result<Complex64> {
    Ok(Complex64::new(0.0, 0.25) * hankel1_0(kappa * r)?)
}

pub fn phi(x: Point2, y: Point2, kappa: f64) -> Result<Complex64> {
    phi_radial(separation(x, y)?, kappa)
}

/// Gradient in `x` of `Phi_k(x, y)`.
pub fn grad_phi(x: Point2, y: Point2, kappa: f64) -> Result<[Complex64; 2]> {
    let r = separation(x, y)?;
    let scale = Complex64::new(0.0, -0.25 * kappa) * hankel1_1(kappa * r)? / r;
    let d = x - y;
    Ok([scale * d.x1, scale * d.x2])
}

/// Value and gradient of `Phi_k(x, y)` from a single Bessel evaluation.
pub fn phi_and_grad(x: Point2, y: Point2, kappa: f64) -> Result<(Complex64, [Complex64; 2])> {
    let r = separation(x, y)?;
    let b = bessel01(kappa * r)?;
    let scale = Complex64::new(0.0, -0.25 * kappa) * b.h1() / r;
    let d = x - y;
    Ok((
        Complex64::new(0.0, 0.25) * b.h0(),
        [scale * d.x1, scale * d.x2],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    // Reference values from 30-digit arbitrary-precision evaluation: (x, J0, Y0, J1, Y1).
    const REFERENCE: &[(f64, f64, f64, f64, f64)] = &[
        (1e-6, 0.99999999999975, -8.8690314816594437, 4.999999999999375e-7, -636619.77237217501),
        (0.1, 0.99750156206604003, -1.5342386513503668, 0.049937526036241998, -6.458951094702027),
        (0.5, 0.9384698072408129, -0.44451873350670656, 0.24226845767487389, -1.4714723926702431),
        (1.0, 0.76519768655796655, 0.088256964215676958, 0.44005058574493352, -0.78121282130028872),
        (1.9999, 0.22394845194430276, 0.51036496658709797, 0.57673125291779344, -0.10708882173811195),
        (2.0, 0.22389077914123567, 0.51037567264974512, 0.57672480775687339, -0.10703243154093755),
        (3.7, -0.39923020337119111, 0.10607431532035418, 0.053833987745461864, 0.41667437268380749),
        (7.5, 0.2663396578803784, 0.11731328614820863, 0.13524842757970551, -0.25912851048611625),
        (10.0, -0.24593576445134834, 0.055671167283599391, 0.043472746168861437, 0.24901542420695388),
        (24.9, 0.083245968353015682, -0.13649918399676511, -0.13485569953140874, -0.086002557595554442),
        (25.1, 0.10827567149994929, -0.1167677076380371, -0.11463478413442273, -0.11062223322783083),
        (50.0, 0.055812327669251815, -0.098064995470077079, -0.097511828125175138, -0.056795668562014768),
        (100.0, 0.019985850304223122, -0.077244313365083152, -0.077145352014112158, -0.020372312002759793),
        (1000.0, 0.024786686152420175, 0.0047159179776228134, 0.0047283119070895239, -0.024784331292351779),
        (10000.0, -0.0070961603533888015, 0.0036478055589866059, 0.0036474507555295803, 0.0070963427525364951),
    ];

    #[test]
    fn matches_reference_values() {
        for &(x, j0, y0, j1, y1) in REFERENCE {
            let b = bessel01(x).unwrap();
            for (got, want, name) in [(b.j0, j0, "j0"), (b.y0, y0, "y0"), (b.j1, j1, "j1"), (b.y1, y1, "y1")] {
                // Relative to the local envelope, which matters near zeros.
                let scale = want.abs().max((2.0 / (PI * x)).sqrt());
                assert!(
                    (got - want).abs() <= 1e-10 * scale,
                    "{name}({x}) = {got}, expected {want}"
                );
            }
        }
    }

    #[test]
    fn ten_significant_digits_at_one() {
        // Expected values carry 10 decimals, so half a unit in the last place.
        let tol = 5e-11;
        let h0 = hankel1_0(1.0).unwrap();
        assert!((h0.re - 0.7651976866).abs() < tol);
        assert!((h0.im - 0.0882569642).abs() < tol);
        let h1 = hankel1_1(1.0).unwrap();
        assert!((h1.re - 0.4400505857).abs() < tol);
        assert!((h1.im + 0.7812128213).abs() < tol);
    }

    /// Independent oracle: `J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt`,
    /// evaluated with the trapezoid rule, which is spectrally accurate here.
    fn j_integral(n: f64, x: f64) -> f64 {
        let m = 400 + 4 * x as usize;
        let h = PI / m as f64;
        let f = |t: f64| (n * t - x * t.sin()).cos();
        let inner: f64 = (1..m).map(|k| f(k as f64 * h)).sum();
        (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
    }

    #[test]
    fn j_matches_integral_representation() {
        let mut x = 0.05;
        while x < 300.0 {
            let b = bessel01(x).unwrap();
            assert!((b.j0 - j_integral(0.0, x)).abs() < 1e-12, "J0({x})");
            assert!((b.j1 - j_integral(1.0, x)).abs() < 1e-12, "J1({x})");
            x *= 1.37;
        }
    }

    #[test]
    fn wronskian() {
        for x in [0.1, 1.0, 10.0, 100.0, 1.5, 2.5, 24.0, 26.0, 3000.0] {
            let b = bessel01(x).unwrap();
            // J0 Y0' - J0' Y0 = J1 Y0 - J0 Y1
            let w = b.j1 * b.y0 - b.j0 * b.y1;
            let want = 2.0 / (PI * x);
            assert!((w - want).abs() < 1e-9 * want.max(1e-3), "x = {x}: {w} vs {want}");
        }
    }

    #[test]
    fn regime_crossovers_are_continuous() {
        for (a, b) in [(series(2.0), miller(2.0)), (miller(25.0), asymptotic(25.0))] {
            for (u, v) in [(a.j0, b.j0), (a.j1, b.j1), (a.y0, b.y0), (a.y1, b.y1)] {
                assert!((u - v).abs() < 1e-9, "{u} vs {v}");
            }
        }
        // Miller stays accurate well inside the series region too.
        let (a, b) = (series(1.2), miller(1.2));
        assert!((a.y1 - b.y1).abs() < 1e-12 && (a.y0 - b.y0).abs() < 1e-12);
    }

    #[test]
    fn derivative_identity() {
        let h = 1e-5;
        let fd = (hankel1_0(2.0 + h).unwrap() - hankel1_0(2.0 - h).unwrap()) / (2.0 * h);
        assert!((fd + hankel1_1(2.0).unwrap()).norm() < 1e-7);
    }

    #[test]
    fn small_and_large_argument_limits() {
        assert!(hankel1_0(1e-8).unwrap().norm() > 10.0);
        let x = 1e-6;
        let h1 = hankel1_1(x).unwrap().norm();
        assert!((h1 / (2.0 / (PI * x)) - 1.0).abs() < 1e-6);
        let x = 50.0;
        let asym = Complex64::from_polar((2.0 / (PI * x)).sqrt(), x - FRAC_PI_4);
        let h = hankel1_0(x).unwrap();
        // The leading term alone is off by the next correction, 1/(8x) relative.
        let rel = (h - asym).norm() / asym.norm();
        assert!((rel - 1.0 / (8.0 * x)).abs() < 1e-4, "{rel}");
        let two_term = asym * Complex64::new(1.0, -1.0 / (8.0 * x));
        assert!((h - two_term).norm() / asym.norm() < 1e-4);
    }

    #[test]
    fn domain_errors() {
        for x in [0.0, -1.0, f64::NAN] {
            assert!(matches!(hankel1_0(x), Err(Error::Domain { .. })));
            assert!(matches!(hankel1_1(x), Err(Error::Domain { .. })));
        }
        let p = Point2::new(1.0, 2.0);
        assert!(matches!(phi(p, p, 1.0), Err(Error::Singularity { .. })));
        assert!(matches!(grad_phi(p, p, 1.0), Err(Error::Singularity { .. })));
    }

    #[test]
    fn phi_composition_and_symmetry() {
        let v = phi(Point2::new(1.0, 0.0), Point2::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.25) * hankel1_0(1.0).unwrap());
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let y = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            assert_eq!(phi(x, y, 1.7).unwrap(), phi(y, x, 1.7).unwrap());
        }
    }

    #[test]
    fn phi_satisfies_helmholtz() {
        let y = Point2::new(0.3, -0.2);
        let k = 2.0;
        let x = Point2::new(1.5, 0.9);
        let res = |h: f64| {
            let f = |dx: f64, dy: f64| phi(x + Point2::new(dx, dy), y, k).unwrap();
            let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - f(0.0, 0.0) * 4.0) / (h * h);
            (lap + f(0.0, 0.0) * (k * k)).norm()
        };
        let (r1, r2) = (res(1e-2), res(5e-3));
        assert!(r1 < 1e-3);
        let order = (r1 / r2).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn grad_phi_properties() {
        let x = Point2::new(1.2, -0.4);
        let y = x + Point2::new(2.0f64.sqrt(), -(2.0f64.sqrt()));
        let k = 1.3;
        let g = grad_phi(x, y, k).unwrap();
        let h = 1e-5;
        for (i, e) in [Point2::new(h, 0.0), Point2::new(0.0, h)].into_iter().enumerate() {
            let fd = (phi(x + e, y, k).unwrap() - phi(x - e, y, k).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).norm() < 1e-6);
        }
        let gy = grad_phi(y, x, k).unwrap();
        assert!((g[0] + gy[0]).norm() < 1e-15 && (g[1] + gy[1]).norm() < 1e-15);
        let d = x - y;
        // Parallel to x - y: cross product vanishes componentwise.
        assert!((g[0] * d.x2 - g[1] * d.x1).norm() < 1e-14);
        let (v, g2) = phi_and_grad(x, y, k).unwrap();
        assert_eq!(v, phi(x, y, k).unwrap());
        assert_eq!(g2, g);
    }
}
