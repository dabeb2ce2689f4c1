//! Linear sampling: Tikhonov-regularized near-field equations and the
//! normalized indicator.
//!
//! For each sampling point `z` the discrete near-field equation
//! `N g = (G0(x_j, z))_j` is solved with the filter `sigma / (alpha + sigma^2)`
//! on one SVD of `N`, and `NInd(z) = min_z' |g_z'| / |g_z|`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::NearFieldDataset;
use crate::geometry::{MeasurementLine, Point2, SamplingGrid};
use crate::greens::{LayeredGreens, Part};

/// Singular values below this fraction of the largest are discarded.
pub const SIGMA_CUTOFF: f64 = 1e-14;
pub const DEFAULT_ALPHA: f64 = 1e-6;
pub const DEFAULT_TAU: f64 = 1.5;
/// Bracket for the discrepancy search, relative to `sigma_1^2`.
const ALPHA_RANGE: (f64, f64) = (1e-20, 1e20);

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub u: DMatrix<Complex64>,
    pub sigma: DVector<f64>,
    pub v_t: DMatrix<Complex64>,
}

/// Near-field matrix `(us - g0s)_{jl} w_l` with trapezoid weights `w_l`
/// over the sources.
#[derive(Debug, Clone)]
pub struct NearFieldMatrix {
    pub entries: DMatrix<Complex64>,
    svd: Decomposition,
}

impl NearFieldMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "near-field matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let svd = entries.clone().svd(true, true);
        let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
            return Err(Error::Accuracy {
                achieved: f64::NAN,
                requested: 0.0,
            });
        };
        Ok(Self {
            entries,
            svd: Decomposition {
                u,
                sigma: svd.singular_values,
                v_t,
            },
        })
    }

    pub fn from_parts(us: &DMatrix<Complex64>, g0s: &DMatrix<Complex64>, line: &MeasurementLine) -> Result<Self> {
        let n = line.n;
        if us.shape() != (n, n) || g0s.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "us {:?} and g0s {:?} must both be {n}x{n}",
                us.shape(),
                g0s.shape()
            )));
        }
        let w = line.trapezoid_weights();
        let mut entries = us - g0s;
        for (l, mut col) in entries.column_iter_mut().enumerate() {
            col *= Complex64::from(w[l]);
        }
        Self::new(entries)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.svd
    }

    pub fn sigma_max(&self) -> f64 {
        self.svd.sigma.iter().fold(0.0, |m, &s| m.max(s))
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_max() == 0.0
    }

    /// `||U S V* - N|| / ||N||`
    pub fn reconstruction_error(&self) -> f64 {
        let d = &self.svd;
        let us = DMatrix::from_fn(d.u.nrows(), d.sigma.len(), |i, k| d.u[(i, k)] * d.sigma[k]);
        let norm = self.entries.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (us * &d.v_t - &self.entries).norm() / norm
    }

    /// Spectral data of one right-hand side.
    fn project(&self, rhs: &DVector<Complex64>) -> Projection {
        let coeffs = self.svd.u.ad_mul(rhs);
        let total = rhs.norm_squared();
        let inside: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        let cutoff = SIGMA_CUTOFF * self.sigma_max();
        Projection {
            coeffs,
            perp: (total - inside).max(0.0),
            cutoff,
        }
    }

    fn residual_sq(&self, p: &Projection, alpha: f64) -> f64 {
        let mut r = p.perp;
        for (c, &s) in p.coeffs.iter().zip(self.svd.sigma.iter()) {
            let keep = s > p.cutoff && s > 0.0;
            let factor = if keep { alpha / (alpha + s * s) } else { 1.0 };
            r += factor * factor * c.norm_sqr();
        }
        r
    }

    fn filtered(&self, p: &Projection, alpha: f64) -> DVector<Complex64> {
        let f = DVector::from_iterator(
            p.coeffs.len(),
            p.coeffs.iter().zip(self.svd.sigma.iter()).map(|(c, &s)| {
                if s > p.cutoff && s > 0.0 {
                    c * (s / (alpha + s * s))
                } else {
                    Complex64::default()
                }
            }),
        );
        self.svd.v_t.ad_mul(&f)
    }
}

struct Projection {
    coeffs: DVector<Complex64>,
    perp: f64,
    cutoff: f64,
}

pub fn build_near_field_matrix(dataset: &NearFieldDataset) -> Result<NearFieldMatrix> {
    let line = MeasurementLine {
        a: dataset.a,
        b: dataset.b,
        n: dataset.n(),
    };
    NearFieldMatrix::from_parts(&dataset.us, &dataset.g0s, &line)
}

/// `us + delta ||us|| zeta / ||zeta||` with complex standard normal `zeta`;
/// real parts are drawn first, then imaginary parts, in row-major order.
pub fn add_noise(us: &DMatrix<Complex64>, delta: f64, seed: u64) -> DMatrix<Complex64> {
    if delta == 0.0 || us.is_empty() {
        return us.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r, c) = us.shape();
    let mut draw = || -> Vec<f64> { (0..r * c).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let re = draw();
    let im = draw();
    let zeta = DMatrix::from_fn(r, c, |i, j| Complex64::new(re[i * c + j], im[i * c + j]));
    let scale = delta * us.norm() / zeta.norm();
    us + zeta * Complex64::from(scale)
}

/// `(G0(x_j, z))_j` over the receivers.
pub fn rhs_vector(z: Point2, line: &MeasurementLine, greens: &LayeredGreens) -> Result<DVector<Complex64>> {
    Ok(rhs_vectors(&[z], line, greens)?.remove(0))
}

/// Right-hand sides for many points, sharing spectral integrals per grid row.
pub fn rhs_vectors(points: &[Point2], line: &MeasurementLine, greens: &LayeredGreens) -> Result<Vec<DVector<Complex64>>> {
    let xs = line.points();
    if let Some(z) = points.iter().find(|z| (z.x2 - line.b).abs() < 1e-12) {
        return Err(Error::Domain {
            function: "rhs_vector",
            value: z.x2,
            constraint: "sampling point off the measurement line",
        });
    }
    let pairs: Vec<(Point2, Point2)> = points.iter().flat_map(|&z| xs.iter().map(move |&x| (z, x))).collect();
    let vals = greens.evaluate_pairs(&pairs, Part::Full, false)?;
    let n = xs.len();
    Ok((0..points.len())
        .map(|k| DVector::from_fn(n, |j, _| vals[k * n + j].value))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TikhonovSolution {
    pub g: DVector<Complex64>,
    /// `||N g - rhs||_2`
    pub residual: f64,
    pub alpha: f64,
}

pub fn tikhonov_solve(n: &NearFieldMatrix, rhs: &DVector<Complex64>, alpha: f64) -> Result<TikhonovSolution> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::validation("inversion.alpha", "> 0"));
    }
    check_len(n, rhs)?;
    let p = n.project(rhs);
    Ok(TikhonovSolution {
        g: n.filtered(&p, alpha),
        residual: n.residual_sq(&p, alpha).sqrt(),
        alpha,
    })
}

fn check_len(n: &NearFieldMatrix, rhs: &DVector<Complex64>) -> Result<()> {
    if rhs.len() != n.n() {
        return Err(Error::ShapeMismatch(format!("rhs has {} entries, matrix is {}x{}", rhs.len(), n.n(), n.n())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorozovOutcome {
    pub alpha: f64,
    pub residual: f64,
    /// False when even the smallest admissible `alpha` leaves a residual
    /// above the target; `alpha` is then that smallest value.
    pub reached: bool,
}

/// Finds `alpha` with `||N g_alpha - rhs|| = delta_eff` by bisection in `log alpha`.
pub fn morozov_alpha(n: &NearFieldMatrix, rhs: &DVector<Complex64>, delta_eff: f64, root_tol: f64) -> Result<MorozovOutcome> {
    check_len(n, rhs)?;
    let rhs_norm = rhs.norm();
    if !(delta_eff > 0.0) || delta_eff >= rhs_norm {
        return Err(Error::DiscrepancyUnreachable {
            delta: delta_eff,
            rhs_norm,
        });
    }
    let p = n.project(rhs);
    let s2 = n.sigma_max().powi(2).max(f64::MIN_POSITIVE);
    let res = |alpha: f64| n.residual_sq(&p, alpha).sqrt();
    let (mut lo, mut hi) = ((ALPHA_RANGE.0 * s2).ln(), (ALPHA_RANGE.1 * s2).ln());
    let r_lo = res(lo.exp());
    if r_lo > delta_eff {
        return Ok(MorozovOutcome {
            alpha: lo.exp(),
            residual: r_lo,
            reached: false,
        });
    }
    let mut best = (lo.exp(), r_lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let r = res(mid.exp());
        if (r - delta_eff).abs() < (best.1 - delta_eff).abs() {
            best = (mid.exp(), r);
        }
        if (r - delta_eff).abs() <= root_tol * delta_eff {
            break;
        }
        if r > delta_eff {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(MorozovOutcome {
        alpha: best.0,
        residual: best.1,
        reached: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizationPolicy {
    FixedAlpha {
        alpha: f64,
    },
    /// Discrepancy target `tau * noise_level * ||rhs||` per sampling point.
    Morozov {
        noise_level: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default = "default_root_tol")]
        root_tol: f64,
    },
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_root_tol() -> f64 {
    1e-3
}

impl Default for RegularizationPolicy {
    fn default() -> Self {
        RegularizationPolicy::FixedAlpha { alpha: DEFAULT_ALPHA }
    }
}

impl RegularizationPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RegularizationPolicy::FixedAlpha { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::validation("inversion.alpha", "> 0"))
            }
            RegularizationPolicy::Morozov { noise_level, tau, root_tol } => {
                if !(noise_level > 0.0 && noise_level < 1.0) {
                    return Err(Error::validation("inversion.noise_level", "in (0, 1)"));
                }
                if !(tau >= 1.0 && tau.is_finite()) {
                    return Err(Error::validation("inversion.tau", ">= 1"));
                }
                if !(root_tol > 0.0 && root_tol < 1.0) {
                    return Err(Error::validation("inversion.root_tol", "in (0, 1)"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConvention {
    /// `sqrt(ds) ||g||_2` with the receiver spacing `ds`.
    #[default]
    Weighted,
    Unweighted,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapMetadata {
    pub seed: u64,
    pub noise: f64,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMap {
    pub grid: SamplingGrid,
    pub points: Vec<Point2>,
    /// Normalized indicator, 1 at the maximum.
    pub nind: Vec<f64>,
    pub gnorm: Vec<f64>,
    pub alpha: Vec<f64>,
    /// The near-field matrix vanished; `nind` is identically 1.
    pub degenerate: bool,
    /// Points whose right-hand side could not be evaluated (`nind = 0`).
    pub failed: usize,
    /// Points where the discrepancy target was out of reach.
    pub unreached: usize,
    pub metadata: MapMetadata,
}

/// Solves the regularized equation at every grid point.
pub fn indicator_map(
    n: &NearFieldMatrix,
    grid: &SamplingGrid,
    line: &MeasurementLine,
    policy: &RegularizationPolicy,
    greens: &LayeredGreens,
    norm: NormConvention,
) -> Result<IndicatorMap> {
    grid.validate()?;
    policy.validate()?;
    if line.n != n.n() {
        return Err(Error::ShapeMismatch(format!("measurement line has {} points, matrix is {}", line.n, n.n())));
    }
    let points = grid.points();
    let (nx, _) = grid.shape();
    let rows: Vec<&[Point2]> = points.chunks(nx).collect();

    // One spectral integral per row of constant height; fall back to single
    // points when a row fails so isolated failures are contained.
    let rhs: Vec<Option<DVector<Complex64>>> = rows
        .par_iter()
        .flat_map_iter(|row| match rhs_vectors(row, line, greens) {
            Ok(v) => v.into_iter().map(Some).collect::<Vec<_>>(),
            Err(_) => row.iter().map(|&z| rhs_vector(z, line, greens).ok()).collect(),
        })
        .collect();
    let failed = rhs.iter().filter(|r| r.is_none()).count();
    if failed * 100 > points.len() {
        let first = rows
            .iter()
            .flat_map(|r| r.iter())
            .zip(&rhs)
            .find(|(_, r)| r.is_none())
            .map(|(z, _)| match rhs_vector(*z, line, greens) {
                Err(e) => format!("z = ({}, {}): {e}", z.x1, z.x2),
                Ok(_) => format!("z = ({}, {})", z.x1, z.x2),
            })
            .unwrap_or_default();
        return Err(Error::TooManyFailures {
            failed,
            total: points.len(),
            first,
        });
    }

    let weight = match norm {
        NormConvention::Weighted => line.spacing().sqrt(),
        NormConvention::Unweighted => 1.0,
    };
    let solved: Vec<(f64, f64, bool)> = rhs
        .par_iter()
        .map(|b| {
            let Some(b) = b else {
                return Ok((f64::NAN, f64::NAN, true));
            };
            let (alpha, reached) = match *policy {
                RegularizationPolicy::FixedAlpha { alpha } => (alpha, true),
                RegularizationPolicy::Morozov { noise_level, tau, root_tol } => {
                    let target = tau * noise_level * b.norm();
                    if n.is_zero() {
                        (DEFAULT_ALPHA, false)
                    } else {
                        let m = morozov_alpha(n, b, target, root_tol)?;
                        (m.alpha, m.reached)
                    }
                }
            };
            let p = n.project(b);
            Ok((weight * n.filtered(&p, alpha).norm(), alpha, reached))
        })
        .collect::<Result<_>>()?;

    let gnorm: Vec<f64> = solved.iter().map(|s| s.0).collect();
    let alpha: Vec<f64> = solved.iter().map(|s| s.1).collect();
    let unreached = solved.iter().filter(|s| !s.2).count().saturating_sub(failed);
    let min = gnorm.iter().copied().filter(|g| g.is_finite()).fold(f64::INFINITY, f64::min);
    let degenerate = n.is_zero() || min == 0.0;
    let nind = gnorm
        .iter()
        .map(|&g| {
            if !g.is_finite() {
                0.0
            } else if degenerate {
                1.0
            } else {
                min / g
            }
        })
        .collect();
    Ok(IndicatorMap {
        grid: *grid,
        points,
        nind,
        gnorm,
        alpha,
        degenerate,
        failed,
        unreached,
        metadata: MapMetadata::default(),
    })
}

/// `%.9g`-style formatting.
pub fn format_sig9(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..9).contains(&exp) {
        trim(&format!("{v:.*}", (8 - exp) as usize))
    } else {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

impl IndicatorMap {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn argmax(&self) -> Point2 {
        let (mut best, mut k) = (f64::NEG_INFINITY, 0);
        for (i, &v) in self.nind.iter().enumerate() {
            if v > best {
                best = v;
                k = i;
            }
        }
        self.points[k]
    }

    /// Mean of `nind` over the points selected by `keep`; `NaN` if none.
    pub fn mean_where(&self, keep: impl Fn(Point2) -> bool) -> f64 {
        let (mut sum, mut count) = (0.0, 0usize);
        for (p, v) in self.points.iter().zip(&self.nind) {
            if keep(*p) {
                sum += v;
                count += 1;
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2,nind,gnorm,alpha\n");
        for i in 0..self.len() {
            let p = self.points[i];
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_sig9(p.x1),
                format_sig9(p.x2),
                format_sig9(self.nind[i]),
                format_sig9(self.gnorm[i]),
                format_sig9(self.alpha[i])
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_vector(n: usize, seed: u64) -> DVector<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn normal_equations(n: &DMatrix<Complex64>, rhs: &DVector<Complex64>, alpha: f64) -> DVector<Complex64> {
        let a = n.ad_mul(n) + DMatrix::identity(n.nrows(), n.ncols()) * Complex64::from(alpha);
        a.lu().solve(&n.ad_mul(rhs)).unwrap()
    }

    #[test]
    fn identity_example() {
        let n = NearFieldMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let rhs = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::default()]);
        let s = tikhonov_solve(&n, &rhs, 1.0).unwrap();
        assert!((s.g[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(s.g[1].norm() < 1e-15);
        assert!((s.residual - 0.5).abs() < 1e-15);
        let m = morozov_alpha(&n, &rhs, 0.5, 1e-10).unwrap();
        assert!((m.alpha - 1.0).abs() < 1e-8 && m.reached);
    }

    #[test]
    fn trapezoid_scaling() {
        let line = MeasurementLine { a: 1.0, b: 1.55, n: 3 };
        let ones = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        let n = NearFieldMatrix::from_parts(&ones, &DMatrix::zeros(3, 3), &line).unwrap();
        for row in n.entries.row_iter() {
            assert!((row.sum() - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        }
        assert!(n.reconstruction_error() < 1e-10);
        let wrong = DMatrix::zeros(2, 2);
        assert!(matches!(NearFieldMatrix::from_parts(&wrong, &wrong, &line), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn spectral_and_normal_equations_agree() {
        for seed in 0..5 {
            let a = random_matrix(20, seed);
            let rhs = random_vector(20, 100 + seed);
            let n = NearFieldMatrix::new(a.clone()).unwrap();
            assert!(n.reconstruction_error() < 1e-10);
            for alpha in [1e-6, 1e-3, 1.0] {
                let s = tikhonov_solve(&n, &rhs, alpha).unwrap();
                let direct = normal_equations(&a, &rhs, alpha);
                assert!((&s.g - &direct).norm() / direct.norm() < 1e-10);
                let res = (&a * &s.g - &rhs).norm();
                assert!((s.residual - res).abs() < 1e-10 * rhs.norm());
            }
        }
    }

    #[test]
    fn small_alpha_approaches_inverse() {
        let mut a = random_matrix(12, 7);
        for i in 0..12 {
            a[(i, i)] += Complex64::new(3.0, 0.0);
        }
        let rhs = random_vector(12, 8);
        let n = NearFieldMatrix::new(a.clone()).unwrap();
        let exact = a.lu().solve(&rhs).unwrap();
        let s = tikhonov_solve(&n, &rhs, 1e-12).unwrap();
        assert!((&s.g - &exact).norm() / exact.norm() < 1e-8);
    }

    #[test]
    fn morozov_hits_target_and_rejects_bad_levels() {
        let a = random_matrix(20, 11);
        let rhs = random_vector(20, 12);
        let n = NearFieldMatrix::new(a).unwrap();
        let target = 0.3 * rhs.norm();
        let m = morozov_alpha(&n, &rhs, target, 1e-3).unwrap();
        assert!(m.reached);
        assert!((m.residual - target).abs() <= 0.01 * target);
        let check = tikhonov_solve(&n, &rhs, m.alpha).unwrap();
        assert!((check.residual - m.residual).abs() < 1e-12);
        assert!(matches!(
            morozov_alpha(&n, &rhs, rhs.norm(), 1e-3),
            Err(Error::DiscrepancyUnreachable { .. })
        ));
    }

    #[test]
    fn morozov_flags_unreachable_targets() {
        // Rank one operator: the residual never drops below the orthogonal part.
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        let n = NearFieldMatrix::new(a).unwrap();
        let rhs = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::default()]);
        let m = morozov_alpha(&n, &rhs, 0.5, 1e-3).unwrap();
        assert!(!m.reached);
        assert!(m.residual > 0.5);
    }

    #[test]
    fn noise_has_exact_level_and_is_reproducible() {
        let us = random_matrix(15, 3);
        assert_eq!(add_noise(&us, 0.0, 9), us);
        let noisy = add_noise(&us, 0.02, 9);
        let rel = (&noisy - &us).norm() / us.norm();
        assert!((rel - 0.02).abs() < 1e-14);
        assert_eq!(noisy, add_noise(&us, 0.02, 9));
        assert_ne!(noisy, add_noise(&us, 0.02, 10));
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let greens = LayeredGreens::with_defaults(1.0, 2.0).unwrap();
        let line = MeasurementLine { a: 2.0, b: 1.55, n: 5 };
        let zero = DMatrix::zeros(5, 5);
        let n = NearFieldMatrix::from_parts(&zero, &zero, &line).unwrap();
        let grid = SamplingGrid::new([-1.0, 1.0], [-1.0, 1.0], 0.5);
        let map = indicator_map(&n, &grid, &line, &RegularizationPolicy::default(), &greens, NormConvention::Weighted).unwrap();
        assert!(map.degenerate);
        assert!(map.nind.iter().all(|&v| v == 1.0));
        assert!(map.gnorm.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn norm_conventions_give_identical_indicator() {
        let greens = LayeredGreens::with_defaults(1.0, 2.0).unwrap();
        let line = MeasurementLine { a: 3.0, b: 1.55, n: 9 };
        let n = NearFieldMatrix::new(random_matrix(9, 21)).unwrap();
        let grid = SamplingGrid::new([-1.0, 1.0], [-2.0, 1.0], 0.5);
        let p = RegularizationPolicy::default();
        let w = indicator_map(&n, &grid, &line, &p, &greens, NormConvention::Weighted).unwrap();
        let u = indicator_map(&n, &grid, &line, &p, &greens, NormConvention::Unweighted).unwrap();
        for (a, b) in w.nind.iter().zip(&u.nind) {
            assert!((a - b).abs() < 1e-12);
        }
        let ratio = w.gnorm[0] / u.gnorm[0];
        assert!(w.gnorm.iter().zip(&u.gnorm).all(|(a, b)| (a / b - ratio).abs() < 1e-12 * ratio));
        assert!((w.nind.iter().fold(0.0f64, |m, &v| m.max(v)) - 1.0).abs() < 1e-15);
        assert!(w.nind.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn rhs_matches_free_space_when_homogeneous() {
        let greens = LayeredGreens::with_defaults(1.5, 1.5).unwrap();
        let line = MeasurementLine { a: 2.0, b: 1.55, n: 5 };
        let z = Point2::new(0.3, 0.4);
        let v = rhs_vector(z, &line, &greens).unwrap();
        assert_eq!(v.len(), 5);
        for (x, g) in line.points().iter().zip(v.iter()) {
            let phi = crate::specfun::phi(*x, z, 1.5).unwrap();
            assert!((g - phi).norm() < 1e-12);
        }
        assert!(rhs_vector(Point2::new(0.0, 1.55), &line, &greens).is_err());
    }

    #[test]
    fn csv_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-3.0), "-3");
        assert_eq!(format_sig9(0.123456789012), "0.123456789");
        assert_eq!(format_sig9(123456.7891234), "123456.789");
        assert_eq!(format_sig9(1.5e-7), "1.5e-07");
        assert_eq!(format_sig9(2.0e12), "2e+12");
        assert_eq!(format_sig9(1e-6), "1e-06");
        assert_eq!(format_sig9(-8.5), "-8.5");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn residual_and_norm_monotone_in_alpha(seed in 0u64..1000, n in 3usize..12) {
            let a = NearFieldMatrix::new(random_matrix(n, seed)).unwrap();
            let rhs = random_vector(n, seed + 7);
            let mut last = (0.0f64, f64::INFINITY);
            for k in 0..50 {
                let alpha = 10f64.powf(-8.0 + 10.0 * k as f64 / 49.0);
                let s = tikhonov_solve(&a, &rhs, alpha).unwrap();
                let g = s.g.norm();
                prop_assert!(s.residual >= last.0 * (1.0 - 1e-12));
                prop_assert!(g <= last.1 * (1.0 + 1e-12));
                last = (s.residual, g);
            }
        }

        #[test]
        fn filter_factors_are_bounded(seed in 0u64..1000, log_alpha in -8.0f64..1.0) {
            let alpha = 10f64.powf(log_alpha);
            let a = NearFieldMatrix::new(random_matrix(6, seed)).unwrap();
            let rhs = random_vector(6, seed + 1);
            let d = a.decomposition();
            let s = tikhonov_solve(&a, &rhs, alpha).unwrap();
            let gc = &d.v_t * &s.g;
            let bc = d.u.ad_mul(&rhs);
            for k in 0..6 {
                prop_assert!(gc[k].norm() <= bc[k].norm() / (2.0 * alpha.sqrt()) * (1.0 + 1e-9) + 1e-14);
            }
        }

        #[test]
        fn common_scaling_leaves_indicator_unchanged(seed in 0u64..1000, re in 0.2f64..3.0, im in -2.0f64..2.0) {
            let c = Complex64::new(re, im);
            let base = random_matrix(7, seed);
            let a = NearFieldMatrix::new(base.clone()).unwrap();
            let b = NearFieldMatrix::new(base * c).unwrap();
            let alpha = 1e-3;
            let mut ga = Vec::new();
            let mut gb = Vec::new();
            for k in 0..4 {
                let rhs = random_vector(7, seed * 10 + k);
                ga.push(tikhonov_solve(&a, &rhs, alpha).unwrap().g.norm());
                gb.push(tikhonov_solve(&b, &(rhs * c), alpha * c.norm_sqr()).unwrap().g.norm());
            }
            for k in 0..4 {
                prop_assert!((ga[k] - gb[k]).abs() <= 1e-9 * ga[k]);
            }
        }
    }
}
