//! Dense direct and restarted GMRES solves for the assembled operator.

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Systems above this many unknowns use GMRES under [`SolverKind::Auto`].
pub const DIRECT_LIMIT: usize = 6000;
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Auto,
    Direct,
    Gmres,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmresSettings {
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            restart: 60,
            max_iterations: 2000,
        }
    }
}

pub(crate) enum Factor {
    Empty,
    Lu(Box<LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>>),
    Gmres(GmresSettings),
}

pub(crate) struct LinearSystem {
    pub matrix: DMatrix<Complex64>,
    pub factor: Factor,
    pub condition: f64,
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn vec_norm1(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

impl LinearSystem {
    pub fn new(matrix: DMatrix<Complex64>, kind: SolverKind, gmres: GmresSettings, hint: &'static str) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 {
            return Ok(Self {
                matrix,
                factor: Factor::Empty,
                condition: 1.0,
            });
        }
        let direct = match kind {
            SolverKind::Auto => n <= DIRECT_LIMIT,
            SolverKind::Direct => true,
            SolverKind::Gmres => false,
        };
        if !direct {
            return Ok(Self {
                matrix,
                factor: Factor::Gmres(gmres),
                condition: f64::NAN,
            });
        }
        let lu = matrix.clone().lu();
        let condition = estimate_condition(&matrix, &lu);
        if !(condition <= CONDITION_LIMIT) {
            return Err(Error::IllConditioned { estimate: condition, hint });
        }
        Ok(Self {
            matrix,
            factor: Factor::Lu(Box::new(lu)),
            condition,
        })
    }

    /// Solves for every column of `rhs`.
    pub fn solve(&self, rhs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        match &self.factor {
            Factor::Empty => Ok(DMatrix::zeros(0, rhs.ncols())),
            Factor::Lu(lu) => lu.solve(rhs).ok_or(Error::IllConditioned {
                estimate: f64::INFINITY,
                hint: "singular factorization",
            }),
            Factor::Gmres(settings) => {
                let cols: Vec<DVector<Complex64>> = (0..rhs.ncols())
                    .into_par_iter()
                    .map(|j| gmres(&self.matrix, &rhs.column(j).into_owned(), settings))
                    .collect::<Result<_>>()?;
                Ok(DMatrix::from_columns(&cols))
            }
        }
    }
}

/// `||A||_1` times the largest `||A^-1 b||_1 / ||b||_1` over a few fixed
/// probe vectors; a lower bound on the 1-norm condition number.
fn estimate_condition(a: &DMatrix<Complex64>, lu: &LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = a.nrows();
    let probes = [
        DVector::from_element(n, Complex64::new(1.0, 0.0)),
        DVector::from_fn(n, |i, _| Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)),
        DVector::from_fn(n, |i, _| Complex64::from_polar(1.0, (i * i) as f64 * 0.618)),
        DVector::from_fn(n, |i, _| Complex64::new(1.0 + i as f64 / n as f64, 0.0)),
    ];
    let mut inv = 0.0f64;
    for b in &probes {
        match lu.solve(b) {
            Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                inv = inv.max(vec_norm1(&x) / vec_norm1(b));
            }
            _ => return f64::INFINITY,
        }
    }
    norm1(a) * inv
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
pub fn gmres(a: &DMatrix<Complex64>, b: &DVector<Complex64>, settings: &GmresSettings) -> Result<DVector<Complex64>> {
    let n = b.len();
    let bnorm = b.norm();
    let mut x = DVector::zeros(n);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let restart = settings.restart.clamp(1, n.max(1));
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < settings.max_iterations {
        let r = b - a * &x;
        let beta = r.norm();
        rel = beta / bnorm;
        if rel <= settings.tolerance {
            return Ok(x);
        }
        let mut basis: Vec<DVector<Complex64>> = vec![r / Complex64::from(beta)];
        let mut h = DMatrix::<Complex64>::zeros(restart + 1, restart);
        let mut cs = vec![Complex64::default(); restart];
        let mut sn = vec![Complex64::default(); restart];
        let mut g = DVector::<Complex64>::zeros(restart + 1);
        g[0] = beta.into();
        let mut k = 0;
        while k < restart && iterations < settings.max_iterations {
            let mut w = a * &basis[k];
            for (i, v) in basis.iter().enumerate() {
                let hik = v.dotc(&w);
                h[(i, k)] = hik;
                w.axpy(-hik, v, Complex64::new(1.0, 0.0));
            }
            let wn = w.norm();
            h[(k + 1, k)] = wn.into();
            for i in 0..k {
                let t = cs[i].conj() * h[(i, k)] + sn[i].conj() * h[(i + 1, k)];
                h[(i + 1, k)] = -sn[i] * h[(i, k)] + cs[i] * h[(i + 1, k)];
                h[(i, k)] = t;
            }
            let (p, q) = (h[(k, k)], h[(k + 1, k)]);
            let d = (p.norm_sqr() + q.norm_sqr()).sqrt();
            let (c, s) = if d == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::default())
            } else {
                (p / d, q / d)
            };
            cs[k] = c;
            sn[k] = s;
            h[(k, k)] = d.into();
            h[(k + 1, k)] = Complex64::default();
            g[k + 1] = -s * g[k];
            g[k] = c.conj() * g[k];
            k += 1;
            iterations += 1;
            rel = g[k].norm() / bnorm;
            if rel <= settings.tolerance || wn == 0.0 {
                break;
            }
            basis.push(w / Complex64::from(wn));
        }
        let mut y = DVector::<Complex64>::zeros(k);
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[(i, j)] * y[j];
            }
            y[i] = s / h[(i, i)];
        }
        for (i, yi) in y.iter().enumerate() {
            x.axpy(*yi, &basis[i], Complex64::new(1.0, 0.0));
        }
        if rel <= settings.tolerance {
            let true_rel = (b - a * &x).norm() / bnorm;
            if true_rel <= 10.0 * settings.tolerance {
                return Ok(x);
            }
        }
    }
    Err(Error::Accuracy {
        achieved: rel,
        requested: settings.tolerance,
    })
}
