//! Synthetic near-field data for a rough interface over an optional
//! sound-soft obstacle.
//!
//! With `u = G0(., y) + u_tilde` the total field, the unknowns are the total
//! field `v` at the volume cell centers and the density `psi` at the obstacle
//! nodes. The difference field is represented as
//!
//! ```text
//! u_tilde(x) = -sum_c G0(x, c) q_c A_c v_c
//!              + int_dD [d_nu(s) G0(x, s) - i G0(x, s)] psi(s) ds(s)
//! ```
//!
//! with `q_c = (k1^2 - k2^2) sign_c`. Collocating at the cell centers and
//! imposing `u = 0` on the obstacle gives the coupled system
//!
//! ```text
//! v_i + sum_c G0(c_i, c) q_c A_c v_c - sum_k w_k K(c_i, s_k) psi_k = G0(c_i, y)
//! psi + (L - i M) psi - 2 sum_c G0(s, c) q_c A_c v_c               = -2 G0(s, y)
//! ```
//!
//! The self-cell integral of `G0` is the disc average of the free-space
//! function of equal area plus the smooth part at the center.

pub mod boundary;
pub mod dataset;
pub mod mesh;
pub mod solver;

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{InterfaceProfile, MeasurementLine, ObstacleCurve, Point2};
use crate::greens::{LayeredGreens, Part, SommerfeldConfig, WaveNumbers};
use crate::specfun::{hankel1_1, phi};

pub use boundary::BoundaryNodes;
pub use dataset::{NearFieldDataset, Sidecar};
pub use mesh::{build_volume_mesh, Cell, VolumeMesh};
pub use solver::{GmresSettings, SolverKind};

use solver::LinearSystem;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Clearance required between the obstacle and the lowest interface point.
pub const OBSTACLE_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardDiscretization {
    pub h_vol: f64,
    /// Obstacle boundary nodes.
    pub m: usize,
    /// Gauss points per sub-panel when clipping cell areas.
    pub quadrature_order: usize,
    pub solver: SolverKind,
    pub gmres: GmresSettings,
    pub sommerfeld: SommerfeldConfig,
}

impl Default for ForwardDiscretization {
    fn default() -> Self {
        Self {
            h_vol: 0.1,
            m: 128,
            quadrature_order: 8,
            solver: SolverKind::Auto,
            gmres: GmresSettings::default(),
            sommerfeld: SommerfeldConfig::default(),
        }
    }
}

impl ForwardDiscretization {
    pub fn validate(&self, wn: &WaveNumbers) -> Result<()> {
        if !(self.h_vol > 0.0 && self.h_vol.is_finite()) {
            return Err(Error::validation("forward.h_vol", "> 0"));
        }
        if self.m < 16 || !self.m.is_multiple_of(2) {
            return Err(Error::validation("forward.m", "an even integer >= 16"));
        }
        if !(1..=64).contains(&self.quadrature_order) {
            return Err(Error::validation("forward.quadrature_order", "between 1 and 64"));
        }
        if !(self.gmres.tolerance > 0.0 && self.gmres.restart > 0) {
            return Err(Error::validation("forward.gmres", "a positive tolerance and restart"));
        }
        self.sommerfeld.validate(wn)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub wavenumbers: WaveNumbers,
    pub interface: InterfaceProfile,
    #[serde(default)]
    pub obstacle: ObstacleCurve,
    pub measurement: MeasurementLine,
    #[serde(default)]
    pub discretization: ForwardDiscretization,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.wavenumbers.validate()?;
        self.measurement.validate()?;
        self.discretization.validate(&self.wavenumbers)?;
        let (fmin, fmax) = self.interface.range();
        if !(self.measurement.b > fmax) {
            return Err(Error::validation("measurement.b", "above the highest interface point"));
        }
        if !self.obstacle.is_none() {
            if self.obstacle.top()? >= fmin.min(0.0) - OBSTACLE_MARGIN {
                return Err(Error::validation("obstacle", "strictly below the interface"));
            }
            for k in 0..256 {
                self.obstacle.point(TAU * k as f64 / 256.0)?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> Result<[u8; 32]> {
        let json = serde_json::to_vec(self)?;
        Ok(Sha256::digest(&json).into())
    }

    pub fn greens(&self) -> Result<LayeredGreens> {
        LayeredGreens::new(self.wavenumbers, self.discretization.sommerfeld)
    }
}

/// The assembled coupled operator; independent of the source.
pub struct DiscreteOperator {
    pub greens: LayeredGreens,
    pub interface: InterfaceProfile,
    pub obstacle: ObstacleCurve,
    pub mesh: VolumeMesh,
    pub nodes: Option<BoundaryNodes>,
    system: LinearSystem,
}

impl std::fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteOperator")
            .field("cells", &self.mesh.len())
            .field("boundary_nodes", &self.boundary_len())
            .field("condition", &self.system.condition)
            .finish()
    }
}

fn dot_normal(grad: [Complex64; 2], nu: Point2) -> Complex64 {
    grad[0] * nu.x1 + grad[1] * nu.x2
}

/// `int_cell G0(c, y') dy'` for a cell of area `area` centered at `c`.
fn self_cell_integral(greens: &LayeredGreens, c: Point2, area: f64) -> Result<Complex64> {
    let k = greens.wavenumbers.at(c.x2);
    let r = (area / PI).sqrt();
    let disc = I * (PI * r / (2.0 * k)) * hankel1_1(k * r)? - 1.0 / (k * k);
    let smooth = greens.g0_with_grad(c, c, Part::Smooth)?.value;
    Ok(disc + area * smooth)
}

impl DiscreteOperator {
    pub fn unknowns(&self) -> usize {
        self.mesh.len() + self.boundary_len()
    }

    pub fn boundary_len(&self) -> usize {
        self.nodes.as_ref().map_or(0, |n| n.len())
    }

    pub fn condition_estimate(&self) -> Option<f64> {
        self.system.condition.is_finite().then_some(self.system.condition)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.system.matrix
    }

    fn strengths(&self) -> Vec<f64> {
        let eta = self.greens.wavenumbers.eta();
        self.mesh.cells.iter().map(|c| eta * c.sign * c.area).collect()
    }

    /// Right-hand sides for point sources at `sources`, one column each.
    pub fn rhs(&self, sources: &[Point2]) -> Result<DMatrix<Complex64>> {
        let nc = self.mesh.len();
        let mut targets: Vec<Point2> = self.mesh.cells.iter().map(|c| c.center).collect();
        if let Some(nodes) = &self.nodes {
            targets.extend(nodes.positions());
        }
        let pairs: Vec<(Point2, Point2)> = sources.iter().flat_map(|&y| targets.iter().map(move |&x| (x, y))).collect();
        let vals = self.greens.evaluate_pairs(&pairs, Part::Full, false)?;
        let n = targets.len();
        Ok(DMatrix::from_fn(n, sources.len(), |i, l| {
            let g = vals[l * n + i].value;
            if i < nc {
                g
            } else {
                -2.0 * g
            }
        }))
    }

    /// Rows mapping the unknowns to `u_tilde` at points off the cells and
    /// the obstacle boundary.
    pub fn transfer(&self, points: &[Point2]) -> Result<DMatrix<Complex64>> {
        let nc = self.mesh.len();
        let mut t = DMatrix::zeros(points.len(), self.unknowns());
        if nc > 0 {
            let q = self.strengths();
            let pairs: Vec<(Point2, Point2)> = points
                .iter()
                .flat_map(|&x| self.mesh.cells.iter().map(move |c| (x, c.center)))
                .collect();
            let vals = self.greens.evaluate_pairs(&pairs, Part::Full, false)?;
            for j in 0..points.len() {
                for c in 0..nc {
                    t[(j, c)] = -vals[j * nc + c].value * q[c];
                }
            }
        }
        if let Some(nodes) = &self.nodes {
            let m = nodes.len();
            let pairs: Vec<(Point2, Point2)> = points
                .iter()
                .flat_map(|&x| nodes.points.iter().map(move |s| (s.position, x)))
                .collect();
            let vals = self.greens.evaluate_pairs(&pairs, Part::Full, true)?;
            for j in 0..points.len() {
                for k in 0..m {
                    let s = vals[j * m + k];
                    let kernel = dot_normal(s.grad, nodes.points[k].outward_normal) - I * s.value;
                    t[(j, nc + k)] = nodes.arc_weight(k) * kernel;
                }
            }
        }
        Ok(t)
    }

    pub fn solve(&self, rhs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.system.solve(rhs)
    }
}

pub fn assemble_system(scenario: &Scenario) -> Result<DiscreteOperator> {
    scenario.validate()?;
    let disc = &scenario.discretization;
    let greens = scenario.greens()?;
    let mesh = build_volume_mesh(&scenario.interface, disc.h_vol, disc.quadrature_order)?;
    let nodes = if scenario.obstacle.is_none() {
        None
    } else {
        Some(BoundaryNodes::new(&scenario.obstacle, disc.m)?)
    };
    let nc = mesh.len();
    let m = nodes.as_ref().map_or(0, |n| n.len());
    let size = nc + m;
    let mut a = DMatrix::<Complex64>::identity(size, size);
    let eta = greens.wavenumbers.eta();
    let q: Vec<f64> = mesh.cells.iter().map(|c| eta * c.sign * c.area).collect();

    if nc > 0 {
        let centers: Vec<Point2> = mesh.cells.iter().map(|c| c.center).collect();
        let mut pairs = Vec::with_capacity(nc * nc);
        for &x in &centers {
            for &y in &centers {
                pairs.push((x, y));
            }
        }
        let off: Vec<(usize, (Point2, Point2))> = pairs.iter().copied().enumerate().filter(|(k, _)| k / nc != k % nc).collect();
        let off_pairs: Vec<(Point2, Point2)> = off.iter().map(|p| p.1).collect();
        let vals = greens.evaluate_pairs(&off_pairs, Part::Full, false)?;
        for ((k, _), s) in off.iter().zip(vals) {
            let (i, c) = (k / nc, k % nc);
            a[(i, c)] += s.value * q[c];
        }
        for (i, cell) in mesh.cells.iter().enumerate() {
            a[(i, i)] += eta * cell.sign * self_cell_integral(&greens, cell.center, cell.area)?;
        }
    }

    if let Some(nodes) = &nodes {
        if nc > 0 {
            let pairs: Vec<(Point2, Point2)> = nodes
                .points
                .iter()
                .flat_map(|s| mesh.cells.iter().map(move |c| (s.position, c.center)))
                .collect();
            let vals = greens.evaluate_pairs(&pairs, Part::Full, true)?;
            for (k, s) in nodes.points.iter().enumerate() {
                for c in 0..nc {
                    let g = vals[k * nc + c];
                    let kernel = dot_normal(g.grad, s.outward_normal) - I * g.value;
                    a[(c, nc + k)] -= nodes.arc_weight(k) * kernel;
                    a[(nc + k, c)] -= 2.0 * g.value * q[c];
                }
            }
        }
        let block = boundary::operator_rows(&greens, nodes, &scenario.obstacle, &nodes.theta)?;
        let mut view = a.view_mut((nc, nc), (m, m));
        view += block;
    }

    let hint = if nodes.is_some() {
        "probable interior resonance of the obstacle or a boundary discretization that is too coarse"
    } else {
        "probable cause: volume mesh too coarse for the contrast"
    };
    let system = LinearSystem::new(a, disc.solver, disc.gmres, hint)?;
    Ok(DiscreteOperator {
        greens,
        interface: scenario.interface.clone(),
        obstacle: scenario.obstacle.clone(),
        mesh,
        nodes,
        system,
    })
}

/// Solution of the coupled system for a single point source.
#[derive(Debug)]
pub struct FieldSolution<'a> {
    pub operator: &'a DiscreteOperator,
    pub source: Point2,
    pub coefficients: DVector<Complex64>,
    /// `||A x - b|| / ||b||`
    pub residual: f64,
}

pub fn solve_for_source(operator: &DiscreteOperator, y: Point2) -> Result<FieldSolution<'_>> {
    let (_, fmax) = operator.interface.range();
    if !(y.is_finite() && y.x2 > fmax) {
        return Err(Error::validation("source", "above the interface"));
    }
    let b = operator.rhs(&[y])?;
    let x = operator.solve(&b)?;
    let bn = b.norm();
    let residual = if bn > 0.0 { (operator.matrix() * &x - &b).norm() / bn } else { 0.0 };
    Ok(FieldSolution {
        operator,
        source: y,
        coefficients: x.column(0).into_owned(),
        residual,
    })
}

impl FieldSolution<'_> {
    /// Total field at the cell centers.
    pub fn cell_values(&self) -> &[Complex64] {
        &self.coefficients.as_slice()[..self.operator.mesh.len()]
    }

    pub fn density(&self) -> &[Complex64] {
        &self.coefficients.as_slice()[self.operator.mesh.len()..]
    }

    pub fn u_tilde_many(&self, points: &[Point2]) -> Result<Vec<Complex64>> {
        if self.operator.unknowns() == 0 {
            return Ok(vec![Complex64::default(); points.len()]);
        }
        let t = self.operator.transfer(points)?;
        Ok((t * &self.coefficients).iter().copied().collect())
    }

    pub fn u_tilde(&self, x: Point2) -> Result<Complex64> {
        Ok(self.u_tilde_many(&[x])?[0])
    }

    /// `u = G0(x, y) + u_tilde(x)`.
    pub fn total(&self, x: Point2) -> Result<Complex64> {
        Ok(self.operator.greens.g0(x, self.source)? + self.u_tilde(x)?)
    }

    /// `u - Phi_k1(x, y)` above the interface, `u` below it.
    pub fn scattered(&self, x: Point2) -> Result<Complex64> {
        let u = self.total(x)?;
        if x.x2 > self.operator.interface.eval(x.x1) {
            Ok(u - phi(x, self.source, self.operator.greens.wavenumbers.k1)?)
        } else {
            Ok(u)
        }
    }

    /// Total field at obstacle boundary points `x(theta)`, using the exterior
    /// limit of the layer potential and the trigonometric interpolant of the
    /// density. Vanishes for the exact solution.
    pub fn boundary_values(&self, thetas: &[f64]) -> Result<Vec<Complex64>> {
        let op = self.operator;
        let nodes = op.nodes.as_ref().ok_or(Error::NoObstacle)?;
        let m = nodes.len();
        let rows = boundary::operator_rows(&op.greens, nodes, &op.obstacle, thetas)?;
        let psi = DVector::from_column_slice(self.density());
        let layer = &rows * &psi;
        let positions: Vec<Point2> = thetas
            .iter()
            .map(|&t| op.obstacle.point(t).map(|p| p.position))
            .collect::<Result<_>>()?;
        let pairs: Vec<(Point2, Point2)> = positions.iter().map(|&x| (x, self.source)).collect();
        let incident = op.greens.evaluate_pairs(&pairs, Part::Full, false)?;
        let q = op.strengths();
        let nc = op.mesh.len();
        let volume: Vec<Complex64> = if nc > 0 {
            let pairs: Vec<(Point2, Point2)> = positions
                .iter()
                .flat_map(|&x| op.mesh.cells.iter().map(move |c| (x, c.center)))
                .collect();
            let vals = op.greens.evaluate_pairs(&pairs, Part::Full, false)?;
            (0..positions.len())
                .map(|j| (0..nc).map(|c| vals[j * nc + c].value * q[c] * self.cell_values()[c]).sum())
                .collect()
        } else {
            vec![Complex64::default(); positions.len()]
        };
        Ok(thetas
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let w = boundary::trig_interpolation_weights(m, t);
                let interp: Complex64 = w.iter().zip(psi.iter()).map(|(a, b)| b * *a).sum();
                incident[j].value + 0.5 * interp + 0.5 * layer[j] - volume[j]
            })
            .collect())
    }
}

/// Computes `us` and `g0s` on the measurement line, sources and receivers
/// sharing the same points.
pub fn synthesize_dataset(scenario: &Scenario) -> Result<(NearFieldDataset, DiscreteOperator)> {
    let operator = assemble_system(scenario)?;
    let points = scenario.measurement.points();
    let n = points.len();
    let pairs: Vec<(Point2, Point2)> = points.iter().flat_map(|&x| points.iter().map(move |&y| (x, y))).collect();
    let g0s_vals = operator.greens.evaluate_pairs(&pairs, Part::Scattered, false)?;
    let g0s = DMatrix::from_fn(n, n, |j, l| g0s_vals[j * n + l].value);
    let us = if operator.unknowns() == 0 {
        g0s.clone()
    } else {
        let b = operator.rhs(&points)?;
        let x = operator.solve(&b)?;
        let t = operator.transfer(&points)?;
        &g0s + t * x
    };
    if us.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Accuracy {
            achieved: f64::NAN,
            requested: 0.0,
        });
    }
    let line = scenario.measurement;
    Ok((
        NearFieldDataset {
            k1: scenario.wavenumbers.k1,
            k2: scenario.wavenumbers.k2,
            a: line.a,
            b: line.b,
            fingerprint: scenario.fingerprint()?,
            us,
            g0s,
        },
        operator,
    ))
}

pub fn sidecar(scenario: &Scenario, operator: &DiscreteOperator) -> Result<Sidecar> {
    Ok(Sidecar {
        format: "LSMNF1".into(),
        fingerprint: hex::encode(scenario.fingerprint()?),
        scenario: scenario.clone(),
        unknowns: operator.unknowns(),
        cells: operator.mesh.len(),
        boundary_nodes: operator.boundary_len(),
        condition_estimate: operator.condition_estimate(),
    })
}
