//! Lattice cells covering the regions between the rough interface and the
//! plane `x2 = 0`.
//!
//! Cell `(i, j)` spans `[i h, (i + 1) h]` horizontally and the `j`-th layer of
//! thickness `h` above (where `f > 0`) or below (where `f < 0`) the plane.
//! Its area is the part of the square lying between the plane and the curve;
//! its quadrature node is the lattice center, so all nodes of one layer share
//! a height.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{InterfaceProfile, Point2};
use crate::quad::gauss_legendre;

/// Cells clipped below this fraction of `h^2` are dropped.
const MIN_AREA_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub center: Point2,
    pub area: f64,
    /// `+1` above the plane (inside the lower medium), `-1` below it.
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VolumeMesh {
    pub h: f64,
    pub cells: Vec<Cell>,
}

impl VolumeMesh {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }
}

/// Meshes the contrast support with squares of side `h`, integrating the
/// clipped area of each column with `order`-point Gauss rules on 8 sub-panels.
pub fn build_volume_mesh(interface: &InterfaceProfile, h: f64, order: usize) -> Result<VolumeMesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::validation("forward.h_vol", "> 0"));
    }
    let Some((lo, hi)) = interface.support() else {
        return Ok(VolumeMesh { h, cells: vec![] });
    };
    let (fmin, fmax) = interface.range();
    let height = fmax.max(-fmin);
    if h > height {
        return Err(Error::EmptyMesh { h, height });
    }

    let (gx, gw) = gauss_legendre(order.max(2));
    let sub = 8;
    let first = (lo / h).floor() as i64;
    let last = (hi / h).ceil() as i64;
    let layers = (height / h).ceil() as usize;
    let mut cells = Vec::new();

    for sign in [1.0, -1.0] {
        for j in 0..layers {
            let floor = j as f64 * h;
            for i in first..last {
                let a = i as f64 * h;
                let width = h / sub as f64;
                let mut area = 0.0;
                for s in 0..sub {
                    let center = a + (s as f64 + 0.5) * width;
                    for (x, w) in gx.iter().zip(&gw) {
                        let t = center + 0.5 * width * x;
                        let depth = (sign * interface.eval(t)).max(0.0);
                        area += 0.5 * width * w * (depth - floor).clamp(0.0, h);
                    }
                }
                if area > MIN_AREA_FRACTION * h * h {
                    cells.push(Cell {
                        center: Point2::new(a + 0.5 * h, sign * (floor + 0.5 * h)),
                        area,
                        sign,
                    });
                }
            }
        }
    }
    Ok(VolumeMesh { h, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_profile_has_no_cells() {
        let m = build_volume_mesh(&InterfaceProfile::Flat, 0.1, 8).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn dip_gives_negative_cells_only() {
        let m = build_volume_mesh(&InterfaceProfile::SplineBump, 0.1, 8).unwrap();
        assert!(!m.is_empty());
        assert!(m.cells.iter().all(|c| c.sign == -1.0 && c.center.x2 < 0.0));
    }

    #[test]
    fn spline_bump_area() {
        let m = build_volume_mesh(&InterfaceProfile::SplineBump, 0.05, 8).unwrap();
        assert!((m.total_area() - 2.0).abs() < 0.02 * 2.0, "{}", m.total_area());
    }

    #[test]
    fn mixed_signs_and_area() {
        // FourBump rises and dips; reference area from a fine 1D rule.
        let p = InterfaceProfile::FourBump;
        let m = build_volume_mesh(&p, 0.05, 8).unwrap();
        let n = 200_000;
        let exact: f64 = (0..n)
            .map(|k| p.eval(-5.0 + 10.0 * (k as f64 + 0.5) / n as f64).abs() * 10.0 / n as f64)
            .sum();
        assert!((m.total_area() - exact).abs() < 1e-3 * exact);
        assert!(m.cells.iter().any(|c| c.sign > 0.0) && m.cells.iter().any(|c| c.sign < 0.0));
        for c in &m.cells {
            assert!(c.center.x2.abs() >= m.h / 4.0);
            assert_eq!(c.sign, c.center.x2.signum());
            assert!(c.area <= m.h * m.h * (1.0 + 1e-12));
        }
    }

    #[test]
    fn coarse_cells_are_rejected() {
        assert!(matches!(
            build_volume_mesh(&InterfaceProfile::SplineBump, 2.0, 8),
            Err(Error::EmptyMesh { .. })
        ));
    }
}
