//! Named example scenes.
//!
//! Presets run at desk scale (101 receivers, sampling step 0.2, 96 boundary
//! nodes). [`Preset::paper_scale`] switches to the dense setting.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{InterfaceProfile, MeasurementLine, ObstacleCurve};

use super::config::{GridConfig, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Ex1a,
    Ex1b,
    Ex2,
    Ex2Split,
    Ex3,
    Ex3Shift,
    Ex4Two,
    Ex4Four,
    Ex4Six,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::Ex1a,
        Preset::Ex1b,
        Preset::Ex2,
        Preset::Ex2Split,
        Preset::Ex3,
        Preset::Ex3Shift,
        Preset::Ex4Two,
        Preset::Ex4Four,
        Preset::Ex4Six,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Ex1a => "ex1a",
            Preset::Ex1b => "ex1b",
            Preset::Ex2 => "ex2",
            Preset::Ex2Split => "ex2split",
            Preset::Ex3 => "ex3",
            Preset::Ex3Shift => "ex3shift",
            Preset::Ex4Two => "ex4two",
            Preset::Ex4Four => "ex4four",
            Preset::Ex4Six => "ex4six",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Preset::Ex1a => "flat interface, circle r=0.4 at (0,-3)",
            Preset::Ex1b => "spline bump, no obstacle",
            Preset::Ex2 => "three bumps, apple at (-3,-7)",
            Preset::Ex2Split => "three bumps, apple at (-3,-7), grid split at x2=-2",
            Preset::Ex3 => "gaussian dip, rounded square at (-3,-3)",
            Preset::Ex3Shift => "gaussian dip, rounded square at (3,-3)",
            Preset::Ex4Two => "two bumps, ellipse at (0,-6)",
            Preset::Ex4Four => "four bumps, ellipse at (0,-6)",
            Preset::Ex4Six => "six bumps, ellipse at (0,-6)",
        }
    }

    fn interface(self) -> InterfaceProfile {
        match self {
            Preset::Ex1a => InterfaceProfile::Flat,
            Preset::Ex1b => InterfaceProfile::SplineBump,
            Preset::Ex2 | Preset::Ex2Split => InterfaceProfile::ThreeBump,
            Preset::Ex3 | Preset::Ex3Shift => InterfaceProfile::GaussianDip,
            Preset::Ex4Two => InterfaceProfile::TwoBump,
            Preset::Ex4Four => InterfaceProfile::FourBump,
            Preset::Ex4Six => InterfaceProfile::SixBump,
        }
    }

    fn obstacle(self) -> ObstacleCurve {
        match self {
            Preset::Ex1a => ObstacleCurve::Circle {
                center: [0.0, -3.0],
                radius: 0.4,
            },
            Preset::Ex1b => ObstacleCurve::None,
            Preset::Ex2 | Preset::Ex2Split => ObstacleCurve::Apple { center: [-3.0, -7.0] },
            Preset::Ex3 => ObstacleCurve::RoundedSquare {
                center: [-3.0, -3.0],
                scale: 0.25,
            },
            Preset::Ex3Shift => ObstacleCurve::RoundedSquare {
                center: [3.0, -3.0],
                scale: 0.25,
            },
            Preset::Ex4Two | Preset::Ex4Four | Preset::Ex4Six => ObstacleCurve::Ellipse {
                center: [0.0, -6.0],
                semi_axes: [0.6, 0.3],
            },
        }
    }

    pub fn config(self) -> RunConfig {
        let mut c = RunConfig {
            interface: self.interface(),
            obstacle: self.obstacle(),
            measurement: MeasurementLine {
                a: 20.0,
                b: 1.55,
                n: 101,
            },
            grid: GridConfig {
                step_x1: 0.2,
                step_x2: 0.2,
                ..GridConfig::default()
            },
            ..RunConfig::default()
        };
        c.forward.m = 96;
        if self == Preset::Ex2Split {
            c.grid.split_x2 = vec![-2.0];
        }
        c.run.out = format!("lsm-out/{}", self.name()).into();
        c
    }

    /// Line formulas for the interface and the obstacle.
    pub fn formulas(self) -> (String, String) {
        (self.interface().formula().to_string(), self.obstacle().formula())
    }
}

/// 401 receivers, sampling step 0.06 and 128 boundary nodes.
pub fn paper_scale(config: &mut RunConfig) {
    config.measurement.n = 401;
    config.grid.step_x1 = 0.06;
    config.grid.step_x2 = 0.06;
    config.forward.m = 128;
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for p in Preset::ALL {
            p.config().validate().unwrap_or_else(|e| panic!("{p}: {e}"));
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            let mut c = p.config();
            paper_scale(&mut c);
            c.validate().unwrap();
        }
        assert_eq!(Preset::ALL.len(), 9);
    }

    #[test]
    fn split_preset_has_two_bands() {
        assert_eq!(Preset::Ex2Split.config().grid.bands().len(), 2);
        assert_eq!(Preset::Ex2.config().grid.bands().len(), 1);
    }

    #[test]
    fn formulas_are_single_lines() {
        for p in Preset::ALL {
            let (f, o) = p.formulas();
            assert!(f.starts_with("f(t)=") && !f.contains('\n'));
            assert!(!o.contains('\n'));
        }
    }
}
