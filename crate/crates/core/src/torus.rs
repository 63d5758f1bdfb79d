//! Points of the torus and neighborhoods around them.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(e^{i theta1}, e^{i theta2})` of the distinguished boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub angles: [f64; 2],
}

/// Maps an angle into `[0, 2pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed difference `a - b` folded into `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

impl BoundaryPoint {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self {
            angles: [normalize_angle(theta1), normalize_angle(theta2)],
        }
    }

    pub fn one() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn from_complex(z1: Complex64, z2: Complex64) -> Self {
        Self::new(z1.arg(), z2.arg())
    }

    pub fn coords(&self) -> [Complex64; 2] {
        [
            Complex64::from_polar(1.0, self.angles[0]),
            Complex64::from_polar(1.0, self.angles[1]),
        ]
    }

    /// Max of the wrapped angular offsets.
    pub fn angular_distance(&self, other: &BoundaryPoint) -> f64 {
        angle_diff(self.angles[0], other.angles[0])
            .abs()
            .max(angle_diff(self.angles[1], other.angles[1]).abs())
    }

    /// Euclidean distance in C^2.
    pub fn distance(&self, other: &BoundaryPoint) -> f64 {
        let a = self.coords();
        let b = other.coords();
        ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
    }
}

/// `{z in D^2 : |z1 - eta1| < radius, |z2 - eta2| < radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub center: BoundaryPoint,
    pub radius: f64,
}

impl Neighborhood {
    pub fn new(center: BoundaryPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidInput(format!(
                "neighborhood radius {radius} outside (0, 1)"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, z: [Complex64; 2]) -> bool {
        let eta = self.center.coords();
        z[0].norm_sqr() < 1.0
            && z[1].norm_sqr() < 1.0
            && (z[0] - eta[0]).norm() < self.radius
            && (z[1] - eta[1]).norm() < self.radius
    }
}
