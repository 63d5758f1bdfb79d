//! Grid evidence that a polynomial has no zeros on a shrunken bidisc.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::BiPolynomial;

/// Below this the polynomial is treated as vanishing on the shrunken bidisc.
pub const INSTABILITY_THRESHOLD: f64 = 1e-12;

/// Margins used by [`stability_evidence`].
pub const MARGIN_SCHEDULE: [f64; 3] = [0.1, 0.05, 0.025];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub margin: f64,
    pub min_modulus: f64,
    pub argmin: [Complex64; 2],
}

/// Minimum of `|p|` over `{|z1| <= 1 - margin, |z2| <= 1 - margin}`.
///
/// A polar tensor grid (`grid_per_dim` radii times `grid_per_dim` angles per
/// coordinate) locates the basin; a projected descent then polishes the
/// minimiser on the closed polydisc.
pub fn grid_minimum(p: &BiPolynomial, margin: f64, grid_per_dim: usize) -> Result<StabilityReport> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidInput(format!("margin {margin} outside (0, 1)")));
    }
    if grid_per_dim < 2 {
        return Err(Error::InvalidInput("grid needs at least two points per dimension".into()));
    }
    let radius = 1.0 - margin;
    let g = grid_per_dim;
    let points: Vec<Complex64> = (0..g)
        .flat_map(|k| {
            let r = radius * k as f64 / (g - 1) as f64;
            (0..g).map(move |j| Complex64::from_polar(r, TAU * j as f64 / g as f64))
        })
        .collect();

    // (modulus, index1, index2); ties resolve to the smallest index pair.
    let best = points
        .par_iter()
        .enumerate()
        .map(|(a, &z1)| {
            let mut local = (f64::INFINITY, a, 0usize);
            for (b, &z2) in points.iter().enumerate() {
                let v = p.eval(z1, z2).norm();
                if v < local.0 {
                    local = (v, a, b);
                }
            }
            local
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, usize::MAX),
            |x, y| {
                if y.0 < x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) {
                    y
                } else {
                    x
                }
            },
        );

    let start = [points[best.1], points[best.2]];
    let (argmin, min_modulus) = polish(p, start, radius);
    let (argmin, min_modulus) = if min_modulus <= best.0 {
        (argmin, min_modulus)
    } else {
        (start, best.0)
    };
    Ok(StabilityReport {
        margin,
        min_modulus,
        argmin,
    })
}

fn project(z: Complex64, radius: f64) -> Complex64 {
    let r = z.norm();
    if r > radius {
        z * (radius / r)
    } else {
        z
    }
}

/// Minimum-norm Newton steps on `p = 0` with backtracking, projected onto
/// the closed polydisc of the given radius.
fn polish(p: &BiPolynomial, start: [Complex64; 2], radius: f64) -> ([Complex64; 2], f64) {
    let mut z = start;
    let mut value = p.eval(z[0], z[1]).norm();
    for _ in 0..400 {
        if value == 0.0 {
            break;
        }
        let (v, d1, d2) = p.eval_with_gradient(z[0], z[1]);
        let s = d1.norm_sqr() + d2.norm_sqr();
        if s == 0.0 {
            break;
        }
        let step = [-v * d1.conj() / s, -v * d2.conj() / s];
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let cand = [project(z[0] + step[0] * t, radius), project(z[1] + step[1] * t, radius)];
            let cv = p.eval(cand[0], cand[1]).norm();
            if cv < value {
                let gain = value - cv;
                z = cand;
                value = cv;
                improved = gain > 1e-17 * value.max(1e-300);
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (z, value)
}

/// Stability evidence on one margin; fails with `InstabilityDetected` when the
/// polynomial (nearly) vanishes on the shrunken bidisc.
pub fn stability_check(p: &BiPolynomial, grid_per_dim: usize, margin: f64) -> Result<StabilityReport> {
    if grid_per_dim < 16 {
        return Err(Error::InvalidInput(format!(
            "stability grid needs at least 16 points per dimension, got {grid_per_dim}"
        )));
    }
    let report = grid_minimum(p, margin, grid_per_dim)?;
    if report.min_modulus < INSTABILITY_THRESHOLD {
        return Err(Error::InstabilityDetected {
            min_modulus: report.min_modulus,
        });
    }
    Ok(report)
}

/// Runs [`stability_check`] over the shrinking margin schedule.
pub fn stability_evidence(p: &BiPolynomial, grid_per_dim: usize) -> Result<Vec<StabilityReport>> {
    MARGIN_SCHEDULE
        .iter()
        .map(|&m| stability_check(p, grid_per_dim, m))
        .collect()
}

/// Grid minimum of `|P|` on the shrunken bidisc, with no threshold applied.
pub fn zero_set_interior_check(pz: &BiPolynomial, margin: f64, grid_per_dim: usize) -> Result<f64> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(Error::InvalidInput(format!("margin {margin} outside (0, 0.5)")));
    }
    Ok(grid_minimum(pz, margin, grid_per_dim)?.min_modulus)
}
