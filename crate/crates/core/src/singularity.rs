//! Locating torus zeros of the denominator and radial boundary limits.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rif::RationalInnerFunction;
use crate::torus::BoundaryPoint;

const MAX_NEWTON_STEPS: usize = 50;
const STEP_CLIP: f64 = 0.1;
const MERGE_RADIUS: f64 = 1e-6;

/// Torus points where `|p(e^{i theta1}, e^{i theta2})| < refine_tol`.
///
/// Local minima of `|p|` on a `grid_per_dim x grid_per_dim` angle grid seed a
/// damped Newton iteration on `(theta1, theta2) -> (Re p, Im p)`; converged
/// points closer than `1e-6` rad are merged.
pub fn find_singularities(
    phi: &RationalInnerFunction,
    grid_per_dim: usize,
    refine_tol: f64,
) -> Result<Vec<BoundaryPoint>> {
    if grid_per_dim < 4 {
        return Err(Error::InvalidInput("singularity grid needs at least 4 points per dimension".into()));
    }
    if phi.is_monomial() {
        return Ok(Vec::new());
    }
    let p = phi.denominator();
    let g = grid_per_dim;
    let angle = |k: usize| TAU * k as f64 / g as f64;
    let grid: Vec<f64> = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (idx / g, idx % g);
            p.eval(Complex64::from_polar(1.0, angle(a)), Complex64::from_polar(1.0, angle(b)))
                .norm()
        })
        .collect();
    let at = |a: isize, b: isize| {
        let a = a.rem_euclid(g as isize) as usize;
        let b = b.rem_euclid(g as isize) as usize;
        grid[a * g + b]
    };
    let seeds: Vec<(usize, usize)> = (0..g * g)
        .map(|idx| (idx / g, idx % g))
        .filter(|&(a, b)| {
            let v = grid[a * g + b];
            let (a, b) = (a as isize, b as isize);
            (-1..=1).all(|da| (-1..=1).all(|db| (da == 0 && db == 0) || v <= at(a + da, b + db)))
        })
        .collect();

    let refined: Vec<Option<BoundaryPoint>> = seeds
        .par_iter()
        .map(|&(a, b)| {
            let (theta, residual) = newton_on_torus(phi, [angle(a), angle(b)]);
            (residual < refine_tol).then(|| BoundaryPoint::new(theta[0], theta[1]))
        })
        .collect();

    let mut found: Vec<BoundaryPoint> = Vec::new();
    for point in refined.into_iter().flatten() {
        if found.iter().all(|q| q.angular_distance(&point) > MERGE_RADIUS) {
            found.push(point);
        }
    }
    found.sort_by(|x, y| {
        x.angles[0]
            .total_cmp(&y.angles[0])
            .then(x.angles[1].total_cmp(&y.angles[1]))
    });
    Ok(found)
}

/// Levenberg-damped Newton iteration for a torus zero of the denominator.
/// Returns the final angles and `|p|` there.
fn newton_on_torus(phi: &RationalInnerFunction, start: [f64; 2]) -> ([f64; 2], f64) {
    let p = phi.denominator();
    let eval = |t: [f64; 2]| {
        let z1 = Complex64::from_polar(1.0, t[0]);
        let z2 = Complex64::from_polar(1.0, t[1]);
        let (v, d1, d2) = p.eval_with_gradient(z1, z2);
        // d/dtheta_k p(e^{i theta}) = i z_k dp/dz_k
        let i = Complex64::new(0.0, 1.0);
        (v, i * z1 * d1, i * z2 * d2)
    };
    let mut theta = start;
    let (mut value, mut j1, mut j2) = eval(theta);
    let mut damping = 1e-6;
    for _ in 0..MAX_NEWTON_STEPS {
        if value.norm() == 0.0 {
            break;
        }
        // Normal equations of the real 2x2 system J d = -F.
        let a11 = j1.norm_sqr() + damping;
        let a22 = j2.norm_sqr() + damping;
        let a12 = j1.re * j2.re + j1.im * j2.im;
        let b1 = -(j1.re * value.re + j1.im * value.im);
        let b2 = -(j2.re * value.re + j2.im * value.im);
        let det = a11 * a22 - a12 * a12;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let mut step = [(b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det];
        let len = step[0].hypot(step[1]);
        if len > STEP_CLIP {
            step = [step[0] * STEP_CLIP / len, step[1] * STEP_CLIP / len];
        }
        let cand = [theta[0] + step[0], theta[1] + step[1]];
        let (cv, c1, c2) = eval(cand);
        if cv.norm() < value.norm() {
            theta = cand;
            (value, j1, j2) = (cv, c1, c2);
            damping = (damping * 0.1).max(1e-30);
            if len < 1e-15 {
                break;
            }
        } else {
            damping *= 10.0;
            if damping > 1e6 {
                break;
            }
        }
    }
    (theta, value.norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtLimitReport {
    pub point: BoundaryPoint,
    pub value: Complex64,
    pub modulus: f64,
    /// Fitted exponent of `|phi(r zeta) - limit|` against `1 - r`, when the
    /// approach is not already exact to rounding.
    pub rate: Option<f64>,
    /// Gap between the extrapolations of the last two four-point windows.
    pub extrapolation_gap: f64,
}

/// Radii `1 - 2^{-k}` for `k = 2..=13`.
pub fn default_radii() -> Vec<f64> {
    (2..=13).map(|k| 1.0 - 0.5f64.powi(k)).collect()
}

/// Polynomial extrapolation to `h = 0` through four `(h, value)` points.
fn neville_at_zero(h: &[f64], v: &[Complex64]) -> Complex64 {
    let mut t: Vec<Complex64> = v.to_vec();
    let n = t.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (h[i], h[i + level]);
            t[i] = (t[i + 1] * hi - t[i] * hj) / (hi - hj);
        }
    }
    t[0]
}

/// Radial limit of `phi` at `zeta` along `r zeta`, Richardson-extrapolated from
/// the last four radii.
pub fn nt_limit(phi: &RationalInnerFunction, zeta: &BoundaryPoint, radii: &[f64], tolerance: f64) -> Result<NtLimitReport> {
    if radii.len() < 8 {
        return Err(Error::InvalidInput("need at least 8 radii".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("radii must increase strictly inside (0, 1)".into()));
    }
    let [z1, z2] = zeta.coords();
    let values = radii
        .iter()
        .map(|&r| phi.eval_default(z1 * r, z2 * r))
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = radii.iter().map(|r| 1.0 - r).collect();
    let n = values.len();
    let limit = neville_at_zero(&h[n - 4..], &values[n - 4..]);
    let previous = neville_at_zero(&h[n - 5..n - 1], &values[n - 5..n - 1]);
    let gap = (limit - previous).norm();
    if !(gap <= tolerance) {
        return Err(Error::NoConvergence { gap });
    }

    let floor = 1e-13 * limit.norm().max(1.0);
    let tail: Vec<(f64, f64)> = h
        .iter()
        .zip(&values)
        .filter_map(|(&hk, &v)| {
            let d = (v - limit).norm();
            (d > floor).then(|| (hk.ln(), d.ln()))
        })
        .collect();
    let rate = (tail.len() >= 3).then(|| {
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / tail.len() as f64;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / tail.len() as f64;
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });

    Ok(NtLimitReport {
        point: *zeta,
        value: limit,
        modulus: limit.norm(),
        rate,
        extrapolation_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::BiPolynomial;
    use crate::rif::zoo;

    #[test]
    fn knese_singularity_at_one() {
        let s = find_singularities(&zoo::knese(), 64, 1e-10).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0].angular_distance(&BoundaryPoint::one()) < 1e-6);
    }

    #[test]
    fn phi_ab_singularity_is_conjugate_pair() {
        for (ta, tb) in [(0.7, 2.9), (-1.1, 0.35), (3.0, 5.5)] {
            let s = find_singularities(&zoo::phi_ab(ta, tb).unwrap(), 64, 1e-10).unwrap();
            assert_eq!(s.len(), 1, "{ta} {tb}: {s:?}");
            assert!(s[0].angular_distance(&zoo::phi_ab_singularity(ta, tb)) < 1e-6);
        }
    }

    #[test]
    fn smooth_denominator_has_none() {
        let p = BiPolynomial::from_terms(&[
            (0, 0, Complex64::new(2.0, 0.0)),
            (1, 0, Complex64::new(-1.0, 0.0)),
        ]);
        let phi = RationalInnerFunction::new((0, 0), p).unwrap();
        assert!(find_singularities(&phi, 64, 1e-10).unwrap().is_empty());
        assert!(find_singularities(&zoo::coordinate(0), 64, 1e-10).unwrap().is_empty());
    }

    #[test]
    fn knese_radial_limit_at_singularity() {
        let r = nt_limit(&zoo::knese(), &BoundaryPoint::one(), &default_radii(), 1e-8).unwrap();
        assert!((r.value - Complex64::new(-1.0, 0.0)).norm() < 1e-8);
        assert!((r.modulus - 1.0).abs() < 1e-10);
        let rate = r.rate.unwrap();
        assert!((rate - 1.0).abs() < 1e-6, "{rate}");
    }

    #[test]
    fn knese_radial_limit_at_smooth_point() {
        let zeta = BoundaryPoint::new(std::f64::consts::FRAC_PI_2, 0.0);
        let phi = zoo::knese();
        let r = nt_limit(&phi, &zeta, &default_radii(), 1e-8).unwrap();
        let [z1, z2] = zeta.coords();
        let direct = phi.eval_default(z1, z2).unwrap();
        assert!((r.value - direct).norm() < 1e-10);
        assert!((r.modulus - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coordinate_function_limit() {
        let zeta = BoundaryPoint::new(2.0, -1.0);
        let r = nt_limit(&zoo::coordinate(0), &zeta, &default_radii(), 1e-8).unwrap();
        assert!((r.value - zeta.coords()[0]).norm() < 1e-12);
    }

    #[test]
    fn radii_validation() {
        let phi = zoo::knese();
        assert!(nt_limit(&phi, &BoundaryPoint::one(), &[0.5, 0.6], 1e-8).is_err());
        let mut bad = default_radii();
        bad.reverse();
        assert!(nt_limit(&phi, &BoundaryPoint::one(), &bad, 1e-8).is_err());
    }

    #[test]
    fn coarse_radii_fail_to_converge() {
        // Far from the boundary a cubic through four points cannot pin the
        // limit of a function with a nearby pole.
        let p = BiPolynomial::from_terms(&[
            (0, 0, Complex64::new(1.05, 0.0)),
            (1, 0, Complex64::new(-1.0, 0.0)),
        ]);
        let phi = RationalInnerFunction::new((0, 0), p).unwrap();
        let radii: Vec<f64> = (1..=8).map(|k| 0.1 * k as f64).collect();
        let err = nt_limit(&phi, &BoundaryPoint::one(), &radii, 1e-12).unwrap_err();
        assert_eq!(err.name(), "NoConvergence");
    }
}
