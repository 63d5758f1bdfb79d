//! Weighted volumes of pull-backs `Phi^{-1}(S(zeta, delta))`.
//!
//! Pull-back sets are thin, so the estimator mixes three kinds of product
//! proposals:
//!
//! * a defensive component drawing weight-proportionally over the whole
//!   integration domain (the bidisc, or the bounding region of `restrict`),
//!   which keeps the estimator unbiased for any set;
//! * two boundary layers `{u1 <= t}` and `{u2 <= t}`. Schwarz-Pick for
//!   `phi : D^2 -> D` gives `1 - |phi(z)| >= min(u1, u2) (1 - |phi(0)|) / (2 (1 + |phi(0)|))`,
//!   so every point of the pull-back satisfies `min(u1, u2) < t` with
//!   `t = 2 min_k delta_k (1 + |phi_k(0)|) / (1 - |phi_k(0)|)`;
//! * one small component around each isolated torus point `tau` with
//!   `Phi(tau) = zeta`, sized by the inverse Jacobian of `Phi` there.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::sampler::{DiscFactor, Proposal};
use crate::measure::volume::{weighted_volume_with, CarlesonBox, VolumeEstimate, WeightParams};
use crate::rif::{SymbolPair, DEFAULT_GUARD};
use crate::torus::{BoundaryPoint, Neighborhood};

/// Smallest sample count accepted for pull-back estimates.
pub const MIN_PULLBACK_SAMPLES: usize = 100_000;

const DEFENSIVE_WEIGHT: f64 = 0.1;
const PREIMAGE_GRID: usize = 128;
const MAX_PREIMAGES: usize = 8;
const CURVE_SPACING: f64 = 0.25;

/// Proposal used for one pull-back estimate, exposed for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackPlan {
    pub layer: Option<f64>,
    pub preimages: Vec<BoundaryPoint>,
    pub proposal: Proposal,
}

fn schwarz_pick_factor(phi: &crate::rif::RationalInnerFunction) -> f64 {
    let c0 = phi
        .eval_default(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        .map(|v| v.norm())
        .unwrap_or(0.0)
        .min(1.0 - 1e-12);
    (1.0 + c0) / (1.0 - c0)
}

/// Residual of `Phi(e^{i theta}) = zeta` as wrapped argument gaps.
fn arg_residual(symbol: &SymbolPair, zeta: [Complex64; 2], theta: [f64; 2]) -> Option<[f64; 2]> {
    let z1 = Complex64::from_polar(1.0, theta[0]);
    let z2 = Complex64::from_polar(1.0, theta[1]);
    let w = symbol.eval(z1, z2, 1e-9).ok()?;
    Some([(w[0] * zeta[0].conj()).arg(), (w[1] * zeta[1].conj()).arg()])
}

/// Torus solutions of `Phi(tau) = zeta`, refined from the local minima of the
/// residual on a `128 x 128` grid and merged within half a grid step. When
/// the solution set is a curve this returns many points along it.
pub fn torus_preimages(symbol: &SymbolPair, center: &BoundaryPoint) -> Vec<BoundaryPoint> {
    let zeta = center.coords();
    let g = PREIMAGE_GRID;
    let angle = |k: usize| TAU * k as f64 / g as f64;
    let resid: Vec<f64> = (0..g * g)
        .map(|idx| {
            arg_residual(symbol, zeta, [angle(idx / g), angle(idx % g)])
                .map(|r| r[0].hypot(r[1]))
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let at = |a: isize, b: isize| resid[a.rem_euclid(g as isize) as usize * g + b.rem_euclid(g as isize) as usize];
    let spacing = TAU / g as f64;
    let mut found: Vec<BoundaryPoint> = Vec::new();
    for idx in 0..g * g {
        let v = resid[idx];
        // Well above the residual a solution leaves in its own grid cell.
        if !(v < 0.5) {
            continue;
        }
        let (a, b) = ((idx / g) as isize, (idx % g) as isize);
        let is_min = (-1..=1).all(|da| (-1..=1).all(|db| (da == 0 && db == 0) || v <= at(a + da, b + db)));
        if !is_min {
            continue;
        }
        if let Some(theta) = refine_preimage(symbol, zeta, [angle(a as usize), angle(b as usize)]) {
            let p = BoundaryPoint::new(theta[0], theta[1]);
            if found.iter().all(|q| q.angular_distance(&p) > 0.5 * spacing) {
                found.push(p);
            }
        }
    }
    found
}

fn residual_jacobian(symbol: &SymbolPair, zeta: [Complex64; 2], theta: [f64; 2]) -> Option<[[f64; 2]; 2]> {
    let h = 1e-7;
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut tp = theta;
        let mut tm = theta;
        tp[j] += h;
        tm[j] -= h;
        let rp = arg_residual(symbol, zeta, tp)?;
        let rm = arg_residual(symbol, zeta, tm)?;
        for k in 0..2 {
            jac[k][j] = crate::torus::angle_diff(rp[k], rm[k]) / (2.0 * h);
        }
    }
    Some(jac)
}

/// Levenberg-damped Gauss-Newton; converges to a nearby solution also when
/// the solutions form a curve and the Jacobian is rank one.
fn refine_preimage(symbol: &SymbolPair, zeta: [Complex64; 2], start: [f64; 2]) -> Option<[f64; 2]> {
    let mut theta = start;
    for _ in 0..40 {
        let r = arg_residual(symbol, zeta, theta)?;
        if r[0].hypot(r[1]) < 1e-12 {
            return Some(theta);
        }
        let j = residual_jacobian(symbol, zeta, theta)?;
        // (J^T J + lambda I) step = -J^T r
        let a = j[0][0] * j[0][0] + j[1][0] * j[1][0];
        let b = j[0][0] * j[0][1] + j[1][0] * j[1][1];
        let d = j[0][1] * j[0][1] + j[1][1] * j[1][1];
        let lambda = 1e-10 * (a + d) + 1e-14;
        let (a, d) = (a + lambda, d + lambda);
        let g0 = j[0][0] * r[0] + j[1][0] * r[1];
        let g1 = j[0][1] * r[0] + j[1][1] * r[1];
        let det = a * d - b * b;
        if !(det > 0.0) {
            return None;
        }
        let mut step = [-(d * g0 - b * g1) / det, -(a * g1 - b * g0) / det];
        let len = step[0].hypot(step[1]);
        if len > 0.1 {
            step = [step[0] * 0.1 / len, step[1] * 0.1 / len];
        }
        theta = [theta[0] + step[0], theta[1] + step[1]];
    }
    let r = arg_residual(symbol, zeta, theta)?;
    (r[0].hypot(r[1]) < 1e-9).then_some(theta)
}

/// Holomorphic Jacobian `d Phi_i / d z_k` at a torus point.
fn holomorphic_jacobian(symbol: &SymbolPair, tau: &BoundaryPoint) -> Option<[[Complex64; 2]; 2]> {
    let z = tau.coords();
    let h = 1e-6;
    let mut jac = [[Complex64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        let mut zp = z;
        let mut zm = z;
        zp[j] += h;
        zm[j] -= h;
        let wp = symbol.eval(zp[0], zp[1], 1e-9).ok()?;
        let wm = symbol.eval(zm[0], zm[1], 1e-9).ok()?;
        for k in 0..2 {
            jac[k][j] = (wp[k] - wm[k]) / (2.0 * h);
        }
    }
    jac.iter().flatten().all(|c| c.is_finite()).then_some(jac)
}

/// `||J^{-1}||_inf`, or `None` for a (numerically) singular Jacobian.
fn inverse_norm(jac: &[[Complex64; 2]; 2]) -> Option<f64> {
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let scale = jac.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    if !(det.norm() > 1e-8 * scale * scale) {
        return None;
    }
    let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
    Some((inv[0][0].norm() + inv[0][1].norm()).max(inv[1][0].norm() + inv[1][1].norm()))
}

/// Per-coordinate radii of the proposal component around a preimage point.
/// Isolated points use the inverse Jacobian; points on a solution curve get
/// a slab that is thin only in the directions `Phi` actually depends on.
fn component_radii(symbol: &SymbolPair, tau: &BoundaryPoint, delta_max: f64, isolated: bool) -> Option<[f64; 2]> {
    let jac = holomorphic_jacobian(symbol, tau)?;
    if isolated {
        if let Some(n) = inverse_norm(&jac) {
            let r = 2.0 * delta_max * n;
            return Some([r, r]);
        }
    }
    let mut radii = [1.0; 2];
    for (k, r) in radii.iter_mut().enumerate() {
        let c = jac[0][k].norm().max(jac[1][k].norm());
        if c > 0.0 {
            *r = (2.0 * delta_max / c).min(1.0);
        }
    }
    Some(radii)
}

/// Proposal components around torus preimages of the box center.
fn preimage_components(symbol: &SymbolPair, cbox: &CarlesonBox) -> Vec<(BoundaryPoint, [f64; 2])> {
    let points = torus_preimages(symbol, &cbox.center);
    let isolated = points.len() <= MAX_PREIMAGES;
    let mut kept: Vec<BoundaryPoint> = Vec::new();
    for p in points {
        if isolated || kept.iter().all(|q| q.angular_distance(&p) >= CURVE_SPACING) {
            kept.push(p);
        }
    }
    let delta_max = cbox.radii[0].max(cbox.radii[1]);
    let mut out: Vec<(BoundaryPoint, [f64; 2])> = Vec::new();
    for tau in kept {
        let Some(radii) = component_radii(symbol, &tau, delta_max, isolated) else { continue };
        // Slabs that span a whole coordinate coincide along a straight curve.
        let same = |(q, rq): &(BoundaryPoint, [f64; 2])| {
            (0..2).all(|k| {
                (radii[k] >= 1.0 && rq[k] >= 1.0)
                    || ((radii[k] - rq[k]).abs() <= 1e-3 * radii[k]
                        && crate::torus::angle_diff(tau.angles[k], q.angles[k]).abs() < CURVE_SPACING)
            })
        };
        if !out.iter().any(same) {
            out.push((tau, radii));
        }
    }
    out
}

/// Builds the mixture proposal for one pull-back estimate.
pub fn plan_pullback(
    symbol: &SymbolPair,
    cbox: &CarlesonBox,
    w: WeightParams,
    restrict: Option<&Neighborhood>,
) -> Result<PullbackPlan> {
    let beta = w.beta;
    // Localised components draw u at most uniformly; u^beta would pile the
    // draws at the outer edge, away from the torus where pull-backs live.
    let local = beta.min(0.0);
    let domain = match restrict {
        Some(n) => [
            DiscFactor::around(n.center.angles[0], n.radius, beta),
            DiscFactor::around(n.center.angles[1], n.radius, beta),
        ],
        None => [DiscFactor::full(beta), DiscFactor::full(beta)],
    };

    let layer = 2.0
        * (cbox.radii[0] * schwarz_pick_factor(&symbol.first))
            .min(cbox.radii[1] * schwarz_pick_factor(&symbol.second));
    let use_layers = layer < domain[0].u_max.min(domain[1].u_max);

    // A box with both radii 2 contains the whole disc: nothing to localise.
    let covers = cbox.radii[0] >= 2.0 && cbox.radii[1] >= 2.0;
    let candidates = if covers { Vec::new() } else { preimage_components(symbol, cbox) };
    let preimages: Vec<(BoundaryPoint, [f64; 2])> = candidates
        .into_iter()
        .filter(|(_, radii)| radii[0] < 1.0 || radii[1] < 1.0)
        .filter(|(tau, radii)| match restrict {
            Some(n) => {
                let eta = n.center.coords();
                let t = tau.coords();
                (0..2).all(|k| radii[k] >= 1.0 || (t[k] - eta[k]).norm() < n.radius + radii[k])
            }
            None => true,
        })
        .collect();

    let mut components = vec![(DEFENSIVE_WEIGHT, domain)];
    let remaining = 1.0 - DEFENSIVE_WEIGHT;
    let layer_share = match (use_layers, preimages.is_empty()) {
        (false, _) => 0.0,
        (true, true) => remaining,
        (true, false) => remaining / 3.0,
    };
    if use_layers {
        let thin = |f: DiscFactor| DiscFactor {
            exponent: local,
            ..f.layer(layer)
        };
        components.push((layer_share / 2.0, [thin(domain[0]), domain[1]]));
        components.push((layer_share / 2.0, [domain[0], thin(domain[1])]));
    }
    if !preimages.is_empty() {
        let each = (remaining - layer_share) / preimages.len() as f64;
        for (tau, radii) in &preimages {
            let factor = |k: usize| {
                if radii[k] >= 1.0 {
                    domain[k]
                } else {
                    DiscFactor::around(tau.angles[k], radii[k], local)
                }
            };
            components.push((each, [factor(0), factor(1)]));
        }
    }
    Ok(PullbackPlan {
        layer: use_layers.then_some(layer),
        preimages: preimages.into_iter().map(|p| p.0).collect(),
        proposal: Proposal::mixture(components)?,
    })
}

/// `V_beta({z in D^2 (and in restrict) : Phi(z) in S(zeta, delta)})`.
///
/// Points where either coordinate hits the evaluation guard count as
/// non-members.
pub fn pullback_volume(
    symbol: &SymbolPair,
    cbox: &CarlesonBox,
    w: WeightParams,
    samples: usize,
    seed: u64,
    restrict: Option<&Neighborhood>,
) -> Result<VolumeEstimate> {
    WeightParams::new(w.beta)?;
    if samples < MIN_PULLBACK_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "pull-back estimates need at least {MIN_PULLBACK_SAMPLES} samples, got {samples}"
        )));
    }
    let plan = plan_pullback(symbol, cbox, w, restrict)?;
    let b = *cbox;
    let r = restrict.copied();
    weighted_volume_with(
        &plan.proposal,
        move |s| {
            if let Some(n) = &r {
                if !n.contains(s.z) {
                    return false;
                }
            }
            match symbol.eval(s.z[0], s.z[1], DEFAULT_GUARD) {
                Ok(image) => b.contains(image),
                Err(_) => false,
            }
        },
        w,
        samples,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::volume::box_volume_exact;
    use crate::rif::zoo;

    fn w(beta: f64) -> WeightParams {
        WeightParams::new(beta).unwrap()
    }

    #[test]
    fn identity_preimage_is_the_center() {
        let c = BoundaryPoint::new(1.0, 2.5);
        let pre = torus_preimages(&zoo::identity_pair(), &c);
        assert_eq!(pre.len(), 1);
        assert!(pre[0].angular_distance(&c) < 1e-9);
        let b = CarlesonBox::square(c, 0.1).unwrap();
        let comps = preimage_components(&zoo::identity_pair(), &b);
        assert_eq!(comps.len(), 1);
        assert!((comps[0].1[0] - 0.2).abs() < 1e-6 && (comps[0].1[1] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn knese_pair_preimages_form_curves() {
        // -phi = 1 on the torus exactly where z1 = 1 or z2 = 1.
        let neg = zoo::knese()
            .rotated(&BoundaryPoint::one(), &BoundaryPoint::one(), Complex64::new(-1.0, 0.0))
            .unwrap();
        let pair = SymbolPair::new(neg.clone(), neg).unwrap();
        let pre = torus_preimages(&pair, &BoundaryPoint::one());
        assert!(pre.len() > MAX_PREIMAGES);
        for p in &pre {
            let d = p.angles.map(|t| crate::torus::angle_diff(t, 0.0).abs());
            assert!(d[0].min(d[1]) < 1e-6, "{p:?}");
        }
        let b = CarlesonBox::square(BoundaryPoint::one(), 0.01).unwrap();
        let comps = preimage_components(&pair, &b);
        // One slab per line, thin in the coordinate that is pinned to 1.
        assert_eq!(comps.len(), 2, "{comps:?}");
        for (_, r) in &comps {
            assert!(r[0].min(r[1]) < 0.05 && r[0].max(r[1]) >= 1.0);
        }
    }

    #[test]
    fn identity_pullback_is_the_box() {
        for (center, d) in [(BoundaryPoint::new(0.3, 5.0), 0.4), (BoundaryPoint::new(2.0, 1.0), 0.05)] {
            let b = CarlesonBox::square(center, d).unwrap();
            let pb = pullback_volume(&zoo::identity_pair(), &b, w(1.0), 200_000, 5, None).unwrap();
            let exact = box_volume_exact(w(1.0), &b).unwrap();
            assert!(pb.z_score(&exact) < 3.0, "{pb:?} vs {exact:?}");
            assert!(pb.std_error < 0.05 * pb.value);
        }
    }

    #[test]
    fn covering_box_gives_the_full_volume() {
        let b = CarlesonBox::square(BoundaryPoint::one(), 2.0).unwrap();
        let pb = pullback_volume(&zoo::knese_pair(), &b, w(8.0), 100_000, 9, None).unwrap();
        let full = (std::f64::consts::PI / 9.0).powi(2);
        assert!((pb.value - full).abs() < 1e-12 * full);
    }

    #[test]
    fn layer_contains_the_pullback() {
        // Every sampled pull-back point must satisfy the Schwarz-Pick bound.
        let phi = zoo::knese_pair();
        let b = CarlesonBox::square(BoundaryPoint::new(std::f64::consts::PI, std::f64::consts::PI), 0.05).unwrap();
        let plan = plan_pullback(&phi, &b, w(0.0), None).unwrap();
        let t = plan.layer.unwrap();
        let mut stream = crate::measure::rng::SampleStream::new(3, 0);
        for _ in 0..200_000 {
            let z1 = Complex64::from_polar(stream.uniform().sqrt(), TAU * stream.uniform());
            let z2 = Complex64::from_polar(stream.uniform().sqrt(), TAU * stream.uniform());
            if let Ok(v) = phi.eval(z1, z2, DEFAULT_GUARD) {
                if b.contains(v) {
                    let m = (1.0 - z1.norm_sqr()).min(1.0 - z2.norm_sqr());
                    assert!(m < t);
                }
            }
        }
    }

    #[test]
    fn sample_floor() {
        let b = CarlesonBox::square(BoundaryPoint::one(), 0.5).unwrap();
        assert!(pullback_volume(&zoo::knese_pair(), &b, w(1.0), 50_000, 1, None).is_err());
        assert_eq!(
            pullback_volume(&zoo::knese_pair(), &b, WeightParams { beta: -1.0 }, 100_000, 1, None)
                .unwrap_err()
                .name(),
            "UnsupportedWeight"
        );
    }
}
