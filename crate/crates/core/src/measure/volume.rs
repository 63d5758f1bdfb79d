//! Weighted Bergman volumes `V_beta` on the bidisc.
//!
//! Volumes use the true 4-D Lebesgue measure, so `V_beta(D^2) = (pi/(beta+1))^2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::sampler::{estimate, DiscFactor, Proposal, Sample};
use crate::error::{Error, Result};
use crate::torus::BoundaryPoint;

/// Smallest sample count accepted by the volume estimators.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub beta: f64,
}

impl WeightParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > -1.0) || !beta.is_finite() {
            return Err(Error::UnsupportedWeight { beta });
        }
        Ok(Self { beta })
    }

    /// `V_beta(D)` for one disc.
    pub fn disc_volume(&self) -> f64 {
        PI / (self.beta + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl VolumeEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples: 0,
            seed: 0,
        }
    }

    /// `|self - other|` measured in combined standard errors.
    pub fn z_score(&self, other: &VolumeEstimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        let gap = (self.value - other.value).abs();
        if se == 0.0 {
            if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            gap / se
        }
    }
}

/// `S(zeta, delta) = {z in D^2 : |z1 - zeta1| < delta1, |z2 - zeta2| < delta2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonBox {
    pub center: BoundaryPoint,
    pub radii: [f64; 2],
}

impl CarlesonBox {
    /// Radii must lie in `(0, 2]`; at 2 the box is the whole bidisc.
    pub fn new(center: BoundaryPoint, radii: [f64; 2]) -> Result<Self> {
        if radii.iter().any(|&d| !(d > 0.0 && d <= 2.0)) {
            return Err(Error::InvalidInput(format!("box radii {radii:?} outside (0, 2]")));
        }
        Ok(Self { center, radii })
    }

    pub fn square(center: BoundaryPoint, delta: f64) -> Result<Self> {
        Self::new(center, [delta, delta])
    }

    #[inline]
    pub fn contains(&self, w: [num_complex::Complex64; 2]) -> bool {
        let zeta = self.center.coords();
        w[0].norm_sqr() < 1.0
            && w[1].norm_sqr() < 1.0
            && (w[0] - zeta[0]).norm() < self.radii[0]
            && (w[1] - zeta[1]).norm() < self.radii[1]
    }

    /// Product proposal over the box's bounding region.
    pub fn proposal(&self, exponent: f64) -> Proposal {
        Proposal::product(
            DiscFactor::around(self.center.angles[0], self.radii[0], exponent),
            DiscFactor::around(self.center.angles[1], self.radii[1], exponent),
        )
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// `V_beta` of `{indicator}` with weight-proportional draws over the bidisc.
pub fn weighted_volume_mc<F>(indicator: F, w: WeightParams, samples: usize, seed: u64) -> Result<VolumeEstimate>
where
    F: Fn(&Sample) -> bool + Sync,
{
    weighted_volume_with(&Proposal::full(w.beta), indicator, w, samples, seed)
}

/// `V_beta` of `{indicator}` under an arbitrary proposal. Unbiased as long as
/// the proposal's support covers the set.
pub fn weighted_volume_with<F>(
    proposal: &Proposal,
    indicator: F,
    w: WeightParams,
    samples: usize,
    seed: u64,
) -> Result<VolumeEstimate>
where
    F: Fn(&Sample) -> bool + Sync,
{
    WeightParams::new(w.beta)?;
    check_samples(samples)?;
    let (value, std_error) = estimate(proposal, w.beta, samples, seed, |s| {
        if indicator(s) {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(VolumeEstimate {
        value,
        std_error,
        samples: samples as u64,
        seed,
    })
}

/// Exact `V_beta({(1-|z1|^2)(1-|z2|^2) <= delta})`:
/// `pi^2 [delta^(b)/b^2 + delta^(b) ln(1/delta)/b]` with `b = beta + 1`.
pub fn sublevel_volume_exact(w: WeightParams, delta: f64) -> Result<f64> {
    WeightParams::new(w.beta)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta {delta} outside (0, 1)")));
    }
    let b = w.beta + 1.0;
    let db = delta.powf(b);
    Ok(PI * PI * (db / (b * b) + db * (1.0 / delta).ln() / b))
}

/// Indicator of the sub-level set `{u1 u2 <= delta}`.
pub fn sublevel_indicator(delta: f64) -> impl Fn(&Sample) -> bool + Sync {
    move |s: &Sample| s.u[0] * s.u[1] <= delta
}

/// Monte Carlo `V_a(S(zeta, delta))` with draws restricted to the box's
/// bounding region in `(u, theta)` coordinates.
pub fn carleson_box_volume(w: WeightParams, cbox: &CarlesonBox, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    let b = *cbox;
    weighted_volume_with(&cbox.proposal(w.beta), move |s| b.contains(s.z), w, samples, seed)
}

/// Half-width of the arc `{theta : |r e^{i theta} - 1| < delta}`.
fn slice_half_angle(r: f64, delta: f64) -> f64 {
    if r == 0.0 {
        return if delta > 1.0 { PI } else { 0.0 };
    }
    let c = (1.0 + r * r - delta * delta) / (2.0 * r);
    if c >= 1.0 {
        0.0
    } else if c <= -1.0 {
        PI
    } else {
        c.acos()
    }
}

/// `V_beta` of `{z in D : |z - zeta| < delta}` by tanh-sinh quadrature of
/// `u^beta * halfangle(u)` over `u = 1 - |z|^2`.
pub fn box_factor_volume(w: WeightParams, delta: f64) -> Result<f64> {
    WeightParams::new(w.beta)?;
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::InvalidInput(format!("radius {delta} outside (0, 2]")));
    }
    let beta = w.beta;
    let b = beta + 1.0;
    if delta >= 2.0 {
        return Ok(PI / b);
    }
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        u.powf(beta) * slice_half_angle((1.0 - u).max(0.0).sqrt(), delta)
    };
    // Kink where the arc stops being empty, and (delta > 1) where it becomes
    // the full circle.
    let u_edge = if delta < 1.0 { delta * (2.0 - delta) } else { 1.0 };
    let u_full = if delta > 1.0 { 1.0 - (delta - 1.0).powi(2) } else { 1.0 };
    let upper = u_edge.min(u_full);
    let scale = PI * upper.powf(b) / b;
    let mut total = quadrature::integrate(integrand, 0.0, upper, 1e-15 * scale).integral;
    if u_full < 1.0 {
        total += PI * (1.0 - u_full.powf(b)) / b;
    }
    Ok(total)
}

/// Deterministic `V_beta(S(zeta, delta))` as a product of one-disc volumes.
pub fn box_volume_exact(w: WeightParams, cbox: &CarlesonBox) -> Result<VolumeEstimate> {
    Ok(VolumeEstimate::exact(
        box_factor_volume(w, cbox.radii[0])? * box_factor_volume(w, cbox.radii[1])?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(beta: f64) -> WeightParams {
        WeightParams::new(beta).unwrap()
    }

    /// Area of the lens between the unit disc and the disc of radius `d`
    /// centred at 1.
    fn lens_area(d: f64) -> f64 {
        d * d * (d / 2.0).acos() + (1.0 - d * d / 2.0).acos() - d / 2.0 * (4.0 - d * d).sqrt()
    }

    #[test]
    fn rejects_unsupported_weights() {
        assert_eq!(WeightParams::new(-1.0).unwrap_err().name(), "UnsupportedWeight");
        assert!(WeightParams::new(-0.99).is_ok());
    }

    #[test]
    fn full_indicator_volumes() {
        let v = weighted_volume_mc(|_| true, w(0.0), 10_000, 1).unwrap();
        assert!((v.value - PI * PI).abs() < 1e-9);
        assert!(v.std_error < 1e-9);
        let v = weighted_volume_mc(|_| true, w(1.0), 10_000, 1).unwrap();
        assert!((v.value - (PI / 2.0).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        assert!(weighted_volume_mc(|_| true, w(0.0), 100, 1).is_err());
    }

    #[test]
    fn sublevel_examples() {
        let v = sublevel_volume_exact(w(0.0), 0.01).unwrap();
        assert!((v / (PI * PI) - (0.01 + 0.01 * 100f64.ln())).abs() < 1e-15);
        assert!((v / (PI * PI) - 0.056_051_701_859_880_91).abs() < 1e-15);
        let near_one = sublevel_volume_exact(w(1.0), 1.0 - 1e-12).unwrap();
        assert!((near_one - PI * PI / 4.0).abs() < 1e-10);
        let e = sublevel_volume_exact(w(0.0), (-1.0f64).exp()).unwrap();
        assert!((e - 2.0 * PI * PI / std::f64::consts::E).abs() < 1e-12);
        assert!(sublevel_volume_exact(w(0.0), 1.0).is_err());
    }

    #[test]
    fn sublevel_matches_iterated_quadrature() {
        // Independent route: integrate v over (0, min(1, delta/u)) in closed
        // form and u numerically.
        for (beta, delta) in [(0.0, 0.01), (0.5, 0.2), (2.0, 1e-3)] {
            let b: f64 = beta + 1.0;
            let inner = |u: f64| u.powf(beta) * (delta / u).min(1.0).powf(b) / b;
            let q = quadrature::integrate(inner, 0.0, delta, 1e-16).integral
                + quadrature::integrate(inner, delta, 1.0, 1e-16).integral;
            let exact = sublevel_volume_exact(w(beta), delta).unwrap();
            assert!((PI * PI * q - exact).abs() < 1e-10 * exact, "{beta} {delta}");
        }
    }

    #[test]
    fn box_quadrature_matches_lens_area() {
        for d in [0.01, 0.1, 0.25, 0.5, 0.9, 1.0, 1.3, 1.9] {
            let q = box_factor_volume(w(0.0), d).unwrap();
            let l = lens_area(d);
            assert!((q - l).abs() < 1e-12 * l.max(1e-3), "{d}: {q} vs {l}");
        }
        assert!((box_factor_volume(w(3.0), 2.0).unwrap() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn box_covering_the_bidisc() {
        let b = CarlesonBox::square(BoundaryPoint::one(), 2.0).unwrap();
        let v = carleson_box_volume(w(0.0), &b, 20_000, 3).unwrap();
        assert!((v.value - PI * PI).abs() < 1e-9);
        assert!(CarlesonBox::square(BoundaryPoint::one(), 2.5).is_err());
    }

    #[test]
    fn box_mc_agrees_with_quadrature() {
        for (beta, d) in [(0.0, 0.3), (2.0, 0.1), (0.5, 1.4)] {
            let b = CarlesonBox::new(BoundaryPoint::new(1.0, 4.0), [d, d * 0.7]).unwrap();
            let mc = carleson_box_volume(w(beta), &b, 200_000, 11).unwrap();
            let exact = box_volume_exact(w(beta), &b).unwrap();
            assert!(mc.z_score(&exact) < 3.0, "{beta} {d}: {mc:?} vs {exact:?}");
        }
    }
}
