//! Empirical Łojasiewicz exponents `|phi(z) - phi*(eta)| >= C min(u1, u2)^q`.
//!
//! Points of the neighborhood are drawn with `u_i` and the angular offsets
//! log-uniform, so every decade of boundary proximity is populated. The
//! per-bin minima of the gap form the lower envelope, fitted in log-log
//! coordinates.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::fit::fit_scaling_exponent;
use crate::measure::rng::{SampleStream, CHUNK_SIZE};
use crate::measure::sampler::Sample;
use crate::rif::{RationalInnerFunction, DEFAULT_GUARD};
use crate::singularity::{default_radii, find_singularities, nt_limit};
use crate::torus::{BoundaryPoint, Neighborhood};

pub const DEFAULT_BINS: usize = 32;
/// Fewest non-empty bins accepted for a fit.
pub const MIN_BINS: usize = 6;
pub const DEFAULT_RADIUS: f64 = 0.3;

const U_FLOOR: f64 = 1e-8;
const ANGLE_FLOOR: f64 = 1e-10;
const NT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczEstimate {
    pub exponent_hat: f64,
    pub constant_hat: f64,
    pub neighborhood: Neighborhood,
    /// `(min(u1, u2), gap)` at each non-empty bin's minimum.
    pub envelope_points: Vec<(f64, f64)>,
    pub target_value: Complex64,
    pub residual_rms: f64,
}

/// Log-uniform draw on `[lo, hi]`.
fn log_uniform(stream: &mut SampleStream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi / lo).ln() * stream.uniform()).exp()
}

fn draw(stream: &mut SampleStream, nbhd: &Neighborhood) -> Sample {
    let rho = nbhd.radius;
    let u_hi = rho * (2.0 - rho);
    let t_hi = rho.asin();
    let mut z = [Complex64::new(0.0, 0.0); 2];
    let mut u = [0.0; 2];
    for k in 0..2 {
        u[k] = log_uniform(stream, U_FLOOR, u_hi);
        let sign = if stream.uniform() < 0.5 { -1.0 } else { 1.0 };
        let theta = nbhd.center.angles[k] + sign * log_uniform(stream, ANGLE_FLOOR, t_hi);
        z[k] = Complex64::from_polar((1.0 - u[k]).sqrt(), theta);
    }
    Sample { z, u }
}

/// Lower envelope of an arbitrary gap over the neighborhood, binned by
/// `ln min(u1, u2)`. Draws outside the neighborhood and `None` gaps are
/// skipped; bins keep the draw with the smallest positive gap.
pub fn gap_envelope<G>(gap: G, nbhd: &Neighborhood, samples: usize, bins: usize, seed: u64) -> Result<Vec<(f64, f64)>>
where
    G: Fn(&Sample) -> Option<f64> + Sync,
{
    if bins < MIN_BINS {
        return Err(Error::InvalidInput(format!("need at least {MIN_BINS} bins, got {bins}")));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let lo = U_FLOOR.ln();
    let hi = (nbhd.radius * (2.0 - nbhd.radius)).ln();
    let width = (hi - lo) / bins as f64;
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let per_chunk: Vec<Vec<Option<(f64, f64)>>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut stream = SampleStream::new(seed, chunk as u64);
            let len = CHUNK_SIZE.min(samples - chunk * CHUNK_SIZE);
            let mut best: Vec<Option<(f64, f64)>> = vec![None; bins];
            for _ in 0..len {
                let s = draw(&mut stream, nbhd);
                if !nbhd.contains(s.z) {
                    continue;
                }
                let Some(g) = gap(&s) else { continue };
                if !(g > 0.0 && g.is_finite()) {
                    continue;
                }
                let m = s.u[0].min(s.u[1]);
                let b = (((m.ln() - lo) / width) as usize).min(bins - 1);
                if best[b].is_none_or(|(bm, bg)| g < bg || (g == bg && m < bm)) {
                    best[b] = Some((m, g));
                }
            }
            best
        })
        .collect();
    let mut envelope: Vec<Option<(f64, f64)>> = vec![None; bins];
    for part in per_chunk {
        for (slot, cand) in envelope.iter_mut().zip(part) {
            if let Some((m, g)) = cand {
                if slot.is_none_or(|(bm, bg)| g < bg || (g == bg && m < bm)) {
                    *slot = Some((m, g));
                }
            }
        }
    }
    let points: Vec<(f64, f64)> = envelope.into_iter().flatten().collect();
    if points.len() < MIN_BINS {
        return Err(Error::EnvelopeTooSparse {
            bins: points.len(),
            required: MIN_BINS,
        });
    }
    Ok(points)
}

/// Fits `gap ~ C m^q` to the envelope; returns `(q, C, rms)`.
pub fn fit_envelope(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let fit = fit_scaling_exponent(points, false)?;
    Ok((fit.exponent, fit.log_constant.exp(), fit.residual_rms))
}

/// Checks that `eta` is a legitimate target: a torus zero of the denominator,
/// or any point when `phi` extends smoothly to the whole torus.
fn check_target(phi: &RationalInnerFunction, eta: &BoundaryPoint) -> Result<()> {
    if phi.is_singular_at(eta) {
        return Ok(());
    }
    let found = find_singularities(phi, 64, 1e-10)?;
    if found.is_empty() {
        Ok(())
    } else {
        Err(Error::SingularityMismatch(format!(
            "({:.6}, {:.6}) is not a singularity; candidates: {:?}",
            eta.angles[0],
            eta.angles[1],
            found.iter().map(|p| p.angles).collect::<Vec<_>>()
        )))
    }
}

/// Łojasiewicz-type exponent of `phi` at `eta` over `nbhd`.
pub fn lojasiewicz_fit(
    phi: &RationalInnerFunction,
    eta: &BoundaryPoint,
    nbhd: &Neighborhood,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<LojasiewiczEstimate> {
    if nbhd.center.angular_distance(eta) > 1e-12 {
        return Err(Error::InvalidInput("neighborhood must be centred at the singularity".into()));
    }
    check_target(phi, eta)?;
    let target = nt_limit(phi, eta, &default_radii(), NT_TOLERANCE)
        .map_err(|e| Error::SingularityMismatch(format!("no boundary limit at the target: {e}")))?
        .value;
    let envelope = gap_envelope(
        |s| phi.eval(s.z[0], s.z[1], DEFAULT_GUARD).ok().map(|v| (v - target).norm()),
        nbhd,
        samples,
        bins,
        seed,
    )?;
    let (q, c, rms) = fit_envelope(&envelope)?;
    Ok(LojasiewiczEstimate {
        exponent_hat: q,
        constant_hat: c,
        neighborhood: *nbhd,
        envelope_points: envelope,
        target_value: target,
        residual_rms: rms,
    })
}

/// Repeats the fit with the radius halved from `DEFAULT_RADIUS` until two
/// successive exponents agree within `0.1` (at most five radii). Returns the
/// last estimate.
pub fn stabilized_lojasiewicz(
    phi: &RationalInnerFunction,
    eta: &BoundaryPoint,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<LojasiewiczEstimate> {
    let mut radius = DEFAULT_RADIUS;
    let mut previous = lojasiewicz_fit(phi, eta, &Neighborhood::new(*eta, radius)?, samples, bins, seed)?;
    for _ in 0..4 {
        radius /= 2.0;
        let next = lojasiewicz_fit(phi, eta, &Neighborhood::new(*eta, radius)?, samples, bins, seed)?;
        let settled = (next.exponent_hat - previous.exponent_hat).abs() < 0.1;
        previous = next;
        if settled {
            break;
        }
    }
    Ok(previous)
}
