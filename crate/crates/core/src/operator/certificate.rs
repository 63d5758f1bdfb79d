//! Carleson ratios `V_beta(Phi^{-1}(S)) / V_a(S)` over families of boxes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lojasiewicz::{stabilized_lojasiewicz, DEFAULT_BINS, DEFAULT_RADIUS};
use super::pullback::pullback_volume;
use crate::error::{Error, Result};
use crate::measure::fit::{fit_scaling_exponent, ExponentFit};
use crate::measure::rng::SampleStream;
use crate::measure::volume::{box_volume_exact, CarlesonBox, VolumeEstimate, WeightParams};
use crate::rif::{RationalInnerFunction, SymbolPair};
use crate::singularity::{default_radii, find_singularities, nt_limit};
use crate::torus::{BoundaryPoint, Neighborhood};

const NT_TOLERANCE: f64 = 1e-8;
const RANDOM_CENTERS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub center: BoundaryPoint,
    pub radii: [f64; 2],
    pub pullback: VolumeEstimate,
    pub box_volume: f64,
    pub ratio: f64,
    pub ratio_std_error: f64,
}

/// Flat CSV record of one table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub center_theta1: f64,
    pub center_theta2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub pullback: f64,
    pub pullback_se: f64,
    pub box_volume: f64,
    pub ratio: f64,
}

/// Where a coordinate's singularity and boundary value were moved from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub singularity: BoundaryPoint,
    pub boundary_value: Complex64,
    pub exponent_hat: Option<f64>,
    /// Radius at which the exponent fit settled.
    pub neighborhood_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    /// The symbol the table was computed for (after alignment, if any).
    pub symbol: SymbolPair,
    pub alignment: Option<[Alignment; 2]>,
    pub beta: f64,
    pub a: f64,
    pub q_used: f64,
    pub ratio_table: Vec<RatioRow>,
    pub sup_ratio: f64,
    /// Some center's finest ratio exceeds twice its coarsest.
    pub growth_flag: bool,
    /// Fitted exponent of the pull-back volumes against the scale, when the
    /// table has enough non-empty rows.
    pub pullback_fit: Option<ExponentFit>,
    /// Largest scale from which no finer ratio exceeds the ratio there by
    /// more than two standard errors.
    pub bound_threshold: Option<f64>,
}

impl BoundednessReport {
    pub fn records(&self) -> Vec<RatioRecord> {
        self.ratio_table
            .iter()
            .map(|r| RatioRecord {
                center_theta1: r.center.angles[0],
                center_theta2: r.center.angles[1],
                delta1: r.radii[0],
                delta2: r.radii[1],
                pullback: r.pullback.value,
                pullback_se: r.pullback.std_error,
                box_volume: r.box_volume,
                ratio: r.ratio,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateOptions {
    /// Singularity to align per coordinate; `None` picks the unique one (or
    /// `(1, 1)` for symbols without singularities).
    pub designated: [Option<BoundaryPoint>; 2],
    pub q_override: Option<f64>,
    pub scales: Vec<f64>,
    /// `delta2 = aspect * delta1`.
    pub aspect: f64,
    pub samples: usize,
    pub seed: u64,
    pub fit_samples: usize,
}

impl CertificateOptions {
    pub fn new(scales: Vec<f64>, samples: usize, seed: u64) -> Self {
        Self {
            designated: [None, None],
            q_override: None,
            scales,
            aspect: 1.0,
            samples,
            seed,
            fit_samples: 200_000,
        }
    }
}

fn check_scales(scales: &[f64], aspect: f64) -> Result<Vec<f64>> {
    if scales.is_empty() {
        return Err(Error::InvalidInput("no scales given".into()));
    }
    if !(aspect > 0.0 && aspect.is_finite()) {
        return Err(Error::InvalidInput(format!("aspect {aspect} must be positive")));
    }
    let mut sorted = scales.to_vec();
    if sorted.iter().any(|&d| !(d > 0.0 && d <= 2.0 && d * aspect <= 2.0)) {
        return Err(Error::InvalidInput("box radii must lie in (0, 2]".into()));
    }
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup();
    Ok(sorted)
}

fn ratio_rows(
    symbol: &SymbolPair,
    center: BoundaryPoint,
    scales: &[f64],
    aspect: f64,
    beta: f64,
    a: f64,
    samples: usize,
    seed: u64,
    restrict: Option<&Neighborhood>,
) -> Result<Vec<RatioRow>> {
    let wb = WeightParams::new(beta)?;
    let wa = WeightParams::new(a)?;
    scales
        .iter()
        .map(|&d| {
            let cbox = CarlesonBox::new(center, [d, aspect * d])?;
            let pullback = pullback_volume(symbol, &cbox, wb, samples, seed, restrict)?;
            let box_volume = box_volume_exact(wa, &cbox)?.value;
            Ok(RatioRow {
                center,
                radii: cbox.radii,
                ratio: pullback.value / box_volume,
                ratio_std_error: pullback.std_error / box_volume,
                pullback,
                box_volume,
            })
        })
        .collect()
}

/// Rows of one center ordered by decreasing scale.
fn grows(rows: &[RatioRow]) -> bool {
    match (rows.first(), rows.last()) {
        (Some(coarse), Some(fine)) if rows.len() > 1 => fine.ratio > 2.0 * coarse.ratio,
        _ => false,
    }
}

fn bound_threshold(rows: &[RatioRow]) -> Option<f64> {
    rows.iter().enumerate().find_map(|(i, r)| {
        let limit = r.ratio + 2.0 * r.ratio_std_error;
        rows[i + 1..]
            .iter()
            .all(|f| f.ratio - 2.0 * f.ratio_std_error <= limit)
            .then_some(r.radii[0])
    })
}

fn pullback_fit(rows: &[RatioRow]) -> Option<ExponentFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.pullback.value > 0.0)
        .map(|r| (r.radii[0], r.pullback.value))
        .collect();
    fit_scaling_exponent(&pts, false).ok()
}

/// The designated singularity, else the unique torus singularity of `phi`,
/// else `(1, 1)` when `phi` has none.
pub fn pick_singularity(phi: &RationalInnerFunction, designated: Option<BoundaryPoint>) -> Result<BoundaryPoint> {
    if let Some(eta) = designated {
        return Ok(eta);
    }
    let found = find_singularities(phi, 64, 1e-10)?;
    match found.len() {
        0 => Ok(BoundaryPoint::one()),
        1 => Ok(found[0]),
        n => Err(Error::InvalidInput(format!(
            "{n} singularities found; designate one per coordinate"
        ))),
    }
}

/// Rotates `phi` so that its singularity sits at `(1, 1)` with boundary
/// value `1` there. Returns the singularity, the original boundary value and
/// the rotated function.
pub fn align_at_one(
    phi: &RationalInnerFunction,
    designated: Option<BoundaryPoint>,
) -> Result<(BoundaryPoint, Complex64, RationalInnerFunction)> {
    let eta = pick_singularity(phi, designated)?;
    let value = nt_limit(phi, &eta, &default_radii(), NT_TOLERANCE)?.value;
    let unit = value / value.norm();
    let aligned = phi.rotated(&eta, &BoundaryPoint::one(), unit.conj())?;
    Ok((eta, value, aligned))
}

/// Ratio table over boxes `S((1, 1), (delta, aspect delta))`, after rotating
/// each coordinate so that its designated singularity sits at `(1, 1)` with
/// boundary value `1`. Pull-backs are restricted to the neighborhood of
/// `(1, 1)` where the exponent fits settled (radius `0.3` when `q` is
/// given), and `a = beta / (2 q) - 2`.
pub fn theorem_certificate(symbol: &SymbolPair, beta: f64, opts: &CertificateOptions) -> Result<BoundednessReport> {
    WeightParams::new(beta)?;
    let scales = check_scales(&opts.scales, opts.aspect)?;
    if let Some(q) = opts.q_override {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidInput(format!("q = {q} must be positive")));
        }
        if beta <= 2.0 * q {
            return Err(Error::BetaTooSmall { beta, two_q: 2.0 * q });
        }
    }

    let one = BoundaryPoint::one();
    let mut alignment = Vec::with_capacity(2);
    let mut rotated = Vec::with_capacity(2);
    for k in 0..2 {
        let (eta, value, aligned) = align_at_one(symbol.coordinate(k), opts.designated[k])?;
        let fit = match opts.q_override {
            Some(_) => None,
            None => Some(stabilized_lojasiewicz(&aligned, &one, opts.fit_samples, DEFAULT_BINS, opts.seed)?),
        };
        alignment.push(Alignment {
            singularity: eta,
            boundary_value: value,
            exponent_hat: fit.as_ref().map(|f| f.exponent_hat),
            neighborhood_radius: fit.as_ref().map(|f| f.neighborhood.radius),
        });
        rotated.push(aligned);
    }
    let second = rotated.pop().expect("two coordinates");
    let first = rotated.pop().expect("two coordinates");
    let aligned = SymbolPair::new(first, second)?;

    let q = match opts.q_override {
        Some(q) => q,
        None => alignment
            .iter()
            .filter_map(|al| al.exponent_hat)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    if !(q > 0.0) || beta <= 2.0 * q {
        return Err(Error::BetaTooSmall { beta, two_q: 2.0 * q });
    }
    let a = beta / (2.0 * q) - 2.0;
    // U = U1 ∩ U2 for neighborhoods centred at the same point.
    let radius = alignment
        .iter()
        .filter_map(|al| al.neighborhood_radius)
        .fold(DEFAULT_RADIUS, f64::min);
    let nbhd = Neighborhood::new(one, radius)?;
    let rows = ratio_rows(&aligned, one, &scales, opts.aspect, beta, a, opts.samples, opts.seed, Some(&nbhd))?;
    Ok(BoundednessReport {
        symbol: aligned,
        alignment: Some([alignment[0], alignment[1]]),
        beta,
        a,
        q_used: q,
        sup_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        growth_flag: grows(&rows),
        pullback_fit: pullback_fit(&rows),
        bound_threshold: bound_threshold(&rows),
        ratio_table: rows,
    })
}

/// Singularities of both coordinates followed by eight seeded random torus
/// points.
pub fn default_centers(symbol: &SymbolPair, seed: u64) -> Result<Vec<BoundaryPoint>> {
    let mut centers: Vec<BoundaryPoint> = Vec::new();
    for k in 0..2 {
        for p in find_singularities(symbol.coordinate(k), 64, 1e-10)? {
            if centers.iter().all(|c| c.angular_distance(&p) > 1e-6) {
                centers.push(p);
            }
        }
    }
    let mut stream = SampleStream::new(seed, u64::MAX);
    for _ in 0..RANDOM_CENTERS {
        let t1 = std::f64::consts::TAU * stream.uniform();
        let t2 = std::f64::consts::TAU * stream.uniform();
        centers.push(BoundaryPoint::new(t1, t2));
    }
    Ok(centers)
}

/// Ratio table of `V_beta(Phi^{-1}(S(zeta, delta))) / V_a(S(zeta, delta))`
/// over all centers and scales, without any alignment or restriction.
#[allow(clippy::too_many_arguments)]
pub fn carleson_sweep(
    symbol: &SymbolPair,
    beta: f64,
    a: f64,
    centers: &[BoundaryPoint],
    scales: &[f64],
    aspect: f64,
    samples: usize,
    seed: u64,
) -> Result<BoundednessReport> {
    WeightParams::new(beta)?;
    WeightParams::new(a)?;
    if centers.is_empty() {
        return Err(Error::InvalidInput("no centers given".into()));
    }
    let scales = check_scales(scales, aspect)?;
    let mut rows = Vec::with_capacity(centers.len() * scales.len());
    let mut growth = false;
    for &c in centers {
        let block = ratio_rows(symbol, c, &scales, aspect, beta, a, samples, seed, None)?;
        growth |= grows(&block);
        rows.extend(block);
    }
    Ok(BoundednessReport {
        symbol: symbol.clone(),
        alignment: None,
        beta,
        a,
        q_used: beta / (2.0 * (a + 2.0)),
        sup_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        growth_flag: growth,
        pullback_fit: None,
        bound_threshold: None,
        ratio_table: rows,
    })
}
