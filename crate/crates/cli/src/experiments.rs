//! One function per experiment; each returns the JSON and CSV renderings of
//! its report plus a summary line.

use std::f64::consts::TAU;

use bidisc_core::measure::rng::SampleStream;
use bidisc_core::measure::{
    box_volume_exact, carleson_box_volume, fit_scaling_exponent, sublevel_indicator, sublevel_volume_exact,
    weighted_volume_with, CarlesonBox, ExponentFit, Proposal, WeightParams,
};
use bidisc_core::operator::{
    align_at_one, carleson_sweep, default_centers, lojasiewicz_fit, stabilized_lojasiewicz, theorem_certificate,
    BoundednessReport, CertificateOptions, LojasiewiczEstimate, MIN_PULLBACK_SAMPLES,
};
use bidisc_core::singularity::default_radii;
use bidisc_core::{
    build_pzeta, find_singularities, nt_limit, zero_set_interior_check, BiPolynomial, BoundaryPoint, Neighborhood,
    NtLimitReport,
};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::CliError;

/// Rendered report of one run.
pub struct Outcome {
    pub json: String,
    pub csv: String,
    /// Key number of the run, for the summary line.
    pub headline: String,
}

/// Boundary-tilted proposal exponent for sub-level volumes.
pub const SUBLEVEL_PROPOSAL_EXPONENT: f64 = -0.5;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    experiment: &'a str,
    seed: u64,
    result: &'a T,
}

fn render<T: Serialize, R: Serialize>(
    experiment: Experiment,
    seed: u64,
    body: &T,
    rows: &[R],
    headline: String,
) -> Result<Outcome, CliError> {
    let mut json = serde_json::to_string_pretty(&Envelope {
        experiment: experiment.name(),
        seed,
        result: body,
    })
    .map_err(|e| CliError::Io(e.to_string()))?;
    json.push('\n');
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome {
        json,
        csv: String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))?,
        headline,
    })
}

pub fn default_scales(experiment: Experiment) -> Vec<f64> {
    match experiment {
        Experiment::VolumeLemma => (2..=6).map(|k| 10f64.powf(-0.5 * k as f64)).collect(),
        Experiment::BoxScaling => (2..=9).map(|k| 0.5f64.powi(k)).collect(),
        Experiment::Certificate => (1..=8).map(|k| 0.5f64.powi(k)).collect(),
        _ => (1..=6).map(|k| 0.5f64.powi(k)).collect(),
    }
}

pub fn default_samples(experiment: Experiment) -> usize {
    match experiment {
        Experiment::ReflectCheck => 1000,
        Experiment::Lojasiewicz => 200_000,
        _ => 1_000_000,
    }
}

/// Field checks that need no computation; failures exit with status 2.
pub fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let e = cfg.experiment;
    let weight = |b: f64| WeightParams::new(b).map(|_| ()).map_err(CliError::Invalid);
    cfg.seed()?;
    let samples = cfg.samples.unwrap_or_else(|| default_samples(e));
    let min_samples = match e {
        Experiment::VolumeLemma | Experiment::BoxScaling => 10_000,
        Experiment::Certificate | Experiment::Sweep => MIN_PULLBACK_SAMPLES,
        _ => 1,
    };
    if samples < min_samples {
        return Err(CliError::Config(format!("{} needs samples >= {min_samples}", e.name())));
    }
    if let Some(scales) = &cfg.scales {
        let upper_ok = |d: f64| match e {
            Experiment::VolumeLemma => d < 1.0,
            _ => d <= 2.0 && d * cfg.aspect.unwrap_or(1.0) <= 2.0,
        };
        if scales.is_empty() || scales.iter().any(|&d| !(d > 0.0 && upper_ok(d))) {
            return Err(CliError::Config(format!("scales {scales:?} out of range for {}", e.name())));
        }
    }
    if let Some(a) = cfg.aspect {
        if !(a > 0.0 && a.is_finite()) {
            return Err(CliError::Config(format!("aspect {a} must be positive")));
        }
    }
    if let Some(r) = cfg.radius {
        Neighborhood::new(BoundaryPoint::one(), r).map_err(CliError::Invalid)?;
    }
    if let Some(b) = cfg.bins {
        if b < bidisc_core::operator::lojasiewicz::MIN_BINS {
            return Err(CliError::Config(format!("bins {b} below the minimum of 6")));
        }
    }
    if let Some(m) = cfg.margin {
        if !(m > 0.0 && m < 0.5) {
            return Err(CliError::Config(format!("margin {m} outside (0, 0.5)")));
        }
    }
    if let Some(q) = cfg.q {
        if !(q > 0.0 && q.is_finite()) {
            return Err(CliError::Config(format!("q {q} must be positive")));
        }
    }
    if cfg.centers.as_ref().is_some_and(|c| c.is_empty()) {
        return Err(CliError::Config("centers must not be empty".into()));
    }
    match e {
        Experiment::VolumeLemma | Experiment::Certificate => weight(ExperimentConfig::require(cfg.beta, "beta", e)?)?,
        Experiment::Sweep => {
            weight(ExperimentConfig::require(cfg.beta, "beta", e)?)?;
            weight(ExperimentConfig::require(cfg.a, "a", e)?)?;
        }
        Experiment::BoxScaling => weight(cfg.beta.unwrap_or(0.0))?,
        _ => {}
    }
    let needs_symbol = !matches!(e, Experiment::VolumeLemma | Experiment::BoxScaling);
    if needs_symbol {
        cfg.symbol("knese-pair")?;
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    validate(cfg)?;
    match cfg.experiment {
        Experiment::ReflectCheck => reflect_check(cfg),
        Experiment::VolumeLemma => volume_lemma(cfg),
        Experiment::BoxScaling => box_scaling(cfg),
        Experiment::NtLimit => nt_limit_experiment(cfg),
        Experiment::ZeroSet => zero_set(cfg),
        Experiment::Lojasiewicz => lojasiewicz(cfg),
        Experiment::Certificate => certificate(cfg),
        Experiment::Sweep => sweep(cfg),
    }
}

#[derive(Serialize)]
struct ReflectCoordinate {
    coordinate: usize,
    monomial_powers: [u32; 2],
    denominator: BiPolynomial,
    denominator_text: String,
    reflection: BiPolynomial,
    reflection_text: String,
    involution_error: f64,
    numerator_is_reflection: bool,
}

#[derive(Serialize)]
struct ReflectBody {
    coordinates: Vec<ReflectCoordinate>,
    random_polynomials: usize,
    max_random_involution_error: f64,
}

#[derive(Serialize)]
struct ReflectRow<'a> {
    coordinate: usize,
    denominator: &'a str,
    reflection: &'a str,
    involution_error: f64,
    numerator_is_reflection: bool,
}

fn reflect_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let symbol = cfg.symbol("knese-pair")?;
    let coordinates: Vec<ReflectCoordinate> = (0..2)
        .map(|k| {
            let phi = symbol.coordinate(k);
            let p = phi.denominator();
            let r = p.reflect();
            let (n, m) = phi.monomial_powers();
            ReflectCoordinate {
                coordinate: k + 1,
                monomial_powers: [n, m],
                denominator_text: p.to_text(),
                reflection_text: r.to_text(),
                involution_error: r.reflect().max_coeff_distance(p),
                numerator_is_reflection: phi.numerator().max_coeff_distance(&r) == 0.0,
                denominator: p.clone(),
                reflection: r,
            }
        })
        .collect();
    let count = cfg.samples.unwrap_or_else(|| default_samples(cfg.experiment));
    let mut stream = SampleStream::new(seed, 0);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let n = (stream.uniform() * 5.0) as usize;
        let m = (stream.uniform() * 5.0) as usize;
        let coeffs = (0..(n + 1) * (m + 1))
            .map(|_| Complex64::new(stream.uniform(), stream.uniform()))
            .collect();
        let p = BiPolynomial::new(n, m, coeffs)?;
        worst = worst.max(p.reflect().reflect().max_coeff_distance(&p));
    }
    let headline = format!(
        "reflection {} over {}, max involution error {:.1e}",
        coordinates[0].reflection_text,
        coordinates[0].denominator_text,
        worst.max(coordinates.iter().map(|c| c.involution_error).fold(0.0, f64::max))
    );
    let body = ReflectBody {
        coordinates,
        random_polynomials: count,
        max_random_involution_error: worst,
    };
    let rows: Vec<ReflectRow> = body
        .coordinates
        .iter()
        .map(|c| ReflectRow {
            coordinate: c.coordinate,
            denominator: &c.denominator_text,
            reflection: &c.reflection_text,
            involution_error: c.involution_error,
            numerator_is_reflection: c.numerator_is_reflection,
        })
        .collect();
    render(cfg.experiment, seed, &body, &rows, headline)
}

#[derive(Serialize)]
struct VolumeRow {
    delta: f64,
    exact: f64,
    mc: f64,
    se: f64,
}

#[derive(Serialize)]
struct VolumeLemmaBody {
    beta: f64,
    samples: usize,
    proposal_exponent: f64,
    inserted_midpoints: bool,
    rows: Vec<VolumeRow>,
    expected_exponent: f64,
    fit_mc: ExponentFit,
    fit_exact: ExponentFit,
}

/// Adds geometric midpoints until the scale list is long enough to fit.
fn densify(scales: &[f64]) -> (Vec<f64>, bool) {
    let mut s = scales.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s.dedup();
    let mut inserted = false;
    while s.len() < 4 && s.len() >= 2 {
        let mut out = Vec::with_capacity(2 * s.len());
        for w in s.windows(2) {
            out.push(w[0]);
            out.push((w[0] * w[1]).sqrt());
        }
        out.push(s[s.len() - 1]);
        s = out;
        inserted = true;
    }
    (s, inserted)
}

fn volume_lemma(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let beta = ExperimentConfig::require(cfg.beta, "beta", cfg.experiment)?;
    let w = WeightParams::new(beta)?;
    let samples = cfg.samples.unwrap_or_else(|| default_samples(cfg.experiment));
    let (scales, inserted) = densify(&cfg.scales.clone().unwrap_or_else(|| default_scales(cfg.experiment)));
    let proposal = Proposal::full(SUBLEVEL_PROPOSAL_EXPONENT);
    let rows = scales
        .iter()
        .map(|&d| {
            let mc = weighted_volume_with(&proposal, sublevel_indicator(d), w, samples, seed)?;
            Ok(VolumeRow {
                delta: d,
                exact: sublevel_volume_exact(w, d)?,
                mc: mc.value,
                se: mc.std_error,
            })
        })
        .collect::<Result<Vec<_>, bidisc_core::Error>>()?;
    let fit_mc = fit_scaling_exponent(&rows.iter().map(|r| (r.delta, r.mc)).collect::<Vec<_>>(), true)?;
    let fit_exact = fit_scaling_exponent(&rows.iter().map(|r| (r.delta, r.exact)).collect::<Vec<_>>(), true)?;
    let headline = format!("log-corrected exponent {:.4} (beta + 1 = {})", fit_mc.exponent, beta + 1.0);
    let body = VolumeLemmaBody {
        beta,
        samples,
        proposal_exponent: SUBLEVEL_PROPOSAL_EXPONENT,
        inserted_midpoints: inserted,
        expected_exponent: beta + 1.0,
        fit_mc,
        fit_exact,
        rows,
    };
    render(cfg.experiment, seed, &body, &body.rows, headline)
}

#[derive(Serialize)]
struct BoxRow {
    delta1: f64,
    delta2: f64,
    exact: f64,
    mc: f64,
    se: f64,
}

#[derive(Serialize)]
struct BoxScalingBody {
    weight: f64,
    center: BoundaryPoint,
    aspect: f64,
    samples: usize,
    rows: Vec<BoxRow>,
    fit_exact: ExponentFit,
    fit_mc: ExponentFit,
}

fn box_scaling(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let weight = cfg.beta.unwrap_or(0.0);
    let w = WeightParams::new(weight)?;
    let samples = cfg.samples.unwrap_or_else(|| default_samples(cfg.experiment));
    let aspect = cfg.aspect.unwrap_or(1.0);
    let center = cfg
        .centers()
        .and_then(|c| c.first().copied())
        .unwrap_or_else(BoundaryPoint::one);
    let mut scales = cfg.scales.clone().unwrap_or_else(|| default_scales(cfg.experiment));
    scales.sort_by(|a, b| b.total_cmp(a));
    let rows = scales
        .iter()
        .map(|&d| {
            let b = CarlesonBox::new(center, [d, aspect * d])?;
            let mc = carleson_box_volume(w, &b, samples, seed)?;
            Ok(BoxRow {
                delta1: d,
                delta2: aspect * d,
                exact: box_volume_exact(w, &b)?.value,
                mc: mc.value,
                se: mc.std_error,
            })
        })
        .collect::<Result<Vec<_>, bidisc_core::Error>>()?;
    let fit_exact = fit_scaling_exponent(&rows.iter().map(|r| (r.delta1, r.exact)).collect::<Vec<_>>(), false)?;
    let fit_mc = fit_scaling_exponent(&rows.iter().map(|r| (r.delta1, r.mc)).collect::<Vec<_>>(), false)?;
    let headline = format!(
        "box volume exponent {:.4} (2(a + 2) = {})",
        fit_exact.exponent,
        2.0 * (weight + 2.0)
    );
    let body = BoxScalingBody {
        weight,
        center,
        aspect,
        samples,
        rows,
        fit_exact,
        fit_mc,
    };
    render(cfg.experiment, seed, &body, &body.rows, headline)
}

/// Singularities of a coordinate, or `(1, 1)` for smooth ones.
fn singular_points(phi: &bidisc_core::RationalInnerFunction) -> Result<Vec<BoundaryPoint>, CliError> {
    let found = find_singularities(phi, 64, 1e-10)?;
    Ok(if found.is_empty() { vec![BoundaryPoint::one()] } else { found })
}

#[derive(Serialize)]
struct NtRow {
    coordinate: usize,
    theta1: f64,
    theta2: f64,
    re: f64,
    im: f64,
    modulus: f64,
    rate: Option<f64>,
    extrapolation_gap: f64,
}

#[derive(Serialize)]
struct NtBody {
    tolerance: f64,
    limits: Vec<(usize, NtLimitReport)>,
}

fn nt_limit_experiment(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let symbol = cfg.symbol("knese-pair")?;
    let tolerance = cfg.tolerance.unwrap_or(1e-8);
    let mut limits = Vec::new();
    for k in 0..2 {
        let phi = symbol.coordinate(k);
        let points = match cfg.centers() {
            Some(c) => c,
            None => singular_points(phi)?,
        };
        for p in points {
            limits.push((k + 1, nt_limit(phi, &p, &default_radii(), tolerance)?));
        }
    }
    let rows: Vec<NtRow> = limits
        .iter()
        .map(|(k, r)| NtRow {
            coordinate: *k,
            theta1: r.point.angles[0],
            theta2: r.point.angles[1],
            re: r.value.re,
            im: r.value.im,
            modulus: r.modulus,
            rate: r.rate,
            extrapolation_gap: r.extrapolation_gap,
        })
        .collect();
    let first = &limits[0].1;
    let headline = format!(
        "limit {:.10} {:+.10}i at ({:.6}, {:.6})",
        first.value.re, first.value.im, first.point.angles[0], first.point.angles[1]
    );
    render(cfg.experiment, seed, &NtBody { tolerance, limits }, &rows, headline)
}

#[derive(Serialize)]
struct ZeroSetRow {
    coordinate: usize,
    zeta_angle: f64,
    min_modulus: f64,
}

#[derive(Serialize)]
struct ZeroSetBody {
    margin: f64,
    grid: usize,
    rows: Vec<ZeroSetRow>,
    min_modulus: f64,
    all_positive: bool,
}

fn zero_set(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let symbol = cfg.symbol("knese-pair")?;
    let margin = cfg.margin.unwrap_or(0.1);
    let grid = cfg.grid.unwrap_or(32);
    let count = cfg.zetas.unwrap_or(64).max(1);
    let mut rows = Vec::with_capacity(2 * count);
    for k in 0..2 {
        for j in 0..count {
            let angle = TAU * j as f64 / count as f64;
            let pz = build_pzeta(symbol.coordinate(k), Complex64::from_polar(1.0, angle))?;
            rows.push(ZeroSetRow {
                coordinate: k + 1,
                zeta_angle: angle,
                min_modulus: zero_set_interior_check(&pz, margin, grid)?,
            });
        }
    }
    let min_modulus = rows.iter().map(|r| r.min_modulus).fold(f64::INFINITY, f64::min);
    let headline = format!("min |P_zeta| = {min_modulus:.6} over {} cases", rows.len());
    let body = ZeroSetBody {
        margin,
        grid,
        all_positive: min_modulus > 0.0,
        min_modulus,
        rows,
    };
    render(cfg.experiment, seed, &body, &body.rows, headline)
}

#[derive(Serialize)]
struct LojasiewiczCoordinate {
    coordinate: usize,
    singularity: BoundaryPoint,
    boundary_value: Complex64,
    estimate: LojasiewiczEstimate,
}

#[derive(Serialize)]
struct EnvelopeRow {
    coordinate: usize,
    proximity: f64,
    gap: f64,
}

fn lojasiewicz(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let symbol = cfg.symbol("knese-pair")?;
    let samples = cfg.samples.unwrap_or_else(|| default_samples(cfg.experiment));
    let bins = cfg.bins.unwrap_or(bidisc_core::operator::lojasiewicz::DEFAULT_BINS);
    let designated = cfg.designated();
    let one = BoundaryPoint::one();
    let mut coords = Vec::with_capacity(2);
    for k in 0..2 {
        let (eta, value, aligned) = align_at_one(symbol.coordinate(k), designated[k])?;
        let estimate = match cfg.radius {
            Some(r) => lojasiewicz_fit(&aligned, &one, &Neighborhood::new(one, r)?, samples, bins, seed)?,
            None => stabilized_lojasiewicz(&aligned, &one, samples, bins, seed)?,
        };
        coords.push(LojasiewiczCoordinate {
            coordinate: k + 1,
            singularity: eta,
            boundary_value: value,
            estimate,
        });
    }
    let rows: Vec<EnvelopeRow> = coords
        .iter()
        .flat_map(|c| {
            c.estimate.envelope_points.iter().map(move |&(m, g)| EnvelopeRow {
                coordinate: c.coordinate,
                proximity: m,
                gap: g,
            })
        })
        .collect();
    let headline = format!(
        "q_hat = {:.4}, {:.4}",
        coords[0].estimate.exponent_hat, coords[1].estimate.exponent_hat
    );
    render(cfg.experiment, seed, &coords, &rows, headline)
}

fn ratio_headline(r: &BoundednessReport) -> String {
    format!(
        "sup ratio {:.4e}, growth_flag {}, a = {}, q = {}",
        r.sup_ratio, r.growth_flag, r.a, r.q_used
    )
}

fn certificate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let symbol = cfg.symbol("knese-pair")?;
    let beta = ExperimentConfig::require(cfg.beta, "beta", cfg.experiment)?;
    let mut opts = CertificateOptions::new(
        cfg.scales.clone().unwrap_or_else(|| default_scales(cfg.experiment)),
        cfg.samples.unwrap_or_else(|| default_samples(cfg.experiment)),
        seed,
    );
    opts.q_override = cfg.q;
    opts.aspect = cfg.aspect.unwrap_or(1.0);
    opts.designated = cfg.designated();
    let report = theorem_certificate(&symbol, beta, &opts)?;
    let headline = ratio_headline(&report);
    render(cfg.experiment, seed, &report, &report.records(), headline)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let symbol = cfg.symbol("knese-pair")?;
    let beta = ExperimentConfig::require(cfg.beta, "beta", cfg.experiment)?;
    let a = ExperimentConfig::require(cfg.a, "a", cfg.experiment)?;
    let centers = match cfg.centers() {
        Some(c) => c,
        None => default_centers(&symbol, seed)?,
    };
    let scales = cfg.scales.clone().unwrap_or_else(|| default_scales(cfg.experiment));
    let samples = cfg.samples.unwrap_or_else(|| default_samples(cfg.experiment));
    let report = carleson_sweep(&symbol, beta, a, &centers, &scales, cfg.aspect.unwrap_or(1.0), samples, seed)?;
    let headline = ratio_headline(&report);
    render(cfg.experiment, seed, &report, &report.records(), headline)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densify_reaches_four_points() {
        let (s, inserted) = densify(&[1e-1, 1e-2, 1e-3]);
        assert!(inserted);
        assert_eq!(s.len(), 5);
        assert!((s[1] - 10f64.powf(-1.5)).abs() < 1e-15);
        let (s, inserted) = densify(&[0.1, 0.05, 0.01, 0.001]);
        assert!(!inserted);
        assert_eq!(s.len(), 4);
    }
}
