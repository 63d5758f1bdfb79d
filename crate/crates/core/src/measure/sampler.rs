//! Importance sampling for weighted volumes on the bidisc.
//!
//! Each disc is parameterised by `u = 1 - |z|^2` and the angle `theta`, in
//! which the weighted area element is `(1/2) u^beta du dtheta`. A proposal is
//! a finite mixture of product components; each factor draws `u` on
//! `(0, u_max]` with density proportional to `u^exponent` (exact inverse CDF)
//! and `theta` uniformly on an arc. With a single full-disc component and
//! `exponent = beta` every draw carries the same weight `(pi/(beta+1))^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{SampleStream, CHUNK_SIZE};
use crate::error::{Error, Result};
use crate::torus::angle_diff;

/// A point of the bidisc together with its exact boundary proximities.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub z: [Complex64; 2],
    /// `1 - |z_i|^2`, kept exactly as drawn.
    pub u: [f64; 2],
}

/// One-disc proposal factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscFactor {
    pub u_max: f64,
    pub exponent: f64,
    pub theta_center: f64,
    pub theta_half_width: f64,
}

impl DiscFactor {
    pub fn full(exponent: f64) -> Self {
        Self {
            u_max: 1.0,
            exponent,
            theta_center: 0.0,
            theta_half_width: PI,
        }
    }

    /// Bounding region of `{z in D : |z - e^{i theta}| < radius}`.
    pub fn around(theta: f64, radius: f64, exponent: f64) -> Self {
        if radius >= 1.0 {
            return Self {
                theta_center: theta,
                ..Self::full(exponent)
            };
        }
        Self {
            u_max: radius * (2.0 - radius),
            exponent,
            theta_center: theta,
            theta_half_width: radius.asin(),
        }
    }

    /// Same arc, `u` restricted to `(0, min(u_max, layer)]`.
    pub fn layer(&self, layer: f64) -> Self {
        Self {
            u_max: self.u_max.min(layer),
            ..*self
        }
    }

    #[inline]
    fn draw(&self, stream: &mut SampleStream) -> (f64, f64) {
        let t = stream.uniform_open0();
        let u = self.u_max * t.powf(1.0 / (self.exponent + 1.0));
        let theta = self.theta_center + self.theta_half_width * (2.0 * stream.uniform() - 1.0);
        (u, theta)
    }

    /// Proposal density divided by the target density `(1/2) u^beta`.
    #[inline]
    fn relative_density(&self, u: f64, theta: f64, beta: f64) -> f64 {
        if u > self.u_max {
            return 0.0;
        }
        if self.theta_half_width < PI && angle_diff(theta, self.theta_center).abs() > self.theta_half_width {
            return 0.0;
        }
        let g = self.exponent + 1.0;
        // [(g u^{g-1} / u_max^g) / (2 Theta)] / [(1/2) u^beta]
        g * u.powf(self.exponent - beta) / (self.u_max.powf(g) * self.theta_half_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    components: Vec<(f64, [DiscFactor; 2])>,
}

impl Proposal {
    pub fn product(first: DiscFactor, second: DiscFactor) -> Self {
        Self {
            components: vec![(1.0, [first, second])],
        }
    }

    /// Weight-proportional draws over the whole bidisc.
    pub fn full(beta: f64) -> Self {
        Self::product(DiscFactor::full(beta), DiscFactor::full(beta))
    }

    /// Mixture with the given (unnormalised) component weights.
    pub fn mixture(components: Vec<(f64, [DiscFactor; 2])>) -> Result<Self> {
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.is_empty() || !(total > 0.0) || components.iter().any(|c| c.0 < 0.0) {
            return Err(Error::InvalidInput("mixture weights must be non-negative with positive sum".into()));
        }
        Ok(Self {
            components: components.into_iter().map(|(w, f)| (w / total, f)).collect(),
        })
    }

    pub fn components(&self) -> &[(f64, [DiscFactor; 2])] {
        &self.components
    }

    fn validate(&self, beta: f64) -> Result<()> {
        for (_, factors) in &self.components {
            for f in factors {
                if !(f.exponent > -1.0) || !(f.u_max > 0.0 && f.u_max <= 1.0) || !(f.theta_half_width > 0.0) {
                    return Err(Error::InvalidInput(format!("invalid proposal factor {f:?}")));
                }
            }
        }
        if !(beta > -1.0) {
            return Err(Error::UnsupportedWeight { beta });
        }
        Ok(())
    }

    #[inline]
    fn draw(&self, stream: &mut SampleStream, beta: f64) -> (Sample, f64) {
        let factors = if self.components.len() == 1 {
            &self.components[0].1
        } else {
            let pick = stream.uniform();
            let mut acc = 0.0;
            let mut chosen = &self.components[self.components.len() - 1].1;
            for (w, f) in &self.components {
                acc += w;
                if pick < acc {
                    chosen = f;
                    break;
                }
            }
            chosen
        };
        let (u1, t1) = factors[0].draw(stream);
        let (u2, t2) = factors[1].draw(stream);
        let mixture: f64 = self
            .components
            .iter()
            .map(|(w, f)| w * f[0].relative_density(u1, t1, beta) * f[1].relative_density(u2, t2, beta))
            .sum();
        let sample = Sample {
            z: [
                Complex64::from_polar((1.0 - u1).sqrt(), t1),
                Complex64::from_polar((1.0 - u2).sqrt(), t2),
            ],
            u: [u1, u2],
        };
        (sample, 1.0 / mixture)
    }
}

/// Running mean and centred second moment.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + d * b.n / n,
            m2: a.m2 + b.m2 + d * d * a.n * b.n / n,
        }
    }
}

/// Pairwise merge in index order.
fn merge_ordered(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::default(),
        1 => parts[0],
        n => {
            let (l, r) = parts.split_at(n / 2);
            Moments::merge(merge_ordered(l), merge_ordered(r))
        }
    }
}

/// Mean and standard error of `f(sample) * weight` over `samples` draws.
///
/// When every term vanishes the standard error is reported as the mean draw
/// weight over `samples`, the contribution a single hit would have made.
pub(crate) fn estimate<F>(proposal: &Proposal, beta: f64, samples: usize, seed: u64, f: F) -> Result<(f64, f64)>
where
    F: Fn(&Sample) -> f64 + Sync,
{
    proposal.validate(beta)?;
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let parts: Vec<(Moments, Moments)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut stream = SampleStream::new(seed, chunk as u64);
            let len = CHUNK_SIZE.min(samples - chunk * CHUNK_SIZE);
            let mut m = Moments::default();
            let mut weights = Moments::default();
            for _ in 0..len {
                let (s, w) = proposal.draw(&mut stream, beta);
                let v = f(&s);
                m.push(if v == 0.0 { 0.0 } else { v * w });
                weights.push(w);
            }
            (m, weights)
        })
        .collect();
    let (terms, weights): (Vec<Moments>, Vec<Moments>) = parts.into_iter().unzip();
    let total = merge_ordered(&terms);
    if total.mean == 0.0 && total.m2 == 0.0 {
        return Ok((0.0, merge_ordered(&weights).mean / total.n));
    }
    let variance = total.m2 / (total.n - 1.0);
    Ok((total.mean, (variance / total.n).sqrt()))
}
