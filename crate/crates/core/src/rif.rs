//! Rational inner functions `z1^N z2^M p~/p` and pairs of them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::BiPolynomial;
use crate::stability::stability_check;
use crate::torus::BoundaryPoint;

/// Default evaluation guard on `|p(z)|`.
pub const DEFAULT_GUARD: f64 = 1e-13;

/// `|p(tau)|` below this (relative to the largest coefficient) marks `tau`
/// as a zero of the denominator on the torus.
pub const SINGULAR_TOLERANCE: f64 = 1e-8;

const CONSTRUCTION_MARGIN: f64 = 0.025;
const CONSTRUCTION_GRID: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalInnerFunction {
    monomial_powers: (u32, u32),
    numerator: BiPolynomial,
    denominator: BiPolynomial,
}

impl RationalInnerFunction {
    /// Builds `z1^N z2^M reflect(p)/p`, checking stability of `p` on the
    /// shrunken bidisc.
    pub fn new(monomial_powers: (u32, u32), denominator: BiPolynomial) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        stability_check(&denominator, CONSTRUCTION_GRID, CONSTRUCTION_MARGIN)?;
        Ok(Self {
            monomial_powers,
            numerator: denominator.reflect(),
            denominator,
        })
    }

    /// Like [`RationalInnerFunction::new`] but also checks a supplied numerator
    /// against the reflection of the denominator.
    pub fn from_parts(
        monomial_powers: (u32, u32),
        numerator: BiPolynomial,
        denominator: BiPolynomial,
    ) -> Result<Self> {
        let reflected = denominator.reflect();
        let scale = denominator
            .coeffs()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let gap = numerator.max_coeff_distance(&reflected);
        if gap > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "numerator differs from the reflected denominator by {gap:e}"
            )));
        }
        Self::new(monomial_powers, denominator)
    }

    pub fn monomial_powers(&self) -> (u32, u32) {
        self.monomial_powers
    }

    pub fn numerator(&self) -> &BiPolynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &BiPolynomial {
        &self.denominator
    }

    /// `z1^N z2^M p~` as a single polynomial.
    pub fn full_numerator(&self) -> BiPolynomial {
        let (nn, mm) = (self.monomial_powers.0 as usize, self.monomial_powers.1 as usize);
        if nn == 0 && mm == 0 {
            return self.numerator.clone();
        }
        let (n, m) = self.numerator.bidegree();
        let mut terms = Vec::with_capacity((n + 1) * (m + 1));
        for i in 0..=n {
            for j in 0..=m {
                terms.push((i + nn, j + mm, self.numerator.coeff(i, j)));
            }
        }
        BiPolynomial::from_terms(&terms)
    }

    #[inline]
    fn monomial(&self, z1: Complex64, z2: Complex64) -> Complex64 {
        let (n, m) = self.monomial_powers;
        z1.powu(n) * z2.powu(m)
    }

    /// Evaluates the function, refusing points where `|p(z)| < guard`.
    #[inline]
    pub fn eval(&self, z1: Complex64, z2: Complex64, guard: f64) -> Result<Complex64> {
        let den = self.denominator.eval(z1, z2);
        let modulus = den.norm();
        if modulus < guard {
            return Err(Error::DenominatorTooSmall { modulus, guard });
        }
        Ok(self.monomial(z1, z2) * self.numerator.eval(z1, z2) / den)
    }

    pub fn eval_default(&self, z1: Complex64, z2: Complex64) -> Result<Complex64> {
        self.eval(z1, z2, DEFAULT_GUARD)
    }

    /// `|p(tau)|` relative to the coefficient scale.
    pub fn denominator_defect(&self, tau: &BoundaryPoint) -> f64 {
        let [z1, z2] = tau.coords();
        let scale = self
            .denominator
            .coeffs()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        self.denominator.eval(z1, z2).norm() / scale
    }

    pub fn is_singular_at(&self, tau: &BoundaryPoint) -> bool {
        self.denominator_defect(tau) < SINGULAR_TOLERANCE
    }

    /// Whether the denominator is constant (no torus singularities possible).
    pub fn is_monomial(&self) -> bool {
        self.denominator.trim().bidegree() == (0, 0)
    }

    /// `P_zeta = z^{N,M} p~ - zeta p`.
    pub fn pzeta(&self, zeta: Complex64) -> Result<BiPolynomial> {
        build_pzeta(self, zeta)
    }

    /// `lambda * phi(mu1 z1, mu2 z2)` with `mu_i = source_i / target_i`,
    /// without checking that `source` is singular.
    pub fn rotated(&self, source: &BoundaryPoint, target: &BoundaryPoint, value_rotation: Complex64) -> Result<Self> {
        check_unimodular(value_rotation)?;
        let s = source.coords();
        let t = target.coords();
        let mu1 = s[0] / t[0];
        let mu2 = s[1] / t[1];
        let (n, m) = self.denominator.bidegree();
        let (nn, mm) = self.monomial_powers;
        // The phase lambda mu1^(N+n) mu2^(M+m) is absorbed into the
        // denominator normalisation: reflect(c q)/(c q) = conj(c)^2 reflect(q)/q.
        let phase = value_rotation * mu1.powu(nn + n as u32) * mu2.powu(mm + m as u32);
        let c = phase.sqrt().conj();
        Self::new(self.monomial_powers, self.denominator.rescale(c, mu1, mu2))
    }
}

fn check_unimodular(zeta: Complex64) -> Result<()> {
    let modulus = zeta.norm();
    if (modulus - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnimodularTarget { modulus });
    }
    Ok(())
}

/// Coefficient-wise `z^{N,M} p~ - zeta p` for unimodular `zeta`.
pub fn build_pzeta(phi: &RationalInnerFunction, zeta: Complex64) -> Result<BiPolynomial> {
    check_unimodular(zeta)?;
    Ok(phi.full_numerator().sub_scaled(&phi.denominator, zeta))
}

/// Rotates `phi` so that the singularity at `source` moves to `target` and
/// the values are multiplied by `value_rotation`.
pub fn rotate_symbol(
    phi: &RationalInnerFunction,
    source: &BoundaryPoint,
    target: &BoundaryPoint,
    value_rotation: Complex64,
) -> Result<RationalInnerFunction> {
    let defect = phi.denominator_defect(source);
    if defect >= SINGULAR_TOLERANCE {
        return Err(Error::SourceNotSingular { modulus: defect });
    }
    phi.rotated(source, target, value_rotation)
}

#[derive(Serialize, Deserialize)]
struct RifJson {
    bidegree: [usize; 2],
    coeffs: Vec<[f64; 2]>,
    monomial_powers: [u32; 2],
}

impl Serialize for RationalInnerFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (n, m) = self.denominator.bidegree();
        RifJson {
            bidegree: [n, m],
            coeffs: self.denominator.coeffs().iter().map(|c| [c.re, c.im]).collect(),
            monomial_powers: [self.monomial_powers.0, self.monomial_powers.1],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RationalInnerFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RifJson::deserialize(deserializer)?;
        let coeffs = raw.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        let p = BiPolynomial::new(raw.bidegree[0], raw.bidegree[1], coeffs).map_err(serde::de::Error::custom)?;
        RationalInnerFunction::new((raw.monomial_powers[0], raw.monomial_powers[1]), p)
            .map_err(serde::de::Error::custom)
    }
}

/// `Phi = (phi, psi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolPairJson")]
pub struct SymbolPair {
    pub first: RationalInnerFunction,
    pub second: RationalInnerFunction,
}

#[derive(Deserialize)]
struct SymbolPairJson {
    first: RationalInnerFunction,
    second: RationalInnerFunction,
}

impl TryFrom<SymbolPairJson> for SymbolPair {
    type Error = Error;
    fn try_from(raw: SymbolPairJson) -> Result<Self> {
        SymbolPair::new(raw.first, raw.second)
    }
}

impl SymbolPair {
    /// Pairs two functions after checking both stay inside the disc on a
    /// fixed interior sample.
    pub fn new(first: RationalInnerFunction, second: RationalInnerFunction) -> Result<Self> {
        let pair = Self { first, second };
        for k in 0..256u32 {
            // Deterministic low-discrepancy interior points.
            let f = |a: f64| (k as f64 * a).fract();
            let z1 = Complex64::from_polar(0.999 * f(0.618_033_988_75).sqrt(), std::f64::consts::TAU * f(0.414_213_562_37));
            let z2 = Complex64::from_polar(0.999 * f(0.732_050_807_57).sqrt(), std::f64::consts::TAU * f(0.236_067_977_5));
            let w = pair.eval(z1, z2, DEFAULT_GUARD)?;
            if w[0].norm() >= 1.0 || w[1].norm() >= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "symbol leaves the open disc at ({z1}, {z2})"
                )));
            }
        }
        Ok(pair)
    }

    #[inline]
    pub fn eval(&self, z1: Complex64, z2: Complex64, guard: f64) -> Result<[Complex64; 2]> {
        Ok([self.first.eval(z1, z2, guard)?, self.second.eval(z1, z2, guard)?])
    }

    pub fn coordinate(&self, k: usize) -> &RationalInnerFunction {
        if k == 0 {
            &self.first
        } else {
            &self.second
        }
    }
}

/// Named constructors for the functions used throughout the experiments.
pub mod zoo {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `2 - a z1 - b z2`.
    pub fn two_minus(a: Complex64, b: Complex64) -> BiPolynomial {
        BiPolynomial::from_terms(&[(0, 0, c(2.0, 0.0)), (1, 0, -a), (0, 1, -b)])
    }

    /// `(2 z1 z2 - z1 - z2) / (2 - z1 - z2)`, singular at `(1, 1)`.
    pub fn knese() -> RationalInnerFunction {
        RationalInnerFunction::new((0, 0), two_minus(c(1.0, 0.0), c(1.0, 0.0)))
            .expect("Knese denominator is stable")
    }

    /// `(2 z1 z2 - conj(B) z1 - conj(A) z2) / (2 - A z1 - B z2)` with
    /// `A = e^{i a_angle}`, `B = e^{i b_angle}`, both different from 1.
    ///
    /// The side condition `|A| + |B| = 2` holds automatically for unimodular
    /// parameters.
    pub fn phi_ab(a_angle: f64, b_angle: f64) -> Result<RationalInnerFunction> {
        for (name, angle) in [("A", a_angle), ("B", b_angle)] {
            if !angle.is_finite() {
                return Err(Error::InvalidInput(format!("{name} angle is not finite")));
            }
            if crate::torus::angle_diff(angle, 0.0).abs() < 1e-12 {
                return Err(Error::InvalidInput(format!("{name} must differ from 1")));
            }
        }
        RationalInnerFunction::new(
            (0, 0),
            two_minus(Complex64::from_polar(1.0, a_angle), Complex64::from_polar(1.0, b_angle)),
        )
    }

    /// The singularity `(conj A, conj B)` of [`phi_ab`].
    pub fn phi_ab_singularity(a_angle: f64, b_angle: f64) -> BoundaryPoint {
        BoundaryPoint::new(-a_angle, -b_angle)
    }

    /// The coordinate function `z1` (`k = 0`) or `z2` (`k = 1`).
    pub fn coordinate(k: usize) -> RationalInnerFunction {
        let powers = if k == 0 { (1, 0) } else { (0, 1) };
        RationalInnerFunction::new(powers, BiPolynomial::constant(c(1.0, 0.0))).expect("constant is stable")
    }

    pub fn knese_pair() -> SymbolPair {
        SymbolPair::new(knese(), knese()).expect("Knese maps into the disc")
    }

    pub fn phi_ab_pair(a_angle: f64, b_angle: f64) -> Result<SymbolPair> {
        SymbolPair::new(knese(), phi_ab(a_angle, b_angle)?)
    }

    pub fn identity_pair() -> SymbolPair {
        SymbolPair::new(coordinate(0), coordinate(1)).expect("identity maps into the disc")
    }
}
