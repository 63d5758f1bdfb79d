//! Dense bivariate polynomials with complex coefficients.
//!
//! Coefficients live on an `(n+1) x (m+1)` grid, row-major with the `z1`
//! power as the row index. The grid is the bidegree: reflection keeps the
//! grid even when a leading row or column becomes zero, and [`BiPolynomial::trim`]
//! recovers the tight bidegree when needed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BiPolynomial {
    degree: (usize, usize),
    coeffs: Vec<Complex64>,
}

impl BiPolynomial {
    /// Builds a polynomial from a row-major coefficient grid.
    pub fn new(n: usize, m: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = (n + 1) * (m + 1);
        if coeffs.len() != expected {
            return Err(Error::InvalidInput(format!(
                "bidegree ({n},{m}) needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self {
            degree: (n, m),
            coeffs,
        })
    }

    pub fn constant(c: Complex64) -> Self {
        Self {
            degree: (0, 0),
            coeffs: vec![c],
        }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            degree: (n, m),
            coeffs: vec![Complex64::new(0.0, 0.0); (n + 1) * (m + 1)],
        }
    }

    /// Builds from `(i, j, coefficient)` terms; the grid is the smallest one
    /// holding every listed term.
    pub fn from_terms(terms: &[(usize, usize, Complex64)]) -> Self {
        let n = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let m = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut p = Self::zeros(n, m);
        for &(i, j, c) in terms {
            *p.coeff_mut(i, j) += c;
        }
        p
    }

    pub fn bidegree(&self) -> (usize, usize) {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        let (n, m) = self.degree;
        if i > n || j > m {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[i * (m + 1) + j]
    }

    fn coeff_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        let m = self.degree.1;
        &mut self.coeffs[i * (m + 1) + j]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// Whether row `n` and column `m` both carry a nonzero coefficient.
    pub fn is_tight(&self) -> bool {
        let (n, m) = self.degree;
        if n == 0 && m == 0 {
            return true;
        }
        let row = (0..=m).any(|j| self.coeff(n, j).norm_sqr() > 0.0);
        let col = (0..=n).any(|i| self.coeff(i, m).norm_sqr() > 0.0);
        row && col
    }

    /// Drops vanishing leading rows and columns.
    pub fn trim(&self) -> Self {
        let (n, m) = self.degree;
        let nonzero = |i: usize, j: usize| self.coeff(i, j).norm_sqr() > 0.0;
        let tn = (0..=n)
            .rev()
            .find(|&i| (0..=m).any(|j| nonzero(i, j)))
            .unwrap_or(0);
        let tm = (0..=m)
            .rev()
            .find(|&j| (0..=n).any(|i| nonzero(i, j)))
            .unwrap_or(0);
        let mut out = Self::zeros(tn, tm);
        for i in 0..=tn {
            for j in 0..=tm {
                *out.coeff_mut(i, j) = self.coeff(i, j);
            }
        }
        out
    }

    /// `z1^n z2^m conj(p(1/conj z1, 1/conj z2))` on the same grid.
    pub fn reflect(&self) -> Self {
        let (n, m) = self.degree;
        let mut out = Self::zeros(n, m);
        for i in 0..=n {
            for j in 0..=m {
                *out.coeff_mut(i, j) = self.coeff(n - i, m - j).conj();
            }
        }
        out
    }

    /// Double Horner evaluation.
    pub fn eval(&self, z1: Complex64, z2: Complex64) -> Complex64 {
        let (n, m) = self.degree;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in (0..=n).rev() {
            let row = &self.coeffs[i * (m + 1)..(i + 1) * (m + 1)];
            let inner = row
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |s, &c| s * z2 + c);
            acc = acc * z1 + inner;
        }
        acc
    }

    /// Value together with both complex partial derivatives.
    pub fn eval_with_gradient(&self, z1: Complex64, z2: Complex64) -> (Complex64, Complex64, Complex64) {
        let (n, m) = self.degree;
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut dp1, mut dp2) = (zero, zero, zero);
        for i in (0..=n).rev() {
            let row = &self.coeffs[i * (m + 1)..(i + 1) * (m + 1)];
            let (mut v, mut dv) = (zero, zero);
            for &c in row.iter().rev() {
                dv = dv * z2 + v;
                v = v * z2 + c;
            }
            dp1 = dp1 * z1 + p;
            p = p * z1 + v;
            dp2 = dp2 * z1 + dv;
        }
        (p, dp1, dp2)
    }

    /// Coefficient-wise `self - scale * other`, on the union grid.
    pub fn sub_scaled(&self, other: &Self, scale: Complex64) -> Self {
        let n = self.degree.0.max(other.degree.0);
        let m = self.degree.1.max(other.degree.1);
        let mut out = Self::zeros(n, m);
        for i in 0..=n {
            for j in 0..=m {
                *out.coeff_mut(i, j) = self.coeff(i, j) - scale * other.coeff(i, j);
            }
        }
        out
    }

    /// Coefficients of `c * p(mu1 z1, mu2 z2)`.
    pub fn rescale(&self, c: Complex64, mu1: Complex64, mu2: Complex64) -> Self {
        let (n, m) = self.degree;
        let mut out = Self::zeros(n, m);
        let mut pow1 = c;
        for i in 0..=n {
            let mut pow2 = pow1;
            for j in 0..=m {
                *out.coeff_mut(i, j) = self.coeff(i, j) * pow2;
                pow2 *= mu2;
            }
            pow1 *= mu1;
        }
        out
    }

    /// Largest coefficient-wise distance to `other` over the union grid.
    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let n = self.degree.0.max(other.degree.0);
        let m = self.degree.1.max(other.degree.1);
        let mut worst = 0.0f64;
        for i in 0..=n {
            for j in 0..=m {
                worst = worst.max((self.coeff(i, j) - other.coeff(i, j)).norm());
            }
        }
        worst
    }

    /// Human-readable form such as `2z1z2 - z1 - z2`.
    pub fn to_text(&self) -> String {
        let (n, m) = self.degree;
        let mut terms: Vec<String> = Vec::new();
        for i in (0..=n).rev() {
            for j in (0..=m).rev() {
                let c = self.coeff(i, j);
                if c.norm() < 1e-14 {
                    continue;
                }
                let monomial = monomial_text(i, j);
                let (negative, body) = coefficient_text(c, monomial.is_empty());
                let term = format!("{body}{monomial}");
                if terms.is_empty() {
                    terms.push(if negative { format!("-{term}") } else { term });
                } else {
                    terms.push(format!("{} {term}", if negative { "-" } else { "+" }));
                }
            }
        }
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" ")
        }
    }
}

fn monomial_text(i: usize, j: usize) -> String {
    let var = |name: &str, k: usize| match k {
        0 => String::new(),
        1 => name.to_string(),
        _ => format!("{name}^{k}"),
    };
    format!("{}{}", var("z1", i), var("z2", j))
}

fn format_real(x: f64) -> String {
    if (x - x.round()).abs() < 1e-12 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x}")
    }
}

fn coefficient_text(c: Complex64, bare: bool) -> (bool, String) {
    if c.im.abs() < 1e-14 {
        let negative = c.re < 0.0;
        let mag = c.re.abs();
        let body = if !bare && (mag - 1.0).abs() < 1e-14 {
            String::new()
        } else {
            format_real(mag)
        };
        (negative, body)
    } else {
        (false, format!("({}{:+}i)", format_real(c.re), c.im))
    }
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    bidegree: [usize; 2],
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for BiPolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            bidegree: [self.degree.0, self.degree.1],
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BiPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyJson::deserialize(deserializer)?;
        let coeffs = raw.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        BiPolynomial::new(raw.bidegree[0], raw.bidegree[1], coeffs).map_err(serde::de::Error::custom)
    }
}
