//! The volume polynomial `λ ↦ Vol_n(Σ λᵢPᵢ)` and its exact coefficients.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, Polytope};
use crate::num::{self, Rat};

/// Homogeneous degree-`n` polynomial in `k` variables with exact nonnegative coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MinkowskiPolynomial {
    n: u32,
    k: usize,
    coeffs: BTreeMap<Vec<u32>, Rat>,
}

/// Every exponent vector of length `k` summing to `n`, in lexicographic order.
pub fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(n: u32, k: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            rec(n - first, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn monomial(lambda: &[Rat], mu: &[u32]) -> Rat {
    lambda.iter().zip(mu).map(|(l, &e)| num::pow_rat(l, e)).product()
}

/// `Vol_n(Σ λᵢ Pᵢ)`, exactly.
pub fn evaluate_volume(polys: &[Polytope], lambda: &[Rat]) -> Result<Rat> {
    if lambda.iter().any(|l| !l.is_positive()) {
        return Err(Error::InvalidInput("λ must be positive".into()));
    }
    geometry::volume(&geometry::minkowski_sum(polys, lambda)?)
}

/// Recover all coefficients by evaluating the volume on the grid `λ = μ + 1`
/// (`|μ| = n`) and solving the resulting square system exactly.
pub fn interpolate_coefficients(polys: &[Polytope]) -> Result<MinkowskiPolynomial> {
    let first = polys.first().ok_or(Error::EmptyPointSet)?;
    let n = first.ambient_dim() as u32;
    let k = polys.len();
    let exps = compositions(n, k);
    let grid: Vec<Vec<Rat>> = exps
        .iter()
        .map(|mu| mu.iter().map(|&m| num::int(m as i64 + 1)).collect())
        .collect();
    let values: Vec<Rat> = grid
        .par_iter()
        .map(|lambda| evaluate_volume(polys, lambda))
        .collect::<Result<_>>()?;
    let matrix: Vec<Vec<Rat>> =
        grid.iter().map(|lambda| exps.iter().map(|mu| monomial(lambda, mu)).collect()).collect();
    let sol = num::solve(&matrix, &values)
        .ok_or_else(|| Error::Numerical("singular interpolation system".into()))?;
    let mut coeffs = BTreeMap::new();
    for (mu, c) in exps.into_iter().zip(sol) {
        if c.is_negative() {
            return Err(Error::Numerical(format!("negative volume coefficient {c} at {mu:?}")));
        }
        if !c.is_zero() {
            coeffs.insert(mu, c);
        }
    }
    Ok(MinkowskiPolynomial { n, k, coeffs })
}

/// The three normalizations of a mixed volume coefficient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Normalization {
    /// `c_α`, the raw coefficient of `λ^α`.
    #[serde(with = "crate::num::rat_str")]
    pub coefficient: Rat,
    /// `α! · c_α`, the mixed partial derivative of the volume polynomial.
    #[serde(with = "crate::num::rat_str")]
    pub derivative_form: Rat,
    /// `c_α / multinomial(n; α)`, the symmetric mixed volume.
    #[serde(with = "crate::num::rat_str")]
    pub standard_mixed_volume: Rat,
}

pub fn convert_normalization(c: &Rat, alpha: &[u32]) -> Normalization {
    let alpha_fact: Rat =
        alpha.iter().map(|&a| Rat::from_integer(num::factorial(a))).product();
    Normalization {
        coefficient: c.clone(),
        derivative_form: c * alpha_fact,
        standard_mixed_volume: c / Rat::from_integer(num::multinomial(alpha)),
    }
}

impl MinkowskiPolynomial {
    /// Build from explicit coefficients; zero entries are dropped.
    pub fn from_coefficients(n: u32, k: usize, coeffs: BTreeMap<Vec<u32>, Rat>) -> Result<Self> {
        for (mu, c) in &coeffs {
            if mu.len() != k || mu.iter().sum::<u32>() != n {
                return Err(Error::InvalidInput(format!("exponent {mu:?} is not of degree {n}")));
            }
            if c.is_negative() {
                return Err(Error::InvalidInput("negative coefficient".into()));
            }
        }
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(MinkowskiPolynomial { n, k, coeffs })
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn num_vars(&self) -> usize {
        self.k
    }

    /// Nonzero terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rat)> {
        self.coeffs.iter()
    }

    fn check_alpha(&self, alpha: &[u32]) -> Result<()> {
        if alpha.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: alpha.len() });
        }
        let s: u32 = alpha.iter().sum();
        if s != self.n {
            return Err(Error::InvalidInput(format!("|α| = {s} but the degree is {}", self.n)));
        }
        Ok(())
    }

    pub fn coefficient(&self, alpha: &[u32]) -> Result<Rat> {
        self.check_alpha(alpha)?;
        Ok(self.coeffs.get(alpha).cloned().unwrap_or_else(Rat::zero))
    }

    pub fn evaluate(&self, lambda: &[Rat]) -> Rat {
        self.coeffs.iter().map(|(mu, c)| c * monomial(lambda, mu)).sum()
    }

    /// `log p(e^y)` via log-sum-exp.
    pub fn log_eval_exp(&self, y: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .map(|(mu, c)| {
                num::to_f64(c).ln() + mu.iter().zip(y).map(|(&m, yi)| m as f64 * yi).sum::<f64>()
            })
            .collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    /// `p(1, …, 1)`, the volume of the plain sum.
    pub fn total(&self) -> Rat {
        self.coeffs.values().sum()
    }

    /// The degree vector `d` used by the Lorentzian coefficient bound: for `i < k`,
    /// the `xᵢ`-degree of `∂_{i+1}^{α_{i+1}}⋯∂_k^{α_k} p` restricted to
    /// `x_{i+1} = ⋯ = x_k = 0`; `d_k = deg_{x_k} p`. Since all coefficients are
    /// nonnegative, the restriction keeps exactly the monomials with `μⱼ = αⱼ`
    /// for `j > i`. A vanishing restriction yields `d_i = α_i`.
    pub fn degrees_d(&self, alpha: &[u32]) -> Result<Vec<u32>> {
        self.check_alpha(alpha)?;
        let k = self.k;
        let mut d = Vec::with_capacity(k);
        for i in 0..k {
            let deg = if i + 1 == k {
                self.coeffs.keys().map(|mu| mu[i]).max()
            } else {
                self.coeffs
                    .keys()
                    .filter(|mu| mu[i + 1..] == alpha[i + 1..])
                    .map(|mu| mu[i])
                    .max()
            };
            d.push(deg.unwrap_or(alpha[i]));
        }
        Ok(d)
    }

    /// Serializable view of the coefficient map.
    pub fn coefficient_table(&self) -> Vec<CoefficientEntry> {
        self.coeffs
            .iter()
            .map(|(mu, c)| CoefficientEntry { exponent: mu.clone(), coefficient: c.clone() })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientEntry {
    pub exponent: Vec<u32>,
    #[serde(with = "crate::num::rat_str")]
    pub coefficient: Rat,
}

/// `dᵢ ≤ dim(Pᵢ)`, a structural property of volume polynomials.
pub fn check_degree_bounds(d: &[u32], polys: &[Polytope]) -> Result<()> {
    for (i, (di, p)) in d.iter().zip(polys).enumerate() {
        if *di as usize > p.dim() {
            return Err(Error::Inconsistency(format!(
                "d_{} = {di} exceeds dim(P_{}) = {}",
                i + 1,
                i + 1,
                p.dim()
            )));
        }
    }
    Ok(())
}

impl Default for MinkowskiPolynomial {
    fn default() -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![0], Rat::one());
        MinkowskiPolynomial { n: 0, k: 1, coeffs }
    }
}
