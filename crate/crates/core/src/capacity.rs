//! Capacity of the volume polynomial, integer scaling vectors, and the
//! coefficient-bound constants.
//!
//! `Cap_α(p) = inf_{x>0} p(x)/x^α` is computed in log coordinates, where
//! `g(y) = log p(e^y) − ⟨α, y⟩` is convex. Homogeneity pins `y_k = 0`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, RationalPoint};
use crate::minkpoly::MinkowskiPolynomial;
use crate::num::{self, Rat};

const MAX_ITERATIONS: usize = 200_000;

/// Outcome of the capacity minimization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityResult {
    /// Minimizer in log coordinates, with the last entry pinned to 0.
    pub y_star: Vec<f64>,
    /// `e^{y*}`.
    pub lambda_real: Vec<f64>,
    /// `p(e^{y*}) / e^{⟨α, y*⟩}`, an upper bound on the capacity.
    pub cap_value: f64,
    /// Upper bound on `log cap_value − log Cap_α` over the search box.
    pub certified_gap: f64,
    /// Half-width of the search box `‖y‖_∞ ≤ radius`.
    pub box_radius: f64,
    /// Whether the minimizer touches the search box.
    pub hit_box: bool,
    /// `α` lies outside the Newton polytope, so the capacity is exactly zero.
    pub exactly_zero: bool,
    pub iterations: usize,
    /// `g` at every accepted iterate; nonincreasing up to rounding.
    #[serde(skip)]
    pub trajectory: Vec<f64>,
}

/// Search box half-width `64·n²·(log₂ n + n·L + log₂ m₀ + 1)`.
pub fn search_box(n: usize, l: u32, m0: usize) -> f64 {
    let n_f = n.max(1) as f64;
    64.0 * n_f * n_f * (n_f.log2() + n_f * l as f64 + (m0.max(1) as f64).log2() + 1.0)
}

struct Objective<'a> {
    terms: Vec<(Vec<f64>, f64)>,
    alpha: &'a [u32],
}

impl Objective<'_> {
    fn value_grad(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let k = y.len();
        let exps: Vec<f64> = self
            .terms
            .iter()
            .map(|(mu, lc)| lc + mu.iter().zip(y).map(|(m, yi)| m * yi).sum::<f64>())
            .collect();
        let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = exps.iter().map(|e| (e - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut grad = vec![0.0; k];
        for ((mu, _), w) in self.terms.iter().zip(&weights) {
            for (g, m) in grad.iter_mut().zip(mu) {
                *g += m * w;
            }
        }
        let lin: f64 = self.alpha.iter().zip(y).map(|(&a, yi)| a as f64 * yi).sum();
        for (g, &a) in grad.iter_mut().zip(self.alpha) {
            *g = *g / total - a as f64;
        }
        (max + total.ln() - lin, grad)
    }

    /// Hessian of `g`: the covariance of `μ` under the softmax weights.
    fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let k = y.len();
        let exps: Vec<f64> = self
            .terms
            .iter()
            .map(|(mu, lc)| lc + mu.iter().zip(y).map(|(m, yi)| m * yi).sum::<f64>())
            .collect();
        let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = exps.iter().map(|e| (e - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mean: Vec<f64> = (0..k)
            .map(|i| self.terms.iter().zip(&weights).map(|((mu, _), w)| mu[i] * w).sum::<f64>() / total)
            .collect();
        let mut h = vec![vec![0.0; k]; k];
        for ((mu, _), w) in self.terms.iter().zip(&weights) {
            for i in 0..k {
                for j in 0..k {
                    h[i][j] += w / total * (mu[i] - mean[i]) * (mu[j] - mean[j]);
                }
            }
        }
        h
    }
}

/// Solve `m x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for cc in c..n {
                m[r][cc] -= f * m[c][cc];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}

fn alpha_in_newton_polytope(p: &MinkowskiPolynomial, alpha: &[u32]) -> Result<bool> {
    let support: Vec<RationalPoint> = p
        .terms()
        .map(|(mu, _)| RationalPoint::new(mu.iter().map(|&m| num::int(m as i64)).collect()))
        .collect();
    if support.is_empty() {
        return Ok(false);
    }
    let a = RationalPoint::new(alpha.iter().map(|&m| num::int(m as i64)).collect());
    geometry::in_hull(&support, &a)
}

/// Minimize `g` over the box `‖y‖_∞ ≤ box_radius` (with `y_k = 0`) by safeguarded
/// Newton steps with a projected-gradient fallback, both with backtracking. Stops once the Frank–Wolfe gap
/// over the box, plus a floating-point allowance, is at most `tol`.
pub fn capacity_minimize(
    p: &MinkowskiPolynomial,
    alpha: &[u32],
    tol: f64,
    box_radius: f64,
) -> Result<CapacityResult> {
    if !(tol > 0.0) || !(box_radius > 0.0) {
        return Err(Error::InvalidInput("tolerance and box radius must be positive".into()));
    }
    p.coefficient(alpha)?;
    let k = p.num_vars();
    if !alpha_in_newton_polytope(p, alpha)? {
        return Ok(CapacityResult {
            y_star: vec![0.0; k],
            lambda_real: vec![1.0; k],
            cap_value: 0.0,
            certified_gap: 0.0,
            box_radius,
            hit_box: false,
            exactly_zero: true,
            iterations: 0,
            trajectory: Vec::new(),
        });
    }
    let obj = Objective {
        terms: p
            .terms()
            .map(|(mu, c)| (mu.iter().map(|&m| m as f64).collect(), num::to_f64(c).ln()))
            .collect(),
        alpha,
    };
    let free = k - 1;
    let project = |y: &mut [f64]| {
        for v in y[..free].iter_mut() {
            *v = v.clamp(-box_radius, box_radius);
        }
        y[free] = 0.0;
    };
    let fw_gap = |y: &[f64], grad: &[f64]| -> f64 {
        (0..free).map(|i| grad[i] * y[i] + box_radius * grad[i].abs()).sum::<f64>().max(0.0)
    };

    let mut y = vec![0.0; k];
    let (mut val, mut grad) = obj.value_grad(&y);
    let mut trajectory = vec![val];
    let mut step = 1.0;
    let mut iterations = 0;
    loop {
        let allowance = 1e-12 * (1.0 + val.abs()) + 1e-13 * box_radius;
        let gap = fw_gap(&y, &grad) + allowance;
        if gap <= tol || free == 0 {
            let hit_box = y[..free].iter().any(|v| v.abs() >= box_radius);
            let cap_value = val.exp();
            return Ok(CapacityResult {
                lambda_real: y.iter().map(|v| v.exp()).collect(),
                y_star: y,
                cap_value,
                certified_gap: if free == 0 { allowance } else { gap },
                box_radius,
                hit_box,
                exactly_zero: false,
                iterations,
                trajectory,
            });
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations, gap, best_y: y, best_value: val });
        }
        iterations += 1;
        if let Some((cand, v, g)) = newton_step(&obj, &y, val, &grad, free, box_radius) {
            y = cand;
            val = v;
            grad = g;
            trajectory.push(val);
            continue;
        }
        step *= 4.0;
        loop {
            let mut cand: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            project(&mut cand);
            let d: Vec<f64> = cand.iter().zip(&y).map(|(c, a)| c - a).collect();
            let decrease: f64 = grad.iter().zip(&d).map(|(g, di)| g * di).sum();
            if d.iter().all(|x| *x == 0.0) {
                return Err(Error::NoConvergence { iterations, gap, best_y: y, best_value: val });
            }
            let (v, g) = obj.value_grad(&cand);
            if v <= val + 1e-4 * decrease && v < val {
                y = cand;
                val = v;
                grad = g;
                trajectory.push(val);
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::NoConvergence { iterations, gap, best_y: y, best_value: val });
            }
        }
    }
}

/// A Newton step on the coordinates not held at the box by the gradient.
/// Accepted on sufficient decrease, or, once `g` is flat to working precision,
/// when it halves the gradient without raising `g` beyond rounding level.
fn newton_step(
    obj: &Objective<'_>,
    y: &[f64],
    val: f64,
    grad: &[f64],
    free: usize,
    box_radius: f64,
) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let active: Vec<usize> = (0..free)
        .filter(|&i| {
            !((y[i] <= -box_radius && grad[i] > 0.0) || (y[i] >= box_radius && grad[i] < 0.0))
        })
        .collect();
    if active.is_empty() {
        return None;
    }
    let h = obj.hessian(y);
    let trace: f64 = active.iter().map(|&i| h[i][i]).sum();
    let m: Vec<Vec<f64>> = active
        .iter()
        .map(|&i| {
            active.iter().map(|&j| h[i][j] + if i == j { 1e-14 * trace } else { 0.0 }).collect()
        })
        .collect();
    let rhs: Vec<f64> = active.iter().map(|&i| -grad[i]).collect();
    let d = solve_dense(m, rhs)?;
    let grad_norm = |g: &[f64]| active.iter().map(|&i| g[i].abs()).sum::<f64>();
    let mut t = 1.0;
    for _ in 0..30 {
        let mut cand = y.to_vec();
        for (&i, di) in active.iter().zip(&d) {
            cand[i] = (y[i] + t * di).clamp(-box_radius, box_radius);
        }
        let decrease: f64 = (0..free).map(|i| grad[i] * (cand[i] - y[i])).sum();
        let (v, g) = obj.value_grad(&cand);
        let sufficient = v < val && v <= val + 1e-4 * decrease;
        let flat = v - val <= 4.0 * f64::EPSILON * (1.0 + val.abs())
            && grad_norm(&g) <= 0.5 * grad_norm(grad);
        if sufficient || flat {
            return Some((cand, v, g));
        }
        t *= 0.5;
    }
    None
}

/// `λᵢ = round(2^{scale_bits} · e^{y*ᵢ − min_j y*ⱼ})`, computed without overflow.
pub fn integer_lambda(result: &CapacityResult, scale_bits: u32) -> Vec<BigInt> {
    let min = result.y_star.iter().cloned().fold(f64::INFINITY, f64::min);
    result
        .y_star
        .iter()
        .map(|&yi| {
            let bits = (yi - min) / std::f64::consts::LN_2;
            let whole = bits.floor();
            let frac = bits - whole;
            // 2^{frac} in [1, 2) carried with 52 fractional bits.
            let mantissa = (frac.exp2() * 2f64.powi(52)).round() as u64;
            let shift = scale_bits as i64 + whole as i64 - 52;
            let m = BigInt::from(mantissa);
            if shift >= 0 {
                m << shift as usize
            } else {
                let s = (-shift) as usize;
                let half = BigInt::one() << (s - 1);
                (m + half) >> s
            }
        })
        .collect()
}

/// Bound on the log-ratio perturbation caused by rounding to integers.
pub fn rounding_perturbation(n: usize, k: usize, scale_bits: u32) -> f64 {
    (n * k) as f64 * 2f64.powi(1 - scale_bits as i32)
}

/// `(a+1)^{a+1} / a^a` with `0⁰ = 1`.
fn pair_factor(a: u32) -> Rat {
    let num = num::pow_rat(&num::int(a as i64 + 1), a + 1);
    let den = num::pow_rat(&num::int(a as i64), a);
    if a == 0 {
        num
    } else {
        num / den
    }
}

/// `A = Π_{i≥2} min{(αᵢ+1)^{αᵢ+1}/αᵢ^{αᵢ}, (dᵢ−αᵢ+1)^{dᵢ−αᵢ+1}/(dᵢ−αᵢ)^{dᵢ−αᵢ}}`.
pub fn constant_a(d: &[u32], alpha: &[u32]) -> Result<Rat> {
    if d.len() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: alpha.len(), got: d.len() });
    }
    let mut out = Rat::one();
    for (&di, &ai) in d.iter().zip(alpha).skip(1) {
        if di < ai {
            return Err(Error::InvalidInput(format!("d = {di} below α = {ai}")));
        }
        out *= pair_factor(ai).min(pair_factor(di - ai));
    }
    Ok(out)
}

/// `Ã = Π_{i≥2} (αᵢ+1)^{αᵢ+1}/αᵢ^{αᵢ}`.
pub fn constant_a_tilde(alpha: &[u32]) -> Rat {
    alpha.iter().skip(1).map(|&a| pair_factor(a)).product()
}

/// `(e(n+k−1)/(k−1))^{k−1}`, or 1 when `k = 1`.
pub fn a_upper_bound(n: usize, k: usize) -> f64 {
    if k <= 1 {
        return 1.0;
    }
    let km1 = (k - 1) as f64;
    (std::f64::consts::E * (n + k - 1) as f64 / km1).powf(km1)
}

/// `inf_{t>0} Σ_{j=0}^{d} t^{j−d+α}`, the capacity of `Σ xʲ y^{d−j}` at `(d−α, α)`.
pub fn cap_pair(d: u32, alpha: u32) -> Result<f64> {
    if alpha > d {
        return Err(Error::InvalidInput(format!("α = {alpha} exceeds d = {d}")));
    }
    if alpha == 0 || alpha == d {
        return Ok(1.0);
    }
    let shift = alpha as f64 - d as f64;
    let exps: Vec<f64> = (0..=d).map(|j| j as f64 + shift).collect();
    let f = |s: f64| -> f64 {
        let vals: Vec<f64> = exps.iter().map(|e| e * s).collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + vals.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
    };
    // f' is the softmax-weighted mean exponent, increasing in s.
    let slope = |s: f64| -> f64 {
        let vals: Vec<f64> = exps.iter().map(|e| e * s).collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = vals.iter().map(|v| (v - max).exp()).collect();
        w.iter().zip(&exps).map(|(w, e)| w * e).sum::<f64>() / w.iter().sum::<f64>()
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while slope(lo) > 0.0 {
        lo *= 2.0;
    }
    while slope(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(f(0.5 * (lo + hi)).exp())
}

/// The Gurvits interval for `α = (1, …, 1)` with `k = n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GurvitsBounds {
    pub low: f64,
    pub high: f64,
    #[serde(with = "crate::num::rat_str")]
    pub derivative_form: Rat,
    pub pass: bool,
}

/// Every coefficient bound for one `(p, α)`, with pass flags.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub d: Vec<u32>,
    #[serde(rename = "A", with = "crate::num::rat_str")]
    pub a: Rat,
    #[serde(rename = "A_tilde", with = "crate::num::rat_str")]
    pub a_tilde: Rat,
    pub a_upper: f64,
    pub a_chain_pass: bool,
    #[serde(with = "crate::num::rat_str")]
    pub coefficient: Rat,
    pub cap_value: f64,
    pub certified_gap: f64,
    /// `(cap_value · e^{−gap}) / A`.
    pub blp_low: f64,
    /// `(cap_value · e^{−gap}) / Π_{i≥2} cap_pair(dᵢ, αᵢ)`.
    pub blp_pair_low: f64,
    pub blp_pass: bool,
    pub gurvits: Option<GurvitsBounds>,
}

/// Assemble all constants and check the coefficient sandwiches. A violated
/// bound is reported as an [`Error::Inconsistency`].
pub fn bound_report(
    p: &MinkowskiPolynomial,
    alpha: &[u32],
    cap: &CapacityResult,
) -> Result<BoundsReport> {
    let c = p.coefficient(alpha)?;
    let d = p.degrees_d(alpha)?;
    let n = p.degree() as usize;
    let k = p.num_vars();
    let a = constant_a(&d, alpha)?;
    let a_tilde = constant_a_tilde(alpha);
    let a_upper = a_upper_bound(n, k);
    let slack = 1e-9;
    let a_chain_pass =
        a <= a_tilde && num::to_f64(&a_tilde) <= a_upper * (1.0 + slack) || k == 1;

    let cap_low = cap.cap_value * (-cap.certified_gap).exp();
    let blp_low = cap_low / num::to_f64(&a);
    let pair_prod: f64 = d
        .iter()
        .zip(alpha)
        .skip(1)
        .map(|(&di, &ai)| cap_pair(di, ai))
        .product::<Result<f64>>()?;
    let blp_pair_low = cap_low / pair_prod;
    let c_f = num::to_f64(&c);
    let upper_ok = c_f <= cap.cap_value * (1.0 + slack) + f64::MIN_POSITIVE;
    let blp_pass = blp_low <= c_f * (1.0 + slack) && upper_ok;

    let gurvits = (k == n && alpha.iter().all(|&a| a == 1)).then(|| {
        let nf = num::to_f64(&Rat::from_integer(num::factorial(n as u32)));
        let low = nf / (n as f64).powi(n as i32) * cap_low;
        let derivative_form = c.clone();
        let df = num::to_f64(&derivative_form);
        GurvitsBounds {
            low,
            high: cap.cap_value,
            pass: low <= df * (1.0 + slack) && df <= cap.cap_value * (1.0 + slack),
            derivative_form,
        }
    });

    let report = BoundsReport {
        d,
        a,
        a_tilde,
        a_upper,
        a_chain_pass,
        coefficient: c,
        cap_value: cap.cap_value,
        certified_gap: cap.certified_gap,
        blp_low,
        blp_pair_low,
        blp_pass,
        gurvits,
    };
    if !report.blp_pass || !report.a_chain_pass || report.gurvits.as_ref().is_some_and(|g| !g.pass)
    {
        return Err(Error::Inconsistency(format!("coefficient bound violated: {report:?}")));
    }
    Ok(report)
}

/// `V(λ) / λ^α` exactly.
pub fn capacity_ratio(p: &MinkowskiPolynomial, lambda: &[Rat], alpha: &[u32]) -> Rat {
    let mono: Rat = lambda.iter().zip(alpha).map(|(l, &a)| num::pow_rat(l, a)).product();
    if mono.is_zero() {
        return Rat::zero();
    }
    p.evaluate(lambda) / mono
}
