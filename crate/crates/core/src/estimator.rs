//! The randomized mixed-volume estimator: capacity scaling, uniform sampling in
//! the scaled Minkowski sum, LP decomposition, and face-dimension tallying.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::{self, BoundsReport, CapacityResult};
use crate::error::{Error, Result};
use crate::geometry::{self, FaceDescriptor, Polytope, RationalPoint};
use crate::linprog::{self, LpStatus};
use crate::minkpoly;
use crate::num::{self, Rat};
use crate::sampling::{self, RngStream, ShiftVectors, UniformSampler};

/// Largest spread `max λ / min λ = 2^bits` accepted from the capacity minimizer.
pub const MAX_SPREAD_BITS: u32 = 64;

/// A validated estimation problem.
#[derive(Clone, Debug)]
pub struct Instance {
    polytopes: Vec<Polytope>,
    alpha: Vec<u32>,
    l: u32,
    m0: usize,
}

impl Instance {
    /// Checks that all polytopes are lattice polytopes in a common `Rⁿ` with
    /// coordinates bounded by `2^l`, and that `α ≥ 0` has `|α| = n`.
    pub fn new(polytopes: Vec<Polytope>, alpha: Vec<u32>, l: u32) -> Result<Self> {
        let n = polytopes.first().ok_or(Error::EmptyPointSet)?.ambient_dim();
        if polytopes.len() != alpha.len() {
            return Err(Error::DimensionMismatch { expected: polytopes.len(), got: alpha.len() });
        }
        let bound = Rat::from_integer(num::pow2(l));
        for p in &polytopes {
            if p.ambient_dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.ambient_dim() });
            }
            if !p.is_lattice() {
                return Err(Error::InvalidInput(format!("{} has non-integer vertices", p.name())));
            }
            if p.max_abs_coord() > bound {
                return Err(Error::InvalidInput(format!(
                    "{} has a coordinate beyond 2^{l}",
                    p.name()
                )));
            }
        }
        let s: u32 = alpha.iter().sum();
        if s as usize != n {
            return Err(Error::InvalidInput(format!("|α| = {s} but n = {n}")));
        }
        let m0 = polytopes.iter().map(|p| p.vertices().len()).max().unwrap_or(0);
        Ok(Instance { polytopes, alpha, l, m0 })
    }

    pub fn n(&self) -> usize {
        self.polytopes[0].ambient_dim()
    }

    pub fn k(&self) -> usize {
        self.polytopes.len()
    }

    pub fn polytopes(&self) -> &[Polytope] {
        &self.polytopes
    }

    pub fn alpha(&self) -> &[u32] {
        &self.alpha
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn m0(&self) -> usize {
        self.m0
    }

    pub fn with_alpha(&self, alpha: Vec<u32>) -> Result<Self> {
        Instance::new(self.polytopes.clone(), alpha, self.l)
    }
}

/// The decomposition `z = Σᵢ z⁽ⁱ⁾` read off an optimal vertex of `Q_z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    /// `w[i][j]`, the weight of vertex `j` of polytope `i`.
    pub weights: Vec<Vec<Rat>>,
    pub parts: Vec<RationalPoint>,
    pub faces: Vec<FaceDescriptor>,
    /// `|support of w[i]| − 1`.
    pub support_dims: Vec<usize>,
    pub face_dims: Vec<usize>,
    /// No optimal edge of `Q_z` leaving the returned vertex changes the parts.
    /// Weight vectors alone may still be non-unique when a face is not a simplex.
    pub unique: bool,
}

/// Solve `max Σᵢ ⟨xⁱ, Σⱼ w_ij λᵢ v_ij⟩` over `w ≥ 0`, `Σⱼ w_ij = 1`,
/// `Σᵢⱼ w_ij λᵢ v_ij = z`, and describe the resulting parts.
pub fn decompose(
    z: &RationalPoint,
    polys: &[Polytope],
    lambda: &[Rat],
    shifts: &ShiftVectors,
) -> Result<Decomposition> {
    if shifts.x.len() != polys.len() {
        return Err(Error::DimensionMismatch { expected: polys.len(), got: shifts.x.len() });
    }
    let mut lp = linprog::membership_program(polys, lambda, z, 0)?;
    let mut obj = Vec::with_capacity(lp.num_vars());
    for ((p, lam), x) in polys.iter().zip(lambda).zip(&shifts.x) {
        obj.extend(p.vertices().iter().map(|v| lam * num::dot(x.coords(), v.coords())));
    }
    lp.maximize(obj)?;
    let sol = linprog::solve_to_vertex(&lp);
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::NotInMinkowskiSum),
        LpStatus::Unbounded => return Err(Error::Lp("decomposition LP unbounded".into())),
    }
    let mut weights = Vec::with_capacity(polys.len());
    let mut parts = Vec::with_capacity(polys.len());
    let mut faces = Vec::with_capacity(polys.len());
    let mut support_dims = Vec::with_capacity(polys.len());
    let mut face_dims = Vec::with_capacity(polys.len());
    let mut offset = 0;
    for (p, lam) in polys.iter().zip(lambda) {
        let m = p.vertices().len();
        let w = sol.point[offset..offset + m].to_vec();
        offset += m;
        let mut local = RationalPoint::zeros(z.dim());
        for (wj, v) in w.iter().zip(p.vertices()) {
            if !wj.is_zero() {
                local = local.add(&v.scale(wj));
            }
        }
        let face = geometry::minimal_face(p, &local)?;
        support_dims.push(w.iter().filter(|x| x.is_positive()).count() - 1);
        face_dims.push(face.dim);
        faces.push(face);
        parts.push(local.scale(lam));
        weights.push(w);
    }
    let moves_parts = |edge: &Vec<Rat>| {
        let mut offset = 0;
        polys.iter().any(|p| {
            let m = p.vertices().len();
            let dw = &edge[offset..offset + m];
            offset += m;
            (0..z.dim()).any(|c| {
                !dw.iter().zip(p.vertices()).map(|(d, v)| d * &v[c]).sum::<Rat>().is_zero()
            })
        })
    };
    let unique = !sol.optimal_edges.iter().any(moves_parts);
    Ok(Decomposition { weights, parts, faces, support_dims, face_dims, unique })
}

/// Outcome of the face-dimension test for one decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceTest {
    /// `face_dims = α`.
    pub hit: bool,
    /// `support_dims = face_dims`.
    pub support_agrees: bool,
}

pub fn face_dimension_test(dec: &Decomposition, alpha: &[u32]) -> FaceTest {
    FaceTest {
        hit: dec.face_dims.len() == alpha.len()
            && dec.face_dims.iter().zip(alpha).all(|(&d, &a)| d == a as usize),
        support_agrees: dec.support_dims == dec.face_dims,
    }
}

/// `N = ⌈3·A·e·ε⁻²·ln(4/δ)⌉`.
pub fn required_samples(a: &Rat, eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("ε = {eps} outside (0, 1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("δ = {delta} outside (0, 1)")));
    }
    let a = num::to_f64(a);
    if !(a >= 1.0) {
        return Err(Error::InvalidInput(format!("A = {a} below 1")));
    }
    let n = 3.0 * a * std::f64::consts::E / (eps * eps) * (4.0 / delta).ln();
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(Error::InvalidInput("sample count overflows".into()));
    }
    Ok(n.ceil() as u64)
}

/// How `V_K(λ)` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMode {
    /// Exact rational volume of the scaled sum.
    Exact,
    /// Rejection estimate with relative accuracy `ε` at confidence `1 − δ/2`.
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimatorConfig {
    pub mode: VolumeMode,
    pub d2: u32,
    pub scale_bits: u32,
    /// Overrides `N`.
    pub samples: Option<u64>,
    /// Overrides the capacity-derived scaling vector.
    #[serde(serialize_with = "ser_opt_bigints")]
    pub lambda: Option<Vec<BigInt>>,
    /// Worker threads for the sample loop; `None` uses the global pool.
    pub threads: Option<usize>,
}

fn ser_opt_bigints<S: serde::Serializer>(
    v: &Option<Vec<BigInt>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(xs) => num::bigint_str::serialize_vec(xs, s),
        None => s.serialize_none(),
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            mode: VolumeMode::Exact,
            d2: 32,
            scale_bits: 20,
            samples: None,
            lambda: None,
            threads: None,
        }
    }
}

/// Per-sample bookkeeping beyond the hit count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SampleDiagnostics {
    /// Grid-rounded points that fell outside the sum (counted as misses).
    pub rounded_outside: u64,
    /// Decompositions with a second optimal basis.
    pub non_unique: u64,
    /// Decompositions whose support dimensions differ from face dimensions.
    pub support_mismatch: u64,
    /// Decompositions with `Σ face_dims > n`.
    pub dimension_violations: u64,
    /// Box trials spent by the rejection sampler.
    pub box_trials: u64,
}

impl SampleDiagnostics {
    fn merge(mut self, o: Self) -> Self {
        self.rounded_outside += o.rounded_outside;
        self.non_unique += o.non_unique;
        self.support_mismatch += o.support_mismatch;
        self.dimension_violations += o.dimension_violations;
        self.box_trials += o.box_trials;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub capacity_ms: f64,
    pub volume_ms: f64,
    pub sampling_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    #[serde(with = "crate::num::rat_str")]
    pub estimate_coefficient: Rat,
    #[serde(with = "crate::num::rat_str")]
    pub estimate_derivative_form: Rat,
    #[serde(with = "crate::num::rat_str")]
    pub estimate_standard: Rat,
    pub estimate_coefficient_f64: f64,
    pub alpha: Vec<u32>,
    pub eps: f64,
    pub delta: f64,
    pub eps_cap: f64,
    #[serde(rename = "N")]
    pub n_samples: u64,
    #[serde(rename = "T")]
    pub hits: u64,
    #[serde(with = "crate::num::rat_str")]
    pub p_hat: Rat,
    #[serde(serialize_with = "crate::num::bigint_str::serialize_vec")]
    pub lambda: Vec<BigInt>,
    #[serde(rename = "V_at_lambda", with = "crate::num::opt_rat_str")]
    pub v_at_lambda: Option<Rat>,
    pub v_at_lambda_exact: bool,
    pub capacity: Option<CapacityResult>,
    pub bounds: Option<BoundsReport>,
    /// `1/(A·e^{ε_cap})`, the guaranteed floor of the hit probability.
    pub hit_probability_floor: Option<f64>,
    /// Log-ratio perturbation bound from rounding λ to integers.
    pub lambda_rounding_bound: f64,
    /// Wasserstein-1 bound `√n·2^{−D₂}` of the grid-rounded sampler.
    pub w1_bound: f64,
    pub shifts: Option<ShiftVectors>,
    pub diagnostics: SampleDiagnostics,
    pub seed: u64,
    pub workers: usize,
    pub config: EstimatorConfig,
    pub timings: Timings,
    pub warnings: Vec<String>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn monomial(lambda: &[BigInt], alpha: &[u32]) -> BigInt {
    lambda.iter().zip(alpha).map(|(l, &a)| l.pow(a)).product()
}

/// Run the full estimator. `ε_cap = ε/4`; `δ/2` is budgeted to the volume
/// estimate in sampled mode and `δ/2` to the hit frequency.
pub fn estimate_mixed_volume(
    instance: &Instance,
    eps: f64,
    delta: f64,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    let start = Instant::now();
    let n = instance.n();
    let k = instance.k();
    let alpha = instance.alpha().to_vec();
    let polys = instance.polytopes();
    if !(eps > 0.0 && eps <= 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput("need 0 < ε ≤ 1 and 0 < δ < 1".into()));
    }
    if config.d2 == 0 || config.scale_bits == 0 {
        return Err(Error::InvalidInput("D2 and scale bits must be positive".into()));
    }
    let eps_cap = eps / 4.0;
    let w1_bound = (n as f64).sqrt() * 2f64.powi(-(config.d2 as i32));
    let lambda_rounding_bound = capacity::rounding_perturbation(n, k, config.scale_bits);
    let mut warnings = Vec::new();

    if geometry::sum_dimension(polys)? < n {
        warnings.push("Minkowski sum is lower-dimensional; every mixed volume vanishes".into());
        return Ok(EstimateReport {
            estimate_coefficient: Rat::zero(),
            estimate_derivative_form: Rat::zero(),
            estimate_standard: Rat::zero(),
            estimate_coefficient_f64: 0.0,
            alpha,
            eps,
            delta,
            eps_cap,
            n_samples: 0,
            hits: 0,
            p_hat: Rat::zero(),
            lambda: Vec::new(),
            v_at_lambda: Some(Rat::zero()),
            v_at_lambda_exact: true,
            capacity: None,
            bounds: None,
            hit_probability_floor: None,
            lambda_rounding_bound,
            w1_bound,
            shifts: None,
            diagnostics: SampleDiagnostics::default(),
            seed,
            workers: 0,
            config: config.clone(),
            timings: Timings { total_ms: ms(start), ..Timings::default() },
            warnings,
        });
    }

    let t_cap = Instant::now();
    let poly = minkpoly::interpolate_coefficients(polys)?;
    let radius = capacity::search_box(n, instance.l(), instance.m0());
    let mut cap = capacity::capacity_minimize(&poly, &alpha, eps_cap, radius)?;
    if cap.hit_box {
        warnings.push("capacity minimizer reached the search box".into());
    }
    if cap.exactly_zero {
        warnings.push("α lies outside the Newton polytope; the coefficient is 0".into());
    }
    let bounds = capacity::bound_report(&poly, &alpha, &cap)?;
    let lambda = match &config.lambda {
        Some(l) => {
            if l.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: l.len() });
            }
            if l.iter().any(|x| !x.is_positive()) {
                return Err(Error::InvalidInput("λ must be positive integers".into()));
            }
            l.clone()
        }
        None => {
            let min = cap.y_star.iter().cloned().fold(f64::INFINITY, f64::min);
            let cap_spread = MAX_SPREAD_BITS as f64 * std::f64::consts::LN_2;
            if cap.y_star.iter().any(|y| y - min > cap_spread) {
                warnings.push(format!("λ spread clamped to 2^{MAX_SPREAD_BITS}"));
                for y in cap.y_star.iter_mut() {
                    *y = y.min(min + cap_spread);
                }
            }
            capacity::integer_lambda(&cap, config.scale_bits)
        }
    };
    let capacity_ms = ms(t_cap);

    let t_vol = Instant::now();
    let sampler = UniformSampler::new(polys, &lambda, config.d2)?;
    let lambda_rat = sampler.lambda().to_vec();
    let (v_at_lambda, v_exact) = match config.mode {
        VolumeMode::Exact => (poly.evaluate(&lambda_rat), true),
        VolumeMode::Sampled => {
            warnings.push("V(λ) is a randomized estimate".into());
            (sampling::estimate_volume_rejection(&sampler, eps, delta / 2.0, seed)?.value, false)
        }
    };
    let volume_ms = ms(t_vol);

    let n_samples = match config.samples {
        Some(s) if s > 0 => s,
        Some(_) => return Err(Error::InvalidInput("sample count must be positive".into())),
        None => required_samples(&bounds.a, eps, delta)?,
    };
    let shifts = sampling::sample_shifts(k, n, config.d2, &mut RngStream::new(seed, 0))?;

    let t_samp = Instant::now();
    let run = || -> Result<(u64, SampleDiagnostics)> {
        (0..n_samples)
            .into_par_iter()
            .map(|i| sample_once(&sampler, polys, &lambda_rat, &shifts, &alpha, n, seed, i))
            .try_reduce(
                || (0, SampleDiagnostics::default()),
                |a, b| Ok((a.0 + b.0, a.1.merge(b.1))),
            )
    };
    let ((hits, diagnostics), workers) = match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Numerical(e.to_string()))?;
            (pool.install(run)?, pool.current_num_threads())
        }
        None => (run()?, rayon::current_num_threads()),
    };
    let sampling_ms = ms(t_samp);

    if diagnostics.dimension_violations > 0 {
        warnings.push(format!(
            "{} decompositions had face dimensions summing above n",
            diagnostics.dimension_violations
        ));
    }
    if diagnostics.non_unique > 0 {
        warnings.push(format!(
            "{} decompositions had alternative optima; shifts may be non-generic",
            diagnostics.non_unique
        ));
    }
    if diagnostics.rounded_outside > 0 {
        warnings.push(format!(
            "{} rounded samples left the sum and were counted as misses",
            diagnostics.rounded_outside
        ));
    }

    let p_hat = Rat::new(BigInt::from(hits), BigInt::from(n_samples));
    let estimate = &p_hat * &v_at_lambda / Rat::from_integer(monomial(&lambda, &alpha));
    let conv = minkpoly::convert_normalization(&estimate, &alpha);
    let floor = 1.0 / (num::to_f64(&bounds.a) * eps_cap.exp());
    cap.trajectory.clear();
    Ok(EstimateReport {
        estimate_coefficient_f64: num::to_f64(&estimate),
        estimate_coefficient: estimate,
        estimate_derivative_form: conv.derivative_form,
        estimate_standard: conv.standard_mixed_volume,
        alpha,
        eps,
        delta,
        eps_cap,
        n_samples,
        hits,
        p_hat,
        lambda,
        v_at_lambda: Some(v_at_lambda),
        v_at_lambda_exact: v_exact,
        capacity: Some(cap),
        bounds: Some(bounds),
        hit_probability_floor: Some(floor),
        lambda_rounding_bound,
        w1_bound,
        shifts: Some(shifts),
        diagnostics,
        seed,
        workers,
        config: config.clone(),
        timings: Timings { capacity_ms, volume_ms, sampling_ms, total_ms: ms(start) },
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn sample_once(
    sampler: &UniformSampler,
    polys: &[Polytope],
    lambda: &[Rat],
    shifts: &ShiftVectors,
    alpha: &[u32],
    n: usize,
    seed: u64,
    index: u64,
) -> Result<(u64, SampleDiagnostics)> {
    let mut rng = RngStream::new(seed, index + 1);
    let draw = sampler.draw(&mut rng)?;
    let mut diag = SampleDiagnostics { box_trials: draw.trials, ..Default::default() };
    if !sampler.contains(&draw.point)? {
        diag.rounded_outside = 1;
        return Ok((0, diag));
    }
    let dec = decompose(&draw.point, polys, lambda, shifts)?;
    check_decomposition(&dec, &draw.point)?;
    let test = face_dimension_test(&dec, alpha);
    diag.non_unique = u64::from(!dec.unique);
    diag.support_mismatch = u64::from(!test.support_agrees);
    diag.dimension_violations = u64::from(dec.face_dims.iter().sum::<usize>() > n);
    Ok((u64::from(test.hit), diag))
}

/// `Σᵢ z⁽ⁱ⁾ = z` and per-polytope weights sum to one, exactly.
pub fn check_decomposition(dec: &Decomposition, z: &RationalPoint) -> Result<()> {
    let total = dec.parts.iter().fold(RationalPoint::zeros(z.dim()), |a, b| a.add(b));
    if &total != z {
        return Err(Error::Inconsistency(format!("parts sum to {total:?}, not {z:?}")));
    }
    for w in &dec.weights {
        let s: Rat = w.iter().sum();
        if s != Rat::from_integer(1.into()) || w.iter().any(Signed::is_negative) {
            return Err(Error::Inconsistency("decomposition weights are not convex".into()));
        }
    }
    Ok(())
}
