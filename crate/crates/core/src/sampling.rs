//! Random generation: uniform points in Minkowski sums by rejection, rounding to
//! the dyadic grid `2^{−D₂}·Zⁿ`, hit-and-run, and generic shift vectors.
//!
//! Every draw comes from a [`RngStream`]: ChaCha8 (`rand_chacha` 0.3) keyed by
//! `seed_from_u64(seed)` with `set_stream(stream_id)`. The estimator reserves
//! stream 0 for shift vectors, stream `1 + i` for sample `i`, and streams from
//! [`VOLUME_STREAM_BASE`] upward for the rejection volume estimate.

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, Polytope, RationalPoint};
use crate::linprog;
use crate::num::{self, Rat};

/// Name of the generator behind every [`RngStream`].
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3), seed_from_u64(seed), set_stream(stream_id)";

/// First stream id used by the rejection volume estimator.
pub const VOLUME_STREAM_BASE: u64 = 1 << 62;

/// Extra bits of resolution for the continuous draw before grid rounding.
pub const FINE_EXTRA_BITS: u32 = 16;

/// Trials after which a rejection sampler with acceptance below 10⁻⁶ gives up.
pub const TRIAL_BUDGET: u64 = 10_000_000;

/// A reproducible random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Componentwise nearest multiple of `2^{−d2}`, ties toward −∞.
pub fn grid_round(y: &RationalPoint, d2: u32) -> RationalPoint {
    let scale = Rat::from_integer(num::pow2(d2));
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    RationalPoint::new(
        y.coords()
            .iter()
            .map(|c| Rat::new((c * &scale - &half).ceil().to_integer(), num::pow2(d2)))
            .collect(),
    )
}

/// `x¹, …, x^k` with `Σ xⁱ = 0`, each in `[−1, 1]ⁿ` on the `2^{−d2}` grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftVectors {
    pub x: Vec<RationalPoint>,
    pub d2: u32,
}

/// Draw `x¹, …, x^{k−1}` uniformly from the grid points of `[−1, 1]ⁿ` and set
/// `x^k = −Σ_{i<k} xⁱ`, redrawing the whole batch until `x^k ∈ [−1, 1]ⁿ`.
pub fn sample_shifts(k: usize, n: usize, d2: u32, rng: &mut impl Rng) -> Result<ShiftVectors> {
    if k == 0 {
        return Err(Error::InvalidInput("need at least one polytope".into()));
    }
    let one = num::pow2(d2);
    let lo = -one.clone();
    let hi = &one + 1;
    loop {
        let mut ints: Vec<Vec<BigInt>> =
            (0..k - 1).map(|_| (0..n).map(|_| rng.gen_bigint_range(&lo, &hi)).collect()).collect();
        let last: Vec<BigInt> =
            (0..n).map(|c| -ints.iter().map(|v| &v[c]).sum::<BigInt>()).collect();
        if last.iter().any(|v| v.abs() > one) {
            continue;
        }
        ints.push(last);
        let x = ints
            .into_iter()
            .map(|v| RationalPoint::new(v.into_iter().map(|a| Rat::new(a, one.clone())).collect()))
            .collect();
        return Ok(ShiftVectors { x, d2 });
    }
}

#[derive(Clone, Debug)]
struct Halfspace {
    normal: Vec<BigInt>,
    bound_num: BigInt,
    bound_den: BigInt,
}

#[derive(Clone, Debug)]
enum Membership {
    Facets(Vec<Halfspace>),
    Lp,
}

/// Rejection sampler for `Σ λᵢPᵢ`: uniform draws in the integer bounding box at
/// resolution `2^{−(d2+16)}`, accepted by exact membership.
#[derive(Clone, Debug)]
pub struct UniformSampler {
    polys: Vec<Polytope>,
    lambda: Vec<Rat>,
    sum: Polytope,
    lo: Vec<BigInt>,
    hi: Vec<BigInt>,
    d2: u32,
    fine_bits: u32,
    membership: Membership,
}

/// One accepted draw and the number of box trials it took.
#[derive(Clone, Debug)]
pub struct Draw {
    pub point: RationalPoint,
    pub trials: u64,
}

impl UniformSampler {
    pub fn new(polys: &[Polytope], lambda: &[BigInt], d2: u32) -> Result<Self> {
        if d2 == 0 {
            return Err(Error::InvalidInput("D2 must be at least 1".into()));
        }
        if lambda.iter().any(|l| !l.is_positive()) {
            return Err(Error::InvalidInput("λ must be positive integers".into()));
        }
        let lambda: Vec<Rat> = lambda.iter().map(|l| Rat::from_integer(l.clone())).collect();
        let sum = geometry::minkowski_sum(polys, &lambda)?;
        let n = sum.ambient_dim();
        if sum.dim() < n {
            return Err(Error::InvalidInput("Minkowski sum is not full-dimensional".into()));
        }
        let lo: Vec<BigInt> = (0..n)
            .map(|c| sum.vertices().iter().map(|v| v[c].floor().to_integer()).min().unwrap())
            .collect();
        let hi: Vec<BigInt> = (0..n)
            .map(|c| sum.vertices().iter().map(|v| v[c].ceil().to_integer()).max().unwrap())
            .collect();
        let membership = if n <= sum.exact_limit() {
            let hrep = sum.h_rep()?;
            Membership::Facets(
                hrep.facets
                    .iter()
                    .map(|f| Halfspace {
                        normal: f.normal.clone(),
                        bound_num: f.offset.numer().clone(),
                        bound_den: f.offset.denom().clone(),
                    })
                    .collect(),
            )
        } else {
            Membership::Lp
        };
        Ok(UniformSampler {
            polys: polys.to_vec(),
            lambda,
            sum,
            lo,
            hi,
            d2,
            fine_bits: d2 + FINE_EXTRA_BITS,
            membership,
        })
    }

    pub fn sum(&self) -> &Polytope {
        &self.sum
    }

    pub fn lambda(&self) -> &[Rat] {
        &self.lambda
    }

    pub fn d2(&self) -> u32 {
        self.d2
    }

    /// Volume of the integer bounding box.
    pub fn box_volume(&self) -> BigInt {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    /// Membership of a fine-grid point `numer / 2^{fine_bits}`.
    fn accepts(&self, numer: &[BigInt]) -> Result<bool> {
        match &self.membership {
            Membership::Facets(hs) => Ok(hs.iter().all(|h| {
                let lhs = num::dot_int(&h.normal, numer) * &h.bound_den;
                lhs <= &h.bound_num << self.fine_bits as usize
            })),
            Membership::Lp => geometry::contains(&self.sum, &self.fine_point(numer)),
        }
    }

    fn fine_point(&self, numer: &[BigInt]) -> RationalPoint {
        let den = num::pow2(self.fine_bits);
        RationalPoint::new(numer.iter().map(|a| Rat::new(a.clone(), den.clone())).collect())
    }

    /// One box trial: a fine-grid point and whether it lies in the sum.
    pub fn trial(&self, rng: &mut impl Rng) -> Result<(Vec<BigInt>, bool)> {
        let shift = self.fine_bits as usize;
        let numer: Vec<BigInt> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| rng.gen_bigint_range(&(l << shift), &((h << shift) + 1)))
            .collect();
        let ok = self.accepts(&numer)?;
        Ok((numer, ok))
    }

    /// A uniform point of the sum at fine resolution (before grid rounding).
    pub fn draw_fine(&self, rng: &mut impl Rng) -> Result<Draw> {
        let mut trials = 0u64;
        loop {
            trials += 1;
            let (numer, ok) = self.trial(rng)?;
            if ok {
                return Ok(Draw { point: self.fine_point(&numer), trials });
            }
            if trials >= TRIAL_BUDGET {
                return Err(Error::SamplerStalled { trials, rate: 0.0 });
            }
        }
    }

    /// A uniform point of the sum rounded to `2^{−d2}·Zⁿ`.
    pub fn draw(&self, rng: &mut impl Rng) -> Result<Draw> {
        let d = self.draw_fine(rng)?;
        Ok(Draw { point: grid_round(&d.point, self.d2), trials: d.trials })
    }

    /// Exact membership of an arbitrary rational point.
    pub fn contains(&self, z: &RationalPoint) -> Result<bool> {
        match &self.membership {
            Membership::Facets(_) => Ok(self.sum.h_rep()?.contains(z)),
            Membership::Lp => geometry::contains(&self.sum, z),
        }
    }

    pub fn polytopes(&self) -> &[Polytope] {
        &self.polys
    }
}

/// One uniform draw from `Σ λᵢPᵢ`, rounded to `2^{−d2}·Zⁿ`.
pub fn sample_uniform(
    polys: &[Polytope],
    lambda: &[BigInt],
    d2: u32,
    rng: &mut impl Rng,
) -> Result<RationalPoint> {
    Ok(UniformSampler::new(polys, lambda, d2)?.draw(rng)?.point)
}

/// `steps` hit-and-run moves from `z0` inside `Σ λᵢPᵢ`. Directions are Gaussian
/// with dyadic coordinates; each iterate is rounded to the fine grid and the move
/// is kept only if the rounded point is still in the sum.
pub fn hit_and_run(
    polys: &[Polytope],
    lambda: &[Rat],
    z0: &RationalPoint,
    steps: usize,
    d2: u32,
    rng: &mut impl Rng,
) -> Result<RationalPoint> {
    let n = z0.dim();
    let fine = d2 + FINE_EXTRA_BITS;
    let mut z = z0.clone();
    for _ in 0..steps {
        let dir: Vec<Rat> = loop {
            let v: Vec<Rat> =
                (0..n).map(|_| num::dyadic(rng.sample::<f64, _>(StandardNormal), 32)).collect();
            if v.iter().any(|x| !x.is_zero()) {
                break v;
            }
        };
        let (tmin, tmax) = linprog::chord_extent(polys, lambda, &z, &dir)?;
        if tmin >= tmax {
            return Err(Error::DegenerateChord);
        }
        let u = num::dyadic(rng.gen::<f64>(), 53);
        let t = &tmin + (&tmax - &tmin) * u;
        let cand = grid_round(&z.add(&RationalPoint::new(dir.iter().map(|d| d * &t).collect())), fine);
        let lp = linprog::membership_program(polys, lambda, &cand, 0)?;
        if linprog::solve_to_vertex(&lp).status != linprog::LpStatus::Infeasible {
            z = cand;
        }
    }
    Ok(z)
}

/// Relative-error volume estimate from rejection trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeEstimate {
    #[serde(with = "crate::num::rat_str")]
    pub value: Rat,
    pub trials: u64,
    pub successes: u64,
}

/// `(1 ± ε)`-estimate of `Vol(Σ λᵢPᵢ)` with probability `≥ 1 − δ`, using the
/// Dagum–Karp–Luby–Ross stopping rule on the box acceptance indicator.
pub fn estimate_volume_rejection(
    sampler: &UniformSampler,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<VolumeEstimate> {
    if !(eps > 0.0 && eps <= 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput("need 0 < ε ≤ 1 and 0 < δ < 1".into()));
    }
    let upsilon = 1.0
        + 4.0 * (std::f64::consts::E - 2.0) * (1.0 + eps) * (2.0 / delta).ln() / (eps * eps);
    let target = upsilon.ceil() as u64;
    let mut rng = RngStream::new(seed, VOLUME_STREAM_BASE);
    let (mut trials, mut successes) = (0u64, 0u64);
    while successes < target {
        trials += 1;
        if sampler.trial(&mut rng)?.1 {
            successes += 1;
        }
        if trials >= TRIAL_BUDGET && (successes as f64) < 1e-6 * trials as f64 {
            return Err(Error::SamplerStalled { trials, rate: successes as f64 / trials as f64 });
        }
    }
    let p_hat = Rat::new(BigInt::from(target), BigInt::from(trials));
    let value = Rat::from_integer(sampler.box_volume()) * p_hat;
    Ok(VolumeEstimate { value, trials, successes })
}

/// Whether every denominator of `p` divides `2^bits`.
pub fn on_grid(p: &RationalPoint, bits: u32) -> bool {
    let g = num::pow2(bits);
    p.coords().iter().all(|c| g.is_multiple_of(c.denom()))
}
