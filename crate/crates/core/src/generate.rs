//! Seeded random lattice-polytope instances.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, Polytope, RationalPoint};

/// `k` polytopes in `Rⁿ`, each the hull of `m0` uniform lattice points of
/// `[−2^l, 2^l]ⁿ`, redrawn until the Minkowski sum is full-dimensional.
pub fn random_polytopes(
    n: usize,
    k: usize,
    m0: usize,
    l: u32,
    rng: &mut impl Rng,
) -> Result<Vec<Polytope>> {
    if n == 0 || k == 0 || m0 == 0 {
        return Err(Error::InvalidInput("n, k and m0 must be positive".into()));
    }
    if l > 30 {
        return Err(Error::InvalidInput("L above 30 is not supported".into()));
    }
    let bound = 1i64 << l;
    loop {
        let polys = (0..k)
            .map(|i| {
                let pts: Vec<RationalPoint> = (0..m0)
                    .map(|_| {
                        let c: Vec<i64> = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
                        RationalPoint::from_ints(&c)
                    })
                    .collect();
                Ok(geometry::convex_hull(&pts)?.with_name(format!("P{}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if geometry::sum_dimension(&polys)? == n {
            return Ok(polys);
        }
    }
}

/// Every `α ∈ Z^k_{≥0}` with `|α| = n`.
pub fn all_alphas(n: usize, k: usize) -> Vec<Vec<u32>> {
    crate::minkpoly::compositions(n as u32, k)
}
