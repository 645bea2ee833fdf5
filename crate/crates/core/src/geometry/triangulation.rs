//! Pulling triangulations and simplex volumes.

use std::collections::BTreeSet;

use num_traits::Signed;

use super::{affine_rank, Facet, RationalPoint};
use crate::num::{self, Rat};

/// Facets of the face `set` (of dimension `d`), as vertex index sets.
pub(super) fn subfacets(
    vertices: &[RationalPoint],
    facets: &[Facet],
    set: &[usize],
    d: usize,
) -> Vec<Vec<usize>> {
    let mut out = BTreeSet::new();
    for f in facets {
        let inter: Vec<usize> =
            set.iter().copied().filter(|i| f.incident.binary_search(i).is_ok()).collect();
        if inter.len() < d || inter.len() == set.len() {
            continue;
        }
        let pts: Vec<RationalPoint> = inter.iter().map(|&i| vertices[i].clone()).collect();
        if affine_rank(&pts).expect("nonempty") + 1 == d {
            out.insert(inter);
        }
    }
    out.into_iter().collect()
}

/// Triangulate the `d`-dimensional face `set` by pulling its lexicographically
/// least vertex, recursing into the subfacets that avoid it. Returns simplices
/// as vertex index lists of length `d + 1`.
pub fn triangulate_face(
    vertices: &[RationalPoint],
    facets: &[Facet],
    set: &[usize],
    d: usize,
) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![set[0]]];
    }
    let apex = set[0];
    let mut out = Vec::new();
    for g in subfacets(vertices, facets, set, d) {
        if g.contains(&apex) {
            continue;
        }
        for mut s in triangulate_face(vertices, facets, &g, d - 1) {
            s.push(apex);
            out.push(s);
        }
    }
    out
}

/// Volume of a full-dimensional simplex: `|det(v_i − v_0)| / n!`.
pub fn simplex_volume(vertices: &[RationalPoint], simplex: &[usize]) -> Rat {
    let base = &vertices[simplex[0]];
    let m: Vec<Vec<Rat>> =
        simplex[1..].iter().map(|&i| vertices[i].sub(base).into_coords()).collect();
    let n = m.len() as u32;
    num::determinant(&m).abs() / Rat::from_integer(num::factorial(n))
}

/// Volume of a union of `d`-simplices measured in the coordinates of `basis`
/// (`d` independent vectors spanning the simplices' direction space).
pub fn relative_volume_in_basis(
    vertices: &[RationalPoint],
    simplices: &[Vec<usize>],
    basis: &[Vec<Rat>],
) -> Rat {
    let d = basis.len();
    if d == 0 {
        return Rat::from_integer(1.into());
    }
    let gram: Vec<Vec<Rat>> =
        basis.iter().map(|a| basis.iter().map(|b| num::dot(a, b)).collect()).collect();
    let fact = Rat::from_integer(num::factorial(d as u32));
    simplices
        .iter()
        .map(|s| {
            let base = &vertices[s[0]];
            let coords: Vec<Vec<Rat>> = s[1..]
                .iter()
                .map(|&i| {
                    let e = vertices[i].sub(base).into_coords();
                    let rhs: Vec<Rat> = basis.iter().map(|b| num::dot(b, &e)).collect();
                    num::solve(&gram, &rhs).expect("basis is independent")
                })
                .collect();
            num::determinant(&coords).abs() / &fact
        })
        .sum()
}
