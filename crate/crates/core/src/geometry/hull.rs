//! Double description for the cone of valid inequalities of a point set.
//!
//! For points `p_j`, the inequalities `c·x ≤ b` valid on all of them form the
//! polyhedral cone `{(c, b) : c·p_j − b ≤ 0}`. Its lineality space holds the
//! affine-hull equalities and its extreme rays (modulo lineality) are the facets.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::num::{self, dot_int, make_primitive, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }
    fn filled(upto: usize, len: usize) -> Self {
        let mut b = Bits::new(len);
        (0..upto).for_each(|i| b.set(i));
        b
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

struct Ray {
    v: Vec<BigInt>,
    zero: Bits,
}

pub(crate) struct Cone {
    pub lineality: Vec<Vec<BigInt>>,
    pub rays: Vec<Vec<BigInt>>,
}

fn primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    make_primitive(&mut v);
    v
}

/// Minimal generators of `{x ∈ R^d : row·x ≤ 0 for every row}`.
pub(crate) fn double_description(rows: &[Vec<BigInt>], d: usize) -> Cone {
    let m = rows.len();
    let mut lin: Vec<Vec<BigInt>> = (0..d)
        .map(|i| {
            let mut e = vec![BigInt::zero(); d];
            e[i] = BigInt::from(1);
            e
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();

    for (i, a) in rows.iter().enumerate() {
        if let Some(p) = lin.iter().position(|l| !dot_int(a, l).is_zero()) {
            let mut l0 = lin.remove(p);
            let mut al0 = dot_int(a, &l0);
            if al0.is_positive() {
                l0.iter_mut().for_each(|x| *x = -&*x);
                al0 = -al0;
            }
            for l in lin.iter_mut() {
                let al = dot_int(a, l);
                if !al.is_zero() {
                    let v = l.iter().zip(&l0).map(|(x, y)| &al0 * x - &al * y).collect();
                    *l = primitive(v);
                }
            }
            let abs_al0 = -&al0;
            for r in rays.iter_mut() {
                let ar = dot_int(a, &r.v);
                if !ar.is_zero() {
                    let v = r.v.iter().zip(&l0).map(|(x, y)| &abs_al0 * x + &ar * y).collect();
                    r.v = primitive(v);
                }
                r.zero.set(i);
            }
            rays.push(Ray { v: l0, zero: Bits::filled(i, m) });
            continue;
        }

        let values: Vec<BigInt> = rays.iter().map(|r| dot_int(a, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&j| values[j].is_positive()).collect();
        if pos.is_empty() {
            for (r, val) in rays.iter_mut().zip(&values) {
                if val.is_zero() {
                    r.zero.set(i);
                }
            }
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&j| values[j].is_negative()).collect();
        let min_common = d.saturating_sub(lin.len() + 2);

        let mut created = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common = rays[p].zero.and(&rays[q].zero);
                if common.count() < min_common {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(j, r)| j == p || j == q || !common.subset_of(&r.zero));
                if !adjacent {
                    continue;
                }
                let (ap, aq) = (&values[p], &values[q]);
                let v = rays[q].v.iter().zip(&rays[p].v).map(|(x, y)| ap * x - aq * y).collect();
                let mut zero = common;
                zero.set(i);
                created.push(Ray { v: primitive(v), zero });
            }
        }

        let mut kept = Vec::with_capacity(rays.len() - pos.len() + created.len());
        for (j, mut r) in rays.into_iter().enumerate() {
            if values[j].is_positive() {
                continue;
            }
            if values[j].is_zero() {
                r.zero.set(i);
            }
            kept.push(r);
        }
        kept.extend(created);
        rays = kept;
    }

    Cone { lineality: lin, rays: rays.into_iter().map(|r| r.v).collect() }
}

/// Homogenized row `(p·D, −D)` for a rational point, `D` its common denominator.
pub(crate) fn point_row(p: &[Rat]) -> Vec<BigInt> {
    let mut all = p.to_vec();
    all.push(-Rat::from_integer(BigInt::from(1)));
    num::clear_denominators(&all)
}
