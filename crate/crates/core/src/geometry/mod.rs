//! Exact rational polytope primitives.
//!
//! Polytopes are stored by their pruned vertex list in lexicographic order.
//! The H-representation is computed on demand (double description) and cached.
//! Lower-dimensional polytopes carry their affine-hull equalities explicitly
//! and their facets are expressed with normals inside the affine hull.

mod hull;
pub mod triangulation;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Index;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linprog::{self, LpStatus};
use crate::num::{self, Rat};

pub use triangulation::{relative_volume_in_basis, simplex_volume, triangulate_face};

/// Exact geometry (H-representations, exact volumes) is refused above this ambient dimension.
pub const DEFAULT_EXACT_DIM_LIMIT: usize = 6;

/// A point with exact rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RationalPoint(#[serde(with = "crate::num::vec_rat_str")] Vec<Rat>);

impl RationalPoint {
    pub fn new(coords: Vec<Rat>) -> Self {
        RationalPoint(coords)
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        RationalPoint(coords.iter().map(|&c| num::int(c)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        RationalPoint(vec![Rat::zero(); n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rat] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<Rat> {
        self.0
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|c| c.is_integer())
    }

    pub fn add(&self, other: &RationalPoint) -> RationalPoint {
        RationalPoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &RationalPoint) -> RationalPoint {
        RationalPoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, t: &Rat) -> RationalPoint {
        RationalPoint(self.0.iter().map(|a| a * t).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(num::to_f64).collect()
    }
}

impl Index<usize> for RationalPoint {
    type Output = Rat;
    fn index(&self, i: usize) -> &Rat {
        &self.0[i]
    }
}

impl fmt::Debug for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Halfspace `⟨normal, x⟩ ≤ offset` with a primitive integer outward normal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Facet {
    pub normal: Vec<BigInt>,
    pub offset: Rat,
    /// Indices of the polytope vertices lying on the facet.
    pub incident: Vec<usize>,
}

/// Affine-hull equation `⟨normal, x⟩ = offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyperplane {
    pub normal: Vec<BigInt>,
    pub offset: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HRep {
    pub equalities: Vec<Hyperplane>,
    pub facets: Vec<Facet>,
}

fn eval(normal: &[BigInt], x: &[Rat]) -> Rat {
    normal
        .iter()
        .zip(x)
        .fold(Rat::zero(), |acc, (a, b)| acc + b * a)
}

impl Facet {
    pub fn slack(&self, x: &RationalPoint) -> Rat {
        &self.offset - eval(&self.normal, x.coords())
    }
}

impl Hyperplane {
    pub fn holds(&self, x: &RationalPoint) -> bool {
        eval(&self.normal, x.coords()) == self.offset
    }
}

impl HRep {
    pub fn contains(&self, x: &RationalPoint) -> bool {
        self.equalities.iter().all(|h| h.holds(x))
            && self.facets.iter().all(|f| !f.slack(x).is_negative())
    }

    /// Strictly inside every facet (and on the affine hull).
    pub fn contains_relint(&self, x: &RationalPoint) -> bool {
        self.equalities.iter().all(|h| h.holds(x))
            && self.facets.iter().all(|f| f.slack(x).is_positive())
    }
}

/// A face given by the indices of the parent's vertices it contains.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceDescriptor {
    pub vertex_indices: Vec<usize>,
    pub dim: usize,
}

/// A convex polytope by its pruned, lexicographically ordered vertex list.
#[derive(Clone)]
pub struct Polytope {
    name: String,
    vertices: Vec<RationalPoint>,
    ambient: usize,
    dim: usize,
    exact_limit: usize,
    hrep: OnceLock<HRep>,
}

impl fmt::Debug for Polytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Polytope")
            .field("name", &self.name)
            .field("vertices", &self.vertices)
            .field("dim", &self.dim)
            .finish()
    }
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

impl Polytope {
    /// Wrap an already pruned vertex set.
    fn from_pruned(mut vertices: Vec<RationalPoint>, exact_limit: usize) -> Result<Polytope> {
        vertices.sort();
        let ambient = vertices[0].dim();
        let dim = affine_rank(&vertices)?;
        Ok(Polytope {
            name: String::new(),
            vertices,
            ambient,
            dim,
            exact_limit,
            hrep: OnceLock::new(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_exact_limit(mut self, limit: usize) -> Self {
        self.exact_limit = limit;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[RationalPoint] {
        &self.vertices
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Dimension of the affine hull.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exact_limit(&self) -> usize {
        self.exact_limit
    }

    pub fn is_lattice(&self) -> bool {
        self.vertices.iter().all(RationalPoint::is_integral)
    }

    /// Largest absolute vertex coordinate.
    pub fn max_abs_coord(&self) -> Rat {
        self.vertices
            .iter()
            .flat_map(|v| v.coords().iter().map(Signed::abs))
            .max()
            .unwrap_or_else(Rat::zero)
    }

    fn check_limit(&self) -> Result<()> {
        if self.ambient > self.exact_limit {
            return Err(Error::DimensionLimit { dim: self.ambient, limit: self.exact_limit });
        }
        Ok(())
    }

    pub fn h_rep(&self) -> Result<&HRep> {
        self.check_limit()?;
        Ok(self.hrep.get_or_init(|| hrep_of_points(&self.vertices)))
    }

    /// `t · P` for rational `t > 0`.
    pub fn dilate(&self, t: &Rat) -> Polytope {
        let vertices = self.vertices.iter().map(|v| v.scale(t)).collect();
        let mut p = Polytope::from_pruned(vertices, self.exact_limit).expect("nonempty");
        p.name = self.name.clone();
        p
    }

    /// Sub-polytope spanned by a face.
    pub fn face_polytope(&self, face: &FaceDescriptor) -> Polytope {
        let vs = face.vertex_indices.iter().map(|&i| self.vertices[i].clone()).collect();
        Polytope::from_pruned(vs, self.exact_limit).expect("faces are nonempty")
    }

    /// Every nonempty face, including the polytope itself, ordered by (dim, vertex set).
    pub fn faces(&self) -> Result<Vec<FaceDescriptor>> {
        let hrep = self.h_rep()?;
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        let mut seen: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
        let mut frontier = vec![(all, self.dim)];
        while let Some((set, d)) = frontier.pop() {
            if !seen.insert((d, set.clone())) {
                continue;
            }
            if d == 0 {
                continue;
            }
            for sub in triangulation::subfacets(&self.vertices, &hrep.facets, &set, d) {
                frontier.push((sub, d - 1));
            }
        }
        Ok(seen
            .into_iter()
            .map(|(dim, vertex_indices)| FaceDescriptor { vertex_indices, dim })
            .collect())
    }
}

/// Affine dimension of a point set (0 for a single point).
pub fn affine_rank(points: &[RationalPoint]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyPointSet)?;
    let n = first.dim();
    let mut rows = Vec::with_capacity(points.len().saturating_sub(1));
    for p in &points[1..] {
        if p.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.dim() });
        }
        rows.push(p.sub(first).into_coords());
    }
    Ok(num::rank(&rows))
}

fn check_common_dim(points: &[RationalPoint]) -> Result<usize> {
    let n = points.first().ok_or(Error::EmptyPointSet)?.dim();
    for p in points {
        if p.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.dim() });
        }
    }
    Ok(n)
}

/// Pruned vertex representation of `conv(points)`.
pub fn convex_hull(points: &[RationalPoint]) -> Result<Polytope> {
    convex_hull_with_limit(points, DEFAULT_EXACT_DIM_LIMIT)
}

pub fn convex_hull_with_limit(points: &[RationalPoint], limit: usize) -> Result<Polytope> {
    let n = check_common_dim(points)?;
    let unique: Vec<RationalPoint> = points.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if unique.len() == 1 {
        return Polytope::from_pruned(unique, limit);
    }
    if n > limit {
        return hull_by_lp(unique, limit);
    }
    let hrep = hrep_of_points(&unique);
    // a candidate is a vertex iff the facets through it cut out only itself
    let mut vertices = Vec::new();
    for (j, p) in unique.iter().enumerate() {
        let mut face: Vec<usize> = (0..unique.len()).collect();
        for f in hrep.facets.iter().filter(|f| f.incident.binary_search(&j).is_ok()) {
            face.retain(|i| f.incident.binary_search(i).is_ok());
        }
        if face == [j] {
            vertices.push(p.clone());
        }
    }
    let poly = Polytope::from_pruned(vertices, limit)?;
    // facet data carries over; only the incidence indices change
    let facets = hrep
        .facets
        .into_iter()
        .map(|f| {
            let incident = incident_indices(&poly.vertices, &f.normal, &f.offset);
            Facet { incident, ..f }
        })
        .collect();
    let _ = poly.hrep.set(HRep { equalities: hrep.equalities, facets });
    Ok(poly)
}

fn hull_by_lp(unique: Vec<RationalPoint>, limit: usize) -> Result<Polytope> {
    let mut vertices = Vec::new();
    for (j, p) in unique.iter().enumerate() {
        let others: Vec<RationalPoint> =
            unique.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, q)| q.clone()).collect();
        if !in_hull(&others, p)? {
            vertices.push(p.clone());
        }
    }
    Polytope::from_pruned(vertices, limit)
}

/// Whether `y` lies in the convex hull of `points`, decided by an exact LP.
pub fn in_hull(points: &[RationalPoint], y: &RationalPoint) -> Result<bool> {
    let tmp = Polytope {
        name: String::new(),
        vertices: points.to_vec(),
        ambient: y.dim(),
        dim: 0,
        exact_limit: 0,
        hrep: OnceLock::new(),
    };
    let lp = linprog::membership_program(std::slice::from_ref(&tmp), &[Rat::one()], y, 0)?;
    Ok(linprog::solve_to_vertex(&lp).status != LpStatus::Infeasible)
}

fn incident_indices(vertices: &[RationalPoint], normal: &[BigInt], offset: &Rat) -> Vec<usize> {
    vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| &eval(normal, v.coords()) == offset)
        .map(|(i, _)| i)
        .collect()
}

/// Canonical H-representation of `conv(points)` via double description.
fn hrep_of_points(points: &[RationalPoint]) -> HRep {
    let n = points[0].dim();
    let rows: Vec<Vec<BigInt>> = points.iter().map(|p| hull::point_row(p.coords())).collect();
    let cone = hull::double_description(&rows, n + 1);

    let to_rat = |v: &[BigInt]| -> Vec<Rat> { v.iter().map(|x| Rat::from_integer(x.clone())).collect() };

    let mut eq_rows: Vec<Vec<Rat>> = cone.lineality.iter().map(|l| to_rat(l)).collect();
    num::row_reduce(&mut eq_rows);
    let equalities: Vec<Hyperplane> = eq_rows
        .iter()
        .map(|row| {
            let (normal, offset) = primitive_halfspace(&row[..n], &row[n]);
            // sign convention: first nonzero normal entry positive
            let neg = normal.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative());
            if neg {
                Hyperplane { normal: normal.iter().map(|x| -x).collect(), offset: -offset }
            } else {
                Hyperplane { normal, offset }
            }
        })
        .collect();

    // project facet normals onto the orthogonal complement of the equality normals
    let eq_normals: Vec<Vec<Rat>> = equalities.iter().map(|h| to_rat(&h.normal)).collect();
    let eq_offsets: Vec<Rat> = equalities.iter().map(|h| h.offset.clone()).collect();
    let gram: Vec<Vec<Rat>> = eq_normals
        .iter()
        .map(|a| eq_normals.iter().map(|b| num::dot(a, b)).collect())
        .collect();

    let mut facets: Vec<Facet> = Vec::new();
    for ray in &cone.rays {
        let r = to_rat(ray);
        let mut c: Vec<Rat> = r[..n].to_vec();
        let mut b = r[n].clone();
        if !eq_normals.is_empty() {
            let rhs: Vec<Rat> = eq_normals.iter().map(|e| num::dot(e, &c)).collect();
            let t = num::solve(&gram, &rhs).expect("equality normals are independent");
            for (ti, (e, beta)) in t.iter().zip(eq_normals.iter().zip(&eq_offsets)) {
                for (cj, ej) in c.iter_mut().zip(e) {
                    *cj -= ti * ej;
                }
                b -= ti * beta;
            }
        }
        if c.iter().all(Zero::is_zero) {
            continue;
        }
        let (normal, offset) = primitive_halfspace(&c, &b);
        let incident = incident_indices(points, &normal, &offset);
        facets.push(Facet { normal, offset, incident });
    }
    facets.sort_by(|a, b| (&a.normal, &a.offset).cmp(&(&b.normal, &b.offset)));
    facets.dedup_by(|a, b| a.normal == b.normal && a.offset == b.offset);
    HRep { equalities, facets }
}

/// Scale `(c, b)` by a positive factor so that `c` is a primitive integer vector.
fn primitive_halfspace(c: &[Rat], b: &Rat) -> (Vec<BigInt>, Rat) {
    let mut ints = num::clear_denominators(c);
    let scale_num = num::common_denominator(c);
    let before: Vec<BigInt> = ints.clone();
    num::make_primitive(&mut ints);
    let content = before
        .iter()
        .zip(&ints)
        .find(|(_, y)| !y.is_zero())
        .map(|(x, y)| x / y)
        .unwrap_or_else(BigInt::one);
    let offset = b * Rat::new(scale_num, content);
    (ints, offset)
}

pub fn h_representation(p: &Polytope) -> Result<&HRep> {
    p.h_rep()
}

/// Exact n-dimensional volume; zero for lower-dimensional polytopes.
pub fn volume(p: &Polytope) -> Result<Rat> {
    p.check_limit()?;
    if p.dim < p.ambient {
        return Ok(Rat::zero());
    }
    let hrep = p.h_rep()?;
    let all: Vec<usize> = (0..p.vertices.len()).collect();
    let simplices = triangulation::triangulate_face(&p.vertices, &hrep.facets, &all, p.dim);
    Ok(simplices.iter().map(|s| triangulation::simplex_volume(&p.vertices, s)).sum())
}

/// Vertex representation of `Σ scalarᵢ·Pᵢ`.
pub fn minkowski_sum(polys: &[Polytope], scalars: &[Rat]) -> Result<Polytope> {
    let first = polys.first().ok_or(Error::EmptyPointSet)?;
    if polys.len() != scalars.len() {
        return Err(Error::DimensionMismatch { expected: polys.len(), got: scalars.len() });
    }
    if scalars.iter().any(|s| !s.is_positive()) {
        return Err(Error::InvalidInput("Minkowski scalars must be positive".into()));
    }
    let n = first.ambient;
    let limit = polys.iter().map(|p| p.exact_limit).min().unwrap_or(DEFAULT_EXACT_DIM_LIMIT);
    let mut acc = first.dilate(&scalars[0]);
    for (p, s) in polys.iter().zip(scalars).skip(1) {
        if p.ambient != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.ambient });
        }
        let scaled = p.dilate(s);
        let mut cands = BTreeSet::new();
        for a in &acc.vertices {
            for b in &scaled.vertices {
                cands.insert(a.add(b));
            }
        }
        let cands: Vec<RationalPoint> = cands.into_iter().collect();
        acc = convex_hull_with_limit(&cands, limit)?;
    }
    Ok(acc.with_exact_limit(limit))
}

fn check_point_dim(p: &Polytope, y: &RationalPoint) -> Result<()> {
    if y.dim() != p.ambient {
        return Err(Error::DimensionMismatch { expected: p.ambient, got: y.dim() });
    }
    Ok(())
}

/// Exact membership test (boundary counts as inside).
pub fn contains(p: &Polytope, y: &RationalPoint) -> Result<bool> {
    check_point_dim(p, y)?;
    if p.ambient > p.exact_limit {
        return in_hull(&p.vertices, y);
    }
    Ok(p.h_rep()?.contains(y))
}

/// The unique face of `p` containing `y` in its relative interior.
pub fn minimal_face(p: &Polytope, y: &RationalPoint) -> Result<FaceDescriptor> {
    check_point_dim(p, y)?;
    let hrep = p.h_rep()?;
    if !hrep.contains(y) {
        return Err(Error::OutsidePolytope);
    }
    let mut face: Vec<usize> = (0..p.vertices.len()).collect();
    for f in hrep.facets.iter().filter(|f| f.slack(y).is_zero()) {
        face.retain(|i| f.incident.binary_search(i).is_ok());
    }
    let pts: Vec<RationalPoint> = face.iter().map(|&i| p.vertices[i].clone()).collect();
    let dim = affine_rank(&pts)?;
    Ok(FaceDescriptor { vertex_indices: face, dim })
}

/// Affine dimension of `Σ Pᵢ` from the union of edge directions.
pub fn sum_dimension(polys: &[Polytope]) -> Result<usize> {
    let n = polys.first().ok_or(Error::EmptyPointSet)?.ambient;
    let mut rows = Vec::new();
    for p in polys {
        let base = &p.vertices[0];
        rows.extend(p.vertices[1..].iter().map(|v| v.sub(base).into_coords()));
    }
    if rows.is_empty() {
        return Ok(0);
    }
    let r = num::rank(&rows);
    debug_assert!(r <= n);
    Ok(r)
}
