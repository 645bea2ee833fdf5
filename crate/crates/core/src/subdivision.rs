//! Exact mixed subdivisions of `Σ λᵢPᵢ` induced by generic shift vectors.
//!
//! A tuple of faces `(F₁, …, F_k)` is a cell when `Σ dim Fᵢ = n`,
//! `dim(Σ Fᵢ) = n`, and some `v` has `v + xⁱ ∈ relint N(Fᵢ, Pᵢ)` for every `i`.
//! Relative-interior membership is encoded as "`⟨v + xⁱ, ·⟩` is maximized over
//! `Pᵢ` exactly on `Fᵢ`": equalities along `Fᵢ` and strict inequalities against
//! every other vertex of `Pᵢ`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, triangulation as tri, FaceDescriptor, Polytope, RationalPoint};
use crate::linprog::{self, StrictSystem};
use crate::num::{self, Rat};
use crate::sampling::{ShiftVectors, UniformSampler};

/// Default cap on the number of face tuples with `Σ dim = n`.
pub const DEFAULT_TUPLE_CAP: u128 = 1_000_000;

/// Points drawn by [`verify_subdivision`]'s audit.
pub const AUDIT_POINTS: usize = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct SubdivisionCell {
    pub face_tuple: Vec<FaceDescriptor>,
    #[serde(skip)]
    pub cell_polytope: Polytope,
    pub vertices: Vec<RationalPoint>,
    pub signature: Vec<usize>,
    #[serde(with = "crate::num::rat_str")]
    pub volume: Rat,
    /// `[F₁, …, F_k]²`: the squared volume of the parallelepiped spanned by
    /// orthonormal bases of the faces' direction spaces.
    #[serde(with = "crate::num::rat_str")]
    pub bracket_squared: Rat,
    /// Squared relative volumes `vol_{dim Fᵢ}(λᵢFᵢ)²`.
    #[serde(with = "crate::num::vec_rat_str")]
    pub face_volumes_squared: Vec<Rat>,
}

impl SubdivisionCell {
    /// `[F₁, …, F_k]` as a float (it is a square root of a rational).
    pub fn bracket(&self) -> f64 {
        num::to_f64(&self.bracket_squared).sqrt()
    }
}

/// Direction-space basis of a face: independent rows among `v − v₀`.
fn direction_basis(p: &Polytope, face: &FaceDescriptor) -> Vec<Vec<Rat>> {
    let base = &p.vertices()[face.vertex_indices[0]];
    let mut rows: Vec<Vec<Rat>> = face.vertex_indices[1..]
        .iter()
        .map(|&i| p.vertices()[i].sub(base).into_coords())
        .collect();
    if rows.is_empty() {
        return rows;
    }
    num::row_reduce(&mut rows);
    rows
}

/// Number of tuples with `Σ dim = n`, without enumerating them.
fn count_tuples(faces: &[Vec<FaceDescriptor>], n: usize) -> u128 {
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for fs in faces {
        let mut next = vec![0u128; n + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for f in fs {
                if s + f.dim <= n {
                    next[s + f.dim] = next[s + f.dim].saturating_add(w);
                }
            }
        }
        ways = next;
    }
    ways[n]
}

/// Append the normal-cone conditions of `face ⊆ p` shifted by `x` to `sys`.
fn add_cone_rows(sys: &mut StrictSystem, p: &Polytope, face: &FaceDescriptor, x: &RationalPoint) {
    let f0 = &p.vertices()[face.vertex_indices[0]];
    for &i in &face.vertex_indices[1..] {
        let e = p.vertices()[i].sub(f0).into_coords();
        let rhs = -num::dot(x.coords(), &e);
        sys.equalities.push((e, rhs));
    }
    for (j, v) in p.vertices().iter().enumerate() {
        if face.vertex_indices.binary_search(&j).is_ok() {
            continue;
        }
        // ⟨v + x, f0 − p⟩ > 0  ⇔  ⟨v, p − f0⟩ < ⟨x, f0 − p⟩
        let e = v.sub(f0).into_coords();
        let rhs = -num::dot(x.coords(), &e);
        sys.strict.push((e, rhs));
    }
}

struct Search<'a> {
    polys: &'a [Polytope],
    faces: &'a [Vec<FaceDescriptor>],
    shifts: &'a ShiftVectors,
    n: usize,
    max_rest: Vec<usize>,
}

impl Search<'_> {
    fn descend(
        &self,
        i: usize,
        chosen: &mut Vec<usize>,
        dims: usize,
        basis: &[Vec<Rat>],
        sys: &StrictSystem,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        if i == self.polys.len() {
            if dims == self.n {
                out.push(chosen.clone());
            }
            return Ok(());
        }
        for (fi, face) in self.faces[i].iter().enumerate() {
            if dims + face.dim > self.n || dims + face.dim + self.max_rest[i + 1] < self.n {
                continue;
            }
            let mut b = basis.to_vec();
            b.extend(direction_basis(&self.polys[i], face));
            if num_rank(&b) != dims + face.dim {
                continue;
            }
            let mut s = sys.clone();
            add_cone_rows(&mut s, &self.polys[i], face, &self.shifts.x[i]);
            if i + 1 == self.polys.len() {
                let margin = linprog::strict_feasibility_margin(&s)?;
                if margin.is_zero() {
                    return Err(Error::NonGenericShifts);
                }
                if !margin.is_strictly_feasible() {
                    continue;
                }
            }
            chosen.push(fi);
            self.descend(i + 1, chosen, dims + face.dim, &b, &s, out)?;
            chosen.pop();
        }
        Ok(())
    }
}

/// All cells of the mixed subdivision of `Σ λᵢPᵢ` for the given shifts, in
/// lexicographic order of face-index tuples.
pub fn enumerate_cells(
    polys: &[Polytope],
    lambda: &[BigInt],
    shifts: &ShiftVectors,
    tuple_cap: u128,
) -> Result<Vec<SubdivisionCell>> {
    let n = polys.first().ok_or(Error::EmptyPointSet)?.ambient_dim();
    let k = polys.len();
    if lambda.len() != k || shifts.x.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: lambda.len().min(shifts.x.len()) });
    }
    if lambda.iter().any(|l| !l.is_positive()) {
        return Err(Error::InvalidInput("λ must be positive".into()));
    }
    let faces: Vec<Vec<FaceDescriptor>> =
        polys.iter().map(|p| p.faces()).collect::<Result<_>>()?;
    let count = count_tuples(&faces, n);
    if count > tuple_cap {
        return Err(Error::TooManyTuples { count, cap: tuple_cap });
    }
    let mut max_rest = vec![0; k + 1];
    for i in (0..k).rev() {
        max_rest[i] = max_rest[i + 1] + polys[i].dim();
    }
    let search = Search { polys, faces: &faces, shifts, n, max_rest };
    let root = StrictSystem::new(n);

    // Parallel over the first polytope's faces; each branch is sequential.
    let branches: Vec<Vec<Vec<usize>>> = (0..faces[0].len())
        .into_par_iter()
        .map(|f0| -> Result<Vec<Vec<usize>>> {
            let face = &faces[0][f0];
            let mut out = Vec::new();
            if face.dim > n || face.dim + search.max_rest[1] < n {
                return Ok(out);
            }
            let basis = direction_basis(&polys[0], face);
            let mut sys = root.clone();
            add_cone_rows(&mut sys, &polys[0], face, &shifts.x[0]);
            if num_rank(&basis) != face.dim {
                return Ok(out);
            }
            if k == 1 {
                let margin = linprog::strict_feasibility_margin(&sys)?;
                if margin.is_zero() {
                    return Err(Error::NonGenericShifts);
                }
                if !margin.is_strictly_feasible() {
                    return Ok(out);
                }
            }
            search.descend(1, &mut vec![f0], face.dim, &basis, &sys, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let tuples: Vec<Vec<usize>> = branches.into_iter().flatten().collect();

    let lam: Vec<Rat> = lambda.iter().map(|l| Rat::from_integer(l.clone())).collect();
    tuples
        .into_par_iter()
        .map(|t| build_cell(polys, &faces, &lam, &t))
        .collect()
}

fn num_rank(rows: &[Vec<Rat>]) -> usize {
    if rows.is_empty() {
        0
    } else {
        num::rank(rows)
    }
}

fn build_cell(
    polys: &[Polytope],
    faces: &[Vec<FaceDescriptor>],
    lam: &[Rat],
    tuple: &[usize],
) -> Result<SubdivisionCell> {
    let face_tuple: Vec<FaceDescriptor> =
        tuple.iter().enumerate().map(|(i, &f)| faces[i][f].clone()).collect();
    let face_polys: Vec<Polytope> =
        polys.iter().zip(&face_tuple).map(|(p, f)| p.face_polytope(f)).collect();
    let cell_polytope = geometry::minkowski_sum(&face_polys, lam)?;
    let volume = geometry::volume(&cell_polytope)?;

    let mut all_basis = Vec::new();
    let mut gram_product = Rat::one();
    let mut face_volumes_squared = Vec::with_capacity(polys.len());
    for ((p, f), l) in polys.iter().zip(&face_tuple).zip(lam) {
        let basis = direction_basis(p, f);
        let gram: Vec<Vec<Rat>> =
            basis.iter().map(|a| basis.iter().map(|b| num::dot(a, b)).collect()).collect();
        let g = if basis.is_empty() { Rat::one() } else { num::determinant(&gram) };
        let rel = if f.dim == 0 {
            Rat::one()
        } else {
            let hrep = p.h_rep()?;
            let simplices = tri::triangulate_face(p.vertices(), &hrep.facets, &f.vertex_indices, f.dim);
            tri::relative_volume_in_basis(p.vertices(), &simplices, &basis)
        };
        let scaled = rel * num::pow_rat(l, f.dim as u32);
        face_volumes_squared.push(&scaled * &scaled * &g);
        gram_product *= g;
        all_basis.extend(basis);
    }
    let det = num::determinant(&all_basis);
    let bracket_squared = &det * &det / gram_product;
    Ok(SubdivisionCell {
        signature: face_tuple.iter().map(|f| f.dim).collect(),
        vertices: cell_polytope.vertices().to_vec(),
        face_tuple,
        cell_polytope,
        volume,
        bracket_squared,
        face_volumes_squared,
    })
}

/// Total cell volume per signature.
pub fn signature_sums(cells: &[SubdivisionCell]) -> BTreeMap<Vec<usize>, Rat> {
    let mut out: BTreeMap<Vec<usize>, Rat> = BTreeMap::new();
    for c in cells {
        *out.entry(c.signature.clone()).or_insert_with(Rat::zero) += &c.volume;
    }
    out
}

/// `Σ vol` over cells with signature `α`; equals `λ^α · c_α`.
pub fn alpha_cell_sum(cells: &[SubdivisionCell], alpha: &[u32]) -> Rat {
    cells
        .iter()
        .filter(|c| c.signature.len() == alpha.len()
            && c.signature.iter().zip(alpha).all(|(&s, &a)| s == a as usize))
        .map(|c| c.volume.clone())
        .sum()
}

/// Outcome of [`verify_subdivision`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationRecord {
    #[serde(with = "crate::num::rat_str")]
    pub cell_volume_sum: Rat,
    #[serde(with = "crate::num::rat_str")]
    pub sum_volume: Rat,
    pub volume_identity: bool,
    pub audit_points: usize,
    /// Audit points in the interior of two or more cells.
    pub overlaps: usize,
    /// Audit points of the sum in no cell.
    pub uncovered: usize,
    pub pass: bool,
}

/// Check the exact volume identity and audit disjointness and coverage on
/// `audit_points` uniform points of the sum.
pub fn verify_subdivision(
    cells: &[SubdivisionCell],
    polys: &[Polytope],
    lambda: &[BigInt],
    audit_points: usize,
    rng: &mut impl Rng,
) -> Result<VerificationRecord> {
    let sampler = UniformSampler::new(polys, lambda, 16)?;
    let sum_volume = geometry::volume(sampler.sum())?;
    let cell_volume_sum: Rat = cells.iter().map(|c| &c.volume).sum();
    let hreps: Vec<_> = cells.iter().map(|c| c.cell_polytope.h_rep()).collect::<Result<_>>()?;
    let (mut overlaps, mut uncovered) = (0, 0);
    for _ in 0..audit_points {
        let z = sampler.draw_fine(rng)?.point;
        let interior = hreps.iter().filter(|h| h.contains_relint(&z)).count();
        let closed = hreps.iter().filter(|h| h.contains(&z)).count();
        overlaps += usize::from(interior >= 2);
        uncovered += usize::from(closed == 0);
    }
    let volume_identity = cell_volume_sum == sum_volume;
    Ok(VerificationRecord {
        pass: volume_identity && overlaps == 0 && uncovered == 0,
        cell_volume_sum,
        sum_volume,
        volume_identity,
        audit_points,
        overlaps,
        uncovered,
    })
}

const PURE_COLORS: [&str; 6] = ["#3b6fd8", "#d8453b", "#3ba55c", "#e39b2d", "#8d5cc7", "#2bb3b3"];
const MIXED_COLOR: &str = "#9a9a9a";

fn cell_class(sig: &[usize]) -> Option<usize> {
    let nonzero: Vec<usize> = (0..sig.len()).filter(|&i| sig[i] > 0).collect();
    (nonzero.len() == 1).then(|| nonzero[0])
}

fn polygon_order(vs: &[RationalPoint]) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = vs.iter().map(|v| (num::to_f64(&v[0]), num::to_f64(&v[1]))).collect();
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let mut sorted = pts;
    sorted.sort_by(|a, b| (a.1 - cy).atan2(a.0 - cx).total_cmp(&(b.1 - cy).atan2(b.0 - cx)));
    sorted
}

/// Render planar cells as SVG: pure cells in per-polytope colors, mixed cells in
/// grey, each labelled with its exact area, with a legend.
pub fn render_svg(cells: &[SubdivisionCell], names: &[String]) -> Result<String> {
    let first = cells.first().ok_or_else(|| Error::InvalidInput("no cells to draw".into()))?;
    if first.cell_polytope.ambient_dim() != 2 {
        return Err(Error::InvalidInput("SVG export needs n = 2".into()));
    }
    let all: Vec<(f64, f64)> =
        cells.iter().flat_map(|c| polygon_order(&c.vertices)).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let extent = (x1 - x0).max(y1 - y0).max(1e-9);
    let pad = 0.08 * extent;
    let legend_h = 0.12 * extent * (1.0 + names.len() as f64 / 3.0);
    let font = 0.045 * extent;
    let stroke = 0.004 * extent;
    // SVG y grows downward; mirror y so the figure keeps its orientation.
    let fy = |y: f64| y1 - y + y0;
    let (vx, vy, vw, vh) = (x0 - pad, y0 - pad, x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad + legend_h);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vx} {vy} {vw} {vh}" width="640" height="{}">"#,
        (640.0 * vh / vw).round()
    )
    .unwrap();
    writeln!(s, r#"<rect x="{vx}" y="{vy}" width="{vw}" height="{vh}" fill="white"/>"#).unwrap();
    for c in cells {
        let color = match cell_class(&c.signature) {
            Some(i) => PURE_COLORS[i % PURE_COLORS.len()],
            None => MIXED_COLOR,
        };
        let poly = polygon_order(&c.vertices);
        let pts: Vec<String> = poly.iter().map(|(x, y)| format!("{x},{}", fy(*y))).collect();
        writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.75" stroke="black" stroke-width="{stroke}"/>"#,
            pts.join(" ")
        )
        .unwrap();
        let cx = poly.iter().map(|p| p.0).sum::<f64>() / poly.len() as f64;
        let cy = poly.iter().map(|p| p.1).sum::<f64>() / poly.len() as f64;
        writeln!(
            s,
            r#"<text x="{cx}" y="{}" font-size="{font}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            fy(cy),
            c.volume
        )
        .unwrap();
    }
    let mut entries: Vec<(String, &str)> = names
        .iter()
        .enumerate()
        .map(|(i, name)| (format!("{name} only"), PURE_COLORS[i % PURE_COLORS.len()]))
        .collect();
    entries.push(("mixed".into(), MIXED_COLOR));
    let ly = y1 + pad;
    for (j, (label, color)) in entries.iter().enumerate() {
        let lx = x0 + (j % 3) as f64 * extent / 3.0;
        let row = ly + (j / 3) as f64 * 1.6 * font;
        writeln!(
            s,
            r#"<rect x="{lx}" y="{row}" width="{font}" height="{font}" fill="{color}" stroke="black" stroke-width="{stroke}"/>"#
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="{font}" dominant-baseline="middle">{label}</text>"#,
            lx + 1.4 * font,
            row + 0.5 * font
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn export_svg(cells: &[SubdivisionCell], names: &[String], path: &Path) -> Result<()> {
    let svg = render_svg(cells, names)?;
    std::fs::write(path, svg).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}
