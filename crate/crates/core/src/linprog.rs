//! Exact rational linear programming.
//!
//! The solver is a two-phase primal simplex over a fraction-free integer
//! tableau: every stored row is `det * (true tableau row)` where `det` is the
//! determinant of the current basis of the integer-scaled constraint matrix.
//! Pivots use exact integer division, so no gcd work happens in the inner loop.
//! Entering and leaving variables follow Bland's rule (smallest index), which
//! rules out cycling and makes the returned vertex a pure function of the input.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::geometry::{Polytope, RationalPoint};
use crate::num::{self, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

/// `maximize c·x` subject to equality rows, `≤` rows and per-variable bounds.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<Rat>,
    eq_rows: Vec<Vec<Rat>>,
    eq_rhs: Vec<Rat>,
    le_rows: Vec<Vec<Rat>>,
    le_rhs: Vec<Rat>,
    bounds: Vec<VarBound>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal vertex, or the last basic feasible point when unbounded. Empty when infeasible.
    pub point: Vec<Rat>,
    pub objective_value: Rat,
    pub is_vertex: bool,
    /// Basic columns of the standard-form tableau, sorted.
    pub basis: Vec<usize>,
    /// Some nonbasic column has zero reduced cost at the optimum.
    pub alternative_optima: bool,
    /// Directions of the optimal edges leaving the vertex: one per nonbasic
    /// zero-reduced-cost column whose ratio test allows a positive step.
    pub optimal_edges: Vec<Vec<Rat>>,
    /// Improving direction when unbounded.
    pub ray: Option<Vec<Rat>>,
}

impl LinearProgram {
    /// A program over `num_vars` nonnegative variables with zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![Rat::zero(); num_vars],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            bounds: vec![VarBound::NonNegative; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, got: len });
        }
        Ok(())
    }

    pub fn maximize(&mut self, objective: Vec<Rat>) -> Result<&mut Self> {
        self.check_len(objective.len())?;
        self.objective = objective;
        Ok(self)
    }

    pub fn add_eq(&mut self, row: Vec<Rat>, rhs: Rat) -> Result<&mut Self> {
        self.check_len(row.len())?;
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        Ok(self)
    }

    pub fn add_le(&mut self, row: Vec<Rat>, rhs: Rat) -> Result<&mut Self> {
        self.check_len(row.len())?;
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
        Ok(self)
    }

    pub fn set_bound(&mut self, var: usize, bound: VarBound) -> &mut Self {
        self.bounds[var] = bound;
        self
    }

    pub fn set_all_free(&mut self) -> &mut Self {
        self.bounds.iter_mut().for_each(|b| *b = VarBound::Free);
        self
    }

    pub fn objective(&self) -> &[Rat] {
        &self.objective
    }

    /// Rank of the constraints active at `x`, counting tight nonnegativity bounds.
    pub fn active_rank(&self, x: &[Rat]) -> usize {
        let mut rows: Vec<Vec<Rat>> = self.eq_rows.clone();
        for (row, rhs) in self.le_rows.iter().zip(&self.le_rhs) {
            if &num::dot(row, x) == rhs {
                rows.push(row.clone());
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if *b == VarBound::NonNegative && x[j].is_zero() {
                let mut e = vec![Rat::zero(); self.num_vars];
                e[j] = Rat::one();
                rows.push(e);
            }
        }
        num::rank(&rows)
    }
}

/// Solve to an optimal basic feasible solution (a vertex when the feasible set is pointed).
pub fn solve_to_vertex(lp: &LinearProgram) -> LpSolution {
    let mut t = Tableau::build(lp);
    let infeasible = LpSolution {
        status: LpStatus::Infeasible,
        point: Vec::new(),
        objective_value: Rat::zero(),
        is_vertex: false,
        basis: Vec::new(),
        alternative_optima: false,
        optimal_edges: Vec::new(),
        ray: None,
    };

    if t.num_artificial > 0 {
        t.install_phase_one_objective();
        match t.run() {
            Outcome::Optimal => {}
            // phase one is bounded above by zero
            Outcome::Unbounded(_) => unreachable!("phase one objective is bounded"),
        }
        if t.obj[t.rhs_col()].is_negative() {
            return infeasible;
        }
        t.drive_out_artificials();
    }
    t.install_objective(lp);

    let (status, ray) = match t.run() {
        Outcome::Optimal => (LpStatus::Optimal, None),
        Outcome::Unbounded(col) => (LpStatus::Unbounded, Some(t.ray(col))),
    };
    let point = t.point();
    let objective_value = num::dot(&lp.objective, &point);
    let is_vertex = status == LpStatus::Optimal && lp.active_rank(&point) == lp.num_vars;
    let zero_cols = if status == LpStatus::Optimal { t.zero_reduced_cost_columns() } else { vec![] };
    let alternative_optima = !zero_cols.is_empty();
    let optimal_edges = zero_cols
        .into_iter()
        .filter(|&j| t.admits_positive_step(j))
        .map(|j| t.ray(j))
        .collect();
    let mut basis = t.basis.clone();
    basis.sort_unstable();
    LpSolution {
        status,
        point,
        objective_value,
        is_vertex,
        basis,
        alternative_optima,
        optimal_edges,
        ray,
    }
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

struct Tableau {
    /// Constraint rows, each `ncols + 1` long (last entry is the right-hand side).
    rows: Vec<Vec<BigInt>>,
    /// Reduced-cost row, same layout; last entry is `det * scale * objective`.
    obj: Vec<BigInt>,
    det: BigInt,
    basis: Vec<usize>,
    ncols: usize,
    num_artificial: usize,
    /// Standard-form columns of each original variable: (positive part, negative part).
    var_cols: Vec<(usize, Option<usize>)>,
    num_orig: usize,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.ncols
    }

    fn build(lp: &LinearProgram) -> Tableau {
        let mut var_cols = Vec::with_capacity(lp.num_vars);
        let mut ncols = 0;
        for b in &lp.bounds {
            match b {
                VarBound::NonNegative => {
                    var_cols.push((ncols, None));
                    ncols += 1;
                }
                VarBound::Free => {
                    var_cols.push((ncols, Some(ncols + 1)));
                    ncols += 2;
                }
            }
        }
        let num_struct = ncols;
        let num_slack = lp.le_rows.len();
        ncols += num_slack;

        // Integer-scaled rows over the structural columns, plus rhs.
        let expand = |row: &[Rat], rhs: &Rat| -> Vec<BigInt> {
            let mut all: Vec<Rat> = row.to_vec();
            all.push(rhs.clone());
            let ints = num::clear_denominators(&all);
            let mut out = vec![BigInt::zero(); num_struct + 1];
            for (j, &(p, n)) in var_cols.iter().enumerate() {
                out[p] = ints[j].clone();
                if let Some(n) = n {
                    out[n] = -&ints[j];
                }
            }
            out[num_struct] = ints[lp.num_vars].clone();
            out
        };

        struct RawRow {
            coeffs: Vec<BigInt>,
            rhs: BigInt,
            slack: Option<usize>,
        }
        let mut raw = Vec::new();
        for (row, rhs) in lp.eq_rows.iter().zip(&lp.eq_rhs) {
            let mut e = expand(row, rhs);
            let rhs = e.pop().unwrap();
            raw.push(RawRow { coeffs: e, rhs, slack: None });
        }
        for (i, (row, rhs)) in lp.le_rows.iter().zip(&lp.le_rhs).enumerate() {
            let mut e = expand(row, rhs);
            let rhs = e.pop().unwrap();
            raw.push(RawRow { coeffs: e, rhs, slack: Some(num_struct + i) });
        }

        let needs_artificial: Vec<bool> =
            raw.iter().map(|r| r.slack.is_none() || r.rhs.is_negative()).collect();
        let num_artificial = needs_artificial.iter().filter(|&&b| b).count();
        let total = ncols + num_artificial;

        let mut rows = Vec::with_capacity(raw.len());
        let mut basis = Vec::with_capacity(raw.len());
        let mut next_art = ncols;
        for (r, need_art) in raw.into_iter().zip(needs_artificial) {
            let mut row = vec![BigInt::zero(); total + 1];
            for (j, c) in r.coeffs.into_iter().enumerate() {
                row[j] = c;
            }
            if let Some(s) = r.slack {
                row[s] = BigInt::one();
            }
            row[total] = r.rhs;
            if row[total].is_negative() {
                row.iter_mut().for_each(|x| *x = -&*x);
            }
            if need_art {
                row[next_art] = BigInt::one();
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(r.slack.unwrap());
            }
            rows.push(row);
        }

        Tableau {
            rows,
            obj: vec![BigInt::zero(); total + 1],
            det: BigInt::one(),
            basis,
            ncols: total,
            num_artificial,
            var_cols,
            num_orig: lp.num_vars,
        }
    }

    fn first_artificial(&self) -> usize {
        self.ncols - self.num_artificial
    }

    fn install_phase_one_objective(&mut self) {
        // maximize -sum(artificials): reduced-cost row starts at +1 on artificial columns
        let first = self.first_artificial();
        let mut obj = vec![BigInt::zero(); self.ncols + 1];
        for x in &mut obj[first..self.ncols] {
            *x = self.det.clone();
        }
        for (r, &b) in self.basis.iter().enumerate() {
            if b >= first {
                for (o, a) in obj.iter_mut().zip(&self.rows[r]) {
                    *o -= a;
                }
            }
        }
        self.obj = obj;
    }

    /// Pivot every artificial out of the basis (they all sit at level zero), then
    /// drop artificial columns. Rows with no structural entry are redundant and removed.
    fn drive_out_artificials(&mut self) {
        let first = self.first_artificial();
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= first {
                match (0..first).find(|&j| !self.rows[r][j].is_zero()) {
                    Some(j) => {
                        self.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        for row in &mut self.rows {
            row.drain(first..self.ncols);
        }
        self.obj.drain(first..self.ncols);
        self.ncols = first;
        self.num_artificial = 0;
    }

    fn install_objective(&mut self, lp: &LinearProgram) {
        // cost per standard-form column, integer-scaled
        let scaled = num::clear_denominators(&lp.objective);
        let mut cost = vec![BigInt::zero(); self.ncols];
        for (j, &(p, n)) in self.var_cols.iter().enumerate() {
            cost[p] = scaled[j].clone();
            if let Some(n) = n {
                cost[n] = -&scaled[j];
            }
        }
        let mut obj: Vec<BigInt> = cost.iter().map(|c| -(c * &self.det)).collect();
        obj.push(BigInt::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (o, a) in obj.iter_mut().zip(&self.rows[r]) {
                *o += cb * a;
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, s: usize) {
        if self.rows[r][s].is_negative() {
            self.rows[r].iter_mut().for_each(|x| *x = -&*x);
        }
        let piv = self.rows[r][s].clone();
        let det = std::mem::replace(&mut self.det, piv.clone());
        let pivot_row = self.rows[r].clone();
        let update = |row: &mut Vec<BigInt>| {
            let f = row[s].clone();
            if f.is_zero() {
                if piv != det {
                    for x in row.iter_mut() {
                        if !x.is_zero() {
                            *x = (&*x * &piv).div_floor(&det);
                        }
                    }
                }
                return;
            }
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x = (&*x * &piv - &f * p).div_floor(&det);
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                update(row);
            }
        }
        update(&mut self.obj);
        self.basis[r] = s;
    }

    /// Bland's rule primal simplex on the current objective row.
    fn run(&mut self) -> Outcome {
        let rhs = self.ncols;
        loop {
            let Some(s) = (0..self.ncols).find(|&j| self.obj[j].is_negative()) else {
                return Outcome::Optimal;
            };
            let mut best: Option<usize> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[s].is_positive() {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let lhs = &row[rhs] * &self.rows[b][s];
                        let rhs_b = &self.rows[b][rhs] * &row[s];
                        if lhs < rhs_b || (lhs == rhs_b && self.basis[i] < self.basis[b]) {
                            Some(i)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            match best {
                Some(r) => self.pivot(r, s),
                None => return Outcome::Unbounded(s),
            }
        }
    }

    fn column_values(&self) -> Vec<Rat> {
        let mut x = vec![Rat::zero(); self.ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            x[b] = Rat::new(self.rows[r][self.ncols].clone(), self.det.clone());
        }
        x
    }

    fn to_original(&self, cols: &[Rat]) -> Vec<Rat> {
        self.var_cols
            .iter()
            .take(self.num_orig)
            .map(|&(p, n)| match n {
                Some(n) => &cols[p] - &cols[n],
                None => cols[p].clone(),
            })
            .collect()
    }

    fn point(&self) -> Vec<Rat> {
        self.to_original(&self.column_values())
    }

    fn ray(&self, s: usize) -> Vec<Rat> {
        let mut d = vec![Rat::zero(); self.ncols];
        d[s] = Rat::from_integer(self.det.clone());
        for (r, &b) in self.basis.iter().enumerate() {
            d[b] = Rat::from_integer(-&self.rows[r][s]);
        }
        self.to_original(&d)
    }

    fn zero_reduced_cost_columns(&self) -> Vec<usize> {
        let basic: std::collections::HashSet<usize> = self.basis.iter().copied().collect();
        (0..self.first_artificial())
            .filter(|&j| {
                if basic.contains(&j) || !self.obj[j].is_zero() {
                    return false;
                }
                // the two halves of a free variable always pair up; that is not a second optimum
                !self.var_cols.iter().any(|&(p, n)| match n {
                    Some(n) => (j == p && basic.contains(&n)) || (j == n && basic.contains(&p)),
                    None => false,
                })
            })
            .collect()
    }

    /// Whether raising nonbasic column `j` is blocked at once by a degenerate row.
    fn admits_positive_step(&self, j: usize) -> bool {
        let rhs = self.rhs_col();
        self.rows.iter().all(|r| !(r[rhs].is_zero() && r[j].is_positive()))
    }
}

/// Outcome of maximizing the common slack added to a set of strict inequalities.
#[derive(Clone, Debug, PartialEq)]
pub enum Margin {
    /// The weak relaxation is already infeasible.
    Infeasible,
    Finite { margin: Rat, witness: Vec<Rat> },
    /// The margin grows without bound along `ray` from `witness`.
    Unbounded { witness: Vec<Rat>, ray: Vec<Rat> },
}

impl Margin {
    /// Whether the strict system has a solution (margin strictly positive).
    pub fn is_strictly_feasible(&self) -> bool {
        match self {
            Margin::Infeasible => false,
            Margin::Finite { margin, .. } => margin.is_positive(),
            Margin::Unbounded { .. } => true,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Margin::Finite { margin, .. } if margin.is_zero())
    }
}

/// A system over free variables: equalities, weak `≤` rows, and strict `<` rows.
#[derive(Clone, Debug, Default)]
pub struct StrictSystem {
    pub num_vars: usize,
    pub equalities: Vec<(Vec<Rat>, Rat)>,
    pub weak: Vec<(Vec<Rat>, Rat)>,
    pub strict: Vec<(Vec<Rat>, Rat)>,
}

impl StrictSystem {
    pub fn new(num_vars: usize) -> Self {
        StrictSystem { num_vars, ..Default::default() }
    }
}

/// Maximize `s` subject to the weak rows and `a·x + s ≤ b` for each strict row.
/// The strict system is solvable iff the result is positive (or unbounded).
pub fn strict_feasibility_margin(sys: &StrictSystem) -> Result<Margin> {
    let n = sys.num_vars;
    if let Some(m) = margin_at_forced_point(sys)? {
        return Ok(m);
    }
    let mut lp = LinearProgram::new(n + 1);
    lp.set_all_free();
    let mut obj = vec![Rat::zero(); n + 1];
    obj[n] = Rat::one();
    lp.maximize(obj)?;
    let widen = |row: &[Rat], s: Rat| -> Result<Vec<Rat>> {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        let mut r = row.to_vec();
        r.push(s);
        Ok(r)
    };
    for (row, rhs) in &sys.equalities {
        lp.add_eq(widen(row, Rat::zero())?, rhs.clone())?;
    }
    for (row, rhs) in &sys.weak {
        lp.add_le(widen(row, Rat::zero())?, rhs.clone())?;
    }
    for (row, rhs) in &sys.strict {
        lp.add_le(widen(row, Rat::one())?, rhs.clone())?;
    }
    let sol = solve_to_vertex(&lp);
    Ok(match sol.status {
        LpStatus::Infeasible => Margin::Infeasible,
        LpStatus::Optimal => Margin::Finite {
            margin: sol.point[n].clone(),
            witness: sol.point[..n].to_vec(),
        },
        LpStatus::Unbounded => {
            let ray = sol.ray.expect("unbounded solution carries a ray");
            Margin::Unbounded { witness: sol.point[..n].to_vec(), ray: ray[..n].to_vec() }
        }
    })
}

/// When the equalities pin down a single point, the margin is the least strict
/// slack there; no simplex run is needed.
fn margin_at_forced_point(sys: &StrictSystem) -> Result<Option<Margin>> {
    let n = sys.num_vars;
    if sys.equalities.len() < n {
        return Ok(None);
    }
    for (row, _) in sys.equalities.iter().chain(&sys.weak).chain(&sys.strict) {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
    }
    let mut aug: Vec<Vec<Rat>> = sys
        .equalities
        .iter()
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = num::row_reduce(&mut aug);
    if pivots.contains(&n) {
        return Ok(Some(Margin::Infeasible));
    }
    if pivots.len() < n {
        return Ok(None);
    }
    let v: Vec<Rat> = aug.iter().map(|r| r[n].clone()).collect();
    if sys.weak.iter().any(|(row, rhs)| &num::dot(row, &v) > rhs) {
        return Ok(Some(Margin::Infeasible));
    }
    Ok(Some(match sys.strict.iter().map(|(row, rhs)| rhs - num::dot(row, &v)).min() {
        Some(margin) => Margin::Finite { margin, witness: v },
        None => Margin::Unbounded { witness: v, ray: vec![Rat::zero(); n] },
    }))
}

/// Extent `(t_min, t_max)` of the chord `{z + t·d}` through `Σ scalarᵢ·Pᵢ`, found by
/// optimizing `±t` over convex weights without an explicit H-representation.
pub fn chord_extent(
    polys: &[Polytope],
    scalars: &[Rat],
    z: &RationalPoint,
    d: &[Rat],
) -> Result<(Rat, Rat)> {
    let n = z.dim();
    if d.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.len() });
    }
    if d.iter().all(Zero::is_zero) {
        return Err(Error::InvalidInput("zero chord direction".into()));
    }
    let mut lp = membership_program(polys, scalars, z, 1)?;
    let t = lp.num_vars() - 1;
    lp.set_bound(t, VarBound::Free);
    // coupling rows carry the -t·d term in the last column
    for (i, row) in lp.eq_rows.iter_mut().take(n).enumerate() {
        row[t] = -d[i].clone();
    }
    let mut obj = vec![Rat::zero(); lp.num_vars()];
    obj[t] = Rat::one();
    lp.maximize(obj.clone())?;
    let hi = solve_to_vertex(&lp);
    obj[t] = -Rat::one();
    lp.maximize(obj)?;
    let lo = solve_to_vertex(&lp);
    match (hi.status, lo.status) {
        (LpStatus::Optimal, LpStatus::Optimal) => {
            Ok((lo.point[t].clone(), hi.point[t].clone()))
        }
        (LpStatus::Infeasible, _) | (_, LpStatus::Infeasible) => Err(Error::NotInMinkowskiSum),
        _ => Err(Error::Lp("unbounded chord in a bounded polytope".into())),
    }
}

/// Convex-weight program `Σᵢ scalarᵢ Σⱼ w_ij v_ij = z`, `Σⱼ w_ij = 1` for each `i`,
/// with `extra` additional nonnegative columns appended (zero in every row).
pub(crate) fn membership_program(
    polys: &[Polytope],
    scalars: &[Rat],
    z: &RationalPoint,
    extra: usize,
) -> Result<LinearProgram> {
    if polys.is_empty() {
        return Err(Error::InvalidInput("no polytopes".into()));
    }
    if polys.len() != scalars.len() {
        return Err(Error::DimensionMismatch { expected: polys.len(), got: scalars.len() });
    }
    let n = z.dim();
    let counts: Vec<usize> = polys.iter().map(|p| p.vertices().len()).collect();
    let nw: usize = counts.iter().sum();
    let mut lp = LinearProgram::new(nw + extra);
    for c in 0..n {
        let mut row = Vec::with_capacity(nw + extra);
        for (p, lam) in polys.iter().zip(scalars) {
            if p.ambient_dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.ambient_dim() });
            }
            row.extend(p.vertices().iter().map(|v| lam * &v[c]));
        }
        row.resize(nw + extra, Rat::zero());
        lp.add_eq(row, z[c].clone())?;
    }
    let mut offset = 0;
    for &cnt in &counts {
        let mut row = vec![Rat::zero(); nw + extra];
        row[offset..offset + cnt].iter_mut().for_each(|x| *x = Rat::one());
        lp.add_eq(row, Rat::one())?;
        offset += cnt;
    }
    Ok(lp)
}
