//! Vertex-represented convex polytopes, unions thereof, and the dense
//! two-phase simplex kernel that answers every membership question here.

use crate::{Error, Result, EPS_ACT, TOL_LP, TOL_MEMBER, TOL_VERTEX};

/// Convex hull of a finite vertex list, stored as the (deduplicated)
/// list itself. Redundant interior vertices are allowed; membership
/// LPs are insensitive to them.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn singleton(p: Vec<f64>) -> Polytope {
        Polytope {
            dim: p.len(),
            vertices: vec![p],
        }
    }

    pub fn scale(&self, t: f64) -> Polytope {
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|x| t * x).collect())
            .collect();
        hull_owned(self.dim, vertices)
    }

    pub fn negate(&self) -> Polytope {
        self.scale(-1.0)
    }

    pub fn translate(&self, d: &[f64]) -> Polytope {
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(d).map(|(x, y)| x + y).collect())
            .collect();
        Polytope {
            dim: self.dim,
            vertices,
        }
    }

    /// Image under a linear map given by `rows` (each row one output
    /// coordinate).
    pub fn linear_image(&self, rows: &[Vec<f64>]) -> Polytope {
        let vertices: Vec<Vec<f64>> = self
            .vertices
            .iter()
            .map(|v| rows.iter().map(|r| dot(r, v)).collect())
            .collect();
        hull_owned(rows.len(), vertices)
    }

    pub fn minkowski_sum(&self, other: &Polytope) -> Polytope {
        let mut vertices = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                vertices.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
            }
        }
        hull_owned(self.dim, vertices)
    }
}

/// Finite union of convex polytopes sharing one ambient dimension.
/// No convexity is implied across members.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyUnion {
    pub parts: Vec<Polytope>,
}

impl PolyUnion {
    pub fn new(parts: Vec<Polytope>) -> Result<PolyUnion> {
        if parts.is_empty() {
            return Err(Error::Empty("polytope union".into()));
        }
        let d = parts[0].dim;
        if parts.iter().any(|p| p.dim != d) {
            return Err(Error::Dimension("union members differ in dimension".into()));
        }
        Ok(PolyUnion { parts })
    }

    pub fn singleton(p: Vec<f64>) -> PolyUnion {
        PolyUnion {
            parts: vec![Polytope::singleton(p)],
        }
    }

    pub fn dim(&self) -> usize {
        self.parts[0].dim
    }

    pub fn scale(&self, t: f64) -> PolyUnion {
        PolyUnion {
            parts: self.parts.iter().map(|p| p.scale(t)).collect(),
        }
    }

    pub fn linear_image(&self, rows: &[Vec<f64>]) -> PolyUnion {
        PolyUnion {
            parts: self.parts.iter().map(|p| p.linear_image(rows)).collect(),
        }
    }

    pub fn minkowski_sum(&self, other: &PolyUnion) -> PolyUnion {
        let mut parts = Vec::with_capacity(self.parts.len() * other.parts.len());
        for a in &self.parts {
            for b in &other.parts {
                parts.push(a.minkowski_sum(b));
            }
        }
        PolyUnion { parts }
    }

    /// Convex hull of the whole union, collapsed into one polytope.
    pub fn hull(&self) -> Polytope {
        let mut vs = Vec::new();
        for p in &self.parts {
            vs.extend(p.vertices.iter().cloned());
        }
        hull_owned(self.dim(), vs)
    }

    /// All vertices of all parts, deduplicated.
    pub fn vertex_set(&self) -> Vec<Vec<f64>> {
        self.hull().vertices // hull_owned only dedups, never drops
    }

    pub fn is_singleton(&self) -> bool {
        self.parts.len() == 1 && self.parts[0].vertices.len() == 1
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn hull_owned(dim: usize, points: Vec<Vec<f64>>) -> Polytope {
    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        debug_assert_eq!(p.len(), dim);
        let dup = vertices
            .iter()
            .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= TOL_VERTEX));
        if !dup {
            vertices.push(p);
        }
    }
    Polytope { dim, vertices }
}

/// conv(points): deduplicates under 1e-10, retains redundant interior
/// points (membership is LP-decided and insensitive to redundancy).
pub fn hull(points: &[Vec<f64>]) -> Result<Polytope> {
    if points.is_empty() {
        return Err(Error::Empty("hull of no points".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension("hull points differ in dimension".into()));
    }
    Ok(hull_owned(dim, points.to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Feasible,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpWitness {
    pub status: LpStatus,
    /// Values of the structural variables.
    pub weights: Vec<f64>,
    /// Phase-2 objective value (phase-1 residual when infeasible).
    pub objective: f64,
}

/// Standard-form LP: minimize c'w subject to A w = b, w >= 0.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

const MAX_ITERS: usize = 1_000_000;

/// Two-phase dense primal simplex with Bland's anti-cycling rule.
/// Deterministic pivot order; feasibility tolerance 1e-9.
pub fn lp_solve(lp: &StandardLp) -> Result<LpWitness> {
    let m = lp.a.len();
    let n = lp.c.len();
    for (i, row) in lp.a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension(format!("LP row {i} has wrong length")));
        }
    }
    if lp.b.len() != m {
        return Err(Error::Dimension("LP rhs length".into()));
    }

    // tableau: m rows of n structural + m artificial columns, plus rhs
    let total = n + m;
    let mut t = vec![vec![0.0f64; total + 1]; m];
    for i in 0..m {
        let flip = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, tij) in t[i].iter_mut().enumerate().take(n) {
            *tij = flip * lp.a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][total] = flip * lp.b[i];
    }
    let mut basis: Vec<usize> = (n..total).collect();

    let mut iters = 0usize;
    // phase 1: minimize the sum of artificials
    let phase1_cost = |j: usize| if j >= n { 1.0 } else { 0.0 };
    simplex(&mut t, &mut basis, &phase1_cost, n, &mut iters)?;
    let residual: f64 = basis
        .iter()
        .enumerate()
        .map(|(i, &j)| if j >= n { t[i][total] } else { 0.0 })
        .sum();
    if residual > TOL_MEMBER {
        return Ok(LpWitness {
            status: LpStatus::Infeasible,
            weights: solution(&t, &basis, n),
            objective: residual,
        });
    }
    // drive remaining artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > TOL_LP) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // phase 2 (skipped when the objective is identically zero)
    if lp.c.iter().any(|&cj| cj != 0.0) {
        let cost = |j: usize| if j < n { lp.c[j] } else { 0.0 };
        let bounded = simplex(&mut t, &mut basis, &cost, n, &mut iters)?;
        if !bounded {
            return Ok(LpWitness {
                status: LpStatus::Unbounded,
                weights: solution(&t, &basis, n),
                objective: f64::NEG_INFINITY,
            });
        }
    }
    let w = solution(&t, &basis, n);
    let obj = dot(&lp.c, &w);
    Ok(LpWitness {
        status: LpStatus::Feasible,
        weights: w,
        objective: obj,
    })
}

fn solution(t: &[Vec<f64>], basis: &[usize], n: usize) -> Vec<f64> {
    let total = t.first().map_or(0, |r| r.len() - 1);
    let mut w = vec![0.0; n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            w[j] = t[i][total];
        }
    }
    w
}

/// Runs simplex iterations minimizing `cost`; artificial columns are
/// blocked from re-entering once phase 1 is done (entering is capped
/// at `n` during phase 2 by giving artificials +1 cost in phase 1 and
/// by the caller's cost being 0 on them in phase 2 -- a 0-cost
/// artificial never has a negative reduced cost after it left the
/// basis, so no explicit blocking is required beyond Bland order).
/// Returns false when unbounded.
fn simplex<C: Fn(usize) -> f64>(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &C,
    n_structural: usize,
    iters: &mut usize,
) -> Result<bool> {
    let m = t.len();
    if m == 0 {
        return Ok(true);
    }
    let total = t[0].len() - 1;
    loop {
        *iters += 1;
        if *iters > MAX_ITERS {
            return Err(Error::IterationCap(MAX_ITERS));
        }
        // reduced costs: c_j - c_B' B^-1 A_j, computed from the tableau
        let mut entering = None;
        #[allow(clippy::needless_range_loop)] // Bland's rule needs the column index
        for j in 0..total {
            if basis.contains(&j) {
                continue;
            }
            // never re-admit artificials once they carry zero cost
            if j >= n_structural && cost(j) == 0.0 {
                continue;
            }
            let mut rc = cost(j);
            for i in 0..m {
                rc -= cost(basis[i]) * t[i][j];
            }
            if rc < -TOL_LP {
                entering = Some(j); // Bland: lowest index
                break;
            }
        }
        let Some(j) = entering else { return Ok(true) };
        // ratio test; ties broken by lowest basic-variable index (Bland)
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][j] > TOL_LP {
                let ratio = t[i][total] / t[i][j];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-15
                            || ((ratio - lr).abs() <= 1e-15 && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leave else {
            return Ok(false);
        };
        pivot(t, basis, i, j);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let m = t.len();
    let total = t[0].len() - 1;
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    for i in 0..m {
        if i != row {
            let f = t[i][col];
            if f != 0.0 {
                let pivot_row = t[row].clone();
                for (tij, pj) in t[i].iter_mut().zip(&pivot_row).take(total + 1) {
                    *tij -= f * pj;
                }
            }
        }
    }
    basis[row] = col;
}

/// True iff `p` is a convex combination of the polytope's vertices
/// within `tol` (LP feasibility with an l1 residual read-off).
pub fn point_in_polytope(p: &[f64], poly: &Polytope, tol: f64) -> Result<bool> {
    if p.len() != poly.dim {
        return Err(Error::Dimension("membership query dimension".into()));
    }
    Ok(membership_residual(p, poly)? <= tol)
}

/// l1-optimal residual of expressing p as a convex combination of the
/// vertices (0 when p is a member).
pub fn membership_residual(p: &[f64], poly: &Polytope) -> Result<f64> {
    let sets = [(1.0, poly)];
    let (res, _) = zero_in_scaled_sum(&sets, &negated(p))?;
    Ok(res)
}

fn negated(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| -x).collect()
}

/// Decides 0 in offset + sum_s scale_s * conv(V_s) by LP; returns the
/// phase-1 l1 residual and the convex weights per set (concatenated).
/// Sets with zero scale are skipped.
pub fn zero_in_scaled_sum(
    sets: &[(f64, &Polytope)],
    offset: &[f64],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let dim = offset.len();
    let active: Vec<&(f64, &Polytope)> = sets.iter().filter(|(s, _)| s.abs() > 0.0).collect();
    for (_, p) in &active {
        if p.dim != dim {
            return Err(Error::Dimension("scaled-sum dimension".into()));
        }
    }
    let nvars: usize = active.iter().map(|(_, p)| p.vertices.len()).sum();
    if nvars == 0 {
        let res = offset.iter().map(|x| x.abs()).sum();
        return Ok((res, sets.iter().map(|_| Vec::new()).collect()));
    }
    // rows: dim balance rows + one convexity row per active set
    let m = dim + active.len();
    let mut a = vec![vec![0.0; nvars]; m];
    let mut b = vec![0.0; m];
    for d in 0..dim {
        b[d] = -offset[d];
    }
    let mut col = 0;
    for (si, (scale, poly)) in active.iter().enumerate() {
        for v in &poly.vertices {
            for d in 0..dim {
                a[d][col] = scale * v[d];
            }
            a[dim + si][col] = 1.0;
            col += 1;
        }
        b[dim + si] = 1.0;
    }
    let lp = StandardLp {
        a,
        b,
        c: vec![0.0; nvars],
    };
    let w = lp_solve(&lp)?;
    let residual = match w.status {
        LpStatus::Feasible => 0.0,
        _ => w.objective,
    };
    // split weights back per input set (empty for skipped sets)
    let mut out = Vec::with_capacity(sets.len());
    let mut col = 0;
    for (scale, poly) in sets {
        if scale.abs() > 0.0 {
            out.push(w.weights[col..col + poly.vertices.len()].to_vec());
            col += poly.vertices.len();
        } else {
            out.push(Vec::new());
        }
    }
    Ok((residual, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// sum(lambda) + sum(mu) = 1 (Fritz-John search)
    AllWeights,
    /// sum(lambda) = 1 (KKT search, forces a nonzero objective vector)
    ObjWeights,
}

#[derive(Debug, Clone)]
pub struct WeightedSumWitness {
    pub status: LpStatus,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// raw per-vertex weights (objective blocks then constraint blocks)
    pub weights: Vec<f64>,
    pub residual: f64,
}

/// Decides 0 in sum_k lambda_k P_k + sum_i mu_i Q_i with lambda, mu >= 0
/// under the requested normalization, substituting per-vertex weights
/// alpha_kj >= 0 with sum_j alpha_kj = lambda_k (likewise beta for Q).
/// `force_zero` lists constraint indices whose mu is pinned to zero
/// (complementarity for inactive constraints).
pub fn zero_in_weighted_sum(
    obj_terms: &[Polytope],
    con_terms: &[Polytope],
    force_zero: &[usize],
    normalization: Normalization,
) -> Result<WeightedSumWitness> {
    if obj_terms.is_empty() {
        return Err(Error::Empty("no objective terms".into()));
    }
    let dim = obj_terms[0].dim;
    if obj_terms.iter().chain(con_terms).any(|p| p.dim != dim) {
        return Err(Error::Dimension("weighted-sum ambient dimension".into()));
    }
    let active_con: Vec<usize> = (0..con_terms.len())
        .filter(|i| !force_zero.contains(i))
        .collect();
    let nobj: usize = obj_terms.iter().map(|p| p.vertices.len()).sum();
    let ncon: usize = active_con
        .iter()
        .map(|&i| con_terms[i].vertices.len())
        .sum();
    let nvars = nobj + ncon;
    let m = dim + 1;
    let mut a = vec![vec![0.0; nvars]; m];
    let mut b = vec![0.0; m];
    b[dim] = 1.0;
    let mut col = 0;
    for p in obj_terms {
        for v in &p.vertices {
            for d in 0..dim {
                a[d][col] = v[d];
            }
            a[dim][col] = 1.0; // always in the normalization row
            col += 1;
        }
    }
    for &i in &active_con {
        for v in &con_terms[i].vertices {
            for d in 0..dim {
                a[d][col] = v[d];
            }
            a[dim][col] = match normalization {
                Normalization::AllWeights => 1.0,
                Normalization::ObjWeights => 0.0,
            };
            col += 1;
        }
    }
    let lp = StandardLp {
        a,
        b,
        c: vec![0.0; nvars],
    };
    let w = lp_solve(&lp)?;
    let mut lambda = vec![0.0; obj_terms.len()];
    let mut mu = vec![0.0; con_terms.len()];
    if w.status == LpStatus::Feasible {
        let mut col = 0;
        for (k, p) in obj_terms.iter().enumerate() {
            lambda[k] = w.weights[col..col + p.vertices.len()].iter().sum();
            col += p.vertices.len();
        }
        for &i in &active_con {
            mu[i] = w.weights[col..col + con_terms[i].vertices.len()]
                .iter()
                .sum();
            col += con_terms[i].vertices.len();
        }
    }
    let residual = match w.status {
        LpStatus::Feasible => 0.0,
        _ => w.objective,
    };
    Ok(WeightedSumWitness {
        status: w.status,
        lambda,
        mu,
        weights: w.weights,
        residual,
    })
}

/// Set equality of two polytopes via mutual vertex membership
/// (insensitive to redundant vertices on either side).
pub fn poly_eq(a: &Polytope, b: &Polytope, tol: f64) -> Result<bool> {
    for v in &a.vertices {
        if !point_in_polytope(v, b, tol)? {
            return Ok(false);
        }
    }
    for v in &b.vertices {
        if !point_in_polytope(v, a, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Multiset equality of two vertex lists within `tol` (bijective
/// nearest matching).
pub fn vertex_set_eq(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for p in a {
        for (j, q) in b.iter().enumerate() {
            if !used[j] && p.iter().zip(q).all(|(x, y)| (x - y).abs() <= tol) {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Active-branch helper shared by max rules: indices attaining the
/// maximum within EPS_ACT.
pub fn argmax_within(values: &[f64], eps: f64) -> Vec<usize> {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= best - eps)
        .map(|(i, _)| i)
        .collect()
}

pub fn default_argmax(values: &[f64]) -> Vec<usize> {
    argmax_within(values, EPS_ACT)
}
