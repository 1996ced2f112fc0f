//! Calculus engine composing primitive subdifferentials through chain,
//! sum and max rules, producing unions of polytopes in x-space. The
//! result is the exact limiting subdifferential on the separable /
//! affine-inner structures the worked problems use, and a sound outer
//! estimate otherwise (tracked by the exactness flag).

use crate::expr::{unit_ball_2d, Expr, BALL_RESOLUTION};
use crate::polyset::{hull, PolyUnion, Polytope};
use crate::{Error, Result, EPS_ACT, TOL_KINK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Exact,
    OuterEstimate,
}

impl Exactness {
    fn meet(self, other: Exactness) -> Exactness {
        if self == Exactness::Exact && other == Exactness::Exact {
            Exactness::Exact
        } else {
            Exactness::OuterEstimate
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubdiffResult {
    pub set: PolyUnion,
    pub exactness: Exactness,
    /// Names of the calculus rules applied, outermost last.
    pub trace: Vec<&'static str>,
}

impl SubdiffResult {
    fn exact(set: PolyUnion, rule: &'static str) -> SubdiffResult {
        SubdiffResult {
            set,
            exactness: Exactness::Exact,
            trace: vec![rule],
        }
    }

    fn singleton(p: Vec<f64>, rule: &'static str) -> SubdiffResult {
        SubdiffResult::exact(PolyUnion::singleton(p), rule)
    }

    fn push(mut self, rule: &'static str) -> SubdiffResult {
        if !self.trace.contains(&rule) {
            self.trace.push(rule);
        }
        self
    }

    fn scaled(mut self, t: f64, rule: &'static str) -> SubdiffResult {
        self.set = self.set.scale(t);
        self.push(rule)
    }

    pub fn is_smooth_point(&self) -> bool {
        self.set.is_singleton()
    }
}

fn merge_traces(results: &[&SubdiffResult], extra: &'static str) -> Vec<&'static str> {
    let mut trace = Vec::new();
    for r in results {
        for name in &r.trace {
            if !trace.contains(name) {
                trace.push(*name);
            }
        }
    }
    if !trace.contains(&extra) {
        trace.push(extra);
    }
    trace
}

/// Affine structure of `e` in x for fixed v: value(x) = J x + c.
/// None when `e` is not affine in x.
fn linearize(e: &Expr, v: &[f64], nx: usize) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    if !e.depends_on_x() {
        let c = e.eval(&vec![0.0; nx], v).into_vec();
        return Some((vec![vec![0.0; nx]; c.len()], c));
    }
    match e {
        Expr::VarX(idx) => {
            let mut j = vec![vec![0.0; nx]; idx.len()];
            for (r, &i) in idx.iter().enumerate() {
                j[r][i] = 1.0;
            }
            Some((j, vec![0.0; idx.len()]))
        }
        Expr::Affine { a, b, arg } => {
            let (ji, ci) = linearize(arg, v, nx)?;
            let rows = a.len();
            let mut j = vec![vec![0.0; nx]; rows];
            let mut c = b.clone();
            for r in 0..rows {
                for (k, &ark) in a[r].iter().enumerate() {
                    c[r] += ark * ci[k];
                    for col in 0..nx {
                        j[r][col] += ark * ji[k][col];
                    }
                }
            }
            Some((j, c))
        }
        Expr::Scale { t, arg } => {
            let (mut j, mut c) = linearize(arg, v, nx)?;
            for row in &mut j {
                for x in row {
                    *x *= t;
                }
            }
            for x in &mut c {
                *x *= t;
            }
            Some((j, c))
        }
        Expr::VScale { coeff, arg } => {
            let t = coeff.eval(&[], v).scalar().ok()?;
            let (mut j, mut c) = linearize(arg, v, nx)?;
            for row in &mut j {
                for x in row {
                    *x *= t;
                }
            }
            for x in &mut c {
                *x *= t;
            }
            Some((j, c))
        }
        Expr::Negate(arg) => {
            let (mut j, mut c) = linearize(arg, v, nx)?;
            for row in &mut j {
                for x in row {
                    *x = -*x;
                }
            }
            for x in &mut c {
                *x = -*x;
            }
            Some((j, c))
        }
        Expr::Sum(es) => {
            let (mut j, mut c) = linearize(&es[0], v, nx)?;
            for e in &es[1..] {
                let (je, ce) = linearize(e, v, nx)?;
                for (jr, jer) in j.iter_mut().zip(&je) {
                    for (a, b) in jr.iter_mut().zip(jer) {
                        *a += b;
                    }
                }
                for (a, b) in c.iter_mut().zip(&ce) {
                    *a += b;
                }
            }
            Some((j, c))
        }
        Expr::Tuple(es) => {
            let mut j = Vec::new();
            let mut c = Vec::new();
            for e in es {
                let (je, ce) = linearize(e, v, nx)?;
                j.extend(je);
                c.extend(ce);
            }
            Some((j, c))
        }
        Expr::Compose { outer, inner } => {
            let (ji, ci) = linearize(inner, v, nx)?;
            let ny = ji.len();
            let (jo, co) = linearize(outer, &[], ny)?;
            let rows = jo.len();
            let mut j = vec![vec![0.0; nx]; rows];
            let mut c = co;
            for r in 0..rows {
                for k in 0..ny {
                    c[r] += jo[r][k] * ci[k];
                    for col in 0..nx {
                        j[r][col] += jo[r][k] * ji[k][col];
                    }
                }
            }
            Some((j, c))
        }
        _ => None,
    }
}

/// Segment conv{lo * g, hi * g} in R^nx for a gradient row g.
fn weighted_segment(lo: f64, hi: f64, g: &[f64]) -> Result<Polytope> {
    let a: Vec<f64> = g.iter().map(|x| lo * x).collect();
    let b: Vec<f64> = g.iter().map(|x| hi * x).collect();
    hull(&[a, b])
}

/// Limiting subdifferential of the scalar expression `e` with respect
/// to x at (x, v); `nx` is the ambient decision dimension.
pub fn subdiff(e: &Expr, x: &[f64], v: &[f64], nx: usize) -> Result<SubdiffResult> {
    if e.out_dim(nx, v.len())? != 1 {
        return Err(Error::Dimension(
            "subdiff needs a scalar expression (scalarize first)".into(),
        ));
    }
    subdiff_scalar(e, x, v, nx)
}

fn subdiff_scalar(e: &Expr, x: &[f64], v: &[f64], nx: usize) -> Result<SubdiffResult> {
    if !e.depends_on_x() {
        return Ok(SubdiffResult::singleton(vec![0.0; nx], "constant"));
    }
    match e {
        Expr::VarX(idx) => {
            let mut g = vec![0.0; nx];
            g[idx[0]] = 1.0;
            Ok(SubdiffResult::singleton(g, "coordinate"))
        }
        Expr::Const(_) | Expr::VarV(_) => unreachable!("x-free handled above"),
        Expr::Affine { a, arg, .. } => {
            wsubdiff(&a[0], arg, x, v, nx).map(|r| r.push("affine-chain"))
        }
        Expr::Scale { t, arg } => Ok(subdiff_scalar(arg, x, v, nx)?.scaled(*t, "scale")),
        Expr::VScale { coeff, arg } => {
            let c = coeff.eval(&[], v).scalar()?;
            Ok(subdiff_scalar(arg, x, v, nx)?.scaled(c, "uncertainty-scale"))
        }
        Expr::Negate(arg) => Ok(subdiff_scalar(arg, x, v, nx)?.scaled(-1.0, "negate")),
        Expr::Sum(es) => {
            let parts = es
                .iter()
                .map(|m| subdiff_scalar(m, x, v, nx))
                .collect::<Result<Vec<_>>>()?;
            sum_rule(&parts, es, nx)
        }
        Expr::Abs(arg) => {
            let t = arg.eval(x, v).scalar()?;
            if t.abs() > TOL_KINK {
                Ok(subdiff_scalar(arg, x, v, nx)?.scaled(t.signum(), "smooth-abs-chain"))
            } else {
                kinked_scalar_outer(arg, -1.0, 1.0, x, v, nx, "abs-kink")
            }
        }
        Expr::SmoothFn { kind, arg } => {
            let t = arg.eval(x, v).scalar()?;
            if !kind.has_kink() || t.abs() > TOL_KINK {
                Ok(subdiff_scalar(arg, x, v, nx)?.scaled(kind.deriv(t), "smooth-chain"))
            } else {
                let (lo, hi) = kind.kink_interval();
                kinked_scalar_outer(arg, lo, hi, x, v, nx, "catalog-kink")
            }
        }
        Expr::Norm(arg) => {
            let u = arg.eval(x, v).into_vec();
            let n: f64 = u.iter().map(|y| y * y).sum::<f64>().sqrt();
            if n > TOL_KINK {
                let w: Vec<f64> = u.iter().map(|y| y / n).collect();
                wsubdiff(&w, arg, x, v, nx).map(|r| r.push("norm-gradient-chain"))
            } else {
                norm_kink(arg, 1.0, x, v, nx)
            }
        }
        Expr::NormPower {
            alpha,
            beta,
            center,
            arg,
        } => {
            let u = arg.eval(x, v).into_vec();
            let w: Vec<f64> = u.iter().zip(center).map(|(y, c)| y - c).collect();
            let n: f64 = w.iter().map(|y| y * y).sum::<f64>().sqrt();
            if n > TOL_KINK {
                let s = alpha * beta * n.powf(beta - 2.0);
                let wv: Vec<f64> = w.iter().map(|y| s * y).collect();
                wsubdiff(&wv, arg, x, v, nx).map(|r| r.push("norm-power-chain"))
            } else if *beta > 1.0 {
                Ok(SubdiffResult::singleton(
                    vec![0.0; nx],
                    "norm-power-smooth-origin",
                ))
            } else {
                norm_kink(arg, *alpha, x, v, nx)
            }
        }
        Expr::Max(es) => {
            let vals: Vec<f64> = es
                .iter()
                .map(|b| b.eval(x, v).scalar())
                .collect::<Result<Vec<_>>>()?;
            let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let active: Vec<usize> = (0..es.len())
                .filter(|&i| vals[i] >= best - EPS_ACT)
                .collect();
            if active.len() == 1 {
                return Ok(subdiff_scalar(&es[active[0]], x, v, nx)?.push("max-single-active"));
            }
            let branches = active
                .iter()
                .map(|&i| subdiff_scalar(&es[i], x, v, nx))
                .collect::<Result<Vec<_>>>()?;
            let mut vs = Vec::new();
            for b in &branches {
                vs.extend(b.set.vertex_set());
            }
            let hulled = hull(&vs)?;
            let mut exact = branches
                .iter()
                .fold(Exactness::Exact, |acc, b| acc.meet(b.exactness));
            if !active.iter().all(|&i| es[i].is_convex_in_x(v)) {
                exact = Exactness::OuterEstimate;
            }
            let refs: Vec<&SubdiffResult> = branches.iter().collect();
            Ok(SubdiffResult {
                set: PolyUnion {
                    parts: vec![hulled],
                },
                exactness: exact,
                trace: merge_traces(&refs, "max-rule"),
            })
        }
        Expr::Compose { outer, inner } => {
            let y = inner.eval(x, v).into_vec();
            let outer_sd = subdiff_scalar(outer, &y, &[], y.len())?;
            if let Some((j, _)) = linearize(inner, v, nx) {
                // transpose image: vertex g -> J' g
                let jt: Vec<Vec<f64>> = (0..nx)
                    .map(|c| j.iter().map(|row| row[c]).collect())
                    .collect();
                let set = outer_sd.set.linear_image(&jt);
                Ok(SubdiffResult {
                    set,
                    exactness: outer_sd.exactness,
                    trace: merge_traces(&[&outer_sd], "affine-inner-chain"),
                })
            } else {
                // union over the outer set's vertices of the scalarized
                // inner subdifferentials; an outer estimate of an outer
                // estimate.
                let mut parts = Vec::new();
                let mut results = Vec::new();
                for w in outer_sd.set.vertex_set() {
                    let r = wsubdiff(&w, inner, x, v, nx)?;
                    parts.extend(r.set.parts.clone());
                    results.push(r);
                }
                let refs: Vec<&SubdiffResult> = results.iter().collect();
                Ok(SubdiffResult {
                    set: PolyUnion::new(parts)?,
                    exactness: Exactness::OuterEstimate,
                    trace: merge_traces(&refs, "nonaffine-inner-chain"),
                })
            }
        }
        Expr::Tuple(_) => Err(Error::Dimension("subdiff of a vector expression".into())),
    }
}

/// Subdifferential at a scalar kink whose outer weight ranges over
/// [lo, hi]: exact weighted segment for affine arguments, hull of the
/// endpoint chains (flagged outer) otherwise.
fn kinked_scalar_outer(
    arg: &Expr,
    lo: f64,
    hi: f64,
    x: &[f64],
    v: &[f64],
    nx: usize,
    rule: &'static str,
) -> Result<SubdiffResult> {
    if let Some((j, _)) = linearize(arg, v, nx) {
        let seg = weighted_segment(lo, hi, &j[0])?;
        return Ok(SubdiffResult::exact(PolyUnion { parts: vec![seg] }, rule));
    }
    let a = subdiff_scalar(arg, x, v, nx)?;
    let mut vs = a.set.scale(lo).vertex_set();
    vs.extend(a.set.scale(hi).vertex_set());
    Ok(SubdiffResult {
        set: PolyUnion {
            parts: vec![hull(&vs)?],
        },
        exactness: Exactness::OuterEstimate,
        trace: merge_traces(&[&a], rule),
    })
}

/// alpha * ||arg(.)|| at a zero of the argument: image of the unit ball
/// under the transpose of the (required affine) inner map.
fn norm_kink(arg: &Expr, alpha: f64, _x: &[f64], v: &[f64], nx: usize) -> Result<SubdiffResult> {
    let Some((j, _)) = linearize(arg, v, nx) else {
        return Err(Error::Unsupported(
            "norm kink with a non-affine inner map".into(),
        ));
    };
    let m = j.len();
    let ball: Vec<Vec<f64>> = match m {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => unit_ball_2d(BALL_RESOLUTION),
        d => {
            return Err(Error::Unsupported(format!(
                "unit ball discretization in dimension {d}"
            )))
        }
    };
    let mut vs = Vec::with_capacity(ball.len());
    for y in &ball {
        let mut g = vec![0.0; nx];
        for (r, row) in j.iter().enumerate() {
            for (c, val) in row.iter().enumerate() {
                g[c] += alpha * y[r] * val;
            }
        }
        vs.push(g);
    }
    Ok(SubdiffResult::exact(
        PolyUnion {
            parts: vec![hull(&vs)?],
        },
        "norm-ball-kink",
    ))
}

/// d<w, e>/dx: scalarization of a (possibly vector-valued) expression.
fn wsubdiff(w: &[f64], e: &Expr, x: &[f64], v: &[f64], nx: usize) -> Result<SubdiffResult> {
    if let Some((j, _)) = linearize(e, v, nx) {
        let mut g = vec![0.0; nx];
        for (r, row) in j.iter().enumerate() {
            for (c, val) in row.iter().enumerate() {
                g[c] += w[r] * val;
            }
        }
        return Ok(SubdiffResult::singleton(g, "affine-scalarization"));
    }
    match e {
        Expr::Tuple(es) => {
            let parts = es
                .iter()
                .zip(w)
                .map(|(m, &wi)| Ok(subdiff_scalar(m, x, v, nx)?.scaled(wi, "scalarize-component")))
                .collect::<Result<Vec<_>>>()?;
            sum_rule(&parts, es, nx)
        }
        _ if w.len() == 1 => Ok(subdiff_scalar(e, x, v, nx)?.scaled(w[0], "scalar-weight")),
        _ => Err(Error::Unsupported(
            "scalarization of a non-affine vector expression".into(),
        )),
    }
}

/// Minkowski sum of member subdifferentials; exact when at most one
/// member is nonsmooth at the point or the nonsmooth members touch
/// pairwise disjoint x-coordinates.
fn sum_rule(parts: &[SubdiffResult], exprs: &[Expr], nx: usize) -> Result<SubdiffResult> {
    let mut acc = PolyUnion::singleton(vec![0.0; nx]);
    for p in parts {
        acc = acc.minkowski_sum(&p.set);
    }
    let mut exact = parts
        .iter()
        .fold(Exactness::Exact, |a, p| a.meet(p.exactness));
    let nonsmooth: Vec<usize> = (0..parts.len())
        .filter(|&i| !parts[i].set.is_singleton())
        .collect();
    if nonsmooth.len() > 1 {
        let mut supports: Vec<Vec<usize>> = Vec::new();
        for &i in &nonsmooth {
            let mut s = Vec::new();
            exprs[i].x_support(&mut s);
            supports.push(s);
        }
        let disjoint = supports.iter().enumerate().all(|(a, sa)| {
            supports
                .iter()
                .skip(a + 1)
                .all(|sb| sa.iter().all(|i| !sb.contains(i)))
        });
        if !disjoint {
            exact = Exactness::OuterEstimate;
        }
    }
    let refs: Vec<&SubdiffResult> = parts.iter().collect();
    Ok(SubdiffResult {
        set: acc,
        exactness: exact,
        trace: merge_traces(&refs, "sum-rule"),
    })
}

/// Minkowski sum of y*_k-scaled component subdifferentials (the
/// scalarization upper estimate); weights must be nonnegative,
/// zero-weight components contribute the zero singleton.
pub fn scalarized_subdiff(
    weights: &[f64],
    components: &[Expr],
    x: &[f64],
    nx: usize,
) -> Result<SubdiffResult> {
    if weights.len() != components.len() {
        return Err(Error::Dimension(
            "weights/components length mismatch".into(),
        ));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Invalid(
            "scalarization weights must be nonnegative".into(),
        ));
    }
    let mut parts = Vec::new();
    let mut active_exprs = Vec::new();
    for (w, c) in weights.iter().zip(components) {
        if *w > 0.0 {
            parts.push(subdiff(c, x, &[], nx)?.scaled(*w, "scalarize-weight"));
            active_exprs.push(c.clone());
        }
    }
    if parts.is_empty() {
        return Ok(SubdiffResult::singleton(
            vec![0.0; nx],
            "zero-scalarization",
        ));
    }
    sum_rule(&parts, &active_exprs, nx)
}

/// Number of sample points per axis when an aggregate must range over
/// the whole uncertainty interval (equality constraints).
const EQ_AGG_SAMPLES: usize = 33;

/// Hull of the union over active uncertainty values of the partial
/// subdifferentials in x of inequality constraint `i`.
pub fn constraint_agg_set(
    problem: &crate::robust::RobustProblem,
    i: usize,
    x: &[f64],
) -> Result<Polytope> {
    let c = problem
        .constraints
        .get(i)
        .ok_or_else(|| Error::Dimension(format!("no inequality constraint {i}")))?;
    let active = crate::robust::active_uncertainty(problem, i, x)?;
    if active.is_empty() {
        return Err(Error::Empty(format!(
            "constraint {i} has no active uncertainty at the point"
        )));
    }
    let nx = problem.nx();
    let mut vs = Vec::new();
    for v in &active {
        vs.extend(subdiff(&c.expr, x, v, nx)?.set.vertex_set());
    }
    hull(&vs)
}

/// Hull of the union of both-sign partial subdifferentials of equality
/// constraint `j` over a sweep of its whole uncertainty interval.
pub fn equality_agg_set(
    problem: &crate::robust::RobustProblem,
    j: usize,
    x: &[f64],
) -> Result<Polytope> {
    let c = problem
        .equalities
        .get(j)
        .ok_or_else(|| Error::Dimension(format!("no equality constraint {j}")))?;
    if c.set.dim() != 1 {
        return Err(Error::Unsupported(
            "equality uncertainty sets must be intervals".into(),
        ));
    }
    let nx = problem.nx();
    let (lo, hi) = (c.set.lo[0], c.set.hi[0]);
    let mut vs = Vec::new();
    for s in 0..EQ_AGG_SAMPLES {
        let t = if EQ_AGG_SAMPLES == 1 {
            lo
        } else {
            lo + (hi - lo) * s as f64 / (EQ_AGG_SAMPLES - 1) as f64
        };
        let r = subdiff(&c.expr, x, &[t], nx)?;
        vs.extend(r.set.vertex_set());
        vs.extend(r.set.scale(-1.0).vertex_set());
    }
    hull(&vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Smooth;
    use crate::polyset::vertex_set_eq;

    const SQ2: f64 = std::f64::consts::SQRT_2;

    fn vs(r: &SubdiffResult) -> Vec<Vec<f64>> {
        r.set.vertex_set()
    }

    #[test]
    fn objective_one_kink_product() {
        // -x1 + |x2 - 1| at (-1, 1) -> {-1} x [-1, 1]
        let e = Expr::Sum(vec![
            Expr::affine_x(&[-1.0, 0.0], 0.0),
            Expr::abs(Expr::affine_x(&[0.0, 1.0], -1.0)),
        ]);
        let r = subdiff(&e, &[-1.0, 1.0], &[], 2).unwrap();
        assert_eq!(r.exactness, Exactness::Exact);
        assert!(vertex_set_eq(
            &vs(&r),
            &[vec![-1.0, -1.0], vec![-1.0, 1.0]],
            1e-12
        ));
    }

    #[test]
    fn two_sided_kink_coefficient() {
        // 2|x1| - x2^2/8 + 1 at (0, -2) -> [-2, 2] x {1/2}
        let e = Expr::Sum(vec![
            Expr::scale(2.0, Expr::abs(Expr::x(0))),
            Expr::scale(-0.125, Expr::smooth(Smooth::Square, Expr::x(1))),
            Expr::cst(1.0),
        ]);
        let r = subdiff(&e, &[0.0, -2.0], &[], 2).unwrap();
        assert_eq!(r.exactness, Exactness::Exact);
        assert!(vertex_set_eq(
            &vs(&r),
            &[vec![-2.0, 0.5], vec![2.0, 0.5]],
            1e-12
        ));
    }

    #[test]
    fn separable_double_kink_stays_exact() {
        // 1/sqrt(|sqrt2 (x1+1)| + 1) - |x2 - 1| - 1 at (-1, 1)
        let e = Expr::Sum(vec![
            Expr::smooth(Smooth::InvSqrtShifted, Expr::affine_x(&[SQ2, 0.0], SQ2)),
            Expr::Negate(Box::new(Expr::abs(Expr::affine_x(&[0.0, 1.0], -1.0)))),
            Expr::cst(-1.0),
        ]);
        let r = subdiff(&e, &[-1.0, 1.0], &[], 2).unwrap();
        assert_eq!(r.exactness, Exactness::Exact);
        let expect = vec![
            vec![-SQ2 / 2.0, -1.0],
            vec![-SQ2 / 2.0, 1.0],
            vec![SQ2 / 2.0, -1.0],
            vec![SQ2 / 2.0, 1.0],
        ];
        assert!(vertex_set_eq(&vs(&r), &expect, 1e-12));
    }

    #[test]
    fn overlapping_kinks_flag_outer() {
        let e = Expr::Sum(vec![
            Expr::abs(Expr::x(0)),
            Expr::abs(Expr::affine_x(&[1.0, 1.0], 0.0)),
        ]);
        let r = subdiff(&e, &[0.0, 0.0], &[], 2).unwrap();
        assert_eq!(r.exactness, Exactness::OuterEstimate);
    }

    #[test]
    fn max_strict_winner_is_winner_subdiff() {
        let e = Expr::Max(vec![
            Expr::affine_x(&[1.0, 0.0], 0.0),
            Expr::affine_x(&[2.0, 0.0], -5.0),
        ]);
        let r = subdiff(&e, &[1.0, 0.0], &[], 2).unwrap();
        assert!(vertex_set_eq(&vs(&r), &[vec![1.0, 0.0]], 1e-12));
        assert!(r.trace.contains(&"max-single-active"));
    }

    #[test]
    fn max_tie_hulls_active_branches() {
        let e = Expr::Max(vec![
            Expr::affine_x(&[1.0, 0.0], 1.0),
            Expr::affine_x(&[2.0, 0.0], 2.0),
        ]);
        let r = subdiff(&e, &[-1.0, 7.0], &[], 2).unwrap();
        assert_eq!(r.exactness, Exactness::Exact);
        assert!(vertex_set_eq(
            &vs(&r),
            &[vec![1.0, 0.0], vec![2.0, 0.0]],
            1e-12
        ));
    }

    #[test]
    fn partial_in_x_ignores_v_terms() {
        // -3|x1 + 1| + v(4 x2 - 2) - 5 at ((-1, 1), v = 1)
        let e = Expr::Sum(vec![
            Expr::scale(-3.0, Expr::abs(Expr::affine_x(&[1.0, 0.0], 1.0))),
            Expr::vscale(Expr::v(0), Expr::affine_x(&[0.0, 4.0], -2.0)),
            Expr::cst(-5.0),
        ]);
        let r = subdiff(&e, &[-1.0, 1.0], &[1.0], 2).unwrap();
        assert!(vertex_set_eq(
            &vs(&r),
            &[vec![-3.0, 4.0], vec![3.0, 4.0]],
            1e-12
        ));
    }

    #[test]
    fn scalarized_zero_weights() {
        let comps = vec![Expr::abs(Expr::x(0)), Expr::affine_x(&[0.0, 1.0], 0.0)];
        let r = scalarized_subdiff(&[0.0, 0.0], &comps, &[0.0, 0.0], 2).unwrap();
        assert!(vertex_set_eq(&vs(&r), &[vec![0.0, 0.0]], 1e-12));
        let one = scalarized_subdiff(&[1.0, 0.0], &comps, &[0.0, 0.0], 2).unwrap();
        assert!(vertex_set_eq(
            &vs(&one),
            &[vec![-1.0, 0.0], vec![1.0, 0.0]],
            1e-12
        ));
        assert!(scalarized_subdiff(&[-1.0, 0.0], &comps, &[0.0, 0.0], 2).is_err());
    }

    #[test]
    fn nonneg_scaling_commutes() {
        let e = Expr::abs(Expr::affine_x(&[1.0, -2.0], 0.0));
        let r1 = subdiff(&Expr::scale(3.0, e.clone()), &[0.0, 0.0], &[], 2).unwrap();
        let r2 = subdiff(&e, &[0.0, 0.0], &[], 2).unwrap();
        assert!(vertex_set_eq(
            &vs(&r1),
            &r2.set.scale(3.0).vertex_set(),
            1e-12
        ));
    }

    #[test]
    fn compose_affine_inner_transpose_image() {
        // f(y) = |y1| + y2, inner y = (x2, 2 x1): d/dx = {(2u2, u1)}
        let outer = Expr::Sum(vec![
            Expr::abs(Expr::x(0)),
            Expr::affine_x(&[0.0, 1.0], 0.0),
        ]);
        let inner = Expr::linear_map_x(&[vec![0.0, 1.0], vec![2.0, 0.0]], &[0.0, 0.0]);
        let r = subdiff(&Expr::compose(outer, inner), &[1.0, 0.0], &[], 2).unwrap();
        assert_eq!(r.exactness, Exactness::Exact);
        assert!(vertex_set_eq(
            &vs(&r),
            &[vec![2.0, -1.0], vec![2.0, 1.0]],
            1e-12
        ));
    }

    #[test]
    fn vector_expression_rejected() {
        let e = Expr::Tuple(vec![Expr::x(0), Expr::x(1)]);
        assert!(subdiff(&e, &[0.0, 0.0], &[], 2).is_err());
    }
}
