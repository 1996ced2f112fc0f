//! Semi-infinite constraint machinery: worst-case constraint values
//! over box uncertainty sets, active uncertainty points, robust
//! feasibility, and deterministic feasible-region sampling.

use crate::expr::Expr;
use crate::{Error, Result, EPS_ACT};

/// Bracket width at which golden-section refinement stops.
const REFINE_TOL: f64 = 1e-10;
/// Merge radius for clustering refined maximizers.
const CLUSTER_TOL: f64 = 1e-6;

/// Box uncertainty set with a per-axis scan grid.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct UncertaintySet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: usize,
}

impl UncertaintySet {
    pub fn interval(lo: f64, hi: f64) -> UncertaintySet {
        UncertaintySet {
            lo: vec![lo],
            hi: vec![hi],
            resolution: 1001,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || self.lo.is_empty() {
            return Err(Error::Dimension(
                "uncertainty bounds length mismatch".into(),
            ));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| l > h) {
            return Err(Error::Invalid("uncertainty interval with lo > hi".into()));
        }
        if self.resolution < 3 {
            return Err(Error::Invalid(
                "uncertainty grid resolution must be >= 3".into(),
            ));
        }
        Ok(())
    }

    fn axis_grid(&self, k: usize) -> Vec<f64> {
        linspace(self.lo[k], self.hi[k], self.resolution)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo || n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// One constrained component: a scalar expression over (x, v) with its
/// uncertainty set.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub expr: Expr,
    pub set: UncertaintySet,
}

/// Multiobjective problem with worst-case inequality constraints and
/// optional equality constraints that must hold for every uncertainty
/// value. The ordering cone is the nonnegative orthant.
#[derive(Debug, Clone)]
pub struct RobustProblem {
    /// Scalar objective components, functions of x only.
    pub objectives: Vec<Expr>,
    pub constraints: Vec<Constraint>,
    pub equalities: Vec<Constraint>,
    /// Evaluation box for sampling and audits.
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
}

impl RobustProblem {
    pub fn nx(&self) -> usize {
        self.box_lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        let nx = self.nx();
        if nx == 0 || self.box_hi.len() != nx {
            return Err(Error::Dimension("evaluation box dimension mismatch".into()));
        }
        if self.box_lo.iter().zip(&self.box_hi).any(|(l, h)| l >= h) {
            return Err(Error::Invalid("degenerate evaluation box".into()));
        }
        if self.objectives.is_empty() {
            return Err(Error::Empty("problem has no objective components".into()));
        }
        for o in &self.objectives {
            if o.out_dim(nx, 0)? != 1 {
                return Err(Error::Dimension("objective component is not scalar".into()));
            }
        }
        for c in self.constraints.iter().chain(&self.equalities) {
            c.set.validate()?;
            if c.expr.out_dim(nx, c.set.dim())? != 1 {
                return Err(Error::Dimension(
                    "constraint expression is not scalar".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Golden-section maximization of `f` on [lo, hi] down to REFINE_TOL.
fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > REFINE_TOL {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid).max(fc).max(fd))
}

/// Grid local maximizers of `f` on `grid` (value >= both neighbors),
/// each refined on its bracket. Returns (point, value) pairs.
fn refined_maximizers(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> Vec<(f64, f64)> {
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let n = grid.len();
    let mut out = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || vals[i] >= vals[i - 1];
        let right_ok = i + 1 == n || vals[i] >= vals[i + 1];
        if left_ok && right_ok {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(n - 1)];
            let (p, val) = if hi > lo {
                golden_max(f, lo, hi)
            } else {
                (grid[i], vals[i])
            };
            // keep the grid point itself too: golden section can drift
            // off a kinked peak
            if vals[i] >= val {
                out.push((grid[i], vals[i]));
            } else {
                out.push((p, val));
            }
        }
    }
    out
}

fn maximize_constraint(c: &Constraint, x: &[f64]) -> Vec<(Vec<f64>, f64)> {
    if !c.expr.depends_on_v() {
        let val = c.expr.eval(x, &vec![0.0; c.set.dim()]).into_vec()[0];
        return vec![(c.set.lo.clone(), val)];
    }
    match c.set.dim() {
        1 => {
            let f = |t: f64| c.expr.eval(x, &[t]).into_vec()[0];
            refined_maximizers(&f, &c.set.axis_grid(0))
                .into_iter()
                .map(|(p, val)| (vec![p], val))
                .collect()
        }
        d => {
            // multi-axis sets: exhaustive product-grid scan followed by
            // cyclic per-axis golden refinement around each grid peak
            let axes: Vec<Vec<f64>> = (0..d).map(|k| c.set.axis_grid(k)).collect();
            let mut best: Option<(Vec<f64>, f64)> = None;
            let mut idx = vec![0usize; d];
            loop {
                let pt: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect();
                let val = c.expr.eval(x, &pt).into_vec()[0];
                if best.as_ref().is_none_or(|(_, b)| val > *b) {
                    best = Some((pt, val));
                }
                let mut k = 0;
                while k < d {
                    idx[k] += 1;
                    if idx[k] < axes[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
            let (mut pt, mut val) = best.expect("non-empty grid");
            for _ in 0..3 {
                for k in 0..d {
                    let mut p = pt.clone();
                    let f = |t: f64| {
                        let mut q = p.clone();
                        q[k] = t;
                        c.expr.eval(x, &q).into_vec()[0]
                    };
                    let step = (c.set.hi[k] - c.set.lo[k]) / (c.set.resolution - 1) as f64;
                    let lo = (pt[k] - step).max(c.set.lo[k]);
                    let hi = (pt[k] + step).min(c.set.hi[k]);
                    if hi > lo {
                        let (t, fv) = golden_max(&f, lo, hi);
                        if fv > val {
                            p[k] = t;
                            val = fv;
                            pt = p;
                        }
                    }
                }
            }
            vec![(pt, val)]
        }
    }
}

/// Worst-case value of inequality constraint `i` at `x`.
pub fn phi(problem: &RobustProblem, i: usize, x: &[f64]) -> Result<f64> {
    let c = problem
        .constraints
        .get(i)
        .ok_or_else(|| Error::Dimension(format!("no inequality constraint {i}")))?;
    Ok(maximize_constraint(c, x)
        .into_iter()
        .map(|(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// All uncertainty values attaining the worst case of constraint `i`
/// at `x` within the activity tolerance, clustered and sorted.
pub fn active_uncertainty(problem: &RobustProblem, i: usize, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let c = problem
        .constraints
        .get(i)
        .ok_or_else(|| Error::Dimension(format!("no inequality constraint {i}")))?;
    let cands = maximize_constraint(c, x);
    let top = cands
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut pts: Vec<Vec<f64>> = cands
        .into_iter()
        .filter(|(_, v)| *v >= top - EPS_ACT)
        .map(|(p, _)| p)
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut clustered: Vec<Vec<f64>> = Vec::new();
    for p in pts {
        let dup = clustered
            .last()
            .is_some_and(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= CLUSTER_TOL));
        if !dup {
            clustered.push(p);
        }
    }
    Ok(clustered)
}

/// Worst absolute deviation of equality constraint `j` over its whole
/// uncertainty grid.
pub fn equality_deviation(problem: &RobustProblem, j: usize, x: &[f64]) -> Result<f64> {
    let c = problem
        .equalities
        .get(j)
        .ok_or_else(|| Error::Dimension(format!("no equality constraint {j}")))?;
    let mut worst: f64 = 0.0;
    if c.set.dim() != 1 {
        return Err(Error::Unsupported(
            "equality uncertainty sets must be intervals".into(),
        ));
    }
    for t in c.set.axis_grid(0) {
        worst = worst.max(c.expr.eval(x, &[t]).into_vec()[0].abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// phi_i(x) per inequality constraint.
    pub worst_values: Vec<f64>,
    /// max_v |h_j(x,v)| per equality constraint.
    pub equality_deviations: Vec<f64>,
}

/// Robust feasibility: every worst-case inequality value <= tol and
/// every equality within tol of zero across the whole uncertainty set.
pub fn is_feasible(problem: &RobustProblem, x: &[f64], tol: f64) -> Result<FeasibilityReport> {
    let mut worst_values = Vec::with_capacity(problem.constraints.len());
    for i in 0..problem.constraints.len() {
        worst_values.push(phi(problem, i, x)?);
    }
    let mut equality_deviations = Vec::with_capacity(problem.equalities.len());
    for j in 0..problem.equalities.len() {
        equality_deviations.push(equality_deviation(problem, j, x)?);
    }
    let feasible =
        worst_values.iter().all(|&v| v <= tol) && equality_deviations.iter().all(|&v| v <= tol);
    Ok(FeasibilityReport {
        feasible,
        worst_values,
        equality_deviations,
    })
}

/// Feasible points of a rectangular grid over `box` in lexicographic
/// order (first axis slowest).
pub fn sample_feasible(
    problem: &RobustProblem,
    box_lo: &[f64],
    box_hi: &[f64],
    resolution: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let nx = box_lo.len();
    if box_hi.len() != nx || resolution.len() != nx {
        return Err(Error::Dimension("sampling box/resolution mismatch".into()));
    }
    let axes: Vec<Vec<f64>> = (0..nx)
        .map(|k| linspace(box_lo[k], box_hi[k], resolution[k].max(1)))
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; nx];
    'outer: loop {
        let pt: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect();
        if is_feasible(problem, &pt, 1e-9)?.feasible {
            out.push(pt);
        }
        for k in (0..nx).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Smooth;

    fn fixture() -> RobustProblem {
        // worst cases at (-1, 1): v^2 - 3|v| over [-1,1] -> 0 at v=0;
        // 2v - 5 over [-1,1] -> -3 at v=1.
        let g1 = Expr::Sum(vec![
            Expr::vscale(
                Expr::smooth(Smooth::Square, Expr::v(0)),
                Expr::abs(Expr::x(1)),
            ),
            Expr::Max(vec![
                Expr::affine_x(&[1.0, 0.0], 1.0),
                Expr::affine_x(&[2.0, 0.0], 2.0),
            ]),
            Expr::scale(-3.0, Expr::abs(Expr::v(0))),
        ]);
        let g2 = Expr::Sum(vec![
            Expr::scale(-3.0, Expr::abs(Expr::affine_x(&[1.0, 0.0], 1.0))),
            Expr::vscale(Expr::v(0), Expr::affine_x(&[0.0, 4.0], -2.0)),
            Expr::cst(-5.0),
        ]);
        RobustProblem {
            objectives: vec![Expr::affine_x(&[-1.0, 0.0], 0.0)],
            constraints: vec![
                Constraint {
                    expr: g1,
                    set: UncertaintySet::interval(-1.0, 1.0),
                },
                Constraint {
                    expr: g2,
                    set: UncertaintySet::interval(-1.0, 1.0),
                },
            ],
            equalities: vec![],
            box_lo: vec![-4.0, -4.0],
            box_hi: vec![0.0, 4.0],
        }
    }

    #[test]
    fn worst_case_values() {
        let p = fixture();
        let x = [-1.0, 1.0];
        assert!(phi(&p, 0, &x).unwrap().abs() <= 1e-10);
        assert!((phi(&p, 1, &x).unwrap() + 3.0).abs() <= 1e-10);
    }

    #[test]
    fn active_sets_are_singletons() {
        let p = fixture();
        let x = [-1.0, 1.0];
        let a1 = active_uncertainty(&p, 0, &x).unwrap();
        assert_eq!(a1.len(), 1);
        assert!(a1[0][0].abs() <= 1e-6);
        let a2 = active_uncertainty(&p, 1, &x).unwrap();
        assert_eq!(a2.len(), 1);
        assert!((a2[0][0] - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn active_points_attain_phi() {
        let p = fixture();
        let x = [-1.5, 0.5];
        for i in 0..2 {
            let target = phi(&p, i, &x).unwrap();
            for v in active_uncertainty(&p, i, &x).unwrap() {
                let val = p.constraints[i].expr.eval(&x, &v).into_vec()[0];
                assert!((val - target).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn phi_dominates_samples() {
        use rand::{Rng, SeedableRng};
        let p = fixture();
        let x = [-2.0, 1.5];
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for i in 0..2 {
            let top = phi(&p, i, &x).unwrap();
            for _ in 0..100 {
                let v = rng.gen_range(-1.0..=1.0);
                let val = p.constraints[i].expr.eval(&x, &[v]).into_vec()[0];
                assert!(top >= val - 1e-10);
            }
        }
    }

    #[test]
    fn feasibility_verdicts() {
        let p = fixture();
        assert!(is_feasible(&p, &[-1.0, 1.0], 1e-9).unwrap().feasible);
        assert!(!is_feasible(&p, &[0.0, 0.0], 1e-9).unwrap().feasible);
    }

    #[test]
    fn sampling_is_deterministic_and_sound() {
        let p = fixture();
        let a = sample_feasible(&p, &[-4.0, -4.0], &[0.0, 4.0], &[9, 17]).unwrap();
        let b = sample_feasible(&p, &[-4.0, -4.0], &[0.0, 4.0], &[9, 17]).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        for pt in &a {
            assert!(is_feasible(&p, pt, 1e-9).unwrap().feasible);
        }
    }

    #[test]
    fn singleton_grid() {
        let p = fixture();
        let s = sample_feasible(&p, &[-1.0, 1.0], &[-1.0, 1.0], &[1, 1]).unwrap();
        assert_eq!(s, vec![vec![-1.0, 1.0]]);
    }

    #[test]
    fn constant_in_v_constraint() {
        let mut p = fixture();
        p.constraints.push(Constraint {
            expr: Expr::affine_x(&[1.0, 0.0], 1.0),
            set: UncertaintySet::interval(-1.0, 1.0),
        });
        assert!((phi(&p, 2, &[-3.0, 0.0]).unwrap() + 2.0).abs() <= 1e-12);
    }

    #[test]
    fn tol_monotonicity() {
        let p = fixture();
        let pts = [[-1.0, 1.0], [-0.5, 0.5], [-2.0, 3.0]];
        for x in &pts {
            let loose = is_feasible(&p, x, 1e-3).unwrap().feasible;
            let tight = is_feasible(&p, x, 1e-12).unwrap().feasible;
            assert!(loose || !tight);
        }
    }
}
