//! Certificate checking and searching for the first-order optimality
//! conditions: Fritz-John / KKT multiplier inclusions, the constraint
//! qualification, the equality-constrained and norm-regularized forms,
//! and the linear-operator composite form.

use crate::apps::{AupSpec, CulSpec};
use crate::polyset::{
    point_in_polytope, zero_in_scaled_sum, zero_in_weighted_sum, LpStatus, Normalization,
    PolyUnion, Polytope,
};
use crate::robust::{active_uncertainty, is_feasible, phi, RobustProblem};
use crate::subdiff::{
    constraint_agg_set, equality_agg_set, scalarized_subdiff, subdiff, Exactness,
};
use crate::{Error, Result, EPS_ACT, TOL_MEMBER};

/// Multiplier bundle: objective multipliers `y_star`, inequality
/// multipliers `mu`, optional equality multipliers `sigma`, optional
/// auxiliary dual vectors per norm term, and the reported active
/// uncertainty parameters (one per inequality constraint).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub y_star: Vec<f64>,
    pub mu: Vec<f64>,
    #[serde(default)]
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub aux_duals: Vec<Vec<f64>>,
    #[serde(default)]
    pub active_v: Vec<Vec<f64>>,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Certificate {
    /// Joint rescaling of (y_star, mu) so that the Euclidean norms sum
    /// to one — the convention used when reporting multipliers.
    pub fn renormalized(&self) -> (Vec<f64>, Vec<f64>) {
        let total = norm2(&self.y_star) + norm2(&self.mu);
        if total <= 0.0 {
            return (self.y_star.clone(), self.mu.clone());
        }
        (
            self.y_star.iter().map(|x| x / total).collect(),
            self.mu.iter().map(|x| x / total).collect(),
        )
    }

    pub fn all_zero(&self) -> bool {
        self.y_star
            .iter()
            .chain(&self.mu)
            .chain(&self.sigma)
            .all(|&x| x == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Holds,
    Fails,
    HoldsUnderOuterEstimate,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// l1 distance of the best reconstruction of 0.
    pub residual: f64,
    pub diagnostics: String,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.status != VerdictStatus::Fails
    }

    fn fails(residual: f64, why: impl Into<String>) -> Verdict {
        Verdict {
            status: VerdictStatus::Fails,
            residual,
            diagnostics: why.into(),
        }
    }

    fn from_residual(residual: f64, exactness: Exactness, detail: &str) -> Verdict {
        if residual <= TOL_MEMBER {
            let status = match exactness {
                Exactness::Exact => VerdictStatus::Holds,
                Exactness::OuterEstimate => VerdictStatus::HoldsUnderOuterEstimate,
            };
            Verdict {
                status,
                residual,
                diagnostics: detail.into(),
            }
        } else {
            Verdict::fails(
                residual,
                format!("membership residual {residual:.3e}; {detail}"),
            )
        }
    }
}

/// Best (smallest-residual) zero-membership over all combinations of
/// union parts, one part per term. Terms with zero scale are dropped.
fn best_membership(terms: &[(f64, &PolyUnion)], offset: &[f64]) -> Result<f64> {
    let active: Vec<&(f64, &PolyUnion)> = terms.iter().filter(|(s, _)| s.abs() > 0.0).collect();
    if active.is_empty() {
        return Ok(offset.iter().map(|x| x.abs()).sum());
    }
    let mut idx = vec![0usize; active.len()];
    let mut best = f64::INFINITY;
    loop {
        let sets: Vec<(f64, &Polytope)> = active
            .iter()
            .zip(&idx)
            .map(|((s, u), &i)| (*s, &u.parts[i]))
            .collect();
        let (res, _) = zero_in_scaled_sum(&sets, offset)?;
        best = best.min(res);
        if best <= 0.0 {
            break;
        }
        let mut k = 0;
        while k < active.len() {
            idx[k] += 1;
            if idx[k] < active[k].1.parts.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == active.len() {
            break;
        }
    }
    Ok(best)
}

fn require_feasible(problem: &RobustProblem, x: &[f64]) -> Result<()> {
    let rep = is_feasible(problem, x, TOL_MEMBER)?;
    if !rep.feasible {
        return Err(Error::Infeasible(format!(
            "candidate point violates the constraints: worst values {:?}, equality deviations {:?}",
            rep.worst_values, rep.equality_deviations
        )));
    }
    Ok(())
}

/// Complementarity mu_i * phi_i(x) = 0 within tolerance; returns the
/// worst violation, if any.
fn complementarity_violation(
    problem: &RobustProblem,
    x: &[f64],
    mu: &[f64],
) -> Result<Option<(usize, f64)>> {
    for (i, &m) in mu.iter().enumerate() {
        let slack = (m * phi(problem, i, x)?).abs();
        if slack > TOL_MEMBER {
            return Ok(Some((i, slack)));
        }
    }
    Ok(None)
}

fn check_signs(cert: &Certificate) -> Result<()> {
    if cert
        .y_star
        .iter()
        .chain(&cert.mu)
        .chain(&cert.sigma)
        .any(|&m| m < 0.0)
    {
        return Err(Error::Invalid("multipliers must be nonnegative".into()));
    }
    Ok(())
}

/// Checks the inequality-constrained multiplier inclusion:
/// 0 in sum_k y*_k d(objective_k)(x) + sum_i mu_i * aggregate_i.
pub fn check_certificate(
    problem: &RobustProblem,
    x: &[f64],
    cert: &Certificate,
) -> Result<Verdict> {
    require_feasible(problem, x)?;
    if cert.y_star.len() != problem.objectives.len() || cert.mu.len() != problem.constraints.len() {
        return Err(Error::Dimension("certificate multiplier lengths".into()));
    }
    check_signs(cert)?;
    if cert.all_zero() {
        return Ok(Verdict::fails(f64::INFINITY, "all multipliers are zero"));
    }
    if let Some((i, slack)) = complementarity_violation(problem, x, &cert.mu)? {
        return Ok(Verdict::fails(
            slack,
            format!("complementarity fails at constraint {i}"),
        ));
    }
    let nx = problem.nx();
    let obj = scalarized_subdiff(&cert.y_star, &problem.objectives, x, nx)?;
    let mut aggs = Vec::new();
    for (i, &m) in cert.mu.iter().enumerate() {
        if m > 0.0 {
            aggs.push((
                m,
                PolyUnion {
                    parts: vec![constraint_agg_set(problem, i, x)?],
                },
            ));
        }
    }
    let mut terms = vec![(1.0, &obj.set)];
    terms.extend(aggs.iter().map(|(m, u)| (*m, u)));
    let residual = best_membership(&terms, &vec![0.0; nx])?;
    Ok(Verdict::from_residual(
        residual,
        obj.exactness,
        "scalarized objective + weighted aggregates",
    ))
}

fn search(
    problem: &RobustProblem,
    x: &[f64],
    normalization: Normalization,
) -> Result<Option<Certificate>> {
    let nx = problem.nx();
    let mut obj_unions = Vec::with_capacity(problem.objectives.len());
    for f in &problem.objectives {
        obj_unions.push(subdiff(f, x, &[], nx)?.set);
    }
    let mut aggs = Vec::with_capacity(problem.constraints.len());
    let mut force_zero = Vec::new();
    let mut active_v = Vec::with_capacity(problem.constraints.len());
    for i in 0..problem.constraints.len() {
        aggs.push(constraint_agg_set(problem, i, x)?);
        if phi(problem, i, x)? < -EPS_ACT {
            force_zero.push(i);
        }
        let maximizers = active_uncertainty(problem, i, x)?;
        active_v.push(maximizers.into_iter().next().unwrap_or_default());
    }
    // enumerate one part per objective union (deterministic order)
    let mut idx = vec![0usize; obj_unions.len()];
    loop {
        let parts: Vec<Polytope> = obj_unions
            .iter()
            .zip(&idx)
            .map(|(u, &i)| u.parts[i].clone())
            .collect();
        let w = zero_in_weighted_sum(&parts, &aggs, &force_zero, normalization)?;
        if w.status == LpStatus::Feasible && w.residual <= TOL_MEMBER {
            return Ok(Some(Certificate {
                y_star: w.lambda,
                mu: w.mu,
                sigma: vec![],
                aux_duals: vec![],
                active_v,
            }));
        }
        let mut k = 0;
        while k < obj_unions.len() {
            idx[k] += 1;
            if idx[k] < obj_unions[k].parts.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == obj_unions.len() {
            return Ok(None);
        }
    }
}

/// Searches for Fritz-John multipliers (objective vector may vanish):
/// sum of all multipliers normalized to one.
pub fn find_fritz_john(problem: &RobustProblem, x: &[f64]) -> Result<Option<Certificate>> {
    search(problem, x, Normalization::AllWeights)
}

/// Searches for KKT multipliers: objective multipliers sum to one,
/// forcing a nonzero objective vector.
pub fn find_kkt(problem: &RobustProblem, x: &[f64]) -> Result<Option<Certificate>> {
    search(problem, x, Normalization::ObjWeights)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CqReport {
    /// Indices attaining the overall worst-case value (when that value
    /// is zero within tolerance); empty when no constraint is active.
    pub active: Vec<usize>,
    /// One flag per active index: 0 outside that aggregate.
    pub satisfied: Vec<bool>,
    pub overall: bool,
}

/// Constraint qualification: 0 excluded from every active constraint's
/// aggregate set.
pub fn check_cq(problem: &RobustProblem, x: &[f64]) -> Result<CqReport> {
    let mut phis = Vec::with_capacity(problem.constraints.len());
    for i in 0..problem.constraints.len() {
        phis.push(phi(problem, i, x)?);
    }
    let top = phis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if phis.is_empty() || top < -EPS_ACT {
        return Ok(CqReport {
            active: vec![],
            satisfied: vec![],
            overall: true,
        });
    }
    let active: Vec<usize> = (0..phis.len())
        .filter(|&i| phis[i] >= top - EPS_ACT)
        .collect();
    let mut satisfied = Vec::with_capacity(active.len());
    let nx = problem.nx();
    for &i in &active {
        let agg = constraint_agg_set(problem, i, x)?;
        satisfied.push(!point_in_polytope(&vec![0.0; nx], &agg, TOL_MEMBER)?);
    }
    let overall = satisfied.iter().all(|&b| b);
    Ok(CqReport {
        active,
        satisfied,
        overall,
    })
}

/// Validates the auxiliary dual vector side conditions for one norm
/// term: the pairing must attain the norm power, and the dual norm is
/// pinned (ball case only at the exact center with unit exponent).
fn check_norm_dual(term: &crate::apps::NormTerm, x: &[f64], y_dual: &[f64]) -> Option<String> {
    let w: Vec<f64> = term
        .apply(x)
        .iter()
        .zip(&term.y0)
        .map(|(a, b)| a - b)
        .collect();
    let nw = norm2(&w);
    let pairing: f64 = y_dual.iter().zip(&w).map(|(a, b)| a * b).sum();
    if (pairing - nw.powf(term.beta)).abs() > TOL_MEMBER {
        return Some(format!(
            "dual pairing {pairing:.3e} != norm power {:.3e}",
            nw.powf(term.beta)
        ));
    }
    let ny = norm2(y_dual);
    if term.beta == 1.0 && nw <= 1e-12 {
        if ny > 1.0 + TOL_MEMBER {
            return Some(format!("dual norm {ny:.3e} exceeds the unit ball"));
        }
    } else if (ny - nw.powf(term.beta - 1.0)).abs() > TOL_MEMBER {
        return Some(format!(
            "dual norm {ny:.3e} != {:.3e}",
            nw.powf(term.beta - 1.0)
        ));
    }
    None
}

/// Checks the equality-constrained inclusion
/// 0 in sum_k y*_k d(r_k)(x) [+ norm-term offsets] + sum_i mu_i agg_i
///      + sum_j sigma_j eq_agg_j,
/// with multipliers not all zero. When `aup` is given, the objective
/// enters in decomposed form with the auxiliary dual side conditions
/// validated per term.
pub fn check_equality_certificate(
    problem: &RobustProblem,
    x: &[f64],
    cert: &Certificate,
    aup: Option<&AupSpec>,
) -> Result<Verdict> {
    require_feasible(problem, x)?;
    if cert.y_star.len() != problem.objectives.len()
        || cert.mu.len() != problem.constraints.len()
        || cert.sigma.len() != problem.equalities.len()
    {
        return Err(Error::Dimension("certificate multiplier lengths".into()));
    }
    check_signs(cert)?;
    if cert.all_zero() {
        return Ok(Verdict::fails(f64::INFINITY, "all multipliers are zero"));
    }
    if let Some((i, slack)) = complementarity_violation(problem, x, &cert.mu)? {
        return Ok(Verdict::fails(
            slack,
            format!("complementarity fails at constraint {i}"),
        ));
    }
    let nx = problem.nx();
    let mut offset = vec![0.0; nx];
    let mut obj_sets: Vec<(f64, PolyUnion)> = Vec::new();
    let mut exactness = Exactness::Exact;
    match aup {
        Some(spec) => {
            if cert.aux_duals.len() != spec.norm_terms.len() {
                return Err(Error::Dimension(
                    "one auxiliary dual per norm term required".into(),
                ));
            }
            for (k, term) in spec.norm_terms.iter().enumerate() {
                if let Some(why) = check_norm_dual(term, x, &cert.aux_duals[k]) {
                    return Ok(Verdict::fails(
                        f64::INFINITY,
                        format!("norm term {k}: {why}"),
                    ));
                }
                let lambda = cert.y_star[k];
                if lambda == 0.0 {
                    continue;
                }
                let r = subdiff(&spec.r[k], x, &[], nx)?;
                exactness = if r.exactness == Exactness::Exact {
                    exactness
                } else {
                    Exactness::OuterEstimate
                };
                obj_sets.push((lambda, r.set));
                let tty = term.apply_transpose(&cert.aux_duals[k]);
                for (o, t) in offset.iter_mut().zip(&tty) {
                    *o += lambda * term.alpha * term.beta * t;
                }
            }
        }
        None => {
            let obj = scalarized_subdiff(&cert.y_star, &problem.objectives, x, nx)?;
            exactness = obj.exactness;
            obj_sets.push((1.0, obj.set));
        }
    }
    let mut agg_sets: Vec<(f64, PolyUnion)> = Vec::new();
    for (i, &m) in cert.mu.iter().enumerate() {
        if m > 0.0 {
            agg_sets.push((
                m,
                PolyUnion {
                    parts: vec![constraint_agg_set(problem, i, x)?],
                },
            ));
        }
    }
    for (j, &s) in cert.sigma.iter().enumerate() {
        if s > 0.0 {
            agg_sets.push((
                s,
                PolyUnion {
                    parts: vec![equality_agg_set(problem, j, x)?],
                },
            ));
        }
    }
    let terms: Vec<(f64, &PolyUnion)> = obj_sets
        .iter()
        .chain(&agg_sets)
        .map(|(s, u)| (*s, u))
        .collect();
    let residual = best_membership(&terms, &offset)?;
    Ok(Verdict::from_residual(
        residual,
        exactness,
        "decomposed objective + weighted aggregates",
    ))
}

/// Checks the linear-operator composite inclusion
/// 0 in sum_k lambda_k T_k' d(f_k)(T_k x) + sum_i mu_i agg_i,
/// with the display normalization ||lambda|| + ||mu|| = 1.
pub fn check_linear_composite(
    problem: &RobustProblem,
    x: &[f64],
    cert: &Certificate,
    cul: &CulSpec,
) -> Result<Verdict> {
    require_feasible(problem, x)?;
    if cert.y_star.len() != cul.fs.len() || cert.mu.len() != problem.constraints.len() {
        return Err(Error::Dimension("certificate multiplier lengths".into()));
    }
    check_signs(cert)?;
    let total = norm2(&cert.y_star) + norm2(&cert.mu);
    if (total - 1.0).abs() > TOL_MEMBER {
        return Ok(Verdict::fails(
            (total - 1.0).abs(),
            format!("multiplier norms sum to {total:.6} instead of 1"),
        ));
    }
    if let Some((i, slack)) = complementarity_violation(problem, x, &cert.mu)? {
        return Ok(Verdict::fails(
            slack,
            format!("complementarity fails at constraint {i}"),
        ));
    }
    let nx = problem.nx();
    let mut sets: Vec<(f64, PolyUnion)> = Vec::new();
    let mut exactness = Exactness::Exact;
    for (k, f) in cul.fs.iter().enumerate() {
        let lambda = cert.y_star[k];
        if lambda == 0.0 {
            continue;
        }
        let t = &cul.ts[k];
        let y: Vec<f64> = t
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        let fd = subdiff(f, &y, &[], y.len())?;
        exactness = if fd.exactness == Exactness::Exact {
            exactness
        } else {
            Exactness::OuterEstimate
        };
        let transpose: Vec<Vec<f64>> = (0..nx)
            .map(|c| t.iter().map(|row| row[c]).collect())
            .collect();
        sets.push((lambda, fd.set.linear_image(&transpose)));
    }
    for (i, &m) in cert.mu.iter().enumerate() {
        if m > 0.0 {
            sets.push((
                m,
                PolyUnion {
                    parts: vec![constraint_agg_set(problem, i, x)?],
                },
            ));
        }
    }
    let terms: Vec<(f64, &PolyUnion)> = sets.iter().map(|(s, u)| (*s, u)).collect();
    let residual = best_membership(&terms, &vec![0.0; nx])?;
    Ok(Verdict::from_residual(
        residual,
        exactness,
        "operator-transposed images + weighted aggregates",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::builtin_example;
    use crate::expr::Expr;
    use crate::robust::{Constraint, RobustProblem, UncertaintySet};

    #[test]
    fn worked_inequality_certificate_holds() {
        let fx = builtin_example("ex3-2").unwrap();
        let v = check_certificate(&fx.problem, &fx.x_bar, &fx.certificate).unwrap();
        assert!(v.holds(), "{v:?}");
        assert!(v.residual <= 1e-8);
    }

    #[test]
    fn wrong_multipliers_fail() {
        let fx = builtin_example("ex3-2").unwrap();
        let bad = Certificate {
            y_star: vec![1.0, 0.0, 0.0],
            mu: vec![0.0, 0.0],
            sigma: vec![],
            aux_duals: vec![],
            active_v: vec![],
        };
        let v = check_certificate(&fx.problem, &fx.x_bar, &bad).unwrap();
        assert!(!v.holds());
    }

    #[test]
    fn all_zero_certificate_fails() {
        let fx = builtin_example("ex3-2").unwrap();
        let zero = Certificate {
            y_star: vec![0.0; 3],
            mu: vec![0.0; 2],
            sigma: vec![],
            aux_duals: vec![],
            active_v: vec![],
        };
        assert!(!check_certificate(&fx.problem, &fx.x_bar, &zero)
            .unwrap()
            .holds());
    }

    #[test]
    fn infeasible_point_is_error() {
        let fx = builtin_example("ex3-2").unwrap();
        assert!(check_certificate(&fx.problem, &[0.0, 0.0], &fx.certificate).is_err());
    }

    #[test]
    fn positive_rescaling_preserves_verdict() {
        let fx = builtin_example("ex3-2").unwrap();
        let mut cert = fx.certificate.clone();
        for m in cert.y_star.iter_mut().chain(&mut cert.mu) {
            *m *= 7.5;
        }
        assert!(check_certificate(&fx.problem, &fx.x_bar, &cert)
            .unwrap()
            .holds());
    }

    #[test]
    fn kkt_search_round_trip() {
        let fx = builtin_example("ex3-2").unwrap();
        let cert = find_kkt(&fx.problem, &fx.x_bar)
            .unwrap()
            .expect("KKT multipliers");
        assert!(cert.y_star.iter().any(|&l| l > 0.0));
        let v = check_certificate(&fx.problem, &fx.x_bar, &cert).unwrap();
        assert!(v.holds(), "{v:?}");
    }

    fn unconstrained(obj: Expr) -> RobustProblem {
        RobustProblem {
            objectives: vec![obj],
            constraints: vec![],
            equalities: vec![],
            box_lo: vec![-1.0],
            box_hi: vec![1.0],
        }
    }

    #[test]
    fn kink_minimum_is_fritz_john() {
        let p = unconstrained(Expr::abs(Expr::x(0)));
        let cert = find_fritz_john(&p, &[0.0])
            .unwrap()
            .expect("stationary kink");
        assert!((cert.y_star[0] - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn non_stationary_point_has_no_multipliers() {
        let p = unconstrained(Expr::affine_x(&[1.0], 0.0));
        assert!(find_fritz_john(&p, &[0.0]).unwrap().is_none());
        assert!(find_kkt(&p, &[0.0]).unwrap().is_none());
    }

    #[test]
    fn kkt_needs_nonzero_objective_vector() {
        // the opposing constraint gradients (1,1) and (-1,-1) cancel
        // each other (Fritz-John with zero objective weight), but no
        // nonnegative combination of them offsets the objective
        // gradient (5,0), so no KKT multipliers exist
        let mk = |sign: f64| Constraint {
            expr: Expr::affine_x(&[sign, sign], 0.0),
            set: UncertaintySet::interval(0.0, 1.0),
        };
        let p = RobustProblem {
            objectives: vec![Expr::affine_x(&[5.0, 0.0], 0.0)],
            constraints: vec![mk(1.0), mk(-1.0)],
            equalities: vec![],
            box_lo: vec![-1.0, -1.0],
            box_hi: vec![1.0, 1.0],
        };
        let fj = find_fritz_john(&p, &[0.0, 0.0])
            .unwrap()
            .expect("FJ multipliers");
        assert_eq!(fj.y_star, vec![0.0]);
        assert!(find_kkt(&p, &[0.0, 0.0]).unwrap().is_none());
    }

    #[test]
    fn cq_on_worked_fixture() {
        let fx = builtin_example("ex3-2").unwrap();
        let rep = check_cq(&fx.problem, &fx.x_bar).unwrap();
        assert_eq!(rep.active, vec![0]);
        assert!(rep.overall);
    }

    #[test]
    fn cq_vacuous_when_inactive() {
        let p = RobustProblem {
            objectives: vec![Expr::abs(Expr::x(0))],
            constraints: vec![Constraint {
                expr: Expr::affine_x(&[1.0], -5.0),
                set: UncertaintySet::interval(0.0, 1.0),
            }],
            equalities: vec![],
            box_lo: vec![-1.0],
            box_hi: vec![1.0],
        };
        let rep = check_cq(&p, &[0.0]).unwrap();
        assert!(rep.active.is_empty());
        assert!(rep.overall);
    }

    #[test]
    fn cq_fails_when_origin_inside() {
        let p = RobustProblem {
            objectives: vec![Expr::affine_x(&[1.0, 0.0], 0.0)],
            constraints: vec![Constraint {
                expr: Expr::abs(Expr::x(0)),
                set: UncertaintySet::interval(0.0, 1.0),
            }],
            equalities: vec![],
            box_lo: vec![-1.0, -1.0],
            box_hi: vec![1.0, 1.0],
        };
        let rep = check_cq(&p, &[0.0, 0.0]).unwrap();
        assert_eq!(rep.active, vec![0]);
        assert!(!rep.overall);
    }

    #[test]
    fn equality_certificate_holds() {
        let fx = builtin_example("ex5-1").unwrap();
        let v =
            check_equality_certificate(&fx.problem, &fx.x_bar, &fx.certificate, fx.aup.as_ref())
                .unwrap();
        assert!(v.holds(), "{v:?}");
        assert!(v.residual <= 1e-8);
    }

    #[test]
    fn equality_certificate_needs_the_equality_column() {
        let fx = builtin_example("ex5-1").unwrap();
        let mut cert = fx.certificate.clone();
        cert.sigma = vec![0.0, 0.0];
        let v = check_equality_certificate(&fx.problem, &fx.x_bar, &cert, fx.aup.as_ref()).unwrap();
        assert!(!v.holds());
    }

    #[test]
    fn equality_certificate_rejects_bad_dual_pairing() {
        let fx = builtin_example("ex5-1").unwrap();
        let mut cert = fx.certificate.clone();
        cert.aux_duals[0] = vec![5.0, 5.0];
        let v = check_equality_certificate(&fx.problem, &fx.x_bar, &cert, fx.aup.as_ref()).unwrap();
        assert!(!v.holds());
    }

    #[test]
    fn linear_composite_certificate_holds() {
        let fx = builtin_example("ex5-2").unwrap();
        let v = check_linear_composite(
            &fx.problem,
            &fx.x_bar,
            &fx.certificate,
            fx.cul.as_ref().unwrap(),
        )
        .unwrap();
        assert!(v.holds(), "{v:?}");
        assert!(v.residual <= 1e-8);
    }

    #[test]
    fn linear_composite_normalization_enforced() {
        let fx = builtin_example("ex5-2").unwrap();
        let mut cert = fx.certificate.clone();
        cert.y_star = vec![0.0, 0.0, 1.0];
        cert.mu = vec![0.0, 1.0];
        let v = check_linear_composite(&fx.problem, &fx.x_bar, &cert, fx.cul.as_ref().unwrap())
            .unwrap();
        assert!(!v.holds());
    }

    #[test]
    fn identity_operators_match_plain_check() {
        // composite form with identity operators equals the plain
        // inequality certificate check on the same data
        let fx = builtin_example("ex3-2").unwrap();
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let cul = CulSpec {
            fs: fx.problem.objectives.clone(),
            ts: vec![eye.clone(), eye.clone(), eye],
            constraints: fx.problem.constraints.clone(),
            box_lo: fx.problem.box_lo.clone(),
            box_hi: fx.problem.box_hi.clone(),
        };
        let composed = crate::apps::build_cul(&cul).unwrap();
        let (y, mu) = fx.certificate.renormalized();
        let cert = Certificate {
            y_star: y,
            mu,
            sigma: vec![],
            aux_duals: vec![],
            active_v: vec![],
        };
        let v = check_linear_composite(&composed, &fx.x_bar, &cert, &cul).unwrap();
        assert!(v.holds(), "{v:?}");
    }

    #[test]
    fn display_renormalization_sums_to_one() {
        let fx = builtin_example("ex5-2").unwrap();
        let (y, mu) = fx.certificate.renormalized();
        let total = y.iter().map(|a| a * a).sum::<f64>().sqrt()
            + mu.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((total - 1.0).abs() <= 1e-12);
    }
}
