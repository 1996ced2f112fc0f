//! Problem builders: norm-regularized objectives (approximation form),
//! linear-operator composite objectives, the built-in worked fixtures,
//! and a seeded generator of convex piecewise-affine instances for
//! randomized audits.

use crate::certify::Certificate;
use crate::expr::{Expr, Smooth};
use crate::robust::{Constraint, RobustProblem, UncertaintySet};
use crate::{Error, Result};

/// One norm regularization term alpha * ||T x - y0||^beta.
#[derive(Debug, Clone)]
pub struct NormTerm {
    pub t: Vec<Vec<f64>>,
    pub y0: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl NormTerm {
    pub fn validate(&self, nx: usize) -> Result<()> {
        if self.t.is_empty() || self.t.iter().any(|row| row.len() != nx) {
            return Err(Error::Dimension(
                "operator columns must match the decision dimension".into(),
            ));
        }
        if self.y0.len() != self.t.len() {
            return Err(Error::Dimension(
                "target dimension must match the operator rows".into(),
            ));
        }
        if self.alpha < 0.0 || self.beta < 1.0 {
            return Err(Error::Invalid(
                "norm term needs alpha >= 0 and beta >= 1".into(),
            ));
        }
        Ok(())
    }

    /// T x evaluated at x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.t
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// T' y.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let nx = self.t[0].len();
        (0..nx)
            .map(|c| self.t.iter().zip(y).map(|(row, yi)| row[c] * yi).sum())
            .collect()
    }
}

/// Approximation problem: minimize r_k(x) + alpha_k ||T_k x - y0_k||^beta_k
/// componentwise subject to robust inequality and equality constraints.
#[derive(Debug, Clone)]
pub struct AupSpec {
    pub r: Vec<Expr>,
    pub norm_terms: Vec<NormTerm>,
    pub constraints: Vec<Constraint>,
    pub equalities: Vec<Constraint>,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
}

/// Composite problem: minimize f_k(T_k x) componentwise subject to
/// robust inequality constraints.
#[derive(Debug, Clone)]
pub struct CulSpec {
    /// f_k as an expression over the image-space coordinates.
    pub fs: Vec<Expr>,
    pub ts: Vec<Vec<Vec<f64>>>,
    pub constraints: Vec<Constraint>,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
}

pub fn build_aup(spec: &AupSpec) -> Result<RobustProblem> {
    let nx = spec.box_lo.len();
    if spec.r.len() != spec.norm_terms.len() {
        return Err(Error::Dimension(
            "one norm term per objective component required".into(),
        ));
    }
    let mut objectives = Vec::with_capacity(spec.r.len());
    for (r, term) in spec.r.iter().zip(&spec.norm_terms) {
        term.validate(nx)?;
        let mut parts = vec![r.clone()];
        if term.alpha > 0.0 {
            parts.push(Expr::NormPower {
                alpha: term.alpha,
                beta: term.beta,
                center: term.y0.clone(),
                arg: Box::new(Expr::linear_map_x(&term.t, &vec![0.0; term.y0.len()])),
            });
        }
        objectives.push(Expr::Sum(parts));
    }
    let problem = RobustProblem {
        objectives,
        constraints: spec.constraints.clone(),
        equalities: spec.equalities.clone(),
        box_lo: spec.box_lo.clone(),
        box_hi: spec.box_hi.clone(),
    };
    problem.validate()?;
    Ok(problem)
}

pub fn build_cul(spec: &CulSpec) -> Result<RobustProblem> {
    if spec.fs.len() != spec.ts.len() {
        return Err(Error::Dimension(
            "one operator per objective component required".into(),
        ));
    }
    let mut objectives = Vec::with_capacity(spec.fs.len());
    for (f, t) in spec.fs.iter().zip(&spec.ts) {
        let zero = vec![0.0; t.len()];
        objectives.push(Expr::compose(f.clone(), Expr::linear_map_x(t, &zero)));
    }
    let problem = RobustProblem {
        objectives,
        constraints: spec.constraints.clone(),
        equalities: vec![],
        box_lo: spec.box_lo.clone(),
        box_hi: spec.box_hi.clone(),
    };
    problem.validate()?;
    Ok(problem)
}

/// A ready-to-audit problem instance: the problem, a candidate point,
/// the reference multipliers, and the structured form when the
/// certificate check needs the decomposition.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub problem: RobustProblem,
    pub x_bar: Vec<f64>,
    pub certificate: Certificate,
    pub aup: Option<AupSpec>,
    pub cul: Option<CulSpec>,
}

fn interval(lo: f64, hi: f64) -> UncertaintySet {
    UncertaintySet::interval(lo, hi)
}

fn ex3_2() -> Fixture {
    let sq2 = std::f64::consts::SQRT_2;
    // objectives at x_bar = (-1, 1):
    //   o1 = -x1 + |x2 - 1|                    -> {-1} x [-1, 1]
    //   o2 = 1/(|x1 + 1|/2 + 1) - 3 x2 + 5     -> [-1/2, 1/2] x {-3}
    //   o3 = 1/sqrt(|sqrt2 (x1+1)| + 1) - |x2 - 1| - 1
    //                                          -> conv{(+-sqrt2/2, +-1)}
    let o1 = Expr::Sum(vec![
        Expr::affine_x(&[-1.0, 0.0], 0.0),
        Expr::abs(Expr::affine_x(&[0.0, 1.0], -1.0)),
    ]);
    let o2 = Expr::Sum(vec![
        Expr::smooth(Smooth::ReciprocalShifted, Expr::affine_x(&[0.5, 0.0], 0.5)),
        Expr::affine_x(&[0.0, -3.0], 5.0),
    ]);
    let o3 = Expr::Sum(vec![
        Expr::smooth(Smooth::InvSqrtShifted, Expr::affine_x(&[sq2, 0.0], sq2)),
        Expr::Negate(Box::new(Expr::abs(Expr::affine_x(&[0.0, 1.0], -1.0)))),
        Expr::cst(-1.0),
    ]);
    // constraints over v in [-1, 1]:
    //   c1 = v^2 |x2| + max{x1 + 1, 2(x1 + 1)} - 3|v|   (worst case 0 at v = 0)
    //   c2 = -3|x1 + 1| + v (4 x2 - 2) - 5              (worst case -3 at v = 1)
    let c1 = Expr::Sum(vec![
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
    let c2 = Expr::Sum(vec![
        Expr::scale(-3.0, Expr::abs(Expr::affine_x(&[1.0, 0.0], 1.0))),
        Expr::vscale(Expr::v(0), Expr::affine_x(&[0.0, 4.0], -2.0)),
        Expr::cst(-5.0),
    ]);
    let problem = RobustProblem {
        objectives: vec![o1, o2, o3],
        constraints: vec![
            Constraint {
                expr: c1,
                set: interval(-1.0, 1.0),
            },
            Constraint {
                expr: c2,
                set: interval(-1.0, 1.0),
            },
        ],
        equalities: vec![],
        box_lo: vec![-4.0, -4.0],
        box_hi: vec![0.0, 4.0],
    };
    let certificate = Certificate {
        y_star: vec![sq2 / 3.0, 0.0, sq2 / 3.0],
        mu: vec![1.0 / 3.0, 0.0],
        sigma: vec![],
        aux_duals: vec![],
        active_v: vec![vec![0.0], vec![1.0]],
    };
    Fixture {
        problem,
        x_bar: vec![-1.0, 1.0],
        certificate,
        aup: None,
        cul: None,
    }
}

fn ex5_1_constraints() -> Vec<Constraint> {
    // over v in [-1, -1/4]:
    //   c1 = (1/4) v^2 |x1| + (1/2) v^2 x2 + (1/4)|v|  (worst case 0 at v = -1/4)
    //   c2 = (1/8) x1^2 + |v| x2 + |v| + 1/4           (worst case 0 at v = -1/4)
    let c1 = Expr::Sum(vec![
        Expr::vscale(
            Expr::scale(0.25, Expr::smooth(Smooth::Square, Expr::v(0))),
            Expr::abs(Expr::x(0)),
        ),
        Expr::vscale(
            Expr::scale(0.5, Expr::smooth(Smooth::Square, Expr::v(0))),
            Expr::affine_x(&[0.0, 1.0], 0.0),
        ),
        Expr::scale(0.25, Expr::abs(Expr::v(0))),
    ]);
    let c2 = Expr::Sum(vec![
        Expr::scale(0.125, Expr::smooth(Smooth::Square, Expr::x(0))),
        Expr::vscale(Expr::abs(Expr::v(0)), Expr::affine_x(&[0.0, 1.0], 0.0)),
        Expr::abs(Expr::v(0)),
        Expr::cst(0.25),
    ]);
    vec![
        Constraint {
            expr: c1,
            set: interval(-1.0, -0.25),
        },
        Constraint {
            expr: c2,
            set: interval(-1.0, -0.25),
        },
    ]
}

fn ex5_1_base_components() -> Vec<Expr> {
    // r1 = 3|x1| + (2/5) x2 + 4/5
    // r2 = (1/4) x1^2 + 2
    // r3 = 2|x1| - (1/8) x2^2 + 1
    vec![
        Expr::Sum(vec![
            Expr::scale(3.0, Expr::abs(Expr::x(0))),
            Expr::affine_x(&[0.0, 0.4], 0.8),
        ]),
        Expr::Sum(vec![
            Expr::scale(0.25, Expr::smooth(Smooth::Square, Expr::x(0))),
            Expr::cst(2.0),
        ]),
        Expr::Sum(vec![
            Expr::scale(2.0, Expr::abs(Expr::x(0))),
            Expr::scale(-0.125, Expr::smooth(Smooth::Square, Expr::x(1))),
            Expr::cst(1.0),
        ]),
    ]
}

fn ex5_1_operators() -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
    vec![
        (vec![vec![0.0, 0.5], vec![1.0, 0.0]], vec![-1.0, 0.0]),
        (vec![vec![1.0, 0.0], vec![0.0, 0.5]], vec![0.0, -1.0]),
        (vec![vec![0.0, 0.5], vec![0.0, 0.5]], vec![-1.0, -1.0]),
    ]
}

fn ex5_1() -> Result<Fixture> {
    // equalities over v in [-1, -1/4], both vanishing identically at
    // x_bar = (0, -2):
    //   e1 = v (-3 x1 + x2 + 2), e2 = v (-3 x1 - x2 - 2)
    let e1 = Expr::vscale(Expr::v(0), Expr::affine_x(&[-3.0, 1.0], 2.0));
    let e2 = Expr::vscale(Expr::v(0), Expr::affine_x(&[-3.0, -1.0], -2.0));
    let alphas = [2.0, 1.0, 1.0];
    let norm_terms = ex5_1_operators()
        .into_iter()
        .zip(alphas)
        .map(|((t, y0), alpha)| NormTerm {
            t,
            y0,
            alpha,
            beta: 1.0,
        })
        .collect();
    let spec = AupSpec {
        r: ex5_1_base_components(),
        norm_terms,
        constraints: ex5_1_constraints(),
        equalities: vec![
            Constraint {
                expr: e1,
                set: interval(-1.0, -0.25),
            },
            Constraint {
                expr: e2,
                set: interval(-1.0, -0.25),
            },
        ],
        box_lo: vec![-2.0, -6.0],
        box_hi: vec![2.0, -2.0],
    };
    let problem = build_aup(&spec)?;
    let certificate = Certificate {
        y_star: vec![1.0, 0.0, 1.0],
        mu: vec![0.0, 1.0],
        sigma: vec![1.0, 0.0],
        aux_duals: vec![vec![-0.4, 0.0], vec![0.0, 0.0], vec![-0.5, -0.5]],
        active_v: vec![vec![-0.25], vec![-0.25]],
    };
    Ok(Fixture {
        problem,
        x_bar: vec![0.0, -2.0],
        certificate,
        aup: Some(spec),
        cul: None,
    })
}

fn ex5_2() -> Result<Fixture> {
    // image-space components with kinks at the mapped candidate point
    // ybar_k = T_k (0, -2):
    //   f1(y) = 3|y1 + 1| + (2/5) y2 + 4/5
    //   f2(y) = (1/4) y1^2 + 2
    //   f3(y) = 2|y1 + 1| - (1/8) y2^2 + 1
    let f1 = Expr::Sum(vec![
        Expr::scale(3.0, Expr::abs(Expr::affine_x(&[1.0, 0.0], 1.0))),
        Expr::affine_x(&[0.0, 0.4], 0.8),
    ]);
    let f2 = Expr::Sum(vec![
        Expr::scale(0.25, Expr::smooth(Smooth::Square, Expr::x(0))),
        Expr::cst(2.0),
    ]);
    let f3 = Expr::Sum(vec![
        Expr::scale(2.0, Expr::abs(Expr::affine_x(&[1.0, 0.0], 1.0))),
        Expr::scale(-0.125, Expr::smooth(Smooth::Square, Expr::x(1))),
        Expr::cst(1.0),
    ]);
    let spec = CulSpec {
        fs: vec![f1, f2, f3],
        ts: ex5_1_operators().into_iter().map(|(t, _)| t).collect(),
        constraints: ex5_1_constraints(),
        box_lo: vec![-2.0, -6.0],
        box_hi: vec![2.0, -2.0],
    };
    let problem = build_cul(&spec)?;
    let certificate = Certificate {
        y_star: vec![0.0, 0.0, 0.5],
        mu: vec![0.0, 0.5],
        sigma: vec![],
        aux_duals: vec![],
        active_v: vec![vec![-0.25], vec![-0.25]],
    };
    Ok(Fixture {
        problem,
        x_bar: vec![0.0, -2.0],
        certificate,
        aup: None,
        cul: Some(spec),
    })
}

/// Built-in worked fixtures: `ex3-2` (inequality-only robust KKT),
/// `ex5-1` (norm-regularized objectives with equality constraints),
/// `ex5-2` (linear-operator composite objectives).
pub fn builtin_example(name: &str) -> Result<Fixture> {
    match name {
        "ex3-2" => Ok(ex3_2()),
        "ex5-1" => ex5_1(),
        "ex5-2" => ex5_2(),
        other => Err(Error::Invalid(format!("unknown builtin example `{other}`"))),
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["ex3-2", "ex5-1", "ex5-2"]
}

/// Deterministic convex piecewise-affine instance on the box [-1,1]^2,
/// grid-aligned so that 21x21 audits land exactly on the kink and
/// boundary coordinates. Returns the problem and a candidate point
/// that is weakly robust efficient by construction (the componentwise
/// clamp of the kink center onto the feasible box).
pub fn seeded_convex_instance(seed: u64) -> (RobustProblem, Vec<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let step = 0.1;
    let snap = |k: i64| k as f64 * step;
    // kink centers anywhere on the grid; feasible box strictly inside
    // [-1,1]^2 with grid-aligned faces
    let c1 = snap(rng.gen_range(-10..=10));
    let c2 = snap(rng.gen_range(-10..=10));
    let l1 = snap(rng.gen_range(-10..=-1));
    let u1 = snap(rng.gen_range(1..=10));
    let l2 = snap(rng.gen_range(-10..=-1));
    let u2 = snap(rng.gen_range(1..=10));
    let s1 = rng.gen_range(0.1..=1.0);
    let s2 = rng.gen_range(0.1..=1.0);
    let objectives = vec![
        Expr::abs(Expr::affine_x(&[1.0, 0.0], -c1)),
        Expr::abs(Expr::affine_x(&[0.0, 1.0], -c2)),
    ];
    // face constraints x1 <= u1 etc., each with a nonpositive
    // uncertainty ripple s (v^2 - 1) that peaks at 0 on v = +-1
    let ripple = |s: f64| {
        Expr::vscale(
            Expr::scale(s, Expr::smooth(Smooth::Square, Expr::v(0))),
            Expr::cst(1.0),
        )
    };
    let face = |a: [f64; 2], b: f64, s: f64| Constraint {
        expr: Expr::Sum(vec![Expr::affine_x(&a, b), ripple(s), Expr::cst(-s)]),
        set: interval(-1.0, 1.0),
    };
    let constraints = vec![
        face([1.0, 0.0], -u1, s1),
        face([-1.0, 0.0], l1, s1),
        face([0.0, 1.0], -u2, s2),
        face([0.0, -1.0], l2, s2),
    ];
    let problem = RobustProblem {
        objectives,
        constraints,
        equalities: vec![],
        box_lo: vec![-1.0, -1.0],
        box_hi: vec![1.0, 1.0],
    };
    let x_bar = vec![c1.clamp(l1, u1), c2.clamp(l2, u2)];
    (problem, x_bar)
}
