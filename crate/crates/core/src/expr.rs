//! Expression DSL for composite functions of a decision variable x and
//! an optional uncertainty variable v. Every primitive has an exact
//! closed-form limiting subdifferential at any point; the calculus
//! rules live in `subdiff`.

use crate::polyset::{hull, PolyUnion, Polytope};
use crate::{Error, Result, TOL_KINK};

/// Named C^1-away-from-zero univariate functions with closed-form
/// derivatives. The two shifted entries kink at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smooth {
    /// t^2
    Square,
    /// 1/(|t|+1)
    ReciprocalShifted,
    /// 1/sqrt(|t|+1)
    InvSqrtShifted,
}

impl Smooth {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Smooth::Square => t * t,
            Smooth::ReciprocalShifted => 1.0 / (t.abs() + 1.0),
            Smooth::InvSqrtShifted => 1.0 / (t.abs() + 1.0).sqrt(),
        }
    }

    /// Derivative away from the kink.
    pub fn deriv(self, t: f64) -> f64 {
        match self {
            Smooth::Square => 2.0 * t,
            Smooth::ReciprocalShifted => {
                let u = t.abs() + 1.0;
                -t.signum() / (u * u)
            }
            Smooth::InvSqrtShifted => -t.signum() / (2.0 * (t.abs() + 1.0).powf(1.5)),
        }
    }

    /// Interval of one-sided derivatives at the kink argument t = 0
    /// (a true gradient singleton for the smooth entry).
    pub fn kink_interval(self) -> (f64, f64) {
        match self {
            Smooth::Square => (0.0, 0.0),
            Smooth::ReciprocalShifted => (-1.0, 1.0),
            Smooth::InvSqrtShifted => (-0.5, 0.5),
        }
    }

    pub fn has_kink(self) -> bool {
        !matches!(self, Smooth::Square)
    }
}

/// Expression tree over (x, v). Scalar- or vector-valued; dimensions
/// are checked at construction through [`Expr::out_dim`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Selected coordinates of x (vector of the selected entries).
    VarX(Vec<usize>),
    /// Selected coordinates of v.
    VarV(Vec<usize>),
    Const(Vec<f64>),
    /// A * arg + b (rows of `a` give the output coordinates).
    Affine {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        arg: Box<Expr>,
    },
    Scale {
        t: f64,
        arg: Box<Expr>,
    },
    /// coeff(v) * arg(x, v); coeff must be scalar and x-free, so the
    /// x-subdifferential is plain scaling.
    VScale {
        coeff: Box<Expr>,
        arg: Box<Expr>,
    },
    Sum(Vec<Expr>),
    /// |arg| for scalar arg.
    Abs(Box<Expr>),
    /// Euclidean norm of a vector arg.
    Norm(Box<Expr>),
    /// alpha * ||arg - center||^beta, alpha >= 0, beta >= 1.
    NormPower {
        alpha: f64,
        beta: f64,
        center: Vec<f64>,
        arg: Box<Expr>,
    },
    /// max of scalar operands.
    Max(Vec<Expr>),
    /// outer(inner(x, v)); outer sees the inner value as its x.
    Compose {
        outer: Box<Expr>,
        inner: Box<Expr>,
    },
    Negate(Box<Expr>),
    /// Vector bundling of scalar expressions.
    Tuple(Vec<Expr>),
    SmoothFn {
        kind: Smooth,
        arg: Box<Expr>,
    },
}

/// Evaluation result; scalar fast path avoids allocation in grid scans.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Value {
    pub fn scalar(&self) -> Result<f64> {
        match self {
            Value::Scalar(s) => Ok(*s),
            Value::Vector(v) if v.len() == 1 => Ok(v[0]),
            _ => Err(Error::Dimension("expected a scalar value".into())),
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        match self {
            Value::Scalar(s) => vec![s],
            Value::Vector(v) => v,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Value::Scalar(_) => 1,
            Value::Vector(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Expr {
    // ---- constructors used throughout the fixtures ----

    pub fn x(i: usize) -> Expr {
        Expr::VarX(vec![i])
    }

    pub fn v(i: usize) -> Expr {
        Expr::VarV(vec![i])
    }

    pub fn cst(c: f64) -> Expr {
        Expr::Const(vec![c])
    }

    /// coeffs . x + b as a scalar expression.
    pub fn affine_x(coeffs: &[f64], b: f64) -> Expr {
        let n = coeffs.len();
        Expr::Affine {
            a: vec![coeffs.to_vec()],
            b: vec![b],
            arg: Box::new(Expr::VarX((0..n).collect())),
        }
    }

    /// T x + b as a vector expression.
    pub fn linear_map_x(t: &[Vec<f64>], b: &[f64]) -> Expr {
        let n = t.first().map_or(0, |r| r.len());
        Expr::Affine {
            a: t.to_vec(),
            b: b.to_vec(),
            arg: Box::new(Expr::VarX((0..n).collect())),
        }
    }

    pub fn abs(e: Expr) -> Expr {
        Expr::Abs(Box::new(e))
    }

    pub fn scale(t: f64, e: Expr) -> Expr {
        Expr::Scale {
            t,
            arg: Box::new(e),
        }
    }

    pub fn vscale(coeff: Expr, arg: Expr) -> Expr {
        Expr::VScale {
            coeff: Box::new(coeff),
            arg: Box::new(arg),
        }
    }

    pub fn smooth(kind: Smooth, arg: Expr) -> Expr {
        Expr::SmoothFn {
            kind,
            arg: Box::new(arg),
        }
    }

    pub fn compose(outer: Expr, inner: Expr) -> Expr {
        Expr::Compose {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    /// Output dimension, validating dimensional consistency against
    /// decision dimension `nx` and uncertainty dimension `nv`.
    pub fn out_dim(&self, nx: usize, nv: usize) -> Result<usize> {
        match self {
            Expr::VarX(idx) => {
                if idx.iter().any(|&i| i >= nx) {
                    return Err(Error::Dimension(format!(
                        "x index out of range (nx = {nx})"
                    )));
                }
                Ok(idx.len())
            }
            Expr::VarV(idx) => {
                if idx.iter().any(|&i| i >= nv) {
                    return Err(Error::Dimension(format!(
                        "v index out of range (nv = {nv})"
                    )));
                }
                Ok(idx.len())
            }
            Expr::Const(c) => Ok(c.len()),
            Expr::Affine { a, b, arg } => {
                let d = arg.out_dim(nx, nv)?;
                if a.iter().any(|row| row.len() != d) {
                    return Err(Error::Dimension("affine matrix width".into()));
                }
                if b.len() != a.len() {
                    return Err(Error::Dimension("affine offset length".into()));
                }
                Ok(a.len())
            }
            Expr::Scale { arg, .. } => arg.out_dim(nx, nv),
            Expr::VScale { coeff, arg } => {
                if coeff.out_dim(nx, nv)? != 1 {
                    return Err(Error::Dimension("vscale coefficient must be scalar".into()));
                }
                if coeff.depends_on_x() {
                    return Err(Error::Invalid("vscale coefficient must be x-free".into()));
                }
                arg.out_dim(nx, nv)
            }
            Expr::Sum(es) => {
                if es.is_empty() {
                    return Err(Error::Empty("sum of no terms".into()));
                }
                let d = es[0].out_dim(nx, nv)?;
                for e in &es[1..] {
                    if e.out_dim(nx, nv)? != d {
                        return Err(Error::Dimension("sum member dimensions differ".into()));
                    }
                }
                Ok(d)
            }
            Expr::Abs(arg) => {
                if arg.out_dim(nx, nv)? != 1 {
                    return Err(Error::Dimension("abs needs a scalar operand".into()));
                }
                Ok(1)
            }
            Expr::Norm(arg) => {
                arg.out_dim(nx, nv)?;
                Ok(1)
            }
            Expr::NormPower {
                alpha,
                beta,
                center,
                arg,
            } => {
                if *alpha < 0.0 || *beta < 1.0 {
                    return Err(Error::Invalid(
                        "norm-power requires alpha >= 0, beta >= 1".into(),
                    ));
                }
                if arg.out_dim(nx, nv)? != center.len() {
                    return Err(Error::Dimension("norm-power center dimension".into()));
                }
                Ok(1)
            }
            Expr::Max(es) => {
                if es.is_empty() {
                    return Err(Error::Empty("max of no operands".into()));
                }
                for e in es {
                    if e.out_dim(nx, nv)? != 1 {
                        return Err(Error::Dimension("max needs scalar operands".into()));
                    }
                }
                Ok(1)
            }
            Expr::Compose { outer, inner } => {
                let d = inner.out_dim(nx, nv)?;
                outer.out_dim(d, 0)
            }
            Expr::Negate(arg) => arg.out_dim(nx, nv),
            Expr::Tuple(es) => {
                for e in es {
                    if e.out_dim(nx, nv)? != 1 {
                        return Err(Error::Dimension("tuple bundles scalar expressions".into()));
                    }
                }
                Ok(es.len())
            }
            Expr::SmoothFn { arg, .. } => {
                if arg.out_dim(nx, nv)? != 1 {
                    return Err(Error::Dimension(
                        "smooth-univariate needs a scalar operand".into(),
                    ));
                }
                Ok(1)
            }
        }
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::VarX(_) => true,
            Expr::VarV(_) | Expr::Const(_) => false,
            Expr::Affine { arg, .. }
            | Expr::Scale { arg, .. }
            | Expr::Abs(arg)
            | Expr::Norm(arg)
            | Expr::NormPower { arg, .. }
            | Expr::Negate(arg)
            | Expr::SmoothFn { arg, .. } => arg.depends_on_x(),
            Expr::VScale { arg, .. } => arg.depends_on_x(),
            Expr::Sum(es) | Expr::Max(es) | Expr::Tuple(es) => es.iter().any(|e| e.depends_on_x()),
            Expr::Compose { inner, .. } => inner.depends_on_x(),
        }
    }

    pub fn depends_on_v(&self) -> bool {
        match self {
            Expr::VarV(_) => true,
            Expr::VarX(_) | Expr::Const(_) => false,
            Expr::Affine { arg, .. }
            | Expr::Scale { arg, .. }
            | Expr::Abs(arg)
            | Expr::Norm(arg)
            | Expr::NormPower { arg, .. }
            | Expr::Negate(arg)
            | Expr::SmoothFn { arg, .. } => arg.depends_on_v(),
            Expr::VScale { coeff, arg } => coeff.depends_on_v() || arg.depends_on_v(),
            Expr::Sum(es) | Expr::Max(es) | Expr::Tuple(es) => es.iter().any(|e| e.depends_on_v()),
            Expr::Compose { inner, .. } => inner.depends_on_v(),
        }
    }

    /// Indices of x-coordinates the expression syntactically reads.
    pub fn x_support(&self, acc: &mut Vec<usize>) {
        match self {
            Expr::VarX(idx) => {
                for &i in idx {
                    if !acc.contains(&i) {
                        acc.push(i);
                    }
                }
            }
            Expr::VarV(_) | Expr::Const(_) => {}
            // a zero column of an affine map kills the dependence on
            // that coordinate, so filter when the argument is a plain
            // variable tuple
            Expr::Affine { a, arg, .. } => {
                if let Expr::VarX(idx) = arg.as_ref() {
                    for (k, &i) in idx.iter().enumerate() {
                        if a.iter().any(|row| row[k] != 0.0) && !acc.contains(&i) {
                            acc.push(i);
                        }
                    }
                } else {
                    arg.x_support(acc);
                }
            }
            Expr::Scale { arg, .. }
            | Expr::Abs(arg)
            | Expr::Norm(arg)
            | Expr::NormPower { arg, .. }
            | Expr::Negate(arg)
            | Expr::SmoothFn { arg, .. } => arg.x_support(acc),
            Expr::VScale { arg, .. } => arg.x_support(acc),
            Expr::Sum(es) | Expr::Max(es) | Expr::Tuple(es) => {
                for e in es {
                    e.x_support(acc);
                }
            }
            Expr::Compose { inner, .. } => inner.x_support(acc),
        }
    }

    /// True when the expression is affine in x for every fixed v
    /// (x-free subtrees count as constants).
    pub fn is_affine_in_x(&self) -> bool {
        if !self.depends_on_x() {
            return true;
        }
        match self {
            Expr::VarX(_) => true,
            Expr::Affine { arg, .. } | Expr::Scale { arg, .. } | Expr::Negate(arg) => {
                arg.is_affine_in_x()
            }
            Expr::VScale { arg, .. } => arg.is_affine_in_x(),
            Expr::Sum(es) | Expr::Tuple(es) => es.iter().all(|e| e.is_affine_in_x()),
            Expr::Compose { outer, inner } => inner.is_affine_in_x() && outer.is_affine_in_x(),
            _ => false,
        }
    }

    /// Conservative convexity-in-x check (used for max-rule exactness).
    pub fn is_convex_in_x(&self, v: &[f64]) -> bool {
        if !self.depends_on_x() {
            return true;
        }
        match self {
            Expr::VarX(_) => true,
            Expr::Affine { arg, .. } => arg.is_affine_in_x(),
            Expr::Scale { t, arg } => {
                if *t >= 0.0 {
                    arg.is_convex_in_x(v)
                } else {
                    arg.is_affine_in_x()
                }
            }
            Expr::VScale { coeff, arg } => {
                let c = eval_scalar_v_only(coeff, v);
                if c >= 0.0 {
                    arg.is_convex_in_x(v)
                } else {
                    arg.is_affine_in_x()
                }
            }
            Expr::Sum(es) => es.iter().all(|e| e.is_convex_in_x(v)),
            Expr::Abs(arg) | Expr::Norm(arg) => arg.is_affine_in_x(),
            Expr::NormPower { arg, .. } => arg.is_affine_in_x(),
            Expr::Max(es) => es.iter().all(|e| e.is_convex_in_x(v)),
            Expr::Negate(arg) => arg.is_affine_in_x(),
            Expr::SmoothFn { kind, arg } => matches!(kind, Smooth::Square) && arg.is_affine_in_x(),
            Expr::Compose { .. } | Expr::Tuple(_) | Expr::VarV(_) | Expr::Const(_) => false,
        }
    }

    /// Exact composite value; pure and total on the declared box.
    pub fn eval(&self, x: &[f64], v: &[f64]) -> Value {
        match self {
            Expr::VarX(idx) => {
                if idx.len() == 1 {
                    Value::Scalar(x[idx[0]])
                } else {
                    Value::Vector(idx.iter().map(|&i| x[i]).collect())
                }
            }
            Expr::VarV(idx) => {
                if idx.len() == 1 {
                    Value::Scalar(v[idx[0]])
                } else {
                    Value::Vector(idx.iter().map(|&i| v[i]).collect())
                }
            }
            Expr::Const(c) => {
                if c.len() == 1 {
                    Value::Scalar(c[0])
                } else {
                    Value::Vector(c.clone())
                }
            }
            Expr::Affine { a, b, arg } => {
                let inner = arg.eval(x, v);
                let apply = |row: &Vec<f64>, off: f64| -> f64 {
                    match &inner {
                        Value::Scalar(s) => row[0] * s + off,
                        Value::Vector(u) => {
                            row.iter().zip(u).map(|(r, y)| r * y).sum::<f64>() + off
                        }
                    }
                };
                if a.len() == 1 {
                    Value::Scalar(apply(&a[0], b[0]))
                } else {
                    Value::Vector(a.iter().zip(b).map(|(row, &off)| apply(row, off)).collect())
                }
            }
            Expr::Scale { t, arg } => match arg.eval(x, v) {
                Value::Scalar(s) => Value::Scalar(t * s),
                Value::Vector(u) => Value::Vector(u.into_iter().map(|y| t * y).collect()),
            },
            Expr::VScale { coeff, arg } => {
                let c = coeff
                    .eval(x, v)
                    .scalar()
                    .expect("vscale coefficient checked scalar");
                match arg.eval(x, v) {
                    Value::Scalar(s) => Value::Scalar(c * s),
                    Value::Vector(u) => Value::Vector(u.into_iter().map(|y| c * y).collect()),
                }
            }
            Expr::Sum(es) => {
                let first = es[0].eval(x, v);
                match first {
                    Value::Scalar(mut s) => {
                        for e in &es[1..] {
                            s += match e.eval(x, v) {
                                Value::Scalar(t) => t,
                                Value::Vector(u) => u[0],
                            };
                        }
                        Value::Scalar(s)
                    }
                    Value::Vector(mut acc) => {
                        for e in &es[1..] {
                            let u = e.eval(x, v).into_vec();
                            for (a, b) in acc.iter_mut().zip(u) {
                                *a += b;
                            }
                        }
                        Value::Vector(acc)
                    }
                }
            }
            Expr::Abs(arg) => Value::Scalar(
                arg.eval(x, v)
                    .scalar()
                    .expect("abs operand checked scalar")
                    .abs(),
            ),
            Expr::Norm(arg) => {
                let n = match arg.eval(x, v) {
                    Value::Scalar(s) => s.abs(),
                    Value::Vector(u) => u.iter().map(|y| y * y).sum::<f64>().sqrt(),
                };
                Value::Scalar(n)
            }
            Expr::NormPower {
                alpha,
                beta,
                center,
                arg,
            } => {
                let n = match arg.eval(x, v) {
                    Value::Scalar(s) => (s - center[0]).abs(),
                    Value::Vector(u) => u
                        .iter()
                        .zip(center)
                        .map(|(y, c)| (y - c) * (y - c))
                        .sum::<f64>()
                        .sqrt(),
                };
                Value::Scalar(alpha * n.powf(*beta))
            }
            Expr::Max(es) => {
                let mut best = f64::NEG_INFINITY;
                for e in es {
                    let s = e.eval(x, v).scalar().expect("max operand checked scalar");
                    if s > best {
                        best = s;
                    }
                }
                Value::Scalar(best)
            }
            Expr::Compose { outer, inner } => {
                let y = inner.eval(x, v).into_vec();
                outer.eval(&y, &[])
            }
            Expr::Negate(arg) => match arg.eval(x, v) {
                Value::Scalar(s) => Value::Scalar(-s),
                Value::Vector(u) => Value::Vector(u.into_iter().map(|y| -y).collect()),
            },
            Expr::Tuple(es) => Value::Vector(
                es.iter()
                    .map(|e| e.eval(x, v).scalar().expect("tuple member checked scalar"))
                    .collect(),
            ),
            Expr::SmoothFn { kind, arg } => {
                let t = arg
                    .eval(x, v)
                    .scalar()
                    .expect("smooth operand checked scalar");
                Value::Scalar(kind.eval(t))
            }
        }
    }

    pub fn eval_scalar(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.eval(x, v).scalar()
    }
}

fn eval_scalar_v_only(e: &Expr, v: &[f64]) -> f64 {
    e.eval(&[], v).scalar().unwrap_or(0.0)
}

/// Regular vertex discretization of the 2-D Euclidean unit ball.
/// With k vertices the polygon under-approximates the ball with
/// Hausdorff error 1 - cos(pi/k) (about 1.2e-3 for k = 64).
pub fn unit_ball_2d(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * (i as f64) / (k as f64);
            vec![th.cos(), th.sin()]
        })
        .collect()
}

pub const BALL_RESOLUTION: usize = 64;

/// Exact limiting subdifferential of a leaf-level primitive in its own
/// argument space (dimension-1 balls are exact segments; 2-D balls are
/// 64-vertex discretizations).
pub fn primitive_subdiff(e: &Expr, point: &[f64]) -> Result<PolyUnion> {
    match e {
        Expr::Abs(_) => {
            let t = point[0];
            if t.abs() <= TOL_KINK {
                Ok(PolyUnion {
                    parts: vec![hull(&[vec![-1.0], vec![1.0]])?],
                })
            } else {
                Ok(PolyUnion::singleton(vec![t.signum()]))
            }
        }
        Expr::Norm(_) => {
            let n2: f64 = point.iter().map(|y| y * y).sum();
            let n = n2.sqrt();
            if n <= TOL_KINK {
                match point.len() {
                    1 => Ok(PolyUnion {
                        parts: vec![hull(&[vec![-1.0], vec![1.0]])?],
                    }),
                    2 => Ok(PolyUnion {
                        parts: vec![hull(&unit_ball_2d(BALL_RESOLUTION))?],
                    }),
                    d => Err(Error::Unsupported(format!(
                        "norm subdifferential at 0 in dimension {d}"
                    ))),
                }
            } else {
                Ok(PolyUnion::singleton(point.iter().map(|y| y / n).collect()))
            }
        }
        Expr::NormPower {
            alpha,
            beta,
            center,
            ..
        } => {
            let w: Vec<f64> = point.iter().zip(center).map(|(y, c)| y - c).collect();
            let n: f64 = w.iter().map(|y| y * y).sum::<f64>().sqrt();
            if n <= TOL_KINK {
                if *beta > 1.0 {
                    Ok(PolyUnion::singleton(vec![0.0; w.len()]))
                } else {
                    let ball = primitive_subdiff(
                        &Expr::Norm(Box::new(Expr::VarX((0..w.len()).collect()))),
                        &w,
                    )?;
                    Ok(ball.scale(*alpha))
                }
            } else {
                let s = alpha * beta * n.powf(beta - 2.0);
                Ok(PolyUnion::singleton(w.iter().map(|y| s * y).collect()))
            }
        }
        Expr::SmoothFn { kind, .. } => {
            let t = point[0];
            if kind.has_kink() && t.abs() <= TOL_KINK {
                let (lo, hi) = kind.kink_interval();
                Ok(PolyUnion {
                    parts: vec![hull(&[vec![lo], vec![hi]])?],
                })
            } else {
                Ok(PolyUnion::singleton(vec![kind.deriv(t)]))
            }
        }
        Expr::Affine { a, .. } => {
            if a.len() != 1 {
                return Err(Error::Dimension(
                    "primitive subdifferential of a vector affine map".into(),
                ));
            }
            Ok(PolyUnion::singleton(a[0].clone()))
        }
        _ => Err(Error::Unsupported("not a leaf-level primitive".into())),
    }
}

/// Segment polytope helper in 1-D.
pub fn segment(lo: f64, hi: f64) -> Polytope {
    hull(&[vec![lo], vec![hi]]).expect("two points")
}
