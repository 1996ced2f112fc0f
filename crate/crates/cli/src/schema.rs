//! JSON problem-file schema: expression trees as nested tagged objects,
//! numbers as plain floats or exact rational strings, optional candidate
//! point / certificate / norm-composite blocks. Unknown fields are
//! rejected everywhere so that typos surface as schema errors.

use anyhow::{anyhow, bail, Context, Result};
use polykkt::apps::{AupSpec, CulSpec, Fixture, NormTerm};
use polykkt::expr::Smooth;
use polykkt::robust::Constraint;
use polykkt::{Certificate, Expr, RobustProblem, UncertaintySet};
use serde::{Deserialize, Serialize};

/// A number in a problem file: either a JSON float or a string holding a
/// decimal literal or an exact rational like "1/3".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        match self {
            Num::Float(f) => Ok(*f),
            Num::Text(s) => parse_num_str(s),
        }
    }
}

fn parse_num_str(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: f64 = n
            .trim()
            .parse()
            .with_context(|| format!("bad numerator in {s:?}"))?;
        let d: f64 = d
            .trim()
            .parse()
            .with_context(|| format!("bad denominator in {s:?}"))?;
        if d == 0.0 {
            bail!("zero denominator in {s:?}");
        }
        Ok(n / d)
    } else {
        s.parse().with_context(|| format!("not a number: {s:?}"))
    }
}

fn nums(v: &[Num]) -> Result<Vec<f64>> {
    v.iter().map(Num::value).collect()
}

fn num_rows(m: &[Vec<Num>]) -> Result<Vec<Vec<f64>>> {
    m.iter().map(|r| nums(r)).collect()
}

fn floats(v: &[f64]) -> Vec<Num> {
    v.iter().map(|&x| Num::Float(x)).collect()
}

fn float_rows(m: &[Vec<f64>]) -> Vec<Vec<Num>> {
    m.iter().map(|r| floats(r)).collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarSpace {
    X,
    V,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothName {
    Square,
    ReciprocalShifted,
    InvSqrtShifted,
}

impl SmoothName {
    fn to_core(self) -> Smooth {
        match self {
            SmoothName::Square => Smooth::Square,
            SmoothName::ReciprocalShifted => Smooth::ReciprocalShifted,
            SmoothName::InvSqrtShifted => Smooth::InvSqrtShifted,
        }
    }

    fn from_core(s: Smooth) -> SmoothName {
        match s {
            Smooth::Square => SmoothName::Square,
            Smooth::ReciprocalShifted => SmoothName::ReciprocalShifted,
            Smooth::InvSqrtShifted => SmoothName::InvSqrtShifted,
        }
    }
}

/// One expression-tree node. Tag is "kind"; children are nested nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExprNode {
    VariableProjection {
        space: VarSpace,
        indices: Vec<usize>,
    },
    Constant {
        value: Vec<Num>,
    },
    Affine {
        matrix: Vec<Vec<Num>>,
        offset: Vec<Num>,
        arg: Box<ExprNode>,
    },
    Scale {
        factor: Num,
        arg: Box<ExprNode>,
    },
    /// parameter-dependent scalar coefficient times an expression
    ParamScale {
        coeff: Box<ExprNode>,
        arg: Box<ExprNode>,
    },
    Sum {
        terms: Vec<ExprNode>,
    },
    Abs {
        arg: Box<ExprNode>,
    },
    EuclidNorm {
        arg: Box<ExprNode>,
    },
    NormPower {
        alpha: Num,
        beta: Num,
        center: Vec<Num>,
        arg: Box<ExprNode>,
    },
    Max {
        terms: Vec<ExprNode>,
    },
    Compose {
        outer: Box<ExprNode>,
        inner: Box<ExprNode>,
    },
    Negate {
        arg: Box<ExprNode>,
    },
    Tuple {
        terms: Vec<ExprNode>,
    },
    SmoothUnivariate {
        function: SmoothName,
        arg: Box<ExprNode>,
    },
}

impl ExprNode {
    pub fn to_expr(&self) -> Result<Expr> {
        Ok(match self {
            ExprNode::VariableProjection {
                space: VarSpace::X,
                indices,
            } => Expr::VarX(indices.clone()),
            ExprNode::VariableProjection {
                space: VarSpace::V,
                indices,
            } => Expr::VarV(indices.clone()),
            ExprNode::Constant { value } => Expr::Const(nums(value)?),
            ExprNode::Affine {
                matrix,
                offset,
                arg,
            } => Expr::Affine {
                a: num_rows(matrix)?,
                b: nums(offset)?,
                arg: Box::new(arg.to_expr()?),
            },
            ExprNode::Scale { factor, arg } => Expr::Scale {
                t: factor.value()?,
                arg: Box::new(arg.to_expr()?),
            },
            ExprNode::ParamScale { coeff, arg } => Expr::VScale {
                coeff: Box::new(coeff.to_expr()?),
                arg: Box::new(arg.to_expr()?),
            },
            ExprNode::Sum { terms } => Expr::Sum(to_exprs(terms)?),
            ExprNode::Abs { arg } => Expr::Abs(Box::new(arg.to_expr()?)),
            ExprNode::EuclidNorm { arg } => Expr::Norm(Box::new(arg.to_expr()?)),
            ExprNode::NormPower {
                alpha,
                beta,
                center,
                arg,
            } => Expr::NormPower {
                alpha: alpha.value()?,
                beta: beta.value()?,
                center: nums(center)?,
                arg: Box::new(arg.to_expr()?),
            },
            ExprNode::Max { terms } => Expr::Max(to_exprs(terms)?),
            ExprNode::Compose { outer, inner } => Expr::Compose {
                outer: Box::new(outer.to_expr()?),
                inner: Box::new(inner.to_expr()?),
            },
            ExprNode::Negate { arg } => Expr::Negate(Box::new(arg.to_expr()?)),
            ExprNode::Tuple { terms } => Expr::Tuple(to_exprs(terms)?),
            ExprNode::SmoothUnivariate { function, arg } => Expr::SmoothFn {
                kind: function.to_core(),
                arg: Box::new(arg.to_expr()?),
            },
        })
    }

    pub fn from_expr(e: &Expr) -> ExprNode {
        match e {
            Expr::VarX(idx) => ExprNode::VariableProjection {
                space: VarSpace::X,
                indices: idx.clone(),
            },
            Expr::VarV(idx) => ExprNode::VariableProjection {
                space: VarSpace::V,
                indices: idx.clone(),
            },
            Expr::Const(c) => ExprNode::Constant { value: floats(c) },
            Expr::Affine { a, b, arg } => ExprNode::Affine {
                matrix: float_rows(a),
                offset: floats(b),
                arg: Box::new(ExprNode::from_expr(arg)),
            },
            Expr::Scale { t, arg } => ExprNode::Scale {
                factor: Num::Float(*t),
                arg: Box::new(ExprNode::from_expr(arg)),
            },
            Expr::VScale { coeff, arg } => ExprNode::ParamScale {
                coeff: Box::new(ExprNode::from_expr(coeff)),
                arg: Box::new(ExprNode::from_expr(arg)),
            },
            Expr::Sum(terms) => ExprNode::Sum {
                terms: from_exprs(terms),
            },
            Expr::Abs(arg) => ExprNode::Abs {
                arg: Box::new(ExprNode::from_expr(arg)),
            },
            Expr::Norm(arg) => ExprNode::EuclidNorm {
                arg: Box::new(ExprNode::from_expr(arg)),
            },
            Expr::NormPower {
                alpha,
                beta,
                center,
                arg,
            } => ExprNode::NormPower {
                alpha: Num::Float(*alpha),
                beta: Num::Float(*beta),
                center: floats(center),
                arg: Box::new(ExprNode::from_expr(arg)),
            },
            Expr::Max(terms) => ExprNode::Max {
                terms: from_exprs(terms),
            },
            Expr::Compose { outer, inner } => ExprNode::Compose {
                outer: Box::new(ExprNode::from_expr(outer)),
                inner: Box::new(ExprNode::from_expr(inner)),
            },
            Expr::Negate(arg) => ExprNode::Negate {
                arg: Box::new(ExprNode::from_expr(arg)),
            },
            Expr::Tuple(terms) => ExprNode::Tuple {
                terms: from_exprs(terms),
            },
            Expr::SmoothFn { kind, arg } => ExprNode::SmoothUnivariate {
                function: SmoothName::from_core(*kind),
                arg: Box::new(ExprNode::from_expr(arg)),
            },
        }
    }
}

fn to_exprs(nodes: &[ExprNode]) -> Result<Vec<Expr>> {
    nodes.iter().map(ExprNode::to_expr).collect()
}

fn from_exprs(exprs: &[Expr]) -> Vec<ExprNode> {
    exprs.iter().map(ExprNode::from_expr).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    Inequality,
    Equality,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyBlock {
    pub lo: Vec<Num>,
    pub hi: Vec<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

impl UncertaintyBlock {
    fn to_core(&self) -> Result<UncertaintySet> {
        Ok(UncertaintySet {
            lo: nums(&self.lo)?,
            hi: nums(&self.hi)?,
            resolution: self.resolution.unwrap_or(1001),
        })
    }

    fn from_core(s: &UncertaintySet) -> UncertaintyBlock {
        UncertaintyBlock {
            lo: floats(&s.lo),
            hi: floats(&s.hi),
            resolution: Some(s.resolution),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub expr: ExprNode,
    pub uncertainty: UncertaintyBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<Num>,
    pub hi: Vec<Num>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormTermSpec {
    pub matrix: Vec<Vec<Num>>,
    pub target: Vec<Num>,
    pub alpha: Num,
    pub beta: Num,
}

/// Weight-plus-norm objective structure: objective k is
/// r_k(x) + alpha_k * ||T_k x - y0_k||^beta_k.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AupBlock {
    pub smooth_parts: Vec<ExprNode>,
    pub norm_terms: Vec<NormTermSpec>,
}

/// Linear-composite objective structure: objective k is f_k(T_k x).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CulBlock {
    pub outer: Vec<ExprNode>,
    pub operators: Vec<Vec<Vec<Num>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub y_star: Vec<Num>,
    pub mu: Vec<Num>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<Num>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aux_duals: Vec<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub active_v: Vec<Vec<Num>>,
}

impl CertificateSpec {
    pub fn to_core(&self) -> Result<Certificate> {
        Ok(Certificate {
            y_star: nums(&self.y_star)?,
            mu: nums(&self.mu)?,
            sigma: nums(&self.sigma)?,
            aux_duals: num_rows(&self.aux_duals)?,
            active_v: num_rows(&self.active_v)?,
        })
    }

    pub fn from_core(c: &Certificate) -> CertificateSpec {
        CertificateSpec {
            y_star: floats(&c.y_star),
            mu: floats(&c.mu),
            sigma: floats(&c.sigma),
            aux_duals: float_rows(&c.aux_duals),
            active_v: float_rows(&c.active_v),
        }
    }
}

/// Top-level problem file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    #[serde(rename = "box")]
    pub eval_box: BoxSpec,
    pub objectives: Vec<ExprNode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_objective: Option<AupBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite_objective: Option<CulBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSpec>,
}

/// Everything a command needs after schema validation.
pub struct Loaded {
    pub problem: RobustProblem,
    pub point: Option<Vec<f64>>,
    pub certificate: Option<Certificate>,
    pub aup: Option<AupSpec>,
    pub cul: Option<CulSpec>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile> {
        let file: ProblemFile = serde_json::from_str(text).context("schema error")?;
        Ok(file)
    }

    pub fn load(&self) -> Result<Loaded> {
        let box_lo = nums(&self.eval_box.lo)?;
        let box_hi = nums(&self.eval_box.hi)?;
        if box_lo.len() != self.dimension || box_hi.len() != self.dimension {
            bail!("box bounds must have length {}", self.dimension);
        }
        let objectives = to_exprs(&self.objectives)?;
        let mut constraints = Vec::new();
        let mut equalities = Vec::new();
        for c in &self.constraints {
            let core = Constraint {
                expr: c.expr.to_expr()?,
                set: c.uncertainty.to_core()?,
            };
            match c.kind {
                ConstraintKind::Inequality => constraints.push(core),
                ConstraintKind::Equality => equalities.push(core),
            }
        }
        let problem = RobustProblem {
            objectives,
            constraints: constraints.clone(),
            equalities: equalities.clone(),
            box_lo: box_lo.clone(),
            box_hi: box_hi.clone(),
        };
        problem
            .validate()
            .map_err(|e| anyhow!("invalid problem: {e}"))?;

        let aup = match &self.norm_objective {
            Some(block) => {
                let mut norm_terms = Vec::new();
                for t in &block.norm_terms {
                    norm_terms.push(NormTerm {
                        t: num_rows(&t.matrix)?,
                        y0: nums(&t.target)?,
                        alpha: t.alpha.value()?,
                        beta: t.beta.value()?,
                    });
                }
                Some(AupSpec {
                    r: to_exprs(&block.smooth_parts)?,
                    norm_terms,
                    constraints: constraints.clone(),
                    equalities: equalities.clone(),
                    box_lo: box_lo.clone(),
                    box_hi: box_hi.clone(),
                })
            }
            None => None,
        };
        let cul = match &self.composite_objective {
            Some(block) => Some(CulSpec {
                fs: to_exprs(&block.outer)?,
                ts: block
                    .operators
                    .iter()
                    .map(|m| num_rows(m))
                    .collect::<Result<_>>()?,
                constraints,
                box_lo,
                box_hi,
            }),
            None => None,
        };
        let point = match &self.point {
            Some(p) => {
                let p = nums(p)?;
                if p.len() != self.dimension {
                    bail!("candidate point must have length {}", self.dimension);
                }
                Some(p)
            }
            None => None,
        };
        let certificate = self.certificate.as_ref().map(|c| c.to_core()).transpose()?;
        Ok(Loaded {
            problem,
            point,
            certificate,
            aup,
            cul,
        })
    }

    /// Serialize a built-in fixture into the file schema.
    pub fn from_fixture(fx: &Fixture) -> ProblemFile {
        let p = &fx.problem;
        let mut constraints: Vec<ConstraintSpec> = p
            .constraints
            .iter()
            .map(|c| ConstraintSpec {
                kind: ConstraintKind::Inequality,
                expr: ExprNode::from_expr(&c.expr),
                uncertainty: UncertaintyBlock::from_core(&c.set),
            })
            .collect();
        constraints.extend(p.equalities.iter().map(|c| ConstraintSpec {
            kind: ConstraintKind::Equality,
            expr: ExprNode::from_expr(&c.expr),
            uncertainty: UncertaintyBlock::from_core(&c.set),
        }));
        let norm_objective = fx.aup.as_ref().map(|a| AupBlock {
            smooth_parts: from_exprs(&a.r),
            norm_terms: a
                .norm_terms
                .iter()
                .map(|t| NormTermSpec {
                    matrix: float_rows(&t.t),
                    target: floats(&t.y0),
                    alpha: Num::Float(t.alpha),
                    beta: Num::Float(t.beta),
                })
                .collect(),
        });
        let composite_objective = fx.cul.as_ref().map(|c| CulBlock {
            outer: from_exprs(&c.fs),
            operators: c.ts.iter().map(|m| float_rows(m)).collect(),
        });
        ProblemFile {
            dimension: p.nx(),
            eval_box: BoxSpec {
                lo: floats(&p.box_lo),
                hi: floats(&p.box_hi),
            },
            objectives: from_exprs(&p.objectives),
            constraints,
            norm_objective,
            composite_objective,
            point: Some(floats(&fx.x_bar)),
            certificate: Some(CertificateSpec::from_core(&fx.certificate)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_and_decimal_strings_parse() {
        assert_eq!(parse_num_str("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_num_str(" -2/8 ").unwrap(), -0.25);
        assert_eq!(
            parse_num_str("0.4714045207910317").unwrap(),
            0.4714045207910317
        );
        assert!(parse_num_str("1/0").is_err());
        assert!(parse_num_str("sqrt(2)/3").is_err());
    }

    #[test]
    fn builtin_fixture_round_trips_field_identical() {
        for name in polykkt::apps::builtin_names() {
            let fx = polykkt::builtin_example(name).unwrap();
            let file = ProblemFile::from_fixture(&fx);
            let text = serde_json::to_string_pretty(&file).unwrap();
            let reparsed = ProblemFile::parse(&text).unwrap();
            let text2 = serde_json::to_string_pretty(&reparsed).unwrap();
            assert_eq!(text, text2, "round-trip drift for {name}");
            reparsed.load().unwrap();
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let fx = polykkt::builtin_example("ex3-2").unwrap();
        let mut v = serde_json::to_value(ProblemFile::from_fixture(&fx)).unwrap();
        v.as_object_mut()
            .unwrap()
            .insert("extra".into(), serde_json::json!(1));
        assert!(serde_json::from_value::<ProblemFile>(v).is_err());
    }

    #[test]
    fn loaded_problem_matches_builtin() {
        let fx = polykkt::builtin_example("ex3-2").unwrap();
        let loaded = ProblemFile::from_fixture(&fx).load().unwrap();
        assert_eq!(loaded.problem.objectives.len(), 3);
        assert_eq!(loaded.problem.constraints.len(), 2);
        assert_eq!(loaded.point.as_deref(), Some(&fx.x_bar[..]));
        let cert = loaded.certificate.unwrap();
        assert_eq!(cert.y_star, fx.certificate.y_star);
        assert_eq!(cert.mu, fx.certificate.mu);
    }
}
