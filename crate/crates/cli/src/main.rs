//! Command-line front end: JSON problem files in, verdicts and reports
//! out. Exit codes: 0 the queried condition holds (or the point is
//! feasible), 1 it fails, 2 usage or schema error.

mod schema;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polykkt::certify::{
    check_certificate, check_cq, check_equality_certificate, check_linear_composite,
    find_fritz_john, find_kkt,
};
use polykkt::robust::{active_uncertainty, is_feasible, phi};
use polykkt::subdiff::{constraint_agg_set, equality_agg_set, subdiff};
use polykkt::verify::{
    converse_duality_check, dual_feasible, falsify_pseudo_convexity, sufficiency_pipeline,
    verify_efficiency, verify_weak_efficiency, weak_duality_audit, DualityMode,
    PseudoConvexityMode, SignQuantifier,
};
use polykkt::{Certificate, RobustProblem, TOL_MEMBER};
use schema::{Loaded, ProblemFile};
use serde_json::{json, Value};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "polykkt",
    version,
    about = "Robust multiobjective optimality checks"
)]
struct Cli {
    /// Emit machine-readable JSON (stable key order) instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Robust feasibility of a point, with per-constraint worst-case values.
    Feasible {
        file: String,
        #[command(flatten)]
        at: PointArg,
        /// Feasibility tolerance.
        #[arg(long, default_value_t = TOL_MEMBER)]
        tol: f64,
    },
    /// Subdifferential or aggregate-set vertices at a point.
    Subdiff {
        file: String,
        #[command(flatten)]
        at: PointArg,
        /// Objective index (0-based).
        #[arg(long, conflicts_with_all = ["constraint", "equality"])]
        objective: Option<usize>,
        /// Inequality-constraint index: aggregate set, or the plain
        /// subdifferential when --param is given.
        #[arg(long)]
        constraint: Option<usize>,
        /// Equality-constraint index (aggregate set).
        #[arg(long, conflicts_with_all = ["constraint"])]
        equality: Option<usize>,
        /// Fixed uncertainty value for --constraint (comma-separated).
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        param: Option<Coords>,
    },
    /// Verify the multiplier certificate embedded in the file.
    CheckKkt {
        file: String,
        #[command(flatten)]
        at: PointArg,
    },
    /// Search for a certificate with a nonzero objective-multiplier block.
    FindKkt {
        file: String,
        #[command(flatten)]
        at: PointArg,
    },
    /// Search for any nonzero multiplier certificate.
    FindFj {
        file: String,
        #[command(flatten)]
        at: PointArg,
    },
    /// Constraint qualification: 0 outside every active aggregate set.
    CheckCq {
        file: String,
        #[command(flatten)]
        at: PointArg,
    },
    /// Grid audit: no feasible grid point dominates the candidate.
    Verify {
        /// weak: strict domination in every component; pareto: <= with one <.
        #[arg(value_enum)]
        sense: Sense,
        file: String,
        #[command(flatten)]
        at: PointArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Search for a counterexample to generalized pseudo-convexity.
    PseudoFalsify {
        file: String,
        #[command(flatten)]
        at: PointArg,
        #[arg(long, value_enum, default_value_t = Mode::Type1)]
        mode: Mode,
        /// Random probe points per multiplier tuple.
        #[arg(long, default_value_t = 40)]
        samples: usize,
    },
    /// Dual feasibility of (z, y*, mu) plus duality-bound audits.
    DualCheck {
        file: String,
        /// Dual point z (defaults to the file's candidate point).
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        z: Option<Coords>,
        /// Where the multiplier sign condition must hold.
        #[arg(long, value_enum, default_value_t = Quantifier::Active)]
        quantifier: Quantifier,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Full pipeline: feasibility, CQ, certificate search, sufficiency.
    Report {
        file: String,
        #[command(flatten)]
        at: PointArg,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 40)]
        samples: usize,
    },
    /// Write a built-in fixture as a problem file (stdout by default).
    Export {
        /// Fixture name; use `list` to print the available names.
        name: String,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Args)]
struct PointArg {
    /// Evaluation point, comma-separated (defaults to the file's candidate).
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Option<Coords>,
}

#[derive(Args)]
struct GridArgs {
    /// Audit grid, e.g. 161x161 (defaults to 101 per axis).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    /// Audit box override, e.g. "-4,0;-4,4" as "lo;hi" (defaults to the file's box).
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    boxx: Option<BoxOverride>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sense {
    Weak,
    Pareto,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Mode {
    Type1,
    Type2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantifier {
    Active,
    All,
}

/// Newtype wrappers so clap treats each flag as a single value that we
/// split ourselves.
#[derive(Clone)]
struct Coords(Vec<f64>);

#[derive(Clone)]
struct GridSpec(Vec<usize>);

#[derive(Clone)]
struct BoxOverride(Vec<f64>, Vec<f64>);

fn parse_point(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if let Some((n, d)) = t.split_once('/') {
                let n: f64 = n.trim().parse().map_err(|e| format!("{e}: {t:?}"))?;
                let d: f64 = d.trim().parse().map_err(|e| format!("{e}: {t:?}"))?;
                if d == 0.0 {
                    return Err(format!("zero denominator: {t:?}"));
                }
                Ok(n / d)
            } else {
                t.parse().map_err(|e| format!("{e}: {t:?}"))
            }
        })
        .collect::<Result<Vec<f64>, String>>()
        .map(Coords)
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let axes: Result<Vec<usize>, _> = s
        .split(['x', 'X'])
        .map(|t| t.trim().parse::<usize>())
        .collect();
    let axes = axes.map_err(|e| format!("bad grid {s:?}: {e}"))?;
    if axes.iter().any(|&n| n < 2) {
        return Err(format!("grid axes must be >= 2: {s:?}"));
    }
    Ok(GridSpec(axes))
}

fn parse_box(s: &str) -> Result<BoxOverride, String> {
    let (lo, hi) = s
        .split_once(';')
        .ok_or_else(|| format!("expected \"lo;hi\": {s:?}"))?;
    let Coords(lo) = parse_point(lo)?;
    let Coords(hi) = parse_point(hi)?;
    if lo.len() != hi.len() {
        return Err("box lo/hi lengths differ".into());
    }
    Ok(BoxOverride(lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &str) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    ProblemFile::parse(&text)?.load()
}

fn resolve_point(at: &PointArg, loaded: &Loaded) -> Result<Vec<f64>> {
    at.point
        .clone()
        .map(|c| c.0)
        .or_else(|| loaded.point.clone())
        .ok_or_else(|| anyhow!("no --point given and the file has no candidate point"))
}

fn resolve_grid(grid: &GridArgs, problem: &RobustProblem) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let (lo, hi) = match &grid.boxx {
        Some(BoxOverride(lo, hi)) => (lo.clone(), hi.clone()),
        None => (problem.box_lo.clone(), problem.box_hi.clone()),
    };
    let res = match &grid.grid {
        Some(GridSpec(r)) if r.len() == lo.len() => r.clone(),
        Some(GridSpec(r)) => vec![r[0]; lo.len()],
        None => vec![101; lo.len()],
    };
    (lo, hi, res)
}

/// Print the verdict payload and map `holds` onto the exit code.
fn emit(json_mode: bool, payload: Value, text: &str, holds: bool) -> u8 {
    if json_mode {
        println!(
            "{}",
            serde_json::to_string_pretty(&payload).expect("serializable payload")
        );
    } else {
        println!("{text}");
    }
    u8::from(!holds)
}

fn vertices_json(vs: &[Vec<f64>]) -> Value {
    json!(vs)
}

fn vertices_text(vs: &[Vec<f64>]) -> String {
    vs.iter()
        .map(|v| {
            let coords: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
            format!("  ({})", coords.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Cmd::Feasible { file, at, tol } => {
            let loaded = load(file)?;
            let x = resolve_point(at, &loaded)?;
            let rep = is_feasible(&loaded.problem, &x, *tol)?;
            let payload = json!({
                "command": "feasible",
                "point": x,
                "report": rep,
            });
            let mut lines = vec![format!(
                "point ({}) is {}",
                fmt_vec(&x),
                if rep.feasible {
                    "robust-feasible"
                } else {
                    "infeasible"
                }
            )];
            for (i, w) in rep.worst_values.iter().enumerate() {
                lines.push(format!("  constraint {i}: worst-case value {w:.9}"));
            }
            for (j, d) in rep.equality_deviations.iter().enumerate() {
                lines.push(format!("  equality {j}: max |deviation| {d:.9}"));
            }
            Ok(emit(cli.json, payload, &lines.join("\n"), rep.feasible))
        }
        Cmd::Subdiff {
            file,
            at,
            objective,
            constraint,
            equality,
            param,
        } => {
            let loaded = load(file)?;
            let x = resolve_point(at, &loaded)?;
            let p = &loaded.problem;
            let (label, verts, exactness) = match (objective, constraint, equality) {
                (Some(k), None, None) => {
                    let f = p
                        .objectives
                        .get(*k)
                        .ok_or_else(|| anyhow!("objective index {k} out of range"))?;
                    let r = subdiff(f, &x, &[], p.nx())?;
                    (
                        format!("objective {k} subdifferential"),
                        r.set.vertex_set(),
                        Some(r.exactness),
                    )
                }
                (None, Some(i), None) => {
                    if i >= &p.constraints.len() {
                        bail!("constraint index {i} out of range");
                    }
                    match param.as_ref().map(|c| &c.0) {
                        Some(v) => {
                            let r = subdiff(&p.constraints[*i].expr, &x, v, p.nx())?;
                            (
                                format!("constraint {i} subdifferential at v=({})", fmt_vec(v)),
                                r.set.vertex_set(),
                                Some(r.exactness),
                            )
                        }
                        None => {
                            let agg = constraint_agg_set(p, *i, &x)?;
                            (
                                format!("constraint {i} aggregate set"),
                                agg.vertices().to_vec(),
                                None,
                            )
                        }
                    }
                }
                (None, None, Some(j)) => {
                    if j >= &p.equalities.len() {
                        bail!("equality index {j} out of range");
                    }
                    let agg = equality_agg_set(p, *j, &x)?;
                    (
                        format!("equality {j} aggregate set"),
                        agg.vertices().to_vec(),
                        None,
                    )
                }
                _ => bail!("pick exactly one of --objective, --constraint, --equality"),
            };
            let payload = json!({
                "command": "subdiff",
                "exactness": exactness.map(|e| format!("{e:?}")),
                "point": x,
                "target": label,
                "vertices": vertices_json(&verts),
            });
            let text = format!("{label} at ({}):\n{}", fmt_vec(&x), vertices_text(&verts));
            Ok(emit(cli.json, payload, &text, true))
        }
        Cmd::CheckKkt { file, at } => {
            let loaded = load(file)?;
            let x = resolve_point(at, &loaded)?;
            let cert = loaded
                .certificate
                .as_ref()
                .ok_or_else(|| anyhow!("file has no certificate block"))?;
            let verdict = run_certificate_check(&loaded, &x, cert)?;
            let payload = json!({
                "command": "check-kkt",
                "point": x,
                "verdict": verdict,
            });
            let text = format!(
                "certificate {} (residual {:.3e}) — {}",
                if verdict.holds() { "holds" } else { "fails" },
                verdict.residual,
                verdict.diagnostics
            );
            Ok(emit(cli.json, payload, &text, verdict.holds()))
        }
        Cmd::FindKkt { file, at } | Cmd::FindFj { file, at } => {
            let kkt_only = matches!(cli.command, Cmd::FindKkt { .. });
            let loaded = load(file)?;
            let x = resolve_point(at, &loaded)?;
            let found = if kkt_only {
                find_kkt(&loaded.problem, &x)?
            } else {
                find_fritz_john(&loaded.problem, &x)?
            };
            let name = if kkt_only { "find-kkt" } else { "find-fj" };
            let payload = json!({
                "command": name,
                "certificate": found,
                "point": x,
            });
            let text = match &found {
                Some(c) => format!(
                    "{name}: certificate found  y*=({})  mu=({})",
                    fmt_vec(&c.y_star),
                    fmt_vec(&c.mu)
                ),
                None => format!("{name}: no certificate at ({})", fmt_vec(&x)),
            };
            Ok(emit(cli.json, payload, &text, found.is_some()))
        }
        Cmd::CheckCq { file, at } => {
            let loaded = load(file)?;
            let x = resolve_point(at, &loaded)?;
            let rep = check_cq(&loaded.problem, &x)?;
            let payload = json!({
                "command": "check-cq",
                "point": x,
                "report": rep,
            });
            let text = format!(
                "constraint qualification {} (active constraints: {:?})",
                if rep.overall { "satisfied" } else { "violated" },
                rep.active
            );
            Ok(emit(cli.json, payload, &text, rep.overall))
        }
        Cmd::Verify {
            sense,
            file,
            at,
            grid,
        } => {
            let loaded = load(file)?;
            let x = resolve_point(at, &loaded)?;
            let (lo, hi, res) = resolve_grid(grid, &loaded.problem);
            let rep = match sense {
                Sense::Weak => verify_weak_efficiency(&loaded.problem, &x, &lo, &hi, &res)?,
                Sense::Pareto => verify_efficiency(&loaded.problem, &x, &lo, &hi, &res)?,
            };
            let holds = rep.dominating_point.is_none();
            let payload = json!({
                "command": "verify",
                "point": x,
                "report": rep,
                "sense": match sense { Sense::Weak => "weak", Sense::Pareto => "pareto" },
            });
            let text = match &rep.dominating_point {
                None => format!(
                    "not dominated on the grid ({} feasible points examined)",
                    rep.feasible_examined
                ),
                Some(d) => format!("dominated by grid point ({})", fmt_vec(d)),
            };
            Ok(emit(cli.json, payload, &text, holds))
        }
        Cmd::PseudoFalsify {
            file,
            at,
            mode,
            samples,
        } => {
            let loaded = load(file)?;
            let x = resolve_point(at, &loaded)?;
            let m = match mode {
                Mode::Type1 => PseudoConvexityMode::TypeI,
                Mode::Type2 => PseudoConvexityMode::TypeII,
            };
            let rep = falsify_pseudo_convexity(&loaded.problem, &x, m, *samples)?;
            let holds = !rep.falsified();
            let payload = json!({
                "command": "pseudo-falsify",
                "point": x,
                "report": rep,
            });
            let text = match &rep.counterexample {
                None => format!("no counterexample ({} tuples checked)", rep.tuples_checked),
                Some(w) => format!(
                    "counterexample at x=({}) with y*=({})",
                    fmt_vec(&w.x),
                    fmt_vec(&w.y_star)
                ),
            };
            Ok(emit(cli.json, payload, &text, holds))
        }
        Cmd::DualCheck {
            file,
            z,
            quantifier,
            grid,
        } => {
            let loaded = load(file)?;
            let z = z
                .clone()
                .map(|c| c.0)
                .or_else(|| loaded.point.clone())
                .ok_or_else(|| anyhow!("no --z given and the file has no candidate point"))?;
            let cert: Certificate = match &loaded.certificate {
                Some(c) => c.clone(),
                None => find_kkt(&loaded.problem, &z)?
                    .ok_or_else(|| anyhow!("no certificate in file and none found at z"))?,
            };
            let q = match quantifier {
                Quantifier::Active => SignQuantifier::Active,
                Quantifier::All => SignQuantifier::All,
            };
            let dp = dual_feasible(&loaded.problem, &z, &cert.y_star, &cert.mu, q)?;
            let (lo, hi, res) = resolve_grid(grid, &loaded.problem);
            let weak = weak_duality_audit(
                &loaded.problem,
                &lo,
                &hi,
                &res,
                std::slice::from_ref(&dp),
                DualityMode::Weak,
            )?;
            let strong = weak_duality_audit(
                &loaded.problem,
                &lo,
                &hi,
                &res,
                std::slice::from_ref(&dp),
                DualityMode::Strong,
            )?;
            let holds = dp.member && dp.sign_ok && weak.is_empty() && strong.is_empty();
            let payload = json!({
                "command": "dual-check",
                "dual_point": dp,
                "strong_violations": strong.len(),
                "weak_violations": weak.len(),
            });
            let text = format!(
                "dual point {} (residual {:.3e}); duality violations: weak {}, strong {}",
                if dp.member && dp.sign_ok {
                    "feasible"
                } else {
                    "infeasible"
                },
                dp.residual,
                weak.len(),
                strong.len()
            );
            Ok(emit(cli.json, payload, &text, holds))
        }
        Cmd::Report {
            file,
            at,
            grid,
            samples,
        } => {
            let loaded = load(file)?;
            let x = resolve_point(at, &loaded)?;
            let p = &loaded.problem;
            let feas = is_feasible(p, &x, TOL_MEMBER)?;
            if !feas.feasible {
                let payload = json!({
                    "command": "report",
                    "feasibility": feas,
                    "point": x,
                });
                return Ok(emit(
                    cli.json,
                    payload,
                    "candidate point is infeasible",
                    false,
                ));
            }
            let cq = check_cq(p, &x)?;
            let (lo, hi, res) = resolve_grid(grid, p);
            let pipeline = sufficiency_pipeline(p, &x, &lo, &hi, &res, *samples)?;
            let cert_verdict = loaded
                .certificate
                .as_ref()
                .map(|c| run_certificate_check(&loaded, &x, c))
                .transpose()?;
            let dual = match &pipeline.kkt {
                Some(c) => {
                    let dp = dual_feasible(p, &x, &c.y_star, &c.mu, SignQuantifier::Active)?;
                    let conv = converse_duality_check(p, &dp, &lo, &hi, &res, *samples)?;
                    Some((dp, conv))
                }
                None => None,
            };
            let worst: Vec<Value> = (0..p.constraints.len())
                .map(|i| {
                    Ok(json!({
                        "active_v": active_uncertainty(p, i, &x)?,
                        "worst_value": phi(p, i, &x)?,
                    }))
                })
                .collect::<Result<_>>()?;
            let holds = pipeline.consistent
                && cq.overall
                && cert_verdict.as_ref().is_none_or(|v| v.holds());
            let payload = json!({
                "command": "report",
                "certificate_verdict": cert_verdict,
                "consistent": pipeline.consistent,
                "constraint_qualification": cq,
                "constraints": worst,
                "dual": dual.as_ref().map(|(dp, conv)| json!({
                    "converse": conv,
                    "point": dp,
                })),
                "feasibility": feas,
                "pipeline": pipeline,
                "point": x,
            });
            let mut lines = vec![
                format!("candidate ({}) is robust-feasible", fmt_vec(&x)),
                format!(
                    "constraint qualification: {}",
                    if cq.overall { "satisfied" } else { "violated" }
                ),
                format!(
                    "certificate search: {}",
                    if pipeline.kkt.is_some() {
                        "found"
                    } else {
                        "none"
                    }
                ),
                format!("pipeline consistent: {}", pipeline.consistent),
                format!("diagnostics: {}", pipeline.diagnostics),
            ];
            if let Some(v) = &cert_verdict {
                lines.push(format!(
                    "embedded certificate: {} (residual {:.3e})",
                    if v.holds() { "holds" } else { "fails" },
                    v.residual
                ));
            }
            Ok(emit(cli.json, payload, &lines.join("\n"), holds))
        }
        Cmd::Export { name, out } => {
            if name == "list" {
                let names = polykkt::apps::builtin_names();
                let payload = json!({ "command": "export", "fixtures": names });
                return Ok(emit(cli.json, payload, &names.join("\n"), true));
            }
            let fx = polykkt::builtin_example(name).map_err(|e| anyhow!("{e}"))?;
            let file = ProblemFile::from_fixture(&fx);
            let text = serde_json::to_string_pretty(&file)?;
            match out {
                Some(path) => {
                    std::fs::write(path, text.as_bytes())
                        .with_context(|| format!("writing {path}"))?;
                    if !cli.json {
                        println!("wrote {path}");
                    } else {
                        println!("{}", json!({ "command": "export", "wrote": path }));
                    }
                }
                None => println!("{text}"),
            }
            Ok(0)
        }
    }
}

/// Dispatch on the objective structure recorded in the file: norm-sum
/// objectives use the decomposed equality check, linear-composite
/// objectives the composite check, everything else the plain one.
fn run_certificate_check(
    loaded: &Loaded,
    x: &[f64],
    cert: &Certificate,
) -> Result<polykkt::Verdict> {
    let v = if let Some(cul) = &loaded.cul {
        check_linear_composite(&loaded.problem, x, cert, cul)?
    } else if loaded.aup.is_some() {
        check_equality_certificate(&loaded.problem, x, cert, loaded.aup.as_ref())?
    } else {
        check_certificate(&loaded.problem, x, cert)?
    };
    Ok(v)
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(", ")
}
