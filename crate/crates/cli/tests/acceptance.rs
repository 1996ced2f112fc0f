//! Acceptance gate: the full battery of reproduction and property
//! criteria, each printed as a single PASS/FAIL line with its runtime
//! and checked against its time budget.

use polykkt::apps::seeded_convex_instance;
use polykkt::certify::{
    check_certificate, check_cq, check_equality_certificate, check_linear_composite,
    find_fritz_john, find_kkt,
};
use polykkt::expr::{Expr, Smooth};
use polykkt::polyset::{hull, poly_eq, vertex_set_eq};
use polykkt::robust::{active_uncertainty, phi, sample_feasible, RobustProblem};
use polykkt::subdiff::{constraint_agg_set, equality_agg_set, subdiff};
use polykkt::verify::{
    converse_duality_check, dual_feasible, falsify_pseudo_convexity, verify_weak_efficiency,
    weak_duality_audit, DualityMode, EfficiencyVerdict, PseudoConvexityMode, SignQuantifier,
};
use rand::{Rng, SeedableRng};
use std::process::Command;
use std::time::Instant;

type CheckResult = Result<(), String>;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn run(&mut self, name: &str, budget_secs: f64, body: impl FnOnce() -> CheckResult) {
        let start = Instant::now();
        let outcome = body();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) if secs <= budget_secs => println!("PASS {name} [{secs:.2}s]"),
            Ok(()) => {
                let msg = format!("{name}: over time budget ({secs:.2}s > {budget_secs}s)");
                println!("FAIL {msg}");
                self.failures.push(msg);
            }
            Err(e) => {
                let msg = format!("{name}: {e}");
                println!("FAIL {msg} [{secs:.2}s]");
                self.failures.push(msg);
            }
        }
    }
}

fn ck(cond: bool, msg: impl Into<String>) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn obj_vertices(p: &RobustProblem, k: usize, x: &[f64]) -> Result<Vec<Vec<f64>>, String> {
    subdiff(&p.objectives[k], x, &[], p.nx())
        .map(|r| r.set.vertex_set())
        .map_err(|e| e.to_string())
}

fn expect_vertices(got: &[Vec<f64>], want: &[Vec<f64>], tol: f64, what: &str) -> CheckResult {
    ck(
        vertex_set_eq(got, want, tol),
        format!("{what}: got {got:?}, want {want:?}"),
    )
}

const SQ2: f64 = std::f64::consts::SQRT_2;

fn criterion_1() -> CheckResult {
    let fx = polykkt::builtin_example("ex3-2").map_err(|e| e.to_string())?;
    let p = &fx.problem;
    let x = &fx.x_bar;
    let phi0 = phi(p, 0, x).map_err(|e| e.to_string())?;
    let phi1 = phi(p, 1, x).map_err(|e| e.to_string())?;
    ck(phi0.abs() <= 1e-8, format!("phi_1 = {phi0}, want 0"))?;
    ck(
        (phi1 + 3.0).abs() <= 1e-8,
        format!("phi_2 = {phi1}, want -3"),
    )?;
    let v0 = active_uncertainty(p, 0, x).map_err(|e| e.to_string())?;
    let v1 = active_uncertainty(p, 1, x).map_err(|e| e.to_string())?;
    ck(
        v0.len() == 1 && v0[0][0].abs() <= 1e-6,
        format!("V_1 = {v0:?}, want {{0}}"),
    )?;
    ck(
        v1.len() == 1 && (v1[0][0] - 1.0).abs() <= 1e-6,
        format!("V_2 = {v1:?}, want {{1}}"),
    )?;
    expect_vertices(
        &obj_vertices(p, 0, x)?,
        &[vec![-1.0, -1.0], vec![-1.0, 1.0]],
        1e-9,
        "objective 1 subdifferential",
    )?;
    expect_vertices(
        &obj_vertices(p, 1, x)?,
        &[vec![-0.5, -3.0], vec![0.5, -3.0]],
        1e-9,
        "objective 2 subdifferential",
    )?;
    expect_vertices(
        &obj_vertices(p, 2, x)?,
        &[
            vec![-SQ2 / 2.0, -1.0],
            vec![SQ2 / 2.0, -1.0],
            vec![-SQ2 / 2.0, 1.0],
            vec![SQ2 / 2.0, 1.0],
        ],
        1e-9,
        "objective 3 subdifferential",
    )?;
    let agg0 = constraint_agg_set(p, 0, x).map_err(|e| e.to_string())?;
    let agg1 = constraint_agg_set(p, 1, x).map_err(|e| e.to_string())?;
    let want0 = hull(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
    let want1 = hull(&[vec![-3.0, 4.0], vec![3.0, 4.0]]).unwrap();
    ck(
        poly_eq(&agg0, &want0, 1e-9).map_err(|e| e.to_string())?,
        "aggregate 1 != [1,2]x{0}",
    )?;
    ck(
        poly_eq(&agg1, &want1, 1e-9).map_err(|e| e.to_string())?,
        "aggregate 2 != [-3,3]x{4}",
    )?;
    let cq = check_cq(p, x).map_err(|e| e.to_string())?;
    ck(cq.overall, "constraint qualification violated")?;
    let verdict = check_certificate(p, x, &fx.certificate).map_err(|e| e.to_string())?;
    ck(
        verdict.holds() && verdict.residual <= 1e-8,
        format!(
            "certificate: {:?} residual {:.2e}",
            verdict.status, verdict.residual
        ),
    )?;
    let found = find_kkt(p, x).map_err(|e| e.to_string())?;
    ck(found.is_some(), "certificate search came back empty")
}

fn criterion_2() -> CheckResult {
    let fx = polykkt::builtin_example("ex5-1").map_err(|e| e.to_string())?;
    let p = &fx.problem;
    let x = &fx.x_bar;
    let aup = fx
        .aup
        .as_ref()
        .ok_or("fixture has no norm-objective block")?;
    let wants = [
        vec![vec![-3.0, 0.4], vec![3.0, 0.4]],
        vec![vec![0.0, 0.0]],
        vec![vec![-2.0, 0.5], vec![2.0, 0.5]],
    ];
    for (k, want) in wants.iter().enumerate() {
        let got = subdiff(&aup.r[k], x, &[], p.nx())
            .map_err(|e| e.to_string())?
            .set
            .vertex_set();
        expect_vertices(
            &got,
            want,
            1e-9,
            &format!("smooth part {} subdifferential", k + 1),
        )?;
    }
    let agg0 = constraint_agg_set(p, 0, x).map_err(|e| e.to_string())?;
    let agg1 = constraint_agg_set(p, 1, x).map_err(|e| e.to_string())?;
    let want0 = hull(&[vec![-1.0 / 64.0, 1.0 / 32.0], vec![1.0 / 64.0, 1.0 / 32.0]]).unwrap();
    let want1 = hull(&[vec![0.0, 0.25]]).unwrap();
    ck(
        poly_eq(&agg0, &want0, 1e-9).map_err(|e| e.to_string())?,
        "aggregate 1 != [-1/64,1/64]x{1/32}",
    )?;
    ck(
        poly_eq(&agg1, &want1, 1e-9).map_err(|e| e.to_string())?,
        "aggregate 2 != {(0,1/4)}",
    )?;
    let seg0 = equality_agg_set(p, 0, x).map_err(|e| e.to_string())?;
    let seg1 = equality_agg_set(p, 1, x).map_err(|e| e.to_string())?;
    let want_seg0 = hull(&[vec![-3.0, 1.0], vec![3.0, -1.0]]).unwrap();
    let want_seg1 = hull(&[vec![-3.0, -1.0], vec![3.0, 1.0]]).unwrap();
    ck(
        poly_eq(&seg0, &want_seg0, 1e-9).map_err(|e| e.to_string())?,
        "equality aggregate 1 != {(s,-s/3)}",
    )?;
    ck(
        poly_eq(&seg1, &want_seg1, 1e-9).map_err(|e| e.to_string())?,
        "equality aggregate 2 != {(s,s/3)}",
    )?;
    let verdict =
        check_equality_certificate(p, x, &fx.certificate, Some(aup)).map_err(|e| e.to_string())?;
    ck(
        verdict.holds(),
        format!(
            "equality certificate: {:?} ({})",
            verdict.status, verdict.diagnostics
        ),
    )
}

fn criterion_3() -> CheckResult {
    let fx = polykkt::builtin_example("ex5-2").map_err(|e| e.to_string())?;
    let p = &fx.problem;
    let x = &fx.x_bar;
    let cul = fx
        .cul
        .as_ref()
        .ok_or("fixture has no composite-objective block")?;
    let y3: Vec<f64> = (0..2)
        .map(|r| (0..2).map(|c| cul.ts[2][r][c] * x[c]).sum())
        .collect();
    let got = subdiff(&cul.fs[2], &y3, &[], 2)
        .map_err(|e| e.to_string())?
        .set
        .vertex_set();
    expect_vertices(
        &got,
        &[vec![-2.0, 0.25], vec![2.0, 0.25]],
        1e-9,
        "outer function 3 subdifferential",
    )?;
    let verdict = check_linear_composite(p, x, &fx.certificate, cul).map_err(|e| e.to_string())?;
    ck(
        verdict.holds(),
        format!(
            "composite certificate: {:?} ({})",
            verdict.status, verdict.diagnostics
        ),
    )?;
    let (lam, mu) = fx.certificate.renormalized();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let total = n(&lam) + n(&mu);
    ck(
        (total - 1.0).abs() <= 1e-12,
        format!("renormalized multiplier norms sum to {total}"),
    )
}

fn grid_audit(name: &str, res: &[usize]) -> CheckResult {
    let fx = polykkt::builtin_example(name).map_err(|e| e.to_string())?;
    let p = &fx.problem;
    let start = Instant::now();
    let rep = verify_weak_efficiency(p, &fx.x_bar, &p.box_lo, &p.box_hi, res)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ck(
        rep.verdict == EfficiencyVerdict::NotDominatedOnGrid,
        format!("{name} dominated by {:?}", rep.dominating_point),
    )?;
    ck(secs <= 10.0, format!("{name} audit took {secs:.2}s > 10s"))
}

fn criterion_4() -> CheckResult {
    grid_audit("ex3-2", &[161, 161])?;
    grid_audit("ex5-2", &[101, 101])
}

/// Strict componentwise domination, the relation weak efficiency forbids.
fn strictly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(ai, bi)| *ai < bi - 1e-9)
}

fn objective_values(p: &RobustProblem, x: &[f64]) -> Vec<f64> {
    p.objectives
        .iter()
        .map(|f| f.eval_scalar(x, &[]).unwrap())
        .collect()
}

fn criterion_5() -> CheckResult {
    let mut checked = 0usize;
    for seed in 0..20u64 {
        let (p, _) = seeded_convex_instance(seed);
        let feasible =
            sample_feasible(&p, &p.box_lo, &p.box_hi, &[21, 21]).map_err(|e| e.to_string())?;
        ck(
            !feasible.is_empty(),
            format!("seed {seed}: no feasible grid points"),
        )?;
        let values: Vec<Vec<f64>> = feasible.iter().map(|x| objective_values(&p, x)).collect();
        for (i, x) in feasible.iter().enumerate() {
            let weakly_efficient = !values
                .iter()
                .enumerate()
                .any(|(j, v)| j != i && strictly_dominates(v, &values[i]));
            if !weakly_efficient {
                continue;
            }
            checked += 1;
            let fj = find_fritz_john(&p, x).map_err(|e| e.to_string())?;
            ck(
                fj.is_some(),
                format!("seed {seed}: no Fritz-John multipliers at {x:?}"),
            )?;
        }
    }
    ck(checked > 0, "no weakly efficient grid points were examined")
}

/// Convex-in-x expression catalog drawn from a seeded generator.
fn random_convex_expr(rng: &mut rand::rngs::StdRng) -> Expr {
    let kind = rng.gen_range(0..4);
    let mut coef = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    match kind {
        0 => Expr::abs(Expr::affine_x(
            &[coef(-2.0, 2.0), coef(-2.0, 2.0)],
            coef(-1.0, 1.0),
        )),
        1 => Expr::Norm(Box::new(Expr::linear_map_x(
            &[
                vec![coef(-2.0, 2.0), coef(-2.0, 2.0)],
                vec![coef(-2.0, 2.0), coef(-2.0, 2.0)],
            ],
            &[coef(-1.0, 1.0), coef(-1.0, 1.0)],
        ))),
        2 => Expr::NormPower {
            alpha: coef(0.1, 2.0),
            beta: coef(1.0, 2.5),
            center: vec![coef(-1.0, 1.0), coef(-1.0, 1.0)],
            arg: Box::new(Expr::VarX(vec![0, 1])),
        },
        _ => Expr::Max(
            (0..3)
                .map(|_| Expr::affine_x(&[coef(-2.0, 2.0), coef(-2.0, 2.0)], coef(-1.0, 1.0)))
                .collect(),
        ),
    }
}

fn criterion_6() -> CheckResult {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    for trial in 0..50 {
        let e = random_convex_expr(&mut rng);
        let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = subdiff(&e, &x, &[], 2).map_err(|e| e.to_string())?;
        let fx = e.eval_scalar(&x, &[]).map_err(|e| e.to_string())?;
        let vertices = r.set.vertex_set();
        for _ in 0..1000 {
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let fy = e.eval_scalar(&y, &[]).map_err(|e| e.to_string())?;
            for g in &vertices {
                let lin: f64 = g
                    .iter()
                    .zip(y.iter().zip(&x))
                    .map(|(gi, (yi, xi))| gi * (yi - xi))
                    .sum();
                ck(
                    fy >= fx + lin - 1e-9,
                    format!("trial {trial}: subgradient inequality fails at x={x:?} y={y:?}"),
                )?;
            }
        }
    }
    // limits of gradients at a kink: central differences taken within
    // 1e-6 of the kink stay within 1e-6 of the computed set there
    let e = Expr::Sum(vec![
        Expr::abs(Expr::affine_x(&[2.0, 0.0], 0.0)),
        Expr::abs(Expr::affine_x(&[0.0, 1.0], -1.0)),
    ]);
    let x0 = [0.0, 1.0];
    let at_kink = subdiff(&e, &x0, &[], 2).map_err(|e| e.to_string())?;
    let hull_poly = at_kink.set.hull();
    let radius = 1e-6;
    let step = radius / 100.0;
    for dir in [[1.0, 0.7], [-1.0, 0.3], [0.4, -1.0], [-0.6, -1.0]] {
        let x: Vec<f64> = x0.iter().zip(dir).map(|(c, d)| c + d * radius).collect();
        let mut grad = vec![0.0; 2];
        for (k, g) in grad.iter_mut().enumerate() {
            let mut hi = x.clone();
            hi[k] += step;
            let mut lo = x.clone();
            lo[k] -= step;
            *g = (e.eval_scalar(&hi, &[]).unwrap() - e.eval_scalar(&lo, &[]).unwrap())
                / (2.0 * step);
        }
        let res =
            polykkt::polyset::membership_residual(&grad, &hull_poly).map_err(|e| e.to_string())?;
        ck(
            res <= 1e-6,
            format!("kink-limit gradient {grad:?} is {res:.2e} outside the set"),
        )?;
    }
    Ok(())
}

fn duality_case(p: &RobustProblem, x: &[f64], res: &[usize], label: &str) -> CheckResult {
    let cert = find_kkt(p, x)
        .map_err(|e| e.to_string())?
        .ok_or(format!("{label}: no certificate at the candidate"))?;
    let dp = dual_feasible(p, x, &cert.y_star, &cert.mu, SignQuantifier::Active)
        .map_err(|e| e.to_string())?;
    ck(
        dp.member && dp.sign_ok,
        format!(
            "{label}: dual point infeasible (residual {:.2e})",
            dp.residual
        ),
    )?;
    for mode in [DualityMode::Weak, DualityMode::Strong] {
        let violations = weak_duality_audit(
            p,
            &p.box_lo,
            &p.box_hi,
            res,
            std::slice::from_ref(&dp),
            mode,
        )
        .map_err(|e| e.to_string())?;
        ck(
            violations.is_empty(),
            format!("{label}: {} duality violations", violations.len()),
        )?;
    }
    let conv =
        converse_duality_check(p, &dp, &p.box_lo, &p.box_hi, res, 20).map_err(|e| e.to_string())?;
    ck(
        conv.applicable,
        format!("{label}: converse check not applicable"),
    )?;
    let pipeline = conv
        .pipeline
        .as_ref()
        .ok_or(format!("{label}: converse ran no pipeline"))?;
    ck(
        pipeline.consistent,
        format!(
            "{label}: converse pipeline inconsistent: {}",
            pipeline.diagnostics
        ),
    )
}

fn criterion_7() -> CheckResult {
    let fx = polykkt::builtin_example("ex3-2").map_err(|e| e.to_string())?;
    duality_case(&fx.problem, &fx.x_bar, &[33, 33], "ex3-2")?;
    for seed in 0..20u64 {
        let (p, x) = seeded_convex_instance(seed);
        duality_case(&p, &x, &[21, 21], &format!("seed {seed}"))?;
    }
    Ok(())
}

fn criterion_8() -> CheckResult {
    for seed in 0..20u64 {
        let (p, x) = seeded_convex_instance(seed);
        let rep = falsify_pseudo_convexity(&p, &x, PseudoConvexityMode::TypeI, 100)
            .map_err(|e| e.to_string())?;
        ck(
            !rep.falsified(),
            format!(
                "seed {seed}: spurious counterexample {:?}",
                rep.counterexample
            ),
        )?;
    }
    let concave = RobustProblem {
        objectives: vec![Expr::Negate(Box::new(Expr::smooth(
            Smooth::Square,
            Expr::x(0),
        )))],
        constraints: vec![],
        equalities: vec![],
        box_lo: vec![-1.0],
        box_hi: vec![1.0],
    };
    let rep = falsify_pseudo_convexity(&concave, &[0.0], PseudoConvexityMode::TypeI, 200)
        .map_err(|e| e.to_string())?;
    ck(
        rep.falsified(),
        "no counterexample found for the concave square",
    )
}

fn criterion_9() -> CheckResult {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let file = dir.path().join("ex3-2.json");
    let file = file.to_str().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_polykkt"))
        .args(["export", "ex3-2", "--out", file])
        .status()
        .map_err(|e| e.to_string())?;
    ck(status.success(), "export failed")?;
    let commands: Vec<Vec<&str>> = vec![
        vec!["--json", "feasible", file],
        vec!["--json", "subdiff", file, "--objective", "2"],
        vec!["--json", "check-kkt", file],
        vec!["--json", "check-cq", file],
        vec!["--json", "find-kkt", file],
        vec!["--json", "verify", "weak", file, "--grid", "21x21"],
        vec!["--json", "pseudo-falsify", file, "--samples", "10"],
        vec!["--json", "dual-check", file, "--grid", "21x21"],
        vec![
            "--json",
            "report",
            file,
            "--grid",
            "21x21",
            "--samples",
            "10",
        ],
    ];
    for args in &commands {
        let first = Command::new(env!("CARGO_BIN_EXE_polykkt"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        let second = Command::new(env!("CARGO_BIN_EXE_polykkt"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        ck(
            first.stdout == second.stdout,
            format!("non-identical reruns of {:?}", args.join(" ")),
        )?;
        ck(
            !first.stdout.is_empty(),
            format!("empty output from {:?}", args.join(" ")),
        )?;
    }
    Ok(())
}

#[test]
fn acceptance_gate() {
    let mut gate = Gate {
        failures: Vec::new(),
    };
    gate.run(
        "criterion 1: worked fixture ex3-2 reproduction",
        1.0,
        criterion_1,
    );
    gate.run(
        "criterion 2: worked fixture ex5-1 reproduction",
        1.0,
        criterion_2,
    );
    gate.run(
        "criterion 3: worked fixture ex5-2 reproduction",
        1.0,
        criterion_3,
    );
    gate.run("criterion 4: grid efficiency audits", 20.0, criterion_4);
    gate.run(
        "criterion 5: Fritz-John at weakly efficient grid points",
        60.0,
        criterion_5,
    );
    gate.run("criterion 6: subgradient property suite", 30.0, criterion_6);
    gate.run("criterion 7: duality suite", 30.0, criterion_7);
    gate.run(
        "criterion 8: pseudo-convexity falsification suite",
        30.0,
        criterion_8,
    );
    gate.run("criterion 9: byte-identical JSON reruns", 60.0, criterion_9);
    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
