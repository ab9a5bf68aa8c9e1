//! Acceptance criteria: one PASS/FAIL line each, non-zero exit if any fails.
//!
//! Run with `cargo test -p hbvm --test acceptance` (the test profile is
//! optimized; the Table 4 and Figure 1 runs take a few seconds each).

use std::process::ExitCode;
use std::time::Instant;

use hbvm::{
    build_tableau, builtin, convergence_table, eval_basis, gauss_collocation_matrix,
    gauss_legendre, hamiltonian_series, integrate, stroboscopic_sample, Builtin, ConvergenceRow,
    FdepcaProblem, Integrator, Overrides, Quartic, RecordRetention, SolveConfig, StepSize,
    CASSINI_PERIOD,
};

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, body: impl FnOnce() -> Result<String, String>) {
        let start = Instant::now();
        let outcome = body();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}  [{secs:.1}s]  {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL  {name}  [{secs:.1}s]  {detail}");
            }
        }
    }
}

fn problem(which: Builtin) -> FdepcaProblem {
    builtin(which, &Overrides::default()).unwrap()
}

fn table(
    p: &FdepcaProblem,
    k: usize,
    s: usize,
    h0: StepSize,
    levels: usize,
    t_end: f64,
) -> Result<Vec<ConvergenceRow>, String> {
    convergence_table(p, k, s, h0, levels, t_end).map_err(|e| format!("HBVM({k},{s}): {e}"))
}

fn orders(rows: &[ConvergenceRow]) -> Vec<f64> {
    rows.iter().filter_map(|r| r.p).collect()
}

/// Every order in `ps` lies in `[lo, hi]`.
fn orders_within(label: &str, ps: &[f64], lo: f64, hi: f64) -> Result<String, String> {
    let shown: Vec<String> = ps.iter().map(|p| format!("{p:.4}")).collect();
    if ps.iter().all(|p| (lo..=hi).contains(p)) {
        Ok(format!("{label} p=[{}]", shown.join(", ")))
    } else {
        Err(format!(
            "{label} p=[{}] outside [{lo}, {hi}]",
            shown.join(", ")
        ))
    }
}

fn all_ok(parts: Vec<Result<String, String>>) -> Result<String, String> {
    let failed = parts.iter().any(Result::is_err);
    let text: Vec<String> = parts.into_iter().map(|r| r.unwrap_or_else(|e| e)).collect();
    if failed {
        Err(text.join("; "))
    } else {
        Ok(text.join("; "))
    }
}

fn criterion_1() -> Result<String, String> {
    let p = problem(Builtin::Problem1);
    let h0 = StepSize::Aligned { nu: 20 };
    let mut parts = Vec::new();
    for (k, s, lo, hi) in [(2, 2, 3.8, 4.3), (10, 2, 3.8, 4.3), (15, 3, 5.8, 6.2)] {
        let rows = table(&p, k, s, h0, 3, 2.0)?;
        parts.push(orders_within(&format!("({k},{s})"), &orders(&rows), lo, hi));
    }
    all_ok(parts)
}

fn criterion_2() -> Result<String, String> {
    let p = problem(Builtin::Problem1);
    let h0 = StepSize::Aligned { nu: 20 };
    let gauss = table(&p, 2, 2, h0, 3, 2.0)?;
    let hbvm = table(&p, 10, 2, h0, 3, 2.0)?;
    let ratio = gauss[0].eps / 5.1981e-6;
    let mut parts = vec![if (0.2..=5.0).contains(&ratio) {
        Ok(format!("eps(1/20)={:.4e}", gauss[0].eps))
    } else {
        Err(format!(
            "eps(1/20)={:.4e} not within a factor 5 of 5.1981e-6",
            gauss[0].eps
        ))
    }];
    for (g, b) in gauss.iter().zip(&hbvm) {
        parts.push(if b.eps < g.eps {
            Ok(format!("h={}: {:.4e} < {:.4e}", g.h, b.eps, g.eps))
        } else {
            Err(format!(
                "h={}: (10,2) {:.4e} >= (2,2) {:.4e}",
                g.h, b.eps, g.eps
            ))
        });
    }
    all_ok(parts)
}

fn criterion_3() -> Result<String, String> {
    let p = problem(Builtin::Problem2);
    let h0 = StepSize::Aligned { nu: 2 };
    let mut parts = Vec::new();
    for (k, s, lo, hi) in [(2, 2, 3.8, 4.4), (10, 2, 3.8, 4.4), (15, 3, 5.8, 6.1)] {
        let rows = table(&p, k, s, h0, 4, 2.0)?;
        parts.push(orders_within(&format!("({k},{s})"), &orders(&rows), lo, hi));
    }
    all_ok(parts)
}

fn max_energy(p: &FdepcaProblem, k: usize) -> Result<f64, String> {
    let cfg = SolveConfig::new(k, 2, StepSize::General { h: 0.5 }, 500.0);
    let traj = integrate(p, &cfg).map_err(|e| e.to_string())?;
    let series = hamiltonian_series(&traj, p).map_err(|e| e.to_string())?;
    Ok(series.hamiltonian.iter().copied().fold(f64::MIN, f64::max))
}

fn criterion_4() -> Result<String, String> {
    let p = problem(Builtin::Problem2);
    let gauss = max_energy(&p, 2)?;
    let hbvm = max_energy(&p, 10)?;
    let detail = format!("max H: (2,2) {gauss:.6}, (10,2) {hbvm:.6}");
    if gauss > 1.0 && hbvm < 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5() -> Result<String, String> {
    let p = problem(Builtin::Problem3);
    let h = CASSINI_PERIOD / 100.0;
    let t_end = 35.0 * h;
    let h0 = StepSize::General { h };
    let hbvm = table(&p, 10, 2, h0, 4, t_end)?;
    let high = table(&p, 15, 3, h0, 4, t_end)?;
    all_ok(vec![
        orders_within("(10,2) from 2nd pair", &orders(&hbvm)[1..], 3.8, 4.1),
        orders_within("(15,3)", &orders(&high), 5.4, 6.1),
    ])
}

/// Largest consecutive `(|Δq|, |Δp|)` over the last 20 period samples.
fn strobe_spread(k: usize) -> Result<(f64, f64), String> {
    let h = CASSINI_PERIOD / 100.0;
    let cfg = SolveConfig::new(k, 2, StepSize::General { h }, 2e5 * h)
        .with_retention(RecordRetention::Every(100));
    let traj = Integrator::new(problem(Builtin::Problem3), cfg)
        .and_then(|i| i.run().map_err(|e| e.error))
        .map_err(|e| e.to_string())?;
    let samples = stroboscopic_sample(&traj, CASSINI_PERIOD).map_err(|e| e.to_string())?;
    let last = &samples[samples.len() - 20..];
    let spread = last.windows(2).fold((0.0f64, 0.0f64), |(dq, dp), w| {
        (
            dq.max((w[1][0] - w[0][0]).abs()),
            dp.max((w[1][1] - w[0][1]).abs()),
        )
    });
    Ok(spread)
}

fn criterion_6() -> Result<String, String> {
    let mut parts = Vec::new();
    for k in [4, 10] {
        let (dq, dp) = strobe_spread(k)?;
        let detail = format!("({k},2) max|Δq|={dq:.3e} max|Δp|={dp:.3e}");
        parts.push(if dq < 1e-8 && dp < 1e-8 {
            Ok(detail)
        } else {
            Err(detail)
        });
    }
    let (dq, _) = strobe_spread(2)?;
    let detail = format!("(2,2) max|Δq|={dq:.3e}");
    parts.push(if dq > 1e-6 { Ok(detail) } else { Err(detail) });
    all_ok(parts)
}

fn criterion_7() -> Result<String, String> {
    let mut failures = Vec::new();

    for k in 1..=12 {
        let rule = gauss_legendre(k).unwrap();
        for d in 0..2 * k {
            let err = rule.integrate(|x| x.powi(d as i32)) - 1.0 / (d as f64 + 1.0);
            if err.abs() > 1e-14 {
                failures.push(format!("Gauss k={k} degree {d}: {err:e}"));
            }
        }
    }

    let rule = gauss_legendre(21).unwrap();
    let values: Vec<Vec<f64>> = rule.nodes().iter().map(|&c| eval_basis(20, c)).collect();
    for i in 0..=20 {
        for j in 0..=20 {
            let g: f64 = values
                .iter()
                .zip(rule.weights())
                .map(|(v, b)| b * v[i] * v[j])
                .sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            if (g - expected).abs() > 1e-13 {
                failures.push(format!("orthonormality ({i},{j}): {g:e}"));
            }
        }
    }

    for s in 1..=8 {
        let diff = build_tableau(s, s)
            .unwrap()
            .a()
            .max_abs_diff(&gauss_collocation_matrix(s).unwrap());
        if diff > 1e-12 {
            failures.push(format!("HBVM({s},{s}) vs Gauss: {diff:e}"));
        }
    }

    for k in 1..=12 {
        for s in 1..=k {
            let t = build_tableau(k, s).unwrap();
            for i in 0..k {
                let sum: f64 = t.a().row(i).iter().sum();
                if (sum - t.c()[i]).abs() > 1e-12 {
                    failures.push(format!("row sum HBVM({k},{s}) row {i}"));
                }
            }
        }
    }

    let growth = FdepcaProblem::new("floor-growth", vec![1.0], |_, yd, out| out[0] = yd[0]);
    let traj = integrate(
        &growth,
        &SolveConfig::new(4, 2, StepSize::Aligned { nu: 2 }, 2.0),
    )
    .map_err(|e| e.to_string())?;
    let (y1, y2) = (traj.delay_cache()[1][0], traj.final_state()[0]);
    if (y1 - 2.0).abs() > 1e-13 || (y2 - 4.0).abs() > 1e-13 {
        failures.push(format!("y' = y(⌊t⌋): y(1)={y1}, y(2)={y2}"));
    }

    let quartic = FdepcaProblem::delay_hamiltonian(
        "quartic",
        Quartic,
        0.0,
        vec![std::f64::consts::SQRT_2, 0.0],
    )
    .unwrap();
    let traj = integrate(
        &quartic,
        &SolveConfig::new(4, 2, StepSize::Aligned { nu: 10 }, 10.0),
    )
    .map_err(|e| e.to_string())?;
    let drift = hamiltonian_series(&traj, &quartic)
        .map_err(|e| e.to_string())?
        .max_deviation();
    if drift >= 1e-12 {
        failures.push(format!("quartic energy drift {drift:e}"));
    }

    let p1 = problem(Builtin::Problem1);
    let cfg = SolveConfig::new(10, 2, StepSize::General { h: 0.3 }, 5.0);
    let traj = integrate(&p1, &cfg).map_err(|e| e.to_string())?;
    for rec in traj.records() {
        let end = rec.dense_eval(1.0).map_err(|e| e.to_string())?;
        let gap = end
            .iter()
            .zip(&rec.y_right)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > 1e-14 || rec.dense_eval(0.0).unwrap() != rec.y_left {
            failures.push(format!("dense endpoint at t={}: {gap:e}", rec.t_left));
        }
    }

    let again = integrate(&p1, &cfg).map_err(|e| e.to_string())?;
    if again != traj {
        failures.push("repeated runs differ".into());
    }

    if failures.is_empty() {
        Ok("quadrature, basis, tableau, floor-delay, energy, dense output, determinism".into())
    } else {
        Err(failures.join("; "))
    }
}

fn figure_1_truncated() -> Result<String, String> {
    let p = problem(Builtin::Problem1);
    let mut parts = Vec::new();
    for k in [2, 10] {
        let cfg = SolveConfig::new(k, 2, StepSize::Aligned { nu: 50 }, 1e4)
            .with_retention(RecordRetention::LastOnly);
        let mut max_dh = 0.0f64;
        let mut finite = true;
        Integrator::new(p.clone(), cfg)
            .map_err(|e| e.to_string())?
            .run_with(|rec| {
                let dh = p.hamiltonian(&rec.y_right).unwrap() - p.hamiltonian(&rec.y_left).unwrap();
                finite &= dh.is_finite();
                max_dh = max_dh.max(dh.abs());
            })
            .map_err(|e| e.to_string())?;
        let detail = format!("({k},2) max|ΔH|={max_dh:.3e}");
        parts.push(if finite && max_dh <= 1e-2 {
            Ok(detail)
        } else {
            Err(detail)
        });
    }
    all_ok(parts)
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    report.check("1 Table 1 orders (problem1)", criterion_1);
    report.check("2 Table 1 error magnitudes", criterion_2);
    report.check("3 Table 2 orders (problem2)", criterion_3);
    report.check("4 Figure 2 Hamiltonian containment", criterion_4);
    report.check("5 Table 3 orders (problem3)", criterion_5);
    report.check("6 Table 4 stroboscopic periodicity", criterion_6);
    report.check("7 property suite", criterion_7);
    report.check("Figure 1 drift band on [0, 1e4]", figure_1_truncated);
    if report.failures == 0 {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} acceptance criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
