//! Post-processing used to reproduce the numerical experiments: last-point
//! errors and order estimates, Hamiltonian series, stroboscopic samples and
//! Fourier-coefficient norms.

use std::fmt;

use crate::error::{HbvmError, Result};
use crate::integrator::{integrate, RecordRetention, SolveConfig, StepSize, Trajectory};
use crate::problem::FdepcaProblem;

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    /// `ε_N(h) = ‖u_N(h/2) − u_N(h)‖∞`.
    pub eps: f64,
    /// `log₂(ε_N(2h) / ε_N(h))`; absent on the first row.
    pub p: Option<f64>,
}

/// A convergence table cut short by a failed run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceError {
    /// Rows completed before the failure.
    pub rows: Vec<ConvergenceRow>,
    pub error: HbvmError,
}

impl fmt::Display for ConvergenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} rows completed)", self.error, self.rows.len())
    }
}

impl std::error::Error for ConvergenceError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<HbvmError> for ConvergenceError {
    fn from(error: HbvmError) -> Self {
        Self {
            rows: Vec::new(),
            error,
        }
    }
}

/// Hamiltonian at the initial point and at every kept record endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    pub times: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    /// `|H(t_n) − H(t_{n-1})|` between consecutive entries; one shorter than
    /// `hamiltonian`.
    pub delta: Vec<f64>,
}

impl DriftSeries {
    pub fn max_delta(&self) -> f64 {
        self.delta.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|H(t_n) − H(0)|`.
    pub fn max_deviation(&self) -> f64 {
        let h0 = self.hamiltonian.first().copied().unwrap_or(0.0);
        self.hamiltonian
            .iter()
            .map(|h| (h - h0).abs())
            .fold(0.0, f64::max)
    }
}

/// `‖u_N(h/2) − u_N(h)‖∞` between the final states of two runs.
pub fn last_point_error(run_h: &Trajectory, run_h2: &Trajectory) -> Result<f64> {
    let (a, b) = (run_h.final_time(), run_h2.final_time());
    if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
        return Err(HbvmError::HorizonMismatch(a, b));
    }
    let (ya, yb) = (run_h.final_state(), run_h2.final_state());
    if ya.len() != yb.len() {
        return Err(HbvmError::DimensionMismatch {
            expected: ya.len(),
            got: yb.len(),
        });
    }
    Ok(ya
        .iter()
        .zip(yb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// `p = log₂(ε(h) / ε(h/2))`.
pub fn convergence_order(eps_h: f64, eps_h2: f64) -> Result<f64> {
    if !(eps_h > 0.0 && eps_h2 > 0.0 && eps_h.is_finite() && eps_h2.is_finite()) {
        return Err(HbvmError::UndefinedOrder(eps_h, eps_h2));
    }
    Ok((eps_h / eps_h2).log2())
}

/// Last-point errors for `h0, h0/2, ..., h0/2^levels`, with order estimates.
///
/// Needs `levels + 2` integrations (the finest row compares against one more
/// halving); they run on separate threads. A failed run ends the table at the
/// last row whose two runs both succeeded.
pub fn convergence_table(
    problem: &FdepcaProblem,
    k: usize,
    s: usize,
    h0: StepSize,
    levels: usize,
    t_end: f64,
) -> std::result::Result<Vec<ConvergenceRow>, ConvergenceError> {
    if levels < 2 {
        return Err(HbvmError::InvalidParameter(format!(
            "levels must be at least 2, got {levels}"
        ))
        .into());
    }
    let mut steps = vec![h0];
    for _ in 0..=levels {
        let next = steps.last().unwrap().halved();
        steps.push(next);
    }
    let configs: Vec<SolveConfig> = steps
        .iter()
        .map(|&step| SolveConfig::new(k, s, step, t_end).with_retention(RecordRetention::LastOnly))
        .collect();
    for cfg in &configs {
        cfg.mesh(problem.delay_interval())?;
    }

    let runs: Vec<Result<Trajectory>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || integrate(problem, cfg).map_err(|e| e.error)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("integration thread panicked"))
            .collect()
    });

    let tau = problem.delay_interval();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels + 1);
    for (l, pair) in runs.windows(2).enumerate() {
        let (coarse, fine) = match (&pair[0], &pair[1]) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                return Err(ConvergenceError {
                    rows,
                    error: e.clone(),
                })
            }
        };
        let eps = last_point_error(coarse, fine).map_err(|error| ConvergenceError {
            rows: rows.clone(),
            error,
        })?;
        let p = match rows.last() {
            Some(prev) => {
                Some(
                    convergence_order(prev.eps, eps).map_err(|error| ConvergenceError {
                        rows: rows.clone(),
                        error,
                    })?,
                )
            }
            None => None,
        };
        rows.push(ConvergenceRow {
            h: steps[l].h(tau),
            eps,
            p,
        });
    }
    Ok(rows)
}

/// `H` at `t = 0` and at the end of every kept record.
pub fn hamiltonian_series(traj: &Trajectory, problem: &FdepcaProblem) -> Result<DriftSeries> {
    let mut times = vec![0.0];
    let mut hamiltonian = vec![problem.hamiltonian(traj.y0())?];
    for rec in traj.records() {
        times.push(rec.t_right());
        hamiltonian.push(problem.hamiltonian(&rec.y_right)?);
    }
    let delta = hamiltonian
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .collect();
    Ok(DriftSeries {
        times,
        hamiltonian,
        delta,
    })
}

/// States at `t = j·period`, `j = 1, 2, ...` up to the final time.
///
/// A sample that falls within `1e-9·h` of a record endpoint is that endpoint
/// itself; otherwise the containing record is evaluated densely. Records
/// dropped by the retention policy cannot be sampled.
pub fn stroboscopic_sample(traj: &Trajectory, period: f64) -> Result<Vec<Vec<f64>>> {
    if !(period.is_finite() && period > 0.0) {
        return Err(HbvmError::InvalidParameter(format!(
            "period must be positive, got {period}"
        )));
    }
    let horizon = traj.final_time();
    let records = traj.records();
    let h_ref = records.first().map_or(period, |r| r.h);
    let slack = 1e-9 * h_ref;
    if period > horizon + slack {
        return Err(HbvmError::InvalidParameter(format!(
            "period {period} exceeds the horizon {horizon}"
        )));
    }

    let mut samples = Vec::new();
    let mut j = 1usize;
    loop {
        let t = j as f64 * period;
        if t > horizon + slack {
            break;
        }
        // First record whose right end reaches t.
        let idx = records.partition_point(|r| r.t_right() < t - slack);
        let rec = records
            .get(idx)
            .filter(|r| r.t_left <= t + slack)
            .ok_or_else(|| HbvmError::Invariant(format!("no stored step covers t = {t}")))?;
        let value = if (rec.t_right() - t).abs() <= slack {
            rec.y_right.clone()
        } else if (t - rec.t_left).abs() <= slack {
            rec.y_left.clone()
        } else {
            rec.dense_eval((t - rec.t_left) / rec.h)?
        };
        samples.push(value);
        j += 1;
    }
    Ok(samples)
}

/// Euclidean norms `‖γ_j‖`, `j = 0..s`, for every kept record.
pub fn coefficient_decay_report(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.records()
        .iter()
        .map(|rec| {
            (0..rec.s())
                .map(|j| rec.coefficient(j).iter().map(|g| g * g).sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}
