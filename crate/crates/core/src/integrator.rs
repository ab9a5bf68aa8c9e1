//! Fixed-step HBVM(k, s) integration of `y' = f(y, y(⌊t⌋))`.
//!
//! Each step solves for the `s` Fourier coefficient vectors `γ_0..γ_{s-1}`
//! of the local polynomial `u(t_left + c h) = y_left + h Σ_j (∫₀^c P_j) γ_j`:
//!
//! ```text
//! γ = (Psᵀ Ω ⊗ I_m) f(e ⊗ y_left + h (Is ⊗ I_m) γ, delays)
//! ```
//!
//! by plain fixed-point iteration from `γ = 0`. The step endpoint is
//! `y_left + h γ_0`. Past values are only ever needed at multiples of the
//! delay interval `τ` (integers for the usual `y(⌊t⌋)`), so the trajectory
//! keeps a cache of `u(jτ)` for `j = 0, 1, ...`.

use std::fmt;

use crate::error::{HbvmError, Result};
use crate::legendre::eval_integrated_basis;
use crate::problem::FdepcaProblem;
use crate::tableau::{build_tableau, HbvmTableau};

/// Distance (in units of `τ`) below which a time counts as a breakpoint.
const BREAKPOINT_TOL: f64 = 1e-12;

/// Mesh specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `h = τ/ν`; every breakpoint `jτ` is a mesh point and the delay is
    /// constant on each step.
    Aligned { nu: u32 },
    /// Arbitrary `0 < h ≤ τ`; a step may contain a breakpoint in its interior.
    General { h: f64 },
}

impl StepSize {
    /// Step length for delay interval `tau`.
    pub fn h(&self, tau: f64) -> f64 {
        match *self {
            StepSize::Aligned { nu } => tau / nu as f64,
            StepSize::General { h } => h,
        }
    }

    /// The same kind of mesh with half the step.
    pub fn halved(&self) -> StepSize {
        match *self {
            StepSize::Aligned { nu } => StepSize::Aligned { nu: nu * 2 },
            StepSize::General { h } => StepSize::General { h: h / 2.0 },
        }
    }
}

impl fmt::Display for StepSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSize::Aligned { nu } => write!(f, "nu={nu}"),
            StepSize::General { h } => write!(f, "h={h:.16e}"),
        }
    }
}

/// Which step records a trajectory keeps. Delay-cache entries are always kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecordRetention {
    #[default]
    All,
    /// Every `n`-th record (1-based step count divisible by `n`) plus the last.
    Every(usize),
    /// Only the last record.
    LastOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub k: usize,
    pub s: usize,
    pub step: StepSize,
    pub t_end: f64,
    /// Relative tolerance of the stage fixed-point iteration.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub retention: RecordRetention,
}

impl SolveConfig {
    pub fn new(k: usize, s: usize, step: StepSize, t_end: f64) -> Self {
        Self {
            k,
            s,
            step,
            t_end,
            fp_tol: 1e-14,
            fp_max_iter: 100,
            retention: RecordRetention::All,
        }
    }

    pub fn with_retention(mut self, retention: RecordRetention) -> Self {
        self.retention = retention;
        self
    }

    /// Number of steps and, in general mode, the length of a shortened last
    /// step when `h` does not divide `t_end`.
    pub fn mesh(&self, tau: f64) -> Result<(usize, Option<f64>)> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(HbvmError::InvalidParameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.s == 0 || self.s > self.k {
            return Err(HbvmError::InvalidParameter(format!(
                "s must satisfy 1 ≤ s ≤ k (got k = {}, s = {})",
                self.k, self.s
            )));
        }
        if self.fp_max_iter == 0 || !(self.fp_tol > 0.0) {
            return Err(HbvmError::InvalidParameter(
                "fixed-point tolerance and iteration cap must be positive".into(),
            ));
        }
        match self.step {
            StepSize::Aligned { nu } => {
                if nu == 0 {
                    return Err(HbvmError::InvalidParameter("nu must be positive".into()));
                }
                let n = self.t_end / tau * nu as f64;
                if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
                    return Err(HbvmError::InvalidParameter(format!(
                        "aligned mesh needs t_end·nu/τ integral, got {n}"
                    )));
                }
                Ok((n.round() as usize, None))
            }
            StepSize::General { h } => {
                if !(h > 0.0 && h <= tau) {
                    return Err(HbvmError::InvalidParameter(format!(
                        "step h must lie in (0, {tau}], got {h}"
                    )));
                }
                let ratio = self.t_end / h;
                if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
                    Ok((ratio.round().max(1.0) as usize, None))
                } else {
                    let n = ratio.ceil() as usize;
                    Ok((n, Some(self.t_end - (n - 1) as f64 * h)))
                }
            }
        }
    }
}

/// One accepted step: the local polynomial on `[t_left, t_left + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t_left: f64,
    pub h: f64,
    pub y_left: Vec<f64>,
    /// Fourier coefficients, `s` rows of length `m`, row-major.
    pub gamma: Vec<f64>,
    pub y_right: Vec<f64>,
    pub iterations: usize,
}

impl StepRecord {
    pub fn m(&self) -> usize {
        self.y_left.len()
    }

    pub fn s(&self) -> usize {
        self.gamma.len() / self.m()
    }

    pub fn t_right(&self) -> f64 {
        self.t_left + self.h
    }

    /// `γ_j`.
    pub fn coefficient(&self, j: usize) -> &[f64] {
        let m = self.m();
        &self.gamma[j * m..(j + 1) * m]
    }

    /// `u(t_left + c h)` for `c ∈ [0, 1]`.
    pub fn dense_eval(&self, c: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&c) {
            return Err(HbvmError::InvalidParameter(format!(
                "dense output needs c in [0, 1], got {c}"
            )));
        }
        let mut out = self.y_left.clone();
        polynomial_at(
            &self.gamma,
            &eval_integrated_basis(self.s() - 1, c),
            self.h,
            &mut out,
        );
        Ok(out)
    }
}

/// `u(t_left + c h)` of a step record; see [`StepRecord::dense_eval`].
pub fn dense_eval(record: &StepRecord, c: f64) -> Result<Vec<f64>> {
    record.dense_eval(c)
}

/// Adds `h Σ_j weights[j] γ_j` to `out`.
#[inline]
fn polynomial_at(gamma: &[f64], weights: &[f64], h: f64, out: &mut [f64]) {
    let m = out.len();
    for (j, &w) in weights.iter().enumerate() {
        let row = &gamma[j * m..(j + 1) * m];
        for (o, &g) in out.iter_mut().zip(row) {
            *o += h * w * g;
        }
    }
}

/// Accepted steps plus the cache of solution values at the breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    records: Vec<StepRecord>,
    delay_cache: Vec<Vec<f64>>,
    delay_interval: f64,
    y0: Vec<f64>,
    steps_taken: usize,
    t_current: f64,
    y_current: Vec<f64>,
    carry: Vec<f64>,
    retention: RecordRetention,
}

impl Trajectory {
    /// An empty trajectory at `t = 0` for breakpoints `jτ`, `τ = delay_interval`.
    pub fn new(y0: Vec<f64>, delay_interval: f64, retention: RecordRetention) -> Self {
        Self {
            records: Vec::new(),
            delay_cache: vec![y0.clone()],
            delay_interval,
            y_current: y0.clone(),
            carry: vec![0.0; y0.len()],
            y0,
            steps_taken: 0,
            t_current: 0.0,
            retention,
        }
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    /// `u(jτ)` for `j = 0, 1, ...` as far as integrated.
    pub fn delay_cache(&self) -> &[Vec<f64>] {
        &self.delay_cache
    }

    pub fn delay_interval(&self) -> f64 {
        self.delay_interval
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn final_time(&self) -> f64 {
        self.t_current
    }

    pub fn final_state(&self) -> &[f64] {
        &self.y_current
    }

    /// Whether consecutive records abut (true under full retention).
    pub fn is_contiguous(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| (w[0].t_right() - w[1].t_left).abs() <= 1e-12 * w[1].t_left.max(1.0))
    }

    /// `u(τ⌊t/τ⌋)`, i.e. `u(⌊t⌋)` for the default `τ = 1`.
    ///
    /// Values come from the breakpoint cache. When the breakpoint has not been
    /// reached yet but lies inside the in-progress step, the step's current
    /// polynomial is evaluated there instead.
    pub fn delay_value(&self, t: f64, in_progress: Option<&StepRecord>) -> Result<Vec<f64>> {
        let tau = self.delay_interval;
        let floor = (t / tau + BREAKPOINT_TOL).floor();
        if floor < 0.0 {
            return Err(HbvmError::InvalidParameter(format!(
                "delay argument ⌊{t}⌋ is negative"
            )));
        }
        let j = floor as usize;
        if let Some(v) = self.delay_cache.get(j) {
            return Ok(v.clone());
        }
        let t_break = floor * tau;
        match in_progress {
            Some(rec)
                if t_break > rec.t_left && t_break <= rec.t_right() + BREAKPOINT_TOL * tau =>
            {
                rec.dense_eval(((t_break - rec.t_left) / rec.h).min(1.0))
            }
            _ => Err(HbvmError::Invariant(format!(
                "u({t_break}) requested before it was computed"
            ))),
        }
    }

    fn keep(&self, step_number: usize, last: bool) -> bool {
        match self.retention {
            RecordRetention::All => true,
            RecordRetention::Every(n) => last || (n > 0 && step_number.is_multiple_of(n)),
            RecordRetention::LastOnly => last,
        }
    }
}

/// Where the delayed argument of one stage comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelaySource<'a> {
    /// A value already known before the step.
    Known(&'a [f64]),
    /// `u(⌊t⌋)` with `⌊t⌋ = t_left + c h` inside the step being solved; it is
    /// re-evaluated from the current iterate at every iteration.
    InStep { c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSolution {
    /// `s × m` coefficients, row-major.
    pub gamma: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Reusable buffers for the stage iteration of one method and problem.
pub struct StageSolver<'a> {
    tableau: &'a HbvmTableau,
    problem: &'a FdepcaProblem,
    tol: f64,
    max_iter: usize,
    stage: Vec<f64>,
    delay: Vec<f64>,
    field: Vec<f64>,
    gamma: Vec<f64>,
    gamma_next: Vec<f64>,
}

impl<'a> StageSolver<'a> {
    pub fn new(
        tableau: &'a HbvmTableau,
        problem: &'a FdepcaProblem,
        tol: f64,
        max_iter: usize,
    ) -> Self {
        let (k, s, m) = (tableau.k(), tableau.s(), problem.dim());
        Self {
            tableau,
            problem,
            tol,
            max_iter,
            stage: vec![0.0; m],
            delay: vec![0.0; m],
            field: vec![0.0; k * m],
            gamma: vec![0.0; s * m],
            gamma_next: vec![0.0; s * m],
        }
    }

    /// Solves the stage system for one step starting at `(t_left, y_left)`.
    ///
    /// `delays[i]` supplies the delayed argument of stage `i`. `t_left` is
    /// used only for error reporting.
    pub fn solve(
        &mut self,
        t_left: f64,
        y_left: &[f64],
        h: f64,
        delays: &[DelaySource<'_>],
    ) -> Result<StageSolution> {
        let (k, s, m) = (self.tableau.k(), self.tableau.s(), self.problem.dim());
        if y_left.len() != m {
            return Err(HbvmError::DimensionMismatch {
                expected: m,
                got: y_left.len(),
            });
        }
        if delays.len() != k {
            return Err(HbvmError::InvalidParameter(format!(
                "expected {k} stage delays, got {}",
                delays.len()
            )));
        }
        // Integrated-basis weights for every in-step delay point.
        let in_step: Vec<Option<Vec<f64>>> = delays
            .iter()
            .map(|d| match *d {
                DelaySource::InStep { c } => Some(eval_integrated_basis(s - 1, c)),
                DelaySource::Known(v) => {
                    debug_assert_eq!(v.len(), m);
                    None
                }
            })
            .collect();

        let is = self.tableau.is();
        let projection = self.tableau.ps_t_omega();
        self.gamma.iter_mut().for_each(|g| *g = 0.0);
        let mut residual = f64::INFINITY;

        for iteration in 1..=self.max_iter {
            for i in 0..k {
                self.stage.copy_from_slice(y_left);
                polynomial_at(&self.gamma, is.row(i), h, &mut self.stage);
                let delayed: &[f64] = match (&delays[i], &in_step[i]) {
                    (DelaySource::Known(v), _) => v,
                    (DelaySource::InStep { .. }, Some(w)) => {
                        self.delay.copy_from_slice(y_left);
                        polynomial_at(&self.gamma, w, h, &mut self.delay);
                        &self.delay
                    }
                    (DelaySource::InStep { .. }, None) => unreachable!(),
                };
                let out = &mut self.field[i * m..(i + 1) * m];
                self.problem.rhs_into(&self.stage, delayed, out);
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(HbvmError::NonFinite { t: t_left });
                }
            }

            for j in 0..s {
                let row = projection.row(j);
                let next = &mut self.gamma_next[j * m..(j + 1) * m];
                next.iter_mut().for_each(|g| *g = 0.0);
                for (i, &w) in row.iter().enumerate() {
                    for (g, &f) in next.iter_mut().zip(&self.field[i * m..(i + 1) * m]) {
                        *g += w * f;
                    }
                }
            }

            let mut diff = 0.0f64;
            let mut norm = 0.0f64;
            for (a, b) in self.gamma_next.iter().zip(&self.gamma) {
                diff = diff.max((a - b).abs());
                norm = norm.max(a.abs());
            }
            std::mem::swap(&mut self.gamma, &mut self.gamma_next);
            residual = diff;
            if diff < self.tol * (1.0 + norm) {
                return Ok(StageSolution {
                    gamma: self.gamma.clone(),
                    iterations: iteration,
                    residual,
                });
            }
        }
        Err(HbvmError::StepFailure {
            t: t_left,
            residual,
            iterations: self.max_iter,
        })
    }
}

/// One-off stage solve; see [`StageSolver::solve`].
pub fn solve_stage_system(
    tableau: &HbvmTableau,
    problem: &FdepcaProblem,
    y_left: &[f64],
    h: f64,
    delays: &[DelaySource<'_>],
    tol: f64,
    max_iter: usize,
) -> Result<StageSolution> {
    StageSolver::new(tableau, problem, tol, max_iter).solve(0.0, y_left, h, delays)
}

/// Stepping state for one problem, method and mesh.
pub struct Integrator {
    tableau: HbvmTableau,
    problem: FdepcaProblem,
    config: SolveConfig,
    n_steps: usize,
    last_step: Option<f64>,
}

impl Integrator {
    pub fn new(problem: FdepcaProblem, config: SolveConfig) -> Result<Self> {
        let (n_steps, last_step) = config.mesh(problem.delay_interval())?;
        let tableau = build_tableau(config.k, config.s)?;
        Ok(Self {
            tableau,
            problem,
            config,
            n_steps,
            last_step,
        })
    }

    pub fn tableau(&self) -> &HbvmTableau {
        &self.tableau
    }

    pub fn problem(&self) -> &FdepcaProblem {
        &self.problem
    }

    pub fn config(&self) -> &SolveConfig {
        &self.config
    }

    /// Total number of steps to `t_end`.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn start(&self) -> Trajectory {
        Trajectory::new(
            self.problem.y0().to_vec(),
            self.problem.delay_interval(),
            self.config.retention,
        )
    }

    /// `(t_left, h)` of step `n` (0-based).
    fn step_geometry(&self, n: usize) -> (f64, f64) {
        match self.config.step {
            StepSize::Aligned { nu } => {
                let tau = self.problem.delay_interval();
                (n as f64 * tau / nu as f64, tau / nu as f64)
            }
            StepSize::General { h } => {
                let t_left = n as f64 * h;
                match self.last_step {
                    Some(last) if n + 1 == self.n_steps => (t_left, last),
                    _ => (t_left, h),
                }
            }
        }
    }

    /// Advances `traj` by one step and returns the new record.
    pub fn step(&self, traj: &mut Trajectory, solver: &mut StageSolver<'_>) -> Result<StepRecord> {
        let n = traj.steps_taken;
        if n >= self.n_steps {
            return Err(HbvmError::InvalidParameter(
                "trajectory already reached t_end".into(),
            ));
        }
        let (t_left, h) = self.step_geometry(n);
        let y_left = traj.y_current.clone();

        let c = self.tableau.c();
        let tau = self.problem.delay_interval();
        let delays: Vec<DelaySource<'_>> = match self.config.step {
            StepSize::Aligned { nu } => {
                let j = n / nu as usize;
                let v = traj.delay_cache.get(j).ok_or_else(|| {
                    HbvmError::Invariant(format!("u({j}) missing from the delay cache"))
                })?;
                vec![DelaySource::Known(v); c.len()]
            }
            StepSize::General { .. } => c
                .iter()
                .map(|&ci| {
                    let floor = ((t_left + ci * h) / tau + BREAKPOINT_TOL).floor();
                    let j = floor as usize;
                    if let Some(v) = traj.delay_cache.get(j) {
                        Ok(DelaySource::Known(v.as_slice()))
                    } else if j == traj.delay_cache.len() && floor * tau > t_left {
                        Ok(DelaySource::InStep {
                            c: (floor * tau - t_left) / h,
                        })
                    } else {
                        Err(HbvmError::Invariant(format!(
                            "u({j}) unavailable for the step starting at {t_left}"
                        )))
                    }
                })
                .collect::<Result<_>>()?,
        };

        let solution = solver.solve(t_left, &y_left, h, &delays)?;
        drop(delays);

        // Compensated summation of y_left + h γ_0 across steps.
        let mut y_right = y_left.clone();
        for ((y, carry), &g) in y_right
            .iter_mut()
            .zip(traj.carry.iter_mut())
            .zip(&solution.gamma)
        {
            let increment = h * g + *carry;
            let sum = *y + increment;
            *carry = increment - (sum - *y);
            *y = sum;
        }
        let record = StepRecord {
            t_left,
            h,
            y_left,
            gamma: solution.gamma,
            y_right,
            iterations: solution.iterations,
        };

        match self.config.step {
            StepSize::Aligned { nu } => {
                if (n + 1).is_multiple_of(nu as usize) {
                    traj.delay_cache.push(record.y_right.clone());
                }
            }
            StepSize::General { .. } => {
                let t_right = record.t_right();
                loop {
                    let next = traj.delay_cache.len() as f64;
                    if (t_right / tau - next).abs() <= BREAKPOINT_TOL {
                        traj.delay_cache.push(record.y_right.clone());
                    } else if next < t_right / tau {
                        traj.delay_cache
                            .push(record.dense_eval((next * tau - t_left) / h)?);
                    } else {
                        break;
                    }
                }
            }
        }

        traj.steps_taken = n + 1;
        traj.t_current = if n + 1 == self.n_steps && self.last_step.is_some() {
            self.config.t_end
        } else {
            record.t_right()
        };
        traj.y_current.clone_from(&record.y_right);
        let last = n + 1 == self.n_steps;
        if traj.keep(n + 1, last) {
            traj.records.push(record.clone());
        }
        Ok(record)
    }

    /// Integrates to `t_end`, handing every accepted step to `observer`.
    pub fn run_with(
        &self,
        mut observer: impl FnMut(&StepRecord),
    ) -> std::result::Result<Trajectory, IntegrationError> {
        let mut traj = self.start();
        let mut solver = StageSolver::new(
            &self.tableau,
            &self.problem,
            self.config.fp_tol,
            self.config.fp_max_iter,
        );
        while traj.steps_taken < self.n_steps {
            match self.step(&mut traj, &mut solver) {
                Ok(record) => observer(&record),
                Err(error) => {
                    return Err(IntegrationError {
                        partial: traj,
                        error,
                    })
                }
            }
        }
        Ok(traj)
    }

    pub fn run(&self) -> std::result::Result<Trajectory, IntegrationError> {
        self.run_with(|_| {})
    }
}

/// A failed integration together with everything computed before the failure.
#[derive(Debug, Clone)]
pub struct IntegrationError {
    pub partial: Trajectory,
    pub error: HbvmError,
}

impl fmt::Display for IntegrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (after {} steps, t = {})",
            self.error,
            self.partial.steps_taken(),
            self.partial.final_time()
        )
    }
}

impl std::error::Error for IntegrationError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<HbvmError> for IntegrationError {
    fn from(error: HbvmError) -> Self {
        Self {
            partial: Trajectory::new(Vec::new(), 1.0, RecordRetention::LastOnly),
            error,
        }
    }
}

/// Integrates `problem` from 0 to `config.t_end`.
pub fn integrate(
    problem: &FdepcaProblem,
    config: &SolveConfig,
) -> std::result::Result<Trajectory, IntegrationError> {
    Integrator::new(problem.clone(), config.clone())?.run()
}
