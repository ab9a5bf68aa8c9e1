//! Differential equations with a piecewise constant delay,
//! `y'(t) = f(y(t), y(⌊t⌋))`, and the built-in Hamiltonian test problems.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{HbvmError, Result};

/// Right-hand side `f(y, y_delay)` written into the output slice.
pub type VectorField = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// A scalar energy on the canonical state `y = (q, p)`, `q, p ∈ R^d`.
pub trait Hamiltonian: Send + Sync {
    fn value(&self, y: &[f64]) -> f64;

    /// Writes `∇H(y) = (∂H/∂q, ∂H/∂p)` into `grad`.
    fn gradient(&self, y: &[f64], grad: &mut [f64]);
}

/// `H = (q⁴ + p⁴) / 4`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quartic;

impl Hamiltonian for Quartic {
    fn value(&self, y: &[f64]) -> f64 {
        (y[0].powi(4) + y[1].powi(4)) / 4.0
    }

    fn gradient(&self, y: &[f64], grad: &mut [f64]) {
        grad[0] = y[0].powi(3);
        grad[1] = y[1].powi(3);
    }
}

/// Nonlinear pendulum `H = p²/2 - cos q`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pendulum;

impl Hamiltonian for Pendulum {
    fn value(&self, y: &[f64]) -> f64 {
        0.5 * y[1] * y[1] - y[0].cos()
    }

    fn gradient(&self, y: &[f64], grad: &mut [f64]) {
        grad[0] = y[0].sin();
        grad[1] = y[1];
    }
}

/// Cassini-oval Hamiltonian `H = (q² + p²)² - 10 (q² - p²)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cassini;

impl Hamiltonian for Cassini {
    fn value(&self, y: &[f64]) -> f64 {
        let (q2, p2) = (y[0] * y[0], y[1] * y[1]);
        (q2 + p2) * (q2 + p2) - 10.0 * (q2 - p2)
    }

    fn gradient(&self, y: &[f64], grad: &mut [f64]) {
        let r2 = y[0] * y[0] + y[1] * y[1];
        grad[0] = 4.0 * y[0] * r2 - 20.0 * y[0];
        grad[1] = 4.0 * y[1] * r2 + 20.0 * y[1];
    }
}

/// An initial value problem `y' = f(y, y(⌊t⌋))`, `y(0) = y0`.
#[derive(Clone)]
pub struct FdepcaProblem {
    name: String,
    y0: Vec<f64>,
    rhs: Arc<VectorField>,
    hamiltonian: Option<Arc<dyn Hamiltonian>>,
    alpha: Option<f64>,
    delay_interval: f64,
}

impl fmt::Debug for FdepcaProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdepcaProblem")
            .field("name", &self.name)
            .field("y0", &self.y0)
            .field("alpha", &self.alpha)
            .field("delay_interval", &self.delay_interval)
            .field("hamiltonian", &self.hamiltonian.is_some())
            .finish()
    }
}

impl FdepcaProblem {
    /// A problem from an arbitrary vector field. The dimension is `y0.len()`.
    pub fn new<F>(name: impl Into<String>, y0: Vec<f64>, rhs: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            y0,
            rhs: Arc::new(rhs),
            hamiltonian: None,
            alpha: None,
            delay_interval: 1.0,
        }
    }

    /// The delay-Hamiltonian system `y' = J∇H(y) + α J∇H(y(⌊t⌋))` with
    /// `J = [[0, I], [-I, 0]]` acting on `y = (q, p)`.
    pub fn delay_hamiltonian<H>(
        name: impl Into<String>,
        hamiltonian: H,
        alpha: f64,
        y0: Vec<f64>,
    ) -> Result<Self>
    where
        H: Hamiltonian + 'static,
    {
        if y0.is_empty() || !y0.len().is_multiple_of(2) {
            return Err(HbvmError::InvalidParameter(format!(
                "canonical state needs an even, non-zero dimension, got {}",
                y0.len()
            )));
        }
        let hamiltonian: Arc<dyn Hamiltonian> = Arc::new(hamiltonian);
        let field = Arc::clone(&hamiltonian);
        let rhs = move |y: &[f64], y_delay: &[f64], out: &mut [f64]| {
            let m = y.len();
            let d = m / 2;
            let mut g = [0.0; 8];
            let mut g_heap;
            let (grad, grad_delay): (&mut [f64], &mut [f64]) = if m <= 4 {
                let (a, b) = g.split_at_mut(4);
                (&mut a[..m], &mut b[..m])
            } else {
                g_heap = vec![0.0; 2 * m];
                g_heap.split_at_mut(m)
            };
            field.gradient(y, grad);
            field.gradient(y_delay, grad_delay);
            for i in 0..d {
                out[i] = grad[d + i] + alpha * grad_delay[d + i];
                out[d + i] = -grad[i] - alpha * grad_delay[i];
            }
        };
        Ok(Self {
            name: name.into(),
            y0,
            rhs: Arc::new(rhs),
            hamiltonian: Some(hamiltonian),
            alpha: Some(alpha),
            delay_interval: 1.0,
        })
    }

    /// Attaches an energy used for diagnostics only.
    pub fn with_hamiltonian(mut self, hamiltonian: impl Hamiltonian + 'static) -> Self {
        self.hamiltonian = Some(Arc::new(hamiltonian));
        self
    }

    /// Uses `y(τ⌊t/τ⌋)` as the delayed argument instead of `y(⌊t⌋)`.
    pub fn with_delay_interval(mut self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(HbvmError::InvalidParameter(format!(
                "delay interval must be positive, got {tau}"
            )));
        }
        self.delay_interval = tau;
        Ok(self)
    }

    /// Length `τ` of the intervals on which the delayed argument is constant.
    pub fn delay_interval(&self) -> f64 {
        self.delay_interval
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    /// Delay coupling of a delay-Hamiltonian problem.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn has_hamiltonian(&self) -> bool {
        self.hamiltonian.is_some()
    }

    /// `f(y, y_delay)` with dimension checks.
    pub fn eval_rhs(&self, y: &[f64], y_delay: &[f64]) -> Result<Vec<f64>> {
        for v in [y, y_delay] {
            if v.len() != self.dim() {
                return Err(HbvmError::DimensionMismatch {
                    expected: self.dim(),
                    got: v.len(),
                });
            }
        }
        let mut out = vec![0.0; self.dim()];
        (self.rhs)(y, y_delay, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation for the stepping loop.
    #[inline]
    pub(crate) fn rhs_into(&self, y: &[f64], y_delay: &[f64], out: &mut [f64]) {
        (self.rhs)(y, y_delay, out)
    }

    pub fn hamiltonian(&self, y: &[f64]) -> Result<f64> {
        let h = self.hamiltonian.as_ref().ok_or_else(|| {
            HbvmError::Unsupported(format!("problem '{}' has no Hamiltonian", self.name))
        })?;
        if y.len() != self.dim() {
            return Err(HbvmError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(h.value(y))
    }

    /// `∇H(y)`, when a Hamiltonian is attached.
    pub fn hamiltonian_gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        let h = self.hamiltonian.as_ref().ok_or_else(|| {
            HbvmError::Unsupported(format!("problem '{}' has no Hamiltonian", self.name))
        })?;
        let mut g = vec![0.0; y.len()];
        h.gradient(y, &mut g);
        Ok(g)
    }
}

/// Period of the Cassini-oval orbit used with problem 3.
pub const CASSINI_PERIOD: f64 = 3.131990057003955;

/// The three scalar (`q, p ∈ R`) test problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// Quartic oscillator, `α = 1e-2`, `(q0, p0) = (√2, 0)`.
    Problem1,
    /// Delay-damped pendulum, `α = -1e-5`, `(q0, p0) = (0, 1.99999)`.
    Problem2,
    /// Cassini ovals, `α = 1e-5`, `(q0, p0) = (0, 1e-6)`, delay refreshed
    /// once per period `T` ([`CASSINI_PERIOD`]).
    Problem3,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Problem1, Builtin::Problem2, Builtin::Problem3];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Problem1 => "problem1",
            Builtin::Problem2 => "problem2",
            Builtin::Problem3 => "problem3",
        }
    }

    pub fn default_alpha(self) -> f64 {
        match self {
            Builtin::Problem1 => 1e-2,
            Builtin::Problem2 => -1e-5,
            Builtin::Problem3 => 1e-5,
        }
    }

    pub fn default_y0(self) -> [f64; 2] {
        match self {
            Builtin::Problem1 => [std::f64::consts::SQRT_2, 0.0],
            Builtin::Problem2 => [0.0, 1.99999],
            Builtin::Problem3 => [0.0, 1e-6],
        }
    }

    /// Delay interval `τ`: 1 for problems 1 and 2, `T` for problem 3.
    pub fn default_delay_interval(self) -> f64 {
        match self {
            Builtin::Problem3 => CASSINI_PERIOD,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = HbvmError;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| HbvmError::InvalidParameter(format!("unknown problem '{s}'")))
    }
}

/// Replacements for a built-in problem's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub y0: Option<Vec<f64>>,
    pub delay_interval: Option<f64>,
}

/// Instantiates a built-in problem.
pub fn builtin(which: Builtin, overrides: &Overrides) -> Result<FdepcaProblem> {
    let alpha = overrides.alpha.unwrap_or(which.default_alpha());
    let y0 = overrides
        .y0
        .clone()
        .unwrap_or_else(|| which.default_y0().to_vec());
    if y0.len() != 2 {
        return Err(HbvmError::DimensionMismatch {
            expected: 2,
            got: y0.len(),
        });
    }
    let name = which.name();
    let problem = match which {
        Builtin::Problem1 => FdepcaProblem::delay_hamiltonian(name, Quartic, alpha, y0),
        Builtin::Problem2 => FdepcaProblem::delay_hamiltonian(name, Pendulum, alpha, y0),
        Builtin::Problem3 => FdepcaProblem::delay_hamiltonian(name, Cassini, alpha, y0),
    }?;
    problem.with_delay_interval(
        overrides
            .delay_interval
            .unwrap_or(which.default_delay_interval()),
    )
}
