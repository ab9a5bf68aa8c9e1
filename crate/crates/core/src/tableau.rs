//! HBVM(k, s) coefficient matrices and the equivalent Butcher tableau.
//!
//! With the `k`-point Gauss rule `(c, b)`, `Ω = diag(b)` and
//!
//! ```text
//! (Ps)_ij = P_{j-1}(c_i),    (Is)_ij = ∫₀^{c_i} P_{j-1}(x) dx,
//! ```
//!
//! the method is the `k`-stage Runge–Kutta scheme with `A = Is Psᵀ Ω`.
//! The stage solver never forms `A`; it works with the factors `Is` and
//! `Psᵀ Ω`, which keeps the nonlinear system at block size `s`.

use std::fmt;

use crate::error::{HbvmError, Result};
use crate::legendre::{eval_basis, eval_integrated_basis, MAX_DEGREE};
use crate::matrix::Matrix;
use crate::quadrature::{gauss_legendre, QuadratureRule};

#[derive(Debug, Clone)]
pub struct HbvmTableau {
    k: usize,
    s: usize,
    rule: QuadratureRule,
    ps: Matrix,
    is: Matrix,
    ps_t_omega: Matrix,
    a: Matrix,
}

impl HbvmTableau {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Abscissae `c`.
    pub fn c(&self) -> &[f64] {
        self.rule.nodes()
    }

    /// Weights `b`.
    pub fn b(&self) -> &[f64] {
        self.rule.weights()
    }

    /// `k × s` basis values at the abscissae.
    pub fn ps(&self) -> &Matrix {
        &self.ps
    }

    /// `k × s` integrated basis values at the abscissae.
    pub fn is(&self) -> &Matrix {
        &self.is
    }

    /// `s × k` projection `Psᵀ Ω` mapping stage values to Fourier coefficients.
    pub fn ps_t_omega(&self) -> &Matrix {
        &self.ps_t_omega
    }

    /// `k × k` Butcher matrix `A = Is Psᵀ Ω`.
    pub fn a(&self) -> &Matrix {
        &self.a
    }
}

fn check_range(what: &str, value: usize) -> Result<()> {
    if value == 0 || value > MAX_DEGREE {
        return Err(HbvmError::InvalidParameter(format!(
            "{what} = {value} outside 1..={MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// Builds HBVM(k, s). Requires `1 ≤ s ≤ k ≤ 64`.
pub fn build_tableau(k: usize, s: usize) -> Result<HbvmTableau> {
    check_range("k", k)?;
    if s == 0 || s > k {
        return Err(HbvmError::InvalidParameter(format!(
            "s must satisfy 1 ≤ s ≤ k (got k = {k}, s = {s})"
        )));
    }
    let rule = gauss_legendre(k)?;
    let mut ps = Matrix::zeros(k, s);
    let mut is = Matrix::zeros(k, s);
    for (i, &c) in rule.nodes().iter().enumerate() {
        let values = eval_basis(s - 1, c);
        let integrals = eval_integrated_basis(s - 1, c);
        for j in 0..s {
            ps[(i, j)] = values[j];
            is[(i, j)] = integrals[j];
        }
    }
    let ps_t_omega = Matrix::from_fn(s, k, |j, i| ps[(i, j)] * rule.weights()[i]);
    let a = is.matmul(&ps_t_omega);
    Ok(HbvmTableau {
        k,
        s,
        rule,
        ps,
        is,
        ps_t_omega,
        a,
    })
}

/// Lagrange cardinal polynomial `ℓ_j` on `nodes`, evaluated at `x`.
fn lagrange_cardinal(nodes: &[f64], j: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != j)
        .map(|(_, &cl)| (x - cl) / (nodes[j] - cl))
        .product()
}

/// Collocation matrix `∫₀^{c_i} ℓ_j` of the `s`-stage Gauss method.
///
/// Each `ℓ_j` has degree `s - 1`, so the `s`-point rule mapped onto
/// `[0, c_i]` integrates it exactly.
pub fn gauss_collocation_matrix(s: usize) -> Result<Matrix> {
    check_range("s", s)?;
    let rule = gauss_legendre(s)?;
    let c = rule.nodes();
    Ok(Matrix::from_fn(s, s, |i, j| {
        c[i] * rule.integrate(|x| lagrange_cardinal(c, j, c[i] * x))
    }))
}

/// Plain-text dump: blocks `c`, `b`, `A`, `Ps`, `Is`, each introduced by a
/// `# name` line, entries at 17 significant digits.
impl fmt::Display for HbvmTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# HBVM({},{})", self.k, self.s)?;
        let vector = |f: &mut fmt::Formatter<'_>, name: &str, v: &[f64]| -> fmt::Result {
            writeln!(f, "# {name}")?;
            let line: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(f, "{}", line.join(" "))
        };
        vector(f, "c", self.c())?;
        vector(f, "b", self.b())?;
        writeln!(f, "# A")?;
        write!(f, "{}", self.a)?;
        writeln!(f, "# Ps")?;
        write!(f, "{}", self.ps)?;
        writeln!(f, "# Is")?;
        write!(f, "{}", self.is)
    }
}
