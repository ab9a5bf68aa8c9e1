//! Shifted Legendre polynomials, orthonormal on `[0, 1]`.
//!
//! `P_j(c) = sqrt(2j + 1) * L_j(2c - 1)` where `L_j` is the classical Legendre
//! polynomial on `[-1, 1]`, so that `∫₀¹ P_i P_j = δ_ij` and `P_0 ≡ 1`.

/// Largest supported degree.
pub const MAX_DEGREE: usize = 64;

/// Classical Legendre values `L_0(x)..=L_{n}(x)` on `[-1, 1]`.
fn classical(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(x);
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * x * out[j] - jf * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// Values `[P_0(c), ..., P_{j_max}(c)]` of the orthonormal shifted basis.
pub fn eval_basis(j_max: usize, c: f64) -> Vec<f64> {
    let mut values = classical(j_max, 2.0 * c - 1.0);
    for (j, v) in values.iter_mut().enumerate() {
        *v *= ((2 * j + 1) as f64).sqrt();
    }
    values
}

/// Antiderivatives `[∫₀^c P_0, ..., ∫₀^c P_{j_max}]`.
///
/// Uses `(2j + 1) L_j = L'_{j+1} - L'_{j-1}`, which gives
/// `∫₀^c P_j = (L_{j+1}(x) - L_{j-1}(x)) / (2 sqrt(2j + 1))` with `x = 2c - 1`
/// for `j ≥ 1`, the boundary terms at `x = -1` cancelling.
pub fn eval_integrated_basis(j_max: usize, c: f64) -> Vec<f64> {
    let x = 2.0 * c - 1.0;
    let legendre = classical(j_max + 1, x);
    let mut out = Vec::with_capacity(j_max + 1);
    out.push(c);
    for j in 1..=j_max {
        let scale = 2.0 * ((2 * j + 1) as f64).sqrt();
        out.push((legendre[j + 1] - legendre[j - 1]) / scale);
    }
    out
}
