//! Gauss–Legendre quadrature on `[0, 1]`.

use crate::error::{HbvmError, Result};
use crate::legendre::MAX_DEGREE;

/// A `k`-point quadrature rule on `[0, 1]` with ascending abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn k(&self) -> usize {
        self.nodes.len()
    }

    /// Abscissae `c_1 < ... < c_k`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted sum `Σ b_i samples[i]` of vector-valued samples.
    pub fn apply(&self, samples: &[Vec<f64>]) -> Result<Vec<f64>> {
        apply_rule(self, samples)
    }

    /// Integral over `[0, 1]` of a scalar function.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&c, &b)| b * f(c))
            .sum()
    }
}

/// Legendre polynomial `L_k(x)` on `[-1, 1]` and its derivative.
fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * x * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    let kf = k as f64;
    let derivative = kf * (x * cur - prev) / (x * x - 1.0);
    (cur, derivative)
}

/// The `k`-point Gauss–Legendre rule on `[0, 1]`, exact for degree `≤ 2k - 1`.
///
/// Roots of `L_k` are found by Newton iteration from Chebyshev-angle guesses
/// on `[-1, 1]`; only the non-negative half is computed and mirrored, so the
/// returned rule is exactly symmetric about `1/2`.
pub fn gauss_legendre(k: usize) -> Result<QuadratureRule> {
    if k == 0 || k > MAX_DEGREE {
        return Err(HbvmError::InvalidParameter(format!(
            "quadrature size k = {k} outside 1..={MAX_DEGREE}"
        )));
    }
    if k == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.5],
            weights: vec![1.0],
        });
    }

    let kf = k as f64;
    let half = k / 2;
    // (x, weight on [-1, 1]) for the positive roots, largest first.
    let mut positive = Vec::with_capacity(half);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(k, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(k, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        positive.push((x, w));
    }

    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for (i, &(x, w)) in positive.iter().enumerate() {
        // 1 - x is formed before halving to keep the small nodes accurate.
        let c = 0.5 * (1.0 - x);
        nodes[i] = c;
        nodes[k - 1 - i] = 1.0 - c;
        weights[i] = 0.5 * w;
        weights[k - 1 - i] = 0.5 * w;
    }
    if k % 2 == 1 {
        let (_, dp) = legendre_with_derivative(k, 0.0);
        nodes[half] = 0.5;
        weights[half] = 1.0 / (dp * dp);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `Σ_i b_i samples[i]` for samples given at the rule's abscissae.
pub fn apply_rule(rule: &QuadratureRule, samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    if samples.len() != rule.k() {
        return Err(HbvmError::InvalidParameter(format!(
            "expected {} samples, got {}",
            rule.k(),
            samples.len()
        )));
    }
    let m = samples.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; m];
    for (sample, &b) in samples.iter().zip(rule.weights()) {
        if sample.len() != m {
            return Err(HbvmError::DimensionMismatch {
                expected: m,
                got: sample.len(),
            });
        }
        for (a, &v) in acc.iter_mut().zip(sample) {
            *a += b * v;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::eval_basis;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_rules() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes(), &[0.5]);
        assert_eq!(r.weights(), &[1.0]);

        // roots of 6c² - 6c + 1 = 0
        let r = gauss_legendre(2).unwrap();
        let s3 = 3f64.sqrt();
        assert_abs_diff_eq!(r.nodes()[0], (3.0 - s3) / 6.0, epsilon = 1e-16);
        assert_abs_diff_eq!(r.nodes()[1], (3.0 + s3) / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes()[0], 0.21132486540518713, epsilon = 1e-16);
        assert_abs_diff_eq!(r.nodes()[1], 0.7886751345948129, epsilon = 1e-16);
        for &b in r.weights() {
            assert_abs_diff_eq!(b, 0.5, epsilon = 1e-15);
        }

        let r = gauss_legendre(3).unwrap();
        assert_abs_diff_eq!(r.integrate(|x| x.powi(5)), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(
            gauss_legendre(0),
            Err(HbvmError::InvalidParameter(_))
        ));
        assert!(gauss_legendre(65).is_err());
        assert!(gauss_legendre(64).is_ok());
    }

    #[test]
    fn exact_up_to_degree_2k_minus_1() {
        for k in 1..=12 {
            let r = gauss_legendre(k).unwrap();
            for d in 0..2 * k {
                let approx = r.integrate(|x| x.powi(d as i32));
                assert!(
                    (approx - 1.0 / (d as f64 + 1.0)).abs() < 1e-14,
                    "k={k} d={d} err={}",
                    approx - 1.0 / (d as f64 + 1.0)
                );
            }
        }
    }

    #[test]
    fn structural_invariants() {
        for k in 1..=64 {
            let r = gauss_legendre(k).unwrap();
            let sum: f64 = r.weights().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-15, "k={k} sum-1={}", sum - 1.0);
            for i in 0..k {
                assert!(r.nodes()[i] > 0.0 && r.nodes()[i] < 1.0);
                assert!(r.weights()[i] > 0.0);
                if i + 1 < k {
                    assert!(r.nodes()[i] < r.nodes()[i + 1]);
                }
                let j = k - 1 - i;
                assert!((r.nodes()[i] + r.nodes()[j] - 1.0).abs() <= 1e-14);
                assert!((r.weights()[i] - r.weights()[j]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn nodes_are_roots_of_orthonormal_pk() {
        for k in 1..=20 {
            let r = gauss_legendre(k).unwrap();
            for &c in r.nodes() {
                let pk = eval_basis(k, c)[k];
                assert!(pk.abs() < 1e-13, "k={k} c={c} P_k={pk}");
            }
        }
    }

    #[test]
    fn orthonormality_under_quadrature() {
        let r = gauss_legendre(11).unwrap();
        let values: Vec<Vec<f64>> = r.nodes().iter().map(|&c| eval_basis(10, c)).collect();
        for i in 0..=10 {
            for j in 0..=10 {
                let s: f64 = values
                    .iter()
                    .zip(r.weights())
                    .map(|(v, &b)| b * v[i] * v[j])
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(s, expected, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn apply_rule_examples() {
        let r2 = gauss_legendre(2).unwrap();
        let v = vec![1.5, -2.0, 7.25];
        let out = apply_rule(&r2, &[v.clone(), v.clone()]).unwrap();
        for (a, b) in out.iter().zip(&v) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(apply_rule(&r1, &[vec![2.0, 3.0]]).unwrap(), vec![2.0, 3.0]);
        let out = apply_rule(&r2, &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-15);
        assert_eq!(out[1], 0.0);
        assert!(apply_rule(&r2, &[vec![1.0]]).is_err());
    }
}
