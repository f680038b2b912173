//! Norms of monomials `z^alpha` on the closed unit ball of `C^d`.
//!
//! Monomials are orthogonal in `L2(ball, Lebesgue)`; their squared norms and
//! sup norms have closed forms. Everything is available in log form so that
//! high degrees neither overflow nor underflow.

use statrs::function::factorial::ln_factorial;

use crate::body::MultiIndex;
use crate::error::{Error, Result};

/// `log ||z^alpha||^2_{L2(ball)} = log(alpha! pi^d / (|alpha| + d)!)`.
pub fn ln_monomial_l2_norm_sq(alpha: &MultiIndex) -> f64 {
    let d = alpha.dim() as u64;
    let num: f64 = alpha
        .components()
        .iter()
        .map(|&a| ln_factorial(a as u64))
        .sum();
    num + d as f64 * std::f64::consts::PI.ln() - ln_factorial(alpha.total_degree() + d)
}

/// Squared `L2` norm of `z^alpha` on the unit ball of `C^d`.
pub fn monomial_l2_norm_sq(alpha: &MultiIndex, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be >= 1".into()));
    }
    if alpha.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: alpha.dim(),
        });
    }
    Ok(ln_monomial_l2_norm_sq(alpha).exp())
}

/// `log c_alpha`, where `c_alpha z^alpha` is the orthonormal monomial.
pub fn ln_orthonormal_coefficient(alpha: &MultiIndex) -> f64 {
    -0.5 * ln_monomial_l2_norm_sq(alpha)
}

/// `log sup_ball |z^alpha| = 1/2 (sum alpha_i log alpha_i - |alpha| log |alpha|)`.
pub fn ln_monomial_sup_norm(alpha: &MultiIndex) -> f64 {
    let total = alpha.total_degree() as f64;
    if total == 0.0 {
        return 0.0;
    }
    let acc: f64 = alpha
        .components()
        .iter()
        .filter(|&&a| a > 0)
        .map(|&a| a as f64 * (a as f64).ln())
        .sum();
    0.5 * (acc - total * total.ln())
}

/// Sup norm of `z^alpha` over the closed unit ball; `1` for `alpha = 0`.
pub fn monomial_sup_norm(alpha: &MultiIndex) -> f64 {
    ln_monomial_sup_norm(alpha).exp()
}
