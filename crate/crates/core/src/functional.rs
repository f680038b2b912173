//! The limit functional
//!
//! ```text
//! F(theta; z) = 1/2 { sum_I theta_i log|z_i|^2 - sum_I theta_i log theta_i + S log S },  S = sum_I theta_i
//! ```
//!
//! over the support `I = {i : z_i != 0}`, together with its gradient and Hessian.
//! Everything is expressed through the squared moduli `s_i = |z_i|^2`; the
//! extremal function of the ball only depends on them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `C^d` represented by its squared coordinate moduli.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuliPoint {
    moduli_sq: Vec<f64>,
}

impl ModuliPoint {
    pub fn from_moduli_sq(moduli_sq: Vec<f64>) -> Result<Self> {
        if moduli_sq.is_empty() {
            return Err(Error::InvalidArgument("empty point".into()));
        }
        if let Some(i) = moduli_sq.iter().position(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "squared modulus {i} must be finite and >= 0, got {}",
                moduli_sq[i]
            )));
        }
        Ok(ModuliPoint { moduli_sq })
    }

    pub fn from_moduli(moduli: &[f64]) -> Result<Self> {
        if let Some(i) = moduli.iter().position(|r| r.is_nan() || *r < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "modulus {i} must be >= 0, got {}",
                moduli[i]
            )));
        }
        ModuliPoint::from_moduli_sq(moduli.iter().map(|r| r * r).collect())
    }

    pub fn from_complex(z: &[Complex64]) -> Result<Self> {
        ModuliPoint::from_moduli_sq(z.iter().map(|w| w.norm_sqr()).collect())
    }

    pub fn moduli_sq(&self) -> &[f64] {
        &self.moduli_sq
    }

    pub fn dim(&self) -> usize {
        self.moduli_sq.len()
    }

    /// `|z|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.moduli_sq.iter().sum()
    }

    /// `I(z) = {i : z_i != 0}`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.moduli_sq[i] > 0.0)
            .collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.moduli_sq.iter().all(|&s| s > 0.0)
    }

    /// Restriction to the coordinates in `idx`.
    pub fn restrict(&self, idx: &[usize]) -> ModuliPoint {
        ModuliPoint {
            moduli_sq: idx.iter().map(|&i| self.moduli_sq[i]).collect(),
        }
    }
}

/// Nonnegative exponent direction `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(i) = theta.iter().position(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "theta[{i}] must be finite and >= 0, got {}",
                theta[i]
            )));
        }
        Ok(Direction(theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&t| t > 0.0)
    }
}

/// Value, gradient and (optionally) Hessian of `F` at one `(theta, z)`.
#[derive(Debug, Clone)]
pub struct FunctionalEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<DMatrix<f64>>,
    /// `|sum theta_i dF/dtheta_i - F|`; zero up to rounding by Euler's identity.
    pub euler_residual: f64,
}

fn check_dims(theta: &[f64], p: &ModuliPoint) -> Result<()> {
    if theta.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

/// `t log t` with the convention `0 log 0 = 0`.
#[inline]
fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

pub(crate) fn value_unchecked(theta: &[f64], s: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut sum = 0.0;
    for (&t, &si) in theta.iter().zip(s) {
        if si > 0.0 && t > 0.0 {
            acc += t * si.ln() - t * t.ln();
            sum += t;
        }
    }
    0.5 * (acc + xlogx(sum))
}

pub(crate) fn gradient_unchecked(theta: &[f64], s: &[f64], out: &mut [f64]) {
    let ln_sum = theta.iter().sum::<f64>().ln();
    for ((g, &t), &si) in out.iter_mut().zip(theta).zip(s) {
        *g = 0.5 * (si.ln() - t.ln() + ln_sum);
    }
}

/// `F(theta; z)`.
pub fn f_value(theta: &Direction, p: &ModuliPoint) -> Result<f64> {
    check_dims(theta.as_slice(), p)?;
    if let Some(index) = theta
        .as_slice()
        .iter()
        .zip(p.moduli_sq())
        .position(|(&t, &s)| t > 0.0 && s == 0.0)
    {
        return Err(Error::Domain { index });
    }
    Ok(value_unchecked(theta.as_slice(), p.moduli_sq()))
}

/// `dF/dtheta_i = 1/2 (log s_i - log theta_i + log S)` at an interior direction.
///
/// Every coordinate must lie in the support of `p`; drop vanishing coordinates first.
pub fn f_gradient(theta: &Direction, p: &ModuliPoint) -> Result<Vec<f64>> {
    check_dims(theta.as_slice(), p)?;
    if let Some(index) = p.moduli_sq().iter().position(|&s| s == 0.0) {
        return Err(Error::Domain { index });
    }
    if let Some(index) = theta.as_slice().iter().position(|&t| t == 0.0) {
        return Err(Error::Boundary { index });
    }
    let mut g = vec![0.0; theta.dim()];
    gradient_unchecked(theta.as_slice(), p.moduli_sq(), &mut g);
    Ok(g)
}

/// Hessian `1/2 (u u^T / S - diag(1/theta_i))`; it does not depend on the point.
pub fn f_hessian(theta: &Direction) -> Result<DMatrix<f64>> {
    if let Some(index) = theta.as_slice().iter().position(|&t| t == 0.0) {
        return Err(Error::Boundary { index });
    }
    let t = theta.as_slice();
    let d = t.len();
    let inv_sum = 1.0 / t.iter().sum::<f64>();
    Ok(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            0.5 * (inv_sum - 1.0 / t[i])
        } else {
            0.5 * inv_sum
        }
    }))
}

/// Value, gradient and Hessian together, with the Euler-identity residual.
pub fn evaluate(theta: &Direction, p: &ModuliPoint, with_hessian: bool) -> Result<FunctionalEval> {
    let value = f_value(theta, p)?;
    let gradient = f_gradient(theta, p)?;
    let hessian = if with_hessian {
        Some(f_hessian(theta)?)
    } else {
        None
    };
    let euler: f64 = theta
        .as_slice()
        .iter()
        .zip(&gradient)
        .map(|(t, g)| t * g)
        .sum();
    Ok(FunctionalEval {
        value,
        gradient,
        hessian,
        euler_residual: (euler - value).abs(),
    })
}
