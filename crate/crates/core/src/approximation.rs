//! Best `L2(ball)` approximation from `Poly(nP)` for functions given by Taylor
//! coefficients, and the singular-set rate constants that govern its decay.
//!
//! Monomials are orthogonal on the ball, so the best approximation is the
//! Taylor truncation to the index set and the error is an exact tail sum.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, LN_2};

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::factorial::ln_binomial;

use crate::body::{ConvexBody, Exponent, MultiIndex};
use crate::error::{Error, Result};
use crate::extremal::{v_ball, DEFAULT_TOL};
use crate::functional::ModuliPoint;
pub use crate::monomial::{
    ln_monomial_l2_norm_sq, ln_monomial_sup_norm, monomial_l2_norm_sq, monomial_sup_norm,
};

/// Relative size of the neglected tail (in squared error) that a cutoff must reach.
pub const TAIL_REL_TOL: f64 = 1e-16;

/// Taylor coefficients of a function holomorphic past the closed ball.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSeries {
    /// `1/(1 - z1/2) + 1/(1 - z2/2)`.
    F1,
    /// `1/(a^2 + z1^2 + z2^2)`, `a > 1`.
    F2 { a: f64 },
    /// `1/(1 - z1 z2)`.
    F3,
    /// Finitely supported coefficients.
    Custom(BTreeMap<MultiIndex, Complex64>),
}

impl CoefficientSeries {
    pub fn f2(a: f64) -> Result<Self> {
        if !(a > 1.0) || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("f2 needs a > 1, got {a}")));
        }
        Ok(CoefficientSeries::F2 { a })
    }

    pub fn custom(coeffs: BTreeMap<MultiIndex, Complex64>) -> Result<Self> {
        let mut dims = coeffs.keys().map(|k| k.dim());
        if let Some(d) = dims.next() {
            if d == 0 || dims.any(|e| e != d) {
                return Err(Error::InvalidArgument(
                    "custom coefficients need one common dimension >= 1".into(),
                ));
            }
        }
        Ok(CoefficientSeries::Custom(coeffs))
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoefficientSeries::F1 => "f1",
            CoefficientSeries::F2 { .. } => "f2",
            CoefficientSeries::F3 => "f3",
            CoefficientSeries::Custom(_) => "custom",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CoefficientSeries::Custom(c) => c.keys().next().map_or(2, |k| k.dim()),
            _ => 2,
        }
    }

    /// Taylor coefficient at `alpha`.
    pub fn coeff(&self, alpha: &MultiIndex) -> Complex64 {
        let c = alpha.components();
        let real = |x: f64| Complex64::new(x, 0.0);
        match self {
            CoefficientSeries::Custom(m) => m.get(alpha).copied().unwrap_or_default(),
            _ if c.len() != 2 => Complex64::default(),
            CoefficientSeries::F1 => match (c[0], c[1]) {
                (0, 0) => real(2.0),
                (k, 0) | (0, k) => real(0.5f64.powi(k as i32)),
                _ => Complex64::default(),
            },
            CoefficientSeries::F2 { a } => {
                if c[0] % 2 == 1 || c[1] % 2 == 1 {
                    return Complex64::default();
                }
                let (j, k) = (c[0] / 2, (c[0] + c[1]) / 2);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                real(sign * (ln_binomial(k as u64, j as u64) - (2 * k + 2) as f64 * a.ln()).exp())
            }
            CoefficientSeries::F3 => real(if c[0] == c[1] { 1.0 } else { 0.0 }),
        }
    }

    pub fn is_nonzero(&self, alpha: &MultiIndex) -> bool {
        self.coeff(alpha) != Complex64::default()
    }

    /// Nonzero coefficients of total degree `k` as `(alpha, log|coeff|)`, in a fixed order.
    fn shell(&self, k: u64) -> Vec<(MultiIndex, f64)> {
        let k32 = k as u32;
        match self {
            CoefficientSeries::F1 => {
                if k == 0 {
                    vec![(MultiIndex::new(vec![0, 0]), LN_2)]
                } else {
                    let l = -(k as f64) * LN_2;
                    vec![
                        (MultiIndex::new(vec![k32, 0]), l),
                        (MultiIndex::new(vec![0, k32]), l),
                    ]
                }
            }
            CoefficientSeries::F2 { a } => {
                if k % 2 == 1 {
                    return Vec::new();
                }
                let m = k / 2;
                let base = -((2 * m + 2) as f64) * a.ln();
                (0..=m)
                    .map(|j| {
                        let alpha = MultiIndex::new(vec![2 * j as u32, 2 * (m - j) as u32]);
                        (alpha, ln_binomial(m, j) + base)
                    })
                    .collect()
            }
            CoefficientSeries::F3 => {
                if k % 2 == 1 {
                    Vec::new()
                } else {
                    vec![(MultiIndex::new(vec![k32 / 2, k32 / 2]), 0.0)]
                }
            }
            CoefficientSeries::Custom(m) => m
                .iter()
                .filter(|(alpha, c)| alpha.total_degree() == k && c.norm() > 0.0)
                .map(|(alpha, c)| (alpha.clone(), c.norm().ln()))
                .collect(),
        }
    }

    /// Largest total degree with a nonzero coefficient, for finitely supported series.
    fn max_degree(&self) -> Option<u64> {
        match self {
            CoefficientSeries::Custom(m) => Some(
                m.iter()
                    .filter(|(_, c)| c.norm() > 0.0)
                    .map(|(a, _)| a.total_degree())
                    .max()
                    .unwrap_or(0),
            ),
            _ => None,
        }
    }

    /// Limit of the ratio between consecutive nonzero squared shell masses.
    fn asymptotic_shell_ratio(&self) -> f64 {
        match self {
            CoefficientSeries::F1 => 0.25,
            // nonzero shells are two degrees apart and shrink like a^{-4}
            CoefficientSeries::F2 { a } => a.powi(-4),
            CoefficientSeries::F3 => 0.25,
            CoefficientSeries::Custom(_) => 0.0,
        }
    }
}

/// Exact best-`L2` error from `Poly(nP)`, summing coefficient mass up to total degree `cutoff`.
///
/// Fails with [`Error::Truncation`] when the estimated squared tail beyond `cutoff`
/// exceeds `1e-16` of the squared error.
pub fn l2_error(f: &CoefficientSeries, body: &ConvexBody, n: u64, cutoff: u64) -> Result<f64> {
    if body.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: body.dim(),
        });
    }
    let mut err_sq = 0.0;
    let mut shells: Vec<f64> = Vec::new();
    for k in 0..=cutoff {
        let shell = f.shell(k);
        if shell.is_empty() {
            continue;
        }
        let mut mass = 0.0;
        let mut outside = 0.0;
        for (alpha, ln_c) in &shell {
            let term = (2.0 * ln_c + ln_monomial_l2_norm_sq(alpha)).exp();
            mass += term;
            if !body.contains(alpha, n)? {
                outside += term;
            }
        }
        err_sq += outside;
        shells.push(mass);
    }
    if f.max_degree().is_some_and(|m| m <= cutoff) {
        return Ok(err_sq.sqrt());
    }
    let tail = tail_estimate(&shells, f.asymptotic_shell_ratio());
    if !(tail <= TAIL_REL_TOL * err_sq) {
        return Err(Error::Truncation {
            cutoff: cutoff as usize,
            tail,
            value: err_sq,
        });
    }
    Ok(err_sq.sqrt())
}

/// Default cutoff `4n + 200`, doubled until the tail test passes (up to four times).
pub fn l2_error_auto(f: &CoefficientSeries, body: &ConvexBody, n: u64) -> Result<f64> {
    let mut cutoff = 4 * n + 200;
    let mut last = None;
    for _ in 0..5 {
        match l2_error(f, body, n, cutoff) {
            Err(e @ Error::Truncation { .. }) => {
                last = Some(e);
                cutoff *= 2;
            }
            other => return other,
        }
    }
    Err(last.expect("loop ran"))
}

/// Geometric tail bound `T_last * rho / (1 - rho)` with `rho` the larger of the
/// observed trailing shell ratio and the analytic limit.
fn tail_estimate(shells: &[f64], analytic: f64) -> f64 {
    let Some(&last) = shells.last() else {
        return 0.0;
    };
    let observed = shells
        .windows(2)
        .rev()
        .take(4)
        .map(|w| {
            if w[0] > 0.0 {
                w[1] / w[0]
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let rho = observed.max(analytic);
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    last * rho / (1.0 - rho)
}

/// Sup-norm bound `2^{-m}` for the `f3` Taylor remainder after the diagonal block `k <= m`.
pub fn uniform_tail_bound_f3(m: u32) -> f64 {
    0.5f64.powi(m as i32)
}

/// Minimum of `V_{P,B}` over the singular set of a series, with its witness.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePrediction {
    pub log_r: f64,
    pub witness: Vec<Complex64>,
    pub witness_point: ModuliPoint,
    pub q: Exponent,
}

const RATE_GRID: usize = 400;

/// `log R = min_{z in S(f)} V_{P,B}(z)`, found by a blind search over the
/// torus-reduced singular set.
pub fn singular_rate(f: &CoefficientSeries, body: &ConvexBody) -> Result<RatePrediction> {
    if body.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: body.dim(),
        });
    }
    match *f {
        // the poles z_i = 2 sit on the axes, where every P_q agrees with log|z|
        CoefficientSeries::F1 => {
            let witness = vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
            prediction(body, witness)
        }
        CoefficientSeries::F2 { a } => f2_rate(body, a),
        CoefficientSeries::F3 => f3_rate(body),
        CoefficientSeries::Custom(_) => Err(Error::Unsupported(
            "singular set unknown for custom coefficients".into(),
        )),
    }
}

fn prediction(body: &ConvexBody, witness: Vec<Complex64>) -> Result<RatePrediction> {
    let witness_point = ModuliPoint::from_complex(&witness)?;
    let log_r = v_ball(body, &witness_point, DEFAULT_TOL)?.value;
    Ok(RatePrediction {
        log_r,
        witness,
        witness_point,
        q: body.q(),
    })
}

/// `z1 = r e^{i phi}`, `z2 = i sqrt(a^2 + z1^2)`, which satisfies `z1^2 + z2^2 = -a^2`.
fn f2_point(a: f64, r: f64, phi: f64) -> Vec<Complex64> {
    let z1 = Complex64::from_polar(r, phi);
    let z2 = Complex64::new(0.0, 1.0) * (a * a + z1 * z1).sqrt();
    vec![z1, z2]
}

fn f2_value(body: &ConvexBody, a: f64, r: f64, phi: f64) -> Result<f64> {
    let z1 = Complex64::from_polar(r, phi);
    let s = vec![r * r, (a * a + z1 * z1).norm()];
    Ok(v_ball(body, &ModuliPoint::from_moduli_sq(s)?, DEFAULT_TOL)?.value)
}

fn f2_rate(body: &ConvexBody, a: f64) -> Result<RatePrediction> {
    // |z2|^2 = |a^2 + r^2 e^{2i phi}| is symmetric under phi -> -phi and phi -> pi - phi
    let r_max = 3f64.max(1.5 * a);
    let m = RATE_GRID;
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let at = |i: usize, j: usize| {
        (
            r_max * i as f64 / (m - 1) as f64,
            FRAC_PI_2 * j as f64 / (m - 1) as f64,
        )
    };
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let (r, phi) = at(i, j);
            f2_value(body, a, r, phi)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    let (r0, phi0) = at(cells[best].0, cells[best].1);
    let bounds = [(0.0, r_max), (0.0, FRAC_PI_2)];
    let step = [r_max / (m - 1) as f64, FRAC_PI_2 / (m - 1) as f64];
    let (x, _) = pattern_search(
        |x| f2_value(body, a, x[0], x[1]),
        [r0, phi0],
        values[best],
        step,
        bounds,
    )?;
    prediction(body, f2_point(a, x[0], x[1]))
}

/// Compass search with step halving; robust on the nonsmooth cone of the singular set.
fn pattern_search(
    f: impl Fn([f64; 2]) -> Result<f64>,
    mut x: [f64; 2],
    mut fx: f64,
    mut step: [f64; 2],
    bounds: [(f64, f64); 2],
) -> Result<([f64; 2], f64)> {
    for _ in 0..200 {
        if step[0] < 1e-13 && step[1] < 1e-13 {
            break;
        }
        let mut moved = false;
        for (axis, sign) in [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)] {
            let mut y = x;
            y[axis] = (y[axis] + sign * step[axis]).clamp(bounds[axis].0, bounds[axis].1);
            if y == x {
                continue;
            }
            let fy = f(y)?;
            if fy < fx {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
        }
        if !moved {
            step = [step[0] * 0.5, step[1] * 0.5];
        }
    }
    Ok((x, fx))
}

fn f3_rate(body: &ConvexBody) -> Result<RatePrediction> {
    // |z1 z2| = 1 with |z1| = r >= 1 covers the singular set up to symmetry
    let value = |r: f64| -> Result<f64> {
        let p = ModuliPoint::from_moduli_sq(vec![r * r, 1.0 / (r * r)])?;
        Ok(v_ball(body, &p, DEFAULT_TOL)?.value)
    };
    let (lo, hi) = (1.0, 3.0);
    let m = RATE_GRID;
    let at = |i: usize| lo + (hi - lo) * i as f64 / (m - 1) as f64;
    let values: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| value(at(i)))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(m - 1)));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (value(c)?, value(d)?);
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = value(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = value(d)?;
        }
    }
    // keep the grid point if refinement did not beat it (minimum on the bracket edge)
    let mut r = 0.5 * (a + b);
    if value(r)? > values[best] {
        r = at(best);
    }
    prediction(
        body,
        vec![Complex64::new(r, 0.0), Complex64::new(1.0 / r, 0.0)],
    )
}

/// Least-squares slope of `log e_n` against `n` over the last half of the points,
/// returned with the sign flipped (an empirical `log R`).
pub fn fit_decay_slope(errors: &[(f64, f64)]) -> Result<f64> {
    if errors.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 points, got {}",
            errors.len()
        )));
    }
    if let Some((n, e)) = errors.iter().find(|(_, e)| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "error at n={n} must be positive, got {e}"
        )));
    }
    let tail = &errors[errors.len() / 2..];
    let k = tail.len() as f64;
    let mx = tail.iter().map(|(n, _)| n).sum::<f64>() / k;
    let my = tail.iter().map(|(_, e)| e.ln()).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (n, e) in tail {
        sxy += (n - mx) * (e.ln() - my);
        sxx += (n - mx) * (n - mx);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "degrees must not all coincide".into(),
        ));
    }
    Ok(-sxy / sxx)
}
