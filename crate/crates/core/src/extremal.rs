//! Extremal functions `V_{P,K}` for the closed unit ball, the torus and product sets.
//!
//! For the ball, `V_{P,B}(z)` is the maximum of the limit functional `F(theta; z)`
//! over `B_P = {theta >= 0 : |theta|_P = 1}`. The simplex and the bidisk-degree
//! (`q = inf`, `d = 2`) cases have closed forms; every other case is solved
//! numerically:
//!
//! * `1 <= q < inf`: ascent on the scale-invariant ratio `F(theta)/|theta|_q`
//!   in log coordinates with Armijo backtracking and renormalisation, then a
//!   Newton polish on the Lagrange system `dF/dtheta_i = lambda theta_i^{q-1}`,
//!   `|theta|_q = 1`, whose multiplier converges to `lambda = F`.
//! * `q = inf`: projected ascent over the box `[eps, 1]^d`, then Newton on the
//!   free coordinates.
//!
//! The maximiser is interior whenever every `z_i != 0` (the partial derivative
//! blows up as `theta_i -> 0`), so no barrier term is needed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::body::{lq_norm, ConvexBody, Exponent, IndexSet};
use crate::error::{Error, Result};
use crate::functional::{gradient_unchecked, value_unchecked, Direction, ModuliPoint};
use crate::monomial::{ln_monomial_sup_norm, ln_orthonormal_coefficient};

/// Points with `|z|^2` at most this far above 1 are treated as lying in the ball.
pub const HULL_SLACK: f64 = 1e-14;
/// Default KKT tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap for the ascent phase.
pub const DEFAULT_MAX_ITER: usize = 10_000;

const THETA_FLOOR: f64 = 1e-300;
const BOX_EPS: f64 = 1e-12;
const ARMIJO_C: f64 = 1e-4;
// Armijo on function values stalls once the gradient is ~sqrt(eps); hand over to Newton.
const NEWTON_SWITCH: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedFormSimplex,
    ClosedFormLinf2d,
    NumericKkt,
    HullInterior,
}

/// Value of `V_{P,B}` at one point together with the optimiser diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalResult {
    pub value: f64,
    /// Maximising direction with `|theta*|_P = 1`, zero on coordinates where `z_i = 0`.
    pub theta_star: Option<Vec<f64>>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub method: Method,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Starting direction on the support of the point; defaults to `theta_i ~ s_i`.
    pub init: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            init: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

/// `V_{P,B}(z)` with closed forms where available.
pub fn v_ball(body: &ConvexBody, p: &ModuliPoint, tol: f64) -> Result<ExtremalResult> {
    v_ball_with(body, p, &SolverOptions::with_tol(tol))
}

pub fn v_ball_with(
    body: &ConvexBody,
    p: &ModuliPoint,
    opts: &SolverOptions,
) -> Result<ExtremalResult> {
    solve(body, p, opts, true)
}

/// `V_{P,B}(z)` always through the numerical optimiser (no closed-form dispatch).
pub fn v_ball_numeric(
    body: &ConvexBody,
    p: &ModuliPoint,
    opts: &SolverOptions,
) -> Result<ExtremalResult> {
    solve(body, p, opts, false)
}

fn solve(
    body: &ConvexBody,
    p: &ModuliPoint,
    opts: &SolverOptions,
    closed_forms: bool,
) -> Result<ExtremalResult> {
    if p.dim() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: p.dim(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol must be > 0, got {}",
            opts.tol
        )));
    }
    if p.norm_sq() <= 1.0 + HULL_SLACK {
        return Ok(ExtremalResult {
            value: 0.0,
            theta_star: None,
            kkt_residual: 0.0,
            iterations: 0,
            method: Method::HullInterior,
        });
    }

    let support = p.support();
    let s = p.restrict(&support).moduli_sq().to_vec();
    let init = match &opts.init {
        Some(v) if v.len() == s.len() => Some(v.clone()),
        Some(v) if v.len() == p.dim() => Some(support.iter().map(|&i| v[i]).collect()),
        Some(v) => {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                got: v.len(),
            })
        }
        None => None,
    };
    if let Some(v) = &init {
        if v.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument(
                "initial direction must be positive".into(),
            ));
        }
    }

    let q = body.q();
    let reduced = if s.len() == 1 {
        Reduced {
            value: 0.5 * s[0].ln(),
            theta: vec![1.0],
            residual: 0.0,
            iterations: 0,
            method: Method::ClosedFormSimplex,
        }
    } else if closed_forms && q.is_one() {
        simplex_closed_form(&s)
    } else if closed_forms && q.is_infinite() && s.len() == 2 {
        linf_2d_closed_form(&s)
    } else {
        match q {
            Exponent::Finite(qv) => sphere_ascent(&s, qv, opts, init)?,
            Exponent::Infinite => box_ascent(&s, opts, init)?,
        }
    };

    let mut theta = vec![0.0; p.dim()];
    for (k, &i) in support.iter().enumerate() {
        theta[i] = reduced.theta[k];
    }
    Ok(ExtremalResult {
        value: reduced.value,
        theta_star: Some(theta),
        kkt_residual: reduced.residual,
        iterations: reduced.iterations,
        method: reduced.method,
    })
}

struct Reduced {
    value: f64,
    theta: Vec<f64>,
    residual: f64,
    iterations: usize,
    method: Method,
}

fn simplex_closed_form(s: &[f64]) -> Reduced {
    let n2: f64 = s.iter().sum();
    let theta: Vec<f64> = s.iter().map(|x| x / n2).collect();
    Reduced {
        value: 0.5 * n2.ln(),
        residual: sphere_residual(&theta, s, 1.0),
        theta,
        iterations: 0,
        method: Method::ClosedFormSimplex,
    }
}

fn linf_2d_closed_form(s: &[f64]) -> Reduced {
    let (s1, s2) = (s[0], s[1]);
    let theta = if s1 <= 0.5 {
        vec![s1 / (1.0 - s1), 1.0]
    } else if s2 <= 0.5 {
        vec![1.0, s2 / (1.0 - s2)]
    } else {
        vec![1.0, 1.0]
    };
    Reduced {
        value: linf_2d_formula(s1, s2).max(0.0),
        residual: box_residual(&theta, s),
        theta,
        iterations: 0,
        method: Method::ClosedFormLinf2d,
    }
}

fn linf_2d_formula(s1: f64, s2: f64) -> f64 {
    if s1 <= 0.5 {
        0.5 * (s2.ln() - (1.0 - s1).ln())
    } else if s2 <= 0.5 {
        0.5 * (s1.ln() - (1.0 - s2).ln())
    } else {
        0.5 * (s1.ln() + s2.ln()) + std::f64::consts::LN_2
    }
}

/// Classical extremal function of the ball: `max(0, log|z|)`.
pub fn v_ball_simplex(p: &ModuliPoint) -> f64 {
    (0.5 * p.norm_sq().ln()).max(0.0)
}

/// Closed form of `V_{P_inf, B}` in `C^2`, clamped at zero inside the ball.
pub fn v_ball_linf_2d(p: &ModuliPoint) -> Result<f64> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.dim(),
        });
    }
    if p.norm_sq() <= 1.0 {
        return Ok(0.0);
    }
    let s = p.moduli_sq();
    Ok(linf_2d_formula(s[0], s[1]).max(0.0))
}

fn powi_or_f(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        t
    } else {
        t.powf(e)
    }
}

/// KKT residual of the lq Lagrange system with multiplier `lambda = F`:
/// `max_i |dF/dtheta_i - F theta_i^{q-1}|`, folded with `||theta|_q - 1|`.
pub fn kkt_residual(q: f64, theta: &Direction, p: &ModuliPoint) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kkt residual needs 1 <= q < inf, got {q}"
        )));
    }
    // surfaces dimension, domain and boundary errors
    crate::functional::f_gradient(theta, p)?;
    Ok(sphere_residual(theta.as_slice(), p.moduli_sq(), q))
}

/// Per-coordinate multipliers `dF/dtheta_i / theta_i^{q-1}`; all equal `F` at the maximiser.
pub fn lagrange_multipliers(q: f64, theta: &Direction, p: &ModuliPoint) -> Result<Vec<f64>> {
    let g = crate::functional::f_gradient(theta, p)?;
    Ok(g.iter()
        .zip(theta.as_slice())
        .map(|(gi, t)| gi / powi_or_f(*t, q - 1.0))
        .collect())
}

fn sphere_residual(theta: &[f64], s: &[f64], q: f64) -> f64 {
    let f = value_unchecked(theta, s);
    let mut g = vec![0.0; theta.len()];
    gradient_unchecked(theta, s, &mut g);
    let r = g
        .iter()
        .zip(theta)
        .map(|(gi, t)| (gi - f * powi_or_f(*t, q - 1.0)).abs())
        .fold(0.0, f64::max);
    r.max((lq_norm(theta, Exponent::Finite(q)) - 1.0).abs())
}

/// Projected-gradient residual for the box `[0, 1]^d` (the `q = inf` ball).
fn box_residual(theta: &[f64], s: &[f64]) -> f64 {
    let mut g = vec![0.0; theta.len()];
    gradient_unchecked(theta, s, &mut g);
    let r = theta
        .iter()
        .zip(&g)
        .map(|(&t, &gi)| if t >= 1.0 { (-gi).max(0.0) } else { gi.abs() })
        .fold(0.0, f64::max);
    let top = theta.iter().copied().fold(0.0, f64::max);
    r.max((top - 1.0).abs())
}

fn normalize(theta: &mut [f64], q: f64) {
    let n = lq_norm(theta, Exponent::Finite(q));
    for t in theta.iter_mut() {
        *t = (*t / n).max(THETA_FLOOR);
    }
}

fn convergence_error(iterations: usize, residual: f64, theta: Vec<f64>, s: &[f64]) -> Error {
    let best_value = value_unchecked(&theta, s);
    Error::Convergence {
        iterations,
        residual,
        best_theta: theta,
        best_value,
    }
}

fn sphere_ascent(
    s: &[f64],
    q: f64,
    opts: &SolverOptions,
    init: Option<Vec<f64>>,
) -> Result<Reduced> {
    let d = s.len();
    let mut theta = init.unwrap_or_else(|| s.to_vec());
    normalize(&mut theta, q);
    let mut f = value_unchecked(&theta, s);
    let mut g = vec![0.0; d];
    let mut step_dir = vec![0.0; d];
    let mut cand = vec![0.0; d];
    let mut t: f64 = 1.0;
    let mut iterations = 0;

    // ascent phase
    while iterations < opts.max_iter {
        gradient_unchecked(&theta, s, &mut g);
        let mut res: f64 = 0.0;
        let mut dd = 0.0;
        for i in 0..d {
            let r = g[i] - f * powi_or_f(theta[i], q - 1.0);
            res = res.max(r.abs());
            step_dir[i] = theta[i] * r;
            dd += step_dir[i] * step_dir[i];
        }
        if res <= opts.tol.max(NEWTON_SWITCH) {
            break;
        }
        iterations += 1;
        t = (2.0 * t).min(1e8);
        let mut accepted = false;
        while t > 1e-20 {
            for i in 0..d {
                cand[i] = theta[i] * (t * step_dir[i]).clamp(-50.0, 50.0).exp();
            }
            normalize(&mut cand, q);
            let fc = value_unchecked(&cand, s);
            if fc >= f + ARMIJO_C * t * dd {
                std::mem::swap(&mut theta, &mut cand);
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    // Newton polish on (log theta, lambda)
    let mut lambda = f;
    let mut res = sphere_residual(&theta, s, q);
    let mut newton_iters = 0;
    while res > opts.tol && newton_iters < NEWTON_MAX_ITER {
        newton_iters += 1;
        let (r0, jac) = lagrange_system(&theta, lambda, s, q);
        let delta = match jac.lu().solve(&(-&r0)) {
            Some(x) => x,
            None => break,
        };
        let merit0 = r0.amax();
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            for i in 0..d {
                cand[i] = (theta[i].ln() + alpha * delta[i]).exp().max(THETA_FLOOR);
            }
            let lc = lambda + alpha * delta[d];
            let (rc, _) = lagrange_system(&cand, lc, s, q);
            if rc.amax() < merit0 {
                std::mem::swap(&mut theta, &mut cand);
                lambda = lc;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
        let mut normalized = theta.clone();
        normalize(&mut normalized, q);
        res = sphere_residual(&normalized, s, q);
    }
    normalize(&mut theta, q);
    let res = sphere_residual(&theta, s, q);
    let iterations = iterations + newton_iters;
    if res > opts.tol || !res.is_finite() {
        return Err(convergence_error(iterations, res, theta, s));
    }
    Ok(Reduced {
        value: value_unchecked(&theta, s),
        theta,
        residual: res,
        iterations,
        method: Method::NumericKkt,
    })
}

/// Residual and Jacobian of the Lagrange system in `(u = log theta, lambda)`.
fn lagrange_system(theta: &[f64], lambda: f64, s: &[f64], q: f64) -> (DVector<f64>, DMatrix<f64>) {
    let d = theta.len();
    let sum: f64 = theta.iter().sum();
    let ln_sum = sum.ln();
    let mut r = DVector::zeros(d + 1);
    let mut j = DMatrix::zeros(d + 1, d + 1);
    let mut pow_sum = 0.0;
    for i in 0..d {
        let tq1 = powi_or_f(theta[i], q - 1.0);
        r[i] = 0.5 * (s[i].ln() - theta[i].ln() + ln_sum) - lambda * tq1;
        for k in 0..d {
            j[(i, k)] = 0.5 * theta[k] / sum;
        }
        j[(i, i)] += -0.5 - lambda * (q - 1.0) * tq1;
        j[(i, d)] = -tq1;
        let tq = tq1 * theta[i];
        pow_sum += tq;
        j[(d, i)] = tq;
    }
    r[d] = (pow_sum - 1.0) / q;
    (r, j)
}

fn box_ascent(s: &[f64], opts: &SolverOptions, init: Option<Vec<f64>>) -> Result<Reduced> {
    let d = s.len();
    let ln_eps = BOX_EPS.ln();
    let mut theta = init.unwrap_or_else(|| s.to_vec());
    let top = theta.iter().copied().fold(0.0, f64::max);
    for t in theta.iter_mut() {
        *t = (*t / top).clamp(BOX_EPS, 1.0);
    }
    let mut f = value_unchecked(&theta, s);
    let mut g = vec![0.0; d];
    let mut u = vec![0.0; d];
    let mut cand = vec![0.0; d];
    let mut t: f64 = 1.0;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let res = box_residual(&theta, s);
        if res <= opts.tol.max(NEWTON_SWITCH) {
            break;
        }
        gradient_unchecked(&theta, s, &mut g);
        for i in 0..d {
            u[i] = theta[i].ln();
        }
        iterations += 1;
        t = (2.0 * t).min(1e8);
        let mut accepted = false;
        while t > 1e-20 {
            let mut lin = 0.0;
            for i in 0..d {
                let un = (u[i] + t * theta[i] * g[i]).clamp(ln_eps, 0.0);
                lin += theta[i] * g[i] * (un - u[i]);
                cand[i] = if un == 0.0 { 1.0 } else { un.exp() };
            }
            let fc = value_unchecked(&cand, s);
            if lin > 0.0 && fc >= f + ARMIJO_C * lin {
                std::mem::swap(&mut theta, &mut cand);
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    // Newton on the free coordinates; coordinates pinned at 1 form the active set.
    let mut res = box_residual(&theta, s);
    let mut newton_iters = 0;
    while res > opts.tol && newton_iters < NEWTON_MAX_ITER {
        newton_iters += 1;
        gradient_unchecked(&theta, s, &mut g);
        let free: Vec<usize> = (0..d).filter(|&i| theta[i] < 1.0 || g[i] < 0.0).collect();
        if free.is_empty() {
            break;
        }
        let sum: f64 = theta.iter().sum();
        let m = free.len();
        let rv = DVector::from_iterator(m, free.iter().map(|&i| g[i]));
        let jac = DMatrix::from_fn(m, m, |a, b| {
            let diag = if a == b { -0.5 } else { 0.0 };
            diag + 0.5 * theta[free[b]] / sum
        });
        let delta = match jac.lu().solve(&(-&rv)) {
            Some(x) => x,
            None => break,
        };
        let merit0 = res;
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            cand.copy_from_slice(&theta);
            for (k, &i) in free.iter().enumerate() {
                let un = (theta[i].ln() + alpha * delta[k]).clamp(ln_eps, 0.0);
                cand[i] = if un == 0.0 { 1.0 } else { un.exp() };
            }
            let rc = box_residual(&cand, s);
            if rc < merit0 {
                std::mem::swap(&mut theta, &mut cand);
                res = rc;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let iterations = iterations + newton_iters;
    if res > opts.tol || !res.is_finite() {
        return Err(convergence_error(iterations, res, theta, s));
    }
    Ok(Reduced {
        value: value_unchecked(&theta, s),
        theta,
        residual: res,
        iterations,
        method: Method::NumericKkt,
    })
}

/// Logarithmic indicator `H_P(z) = phi_P(log|z_1|, ..., log|z_d|)`.
pub fn h_p(body: &ConvexBody, p: &ModuliPoint) -> Result<f64> {
    let logs: Vec<f64> = p.moduli_sq().iter().map(|s| 0.5 * s.ln()).collect();
    body.indicator(&logs)
}

/// `V_{P,T^d}(z) = phi_P(log+|z_1|, ..., log+|z_d|)` for the unit torus.
pub fn v_torus(body: &ConvexBody, p: &ModuliPoint) -> Result<f64> {
    let logs: Vec<f64> = p
        .moduli_sq()
        .iter()
        .map(|s| (0.5 * s.ln()).max(0.0))
        .collect();
    body.indicator(&logs)
}

/// Univariate compact sets with a known Green function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnivariateExtremal {
    /// Closed disk `|w| <= radius`.
    Disk { radius: f64 },
    /// Real segment `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

impl UnivariateExtremal {
    pub fn unit_disk() -> Self {
        UnivariateExtremal::Disk { radius: 1.0 }
    }

    pub fn unit_interval() -> Self {
        UnivariateExtremal::Interval { lo: -1.0, hi: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            UnivariateExtremal::Disk { radius } if radius > 0.0 && radius.is_finite() => Ok(()),
            UnivariateExtremal::Interval { lo, hi }
                if lo < hi && lo.is_finite() && hi.is_finite() =>
            {
                Ok(())
            }
            other => Err(Error::InvalidArgument(format!(
                "degenerate univariate set {other:?}"
            ))),
        }
    }

    /// Green function with pole at infinity: `log+(|w|/r)` for a disk, the
    /// inverse Joukowski map `log|u + sqrt(u^2 - 1)|` (branch of modulus >= 1) for a segment.
    pub fn evaluate(&self, w: Complex64) -> f64 {
        match *self {
            UnivariateExtremal::Disk { radius } => (w.norm() / radius).ln().max(0.0),
            UnivariateExtremal::Interval { lo, hi } => {
                let u = (2.0 * w - Complex64::new(lo + hi, 0.0)) / (hi - lo);
                let root = (u * u - 1.0).sqrt();
                let m = (u + root).norm().max((u - root).norm());
                m.ln().max(0.0)
            }
        }
    }
}

/// Product-set extremal function `phi_P(V_{E_1}(w_1), ..., V_{E_d}(w_d))`.
pub fn v_product(
    body: &ConvexBody,
    factors: &[UnivariateExtremal],
    w: &[Complex64],
) -> Result<f64> {
    if factors.len() != body.dim() || w.len() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: if factors.len() != body.dim() {
                factors.len()
            } else {
                w.len()
            },
        });
    }
    for f in factors {
        f.validate()?;
    }
    let vals: Vec<f64> = factors
        .iter()
        .zip(w)
        .map(|(f, &wi)| f.evaluate(wi))
        .collect();
    body.indicator(&vals)
}

/// Finite-`n` lower bound for `V_{P,B}` from the monomial basis of `Poly(nP)`:
///
/// ```text
/// max_{0 != alpha in nP} (log|z^alpha| - log ||z^alpha||_B) / |alpha|_P
/// ```
///
/// Each candidate `(1/|alpha|_P) log(|z^alpha| / ||z^alpha||_B)` is a member of the
/// class defining `V`, so the bound never exceeds it, grows with `n`, and
/// converges to it as the directions `alpha/|alpha|_P` fill `B_P`.
pub fn monomial_bound(body: &ConvexBody, p: &ModuliPoint, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    monomial_bound_on(&body.index_set(n), p)
}

/// [`monomial_bound`] over a prebuilt index set.
pub fn monomial_bound_on(set: &IndexSet, p: &ModuliPoint) -> Result<f64> {
    let body = set.body();
    check_outside(body, p)?;
    let half_ln_s: Vec<f64> = p.moduli_sq().iter().map(|s| 0.5 * s.ln()).collect();
    let mut best = f64::NEG_INFINITY;
    for alpha in set.iter().filter(|a| !a.is_zero()) {
        let Some(ln_mono) = ln_abs_monomial(alpha.components(), &half_ln_s) else {
            continue;
        };
        let norm = body.index_norm(alpha)?;
        best = best.max((ln_mono - ln_monomial_sup_norm(alpha)) / norm);
    }
    Ok(best)
}

/// `max (1/|alpha|_P) log|c_alpha z^alpha|` over the top shell `deg_P(alpha) = n`,
/// with `c_alpha z^alpha` the orthonormal monomials of the ball. This is the
/// finite-`n` face of the limsup representation of `V`; it approaches `V` from
/// above at rate `O(log n / n)`.
pub fn orthonormal_shell_rate(body: &ConvexBody, p: &ModuliPoint, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    check_outside(body, p)?;
    let set = body.index_set(n);
    let half_ln_s: Vec<f64> = p.moduli_sq().iter().map(|s| 0.5 * s.ln()).collect();
    let mut best = f64::NEG_INFINITY;
    for (alpha, &deg) in set.iter().zip(set.degrees()) {
        if deg != n {
            continue;
        }
        let Some(ln_mono) = ln_abs_monomial(alpha.components(), &half_ln_s) else {
            continue;
        };
        let norm = body.index_norm(alpha)?;
        best = best.max((ln_mono + ln_orthonormal_coefficient(alpha)) / norm);
    }
    Ok(best)
}

fn check_outside(body: &ConvexBody, p: &ModuliPoint) -> Result<()> {
    if p.dim() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: p.dim(),
        });
    }
    if p.norm_sq() <= 1.0 + HULL_SLACK {
        return Err(Error::InsideHull);
    }
    Ok(())
}

/// `log|z^alpha|`, or `None` when a vanishing coordinate carries a positive exponent.
fn ln_abs_monomial(alpha: &[u32], half_ln_s: &[f64]) -> Option<f64> {
    let mut acc = 0.0;
    for (&a, &l) in alpha.iter().zip(half_ln_s) {
        if a > 0 {
            if l == f64::NEG_INFINITY {
                return None;
            }
            acc += a as f64 * l;
        }
    }
    Some(acc)
}
