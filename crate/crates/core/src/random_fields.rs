//! Gaussian random polynomial pairs in the orthonormal monomial basis of
//! `Poly(nP)` on the ball, and the normalised potential
//! `(1/2n) log(|P_n|^2 + |Q_n|^2)` that converges to `V_{P,B}`.
//!
//! Coefficients come from independent ChaCha8 streams keyed by
//! `(seed, which polynomial, alpha)`, so a pair is reproducible regardless of
//! evaluation order or thread count.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::body::{ConvexBody, MultiIndex};
use crate::error::{Error, Result};
use crate::extremal::{v_ball, DEFAULT_TOL};
use crate::functional::ModuliPoint;
use crate::monomial::ln_orthonormal_coefficient;

/// Radii allowed for deviation grids.
pub const ANNULUS_MIN: f64 = 1.1;
pub const ANNULUS_MAX: f64 = 2.5;

/// Which member of the pair a coefficient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    P = 0,
    Q = 1,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the stream for one coefficient: splitmix64 folded over
/// `seed`, `which`, then each component of `alpha`.
pub fn stream_key(seed: u64, which: Which, alpha: &MultiIndex) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ which as u64);
    for &a in alpha.components() {
        h = splitmix64(h ^ a as u64);
    }
    h
}

/// Standard complex Gaussian (real and imaginary parts `N(0, 1/2)`) for one coefficient.
pub fn gaussian_coefficient(seed: u64, which: Which, alpha: &MultiIndex) -> Complex64 {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_key(seed, which, alpha));
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomPolyPair {
    body: ConvexBody,
    n: u64,
    seed: Option<u64>,
    indices: Vec<MultiIndex>,
    ln_c: Vec<f64>,
    coeffs_p: Vec<Complex64>,
    coeffs_q: Vec<Complex64>,
}

impl RandomPolyPair {
    /// Pair with prescribed coefficients, aligned with `index_set(P, n)`.
    pub fn from_coefficients(
        body: &ConvexBody,
        n: u64,
        coeffs_p: Vec<Complex64>,
        coeffs_q: Vec<Complex64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        let set = body.index_set(n);
        for len in [coeffs_p.len(), coeffs_q.len()] {
            if len != set.len() {
                return Err(Error::DimensionMismatch {
                    expected: set.len(),
                    got: len,
                });
            }
        }
        let indices = set.indices().to_vec();
        let ln_c = indices.iter().map(ln_orthonormal_coefficient).collect();
        Ok(RandomPolyPair {
            body: *body,
            n,
            seed: None,
            indices,
            ln_c,
            coeffs_p,
            coeffs_q,
        })
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn coeffs_p(&self) -> &[Complex64] {
        &self.coeffs_p
    }

    pub fn coeffs_q(&self) -> &[Complex64] {
        &self.coeffs_q
    }

    /// Multiply every coefficient of both polynomials by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs_p.iter_mut().for_each(|a| *a *= factor);
        out.coeffs_q.iter_mut().for_each(|a| *a *= factor);
        out
    }
}

/// Draw both polynomials of a pair; identical for identical `(P, n, seed)`.
pub fn sample_pair(body: &ConvexBody, n: u64, seed: u64) -> Result<RandomPolyPair> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let set = body.index_set(n);
    let draw = |which| {
        set.indices()
            .par_iter()
            .map(|a| gaussian_coefficient(seed, which, a))
            .collect::<Vec<_>>()
    };
    let mut pair = RandomPolyPair::from_coefficients(body, n, draw(Which::P), draw(Which::Q))?;
    pair.seed = Some(seed);
    Ok(pair)
}

/// `log|sum a_alpha c_alpha z^alpha|^2`, accumulated relative to the largest term.
fn ln_abs_sq(coeffs: &[Complex64], terms: &[(f64, f64)]) -> f64 {
    let mut top = f64::NEG_INFINITY;
    for (a, (t, _)) in coeffs.iter().zip(terms) {
        if *t > f64::NEG_INFINITY && a.norm() > 0.0 {
            top = top.max(t + a.norm().ln());
        }
    }
    if top == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, &(t, phase)) in coeffs.iter().zip(terms) {
        if t > f64::NEG_INFINITY {
            acc += a * Complex64::from_polar((t - top).exp(), phase);
        }
    }
    let m = acc.norm_sqr();
    if m == 0.0 {
        return f64::NEG_INFINITY;
    }
    2.0 * top + m.ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Per-term `(log|c_alpha z^alpha|, arg z^alpha)`.
fn term_table(pair: &RandomPolyPair, z: &[Complex64]) -> Vec<(f64, f64)> {
    let ln_mod: Vec<f64> = z.iter().map(|w| w.norm().ln()).collect();
    let arg: Vec<f64> = z.iter().map(|w| w.arg()).collect();
    pair.indices
        .iter()
        .zip(&pair.ln_c)
        .map(|(alpha, &lc)| {
            let mut t = lc;
            let mut ph = 0.0;
            for (i, &a) in alpha.components().iter().enumerate() {
                if a > 0 {
                    t += a as f64 * ln_mod[i];
                    ph += a as f64 * arg[i];
                }
            }
            (t, ph.rem_euclid(TAU))
        })
        .collect()
}

/// `(1/2n) log(|P_n(z)|^2 + |Q_n(z)|^2)`; `-inf` when both vanish.
pub fn potential(pair: &RandomPolyPair, z: &[Complex64]) -> Result<f64> {
    if z.len() != pair.body.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.body.dim(),
            got: z.len(),
        });
    }
    let terms = term_table(pair, z);
    let lp = ln_abs_sq(&pair.coeffs_p, &terms);
    let lq = ln_abs_sq(&pair.coeffs_q, &terms);
    Ok(log_add_exp(lp, lq) / (2.0 * pair.n as f64))
}

/// Cauchy-Schwarz ceiling `(1/2n) log(sum(|a|^2 + |b|^2) * sum c_alpha^2 |z^alpha|^2)`
/// for [`potential`].
pub fn potential_upper_bound(pair: &RandomPolyPair, z: &[Complex64]) -> Result<f64> {
    if z.len() != pair.body.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.body.dim(),
            got: z.len(),
        });
    }
    let terms = term_table(pair, z);
    let ln_basis = terms
        .iter()
        .map(|(t, _)| 2.0 * t)
        .fold(f64::NEG_INFINITY, log_add_exp);
    let mass: f64 = pair
        .coeffs_p
        .iter()
        .chain(&pair.coeffs_q)
        .map(|a| a.norm_sqr())
        .sum();
    Ok((mass.ln() + ln_basis) / (2.0 * pair.n as f64))
}

/// Evaluation points inside the annulus `1.1 <= |z| <= 2.5` of `C^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusGrid {
    points: Vec<[Complex64; 2]>,
}

impl AnnulusGrid {
    /// `radii x angles x phases` points `(r cos s e^{i phi1}, r sin s e^{i phi2})`
    /// with `s` uniform on `[0, pi/2]` and phase pairs spread over `[0, 2pi)`.
    pub fn new(radii: usize, angles: usize, phases: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if radii == 0 || angles == 0 || phases == 0 {
            return Err(Error::InvalidArgument("grid counts must be >= 1".into()));
        }
        if !(ANNULUS_MIN <= r_min && r_min <= r_max && r_max <= ANNULUS_MAX) {
            return Err(Error::InvalidArgument(format!(
                "radii must satisfy {ANNULUS_MIN} <= r_min <= r_max <= {ANNULUS_MAX}, got [{r_min}, {r_max}]"
            )));
        }
        let step = |k: usize, m: usize| {
            if m == 1 {
                0.0
            } else {
                k as f64 / (m - 1) as f64
            }
        };
        let mut points = Vec::with_capacity(radii * angles * phases);
        for ir in 0..radii {
            let r = if radii == 1 {
                r_min
            } else {
                r_min + (r_max - r_min) * step(ir, radii)
            };
            for ia in 0..angles {
                let s = if angles == 1 {
                    FRAC_PI_2 / 2.0
                } else {
                    FRAC_PI_2 * step(ia, angles)
                };
                for ip in 0..phases {
                    let p1 = TAU * ip as f64 / phases as f64;
                    let p2 = TAU * (ip as f64 + 0.5) / phases as f64;
                    points.push([
                        Complex64::from_polar(r * s.cos(), p1),
                        Complex64::from_polar(r * s.sin(), p2),
                    ]);
                }
            }
        }
        Ok(AnnulusGrid { points })
    }

    /// Default 200-point grid: 5 radii, 10 angles, 4 phase pairs over `[1.1, 2.5]`.
    pub fn standard() -> Self {
        AnnulusGrid::new(5, 10, 4, ANNULUS_MIN, ANNULUS_MAX).expect("valid default grid")
    }

    pub fn from_points(points: Vec<[Complex64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        for z in &points {
            let r = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
            if !(ANNULUS_MIN - 1e-12..=ANNULUS_MAX + 1e-12).contains(&r) {
                return Err(Error::InvalidArgument(format!(
                    "grid point with |z| = {r} outside the annulus"
                )));
            }
        }
        Ok(AnnulusGrid { points })
    }

    pub fn points(&self) -> &[[Complex64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sum in a fixed balanced tree so the result does not depend on scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// `V_{P,B}` at every grid point.
pub fn extremal_on_grid(body: &ConvexBody, grid: &AnnulusGrid) -> Result<Vec<f64>> {
    grid.points()
        .par_iter()
        .map(|z| Ok(v_ball(body, &ModuliPoint::from_complex(z)?, DEFAULT_TOL)?.value))
        .collect()
}

/// Mean `|potential - V|` over the grid for one seed, given precomputed `V` values.
pub fn grid_deviation(
    body: &ConvexBody,
    n: u64,
    seed: u64,
    grid: &AnnulusGrid,
    v: &[f64],
) -> Result<f64> {
    if body.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: body.dim(),
        });
    }
    if v.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: v.len(),
        });
    }
    let pair = sample_pair(body, n, seed)?;
    let devs: Vec<f64> = grid
        .points()
        .par_iter()
        .zip(v)
        .map(|(z, vz)| Ok((potential(&pair, z)? - vz).abs()))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&devs) / devs.len() as f64)
}

/// Mean over grid and seeds of `|potential - V_{P,B}|`.
pub fn l1_deviation(body: &ConvexBody, n: u64, seeds: &[u64], grid: &AnnulusGrid) -> Result<f64> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    let v = extremal_on_grid(body, grid)?;
    let per_seed: Vec<f64> = seeds
        .iter()
        .map(|&s| grid_deviation(body, n, s, grid, &v))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per_seed) / per_seed.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(q: f64) -> ConvexBody {
        ConvexBody::lq(q, 2).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_pair(&body(2.0), 6, 42).unwrap();
        let b = sample_pair(&body(2.0), 6, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_pair(&body(2.0), 6, 43).unwrap();
        assert_ne!(a.coeffs_p(), c.coeffs_p());
        assert_ne!(a.coeffs_p(), a.coeffs_q());
        assert_eq!(a.indices(), body(2.0).index_set(6).indices());
    }

    #[test]
    fn gaussian_moments() {
        let alpha = MultiIndex::new(vec![0, 0]);
        let m = 100_000u64;
        let (mut m2, mut m4) = (0.0, 0.0);
        for s in 0..m {
            let a = gaussian_coefficient(s, Which::P, &alpha);
            m2 += a.norm_sqr();
            m4 += a.norm_sqr() * a.norm_sqr();
        }
        assert!((m2 / m as f64 - 1.0).abs() < 0.02);
        assert!((m4 / m as f64 - 2.0).abs() < 0.05);
    }

    #[test]
    fn single_coefficient_potential() {
        let b = body(1.0);
        let n = 3;
        let len = b.index_set(n).len();
        let mut p = vec![Complex64::new(0.0, 0.0); len];
        p[0] = Complex64::new(1.0, 0.0);
        let pair = RandomPolyPair::from_coefficients(&b, n, p, vec![Complex64::new(0.0, 0.0); len])
            .unwrap();
        let z = [Complex64::new(1.7, 0.3), Complex64::new(-0.4, 2.0)];
        let c00 = ln_orthonormal_coefficient(&MultiIndex::new(vec![0, 0]));
        let v = potential(&pair, &z).unwrap();
        assert!((v - 2.0 * c00 / (2.0 * n as f64)).abs() < 1e-14);

        let zero = pair.scaled(Complex64::new(0.0, 0.0));
        assert_eq!(potential(&zero, &z).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn scaling_shifts_potential() {
        let pair = sample_pair(&body(4.0), 10, 3).unwrap();
        let z = [Complex64::new(1.2, 0.5), Complex64::new(0.1, -1.1)];
        let c = 0.37;
        let shifted = pair.scaled(Complex64::new((c * 10.0f64).exp(), 0.0));
        let d = potential(&shifted, &z).unwrap() - potential(&pair, &z).unwrap();
        assert!((d - c).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_evaluation_at_small_degree() {
        let b = body(2.0);
        let pair = sample_pair(&b, 4, 11).unwrap();
        let z = [Complex64::new(0.9, -0.6), Complex64::new(0.3, 1.4)];
        let eval = |coeffs: &[Complex64]| -> Complex64 {
            pair.indices()
                .iter()
                .zip(coeffs)
                .map(|(alpha, a)| {
                    let c = ln_orthonormal_coefficient(alpha).exp();
                    let a0 = alpha.components()[0] as i32;
                    let a1 = alpha.components()[1] as i32;
                    a * c * z[0].powi(a0) * z[1].powi(a1)
                })
                .sum()
        };
        let direct =
            (eval(pair.coeffs_p()).norm_sqr() + eval(pair.coeffs_q()).norm_sqr()).ln() / 8.0;
        assert!((potential(&pair, &z).unwrap() - direct).abs() < 1e-12);
        assert!(potential(&pair, &z).unwrap() <= potential_upper_bound(&pair, &z).unwrap() + 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert_eq!(AnnulusGrid::standard().len(), 200);
        assert!(AnnulusGrid::new(3, 3, 3, 1.0, 2.0).is_err());
        assert!(AnnulusGrid::new(3, 3, 3, 1.2, 2.6).is_err());
        for z in AnnulusGrid::standard().points() {
            let r = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
            assert!((1.1 - 1e-12..=2.5 + 1e-12).contains(&r));
        }
        let one =
            AnnulusGrid::from_points(vec![[Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]])
                .unwrap();
        assert_eq!(one.len(), 1);
        assert!(AnnulusGrid::from_points(vec![[
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, 0.0)
        ]])
        .is_err());
    }

    #[test]
    fn pairwise_sum_is_exact_on_small_inputs() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0, 4.0, 5.0]), 15.0);
    }
}
