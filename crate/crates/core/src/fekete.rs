//! Grid-restricted exchange search for Fekete-like arrays on the unit sphere of `C^2`.
//!
//! Points are parametrised as `(cos s e^{i phi1}, sin s e^{i phi2})` with `s` on a
//! uniform grid of `[0, pi/2]` and both phases on a uniform grid of `[0, 2pi)`.
//! Each exchange step replaces one point by the grid candidate that maximises
//! `|VDM|` with the others fixed; the ratio of determinants is read off a row of
//! the inverse Vandermonde matrix.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::body::{ConvexBody, IndexSet};
use crate::error::{Error, Result};

/// Largest basis size searched.
pub const MAX_BASIS: usize = 400;
/// Minimum resolution of each grid axis.
pub const MIN_GRID: usize = 8;
/// Improvement in `log|VDM|` below which an exchange is not accepted.
pub const ACCEPT_TOL: f64 = 1e-10;
/// Pivots below this fraction of the largest entry mark the matrix singular.
const PIVOT_REL: f64 = 1e-14;
const RADIAL_BINS: usize = 10;
const MAX_INIT_DRAWS: usize = 100;

pub type Point2 = [Complex64; 2];

#[derive(Debug, Clone)]
pub struct FeketeConfig {
    pub body: ConvexBody,
    pub n: u64,
    pub grid_s: usize,
    pub grid_phi: usize,
    pub seed: u64,
    pub sweeps: usize,
}

impl FeketeConfig {
    pub fn validate(&self) -> Result<IndexSet> {
        if self.body.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.body.dim(),
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        if self.grid_s < MIN_GRID || self.grid_phi < MIN_GRID {
            return Err(Error::InvalidArgument(format!(
                "grid sizes must be >= {MIN_GRID}, got {} x {}",
                self.grid_s, self.grid_phi
            )));
        }
        let d_n = basis_size(&self.body, self.n);
        if d_n > MAX_BASIS {
            return Err(Error::ResourceCap {
                what: "d_n",
                value: d_n,
                cap: MAX_BASIS,
            });
        }
        Ok(self.body.index_set(self.n))
    }
}

/// `|index_set(P, n)|` without materialising large sets past the cap.
fn basis_size(body: &ConvexBody, n: u64) -> usize {
    // the simplex index set is contained in every P_q set, so its size is a lower bound
    let simplex = (n as usize + 1) * (n as usize + 2) / 2;
    if simplex > MAX_BASIS {
        return simplex;
    }
    body.index_set(n).len()
}

#[derive(Debug, Clone)]
pub struct FeketeResult {
    pub points: Vec<Point2>,
    pub log_abs_vdm: f64,
    /// `|VDM|^{1/l_n}`.
    pub delta_estimate: f64,
    /// Fractions of points with `|z1|` in each of ten equal bins of `[0, 1]`.
    pub radial_fractions: Vec<f64>,
    /// True when the last sweep made no exchange.
    pub converged: bool,
    /// `log|VDM|` after initialisation and after every accepted exchange.
    pub trace: Vec<f64>,
    pub sweeps_done: usize,
    pub d_n: usize,
    pub l_n: u64,
}

/// `l_n = sum |alpha|` over the index set, using classical total degree.
pub fn degree_sum(body: &ConvexBody, n: u64) -> u64 {
    body.index_set(n).iter().map(|a| a.total_degree()).sum()
}

/// Column `(zeta^{alpha(1)}, ..., zeta^{alpha(d_n)})` of the Vandermonde matrix.
fn monomial_column(set: &IndexSet, z: &Point2) -> Vec<Complex64> {
    let max_exp = set
        .iter()
        .flat_map(|a| a.components().iter().copied())
        .max()
        .unwrap_or(0) as usize;
    let powers: Vec<Vec<Complex64>> = z
        .iter()
        .map(|&w| {
            let mut p = Vec::with_capacity(max_exp + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=max_exp {
                p.push(acc);
                acc *= w;
            }
            p
        })
        .collect();
    set.iter()
        .map(|a| {
            let c = a.components();
            powers[0][c[0] as usize] * powers[1][c[1] as usize]
        })
        .collect()
}

fn vandermonde(set: &IndexSet, points: &[Point2]) -> DMatrix<Complex64> {
    let d = set.len();
    let mut m = DMatrix::zeros(d, points.len());
    for (j, z) in points.iter().enumerate() {
        for (i, v) in monomial_column(set, z).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// `log|det|` and inverse of a square matrix, or `None` when it is numerically singular.
fn log_det_and_inverse(
    m: DMatrix<Complex64>,
    want_inverse: bool,
) -> Option<(f64, Option<DMatrix<Complex64>>)> {
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let lu = m.lu();
    let u = lu.u();
    let mut log_det = 0.0;
    for i in 0..u.nrows() {
        let p = u[(i, i)].norm();
        if !(p > PIVOT_REL * scale) {
            return None;
        }
        log_det += p.ln();
    }
    let inv = if want_inverse {
        Some(lu.try_inverse()?)
    } else {
        None
    };
    Some((log_det, inv))
}

/// `log|det[zeta_j^{alpha(i)}]|` over the ordered basis of `index_set(P, n)`;
/// `-inf` when the matrix is singular (for instance with coincident points).
pub fn log_abs_vandermonde(body: &ConvexBody, n: u64, points: &[Point2]) -> Result<f64> {
    if body.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: body.dim(),
        });
    }
    let set = body.index_set(n);
    if points.len() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            got: points.len(),
        });
    }
    Ok(log_det_and_inverse(vandermonde(&set, points), false).map_or(f64::NEG_INFINITY, |(l, _)| l))
}

/// Candidate points on the sphere in grid order: `s` outermost, then `phi1`, then `phi2`.
pub fn sphere_grid(grid_s: usize, grid_phi: usize) -> Vec<Point2> {
    let mut out = Vec::with_capacity(grid_s * grid_phi * grid_phi);
    for is in 0..grid_s {
        let s = FRAC_PI_2 * is as f64 / (grid_s - 1) as f64;
        let (c, sn) = (s.cos(), s.sin());
        for i1 in 0..grid_phi {
            let p1 = TAU * i1 as f64 / grid_phi as f64;
            for i2 in 0..grid_phi {
                let p2 = TAU * i2 as f64 / grid_phi as f64;
                out.push([Complex64::from_polar(c, p1), Complex64::from_polar(sn, p2)]);
            }
        }
    }
    out
}

/// Histogram of `|z1|` over ten equal bins of `[0, 1]`, normalised to fractions.
pub fn radial_histogram(points: &[Point2]) -> Vec<f64> {
    let mut h = vec![0.0; RADIAL_BINS];
    if points.is_empty() {
        return h;
    }
    for z in points {
        let k = ((z[0].norm() * RADIAL_BINS as f64) as usize).min(RADIAL_BINS - 1);
        h[k] += 1.0;
    }
    let total = points.len() as f64;
    h.iter_mut().for_each(|x| *x /= total);
    h
}

/// Fraction of points with `||z1| - center| < half_width`.
pub fn band_fraction(points: &[Point2], center: f64, half_width: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let hits = points
        .iter()
        .filter(|z| (z[0].norm() - center).abs() < half_width)
        .count();
    hits as f64 / points.len() as f64
}

/// Seeded exchange search over the sphere grid.
pub fn search_fekete(cfg: &FeketeConfig) -> Result<FeketeResult> {
    let set = cfg.validate()?;
    let d = set.len();
    let grid = sphere_grid(cfg.grid_s, cfg.grid_phi);
    if grid.len() < d {
        return Err(Error::InvalidArgument(format!(
            "grid has {} candidates, need at least d_n = {d}",
            grid.len()
        )));
    }
    // candidate columns stored contiguously, one row of length d per candidate
    let columns: Vec<Vec<Complex64>> = grid.par_iter().map(|z| monomial_column(&set, z)).collect();

    let (mut chosen, (mut log_vdm, mut inv)) = random_start(&columns, d, cfg.seed)?;

    let mut trace = vec![log_vdm];
    let mut converged = false;
    let mut sweeps_done = 0;
    while sweeps_done < cfg.sweeps {
        sweeps_done += 1;
        let mut improved = false;
        for j in 0..d {
            let row: Vec<Complex64> = (0..d).map(|k| inv[(j, k)]).collect();
            let ratios: Vec<f64> = columns
                .par_iter()
                .map(|col| {
                    row.iter()
                        .zip(col)
                        .map(|(a, b)| a * b)
                        .sum::<Complex64>()
                        .norm()
                })
                .collect();
            let mut best = 0;
            for (c, r) in ratios.iter().enumerate() {
                if *r > ratios[best] {
                    best = c;
                }
            }
            if best == chosen[j] || !(ratios[best].ln() > ACCEPT_TOL) {
                continue;
            }
            let previous = chosen[j];
            chosen[j] = best;
            match assemble(&columns, &chosen) {
                Some((l, new_inv)) if l > log_vdm => {
                    log_vdm = l;
                    inv = new_inv;
                    trace.push(l);
                    improved = true;
                }
                _ => chosen[j] = previous,
            }
        }
        if !improved {
            converged = true;
            break;
        }
    }

    let points: Vec<Point2> = chosen.iter().map(|&c| grid[c]).collect();
    let l_n: u64 = set.iter().map(|a| a.total_degree()).sum();
    Ok(FeketeResult {
        radial_fractions: radial_histogram(&points),
        delta_estimate: (log_vdm / l_n as f64).exp(),
        points,
        log_abs_vdm: log_vdm,
        converged,
        trace,
        sweeps_done,
        d_n: d,
        l_n,
    })
}

type Start = (Vec<usize>, (f64, DMatrix<Complex64>));

fn random_start(columns: &[Vec<Complex64>], d: usize, seed: u64) -> Result<Start> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_INIT_DRAWS {
        let chosen = rand::seq::index::sample(&mut rng, columns.len(), d).into_vec();
        if let Some(s) = assemble(columns, &chosen) {
            return Ok((chosen, s));
        }
    }
    Err(Error::InvalidArgument(
        "could not draw a nonsingular initial configuration".into(),
    ))
}

fn assemble(columns: &[Vec<Complex64>], chosen: &[usize]) -> Option<(f64, DMatrix<Complex64>)> {
    let d = chosen.len();
    let m = DMatrix::from_fn(d, d, |i, j| columns[chosen[j]][i]);
    let (l, inv) = log_det_and_inverse(m, true)?;
    Some((l, inv?))
}
