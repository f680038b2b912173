//! Convex bodies `P_q = {x >= 0 : |x|_q <= 1}` and the lattice index sets of `Poly(nP)`.
//!
//! Only the nonnegative-orthant quadrants of lq balls are modelled. `q = 1` is the
//! standard simplex (classical total degree) and `q = inf` the unit cube
//! (tensor-product degree).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Absolute tolerance used when snapping a Minkowski norm to an integer degree.
pub const DEGREE_SNAP: f64 = 1e-12;

/// Exponent `q` of an lq body, with `q = inf` kept as a distinguished value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::InvalidArgument(format!("q must be >= 1, got {q}")));
        }
        Ok(if q.is_infinite() {
            Exponent::Infinite
        } else {
            Exponent::Finite(q)
        })
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Finite(q) => q,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// Hoelder conjugate `q'` with `1/q + 1/q' = 1`.
    pub fn dual(self) -> Exponent {
        match self {
            Exponent::Infinite => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinite,
            Exponent::Finite(q) => Exponent::Finite(q / (q - 1.0)),
        }
    }

    pub fn is_one(self) -> bool {
        self == Exponent::Finite(1.0)
    }

    pub fn is_infinite(self) -> bool {
        self == Exponent::Infinite
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse exponent {s:?}")))
                .and_then(Exponent::new),
        }
    }
}

impl TryFrom<String> for Exponent {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Exponent> for String {
    fn from(q: Exponent) -> String {
        q.to_string()
    }
}

/// lq norm of a nonnegative vector, scaled by its largest entry so that
/// axis vectors come out exact and large entries cannot overflow.
pub(crate) fn lq_norm(x: &[f64], q: Exponent) -> f64 {
    match q {
        Exponent::Infinite => x.iter().copied().fold(0.0, f64::max),
        Exponent::Finite(1.0) => x.iter().sum(),
        Exponent::Finite(q) => {
            let m = x.iter().copied().fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            let s: f64 = x.iter().map(|&v| (v / m).powf(q)).sum();
            m * s.powf(1.0 / q)
        }
    }
}

fn snap_ceil(r: f64) -> u64 {
    let nearest = r.round();
    if (r - nearest).abs() <= DEGREE_SNAP {
        nearest as u64
    } else {
        r.ceil() as u64
    }
}

/// Exponent vector `alpha` of a monomial `z^alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Classical total degree `|alpha| = sum alpha_i`.
    pub fn total_degree(&self) -> u64 {
        self.0.iter().map(|&a| a as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&a| a as f64).collect()
    }

    /// Componentwise `self <= other`.
    pub fn le_componentwise(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// The lq quadrant body `P_q` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    q: Exponent,
    d: usize,
}

impl ConvexBody {
    pub fn new(q: Exponent, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if let Exponent::Finite(v) = q {
            Exponent::new(v)?;
        }
        Ok(ConvexBody { q, d })
    }

    /// Convenience constructor; `f64::INFINITY` selects the cube.
    pub fn lq(q: f64, d: usize) -> Result<Self> {
        ConvexBody::new(Exponent::new(q)?, d)
    }

    pub fn simplex(d: usize) -> Result<Self> {
        ConvexBody::new(Exponent::Finite(1.0), d)
    }

    pub fn cube(d: usize) -> Result<Self> {
        ConvexBody::new(Exponent::Infinite, d)
    }

    pub fn q(&self) -> Exponent {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Same body shape in another dimension (used when zero coordinates are dropped).
    pub fn with_dim(&self, d: usize) -> Result<Self> {
        ConvexBody::new(self.q, d)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: len,
            });
        }
        Ok(())
    }

    /// Minkowski gauge `|x|_P` of a nonnegative vector.
    pub fn minkowski_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        if let Some(i) = x.iter().position(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "component {i} of x is negative or NaN: {}",
                x[i]
            )));
        }
        Ok(lq_norm(x, self.q))
    }

    /// `|alpha|_P`, the Minkowski norm of a multi-index.
    pub fn index_norm(&self, alpha: &MultiIndex) -> Result<f64> {
        self.check_dim(alpha.dim())?;
        Ok(lq_norm(&alpha.as_f64(), self.q))
    }

    /// `deg_P(z^alpha)`: the least integer `n` with `alpha` in `nP`.
    pub fn degree(&self, alpha: &MultiIndex) -> Result<u64> {
        self.index_norm(alpha).map(snap_ceil)
    }

    pub fn contains(&self, alpha: &MultiIndex, n: u64) -> Result<bool> {
        Ok(self.degree(alpha)? <= n)
    }

    /// All `alpha` in `nP`, graded by `deg_P` then lexicographic.
    pub fn index_set(&self, n: u64) -> IndexSet {
        let mut entries = Vec::new();
        let mut current = vec![0u32; self.d];
        self.enumerate(0, n, &mut current, &mut entries);
        entries.sort_by(|(da, a): &(u64, MultiIndex), (db, b)| match da.cmp(db) {
            Ordering::Equal => a.cmp(b),
            o => o,
        });
        let (degrees, indices) = entries.into_iter().unzip();
        IndexSet {
            body: *self,
            n,
            indices,
            degrees,
        }
    }

    fn enumerate(
        &self,
        pos: usize,
        n: u64,
        current: &mut Vec<u32>,
        out: &mut Vec<(u64, MultiIndex)>,
    ) {
        if pos == self.d {
            let alpha = MultiIndex(current.clone());
            let deg = snap_ceil(lq_norm(&alpha.as_f64(), self.q));
            out.push((deg, alpha));
            return;
        }
        // Every coordinate of a member is at most n; the norm of a prefix only
        // grows with the current coordinate, so the first failure ends the loop.
        for a in 0..=n as u32 {
            current[pos] = a;
            let prefix: Vec<f64> = current[..=pos].iter().map(|&c| c as f64).collect();
            if snap_ceil(lq_norm(&prefix, self.q)) > n {
                break;
            }
            self.enumerate(pos + 1, n, current, out);
        }
        current[pos] = 0;
    }

    /// Support function `phi_P(x) = sup_{y in P} <x, y>`; equals the dual norm of `x^+`.
    pub fn indicator(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN component in indicator".into()));
        }
        let pos: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
        Ok(lq_norm(&pos, self.q.dual()))
    }

    /// Lebesgue measure of the quadrant body, `Gamma(1+1/q)^d / Gamma(1+d/q)`.
    pub fn volume(&self) -> f64 {
        match self.q {
            Exponent::Infinite => 1.0,
            Exponent::Finite(q) => {
                let d = self.d as f64;
                (d * ln_gamma(1.0 + 1.0 / q) - ln_gamma(1.0 + d / q)).exp()
            }
        }
    }

    /// Least integer `A >= 1` with `P` inside `A * Sigma`, i.e. `ceil(max sum y_i)`.
    pub fn simplex_cover_constant(&self) -> u64 {
        match self.q {
            Exponent::Infinite => self.d as u64,
            Exponent::Finite(q) => snap_ceil((self.d as f64).powf(1.0 - 1.0 / q)).max(1),
        }
    }
}

/// Ordered monomial basis of `Poly(nP)`.
#[derive(Debug, Clone)]
pub struct IndexSet {
    body: ConvexBody,
    n: u64,
    indices: Vec<MultiIndex>,
    degrees: Vec<u64>,
}

impl IndexSet {
    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `d_n = dim Poly(nP)`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// `deg_P` of each entry, parallel to [`IndexSet::indices`].
    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.indices.contains(alpha)
    }
}
