//! Real lattices, diagonal scalings and enumeration of lattice points in boxes.
//!
//! A [`Lattice`] stores a square basis matrix whose *columns* are the basis
//! vectors. Points are addressed by integer coefficient vectors in that basis,
//! which keeps primitivity exact even though coordinates are floating point.
//!
//! Enumeration rescales the box to a cube, LLL-reduces the rescaled basis and
//! runs a depth-first Fincke–Pohst search over the circumscribed Euclidean
//! ball; cube membership is decided at the leaves.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Relative tolerance used for box membership and unimodularity checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Default cap on the number of enumeration tree nodes.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Lovász parameter used by every reduction in the crate.
pub const LOVASZ_DELTA: f64 = 0.99;

const MIN_GS_NORM: f64 = 1e-12;

/// A full-rank lattice in `R^d` given by a `d x d` basis (columns are basis vectors).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct Lattice {
    basis: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    dim: usize,
    basis: Vec<Vec<f64>>,
}

impl TryFrom<LatticeRepr> for Lattice {
    type Error = Error;

    fn try_from(repr: LatticeRepr) -> Result<Self> {
        if repr.basis.len() != repr.dim {
            return Err(Error::Dimension {
                expected: repr.dim,
                got: repr.basis.len(),
            });
        }
        Lattice::new(repr.basis)
    }
}

impl From<Lattice> for LatticeRepr {
    fn from(l: Lattice) -> Self {
        LatticeRepr {
            dim: l.dim(),
            basis: l.basis,
        }
    }
}

impl Lattice {
    /// Builds a lattice from a row-major basis matrix (`basis[i][j]` is
    /// coordinate `i` of basis vector `j`). The determinant must be `±1`
    /// within [`MEMBERSHIP_TOL`].
    pub fn new(basis: Vec<Vec<f64>>) -> Result<Self> {
        let lattice = Self::from_raw(basis)?;
        let det = lattice.det();
        if ((det.abs() - 1.0).abs()) > MEMBERSHIP_TOL {
            return domain(format!("basis is not unimodular (|det| = {det})"));
        }
        Ok(lattice)
    }

    /// Same as [`Lattice::new`] but skips the unimodularity check.
    pub fn from_raw(basis: Vec<Vec<f64>>) -> Result<Self> {
        let d = basis.len();
        if d == 0 {
            return domain("lattice dimension must be positive");
        }
        for row in &basis {
            if row.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return domain("basis entries must be finite");
            }
        }
        Ok(Lattice { basis })
    }

    pub(crate) fn from_columns(cols: &[Vec<f64>]) -> Lattice {
        let d = cols.len();
        let basis = (0..d).map(|i| (0..d).map(|j| cols[j][i]).collect()).collect();
        Lattice { basis }
    }

    /// The standard lattice `Z^d`.
    pub fn integer(d: usize) -> Lattice {
        let basis = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Lattice { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Row-major basis matrix.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.basis.iter().map(|row| row[j]).collect()
    }

    pub(crate) fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|j| self.column(j)).collect()
    }

    /// Coordinates of the lattice point with the given coefficients.
    pub fn point(&self, coeffs: &[i64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|row| row.iter().zip(coeffs).map(|(b, &c)| b * c as f64).sum())
            .collect()
    }

    pub fn det(&self) -> f64 {
        determinant(&self.basis)
    }
}

pub(crate) fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    det
}

/// A point of the torus of positive diagonal scalings with product one,
/// stored by the natural logarithms of its entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingVector {
    log_t: Vec<f64>,
}

impl ScalingVector {
    /// Builds a scaling vector from log-coordinates; they must sum to zero
    /// within `1e-9`.
    pub fn from_logs(log_t: Vec<f64>) -> Result<Self> {
        if log_t.is_empty() {
            return domain("scaling vector must be non-empty");
        }
        if log_t.iter().any(|x| !x.is_finite()) {
            return domain("scaling vector log-coordinates must be finite");
        }
        let sum: f64 = log_t.iter().sum();
        let scale = log_t.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if sum.abs() > 1e-9 * scale.max(1.0) {
            return domain(format!(
                "scaling vector entries must multiply to 1 (sum of logs = {sum})"
            ));
        }
        Ok(ScalingVector { log_t })
    }

    /// Builds a scaling vector from its (positive) entries.
    pub fn from_values(t: &[f64]) -> Result<Self> {
        if t.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return domain("scaling entries must be positive and finite");
        }
        Self::from_logs(t.iter().map(|x| x.ln()).collect())
    }

    pub fn identity(d: usize) -> Self {
        ScalingVector {
            log_t: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.log_t.len()
    }

    pub fn log_t(&self) -> &[f64] {
        &self.log_t
    }

    pub fn values(&self) -> Vec<f64> {
        self.log_t.iter().map(|x| x.exp()).collect()
    }

    pub fn inverse(&self) -> Self {
        ScalingVector {
            log_t: self.log_t.iter().map(|x| -x).collect(),
        }
    }

    /// Entrywise product `T * T'`.
    pub fn compose(&self, other: &ScalingVector) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(ScalingVector {
            log_t: self.log_t.iter().zip(&other.log_t).map(|(a, b)| a + b).collect(),
        })
    }

    /// `log ||T||_inf`, i.e. the largest log-coordinate.
    pub fn log_norm_inf(&self) -> f64 {
        self.log_t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_k |log T_k - log T'_k|`.
    pub fn distance(&self, other: &ScalingVector) -> f64 {
        self.log_t
            .iter()
            .zip(&other.log_t)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Whether the first `d1` entries are `>= 1` and the rest `<= 1`.
    pub fn is_expanding_split(&self, d1: usize) -> bool {
        self.log_t
            .iter()
            .enumerate()
            .all(|(k, &x)| if k < d1 { x >= -1e-12 } else { x <= 1e-12 })
    }

    /// `min(log T_1, .., log T_d1, -log T_{d1+1}, .., -log T_d)`.
    pub fn floor(&self, d1: usize) -> Result<f64> {
        if d1 == 0 || d1 >= self.dim() {
            return domain(format!("invalid split d1 = {d1} for dimension {}", self.dim()));
        }
        if !self.is_expanding_split(d1) {
            return domain("scaling vector is not in the expanding/contracting cone of the split");
        }
        Ok(self
            .log_t
            .iter()
            .enumerate()
            .map(|(k, &x)| if k < d1 { x } else { -x })
            .fold(f64::INFINITY, f64::min))
    }
}

/// A lattice point: integer coefficients in the lattice basis and real coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticePoint {
    pub coeffs: Vec<i64>,
    pub coords: Vec<f64>,
}

impl LatticePoint {
    pub fn is_primitive(&self) -> bool {
        self.coeffs.iter().fold(0i64, |g, &c| g.gcd(&c)) == 1
    }
}

/// Scales row `p` of the basis by `T_p`, i.e. returns `h(T) . lattice`.
pub fn apply_scaling(t: &ScalingVector, lattice: &Lattice) -> Result<Lattice> {
    if t.dim() != lattice.dim() {
        return Err(Error::Dimension {
            expected: lattice.dim(),
            got: t.dim(),
        });
    }
    let basis = lattice
        .basis
        .iter()
        .zip(t.values())
        .map(|(row, s)| row.iter().map(|x| x * s).collect())
        .collect();
    Ok(Lattice { basis })
}

/// LLL-reduces the lattice basis (Lovász parameter [`LOVASZ_DELTA`]).
pub fn lll_reduce(lattice: &Lattice) -> Result<Lattice> {
    let mut cols = lattice.columns();
    lll_columns(&mut cols)?;
    let gs = gram_schmidt_norms(&cols);
    let scale = cols
        .iter()
        .map(|c| norm(c))
        .fold(0.0f64, f64::max)
        .max(1.0);
    if gs.iter().any(|&g| g < MIN_GS_NORM * scale) {
        return Err(Error::Degenerate(
            "Gram-Schmidt norm below 1e-12 after reduction".into(),
        ));
    }
    Ok(Lattice::from_columns(&cols))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn gram_schmidt(cols: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = cols.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut bsq = vec![0.0; n];
    for i in 0..n {
        let mut v = cols[i].clone();
        for j in 0..i {
            mu[i][j] = if bsq[j] > 0.0 {
                dot(&cols[i], &star[j]) / bsq[j]
            } else {
                0.0
            };
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= mu[i][j] * sk;
            }
        }
        bsq[i] = dot(&v, &v);
        star.push(v);
    }
    (mu, bsq)
}

fn gram_schmidt_norms(cols: &[Vec<f64>]) -> Vec<f64> {
    gram_schmidt(cols).1.iter().map(|x| x.sqrt()).collect()
}

/// Floating-point LLL on column vectors. Returns the unimodular transform
/// `U` with `new_col[j] = sum_k U[k][j] * old_col[k]`.
pub(crate) fn lll_columns(cols: &mut [Vec<f64>]) -> Result<Vec<Vec<i64>>> {
    let n = cols.len();
    let mut u: Vec<Vec<i64>> = (0..n)
        .map(|j| (0..n).map(|k| i64::from(k == j)).collect())
        .collect();
    // u_cols[j] holds the coefficient vector of column j.
    let (mut mu, mut bsq) = gram_schmidt(cols);
    if bsq.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::Degenerate("basis is rank deficient".into()));
    }
    let mut k = 1;
    let mut iterations = 0u64;
    while k < n {
        iterations += 1;
        if iterations > 1_000_000 {
            return Err(Error::Degenerate("LLL did not terminate".into()));
        }
        for j in (0..k).rev() {
            // A small margin keeps |mu| = 1/2 from flipping sign forever.
            let q = if mu[k][j].abs() > 0.5 + 1e-9 {
                mu[k][j].round()
            } else {
                0.0
            };
            if q != 0.0 {
                if !(q.abs() < 4.0e18) {
                    return Err(Error::Degenerate(
                        "size-reduction coefficient overflow".into(),
                    ));
                }
                let qi = q as i64;
                let (left, right) = cols.split_at_mut(k);
                for (x, y) in right[0].iter_mut().zip(&left[j]) {
                    *x -= q * y;
                }
                let (ul, ur) = u.split_at_mut(k);
                for (x, y) in ur[0].iter_mut().zip(&ul[j]) {
                    *x = x
                        .checked_sub(qi.checked_mul(*y).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
                for i in 0..j {
                    mu[k][i] -= q * mu[j][i];
                }
                mu[k][j] -= q;
            }
        }
        if bsq[k] >= (LOVASZ_DELTA - mu[k][k - 1] * mu[k][k - 1]) * bsq[k - 1] {
            k += 1;
        } else {
            cols.swap(k, k - 1);
            u.swap(k, k - 1);
            let gs = gram_schmidt(cols);
            mu = gs.0;
            bsq = gs.1;
            if bsq.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
                return Err(Error::Degenerate("basis is rank deficient".into()));
            }
            k = (k - 1).max(1);
        }
    }
    // u[j] is the coefficient vector of new column j; transpose to U[k][j].
    Ok((0..n).map(|kk| (0..n).map(|j| u[j][kk]).collect()).collect())
}

fn overflow() -> Error {
    Error::Degenerate("integer overflow in basis transform".into())
}

/// Enumerates the nonzero lattice points `v` with `|v_p| <= half_widths[p]`
/// (relative tolerance [`MEMBERSHIP_TOL`]), sorted lexicographically by
/// coefficient vector.
pub fn enumerate_box(
    lattice: &Lattice,
    half_widths: &[f64],
    budget: u64,
) -> Result<Vec<LatticePoint>> {
    let d = lattice.dim();
    if half_widths.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: half_widths.len(),
        });
    }
    if half_widths.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return domain("box half-widths must be positive and finite");
    }
    let mut cols: Vec<Vec<f64>> = lattice
        .columns()
        .into_iter()
        .map(|c| c.iter().zip(half_widths).map(|(x, w)| x / w).collect())
        .collect();
    let u = lll_columns(&mut cols)?;
    let r = upper_triangular(&cols);
    let limit = 1.0 + MEMBERSHIP_TOL;
    let radius_sq = d as f64 * limit * limit * (1.0 + 1e-12);
    let mut points = Vec::new();
    let mut leaf_err = None;
    fincke_pohst(&r, radius_sq, budget, &mut |x: &[i64]| {
        let inside = (0..d).all(|p| {
            let y: f64 = (0..d).map(|j| cols[j][p] * x[j] as f64).sum();
            y.abs() <= limit
        });
        if !inside {
            return;
        }
        let mut coeffs = vec![0i64; d];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc: i128 = 0;
            for j in 0..d {
                acc += u[k][j] as i128 * x[j] as i128;
            }
            match i64::try_from(acc) {
                Ok(v) => *c = v,
                Err(_) => {
                    leaf_err = Some(overflow());
                    return;
                }
            }
        }
        let coords = lattice.point(&coeffs);
        points.push(LatticePoint { coeffs, coords });
    })?;
    if let Some(e) = leaf_err {
        return Err(e);
    }
    points.sort_by(|a, b| a.coeffs.cmp(&b.coeffs));
    Ok(points)
}

/// Upper-triangular factor `R` of the column matrix (`B = Q R`).
fn upper_triangular(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = cols.len();
    let (mu, bsq) = gram_schmidt(cols);
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        let nj = bsq[j].sqrt();
        r[j][j] = nj;
        for i in j + 1..n {
            r[j][i] = mu[i][j] * nj;
        }
    }
    r
}

/// Depth-first enumeration of nonzero integer `x` with `|R x|^2 <= radius_sq`.
fn fincke_pohst(
    r: &[Vec<f64>],
    radius_sq: f64,
    budget: u64,
    visit: &mut dyn FnMut(&[i64]),
) -> Result<()> {
    let n = r.len();
    let mut x = vec![0i64; n];
    let mut nodes = 0u64;
    descend(r, n - 1, 0.0, radius_sq, &mut x, &mut nodes, budget, visit)
}

#[allow(clippy::too_many_arguments)]
fn descend(
    r: &[Vec<f64>],
    level: usize,
    acc: f64,
    radius_sq: f64,
    x: &mut [i64],
    nodes: &mut u64,
    budget: u64,
    visit: &mut dyn FnMut(&[i64]),
) -> Result<()> {
    let n = r.len();
    let rii = r[level][level];
    let shift: f64 = (level + 1..n).map(|j| r[level][j] * x[j] as f64).sum();
    let center = -shift / rii;
    let remaining = radius_sq - acc;
    if remaining < 0.0 {
        return Ok(());
    }
    let half = remaining.sqrt() / rii.abs();
    let lo = (center - half).ceil();
    let hi = (center + half).floor();
    if !(hi - lo < 1e12) {
        return Err(Error::Budget { budget });
    }
    let (lo, hi) = (lo as i64, hi as i64);
    for xi in lo..=hi {
        *nodes += 1;
        if *nodes > budget {
            return Err(Error::Budget { budget });
        }
        x[level] = xi;
        let term = rii * (xi as f64 - center);
        let next = acc + term * term;
        if next > radius_sq {
            continue;
        }
        if level == 0 {
            if x.iter().any(|&c| c != 0) {
                visit(x);
            }
        } else {
            descend(r, level - 1, next, radius_sq, x, nodes, budget, visit)?;
        }
    }
    x[level] = 0;
    Ok(())
}

/// Nonzero points of `radius * B_T`, where `B_T = prod [-T_p, T_p]`.
pub fn enumerate_in_weighted_box(
    lattice: &Lattice,
    t: &ScalingVector,
    radius: f64,
) -> Result<Vec<LatticePoint>> {
    enumerate_in_weighted_box_with_budget(lattice, t, radius, DEFAULT_NODE_BUDGET)
}

pub fn enumerate_in_weighted_box_with_budget(
    lattice: &Lattice,
    t: &ScalingVector,
    radius: f64,
    budget: u64,
) -> Result<Vec<LatticePoint>> {
    check_radius(radius)?;
    if t.dim() != lattice.dim() {
        return Err(Error::Dimension {
            expected: lattice.dim(),
            got: t.dim(),
        });
    }
    let widths: Vec<f64> = t.values().iter().map(|x| x * radius).collect();
    enumerate_box(lattice, &widths, budget)
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return domain(format!("radius must be positive, got {radius}"));
    }
    Ok(())
}

/// Number of primitive nonzero lattice points in `radius * B_T`.
pub fn siegel_transform(lattice: &Lattice, t: &ScalingVector, radius: f64) -> Result<u64> {
    Ok(enumerate_in_weighted_box(lattice, t, radius)?
        .iter()
        .filter(|p| p.is_primitive())
        .count() as u64)
}

/// Whether `radius * B_T` contains a nonzero lattice point.
pub fn hits(lattice: &Lattice, t: &ScalingVector, radius: f64) -> Result<bool> {
    Ok(!enumerate_in_weighted_box(lattice, t, radius)?.is_empty())
}
