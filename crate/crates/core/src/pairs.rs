//! `(eta, C)` pairs: a homogeneous function `eta` restricted to a region `C`,
//! with the exponents `(a, b, c)` of `Vol(C(t)) ~ c t^a (-log t)^b` as
//! `t -> 0`, where `C(t) = {x in C : eta(x) < t}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::stats::zeta;

/// A monomial `coef * x^exp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub exp: Vec<u32>,
}

/// A homogeneous polynomial in `d` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polynomial {
    pub d: usize,
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(d: usize, terms: Vec<Monomial>) -> Result<Self> {
        let p = Polynomial { d, terms };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return domain("polynomial needs at least one variable");
        }
        if self.terms.iter().all(|t| t.coef == 0.0) {
            return domain("polynomial is identically zero");
        }
        for t in &self.terms {
            if t.exp.len() != self.d {
                return Err(Error::Dimension {
                    expected: self.d,
                    got: t.exp.len(),
                });
            }
            if !t.coef.is_finite() {
                return domain("polynomial coefficients must be finite");
            }
        }
        let deg = self.degree();
        if self
            .terms
            .iter()
            .any(|t| t.exp.iter().sum::<u32>() != deg)
        {
            return domain("polynomial must be homogeneous");
        }
        if deg == 0 {
            return domain("polynomial must have positive degree");
        }
        Ok(())
    }

    pub fn degree(&self) -> u32 {
        self.terms.first().map(|t| t.exp.iter().sum()).unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * t.exp
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| xi.powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }
}

/// The supported pairs. Every kind except `NormedStrip` has `C = [-1, 1]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairKind {
    /// `eta = sup norm`.
    #[serde(rename = "ball")]
    NormBallSup { d: usize },
    /// `eta = |x_1 ... x_d|`.
    #[serde(rename = "product")]
    ProductForm { d: usize },
    /// `eta = sup of the first d1 coordinates`, `C = {sup of the last d2 <= 1}`.
    #[serde(rename = "strip")]
    NormedStrip { d1: usize, d2: usize },
    /// `eta = |x_1 ... x_d1|`.
    #[serde(rename = "product_strip")]
    ProductStrip { d1: usize, d2: usize },
    /// `eta = |F(x)|`.
    #[serde(rename = "polynomial")]
    Polynomial(Polynomial),
}

impl PairKind {
    pub fn dim(&self) -> usize {
        match self {
            PairKind::NormBallSup { d } | PairKind::ProductForm { d } => *d,
            PairKind::NormedStrip { d1, d2 } | PairKind::ProductStrip { d1, d2 } => d1 + d2,
            PairKind::Polynomial(p) => p.d,
        }
    }

    pub fn split(&self) -> Option<(usize, usize)> {
        match self {
            PairKind::NormedStrip { d1, d2 } | PairKind::ProductStrip { d1, d2 } => {
                Some((*d1, *d2))
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PairKind::NormBallSup { d } | PairKind::ProductForm { d } => {
                if *d < 1 {
                    return domain("pair dimension must be positive");
                }
            }
            PairKind::NormedStrip { d1, d2 } | PairKind::ProductStrip { d1, d2 } => {
                if *d1 < 1 || *d2 < 1 {
                    return domain("split (d1, d2) needs d1, d2 >= 1");
                }
            }
            PairKind::Polynomial(p) => p.validate()?,
        }
        Ok(())
    }
}

/// A pair with its regularity exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularPair {
    pub kind: PairKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Homogeneity degree of `eta`.
    pub gamma: f64,
    /// True when `(a, b, c)` were fitted numerically.
    pub approximate: bool,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn simplex_constant(n: usize) -> f64 {
    1.0 / factorial(n - 1)
}

impl RegularPair {
    /// The pair with its exact exponents. Polynomial kinds need
    /// [`RegularPair::polynomial`] or [`RegularPair::fit_polynomial`].
    pub fn new(kind: PairKind) -> Result<Self> {
        kind.validate()?;
        let d = kind.dim();
        let (a, b, c, gamma) = match &kind {
            PairKind::NormBallSup { d } => (*d as f64, 0.0, 2f64.powi(*d as i32), 1.0),
            PairKind::ProductForm { d } => (
                1.0,
                (*d - 1) as f64,
                2f64.powi(*d as i32) * simplex_constant(*d),
                *d as f64,
            ),
            PairKind::NormedStrip { d1, .. } => (*d1 as f64, 0.0, 2f64.powi(d as i32), 1.0),
            PairKind::ProductStrip { d1, .. } => (
                1.0,
                (*d1 - 1) as f64,
                2f64.powi(d as i32) * simplex_constant(*d1),
                *d1 as f64,
            ),
            PairKind::Polynomial(_) => {
                return Err(Error::Unsupported(
                    "polynomial pairs carry fitted exponents; use RegularPair::polynomial".into(),
                ))
            }
        };
        Ok(RegularPair {
            kind,
            a,
            b,
            c,
            gamma,
            approximate: false,
        })
    }

    pub fn ball(d: usize) -> Result<Self> {
        Self::new(PairKind::NormBallSup { d })
    }

    pub fn product(d: usize) -> Result<Self> {
        Self::new(PairKind::ProductForm { d })
    }

    pub fn strip(d1: usize, d2: usize) -> Result<Self> {
        Self::new(PairKind::NormedStrip { d1, d2 })
    }

    pub fn product_strip(d1: usize, d2: usize) -> Result<Self> {
        Self::new(PairKind::ProductStrip { d1, d2 })
    }

    /// A polynomial pair with externally supplied (approximate) exponents.
    pub fn polynomial(poly: Polynomial, a: f64, b: f64, c: f64) -> Result<Self> {
        poly.validate()?;
        if !(a > 0.0) || !(b >= 0.0) || !(c > 0.0) {
            return domain("exponents need a > 0, b >= 0, c > 0");
        }
        let gamma = poly.degree() as f64;
        Ok(RegularPair {
            kind: PairKind::Polynomial(poly),
            a,
            b,
            c,
            gamma,
            approximate: true,
        })
    }

    /// A polynomial pair whose exponents are fitted to Monte Carlo volumes.
    pub fn fit_polynomial(poly: Polynomial, t_grid: &[f64], samples: u64, seed: u64) -> Result<Self> {
        let provisional = RegularPair::polynomial(poly.clone(), 1.0, 0.0, 1.0)?;
        let volumes = t_grid
            .iter()
            .map(|&t| provisional.mc_volume(t, samples, seed).map(|(v, _)| v))
            .collect::<Result<Vec<f64>>>()?;
        if volumes.iter().any(|&v| v <= 0.0) {
            return Err(Error::Fit(
                "Monte Carlo volume vanished on the grid; use more samples".into(),
            ));
        }
        let fit = fit_abc(t_grid, &volumes)?;
        RegularPair::polynomial(poly, fit.a, fit.b, fit.c)
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn split(&self) -> Option<(usize, usize)> {
        self.kind.split()
    }

    /// Whether `C` is bounded (every kind except the strip).
    pub fn bounded(&self) -> bool {
        !matches!(self.kind, PairKind::NormedStrip { .. })
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eta(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.eta_unchecked(x))
    }

    pub(crate) fn eta_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PairKind::NormBallSup { .. } => sup(x),
            PairKind::ProductForm { .. } => x.iter().map(|v| v.abs()).product(),
            PairKind::NormedStrip { d1, .. } => sup(&x[..*d1]),
            PairKind::ProductStrip { d1, .. } => x[..*d1].iter().map(|v| v.abs()).product(),
            PairKind::Polynomial(p) => p.eval(x).abs(),
        }
    }

    /// The seminorm with `C = {tau <= 1}`.
    pub fn tau(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(match &self.kind {
            PairKind::NormedStrip { d1, .. } => sup(&x[*d1..]),
            _ => sup(x),
        })
    }

    /// Closed-form `Vol(C(t))` for `0 < t <= 1`.
    pub fn volume_c(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return domain(format!("t must lie in (0, 1], got {t}"));
        }
        let d = self.dim() as i32;
        Ok(match &self.kind {
            PairKind::NormBallSup { .. } => (2.0 * t).powi(d),
            PairKind::ProductForm { d } => product_volume(*d, t),
            PairKind::NormedStrip { d1, d2 } => (2.0 * t).powi(*d1 as i32) * 2f64.powi(*d2 as i32),
            PairKind::ProductStrip { d1, d2 } => product_volume(*d1, t) * 2f64.powi(*d2 as i32),
            PairKind::Polynomial(_) => {
                return Err(Error::Unsupported(
                    "no closed-form volume for polynomial pairs; use mc_volume".into(),
                ))
            }
        })
    }

    /// Hit-or-miss estimate of `Vol(C(t))` and its standard error. Points are
    /// drawn from the bounding box of `C` (of `{eta <= t} ∩ C` for the strip),
    /// in blocks whose generators are seeded with `seed` on stream `block`.
    pub fn mc_volume(&self, t: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
        if samples == 0 {
            return domain("samples must be positive");
        }
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("t must be finite and non-negative, got {t}"));
        }
        let d = self.dim();
        let half: Vec<f64> = match &self.kind {
            PairKind::NormedStrip { d1, .. } => (0..d).map(|k| if k < *d1 { t } else { 1.0 }).collect(),
            _ => vec![1.0; d],
        };
        let region: f64 = half.iter().map(|h| 2.0 * h).product();
        if region == 0.0 {
            return Ok((0.0, 0.0));
        }
        const BLOCK: u64 = 1 << 16;
        let blocks = samples.div_ceil(BLOCK);
        let inside: u64 = (0..blocks)
            .into_par_iter()
            .map(|block| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(block);
                let n = BLOCK.min(samples - block * BLOCK);
                let mut x = vec![0.0; d];
                let mut count = 0u64;
                for _ in 0..n {
                    for (xi, h) in x.iter_mut().zip(&half) {
                        *xi = h * (2.0 * rng.random::<f64>() - 1.0);
                    }
                    if self.eta_unchecked(&x) < t {
                        count += 1;
                    }
                }
                count
            })
            .collect::<Vec<u64>>()
            .into_iter()
            .sum();
        let p = inside as f64 / samples as f64;
        let se = region * (p * (1.0 - p) / samples as f64).sqrt();
        Ok((region * p, se))
    }

    /// `|F|^{-1/a} (log |F|)^{-b/a}`.
    pub fn delta_n(&self, family_size: f64) -> Result<f64> {
        if !(family_size >= 2.0) {
            return domain(format!("family size must be at least 2, got {family_size}"));
        }
        Ok(family_size.powf(-1.0 / self.a) * family_size.ln().powf(-self.b / self.a))
    }

    /// Poisson coefficient `m_o = c a^b / (2 zeta(d))` and the Weibull law
    /// `(m_o^{-1/a}, a)` of the normalised minima.
    pub fn theorem_constants(&self, d: usize) -> Result<TheoremConstants> {
        if d != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: d,
            });
        }
        if d < 3 {
            return Err(Error::Unsupported(
                "the limit laws are only established for d >= 3; d = 2 is open".into(),
            ));
        }
        let m_o = self.c * self.a.powf(self.b) / (2.0 * zeta(d as u32)?);
        Ok(TheoremConstants {
            m_o,
            weibull_scale: m_o.powf(-1.0 / self.a),
            weibull_shape: self.a,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub m_o: f64,
    pub weibull_scale: f64,
    pub weibull_shape: f64,
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `Vol{x in [-1,1]^n : |x_1 ... x_n| < t} = 2^n t sum_{k<n} (-log t)^k / k!`.
fn product_volume(n: usize, t: f64) -> f64 {
    let l = -t.ln();
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..n {
        if k > 0 {
            term *= l / k as f64;
        }
        sum += term;
    }
    2f64.powi(n as i32) * t * sum
}

/// Result of [`fit_abc`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `b` from the unconstrained fit, before rounding.
    pub b_free: f64,
}

/// Least-squares fit of `log V = log c + a log t + b log(-log t)`; `b` is
/// rounded to the nearest non-negative integer and the fit repeated with `b`
/// fixed.
pub fn fit_abc(t_grid: &[f64], volumes: &[f64]) -> Result<AbcFit> {
    if t_grid.len() != volumes.len() {
        return Err(Error::Dimension {
            expected: t_grid.len(),
            got: volumes.len(),
        });
    }
    if t_grid.len() < 6 {
        return Err(Error::Fit("need at least 6 grid points".into()));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t <= 0.5)) {
        return Err(Error::Fit("grid points must lie in (0, 0.5]".into()));
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Fit("grid must be strictly decreasing".into()));
    }
    if volumes.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("volumes must be positive".into()));
    }
    let y: Vec<f64> = volumes.iter().map(|v| v.ln()).collect();
    let lt: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    let llt: Vec<f64> = t_grid.iter().map(|t| (-t.ln()).ln()).collect();
    let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![1.0, lt[i], llt[i]]).collect();
    let free = least_squares(&rows, &y)?;
    let b = free[2].round().max(0.0);
    let y_fixed: Vec<f64> = y.iter().zip(&llt).map(|(yi, l)| yi - b * l).collect();
    let rows2: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![1.0, lt[i]]).collect();
    let fixed = least_squares(&rows2, &y_fixed)?;
    Ok(AbcFit {
        a: fixed[1],
        b,
        c: fixed[0].exp(),
        b_free: free[2],
    })
}

/// Solves the normal equations with partial pivoting.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = rows[0].len();
    let mut m = vec![vec![0.0; k + 1]; k];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                m[i][j] += row[i] * row[j];
            }
            m[i][k] += row[i] * yi;
        }
    }
    let scale = m.iter().map(|r| r[..k].iter().fold(0.0f64, |a, v| a.max(v.abs()))).fold(0.0, f64::max);
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= 1e-12 * scale {
            return Err(Error::Fit("singular design matrix".into()));
        }
        m.swap(pivot, col);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Ok((0..k).map(|i| m[i][k] / m[i][i]).collect())
}
