//! Lattices with an exact dyadic basis.
//!
//! Entry `(i, j)` of the basis is `rows[i][j] * 2^exps[i]` with big-integer
//! `rows`. Diagonal rescalings only touch the row exponents (plus a single
//! 53-bit mantissa for the fractional part of the shift), so arbitrarily skewed
//! scalings can be applied without losing the lattice. Reduction is done with
//! the floating-point LLL of [`crate::lattice`] on a normalised approximation;
//! the resulting integer transform is applied exactly, and large shifts are
//! split into steps small enough for double precision to resolve.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};
use crate::lattice::{lll_columns, Lattice, ScalingVector};

/// Largest relative row shift (in bits) applied between two reductions.
const STEP_BITS: f64 = 16.0;

/// Fractional shifts below this are treated as exact powers of two.
const FRACTION_SNAP: f64 = 1e-12;

const MAX_REDUCE_ROUNDS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactLattice {
    rows: Vec<Vec<BigInt>>,
    exps: Vec<i64>,
}

impl ExactLattice {
    /// Builds a lattice from integer rows and per-row binary exponents.
    pub fn from_rows(rows: Vec<Vec<BigInt>>, exps: Vec<i64>) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return domain("lattice dimension must be positive");
        }
        if exps.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: exps.len(),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: r.len(),
            });
        }
        if rows.iter().any(|r| r.iter().all(|x| x.is_zero())) {
            return Err(Error::Degenerate("zero row in basis".into()));
        }
        let mut lattice = ExactLattice { rows, exps };
        lattice.normalize();
        Ok(lattice)
    }

    /// Exact copy of a floating-point lattice (every `f64` is a dyadic rational).
    pub fn from_lattice(lattice: &Lattice) -> Result<Self> {
        let mut rows = Vec::with_capacity(lattice.dim());
        let mut exps = Vec::with_capacity(lattice.dim());
        for row in lattice.basis() {
            let parts: Vec<(BigInt, i64)> = row.iter().map(|&x| dyadic(x)).collect();
            let e = parts
                .iter()
                .filter(|(m, _)| !m.is_zero())
                .map(|&(_, e)| e)
                .min()
                .unwrap_or(0);
            rows.push(
                parts
                    .into_iter()
                    .map(|(m, k)| if m.is_zero() { m } else { m << (k - e) as usize })
                    .collect(),
            );
            exps.push(e);
        }
        Self::from_rows(rows, exps)
    }

    /// The lattice `{(p + alpha q, q)}` for `alpha = numerators / 2^frac_bits`
    /// (a `d1 x d2` matrix), reduced.
    pub fn unipotent(numerators: &[Vec<BigUint>], frac_bits: u32) -> Result<Self> {
        let d1 = numerators.len();
        if d1 == 0 {
            return domain("alpha must have at least one row");
        }
        let d2 = numerators[0].len();
        if d2 == 0 || numerators.iter().any(|r| r.len() != d2) {
            return domain("alpha rows must have equal positive length");
        }
        let d = d1 + d2;
        let one = BigInt::one() << frac_bits as usize;
        let mut rows = Vec::with_capacity(d);
        let mut exps = Vec::with_capacity(d);
        for (l, num_row) in numerators.iter().enumerate() {
            let mut row = vec![BigInt::zero(); d];
            row[l] = one.clone();
            for (j, n) in num_row.iter().enumerate() {
                row[d1 + j] = BigInt::from(n.clone());
            }
            rows.push(row);
            exps.push(-(frac_bits as i64));
        }
        for j in 0..d2 {
            let mut row = vec![BigInt::zero(); d];
            row[d1 + j] = BigInt::one();
            rows.push(row);
            exps.push(0);
        }
        let mut lattice = Self::from_rows(rows, exps)?;
        lattice.reduce()?;
        Ok(lattice)
    }

    /// `p^{-1/d}` times the lattice spanned by `p e_1` and `e_i + a_i e_1`,
    /// reduced.
    pub fn hecke(p: &BigUint, a: &[BigUint]) -> Result<Self> {
        let d = a.len() + 1;
        if d < 2 {
            return domain("Hecke lattices need d >= 2");
        }
        if p.is_zero() {
            return domain("index must be positive");
        }
        let bits = p.bits() as i64;
        let mut rows = vec![vec![BigInt::zero(); d]; d];
        rows[0][0] = BigInt::from(p.clone());
        for (i, ai) in a.iter().enumerate() {
            rows[0][i + 1] = BigInt::from(ai.clone());
            rows[i + 1][i + 1] = BigInt::one();
        }
        let mut exps = vec![0i64; d];
        exps[0] = -bits;
        let mut lattice = Self::from_rows(rows, exps)?;
        lattice.reduce()?;
        // Undo the provisional 2^-bits on the first row and apply p^{-1/d}.
        let log2p = log2_biguint(p);
        let mut shift = vec![-log2p / d as f64; d];
        shift[0] += bits as f64;
        lattice.rescale_log2(&shift)?;
        Ok(lattice)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Floating-point copy of the current basis.
    pub fn to_lattice(&self) -> Result<Lattice> {
        Lattice::from_raw(self.approx(0))
    }

    /// `h(T) . self` (or `h(T)^{-1} . self` when `inverse`), reduced and
    /// converted to floating point.
    pub fn scaled(&self, t: &ScalingVector, inverse: bool) -> Result<Lattice> {
        let mut out = self.clone();
        out.rescale_ln(t.log_t(), inverse)?;
        out.to_lattice()
    }

    /// Multiplies row `i` by `exp(±log_t[i])` and re-reduces.
    pub fn rescale_ln(&mut self, log_t: &[f64], inverse: bool) -> Result<()> {
        let sign = if inverse { -1.0 } else { 1.0 };
        let shift: Vec<f64> = log_t
            .iter()
            .map(|x| sign * x / std::f64::consts::LN_2)
            .collect();
        self.rescale_log2(&shift)
    }

    /// Multiplies row `i` by `2^shift[i]` and re-reduces.
    pub fn rescale_log2(&mut self, shift: &[f64]) -> Result<()> {
        let d = self.dim();
        if shift.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: shift.len(),
            });
        }
        if shift.iter().any(|x| !x.is_finite()) {
            return domain("scaling shift must be finite");
        }
        let mut whole = vec![0i64; d];
        for i in 0..d {
            let k = shift[i].floor();
            let mut frac = shift[i] - k;
            let mut k = k as i64;
            if frac > 1.0 - FRACTION_SNAP {
                k += 1;
                frac = 0.0;
            }
            if frac > FRACTION_SNAP {
                let mantissa = (frac.exp2() * 2f64.powi(52)).round() as u64;
                self.rows[i].iter_mut().for_each(|x| *x *= mantissa);
                self.exps[i] -= 52;
            }
            whole[i] = k;
        }
        let lo = *whole.iter().min().unwrap();
        let hi = *whole.iter().max().unwrap();
        let steps = (((hi - lo) as f64) / STEP_BITS).ceil().max(1.0) as i64;
        let mut done = vec![0i64; d];
        for s in 1..=steps {
            for i in 0..d {
                let target = div_round(whole[i] * s, steps);
                self.exps[i] += target - done[i];
                done[i] = target;
            }
            self.normalize();
            self.reduce()?;
        }
        Ok(())
    }

    /// LLL-reduces the basis; the transform is applied exactly.
    pub fn reduce(&mut self) -> Result<()> {
        let d = self.dim();
        for _ in 0..MAX_REDUCE_ROUNDS {
            let offset = self.top_exponent();
            let approx = self.approx(offset);
            let mut cols: Vec<Vec<f64>> = (0..d)
                .map(|j| (0..d).map(|i| approx[i][j]).collect())
                .collect();
            let u = lll_columns(&mut cols)?;
            let identity = (0..d).all(|k| (0..d).all(|j| u[k][j] == i64::from(k == j)));
            if identity {
                return Ok(());
            }
            for row in self.rows.iter_mut() {
                let new_row: Vec<BigInt> = (0..d)
                    .map(|j| {
                        let mut acc = BigInt::zero();
                        for (k, x) in row.iter().enumerate() {
                            if u[k][j] != 0 {
                                acc += x * u[k][j];
                            }
                        }
                        acc
                    })
                    .collect();
                *row = new_row;
            }
            self.normalize();
        }
        Err(Error::Degenerate(
            "exact reduction did not stabilise".into(),
        ))
    }

    /// Largest `log2 |entry|` over the basis, rounded up.
    fn top_exponent(&self) -> i64 {
        self.rows
            .iter()
            .zip(&self.exps)
            .map(|(row, &e)| row.iter().map(|x| x.bits() as i64).max().unwrap_or(0) + e)
            .max()
            .unwrap_or(0)
    }

    /// Entries divided by `2^offset`, rounded to `f64`.
    fn approx(&self, offset: i64) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .zip(&self.exps)
            .map(|(row, &e)| row.iter().map(|x| big_to_f64(x, e - offset)).collect())
            .collect()
    }

    /// Removes common trailing zero bits from each row.
    fn normalize(&mut self) {
        for (row, e) in self.rows.iter_mut().zip(self.exps.iter_mut()) {
            let tz = row.iter().filter_map(|x| x.trailing_zeros()).min();
            if let Some(tz) = tz {
                if tz > 0 {
                    row.iter_mut().for_each(|x| *x >>= tz as usize);
                    *e += tz as i64;
                }
            }
        }
    }
}

fn div_round(a: i64, b: i64) -> i64 {
    (a as f64 / b as f64).round() as i64
}

/// Exact decomposition `x = m * 2^e`.
fn dyadic(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, e) = if exp_field == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_field - 1075)
    };
    let m = BigInt::from(mantissa);
    (if x < 0.0 { -m } else { m }, e)
}

/// `x * 2^e` rounded to `f64` (0 on underflow).
pub(crate) fn big_to_f64(x: &BigInt, e: i64) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let bits = x.bits() as i64;
    let (top, shift) = if bits > 64 {
        let t: BigInt = x.abs() >> (bits - 64) as usize;
        (t.to_u64().unwrap_or(u64::MAX) as f64, bits - 64)
    } else {
        (x.abs().to_u64().unwrap_or(u64::MAX) as f64, 0)
    };
    let v = ldexp(top, shift + e);
    if x.sign() == Sign::Minus {
        -v
    } else {
        v
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// `log2(p)` for a big unsigned integer.
pub(crate) fn log2_biguint(p: &BigUint) -> f64 {
    let bits = p.bits() as i64;
    if bits <= 64 {
        return (p.to_u64().unwrap() as f64).log2();
    }
    let top = (p >> (bits - 64) as usize).to_u64().unwrap() as f64;
    top.log2() + (bits - 64) as f64
}
