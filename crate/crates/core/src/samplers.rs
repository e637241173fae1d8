//! Random lattices and families of scaling vectors.
//!
//! * `mu`: Hecke points, i.e. index-`p` sublattices of `Z^d` rescaled to
//!   covolume one, which equidistribute towards the invariant measure as
//!   `p -> infinity`. Very skewed scalings need `p^{1/d}` far beyond the skew,
//!   so `p` is a big integer (Mersenne primes are convenient).
//! * `nu`: the unipotent lattices `{(p + alpha q, q)}` with `alpha` uniform in
//!   the unit cube, drawn as dyadic rationals with many random bits.
//!
//! Every draw is a function of `(seed, index)`: the generator is ChaCha8
//! seeded with `seed` and switched to stream `index`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::ExactLattice;
use crate::lattice::{Lattice, ScalingVector};
use crate::minima::LatticeSource;

/// Random bits per entry of a sampled `alpha`.
pub const DEFAULT_ALPHA_BITS: u32 = 512;

/// Default Hecke index.
pub const DEFAULT_HECKE_PRIME: u64 = 2_147_483_647;

/// Largest `|log T_p|` a family member may have.
const MAX_LOG_ENTRY: f64 = 700.0;

/// The generator for draw `index` of a run seeded with `seed`.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evaluates `f(0), ..., f(n - 1)` on a pool of `threads` workers and returns
/// the results in index order (the first error in index order wins).
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| (0..n).into_par_iter().map(&f).collect());
    results.into_iter().collect()
}

/// Uniform integer in `[0, 2^bits)`.
fn random_bits<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> BigUint {
    let words = bits.div_ceil(32) as usize;
    let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
    let extra = words as u32 * 32 - bits;
    if extra > 0 {
        if let Some(top) = digits.last_mut() {
            *top >>= extra;
        }
    }
    BigUint::new(digits)
}

/// Uniform integer in `[0, bound)` by rejection.
fn random_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    let bits = bound.bits() as u32;
    loop {
        let x = random_bits(bits, rng);
        if x < *bound {
            return x;
        }
    }
}

/// A `d1 x d2` matrix with entries `numerator / 2^bits`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaMatrix {
    bits: u32,
    numerators: Vec<Vec<BigUint>>,
}

impl AlphaMatrix {
    pub fn from_numerators(numerators: Vec<Vec<BigUint>>, bits: u32) -> Result<Self> {
        if numerators.is_empty() || numerators[0].is_empty() {
            return domain("alpha must be a non-empty matrix");
        }
        let d2 = numerators[0].len();
        if numerators.iter().any(|r| r.len() != d2) {
            return domain("alpha rows must have equal length");
        }
        let one = BigUint::one() << bits as usize;
        if numerators.iter().flatten().any(|n| *n >= one) {
            return domain("alpha entries must lie in [0, 1)");
        }
        Ok(AlphaMatrix { bits, numerators })
    }

    /// Uniform entries in `[0, 1)` with `bits` random bits each.
    pub fn random<R: Rng + ?Sized>(d1: usize, d2: usize, bits: u32, rng: &mut R) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return domain("d1 and d2 must be at least 1");
        }
        let numerators = (0..d1)
            .map(|_| (0..d2).map(|_| random_bits(bits, rng)).collect())
            .collect();
        Self::from_numerators(numerators, bits)
    }

    pub fn d1(&self) -> usize {
        self.numerators.len()
    }

    pub fn d2(&self) -> usize {
        self.numerators[0].len()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn numerators(&self) -> &[Vec<BigUint>] {
        &self.numerators
    }

    /// Entries rounded to `f64`.
    pub fn values(&self) -> Vec<Vec<f64>> {
        let top = self.bits.saturating_sub(64);
        let scale = 2f64.powi(-((self.bits - top) as i32));
        self.numerators
            .iter()
            .map(|r| {
                r.iter()
                    .map(|n| (n >> top as usize).to_u64().unwrap_or(0) as f64 * scale)
                    .collect()
            })
            .collect()
    }

    /// Floating-point basis of the unipotent lattice.
    pub fn lattice(&self) -> Result<Lattice> {
        unipotent_lattice(&self.values())
    }

    /// Exact reduced basis of the unipotent lattice.
    pub fn exact(&self) -> Result<ExactLattice> {
        ExactLattice::unipotent(&self.numerators, self.bits)
    }
}

/// The lattice with basis `[[I, alpha], [0, I]]` (columns are basis vectors).
pub fn unipotent_lattice(alpha: &[Vec<f64>]) -> Result<Lattice> {
    let d1 = alpha.len();
    if d1 == 0 || alpha[0].is_empty() {
        return domain("alpha must be a non-empty matrix");
    }
    let d2 = alpha[0].len();
    if alpha.iter().any(|r| r.len() != d2) {
        return domain("alpha rows must have equal length");
    }
    let d = d1 + d2;
    let mut basis = vec![vec![0.0; d]; d];
    for (i, row) in basis.iter_mut().enumerate() {
        row[i] = 1.0;
        if i < d1 {
            row[d1..].copy_from_slice(&alpha[i]);
        }
    }
    Lattice::new(basis)
}

/// A draw from `nu`: `alpha` with [`DEFAULT_ALPHA_BITS`] random bits per entry
/// and its lattice (floating-point basis).
pub fn sample_nu(d1: usize, d2: usize, seed: u64) -> Result<(AlphaMatrix, Lattice)> {
    let alpha = AlphaMatrix::random(d1, d2, DEFAULT_ALPHA_BITS, &mut rng_for(seed, 0))?;
    let lattice = alpha.lattice()?;
    Ok((alpha, lattice))
}

const SMALL_PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Miller–Rabin with the first 24 primes as bases (deterministic below
/// `3.3 * 10^24`, overwhelmingly reliable above).
pub fn is_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s as usize;
    'bases: for &a in &SMALL_PRIMES {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// `2^k - 1`.
pub fn mersenne(k: u32) -> BigUint {
    (BigUint::one() << k as usize) - 1u32
}

/// Hecke-point sampler for the invariant measure in dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeckeSampler {
    d: usize,
    p: BigUint,
}

impl HeckeSampler {
    pub fn new(d: usize, p: BigUint) -> Result<Self> {
        if d < 2 {
            return domain("Hecke sampling needs d >= 2");
        }
        if !is_prime(&p) {
            return domain(format!("Hecke index {p} is not prime"));
        }
        Ok(HeckeSampler { d, p })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn prime(&self) -> &BigUint {
        &self.p
    }

    /// Uniform offsets `a in {0, .., p-1}^{d-1}`.
    pub fn offsets<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<BigUint> {
        (1..self.d)
            .map(|_| random_below(&self.p, rng))
            .collect()
    }

    /// Exact reduced basis for the given offsets.
    pub fn exact(&self, a: &[BigUint]) -> Result<ExactLattice> {
        if a.len() + 1 != self.d {
            return Err(Error::Dimension {
                expected: self.d - 1,
                got: a.len(),
            });
        }
        ExactLattice::hecke(&self.p, a)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ExactLattice> {
        let a = self.offsets(rng);
        self.exact(&a)
    }
}

/// The Hecke basis `p^{-1/d} [p e_1, e_2 + a_2 e_1, .., e_d + a_d e_1]` as
/// written (not reduced).
pub fn hecke_basis(d: usize, p: u64, a: &[u64]) -> Result<Lattice> {
    if a.len() + 1 != d {
        return Err(Error::Dimension {
            expected: d - 1,
            got: a.len(),
        });
    }
    let s = (p as f64).powf(-1.0 / d as f64);
    let mut basis = vec![vec![0.0; d]; d];
    basis[0][0] = p as f64 * s;
    for (i, &ai) in a.iter().enumerate() {
        basis[0][i + 1] = ai as f64 * s;
        basis[i + 1][i + 1] = s;
    }
    Lattice::new(basis)
}

/// One Hecke draw with offsets from `rng_for(seed, 0)`, as a reduced
/// floating-point basis.
pub fn sample_mu(d: usize, p: u64, seed: u64) -> Result<Lattice> {
    HeckeSampler::new(d, BigUint::from(p))?
        .sample(&mut rng_for(seed, 0))?
        .to_lattice()
}

/// The two lattice measures.
#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    Mu(HeckeSampler),
    Nu { d1: usize, d2: usize, bits: u32 },
}

/// A sampled lattice with the parameters that produced it.
#[derive(Clone, Debug)]
pub struct Sample {
    pub source: LatticeSource,
    pub alpha: Option<AlphaMatrix>,
}

impl Measure {
    pub fn mu(d: usize, p: BigUint) -> Result<Self> {
        Ok(Measure::Mu(HeckeSampler::new(d, p)?))
    }

    pub fn nu(d1: usize, d2: usize) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return domain("d1 and d2 must be at least 1");
        }
        Ok(Measure::Nu {
            d1,
            d2,
            bits: DEFAULT_ALPHA_BITS,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Mu(h) => h.dim(),
            Measure::Nu { d1, d2, .. } => d1 + d2,
        }
    }

    /// Draw number `index` of the run seeded with `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<Sample> {
        let mut rng = rng_for(seed, index);
        match self {
            Measure::Mu(h) => Ok(Sample {
                source: LatticeSource::Exact(h.sample(&mut rng)?),
                alpha: None,
            }),
            Measure::Nu { d1, d2, bits } => {
                let alpha = AlphaMatrix::random(*d1, *d2, *bits, &mut rng)?;
                Ok(Sample {
                    source: LatticeSource::Exact(alpha.exact()?),
                    alpha: Some(alpha),
                })
            }
        }
    }
}

/// A finite family of scaling vectors with its sparseness diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFamily {
    pub split: Option<(usize, usize)>,
    pub members: Vec<ScalingVector>,
    /// Minimal pairwise `max_p |log T_p - log T'_p|` (`+inf` for one member).
    pub spread: f64,
    /// Minimal floor over the members (split families only).
    pub min_floor: Option<f64>,
    /// Dimension of the set the family is drawn from.
    pub rank: usize,
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    split: Option<(usize, usize)>,
    log_t: Vec<Vec<f64>>,
}

impl Serialize for ScalingFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FamilyRepr {
            split: self.split,
            log_t: self.members.iter().map(|t| t.log_t().to_vec()).collect(),
        }
        .serialize(s)
    }
}

fn check_entries(log_t: &[f64]) -> Result<()> {
    if let Some(x) = log_t.iter().find(|x| x.abs() > MAX_LOG_ENTRY) {
        return domain(format!(
            "scaling entry exp({x}) is outside double range (|log| must be <= {MAX_LOG_ENTRY})"
        ));
    }
    Ok(())
}

impl ScalingFamily {
    /// Family from explicit members. `rank` is the dimension of the
    /// subgroup the members come from.
    pub fn from_members(
        members: Vec<ScalingVector>,
        split: Option<(usize, usize)>,
        rank: usize,
    ) -> Result<Self> {
        if members.is_empty() {
            return domain("family must be non-empty");
        }
        let d = members[0].dim();
        for t in &members {
            if t.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: t.dim(),
                });
            }
            check_entries(t.log_t())?;
        }
        let spread = if members.len() >= 2 {
            spread(&members)?
        } else {
            f64::INFINITY
        };
        if spread == 0.0 {
            return domain("family members must be pairwise distinct");
        }
        let min_floor = match split {
            Some((d1, d2)) => {
                if d1 + d2 != d {
                    return Err(Error::Dimension {
                        expected: d,
                        got: d1 + d2,
                    });
                }
                Some(
                    members
                        .iter()
                        .map(|t| floor_t(t, d1))
                        .collect::<Result<Vec<f64>>>()?
                        .into_iter()
                        .fold(f64::INFINITY, f64::min),
                )
            }
            None => None,
        };
        Ok(ScalingFamily {
            split,
            members,
            spread,
            min_floor,
            rank,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `spread / log |F|`.
    pub fn spread_ratio(&self) -> f64 {
        self.spread / (self.len() as f64).ln()
    }

    /// `min_floor / log |F|` for split families.
    pub fn floor_ratio(&self) -> Option<f64> {
        self.min_floor.map(|f| f / (self.len() as f64).ln())
    }
}

/// `T(s) = (theta^{s_1}, .., theta^{s_{d-1}}, theta^{-sum s})` for
/// `s in {1..ell}^{d-1}` with `theta = ell^omega`.
pub fn build_grid_family(d: usize, ell: usize, omega: f64) -> Result<ScalingFamily> {
    if ell < 2 {
        return domain("ell must be at least 2");
    }
    if !(omega > 0.0) {
        return domain("omega must be positive");
    }
    if d < 2 {
        return domain("grid families need d >= 2");
    }
    build_box_family(d, &[ell].repeat(d - 1), omega * (ell as f64).ln())
}

/// Grid family with `s_k in {1..extents[k]}` and `log theta` given directly.
pub fn build_box_family(d: usize, extents: &[usize], log_theta: f64) -> Result<ScalingFamily> {
    if extents.contains(&0) {
        return domain("grid extents must be positive");
    }
    let ranges: Vec<(i64, i64)> = extents.iter().map(|&e| (1, e as i64)).collect();
    grid_family(d, &ranges, log_theta)
}

/// Grid family with `s in {-floor(ell/2) .. ell - 1 - floor(ell/2)}^{d-1}`,
/// i.e. `ell^{d-1}` members centred on the identity.
pub fn build_centered_family(d: usize, ell: usize, log_theta: f64) -> Result<ScalingFamily> {
    if ell < 2 {
        return domain("ell must be at least 2");
    }
    if d < 2 {
        return domain("grid families need d >= 2");
    }
    let lo = -((ell / 2) as i64);
    grid_family(d, &vec![(lo, lo + ell as i64 - 1); d - 1], log_theta)
}

fn grid_family(d: usize, ranges: &[(i64, i64)], log_theta: f64) -> Result<ScalingFamily> {
    if ranges.len() + 1 != d {
        return Err(Error::Dimension {
            expected: d.saturating_sub(1),
            got: ranges.len(),
        });
    }
    if !(log_theta > 0.0) || !log_theta.is_finite() {
        return domain("log theta must be positive");
    }
    let extents: Vec<usize> = ranges.iter().map(|&(lo, hi)| (hi - lo + 1) as usize).collect();
    let mut members = Vec::new();
    for s in index_grid(&extents) {
        let s: Vec<i64> = s.iter().zip(ranges).map(|(&k, &(lo, _))| lo + k as i64 - 1).collect();
        let mut log_t: Vec<f64> = s.iter().map(|&k| k as f64 * log_theta).collect();
        let total: i64 = s.iter().sum();
        log_t.push(-(total as f64) * log_theta);
        check_entries(&log_t)?;
        members.push(ScalingVector::from_logs(log_t)?);
    }
    ScalingFamily::from_members(members, None, d - 1)
}

/// Products `A_1^{s_1} .. A_k^{s_k}` for `s in {1..ell}^k`, where `A_i` is
/// generator `i` raised to the power `log theta`.
pub fn build_cone_family(
    d1: usize,
    d2: usize,
    generators: &[ScalingVector],
    ell: usize,
    theta: f64,
) -> Result<ScalingFamily> {
    if ell < 2 {
        return domain("ell must be at least 2");
    }
    if !(theta > 1.0) {
        return domain("theta must exceed 1");
    }
    if generators.is_empty() {
        return domain("at least one generator is needed");
    }
    let d = d1 + d2;
    for g in generators {
        if g.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: g.dim(),
            });
        }
        if !g.is_expanding_split(d1) {
            return domain("generators must expand the first d1 and contract the last d2 coordinates");
        }
    }
    let logs: Vec<Vec<f64>> = generators.iter().map(|g| g.log_t().to_vec()).collect();
    if rank(&logs) < generators.len() {
        return domain("generators are multiplicatively dependent");
    }
    let step = theta.ln();
    let mut members = Vec::new();
    for s in index_grid(&vec![ell; generators.len()]) {
        let log_t: Vec<f64> = (0..d)
            .map(|p| step * s.iter().zip(&logs).map(|(&k, g)| k as f64 * g[p]).sum::<f64>())
            .collect();
        check_entries(&log_t)?;
        members.push(ScalingVector::from_logs(log_t)?);
    }
    ScalingFamily::from_members(members, Some((d1, d2)), generators.len())
}

/// All index vectors `s` with `1 <= s_k <= extents[k]`, last index fastest.
fn index_grid(extents: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &e in extents {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (1..=e).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Numerical rank with relative tolerance `1e-9`.
fn rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let pivot = (r..m.len())
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[pivot][c].abs() <= 1e-9 * scale {
            continue;
        }
        m.swap(r, pivot);
        for i in r + 1..m.len() {
            let f = m[i][c] / m[r][c];
            for j in c..cols {
                m[i][j] -= f * m[r][j];
            }
        }
        r += 1;
    }
    r
}

/// Minimal pairwise distance `max_p |log T_p - log T'_p|`.
pub fn spread(members: &[ScalingVector]) -> Result<f64> {
    if members.len() < 2 {
        return domain("spread needs at least two members");
    }
    let mut best = f64::INFINITY;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            best = best.min(members[i].distance(&members[j]));
        }
    }
    Ok(best)
}

/// `min(log T_1, .., log T_d1, -log T_{d1+1}, .., -log T_d)`.
pub fn floor_t(t: &ScalingVector, d1: usize) -> Result<f64> {
    t.floor(d1)
}

/// `min(min floor, spread)` of a split family.
pub fn v_plus(family: &ScalingFamily) -> Result<f64> {
    let floor = family
        .min_floor
        .ok_or_else(|| Error::Domain("v+ needs a split family".into()))?;
    Ok(floor.min(family.spread))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsenessRow {
    pub size: usize,
    pub spread_ratio: f64,
    pub floor_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsenessReport {
    pub rows: Vec<SparsenessRow>,
    /// Whether sizes and spread ratios strictly increase along the sequence.
    pub spread_increasing: bool,
    /// Same for the floor ratios (split families only).
    pub floor_increasing: Option<bool>,
}

impl SparsenessReport {
    /// True when some ratio fails to increase.
    pub fn flagged(&self) -> bool {
        !self.spread_increasing || self.floor_increasing == Some(false)
    }
}

pub fn check_sparseness(families: &[ScalingFamily]) -> Result<SparsenessReport> {
    if families.len() < 2 {
        return domain("sparseness diagnostics need at least two families");
    }
    let rows: Vec<SparsenessRow> = families
        .iter()
        .map(|f| SparsenessRow {
            size: f.len(),
            spread_ratio: f.spread_ratio(),
            floor_ratio: f.floor_ratio(),
        })
        .collect();
    let spread_increasing = rows
        .windows(2)
        .all(|w| w[1].size > w[0].size && w[1].spread_ratio > w[0].spread_ratio);
    let floor_increasing = if rows.iter().all(|r| r.floor_ratio.is_some()) {
        Some(
            rows.windows(2)
                .all(|w| w[1].floor_ratio.unwrap() > w[0].floor_ratio.unwrap()),
        )
    } else {
        None
    };
    Ok(SparsenessReport {
        rows,
        spread_increasing,
        floor_increasing,
    })
}
