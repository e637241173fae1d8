//! Reference distributions, goodness-of-fit statistics and the moment checks
//! for random lattices.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{hits, siegel_transform, Lattice, ScalingVector};
use crate::minima::{family_values, LatticeSource};
use crate::pairs::RegularPair;
use crate::samplers::{map_indexed, Measure, ScalingFamily};

/// Riemann zeta at an integer `d >= 2`: partial sum plus an Euler–Maclaurin
/// tail (error far below `1e-14`).
pub fn zeta(d: u32) -> Result<f64> {
    if d < 2 {
        return domain(format!("zeta needs d >= 2, got {d}"));
    }
    const N: u32 = 100;
    let s = d as f64;
    let head: f64 = (1..N).rev().map(|n| (n as f64).powf(-s)).sum();
    let n = N as f64;
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    Ok(head + tail)
}

/// `1 - exp(-(rate * t)^shape)` for `t > 0`, and 0 otherwise.
pub fn weibull_cdf(rate: f64, shape: f64, t: f64) -> Result<f64> {
    if !(rate > 0.0) || !(shape > 0.0) {
        return domain("Weibull parameters must be positive");
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    if t.is_infinite() {
        return Ok(1.0);
    }
    Ok(-(-(rate * t).powf(shape)).exp_m1())
}

/// Reference laws used by the goodness-of-fit checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Distribution {
    /// Survival function `exp(-(t / scale)^shape)`, i.e. the limit laws with
    /// `scale = m_o^{-1/a}` and `shape = a`.
    Weibull { scale: f64, shape: f64 },
    Poisson { mean: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Distribution {
    pub fn cdf(&self, t: f64) -> Result<f64> {
        match *self {
            Distribution::Weibull { scale, shape } => {
                if !(scale > 0.0) {
                    return domain("Weibull scale must be positive");
                }
                weibull_cdf(1.0 / scale, shape, t)
            }
            Distribution::Poisson { mean } => {
                if !(mean >= 0.0) {
                    return domain("Poisson mean must be non-negative");
                }
                if t < 0.0 {
                    return Ok(0.0);
                }
                let k = t.floor() as u64;
                let mut term = (-mean).exp();
                let mut acc = term;
                for j in 1..=k {
                    term *= mean / j as f64;
                    acc += term;
                }
                Ok(acc.min(1.0))
            }
            Distribution::Uniform { lo, hi } => {
                if !(hi > lo) {
                    return domain("uniform law needs lo < hi");
                }
                Ok(((t - lo) / (hi - lo)).clamp(0.0, 1.0))
            }
        }
    }
}

/// Kolmogorov–Smirnov distance; infinite samples are dropped and counted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub distance: f64,
    pub n_finite: usize,
    pub n_infinite: usize,
}

pub fn ks_distance(samples: &[f64], reference: &Distribution) -> Result<KsResult> {
    if samples.iter().any(|x| x.is_nan()) {
        return domain("samples contain NaN");
    }
    let mut finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    let n_infinite = samples.len() - finite.len();
    if finite.is_empty() {
        return domain("no finite samples for the KS distance");
    }
    finite.sort_by(f64::total_cmp);
    let n = finite.len() as f64;
    let mut distance: f64 = 0.0;
    for (i, &x) in finite.iter().enumerate() {
        let f = reference.cdf(x)?;
        distance = distance.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        distance: distance.clamp(0.0, 1.0),
        n_finite: finite.len(),
        n_infinite,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorialMoment {
    pub r: u32,
    pub estimate: f64,
    pub reference: f64,
    pub std_error: f64,
}

fn binomial(n: u64, r: u32) -> f64 {
    if (r as u64) > n {
        return 0.0;
    }
    (0..r as u64).fold(1.0, |acc, k| acc * (n - k) as f64 / (k + 1) as f64)
}

fn factorial(r: u32) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

/// Sample means of `binom(N, r)` against the Poisson values `m^r / r!`.
pub fn factorial_moments(counts: &[u64], r_max: u32, m: f64) -> Result<Vec<FactorialMoment>> {
    if r_max == 0 {
        return domain("r_max must be at least 1");
    }
    if counts.is_empty() {
        return domain("no counts given");
    }
    Ok((1..=r_max)
        .map(|r| {
            let values: Vec<f64> = counts.iter().map(|&c| binomial(c, r)).collect();
            let (estimate, std_error) = mean_and_se(&values);
            FactorialMoment {
                r,
                estimate,
                reference: m.powi(r as i32) / factorial(r),
                std_error,
            }
        })
        .collect())
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median of the finite values (`NaN` when there are none).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A Monte Carlo estimate next to its reference value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub reference: f64,
    pub n: usize,
}

impl MomentCheck {
    /// `(estimate - reference) / std_error`; 0 when both coincide exactly.
    pub fn z_score(&self) -> f64 {
        let diff = self.estimate - self.reference;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Mean number of primitive points of a set of volume `volume`: `V / zeta(d)`.
pub fn siegel_reference(d: usize, volume: f64) -> Result<f64> {
    Ok(volume / zeta(d as u32)?)
}

/// Second moment of the primitive count: `2V/zeta(d) + (V/zeta(d))^2`.
pub fn rogers_reference(d: usize, volume: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::Unsupported(format!(
            "the second-moment formula is only available for d >= 3 (got d = {d})"
        )));
    }
    let m = siegel_reference(d, volume)?;
    Ok(2.0 * m + m * m)
}

fn box_volume(t: &ScalingVector, radius: f64) -> f64 {
    (2.0 * radius).powi(t.dim() as i32)
}

fn collect_counts<I>(lattices: I, t: &ScalingVector, radius: f64) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = Lattice>,
{
    let counts = lattices
        .into_iter()
        .map(|l| siegel_transform(&l, t, radius).map(|c| c as f64))
        .collect::<Result<Vec<f64>>>()?;
    if counts.is_empty() {
        return domain("empty lattice stream");
    }
    Ok(counts)
}

/// Mean primitive count in `radius * B_T` against `Vol / zeta(d)`.
pub fn verify_siegel<I>(lattices: I, t: &ScalingVector, radius: f64) -> Result<MomentCheck>
where
    I: IntoIterator<Item = Lattice>,
{
    let counts = collect_counts(lattices, t, radius)?;
    siegel_check(&counts, t.dim(), box_volume(t, radius))
}

/// Second moment of the primitive count against the second-moment formula.
pub fn verify_rogers<I>(lattices: I, t: &ScalingVector, radius: f64) -> Result<MomentCheck>
where
    I: IntoIterator<Item = Lattice>,
{
    rogers_reference(t.dim(), 0.0)?;
    let counts = collect_counts(lattices, t, radius)?;
    rogers_check(&counts, t.dim(), box_volume(t, radius))
}

/// [`verify_siegel`] on precomputed counts.
pub fn siegel_check(counts: &[f64], d: usize, volume: f64) -> Result<MomentCheck> {
    if counts.is_empty() {
        return domain("no counts given");
    }
    let (estimate, std_error) = mean_and_se(counts);
    Ok(MomentCheck {
        estimate,
        std_error,
        reference: siegel_reference(d, volume)?,
        n: counts.len(),
    })
}

/// [`verify_rogers`] on precomputed counts.
pub fn rogers_check(counts: &[f64], d: usize, volume: f64) -> Result<MomentCheck> {
    let reference = rogers_reference(d, volume)?;
    if counts.is_empty() {
        return domain("no counts given");
    }
    let squares: Vec<f64> = counts.iter().map(|c| c * c).collect();
    let (estimate, std_error) = mean_and_se(&squares);
    Ok(MomentCheck {
        estimate,
        std_error,
        reference,
        n: counts.len(),
    })
}

/// Bounds on the probability that a random lattice meets a symmetric box of
/// the given volume: `(m - m^2, m, m)` with `m = V / (2 zeta(d))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingBounds {
    pub lower: f64,
    pub center: f64,
    pub upper: f64,
}

pub fn hitting_prob_bounds(volume: f64, d: usize) -> Result<HittingBounds> {
    if d < 3 {
        return Err(Error::Unsupported(format!(
            "hitting-probability bounds need d >= 3 (got d = {d})"
        )));
    }
    if !(volume >= 0.0) {
        return domain("volume must be non-negative");
    }
    let m = volume / (2.0 * zeta(d as u32)?);
    Ok(HittingBounds {
        lower: m - m * m,
        center: m,
        upper: m,
    })
}

/// Empirical hitting frequency of `radius * B_T` with its standard error.
pub fn hitting_frequency<I>(lattices: I, t: &ScalingVector, radius: f64) -> Result<(f64, f64, usize)>
where
    I: IntoIterator<Item = Lattice>,
{
    let flags = lattices
        .into_iter()
        .map(|l| hits(&l, t, radius).map(|h| if h { 1.0 } else { 0.0 }))
        .collect::<Result<Vec<f64>>>()?;
    if flags.is_empty() {
        return domain("empty lattice stream");
    }
    let (p, se) = mean_and_se(&flags);
    Ok((p, se, flags.len()))
}

/// One row of a logarithm-law run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoglawStage {
    pub stage: usize,
    pub family_size: usize,
    pub spread_ratio: f64,
    pub median: f64,
}

/// For each family, the median over sampled lattices of
/// `min_T (log ||T||_inf)^{delta / a} * f_T`, where `f_T` is the pair's
/// minimum on the transformed lattice and `a` the pair's volume exponent.
pub fn loglaw_trend(
    pair: &RegularPair,
    measure: &Measure,
    delta: f64,
    stages: &[ScalingFamily],
    n_samples: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<LoglawStage>> {
    if stages.is_empty() {
        return domain("no stages given");
    }
    if n_samples == 0 {
        return domain("n_samples must be positive");
    }
    for family in stages {
        let bound = family.rank as f64;
        if !(delta >= 0.0 && delta < bound) {
            return domain(format!(
                "delta must lie in [0, {bound}) for a family of rank {bound}, got {delta}"
            ));
        }
    }
    let exponent = delta / pair.a;
    stages
        .iter()
        .enumerate()
        .map(|(k, family)| {
            let weights: Vec<f64> = family
                .members
                .iter()
                .map(|t| {
                    let l = t.log_norm_inf();
                    if l > 0.0 {
                        Ok(l.powf(exponent))
                    } else {
                        domain("logarithm-law families need ||T||_inf > 1")
                    }
                })
                .collect::<Result<_>>()?;
            let values = map_indexed(n_samples, threads, |i| {
                let sample = measure.sample(seed, (k as u64) << 32 | i as u64)?;
                let vals = family_values(pair, &family.members, &sample.source)?;
                Ok(vals
                    .iter()
                    .zip(&weights)
                    .map(|(v, w)| v * w)
                    .fold(f64::INFINITY, f64::min))
            })?;
            Ok(LoglawStage {
                stage: k,
                family_size: family.members.len(),
                spread_ratio: family.spread / (family.members.len() as f64).ln(),
                median: median(&values),
            })
        })
        .collect()
}

/// `source` reduced to a plain lattice (for the moment checks).
pub fn lattice_of(source: &LatticeSource) -> Result<Lattice> {
    source.scaled(&ScalingVector::identity(source.dim()), false)
}
