//! Extremal values of lattices: the generic minimum `eta~` of a pair, its
//! family minima and hit counts, and the classical quantities (Minkowski,
//! product, polynomial, Dirichlet and Gallagher minima) computed straight from
//! their definitions.

use crate::error::{domain, Error, Result};
use crate::exact::ExactLattice;
use crate::lattice::{
    apply_scaling, enumerate_box, enumerate_in_weighted_box, Lattice, ScalingVector,
    DEFAULT_NODE_BUDGET, MEMBERSHIP_TOL,
};
use crate::pairs::{PairKind, Polynomial, RegularPair};

/// A lattice to which diagonal scalings are applied.
#[derive(Clone, Debug, PartialEq)]
pub enum LatticeSource {
    /// Plain floating-point basis; fine for mild scalings.
    Float(Lattice),
    /// Exact basis; required once the scalings are far from the identity.
    Exact(ExactLattice),
}

impl LatticeSource {
    pub fn dim(&self) -> usize {
        match self {
            LatticeSource::Float(l) => l.dim(),
            LatticeSource::Exact(e) => e.dim(),
        }
    }

    /// `h(T) . Lambda` (or `h(T)^{-1} . Lambda`).
    pub fn scaled(&self, t: &ScalingVector, inverse: bool) -> Result<Lattice> {
        match self {
            LatticeSource::Float(l) => {
                let t = if inverse { t.inverse() } else { t.clone() };
                apply_scaling(&t, l)
            }
            LatticeSource::Exact(e) => e.scaled(t, inverse),
        }
    }
}

/// Whether the family minimum of the pair uses `h(T)^{-1}` rather than `h(T)`.
///
/// Points of the box `B_T` are exactly the points `v` with `h(T)^{-1} v` in the
/// unit cube, so the Minkowski and product minima over `B_T` are the pair
/// minima of `h(T)^{-1} Lambda`. Polynomial, Dirichlet and Gallagher minima
/// are defined on `h(T) Lambda`.
pub fn uses_inverse(pair: &RegularPair) -> bool {
    matches!(
        pair.kind,
        PairKind::NormBallSup { .. } | PairKind::ProductForm { .. }
    )
}

/// `inf { eta(v) : 0 != v in Lambda ∩ C }`; `+inf` when no such point exists.
pub fn eta_tilde(pair: &RegularPair, lattice: &Lattice) -> Result<f64> {
    eta_tilde_with_budget(pair, lattice, DEFAULT_NODE_BUDGET)
}

pub fn eta_tilde_with_budget(pair: &RegularPair, lattice: &Lattice, budget: u64) -> Result<f64> {
    let d = pair.dim();
    if lattice.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: lattice.dim(),
        });
    }
    match pair.kind {
        PairKind::NormedStrip { d1, .. } => {
            // Grow the bound on the first block until the slab has a point;
            // every point with eta below the bound is then enumerated.
            let mut bound = 1.0;
            for _ in 0..64 {
                let widths: Vec<f64> = (0..d).map(|k| if k < d1 { bound } else { 1.0 }).collect();
                let pts = enumerate_box(lattice, &widths, budget)?;
                if !pts.is_empty() {
                    return Ok(pts
                        .iter()
                        .map(|p| pair.eta_unchecked(&p.coords))
                        .fold(f64::INFINITY, f64::min));
                }
                bound *= 2.0;
            }
            Ok(f64::INFINITY)
        }
        _ => {
            let pts = enumerate_box(lattice, &vec![1.0; d], budget)?;
            Ok(pts
                .iter()
                .map(|p| pair.eta_unchecked(&p.coords))
                .fold(f64::INFINITY, f64::min))
        }
    }
}

/// Pair minima of `h(T)^{±1} Lambda` for every member, in order.
///
/// Exact sources are walked from one member to the next, so each step only
/// applies the (small) scaling difference between consecutive members.
pub fn family_values(
    pair: &RegularPair,
    family: &[ScalingVector],
    source: &LatticeSource,
) -> Result<Vec<f64>> {
    if family.is_empty() {
        return domain("family must be non-empty");
    }
    let d = pair.dim();
    if source.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: source.dim(),
        });
    }
    if let Some(t) = family.iter().find(|t| t.dim() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: t.dim(),
        });
    }
    let inverse = uses_inverse(pair);
    match source {
        LatticeSource::Float(_) => family
            .iter()
            .map(|t| eta_tilde(pair, &source.scaled(t, inverse)?))
            .collect(),
        LatticeSource::Exact(base) => {
            let sign = if inverse { -1.0 } else { 1.0 };
            let mut current = base.clone();
            let mut applied = vec![0.0; d];
            let mut out = Vec::with_capacity(family.len());
            for t in family {
                let target: Vec<f64> = t.log_t().iter().map(|x| sign * x).collect();
                let step: Vec<f64> = target.iter().zip(&applied).map(|(a, b)| a - b).collect();
                current.rescale_ln(&step, false)?;
                applied = target;
                out.push(eta_tilde(pair, &current.to_lattice()?)?);
            }
            Ok(out)
        }
    }
}

/// `min_T eta~(h(T)^{±1} Lambda)` over the family.
pub fn family_min(pair: &RegularPair, family: &[ScalingVector], source: &LatticeSource) -> Result<f64> {
    Ok(family_values(pair, family, source)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Number of members whose transformed lattice has a nonzero point in `C(t)`,
/// i.e. with `eta~ < t`.
pub fn count_hits(
    pair: &RegularPair,
    family: &[ScalingVector],
    source: &LatticeSource,
    t: f64,
) -> Result<u64> {
    if !(t >= 0.0) {
        return domain(format!("t must be non-negative, got {t}"));
    }
    Ok(count_below(&family_values(pair, family, source)?, t))
}

/// Number of values strictly below `t`.
pub fn count_below(values: &[f64], t: f64) -> u64 {
    values.iter().filter(|&&v| v < t).count() as u64
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Smallest `c` with a nonzero lattice point in `c B_T`:
/// `min_v max_p |v_p| / T_p`.
pub fn minkowski_c(lattice: &Lattice, t: &ScalingVector) -> Result<f64> {
    let tv = t.values();
    let mut radius = 1.0;
    for _ in 0..64 {
        let pts = enumerate_in_weighted_box(lattice, t, radius)?;
        if !pts.is_empty() {
            return Ok(pts
                .iter()
                .map(|p| {
                    p.coords
                        .iter()
                        .zip(&tv)
                        .fold(0.0f64, |m, (v, s)| m.max(v.abs() / s))
                })
                .fold(f64::INFINITY, f64::min));
        }
        radius *= 2.0;
    }
    Err(Error::Degenerate("no lattice point found in any dilate of the box".into()))
}

/// `min |v_1 ... v_d|` over nonzero lattice points of `B_T`; `+inf` if none.
pub fn product_min(lattice: &Lattice, t: &ScalingVector) -> Result<f64> {
    let pts = enumerate_in_weighted_box(lattice, t, 1.0)?;
    Ok(pts
        .iter()
        .map(|p| p.coords.iter().map(|v| v.abs()).product::<f64>())
        .fold(f64::INFINITY, f64::min))
}

/// `min |F(v)|` over nonzero points of `h(T) Lambda` in `[-1, 1]^d`; `+inf` if
/// there are none.
pub fn poly_min(poly: &Polynomial, lattice: &Lattice, t: &ScalingVector) -> Result<f64> {
    poly.validate()?;
    if poly.d != lattice.dim() {
        return Err(Error::Dimension {
            expected: lattice.dim(),
            got: poly.d,
        });
    }
    let tv = t.values();
    let pts = enumerate_in_weighted_box(lattice, &t.inverse(), 1.0)?;
    Ok(pts
        .iter()
        .map(|p| {
            let x: Vec<f64> = p.coords.iter().zip(&tv).map(|(v, s)| v * s).collect();
            poly.eval(&x).abs()
        })
        .fold(f64::INFINITY, f64::min))
}

fn check_alpha(alpha: &[Vec<f64>], t: &ScalingVector) -> Result<(usize, usize)> {
    let d1 = alpha.len();
    if d1 == 0 || alpha[0].is_empty() {
        return domain("alpha must be a non-empty matrix");
    }
    let d2 = alpha[0].len();
    if alpha.iter().any(|r| r.len() != d2) {
        return domain("alpha rows must have equal length");
    }
    if t.dim() != d1 + d2 {
        return Err(Error::Dimension {
            expected: d1 + d2,
            got: t.dim(),
        });
    }
    if !t.is_expanding_split(d1) {
        return domain("T must expand the first d1 and contract the last d2 coordinates");
    }
    Ok((d1, d2))
}

/// Calls `visit(q)` for every integer `q != 0` with `|q_j| <= bounds[j]`.
fn for_each_q(bounds: &[i64], budget: u64, mut visit: impl FnMut(&[i64])) -> Result<()> {
    let total = bounds
        .iter()
        .try_fold(1u64, |acc, &b| acc.checked_mul(2 * b as u64 + 1));
    match total {
        Some(n) if n <= budget => {}
        _ => return Err(Error::Budget { budget }),
    }
    let mut q: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        if q.iter().any(|&x| x != 0) {
            visit(&q);
        }
        let mut k = q.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            if q[k] < bounds[k] {
                q[k] += 1;
                break;
            }
            q[k] = -bounds[k];
        }
    }
}

fn q_bounds(t: &ScalingVector, d1: usize) -> Vec<i64> {
    t.values()[d1..]
        .iter()
        .map(|s| ((1.0 / s) * (1.0 + MEMBERSHIP_TOL)).floor() as i64)
        .collect()
}

fn alpha_q(alpha: &[Vec<f64>], q: &[i64]) -> Vec<f64> {
    alpha
        .iter()
        .map(|row| row.iter().zip(q).map(|(a, &qj)| a * qj as f64).sum())
        .collect()
}

/// `min max_l T_l |p_l + (alpha q)_l|` over integers `(p, q) != 0` with
/// `|q_j| <= 1 / T_{d1+j}`.
pub fn dirichlet_k(alpha: &[Vec<f64>], t: &ScalingVector) -> Result<f64> {
    let (d1, _) = check_alpha(alpha, t)?;
    let tv = t.values();
    // q = 0: the best nonzero p is a unit vector.
    let mut best = tv[..d1].iter().cloned().fold(f64::INFINITY, f64::min);
    for_each_q(&q_bounds(t, d1), DEFAULT_NODE_BUDGET, |q| {
        let v = alpha_q(alpha, q)
            .iter()
            .zip(&tv)
            .fold(0.0f64, |m, (x, s)| m.max(s * (x - x.round()).abs()));
        best = best.min(v);
    })?;
    Ok(best)
}

/// `min prod_l T_l |p_l + (alpha q)_l|` over integers `(p, q) != 0` with
/// `|q_j| <= 1 / T_{d1+j}` and `|p_l + (alpha q)_l| <= 1 / T_l`.
pub fn gallagher_g(alpha: &[Vec<f64>], t: &ScalingVector) -> Result<f64> {
    let (d1, _) = check_alpha(alpha, t)?;
    let tv = t.values();
    let limit = |l: usize| (1.0 / tv[l]) * (1.0 + MEMBERSHIP_TOL);
    let mut best = f64::INFINITY;
    // q = 0: p_l in {-1, 0, 1}, allowed to be nonzero only where T_l <= 1.
    if let Some(l) = (0..d1).find(|&l| 1.0 <= limit(l)) {
        best = if d1 >= 2 { 0.0 } else { tv[l] };
    }
    for_each_q(&q_bounds(t, d1), DEFAULT_NODE_BUDGET, |q| {
        let mut prod = 1.0;
        for (l, x) in alpha_q(alpha, q).iter().enumerate() {
            let r = (x - x.round()).abs();
            if r > limit(l) {
                return;
            }
            prod *= tv[l] * r;
        }
        best = best.min(prod);
    })?;
    Ok(best)
}

/// Minkowski minimum through the pair machinery: `eta~` of the sup-norm pair
/// on `h(T)^{-1} Lambda`.
pub fn minkowski_c_dual(lattice: &Lattice, t: &ScalingVector) -> Result<f64> {
    let pair = RegularPair::ball(lattice.dim())?;
    eta_tilde(&pair, &apply_scaling(&t.inverse(), lattice)?)
}

/// Sup-norm of a vector (exposed for callers building their own oracles).
pub fn sup_norm(x: &[f64]) -> f64 {
    sup(x)
}
