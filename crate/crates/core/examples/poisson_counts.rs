//! Factorial moments of hit counts against the Poisson limit.

use lattice_extremes::minima::{count_below, family_values};
use lattice_extremes::samplers::{build_centered_family, map_indexed, mersenne};
use lattice_extremes::stats::factorial_moments;
use lattice_extremes::{Measure, RegularPair};

fn main() -> lattice_extremes::Result<()> {
    let family = build_centered_family(3, 8, 8.0 * 64f64.ln())?;
    let pair = RegularPair::ball(3)?;
    let measure = Measure::mu(3, mersenne(1279))?;
    let delta = pair.delta_n(family.len() as f64)?;
    let values = map_indexed(500, 1, |i| {
        let s = measure.sample(5, i as u64)?;
        family_values(&pair, &family.members, &s.source)
    })?;
    let m_o = pair.theorem_constants(3)?.m_o;
    for u in [0.7, 1.0] {
        let counts: Vec<u64> = values.iter().map(|v| count_below(v, delta * u)).collect();
        for m in factorial_moments(&counts, 2, m_o * u * u * u)? {
            println!("u = {u}, r = {}: {:.3} +- {:.3} (Poisson {:.3})", m.r, m.estimate, m.std_error, m.reference);
        }
    }
    Ok(())
}
