//! Normalised Minkowski minima of Hecke lattices against their Weibull limit.

use lattice_extremes::minima::family_min;
use lattice_extremes::samplers::{build_box_family, map_indexed, mersenne};
use lattice_extremes::stats::{ks_distance, Distribution};
use lattice_extremes::{Measure, RegularPair};

fn main() -> lattice_extremes::Result<()> {
    let family = build_box_family(3, &[4, 2], 8.0 * 8f64.ln())?;
    let pair = RegularPair::ball(3)?;
    // the prime must dwarf the skew of the family
    let measure = Measure::mu(3, mersenne(607))?;
    let delta = pair.delta_n(family.len() as f64)?;
    let minima = map_indexed(1000, 1, |i| {
        let s = measure.sample(3, i as u64)?;
        Ok(family_min(&pair, &family.members, &s.source)? / delta)
    })?;
    let law = pair.theorem_constants(3)?;
    let reference = Distribution::Weibull { scale: law.weibull_scale, shape: law.weibull_shape };
    println!("KS = {:.4}", ks_distance(&minima, &reference)?.distance);
    Ok(())
}
