//! Normalised Dirichlet minima of random matrices against their Weibull limit.

use lattice_extremes::minima::family_min;
use lattice_extremes::samplers::{build_cone_family, map_indexed};
use lattice_extremes::stats::{ks_distance, Distribution};
use lattice_extremes::{Measure, RegularPair, ScalingVector};

fn main() -> lattice_extremes::Result<()> {
    let generators = [
        ScalingVector::from_logs(vec![1.0, 0.0, -1.0])?,
        ScalingVector::from_logs(vec![0.0, 1.0, -1.0])?,
    ];
    let theta = (8.0 * 16f64.ln()).exp();
    let family = build_cone_family(2, 1, &generators, 4, theta)?;
    println!("|F| = {}, spread {:.2}, floor {:.2}", family.len(), family.spread, family.min_floor.unwrap());

    let pair = RegularPair::strip(2, 1)?;
    let measure = Measure::nu(2, 1)?;
    let delta = pair.delta_n(family.len() as f64)?;
    let minima = map_indexed(1000, 1, |i| {
        let s = measure.sample(2, i as u64)?;
        Ok(family_min(&pair, &family.members, &s.source)? / delta)
    })?;
    let law = pair.theorem_constants(3)?;
    let reference = Distribution::Weibull { scale: law.weibull_scale, shape: law.weibull_shape };
    let ks = ks_distance(&minima, &reference)?;
    println!("Weibull({:.4}, {}): KS = {:.4}", law.weibull_scale, law.weibull_shape, ks.distance);
    Ok(())
}
