//! Scalings far beyond double precision through the exact basis.

use lattice_extremes::minima::{eta_tilde, LatticeSource};
use lattice_extremes::samplers::{mersenne, HeckeSampler};
use lattice_extremes::{RegularPair, ScalingVector};

fn main() -> lattice_extremes::Result<()> {
    let sampler = HeckeSampler::new(3, mersenne(1279))?;
    let mut rng = lattice_extremes::samplers::rng_for(1, 0);
    let source = LatticeSource::Exact(sampler.sample(&mut rng)?);
    let pair = RegularPair::ball(3)?;
    for skew in [0.0, 50.0, 150.0, 300.0] {
        let t = ScalingVector::from_logs(vec![skew, 0.0, -skew])?;
        let lattice = source.scaled(&t, true)?;
        println!("log T = ({skew}, 0, -{skew}): minimum {}", eta_tilde(&pair, &lattice)?);
    }
    Ok(())
}
