//! Probability that a random lattice meets a small box.

use lattice_extremes::samplers::{map_indexed, sample_mu};
use lattice_extremes::stats::{hitting_frequency, hitting_prob_bounds};
use lattice_extremes::ScalingVector;

fn main() -> lattice_extremes::Result<()> {
    let lattices = map_indexed(20000, 1, |i| sample_mu(3, 2_147_483_647, i as u64))?;
    let id = ScalingVector::identity(3);
    for v in [0.05, 0.1, 0.2] {
        let b = hitting_prob_bounds(v, 3)?;
        let (p, se, _) = hitting_frequency(lattices.iter().cloned(), &id, 0.5 * v.cbrt())?;
        println!("V = {v}: {p:.5} +- {se:.5} in [{:.5}, {:.5}]", b.lower, b.upper);
    }
    Ok(())
}
