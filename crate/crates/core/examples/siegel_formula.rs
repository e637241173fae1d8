//! Mean and second moment of the primitive count in a box.

use lattice_extremes::samplers::{map_indexed, sample_mu};
use lattice_extremes::stats::{verify_rogers, verify_siegel};
use lattice_extremes::ScalingVector;

fn main() -> lattice_extremes::Result<()> {
    let n = 5000;
    let lattices = map_indexed(n, 1, |i| sample_mu(3, 2_147_483_647, i as u64))?;
    let id = ScalingVector::identity(3);

    let first = verify_siegel(lattices.iter().cloned(), &id, 0.8)?;
    println!(
        "mean count      {:.4} +- {:.4}  reference {:.5}  z = {:.2}",
        first.estimate, first.std_error, first.reference, first.z_score()
    );
    let radius = 0.5 * 0.5f64.cbrt();
    let second = verify_rogers(lattices, &id, radius)?;
    println!(
        "second moment   {:.4} +- {:.4}  reference {:.5}  z = {:.2}",
        second.estimate, second.std_error, second.reference, second.z_score()
    );
    Ok(())
}
