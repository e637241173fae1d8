//! Reduce a skewed basis and list the lattice points of a box.

use lattice_extremes::lattice::{enumerate_box, lll_reduce, siegel_transform, DEFAULT_NODE_BUDGET};
use lattice_extremes::{Lattice, ScalingVector};

fn main() -> lattice_extremes::Result<()> {
    // a basis of Z^3 sheared far from orthogonal
    let basis = vec![
        vec![1.0, 17.0, 40.0],
        vec![0.0, 1.0, 29.0],
        vec![0.0, 0.0, 1.0],
    ];
    let lattice = Lattice::new(basis)?;
    let reduced = lll_reduce(&lattice)?;
    println!("reduced basis: {:?}", reduced.basis());

    let points = enumerate_box(&lattice, &[1.0, 1.0, 1.0], DEFAULT_NODE_BUDGET)?;
    println!("{} nonzero points in [-1, 1]^3", points.len());
    let primitive = points.iter().filter(|p| p.is_primitive()).count();
    println!("{primitive} of them primitive");

    let id = ScalingVector::identity(3);
    println!("Siegel transform of the radius-2 box: {}", siegel_transform(&lattice, &id, 2.0)?);
    Ok(())
}
