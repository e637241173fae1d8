//! Each extremal quantity on one random lattice.

use lattice_extremes::minima::{dirichlet_k, gallagher_g, minkowski_c, poly_min, product_min};
use lattice_extremes::pairs::Monomial;
use lattice_extremes::samplers::{sample_mu, sample_nu};
use lattice_extremes::{Polynomial, ScalingVector};

fn main() -> lattice_extremes::Result<()> {
    let lattice = sample_mu(3, 2_147_483_647, 11)?;
    let t = ScalingVector::from_values(&[4.0, 0.5, 0.5])?;
    println!("minkowski  {}", minkowski_c(&lattice, &t)?);
    println!("product    {}", product_min(&lattice, &t)?);

    // x^2 + y^2 - 3 z^2
    let form = Polynomial::new(
        3,
        vec![
            Monomial { coef: 1.0, exp: vec![2, 0, 0] },
            Monomial { coef: 1.0, exp: vec![0, 2, 0] },
            Monomial { coef: -3.0, exp: vec![0, 0, 2] },
        ],
    )?;
    println!("quadratic  {}", poly_min(&form, &lattice, &t)?);

    let (alpha, _) = sample_nu(2, 1, 12)?;
    let t = ScalingVector::from_values(&[20.0, 20.0, 1.0 / 400.0])?;
    println!("dirichlet  {}", dirichlet_k(&alpha.values(), &t)?);
    println!("gallagher  {}", gallagher_g(&alpha.values(), &t)?);
    Ok(())
}
