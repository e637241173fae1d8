//! A polynomial pair with exponents fitted to Monte Carlo volumes.

use lattice_extremes::pairs::Monomial;
use lattice_extremes::{Polynomial, RegularPair};

fn main() -> lattice_extremes::Result<()> {
    // x y - z^2
    let form = Polynomial::new(
        3,
        vec![
            Monomial { coef: 1.0, exp: vec![1, 1, 0] },
            Monomial { coef: -1.0, exp: vec![0, 0, 2] },
        ],
    )?;
    let grid = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3];
    let pair = RegularPair::fit_polynomial(form, &grid, 1 << 22, 3)?;
    println!("a = {:.3}, b = {}, c = {:.3}", pair.a, pair.b, pair.c);
    Ok(())
}
