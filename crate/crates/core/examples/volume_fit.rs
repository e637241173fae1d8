//! Sublevel volumes: closed form, Monte Carlo and the fitted exponents.

use lattice_extremes::pairs::fit_abc;
use lattice_extremes::RegularPair;

fn main() -> lattice_extremes::Result<()> {
    let pair = RegularPair::product(3)?;
    for t in [0.5, 0.1, 0.01] {
        let (mc, se) = pair.mc_volume(t, 1 << 20, 9)?;
        println!("t = {t}: closed form {:.5}, Monte Carlo {mc:.5} +- {se:.5}", pair.volume_c(t)?);
    }
    let grid: Vec<f64> = (2..=12).map(|k| 10f64.powi(-10 * k)).collect();
    let volumes = grid.iter().map(|&t| pair.volume_c(t)).collect::<lattice_extremes::Result<Vec<_>>>()?;
    let fit = fit_abc(&grid, &volumes)?;
    println!("fit a = {:.4}, b = {}, c = {:.4} (exact {}, {}, {})", fit.a, fit.b, fit.c, pair.a, pair.b, pair.c);
    Ok(())
}
