//! Weighted family minima along a growing schedule of grid families.

use lattice_extremes::samplers::{build_grid_family, check_sparseness, mersenne};
use lattice_extremes::stats::loglaw_trend;
use lattice_extremes::{Measure, RegularPair};

fn main() -> lattice_extremes::Result<()> {
    let stages = (2..=5)
        .map(|l| build_grid_family(3, l, (l as f64).ln()))
        .collect::<lattice_extremes::Result<Vec<_>>>()?;
    let report = check_sparseness(&stages)?;
    println!("spread ratios increasing: {}", report.spread_increasing);

    let pair = RegularPair::ball(3)?;
    let measure = Measure::mu(3, mersenne(607))?;
    for s in loglaw_trend(&pair, &measure, 1.0, &stages, 100, 4, 1)? {
        println!("stage {}: |F| = {}, median {:.4}", s.stage, s.family_size, s.median);
    }
    Ok(())
}
