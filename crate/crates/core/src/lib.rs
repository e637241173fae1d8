//! Extremal quantities of unimodular lattices and the machinery to test their
//! limit laws numerically.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] and [`exact`]: lattices, scaling vectors, LLL reduction and
//!   exact enumeration of lattice points in weighted boxes. [`exact`] keeps a
//!   big-integer copy of the basis so that very skewed diagonal scalings can be
//!   applied without losing the lattice to rounding.
//! * [`pairs`]: the `(eta, C)` pairs, their regularity exponents `(a, b, c)`,
//!   volumes of the sublevel sets and the constants of the limit laws.
//! * [`minima`]: Minkowski, product, polynomial, Dirichlet and Gallagher minima,
//!   family minima and hit counts.
//! * [`samplers`]: random lattices (Hecke points and the unipotent
//!   `Lambda_alpha` construction) and sparse families of scaling vectors.
//! * [`stats`]: zeta values, Weibull/Poisson references, Kolmogorov–Smirnov
//!   distances, factorial moments and the Siegel/Rogers checks.
//! * [`runner`]: the configuration-driven experiment runner behind the
//!   `lattice-extremes` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exact;
pub mod lattice;
pub mod minima;
pub mod pairs;
pub mod runner;
pub mod samplers;
pub mod stats;

pub use error::{Error, Result};
pub use exact::ExactLattice;
pub use lattice::{Lattice, LatticePoint, ScalingVector};
pub use pairs::{PairKind, Polynomial, RegularPair};
pub use samplers::{AlphaMatrix, HeckeSampler, Measure, ScalingFamily};
