//! One-dimensional diffusion with dissolving boundaries, solved two
//! independent ways and cross-checked.
//!
//! The model: a unit mass of solute diffuses in a fluid interval [L, R];
//! each endpoint carries a point mass of weight `beta` representing the
//! solid phase, and moves according to how far the solute concentration at
//! the wall sits from the saturation value `alpha`. The same evolution is
//! computed by
//!
//! * a minimizing-movement (proximal) scheme: each time step minimizes
//!   `transport cost / (2h) + free energy` over admissible states, solved as
//!   a convex program in quantile coordinates ([`jko`]);
//! * a front-tracking finite-volume scheme for the equivalent boundary-value
//!   problem, on a domain rescaled to fixed coordinates ([`pde`]).
//!
//! Around the two solvers sit the supporting pieces: states and their
//! quantile views ([`measure`]), the quadratic transport metric with
//! boundary atoms ([`transport`]), the free energy with its bounds and slope
//! ([`energy`]), a battery of inequality certificates connecting the
//! discrete runs to the continuum structure ([`harness`]), and a small CLI
//! runner ([`runner`]).
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```text
//! cargo run --example jko_flow           # minimizing-movement relaxation
//! cargo run --example pde_reference      # front-tracking reference run
//! cargo run --example transport_pair     # distances, maps, dual potentials
//! cargo run --example energy_landscape   # energy, bounds, slope
//! cargo run --example contraction_pair   # two flows, distance over time
//! cargo run --example convergence_study  # scheme error versus step size
//! cargo run --example certify_run        # full certificate battery
//! ```

pub mod energy;
pub mod error;
pub mod harness;
pub mod jko;
pub mod measure;
pub mod pde;
pub mod runner;
pub mod svg;
pub mod testfn;
pub mod transport;

mod tridiag;

pub use error::{Error, Result};
pub use measure::{GMeasure, ModelParams, QuantileRep};
