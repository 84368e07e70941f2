//! Graphical model of correlated defaults.
//!
//! Firms (and optionally sector nodes) are the vertices of an undirected
//! graph carrying a binary default indicator each. The joint law is the
//! exponential family
//!
//! ```text
//! p(w) = exp(sum_i eta_i w_i + sum_{uv in E} eta_uv w_u w_v) / Z
//! ```
//!
//! which is a toric model in `theta = exp(eta)`. The crate covers:
//!
//! * [`model`]: exact enumeration of the joint law, the marginal map `A_G`,
//!   marginals and pairwise default correlations.
//! * [`calibration`]: inversion of the marginal map (iterative proportional
//!   fitting and a Newton-type max-entropy solver), marginal polytope
//!   membership and the single-sector `eta_F` root.
//! * [`sector`]: the homogeneous sector model, its loss distribution, the
//!   binomial mixture representation and correlation surfaces.
//! * [`multiperiod`]: the Markov chain of cumulative defaults with node
//!   removal, its kernel, k-step loss laws and a path simulator.
//! * [`pricing`]: CDO tranche legs and fair spreads.
//! * [`copula`]: the one-factor normal copula used as a comparator.
//! * [`smile`]: the parameter search that flattens the correlation smile.

pub mod calibration;
pub mod copula;
pub mod error;
pub mod io;
pub mod model;
pub mod multiperiod;
pub mod numeric;
pub mod pricing;
pub mod rng;
pub mod sector;
pub mod smile;

pub use error::{Error, Result};
