//! Heisenberg group algebra, gauge geometry, Hardy potentials and radial profiles.

mod point;
mod potential;
mod radial;

pub use point::{gauge_calculus, hardy_weight, GroupParams, GroupPoint};
pub use potential::{potential, smallest_root_alpha, BoundedPart, PotentialSpec};
pub use radial::{radial_sublaplacian, RadialProfile};
