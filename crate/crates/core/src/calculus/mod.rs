//! Numerical certification of the gauge identities, dilation covariance,
//! the Hardy constant, radial reductions, weighted Sobolev ratios, the Moser
//! recursion and the integrability threshold.

pub mod fd;
mod hardy;
mod moser;
pub mod quadrature;
mod radial;
mod record;

pub use fd::{
    verify_dalpha_identity, verify_dalpha_identity_with, verify_dilation_covariance, verify_eikonal,
    verify_gauge_laplacian, verify_potential_scaling, TestField,
};
pub use hardy::{
    bump_quotient, estimate_hardy_constant, minimise_quotient, rayleigh_quotient, HardyForms, HardyLevel,
    HardyOptions,
};
pub use moser::{moser_advance, moser_iterate, rational, MoserState};
pub use radial::{
    bump_family, cauchy_tail, cos_power_integral, divergence_probe, divergence_probe_radial, gradient_constant,
    radial_reduce, radial_reduce_3d, radial_reduce_3d_profile, sobolev_beta, sobolev_ratio, sphere_area, volume_constant, DivergenceCase,
};
pub use record::{fit_order, write_jsonl, VerificationRecord, EXACT_FLOOR};
