//! Grids, the discrete sub-Laplacian, time stepping and heat-kernel fits.

mod evolve;
mod expm;
mod io;
mod kernel;
mod operator;
mod solver;
mod spec;

pub use evolve::{
    duhamel_residual, duhamel_residual_strided, evolve, step, EvolveOptions, Sample, Stepper, Termination,
    Trajectory, OVERFLOW_THRESHOLD,
};
pub use operator::{
    assemble_flow_differences, assemble_sublaplacian, flow_endpoint, row_provenance, BoundaryCondition, Flow,
    FlowEndpoint, SparseOperator,
};
pub use solver::{bicgstab, conjugate_gradient, SolveStats, SolverOptions};
pub use spec::{GridField, GridSpec};
pub use expm::{expm_action, linear_fit, loglog_slope, trotter_compare};
pub use io::{csv_header, read_snapshot, write_probe_csv, write_snapshot, SnapshotMeta};
pub use kernel::{
    discrete_delta, heat_kernel_fit, heat_kernel_fits, heat_kernel_fits_with, kernel_samples, KernelFit, KernelOptions,
};
