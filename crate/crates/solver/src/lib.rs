//! Finite-difference reference solver for two-phase electrohydrodynamic
//! flow in a pore geometry.
//!
//! The coupled system (momentum + continuity, conservative phase-field
//! transport, ion transport, Gauss's law) is advanced with a three-way
//! operator splitting on a collocated uniform grid: periodic horizontally,
//! no-slip at solid cells, charged Neumann condition on the pore surface.
//! Transports run in conservative flux form so phase and ion totals
//! telescope exactly; the projection controls the face-velocity divergence
//! to the configured tolerance.

pub mod error;
pub mod hydro;
pub mod linsolve;
pub mod material;
pub mod ops;
pub mod state;
pub mod stepper;
pub mod transport;

pub use error::{Result, SolverError};
pub use hydro::{hydrodynamic_step, HydroOutput};
pub use linsolve::{SolveStats, StencilMatrix};
pub use material::{material_properties, MaterialModel, PropertyFields, SPECIES_CHARGES};
pub use ops::{
    chemical_potential, derived_fields, derived_fields_charged, electrostatics_solve,
    potential_gradient_squared, DerivedFields,
};
pub use state::{
    FaceFlux, FaceTopology, SolverConfig, SolverState, StepDiagnostics, VerticalBc,
};
pub use stepper::{initial_state, periodic_box_config, simulate, SimulationRun, Stepper};
pub use transport::{fluid_total, phase_transport_step, solute_transport_step};
