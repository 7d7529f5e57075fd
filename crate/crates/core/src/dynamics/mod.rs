//! Twisted cotangent bundle of the sphere: states, forms, Hamiltonians,
//! vector fields and the adaptive integrator.

mod field;
mod forms;
mod hamiltonian;
mod integrate;
mod state;

pub use field::{chart_field, ham_vector_field, omega_matrix, ChartField};
pub use forms::{omega_ambient, omega_chart, omega_pairing, one_forms, ExactPart, MagneticForm, OneForms};
pub use hamiltonian::{Hamiltonian, HamiltonianKind, Invariants, Metric};
pub use integrate::{
    flow_to, integrate, FlowFailure, FlowResult, IntegratorOptions, Segment, Stepper,
};
pub use state::{isometry_lift, ChartCoords, ChartJacobian, CotangentState, PhaseTangent};
