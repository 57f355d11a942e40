//! Quantum objects over dense complex matrices: Hermitian operators, states,
//! POVMs, and subchannels in Choi form.

mod channel;
pub mod eigen;
pub mod json;
mod operator;
mod states;

pub use channel::{
    apply_subchannel, complete_to_instrument, make_trace_and_prepare, ChannelEnsemble, Subchannel,
    SubchannelSet,
};
pub use operator::HermitianOperator;
pub use states::{DensityMatrix, Povm};

/// PSD / normalisation tolerance for states, POVMs and Choi matrices.
pub const PSD_TOL: f64 = 1e-9;
/// Trace-preservation tolerance for instruments and channels.
pub const CPTP_TOL: f64 = 1e-8;

/// Trace norm `||X||_1`.
pub fn trace_norm(op: &HermitianOperator) -> f64 {
    op.trace_norm()
}
