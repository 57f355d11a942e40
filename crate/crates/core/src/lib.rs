//! Generalised robustness and weight quantifiers for quantum states and
//! measurements, the tailored subchannel discrimination and exclusion games
//! built from their dual witnesses, and single-shot order-plus/minus infinity information.

pub mod error;
pub mod free_sets;
pub mod games;
pub mod infotheory;
pub mod linalg;
pub mod oracles;
pub mod quantifiers;
pub mod random;
pub mod sdp;

pub use error::{Error, Result};
pub use free_sets::{FreeMeasurementSet, FreeSetDescriptor, FreeStateSet};
pub use games::{
    build_discrimination_game, build_exclusion_game, certify_result1, certify_result2, cpp_coarse_grain,
    eval_discrimination, eval_exclusion, free_pair_optimum, Evaluation, FreePairOptimum, GameBlueprint, GameKind,
    Result1Report, Result2Report,
};
pub use infotheory::{certify_result3, joint_from_task, mutual_info_minus, mutual_info_plus, JointDistribution, Result3Report};
pub use linalg::{
    apply_subchannel, complete_to_instrument, make_trace_and_prepare, trace_norm, ChannelEnsemble,
    DensityMatrix, HermitianOperator, Povm, Subchannel, SubchannelSet,
};
pub use quantifiers::{
    robustness_measurement, robustness_state, weight_measurement, weight_state, Decomposition, Quantity,
    QuantifierResult,
};
pub use sdp::{solve, ConicProgram, SolverOptions, SolverReport, SolverStatus};
