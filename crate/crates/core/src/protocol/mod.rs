//! Client/server remote processing: EPR channels and teleportation, decoy
//! states and send policies, the round-by-round session simulator and the
//! cheating-server analysis.

mod cheating;
mod decoy;
mod session;
mod teleport;

pub use cheating::{
    cheating_server_state, cheating_server_trace, no_cloning_witness, schmidt_coefficients, schmidt_rank,
    server_expected_state, WitnessReport, SCHMIDT_TOLERANCE,
};
pub use decoy::{decoy_mixture, make_decoy, sample_label, sample_send, SendLabel, SendPolicy};
pub use session::{
    analytic_detection_rate, monte_carlo_success, run_session, success_probability_account, InterceptBasis,
    ProtocolTranscript, ResolvedScenario, RoundRecord, Scenario, ServerBehavior, SessionConfig, SessionEngine,
    SessionSummary, VerifyMode,
};
pub use teleport::{bell_postselect, epr_pairs, teleport_branches, teleport_corrected, teleport_postselected, EprPair};
