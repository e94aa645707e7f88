//! Prediction and postdiction tasks and the identities relating them.

pub mod channel;
pub mod closed;
pub mod effects;
pub mod general;
pub mod likelihood;
pub mod open;
pub mod signalling;
pub mod task;

pub use channel::{
    channel_toward_past_check, inference_symmetry_report, is_inference_symmetric, postdict_channel,
    postdict_channel_via_purification, postdict_via_purification, postdict_via_rotated_purification, predict_channel,
    SymmetryReport, TowardPastReport,
};
pub use closed::{four_task_check, four_task_check_channel, postdict_closed, predict_closed, FourTaskReport};
pub use effects::{deterministic_effect_check, DeterministicEffectReport};
pub use general::{general_prep_purified_check, postdict_general_prep, predict_general_prep, GeneralPrepReport};
pub use likelihood::Likelihood;
pub use open::{open_ratio_check, open_reversal_check, postdict_open, predict_open, IdentityReport};
pub use signalling::{no_signalling_check, NoSignallingReport};
pub use task::{time_reverse, InferenceTask, Preparation, Transformation};
