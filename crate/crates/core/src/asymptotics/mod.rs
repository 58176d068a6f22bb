//! Long-time behaviour: decay towards the mean, traveling-wave profiles and
//! the profile operator.

mod decay;
mod profile;
mod speed;

pub use decay::{decay_series, exact_affine_wave, DecaySeries};
pub use profile::{
    common_module, evolve_schedule, extract_profile, geometric_schedule, guarded_range,
    nonexpansiveness_check, profile_operator_T, torus_dft, ModeCoefficient, NonexpansiveReport,
    ProfileOptions, SpeedConsistency, Verdict, Verdicts, WaveConfig, WaveReport, WaveTolerances,
};
pub use speed::{default_search, estimate_speed, SpeedEstimate};
