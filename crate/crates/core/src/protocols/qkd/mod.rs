//! Toy BB84 with error correction by syndrome and Toeplitz privacy amplification.

mod attacks;
mod engine;
mod expansion;
mod params;
mod security;
mod systems;

pub use attacks::{
    depolarize, depolarize_channel, honest_noise, intercept_resend, intercept_resend_channel,
    intercept_resend_family, standard_family,
};
pub use expansion::{
    build_expansion_systems, expansion_advantages, expansion_round_family, key_expansion,
    KeyExpansionReal, KeyExpansionReport, KeyExpansionSimulator, MAX_MEASURED_ROUNDS,
};
pub use params::{QkdParams, DEFAULT_PA_SEED};
pub use security::{
    qkd_case, qkd_robustness_eval, qkd_run, qkd_security_eval, qkd_simulator, ProtocolRun, QkdCase,
    QkdSecurityReport, RobustnessReport,
};
pub use systems::{
    build_qkd_systems, ideal_from_real, parallel_qkd_systems, LeakConverter, QkdJoint, QkdReal,
    QkdSimulator,
};
