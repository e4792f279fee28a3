//! Secure message transmission: one-time pad, Wegman-Carter authentication,
//! their quantum counterparts, key splitting and the composed pipeline.

pub mod auth;
pub mod otp;
pub mod pipeline;
pub mod pool;
pub mod qauth;

pub use auth::{auth_channel_construct, wc_tag, wc_verify, AsuHashFamily, AsuReport, AuthAudit, AuthKey};
pub use otp::{otp_audit, otp_decrypt, otp_encrypt, otp_ideal, otp_real, otp_with_key};
pub use pipeline::{smt_pipeline, tiny_pipeline_audit, PipelineReport, PipelineStage, SmtConfig, Tamper, TinyPipelineAudit};
pub use pool::{key_split, key_split_audit, Allocation, KeyPool};
pub use qauth::{
    purity_testing_epsilon, q_authenticate, q_verify, q_verify_exact, qotp_decrypt, qotp_encrypt, PtcReport,
    PurityTestingFamily, QAuthKey,
};
