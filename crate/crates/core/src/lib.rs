pub mod acframework;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod protocols;
pub mod qstate;
pub mod tolerance;
