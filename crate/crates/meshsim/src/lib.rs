pub mod batman;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod mobility;
pub mod olsr;
pub mod radio;
pub mod sdn;
pub mod topology;
pub mod traffic;
