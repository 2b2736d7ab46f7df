//! Explicit-state model checking of the NRP FD redundancy-failover protocol
//! under Timed Rebeca semantics.

pub mod analysis;
pub mod kernel;
pub mod protocol;
pub mod scenarios;
