//! Unsafe-code encapsulation audits for Rust crates.

pub mod audit;
pub mod extract;
pub mod facts;
pub mod pipeline;
pub mod report;
pub mod safety;
pub mod selfcheck;
pub mod uig;
pub mod upg;
