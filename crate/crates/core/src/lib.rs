//! Reversible and quantum Turing machines compiled into brick-wall circuits.
//!
//! - [`tm`]: classical machines, reversibility, totalization, halting extension
//! - [`circuit`]: reversible circuits of table gates
//! - [`brickwall`]: the brick function and the classical wall simulator
//! - [`quantum`]: quantum machines, the brick operator, sparse simulation
//! - [`cli`]: the `tmwall` command implementations

pub mod brickwall;
pub mod circuit;
pub mod cli;
pub mod linalg;
pub mod quantum;
pub mod tm;
