//! Multi-objective achievability and Pareto approximation for MDPs under pure
//! stationary and pure bounded-memory strategies.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod encode;
pub mod exact;
pub mod gen;
pub mod graph;
pub mod linalg;
pub mod memory;
pub mod mdp;
pub mod milp;
pub mod pareto;
pub mod rational;
