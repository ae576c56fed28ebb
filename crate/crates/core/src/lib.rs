//! Search-based synthesis and repair of mock stub code.

pub mod minilang;
pub mod mockrt;
pub mod stubir;
pub mod edit_distance;
pub mod fitness;
pub mod evolve;
pub mod fidelity;
pub mod corpus;
pub mod commands;
