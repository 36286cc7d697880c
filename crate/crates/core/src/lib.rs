//! Co-simulator for a resonant inductive power link to a magnetically
//! steered endoscopic capsule.

pub mod circuit;
pub mod cli;
pub mod control;
pub mod lsk;
pub mod magnetics;
pub mod safety;
pub mod scenario;
