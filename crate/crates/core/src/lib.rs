//! Depth and conditioning of affine-coupling flows: exact linear
//! decompositions, non-representability certificates, universal
//! approximation and depth-separation constructions, and training
//! experiments for coupling networks.

pub mod certificates;
pub mod coupling;
pub mod decomposer;
pub mod harness;
pub mod matcore;
pub mod metrics;
pub mod rng;
pub mod separation;
pub mod stats;
pub mod trainer;
pub mod universal;
