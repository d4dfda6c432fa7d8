//! Interpretable tabular binary classifier built around per-feature
//! embeddings and feature-level attention, with a from-scratch numerical
//! core, SMOTE rebalancing, a synthetic cohort generator and explainability
//! exports.

pub mod data;
pub mod model;
pub mod numerics;
