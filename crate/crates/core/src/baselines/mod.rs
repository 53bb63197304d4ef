//! Comparison construction methods.

mod bayes;
mod random;
mod shapley;
mod stacking;

pub use bayes::{bayes_construct, bayes_fit, BayesCombiner};
pub use random::{random_construct, RandomParams};
pub use shapley::{
    shapley_construct, shapley_construct_from, shapley_values, ShapleyGame, ShapleyMethod, ShapleyParams,
    ShapleyResult, EXACT_LIMIT, MULTILINEAR_GRID,
};
pub use stacking::{
    stability_bound, stacking_construct, stacking_fit, StackingModel, StackingObjective, StackingParams,
};
