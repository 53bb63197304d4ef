//! Classifier ensembles from precomputed prediction matrices.
//!
//! The crate reads per-learner predicted labels for a validation and a test
//! split, builds ensembles with hierarchical ensemble construction
//! ([`hec`]) or one of the comparison methods ([`aggregation`],
//! [`baselines`]), and summarizes them ([`metrics`]). [`data`] also
//! generates synthetic bundles with controllable accuracy and redundancy.
//!
//! ```
//! use hec_ensemble::data::{generate_synthetic, LearnerCategory, SyntheticLearner, SyntheticSpec};
//! use hec_ensemble::hec::{hec_construct, HecConfig};
//!
//! let learners = (0..6)
//!     .map(|i| SyntheticLearner {
//!         id: format!("m{i}"),
//!         name: None,
//!         category: LearnerCategory::ALL[i % 4],
//!         target_accuracy: 0.6 + 0.05 * i as f64,
//!         correlation_group: None,
//!         within_group_agreement: 0.0,
//!     })
//!     .collect();
//! let bundle = generate_synthetic(&SyntheticSpec {
//!     class_count: 2,
//!     example_count: 500,
//!     test_example_count: None,
//!     learners,
//!     rng_seed: 1,
//! })?;
//! let config = HecConfig { max_seed_size: 2, greedy: true, ..HecConfig::default() };
//! let solution = hec_construct(&bundle, &config)?;
//! assert!(!solution.members.is_empty());
//! assert!(solution.score(bundle.test())? > 0.5);
//! # Ok::<(), hec_ensemble::Error>(())
//! ```

pub mod aggregation;
pub mod baselines;
pub mod cli;
pub mod data;
mod error;
pub mod hec;
pub mod metrics;
pub mod rng;
pub mod solution;

pub use error::{Error, Result};
pub use solution::{Combiner, EnsembleSolution};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/voting.md")]
    mod voting {}
    #[doc = include_str!("../../../book/src/hec.md")]
    mod hec {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
