//! Synthetic prediction bundles with controllable accuracy and redundancy.
//!
//! Each learner owns a stream of error events: on row `r` it draws
//! `u ~ U[0,1)` and predicts gold iff `u < target_accuracy`, otherwise a
//! uniformly chosen wrong label. Learners that name a `correlation_group`
//! replace their own draw by the group's shared draw with probability
//! `within_group_agreement`, so agreement 1.0 and equal accuracy give
//! identical columns while the marginal accuracy is unchanged.
//!
//! Every stream is derived from `rng_seed`, the split, and the learner or
//! group name, so adding a learner never perturbs the others.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, DatasetBundle, Label, LearnerCategory, LearnerMeta, PredictionMatrix, Split};
use crate::rng::{name_hash, stream, tags, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLearner {
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
    pub category: LearnerCategory,
    pub target_accuracy: f64,
    #[serde(default)]
    pub correlation_group: Option<String>,
    #[serde(default)]
    pub within_group_agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub class_count: usize,
    /// Rows in the validation split (`m`).
    pub example_count: usize,
    /// Rows in the test split; defaults to `example_count`.
    #[serde(default)]
    pub test_example_count: Option<usize>,
    pub learners: Vec<SyntheticLearner>,
    pub rng_seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::Invalid(msg));
        if self.class_count < 2 {
            return bad(format!("class_count must be >= 2, got {}", self.class_count));
        }
        if self.example_count == 0 || self.test_example_count == Some(0) {
            return bad("example counts must be positive".into());
        }
        if self.learners.is_empty() {
            return bad("at least one learner is required".into());
        }
        let mut ids = BTreeSet::new();
        for l in &self.learners {
            if !super::is_valid_id(&l.id) {
                return bad(format!("invalid learner id `{}`", l.id));
            }
            if !ids.insert(l.id.as_str()) {
                return bad(format!("duplicate learner id `{}`", l.id));
            }
            if !(0.0..=1.0).contains(&l.target_accuracy) {
                return bad(format!("{}: target_accuracy {} outside [0,1]", l.id, l.target_accuracy));
            }
            if !(0.0..=1.0).contains(&l.within_group_agreement) {
                return bad(format!(
                    "{}: within_group_agreement {} outside [0,1]",
                    l.id, l.within_group_agreement
                ));
            }
        }
        Ok(())
    }
}

struct Draw {
    u: f64,
    offset: u32,
}

fn draw(rng: &mut StreamRng, classes: usize) -> Draw {
    Draw {
        u: rng.gen::<f64>(),
        offset: rng.gen_range(0..classes as u32 - 1),
    }
}

fn generate_split(spec: &SyntheticSpec, split: Split, rows: usize) -> Result<PredictionMatrix, DataError> {
    let classes = spec.class_count;
    let split_tag = match split {
        Split::Validation => 0u64,
        Split::Test => 1u64,
    };
    let seed = spec.rng_seed ^ split_tag.wrapping_mul(0xa076_1d64_78bd_642f);

    let mut gold_rng = stream(seed, tags::SYNTH_GOLD, 0);
    let gold: Vec<Label> = (0..rows).map(|_| gold_rng.gen_range(0..classes as Label)).collect();

    let groups: Vec<&str> = spec
        .learners
        .iter()
        .filter_map(|l| l.correlation_group.as_deref())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let group_draws: Vec<Vec<Draw>> = groups
        .iter()
        .map(|g| {
            let mut rng = stream(seed, tags::SYNTH_GROUP, name_hash(g));
            (0..rows).map(|_| draw(&mut rng, classes)).collect()
        })
        .collect();

    let columns = spec
        .learners
        .iter()
        .map(|l| {
            let shared = l
                .correlation_group
                .as_deref()
                .map(|g| &group_draws[groups.binary_search(&g).expect("group collected above")]);
            let mut rng = stream(seed, tags::SYNTH_LEARNER, name_hash(&l.id));
            let col: Vec<Label> = (0..rows)
                .map(|r| {
                    let coin = rng.gen::<f64>();
                    let own = draw(&mut rng, classes);
                    let d = match shared {
                        Some(g) if coin < l.within_group_agreement => &g[r],
                        _ => &own,
                    };
                    if d.u < l.target_accuracy {
                        gold[r]
                    } else {
                        (gold[r] + 1 + d.offset) % classes as Label
                    }
                })
                .collect();
            (l.id.clone(), col)
        })
        .collect();

    let prefix = match split {
        Split::Validation => "v",
        Split::Test => "t",
    };
    PredictionMatrix::new(
        split,
        classes,
        (0..rows).map(|i| format!("{prefix}{i}")).collect(),
        gold,
        columns,
    )
}

/// Builds a bundle from `spec`; the output is a pure function of the spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DatasetBundle, DataError> {
    spec.validate()?;
    let meta = spec
        .learners
        .iter()
        .map(|l| LearnerMeta {
            id: l.id.clone(),
            name: l.name.clone().unwrap_or_else(|| l.id.clone()),
            category: l.category,
        })
        .collect();
    let validation = generate_split(spec, Split::Validation, spec.example_count)?;
    let test = generate_split(
        spec,
        Split::Test,
        spec.test_example_count.unwrap_or(spec.example_count),
    )?;
    DatasetBundle::new(meta, validation, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::learner_accuracy;

    fn learner(id: &str, acc: f64, group: Option<&str>, agreement: f64) -> SyntheticLearner {
        SyntheticLearner {
            id: id.into(),
            name: None,
            category: LearnerCategory::Bow,
            target_accuracy: acc,
            correlation_group: group.map(str::to_string),
            within_group_agreement: agreement,
        }
    }

    fn spec(learners: Vec<SyntheticLearner>, m: usize) -> SyntheticSpec {
        SyntheticSpec {
            class_count: 2,
            example_count: m,
            test_example_count: None,
            learners,
            rng_seed: 99,
        }
    }

    #[test]
    fn perfect_learner_copies_gold() {
        let b = generate_synthetic(&spec(vec![learner("p", 1.0, None, 0.0)], 500)).unwrap();
        assert_eq!(b.validation().column("p").unwrap(), b.validation().gold());
        assert_eq!(b.test().column("p").unwrap(), b.test().gold());
    }

    #[test]
    fn full_agreement_gives_identical_columns() {
        let b = generate_synthetic(&spec(
            vec![learner("a", 0.7, Some("g"), 1.0), learner("b", 0.7, Some("g"), 1.0)],
            2000,
        ))
        .unwrap();
        assert_eq!(b.validation().column("a"), b.validation().column("b"));
    }

    #[test]
    fn empirical_accuracy_concentrates() {
        let b = generate_synthetic(&spec(
            vec![learner("a", 0.8, None, 0.0), learner("c", 0.8, Some("g"), 0.6)],
            10_000,
        ))
        .unwrap();
        for id in ["a", "c"] {
            let acc = learner_accuracy(b.validation(), id).unwrap();
            assert!((acc - 0.8).abs() <= 0.02, "{id}: {acc}");
        }
    }

    #[test]
    fn multiclass_errors_are_wrong_labels() {
        let mut s = spec(vec![learner("z", 0.0, None, 0.0)], 3000);
        s.class_count = 20;
        let b = generate_synthetic(&s).unwrap();
        let v = b.validation();
        assert!(v.column("z").unwrap().iter().zip(v.gold()).all(|(p, g)| p != g));
        let mut hit = [false; 20];
        for &p in v.column("z").unwrap() {
            hit[p as usize] = true;
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn same_spec_same_bundle_and_learners_are_independent() {
        let s = spec(vec![learner("a", 0.6, None, 0.0), learner("b", 0.9, None, 0.0)], 300);
        assert_eq!(generate_synthetic(&s).unwrap(), generate_synthetic(&s).unwrap());
        let fewer = spec(vec![learner("b", 0.9, None, 0.0)], 300);
        assert_eq!(
            generate_synthetic(&s).unwrap().validation().column("b"),
            generate_synthetic(&fewer).unwrap().validation().column("b")
        );
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(generate_synthetic(&spec(vec![learner("a", 1.2, None, 0.0)], 10)).is_err());
        assert!(generate_synthetic(&spec(vec![learner("a", 0.5, Some("g"), -0.1)], 10)).is_err());
    }
}
