//! Helpers shared by the integration tests: synthetic bundles and
//! independent float re-implementations of the voting rules.

#![allow(dead_code)]

use std::path::PathBuf;

use hec_ensemble::data::{
    generate_synthetic, DatasetBundle, Label, LearnerCategory, PredictionMatrix, SyntheticLearner, SyntheticSpec,
};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load_spec(name: &str) -> SyntheticSpec {
    let text = std::fs::read_to_string(fixtures_dir().join(name)).expect("fixture readable");
    serde_json::from_str(&text).expect("fixture parses")
}

/// `n` learners with the given accuracies, categories cycling through all
/// four; learners with `group = Some(g)` share error events with agreement
/// `agreement`.
pub fn synth(classes: usize, m: usize, accs: &[f64], groups: &[Option<&str>], agreement: f64, seed: u64) -> DatasetBundle {
    let learners = accs
        .iter()
        .enumerate()
        .map(|(i, &a)| SyntheticLearner {
            id: format!("l{i}"),
            name: None,
            category: LearnerCategory::ALL[i % 4],
            target_accuracy: a,
            correlation_group: groups.get(i).copied().flatten().map(String::from),
            within_group_agreement: if groups.get(i).copied().flatten().is_some() { agreement } else { 0.0 },
        })
        .collect();
    generate_synthetic(&SyntheticSpec {
        class_count: classes,
        example_count: m,
        test_example_count: None,
        learners,
        rng_seed: seed,
    })
    .expect("valid synthetic spec")
}

/// Float version of the two-step accuracy weighting with global
/// normalization: learner `i` in category `k` weighs
/// `acc_i * mean_acc_k / sum_l mean_acc_l`, scaled to sum to one.
pub fn oracle_weights(bundle: &DatasetBundle, members: &[String]) -> Vec<f64> {
    let v = bundle.validation();
    let acc = |id: &str| {
        let col = v.column(id).unwrap();
        col.iter().zip(v.gold()).filter(|(p, g)| p == g).count() as f64 / v.len() as f64
    };
    let mut sum = [0.0; 4];
    let mut cnt = [0.0; 4];
    for id in members {
        let k = bundle.category(id).unwrap().index();
        sum[k] += acc(id);
        cnt[k] += 1.0;
    }
    let means: Vec<f64> = (0..4).map(|k| if cnt[k] > 0.0 { sum[k] / cnt[k] } else { 0.0 }).collect();
    let total_mean: f64 = means.iter().sum();
    let raw: Vec<f64> = members
        .iter()
        .map(|id| acc(id) * means[bundle.category(id).unwrap().index()] / total_mean)
        .collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|w| w / z).collect()
}

/// Accuracy of a float-weighted vote; class sums within a relative 1e-12
/// count as tied and go to the lower class.
pub fn oracle_vote_accuracy(matrix: &PredictionMatrix, members: &[String], weights: &[f64]) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let cols: Vec<&[Label]> = members.iter().map(|id| matrix.column(id).unwrap()).collect();
    let mut hits = 0usize;
    let mut sums = vec![0.0f64; matrix.class_count()];
    for r in 0..matrix.len() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (c, w) in cols.iter().zip(weights) {
            sums[c[r] as usize] += w;
        }
        let mut best = 0;
        for k in 1..sums.len() {
            if sums[k] > sums[best] + 1e-12 * sums[best].abs().max(1.0) {
                best = k;
            }
        }
        if best as Label == matrix.gold()[r] {
            hits += 1;
        }
    }
    hits as f64 / matrix.len() as f64
}

pub fn oracle_wmv_accuracy(bundle: &DatasetBundle, members: &[String]) -> f64 {
    let w = oracle_weights(bundle, members);
    oracle_vote_accuracy(bundle.validation(), members, &w)
}

pub fn oracle_majority_accuracy(matrix: &PredictionMatrix, members: &[String]) -> f64 {
    oracle_vote_accuracy(matrix, members, &vec![1.0; members.len()])
}

pub fn ids(bundle: &DatasetBundle, mask: u32) -> Vec<String> {
    bundle
        .learner_ids()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, id)| id.clone())
        .collect()
}
