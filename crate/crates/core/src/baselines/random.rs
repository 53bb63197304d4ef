use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{AggregationRule, VoteScheme, VoteTally};
use crate::data::DatasetBundle;
use crate::error::{Error, Result};
use crate::rng::{stream, tags};
use crate::solution::{Combiner, EnsembleSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomParams {
    pub trials: usize,
    /// Inclusion probability of each learner.
    pub p: f64,
    pub seed: u64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            trials: 5,
            p: 0.5,
            seed: 0,
        }
    }
}

/// Best of `trials` random subsets under majority voting. Trial `t` draws
/// from its own stream; the earliest trial wins ties and an empty draw
/// scores 0.
pub fn random_construct(bundle: &DatasetBundle, candidates: &[String], params: &RandomParams) -> Result<EnsembleSolution> {
    if params.trials < 1 {
        return Err(Error::InvalidParameter("random selection needs at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&params.p) {
        return Err(Error::InvalidParameter(format!("inclusion probability {} outside [0,1]", params.p)));
    }
    if candidates.is_empty() {
        return Err(Error::EmptyLearnerSet);
    }
    let v = bundle.validation();
    let cols = v.resolve(candidates)?;
    let mut tally = VoteTally::new(v, &VoteScheme::Majority)?;
    let mut best: Option<(u64, Vec<String>)> = None;
    for t in 0..params.trials {
        let mut rng = stream(params.seed, tags::RANDOM_SELECTION, t as u64);
        tally.clear();
        let mut members = Vec::new();
        for (id, &col) in candidates.iter().zip(&cols) {
            if rng.gen::<f64>() < params.p {
                tally.add(col)?;
                members.push(id.clone());
            }
        }
        let correct = tally.correct_count()?;
        if best.as_ref().is_none_or(|(b, _)| correct > *b) {
            best = Some((correct, members));
        }
    }
    let (correct, members) = best.expect("at least one trial");
    let score = correct as f64 / v.len() as f64;
    Ok(EnsembleSolution::new(members, Combiner::Vote(AggregationRule::Majority), score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::evaluate_ensemble;
    use crate::data::fixtures::bundle;
    use crate::data::LearnerCategory::*;

    fn fixture() -> (DatasetBundle, Vec<String>) {
        let gold = [0, 1, 1, 0, 1];
        let b = bundle(
            2,
            &gold,
            &[("a", Bow, &[0, 1, 0, 0, 1]), ("b", Bow, &[1, 1, 1, 0, 0]), ("c", Lexicon, &[0, 0, 1, 1, 1])],
        );
        let ids = b.learner_ids().to_vec();
        (b, ids)
    }

    #[test]
    fn degenerate_probabilities() {
        let (b, ids) = fixture();
        let all = random_construct(&b, &ids, &RandomParams { p: 1.0, ..Default::default() }).unwrap();
        assert_eq!(all.members, ids);
        assert_eq!(
            all.validation_score,
            evaluate_ensemble(b.validation(), &ids, &AggregationRule::Majority).unwrap()
        );
        let none = random_construct(&b, &ids, &RandomParams { p: 0.0, ..Default::default() }).unwrap();
        assert!(none.members.is_empty());
        assert_eq!(none.validation_score, 0.0);
        assert_eq!(none.score(b.test()).unwrap(), 0.0);
    }

    #[test]
    fn fixed_seed_repeats_and_rescoring_agrees() {
        let (b, ids) = fixture();
        let p = RandomParams { seed: 42, ..Default::default() };
        let a = random_construct(&b, &ids, &p).unwrap();
        assert_eq!(a, random_construct(&b, &ids, &p).unwrap());
        assert_eq!(a.validation_score, a.score(b.validation()).unwrap());
    }

    #[test]
    fn rejects_bad_parameters() {
        let (b, ids) = fixture();
        assert!(random_construct(&b, &ids, &RandomParams { trials: 0, ..Default::default() }).is_err());
        assert!(random_construct(&b, &ids, &RandomParams { p: 1.5, ..Default::default() }).is_err());
    }
}
