//! Voting rules and ensemble evaluation.
//!
//! An ensemble predicts, for every row, the class with the largest summed
//! weight among its members' votes; ties go to the lowest class index. The
//! empty ensemble predicts nothing and scores 0.0.

mod tally;
mod weights;

pub use tally::{VoteScheme, VoteTally};
pub use weights::{class_weights, learner_weights, LearnerAccuracy, WeightNormalization, WeightVector};

pub(crate) use weights::category_coefficients;

use crate::data::{DatasetBundle, Label, PredictionMatrix};
use crate::error::{Error, Result};
use crate::solution::{Combiner, EnsembleSolution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggregationRule {
    /// One vote per member.
    Majority,
    /// Votes weighted by a [`WeightVector`] over exactly the members.
    Weighted(WeightVector),
}

impl AggregationRule {
    /// Integer vote weight of each member, aligned with `members`.
    fn member_units(&self, members: &[String]) -> Result<Vec<u128>> {
        match self {
            AggregationRule::Majority => Ok(vec![1; members.len()]),
            AggregationRule::Weighted(w) => {
                if w.len() != members.len() {
                    return Err(Error::RuleMismatch(format!(
                        "{} weights for {} members",
                        w.len(),
                        members.len()
                    )));
                }
                members
                    .iter()
                    .map(|id| {
                        w.units_of(id)
                            .ok_or_else(|| Error::RuleMismatch(format!("no weight for `{id}`")))
                    })
                    .collect()
            }
        }
    }
}

/// Index of the largest score; the first maximum wins.
pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(scores: &[T]) -> usize {
    let mut best = 0;
    for (c, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = c;
        }
    }
    best
}

/// Combines one row of votes.
pub fn weighted_vote(rule: &AggregationRule, votes: &[(&str, Label)], class_count: usize) -> Result<Label> {
    let ids: Vec<String> = votes.iter().map(|(id, _)| id.to_string()).collect();
    let units = rule.member_units(&ids)?;
    let mut scores = vec![0u128; class_count];
    for ((_, label), u) in votes.iter().zip(units) {
        let slot = scores.get_mut(*label as usize).ok_or(Error::VoteOutOfRange {
            label: *label,
            class_count,
        })?;
        *slot += u;
    }
    Ok(argmax_lowest(&scores) as Label)
}

/// Per-row ensemble predictions; `None` for the empty ensemble.
pub fn predict_ensemble(
    matrix: &PredictionMatrix,
    members: &[String],
    rule: &AggregationRule,
) -> Result<Option<Vec<Label>>> {
    let cols = matrix.resolve(members)?;
    let units = rule.member_units(members)?;
    if cols.is_empty() {
        return Ok(None);
    }
    let classes = matrix.class_count();
    let mut scores = vec![0u128; classes];
    let out = (0..matrix.len())
        .map(|r| {
            scores.iter_mut().for_each(|s| *s = 0);
            for (&c, &u) in cols.iter().zip(&units) {
                scores[matrix.column_at(c)[r] as usize] += u;
            }
            argmax_lowest(&scores) as Label
        })
        .collect();
    Ok(Some(out))
}

/// Fraction of rows where `predicted` equals `gold`.
pub fn accuracy(predicted: &[Label], gold: &[Label]) -> f64 {
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    hits as f64 / gold.len() as f64
}

/// Accuracy of `members` combined by `rule`; 0.0 for no members.
pub fn evaluate_ensemble(matrix: &PredictionMatrix, members: &[String], rule: &AggregationRule) -> Result<f64> {
    Ok(predict_ensemble(matrix, members, rule)?
        .map(|p| accuracy(&p, matrix.gold()))
        .unwrap_or(0.0))
}

/// Validation records of `ids`, for [`learner_weights`].
pub fn validation_accuracies(bundle: &DatasetBundle, ids: &[String]) -> Result<Vec<LearnerAccuracy>> {
    let v = bundle.validation();
    ids.iter()
        .map(|id| {
            let col = v
                .column_index(id)
                .ok_or_else(|| crate::data::DataError::UnknownLearner(id.clone()))?;
            Ok(LearnerAccuracy {
                id: id.clone(),
                category: bundle.category(id).expect("bundle invariant: every column has meta"),
                correct: v.correct_count_at(col),
            })
        })
        .collect()
}

/// Weighted majority voting over every candidate, weights from validation
/// accuracy.
pub fn wmv_construct(
    bundle: &DatasetBundle,
    candidates: &[String],
    normalization: WeightNormalization,
) -> Result<EnsembleSolution> {
    if candidates.is_empty() {
        return Err(Error::EmptyLearnerSet);
    }
    let weights = learner_weights(&validation_accuracies(bundle, candidates)?, normalization)?;
    let rule = AggregationRule::Weighted(weights);
    let score = evaluate_ensemble(bundle.validation(), candidates, &rule)?;
    Ok(EnsembleSolution::new(candidates.to_vec(), Combiner::Vote(rule), score))
}

/// Plain majority over every candidate.
pub fn majority_construct(bundle: &DatasetBundle, candidates: &[String]) -> Result<EnsembleSolution> {
    if candidates.is_empty() {
        return Err(Error::EmptyLearnerSet);
    }
    let rule = AggregationRule::Majority;
    let score = evaluate_ensemble(bundle.validation(), candidates, &rule)?;
    Ok(EnsembleSolution::new(candidates.to_vec(), Combiner::Vote(rule), score))
}

/// The single most accurate learner on validation.
pub fn best_single_construct(bundle: &DatasetBundle) -> Result<EnsembleSolution> {
    let best = crate::data::rank_learners(bundle)
        .into_iter()
        .next()
        .ok_or(Error::EmptyLearnerSet)?;
    majority_construct(bundle, &[best])
}
