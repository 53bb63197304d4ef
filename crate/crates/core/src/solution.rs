//! The output of every construction method.

use crate::aggregation::{accuracy, predict_ensemble, AggregationRule, WeightVector};
use crate::baselines::{BayesCombiner, StackingModel};
use crate::data::{Label, PredictionMatrix};
use crate::error::{Error, Result};
use crate::hec::TraceRecord;

/// How the members' votes become one label.
#[derive(Debug, Clone, PartialEq)]
pub enum Combiner {
    Vote(AggregationRule),
    Stacking(StackingModel),
    Bayes(BayesCombiner),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSolution {
    /// Selected learner ids, in the order the method produced them.
    pub members: Vec<String>,
    pub combiner: Combiner,
    /// Accuracy on the validation split, recomputed from `members` and
    /// `combiner`.
    pub validation_score: f64,
    pub trace: Option<Vec<TraceRecord>>,
}

impl EnsembleSolution {
    pub fn new(members: Vec<String>, combiner: Combiner, validation_score: f64) -> Self {
        EnsembleSolution {
            members,
            combiner,
            validation_score,
            trace: None,
        }
    }

    pub fn with_trace(mut self, trace: Vec<TraceRecord>) -> Self {
        self.trace = Some(trace);
        self
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The voting rule, for vote-based solutions.
    pub fn rule(&self) -> Option<&AggregationRule> {
        match &self.combiner {
            Combiner::Vote(r) => Some(r),
            _ => None,
        }
    }

    /// Member weights, for weighted-vote solutions.
    pub fn weights(&self) -> Option<&WeightVector> {
        match self.rule() {
            Some(AggregationRule::Weighted(w)) => Some(w),
            _ => None,
        }
    }

    /// Per-row predictions on `matrix`; `None` for an empty vote ensemble.
    pub fn predictions(&self, matrix: &PredictionMatrix) -> Result<Option<Vec<Label>>> {
        match &self.combiner {
            Combiner::Vote(rule) => predict_ensemble(matrix, &self.members, rule),
            Combiner::Stacking(m) => m.predict(matrix).map(Some),
            Combiner::Bayes(b) => b.predict(matrix).map(Some),
        }
    }

    /// Per-row predictions; errors for an empty ensemble.
    pub fn predict(&self, matrix: &PredictionMatrix) -> Result<Vec<Label>> {
        self.predictions(matrix)?.ok_or(Error::EmptyLearnerSet)
    }

    /// Accuracy on `matrix`; 0.0 for an empty ensemble.
    pub fn score(&self, matrix: &PredictionMatrix) -> Result<f64> {
        Ok(self
            .predictions(matrix)?
            .map(|p| accuracy(&p, matrix.gold()))
            .unwrap_or(0.0))
    }
}
