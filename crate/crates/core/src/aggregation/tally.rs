//! Incremental vote accumulation.
//!
//! Under accuracy weighting a learner's weight depends on the other members
//! of its category (through the category mean), so per-learner float sums
//! cannot be updated in place. The tally instead keeps, for every row, group
//! and class, the integer sum of the members' *strengths* (validation
//! correct-counts). A class score is then `sum_g coef_g * cell[row][g][c]`
//! with exact integer per-group coefficients recomputed from the group sizes
//! and strength totals. Adding or removing one learner touches `m` cells.
//!
//! Majority voting is the special case of one group with unit strengths.

use crate::data::{DatasetBundle, Label, LearnerCategory, PredictionMatrix};
use crate::error::{Error, Result};

use super::weights::{learner_weights, LearnerAccuracy, WeightNormalization, WeightVector};
use super::{category_coefficients, AggregationRule};

/// How column votes are weighted inside a [`VoteTally`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VoteScheme {
    Majority,
    /// Accuracy weighting. `categories` and `correct` are aligned with the
    /// columns of the matrix being tallied; `correct` holds validation
    /// correct-counts even when tallying another split.
    Wmv {
        ids: Vec<String>,
        categories: Vec<LearnerCategory>,
        correct: Vec<u64>,
        normalization: WeightNormalization,
    },
}

impl VoteScheme {
    /// Accuracy weighting with strengths taken from the bundle's validation
    /// split, aligned with validation columns.
    pub fn wmv(bundle: &DatasetBundle, normalization: WeightNormalization) -> Self {
        let v = bundle.validation();
        VoteScheme::Wmv {
            ids: v.learner_ids().to_vec(),
            categories: bundle.column_categories(),
            correct: (0..v.learner_count()).map(|i| v.correct_count_at(i)).collect(),
            normalization,
        }
    }

    /// The stand-alone rule equivalent to tallying `members` (column indices).
    pub fn rule_for(&self, members: &[usize]) -> Result<AggregationRule> {
        match self {
            VoteScheme::Majority => Ok(AggregationRule::Majority),
            VoteScheme::Wmv {
                ids,
                categories,
                correct,
                normalization,
            } => {
                let accs: Vec<LearnerAccuracy> = members
                    .iter()
                    .map(|&c| LearnerAccuracy {
                        id: ids[c].clone(),
                        category: categories[c],
                        correct: correct[c],
                    })
                    .collect();
                learner_weights(&accs, *normalization).map(AggregationRule::Weighted)
            }
        }
    }

    fn groups(&self) -> usize {
        match self {
            VoteScheme::Majority => 1,
            VoteScheme::Wmv { .. } => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VoteTally<'m> {
    matrix: &'m PredictionMatrix,
    scheme: VoteScheme,
    classes: usize,
    groups: usize,
    col_group: Vec<usize>,
    col_strength: Vec<u64>,
    /// `m * groups * classes`, row-major.
    cells: Vec<u64>,
    group_size: [u64; 4],
    group_strength: [u64; 4],
    is_member: Vec<bool>,
    members: Vec<usize>,
}

impl<'m> VoteTally<'m> {
    pub fn new(matrix: &'m PredictionMatrix, scheme: &VoteScheme) -> Result<Self> {
        let n = matrix.learner_count();
        let (col_group, col_strength) = match scheme {
            VoteScheme::Majority => (vec![0; n], vec![1; n]),
            VoteScheme::Wmv {
                ids,
                categories,
                correct,
                ..
            } => {
                if ids.len() != n || categories.len() != n || correct.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "vote scheme describes {} learners, matrix has {n}",
                        ids.len()
                    )));
                }
                if ids.as_slice() != matrix.learner_ids() {
                    return Err(Error::InvalidParameter(
                        "vote scheme columns do not match the matrix".into(),
                    ));
                }
                (categories.iter().map(|c| c.index()).collect(), correct.clone())
            }
        };
        let groups = scheme.groups();
        Ok(VoteTally {
            matrix,
            scheme: scheme.clone(),
            classes: matrix.class_count(),
            groups,
            col_group,
            col_strength,
            cells: vec![0; matrix.len() * groups * matrix.class_count()],
            group_size: [0; 4],
            group_strength: [0; 4],
            is_member: vec![false; n],
            members: Vec::new(),
        })
    }

    /// Fresh tally holding `members` (column indices, in order).
    pub fn from_members(matrix: &'m PredictionMatrix, scheme: &VoteScheme, members: &[usize]) -> Result<Self> {
        let mut t = VoteTally::new(matrix, scheme)?;
        for &c in members {
            t.add(c)?;
        }
        Ok(t)
    }

    fn check_column(&self, col: usize) -> Result<()> {
        if col >= self.is_member.len() {
            return Err(Error::InvalidParameter(format!("column {col} out of range")));
        }
        Ok(())
    }

    fn apply(&mut self, col: usize, add: bool) {
        let g = self.col_group[col];
        let s = self.col_strength[col];
        let stride = self.groups * self.classes;
        let base = g * self.classes;
        for (r, &vote) in self.matrix.column_at(col).iter().enumerate() {
            let cell = &mut self.cells[r * stride + base + vote as usize];
            if add {
                *cell += s;
            } else {
                *cell -= s;
            }
        }
        if add {
            self.group_size[g] += 1;
            self.group_strength[g] += s;
        } else {
            self.group_size[g] -= 1;
            self.group_strength[g] -= s;
        }
    }

    pub fn add(&mut self, col: usize) -> Result<()> {
        self.check_column(col)?;
        if self.is_member[col] {
            return Err(Error::InvalidParameter(format!("column {col} already in the tally")));
        }
        self.apply(col, true);
        self.is_member[col] = true;
        self.members.push(col);
        Ok(())
    }

    pub fn remove(&mut self, col: usize) -> Result<()> {
        self.check_column(col)?;
        if !self.is_member[col] {
            return Err(Error::InvalidParameter(format!("column {col} not in the tally")));
        }
        self.apply(col, false);
        self.is_member[col] = false;
        let pos = self.members.iter().position(|&c| c == col).expect("member list in sync");
        self.members.remove(pos);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.cells.iter_mut().for_each(|c| *c = 0);
        self.group_size = [0; 4];
        self.group_strength = [0; 4];
        self.is_member.iter_mut().for_each(|m| *m = false);
        self.members.clear();
    }

    pub fn contains(&self, col: usize) -> bool {
        self.is_member.get(col).copied().unwrap_or(false)
    }

    /// Members in insertion order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn member_ids(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|&c| self.matrix.learner_ids()[c].clone())
            .collect()
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn matrix(&self) -> &'m PredictionMatrix {
        self.matrix
    }

    fn coefficients(&self) -> Result<Vec<(usize, u128)>> {
        let coef = match &self.scheme {
            VoteScheme::Majority => [1, 0, 0, 0],
            VoteScheme::Wmv { normalization, .. } => {
                category_coefficients(&self.group_size, &self.group_strength, *normalization)?
            }
        };
        Ok((0..self.groups)
            .filter(|&g| self.group_size[g] > 0 && coef[g] > 0)
            .map(|g| (g, coef[g]))
            .collect())
    }

    fn for_each_prediction(&self, mut f: impl FnMut(usize, Label)) -> Result<bool> {
        let active = self.coefficients()?;
        if self.members.is_empty() || active.is_empty() {
            return Ok(false);
        }
        // largest possible class score decides the integer width
        let mut bound: u128 = 0;
        for &(g, c) in &active {
            let term = c
                .checked_mul(u128::from(self.group_strength[g]))
                .ok_or(Error::Overflow)?;
            bound = bound.checked_add(term).ok_or(Error::Overflow)?;
        }
        if bound <= u128::from(u64::MAX) {
            let active64: Vec<(usize, u64)> = active.iter().map(|&(g, c)| (g, c as u64)).collect();
            self.scan(&active64, &mut f);
        } else {
            self.scan(&active, &mut f);
        }
        Ok(true)
    }

    fn scan<T>(&self, active: &[(usize, T)], f: &mut impl FnMut(usize, Label))
    where
        T: Copy + PartialOrd + From<u64> + std::ops::Mul<Output = T> + std::ops::Add<Output = T>,
    {
        let stride = self.groups * self.classes;
        let classes = self.classes;
        for (r, row) in self.cells.chunks_exact(stride).enumerate() {
            let mut best = 0usize;
            let mut best_score = T::from(0);
            for c in 0..classes {
                let mut s = T::from(0);
                for &(g, coef) in active {
                    s = s + coef * T::from(row[g * classes + c]);
                }
                if c == 0 || s > best_score {
                    best = c;
                    best_score = s;
                }
            }
            f(r, best as Label);
        }
    }

    /// Rows the current members predict correctly; 0 when empty.
    pub fn correct_count(&self) -> Result<u64> {
        let gold = self.matrix.gold();
        let mut hits = 0u64;
        self.for_each_prediction(|r, p| {
            if p == gold[r] {
                hits += 1;
            }
        })?;
        Ok(hits)
    }

    pub fn accuracy(&self) -> Result<f64> {
        Ok(self.correct_count()? as f64 / self.matrix.len() as f64)
    }

    /// Per-row predictions, `None` when the tally is empty.
    pub fn predictions(&self) -> Result<Option<Vec<Label>>> {
        let mut out = vec![0; self.matrix.len()];
        let any = self.for_each_prediction(|r, p| out[r] = p)?;
        Ok(any.then_some(out))
    }

    /// The stand-alone rule for the current members.
    pub fn rule(&self) -> Result<AggregationRule> {
        self.scheme.rule_for(&self.members)
    }

    pub fn weights(&self) -> Result<Option<WeightVector>> {
        Ok(match self.rule()? {
            AggregationRule::Weighted(w) => Some(w),
            AggregationRule::Majority => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::evaluate_ensemble;
    use crate::data::{generate_synthetic, SyntheticLearner, SyntheticSpec};
    use rand::Rng;

    fn synth(n: usize, classes: usize, seed: u64) -> DatasetBundle {
        let learners = (0..n)
            .map(|i| SyntheticLearner {
                id: format!("l{i}"),
                name: None,
                category: LearnerCategory::ALL[i % 4],
                target_accuracy: 0.5 + 0.05 * (i % 8) as f64,
                correlation_group: (i % 3 == 0).then(|| "g".to_string()),
                within_group_agreement: 0.5,
            })
            .collect();
        generate_synthetic(&SyntheticSpec {
            class_count: classes,
            example_count: 300,
            test_example_count: None,
            learners,
            rng_seed: seed,
        })
        .unwrap()
    }

    #[test]
    fn empty_tally_scores_zero() {
        let b = synth(4, 2, 1);
        let t = VoteTally::new(b.validation(), &VoteScheme::Majority).unwrap();
        assert_eq!(t.correct_count().unwrap(), 0);
        assert_eq!(t.predictions().unwrap(), None);
    }

    #[test]
    fn add_remove_errors() {
        let b = synth(3, 2, 1);
        let mut t = VoteTally::new(b.validation(), &VoteScheme::Majority).unwrap();
        t.add(1).unwrap();
        assert!(t.add(1).is_err());
        assert!(t.remove(0).is_err());
        assert!(t.add(7).is_err());
        t.remove(1).unwrap();
        assert!(t.cells().iter().all(|&c| c == 0));
    }

    #[test]
    fn random_walks_match_fresh_evaluation() {
        for (classes, norm) in [
            (2, WeightNormalization::Global),
            (3, WeightNormalization::Global),
            (2, WeightNormalization::WithinCategory),
        ] {
            let b = synth(9, classes, 5);
            let v = b.validation();
            for scheme in [VoteScheme::Majority, VoteScheme::wmv(&b, norm)] {
                let mut t = VoteTally::new(v, &scheme).unwrap();
                let mut rng = crate::rng::stream(3, 0, classes as u64);
                for _ in 0..60 {
                    let c = rng.gen_range(0..9);
                    if t.contains(c) {
                        t.remove(c).unwrap();
                    } else {
                        t.add(c).unwrap();
                    }
                    let fresh = VoteTally::from_members(v, &scheme, t.members()).unwrap();
                    assert_eq!(fresh.cells(), t.cells());
                    let ids = t.member_ids();
                    let expect = if ids.is_empty() {
                        0.0
                    } else {
                        evaluate_ensemble(v, &ids, &t.rule().unwrap()).unwrap()
                    };
                    assert_eq!(t.accuracy().unwrap(), expect);
                }
            }
        }
    }
}
