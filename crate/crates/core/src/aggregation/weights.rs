//! Accuracy-derived vote weights.
//!
//! Category weights: `W_k = Acc_k / sum_l Acc_l`, where `Acc_k` is the mean
//! validation accuracy of the category's learners. Learner weights:
//! `Acc_i * W_k(i)`, normalized over *all* learners so the vector sums to 1.
//! [`WeightNormalization::WithinCategory`] instead normalizes inside each
//! category (each category then sums to 1).
//!
//! Weights are held as exact rationals (`units / denominator`, `u128`) so
//! that ties between classes are decided exactly and the incremental tally
//! reproduces from-scratch votes bit for bit. Since all learners of a matrix
//! share the same row count, integer correct-counts stand in for accuracies.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::LearnerCategory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightNormalization {
    /// `Acc_i * W_k` normalized over every learner.
    #[default]
    Global,
    /// `Acc_i * W_k / sum_{j in k} Acc_j * W_k`, i.e. per-category shares.
    WithinCategory,
}

pub(crate) fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn lcm(a: u128, b: u128) -> Result<u128> {
    if a == 0 || b == 0 {
        return Ok(a.max(b));
    }
    (a / gcd(a, b)).checked_mul(b).ok_or(Error::Overflow)
}

/// Nonnegative per-learner weights as exact fractions of a common
/// denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector {
    ids: Vec<String>,
    units: Vec<u128>,
    denominator: u128,
}

impl WeightVector {
    /// Builds a vector from integer units; reduces by the common gcd.
    pub fn from_units(ids: Vec<String>, units: Vec<u128>, denominator: u128) -> Result<Self> {
        if ids.len() != units.len() {
            return Err(Error::InvalidParameter(format!(
                "{} ids for {} weights",
                ids.len(),
                units.len()
            )));
        }
        if ids.is_empty() {
            return Err(Error::EmptyLearnerSet);
        }
        if denominator == 0 {
            return Err(Error::AllZeroAccuracy);
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::InvalidParameter(format!("duplicate learner `{dup}` in weights")));
        }
        let g = units.iter().fold(denominator, |g, &u| gcd(g, u));
        Ok(WeightVector {
            ids,
            units: units.into_iter().map(|u| u / g).collect(),
            denominator: denominator / g,
        })
    }

    /// Equal weights summing to 1.
    pub fn uniform(ids: Vec<String>) -> Result<Self> {
        let n = ids.len() as u128;
        WeightVector::from_units(ids, vec![1; n as usize], n)
    }

    /// Normalizes arbitrary nonnegative floats to sum 1. Values are
    /// quantized to 2^-52 of the largest one, which keeps the vector
    /// invariant under positive rescaling of the input.
    pub fn from_f64(pairs: &[(String, f64)]) -> Result<Self> {
        if pairs.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be finite and >= 0".into()));
        }
        let max = pairs.iter().map(|(_, w)| *w).fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::AllZeroAccuracy);
        }
        const SCALE: f64 = (1u64 << 52) as f64;
        let units: Vec<u128> = pairs
            .iter()
            .map(|(_, w)| (w / max * SCALE).round() as u128)
            .collect();
        let denominator = units.iter().sum();
        WeightVector::from_units(pairs.iter().map(|(id, _)| id.clone()).collect(), units, denominator)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn denominator(&self) -> u128 {
        self.denominator
    }

    pub fn units_of(&self, id: &str) -> Option<u128> {
        self.ids.iter().position(|x| x == id).map(|i| self.units[i])
    }

    pub fn weight(&self, id: &str) -> Option<f64> {
        self.units_of(id).map(|u| u as f64 / self.denominator as f64)
    }

    /// `(id, weight)` pairs in construction order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.ids
            .iter()
            .zip(&self.units)
            .map(|(id, &u)| (id.as_str(), u as f64 / self.denominator as f64))
    }

    pub fn total(&self) -> f64 {
        self.units.iter().sum::<u128>() as f64 / self.denominator as f64
    }

    /// The same weights keyed by id.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.iter().map(|(id, w)| (id.to_string(), w)).collect()
    }
}

/// Category weights from mean category accuracies (categories present only).
pub fn class_weights(
    mean_accuracy: &BTreeMap<LearnerCategory, f64>,
) -> Result<BTreeMap<LearnerCategory, f64>> {
    if mean_accuracy.is_empty() {
        return Err(Error::EmptyLearnerSet);
    }
    if mean_accuracy.values().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidParameter("category accuracies must lie in [0,1]".into()));
    }
    let total: f64 = mean_accuracy.values().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroAccuracy);
    }
    Ok(mean_accuracy.iter().map(|(k, a)| (*k, a / total)).collect())
}

/// One learner's validation record: rows predicted correctly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearnerAccuracy {
    pub id: String,
    pub category: LearnerCategory,
    pub correct: u64,
}

#[derive(Default, Clone, Copy)]
struct CategoryTotals {
    size: u64,
    strength: u64,
}

fn category_totals(learners: &[LearnerAccuracy]) -> [CategoryTotals; 4] {
    let mut t = [CategoryTotals::default(); 4];
    for l in learners {
        let c = &mut t[l.category.index()];
        c.size += 1;
        c.strength += l.correct;
    }
    t
}

/// Per-category integer multipliers such that learner `i` in category `k`
/// carries weight proportional to `correct_i * coef_k`.
///
/// Global: `coef_k = S_k * P / n_k` with `S_k` the summed correct counts,
/// `n_k` the member count and `P = lcm(n_k)`; this is `Acc_k` up to a
/// factor shared by every category. Within-category: `coef_k = D / S_k`
/// with `D = lcm(S_k)`, and zero for a category whose learners are all
/// wrong everywhere.
pub(crate) fn category_coefficients(
    sizes: &[u64; 4],
    strengths: &[u64; 4],
    normalization: WeightNormalization,
) -> Result<[u128; 4]> {
    let mut coef = [0u128; 4];
    match normalization {
        WeightNormalization::Global => {
            let mut p = 1u128;
            for &n in sizes.iter().filter(|&&n| n > 0) {
                p = lcm(p, u128::from(n))?;
            }
            for k in 0..4 {
                if sizes[k] > 0 {
                    coef[k] = u128::from(strengths[k])
                        .checked_mul(p / u128::from(sizes[k]))
                        .ok_or(Error::Overflow)?;
                }
            }
        }
        WeightNormalization::WithinCategory => {
            let mut d = 1u128;
            for k in 0..4 {
                if sizes[k] > 0 && strengths[k] > 0 {
                    d = lcm(d, u128::from(strengths[k]))?;
                }
            }
            for k in 0..4 {
                if sizes[k] > 0 && strengths[k] > 0 {
                    coef[k] = d / u128::from(strengths[k]);
                }
            }
        }
    }
    Ok(coef)
}

/// Two-step accuracy weighting over `learners` (categories absent from the
/// slice play no part).
pub fn learner_weights(learners: &[LearnerAccuracy], normalization: WeightNormalization) -> Result<WeightVector> {
    if learners.is_empty() {
        return Err(Error::EmptyLearnerSet);
    }
    let totals = category_totals(learners);
    let sizes = totals.map(|t| t.size);
    let strengths = totals.map(|t| t.strength);
    let coef = category_coefficients(&sizes, &strengths, normalization)?;
    let units = learners
        .iter()
        .map(|l| {
            u128::from(l.correct)
                .checked_mul(coef[l.category.index()])
                .ok_or(Error::Overflow)
        })
        .collect::<Result<Vec<u128>>>()?;
    let denominator = match normalization {
        WeightNormalization::Global => units
            .iter()
            .try_fold(0u128, |acc, &u| acc.checked_add(u))
            .ok_or(Error::Overflow)?,
        // every non-degenerate category sums to exactly coef_k * S_k = D
        WeightNormalization::WithinCategory => (0..4)
            .find(|&k| coef[k] > 0)
            .map(|k| coef[k] * u128::from(strengths[k]))
            .unwrap_or(0),
    };
    if units.iter().all(|&u| u == 0) {
        return Err(Error::AllZeroAccuracy);
    }
    WeightVector::from_units(learners.iter().map(|l| l.id.clone()).collect(), units, denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use LearnerCategory::*;

    fn la(id: &str, category: LearnerCategory, correct: u64) -> LearnerAccuracy {
        LearnerAccuracy {
            id: id.into(),
            category,
            correct,
        }
    }

    /// Category means, then category weights, then global normalization,
    /// all in floating point.
    fn float_oracle(learners: &[(LearnerCategory, f64)]) -> Vec<f64> {
        let mut sum = BTreeMap::<LearnerCategory, (f64, f64)>::new();
        for (c, a) in learners {
            let e = sum.entry(*c).or_default();
            e.0 += a;
            e.1 += 1.0;
        }
        let means: BTreeMap<_, _> = sum.iter().map(|(k, (s, n))| (*k, s / n)).collect();
        let z: f64 = means.values().sum();
        let u: Vec<f64> = learners.iter().map(|(c, a)| a * means[c] / z).collect();
        let total: f64 = u.iter().sum();
        u.iter().map(|x| x / total).collect()
    }

    #[test]
    fn class_weight_examples() {
        let w = class_weights(&BTreeMap::from([(Lexicon, 0.5), (Transformer, 0.5)])).unwrap();
        assert_eq!(w[&Lexicon], 0.5);
        assert_eq!(w[&Transformer], 0.5);
        let w = class_weights(&BTreeMap::from([(Bow, 0.8), (Lexicon, 0.2)])).unwrap();
        assert!((w[&Bow] - 0.8).abs() < 1e-15 && (w[&Lexicon] - 0.2).abs() < 1e-15);
        let w = class_weights(&BTreeMap::from([(Transformer, 0.93)])).unwrap();
        assert_eq!(w[&Transformer], 1.0);
        assert!(matches!(
            class_weights(&BTreeMap::from([(Bow, 0.0)])),
            Err(Error::AllZeroAccuracy)
        ));
    }

    #[test]
    fn learner_weight_examples() {
        let w = learner_weights(&[la("solo", Bow, 7)], WeightNormalization::Global).unwrap();
        assert_eq!(w.weight("solo"), Some(1.0));

        // accuracies 0.9 / 0.6 -> W_k = 0.6 / 0.4 -> u = 0.54 / 0.24
        let w = learner_weights(&[la("t", Transformer, 9), la("b", Bow, 6)], WeightNormalization::Global).unwrap();
        assert!((w.weight("t").unwrap() - 0.54 / 0.78).abs() < 1e-12);
        assert!((w.weight("b").unwrap() - 0.24 / 0.78).abs() < 1e-12);
        assert!((w.weight("t").unwrap() - 0.692_307_692_307_692_3).abs() < 1e-12);

        let four: Vec<_> = LearnerCategory::ALL
            .iter()
            .enumerate()
            .map(|(i, c)| la(&format!("l{i}"), *c, 80))
            .collect();
        let w = learner_weights(&four, WeightNormalization::Global).unwrap();
        assert!(w.iter().all(|(_, x)| x == 0.25));
    }

    #[test]
    fn weight_errors() {
        assert!(matches!(learner_weights(&[], WeightNormalization::Global), Err(Error::EmptyLearnerSet)));
        assert!(matches!(
            learner_weights(&[la("a", Bow, 0), la("b", Lexicon, 0)], WeightNormalization::Global),
            Err(Error::AllZeroAccuracy)
        ));
    }

    #[test]
    fn within_category_sums_per_category() {
        let ls = [la("a", Bow, 3), la("b", Bow, 5), la("c", Transformer, 9)];
        let w = learner_weights(&ls, WeightNormalization::WithinCategory).unwrap();
        assert!((w.weight("a").unwrap() - 3.0 / 8.0).abs() < 1e-15);
        assert!((w.weight("b").unwrap() - 5.0 / 8.0).abs() < 1e-15);
        assert_eq!(w.weight("c"), Some(1.0));
        assert!((w.total() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn from_f64_normalizes() {
        let w = WeightVector::from_f64(&[("a".into(), 0.7), ("b".into(), 0.3)]).unwrap();
        assert!((w.total() - 1.0).abs() < 1e-15);
        assert!((w.weight("a").unwrap() - 0.7).abs() < 1e-12);
        assert!(WeightVector::from_f64(&[("a".into(), -1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn global_weights_match_float_oracle_and_sum_to_one(
            spec in prop::collection::vec((0usize..4, 1u64..=1000), 1..30),
        ) {
            let learners: Vec<_> = spec
                .iter()
                .enumerate()
                .map(|(i, (c, k))| la(&format!("l{i}"), LearnerCategory::ALL[*c], *k))
                .collect();
            let w = learner_weights(&learners, WeightNormalization::Global).unwrap();
            prop_assert!((w.total() - 1.0).abs() < 1e-9);
            let oracle = float_oracle(
                &spec.iter().map(|(c, k)| (LearnerCategory::ALL[*c], *k as f64 / 1000.0)).collect::<Vec<_>>(),
            );
            for (i, (_, x)) in w.iter().enumerate() {
                prop_assert!(x >= 0.0);
                prop_assert!((x - oracle[i]).abs() < 1e-9, "{} vs {}", x, oracle[i]);
            }
        }

        #[test]
        fn weights_are_scale_invariant(
            spec in prop::collection::vec((0usize..4, 0u64..=500), 1..20),
            scale in 2u64..50,
        ) {
            let mk = |s: u64| -> Vec<LearnerAccuracy> {
                spec.iter()
                    .enumerate()
                    .map(|(i, (c, k))| la(&format!("l{i}"), LearnerCategory::ALL[*c], k * s))
                    .collect()
            };
            let a = learner_weights(&mk(1), WeightNormalization::Global);
            let b = learner_weights(&mk(scale), WeightNormalization::Global);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "scaling changed success"),
            }
        }
    }
}
