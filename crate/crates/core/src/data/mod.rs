//! Prediction matrices, learner metadata and the bundles that tie a
//! validation split, a test split and the learner catalogue together.
//!
//! Everything here is immutable once constructed. Constructors validate the
//! invariants (column lengths, label ranges, unique ids, matching learner
//! sets) so downstream code can index without re-checking.

mod csv_io;
mod synthetic;

pub use csv_io::{emit_bundle, load_bundle, read_matrix, read_meta, write_matrix, write_meta};
pub use synthetic::{generate_synthetic, SyntheticLearner, SyntheticSpec};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Class index in `0..class_count`. Binary sentiment uses 0 = negative,
/// 1 = positive.
pub type Label = u32;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}, row {row}: malformed CSV: {message}")]
    Malformed {
        file: String,
        row: u64,
        message: String,
    },
    #[error("{file}, row {row}: duplicate learner id `{id}`")]
    DuplicateLearner { file: String, row: u64, id: String },
    #[error("{file}, row {row}: duplicate example id `{id}`")]
    DuplicateExample { file: String, row: u64, id: String },
    #[error("{file}, row {row}: label out of range: {label} >= class_count {class_count}")]
    LabelOutOfRange {
        file: String,
        row: u64,
        label: u64,
        class_count: usize,
    },
    #[error("learner-id set mismatch between validation and test: {detail}")]
    LearnerSetMismatch { detail: String },
    #[error("{file}: learner id `{id}` missing from meta file")]
    MissingMeta { file: String, id: String },
    #[error("unknown learner id `{0}`")]
    UnknownLearner(String),
    #[error("invalid data: {0}")]
    Invalid(String),
}

/// The four base-learner families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerCategory {
    Lexicon,
    Bow,
    EmbeddingNn,
    Transformer,
}

impl LearnerCategory {
    pub const ALL: [LearnerCategory; 4] = [
        LearnerCategory::Lexicon,
        LearnerCategory::Bow,
        LearnerCategory::EmbeddingNn,
        LearnerCategory::Transformer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerCategory::Lexicon => "lexicon",
            LearnerCategory::Bow => "bow",
            LearnerCategory::EmbeddingNn => "embedding_nn",
            LearnerCategory::Transformer => "transformer",
        }
    }

    /// Position in [`LearnerCategory::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LearnerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown learner category `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerMeta {
    pub id: String,
    pub name: String,
    pub category: LearnerCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Ids in CSV headers and cells must match `[A-Za-z0-9_.-]+`.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

/// Gold labels plus one predicted-label column per learner, for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    split: Split,
    class_count: usize,
    example_ids: Vec<String>,
    gold: Vec<Label>,
    learner_ids: Vec<String>,
    columns: Vec<Vec<Label>>,
    index: HashMap<String, usize>,
}

impl PredictionMatrix {
    pub fn new(
        split: Split,
        class_count: usize,
        example_ids: Vec<String>,
        gold: Vec<Label>,
        columns: Vec<(String, Vec<Label>)>,
    ) -> Result<Self, DataError> {
        if class_count < 2 {
            return Err(DataError::Invalid(format!(
                "class_count must be at least 2, got {class_count}"
            )));
        }
        let m = gold.len();
        if m == 0 {
            return Err(DataError::Invalid(format!("{} split has no examples", split.as_str())));
        }
        if example_ids.len() != m {
            return Err(DataError::Invalid(format!(
                "{} example ids for {m} gold labels",
                example_ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(m);
        for id in &example_ids {
            if !seen.insert(id.as_str()) {
                return Err(DataError::Invalid(format!("duplicate example id `{id}`")));
            }
        }
        check_labels(&gold, class_count, "gold")?;

        let mut learner_ids = Vec::with_capacity(columns.len());
        let mut cols = Vec::with_capacity(columns.len());
        let mut index = HashMap::with_capacity(columns.len());
        for (id, col) in columns {
            if col.len() != m {
                return Err(DataError::Invalid(format!(
                    "column `{id}` has {} rows, expected {m}",
                    col.len()
                )));
            }
            check_labels(&col, class_count, &id)?;
            if index.insert(id.clone(), cols.len()).is_some() {
                return Err(DataError::Invalid(format!("duplicate learner id `{id}`")));
            }
            learner_ids.push(id);
            cols.push(col);
        }
        Ok(PredictionMatrix {
            split,
            class_count,
            example_ids,
            gold,
            learner_ids,
            columns: cols,
            index,
        })
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Number of examples `m`.
    pub fn len(&self) -> usize {
        self.gold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold.is_empty()
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn gold(&self) -> &[Label] {
        &self.gold
    }

    /// Learner ids in column order.
    pub fn learner_ids(&self) -> &[String] {
        &self.learner_ids
    }

    pub fn learner_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn column(&self, id: &str) -> Option<&[Label]> {
        self.column_index(id).map(|i| self.columns[i].as_slice())
    }

    pub fn column_at(&self, index: usize) -> &[Label] {
        &self.columns[index]
    }

    /// Number of rows where column `index` agrees with gold.
    pub fn correct_count_at(&self, index: usize) -> u64 {
        self.columns[index]
            .iter()
            .zip(&self.gold)
            .filter(|(p, g)| p == g)
            .count() as u64
    }

    /// Resolves ids to column indices, failing on the first unknown id.
    pub fn resolve(&self, ids: &[String]) -> Result<Vec<usize>, DataError> {
        ids.iter()
            .map(|id| {
                self.column_index(id)
                    .ok_or_else(|| DataError::UnknownLearner(id.clone()))
            })
            .collect()
    }

    /// Copy restricted to `ids`, in the order given.
    pub fn select(&self, ids: &[String]) -> Result<PredictionMatrix, DataError> {
        let cols = self.resolve(ids)?;
        PredictionMatrix::new(
            self.split,
            self.class_count,
            self.example_ids.clone(),
            self.gold.clone(),
            cols.into_iter()
                .map(|i| (self.learner_ids[i].clone(), self.columns[i].clone()))
                .collect(),
        )
    }
}

fn check_labels(labels: &[Label], class_count: usize, what: &str) -> Result<(), DataError> {
    if let Some((row, &label)) = labels
        .iter()
        .enumerate()
        .find(|(_, &l)| l as usize >= class_count)
    {
        return Err(DataError::LabelOutOfRange {
            file: what.to_string(),
            row: row as u64 + 1,
            label: u64::from(label),
            class_count,
        });
    }
    Ok(())
}

/// Learner catalogue plus the validation and test matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    meta: Vec<LearnerMeta>,
    validation: PredictionMatrix,
    test: PredictionMatrix,
}

impl DatasetBundle {
    pub fn new(
        meta: Vec<LearnerMeta>,
        validation: PredictionMatrix,
        test: PredictionMatrix,
    ) -> Result<Self, DataError> {
        if validation.split() != Split::Validation || test.split() != Split::Test {
            return Err(DataError::Invalid("matrices passed with the wrong split tags".into()));
        }
        if validation.class_count() != test.class_count() {
            return Err(DataError::Invalid(format!(
                "class_count differs: validation {} vs test {}",
                validation.class_count(),
                test.class_count()
            )));
        }
        let mut meta_ids = HashSet::new();
        for m in &meta {
            if !meta_ids.insert(m.id.as_str()) {
                return Err(DataError::Invalid(format!("duplicate learner id `{}` in meta", m.id)));
            }
        }
        let val_ids: HashSet<&str> = validation.learner_ids().iter().map(String::as_str).collect();
        let test_ids: HashSet<&str> = test.learner_ids().iter().map(String::as_str).collect();
        if val_ids != test_ids {
            let mut only_val: Vec<&str> = val_ids.difference(&test_ids).copied().collect();
            let mut only_test: Vec<&str> = test_ids.difference(&val_ids).copied().collect();
            only_val.sort_unstable();
            only_test.sort_unstable();
            return Err(DataError::LearnerSetMismatch {
                detail: format!("only in validation: {only_val:?}; only in test: {only_test:?}"),
            });
        }
        if let Some(id) = validation
            .learner_ids()
            .iter()
            .find(|id| !meta_ids.contains(id.as_str()))
        {
            return Err(DataError::MissingMeta {
                file: "meta".into(),
                id: id.clone(),
            });
        }
        Ok(DatasetBundle {
            meta,
            validation,
            test,
        })
    }

    pub fn meta(&self) -> &[LearnerMeta] {
        &self.meta
    }

    pub fn learner_meta(&self, id: &str) -> Option<&LearnerMeta> {
        self.meta.iter().find(|m| m.id == id)
    }

    pub fn category(&self, id: &str) -> Option<LearnerCategory> {
        self.learner_meta(id).map(|m| m.category)
    }

    pub fn validation(&self) -> &PredictionMatrix {
        &self.validation
    }

    pub fn test(&self) -> &PredictionMatrix {
        &self.test
    }

    pub fn class_count(&self) -> usize {
        self.validation.class_count()
    }

    /// Learner ids in validation column order.
    pub fn learner_ids(&self) -> &[String] {
        self.validation.learner_ids()
    }

    pub fn learner_count(&self) -> usize {
        self.validation.learner_count()
    }

    /// Categories of the validation columns, index-aligned.
    pub fn column_categories(&self) -> Vec<LearnerCategory> {
        self.learner_ids()
            .iter()
            .map(|id| self.category(id).expect("bundle invariant: every column has meta"))
            .collect()
    }

    /// Bundle restricted to `ids` (candidate-pool filtering). Column order
    /// follows `ids`; meta keeps only the selected learners.
    pub fn restrict(&self, ids: &[String]) -> Result<DatasetBundle, DataError> {
        let meta = ids
            .iter()
            .map(|id| {
                self.learner_meta(id)
                    .cloned()
                    .ok_or_else(|| DataError::UnknownLearner(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        DatasetBundle::new(meta, self.validation.select(ids)?, self.test.select(ids)?)
    }
}

/// Fraction of rows where the learner's prediction equals gold.
pub fn learner_accuracy(matrix: &PredictionMatrix, learner_id: &str) -> Result<f64, DataError> {
    let i = matrix
        .column_index(learner_id)
        .ok_or_else(|| DataError::UnknownLearner(learner_id.to_string()))?;
    Ok(matrix.correct_count_at(i) as f64 / matrix.len() as f64)
}

/// Learner ids by validation accuracy, best first. Ties go to the
/// lexicographically smaller id.
pub fn rank_learners(bundle: &DatasetBundle) -> Vec<String> {
    let v = bundle.validation();
    let mut scored: Vec<(u64, &String)> = v
        .learner_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (v.correct_count_at(i), id))
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().map(|(_, id)| id.clone()).collect()
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accuracy_counts() {
        let gold = [0, 1, 1, 0];
        let v = matrix(
            Split::Validation,
            2,
            &gold,
            &[("same", &[0, 1, 1, 0]), ("half", &[0, 1, 0, 1])],
        );
        assert_eq!(learner_accuracy(&v, "same").unwrap(), 1.0);
        assert_eq!(learner_accuracy(&v, "half").unwrap(), 0.5);
        assert!(matches!(learner_accuracy(&v, "nope"), Err(DataError::UnknownLearner(_))));
    }

    #[test]
    fn accuracy_ten_row_fixture() {
        // matches on rows 0,1,2,4,5,7,9
        let gold = [0, 1, 0, 1, 1, 0, 0, 1, 1, 0];
        let col = [0, 1, 0, 0, 1, 0, 1, 1, 0, 0];
        let v = matrix(Split::Validation, 2, &gold, &[("a", &col)]);
        assert_eq!(learner_accuracy(&v, "a").unwrap(), 0.7);
    }

    #[test]
    fn ranking_orders_by_accuracy_then_id() {
        use LearnerCategory::*;
        let gold: Vec<Label> = vec![0; 20];
        let a: Vec<Label> = (0..20).map(|i| u32::from(i >= 18)).collect(); // 0.9
        let b: Vec<Label> = (0..20).map(|i| u32::from(i >= 19)).collect(); // 0.95
        let c: Vec<Label> = (0..20).map(|i| u32::from(i >= 16)).collect(); // 0.8
        let bundle = bundle(2, &gold, &[("a", Bow, &a), ("b", Bow, &b), ("c", Bow, &c)]);
        assert_eq!(rank_learners(&bundle), ["b", "a", "c"]);

        let tie = bundle_from(&gold, &[("x", &a), ("a", &a)]);
        assert_eq!(rank_learners(&tie), ["a", "x"]);

        let single = bundle_from(&gold, &[("only", &a)]);
        assert_eq!(rank_learners(&single), ["only"]);
    }

    fn bundle_from(gold: &[Label], cols: &[(&str, &[Label])]) -> DatasetBundle {
        let with_cat: Vec<(&str, LearnerCategory, &[Label])> = cols
            .iter()
            .map(|(id, c)| (*id, LearnerCategory::Transformer, *c))
            .collect();
        bundle(2, gold, &with_cat)
    }

    #[test]
    fn matrix_rejects_bad_labels_and_lengths() {
        let err = PredictionMatrix::new(
            Split::Validation,
            2,
            vec!["a".into()],
            vec![2],
            vec![],
        )
        .unwrap_err();
        assert!(err.to_string().contains("label out of range"), "{err}");
        let err = PredictionMatrix::new(
            Split::Validation,
            2,
            vec!["a".into(), "b".into()],
            vec![0, 1],
            vec![("x".into(), vec![0])],
        )
        .unwrap_err();
        assert!(err.to_string().contains("expected 2"), "{err}");
    }

    #[test]
    fn bundle_rejects_mismatched_learners() {
        let m = meta(&[("a", LearnerCategory::Bow), ("b", LearnerCategory::Bow)]);
        let v = matrix(Split::Validation, 2, &[0, 1], &[("a", &[0, 1])]);
        let t = matrix(Split::Test, 2, &[0, 1], &[("a", &[0, 1]), ("b", &[1, 1])]);
        let err = DatasetBundle::new(m, v, t).unwrap_err();
        assert!(err.to_string().contains("learner-id set mismatch"), "{err}");
    }

    #[test]
    fn restrict_keeps_requested_order() {
        use LearnerCategory::*;
        let b = bundle(2, &[0, 1], &[("a", Bow, &[0, 1]), ("b", Lexicon, &[1, 1]), ("c", Transformer, &[0, 0])]);
        let r = b.restrict(&["c".into(), "a".into()]).unwrap();
        assert_eq!(r.learner_ids(), ["c", "a"]);
        assert_eq!(r.column_categories(), [Transformer, Bow]);
        assert!(b.restrict(&["zz".into()]).is_err());
    }

    proptest! {
        #[test]
        fn accuracy_is_row_permutation_invariant(
            rows in prop::collection::vec((0u32..3, 0u32..3), 1..60),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let gold: Vec<Label> = rows.iter().map(|r| r.0).collect();
            let col: Vec<Label> = rows.iter().map(|r| r.1).collect();
            let before = learner_accuracy(&matrix(Split::Validation, 3, &gold, &[("a", &col)]), "a").unwrap();
            let mut perm: Vec<usize> = (0..rows.len()).collect();
            perm.shuffle(&mut crate::rng::stream(seed, 0, 0));
            let g2: Vec<Label> = perm.iter().map(|&i| gold[i]).collect();
            let c2: Vec<Label> = perm.iter().map(|&i| col[i]).collect();
            let after = learner_accuracy(&matrix(Split::Validation, 3, &g2, &[("a", &c2)]), "a").unwrap();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn ranking_is_sorted_permutation(
            cols in prop::collection::vec(prop::collection::vec(0u32..2, 12), 1..8),
        ) {
            let gold: Vec<Label> = (0..12).map(|i| (i % 2) as Label).collect();
            let ids: Vec<String> = (0..cols.len()).map(|i| format!("l{i}")).collect();
            let spec: Vec<(&str, LearnerCategory, &[Label])> = ids
                .iter()
                .zip(&cols)
                .map(|(id, c)| (id.as_str(), LearnerCategory::Bow, c.as_slice()))
                .collect();
            let b = bundle(2, &gold, &spec);
            let ranked = rank_learners(&b);
            let mut sorted_ranked = ranked.clone();
            sorted_ranked.sort();
            let mut sorted_ids = ids.clone();
            sorted_ids.sort();
            prop_assert_eq!(sorted_ranked, sorted_ids);
            let accs: Vec<f64> = ranked.iter().map(|id| learner_accuracy(b.validation(), id).unwrap()).collect();
            prop_assert!(accs.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
