//! Stacked generalization with a multinomial logistic-regression
//! meta-learner.
//!
//! Features are one-hot encodings of the members' votes plus a constant
//! bias: learner `j` voting `c` sets feature `j * C + c`, and feature `n * C`
//! is always 1, so `d = n * C + 1`. Parameters are a `C x d` matrix stored
//! row-major. Training minimizes
//!
//! `(1/m) sum_r -log softmax(W x_r)[y_r] + (l2/2) * |W without bias|^2`
//!
//! by full-batch gradient descent from zero.
//!
//! Each row has `n + 1` active unit features and the softmax Hessian in
//! logit space is bounded by `1/2`, so the objective is `L`-smooth with
//! `L <= (n + 1) / 2 + l2` and descent is monotone for
//! `learning_rate < 2 / L` (see [`stability_bound`]).

use serde::{Deserialize, Serialize};

use crate::aggregation::argmax_lowest;
use crate::data::{DataError, DatasetBundle, Label, PredictionMatrix};
use crate::error::{Error, Result};
use crate::solution::{Combiner, EnsembleSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackingParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for StackingParams {
    fn default() -> Self {
        StackingParams {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

impl StackingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter("stacking learning rate must be positive".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::InvalidParameter("stacking l2 must be >= 0".into()));
        }
        Ok(())
    }
}

/// Largest learning rate with guaranteed monotone descent for `n` learners.
pub fn stability_bound(n: usize, l2: f64) -> f64 {
    2.0 / ((n as f64 + 1.0) / 2.0 + l2)
}

/// The training objective over one matrix.
#[derive(Debug, Clone)]
pub struct StackingObjective<'m> {
    matrix: &'m PredictionMatrix,
    cols: Vec<usize>,
    l2: f64,
}

impl<'m> StackingObjective<'m> {
    pub fn new(matrix: &'m PredictionMatrix, learners: &[String], l2: f64) -> Result<Self> {
        Ok(StackingObjective {
            matrix,
            cols: matrix.resolve(learners)?,
            l2,
        })
    }

    pub fn classes(&self) -> usize {
        self.matrix.class_count()
    }

    /// Feature count `d = n * C + 1`.
    pub fn dim(&self) -> usize {
        self.cols.len() * self.classes() + 1
    }

    pub fn param_count(&self) -> usize {
        self.classes() * self.dim()
    }

    fn active(&self, r: usize, out: &mut Vec<usize>) {
        let c = self.classes();
        out.clear();
        out.extend(
            self.cols
                .iter()
                .enumerate()
                .map(|(j, &col)| j * c + self.matrix.column_at(col)[r] as usize),
        );
        out.push(self.cols.len() * c);
    }

    fn logits(&self, w: &[f64], active: &[usize], out: &mut [f64]) {
        let d = self.dim();
        for (k, z) in out.iter_mut().enumerate() {
            *z = active.iter().map(|&f| w[k * d + f]).sum();
        }
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        let d = self.dim();
        let sq: f64 = w
            .iter()
            .enumerate()
            .filter(|(i, _)| i % d != d - 1)
            .map(|(_, x)| x * x)
            .sum();
        0.5 * self.l2 * sq
    }

    /// Regularized mean cross-entropy at `w`.
    pub fn loss(&self, w: &[f64]) -> f64 {
        self.loss_and_gradient(w, false).0
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.loss_and_gradient(w, true).1
    }

    pub fn loss_and_gradient(&self, w: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (c, d, m) = (self.classes(), self.dim(), self.matrix.len());
        let mut grad = vec![0.0; if want_grad { c * d } else { 0 }];
        let mut active = Vec::with_capacity(self.cols.len() + 1);
        let mut z = vec![0.0; c];
        let mut total = 0.0;
        for r in 0..m {
            self.active(r, &mut active);
            self.logits(w, &active, &mut z);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
            let lse = max + sum.ln();
            let y = self.matrix.gold()[r] as usize;
            total += lse - z[y];
            if want_grad {
                for k in 0..c {
                    let p = (z[k] - lse).exp() - f64::from(u8::from(k == y));
                    for &f in &active {
                        grad[k * d + f] += p;
                    }
                }
            }
        }
        let mf = m as f64;
        if want_grad {
            for (i, g) in grad.iter_mut().enumerate() {
                *g /= mf;
                if i % d != d - 1 {
                    *g += self.l2 * w[i];
                }
            }
        }
        (total / mf + self.penalty(w), grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub learners: Vec<String>,
    pub class_count: usize,
    /// `C x (n * C + 1)`, row-major.
    pub weights: Vec<f64>,
    pub params: StackingParams,
    /// Training loss before the first step and after each epoch.
    pub loss_history: Vec<f64>,
}

impl StackingModel {
    fn dim(&self) -> usize {
        self.learners.len() * self.class_count + 1
    }

    /// Zero weights: every row predicts class 0.
    pub fn zeros(learners: Vec<String>, class_count: usize, params: StackingParams) -> Self {
        let d = learners.len() * class_count + 1;
        StackingModel {
            learners,
            class_count,
            weights: vec![0.0; class_count * d],
            params,
            loss_history: Vec::new(),
        }
    }

    /// Per-row class scores (logits).
    pub fn scores(&self, matrix: &PredictionMatrix) -> Result<Vec<Vec<f64>>> {
        let cols = self.check(matrix)?;
        let (c, d) = (self.class_count, self.dim());
        Ok((0..matrix.len())
            .map(|r| {
                (0..c)
                    .map(|k| {
                        let row = &self.weights[k * d..(k + 1) * d];
                        let votes: f64 = cols
                            .iter()
                            .enumerate()
                            .map(|(j, &col)| row[j * c + matrix.column_at(col)[r] as usize])
                            .sum();
                        votes + row[d - 1]
                    })
                    .collect()
            })
            .collect())
    }

    pub fn predict(&self, matrix: &PredictionMatrix) -> Result<Vec<Label>> {
        Ok(self
            .scores(matrix)?
            .iter()
            .map(|z| argmax_lowest(z) as Label)
            .collect())
    }

    fn check(&self, matrix: &PredictionMatrix) -> Result<Vec<usize>> {
        if matrix.class_count() != self.class_count {
            return Err(Error::InvalidParameter(format!(
                "model has {} classes, matrix has {}",
                self.class_count,
                matrix.class_count()
            )));
        }
        matrix.resolve(&self.learners).map_err(|e| {
            DataError::LearnerSetMismatch {
                detail: format!("stacking model input: {e}"),
            }
            .into()
        })
    }
}

/// Fits on the validation split over `learners`.
pub fn stacking_fit(bundle: &DatasetBundle, learners: &[String], params: &StackingParams) -> Result<StackingModel> {
    params.validate()?;
    if learners.is_empty() {
        return Err(Error::EmptyLearnerSet);
    }
    let obj = StackingObjective::new(bundle.validation(), learners, params.l2)?;
    let mut model = StackingModel::zeros(learners.to_vec(), bundle.class_count(), *params);
    let (mut loss, mut grad) = obj.loss_and_gradient(&model.weights, params.epochs > 0);
    model.loss_history.push(loss);
    for epoch in 1..=params.epochs {
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= params.learning_rate * g;
        }
        (loss, grad) = obj.loss_and_gradient(&model.weights, epoch < params.epochs);
        if !loss.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergent { epoch, loss });
        }
        model.loss_history.push(loss);
    }
    Ok(model)
}

/// Stacking over every candidate; all candidates are members.
pub fn stacking_construct(
    bundle: &DatasetBundle,
    candidates: &[String],
    params: &StackingParams,
) -> Result<EnsembleSolution> {
    let model = stacking_fit(bundle, candidates, params)?;
    let v = bundle.validation();
    let score = crate::aggregation::accuracy(&model.predict(v)?, v.gold());
    Ok(EnsembleSolution::new(candidates.to_vec(), Combiner::Stacking(model), score))
}
