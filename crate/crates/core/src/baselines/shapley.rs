//! Shapley values of the validation-accuracy game, and the weighted-vote
//! ensemble built from them.
//!
//! `v(S)` is the validation accuracy of `S` under majority voting (or under
//! accuracy weighting, see [`ShapleyGame`]), with `v(empty) = 0`. All
//! estimators accumulate integer correct-count differences and divide once
//! at the end, so sums do not depend on summation order.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{evaluate_ensemble, AggregationRule, VoteScheme, VoteTally, WeightNormalization, WeightVector};
use crate::data::DatasetBundle;
use crate::error::{Error, Result};
use crate::rng::{stream, tags};
use crate::solution::{Combiner, EnsembleSolution};

/// Largest learner count accepted by [`ShapleyMethod::Exact`].
pub const EXACT_LIMIT: usize = 16;

/// Inclusion probabilities for the multilinear estimator.
pub const MULTILINEAR_GRID: [f64; 10] = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyMethod {
    Exact,
    MonteCarlo,
    Multilinear,
    ExpectedMarginal,
}

impl ShapleyMethod {
    fn code(self) -> u64 {
        match self {
            ShapleyMethod::Exact => 0,
            ShapleyMethod::MonteCarlo => 1,
            ShapleyMethod::Multilinear => 2,
            ShapleyMethod::ExpectedMarginal => 3,
        }
    }
}

impl std::str::FromStr for ShapleyMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ShapleyMethod::Exact),
            "mc" | "monte_carlo" => Ok(ShapleyMethod::MonteCarlo),
            "multilinear" => Ok(ShapleyMethod::Multilinear),
            "emc" | "expected_marginal" => Ok(ShapleyMethod::ExpectedMarginal),
            _ => Err(Error::InvalidParameter(format!("unknown shapley method `{s}`"))),
        }
    }
}

/// Voting rule inside the characteristic function.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyGame {
    #[default]
    Majority,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapleyParams {
    pub method: ShapleyMethod,
    /// Permutations (Monte Carlo) or sampled coalitions (other samplers).
    pub samples: usize,
    pub seed: u64,
    pub game: ShapleyGame,
}

impl Default for ShapleyParams {
    fn default() -> Self {
        ShapleyParams {
            method: ShapleyMethod::MonteCarlo,
            samples: 1000,
            seed: 0,
            game: ShapleyGame::Majority,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    /// `(learner id, value)` in candidate order.
    pub values: Vec<(String, f64)>,
    pub method: ShapleyMethod,
    /// Coalition evaluations performed.
    pub evaluations: u64,
    pub samples: usize,
}

impl ShapleyResult {
    pub fn value(&self, id: &str) -> Option<f64> {
        self.values.iter().find(|(i, _)| i == id).map(|(_, v)| *v)
    }
}

struct Game<'m> {
    proto: VoteTally<'m>,
    cols: Vec<usize>,
    m: f64,
}

impl<'m> Game<'m> {
    fn new(bundle: &'m DatasetBundle, learners: &[String], game: ShapleyGame) -> Result<Self> {
        let v = bundle.validation();
        let scheme = match game {
            ShapleyGame::Majority => VoteScheme::Majority,
            ShapleyGame::Weighted => VoteScheme::wmv(bundle, WeightNormalization::Global),
        };
        Ok(Game {
            proto: VoteTally::new(v, &scheme)?,
            cols: v.resolve(learners)?,
            m: v.len() as f64,
        })
    }

    fn n(&self) -> usize {
        self.cols.len()
    }

    /// `v(S)` in correct rows for the coalition of local indices `set`.
    fn worth(&self, tally: &mut VoteTally<'m>, set: &[usize]) -> Result<i64> {
        tally.clear();
        for &i in set {
            tally.add(self.cols[i])?;
        }
        Ok(tally.correct_count()? as i64)
    }
}

fn exact(game: &Game<'_>) -> Result<(Vec<f64>, u64)> {
    let n = game.n();
    if n > EXACT_LIMIT {
        return Err(Error::ExactShapleyTooLarge(n));
    }
    // v over all masks, walked in Gray-code order: one add or remove per step
    let mut worth = vec![0i64; 1 << n];
    let mut tally = game.proto.clone();
    tally.clear();
    let mut mask = 0usize;
    for step in 1usize..(1 << n) {
        let bit = step.trailing_zeros() as usize;
        mask ^= 1 << bit;
        if mask >> bit & 1 == 1 {
            tally.add(game.cols[bit])?;
        } else {
            tally.remove(game.cols[bit])?;
        }
        worth[mask] = tally.correct_count()? as i64;
    }
    // weight of a coalition of size s not containing i: s! (n-s-1)! / n!
    let mut coef = vec![0.0; n.max(1)];
    for (s, c) in coef.iter_mut().enumerate().take(n) {
        let mut w = 1.0 / n as f64;
        for k in 1..=s {
            w *= k as f64 / (n - s + k - 1) as f64;
        }
        *c = w;
    }
    let values = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for s in 0..(1usize << n) {
                if s >> i & 1 == 0 {
                    let d = worth[s | 1 << i] - worth[s];
                    acc += coef[s.count_ones() as usize] * d as f64;
                }
            }
            acc / game.m
        })
        .collect();
    Ok((values, (1u64 << n) - 1))
}

/// Runs `per_sample` over sample indices in parallel and sums the integer
/// marginal vectors it returns.
fn sample_sum<'m, F>(game: &Game<'m>, count: usize, per_sample: F) -> Result<(Vec<i64>, u64)>
where
    F: Fn(&mut VoteTally<'m>, usize, &mut [i64]) -> Result<u64> + Sync + Send,
{
    let n = game.n();
    let add = |mut a: (Vec<i64>, u64), b: (Vec<i64>, u64)| {
        a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
        a.1 += b.1;
        a
    };
    (0..count)
        .into_par_iter()
        .map_init(
            || game.proto.clone(),
            |tally, s| {
                let mut out = vec![0i64; n];
                let evals = per_sample(tally, s, &mut out)?;
                Ok((out, evals))
            },
        )
        .try_reduce(|| (vec![0; n], 0), |a, b| Ok(add(a, b)))
}

fn monte_carlo(game: &Game<'_>, samples: usize, seed: u64) -> Result<(Vec<f64>, u64)> {
    let n = game.n();
    let (sums, evals) = sample_sum(game, samples, |tally, s, out| {
        let mut rng = stream(seed, tags::SHAPLEY, ShapleyMethod::MonteCarlo.code() << 56 | s as u64);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        tally.clear();
        let mut prev = 0i64;
        for &i in &perm {
            tally.add(game.cols[i])?;
            let cur = tally.correct_count()? as i64;
            out[i] += cur - prev;
            prev = cur;
        }
        Ok(n as u64)
    })?;
    let denom = samples as f64 * game.m;
    Ok((sums.iter().map(|&x| x as f64 / denom).collect(), evals))
}

/// For each grid point `q`, coalitions include every learner with
/// probability `q`; each learner's marginal against the rest of the
/// coalition is averaged, then averaged over the grid (midpoint rule for
/// the multilinear-extension integral).
fn multilinear(game: &Game<'_>, samples: usize, seed: u64) -> Result<(Vec<f64>, u64)> {
    let n = game.n();
    let per_q = (samples / MULTILINEAR_GRID.len()).max(1);
    let total = per_q * MULTILINEAR_GRID.len();
    let (sums, evals) = sample_sum(game, total, |tally, s, out| {
        let q = MULTILINEAR_GRID[s / per_q];
        let mut rng = stream(seed, tags::SHAPLEY, ShapleyMethod::Multilinear.code() << 56 | s as u64);
        let inside: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < q).collect();
        let base: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
        let v_base = game.worth(tally, &base)?;
        for i in 0..n {
            let col = game.cols[i];
            let d = if inside[i] {
                tally.remove(col)?;
                let without = tally.correct_count()? as i64;
                tally.add(col)?;
                v_base - without
            } else {
                tally.add(col)?;
                let with = tally.correct_count()? as i64;
                tally.remove(col)?;
                with - v_base
            };
            out[i] += d;
        }
        Ok(n as u64 + 1)
    })?;
    let denom = total as f64 * game.m;
    Ok((sums.iter().map(|&x| x as f64 / denom).collect(), evals))
}

/// Stratified by coalition size: for learner `i` and size `k`, draws
/// coalitions of `k` other learners uniformly and averages `i`'s marginal;
/// the value is the mean over the `n` strata.
fn expected_marginal(game: &Game<'_>, samples: usize, seed: u64) -> Result<(Vec<f64>, u64)> {
    let n = game.n();
    let per_stratum = (samples / n).max(1);
    let jobs = n * n * per_stratum;
    let (sums, evals) = sample_sum(game, jobs, |tally, s, out| {
        let i = s / (n * per_stratum);
        let k = s / per_stratum % n;
        let mut rng = stream(seed, tags::SHAPLEY, ShapleyMethod::ExpectedMarginal.code() << 56 | s as u64);
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let coalition: Vec<usize> = others.choose_multiple(&mut rng, k).copied().collect();
        let without = game.worth(tally, &coalition)?;
        tally.add(game.cols[i])?;
        let with = tally.correct_count()? as i64;
        out[i] += with - without;
        Ok(2)
    })?;
    let denom = (n * per_stratum) as f64 * game.m;
    Ok((sums.iter().map(|&x| x as f64 / denom).collect(), evals))
}

/// Shapley values of `learners` (validation split).
pub fn shapley_values(bundle: &DatasetBundle, learners: &[String], params: &ShapleyParams) -> Result<ShapleyResult> {
    if learners.is_empty() {
        return Err(Error::EmptyLearnerSet);
    }
    if params.samples < 1 && params.method != ShapleyMethod::Exact {
        return Err(Error::InvalidParameter("shapley sample count must be >= 1".into()));
    }
    let game = Game::new(bundle, learners, params.game)?;
    let (values, evaluations) = match params.method {
        ShapleyMethod::Exact => exact(&game)?,
        ShapleyMethod::MonteCarlo => monte_carlo(&game, params.samples, params.seed)?,
        ShapleyMethod::Multilinear => multilinear(&game, params.samples, params.seed)?,
        ShapleyMethod::ExpectedMarginal => expected_marginal(&game, params.samples, params.seed)?,
    };
    Ok(ShapleyResult {
        values: learners.iter().cloned().zip(values).collect(),
        method: params.method,
        evaluations,
        samples: params.samples,
    })
}

/// Weighted vote over learners with positive value; weight proportional to
/// the value.
pub fn shapley_construct_from(bundle: &DatasetBundle, result: &ShapleyResult) -> Result<EnsembleSolution> {
    let positive: Vec<(String, f64)> = result.values.iter().filter(|(_, v)| *v > 0.0).cloned().collect();
    if positive.is_empty() {
        return Err(Error::NoPositiveShapley);
    }
    let w = WeightVector::from_f64(&positive)?;
    // quantization can round a tiny value to zero weight
    let members: Vec<String> = positive
        .iter()
        .filter(|(id, _)| w.units_of(id).unwrap_or(0) > 0)
        .map(|(id, _)| id.clone())
        .collect();
    let w = if members.len() == positive.len() {
        w
    } else {
        let kept: Vec<(String, f64)> = positive.into_iter().filter(|(id, _)| members.contains(id)).collect();
        WeightVector::from_f64(&kept)?
    };
    let rule = AggregationRule::Weighted(w);
    let score = evaluate_ensemble(bundle.validation(), &members, &rule)?;
    Ok(EnsembleSolution::new(members, Combiner::Vote(rule), score))
}

pub fn shapley_construct(bundle: &DatasetBundle, candidates: &[String], params: &ShapleyParams) -> Result<EnsembleSolution> {
    shapley_construct_from(bundle, &shapley_values(bundle, candidates, params)?)
}
