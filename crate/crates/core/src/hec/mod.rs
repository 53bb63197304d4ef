//! Hierarchical ensemble construction.
//!
//! Every subset of the ranked learner list `L` with at most `S` members is a
//! seed. From each seed the remaining learners are offered in `L` order; a
//! candidate is kept when the validation score does not drop, or with
//! probability `exp(dE / T)` when it does, and `T` cools geometrically after
//! every candidate until it reaches `T_min`. The final member set with the
//! highest score wins (the earliest seed on ties) and is combined by
//! accuracy-weighted voting.
//!
//! Seeds are independent: each one gets its own random stream, derived from
//! the master seed and the seed's ordinal, so the result does not depend on
//! how seeds are spread over threads.

mod anneal;
mod seeds;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use anneal::{acceptance_decision, anneal_extend, TraceRecord, Trajectory};
pub use seeds::{binomial, enumerate_seeds, seed_count, SeedEnumerator, SeedSubset};

use crate::aggregation::{wmv_construct, AggregationRule, VoteScheme, VoteTally, WeightNormalization};
use crate::data::{rank_learners, DatasetBundle};
use crate::error::{Error, Result};
use crate::rng::{stream, tags};
use crate::solution::{Combiner, EnsembleSolution};

/// Voting rule used to score intermediate ensembles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchRule {
    #[default]
    Weighted,
    Majority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HecConfig {
    /// Largest seed size `S`.
    pub max_seed_size: usize,
    pub t_init: f64,
    pub t_min: f64,
    pub cooling_rate: f64,
    pub master_seed: u64,
    /// Reject every worsening move.
    pub greedy: bool,
    pub search_rule: SearchRule,
    pub normalization: WeightNormalization,
    pub record_trace: bool,
}

impl Default for HecConfig {
    fn default() -> Self {
        HecConfig {
            max_seed_size: 3,
            t_init: 0.8,
            t_min: 0.1,
            cooling_rate: 0.8,
            master_seed: 0,
            greedy: false,
            search_rule: SearchRule::Weighted,
            normalization: WeightNormalization::Global,
            record_trace: false,
        }
    }
}

impl HecConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.t_init.is_finite() && self.t_init > 0.0) {
            return bad("t_init must be a positive number");
        }
        if !(self.t_min.is_finite() && self.t_min > 0.0) {
            return bad("t_min must be a positive number");
        }
        if self.t_min > self.t_init {
            return bad("t_min must not exceed t_init");
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return bad("cooling_rate must lie in (0, 1)");
        }
        Ok(())
    }

    /// Upper bound on candidates examined from one seed, before capping by
    /// the number of candidates left.
    pub fn max_candidates_per_seed(&self) -> usize {
        let steps = (self.t_min / self.t_init).ln() / self.cooling_rate.ln();
        1 + steps.floor().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HecStats {
    pub seeds: u64,
    /// Ensemble scorings, including each seed's initial one.
    pub evaluations: u64,
    pub candidates_examined: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HecOutcome {
    pub solution: EnsembleSolution,
    pub stats: HecStats,
}

/// Runs the search on the current rayon pool.
pub fn hec_search(bundle: &DatasetBundle, config: &HecConfig) -> Result<HecOutcome> {
    config.validate()?;
    let v = bundle.validation();
    let n = bundle.learner_count();
    if n == 0 {
        return Err(Error::EmptyLearnerSet);
    }
    let order: Vec<usize> = rank_learners(bundle)
        .iter()
        .map(|id| v.column_index(id).expect("ranked ids are columns"))
        .collect();
    let scheme = match config.search_rule {
        SearchRule::Weighted => VoteScheme::wmv(bundle, config.normalization),
        SearchRule::Majority => VoteScheme::Majority,
    };
    let proto = VoteTally::new(v, &scheme)?;
    let seeds: Vec<SeedSubset> = enumerate_seeds(n, config.max_seed_size)?.collect();

    let runs = seeds
        .par_iter()
        .map_init(
            || proto.clone(),
            |tally, seed| {
                let mut rng = stream(config.master_seed, tags::HEC, seed.index);
                let mut trace = config.record_trace.then(Vec::new);
                let t = anneal_extend(tally, seed, &order, config, &mut rng, trace.as_mut())?;
                Ok((t, trace))
            },
        )
        .collect::<Result<Vec<(Trajectory, Option<Vec<TraceRecord>>)>>>()?;

    let mut stats = HecStats::default();
    let mut best: Option<&Trajectory> = None;
    let mut best_correct = 0;
    let mut trace = config.record_trace.then(Vec::new);
    for (t, tr) in &runs {
        stats.seeds += 1;
        stats.evaluations += t.evaluations;
        stats.candidates_examined += t.examined as u64;
        if t.correct > best_correct {
            best_correct = t.correct;
            best = Some(t);
        }
        if let (Some(all), Some(tr)) = (trace.as_mut(), tr) {
            all.extend_from_slice(tr);
        }
    }

    let mut solution = match best {
        Some(t) => {
            let ids: Vec<String> = t.members.iter().map(|&c| v.learner_ids()[c].clone()).collect();
            wmv_construct(bundle, &ids, config.normalization)?
        }
        None => EnsembleSolution::new(Vec::new(), Combiner::Vote(AggregationRule::Majority), 0.0),
    };
    solution.trace = trace;
    Ok(HecOutcome { solution, stats })
}

pub fn hec_construct(bundle: &DatasetBundle, config: &HecConfig) -> Result<EnsembleSolution> {
    hec_search(bundle, config).map(|o| o.solution)
}

/// Writes trace records as CSV; floats in shortest round-trip form.
pub fn write_trace_csv(records: &[TraceRecord], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        context: format!("writing trace {}", path.display()),
        source,
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "seed_index,candidate_id,delta_e,temperature,u,accepted,trajectory_max").map_err(io)?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.seed_index, r.candidate_id, r.delta_e, r.temperature, r.u, r.accepted, r.trajectory_max
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{evaluate_ensemble, learner_weights, validation_accuracies};
    use crate::data::fixtures::bundle;
    use crate::data::{generate_synthetic, LearnerCategory, SyntheticLearner, SyntheticSpec};

    fn synth(n: usize, seed: u64) -> DatasetBundle {
        let learners = (0..n)
            .map(|i| SyntheticLearner {
                id: format!("s{i}"),
                name: None,
                category: LearnerCategory::ALL[i % 4],
                target_accuracy: 0.55 + 0.05 * i as f64,
                correlation_group: (i % 2 == 0).then(|| "even".into()),
                within_group_agreement: 0.4,
            })
            .collect();
        generate_synthetic(&SyntheticSpec {
            class_count: 2,
            example_count: 400,
            test_example_count: None,
            learners,
            rng_seed: seed,
        })
        .unwrap()
    }

    fn greedy(s: usize) -> HecConfig {
        HecConfig {
            max_seed_size: s,
            greedy: true,
            ..HecConfig::default()
        }
    }

    #[test]
    fn default_schedule_examines_ten() {
        let c = HecConfig::default();
        assert_eq!(c.max_candidates_per_seed(), 10);
        let mut t = c.t_init;
        let mut steps = 0;
        loop {
            steps += 1;
            t *= c.cooling_rate;
            if t <= c.t_min {
                break;
            }
        }
        assert_eq!(steps, 10);
    }

    #[test]
    fn config_validation() {
        assert!(HecConfig { t_min: 0.9, ..HecConfig::default() }.validate().is_err());
        assert!(HecConfig { cooling_rate: 1.0, ..HecConfig::default() }.validate().is_err());
        assert!(HecConfig { t_init: 0.0, ..HecConfig::default() }.validate().is_err());
    }

    #[test]
    fn perfect_single_learner() {
        let gold = [0, 1, 1, 0];
        let b = bundle(2, &gold, &[("p", LearnerCategory::Transformer, &gold)]);
        let s = hec_construct(&b, &greedy(1)).unwrap();
        assert_eq!(s.validation_score, 1.0);
        assert_eq!(s.members, ["p"]);
    }

    #[test]
    fn perfect_seed_stays_perfect_in_greedy_mode() {
        let gold = [0, 1, 1, 0, 1, 0];
        let b = bundle(
            2,
            &gold,
            &[
                ("p", LearnerCategory::Transformer, &gold),
                ("a", LearnerCategory::Bow, &[1, 1, 1, 0, 1, 1]),
                ("c", LearnerCategory::Lexicon, &[0, 0, 0, 0, 1, 0]),
                ("d", LearnerCategory::Bow, &[0, 1, 1, 1, 1, 0]),
            ],
        );
        let v = b.validation();
        let mut tally = VoteTally::new(v, &VoteScheme::wmv(&b, WeightNormalization::Global)).unwrap();
        let seed = SeedSubset { index: 0, members: vec![0] };
        let mut rng = stream(1, tags::HEC, 0);
        let mut trace = Vec::new();
        let t = anneal_extend(&mut tally, &seed, &[0, 1, 2, 3], &greedy(1), &mut rng, Some(&mut trace)).unwrap();
        assert_eq!(t.correct, 6);
        assert_eq!(trace.len(), 3);
        for r in &trace {
            assert!(r.delta_e <= 0.0);
            assert_eq!(r.accepted, r.delta_e == 0.0);
        }
    }

    #[test]
    fn empty_seed_accepts_first_candidate() {
        let b = synth(5, 2);
        let v = b.validation();
        let order: Vec<usize> = (0..5).collect();
        let mut tally = VoteTally::new(v, &VoteScheme::Majority).unwrap();
        let mut rng = stream(0, tags::HEC, 0);
        let mut trace = Vec::new();
        let seed = SeedSubset { index: 0, members: vec![] };
        anneal_extend(&mut tally, &seed, &order, &HecConfig::default(), &mut rng, Some(&mut trace)).unwrap();
        assert!(trace[0].accepted && trace[0].delta_e >= 0.0);
        assert_eq!(trace.len(), 5);
    }

    #[test]
    fn stochastic_acceptances_respect_the_rule() {
        let b = synth(8, 9);
        let s = hec_construct(
            &b,
            &HecConfig {
                max_seed_size: 2,
                record_trace: true,
                ..HecConfig::default()
            },
        )
        .unwrap();
        let trace = s.trace.unwrap();
        assert!(trace.iter().any(|r| r.accepted && r.delta_e < 0.0));
        for r in trace.iter().filter(|r| r.delta_e < 0.0) {
            assert_eq!(r.accepted, (r.delta_e / r.temperature).exp() > r.u);
        }
    }

    #[test]
    fn greedy_beats_best_single_and_bounded_by_exhaustive() {
        for seed in 0..4 {
            let b = synth(8, seed);
            let s = hec_construct(&b, &greedy(2)).unwrap();
            let v = b.validation();
            let best_single = (0..8).map(|c| v.correct_count_at(c)).max().unwrap() as f64 / v.len() as f64;
            assert!(s.validation_score >= best_single);
            let ids = v.learner_ids();
            let mut optimum: f64 = 0.0;
            for mask in 1u32..256 {
                let members: Vec<String> = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| ids[i].clone()).collect();
                let w = learner_weights(&validation_accuracies(&b, &members).unwrap(), WeightNormalization::Global).unwrap();
                optimum = optimum.max(evaluate_ensemble(v, &members, &AggregationRule::Weighted(w)).unwrap());
            }
            assert!(s.validation_score <= optimum);
        }
    }

    #[test]
    fn score_matches_reevaluation_and_runs_repeat() {
        let b = synth(8, 11);
        let c = HecConfig {
            max_seed_size: 2,
            record_trace: true,
            master_seed: 5,
            ..HecConfig::default()
        };
        let a = hec_search(&b, &c).unwrap();
        let again = hec_search(&b, &c).unwrap();
        assert_eq!(a, again);
        let s = &a.solution;
        let rescored = evaluate_ensemble(b.validation(), &s.members, s.rule().unwrap()).unwrap();
        assert_eq!(s.validation_score, rescored);
        assert_eq!(a.stats.seeds, seed_count(8, 2).unwrap());
        let cap = c.max_candidates_per_seed() as u64;
        assert!(a.stats.candidates_examined <= a.stats.seeds * cap);
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let b = synth(8, 3);
        let c = HecConfig {
            max_seed_size: 3,
            record_trace: true,
            ..HecConfig::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| hec_search(&b, &c).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn zero_seed_size_processes_one_seed() {
        let b = synth(4, 1);
        let o = hec_search(&b, &greedy(0)).unwrap();
        assert_eq!(o.stats.seeds, 1);
        assert!(hec_search(&b, &greedy(5)).is_err());
    }
}
