use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{HecConfig, SeedSubset};
use crate::aggregation::VoteTally;
use crate::error::Result;
use crate::rng::StreamRng;

/// `delta_e >= 0`, or (outside greedy mode) `exp(delta_e / t) > u`.
pub fn acceptance_decision(delta_e: f64, temperature: f64, u: f64, greedy: bool) -> bool {
    delta_e >= 0.0 || (!greedy && (delta_e / temperature).exp() > u)
}

/// One examined candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seed_index: u64,
    pub candidate_id: String,
    pub delta_e: f64,
    /// Temperature at which the decision was taken (before cooling).
    pub temperature: f64,
    pub u: f64,
    pub accepted: bool,
    /// Highest score seen on this trajectory so far, including this step.
    pub trajectory_max: f64,
}

/// Where one seed's annealing run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// Column indices, seed first, then accepted candidates in order.
    pub members: Vec<usize>,
    pub correct: u64,
    pub evaluations: u64,
    pub examined: usize,
}

/// Annealed extension of `seed` along `order` (columns in ranked order).
/// `tally` is cleared first and holds the final members on return.
pub fn anneal_extend(
    tally: &mut VoteTally<'_>,
    seed: &SeedSubset,
    order: &[usize],
    config: &HecConfig,
    rng: &mut StreamRng,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> Result<Trajectory> {
    tally.clear();
    for &pos in &seed.members {
        tally.add(order[pos])?;
    }
    let m = tally.matrix().len() as f64;
    let mut previous = tally.correct_count()?;
    let mut best_seen = previous;
    let mut evaluations = 1;
    let mut examined = 0;
    let mut t = config.t_init;

    let mut in_seed = vec![false; order.len()];
    seed.members.iter().for_each(|&p| in_seed[p] = true);
    let rest = order.iter().enumerate().filter(|(p, _)| !in_seed[*p]).map(|(_, &c)| c);

    for col in rest {
        tally.add(col)?;
        let score = tally.correct_count()?;
        evaluations += 1;
        examined += 1;
        let delta_e = (score as f64 - previous as f64) / m;
        let u: f64 = rng.gen();
        let accepted = acceptance_decision(delta_e, t, u, config.greedy);
        if accepted {
            previous = score;
            best_seen = best_seen.max(score);
        } else {
            tally.remove(col)?;
        }
        if let Some(sink) = trace.as_deref_mut() {
            sink.push(TraceRecord {
                seed_index: seed.index,
                candidate_id: tally.matrix().learner_ids()[col].clone(),
                delta_e,
                temperature: t,
                u,
                accepted,
                trajectory_max: best_seen as f64 / m,
            });
        }
        t *= config.cooling_rate;
        if t <= config.t_min {
            break;
        }
    }
    Ok(Trajectory {
        members: tally.members().to_vec(),
        correct: previous,
        evaluations,
        examined,
    })
}
