//! Exact influence distribution for small Grab A Chair instances by forward
//! enumeration over the non-local state.
//!
//! The non-local state is the tuple of per-side counts kept by agents
//! `1..N-1`; their obtained bits do not carry over between steps, and their
//! noisy observations can be marginalized into the count update, so a
//! distribution over count tuples is a sufficient statistic. Each history step
//! `(a_k, x_{k+1})` filters and reweights that distribution; the query then
//! mixes the two neighbors' policies over it.

use std::collections::HashMap;

use thiserror::Error;

use crate::gac::{other_agent_policy, target_chair, GacConfig, Side, SideCounts};
use crate::sim::ActionId;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exact enumeration supports at most 5 agents, got {0}")]
    TooManyAgents(usize),
    #[error("exact enumeration supports histories shorter than 6 steps, got {0}")]
    HistoryTooLong(usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("history has zero probability under the model")]
    ImpossibleHistory,
}

/// Joint distribution over `(contest_left, contest_right)` after the given
/// local history of `(action, next local state)` pairs, indexed
/// `contest_left as usize + 2 * contest_right as usize`.
pub fn exact_influence_gac(
    cfg: &GacConfig,
    history: &[(ActionId, bool)],
) -> Result<[f64; 4], OracleError> {
    cfg.validate().map_err(OracleError::BadConfig)?;
    if cfg.n_agents > 5 {
        return Err(OracleError::TooManyAgents(cfg.n_agents));
    }
    if history.len() >= 6 || history.len() >= cfg.horizon {
        return Err(OracleError::HistoryTooLong(history.len()));
    }

    let n = cfg.n_agents;
    let m = n - 1; // non-planning agents, 1..N stored at index i-1
    let p = cfg.p;
    let f = cfg.obs_flip_prob;
    // Marginal probability of a noisy success observation, given whether the
    // agent's target was contested.
    let obs1 = |contested: bool| -> f64 {
        if contested {
            p * (1.0 - f) + (1.0 - p) * f
        } else {
            1.0 - f
        }
    };

    let mut dist: HashMap<Vec<SideCounts>, f64> = HashMap::new();
    dist.insert(vec![SideCounts::default(); m], 1.0);

    let mut actions = vec![Side::Left; n];
    for &(a, x_next) in history {
        actions[0] = Side::from_action(a);
        let mut next: HashMap<Vec<SideCounts>, f64> = HashMap::new();
        for (counts, w) in &dist {
            for mask in 0..1usize << m {
                let mut w_profile = *w;
                for j in 0..m {
                    let side = if mask >> j & 1 == 1 { Side::Right } else { Side::Left };
                    let (pl, pr) = other_agent_policy(&counts[j]);
                    w_profile *= if side == Side::Left { pl } else { pr };
                    actions[j + 1] = side;
                }
                if w_profile == 0.0 {
                    continue;
                }
                let mut targeting = vec![0u8; n];
                for (i, &s) in actions.iter().enumerate() {
                    targeting[target_chair(i, s, n)] += 1;
                }
                let contested =
                    |i: usize| targeting[target_chair(i, actions[i], n)] >= 2;
                // Likelihood of the observed local outcome.
                let w_x = if contested(0) {
                    if x_next { p } else { 1.0 - p }
                } else if x_next {
                    1.0
                } else {
                    0.0
                };
                if w_x == 0.0 {
                    continue;
                }
                // Each other agent's count update branches on its own noisy
                // observation, independently given the profile.
                for obs_mask in 0..1usize << m {
                    let mut w_obs = w_profile * w_x;
                    let mut updated = counts.clone();
                    for j in 0..m {
                        let o = obs_mask >> j & 1 == 1;
                        let q = obs1(contested(j + 1));
                        w_obs *= if o { q } else { 1.0 - q };
                        let side = actions[j + 1].index();
                        updated[j].visits[side] += 1;
                        updated[j].successes[side] += o as u32;
                    }
                    if w_obs > 0.0 {
                        *next.entry(updated).or_insert(0.0) += w_obs;
                    }
                }
            }
        }
        dist = next;
        if dist.is_empty() {
            return Err(OracleError::ImpossibleHistory);
        }
    }

    let mut joint = [0.0; 4];
    let mut total = 0.0;
    for (counts, w) in &dist {
        total += w;
        // contest_left: agent N-1 (index m-1) picks Right; contest_right:
        // agent 1 (index 0) picks Left.
        let (_, p_cl) = other_agent_policy(&counts[m - 1]);
        let (p_cr, _) = other_agent_policy(&counts[0]);
        for cl in 0..2 {
            for cr in 0..2 {
                let pl = if cl == 1 { p_cl } else { 1.0 - p_cl };
                let pr = if cr == 1 { p_cr } else { 1.0 - p_cr };
                joint[cl + 2 * cr] += w * pl * pr;
            }
        }
    }
    if total <= 0.0 {
        return Err(OracleError::ImpossibleHistory);
    }
    for v in &mut joint {
        *v /= total;
    }
    Ok(joint)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg3() -> GacConfig {
        GacConfig::new(3)
    }

    #[test]
    fn empty_history_is_uniform() {
        // Before any observation both neighbors follow the cold-start uniform
        // policy, independently.
        let joint = exact_influence_gac(&cfg3(), &[]).unwrap();
        for v in joint {
            assert!((v - 0.25).abs() < 1e-12, "{joint:?}");
        }
    }

    #[test]
    fn distribution_is_normalized() {
        let histories: Vec<Vec<(ActionId, bool)>> = vec![
            vec![(ActionId(0), false)],
            vec![(ActionId(1), true), (ActionId(0), false)],
            vec![(ActionId(0), true), (ActionId(1), true), (ActionId(0), false)],
        ];
        for h in &histories {
            let joint = exact_influence_gac(&cfg3(), h).unwrap();
            let sum: f64 = joint.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(joint.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn all_histories_valid_n3() {
        // Every syntactically possible length-<=3 history is either impossible
        // (probability zero) or yields a proper distribution.
        for len in 0..=3usize {
            for mask in 0..1usize << (2 * len) {
                let h: Vec<(ActionId, bool)> = (0..len)
                    .map(|k| (ActionId(mask >> (2 * k) & 1), mask >> (2 * k + 1) & 1 == 1))
                    .collect();
                match exact_influence_gac(&cfg3(), &h) {
                    Ok(joint) => {
                        let sum: f64 = joint.iter().sum();
                        assert!((sum - 1.0).abs() < 1e-9, "{h:?}: {joint:?}");
                    }
                    Err(OracleError::ImpossibleHistory) => {}
                    Err(e) => panic!("{h:?}: {e}"),
                }
            }
        }
    }

    #[test]
    fn rejects_large_instances() {
        assert!(matches!(
            exact_influence_gac(&GacConfig::new(6), &[]),
            Err(OracleError::TooManyAgents(6))
        ));
        let long: Vec<(ActionId, bool)> = vec![(ActionId(0), true); 6];
        assert!(matches!(
            exact_influence_gac(&cfg3(), &long),
            Err(OracleError::HistoryTooLong(6))
        ));
    }

    #[test]
    fn one_step_history_stays_uniform() {
        // After one step every neighbor has visited only one side, so its
        // policy is still the cold-start uniform one; conditioning on a single
        // step cannot move the next-step contest distribution.
        for h in [[(ActionId(0), false)], [(ActionId(1), true)]] {
            let joint = exact_influence_gac(&cfg3(), &h).unwrap();
            for v in joint {
                assert!((v - 0.25).abs() < 1e-12, "{joint:?}");
            }
        }
    }

    #[test]
    fn longer_histories_shift_the_posterior() {
        // Once count branches exist where both sides were visited, the greedy
        // neighbor policy breaks the symmetry: some history of length 2..=3
        // must yield a non-uniform contest distribution.
        let mut shifted = false;
        for len in 2..=3usize {
            for mask in 0..1usize << (2 * len) {
                let h: Vec<(ActionId, bool)> = (0..len)
                    .map(|k| (ActionId(mask >> (2 * k) & 1), mask >> (2 * k + 1) & 1 == 1))
                    .collect();
                if let Ok(joint) = exact_influence_gac(&cfg3(), &h) {
                    if joint.iter().any(|v| (v - 0.25).abs() > 0.01) {
                        shifted = true;
                    }
                }
            }
        }
        assert!(shifted, "no history moved the posterior off uniform");
    }
}
