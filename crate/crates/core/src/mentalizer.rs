//! Satisficing theory of mind: infer the partner's intention and goal from
//! its last action by asking what this agent itself would have done.

use serde::{Deserialize, Serialize};

use crate::agent::affordance::{intention_affordance, AffordanceConfig};
use crate::belief::{BeliefDistribution, LikelihoodMatrix};
use crate::error::{Error, Result};
use crate::intention::{Intention, IntentionSet, GOAL_DOMAIN, INTENTION_DOMAIN};
use crate::kitchen::{AgentId, LowAction, Observation};
use crate::planner::Perception;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomConfig {
    /// Likelihood of the observed action when it matches the prediction.
    pub alpha: f64,
    /// Softmax strength.
    pub beta: f64,
    pub mu: f64,
}

impl Default for TomConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 2.0,
            mu: 0.1,
        }
    }
}

impl TomConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!("tom.alpha must be in (0,1], got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("tom.beta must be >= 0, got {}", self.beta)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::config(format!("tom.mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }
}

/// What one agent believes about its partner.
#[derive(Clone, Debug, PartialEq)]
pub struct InferredMind {
    pub intention_belief: BeliefDistribution,
    pub goal_belief: BeliefDistribution,
}

impl InferredMind {
    pub fn uniform(set: &IntentionSet) -> Self {
        Self {
            intention_belief: BeliefDistribution::uniform(INTENTION_DOMAIN, set.len()),
            goal_belief: BeliefDistribution::uniform(GOAL_DOMAIN, set.goals.len()),
        }
    }
}

/// `alpha` on a match, the rest spread evenly over the other five actions.
pub fn action_likelihood(a: LowAction, a_star: LowAction, config: &TomConfig) -> f64 {
    if a == a_star {
        config.alpha
    } else {
        (1.0 - config.alpha) / (LowAction::ALL.len() - 1) as f64
    }
}

/// The action `actor` would take under `intention`, computed with this
/// agent's own affordance checks and planner. Inapplicable or unreachable
/// intentions predict `Wait`. The prediction does not depend on the goal:
/// goals act on behaviour only through which intention is active.
pub fn predict_action(
    perception: &Perception<'_>,
    intention: Intention,
    n_intentions: usize,
    affordance: &AffordanceConfig,
) -> LowAction {
    if intention != Intention::Wait && intention_affordance(perception, intention, n_intentions, affordance) <= 0.0 {
        return LowAction::Wait;
    }
    perception.next_action(intention)
}

/// Predicted action for every intention of the set, in set order.
pub fn predicted_actions(
    obs: &Observation,
    actor: AgentId,
    set: &IntentionSet,
    affordance: &AffordanceConfig,
) -> Vec<LowAction> {
    let perception = Perception::new(obs, actor);
    set.intentions
        .iter()
        .map(|i| predict_action(&perception, *i, set.len(), affordance))
        .collect()
}

/// The inference proper, given one predicted action per intention.
///
/// `L(i,g) = P(a | a*_i) P(i|g) P(g)`, marginalized onto each layer, then
/// sharpened with `exp(beta (P + mu))` and normalized.
pub fn tom_posterior(
    prev_goal: &BeliefDistribution,
    predicted: &[LowAction],
    observed: LowAction,
    config: &TomConfig,
    goal_to_intention: &LikelihoodMatrix,
) -> Result<InferredMind> {
    let n_goals = prev_goal.len();
    let n_int = predicted.len();
    if goal_to_intention.rows().len() != n_goals || goal_to_intention.to_len() != n_int {
        return Err(Error::SizeMismatch {
            domain: INTENTION_DOMAIN.into(),
            expected: n_int,
            found: goal_to_intention.to_len(),
        });
    }
    let mut by_intention = vec![0.0; n_int];
    let mut by_goal = vec![0.0; n_goals];
    for (i, a_star) in predicted.iter().enumerate() {
        let lik = action_likelihood(observed, *a_star, config);
        for (g, goal_p) in prev_goal.probs().iter().enumerate() {
            let l = lik * goal_to_intention.get(g, i) * goal_p;
            by_intention[i] += l;
            by_goal[g] += l;
        }
    }
    Ok(InferredMind {
        intention_belief: sharpen(INTENTION_DOMAIN, &by_intention, config)?,
        goal_belief: sharpen(GOAL_DOMAIN, &by_goal, config)?,
    })
}

fn sharpen(domain: &str, joint: &[f64], config: &TomConfig) -> Result<BeliefDistribution> {
    let total: f64 = joint.iter().sum();
    let post: Vec<f64> = if total > 0.0 {
        joint.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / joint.len() as f64; joint.len()]
    };
    let weights = post.iter().map(|p| (config.beta * (p + config.mu)).exp()).collect();
    BeliefDistribution::new(domain, weights)
}

/// One inference step from the partner's last action, taken in `obs`.
pub fn tom_update(
    prev: &InferredMind,
    observed: LowAction,
    obs: &Observation,
    partner: AgentId,
    config: &TomConfig,
    set: &IntentionSet,
    affordance: &AffordanceConfig,
) -> Result<InferredMind> {
    let predicted = predicted_actions(obs, partner, set, affordance);
    tom_posterior(&prev.goal_belief, &predicted, observed, config, &set.goal_to_intention)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::kitchen::{builtin_layout, observe, Dir, DomainKind, ItemClass, KitchenState, Pos, Recipe};

    #[test]
    fn likelihood_values() {
        let c = TomConfig::default();
        assert_eq!(action_likelihood(LowAction::Up, LowAction::Up, &c), 0.9);
        assert!((action_likelihood(LowAction::Up, LowAction::Down, &c) - 0.02).abs() < 1e-15);
        let flat = TomConfig {
            alpha: 1.0 / 6.0,
            ..c
        };
        for a in LowAction::ALL {
            assert!((action_likelihood(a, LowAction::Wait, &flat) - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    fn cramped() -> KitchenState {
        let layout = Arc::new(builtin_layout("cramped").unwrap());
        KitchenState::new(layout, 2, &mut ChaCha8Rng::seed_from_u64(5))
    }

    #[test]
    fn predicts_interact_and_parking() {
        let mut s = cramped();
        s.agents[1].pos = Pos::new(1, 1);
        s.agents[1].facing = Dir::Left;
        s.agents[0].pos = Pos::new(4, 2);
        let obs = observe(&s, 0, false);
        let p = Perception::new(&obs, 1);
        let aff = AffordanceConfig::default();
        assert_eq!(predict_action(&p, Intention::GetItem(ItemClass::Onion), 17, &aff), LowAction::Interact);
        // Idle next to a dispenser: step away toward a free tile.
        assert_ne!(predict_action(&p, Intention::Wait, 17, &aff), LowAction::Wait);
        s.agents[1].pos = Pos::new(3, 1);
        let obs = observe(&s, 0, false);
        let p = Perception::new(&obs, 1);
        assert_eq!(predict_action(&p, Intention::Wait, 17, &aff), LowAction::Wait);
    }

    #[test]
    fn blocked_path_predicts_wait() {
        let text = "name=box; domain=soup\nXXXXXXX\nX1X2 DX\nXXXXPXX\n";
        let layout = Arc::new(crate::kitchen::Layout::parse(text).unwrap());
        let mut s = KitchenState::new(layout, 2, &mut ChaCha8Rng::seed_from_u64(5));
        s.pots[0] = crate::kitchen::PotState::Cooking {
            kind: crate::kitchen::Ingredient::Onion,
            remaining: 3,
        };
        let obs = observe(&s, 1, false);
        let p = Perception::new(&obs, 0);
        let aff = AffordanceConfig::default();
        assert_eq!(predict_action(&p, Intention::GetItem(ItemClass::Dish), 17, &aff), LowAction::Wait);
    }

    #[test]
    fn zero_beta_is_uniform() {
        let set = IntentionSet::for_layout(&builtin_layout("ring").unwrap());
        let cfg = TomConfig {
            beta: 0.0,
            ..TomConfig::default()
        };
        let prior = InferredMind::uniform(&set);
        let predicted = vec![LowAction::Up; set.len()];
        let m = tom_posterior(&prior.goal_belief, &predicted, LowAction::Down, &cfg, &set.goal_to_intention).unwrap();
        for p in m.intention_belief.probs() {
            assert!((p - 1.0 / set.len() as f64).abs() < 1e-15);
        }
        for p in m.goal_belief.probs() {
            assert!((p - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_likelihood_cancels() {
        let set = IntentionSet::for_layout(&builtin_layout("ring").unwrap());
        let cfg = TomConfig::default();
        let prior = InferredMind::uniform(&set);
        let a = tom_posterior(&prior.goal_belief, &vec![LowAction::Up; set.len()], LowAction::Up, &cfg, &set.goal_to_intention).unwrap();
        let b = tom_posterior(&prior.goal_belief, &vec![LowAction::Up; set.len()], LowAction::Left, &cfg, &set.goal_to_intention).unwrap();
        for (x, y) in a.intention_belief.probs().iter().zip(b.intention_belief.probs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    /// Oracle: straight-line enumeration over every (i, g) cell.
    fn oracle(
        prior_g: &[f64],
        table: &[Vec<f64>],
        predicted: &[LowAction],
        observed: LowAction,
        alpha: f64,
        beta: f64,
        mu: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let ni = predicted.len();
        let ng = prior_g.len();
        let mut cells = vec![vec![0.0; ng]; ni];
        let mut z = 0.0;
        for i in 0..ni {
            for g in 0..ng {
                let lik = if predicted[i] == observed { alpha } else { (1.0 - alpha) / 5.0 };
                cells[i][g] = lik * table[g][i] * prior_g[g];
                z += cells[i][g];
            }
        }
        let soft = |v: Vec<f64>| {
            let e: Vec<f64> = v.iter().map(|p| (beta * (p + mu)).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let pi = (0..ni).map(|i| cells[i].iter().sum::<f64>() / z).collect();
        let pg = (0..ng).map(|g| (0..ni).map(|i| cells[i][g]).sum::<f64>() / z).collect();
        (soft(pi), soft(pg))
    }

    #[test]
    fn two_by_two_matches_enumeration() {
        let table = vec![vec![0.7, 0.3], vec![0.2, 0.8]];
        let m = LikelihoodMatrix::new(GOAL_DOMAIN, INTENTION_DOMAIN, table.clone()).unwrap();
        let prior = BeliefDistribution::new(GOAL_DOMAIN, vec![0.6, 0.4]).unwrap();
        let predicted = [LowAction::Left, LowAction::Interact];
        let got = tom_posterior(&prior, &predicted, LowAction::Interact, &TomConfig::default(), &m).unwrap();
        let (pi, pg) = oracle(&[0.6, 0.4], &table, &predicted, LowAction::Interact, 0.9, 2.0, 0.1);
        for (a, b) in got.intention_belief.probs().iter().zip(&pi) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in got.goal_belief.probs().iter().zip(&pg) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn responsive_within_three_observations() {
        // Two intentions whose predicted actions differ; the partner keeps
        // doing what intention 1 predicts.
        let set = IntentionSet::from_parts(
            DomainKind::Soup,
            vec![Intention::GetItem(ItemClass::Onion), Intention::GetItem(ItemClass::Tomato)],
            vec![Recipe::OnionSoup, Recipe::TomatoSoup],
        );
        let cfg = TomConfig::default();
        let mut mind = InferredMind::uniform(&set);
        let predicted = [LowAction::Left, LowAction::Right];
        let mut steps = 0;
        while mind.intention_belief.argmax() != 1 || mind.intention_belief.get(1) <= mind.intention_belief.get(0) {
            mind = tom_posterior(&mind.goal_belief, &predicted, LowAction::Right, &cfg, &set.goal_to_intention).unwrap();
            steps += 1;
            assert!(steps <= 3);
        }
        assert_eq!(mind.goal_belief.argmax(), 1);
    }

    proptest! {
        #[test]
        fn matches_enumeration_and_stays_positive(
            ni in 1usize..=6, ng in 1usize..=3,
            raw in prop::collection::vec(0.01f64..1.0, 18),
            prior in prop::collection::vec(0.01f64..1.0, 3),
            acts in prop::collection::vec(0usize..6, 6),
            obs in 0usize..6,
            alpha in 0.05f64..=1.0, beta in 0.0f64..5.0, mu in 0.0f64..1.0,
        ) {
            let table: Vec<Vec<f64>> = (0..ng).map(|g| {
                let row: Vec<f64> = (0..ni).map(|i| raw[g * 6 + i]).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|v| v / s).collect()
            }).collect();
            let ps: f64 = prior[..ng].iter().sum();
            let prior_g: Vec<f64> = prior[..ng].iter().map(|v| v / ps).collect();
            let predicted: Vec<LowAction> = acts[..ni].iter().map(|a| LowAction::ALL[*a]).collect();
            let observed = LowAction::ALL[obs];
            let cfg = TomConfig { alpha, beta, mu };
            let m = LikelihoodMatrix::new(GOAL_DOMAIN, INTENTION_DOMAIN, table.clone()).unwrap();
            let pb = BeliefDistribution::new(GOAL_DOMAIN, prior_g.clone()).unwrap();
            let got = tom_posterior(&pb, &predicted, observed, &cfg, &m).unwrap();
            let (pi, pg) = oracle(&prior_g, &table, &predicted, observed, alpha, beta, mu);
            for (a, b) in got.intention_belief.probs().iter().zip(&pi) {
                prop_assert!((a - b).abs() < 1e-9);
                prop_assert!(*a > 0.0);
            }
            for (a, b) in got.goal_belief.probs().iter().zip(&pg) {
                prop_assert!((a - b).abs() < 1e-9);
                prop_assert!(*a > 0.0);
            }
        }
    }
}
