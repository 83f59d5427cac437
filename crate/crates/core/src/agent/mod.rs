//! The two-layer agent: a goal layer over orders and an intention layer over
//! high-level actions, coupled to the partner model through belief resonance.

pub mod affordance;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use affordance::{intention_affordance, AffordanceConfig};

use crate::belief::{
    propagate_likelihood, BeliefDistribution, IntegrationOrder, LayerState, Resonance,
    ResonanceConfig,
};
use crate::error::Result;
use crate::intention::{Intention, IntentionSet, GOAL_DOMAIN, INTENTION_DOMAIN};
use crate::kitchen::{DomainKind, Item, LowAction, Observation, OrderView, Recipe};
use crate::mentalizer::{tom_update, InferredMind, TomConfig};
use crate::planner::Perception;

pub type Goal = Recipe;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PunishConfig {
    pub factor: f64,
    pub floor: f64,
    /// Added back to every multiplier per step, up to 1.
    pub decay: f64,
}

impl Default for PunishConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            floor: 0.05,
            decay: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PunishKind {
    Abort,
    Repetition,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentConfig {
    pub sp: f64,
    pub prediction_gain: f64,
    pub evidence_gain: f64,
    pub tom: TomConfig,
    /// Run the partner model at all. Solo agents have nobody to model.
    pub tom_enabled: bool,
    pub integration: IntegrationOrder,
    pub punish: PunishConfig,
    pub affordance: AffordanceConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            sp: 0.0,
            prediction_gain: 0.5,
            evidence_gain: 0.5,
            tom: TomConfig::default(),
            tom_enabled: true,
            integration: IntegrationOrder::Standard,
            punish: PunishConfig::default(),
            affordance: AffordanceConfig::default(),
        }
    }
}

/// Mutable mind of one agent across an episode.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub set: Arc<IntentionSet>,
    pub goal_layer: LayerState,
    pub intention_layer: LayerState,
    pub inferred: InferredMind,
    pub active_intention: Intention,
    pub sp: ResonanceConfig,
    pub config: AgentConfig,
    /// Posterior from the last intention update, after punishments.
    pub intention_posterior: BeliefDistribution,
    multipliers: Vec<f64>,
    punished_now: Vec<bool>,
    prev_obs: Option<Observation>,
    prev_held: Option<Item>,
}

impl AgentState {
    pub fn new(set: Arc<IntentionSet>, config: AgentConfig) -> Result<Self> {
        config.tom.validate()?;
        let n = set.len();
        Ok(Self {
            goal_layer: LayerState::new(GOAL_DOMAIN, set.goals.len(), config.prediction_gain, config.evidence_gain)?,
            intention_layer: LayerState::new(INTENTION_DOMAIN, n, config.prediction_gain, config.evidence_gain)?,
            inferred: InferredMind::uniform(&set),
            active_intention: Intention::Wait,
            sp: ResonanceConfig::new(config.sp)?,
            intention_posterior: BeliefDistribution::uniform(INTENTION_DOMAIN, n),
            multipliers: vec![1.0; n],
            punished_now: vec![false; n],
            prev_obs: None,
            prev_held: None,
            config,
            set,
        })
    }

    pub fn multiplier(&self, intention: Intention) -> f64 {
        self.set
            .index_of(intention)
            .map(|i| self.multipliers[i])
            .unwrap_or(1.0)
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// Scales the intention's prior multiplier down by the punish factor.
    pub fn punish(&mut self, intention: Intention, _kind: PunishKind) {
        if let Some(i) = self.set.index_of(intention) {
            let p = self.config.punish;
            self.multipliers[i] = (self.multipliers[i] * p.factor).max(p.floor);
            self.punished_now[i] = true;
        }
    }

    /// Forget everything learned since the last reward.
    pub fn reset(&mut self) {
        self.goal_layer.reset();
        self.intention_layer.reset();
        self.multipliers.fill(1.0);
        self.punished_now.fill(false);
    }

    /// Called with this agent's own reward after each environment step.
    pub fn receive_reward(&mut self, reward: f64) {
        if reward > 0.0 {
            self.reset();
        }
    }

    /// Bottom-up scores for every intention in set order.
    pub fn affordances(&self, perception: &Perception<'_>) -> Vec<f64> {
        self.set
            .intentions
            .iter()
            .map(|i| intention_affordance(perception, *i, self.set.len(), &self.config.affordance))
            .collect()
    }

    /// One processing cycle: partner inference, goal layer, intention layer,
    /// intention selection, then the first action toward the active intention.
    pub fn step(&mut self, obs: &Observation, partner_last_action: Option<LowAction>) -> Result<LowAction> {
        let partner = obs.partner();
        let with_partner = self.config.tom_enabled && partner.is_some();
        if with_partner {
            if let (Some(prev), Some(action), Some(pid)) = (&self.prev_obs, partner_last_action, partner) {
                self.inferred = tom_update(
                    &self.inferred,
                    action,
                    prev,
                    pid,
                    &self.config.tom,
                    &self.set,
                    &self.config.affordance,
                )?;
            }
        }

        // Goal layer first, fed by the previous intention posterior.
        let goal_bottom_up = propagate_likelihood(&self.intention_layer.prior, &self.set.intention_to_goal)?;
        let goal_top_down = goal_topdown(obs, &self.set);
        let resonance = with_partner.then_some(Resonance {
            inferred: &self.inferred.goal_belief,
            config: self.sp,
        });
        let goal_post =
            self.config
                .integration
                .update(&mut self.goal_layer, &goal_top_down, &goal_bottom_up, resonance)?;
        self.goal_layer.commit(goal_post.clone());

        // Intention layer.
        let perception = Perception::new(obs, obs.viewer);
        let scores = self.affordances(&perception);
        let bottom_up = BeliefDistribution::new(INTENTION_DOMAIN, scores.clone())?;
        let top_down = propagate_likelihood(&goal_post, &self.set.goal_to_intention)?;
        self.intention_layer.prior = self.intention_layer.prior.reweighted(&self.multipliers)?;
        let resonance = with_partner.then_some(Resonance {
            inferred: &self.inferred.intention_belief,
            config: self.sp,
        });
        let posterior =
            self.config
                .integration
                .update(&mut self.intention_layer, &top_down, &bottom_up, resonance)?;

        let chosen = select_map(&self.set, &posterior, &scores, self.active_intention);
        self.punished_now.fill(false);
        let held = obs.state.agents[obs.viewer].held;
        let completed = held != self.prev_held;
        let previous = self.active_intention;
        if chosen != previous && !completed && previous != Intention::Wait && self.prev_obs.is_some() {
            self.punish(previous, PunishKind::Abort);
        }
        if completed && self.set.domain == DomainKind::Salad && held.is_none() {
            if let (Intention::DropItem(c) | Intention::HandOver(c), Some(was)) = (previous, self.prev_held) {
                if was.class() == c {
                    self.punish(Intention::GetItem(c), PunishKind::Repetition);
                }
            }
        }
        self.active_intention = chosen;
        self.intention_layer.commit(posterior.clone());
        self.intention_posterior = posterior;

        // Multipliers recover after being used, except ones just punished.
        let decay = self.config.punish.decay;
        for (m, hit) in self.multipliers.iter_mut().zip(&self.punished_now) {
            if !hit {
                *m = (*m + decay).min(1.0);
            }
        }

        self.prev_obs = Some(obs.clone());
        self.prev_held = held;
        Ok(perception.next_action(chosen))
    }
}

/// Functional form of [`AgentState::step`].
pub fn agent_step(
    state: &AgentState,
    obs: &Observation,
    partner_last_action: Option<LowAction>,
) -> Result<(LowAction, AgentState)> {
    let mut next = state.clone();
    let action = next.step(obs, partner_last_action)?;
    Ok((action, next))
}

/// Maximum-posterior intention among those with positive affordance. Ties go
/// to the current intention, then to set order.
pub fn select_map(set: &IntentionSet, posterior: &BeliefDistribution, scores: &[f64], current: Intention) -> Intention {
    let mut best = set.wait_index();
    if let Some(c) = set.index_of(current) {
        if scores[c] > 0.0 {
            best = c;
        }
    }
    let mut best_p = posterior.get(best);
    for (i, p) in posterior.probs().iter().enumerate() {
        if scores[i] > 0.0 && *p > best_p {
            best = i;
            best_p = *p;
        }
    }
    set.intentions[best]
}

/// Top-down influence on the goal layer from the order channel: the
/// empirical distribution of open orders (soup) or of dishes still to deliver
/// (salad); uniform when orders are hidden.
pub fn goal_topdown(obs: &Observation, set: &IntentionSet) -> BeliefDistribution {
    let counts: Vec<f64> = match &obs.orders {
        OrderView::Known(orders) => set
            .goals
            .iter()
            .map(|g| orders.iter().filter(|o| *o == g).count() as f64)
            .collect(),
        OrderView::Uniform(_) => vec![1.0; set.goals.len()],
    };
    BeliefDistribution::new(GOAL_DOMAIN, counts)
        .unwrap_or_else(|_| BeliefDistribution::uniform(GOAL_DOMAIN, set.goals.len()))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::kitchen::{builtin_layout, observe, ItemClass, KitchenState};
    use crate::planner::Perception;

    fn kitchen(name: &str) -> (KitchenState, Arc<IntentionSet>) {
        let layout = Arc::new(builtin_layout(name).unwrap());
        let set = Arc::new(IntentionSet::for_layout(&layout));
        (KitchenState::new(layout, 2, &mut ChaCha8Rng::seed_from_u64(11)), set)
    }

    fn agent(set: &Arc<IntentionSet>, sp: f64) -> AgentState {
        AgentState::new(set.clone(), AgentConfig { sp, ..AgentConfig::default() }).unwrap()
    }

    #[test]
    fn first_step_fetches_an_ingredient() {
        let (s, set) = kitchen("cramped");
        let mut a = agent(&set, 0.0);
        a.step(&observe(&s, 0, false), None).unwrap();
        assert!(matches!(
            a.active_intention,
            Intention::GetItem(ItemClass::Onion | ItemClass::Tomato)
        ));
    }

    #[test]
    fn zero_sp_ignores_the_partner_model() {
        let (mut s, set) = kitchen("ring");
        let mut with = agent(&set, 0.0);
        let mut without = AgentState::new(
            set.clone(),
            AgentConfig {
                tom_enabled: false,
                ..AgentConfig::default()
            },
        )
        .unwrap();
        let mut partner = None;
        for t in 0..30 {
            // Skew the inferred partner beliefs hard; sp = 0 must not care.
            with.inferred.intention_belief = BeliefDistribution::new(
                INTENTION_DOMAIN,
                (0..set.len()).map(|i| if i == t % set.len() { 50.0 } else { 1.0 }).collect(),
            )
            .unwrap();
            let obs = observe(&s, 0, false);
            let a = with.step(&obs, partner).unwrap();
            let b = without.step(&obs, partner).unwrap();
            assert_eq!(a, b);
            for (x, y) in with.intention_posterior.probs().iter().zip(without.intention_posterior.probs()) {
                assert!((x - y).abs() <= 1e-12);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
            let p = LowAction::ALL[t % 6];
            s.step(&[a, p], &mut rng);
            partner = Some(p);
        }
    }

    #[test]
    fn punishment_halves_to_a_floor_and_recovers() {
        let (s, set) = kitchen("cramped");
        let mut a = agent(&set, 0.0);
        let target = Intention::GetItem(ItemClass::Dish);
        a.punish(target, PunishKind::Abort);
        assert_eq!(a.multiplier(target), 0.5);
        for _ in 0..10 {
            a.punish(target, PunishKind::Abort);
        }
        assert_eq!(a.multiplier(target), 0.05);
        assert_eq!(a.multiplier(Intention::Wait), 1.0);
        // Decay skips multipliers punished in the same cycle, then adds 0.1.
        a.step(&observe(&s, 0, false), None).unwrap();
        assert!((a.multiplier(target) - 0.15).abs() < 1e-12);
        a.receive_reward(20.0);
        assert_eq!(a.multiplier(target), 1.0);
    }

    #[test]
    fn reward_resets_layers() {
        let (s, set) = kitchen("cramped");
        let mut a = agent(&set, 0.0);
        for _ in 0..3 {
            a.step(&observe(&s, 0, false), None).unwrap();
        }
        let uniform = BeliefDistribution::uniform(INTENTION_DOMAIN, set.len());
        assert_ne!(a.intention_layer.prior, uniform);
        a.receive_reward(0.0);
        assert_ne!(a.intention_layer.prior, uniform);
        a.receive_reward(15.0);
        assert_eq!(a.intention_layer.prior, uniform);
        assert_eq!(a.goal_layer.prior, BeliefDistribution::uniform(GOAL_DOMAIN, set.goals.len()));
    }

    #[test]
    fn active_intention_is_the_afforded_map() {
        let (mut s, set) = kitchen("asymmetric");
        let mut agents = [agent(&set, 0.3), agent(&set, 0.6)];
        let mut last = [None, None];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..60 {
            let mut acts = [LowAction::Wait; 2];
            for k in 0..2 {
                let obs = observe(&s, k, false);
                acts[k] = agents[k].step(&obs, last[1 - k]).unwrap();
                let p = Perception::new(&obs, k);
                let scores = agents[k].affordances(&p);
                let post = &agents[k].intention_posterior;
                let chosen = set.index_of(agents[k].active_intention).unwrap();
                assert!(scores[chosen] > 0.0);
                for i in 0..set.len() {
                    if scores[i] > 0.0 {
                        assert!(post.get(i) <= post.get(chosen));
                    }
                }
            }
            s.step(&acts, &mut rng);
            last = [Some(acts[0]), Some(acts[1])];
        }
    }

    #[test]
    fn goal_topdown_follows_orders() {
        let (mut s, set) = kitchen("ring");
        let onion = set.goals.iter().position(|g| *g == Recipe::OnionSoup).unwrap();
        s.orders = vec![Recipe::OnionSoup, Recipe::TomatoSoup];
        let td = goal_topdown(&observe(&s, 0, false), &set);
        assert!((td.get(onion) - 0.5).abs() < 1e-12);
        s.orders = vec![Recipe::OnionSoup, Recipe::OnionSoup];
        let td = goal_topdown(&observe(&s, 0, false), &set);
        assert!(td.get(onion) > 0.999_999 && td.get(1 - onion) > 0.0);
        let td = goal_topdown(&observe(&s, 0, true), &set);
        assert!((td.get(onion) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partner_beliefs_pull_harder_with_higher_sp() {
        let (s, set) = kitchen("ring");
        let obs = observe(&s, 0, false);
        let favored = set.index_of(Intention::GetItem(ItemClass::Tomato)).unwrap();
        let shift = |sp: f64| {
            let mut a = agent(&set, sp);
            a.inferred.intention_belief = BeliefDistribution::new(
                INTENTION_DOMAIN,
                (0..set.len()).map(|i| if i == favored { 20.0 } else { 1.0 }).collect(),
            )
            .unwrap();
            a.step(&obs, None).unwrap();
            a.intention_posterior.get(favored)
        };
        let (a, b, c) = (shift(0.0), shift(0.4), shift(0.8));
        assert!(a < b && b < c, "{a} {b} {c}");
    }
}
