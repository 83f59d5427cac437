use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::item::{Ingredient, Item, PlateContents, Recipe};
use super::layout::{Dir, DomainKind, Layout, Pos, Tile};

pub type AgentId = usize;

/// Primitive per-step action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LowAction {
    Up,
    Down,
    Left,
    Right,
    Interact,
    Wait,
}

impl LowAction {
    pub const ALL: [LowAction; 6] = [
        LowAction::Up,
        LowAction::Down,
        LowAction::Left,
        LowAction::Right,
        LowAction::Interact,
        LowAction::Wait,
    ];

    pub fn from_dir(dir: Dir) -> Self {
        match dir {
            Dir::Up => LowAction::Up,
            Dir::Down => LowAction::Down,
            Dir::Left => LowAction::Left,
            Dir::Right => LowAction::Right,
        }
    }

    pub fn dir(self) -> Option<Dir> {
        match self {
            LowAction::Up => Some(Dir::Up),
            LowAction::Down => Some(Dir::Down),
            LowAction::Left => Some(Dir::Left),
            LowAction::Right => Some(Dir::Right),
            _ => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            LowAction::Up => 'U',
            LowAction::Down => 'D',
            LowAction::Left => 'L',
            LowAction::Right => 'R',
            LowAction::Interact => 'I',
            LowAction::Wait => 'W',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        LowAction::ALL.into_iter().find(|a| a.symbol() == c)
    }
}

impl fmt::Display for LowAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentBody {
    pub pos: Pos,
    pub facing: Dir,
    pub held: Option<Item>,
}

impl AgentBody {
    pub fn faced_tile(&self) -> Pos {
        self.pos.step(self.facing)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotState {
    Empty,
    Filling { kind: Ingredient, count: u8 },
    Cooking { kind: Ingredient, remaining: u32 },
    Ready { kind: Ingredient },
}

pub const POT_CAPACITY: u8 = 3;

impl PotState {
    /// Whether `ingredient` may be added right now.
    pub fn accepts(self, ingredient: Ingredient) -> bool {
        if Recipe::soup_of(ingredient).is_none() {
            return false;
        }
        match self {
            PotState::Empty => true,
            PotState::Filling { kind, count } => kind == ingredient && count < POT_CAPACITY,
            _ => false,
        }
    }

    pub fn ingredient_count(self) -> u8 {
        match self {
            PotState::Empty => 0,
            PotState::Filling { count, .. } => count,
            PotState::Cooking { .. } | PotState::Ready { .. } => POT_CAPACITY,
        }
    }

    pub fn kind(self) -> Option<Ingredient> {
        match self {
            PotState::Empty => None,
            PotState::Filling { kind, .. }
            | PotState::Cooking { kind, .. }
            | PotState::Ready { kind } => Some(kind),
        }
    }

    pub fn has_soup_coming(self) -> bool {
        matches!(self, PotState::Cooking { .. } | PotState::Ready { .. })
    }
}

/// Result of one environment transition.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepOutcome {
    pub rewards: Vec<f64>,
    /// Salad domain: the whole task has been delivered.
    pub success: bool,
}

impl StepOutcome {
    pub fn team_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Full world snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitchenState {
    pub layout: Arc<Layout>,
    pub agents: Vec<AgentBody>,
    pub pots: Vec<PotState>,
    /// Item lying on each tile, indexed like the layout grid. Only counters
    /// ever hold items.
    counters: Vec<Option<Item>>,
    /// Soup: the two open orders. Salad: dishes still to deliver.
    pub orders: Vec<Recipe>,
    pub delivered: Vec<Recipe>,
    pub score: f64,
    pub step_count: u32,
}

impl KitchenState {
    /// Initial state for `agents` agents placed on the first spawn points.
    /// Soup orders are drawn from `rng`; salad orders come from the task.
    pub fn new(layout: Arc<Layout>, agents: usize, rng: &mut impl Rng) -> Self {
        let bodies = layout
            .spawns
            .iter()
            .take(agents)
            .map(|(pos, facing)| AgentBody {
                pos: *pos,
                facing: *facing,
                held: None,
            })
            .collect();
        let mut counters = vec![None; layout.tile_count()];
        for (pos, item) in &layout.initial_items {
            if let Some(i) = layout.index(*pos) {
                counters[i] = Some(*item);
            }
        }
        let orders = match layout.domain {
            DomainKind::Soup => (0..2).map(|_| random_soup(rng)).collect(),
            DomainKind::Salad => layout.task.map(|t| t.dishes()).unwrap_or_default(),
        };
        Self {
            pots: vec![PotState::Empty; layout.pots.len()],
            layout,
            agents: bodies,
            counters,
            orders,
            delivered: Vec::new(),
            score: 0.0,
            step_count: 0,
        }
    }

    pub fn domain(&self) -> DomainKind {
        self.layout.domain
    }

    pub fn item_at(&self, pos: Pos) -> Option<Item> {
        self.layout.index(pos).and_then(|i| self.counters[i])
    }

    pub fn set_item(&mut self, pos: Pos, item: Option<Item>) {
        if let Some(i) = self.layout.index(pos) {
            self.counters[i] = item;
        }
    }

    /// All items lying on counters, in grid order.
    pub fn loose_items(&self) -> impl Iterator<Item = (Pos, Item)> + '_ {
        self.counters
            .iter()
            .enumerate()
            .filter_map(|(i, it)| it.map(|it| (self.layout.pos_of(i), it)))
    }

    pub fn pot_index(&self, pos: Pos) -> Option<usize> {
        self.layout.pots.iter().position(|p| *p == pos)
    }

    pub fn agent_at(&self, pos: Pos) -> Option<AgentId> {
        self.agents.iter().position(|a| a.pos == pos)
    }

    pub fn is_success(&self) -> bool {
        self.domain() == DomainKind::Salad && self.orders.is_empty() && !self.delivered.is_empty()
    }

    /// Advances the soup-domain world by one step.
    ///
    /// Interactions resolve first in agent-index order, then movement, then
    /// pot timers that were already running tick down once.
    pub fn step(&mut self, actions: &[LowAction], rng: &mut impl Rng) -> StepOutcome {
        self.advance(actions, rng)
    }

    /// Advances the salad-domain world by one step; `success` reports whether
    /// every dish of the task has now been delivered.
    pub fn step_salad(&mut self, actions: &[LowAction], rng: &mut impl Rng) -> StepOutcome {
        debug_assert_eq!(self.domain(), DomainKind::Salad);
        self.advance(actions, rng)
    }

    fn advance(&mut self, actions: &[LowAction], rng: &mut impl Rng) -> StepOutcome {
        assert_eq!(actions.len(), self.agents.len(), "one action per agent");
        let mut rewards = vec![0.0; self.agents.len()];
        let cooking_at_start: Vec<bool> = self
            .pots
            .iter()
            .map(|p| matches!(p, PotState::Cooking { .. }))
            .collect();

        for (id, action) in actions.iter().enumerate() {
            if *action == LowAction::Interact {
                rewards[id] += self.interact(id, rng);
            }
        }
        self.resolve_movement(actions);

        for (pot, was_cooking) in self.pots.iter_mut().zip(cooking_at_start) {
            if let PotState::Cooking { kind, remaining } = *pot {
                if was_cooking {
                    *pot = if remaining <= 1 {
                        PotState::Ready { kind }
                    } else {
                        PotState::Cooking {
                            kind,
                            remaining: remaining - 1,
                        }
                    };
                }
            }
        }
        self.step_count += 1;
        StepOutcome {
            rewards,
            success: self.is_success(),
        }
    }

    fn resolve_movement(&mut self, actions: &[LowAction]) {
        let n = self.agents.len();
        let mut target: Vec<Option<Pos>> = vec![None; n];
        for (id, action) in actions.iter().enumerate() {
            if let Some(dir) = action.dir() {
                self.agents[id].facing = dir;
                let next = self.agents[id].pos.step(dir);
                if self.layout.is_floor(next) {
                    target[id] = Some(next);
                }
            }
        }
        // Two movers on one tile: the lower index wins.
        for a in 0..n {
            for b in (a + 1)..n {
                if target[a].is_some() && target[a] == target[b] {
                    target[b] = None;
                }
            }
        }
        // Swaps are blocked for both agents.
        for a in 0..n {
            for b in (a + 1)..n {
                if target[a] == Some(self.agents[b].pos) && target[b] == Some(self.agents[a].pos) {
                    target[a] = None;
                    target[b] = None;
                }
            }
        }
        // Moving into a tile whose occupant stays put is blocked; repeat until
        // no more moves are cancelled.
        loop {
            let mut changed = false;
            for a in 0..n {
                if let Some(t) = target[a] {
                    let blocked = (0..n).any(|b| b != a && self.agents[b].pos == t && target[b].is_none());
                    if blocked {
                        target[a] = None;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for (agent, t) in self.agents.iter_mut().zip(target) {
            if let Some(t) = t {
                agent.pos = t;
            }
        }
    }

    /// Applies one agent's Interact; returns the reward it earned.
    fn interact(&mut self, id: AgentId, rng: &mut impl Rng) -> f64 {
        let body = self.agents[id];
        let facing = body.faced_tile();
        let Some(tile) = self.layout.tile(facing) else {
            return 0.0;
        };
        let held = body.held;
        match tile {
            Tile::Floor => {}
            Tile::Dispenser(kind) => {
                if held.is_none() {
                    self.agents[id].held = Some(kind.item());
                }
            }
            Tile::Counter => {
                let on_counter = self.item_at(facing);
                let (hand, counter) = counter_exchange(held, on_counter);
                self.agents[id].held = hand;
                self.set_item(facing, counter);
            }
            Tile::Pot => {
                let Some(pi) = self.pot_index(facing) else {
                    return 0.0;
                };
                let pot = self.pots[pi];
                match (held, pot) {
                    (Some(Item::Raw(ing)), _) if pot.accepts(ing) => {
                        let count = pot.ingredient_count() + 1;
                        self.pots[pi] = if count >= POT_CAPACITY {
                            let recipe = Recipe::soup_of(ing).expect("pot accepts soup ingredients only");
                            PotState::Cooking {
                                kind: ing,
                                remaining: recipe.cook_time(),
                            }
                        } else {
                            PotState::Filling { kind: ing, count }
                        };
                        self.agents[id].held = None;
                    }
                    (Some(Item::Dish), PotState::Ready { kind }) => {
                        if let Some(recipe) = Recipe::soup_of(kind) {
                            self.agents[id].held = Some(Item::Soup(recipe));
                            self.pots[pi] = PotState::Empty;
                        }
                    }
                    _ => {}
                }
            }
            Tile::CuttingBoard => {
                if let Some(Item::Raw(ing @ (Ingredient::Tomato | Ingredient::Lettuce))) = held {
                    self.agents[id].held = Some(Item::Cut(ing));
                }
            }
            Tile::ServeTile => {
                let recipe = match held {
                    Some(Item::Soup(r)) => Some(r),
                    Some(Item::Salad(c)) => c.recipe(),
                    _ => None,
                };
                let Some(recipe) = recipe else {
                    return 0.0;
                };
                let Some(idx) = self.orders.iter().position(|o| *o == recipe) else {
                    return 0.0;
                };
                self.orders.remove(idx);
                self.delivered.push(recipe);
                self.agents[id].held = None;
                return match self.domain() {
                    DomainKind::Soup => {
                        self.orders.push(random_soup(rng));
                        let points = recipe.soup_points();
                        self.score += points;
                        points
                    }
                    DomainKind::Salad if self.orders.is_empty() => {
                        self.score += 1.0;
                        1.0
                    }
                    DomainKind::Salad => 0.0,
                };
            }
        }
        0.0
    }
}

/// Hand/counter exchange, including plating rules for cut ingredients.
fn counter_exchange(hand: Option<Item>, counter: Option<Item>) -> (Option<Item>, Option<Item>) {
    match (hand, counter) {
        (Some(h), None) => (None, Some(h)),
        (None, Some(c)) => (Some(c), None),
        (None, None) => (None, None),
        (Some(Item::Cut(i)), Some(Item::Dish)) => match PlateContents::default().with(i) {
            Some(p) => (None, Some(Item::Salad(p))),
            None => (hand, counter),
        },
        (Some(Item::Cut(i)), Some(Item::Salad(c))) => match c.with(i) {
            Some(p) => (None, Some(Item::Salad(p))),
            None => (hand, counter),
        },
        (Some(Item::Dish), Some(Item::Cut(i))) => match PlateContents::default().with(i) {
            Some(p) => (Some(Item::Salad(p)), None),
            None => (hand, counter),
        },
        (Some(Item::Salad(c)), Some(Item::Cut(i))) => match c.with(i) {
            Some(p) => (Some(Item::Salad(p)), None),
            None => (hand, counter),
        },
        (Some(h), Some(c)) => (Some(c), Some(h)),
    }
}

fn random_soup(rng: &mut impl Rng) -> Recipe {
    if rng.gen_bool(0.5) {
        Recipe::OnionSoup
    } else {
        Recipe::TomatoSoup
    }
}
