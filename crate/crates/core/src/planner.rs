//! Grid search from an active intention to primitive actions.
//!
//! Search states are `(position, facing)`. A move action always turns the
//! agent and moves it only when the next tile is open, so turning in place
//! costs one action just like a step. A plan ends when the agent stands next
//! to the target and faces it, followed by `Interact` when requested.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::intention::Intention;
use crate::kitchen::{
    AgentId, Dir, Dispensed, DomainKind, Item, ItemClass, KitchenState, LowAction, Observation,
    OrderView, PlateContents, Pos, Tile,
};

/// Which tiles an agent may stand on: floor tiles not occupied by another agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Passability {
    width: i32,
    height: i32,
    open: Vec<bool>,
}

impl Passability {
    pub fn new(width: i32, height: i32, open: Vec<bool>) -> Self {
        assert_eq!(open.len(), (width * height) as usize);
        Self {
            width,
            height,
            open,
        }
    }

    /// Floor tiles of the layout, with every agent other than `actor` blocking
    /// its current tile.
    pub fn for_actor(state: &KitchenState, actor: AgentId) -> Self {
        let layout = &state.layout;
        let mut open: Vec<bool> = (0..layout.tile_count())
            .map(|i| layout.is_floor(layout.pos_of(i)))
            .collect();
        for (id, body) in state.agents.iter().enumerate() {
            if id != actor {
                if let Some(i) = layout.index(body.pos) {
                    open[i] = false;
                }
            }
        }
        Self::new(layout.width, layout.height, open)
    }

    fn index(&self, pos: Pos) -> Option<usize> {
        if pos.x < 0 || pos.y < 0 || pos.x >= self.width || pos.y >= self.height {
            None
        } else {
            Some((pos.y * self.width + pos.x) as usize)
        }
    }

    pub fn is_open(&self, pos: Pos) -> bool {
        self.index(pos).map(|i| self.open[i]).unwrap_or(false)
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    fn state_count(&self) -> usize {
        self.open.len() * 4
    }

    fn state_index(&self, pos: Pos, facing: Dir) -> usize {
        self.index(pos).expect("in bounds") * 4 + facing.index()
    }

    /// The transition shared by search and simulation.
    fn apply(&self, pos: Pos, dir: Dir) -> (Pos, Dir) {
        let next = pos.step(dir);
        if self.is_open(next) {
            (next, dir)
        } else {
            (pos, dir)
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PlanQuery<'a> {
    pub start: Pos,
    pub facing: Dir,
    pub target: Pos,
    pub grid: &'a Passability,
    pub interact_at_goal: bool,
}

/// Shortest action sequence that ends facing `target` (plus `Interact` when
/// requested), or `None` when no open tile next to the target is reachable.
///
/// A* with heuristic `max(manhattan - 1, 0)`: a goal state is always one tile
/// from the target and each action changes the distance by at most one.
/// Expansion order is fixed (Up, Down, Left, Right) and equal-priority nodes
/// pop in insertion order, so plans are unique for fixed inputs.
pub fn plan(query: &PlanQuery<'_>) -> Option<Vec<LowAction>> {
    let grid = query.grid;
    let goal = |pos: Pos, facing: Dir| pos.step(facing) == query.target;
    let h = |pos: Pos| pos.manhattan(query.target).saturating_sub(1);
    grid.index(query.start)?;

    let n = grid.state_count();
    let mut best = vec![u32::MAX; n];
    let mut parent: Vec<Option<(usize, Dir)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let start = grid.state_index(query.start, query.facing);
    best[start] = 0;
    heap.push(Reverse((h(query.start), seq, 0u32, query.start, query.facing)));

    let mut found = None;
    while let Some(Reverse((_, _, g, pos, facing))) = heap.pop() {
        let idx = grid.state_index(pos, facing);
        if g > best[idx] {
            continue;
        }
        if goal(pos, facing) {
            found = Some(idx);
            break;
        }
        for dir in Dir::ALL {
            let (np, nf) = grid.apply(pos, dir);
            let ni = grid.state_index(np, nf);
            let ng = g + 1;
            if ng < best[ni] {
                best[ni] = ng;
                parent[ni] = Some((idx, dir));
                seq += 1;
                heap.push(Reverse((ng + h(np), seq, ng, np, nf)));
            }
        }
    }

    let mut idx = found?;
    let mut actions = Vec::new();
    while let Some((prev, dir)) = parent[idx] {
        actions.push(LowAction::from_dir(dir));
        idx = prev;
    }
    actions.reverse();
    if query.interact_at_goal {
        actions.push(LowAction::Interact);
    }
    Some(actions)
}

/// Breadth-first action costs from one start state to every `(pos, facing)`.
#[derive(Clone, Debug)]
pub struct DistanceField {
    width: i32,
    height: i32,
    dist: Vec<u32>,
}

impl DistanceField {
    pub fn new(grid: &Passability, start: Pos, facing: Dir) -> Self {
        let mut dist = vec![u32::MAX; grid.state_count()];
        if grid.index(start).is_some() {
            let s = grid.state_index(start, facing);
            dist[s] = 0;
            let mut queue = VecDeque::from([(start, facing)]);
            while let Some((pos, f)) = queue.pop_front() {
                let d = dist[grid.state_index(pos, f)];
                for dir in Dir::ALL {
                    let (np, nf) = grid.apply(pos, dir);
                    let ni = grid.state_index(np, nf);
                    if dist[ni] == u32::MAX {
                        dist[ni] = d + 1;
                        queue.push_back((np, nf));
                    }
                }
            }
        }
        Self {
            width: grid.width,
            height: grid.height,
            dist,
        }
    }

    fn get(&self, pos: Pos, facing: Dir) -> Option<u32> {
        if pos.x < 0 || pos.y < 0 || pos.x >= self.width || pos.y >= self.height {
            return None;
        }
        let d = self.dist[((pos.y * self.width + pos.x) as usize) * 4 + facing.index()];
        (d != u32::MAX).then_some(d)
    }

    /// Actions needed to stand next to `target` and face it.
    pub fn cost_to_face(&self, target: Pos) -> Option<u32> {
        Dir::ALL
            .iter()
            .filter_map(|d| {
                // Standing at target - d and facing d.
                let (dx, dy) = d.delta();
                self.get(Pos::new(target.x - dx, target.y - dy), *d)
            })
            .min()
    }
}

/// Everything an actor needs to evaluate intentions in one observation: the
/// passability mask, its own distance field and the floor regions of both
/// agents.
pub struct Perception<'a> {
    pub state: &'a KitchenState,
    pub orders: &'a OrderView,
    pub actor: AgentId,
    pub partner: Option<AgentId>,
    pub grid: Passability,
    pub field: DistanceField,
    actor_region: Option<usize>,
    partner_region: Option<usize>,
}

/// A resolved intention target and the action cost of facing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Target {
    pub pos: Pos,
    pub cost: u32,
}

impl<'a> Perception<'a> {
    pub fn new(obs: &'a Observation, actor: AgentId) -> Self {
        let state = &obs.state;
        let grid = Passability::for_actor(state, actor);
        let body = state.agents[actor];
        let field = DistanceField::new(&grid, body.pos, body.facing);
        let partner = (0..state.agents.len()).find(|a| *a != actor);
        Self {
            state,
            orders: &obs.orders,
            actor,
            partner,
            actor_region: state.layout.component(body.pos),
            partner_region: partner.and_then(|p| state.layout.component(state.agents[p].pos)),
            field,
            grid,
        }
    }

    pub fn held(&self) -> Option<Item> {
        self.state.agents[self.actor].held
    }

    pub fn partner_held(&self) -> Option<Item> {
        self.partner.and_then(|p| self.state.agents[p].held)
    }

    /// Whether the tile borders the floor region the actor stands in.
    pub fn actor_touches(&self, pos: Pos) -> bool {
        self.touches(pos, self.actor_region)
    }

    pub fn partner_touches(&self, pos: Pos) -> bool {
        self.partner.is_some() && self.touches(pos, self.partner_region)
    }

    fn touches(&self, pos: Pos, region: Option<usize>) -> bool {
        region.is_some_and(|r| self.state.layout.adjacent_components(pos).contains(&r))
    }

    pub fn separated(&self) -> bool {
        self.partner.is_some() && self.actor_region != self.partner_region
    }

    fn closest(&self, candidates: impl Iterator<Item = Pos>) -> Option<Target> {
        let mut best: Option<Target> = None;
        for pos in candidates {
            if let Some(cost) = self.field.cost_to_face(pos) {
                if best.is_none_or(|b| cost < b.cost) {
                    best = Some(Target { pos, cost });
                }
            }
        }
        best
    }

    fn tiles(&self) -> impl Iterator<Item = (Pos, Tile)> + '_ {
        self.state.layout.positions()
    }

    /// Whether the actor could put an item of this class to use itself,
    /// judged by which stations border its own floor region.
    pub fn can_use_self(&self, class: ItemClass) -> bool {
        let touches_tile = |pred: &dyn Fn(Tile) -> bool| {
            self.tiles()
                .any(|(p, t)| pred(t) && self.actor_touches(p))
        };
        match (self.state.domain(), class) {
            (DomainKind::Soup, ItemClass::Onion | ItemClass::Tomato | ItemClass::Dish) => {
                touches_tile(&|t| t == Tile::Pot)
            }
            (_, ItemClass::Soup | ItemClass::Salad) => touches_tile(&|t| t == Tile::ServeTile),
            (DomainKind::Salad, ItemClass::Tomato | ItemClass::Lettuce) => {
                touches_tile(&|t| t == Tile::CuttingBoard)
            }
            (DomainKind::Salad, ItemClass::CutTomato | ItemClass::CutLettuce) => self
                .state
                .loose_items()
                .any(|(p, it)| matches!(it, Item::Dish | Item::Salad(_)) && self.actor_touches(p)),
            (DomainKind::Salad, ItemClass::Dish) => self
                .state
                .loose_items()
                .any(|(p, it)| matches!(it, Item::Cut(_)) && self.actor_touches(p)),
            _ => false,
        }
    }

    /// Whether adding `ingredient` to a plate holding `contents` still fits a
    /// dish the actor believes may be ordered.
    pub fn plating_fits(&self, contents: PlateContents, ingredient: crate::kitchen::Ingredient) -> bool {
        let Some(next) = contents.with(ingredient) else {
            return false;
        };
        let fits = |r: crate::kitchen::Recipe| next.fits(r);
        match self.orders {
            OrderView::Known(orders) => orders.iter().any(|r| fits(*r)),
            OrderView::Uniform(recipes) => recipes.iter().any(|r| fits(*r)),
        }
    }

    /// Nearest tile the intention acts on, by plan length.
    pub fn resolve_target(&self, intention: Intention) -> Option<Target> {
        match intention {
            Intention::Wait => None,
            Intention::GetItem(class) => self.closest_item(class),
            Intention::DropItem(_) => self.closest(
                self.tiles()
                    .filter(|(p, t)| *t == Tile::Counter && self.state.item_at(*p).is_none())
                    .map(|(p, _)| p),
            ),
            Intention::HandOver(_) => {
                self.partner?;
                self.closest(
                    self.tiles()
                        .filter(|(p, t)| {
                            *t == Tile::Counter
                                && self.state.item_at(*p).is_none()
                                && self.actor_touches(*p)
                                && self.partner_touches(*p)
                        })
                        .map(|(p, _)| p),
                )
            }
            Intention::InteractWithPot(k) => self.closest(self.state.layout.pots.get(k).copied().into_iter()),
            Intention::ChopAt(k) => self.closest(self.state.layout.boards.get(k).copied().into_iter()),
            Intention::Deliver(_) => self.closest(
                self.tiles()
                    .filter(|(_, t)| *t == Tile::ServeTile)
                    .map(|(p, _)| p),
            ),
            Intention::PlateIngredient(ing) => match self.held() {
                Some(Item::Cut(i)) if i == ing => self.closest(
                    self.state
                        .loose_items()
                        .filter(|(_, it)| match it {
                            Item::Dish => self.plating_fits(PlateContents::default(), ing),
                            Item::Salad(c) => self.plating_fits(*c, ing),
                            _ => false,
                        })
                        .map(|(p, _)| p),
                ),
                Some(Item::Dish) | Some(Item::Salad(_)) => {
                    let contents = match self.held() {
                        Some(Item::Salad(c)) => c,
                        _ => PlateContents::default(),
                    };
                    if !self.plating_fits(contents, ing) {
                        return None;
                    }
                    self.closest(
                        self.state
                            .loose_items()
                            .filter(|(_, it)| *it == Item::Cut(ing))
                            .map(|(p, _)| p),
                    )
                }
                _ => None,
            },
        }
    }

    /// Closest dispenser or counter holding an item of `class`. Items lying on
    /// a counter the partner can reach are skipped when the actor cannot use
    /// them itself, so hand-overs are not taken back.
    pub fn closest_item(&self, class: ItemClass) -> Option<Target> {
        let dispensers = self.tiles().filter_map(|(p, t)| match t {
            Tile::Dispenser(d) if d_class(d) == class => Some(p),
            _ => None,
        });
        self.closest(dispensers.chain(self.loose_candidates(class)))
    }

    /// Counters holding an item of `class` the actor may pick up.
    pub fn loose_candidates(&self, class: ItemClass) -> impl Iterator<Item = Pos> + '_ {
        let skip_shared = self.separated() && !self.can_use_self(class);
        self.state
            .loose_items()
            .filter(move |(p, it)| it.class() == class && !(skip_shared && self.partner_touches(*p)))
            .map(|(p, _)| p)
    }

    /// First action of a fresh plan toward the intention's target; `Wait` when
    /// the intention is `Wait` or its target is unreachable.
    pub fn next_action(&self, intention: Intention) -> LowAction {
        if intention == Intention::Wait {
            return self.park_action();
        }
        let Some(target) = self.resolve_target(intention) else {
            return LowAction::Wait;
        };
        let body = self.state.agents[self.actor];
        let query = PlanQuery {
            start: body.pos,
            facing: body.facing,
            target: target.pos,
            grid: &self.grid,
            interact_at_goal: true,
        };
        plan(&query)
            .and_then(|p| p.first().copied())
            .unwrap_or(LowAction::Wait)
    }
    /// Idle agents step off tiles next to stations so they do not block
    /// them: first move toward the nearest reachable tile bordering only
    /// floor and counters, or `Wait` when already on one or none exists.
    pub fn park_action(&self) -> LowAction {
        let layout = &self.state.layout;
        let busy = |pos: Pos| {
            Dir::ALL.iter().any(|d| {
                matches!(
                    layout.tile(pos.step(*d)),
                    Some(Tile::Pot | Tile::CuttingBoard | Tile::ServeTile | Tile::Dispenser(_))
                )
            })
        };
        let start = self.state.agents[self.actor].pos;
        if !busy(start) {
            return LowAction::Wait;
        }
        let mut first: Vec<Option<Dir>> = vec![None; (self.grid.width * self.grid.height) as usize];
        let mut seen = vec![false; first.len()];
        let mut queue = VecDeque::from([start]);
        seen[self.grid.index(start).expect("actor in bounds")] = true;
        while let Some(pos) = queue.pop_front() {
            let head = first[self.grid.index(pos).expect("in bounds")];
            for dir in Dir::ALL {
                let next = pos.step(dir);
                if !self.grid.is_open(next) {
                    continue;
                }
                let i = self.grid.index(next).expect("open tiles are in bounds");
                if seen[i] {
                    continue;
                }
                seen[i] = true;
                let step = head.unwrap_or(dir);
                if !busy(next) {
                    return match step {
                        Dir::Up => LowAction::Up,
                        Dir::Down => LowAction::Down,
                        Dir::Left => LowAction::Left,
                        Dir::Right => LowAction::Right,
                    };
                }
                first[i] = Some(step);
                queue.push_back(next);
            }
        }
        LowAction::Wait
    }
}

fn d_class(d: Dispensed) -> ItemClass {
    d.item().class()
}
