//! Kitchen layouts: ASCII grid parsing, structural checks and the built-in set.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::item::{Ingredient, Item, SaladTask};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Dir) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    /// Fixed expansion order used everywhere a deterministic tie order matters.
    pub const ALL: [Dir; 4] = [Dir::Up, Dir::Down, Dir::Left, Dir::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::Up => (0, -1),
            Dir::Down => (0, 1),
            Dir::Left => (-1, 0),
            Dir::Right => (1, 0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Direction pointing from `from` to the 4-neighbour `to`.
    pub fn between(from: Pos, to: Pos) -> Option<Dir> {
        Dir::ALL.into_iter().find(|d| from.step(*d) == to)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Soup,
    Salad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tile {
    Floor,
    Counter,
    Dispenser(Dispensed),
    Pot,
    CuttingBoard,
    ServeTile,
}

impl Tile {
    pub fn is_floor(self) -> bool {
        matches!(self, Tile::Floor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dispensed {
    Ingredient(Ingredient),
    Dish,
}

impl Dispensed {
    pub fn item(self) -> Item {
        match self {
            Dispensed::Ingredient(i) => Item::Raw(i),
            Dispensed::Dish => Item::Dish,
        }
    }
}

/// Immutable kitchen geometry plus the initial item placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub name: String,
    pub domain: DomainKind,
    pub task: Option<SaladTask>,
    pub width: i32,
    pub height: i32,
    tiles: Vec<Tile>,
    pub spawns: Vec<(Pos, Dir)>,
    /// Items lying on counters at the start (salad layouts place single items
    /// instead of dispensers).
    pub initial_items: Vec<(Pos, Item)>,
    pub pots: Vec<Pos>,
    pub boards: Vec<Pos>,
    /// Connected floor component of each tile, `None` for non-floor.
    components: Vec<Option<usize>>,
    component_count: usize,
}

const BUILTIN: &[(&str, &str)] = &[
    ("asymmetric", include_str!("../../layouts/asymmetric.layout")),
    ("spacey", include_str!("../../layouts/spacey.layout")),
    ("cramped", include_str!("../../layouts/cramped.layout")),
    ("ring", include_str!("../../layouts/ring.layout")),
    ("forced", include_str!("../../layouts/forced.layout")),
    ("full_divider_tomato", include_str!("../../layouts/full_divider_tomato.layout")),
    ("full_divider_tomato_lettuce", include_str!("../../layouts/full_divider_tomato_lettuce.layout")),
    ("full_divider_mixed", include_str!("../../layouts/full_divider_mixed.layout")),
    ("partial_divider_tomato", include_str!("../../layouts/partial_divider_tomato.layout")),
    ("partial_divider_tomato_lettuce", include_str!("../../layouts/partial_divider_tomato_lettuce.layout")),
    ("partial_divider_mixed", include_str!("../../layouts/partial_divider_mixed.layout")),
    ("open_divider_tomato", include_str!("../../layouts/open_divider_tomato.layout")),
    ("open_divider_tomato_lettuce", include_str!("../../layouts/open_divider_tomato_lettuce.layout")),
    ("open_divider_mixed", include_str!("../../layouts/open_divider_mixed.layout")),
];

/// The five soup-domain layouts in order of increasing coordination demand.
pub const SOUP_LAYOUTS: [&str; 5] = ["asymmetric", "spacey", "cramped", "ring", "forced"];

/// The nine salad scenarios (three geometries times three tasks).
pub const SALAD_LAYOUTS: [&str; 9] = [
    "full_divider_tomato",
    "full_divider_tomato_lettuce",
    "full_divider_mixed",
    "partial_divider_tomato",
    "partial_divider_tomato_lettuce",
    "partial_divider_mixed",
    "open_divider_tomato",
    "open_divider_tomato_lettuce",
    "open_divider_mixed",
];

pub fn builtin_layout_text(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn builtin_layout(name: &str) -> Result<Layout> {
    let text = builtin_layout_text(name)
        .ok_or_else(|| Error::layout(name, "no built-in layout with this name"))?;
    Layout::parse(text)
}

impl Layout {
    /// Parses a layout file: a header line followed by a rectangular grid.
    pub fn parse(text: &str) -> Result<Layout> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::layout("?", "empty layout file"))?;
        let (name, domain, task) = parse_header(header)?;

        let rows: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::layout(&name, "grid has no rows"));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut tiles = Vec::with_capacity(width * height);
        let mut spawns: Vec<(u32, Pos)> = Vec::new();
        let mut initial_items = Vec::new();
        let mut pots = Vec::new();
        let mut boards = Vec::new();

        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::layout(
                    &name,
                    format!(
                        "ragged grid: row {y} has {} columns, expected {width}",
                        row.chars().count()
                    ),
                ));
            }
            for (x, c) in row.chars().enumerate() {
                let pos = Pos::new(x as i32, y as i32);
                let placed = |ingredient: Option<Ingredient>| match (domain, ingredient) {
                    (DomainKind::Soup, Some(i)) => (Tile::Dispenser(Dispensed::Ingredient(i)), None),
                    (DomainKind::Soup, None) => (Tile::Dispenser(Dispensed::Dish), None),
                    (DomainKind::Salad, Some(i)) => (Tile::Counter, Some(Item::Raw(i))),
                    (DomainKind::Salad, None) => (Tile::Counter, Some(Item::Dish)),
                };
                let (tile, item) = match c {
                    ' ' => (Tile::Floor, None),
                    'X' => (Tile::Counter, None),
                    'O' => placed(Some(Ingredient::Onion)),
                    'T' => placed(Some(Ingredient::Tomato)),
                    'L' => placed(Some(Ingredient::Lettuce)),
                    'D' => placed(None),
                    'P' => {
                        pots.push(pos);
                        (Tile::Pot, None)
                    }
                    'C' => {
                        boards.push(pos);
                        (Tile::CuttingBoard, None)
                    }
                    'S' => (Tile::ServeTile, None),
                    '1'..='9' => {
                        spawns.push((c.to_digit(10).unwrap_or(0), pos));
                        (Tile::Floor, None)
                    }
                    other => {
                        return Err(Error::layout(
                            &name,
                            format!("unknown character {other:?} at ({x}, {y})"),
                        ))
                    }
                };
                if let Some(item) = item {
                    initial_items.push((pos, item));
                }
                tiles.push(tile);
            }
        }

        spawns.sort();
        if spawns.is_empty() || spawns.len() > 2 {
            return Err(Error::layout(
                &name,
                format!("expected 1 or 2 spawn points, found {}", spawns.len()),
            ));
        }
        for (i, (n, _)) in spawns.iter().enumerate() {
            if *n as usize != i + 1 {
                return Err(Error::layout(&name, "spawn points must be numbered 1, 2"));
            }
        }
        if domain == DomainKind::Soup && pots.is_empty() {
            return Err(Error::layout(&name, "soup layout has no pot"));
        }
        if domain == DomainKind::Salad && task.is_none() {
            return Err(Error::layout(&name, "salad layout needs a task"));
        }

        let mut layout = Layout {
            name,
            domain,
            task,
            width: width as i32,
            height: height as i32,
            tiles,
            spawns: spawns.into_iter().map(|(_, p)| (p, Dir::Up)).collect(),
            initial_items,
            pots,
            boards,
            components: Vec::new(),
            component_count: 0,
        };
        layout.label_components();
        layout.validate_named()?;
        Ok(layout)
    }

    pub fn tile(&self, pos: Pos) -> Option<Tile> {
        self.index(pos).map(|i| self.tiles[i])
    }

    pub fn index(&self, pos: Pos) -> Option<usize> {
        if pos.x < 0 || pos.y < 0 || pos.x >= self.width || pos.y >= self.height {
            None
        } else {
            Some((pos.y * self.width + pos.x) as usize)
        }
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index as i32 % self.width, index as i32 / self.width)
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_floor(&self, pos: Pos) -> bool {
        matches!(self.tile(pos), Some(Tile::Floor))
    }

    pub fn positions(&self) -> impl Iterator<Item = (Pos, Tile)> + '_ {
        self.tiles
            .iter()
            .enumerate()
            .map(|(i, t)| (self.pos_of(i), *t))
    }

    pub fn agent_count(&self) -> usize {
        self.spawns.len()
    }

    /// Errors unless the layout provides at least `agents` spawn points.
    pub fn check_agents(&self, agents: usize) -> Result<()> {
        if agents == 0 || agents > self.spawns.len() {
            return Err(Error::layout(
                &self.name,
                format!(
                    "scenario needs {agents} agents but layout has {} spawn points",
                    self.spawns.len()
                ),
            ));
        }
        Ok(())
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn component(&self, pos: Pos) -> Option<usize> {
        self.index(pos).and_then(|i| self.components[i])
    }

    /// Floor components adjacent to a non-floor tile.
    pub fn adjacent_components(&self, pos: Pos) -> Vec<usize> {
        let mut out: Vec<usize> = Dir::ALL
            .iter()
            .filter_map(|d| self.component(pos.step(*d)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn label_components(&mut self) {
        let mut comps = vec![None; self.tiles.len()];
        let mut next = 0;
        for start in 0..self.tiles.len() {
            if !self.tiles[start].is_floor() || comps[start].is_some() {
                continue;
            }
            comps[start] = Some(next);
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                let p = self.pos_of(i);
                for d in Dir::ALL {
                    if let Some(j) = self.index(p.step(d)) {
                        if self.tiles[j].is_floor() && comps[j].is_none() {
                            comps[j] = Some(next);
                            queue.push_back(j);
                        }
                    }
                }
            }
            next += 1;
        }
        self.components = comps;
        self.component_count = next;
    }

    fn validate_named(&self) -> Result<()> {
        match self.name.as_str() {
            "forced" => self.validate_forced(),
            "asymmetric" => self.validate_asymmetric(),
            _ => Ok(()),
        }
    }

    fn validate_forced(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::layout(&self.name, format!("forced layout: {msg}")));
        if self.component_count != 2 {
            return fail("floor must split into exactly two regions");
        }
        let pot_side: Vec<usize> = self
            .pots
            .iter()
            .flat_map(|p| self.adjacent_components(*p))
            .collect();
        let ingredient_side: Vec<usize> = self
            .positions()
            .filter(|(_, t)| matches!(t, Tile::Dispenser(Dispensed::Ingredient(_))))
            .flat_map(|(p, _)| self.adjacent_components(p))
            .collect();
        if pot_side.is_empty() || ingredient_side.is_empty() {
            return fail("pots and ingredient dispensers must be reachable");
        }
        let pot_region = pot_side[0];
        if pot_side.iter().any(|c| *c != pot_region) {
            return fail("pots must be reachable from one region only");
        }
        if ingredient_side.contains(&pot_region) {
            return fail("ingredient dispensers must only be reachable from the other region");
        }
        let shared = self
            .positions()
            .filter(|(_, t)| *t == Tile::Counter)
            .any(|(p, _)| self.adjacent_components(p).len() == 2);
        if !shared {
            return fail("no counter borders both regions");
        }
        Ok(())
    }

    fn validate_asymmetric(&self) -> Result<()> {
        let fail = |msg: &str| {
            Err(Error::layout(
                &self.name,
                format!("asymmetric layout: {msg}"),
            ))
        };
        if self.component_count != 2 {
            return fail("floor must split into exactly two regions");
        }
        let spawn_regions: Vec<Option<usize>> =
            self.spawns.iter().map(|(p, _)| self.component(*p)).collect();
        if spawn_regions.len() != 2 || spawn_regions[0] == spawn_regions[1] {
            return fail("each region must hold one spawn point");
        }
        let shared_pots = self
            .pots
            .iter()
            .filter(|p| self.adjacent_components(**p).len() == 2)
            .count();
        if shared_pots < 2 {
            return fail("two pots must be reachable from both regions");
        }
        Ok(())
    }
}

fn parse_header(line: &str) -> Result<(String, DomainKind, Option<SaladTask>)> {
    let mut name = None;
    let mut domain = None;
    let mut task = None;
    for field in line.split(';').map(str::trim).filter(|f| !f.is_empty()) {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::layout("?", format!("malformed header field {field:?}")))?;
        let value = value.trim();
        match key.trim() {
            "name" => name = Some(value.to_string()),
            "domain" => {
                domain = Some(match value {
                    "soup" => DomainKind::Soup,
                    "salad" => DomainKind::Salad,
                    other => return Err(Error::layout("?", format!("unknown domain {other:?}"))),
                })
            }
            "task" if value.is_empty() => {}
            "task" => {
                task = Some(
                    value
                        .parse::<SaladTask>()
                        .map_err(|e| Error::layout("?", e))?,
                )
            }
            other => return Err(Error::layout("?", format!("unknown header key {other:?}"))),
        }
    }
    let name = name.ok_or_else(|| Error::layout("?", "header lacks name="))?;
    let domain = domain.ok_or_else(|| Error::layout(&name, "header lacks domain="))?;
    Ok((name, domain, task))
}
