//! The intention and goal domains and the inter-layer likelihood tables.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::belief::LikelihoodMatrix;
use crate::kitchen::{DomainKind, Ingredient, ItemClass, Layout, Recipe};

pub const GOAL_DOMAIN: &str = "goal";
pub const INTENTION_DOMAIN: &str = "intention";

/// A parameterized high-level action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Intention {
    /// Pick up the closest item of a class.
    GetItem(ItemClass),
    /// Drop the held item on the closest free counter.
    DropItem(ItemClass),
    /// Interact with one concrete pot (index into the layout's pots).
    InteractWithPot(usize),
    /// Cut the held ingredient at one concrete cutting board.
    ChopAt(usize),
    /// Put a cut ingredient on a plate, bringing either one to the other.
    PlateIngredient(Ingredient),
    /// Bring a finished dish to the serving tile.
    Deliver(Recipe),
    /// Drop the held item on the closest free counter both agents can reach.
    HandOver(ItemClass),
    Wait,
}

impl Intention {
    /// The item class an interaction with the target consumes or yields.
    pub fn item_class(self) -> Option<ItemClass> {
        match self {
            Intention::GetItem(c) | Intention::DropItem(c) | Intention::HandOver(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_wait(self) -> bool {
        matches!(self, Intention::Wait)
    }
}

impl fmt::Display for Intention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intention::GetItem(c) => write!(f, "get-item({})", c.short()),
            Intention::DropItem(c) => write!(f, "drop-item({})", c.short()),
            Intention::InteractWithPot(p) => write!(f, "interact-with-pot({p})"),
            Intention::ChopAt(b) => write!(f, "chop-at({b})"),
            Intention::PlateIngredient(i) => write!(f, "plate({i:?})"),
            Intention::Deliver(r) => write!(f, "deliver({r})"),
            Intention::HandOver(c) => write!(f, "hand-over({})", c.short()),
            Intention::Wait => f.write_str("wait"),
        }
    }
}

const SOUP_ITEMS: [ItemClass; 4] = [
    ItemClass::Onion,
    ItemClass::Tomato,
    ItemClass::Dish,
    ItemClass::Soup,
];

const SALAD_ITEMS: [ItemClass; 6] = [
    ItemClass::Tomato,
    ItemClass::Lettuce,
    ItemClass::CutTomato,
    ItemClass::CutLettuce,
    ItemClass::Dish,
    ItemClass::Salad,
];

/// The instantiated intentions and goals of one layout together with the
/// likelihood tables linking the two layers.
#[derive(Clone, Debug, PartialEq)]
pub struct IntentionSet {
    pub domain: DomainKind,
    pub intentions: Vec<Intention>,
    pub goals: Vec<Recipe>,
    /// `P(intention | goal)`: rows are goals.
    pub goal_to_intention: LikelihoodMatrix,
    /// `P(goal | intention)`: rows are intentions.
    pub intention_to_goal: LikelihoodMatrix,
}

impl IntentionSet {
    /// Every intention row instantiated for the layout, in table order; pot
    /// and board intentions are instantiated per physical station.
    pub fn for_layout(layout: &Layout) -> Self {
        let mut intentions = Vec::new();
        let (items, goals): (&[ItemClass], Vec<Recipe>) = match layout.domain {
            DomainKind::Soup => (&SOUP_ITEMS, Recipe::SOUPS.to_vec()),
            DomainKind::Salad => (&SALAD_ITEMS, Recipe::SALADS.to_vec()),
        };
        intentions.extend(items.iter().map(|c| Intention::GetItem(*c)));
        intentions.extend(items.iter().map(|c| Intention::DropItem(*c)));
        match layout.domain {
            DomainKind::Soup => {
                intentions.extend((0..layout.pots.len()).map(Intention::InteractWithPot));
                intentions.push(Intention::Deliver(Recipe::TomatoSoup));
                intentions.push(Intention::Deliver(Recipe::OnionSoup));
            }
            DomainKind::Salad => {
                intentions.extend((0..layout.boards.len()).map(Intention::ChopAt));
                intentions.push(Intention::PlateIngredient(Ingredient::Tomato));
                intentions.push(Intention::PlateIngredient(Ingredient::Lettuce));
                intentions.extend(Recipe::SALADS.iter().map(|r| Intention::Deliver(*r)));
            }
        }
        intentions.extend(items.iter().map(|c| Intention::HandOver(*c)));
        intentions.push(Intention::Wait);
        Self::from_parts(layout.domain, intentions, goals)
    }

    pub fn from_parts(domain: DomainKind, intentions: Vec<Intention>, goals: Vec<Recipe>) -> Self {
        let relevance: Vec<Vec<f64>> = goals
            .iter()
            .map(|g| {
                intentions
                    .iter()
                    .map(|i| if serves_goal(*i, *g) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let goal_to_intention =
            LikelihoodMatrix::from_weights(GOAL_DOMAIN, INTENTION_DOMAIN, relevance.clone())
                .expect("every goal has Wait as a relevant intention");
        let back: Vec<Vec<f64>> = (0..intentions.len())
            .map(|i| {
                let row: Vec<f64> = relevance.iter().map(|r| r[i]).collect();
                if row.iter().sum::<f64>() > 0.0 {
                    row
                } else {
                    vec![1.0; goals.len()]
                }
            })
            .collect();
        let intention_to_goal = LikelihoodMatrix::from_weights(INTENTION_DOMAIN, GOAL_DOMAIN, back)
            .expect("rows are non-empty");
        Self {
            domain,
            intentions,
            goals,
            goal_to_intention,
            intention_to_goal,
        }
    }

    pub fn len(&self) -> usize {
        self.intentions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intentions.is_empty()
    }

    pub fn index_of(&self, intention: Intention) -> Option<usize> {
        self.intentions.iter().position(|i| *i == intention)
    }

    pub fn goal_index(&self, goal: Recipe) -> Option<usize> {
        self.goals.iter().position(|g| *g == goal)
    }

    pub fn wait_index(&self) -> usize {
        self.index_of(Intention::Wait).expect("Wait is always instantiated")
    }
}

/// Recipe knowledge: whether an intention is a step toward a goal. Ordering of
/// the steps is left to the bottom-up affordances.
pub fn serves_goal(intention: Intention, goal: Recipe) -> bool {
    let class_fits = |c: ItemClass| match goal {
        Recipe::OnionSoup | Recipe::TomatoSoup => match c {
            ItemClass::Onion | ItemClass::Tomato => {
                c.raw_ingredient() == goal.soup_ingredient()
            }
            ItemClass::Dish | ItemClass::Soup => true,
            _ => false,
        },
        _ => {
            let need = goal.salad_contents();
            match c {
                ItemClass::Tomato | ItemClass::CutTomato => need.tomato,
                ItemClass::Lettuce | ItemClass::CutLettuce => need.lettuce,
                ItemClass::Dish | ItemClass::Salad => true,
                _ => false,
            }
        }
    };
    match intention {
        Intention::GetItem(c) | Intention::DropItem(c) | Intention::HandOver(c) => class_fits(c),
        Intention::InteractWithPot(_) => goal.soup_ingredient().is_some(),
        Intention::ChopAt(_) => goal.soup_ingredient().is_none(),
        Intention::PlateIngredient(i) => goal.salad_contents().contains(i),
        Intention::Deliver(r) => r == goal,
        Intention::Wait => true,
    }
}
