//! Bottom-up likelihoods: how strongly the current kitchen affords each
//! intention to a given agent.

use serde::{Deserialize, Serialize};

use crate::intention::Intention;
use crate::kitchen::{DomainKind, Ingredient, Item, ItemClass, PlateContents, PotState, POT_CAPACITY};
use crate::planner::Perception;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AffordanceConfig {
    /// Score for applicable but currently pointless intentions: delivering
    /// an unordered dish, dropping an item someone could use.
    pub slack: f64,
    /// Hand-over score multiplier when the partner's hands are full or the
    /// actor can use its item itself.
    pub handover_damping: f64,
    /// Pot score when holding a dish while the pot is still cooking.
    pub cooking_pot: f64,
}

impl Default for AffordanceConfig {
    fn default() -> Self {
        Self {
            slack: 0.05,
            handover_damping: 0.25,
            cooking_pot: 0.5,
        }
    }
}

/// Unnormalized affordance of `intention` for the perceiving agent. Zero when
/// the intention is inapplicable or its target is unreachable; `Wait` always
/// scores `1 / n_intentions`.
pub fn intention_affordance(
    p: &Perception<'_>,
    intention: Intention,
    n_intentions: usize,
    cfg: &AffordanceConfig,
) -> f64 {
    if intention == Intention::Wait {
        return 1.0 / n_intentions as f64;
    }
    let held = p.held();
    let score = match intention {
        Intention::GetItem(class) => {
            if held.is_some() {
                0.0
            } else if needed(p, class) || loose_usable(p, class) {
                1.0
            } else {
                0.0
            }
        }
        Intention::DropItem(class) => match held {
            Some(item) if item.class() == class => {
                if partner_plates_onto(p, item) || !has_consumer(p, item) {
                    1.0
                } else {
                    cfg.slack
                }
            }
            _ => 0.0,
        },
        Intention::HandOver(class) => match held {
            // Sharing a room, a hand-over is just a drop.
            Some(_) if !p.separated() => 0.0,
            Some(item) if item.class() == class => {
                if p.partner_held().is_some() || p.can_use_self(class) {
                    cfg.handover_damping
                } else {
                    1.0
                }
            }
            _ => 0.0,
        },
        Intention::InteractWithPot(k) => {
            let best = (0..p.state.pots.len())
                .map(|j| pot_raw(p, j, cfg))
                .fold(0.0, f64::max);
            if best > 0.0 {
                pot_raw(p, k, cfg) / best
            } else {
                0.0
            }
        }
        Intention::ChopAt(_) => match held {
            Some(Item::Raw(Ingredient::Tomato | Ingredient::Lettuce)) => 1.0,
            _ => 0.0,
        },
        // Applicability is fully decided by target resolution.
        Intention::PlateIngredient(_) => 1.0,
        Intention::Deliver(recipe) => {
            let carried = match held {
                Some(Item::Soup(r)) => Some(r),
                Some(Item::Salad(c)) => c.recipe(),
                _ => None,
            };
            if carried != Some(recipe) {
                0.0
            } else if p.orders.may_accept(recipe) {
                1.0
            } else {
                cfg.slack
            }
        }
        Intention::Wait => unreachable!(),
    };
    if score > 0.0 && p.resolve_target(intention).is_none() {
        0.0
    } else {
        score
    }
}

/// Pot score before normalization: applicability times `(1 + n) / (1 + d)`
/// with `n` ingredients already in the pot and `d` the plan length to it.
fn pot_raw(p: &Perception<'_>, k: usize, cfg: &AffordanceConfig) -> f64 {
    let pot = p.state.pots[k];
    let fit = match (p.held(), pot) {
        (Some(Item::Raw(ing)), _) if pot.accepts(ing) => 1.0,
        (Some(Item::Dish), PotState::Ready { .. }) => 1.0,
        (Some(Item::Dish), PotState::Cooking { .. }) => cfg.cooking_pot,
        _ => 0.0,
    };
    if fit == 0.0 {
        return 0.0;
    }
    let Some(cost) = p.field.cost_to_face(p.state.layout.pots[k]) else {
        return 0.0;
    };
    fit * (1.0 + pot.ingredient_count() as f64) / (1.0 + cost as f64)
}

fn partner_holds(p: &Perception<'_>, class: ItemClass) -> usize {
    usize::from(p.partner_held().is_some_and(|i| i.class() == class))
}

fn loose(p: &Perception<'_>, class: ItemClass) -> usize {
    p.state.loose_items().filter(|(_, i)| i.class() == class).count()
}

/// Holding an empty or partial plate next to a partner carrying a cut
/// ingredient that fits on it: putting the plate down lets them finish it.
fn partner_plates_onto(p: &Perception<'_>, held: Item) -> bool {
    let contents = match held {
        Item::Dish => PlateContents::default(),
        Item::Salad(c) => c,
        _ => return false,
    };
    !p.separated() && matches!(p.partner_held(), Some(Item::Cut(ing)) if p.plating_fits(contents, ing))
}

/// A reachable item of `class` lies on a counter and something could use it.
fn loose_usable(p: &Perception<'_>, class: ItemClass) -> bool {
    // Plates in salad are fetched only on demand; see `needed`.
    if p.state.domain() == DomainKind::Salad && matches!(class, ItemClass::Dish | ItemClass::Salad) {
        return false;
    }
    p.loose_candidates(class).any(|pos| {
        p.field.cost_to_face(pos).is_some()
            && p.state.item_at(pos).is_some_and(|item| has_consumer(p, item))
    })
}

/// Whether fetching another item of `class` serves an unmet demand.
fn needed(p: &Perception<'_>, class: ItemClass) -> bool {
    let supply = loose(p, class) + partner_holds(p, class);
    match (p.state.domain(), class) {
        (DomainKind::Soup, ItemClass::Onion | ItemClass::Tomato) => {
            let ing = class.raw_ingredient().expect("raw class");
            let demand: usize = p
                .state
                .pots
                .iter()
                .filter(|pot| pot.accepts(ing))
                .map(|pot| (POT_CAPACITY - pot.ingredient_count()) as usize)
                .sum();
            demand > supply
        }
        (DomainKind::Soup, ItemClass::Dish) => {
            let demand = p.state.pots.iter().filter(|pot| pot.has_soup_coming()).count();
            demand > supply
        }
        (_, ItemClass::Soup) => p.loose_candidates(class).any(|pos| {
            matches!(p.state.item_at(pos), Some(Item::Soup(r)) if p.orders.may_accept(r))
                && p.field.cost_to_face(pos).is_some()
        }),
        (DomainKind::Salad, ItemClass::Tomato | ItemClass::Lettuce) => {
            let ing = class.raw_ingredient().expect("raw class");
            let cut = match ing {
                Ingredient::Lettuce => ItemClass::CutLettuce,
                _ => ItemClass::CutTomato,
            };
            let demand = p
                .state
                .orders
                .iter()
                .filter(|r| r.salad_contents().contains(ing))
                .count();
            let plated = p
                .state
                .loose_items()
                .map(|(_, i)| i)
                .chain(p.partner_held())
                .filter(|i| matches!(i, Item::Salad(c) if c.contains(ing)))
                .count();
            // Raw salad ingredients lie on counters from the start, so only the
            // partner's hands and processed copies count as supply.
            demand > partner_holds(p, class) + loose(p, cut) + partner_holds(p, cut) + plated
        }
        (DomainKind::Salad, ItemClass::CutTomato | ItemClass::CutLettuce) => {
            let ing = if class == ItemClass::CutLettuce {
                Ingredient::Lettuce
            } else {
                Ingredient::Tomato
            };
            plate_available(p, ing)
        }
        (DomainKind::Salad, ItemClass::Dish) => {
            // A plate is worth fetching for a cut ingredient lying around with
            // no plate to go on, or for one the partner carries but cannot
            // bring to a plate itself.
            let fresh_plate = |ing| p.plating_fits(PlateContents::default(), ing);
            let loose_cut = p.state.loose_items().any(|(pos, i)| {
                matches!(i, Item::Cut(ing) if fresh_plate(ing) && !plate_available(p, ing))
                    && p.field.cost_to_face(pos).is_some()
            });
            let stuck_cut = matches!(p.partner_held(), Some(Item::Cut(ing)) if plate_available(p, ing))
                && !p
                    .state
                    .loose_items()
                    .any(|(pos, i)| matches!(i, Item::Dish | Item::Salad(_)) && p.partner_touches(pos));
            loose_cut || stuck_cut
        }
        // Only finished salads leave the counter; partial ones wait there for
        // the missing ingredient.
        (DomainKind::Salad, ItemClass::Salad) => p.loose_candidates(class).any(|pos| {
            matches!(p.state.item_at(pos), Some(Item::Salad(c)) if c.recipe().is_some_and(|r| p.orders.may_accept(r)))
                && p.field.cost_to_face(pos).is_some()
        }),
        _ => false,
    }
}

/// Some plate lying around could still take this cut ingredient.
fn plate_available(p: &Perception<'_>, ing: Ingredient) -> bool {
    p.state.loose_items().any(|(_, i)| match i {
        Item::Dish => p.plating_fits(PlateContents::default(), ing),
        Item::Salad(c) => p.plating_fits(c, ing),
        _ => false,
    })
}

/// Whether any station or item in the kitchen could use `item` right now.
fn has_consumer(p: &Perception<'_>, item: Item) -> bool {
    match item {
        Item::Raw(Ingredient::Onion) | Item::Raw(Ingredient::Tomato)
            if p.state.domain() == DomainKind::Soup =>
        {
            let ing = match item {
                Item::Raw(i) => i,
                _ => unreachable!(),
            };
            p.state.pots.iter().any(|pot| pot.accepts(ing))
        }
        Item::Dish if p.state.domain() == DomainKind::Soup => {
            p.state.pots.iter().any(|pot| pot.has_soup_coming())
        }
        Item::Cut(ing) => {
            plate_available(p, ing)
                || match p.partner_held() {
                    Some(Item::Dish) => p.plating_fits(PlateContents::default(), ing),
                    Some(Item::Salad(c)) => p.plating_fits(c, ing),
                    _ => false,
                }
        }
        Item::Dish => p
            .state
            .loose_items()
            .map(|(_, i)| i)
            .chain(p.partner_held())
            .any(|i| matches!(i, Item::Cut(_))),
        Item::Soup(r) => p.orders.may_accept(r),
        Item::Salad(c) => {
            c.recipe().is_some_and(|r| p.orders.may_accept(r))
                || p
                    .state
                    .loose_items()
                    .map(|(_, i)| i)
                    .chain(p.partner_held())
                    .any(|i| matches!(i, Item::Cut(ing) if p.plating_fits(c, ing)))
        }
        _ => true,
    }
}
