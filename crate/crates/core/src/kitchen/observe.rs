use serde::{Deserialize, Serialize};

use super::item::Recipe;
use super::layout::DomainKind;
use super::state::{AgentId, KitchenState};

/// What an agent can see of the open orders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OrderView {
    Known(Vec<Recipe>),
    /// Order-blind: every recipe of the domain is equally likely.
    Uniform(Vec<Recipe>),
}

impl OrderView {
    /// Whether a delivery of `recipe` could be accepted, as far as the viewer knows.
    pub fn may_accept(&self, recipe: Recipe) -> bool {
        match self {
            OrderView::Known(orders) => orders.contains(&recipe),
            OrderView::Uniform(recipes) => recipes.contains(&recipe),
        }
    }
}

/// A read-only snapshot of the world as seen by one agent. The kitchen is
/// fully observable; only the order channel differs between modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub state: KitchenState,
    pub viewer: AgentId,
    pub orders: OrderView,
}

impl Observation {
    pub fn partner(&self) -> Option<AgentId> {
        (0..self.state.agents.len()).find(|a| *a != self.viewer)
    }
}

pub fn observe(state: &KitchenState, viewer: AgentId, order_blind: bool) -> Observation {
    assert!(viewer < state.agents.len(), "unknown agent {viewer}");
    let mut snapshot = state.clone();
    let orders = if order_blind {
        snapshot.orders.clear();
        let recipes = match state.domain() {
            DomainKind::Soup => Recipe::SOUPS.to_vec(),
            DomainKind::Salad => Recipe::SALADS.to_vec(),
        };
        OrderView::Uniform(recipes)
    } else {
        OrderView::Known(state.orders.clone())
    };
    Observation {
        state: snapshot,
        viewer,
        orders,
    }
}
