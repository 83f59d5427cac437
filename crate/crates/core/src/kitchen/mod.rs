//! Deterministic discrete-time kitchen: soup and salad configurations.

mod item;
mod layout;
mod observe;
mod state;

pub use item::{Ingredient, Item, ItemClass, PlateContents, Recipe, SaladTask};
pub use layout::{
    builtin_layout, builtin_layout_text, Dir, Dispensed, DomainKind, Layout, Pos, Tile,
    SALAD_LAYOUTS, SOUP_LAYOUTS,
};
pub use observe::{observe, Observation, OrderView};
pub use state::{AgentBody, AgentId, KitchenState, LowAction, PotState, StepOutcome, POT_CAPACITY};
