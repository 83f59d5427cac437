use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ingredient {
    Onion,
    Tomato,
    Lettuce,
}

/// Cut ingredients on a plate (salad domain). Only tomato and lettuce are cut.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlateContents {
    pub tomato: bool,
    pub lettuce: bool,
}

impl PlateContents {
    pub fn with(self, ingredient: Ingredient) -> Option<PlateContents> {
        match ingredient {
            Ingredient::Tomato if !self.tomato => Some(PlateContents {
                tomato: true,
                ..self
            }),
            Ingredient::Lettuce if !self.lettuce => Some(PlateContents {
                lettuce: true,
                ..self
            }),
            _ => None,
        }
    }

    pub fn contains(self, ingredient: Ingredient) -> bool {
        match ingredient {
            Ingredient::Tomato => self.tomato,
            Ingredient::Lettuce => self.lettuce,
            Ingredient::Onion => false,
        }
    }

    pub fn recipe(self) -> Option<Recipe> {
        match (self.tomato, self.lettuce) {
            (true, false) => Some(Recipe::TomatoSalad),
            (false, true) => Some(Recipe::LettuceSalad),
            (true, true) => Some(Recipe::MixedSalad),
            (false, false) => None,
        }
    }

    /// True when every ingredient here also appears in `recipe`.
    pub fn fits(self, recipe: Recipe) -> bool {
        let need = recipe.salad_contents();
        (!self.tomato || need.tomato) && (!self.lettuce || need.lettuce)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Item {
    Raw(Ingredient),
    Dish,
    Soup(Recipe),
    Cut(Ingredient),
    Salad(PlateContents),
}

impl Item {
    pub fn class(self) -> ItemClass {
        match self {
            Item::Raw(Ingredient::Onion) => ItemClass::Onion,
            Item::Raw(Ingredient::Tomato) => ItemClass::Tomato,
            Item::Raw(Ingredient::Lettuce) => ItemClass::Lettuce,
            Item::Dish => ItemClass::Dish,
            Item::Soup(_) => ItemClass::Soup,
            Item::Cut(Ingredient::Lettuce) => ItemClass::CutLettuce,
            Item::Cut(_) => ItemClass::CutTomato,
            Item::Salad(_) => ItemClass::Salad,
        }
    }
}

/// Coarse item category used to parameterize intentions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ItemClass {
    Onion,
    Tomato,
    Lettuce,
    Dish,
    Soup,
    CutTomato,
    CutLettuce,
    Salad,
}

impl ItemClass {
    pub fn short(self) -> &'static str {
        match self {
            ItemClass::Onion => "O",
            ItemClass::Tomato => "T",
            ItemClass::Lettuce => "L",
            ItemClass::Dish => "D",
            ItemClass::Soup => "S",
            ItemClass::CutTomato => "cutT",
            ItemClass::CutLettuce => "cutL",
            ItemClass::Salad => "plate",
        }
    }

    pub fn raw_ingredient(self) -> Option<Ingredient> {
        match self {
            ItemClass::Onion => Some(Ingredient::Onion),
            ItemClass::Tomato => Some(Ingredient::Tomato),
            ItemClass::Lettuce => Some(Ingredient::Lettuce),
            _ => None,
        }
    }
}

/// An order, and equally a goal an agent may pursue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Recipe {
    OnionSoup,
    TomatoSoup,
    TomatoSalad,
    LettuceSalad,
    MixedSalad,
}

impl Recipe {
    pub const SOUPS: [Recipe; 2] = [Recipe::OnionSoup, Recipe::TomatoSoup];
    pub const SALADS: [Recipe; 3] = [Recipe::TomatoSalad, Recipe::LettuceSalad, Recipe::MixedSalad];

    pub fn soup_of(ingredient: Ingredient) -> Option<Recipe> {
        match ingredient {
            Ingredient::Onion => Some(Recipe::OnionSoup),
            Ingredient::Tomato => Some(Recipe::TomatoSoup),
            Ingredient::Lettuce => None,
        }
    }

    pub fn soup_ingredient(self) -> Option<Ingredient> {
        match self {
            Recipe::OnionSoup => Some(Ingredient::Onion),
            Recipe::TomatoSoup => Some(Ingredient::Tomato),
            _ => None,
        }
    }

    /// Points for delivering this soup; salads score per completed task.
    pub fn soup_points(self) -> f64 {
        match self {
            Recipe::OnionSoup => 20.0,
            Recipe::TomatoSoup => 15.0,
            _ => 0.0,
        }
    }

    pub fn cook_time(self) -> u32 {
        match self {
            Recipe::OnionSoup => 20,
            Recipe::TomatoSoup => 15,
            _ => 0,
        }
    }

    pub fn salad_contents(self) -> PlateContents {
        match self {
            Recipe::TomatoSalad => PlateContents {
                tomato: true,
                lettuce: false,
            },
            Recipe::LettuceSalad => PlateContents {
                tomato: false,
                lettuce: true,
            },
            Recipe::MixedSalad => PlateContents {
                tomato: true,
                lettuce: true,
            },
            _ => PlateContents::default(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Recipe::OnionSoup => "onion_soup",
            Recipe::TomatoSoup => "tomato_soup",
            Recipe::TomatoSalad => "tomato_salad",
            Recipe::LettuceSalad => "lettuce_salad",
            Recipe::MixedSalad => "mixed_salad",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Salad-domain tasks: the full set of dishes that must be delivered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaladTask {
    Tomato,
    TomatoLettuce,
    Mixed,
}

impl SaladTask {
    pub fn dishes(self) -> Vec<Recipe> {
        match self {
            SaladTask::Tomato => vec![Recipe::TomatoSalad],
            SaladTask::TomatoLettuce => vec![Recipe::TomatoSalad, Recipe::LettuceSalad],
            SaladTask::Mixed => vec![Recipe::MixedSalad],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SaladTask::Tomato => "tomato",
            SaladTask::TomatoLettuce => "tomato_lettuce",
            SaladTask::Mixed => "mixed",
        }
    }
}

impl FromStr for SaladTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tomato" => Ok(SaladTask::Tomato),
            "tomato_lettuce" | "tomato+lettuce" => Ok(SaladTask::TomatoLettuce),
            "mixed" => Ok(SaladTask::Mixed),
            other => Err(format!("unknown salad task {other:?}")),
        }
    }
}

impl fmt::Display for SaladTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
