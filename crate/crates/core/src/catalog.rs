//! Fixed object catalogs for the three tabletop tasks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scene::{ObjectId, ObjectInstance, Point, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Orange,
    Purple,
    White,
    Brown,
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Yellow,
        Color::Orange,
        Color::Purple,
        Color::White,
        Color::Brown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::Orange => "orange",
            Color::Purple => "purple",
            Color::White => "white",
            Color::Brown => "brown",
        }
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Red => [214, 39, 40],
            Color::Green => [44, 160, 44],
            Color::Blue => [31, 90, 200],
            Color::Yellow => [240, 210, 30],
            Color::Orange => [255, 127, 14],
            Color::Purple => [148, 80, 189],
            Color::White => [250, 250, 250],
            Color::Brown => [120, 72, 40],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Cube,
    Triangle,
    Star,
    Sphere,
    Cylinder,
    Box,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Triangle => "triangle",
            Shape::Star => "star",
            Shape::Sphere => "sphere",
            Shape::Cylinder => "cylinder",
            Shape::Box => "box",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Block,
    Polygon,
    Fruit,
    Snack,
    Beverage,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Block => "block",
            Category::Polygon => "polygon",
            Category::Fruit => "fruit",
            Category::Snack => "snack",
            Category::Beverage => "beverage",
        }
    }
}

macro_rules! token_display {
    ($($ty:ty),*) => {$(
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    )*};
}
token_display!(Color, Shape, Category);

impl FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Color::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown color {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub color: Color,
    pub shape: Shape,
    pub category: Category,
}

impl CatalogEntry {
    const fn new(name: &'static str, color: Color, shape: Shape, category: Category) -> Self {
        Self {
            name,
            color,
            shape,
            category,
        }
    }

    pub fn instantiate(&self, id: ObjectId, position: Point) -> ObjectInstance {
        ObjectInstance {
            id,
            name: self.name.to_string(),
            color: self.color,
            shape: self.shape,
            category: self.category,
            position,
        }
    }
}

const BLOCK: [CatalogEntry; 6] = [
    CatalogEntry::new("red cube", Color::Red, Shape::Cube, Category::Block),
    CatalogEntry::new("green cube", Color::Green, Shape::Cube, Category::Block),
    CatalogEntry::new("blue cube", Color::Blue, Shape::Cube, Category::Block),
    CatalogEntry::new("yellow cube", Color::Yellow, Shape::Cube, Category::Block),
    CatalogEntry::new("orange cube", Color::Orange, Shape::Cube, Category::Block),
    CatalogEntry::new("purple cube", Color::Purple, Shape::Cube, Category::Block),
];

const POLYGON: [CatalogEntry; 6] = [
    CatalogEntry::new("red triangle", Color::Red, Shape::Triangle, Category::Polygon),
    CatalogEntry::new("green triangle", Color::Green, Shape::Triangle, Category::Polygon),
    CatalogEntry::new("blue triangle", Color::Blue, Shape::Triangle, Category::Polygon),
    CatalogEntry::new("red star", Color::Red, Shape::Star, Category::Polygon),
    CatalogEntry::new("green star", Color::Green, Shape::Star, Category::Polygon),
    CatalogEntry::new("blue star", Color::Blue, Shape::Star, Category::Polygon),
];

const HOUSEHOLD: [CatalogEntry; 12] = [
    CatalogEntry::new("apple", Color::Red, Shape::Sphere, Category::Fruit),
    CatalogEntry::new("orange", Color::Orange, Shape::Sphere, Category::Fruit),
    CatalogEntry::new("lemon", Color::Yellow, Shape::Sphere, Category::Fruit),
    CatalogEntry::new("lime", Color::Green, Shape::Sphere, Category::Fruit),
    CatalogEntry::new("red drink", Color::Red, Shape::Cylinder, Category::Beverage),
    CatalogEntry::new("orange drink", Color::Orange, Shape::Cylinder, Category::Beverage),
    CatalogEntry::new("yellow drink", Color::Yellow, Shape::Cylinder, Category::Beverage),
    CatalogEntry::new("green drink", Color::Green, Shape::Cylinder, Category::Beverage),
    CatalogEntry::new("choco bar", Color::Brown, Shape::Box, Category::Snack),
    CatalogEntry::new("chips", Color::Yellow, Shape::Cylinder, Category::Snack),
    CatalogEntry::new("cookie pack", Color::Red, Shape::Box, Category::Snack),
    CatalogEntry::new("cracker box", Color::Orange, Shape::Box, Category::Snack),
];

/// The objects available to one task, in id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Catalog {
    pub task: Task,
    pub entries: &'static [CatalogEntry],
}

impl Catalog {
    pub fn for_task(task: Task) -> Self {
        let entries: &'static [CatalogEntry] = match task {
            Task::Block => &BLOCK,
            Task::Polygon => &POLYGON,
            Task::Household => &HOUSEHOLD,
        };
        Catalog { task, entries }
    }

    pub fn entry(&self, name: &str) -> Option<&'static CatalogEntry> {
        let wanted = name.trim().to_lowercase();
        self.entries.iter().find(|e| e.name == wanted)
    }

    pub fn contains(&self, obj: &ObjectInstance) -> bool {
        self.entries.iter().any(|e| {
            e.name == obj.name
                && e.color == obj.color
                && e.shape == obj.shape
                && e.category == obj.category
        })
    }

    /// Id of a catalog object: its index in the entry list.
    pub fn id_of(&self, name: &str) -> Option<ObjectId> {
        let wanted = name.trim().to_lowercase();
        self.entries
            .iter()
            .position(|e| e.name == wanted)
            .map(|i| i as ObjectId)
    }

    fn distinct<T: PartialEq + Copy>(&self, f: impl Fn(&CatalogEntry) -> T) -> Vec<T> {
        let mut out = Vec::new();
        for e in self.entries {
            let v = f(e);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn colors(&self) -> Vec<Color> {
        self.distinct(|e| e.color)
    }

    pub fn shapes(&self) -> Vec<Shape> {
        self.distinct(|e| e.shape)
    }

    pub fn categories(&self) -> Vec<Category> {
        self.distinct(|e| e.category)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_catalog_is_six_distinct_cubes() {
        let c = Catalog::for_task(Task::Block);
        assert_eq!(c.entries.len(), 6);
        assert!(c.entries.iter().all(|e| e.shape == Shape::Cube));
        assert_eq!(c.colors().len(), 6);
    }

    #[test]
    fn polygon_catalog_is_three_triangles_three_stars() {
        let c = Catalog::for_task(Task::Polygon);
        let triangles = c.entries.iter().filter(|e| e.shape == Shape::Triangle).count();
        let stars = c.entries.iter().filter(|e| e.shape == Shape::Star).count();
        assert_eq!((triangles, stars), (3, 3));
    }

    #[test]
    fn household_catalog_spans_three_categories() {
        let c = Catalog::for_task(Task::Household);
        assert_eq!(c.entries.len(), 12);
        let mut cats = c.categories();
        cats.sort();
        assert_eq!(cats, vec![Category::Fruit, Category::Snack, Category::Beverage]);
        let names = c.names();
        for n in ["apple", "lemon", "orange", "red drink", "yellow drink", "orange drink"] {
            assert!(names.contains(&n));
        }
    }

    #[test]
    fn names_are_unique_in_every_catalog() {
        for task in Task::ALL {
            let names = Catalog::for_task(task).names();
            for (i, a) in names.iter().enumerate() {
                assert!(!names[i + 1..].contains(a), "{a} repeated in {task}");
            }
        }
    }
}
