//! Base graphs, voltage covers, lifted Dirac operators and towers.

pub mod circle;
pub mod graph;
pub mod tower;

pub use circle::{circle_operator, CircleMode};
pub use graph::{
    cover_permutation, derived_cover, graph_dirac, graph_from_json, graph_laplacian, graph_to_json, Edge,
    GradedGraphDirac, GraphSpec, VoltageGraph,
};
pub use tower::{tower, word_distance_profile, DeckTower, WordDistanceProfile};
