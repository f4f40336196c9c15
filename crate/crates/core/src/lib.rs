//! Evolomino puzzles: parsing, rule checking, an integer linear model of the
//! rules, a branch-and-propagate solver over that model, a random puzzle
//! generator and benchmarking helpers.

pub mod bench;
pub mod generator;
pub mod grid;
pub mod model;
pub mod rules;
pub mod solver;

pub use grid::{parse_puzzle, serialize_puzzle, Coord, Puzzle, SolutionGrid};
pub use model::{build_model, build_model_with, IlpModel};
pub use rules::verify;
