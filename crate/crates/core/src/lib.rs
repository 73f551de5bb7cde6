//! Optimal transmission switching on DC networks: network model, exact
//! big-M formulation, nearest-neighbour heuristics and the benchmark harness.

pub mod bench;
pub mod formulation;
pub mod grid;
pub mod knn;
