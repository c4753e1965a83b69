//! SINR reception zones for uniform-power networks with path-loss exponent 2:
//! exact membership and boundary tests, radius bounds, and an approximate
//! point-location index with certified inside/outside cells.

pub mod cli;
pub mod error;
pub mod exact;
pub mod filter;
pub mod geom;
pub mod locate;
pub mod model;
pub mod poly;
pub mod zones;

pub use error::{Error, Result};
pub use exact::{Enclosure, Rational};
pub use model::{distance_sq, Network, Point, Similarity, Station};
