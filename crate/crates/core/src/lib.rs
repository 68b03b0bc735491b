//! Rainbow independent sets in matroids: volume-increasing swap cascades
//! for packing disjoint rainbow bases.

pub mod cascade;
pub mod error;
pub mod io;
pub mod matching;
pub mod matroid;
pub mod oracle;
pub mod rainbow;
pub mod rebalance;
pub mod selftest;
pub mod solver;
pub mod swap;

pub use error::{Error, Result};
pub use matroid::{ElementId, Matroid};
pub use rainbow::{Colour, Coloured, Family, Instance, Ris, UsedSet};
