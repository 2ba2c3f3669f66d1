//! Relay placement for wireless sensor networks in the presence of circular
//! obstacles.
//!
//! Terminals must be linked through relays so that the directed
//! communication graph is strongly connected, no transmission disk enters an
//! obstacle, and the total transmit power (sum of squared radii) is small.

pub mod analytic;
pub mod error;
pub mod geometry;
pub mod homotopy;
pub mod network;
pub mod optimizer;
pub mod prescan;
pub mod steiner;
pub mod visgraph;

pub use error::{Error, Result};
