//! Multi-object search in simulated 2D grid worlds.
//!
//! A robot with a cone-of-view camera searches an unknown indoor scene for a
//! list of target objects. Per-target semantic value maps are fused from
//! similarity scores, decayed by revisit counts, and clustered into candidate
//! goals; a POMDP planner solved with Monte-Carlo tree search picks between
//! candidate points and the best exploration frontier. A benchmark harness
//! runs seeded episodes against baseline and ablated policies and reports
//! success rate and path-length-weighted success.

pub mod candidates;
pub mod config;
pub mod geomap;
pub mod grid;
pub mod harness;
pub mod planner;
pub mod scenegen;
pub mod trace;
pub mod valuemap;
pub mod world;
