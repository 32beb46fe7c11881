//! Task planning for mobile manipulators over topological maps.
//!
//! The pipeline turns a manipulation-only PDDL domain into a mobile one,
//! compresses a building-scale map around the nodes a task needs, assembles
//! a factored problem from per-node groundings, solves it optimally and
//! replays the result in a symbolic emulator.

pub mod pddl;
pub mod expand;
pub mod topo;
pub mod grounding;
pub mod forge;
pub mod planner;
pub mod emulator;
pub mod pipeline;
