//! Distributed multi-agent path finding on grid maps.

pub mod model;
pub mod partition;
pub mod abstract_plan;
pub mod negotiate;
pub mod motion;
pub mod runtime;
