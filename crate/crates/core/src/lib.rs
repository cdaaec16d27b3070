//! EFX allocations for fair-division instances whose goods are the edges of a
//! triangle-free multi-graph.
//!
//! Agents are vertices and every good is an edge between the two agents who
//! value it. [`solve`] runs a three-phase construction: a picking sequence
//! with an initial EFX orientation, a potential-driven repair loop, and a final
//! dumping step that hands the leftover goods to enviers. Every phase checks its
//! own postconditions through the independent checkers in [`verify`].

pub mod bench;
pub mod bundle;
pub mod config;
pub mod cuts;
pub mod error;
pub mod gen;
pub mod io;
pub mod model;
pub mod oracle;
pub mod phase1;
pub mod phase2;
pub mod phase3;
pub mod solve;
pub mod state;
pub mod verify;

pub use bundle::Bundle;
pub use config::{CheckLevel, SolveConfig, TraceRecord, TraceSink};
pub use error::{EfxError, Result};
pub use model::{
    AgentId, Allocation, Good, GoodId, Instance, Valuation, ValuationClass, ValuationSpec,
};
pub use solve::{solve, solve_with, Metrics, SolveResult, StopAfter};
pub use state::SolverState;
