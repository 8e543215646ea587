//! Deterministic single-miner blockchain simulator.
//!
//! Redactable transactions anchor blocks through their chameleon digest, so a
//! verified rewrite replaces the body in place and leaves every header and
//! `tx_root` unchanged.

mod chain;
pub mod drill;
mod node;
pub mod scenario;
mod sim;

pub use chain::{
    dump_chain, solve, tx_root, validate_block, Block, BlockDump, BlockError, BlockHeader,
    ChainDump, LedgerTx, Target, TxDump, DEFAULT_DIFFICULTY,
};
pub use drill::{run_drill, DrillPlan, DrillStats, DRILL_DUE_TICKS};
pub use node::{LedgerError, NodeState, RedactionRequest, Rejection, DEFAULT_MAX_ATTEMPTS};
pub use scenario::{Event, Scenario, ScenarioOutcome};
pub use sim::{RedactFailure, SimClock, SimError, Simulator};

#[cfg(test)]
mod tests;
