//! Status-aware scheduling: decoupled per-node MDP, policy bank over an
//! auxiliary-cost grid, and online cost adaptation.

mod adapt;
mod bank;
mod mdp;
mod whittle;

pub use adapt::{adapt_cost, AdaptationState, DEFAULT_DELTA_FRACTION, DEFAULT_EVAL_INT};
pub use bank::{model_hash, smart_tx_gate, AuxCostGrid, BankEntry, ErrorQuantizer, PolicyBank};
pub use mdp::{error_chain, solve_decoupled_mdp, Action, DecoupledMdp, MdpSolution, MAX_SWEEPS, SOLVE_TOLERANCE};
pub use whittle::{largest_index, whittle_index, whittle_indices};
