//! BnB-ADOPT for distributed constraint optimization: agents that run a
//! depth-first branch-and-bound search over a pseudo-tree by exchanging
//! VALUE, COST and TERMINATE messages, a deterministic simulator to run
//! them, problem generators and an exact oracle for checking results.
//!
//! ```
//! use dcop::{fixtures, run, Cost, SimConfig, Variant};
//!
//! let p = fixtures::example_problem();
//! let t = fixtures::example_tree(&p);
//! let h = fixtures::example_heuristics(&p, &t);
//! let out = run(&p, &t, &h, &SimConfig::new(Variant::Optimal)).unwrap();
//! assert_eq!((out.final_cost, out.cycles), (Cost::from(12), 9));
//! ```

pub mod agent;
pub mod context;
pub mod cost;
pub mod error;
pub mod fixtures;
pub mod gen;
pub mod heuristics;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pseudotree;
pub mod sim;

pub use agent::{compute_limit, AgentEnv, AgentState, Message, Outgoing, Variant};
pub use context::{compatible, priority_merge, Context, ContextEntry};
pub use cost::Cost;
pub use error::{Error, Result};
pub use heuristics::HeuristicTable;
pub use model::{delta_cost, Assignment, Constraint, Problem};
pub use oracle::{exact_solve, GammaOracle};
pub use pseudotree::PseudoTree;
pub use sim::{run, run_observed, BacktrackMode, RunOutcome, SimConfig, Transport, TransportConfig};
