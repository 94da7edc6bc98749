//! Online proportional apportionment over exact rationals.
//!
//! At each step `t`, parties receive fractional vote shares `v^t` summing to
//! an integral house size `H^t`, and a method must irrevocably seat `H^t`
//! parties with positive votes. This crate provides:
//!
//! - the deterministic greedy method with its tight `(n-1)/2` worst-case
//!   deviation, plus the Hamilton comparison rule ([`greedy`]);
//! - adaptive adversaries (splitters and boosters) that force any online
//!   method toward that bound ([`adversary`]);
//! - exact feasible flows with lower bounds, integral flow decomposition,
//!   and hypersimplex decomposition ([`flow`]);
//! - the randomized network-flow method achieving global quota and exact
//!   per-step expected proportionality for up to three parties, and the
//!   two-party systematic sampler ([`randmethod`]);
//! - the offline lottery over global-quota methods ([`offline`]);
//! - online dependent rounding for multi-stage hypergraph covering
//!   ([`mmhsc`]).
//!
//! All quantities are [`rational::Rational`]; quota predicates and flow
//! capacities are decided exactly, never in floating point. See the
//! crate-level `examples/` directory for one runnable walkthrough per
//! capability, and the `seatflow` binary for the file-based interface.
//!
//! ```
//! use seatflow::greedy::{run_method, GreedyMethod};
//! use seatflow::randmethod::NetworkFlowMethod;
//! use seatflow::{Instance, Rational};
//!
//! let votes = vec![
//!     Rational::new(2, 3),
//!     Rational::new(29, 120),
//!     Rational::new(11, 120),
//! ];
//! let inst = Instance::repeated(votes, 7);
//!
//! // Deterministic greedy: one seat per step, cumulative (4, 2, 1).
//! let trajectory = run_method(&mut GreedyMethod, &inst).unwrap();
//! assert_eq!(trajectory.cumulative_seats(), &[4, 2, 1]);
//! assert!(trajectory.check_global_quota().is_ok());
//!
//! // Randomized method: exact expected seats per step, quota ex post.
//! let method = NetworkFlowMethod::run(&inst).unwrap();
//! for record in method.records() {
//!     assert_eq!(record.marginals, record.votes.entries().to_vec());
//! }
//! assert!(method.sample(7, 0).check_global_quota().is_ok());
//! ```

pub mod adversary;
pub mod cli;
pub mod flow;
pub mod greedy;
pub mod instance;
pub mod mmhsc;
pub mod offline;
pub mod randmethod;
pub mod rational;

pub use instance::{Instance, QuotaStatus, TrajectoryState, VoteVector};
pub use rational::Rational;
