//! Learning relational decision-tree control knowledge from solved planning
//! problems, and using it to order actions in forward heuristic search.
//!
//! Pipeline: [`pddl`] parses typed STRIPS, [`grounding`] instantiates it,
//! [`relaxed`] computes the relaxed-plan heuristic and helpful actions,
//! [`training`] solves small problems exhaustively and writes knowledge-base and
//! language-bias files, [`learner`] induces first-order decision trees from them,
//! [`policy`] turns trees into action orderings and [`search`] uses those
//! orderings. [`bench`] runs suites and computes IPC-style scores.

pub mod bench;
pub mod fixtures;
pub mod grounding;
pub mod learner;
pub mod pddl;
pub mod policy;
pub mod relaxed;
pub mod search;
pub mod training;
