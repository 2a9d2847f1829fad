//! Loop invariant synthesis for SyGuS-INV problems.
//!
//! The pipeline samples reachable states with an SMT solver ([`record`]),
//! learns candidate preconditions from positive and negative states
//! ([`learner`], [`synth`]) and strengthens a candidate invariant until it is
//! inductive ([`infer`]). Results are re-checked from scratch by [`verify`].

pub mod config;
pub mod error;
pub mod infer;
pub mod learner;
pub mod pipeline;
pub mod preprocess;
pub mod problem;
pub mod record;
pub mod sexp;
pub mod solver;
pub mod synth;
pub mod term;
pub mod verify;

pub use config::Config;
pub use error::{EvalError, ParseError, ParseErrorKind, SolverError};
pub use problem::{parse_invariant, parse_problem, Problem};
pub use term::{print_term, Op, Sort, State, Term, Value};
