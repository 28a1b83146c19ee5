//! Independent verification machinery: path enumeration, a second solver,
//! a concrete interpreter, a random program generator and the differential
//! harness that ties them together.

pub mod diff;
pub mod gen;
pub mod interp;
pub mod paths;
pub mod round_robin;

pub use diff::{
    check_fact_invariants, check_mop, check_solvers, differential_check,
    differential_check_variant, fuzz, Counterexample, FuzzConfig, FuzzReport, Variant, Verdict,
};
pub use gen::{random_inputs, random_program, GenParams};
pub use interp::{execute, interpret, Env, Run, RuntimeError, Termination, Trace};
pub use paths::{enumerate_paths, has_cycle, mop_in};
pub use round_robin::solve_round_robin;
