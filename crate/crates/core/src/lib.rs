//! Available copy statements analysis and chain-resolving propagation over a
//! small three-address-code control-flow graph.
//!
//! Constant propagation falls out as the special case of copy propagation
//! where the copy source is a constant: one forward "must" analysis tracks
//! pairs `(x, e)` meaning "x currently equals e on every path", and one
//! rewriting pass replaces each use by the end of its copy chain.
//!
//! ```
//! use copyprop::{ir::parse_program, propagate::propagate};
//!
//! let cfg = parse_program(
//!     "entry: A\nexit: Z\nA: nop -> B\nB: b = a -> C\nC: c = b -> D\nD: e = c -> Z\nZ: nop\n",
//! ).unwrap();
//! let (out, report) = propagate(&cfg);
//! assert_eq!(out.stmt(&"D".parse().unwrap()).unwrap().to_string(), "e = a");
//! assert_eq!(report.pass_count, 1);
//! ```

pub mod acs;
pub mod baseline;
pub mod cli;
pub mod dataflow;
pub mod error;
pub mod ir;
pub mod oracle;
pub mod propagate;

pub use acs::{run_acs, universe, CopyPair};
pub use dataflow::{meet, solve_forward, AnalysisResult, FactSet, Facts};
pub use error::{Diagnostic, OracleError, ParseError};
pub use ir::{parse_program, print_program, to_dot, validate, Label, Operand, ProgramCfg, Statement, VarName};
pub use propagate::{resolve, rewrite_statement, transform, transform_to_fixpoint, Replacement, ReplacementReport};
