//! Available copy statements.
//!
//! A pair `(x, e)` is available at a point when every path from entry to that
//! point executes `x = e` and neither `x` nor (if `e` is a variable) `e` is
//! assigned afterwards. Constants are just sources that can never be killed,
//! so the same analysis covers both copy and constant propagation.

use std::collections::BTreeSet;
use std::fmt;

use crate::dataflow::{solve_forward, AnalysisResult, FactSet, Facts};
use crate::ir::{Operand, ProgramCfg, Statement, VarName};

/// The fact `dst == src`, generated by a copy statement `dst = src`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CopyPair {
    pub dst: VarName,
    pub src: Operand,
}

impl CopyPair {
    /// `None` for the vacuous self pair `(x, x)`.
    pub fn new(dst: VarName, src: Operand) -> Option<Self> {
        if src.is_var(&dst) {
            None
        } else {
            Some(CopyPair { dst, src })
        }
    }

    /// Test helper: `src` is parsed as an integer when possible.
    ///
    /// Panics on invalid names or self pairs.
    pub fn parse(dst: &str, src: &str) -> Self {
        let dst = VarName::new(dst).expect("valid variable");
        let src = match src.parse::<i64>() {
            Ok(c) => Operand::Const(c),
            Err(_) => Operand::Var(VarName::new(src).expect("valid variable")),
        };
        CopyPair::new(dst, src).expect("not a self pair")
    }
}

impl fmt::Display for CopyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.dst, self.src)
    }
}

/// Every pair some copy statement in the program can generate.
pub fn universe(cfg: &ProgramCfg) -> BTreeSet<CopyPair> {
    cfg.blocks
        .values()
        .filter_map(|b| match &b.stmt {
            Statement::Copy { dst, src } => CopyPair::new(dst.clone(), src.clone()),
            _ => None,
        })
        .collect()
}

/// Kill every pair mentioning the defined variable, then generate the
/// statement's own pair if it is a (non-self) copy.
pub fn transfer(stmt: &Statement, input: &FactSet) -> FactSet {
    let FactSet::Pairs(facts) = input else {
        return FactSet::Top;
    };
    FactSet::Pairs(transfer_facts(stmt, facts))
}

pub fn transfer_facts(stmt: &Statement, input: &Facts) -> Facts {
    let mut out = input.clone();
    match stmt {
        Statement::Nop | Statement::Branch { .. } => {}
        Statement::Copy { dst, src } => {
            out.kill(dst);
            if !src.is_var(dst) {
                out.insert(dst.clone(), src.clone());
            }
        }
        Statement::Binary { dst, .. } => out.kill(dst),
    }
    out
}

pub fn run_acs(cfg: &ProgramCfg) -> AnalysisResult {
    solve_forward(cfg, transfer)
}
