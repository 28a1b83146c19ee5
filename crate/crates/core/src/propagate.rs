//! Chain-resolving copy/constant propagation.
//!
//! Every used variable is replaced by the end of its copy chain in the IN
//! set of its block: the first constant reached, or else the last variable
//! that has no pair of its own. A chain `c -> b -> a` therefore collapses in
//! a single pass.

use std::fmt;

use crate::acs::run_acs;
use crate::dataflow::{AnalysisResult, FactSet, Facts};
use crate::ir::{Label, Operand, ProgramCfg, Slot, Statement, VarName};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replacement {
    pub block: Label,
    pub slot: Slot,
    pub original: VarName,
    pub replacement: Operand,
    /// Number of pairs followed to reach the replacement.
    pub chain_length: usize,
}

impl fmt::Display for Replacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} -> {} (chain {})",
            self.block, self.slot, self.original, self.replacement, self.chain_length
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ReplacementReport {
    pub replacements: Vec<Replacement>,
    /// Analyze+rewrite rounds executed.
    pub pass_count: usize,
    /// False when iteration stopped at the round limit while still changing.
    pub converged: bool,
}

impl ReplacementReport {
    pub fn len(&self) -> usize {
        self.replacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replacements.is_empty()
    }
}

/// Follows the unique chain starting at `var`. Returns the resolved operand
/// and the number of pairs followed.
pub fn resolve_chain(var: &VarName, facts: &Facts) -> (Operand, usize) {
    let mut cur = var;
    let mut steps = 0;
    while let Some(src) = facts.source_of(cur) {
        steps += 1;
        match src {
            Operand::Const(_) => return (src.clone(), steps),
            Operand::Var(next) => cur = next,
        }
        if steps > facts.len() {
            // cyclic input violates the fact-set invariant; stop where we are
            debug_assert!(false, "cyclic fact set {facts}");
            break;
        }
    }
    (Operand::Var(cur.clone()), steps)
}

pub fn resolve(var: &VarName, facts: &Facts) -> Operand {
    resolve_chain(var, facts).0
}

/// Rewrites every used variable of `stmt` through `facts`. The defined
/// variable is never touched, and TOP leaves the statement unchanged.
pub fn rewrite_statement(
    block: &Label,
    stmt: &Statement,
    facts: &FactSet,
) -> (Statement, Vec<Replacement>) {
    let FactSet::Pairs(facts) = facts else {
        return (stmt.clone(), Vec::new());
    };
    let mut rewritten = stmt.clone();
    let mut replacements = Vec::new();
    for (slot, operand) in stmt.operands() {
        let Operand::Var(original) = operand else {
            continue;
        };
        let (replacement, chain_length) = resolve_chain(original, facts);
        if replacement.is_var(original) {
            continue;
        }
        if let Some(target) = rewritten.operand_mut(slot) {
            *target = replacement.clone();
        }
        replacements.push(Replacement {
            block: block.clone(),
            slot,
            original: original.clone(),
            replacement,
            chain_length,
        });
    }
    (rewritten, replacements)
}

/// One rewriting pass driven by a precomputed analysis of `cfg`.
/// Unreachable blocks are left alone.
pub fn transform(cfg: &ProgramCfg, result: &AnalysisResult) -> (ProgramCfg, ReplacementReport) {
    let mut out = cfg.clone();
    let mut replacements = Vec::new();
    for (label, block) in out.blocks.iter_mut() {
        if !result.reachable.contains(label) {
            continue;
        }
        let (stmt, mut reps) = rewrite_statement(label, &block.stmt, result.in_set(label));
        block.stmt = stmt;
        replacements.append(&mut reps);
    }
    (
        out,
        ReplacementReport {
            replacements,
            pass_count: 1,
            converged: true,
        },
    )
}

/// Analyze and transform once.
pub fn propagate(cfg: &ProgramCfg) -> (ProgramCfg, ReplacementReport) {
    transform(cfg, &run_acs(cfg))
}

/// Re-analyzes and rewrites until a round makes no replacement or
/// `max_rounds` rounds have run. Replacements from all rounds are
/// concatenated in round order.
pub fn transform_to_fixpoint(cfg: &ProgramCfg, max_rounds: usize) -> (ProgramCfg, ReplacementReport) {
    let max_rounds = max_rounds.max(1);
    let mut current = cfg.clone();
    let mut report = ReplacementReport::default();
    for round in 1..=max_rounds {
        let (next, round_report) = propagate(&current);
        report.pass_count = round;
        if round_report.is_empty() {
            report.converged = true;
            return (next, report);
        }
        report.replacements.extend(round_report.replacements);
        current = next;
    }
    report.converged = false;
    (current, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acs::CopyPair;
    use crate::ir::{parse_program, print_program, BinOp};

    fn v(s: &str) -> VarName {
        VarName::new(s).unwrap()
    }

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn facts(pairs: &[(&str, &str)]) -> Facts {
        Facts::try_from_pairs(pairs.iter().map(|(d, s)| CopyPair::parse(d, s))).unwrap()
    }

    fn straight(stmts: &[&str]) -> ProgramCfg {
        let mut text = String::from("entry: S\nexit: Z\nS: nop -> L0\n");
        for (i, s) in stmts.iter().enumerate() {
            let next = if i + 1 == stmts.len() {
                "Z".to_string()
            } else {
                format!("L{}", i + 1)
            };
            text.push_str(&format!("L{i}: {s} -> {next}\n"));
        }
        text.push_str("Z: nop\n");
        parse_program(&text).unwrap()
    }

    #[test]
    fn resolve_examples() {
        assert_eq!(
            resolve(&v("c"), &facts(&[("c", "b"), ("b", "a")])),
            Operand::Var(v("a"))
        );
        assert_eq!(resolve(&v("x"), &Facts::new()), Operand::Var(v("x")));
        assert_eq!(resolve(&v("y"), &facts(&[("y", "5")])), Operand::Const(5));
        assert_eq!(
            resolve(&v("d"), &facts(&[("d", "c"), ("c", "2")])),
            Operand::Const(2)
        );
        assert_eq!(
            resolve_chain(&v("c"), &facts(&[("c", "b"), ("b", "a")])).1,
            2
        );
    }

    #[test]
    fn rewrite_copy_through_chain() {
        let stmt = Statement::Copy {
            dst: v("e"),
            src: Operand::Var(v("c")),
        };
        let (out, reps) = rewrite_statement(&l("B6"), &stmt, &facts(&[("c", "b"), ("b", "a")]).into());
        assert_eq!(out.to_string(), "e = a");
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].chain_length, 2);
        assert_eq!(reps[0].slot, Slot::CopySrc);
    }

    #[test]
    fn rewrite_binary() {
        let stmt = Statement::Binary {
            dst: v("z"),
            op: BinOp::Add,
            lhs: Operand::Var(v("y")),
            rhs: Operand::Var(v("w")),
        };
        let (out, reps) = rewrite_statement(&l("B4"), &stmt, &facts(&[("y", "x")]).into());
        assert_eq!(out.to_string(), "z = x + w");
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].slot, Slot::BinaryLhs);
    }

    #[test]
    fn definition_is_never_rewritten() {
        let stmt = Statement::Binary {
            dst: v("x"),
            op: BinOp::Add,
            lhs: Operand::Var(v("x")),
            rhs: Operand::Const(1),
        };
        let (out, _) = rewrite_statement(&l("B"), &stmt, &facts(&[("x", "4")]).into());
        assert_eq!(out.to_string(), "x = 4 + 1");
        let (out, reps) = rewrite_statement(&l("B"), &stmt, &FactSet::Top);
        assert_eq!(out, stmt);
        assert!(reps.is_empty());
    }

    #[test]
    fn fig2_single_pass() {
        let cfg = parse_program(include_str!("../fixtures/fig2.tac")).unwrap();
        let (out, report) = propagate(&cfg);
        assert_eq!(report.pass_count, 1);
        let stmt = |s: &str| out.stmt(&l(s)).unwrap().to_string();
        assert_eq!(stmt("B2"), "d = a + 1");
        assert_eq!(stmt("B3"), "c = a");
        assert_eq!(stmt("B4"), "f = a + d");
        assert_eq!(stmt("B5"), "g = a + a");
        assert_eq!(stmt("B6"), "e = a");
        assert!(print_program(&out).contains("B6: e = a -> B7"));
    }

    #[test]
    fn fig1_single_pass() {
        let cfg = parse_program(include_str!("../fixtures/fig1.tac")).unwrap();
        let (out, report) = propagate(&cfg);
        assert_eq!(out.stmt(&l("B4")).unwrap().to_string(), "z = x + w");
        assert_eq!(report.len(), 1);
    }

    #[test]
    fn copy_free_is_identity() {
        let cfg = parse_program(include_str!("../fixtures/copyfree.tac")).unwrap();
        let (out, report) = propagate(&cfg);
        assert_eq!(out, cfg);
        assert!(report.is_empty());
        let (_, report) = transform_to_fixpoint(&cfg, 10);
        assert_eq!(report.pass_count, 1);
        assert!(report.converged);
    }

    #[test]
    fn iteration_picks_up_enabled_rewrites() {
        // b=a; c=b; b=1; d=c
        let cfg = straight(&["b = a", "c = b", "b = 1", "d = c"]);
        let (once, _) = propagate(&cfg);
        assert_eq!(once.stmt(&l("L1")).unwrap().to_string(), "c = a");
        assert_eq!(once.stmt(&l("L3")).unwrap().to_string(), "d = c");

        let (fixed, report) = transform_to_fixpoint(&cfg, 10);
        assert_eq!(report.pass_count, 3);
        assert!(report.converged);
        assert_eq!(fixed.stmt(&l("L3")).unwrap().to_string(), "d = a");
        assert_eq!(report.len(), 2);

        let (_, capped) = transform_to_fixpoint(&cfg, 2);
        assert_eq!(capped.pass_count, 2);
        assert!(!capped.converged);
    }

    #[test]
    fn fig2_fixpoint_needs_one_confirming_round() {
        let cfg = parse_program(include_str!("../fixtures/fig2.tac")).unwrap();
        let (fixed, report) = transform_to_fixpoint(&cfg, 10);
        assert_eq!(report.pass_count, 2);
        assert_eq!(fixed, propagate(&cfg).0);
    }

    #[test]
    fn unreachable_blocks_untouched() {
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> B\nB: x = 1 -> C\nC: y = x -> Z\nX: w = x -> C\nZ: nop\n",
        )
        .unwrap();
        let (out, _) = propagate(&cfg);
        assert_eq!(out.stmt(&l("X")).unwrap().to_string(), "w = x");
        assert_eq!(out.stmt(&l("C")).unwrap().to_string(), "y = 1");
    }

    #[test]
    fn branch_condition_is_a_use() {
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> B\nB: p = 0 -> C\nC: branch p -> Z, Z\nZ: nop\n",
        )
        .unwrap();
        let (out, report) = propagate(&cfg);
        assert_eq!(out.stmt(&l("C")).unwrap().to_string(), "branch 0");
        assert_eq!(report.replacements[0].slot, Slot::BranchCond);
    }
}
