//! Textbook copy propagation: a use of `t` is rewritten to `e` only when the
//! single definition of `t` reaching the use is the copy `t = e` and that copy
//! is still intact on every path. Only the immediate source is substituted.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::acs::run_acs;
use crate::dataflow::reachable_blocks;
use crate::ir::{Label, Operand, ProgramCfg, Statement, VarName};
use crate::propagate::{propagate, resolve, Replacement, ReplacementReport};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DefSite {
    pub block: Label,
    pub var: VarName,
}

/// Definitions reaching the input of each reachable block (union meet).
pub fn reaching_definitions(cfg: &ProgramCfg) -> BTreeMap<Label, BTreeSet<DefSite>> {
    let preds = cfg.predecessors();
    let reachable = reachable_blocks(cfg);
    let mut ins: BTreeMap<Label, BTreeSet<DefSite>> = BTreeMap::new();
    let mut outs: BTreeMap<Label, BTreeSet<DefSite>> = BTreeMap::new();
    for label in &reachable {
        ins.insert(label.clone(), BTreeSet::new());
        outs.insert(label.clone(), BTreeSet::new());
    }

    let mut queue: VecDeque<Label> = reachable.iter().cloned().collect();
    let mut queued: BTreeSet<Label> = reachable.clone();
    while let Some(label) = queue.pop_front() {
        queued.remove(&label);
        let block = &cfg.blocks[&label];
        let mut input = BTreeSet::new();
        if label != cfg.entry {
            for p in &preds[&label] {
                if let Some(out) = outs.get(p) {
                    input.extend(out.iter().cloned());
                }
            }
        }
        let mut output = input.clone();
        if let Some(var) = block.stmt.def() {
            output.retain(|d: &DefSite| &d.var != var);
            output.insert(DefSite {
                block: label.clone(),
                var: var.clone(),
            });
        }
        ins.insert(label.clone(), input);
        if outs[&label] != output {
            outs.insert(label.clone(), output);
            for succ in &block.succs {
                if reachable.contains(succ) && queued.insert(succ.clone()) {
                    queue.push_back(succ.clone());
                }
            }
        }
    }
    ins
}

/// One pass of single-reaching-definition propagation.
pub fn classic_transform(cfg: &ProgramCfg) -> (ProgramCfg, ReplacementReport) {
    let reaching = reaching_definitions(cfg);
    let available = run_acs(cfg);
    let mut out = cfg.clone();
    let mut replacements = Vec::new();

    for (label, defs) in &reaching {
        let Some(facts) = available.facts_in(label) else {
            continue;
        };
        let block = out.blocks.get_mut(label).expect("reachable block exists");
        let original = block.stmt.clone();
        for (slot, operand) in original.operands() {
            let Operand::Var(t) = operand else {
                continue;
            };
            let mut sites = defs.iter().filter(|d| &d.var == t);
            let (Some(site), None) = (sites.next(), sites.next()) else {
                continue;
            };
            let Statement::Copy { src, .. } = &cfg.blocks[&site.block].stmt else {
                continue;
            };
            if src.is_var(t) || !facts.contains(t, src) {
                continue;
            }
            if let Some(target) = block.stmt.operand_mut(slot) {
                *target = src.clone();
            }
            replacements.push(Replacement {
                block: label.clone(),
                slot,
                original: t.clone(),
                replacement: src.clone(),
                chain_length: 1,
            });
        }
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

/// Repeats [`classic_transform`] until a round makes no replacement or
/// `max_rounds` is hit.
pub fn classic_to_fixpoint(cfg: &ProgramCfg, max_rounds: usize) -> (ProgramCfg, ReplacementReport) {
    let mut current = cfg.clone();
    let mut report = ReplacementReport::default();
    for round in 1..=max_rounds.max(1) {
        let (next, r) = classic_transform(&current);
        report.pass_count = round;
        if r.is_empty() {
            report.converged = true;
            return (next, report);
        }
        report.replacements.extend(r.replacements);
        current = next;
    }
    (current, report)
}

/// Classic and unified passes side by side on the same input.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub classic: ReplacementReport,
    pub unified: ReplacementReport,
    /// Sites the classic pass rewrote that the unified pass did not rewrite
    /// at least as far.
    pub violations: Vec<String>,
}

/// Runs both single-pass transforms and checks that every classic rewrite is
/// matched by a unified rewrite of the same slot to the end of the chain
/// starting at the classic replacement.
pub fn compare_methods(cfg: &ProgramCfg) -> Comparison {
    let (_, classic) = classic_transform(cfg);
    let (_, unified) = propagate(cfg);
    let available = run_acs(cfg);
    let mut violations = Vec::new();
    for c in &classic.replacements {
        let Some(u) = unified
            .replacements
            .iter()
            .find(|u| u.block == c.block && u.slot == c.slot)
        else {
            violations.push(format!("{} {}: rewritten by classic only", c.block, c.slot));
            continue;
        };
        let terminal = match (&c.replacement, available.facts_in(&c.block)) {
            (Operand::Var(v), Some(facts)) => resolve(v, facts),
            (other, _) => other.clone(),
        };
        if u.replacement != c.replacement && u.replacement != terminal {
            violations.push(format!(
                "{} {}: classic {} but unified {} (expected {})",
                c.block, c.slot, c.replacement, u.replacement, terminal
            ));
        }
    }
    Comparison {
        classic,
        unified,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    #[test]
    fn fig1_two_definitions_reach_confluence() {
        let cfg = parse_program(include_str!("../fixtures/fig1.tac")).unwrap();
        let rd = reaching_definitions(&cfg);
        let ys: Vec<&DefSite> = rd[&l("B4")].iter().filter(|d| d.var.as_str() == "y").collect();
        assert_eq!(ys.len(), 2);
        assert_eq!(ys[0].block, l("B2"));
        assert_eq!(ys[1].block, l("B3"));
        assert!(rd[&cfg.entry].is_empty());

        let (out, report) = classic_transform(&cfg);
        assert!(report.is_empty());
        assert_eq!(out, cfg);
    }

    #[test]
    fn fig2_immediate_source_only() {
        let cfg = parse_program(include_str!("../fixtures/fig2.tac")).unwrap();
        let (out, _) = classic_transform(&cfg);
        assert_eq!(out.stmt(&l("B6")).unwrap().to_string(), "e = b");
        assert_eq!(out.stmt(&l("B2")).unwrap().to_string(), "d = a + 1");
        assert_eq!(out.stmt(&l("B4")).unwrap().to_string(), "f = b + d");
    }

    #[test]
    fn comparison_on_fixtures() {
        let cfg = parse_program(include_str!("../fixtures/fig1.tac")).unwrap();
        let cmp = compare_methods(&cfg);
        assert_eq!((cmp.classic.len(), cmp.unified.len()), (0, 1));
        assert!(cmp.violations.is_empty());

        let cfg = parse_program(include_str!("../fixtures/fig2.tac")).unwrap();
        let cmp = compare_methods(&cfg);
        assert!(cmp.unified.len() >= cmp.classic.len());
        assert!(cmp.violations.is_empty());
    }

    #[test]
    fn textbook_case() {
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> B\nB: x = y -> C\nC: z = x + 1 -> Z\nZ: nop\n",
        )
        .unwrap();
        let rd = reaching_definitions(&cfg);
        assert_eq!(rd[&l("C")].iter().filter(|d| d.var.as_str() == "x").count(), 1);
        let (out, report) = classic_transform(&cfg);
        assert_eq!(out.stmt(&l("C")).unwrap().to_string(), "z = y + 1");
        assert_eq!(report.len(), 1);
    }

    #[test]
    fn source_redefined_blocks_rewrite() {
        // single reaching def of x, but y is reassigned in between
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> B\nB: x = y -> C\nC: y = 2 -> D\nD: z = x + 1 -> Z\nZ: nop\n",
        )
        .unwrap();
        let (_, report) = classic_transform(&cfg);
        assert!(report.is_empty());
    }

    #[test]
    fn constants_follow_same_rule() {
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> B\nB: x = 4 -> C\nC: branch x -> D, Z\nD: w = x * x -> Z\nZ: nop\n",
        )
        .unwrap();
        let (out, report) = classic_transform(&cfg);
        assert_eq!(out.stmt(&l("C")).unwrap().to_string(), "branch 4");
        assert_eq!(out.stmt(&l("D")).unwrap().to_string(), "w = 4 * 4");
        assert_eq!(report.len(), 3);
    }
}
