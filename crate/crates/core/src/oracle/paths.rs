//! Meet-over-all-paths for acyclic graphs by explicit path enumeration.

use std::collections::{BTreeMap, BTreeSet};

use crate::acs::CopyPair;
use crate::dataflow::{FactSet, Facts};
use crate::error::OracleError;
use crate::ir::{Label, ProgramCfg, Statement};

/// Literal set-of-pairs transfer, kept separate from the analysis code so the
/// two can be compared.
pub fn reference_transfer(stmt: &Statement, input: &BTreeSet<CopyPair>) -> BTreeSet<CopyPair> {
    let Some(x) = stmt.def() else {
        return input.clone();
    };
    let mut out: BTreeSet<CopyPair> = input
        .iter()
        .filter(|p| &p.dst != x && !p.src.is_var(x))
        .cloned()
        .collect();
    if let Statement::Copy { dst, src } = stmt {
        if let Some(pair) = CopyPair::new(dst.clone(), src.clone()) {
            out.insert(pair);
        }
    }
    out
}

pub(crate) fn to_facts(set: &BTreeSet<CopyPair>) -> Facts {
    Facts::try_from_pairs(set.iter().cloned())
        .unwrap_or_else(|p| panic!("non-functional fact set, duplicate {p}"))
}

/// True if some cycle exists anywhere in the graph.
pub fn has_cycle(cfg: &ProgramCfg) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Active,
        Done,
    }
    let mut marks: BTreeMap<&Label, Mark> = cfg.blocks.keys().map(|l| (l, Mark::Fresh)).collect();
    for root in cfg.blocks.keys() {
        if marks[root] != Mark::Fresh {
            continue;
        }
        // iterative DFS with explicit successor cursors
        let mut stack: Vec<(&Label, usize)> = vec![(root, 0)];
        marks.insert(root, Mark::Active);
        while let Some((node, cursor)) = stack.pop() {
            let succs = &cfg.blocks[node].succs;
            if cursor < succs.len() {
                stack.push((node, cursor + 1));
                let next = &succs[cursor];
                match marks.get(next) {
                    Some(Mark::Active) => return true,
                    Some(Mark::Fresh) => {
                        marks.insert(next, Mark::Active);
                        stack.push((next, 0));
                    }
                    _ => {}
                }
            } else {
                marks.insert(node, Mark::Done);
            }
        }
    }
    false
}

/// Every entry-to-`target` path, each starting at entry and ending at target.
pub fn enumerate_paths(cfg: &ProgramCfg, target: &Label) -> Result<Vec<Vec<Label>>, OracleError> {
    if !cfg.blocks.contains_key(target) {
        return Err(OracleError::UnknownBlock(target.clone()));
    }
    if has_cycle(cfg) {
        return Err(OracleError::CyclicCfg);
    }
    let mut paths = Vec::new();
    let mut current = vec![cfg.entry.clone()];
    walk(cfg, target, &mut current, &mut paths);
    Ok(paths)
}

fn walk(cfg: &ProgramCfg, target: &Label, current: &mut Vec<Label>, paths: &mut Vec<Vec<Label>>) {
    let here = current.last().expect("non-empty path").clone();
    if &here == target {
        paths.push(current.clone());
        return;
    }
    let mut seen = BTreeSet::new();
    for succ in &cfg.blocks[&here].succs {
        // parallel edges to the same block give the same label path
        if !seen.insert(succ) {
            continue;
        }
        current.push(succ.clone());
        walk(cfg, target, current, paths);
        current.pop();
    }
}

/// Intersection, over all paths, of the facts produced by running every
/// statement before `target` starting from the empty set.
pub fn mop_in(cfg: &ProgramCfg, target: &Label) -> Result<FactSet, OracleError> {
    let paths = enumerate_paths(cfg, target)?;
    if paths.is_empty() {
        return Err(OracleError::Unreachable(target.clone()));
    }
    let mut acc: Option<BTreeSet<CopyPair>> = None;
    for path in &paths {
        let mut facts = BTreeSet::new();
        for label in &path[..path.len() - 1] {
            facts = reference_transfer(&cfg.blocks[label].stmt, &facts);
        }
        acc = Some(match acc {
            None => facts,
            Some(prev) => prev.intersection(&facts).cloned().collect(),
        });
    }
    Ok(FactSet::Pairs(to_facts(&acc.unwrap_or_default())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    #[test]
    fn diamond_has_two_paths() {
        let cfg = parse_program(include_str!("../../fixtures/fig1.tac")).unwrap();
        let paths = enumerate_paths(&cfg, &l("B4")).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0], vec![l("B0"), l("B1"), l("B2"), l("B4")]);
        assert_eq!(paths[1], vec![l("B0"), l("B1"), l("B3"), l("B4")]);
    }

    #[test]
    fn straight_line_has_one_path() {
        let cfg = parse_program(
            "entry: A\nexit: D\nA: nop -> B\nB: x = 1 -> C\nC: y = x -> D\nD: nop\n",
        )
        .unwrap();
        assert_eq!(enumerate_paths(&cfg, &cfg.exit).unwrap().len(), 1);
    }

    #[test]
    fn loops_are_rejected() {
        let cfg = parse_program(include_str!("../../fixtures/loop.tac")).unwrap();
        assert_eq!(enumerate_paths(&cfg, &cfg.exit), Err(OracleError::CyclicCfg));
        assert_eq!(mop_in(&cfg, &cfg.exit), Err(OracleError::CyclicCfg));
    }

    #[test]
    fn mop_of_fig1() {
        let cfg = parse_program(include_str!("../../fixtures/fig1.tac")).unwrap();
        let b4 = mop_in(&cfg, &l("B4")).unwrap();
        assert!(b4.facts().unwrap().contains_pair(&CopyPair::parse("y", "x")));
        assert_eq!(mop_in(&cfg, &l("B2")).unwrap(), FactSet::empty());
        assert_eq!(mop_in(&cfg, &cfg.entry).unwrap(), FactSet::empty());
    }
}
