//! A second fixpoint solver: plain round-robin sweeps in label order, on its
//! own set representation, until nothing changes.

use std::collections::{BTreeMap, BTreeSet};

use super::paths::{reference_transfer, to_facts};
use crate::acs::CopyPair;
use crate::dataflow::{AnalysisResult, FactSet};
use crate::ir::{Label, ProgramCfg};

type Value = Option<BTreeSet<CopyPair>>;

fn meet(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(a), Some(b)) => Some(a.intersection(b).cloned().collect()),
    }
}

fn reachable(cfg: &ProgramCfg) -> BTreeSet<Label> {
    let mut seen = BTreeSet::from([cfg.entry.clone()]);
    let mut frontier = vec![cfg.entry.clone()];
    while let Some(l) = frontier.pop() {
        for s in &cfg.blocks[&l].succs {
            if seen.insert(s.clone()) {
                frontier.push(s.clone());
            }
        }
    }
    seen
}

fn export(values: &BTreeMap<Label, Value>) -> BTreeMap<Label, FactSet> {
    values
        .iter()
        .map(|(l, v)| {
            let fs = match v {
                None => FactSet::Top,
                Some(set) => FactSet::Pairs(to_facts(set)),
            };
            (l.clone(), fs)
        })
        .collect()
}

pub fn solve_round_robin(cfg: &ProgramCfg) -> AnalysisResult {
    let reachable = reachable(cfg);
    let mut preds: BTreeMap<&Label, Vec<&Label>> = BTreeMap::new();
    for block in cfg.blocks.values() {
        for s in &block.succs {
            preds.entry(s).or_default().push(&block.label);
        }
    }
    let mut ins: BTreeMap<Label, Value> = cfg.blocks.keys().map(|l| (l.clone(), None)).collect();
    let mut outs = ins.clone();
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for label in &reachable {
            let input: Value = if *label == cfg.entry {
                Some(BTreeSet::new())
            } else {
                preds
                    .get(label)
                    .into_iter()
                    .flatten()
                    .fold(None, |acc, p| meet(&acc, &outs[*p]))
            };
            let output = input
                .as_ref()
                .map(|set| reference_transfer(&cfg.blocks[label].stmt, set));
            if ins[label] != input {
                ins.insert(label.clone(), input);
                changed = true;
            }
            if outs[label] != output {
                outs.insert(label.clone(), output);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    AnalysisResult {
        in_sets: export(&ins),
        out_sets: export(&outs),
        reachable,
        iterations: sweeps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acs::run_acs;
    use crate::ir::parse_program;

    #[test]
    fn agrees_on_fixtures() {
        for text in [
            include_str!("../../fixtures/fig1.tac"),
            include_str!("../../fixtures/fig2.tac"),
            include_str!("../../fixtures/loop.tac"),
            include_str!("../../fixtures/copyfree.tac"),
            "entry: A\nexit: Z\nA: nop -> I\nI: x = 0 -> L\nL: x = x + 1 -> T\nT: branch x -> L, Z\nZ: nop\n",
        ] {
            let cfg = parse_program(text).unwrap();
            assert!(solve_round_robin(&cfg).same_solution(&run_acs(&cfg)), "{text}");
        }
    }

    #[test]
    fn self_loop_in_set_is_empty() {
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> I\nI: x = 0 -> L\nL: x = x + 1 -> T\nT: branch x -> L, Z\nZ: nop\n",
        )
        .unwrap();
        let res = solve_round_robin(&cfg);
        assert_eq!(res.in_set(&Label::new("L").unwrap()), &FactSet::empty());
    }
}
