use std::collections::BTreeMap;

use proptest::prelude::*;

use copyprop::acs::{run_acs, transfer_facts};
use copyprop::dataflow::{reachable_blocks, Facts};
use copyprop::ir::{
    parse_program, print_program, validate, BinOp, Label, Operand, ProgramCfg, Statement, VarName,
};
use copyprop::oracle::{random_program, GenParams};
use copyprop::propagate::{propagate, resolve_chain};

const NAMES: &[&str] = &["a", "b", "c", "d", "e"];

fn var() -> impl Strategy<Value = VarName> {
    prop::sample::select(NAMES).prop_map(|n| VarName::new(n).unwrap())
}

fn operand() -> impl Strategy<Value = Operand> {
    prop_oneof![var().prop_map(Operand::Var), (-3i64..=3).prop_map(Operand::Const)]
}

fn statement() -> impl Strategy<Value = Statement> {
    prop_oneof![
        3 => (var(), operand()).prop_map(|(dst, src)| Statement::Copy { dst, src }),
        1 => (var(), operand(), operand()).prop_map(|(dst, lhs, rhs)| Statement::Binary {
            dst,
            op: BinOp::Add,
            lhs,
            rhs,
        }),
        1 => Just(Statement::Nop),
    ]
}

fn program() -> impl Strategy<Value = ProgramCfg> {
    any::<u64>().prop_map(|seed| random_program(&GenParams::default().with_seed(seed)))
}

fn mentions(facts: &Facts, x: &VarName) -> bool {
    facts.iter().any(|(d, s)| d == x || s.is_var(x))
}

/// Must-constant propagation without folding: `x -> c` holds when every
/// path ends with `x = c` and no later definition of `x`.
fn constant_facts(cfg: &ProgramCfg) -> BTreeMap<Label, BTreeMap<VarName, i64>> {
    let preds = cfg.predecessors();
    let reachable = reachable_blocks(cfg);
    let mut outs: BTreeMap<Label, Option<BTreeMap<VarName, i64>>> =
        reachable.iter().map(|l| (l.clone(), None)).collect();
    let mut ins = BTreeMap::new();
    loop {
        let mut changed = false;
        for label in &reachable {
            let input = if *label == cfg.entry {
                BTreeMap::new()
            } else {
                let mut acc: Option<BTreeMap<VarName, i64>> = None;
                for p in &preds[label] {
                    let Some(Some(out)) = outs.get(p) else { continue };
                    acc = Some(match acc {
                        None => out.clone(),
                        Some(a) => a
                            .into_iter()
                            .filter(|(k, v)| out.get(k) == Some(v))
                            .collect(),
                    });
                }
                match acc {
                    Some(a) => a,
                    None => continue,
                }
            };
            let mut output = input.clone();
            match &cfg.blocks[label].stmt {
                Statement::Copy { dst, src: Operand::Const(c) } => {
                    output.insert(dst.clone(), *c);
                }
                stmt => {
                    if let Some(d) = stmt.def() {
                        output.remove(d);
                    }
                }
            }
            ins.insert(label.clone(), input);
            if outs[label].as_ref() != Some(&output) {
                outs.insert(label.clone(), Some(output));
                changed = true;
            }
        }
        if !changed {
            return ins;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(cfg in program()) {
        let text = print_program(&cfg);
        let back = parse_program(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(print_program(&back), text);
    }

    #[test]
    fn transfer_keeps_facts_functional_and_acyclic(stmts in prop::collection::vec(statement(), 0..30)) {
        let mut facts = Facts::new();
        for stmt in &stmts {
            let next = transfer_facts(stmt, &facts);
            prop_assert!(next.is_acyclic(), "{} after {}", next, stmt);
            if let Some(x) = stmt.def() {
                // every old pair mentioning x is gone; only the generated pair may mention it
                let mut rest = next.clone();
                if let Statement::Copy { src, .. } = stmt {
                    if !src.is_var(x) {
                        prop_assert!(rest.contains(x, src));
                    }
                    rest.kill(x);
                }
                prop_assert!(!mentions(&rest, x));
                prop_assert!(rest.is_subset(&facts));
            } else {
                prop_assert_eq!(&next, &facts);
            }
            facts = next;
        }
        for (dst, _) in facts.iter() {
            let (end, steps) = resolve_chain(dst, &facts);
            prop_assert!(steps >= 1 && steps <= facts.len());
            if let Operand::Var(v) = &end {
                prop_assert!(facts.source_of(v).is_none());
            }
        }
    }

    #[test]
    fn analysis_sets_are_functional_and_acyclic(cfg in program()) {
        let result = run_acs(&cfg);
        for label in &result.reachable {
            let facts = result.facts_in(label).expect("reachable blocks have pairs");
            prop_assert!(facts.is_acyclic(), "{}: {}", label, facts);
        }
    }

    #[test]
    fn single_pass_reaches_chain_ends(cfg in program()) {
        let result = run_acs(&cfg);
        let (out, report) = propagate(&cfg);
        prop_assert_eq!(report.pass_count, 1);
        for label in &result.reachable {
            let facts = result.facts_in(label).unwrap();
            for v in out.blocks[label].stmt.uses() {
                prop_assert!(facts.source_of(v).is_none(), "{} still has a source at {}", v, label);
            }
        }
    }

    #[test]
    fn transform_preserves_shape(cfg in program()) {
        let (out, _) = propagate(&cfg);
        prop_assert_eq!(out.entry, cfg.entry.clone());
        prop_assert_eq!(out.exit, cfg.exit.clone());
        prop_assert_eq!(out.blocks.len(), cfg.blocks.len());
        for (label, block) in &cfg.blocks {
            let new = &out.blocks[label];
            prop_assert_eq!(&new.succs, &block.succs);
            prop_assert_eq!(new.stmt.def(), block.stmt.def());
            prop_assert_eq!(
                std::mem::discriminant(&new.stmt),
                std::mem::discriminant(&block.stmt)
            );
        }
    }

    #[test]
    fn constant_facts_match_constant_propagation(cfg in program()) {
        // drop every variable-source copy so only constant facts remain
        let mut cfg = cfg;
        for block in cfg.blocks.values_mut() {
            if let Statement::Copy { dst, src: Operand::Var(v) } = &block.stmt {
                block.stmt = Statement::Binary {
                    dst: dst.clone(),
                    op: BinOp::Add,
                    lhs: Operand::Var(v.clone()),
                    rhs: Operand::Const(0),
                };
            }
        }
        let acs = run_acs(&cfg);
        let consts = constant_facts(&cfg);
        for label in &acs.reachable {
            let got: BTreeMap<VarName, i64> = acs
                .facts_in(label)
                .unwrap()
                .iter()
                .map(|(d, s)| match s {
                    Operand::Const(c) => (d.clone(), *c),
                    Operand::Var(_) => unreachable!("no variable copies left"),
                })
                .collect();
            prop_assert_eq!(&got, &consts[label], "at {}", label);
        }
    }

    #[test]
    fn validation_catches_mutations(cfg in program(), pick in any::<prop::sample::Index>()) {
        prop_assert!(validate(&cfg).is_empty());
        let labels: Vec<Label> = cfg
            .blocks
            .keys()
            .filter(|l| **l != cfg.exit)
            .cloned()
            .collect();
        let victim = pick.get(&labels).clone();

        let mut dangling = cfg.clone();
        dangling.blocks.get_mut(&victim).unwrap().succs[0] = Label::new("Nowhere").unwrap();
        let codes: Vec<&str> = validate(&dangling).iter().map(|d| d.code()).collect();
        prop_assert!(codes.contains(&"unknown-successor"), "{:?}", codes);

        let mut arity = cfg.clone();
        let block = arity.blocks.get_mut(&victim).unwrap();
        if block.stmt.is_branch() {
            block.succs.truncate(1);
        } else {
            block.succs.push(block.succs[0].clone());
        }
        let codes: Vec<&str> = validate(&arity).iter().map(|d| d.code()).collect();
        prop_assert!(
            codes.contains(&"branch-arity") || codes.contains(&"successor-arity"),
            "{:?}", codes
        );

        let mut exit_succ = cfg.clone();
        let entry = exit_succ.entry.clone();
        exit_succ.blocks.get_mut(&cfg.exit).unwrap().succs.push(entry);
        let codes: Vec<&str> = validate(&exit_succ).iter().map(|d| d.code()).collect();
        prop_assert!(codes.contains(&"exit-has-successors"), "{:?}", codes);
    }
}
