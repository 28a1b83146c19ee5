//! Differential checking of the propagation pass against the interpreter,
//! plus the cross-checks that tie the solvers together.

use std::fmt;

use rayon::prelude::*;

use super::gen::{random_inputs, random_program, GenParams};
use super::interp::{execute, Env, Run};
use super::paths::{has_cycle, mop_in};
use super::round_robin::solve_round_robin;
use crate::acs::{self, run_acs};
use crate::dataflow::{solve_forward_with, AnalysisResult, FactSet, WorklistOrder};
use crate::ir::{print_program, ProgramCfg};
use crate::propagate::{transform, transform_to_fixpoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    SinglePass,
    Fixpoint(usize),
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::SinglePass => f.write_str("single-pass"),
            Variant::Fixpoint(n) => write!(f, "fixpoint(max {n})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub program: String,
    pub env: Env,
    pub step: Option<usize>,
    pub reason: String,
    pub seed: Option<u64>,
}

impl Counterexample {
    fn new(cfg: &ProgramCfg, env: &Env, step: Option<usize>, reason: String) -> Self {
        Counterexample {
            program: print_program(cfg),
            env: env.clone(),
            step,
            reason,
            seed: None,
        }
    }

    /// Program text, then `var=value` lines, then the step index.
    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.reason);
        if let Some(seed) = self.seed {
            out.push_str(&format!("# program seed {seed}\n"));
        }
        out.push_str(&self.program);
        out.push_str("--- env\n");
        out.push_str(&self.env.to_string());
        out.push_str("--- step\n");
        match self.step {
            Some(s) => out.push_str(&format!("{s}\n")),
            None => out.push_str("-\n"),
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Box<Counterexample>),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Every in-fact `(x, e)` of the current block holds in `env`.
fn fact_violation(facts: &FactSet, env: &Env) -> Option<String> {
    let facts = facts.facts()?;
    for (dst, src) in facts.iter() {
        match (env.get(dst), env.value_of(src)) {
            (Some(a), Some(b)) if a == b => {}
            (a, b) => {
                return Some(format!(
                    "fact ({dst}, {src}) violated: {dst}={} {src}={}",
                    a.map_or("unbound".into(), |v| v.to_string()),
                    b.map_or("unbound".into(), |v| v.to_string()),
                ))
            }
        }
    }
    None
}

/// Runs `cfg` and checks every fact at every executed block's input point.
pub fn run_with_fact_check(
    cfg: &ProgramCfg,
    analysis: &AnalysisResult,
    env: &Env,
    fuel: usize,
) -> (Run, Option<(usize, String)>) {
    let mut violation = None;
    let run = execute(cfg, env, fuel, |step, label, env| {
        if violation.is_none() {
            if let Some(msg) = fact_violation(analysis.in_set(label), env) {
                violation = Some((step, format!("at {label}: {msg}")));
            }
        }
    });
    (run, violation)
}

fn compare_runs(original: &Run, transformed: &Run) -> Option<(usize, String)> {
    if original.path != transformed.path {
        let step = original
            .path
            .iter()
            .zip(&transformed.path)
            .position(|(a, b)| a != b)
            .unwrap_or(original.path.len().min(transformed.path.len()));
        return Some((step, "control flow diverged".into()));
    }
    if original.branches != transformed.branches {
        return Some((original.path.len(), "branch decisions differ".into()));
    }
    if original.status != transformed.status {
        return Some((
            original.path.len(),
            format!("termination differs: {} vs {}", original.status, transformed.status),
        ));
    }
    if original.final_env != transformed.final_env {
        let var = original
            .final_env
            .iter()
            .find(|(k, v)| transformed.final_env.get(k) != Some(*v))
            .map(|(k, _)| k.to_string())
            .or_else(|| {
                transformed
                    .final_env
                    .iter()
                    .find(|(k, _)| original.final_env.get(k).is_none())
                    .map(|(k, _)| k.to_string())
            })
            .unwrap_or_default();
        return Some((original.path.len(), format!("final environments differ at `{var}`")));
    }
    None
}

pub fn differential_check(cfg: &ProgramCfg, inputs: &[Env], fuel: usize) -> Verdict {
    differential_check_variant(cfg, inputs, fuel, Variant::SinglePass)
}

pub fn differential_check_variant(
    cfg: &ProgramCfg,
    inputs: &[Env],
    fuel: usize,
    variant: Variant,
) -> Verdict {
    let analysis = run_acs(cfg);
    let transformed = match variant {
        Variant::SinglePass => transform(cfg, &analysis).0,
        Variant::Fixpoint(n) => transform_to_fixpoint(cfg, n).0,
    };
    for env in inputs {
        let (original, violation) = run_with_fact_check(cfg, &analysis, env, fuel);
        if let Some((step, msg)) = violation {
            return Verdict::Fail(Box::new(Counterexample::new(cfg, env, Some(step), msg)));
        }
        let after = execute(&transformed, env, fuel, |_, _, _| {});
        if let Some((step, msg)) = compare_runs(&original, &after) {
            return Verdict::Fail(Box::new(Counterexample::new(
                cfg,
                env,
                Some(step),
                format!("{variant}: {msg}"),
            )));
        }
    }
    Verdict::Pass
}

/// Every reachable IN/OUT set is finite, functional and acyclic.
pub fn check_fact_invariants(result: &AnalysisResult) -> Result<(), String> {
    for label in &result.reachable {
        for (which, set) in [("IN", result.in_set(label)), ("OUT", result.out_set(label))] {
            match set {
                FactSet::Top => return Err(format!("{which}({label}) is TOP at a reachable block")),
                FactSet::Pairs(f) if !f.is_acyclic() => {
                    return Err(format!("{which}({label}) = {f} is cyclic"))
                }
                FactSet::Pairs(f) => {
                    if f.iter().any(|(d, s)| s.is_var(d)) {
                        return Err(format!("{which}({label}) = {f} holds a self pair"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Worklist (both orders) vs round-robin agreement on one program.
pub fn check_solvers(cfg: &ProgramCfg) -> Result<(), String> {
    let mut descent = None;
    let fifo = solve_forward_with(cfg, acs::transfer, WorklistOrder::Fifo, |l, old, new| {
        if descent.is_none() && !new.le(old) {
            descent = Some(format!("OUT({l}) grew from {old} to {new}"));
        }
    });
    if let Some(msg) = descent {
        return Err(msg);
    }
    let lifo = solve_forward_with(cfg, acs::transfer, WorklistOrder::Lifo, |_, _, _| {});
    if !fifo.same_solution(&lifo) {
        return Err("FIFO and LIFO worklist orders disagree".into());
    }
    let rr = solve_round_robin(cfg);
    if !fifo.same_solution(&rr) {
        let at = fifo
            .in_sets
            .keys()
            .find(|l| fifo.in_set(l) != rr.in_set(l) || fifo.out_set(l) != rr.out_set(l))
            .map(|l| l.to_string())
            .unwrap_or_default();
        return Err(format!("worklist and round-robin solvers disagree at {at}"));
    }
    Ok(())
}

/// MOP equals the computed IN at every reachable block (acyclic only).
pub fn check_mop(cfg: &ProgramCfg) -> Result<(), String> {
    let result = run_acs(cfg);
    for label in &result.reachable {
        let mop = mop_in(cfg, label).map_err(|e| e.to_string())?;
        if &mop != result.in_set(label) {
            return Err(format!(
                "MOP({label}) = {mop} but MFP = {}",
                result.in_set(label)
            ));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub seed: u64,
    pub programs: usize,
    pub inputs: usize,
    pub fuel: usize,
    pub params: GenParams,
    /// Also compare against path enumeration on acyclic programs.
    pub mop: bool,
    pub fixpoint_rounds: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 42,
            programs: 100,
            inputs: 10,
            fuel: 10_000,
            params: GenParams::default(),
            mop: false,
            fixpoint_rounds: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzFailure {
    pub index: usize,
    pub check: &'static str,
    pub detail: String,
    pub counterexample: Option<Box<Counterexample>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FuzzReport {
    pub programs: usize,
    pub executions: usize,
    pub acyclic: usize,
    /// The first failing program by index, if any.
    pub failure: Option<FuzzFailure>,
}

pub fn program_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates one program per index and runs every check on it.
pub fn fuzz_one(config: &FuzzConfig, index: usize) -> (bool, Result<(), FuzzFailure>) {
    let seed = program_seed(config.seed, index);
    let cfg = random_program(&config.params.clone().with_seed(seed));
    let acyclic = !has_cycle(&cfg);
    let fail = |check: &'static str, detail: String, cx: Option<Box<Counterexample>>| FuzzFailure {
        index,
        check,
        detail,
        counterexample: cx.map(|mut c| {
            c.seed = Some(seed);
            c
        }),
    };
    let res = (|| {
        check_solvers(&cfg).map_err(|d| fail("solvers", d, None))?;
        let result = run_acs(&cfg);
        check_fact_invariants(&result).map_err(|d| fail("fact-invariants", d, None))?;
        if config.mop && acyclic {
            check_mop(&cfg).map_err(|d| fail("mop", d, None))?;
        }
        let inputs = random_inputs(&cfg, config.inputs, seed ^ 0x5EED);
        for variant in [Variant::SinglePass, Variant::Fixpoint(config.fixpoint_rounds)] {
            if let Verdict::Fail(cx) = differential_check_variant(&cfg, &inputs, config.fuel, variant) {
                return Err(fail("differential", cx.reason.clone(), Some(cx)));
            }
        }
        Ok(())
    })();
    (acyclic, res)
}

/// Runs `config.programs` fuzz cases in parallel. The report is independent
/// of scheduling: the reported failure is the lowest failing index.
pub fn fuzz(config: &FuzzConfig) -> FuzzReport {
    let outcomes: Vec<(bool, Result<(), FuzzFailure>)> = (0..config.programs)
        .into_par_iter()
        .map(|i| fuzz_one(config, i))
        .collect();
    let acyclic = outcomes.iter().filter(|(a, _)| *a).count();
    let failure = outcomes.into_iter().find_map(|(_, r)| r.err());
    FuzzReport {
        programs: config.programs,
        executions: config.programs * config.inputs * 2,
        acyclic,
        failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, Label, VarName};

    fn env(pairs: &[(&str, i64)]) -> Env {
        pairs
            .iter()
            .map(|(k, x)| (VarName::new(*k).unwrap(), *x))
            .collect()
    }

    #[test]
    fn fig1_passes_both_arms() {
        let cfg = parse_program(include_str!("../../fixtures/fig1.tac")).unwrap();
        let inputs = [
            env(&[("x", 5), ("w", 2), ("p", 0)]),
            env(&[("x", 5), ("w", 2), ("p", 1)]),
        ];
        assert_eq!(differential_check(&cfg, &inputs, 100), Verdict::Pass);
    }

    #[test]
    fn fig2_passes() {
        let cfg = parse_program(include_str!("../../fixtures/fig2.tac")).unwrap();
        assert_eq!(differential_check(&cfg, &[env(&[("a", 3)])], 100), Verdict::Pass);
        let (after, _) = crate::propagate::propagate(&cfg);
        assert_eq!(
            after.stmt(&Label::new("B6").unwrap()).unwrap().uses(),
            vec![&VarName::new("a").unwrap()]
        );
    }

    #[test]
    fn copy_free_passes() {
        let cfg = parse_program(include_str!("../../fixtures/copyfree.tac")).unwrap();
        let inputs = random_inputs(&cfg, 5, 3);
        assert_eq!(differential_check(&cfg, &inputs, 100), Verdict::Pass);
    }

    #[test]
    fn broken_rewrite_is_caught() {
        // hand-made unsound "transformed" program: detect divergence
        let cfg = parse_program(include_str!("../../fixtures/fig1.tac")).unwrap();
        let bad = parse_program(&include_str!("../../fixtures/fig1.tac").replace("z = y + w", "z = w + w")).unwrap();
        let e = env(&[("x", 5), ("w", 2), ("p", 0)]);
        let a = execute(&cfg, &e, 100, |_, _, _| {});
        let b = execute(&bad, &e, 100, |_, _, _| {});
        assert!(compare_runs(&a, &b).is_some());
    }

    #[test]
    fn unsound_facts_are_caught() {
        let cfg = parse_program(include_str!("../../fixtures/fig1.tac")).unwrap();
        let mut analysis = run_acs(&cfg);
        let facts = crate::dataflow::Facts::try_from_pairs([crate::acs::CopyPair::parse("w", "x")]).unwrap();
        analysis
            .in_sets
            .insert(Label::new("B4").unwrap(), FactSet::Pairs(facts));
        let (_, v) = run_with_fact_check(&cfg, &analysis, &env(&[("x", 5), ("w", 2), ("p", 0)]), 100);
        let (step, msg) = v.expect("violation");
        assert_eq!(step, 3);
        assert!(msg.contains("(w, x)"), "{msg}");
    }

    #[test]
    fn counterexample_text() {
        let cfg = parse_program(include_str!("../../fixtures/minimal.tac")).unwrap();
        let cx = Counterexample::new(&cfg, &env(&[("a", 1)]), Some(4), "why".into());
        let text = cx.to_text();
        assert!(text.starts_with("# why\nentry: B0\n"));
        assert!(text.ends_with("--- env\na=1\n--- step\n4\n"));
    }

    #[test]
    fn small_fuzz_run_is_clean_and_deterministic() {
        let config = FuzzConfig {
            programs: 40,
            inputs: 3,
            mop: true,
            ..FuzzConfig::default()
        };
        let report = fuzz(&config);
        assert_eq!(report.failure, None);
        assert_eq!(fuzz(&config), report);
    }
}
