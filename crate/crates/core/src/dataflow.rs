//! Forward "must" data-flow engine over sets of copy pairs.
//!
//! The lattice is the powerset of copy pairs ordered by inclusion, with a
//! symbolic top element standing for "every pair" and intersection as meet.
//! The solver computes the greatest fixpoint of
//!
//! ```text
//! IN(entry) = {}
//! IN(B)     = meet { OUT(P) | P predecessor of B }
//! OUT(B)    = transfer(stmt(B), IN(B))
//! ```
//!
//! starting from OUT = TOP everywhere.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::acs::CopyPair;
use crate::ir::{Label, Operand, ProgramCfg, Statement, VarName};

/// A finite set of copy pairs, stored as a map from destination to source.
/// The map representation makes the set functional by construction.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct Facts(BTreeMap<VarName, Operand>);

impl Facts {
    pub fn new() -> Self {
        Facts(BTreeMap::new())
    }

    /// Builds a fact set, rejecting a second pair for an already-present
    /// destination. Returns the offending pair on failure.
    pub fn try_from_pairs(pairs: impl IntoIterator<Item = CopyPair>) -> Result<Self, CopyPair> {
        let mut map = BTreeMap::new();
        for pair in pairs {
            if map.contains_key(&pair.dst) {
                return Err(pair);
            }
            map.insert(pair.dst, pair.src);
        }
        Ok(Facts(map))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The source paired with `dst`, if a pair `(dst, _)` is present.
    pub fn source_of(&self, dst: &VarName) -> Option<&Operand> {
        self.0.get(dst)
    }

    pub fn contains(&self, dst: &VarName, src: &Operand) -> bool {
        self.0.get(dst) == Some(src)
    }

    pub fn contains_pair(&self, pair: &CopyPair) -> bool {
        self.contains(&pair.dst, &pair.src)
    }

    /// Pairs in lexicographic `(dst, src)` order.
    pub fn pairs(&self) -> impl Iterator<Item = CopyPair> + '_ {
        self.0.iter().map(|(d, s)| CopyPair {
            dst: d.clone(),
            src: s.clone(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, &Operand)> {
        self.0.iter()
    }

    /// Adds `(dst, src)`, replacing any existing pair for `dst`.
    pub fn insert(&mut self, dst: VarName, src: Operand) {
        self.0.insert(dst, src);
    }

    /// Removes every pair with destination `var` or variable source `var`.
    pub fn kill(&mut self, var: &VarName) {
        self.0.remove(var);
        self.0.retain(|_, src| !src.is_var(var));
    }

    pub fn intersect(&self, other: &Facts) -> Facts {
        Facts(
            self.0
                .iter()
                .filter(|(d, s)| other.0.get(*d) == Some(*s))
                .map(|(d, s)| (d.clone(), s.clone()))
                .collect(),
        )
    }

    pub fn is_subset(&self, other: &Facts) -> bool {
        self.0.iter().all(|(d, s)| other.0.get(d) == Some(s))
    }

    /// True when following variable sources never revisits a variable.
    pub fn is_acyclic(&self) -> bool {
        // Functional graph: every node has out-degree at most one, so a walk
        // longer than the number of pairs must be on a cycle.
        let bound = self.0.len();
        self.0.keys().all(|start| {
            let mut cur = start;
            for _ in 0..=bound {
                match self.0.get(cur) {
                    Some(Operand::Var(next)) => cur = next,
                    _ => return true,
                }
            }
            false
        })
    }
}

impl fmt::Display for Facts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("{ }");
        }
        f.write_str("{ ")?;
        for (i, (d, s)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({d}, {s})")?;
        }
        f.write_str(" }")
    }
}

/// Lattice value: TOP before a point has been reached, else a finite set.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum FactSet {
    Top,
    Pairs(Facts),
}

impl FactSet {
    pub fn empty() -> Self {
        FactSet::Pairs(Facts::new())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, FactSet::Top)
    }

    pub fn facts(&self) -> Option<&Facts> {
        match self {
            FactSet::Top => None,
            FactSet::Pairs(f) => Some(f),
        }
    }

    /// `self ⊑ other` in the lattice (TOP is the greatest element).
    pub fn le(&self, other: &FactSet) -> bool {
        match (self, other) {
            (_, FactSet::Top) => true,
            (FactSet::Top, FactSet::Pairs(_)) => false,
            (FactSet::Pairs(a), FactSet::Pairs(b)) => a.is_subset(b),
        }
    }
}

impl From<Facts> for FactSet {
    fn from(f: Facts) -> Self {
        FactSet::Pairs(f)
    }
}

impl fmt::Display for FactSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactSet::Top => f.write_str("TOP"),
            FactSet::Pairs(p) => write!(f, "{p}"),
        }
    }
}

/// Intersection meet with TOP as identity.
pub fn meet(a: &FactSet, b: &FactSet) -> FactSet {
    match (a, b) {
        (FactSet::Top, x) | (x, FactSet::Top) => x.clone(),
        (FactSet::Pairs(a), FactSet::Pairs(b)) => FactSet::Pairs(a.intersect(b)),
    }
}

/// Labels reachable from entry along successor edges.
pub fn reachable_blocks(cfg: &ProgramCfg) -> BTreeSet<Label> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![cfg.entry.clone()];
    while let Some(label) = stack.pop() {
        if !seen.insert(label.clone()) {
            continue;
        }
        if let Some(block) = cfg.blocks.get(&label) {
            for succ in &block.succs {
                if !seen.contains(succ) {
                    stack.push(succ.clone());
                }
            }
        }
    }
    seen
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisResult {
    pub in_sets: BTreeMap<Label, FactSet>,
    pub out_sets: BTreeMap<Label, FactSet>,
    pub reachable: BTreeSet<Label>,
    /// Number of block evaluations performed by the solver.
    pub iterations: usize,
}

impl AnalysisResult {
    pub fn in_set(&self, label: &Label) -> &FactSet {
        self.in_sets.get(label).unwrap_or(&FactSet::Top)
    }

    pub fn out_set(&self, label: &Label) -> &FactSet {
        self.out_sets.get(label).unwrap_or(&FactSet::Top)
    }

    /// Facts at the input of a reachable block.
    pub fn facts_in(&self, label: &Label) -> Option<&Facts> {
        self.in_set(label).facts()
    }

    /// Equality of the computed solution, ignoring iteration metadata.
    pub fn same_solution(&self, other: &AnalysisResult) -> bool {
        self.in_sets == other.in_sets
            && self.out_sets == other.out_sets
            && self.reachable == other.reachable
    }
}

/// Worklist extraction discipline. The solution does not depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WorklistOrder {
    #[default]
    Fifo,
    Lifo,
}

pub fn solve_forward<F>(cfg: &ProgramCfg, transfer: F) -> AnalysisResult
where
    F: Fn(&Statement, &FactSet) -> FactSet,
{
    solve_forward_with(cfg, transfer, WorklistOrder::Fifo, |_, _, _| {})
}

/// Worklist solver. `observe` is called with `(block, old_out, new_out)`
/// every time an OUT set changes.
pub fn solve_forward_with<F, O>(
    cfg: &ProgramCfg,
    transfer: F,
    order: WorklistOrder,
    mut observe: O,
) -> AnalysisResult
where
    F: Fn(&Statement, &FactSet) -> FactSet,
    O: FnMut(&Label, &FactSet, &FactSet),
{
    let preds = cfg.predecessors();
    let mut in_sets: BTreeMap<Label, FactSet> =
        cfg.blocks.keys().map(|l| (l.clone(), FactSet::Top)).collect();
    let mut out_sets = in_sets.clone();

    let mut queue: VecDeque<Label> = VecDeque::new();
    let mut queued: BTreeSet<Label> = BTreeSet::new();
    queue.push_back(cfg.entry.clone());
    queued.insert(cfg.entry.clone());
    let mut iterations = 0;

    loop {
        let next = match order {
            WorklistOrder::Fifo => queue.pop_front(),
            WorklistOrder::Lifo => queue.pop_back(),
        };
        let Some(label) = next else { break };
        queued.remove(&label);
        let Some(block) = cfg.blocks.get(&label) else {
            continue;
        };
        iterations += 1;

        let input = if label == cfg.entry {
            FactSet::empty()
        } else {
            preds[&label]
                .iter()
                .fold(FactSet::Top, |acc, p| meet(&acc, &out_sets[p]))
        };
        let output = transfer(&block.stmt, &input);
        in_sets.insert(label.clone(), input);

        if output != out_sets[&label] {
            observe(&label, &out_sets[&label], &output);
            out_sets.insert(label.clone(), output);
            for succ in &block.succs {
                if queued.insert(succ.clone()) {
                    queue.push_back(succ.clone());
                }
            }
        }
    }

    AnalysisResult {
        in_sets,
        out_sets,
        reachable: reachable_blocks(cfg),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acs;
    use crate::ir::parse_program;

    fn v(s: &str) -> VarName {
        VarName::new(s).unwrap()
    }

    fn facts(pairs: &[(&str, &str)]) -> Facts {
        Facts::try_from_pairs(pairs.iter().map(|(d, s)| CopyPair::parse(d, s))).unwrap()
    }

    #[test]
    fn meet_is_intersection() {
        let a = FactSet::from(facts(&[("y", "x"), ("z", "1")]));
        let b = FactSet::from(facts(&[("y", "x")]));
        assert_eq!(meet(&a, &b), b);
        let c = FactSet::from(facts(&[("c", "b")]));
        assert_eq!(meet(&FactSet::Top, &c), c);
        assert_eq!(meet(&c, &FactSet::Top), c);
        assert_eq!(meet(&FactSet::Top, &FactSet::Top), FactSet::Top);
        // same destination, different source
        let d = FactSet::from(facts(&[("y", "w")]));
        assert_eq!(meet(&a, &d), FactSet::empty());
    }

    #[test]
    fn reachability() {
        let cfg = parse_program(include_str!("../fixtures/fig1.tac")).unwrap();
        assert_eq!(reachable_blocks(&cfg).len(), 6);

        let cfg = parse_program("entry: A\nexit: Z\nA: nop -> Z\nX: x = 1 -> Z\nZ: nop\n").unwrap();
        let r = reachable_blocks(&cfg);
        assert_eq!(r.len(), 2);
        assert!(!r.contains(&Label::new("X").unwrap()));
    }

    #[test]
    fn straight_line_accumulates() {
        let cfg =
            parse_program("entry: A\nexit: Z\nA: nop -> B\nB: x = 5 -> C\nC: y = x -> Z\nZ: nop\n")
                .unwrap();
        let res = solve_forward(&cfg, acs::transfer);
        let at_exit = res.in_set(&cfg.exit);
        assert_eq!(at_exit, &FactSet::from(facts(&[("x", "5"), ("y", "x")])));
        assert_eq!(res.in_set(&cfg.entry), &FactSet::empty());
    }

    #[test]
    fn self_loop_kills_constant() {
        // Frozen from the round-robin oracle: IN(L) = {} because the loop's
        // own increment kills (x, 0) on the back edge.
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> I\nI: x = 0 -> L\nL: x = x + 1 -> L, Z\nZ: nop\n",
        );
        // a non-branch with two successors is invalid; use an explicit branch
        assert!(cfg.is_err());
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> I\nI: x = 0 -> L\nL: x = x + 1 -> T\nT: branch x -> L, Z\nZ: nop\n",
        )
        .unwrap();
        let res = solve_forward(&cfg, acs::transfer);
        assert_eq!(res.in_set(&Label::new("L").unwrap()), &FactSet::empty());
        assert_eq!(res.in_set(&Label::new("T").unwrap()), &FactSet::empty());
    }

    #[test]
    fn unreachable_blocks_stay_top() {
        let cfg = parse_program(
            "entry: A\nexit: Z\nA: nop -> B\nB: x = 1 -> Z\nX: y = x -> B\nZ: nop\n",
        )
        .unwrap();
        let res = solve_forward(&cfg, acs::transfer);
        let x = Label::new("X").unwrap();
        assert!(res.in_set(&x).is_top());
        assert!(res.out_set(&x).is_top());
        assert!(!res.reachable.contains(&x));
        // TOP from the unreachable predecessor is the meet identity
        assert_eq!(res.in_set(&Label::new("B").unwrap()), &FactSet::empty());
    }

    #[test]
    fn orders_agree_and_descend() {
        let cfg = parse_program(include_str!("../fixtures/loop.tac")).unwrap();
        let mut violations = 0;
        let fifo = solve_forward_with(&cfg, acs::transfer, WorklistOrder::Fifo, |_, old, new| {
            if !new.le(old) {
                violations += 1;
            }
        });
        let lifo = solve_forward_with(&cfg, acs::transfer, WorklistOrder::Lifo, |_, old, new| {
            if !new.le(old) {
                violations += 1;
            }
        });
        assert_eq!(violations, 0);
        assert!(fifo.same_solution(&lifo));
        let b5 = Label::new("B5").unwrap();
        // (i, n) is killed by the decrement; n and s facts survive partially
        assert_eq!(
            fifo.in_set(&b5),
            &FactSet::from(facts(&[("n", "3")]))
        );
    }

    #[test]
    fn acyclicity_check() {
        assert!(facts(&[("a", "b"), ("b", "c"), ("c", "1")]).is_acyclic());
        assert!(!facts(&[("a", "b"), ("b", "a")]).is_acyclic());
        let mut f = Facts::new();
        f.insert(v("a"), Operand::Var(v("a")));
        assert!(!f.is_acyclic());
    }

    #[test]
    fn display() {
        assert_eq!(Facts::new().to_string(), "{ }");
        assert_eq!(facts(&[("c", "b"), ("b", "a")]).to_string(), "{ (b, a), (c, b) }");
        assert_eq!(FactSet::Top.to_string(), "TOP");
    }
}
