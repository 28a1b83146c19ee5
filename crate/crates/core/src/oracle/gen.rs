//! Seeded random program generator.
//!
//! Programs are built from structured regions (straight-line statements,
//! if/else diamonds, and loops) so every generated graph is valid. Pool
//! variables other than the designated inputs are initialized by a prefix of
//! constant copies. Loops are driven by a dedicated counter variable that
//! ordinary statements never assign, unless the loop is deliberately
//! generated unbounded.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{BinOp, Block, Label, Operand, ProgramCfg, Statement, VarName};

use super::interp::Env;

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    pub min_blocks: usize,
    pub max_blocks: usize,
    pub var_pool: usize,
    /// Pool variables read from the input environment instead of the prefix.
    pub input_vars: usize,
    pub const_min: i64,
    pub const_max: i64,
    pub branch_prob: f64,
    pub loop_prob: f64,
    /// Fraction of loops whose condition is an ordinary variable.
    pub unbounded_loop_prob: f64,
    pub copy_ratio: f64,
    pub allow_div: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 1,
            min_blocks: 6,
            max_blocks: 20,
            var_pool: 5,
            input_vars: 2,
            const_min: -3,
            const_max: 3,
            branch_prob: 0.3,
            loop_prob: 0.2,
            unbounded_loop_prob: 0.1,
            copy_ratio: 0.6,
            allow_div: false,
        }
    }
}

impl GenParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same defaults with no back edges.
    pub fn acyclic(max_blocks: usize) -> Self {
        GenParams {
            max_blocks,
            min_blocks: max_blocks.min(6),
            loop_prob: 0.0,
            ..GenParams::default()
        }
    }

    pub fn pool_names(&self) -> Vec<VarName> {
        (0..self.var_pool)
            .map(|i| {
                let name = if i < 26 {
                    ((b'a' + i as u8) as char).to_string()
                } else {
                    format!("v{i}")
                };
                VarName::new(name).expect("generated names are valid")
            })
            .collect()
    }
}

struct Builder<'p> {
    params: &'p GenParams,
    rng: ChaCha8Rng,
    pool: Vec<VarName>,
    /// Counters of the enclosing loops.
    counters: Vec<VarName>,
    next_counter: usize,
    stmts: Vec<Statement>,
    succs: Vec<Vec<usize>>,
    /// Blocks whose next successor is the next emitted block.
    open: Vec<usize>,
}

impl<'p> Builder<'p> {
    fn emit(&mut self, stmt: Statement) -> usize {
        let id = self.stmts.len();
        self.stmts.push(stmt);
        self.succs.push(Vec::new());
        for from in std::mem::take(&mut self.open) {
            self.succs[from].push(id);
        }
        self.open.push(id);
        id
    }

    fn constant(&mut self) -> i64 {
        self.rng.gen_range(self.params.const_min..=self.params.const_max)
    }

    fn readable_var(&mut self) -> VarName {
        let n = self.pool.len() + self.counters.len();
        let i = self.rng.gen_range(0..n);
        if i < self.pool.len() {
            self.pool[i].clone()
        } else {
            self.counters[i - self.pool.len()].clone()
        }
    }

    fn operand(&mut self, var_prob: f64) -> Operand {
        if self.rng.gen_bool(var_prob) {
            Operand::Var(self.readable_var())
        } else {
            Operand::Const(self.constant())
        }
    }

    fn statement(&mut self) -> Statement {
        let dst = self.pool.choose(&mut self.rng).expect("non-empty pool").clone();
        if self.rng.gen_bool(self.params.copy_ratio) {
            let src = self.operand(0.7);
            Statement::Copy { dst, src }
        } else {
            let ops: &[BinOp] = if self.params.allow_div {
                &[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]
            } else {
                &[BinOp::Add, BinOp::Sub, BinOp::Mul]
            };
            let op = *ops.choose(&mut self.rng).expect("non-empty");
            let lhs = self.operand(0.8);
            let rhs = self.operand(0.6);
            Statement::Binary { dst, op, lhs, rhs }
        }
    }

    fn body(&mut self, budget: usize, depth: u32) {
        let mut left = budget;
        while left > 0 {
            left -= self.item(left, depth);
        }
    }

    fn item(&mut self, left: usize, depth: u32) -> usize {
        let p = self.params;
        if depth < 3 && left >= 4 && p.loop_prob > 0.0 && self.rng.gen_bool(p.loop_prob) {
            return self.looped(left, depth);
        }
        if depth < 3 && left >= 3 && p.branch_prob > 0.0 && self.rng.gen_bool(p.branch_prob) {
            let arms = self.rng.gen_range(2..=left - 1);
            let then_len = self.rng.gen_range(1..arms);
            let cond = Operand::Var(self.readable_var());
            let head = self.emit(Statement::Branch { cond });
            self.body(then_len, depth + 1);
            let after_then = std::mem::replace(&mut self.open, vec![head]);
            self.body(arms - then_len, depth + 1);
            self.open.extend(after_then);
            return 1 + arms;
        }
        let stmt = self.statement();
        self.emit(stmt);
        1
    }

    fn looped(&mut self, left: usize, depth: u32) -> usize {
        let unbounded = self.rng.gen_bool(self.params.unbounded_loop_prob);
        if unbounded {
            let inner = self.rng.gen_range(1..=(left - 1).min(4));
            let cond = Operand::Var(self.pool.choose(&mut self.rng).expect("pool").clone());
            let header = self.emit(Statement::Branch { cond });
            self.body(inner, depth + 1);
            for from in std::mem::take(&mut self.open) {
                self.succs[from].push(header);
            }
            self.open = vec![header];
            return 1 + inner;
        }
        let counter = VarName::new(format!("k{}", self.next_counter)).expect("valid");
        self.next_counter += 1;
        let trips = self.rng.gen_range(1..=3);
        self.emit(Statement::Copy {
            dst: counter.clone(),
            src: Operand::Const(trips),
        });
        let header = self.emit(Statement::Branch {
            cond: Operand::Var(counter.clone()),
        });
        // readable, never assigned, inside the body
        self.counters.push(counter.clone());
        let inner = self.rng.gen_range(1..=(left - 3).min(6));
        self.body(inner, depth + 1);
        self.counters.pop();
        self.emit(Statement::Binary {
            dst: counter.clone(),
            op: BinOp::Sub,
            lhs: Operand::Var(counter),
            rhs: Operand::Const(1),
        });
        for from in std::mem::take(&mut self.open) {
            self.succs[from].push(header);
        }
        self.open = vec![header];
        3 + inner
    }
}

/// Deterministic in `params.seed`.
pub fn random_program(params: &GenParams) -> ProgramCfg {
    let mut b = Builder {
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        pool: params.pool_names(),
        counters: Vec::new(),
        next_counter: 0,
        stmts: Vec::new(),
        succs: Vec::new(),
        open: Vec::new(),
    };
    assert!(!b.pool.is_empty(), "variable pool must not be empty");
    b.emit(Statement::Nop);
    for var in b.pool.clone().into_iter().skip(params.input_vars) {
        let c = b.constant();
        b.emit(Statement::Copy {
            dst: var,
            src: Operand::Const(c),
        });
    }
    let fixed = b.stmts.len() + 1;
    let lo = params.min_blocks.max(fixed + 1);
    let hi = params.max_blocks.max(lo);
    let target = b.rng.gen_range(lo..=hi);
    b.body(target - fixed, 0);
    b.emit(Statement::Nop);

    let width = b.stmts.len().to_string().len().max(2);
    let label = |i: usize| Label::new(format!("B{i:0width$}")).expect("valid label");
    let exit = b.stmts.len() - 1;
    let blocks = b
        .stmts
        .into_iter()
        .zip(b.succs)
        .enumerate()
        .map(|(i, (stmt, succs))| {
            let block = Block {
                label: label(i),
                stmt,
                succs: if i == exit {
                    Vec::new()
                } else {
                    succs.into_iter().map(label).collect()
                },
            };
            (block.label.clone(), block)
        })
        .collect();
    ProgramCfg {
        entry: label(0),
        exit: label(exit),
        blocks,
    }
}

/// Random environments binding every variable of `cfg`.
pub fn random_inputs(cfg: &ProgramCfg, count: usize, seed: u64) -> Vec<Env> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = cfg.variables();
    (0..count)
        .map(|_| {
            vars.iter()
                .map(|v| (v.clone(), rng.gen_range(-3..=3)))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::validate;
    use crate::oracle::paths::has_cycle;

    #[test]
    fn deterministic_and_valid() {
        for seed in 0..200 {
            let p = GenParams::default().with_seed(seed);
            let a = random_program(&p);
            assert!(validate(&a).is_empty(), "seed {seed}: {:?}", validate(&a));
            assert!(a.blocks.len() <= p.max_blocks, "seed {seed}: {}", a.blocks.len());
            assert_eq!(a, random_program(&p));
        }
    }

    #[test]
    fn straight_line_without_branches_or_loops() {
        let p = GenParams {
            branch_prob: 0.0,
            loop_prob: 0.0,
            ..GenParams::default()
        };
        for seed in 0..50 {
            let cfg = random_program(&p.clone().with_seed(seed));
            assert!(cfg.blocks.values().all(|b| !b.stmt.is_branch()));
            assert!(cfg.blocks.values().all(|b| b.succs.len() <= 1));
        }
    }

    #[test]
    fn loops_appear() {
        let p = GenParams {
            loop_prob: 0.3,
            ..GenParams::default()
        };
        let cyclic = (0..100)
            .filter(|&s| has_cycle(&random_program(&p.clone().with_seed(s))))
            .count();
        assert!(cyclic > 0);
        let acyclic = GenParams::acyclic(12);
        assert!((0..100).all(|s| !has_cycle(&random_program(&acyclic.clone().with_seed(s)))));
    }

    #[test]
    fn initialization_prefix() {
        let p = GenParams::default().with_seed(9);
        let cfg = random_program(&p);
        let pool = p.pool_names();
        let labels: Vec<_> = cfg.blocks.keys().cloned().collect();
        for (i, var) in pool.iter().skip(p.input_vars).enumerate() {
            assert_eq!(
                cfg.blocks[&labels[i + 1]].stmt.def(),
                Some(var),
                "prefix block {i}"
            );
        }
        // with every input bound, generated programs never read unbound vars
        let env: Env = pool.iter().take(p.input_vars).map(|v| (v.clone(), 1)).collect();
        for seed in 0..50 {
            let cfg = random_program(&p.clone().with_seed(seed));
            let run = super::super::interp::execute(&cfg, &env, 10_000, |_, _, _| {});
            assert!(!matches!(run.status, super::super::interp::Termination::Error(_)));
        }
    }
}
