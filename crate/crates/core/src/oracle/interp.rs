//! Concrete interpreter: wrap-around 64-bit arithmetic, division truncating
//! toward zero, branches take the first successor on a nonzero condition.

use std::collections::BTreeMap;
use std::fmt;

use crate::ir::{BinOp, Label, Operand, ProgramCfg, Statement, VarName};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Env(BTreeMap<VarName, i64>);

impl Env {
    pub fn new() -> Self {
        Env(BTreeMap::new())
    }

    pub fn get(&self, var: &VarName) -> Option<i64> {
        self.0.get(var).copied()
    }

    pub fn set(&mut self, var: VarName, value: i64) {
        self.0.insert(var, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, i64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value_of(&self, op: &Operand) -> Option<i64> {
        match op {
            Operand::Const(c) => Some(*c),
            Operand::Var(v) => self.get(v),
        }
    }

    /// Parses `var=value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Env, String> {
        let mut env = Env::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `var=value`", i + 1))?;
            let var = VarName::new(name.trim()).map_err(|e| format!("line {}: {e}", i + 1))?;
            let value: i64 = value
                .trim()
                .parse()
                .map_err(|_| format!("line {}: bad integer `{}`", i + 1, value.trim()))?;
            env.set(var, value);
        }
        Ok(env)
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.0 {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromIterator<(VarName, i64)> for Env {
    fn from_iter<T: IntoIterator<Item = (VarName, i64)>>(iter: T) -> Self {
        Env(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuntimeError {
    Unbound { block: Label, var: VarName },
    DivByZero { block: Label },
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeError::Unbound { block, var } => write!(f, "unbound-variable {var} at {block}"),
            RuntimeError::DivByZero { block } => write!(f, "div-by-zero at {block}"),
        }
    }
}

impl RuntimeError {
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::Unbound { .. } => "unbound-variable",
            RuntimeError::DivByZero { .. } => "div-by-zero",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Termination {
    Exit,
    FuelExhausted,
    Error(RuntimeError),
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Exit => f.write_str("exit"),
            Termination::FuelExhausted => f.write_str("fuel-exhausted"),
            Termination::Error(e) => write!(f, "error: {e}"),
        }
    }
}

/// Observable outcome of a run without per-step environments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    /// Blocks executed, in order.
    pub path: Vec<Label>,
    /// Decision taken at each executed branch (true = first successor).
    pub branches: Vec<bool>,
    pub final_env: Env,
    pub status: Termination,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub label: Label,
    pub env: Env,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    /// Each executed block with the environment after it ran.
    pub steps: Vec<Step>,
    pub final_env: Env,
    pub status: Termination,
}

fn eval(op: BinOp, a: i64, b: i64) -> Option<i64> {
    Some(match op {
        BinOp::Add => a.wrapping_add(b),
        BinOp::Sub => a.wrapping_sub(b),
        BinOp::Mul => a.wrapping_mul(b),
        BinOp::Div => {
            if b == 0 {
                return None;
            }
            a.wrapping_div(b)
        }
    })
}

/// Runs `cfg` from `env0` for at most `fuel` block executions.
///
/// `before` sees the step index, the block about to run, and the
/// environment at that block's input point.
pub fn execute<F>(cfg: &ProgramCfg, env0: &Env, fuel: usize, mut before: F) -> Run
where
    F: FnMut(usize, &Label, &Env),
{
    let mut env = env0.clone();
    let mut path = Vec::new();
    let mut branches = Vec::new();
    let mut label = cfg.entry.clone();

    let status = loop {
        if path.len() >= fuel {
            break Termination::FuelExhausted;
        }
        let block = &cfg.blocks[&label];
        before(path.len(), &label, &env);
        path.push(label.clone());

        let read = |env: &Env, op: &Operand| {
            env.value_of(op).ok_or_else(|| RuntimeError::Unbound {
                block: label.clone(),
                var: op.var().cloned().expect("constants are always bound"),
            })
        };
        let mut next = 0;
        let step: Result<(), RuntimeError> = (|| {
            match &block.stmt {
                Statement::Nop => {}
                Statement::Copy { dst, src } => {
                    let value = read(&env, src)?;
                    env.set(dst.clone(), value);
                }
                Statement::Binary { dst, op, lhs, rhs } => {
                    let a = read(&env, lhs)?;
                    let b = read(&env, rhs)?;
                    let value = eval(*op, a, b).ok_or_else(|| RuntimeError::DivByZero {
                        block: label.clone(),
                    })?;
                    env.set(dst.clone(), value);
                }
                Statement::Branch { cond } => {
                    let taken = read(&env, cond)? != 0;
                    branches.push(taken);
                    next = if taken { 0 } else { 1 };
                }
            }
            Ok(())
        })();
        if let Err(e) = step {
            break Termination::Error(e);
        }
        if label == cfg.exit {
            break Termination::Exit;
        }
        label = block.succs[next].clone();
    };

    Run {
        path,
        branches,
        final_env: env,
        status,
    }
}

/// Full trace with a snapshot of the environment after every step.
pub fn interpret(cfg: &ProgramCfg, env0: &Env, fuel: usize) -> Trace {
    let mut inputs: Vec<Env> = Vec::new();
    let run = execute(cfg, env0, fuel, |_, _, env| inputs.push(env.clone()));
    // environment after step i is the input of step i + 1, or the final env
    let mut steps = Vec::with_capacity(run.path.len());
    for (i, label) in run.path.iter().enumerate() {
        let env = inputs.get(i + 1).cloned().unwrap_or_else(|| run.final_env.clone());
        steps.push(Step {
            label: label.clone(),
            env,
        });
    }
    Trace {
        steps,
        final_env: run.final_env,
        status: run.status,
    }
}
