//! Three-address-code control-flow graph.
//!
//! A program is a set of labelled blocks, each holding exactly one statement
//! and an explicit, ordered successor list. The canonical text form is
//!
//! ```text
//! entry: B0
//! exit: B2
//! B0: nop -> B1
//! B1: x = y + 1 -> B2
//! B2: nop
//! ```
//!
//! Branch blocks list the taken-when-nonzero successor first.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Diagnostic, ParseError};

pub const RESERVED_WORDS: [&str; 4] = ["nop", "branch", "entry", "exit"];

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A program variable name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarName(String);

impl VarName {
    pub fn new(name: impl Into<String>) -> Result<Self, ParseError> {
        let name = name.into();
        if !is_identifier(&name) || RESERVED_WORDS.contains(&name.as_str()) {
            return Err(ParseError::InvalidName(name));
        }
        Ok(VarName(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for VarName {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VarName::new(s)
    }
}

/// A block label. Same lexical rules as [`VarName`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Result<Self, ParseError> {
        let name = name.into();
        if !is_identifier(&name) || RESERVED_WORDS.contains(&name.as_str()) {
            return Err(ParseError::InvalidName(name));
        }
        Ok(Label(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Label {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::new(s)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Operand {
    Var(VarName),
    Const(i64),
}

impl Operand {
    pub fn var(&self) -> Option<&VarName> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Const(_) => None,
        }
    }

    pub fn is_var(&self, name: &VarName) -> bool {
        matches!(self, Operand::Var(v) if v == name)
    }
}

impl From<VarName> for Operand {
    fn from(v: VarName) -> Self {
        Operand::Var(v)
    }
}

impl From<i64> for Operand {
    fn from(c: i64) -> Self {
        Operand::Const(c)
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => write!(f, "{v}"),
            Operand::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(BinOp::Add),
            '-' => Some(BinOp::Sub),
            '*' => Some(BinOp::Mul),
            '/' => Some(BinOp::Div),
            _ => None,
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Statement {
    Nop,
    Copy {
        dst: VarName,
        src: Operand,
    },
    Binary {
        dst: VarName,
        op: BinOp,
        lhs: Operand,
        rhs: Operand,
    },
    Branch {
        cond: Operand,
    },
}

/// An operand position inside a statement that may be rewritten.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Slot {
    CopySrc,
    BinaryLhs,
    BinaryRhs,
    BranchCond,
}

impl Slot {
    pub fn name(self) -> &'static str {
        match self {
            Slot::CopySrc => "copy-src",
            Slot::BinaryLhs => "binary-lhs",
            Slot::BinaryRhs => "binary-rhs",
            Slot::BranchCond => "branch-cond",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Statement {
    /// The variable this statement assigns, if any.
    pub fn def(&self) -> Option<&VarName> {
        match self {
            Statement::Copy { dst, .. } | Statement::Binary { dst, .. } => Some(dst),
            Statement::Nop | Statement::Branch { .. } => None,
        }
    }

    /// Every operand read by the statement, tagged with its slot.
    pub fn operands(&self) -> Vec<(Slot, &Operand)> {
        match self {
            Statement::Nop => Vec::new(),
            Statement::Copy { src, .. } => vec![(Slot::CopySrc, src)],
            Statement::Binary { lhs, rhs, .. } => {
                vec![(Slot::BinaryLhs, lhs), (Slot::BinaryRhs, rhs)]
            }
            Statement::Branch { cond } => vec![(Slot::BranchCond, cond)],
        }
    }

    /// Variables read by the statement, in slot order (may repeat).
    pub fn uses(&self) -> Vec<&VarName> {
        self.operands()
            .into_iter()
            .filter_map(|(_, op)| op.var())
            .collect()
    }

    pub fn operand_mut(&mut self, slot: Slot) -> Option<&mut Operand> {
        match (self, slot) {
            (Statement::Copy { src, .. }, Slot::CopySrc) => Some(src),
            (Statement::Binary { lhs, .. }, Slot::BinaryLhs) => Some(lhs),
            (Statement::Binary { rhs, .. }, Slot::BinaryRhs) => Some(rhs),
            (Statement::Branch { cond }, Slot::BranchCond) => Some(cond),
            _ => None,
        }
    }

    pub fn is_nop(&self) -> bool {
        matches!(self, Statement::Nop)
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, Statement::Branch { .. })
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Nop => f.write_str("nop"),
            Statement::Copy { dst, src } => write!(f, "{dst} = {src}"),
            Statement::Binary { dst, op, lhs, rhs } => write!(f, "{dst} = {lhs} {op} {rhs}"),
            Statement::Branch { cond } => write!(f, "branch {cond}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Block {
    pub label: Label,
    pub stmt: Statement,
    pub succs: Vec<Label>,
}

/// A whole program. Fields are public so that invalid graphs can be built and
/// handed to [`validate`]; [`parse_program`] only ever returns valid ones.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProgramCfg {
    pub entry: Label,
    pub exit: Label,
    pub blocks: BTreeMap<Label, Block>,
}

impl ProgramCfg {
    pub fn block(&self, label: &Label) -> Option<&Block> {
        self.blocks.get(label)
    }

    pub fn stmt(&self, label: &Label) -> Option<&Statement> {
        self.blocks.get(label).map(|b| &b.stmt)
    }

    /// Predecessor lists for every block, in ascending predecessor order.
    /// A predecessor with duplicate edges to the same block appears once.
    pub fn predecessors(&self) -> BTreeMap<Label, Vec<Label>> {
        let mut preds: BTreeMap<Label, Vec<Label>> =
            self.blocks.keys().map(|l| (l.clone(), Vec::new())).collect();
        for block in self.blocks.values() {
            for succ in &block.succs {
                if let Some(list) = preds.get_mut(succ) {
                    if list.last() != Some(&block.label) {
                        list.push(block.label.clone());
                    }
                }
            }
        }
        preds
    }

    /// All variables mentioned anywhere in the program.
    pub fn variables(&self) -> std::collections::BTreeSet<VarName> {
        let mut vars = std::collections::BTreeSet::new();
        for block in self.blocks.values() {
            if let Some(d) = block.stmt.def() {
                vars.insert(d.clone());
            }
            for u in block.stmt.uses() {
                vars.insert(u.clone());
            }
        }
        vars
    }

    pub fn edge_count(&self) -> usize {
        self.blocks.values().map(|b| b.succs.len()).sum()
    }
}

impl fmt::Display for ProgramCfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_program(self))
    }
}

impl FromStr for ProgramCfg {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}

/// Checks every structural invariant. An empty list means the program is valid.
pub fn validate(cfg: &ProgramCfg) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for (key, block) in &cfg.blocks {
        if *key != block.label {
            diags.push(Diagnostic::LabelMismatch(key.clone()));
        }
    }

    match cfg.blocks.get(&cfg.entry) {
        None => diags.push(Diagnostic::MissingEntry(cfg.entry.clone())),
        Some(b) if !b.stmt.is_nop() => diags.push(Diagnostic::EntryNotNop),
        Some(_) => {}
    }
    match cfg.blocks.get(&cfg.exit) {
        None => diags.push(Diagnostic::MissingExit(cfg.exit.clone())),
        Some(b) => {
            if !b.stmt.is_nop() {
                diags.push(Diagnostic::ExitNotNop);
            }
            if !b.succs.is_empty() {
                diags.push(Diagnostic::ExitHasSuccessors);
            }
        }
    }
    if cfg.entry == cfg.exit {
        diags.push(Diagnostic::EntryIsExit);
    }

    for block in cfg.blocks.values() {
        for succ in &block.succs {
            if !cfg.blocks.contains_key(succ) {
                diags.push(Diagnostic::UnknownSuccessor(succ.clone()));
            }
            if *succ == cfg.entry {
                diags.push(Diagnostic::EntryHasPredecessor(block.label.clone()));
            }
        }
        if block.label == cfg.exit {
            continue;
        }
        if block.stmt.is_branch() {
            if block.succs.len() != 2 {
                diags.push(Diagnostic::BranchArity(block.label.clone()));
            }
        } else if block.succs.len() != 1 {
            diags.push(Diagnostic::SuccessorArity(block.label.clone()));
        }
    }
    diags
}

/// Canonical text form: directives, then blocks in ascending label order.
pub fn print_program(cfg: &ProgramCfg) -> String {
    let mut out = String::new();
    out.push_str(&format!("entry: {}\n", cfg.entry));
    out.push_str(&format!("exit: {}\n", cfg.exit));
    for block in cfg.blocks.values() {
        out.push_str(&format!("{}: {}", block.label, block.stmt));
        if !block.succs.is_empty() {
            let succs: Vec<&str> = block.succs.iter().map(|s| s.as_str()).collect();
            out.push_str(" -> ");
            out.push_str(&succs.join(", "));
        }
        out.push('\n');
    }
    out
}

fn dot_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// Graphviz rendering. Annotations, when given, go on a second label line.
pub fn to_dot(cfg: &ProgramCfg, annotations: Option<&BTreeMap<Label, String>>) -> String {
    let mut out = String::from("digraph cfg {\n    node [shape=box, fontname=\"monospace\"];\n");
    for block in cfg.blocks.values() {
        let mut text = format!("{}: {}", block.label, block.stmt);
        if let Some(note) = annotations.and_then(|a| a.get(&block.label)) {
            text.push('\n');
            text.push_str(note);
        }
        out.push_str(&format!(
            "    \"{}\" [label=\"{}\"];\n",
            dot_escape(block.label.as_str()),
            dot_escape(&text)
        ));
    }
    for block in cfg.blocks.values() {
        for succ in &block.succs {
            out.push_str(&format!(
                "    \"{}\" -> \"{}\";\n",
                dot_escape(block.label.as_str()),
                dot_escape(succ.as_str())
            ));
        }
    }
    out.push_str("}\n");
    out
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Colon,
    Comma,
    Eq,
    Arrow,
    Op(BinOp),
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Lexer {
    fn new(line_text: &str, line: usize) -> Self {
        Lexer {
            chars: line_text.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    /// Tokens with 1-based columns. A `-` directly followed by a digit is a
    /// sign only where an operand is expected.
    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut toks: Vec<(usize, Tok)> = Vec::new();
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            let col = self.pos + 1;
            if c.is_whitespace() {
                self.pos += 1;
                continue;
            }
            let expects_operand = matches!(toks.last(), Some((_, Tok::Eq)) | Some((_, Tok::Op(_))))
                || matches!(toks.last(), Some((_, Tok::Ident(s))) if s == "branch");
            let next_is_digit = self
                .chars
                .get(self.pos + 1)
                .is_some_and(|d| d.is_ascii_digit());
            if c.is_ascii_digit() || ((c == '-' || c == '+') && next_is_digit && expects_operand) {
                let start = self.pos;
                self.pos += 1;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if self
                    .chars
                    .get(self.pos)
                    .is_some_and(|d| d.is_ascii_alphabetic() || *d == '_')
                {
                    return Err(self.err(self.pos + 1, "unexpected character in integer literal"));
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                let value: i64 = text
                    .parse()
                    .map_err(|_| self.err(col, format!("integer literal `{text}` out of range")))?;
                toks.push((col, Tok::Int(value)));
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
                {
                    self.pos += 1;
                }
                toks.push((col, Tok::Ident(self.chars[start..self.pos].iter().collect())));
                continue;
            }
            let tok = match c {
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '=' => Tok::Eq,
                '-' if self.chars.get(self.pos + 1) == Some(&'>') => {
                    self.pos += 1;
                    Tok::Arrow
                }
                c => match BinOp::from_symbol(c) {
                    Some(op) => Tok::Op(op),
                    None => return Err(self.err(col, format!("unexpected character `{c}`"))),
                },
            };
            self.pos += 1;
            toks.push((col, tok));
        }
        Ok(toks)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

struct LineParser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl LineParser {
    fn err(&self, message: impl Into<String>) -> ParseError {
        let column = self.toks.get(self.pos).map_or(self.end_col, |t| t.0);
        ParseError::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn label(&mut self) -> Result<Label, ParseError> {
        let s = self.ident("label")?;
        Label::new(s).map_err(|e| {
            self.pos -= 1;
            self.err(e.to_string())
        })
    }

    fn var(&mut self) -> Result<VarName, ParseError> {
        let s = self.ident("variable")?;
        VarName::new(s).map_err(|e| {
            self.pos -= 1;
            self.err(e.to_string())
        })
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(Operand::Const(v))
            }
            Some(Tok::Ident(_)) => Ok(Operand::Var(self.var()?)),
            _ => Err(self.err("expected operand")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "nop" => {
                self.pos += 1;
                Ok(Statement::Nop)
            }
            Some(Tok::Ident(s)) if s == "branch" => {
                self.pos += 1;
                let cond = self.operand()?;
                Ok(Statement::Branch { cond })
            }
            Some(Tok::Ident(_)) => {
                let dst = self.var()?;
                self.expect(Tok::Eq, "`=`")?;
                let lhs = self.operand()?;
                match self.peek() {
                    Some(Tok::Op(op)) => {
                        let op = *op;
                        self.pos += 1;
                        let rhs = self.operand()?;
                        Ok(Statement::Binary { dst, op, lhs, rhs })
                    }
                    _ => Ok(Statement::Copy { dst, src: lhs }),
                }
            }
            _ => Err(self.err("expected statement")),
        }
    }

    fn successors(&mut self) -> Result<Vec<Label>, ParseError> {
        let mut succs = Vec::new();
        if self.at_end() {
            return Ok(succs);
        }
        self.expect(Tok::Arrow, "`->` or end of line")?;
        succs.push(self.label()?);
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            succs.push(self.label()?);
        }
        if !self.at_end() {
            return Err(self.err("expected `,` or end of line"));
        }
        Ok(succs)
    }
}

fn line_parser(text: &str, line: usize) -> Result<LineParser, ParseError> {
    let toks = Lexer::new(text, line).tokens()?;
    Ok(LineParser {
        toks,
        pos: 0,
        line,
        end_col: text.trim_end().chars().count() + 1,
    })
}

fn directive(text: &str, line: usize, keyword: &str) -> Result<Label, ParseError> {
    let mut p = line_parser(text, line)?;
    match p.next() {
        Some(Tok::Ident(s)) if s == keyword => {}
        _ => {
            p.pos = 0;
            return Err(p.err(format!("expected `{keyword}:` directive")));
        }
    }
    p.expect(Tok::Colon, "`:`")?;
    let label = p.label()?;
    if !p.at_end() {
        return Err(p.err("expected end of line"));
    }
    Ok(label)
}

/// Parses and validates a program in the text format.
pub fn parse_program(text: &str) -> Result<ProgramCfg, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.trim().is_empty());

    let (n, l) = lines.next().ok_or(ParseError::Syntax {
        line: 1,
        column: 1,
        message: "expected `entry:` directive".into(),
    })?;
    let entry = directive(l, n, "entry")?;
    let (n, l) = lines.next().ok_or(ParseError::Syntax {
        line: n + 1,
        column: 1,
        message: "expected `exit:` directive".into(),
    })?;
    let exit = directive(l, n, "exit")?;

    let mut blocks = BTreeMap::new();
    for (n, l) in lines {
        let mut p = line_parser(l, n)?;
        let label = p.label()?;
        p.expect(Tok::Colon, "`:` after label")?;
        let stmt = p.statement()?;
        let succs = p.successors()?;
        if blocks.contains_key(&label) {
            return Err(ParseError::DuplicateLabel { label, line: n });
        }
        blocks.insert(label.clone(), Block { label, stmt, succs });
    }

    let cfg = ProgramCfg {
        entry,
        exit,
        blocks,
    };
    let diags = validate(&cfg);
    if diags.is_empty() {
        Ok(cfg)
    } else {
        Err(ParseError::Invalid(diags))
    }
}
