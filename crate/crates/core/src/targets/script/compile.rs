//! Bytecode emission for the mini-script target.

use super::analysis::hoisted;
use super::parser::{BinOp, Expr, Stmt, UnOp};
use super::vm::Value;
use crate::coverage::CoverageRecorder;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Const(Value),
    Load(usize),
    Store(usize),
    /// Slot of an enclosing function, `up` scopes out.
    LoadOuter(usize, usize),
    StoreOuter(usize, usize),
    LoadGlobal(String),
    StoreGlobal(String),
    Binary(BinOp),
    Unary(UnOp),
    Call(usize),
    GetIndex,
    GetMember(String),
    SetIndex,
    SetMember(String),
    Jump(usize),
    JumpIfFalse(usize),
    /// Jump if the top of stack is falsy, keeping it; otherwise pop it.
    JumpIfFalseKeep(usize),
    JumpIfTrueKeep(usize),
    Closure(usize),
    Return,
    Pop,
}

impl Op {
    /// Dense index of the variant.
    pub fn kind(&self) -> u32 {
        match self {
            Op::Const(_) => 0,
            Op::Load(_) => 1,
            Op::Store(_) => 2,
            Op::LoadOuter(..) => 3,
            Op::StoreOuter(..) => 4,
            Op::LoadGlobal(_) => 5,
            Op::StoreGlobal(_) => 6,
            Op::Binary(_) => 7,
            Op::Unary(_) => 8,
            Op::Call(_) => 9,
            Op::GetIndex => 10,
            Op::GetMember(_) => 11,
            Op::SetIndex => 12,
            Op::SetMember(_) => 13,
            Op::Jump(_) => 14,
            Op::JumpIfFalse(_) => 15,
            Op::JumpIfFalseKeep(_) => 16,
            Op::JumpIfTrueKeep(_) => 17,
            Op::Closure(_) => 18,
            Op::Return => 19,
            Op::Pop => 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    pub params: usize,
    pub slots: usize,
    pub code: Vec<Op>,
}

/// Compiled functions; index 0 is the top level.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub functions: Vec<Function>,
}

struct Frame {
    slots: BTreeMap<String, usize>,
}

struct Emitter<'c> {
    cov: &'c mut CoverageRecorder,
    frames: Vec<Frame>,
    arrow_depth: usize,
    functions: Vec<Function>,
    /// Start offset and pending break jumps of each enclosing loop.
    loops: Vec<(usize, Vec<usize>)>,
}

fn literal(e: &Expr) -> Option<Value> {
    Some(match e {
        Expr::Num(n) => Value::Num(*n),
        Expr::Str(s) => Value::Str(s.as_str().into()),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Null => Value::Null,
        Expr::Undefined => Value::Undefined,
        _ => return None,
    })
}

impl Emitter<'_> {
    fn reserve(&mut self, params: usize) -> usize {
        self.functions.push(Function {
            params,
            slots: 0,
            code: Vec::new(),
        });
        self.functions.len() - 1
    }

    fn function(&mut self, params: &[String], body: &[Stmt]) -> usize {
        let mut vars = BTreeSet::new();
        hoisted(body, &mut vars);
        let mut slots: BTreeMap<String, usize> = BTreeMap::new();
        for name in params.iter().chain(vars.iter()) {
            let n = slots.len();
            slots.entry(name.clone()).or_insert(n);
        }
        let slot_count = slots.len();
        self.frames.push(Frame { slots });
        let id = self.reserve(params.len());
        let saved_loops = std::mem::take(&mut self.loops);
        let saved_arrow = std::mem::replace(&mut self.arrow_depth, 0);
        let mut ops = Vec::new();
        for s in body {
            self.stmt(s, &mut ops);
        }
        ops.push(Op::Const(Value::Undefined));
        ops.push(Op::Return);
        self.cov.sem(69, ops.len() >= 16);
        self.cov.sem(70, ops.len() >= 64);
        self.functions[id].slots = slot_count;
        self.functions[id].code = ops;
        self.loops = saved_loops;
        self.arrow_depth = saved_arrow;
        self.frames.pop();
        id
    }

    fn arrow(&mut self, params: &[String], body: &Expr) -> usize {
        let slots = params.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        self.frames.push(Frame { slots });
        let id = self.reserve(params.len());
        self.arrow_depth += 1;
        let mut ops = Vec::new();
        self.expr(body, &mut ops);
        ops.push(Op::Return);
        self.arrow_depth -= 1;
        self.functions[id].slots = params.len();
        self.functions[id].code = ops;
        self.frames.pop();
        id
    }

    fn resolve(&self, name: &str) -> Option<(usize, usize)> {
        self.frames
            .iter()
            .rev()
            .enumerate()
            .find_map(|(up, f)| f.slots.get(name).map(|&s| (up, s)))
    }

    fn load(&mut self, name: &str, ops: &mut Vec<Op>) {
        match self.resolve(name) {
            Some((0, slot)) => ops.push(Op::Load(slot)),
            Some((up, slot)) => {
                self.cov.sem_hit(46);
                ops.push(Op::LoadOuter(up, slot));
            }
            None if self.cov.sem(47, self.arrow_depth > 0) => ops.push(Op::LoadGlobal(name.into())),
            None => {
                // every name outside arrow bodies was resolved before folding
                self.cov.sem_hit(48);
                let frame = self.frames.last().expect("active frame");
                ops.push(Op::Load(frame.slots[name]));
            }
        }
    }

    fn store(&mut self, name: &str, ops: &mut Vec<Op>) {
        match self.resolve(name) {
            Some((0, slot)) => ops.push(Op::Store(slot)),
            Some((up, slot)) => {
                self.cov.sem_hit(49);
                ops.push(Op::StoreOuter(up, slot));
            }
            None => {
                self.cov.sem_hit(50);
                ops.push(Op::StoreGlobal(name.into()));
            }
        }
    }

    fn stmt(&mut self, s: &Stmt, ops: &mut Vec<Op>) {
        match s {
            Stmt::Expr(e) => {
                self.expr(e, ops);
                ops.push(Op::Pop);
            }
            Stmt::Var(name, Some(init)) => {
                self.cov.sem_hit(51);
                self.expr(init, ops);
                self.store(name, ops);
            }
            Stmt::Var(_, None) => {}
            Stmt::If(c, t, e) => {
                self.expr(c, ops);
                let jump_else = ops.len();
                ops.push(Op::JumpIfFalse(0));
                self.stmt(t, ops);
                match e {
                    Some(e) => {
                        self.cov.sem_hit(52);
                        let jump_end = ops.len();
                        ops.push(Op::Jump(0));
                        ops[jump_else] = Op::JumpIfFalse(ops.len());
                        self.stmt(e, ops);
                        ops[jump_end] = Op::Jump(ops.len());
                    }
                    None => ops[jump_else] = Op::JumpIfFalse(ops.len()),
                }
            }
            Stmt::While(c, body) => {
                let start = ops.len();
                self.expr(c, ops);
                let exit = ops.len();
                ops.push(Op::JumpIfFalse(0));
                self.loops.push((start, Vec::new()));
                self.cov.sem(53, self.loops.len() >= 2);
                self.stmt(body, ops);
                ops.push(Op::Jump(start));
                let (_, breaks) = self.loops.pop().expect("loop context");
                let end = ops.len();
                ops[exit] = Op::JumpIfFalse(end);
                self.cov.sem(54, breaks.len() >= 2);
                for b in breaks {
                    ops[b] = Op::Jump(end);
                }
            }
            Stmt::Break => {
                self.cov.sem_hit(55);
                let at = ops.len();
                ops.push(Op::Jump(0));
                self.loops.last_mut().expect("break inside loop").1.push(at);
            }
            Stmt::Continue => {
                self.cov.sem_hit(56);
                let start = self.loops.last().expect("continue inside loop").0;
                ops.push(Op::Jump(start));
            }
            Stmt::Return(v) => {
                match v {
                    Some(v) => {
                        self.cov.sem_hit(57);
                        self.expr(v, ops);
                    }
                    None => ops.push(Op::Const(Value::Undefined)),
                }
                ops.push(Op::Return);
            }
            Stmt::Block(stmts) => {
                self.cov.sem(58, stmts.is_empty());
                for s in stmts {
                    self.stmt(s, ops);
                }
            }
            Stmt::Empty => {}
        }
    }

    fn expr(&mut self, e: &Expr, ops: &mut Vec<Op>) {
        if let Some(v) = literal(e) {
            ops.push(Op::Const(v));
            return;
        }
        match e {
            Expr::Ident(name) => self.load(name, ops),
            Expr::Unary(op, a) => {
                self.cov.sem_hit(59);
                self.expr(a, ops);
                ops.push(Op::Unary(*op));
            }
            Expr::Binary(op, a, b) => {
                self.expr(a, ops);
                if self.cov.sem(60, matches!(op, BinOp::And | BinOp::Or)) {
                    let jump = ops.len();
                    ops.push(Op::Pop);
                    self.expr(b, ops);
                    ops[jump] = if *op == BinOp::And {
                        Op::JumpIfFalseKeep(ops.len())
                    } else {
                        Op::JumpIfTrueKeep(ops.len())
                    };
                } else {
                    self.expr(b, ops);
                    ops.push(Op::Binary(*op));
                }
            }
            Expr::Call(callee, args) => {
                self.expr(callee, ops);
                for a in args {
                    self.expr(a, ops);
                }
                self.cov.sem(61, args.len() >= 2);
                ops.push(Op::Call(args.len()));
            }
            Expr::Index(a, b) => {
                self.cov.sem_hit(62);
                self.expr(a, ops);
                self.expr(b, ops);
                ops.push(Op::GetIndex);
            }
            Expr::Member(a, name) => {
                self.cov.sem_hit(63);
                self.expr(a, ops);
                ops.push(Op::GetMember(name.clone()));
            }
            Expr::Assign(target, value) => match target.as_ref() {
                Expr::Ident(name) => {
                    self.cov.sem_hit(64);
                    self.expr(value, ops);
                    self.store(name, ops);
                    self.load(name, ops);
                }
                Expr::Index(base, index) => {
                    self.cov.sem_hit(65);
                    self.expr(base, ops);
                    self.expr(index, ops);
                    self.expr(value, ops);
                    ops.push(Op::SetIndex);
                }
                Expr::Member(base, name) => {
                    self.cov.sem_hit(66);
                    self.expr(base, ops);
                    self.expr(value, ops);
                    ops.push(Op::SetMember(name.clone()));
                }
                _ => unreachable!("assignment targets are checked during resolution"),
            },
            Expr::Function(params, body) => {
                self.cov.sem(67, self.frames.len() >= 2);
                let id = self.function(params, body);
                ops.push(Op::Closure(id));
            }
            Expr::Arrow(params, body) => {
                self.cov.sem(68, params.is_empty());
                let id = self.arrow(params, body);
                ops.push(Op::Closure(id));
            }
            _ => unreachable!("literals handled above"),
        }
    }
}

pub fn compile(program: &[Stmt], cov: &mut CoverageRecorder) -> Program {
    let mut emitter = Emitter {
        cov,
        frames: Vec::new(),
        arrow_depth: 0,
        functions: Vec::new(),
        loops: Vec::new(),
    };
    emitter.function(&[], program);
    let functions = emitter.functions;
    cov.sem(71, functions.len() >= 3);
    Program { functions }
}
