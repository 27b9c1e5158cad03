//! Stack machine that runs compiled mini-script programs.
//!
//! Typing is strict: no implicit conversions, so most ill-typed programs are
//! rejected at run time. Execution is bounded by a step budget.

use super::compile::{Op, Program};
use super::parser::{BinOp, UnOp};
use crate::coverage::CoverageRecorder;
use crate::targets::Rejection;
use std::rc::Rc;

pub const STEP_LIMIT: usize = 4_000;
const MAX_CALL_DEPTH: usize = 32;
const MAX_STRING_LEN: usize = 1_024;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Str(Rc<str>),
    Bool(bool),
    Null,
    Undefined,
    /// Function index and the scope it closes over.
    Func(usize, usize),
}

impl Value {
    fn truthy(&self) -> bool {
        match self {
            Value::Num(n) => *n != 0.0 && !n.is_nan(),
            Value::Str(s) => !s.is_empty(),
            Value::Bool(b) => *b,
            Value::Null | Value::Undefined => false,
            Value::Func(..) => true,
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::Bool(_) => "boolean",
            Value::Null => "object",
            Value::Undefined => "undefined",
            Value::Func(..) => "function",
        }
    }
}

struct Scope {
    slots: Vec<Value>,
    parent: Option<usize>,
}

struct CallFrame {
    function: usize,
    pc: usize,
    scope: usize,
    base: usize,
}

#[derive(Default)]
struct Counters {
    steps: usize,
    back_edges: usize,
    calls: usize,
    max_depth: usize,
    closures: usize,
    longest_string: usize,
    returned_function: bool,
    /// Bit set of called function indices, saturating at 64.
    functions_called: u64,
    /// Bit set of executed op kinds.
    kinds: u32,
}

struct Machine<'p, 'c> {
    program: &'p Program,
    cov: &'c mut CoverageRecorder,
    scopes: Vec<Scope>,
    stack: Vec<Value>,
    frames: Vec<CallFrame>,
    n: Counters,
}

type Result<T> = std::result::Result<T, Rejection>;

fn type_error<T>(msg: String) -> Result<T> {
    Err(Rejection::semantic(format!("TypeError: {msg}")))
}

impl Machine<'_, '_> {
    fn pop(&mut self) -> Value {
        self.stack.pop().expect("balanced operand stack")
    }

    fn scope_up(&self, mut scope: usize, up: usize) -> usize {
        for _ in 0..up {
            scope = self.scopes[scope].parent.expect("enclosing scope");
        }
        scope
    }

    fn binary(&mut self, op: BinOp, a: Value, b: Value) -> Result<Value> {
        use Value::{Bool, Num, Str};
        Ok(match (op, &a, &b) {
            (BinOp::Eq, ..) => Bool(a == b),
            (BinOp::Ne, ..) => Bool(a != b),
            (BinOp::Add, Num(x), Num(y)) => {
                self.cov.sem_hit(77);
                Num(x + y)
            }
            (BinOp::Add, Str(_) | Num(_), Str(_) | Num(_)) => {
                let joined = format!("{}{}", display(&a), display(&b));
                if self.cov.sem(78, joined.len() > MAX_STRING_LEN) {
                    return Err(Rejection::semantic("RangeError: string too long"));
                }
                self.n.longest_string = self.n.longest_string.max(joined.len());
                Str(joined.into())
            }
            (BinOp::Sub, Num(x), Num(y)) => Num(x - y),
            (BinOp::Mul, Num(x), Num(y)) => Num(x * y),
            (BinOp::Div, Num(x), Num(y)) => {
                self.cov.sem(79, *y == 0.0);
                Num(x / y)
            }
            (BinOp::Rem, Num(x), Num(y)) => Num(x % y),
            (BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge, Num(x), Num(y)) => Bool(compare(op, x, y)),
            (BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge, Str(x), Str(y)) => {
                self.cov.sem_hit(80);
                Bool(compare(op, x, y))
            }
            _ => {
                self.cov.sem_hit(81);
                return type_error(format!("{op:?} on {} and {}", a.type_name(), b.type_name()));
            }
        })
    }

    fn unary(&mut self, op: UnOp, a: Value) -> Result<Value> {
        Ok(match op {
            UnOp::Not => Value::Bool(!a.truthy()),
            UnOp::TypeOf => {
                self.cov.sem_hit(82);
                Value::Str(a.type_name().into())
            }
            UnOp::Neg => match a {
                Value::Num(x) => Value::Num(-x),
                other => {
                    self.cov.sem_hit(83);
                    return type_error(format!("cannot negate {}", other.type_name()));
                }
            },
        })
    }

    fn call(&mut self, argc: usize) -> Result<()> {
        let args = self.stack.split_off(self.stack.len() - argc);
        let callee = self.pop();
        let Value::Func(function, scope) = callee else {
            self.cov.sem_hit(84);
            return type_error(format!("{} is not a function", callee.type_name()));
        };
        if self.cov.sem(85, self.frames.len() >= MAX_CALL_DEPTH) {
            return Err(Rejection::semantic("RangeError: maximum call depth exceeded"));
        }
        let f = &self.program.functions[function];
        self.cov.sem(86, argc == f.params);
        self.cov.sem(87, self.frames.iter().any(|fr| fr.function == function));
        let mut slots = vec![Value::Undefined; f.slots];
        for (slot, arg) in slots.iter_mut().zip(args).take(f.params) {
            *slot = arg;
        }
        self.scopes.push(Scope {
            slots,
            parent: Some(scope),
        });
        self.frames.push(CallFrame {
            function,
            pc: 0,
            scope: self.scopes.len() - 1,
            base: self.stack.len(),
        });
        self.n.calls += 1;
        self.n.functions_called |= 1 << function.min(63);
        self.n.max_depth = self.n.max_depth.max(self.frames.len());
        Ok(())
    }

    fn get_index(&mut self, base: Value, index: Value) -> Result<Value> {
        match (&base, &index) {
            (Value::Str(s), Value::Num(i)) => {
                let ch = (*i >= 0.0 && i.fract() == 0.0)
                    .then(|| s.chars().nth(*i as usize))
                    .flatten();
                self.cov.sem(88, ch.is_some());
                Ok(ch.map_or(Value::Undefined, |c| Value::Str(c.to_string().into())))
            }
            _ => {
                self.cov.sem_hit(89);
                type_error(format!("cannot index {} with {}", base.type_name(), index.type_name()))
            }
        }
    }

    fn get_member(&mut self, base: Value, name: &str) -> Result<Value> {
        Ok(match (&base, name) {
            (Value::Str(s), "length") => {
                self.cov.sem_hit(90);
                Value::Num(s.chars().count() as f64)
            }
            (Value::Func(f, _), "length") => {
                self.cov.sem_hit(91);
                Value::Num(self.program.functions[*f].params as f64)
            }
            (Value::Null | Value::Undefined, _) => {
                self.cov.sem_hit(92);
                return type_error(format!("cannot read `{name}` of {}", display(&base)));
            }
            _ => {
                self.cov.sem_hit(93);
                Value::Undefined
            }
        })
    }

    fn jump(&mut self, target: usize) {
        let frame = self.frames.last_mut().expect("active frame");
        if target < frame.pc {
            self.n.back_edges += 1;
        }
        frame.pc = target;
    }

    fn run(&mut self) -> Result<()> {
        self.scopes.push(Scope {
            slots: vec![Value::Undefined; self.program.functions[0].slots],
            parent: None,
        });
        self.frames.push(CallFrame {
            function: 0,
            pc: 0,
            scope: 0,
            base: 0,
        });
        loop {
            self.n.steps += 1;
            if self.cov.sem(72, self.n.steps > STEP_LIMIT) {
                return Err(Rejection::semantic("RangeError: step budget exhausted"));
            }
            let frame = self.frames.last_mut().expect("active frame");
            let op = &self.program.functions[frame.function].code[frame.pc];
            frame.pc += 1;
            let scope = frame.scope;
            self.n.kinds |= 1 << op.kind();
            match op {
                Op::Const(v) => self.stack.push(v.clone()),
                Op::Load(slot) => self.stack.push(self.scopes[scope].slots[*slot].clone()),
                Op::Store(slot) => {
                    let v = self.pop();
                    self.scopes[scope].slots[*slot] = v;
                }
                Op::LoadOuter(up, slot) => {
                    self.cov.sem_hit(73);
                    let s = self.scope_up(scope, *up);
                    self.stack.push(self.scopes[s].slots[*slot].clone());
                }
                Op::StoreOuter(up, slot) => {
                    self.cov.sem_hit(74);
                    let v = self.pop();
                    let s = self.scope_up(scope, *up);
                    self.scopes[s].slots[*slot] = v;
                }
                Op::LoadGlobal(name) | Op::StoreGlobal(name) => {
                    self.cov.sem_hit(75);
                    return Err(Rejection::semantic(format!("ReferenceError: {name} is not defined")));
                }
                Op::Binary(op) => {
                    let b = self.pop();
                    let a = self.pop();
                    let v = self.binary(*op, a, b)?;
                    self.stack.push(v);
                }
                Op::Unary(op) => {
                    let a = self.pop();
                    let v = self.unary(*op, a)?;
                    self.stack.push(v);
                }
                Op::Call(argc) => self.call(*argc)?,
                Op::GetIndex => {
                    let index = self.pop();
                    let base = self.pop();
                    let v = self.get_index(base, index)?;
                    self.stack.push(v);
                }
                Op::GetMember(name) => {
                    let base = self.pop();
                    let v = self.get_member(base, name)?;
                    self.stack.push(v);
                }
                Op::SetIndex | Op::SetMember(_) => {
                    self.cov.sem_hit(76);
                    return type_error("values are immutable".into());
                }
                Op::Jump(t) => self.jump(*t),
                Op::JumpIfFalse(t) => {
                    if !self.pop().truthy() {
                        self.jump(*t);
                    }
                }
                Op::JumpIfFalseKeep(t) | Op::JumpIfTrueKeep(t) => {
                    let on_true = matches!(op, Op::JumpIfTrueKeep(_));
                    let top = self.stack.last().expect("balanced operand stack").truthy();
                    if self.cov.sem(94, top == on_true) {
                        self.jump(*t);
                    } else {
                        self.pop();
                    }
                }
                Op::Closure(f) => {
                    self.n.closures += 1;
                    self.stack.push(Value::Func(*f, scope));
                }
                Op::Return => {
                    let v = self.pop();
                    let done = self.frames.pop().expect("active frame");
                    if self.frames.is_empty() {
                        return Ok(());
                    }
                    self.stack.truncate(done.base);
                    if matches!(v, Value::Func(..)) {
                        self.n.returned_function = true;
                    }
                    self.stack.push(v);
                }
                Op::Pop => {
                    self.pop();
                }
            }
        }
    }

    /// Bucketed execution profile.
    fn record_profile(&mut self) -> u16 {
        let n = &self.n;
        let functions = n.functions_called.count_ones() as usize;
        let kinds = n.kinds.count_ones() as usize;
        let profile: [(usize, &[usize]); 9] = [
            (n.steps, &[8, 12, 16, 20, 24, 28, 32, 40, 48, 64, 96, 128, 256]),
            (n.back_edges, &[1, 2, 3, 4, 6, 8, 12, 16, 32]),
            (n.calls, &[1, 2, 3, 4, 6, 8, 16]),
            (n.max_depth, &[2, 3, 4, 5, 6, 8]),
            (n.closures, &[1, 2, 3, 4, 6, 8]),
            (n.longest_string, &[2, 4, 8, 12, 16, 24, 32, 64]),
            (kinds, &[4, 6, 8, 10, 12, 14]),
            (functions, &[1, 2, 3, 4]),
            (n.returned_function as usize, &[1]),
        ];
        let mut site = 95;
        for (value, thresholds) in profile {
            site = self.cov.sem_levels(site, value, thresholds);
        }
        site
    }
}

fn compare<T: PartialOrd + ?Sized>(op: BinOp, x: &T, y: &T) -> bool {
    match op {
        BinOp::Lt => x < y,
        BinOp::Gt => x > y,
        BinOp::Le => x <= y,
        _ => x >= y,
    }
}

fn display(v: &Value) -> String {
    match v {
        Value::Num(n) => n.to_string(),
        Value::Str(s) => s.to_string(),
        other => other.type_name().to_string(),
    }
}

/// Sites used by the stage, from 0.
pub const SITES: u16 = 155;

/// Run a compiled program to completion.
pub fn run(program: &Program, cov: &mut CoverageRecorder) -> Result<()> {
    let mut m = Machine {
        program,
        cov,
        scopes: Vec::new(),
        stack: Vec::new(),
        frames: Vec::new(),
        n: Counters::default(),
    };
    m.run()?;
    let end = m.record_profile();
    debug_assert_eq!(end, SITES);
    Ok(())
}
