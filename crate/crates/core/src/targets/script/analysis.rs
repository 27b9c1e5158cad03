//! Front half of the mini-script semantic stage: scope resolution,
//! dead-code elimination and constant folding.

use super::parser::{BinOp, Expr, Stmt, UnOp};
use crate::coverage::CoverageRecorder;
use crate::targets::Rejection;
use std::collections::{BTreeMap, BTreeSet};

type Result<T> = std::result::Result<T, Rejection>;

fn reject<T>(reason: impl Into<String>) -> Result<T> {
    Err(Rejection::semantic(reason))
}

/// Names declared with `var` in `stmts`, not descending into functions.
pub(super) fn hoisted(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        hoisted_stmt(s, out);
    }
}

fn hoisted_stmt(s: &Stmt, out: &mut BTreeSet<String>) {
    match s {
        Stmt::Var(name, _) => {
            out.insert(name.clone());
        }
        Stmt::If(_, t, e) => {
            hoisted_stmt(t, out);
            if let Some(e) = e {
                hoisted_stmt(e, out);
            }
        }
        Stmt::While(_, body) => hoisted_stmt(body, out),
        Stmt::Block(stmts) => hoisted(stmts, out),
        Stmt::Expr(_) | Stmt::Break | Stmt::Continue | Stmt::Return(_) | Stmt::Empty => {}
    }
}

fn has_duplicates(params: &[String]) -> bool {
    let set: BTreeSet<&String> = params.iter().collect();
    set.len() != params.len()
}

// ---------------------------------------------------------------------------
// scope resolution

struct Resolver<'c> {
    cov: &'c mut CoverageRecorder,
    scopes: Vec<BTreeSet<String>>,
    loops: usize,
    in_function: bool,
    arrow_depth: usize,
}

impl Resolver<'_> {
    fn declared(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains(name))
    }

    fn function(&mut self, params: &[String], body: &[Stmt], top_level: bool) -> Result<()> {
        if self.cov.sem(0, has_duplicates(params)) {
            return reject("duplicate parameter name");
        }
        let mut names: BTreeSet<String> = params.iter().cloned().collect();
        hoisted(body, &mut names);
        self.cov.sem(1, names.len() > params.len());
        self.scopes.push(names);
        let saved = (self.loops, self.in_function);
        self.loops = 0;
        self.in_function = !top_level;
        let r = body.iter().try_for_each(|s| self.stmt(s));
        (self.loops, self.in_function) = saved;
        self.scopes.pop();
        r
    }

    fn stmt(&mut self, s: &Stmt) -> Result<()> {
        match s {
            Stmt::Expr(e) => self.expr(e),
            Stmt::Var(_, init) => {
                if let Some(e) = init {
                    self.cov.sem_hit(2);
                    self.expr(e)?;
                }
                Ok(())
            }
            Stmt::If(c, t, e) => {
                self.expr(c)?;
                self.stmt(t)?;
                if let Some(e) = e {
                    self.cov.sem_hit(3);
                    self.stmt(e)?;
                }
                Ok(())
            }
            Stmt::While(c, body) => {
                self.expr(c)?;
                self.loops += 1;
                self.cov.sem(4, self.loops > 1);
                let r = self.stmt(body);
                self.loops -= 1;
                r
            }
            Stmt::Break | Stmt::Continue => {
                if self.cov.sem(5, self.loops == 0) {
                    return reject("`break`/`continue` outside of a loop");
                }
                Ok(())
            }
            Stmt::Return(value) => {
                if self.cov.sem(6, !self.in_function) {
                    return reject("`return` outside of a function");
                }
                if let Some(v) = value {
                    self.expr(v)?;
                }
                Ok(())
            }
            Stmt::Block(stmts) => stmts.iter().try_for_each(|s| self.stmt(s)),
            Stmt::Empty => Ok(()),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<()> {
        match e {
            Expr::Ident(name) => {
                if !self.cov.sem(7, self.declared(name)) {
                    // arrow bodies are compiled lazily; names are checked there
                    if self.cov.sem(8, self.arrow_depth > 0) {
                        return Ok(());
                    }
                    return reject(format!("ReferenceError: {name} is not defined"));
                }
                Ok(())
            }
            Expr::Assign(target, value) => {
                if !self.cov.sem(9, matches!(**target, Expr::Ident(_) | Expr::Member(..) | Expr::Index(..))) {
                    return reject("invalid assignment target");
                }
                self.expr(target)?;
                self.expr(value)
            }
            Expr::Function(params, body) => {
                self.cov.sem_hit(10);
                let saved = self.arrow_depth;
                self.arrow_depth = 0;
                let r = self.function(params, body, false);
                self.arrow_depth = saved;
                r
            }
            Expr::Arrow(params, body) => {
                if self.cov.sem(11, has_duplicates(params)) {
                    return reject("duplicate parameter name");
                }
                self.scopes.push(params.iter().cloned().collect());
                self.arrow_depth += 1;
                let r = self.expr(body);
                self.arrow_depth -= 1;
                self.scopes.pop();
                r
            }
            Expr::Call(callee, args) => {
                self.cov.sem(12, args.is_empty());
                self.expr(callee)?;
                args.iter().try_for_each(|a| self.expr(a))
            }
            Expr::Binary(_, a, b) => {
                self.expr(a)?;
                self.expr(b)
            }
            Expr::Unary(_, a) | Expr::Member(a, _) => self.expr(a),
            Expr::Index(a, b) => {
                self.expr(a)?;
                self.expr(b)
            }
            Expr::Num(_) | Expr::Str(_) | Expr::Bool(_) | Expr::Null | Expr::Undefined => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// dead-code elimination

struct Dce<'c> {
    cov: &'c mut CoverageRecorder,
    warnings: usize,
}

impl Dce<'_> {
    /// Returns the pruned block and whether it always transfers control.
    fn block(&mut self, stmts: Vec<Stmt>, loops: usize) -> (Vec<Stmt>, bool) {
        let mut out = Vec::with_capacity(stmts.len());
        let mut terminated = false;
        for s in stmts {
            if terminated {
                self.warnings += 1;
                self.cov.sem_hit(13);
                // unreachable, but its declarations are still hoisted
                if !self.cov.sem(14, loops > 0) {
                    let mut names = BTreeSet::new();
                    hoisted_stmt(&s, &mut names);
                    out.extend(names.into_iter().map(|n| Stmt::Var(n, None)));
                }
                continue;
            }
            let (s, term) = self.stmt(s, loops);
            out.push(s);
            terminated = term;
        }
        (out, terminated)
    }

    fn stmt(&mut self, s: Stmt, loops: usize) -> (Stmt, bool) {
        match s {
            Stmt::Break | Stmt::Continue => {
                self.cov.sem_hit(15);
                (s, true)
            }
            Stmt::Return(v) => {
                self.cov.sem_hit(16);
                (Stmt::Return(v.map(|e| self.expr(e))), true)
            }
            Stmt::If(c, t, e) => {
                let c = self.expr(c);
                let (t, t_term) = self.stmt(*t, loops);
                let (e, e_term) = match e {
                    Some(e) => {
                        let (e, term) = self.stmt(*e, loops);
                        (Some(Box::new(e)), term)
                    }
                    None => (None, false),
                };
                let term = self.cov.sem(17, t_term && e_term);
                (Stmt::If(c, Box::new(t), e), term)
            }
            Stmt::While(c, body) => {
                let c = self.expr(c);
                let (body, _) = self.stmt(*body, loops + 1);
                (Stmt::While(c, Box::new(body)), false)
            }
            Stmt::Block(stmts) => {
                let (stmts, term) = self.block(stmts, loops);
                (Stmt::Block(stmts), term)
            }
            Stmt::Expr(e) => (Stmt::Expr(self.expr(e)), false),
            Stmt::Var(n, init) => (Stmt::Var(n, init.map(|e| self.expr(e))), false),
            Stmt::Empty => (Stmt::Empty, false),
        }
    }

    fn expr(&mut self, e: Expr) -> Expr {
        let bx = |this: &mut Self, e: Box<Expr>| Box::new(this.expr(*e));
        match e {
            Expr::Function(params, body) => {
                self.cov.sem_hit(18);
                let (body, _) = self.block(body, 0);
                Expr::Function(params, body)
            }
            Expr::Arrow(params, body) => Expr::Arrow(params, bx(self, body)),
            Expr::Unary(op, a) => Expr::Unary(op, bx(self, a)),
            Expr::Binary(op, a, b) => Expr::Binary(op, bx(self, a), bx(self, b)),
            Expr::Call(c, args) => Expr::Call(bx(self, c), args.into_iter().map(|a| self.expr(a)).collect()),
            Expr::Index(a, b) => Expr::Index(bx(self, a), bx(self, b)),
            Expr::Member(a, n) => Expr::Member(bx(self, a), n),
            Expr::Assign(a, b) => Expr::Assign(bx(self, a), bx(self, b)),
            leaf => leaf,
        }
    }
}

// ---------------------------------------------------------------------------
// constant folding

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Binding {
    Param,
    Var,
}

struct Folder<'c> {
    cov: &'c mut CoverageRecorder,
    scopes: Vec<BTreeMap<String, Binding>>,
    folded: usize,
}

fn truthy(e: &Expr) -> Option<bool> {
    Some(match e {
        Expr::Num(n) => *n != 0.0 && !n.is_nan(),
        Expr::Str(s) => !s.is_empty(),
        Expr::Bool(b) => *b,
        Expr::Null | Expr::Undefined => false,
        _ => return None,
    })
}

fn to_number(e: &Expr) -> f64 {
    match e {
        Expr::Num(n) => *n,
        _ => f64::NAN,
    }
}

fn to_display(e: &Expr) -> String {
    match e {
        Expr::Num(n) => n.to_string(),
        Expr::Str(s) => s.clone(),
        Expr::Bool(b) => b.to_string(),
        Expr::Null => "null".into(),
        _ => "undefined".into(),
    }
}

fn type_name(e: &Expr) -> &'static str {
    match e {
        Expr::Num(_) => "number",
        Expr::Str(_) => "string",
        Expr::Bool(_) => "boolean",
        Expr::Null => "object",
        Expr::Undefined => "undefined",
        Expr::Function(..) | Expr::Arrow(..) => "function",
        _ => "unknown",
    }
}

/// Built-in prototype that answers property lookups on a constant.
fn constant_receiver(e: &Expr) -> Option<&'static str> {
    match e {
        Expr::Num(_) => Some("Number"),
        Expr::Str(_) => Some("String"),
        Expr::Bool(_) => Some("Boolean"),
        _ => None,
    }
}

impl Folder<'_> {
    fn lookup(&self, name: &str) -> Option<Binding> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn scope_for(params: &[String], body: &[Stmt]) -> BTreeMap<String, Binding> {
        let mut vars = BTreeSet::new();
        hoisted(body, &mut vars);
        let mut scope: BTreeMap<String, Binding> = vars.into_iter().map(|v| (v, Binding::Var)).collect();
        scope.extend(params.iter().map(|p| (p.clone(), Binding::Param)));
        scope
    }

    fn stmts(&mut self, stmts: Vec<Stmt>) -> Result<Vec<Stmt>> {
        stmts.into_iter().map(|s| self.stmt(s)).collect()
    }

    fn stmt(&mut self, s: Stmt) -> Result<Stmt> {
        Ok(match s {
            Stmt::Expr(e) => Stmt::Expr(self.expr(e)?),
            Stmt::Var(n, init) => Stmt::Var(n, init.map(|e| self.expr(e)).transpose()?),
            Stmt::If(c, t, e) => {
                let c = self.expr(c)?;
                let t = self.stmt(*t)?;
                let e = e.map(|e| self.stmt(*e)).transpose()?;
                match truthy(&c) {
                    Some(true) => {
                        self.cov.sem_hit(19);
                        t
                    }
                    Some(false) => {
                        self.cov.sem_hit(20);
                        e.unwrap_or(Stmt::Empty)
                    }
                    None => Stmt::If(c, Box::new(t), e.map(Box::new)),
                }
            }
            Stmt::While(c, body) => {
                let c = self.expr(c)?;
                let body = self.stmt(*body)?;
                if self.cov.sem(21, truthy(&c) == Some(false)) {
                    Stmt::Empty
                } else {
                    Stmt::While(c, Box::new(body))
                }
            }
            Stmt::Return(v) => Stmt::Return(v.map(|e| self.expr(e)).transpose()?),
            Stmt::Block(stmts) => Stmt::Block(self.stmts(stmts)?),
            other => other,
        })
    }

    fn binary(&mut self, op: BinOp, a: &Expr, b: &Expr) -> Result<Option<Expr>> {
        if !(a.is_constant() && b.is_constant()) {
            return Ok(None);
        }
        let (num_a, num_b) = (matches!(a, Expr::Num(_)), matches!(b, Expr::Num(_)));
        let (str_a, str_b) = (matches!(a, Expr::Str(_)), matches!(b, Expr::Str(_)));
        let well_typed = match op {
            BinOp::Add => (num_a || str_a) && (num_b || str_b),
            BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => num_a && num_b,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => (num_a && num_b) || (str_a && str_b),
            BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => true,
        };
        if !self.cov.sem(22, well_typed) {
            return reject(format!(
                "TypeError: operator {op:?} on {} and {}",
                type_name(a),
                type_name(b)
            ));
        }
        self.folded += 1;
        let num = |f: fn(f64, f64) -> f64| Expr::Num(f(to_number(a), to_number(b)));
        let cmp = |f: fn(&str, &str) -> bool, g: fn(f64, f64) -> bool| match (a, b) {
            (Expr::Str(x), Expr::Str(y)) => Expr::Bool(f(x, y)),
            _ => Expr::Bool(g(to_number(a), to_number(b))),
        };
        Ok(Some(match op {
            BinOp::Add => {
                if self.cov.sem(23, str_a || str_b) {
                    Expr::Str(to_display(a) + &to_display(b))
                } else {
                    num(|x, y| x + y)
                }
            }
            BinOp::Sub => num(|x, y| x - y),
            BinOp::Mul => num(|x, y| x * y),
            BinOp::Div | BinOp::Rem => {
                if self.cov.sem(24, to_number(b) == 0.0) {
                    return reject("RangeError: division by constant zero");
                }
                if op == BinOp::Div { num(|x, y| x / y) } else { num(|x, y| x % y) }
            }
            BinOp::Lt => cmp(|x, y| x < y, |x, y| x < y),
            BinOp::Gt => cmp(|x, y| x > y, |x, y| x > y),
            BinOp::Le => cmp(|x, y| x <= y, |x, y| x <= y),
            BinOp::Ge => cmp(|x, y| x >= y, |x, y| x >= y),
            BinOp::Eq | BinOp::Ne => Expr::Bool((a == b) == (op == BinOp::Eq)),
            BinOp::And => {
                let t = truthy(a).expect("constant");
                if self.cov.sem(25, t) { b.clone() } else { a.clone() }
            }
            BinOp::Or => {
                let t = truthy(a).expect("constant");
                if self.cov.sem(26, t) { a.clone() } else { b.clone() }
            }
        }))
    }

    fn unary(&mut self, op: UnOp, a: &Expr) -> Result<Option<Expr>> {
        Ok(match op {
            UnOp::TypeOf if self.cov.sem(27, a.is_constant() || matches!(a, Expr::Function(..) | Expr::Arrow(..))) => {
                Some(Expr::Str(type_name(a).into()))
            }
            UnOp::Not if a.is_constant() => {
                self.cov.sem_hit(28);
                Some(Expr::Bool(!truthy(a).expect("constant")))
            }
            UnOp::Neg if a.is_constant() => {
                if !self.cov.sem(29, matches!(a, Expr::Num(_))) {
                    return reject(format!("TypeError: cannot negate {}", type_name(a)));
                }
                Some(Expr::Num(-to_number(a)))
            }
            _ => None,
        })
    }

    /// Replace parameters by constant arguments in an arrow body.
    fn substitute(&mut self, e: Expr, env: &BTreeMap<String, Expr>) -> Expr {
        let sub = |this: &mut Self, e: Box<Expr>| Box::new(this.substitute(*e, env));
        match e {
            Expr::Ident(name) => match env.get(&name) {
                Some(value) => {
                    self.cov.sem_hit(30);
                    value.clone()
                }
                None => {
                    self.cov.sem_hit(31);
                    let binding = self.lookup(&name).unwrap();
                    self.cov.sem(32, binding == Binding::Param);
                    Expr::Ident(name)
                }
            },
            Expr::Unary(op, a) => Expr::Unary(op, sub(self, a)),
            Expr::Binary(op, a, b) => Expr::Binary(op, sub(self, a), sub(self, b)),
            Expr::Call(c, args) => Expr::Call(sub(self, c), args.into_iter().map(|a| self.substitute(a, env)).collect()),
            Expr::Index(a, b) => Expr::Index(sub(self, a), sub(self, b)),
            Expr::Member(a, n) => Expr::Member(sub(self, a), n),
            Expr::Assign(a, b) => Expr::Assign(a, sub(self, b)),
            // nested functions keep their own bindings
            other => other,
        }
    }

    fn call(&mut self, callee: Expr, args: Vec<Expr>) -> Result<Expr> {
        let args = args.into_iter().map(|a| self.expr(a)).collect::<Result<Vec<_>>>()?;
        match callee {
            Expr::Arrow(params, body) if self.cov.sem(33, params.len() == args.len() && args.iter().all(Expr::is_constant)) => {
                // immediately-invoked arrow with constant arguments: inline it
                let env: BTreeMap<String, Expr> = params.into_iter().zip(args).collect();
                let body = self.substitute(*body, &env);
                self.folded += 1;
                self.expr(body)
            }
            Expr::Index(base, index) => {
                let base = self.expr(*base)?;
                let index = self.expr(*index)?;
                if self.cov.sem(34, base.is_constant() && index.is_constant()) {
                    if self.cov.sem(35, matches!(base, Expr::Null)) {
                        return reject("TypeError: cannot read properties of null");
                    }
                    self.cov.sem_hit(36);
                    let proto = constant_receiver(&base).expect("constant receiver for call target");
                    self.cov.sem(37, proto == "String");
                    return reject(format!("TypeError: {proto}.{} is not a function", to_display(&index)));
                }
                Ok(Expr::Call(Box::new(Expr::Index(Box::new(base), Box::new(index))), args))
            }
            other => {
                let callee = self.expr(other)?;
                if self.cov.sem(38, callee.is_constant()) {
                    return reject(format!("TypeError: {} is not a function", to_display(&callee)));
                }
                Ok(Expr::Call(Box::new(callee), args))
            }
        }
    }

    fn expr(&mut self, e: Expr) -> Result<Expr> {
        Ok(match e {
            Expr::Binary(op, a, b) => {
                let a = self.expr(*a)?;
                let b = self.expr(*b)?;
                match self.binary(op, &a, &b)? {
                    Some(folded) => folded,
                    None => Expr::Binary(op, Box::new(a), Box::new(b)),
                }
            }
            Expr::Unary(op, a) => {
                let a = self.expr(*a)?;
                match self.unary(op, &a)? {
                    Some(folded) => folded,
                    None => Expr::Unary(op, Box::new(a)),
                }
            }
            Expr::Call(callee, args) => self.call(*callee, args)?,
            Expr::Index(base, index) => {
                let base = self.expr(*base)?;
                let index = self.expr(*index)?;
                if self.cov.sem(39, matches!(base, Expr::Null | Expr::Undefined)) {
                    return reject("TypeError: cannot read properties of null or undefined");
                }
                match (&base, &index) {
                    (Expr::Str(s), Expr::Num(n)) => {
                        self.cov.sem_hit(40);
                        let c = (*n >= 0.0 && n.fract() == 0.0)
                            .then(|| s.chars().nth(*n as usize))
                            .flatten();
                        c.map_or(Expr::Undefined, |c| Expr::Str(c.to_string()))
                    }
                    _ => Expr::Index(Box::new(base), Box::new(index)),
                }
            }
            Expr::Member(base, name) => {
                let base = self.expr(*base)?;
                if self.cov.sem(41, matches!(base, Expr::Null | Expr::Undefined)) {
                    return reject(format!("TypeError: cannot read property `{name}` of {}", to_display(&base)));
                }
                match &base {
                    Expr::Str(s) if self.cov.sem(42, name == "length") => Expr::Num(s.chars().count() as f64),
                    _ => Expr::Member(Box::new(base), name),
                }
            }
            Expr::Assign(target, value) => {
                let value = self.expr(*value)?;
                let target = match *target {
                    Expr::Ident(n) => Expr::Ident(n),
                    other => {
                        self.cov.sem_hit(43);
                        self.expr(other)?
                    }
                };
                Expr::Assign(Box::new(target), Box::new(value))
            }
            Expr::Function(params, body) => {
                self.scopes.push(Self::scope_for(&params, &body));
                let body = self.stmts(body);
                self.scopes.pop();
                Expr::Function(params, body?)
            }
            Expr::Arrow(params, body) => {
                self.scopes.push(params.iter().map(|p| (p.clone(), Binding::Param)).collect());
                let body = self.expr(*body);
                self.scopes.pop();
                Expr::Arrow(params, Box::new(body?))
            }
            leaf => leaf,
        })
    }
}

/// Resolve, prune and fold a parsed program. Returns the folded program
/// and the number of warnings.
pub fn analyze(program: Vec<Stmt>, cov: &mut CoverageRecorder, strict_warnings: bool) -> Result<(Vec<Stmt>, usize)> {
    Resolver {
        cov,
        scopes: Vec::new(),
        loops: 0,
        in_function: false,
        arrow_depth: 0,
    }
    .function(&[], &program, true)?;

    let mut dce = Dce { cov, warnings: 0 };
    let (program, _) = dce.block(program, 0);
    let warnings = dce.warnings;
    if cov.sem(44, strict_warnings && warnings > 0) {
        return reject(format!("{warnings} warning(s) in strict mode"));
    }

    let mut folder = Folder {
        cov,
        scopes: vec![Folder::scope_for(&[], &program)],
        folded: 0,
    };
    let program = folder.stmts(program)?;
    let folded = folder.folded;
    cov.sem(45, folded >= 3);
    Ok((program, warnings))
}
