//! Lexer and recursive-descent parser for the mini-script language.

use crate::coverage::CoverageRecorder;
use crate::targets::Rejection;

pub(super) const SYNTAX_SITES: u16 = 40;

/// Bound on statement/expression nesting.
const MAX_NESTING: usize = 48;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Kw(&'static str),
    Punct(&'static str),
}

const KEYWORDS: &[&str] = &[
    "var", "if", "else", "while", "break", "continue", "return", "function", "true", "false",
    "null", "undefined", "typeof",
];

// longest first so that `<=` wins over `<`
const PUNCTS: &[&str] = &[
    "=>", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ";", ",", ".", "=",
    "!", "<", ">", "+", "-", "*", "/", "%",
];

fn lex(input: &[u8], cov: &mut CoverageRecorder) -> Result<Vec<Tok>, Rejection> {
    let src = match std::str::from_utf8(input) {
        Ok(s) => s,
        Err(_) => {
            cov.syn_hit(0);
            return Err(Rejection::syntax("invalid UTF-8"));
        }
    };
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
        } else if src[i..].starts_with("//") {
            cov.syn_hit(1);
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if b.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if cov.syn(2, i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit()) {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            toks.push(Tok::Num(src[start..i].parse().expect("digit run parses")));
        } else if b.is_ascii_alphabetic() || b == b'_' || b == b'$' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                i += 1;
            }
            let word = &src[start..i];
            match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => {
                    cov.syn_hit(3);
                    toks.push(Tok::Kw(k));
                }
                None => toks.push(Tok::Ident(word.to_string())),
            }
        } else if b == b'"' || b == b'\'' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(c) = src[i..].chars().next() else {
                    cov.syn_hit(4);
                    return Err(Rejection::syntax("unterminated string"));
                };
                i += c.len_utf8();
                if c as u32 == b as u32 {
                    break;
                }
                if cov.syn(5, c == '\\') {
                    let Some(e) = src[i..].chars().next() else {
                        return Err(Rejection::syntax("unterminated escape"));
                    };
                    i += e.len_utf8();
                    s.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                } else if cov.syn(6, c == '\n') {
                    return Err(Rejection::syntax("newline in string"));
                } else {
                    s.push(c);
                }
            }
            toks.push(Tok::Str(s));
        } else {
            match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
                Some(p) => {
                    toks.push(Tok::Punct(p));
                    i += p.len();
                }
                None => {
                    cov.syn_hit(7);
                    return Err(Rejection::syntax(format!("unexpected character at {i}")));
                }
            }
        }
    }
    Ok(toks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
    TypeOf,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Str(String),
    Bool(bool),
    Null,
    Undefined,
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Member(Box<Expr>, String),
    Assign(Box<Expr>, Box<Expr>),
    Function(Vec<String>, Vec<Stmt>),
    Arrow(Vec<String>, Box<Expr>),
}

impl Expr {
    pub fn is_constant(&self) -> bool {
        matches!(
            self,
            Expr::Num(_) | Expr::Str(_) | Expr::Bool(_) | Expr::Null | Expr::Undefined
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Expr(Expr),
    Var(String, Option<Expr>),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    Break,
    Continue,
    Return(Option<Expr>),
    Block(Vec<Stmt>),
    Empty,
}

struct Parser<'c> {
    toks: Vec<Tok>,
    pos: usize,
    depth: usize,
    cov: &'c mut CoverageRecorder,
}

type PResult<T> = Result<T, Rejection>;

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.toks.get(self.pos + off)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Kw(q)) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        let found = self.eat_punct(p);
        if self.cov.syn(8, found) {
            Ok(())
        } else {
            Err(Rejection::syntax(format!("expected `{p}` at token {}", self.pos)))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => {
                self.cov.syn_hit(9);
                Err(Rejection::syntax(format!("expected identifier at token {}", self.pos)))
            }
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.cov.syn(10, self.depth > MAX_NESTING) {
            return Err(Rejection::syntax("nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn program(&mut self) -> PResult<Vec<Stmt>> {
        let mut stmts = Vec::new();
        while self.peek().is_some() {
            stmts.push(self.stmt()?);
        }
        self.cov.syn(11, stmts.is_empty());
        Ok(stmts)
    }

    fn block_body(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if self.cov.syn(12, self.peek().is_none()) {
                return Err(Rejection::syntax("unterminated block"));
            }
            stmts.push(self.stmt()?);
        }
        self.pos += 1;
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        self.enter()?;
        let s = self.stmt_inner();
        self.leave();
        s
    }

    fn stmt_inner(&mut self) -> PResult<Stmt> {
        let kw = match self.peek() {
            Some(Tok::Kw(k)) => Some(*k),
            _ => None,
        };
        match kw {
            Some("var") => {
                self.cov.syn_hit(13);
                self.pos += 1;
                let name = self.ident()?;
                let has_init = self.eat_punct("=");
                let init = if self.cov.syn(14, has_init) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect_punct(";")?;
                Ok(Stmt::Var(name, init))
            }
            Some("if") => {
                self.cov.syn_hit(15);
                self.pos += 1;
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then = Box::new(self.stmt()?);
                let otherwise = if self.cov.syn(16, self.is_kw("else")) {
                    self.pos += 1;
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                Ok(Stmt::If(cond, then, otherwise))
            }
            Some("while") => {
                self.cov.syn_hit(17);
                self.pos += 1;
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                Ok(Stmt::While(cond, Box::new(self.stmt()?)))
            }
            Some("break") => {
                self.cov.syn_hit(18);
                self.pos += 1;
                self.expect_punct(";")?;
                Ok(Stmt::Break)
            }
            Some("continue") => {
                self.cov.syn_hit(19);
                self.pos += 1;
                self.expect_punct(";")?;
                Ok(Stmt::Continue)
            }
            Some("return") => {
                self.cov.syn_hit(20);
                self.pos += 1;
                let value = if self.cov.syn(21, self.is_punct(";")) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(";")?;
                Ok(Stmt::Return(value))
            }
            Some("else") => {
                self.cov.syn_hit(22);
                Err(Rejection::syntax("`else` without `if`"))
            }
            _ if self.is_punct("{") => {
                self.cov.syn_hit(23);
                Ok(Stmt::Block(self.block_body()?))
            }
            _ if self.eat_punct(";") => {
                self.cov.syn_hit(24);
                Ok(Stmt::Empty)
            }
            _ => {
                let e = self.expr()?;
                self.expect_punct(";")?;
                Ok(Stmt::Expr(e))
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let e = self.assignment();
        self.leave();
        e
    }

    /// Lookahead for `ident =>` or `( ident, ... ) =>`.
    fn arrow_params(&self) -> Option<(Vec<String>, usize)> {
        match (self.peek(), self.peek_at(1)) {
            (Some(Tok::Ident(p)), Some(Tok::Punct("=>"))) => return Some((vec![p.clone()], 2)),
            (Some(Tok::Punct("(")), _) => {}
            _ => return None,
        }
        let mut params = Vec::new();
        let mut off = 1;
        if !matches!(self.peek_at(off), Some(Tok::Punct(")"))) {
            loop {
                match self.peek_at(off) {
                    Some(Tok::Ident(p)) => params.push(p.clone()),
                    _ => return None,
                }
                off += 1;
                match self.peek_at(off) {
                    Some(Tok::Punct(",")) => off += 1,
                    Some(Tok::Punct(")")) => break,
                    _ => return None,
                }
            }
        }
        off += 1;
        matches!(self.peek_at(off), Some(Tok::Punct("=>"))).then_some((params, off + 1))
    }

    fn assignment(&mut self) -> PResult<Expr> {
        if let Some((params, skip)) = self.arrow_params() {
            self.cov.syn(25, params.len() == 1);
            self.pos += skip;
            let body = self.expr()?;
            return Ok(Expr::Arrow(params, Box::new(body)));
        }
        let lhs = self.binary(0)?;
        let assign = self.eat_punct("=");
        if self.cov.syn(26, assign) {
            let rhs = self.expr()?;
            return Ok(Expr::Assign(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn binop(&self, level: usize) -> Option<BinOp> {
        let Some(Tok::Punct(p)) = self.peek() else {
            return None;
        };
        let op = match (level, *p) {
            (0, "||") => BinOp::Or,
            (1, "&&") => BinOp::And,
            (2, "==") => BinOp::Eq,
            (2, "!=") => BinOp::Ne,
            (3, "<") => BinOp::Lt,
            (3, ">") => BinOp::Gt,
            (3, "<=") => BinOp::Le,
            (3, ">=") => BinOp::Ge,
            (4, "+") => BinOp::Add,
            (4, "-") => BinOp::Sub,
            (5, "*") => BinOp::Mul,
            (5, "/") => BinOp::Div,
            (5, "%") => BinOp::Rem,
            _ => return None,
        };
        Some(op)
    }

    /// Precedence climbing over six left-associative levels.
    fn binary(&mut self, level: usize) -> PResult<Expr> {
        if level == 6 {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = self.binop(level) {
            self.cov.syn_hit(27 + level as u16);
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = if self.eat_punct("!") {
            Some(UnOp::Not)
        } else if self.eat_punct("-") {
            Some(UnOp::Neg)
        } else if self.is_kw("typeof") {
            self.pos += 1;
            Some(UnOp::TypeOf)
        } else {
            None
        };
        match op {
            Some(op) => {
                self.cov.syn_hit(33);
                self.enter()?;
                let operand = self.unary();
                self.leave();
                Ok(Expr::Unary(op, Box::new(operand?)))
            }
            None => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.eat_punct("(") {
                self.cov.syn_hit(34);
                let mut args = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                e = Expr::Call(Box::new(e), args);
            } else if self.eat_punct("[") {
                self.cov.syn_hit(35);
                let index = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::Index(Box::new(e), Box::new(index));
            } else if self.eat_punct(".") {
                self.cov.syn_hit(36);
                let name = self.ident()?;
                e = Expr::Member(Box::new(e), name);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek().cloned() else {
            self.cov.syn_hit(37);
            return Err(Rejection::syntax("unexpected end of input"));
        };
        self.pos += 1;
        let e = match tok {
            Tok::Num(n) => Expr::Num(n),
            Tok::Str(s) => Expr::Str(s),
            Tok::Ident(name) => Expr::Ident(name),
            Tok::Kw("true") => Expr::Bool(true),
            Tok::Kw("false") => Expr::Bool(false),
            Tok::Kw("null") => Expr::Null,
            Tok::Kw("undefined") => Expr::Undefined,
            Tok::Kw("function") => {
                self.cov.syn_hit(38);
                self.expect_punct("(")?;
                let mut params = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        params.push(self.ident()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                self.enter()?;
                let body = self.block_body();
                self.leave();
                Expr::Function(params, body?)
            }
            Tok::Punct("(") => {
                let inner = self.expr()?;
                self.expect_punct(")")?;
                inner
            }
            _ => {
                self.cov.syn_hit(39);
                return Err(Rejection::syntax(format!("unexpected token at {}", self.pos - 1)));
            }
        };
        Ok(e)
    }
}

/// Parse a complete program.
pub fn parse(input: &[u8], cov: &mut CoverageRecorder) -> Result<Vec<Stmt>, Rejection> {
    let toks = lex(input, cov)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        depth: 0,
        cov,
    };
    parser.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Result<Vec<Stmt>, Rejection> {
        let mut cov = CoverageRecorder::new();
        cov.begin();
        parse(s.as_bytes(), &mut cov)
    }

    #[test]
    fn parses_statements() {
        let prog = p("var a = 1; while (a) { if (a) { break; } else { continue; } } return;").unwrap();
        assert_eq!(prog.len(), 3);
        assert!(matches!(prog[0], Stmt::Var(ref n, Some(Expr::Num(x))) if n == "a" && x == 1.0));
    }

    #[test]
    fn precedence_and_postfix() {
        let prog = p("a = 1 + 2 * b.c[3](4, 5);").unwrap();
        let Stmt::Expr(Expr::Assign(_, rhs)) = &prog[0] else { panic!() };
        let Expr::Binary(BinOp::Add, _, mul) = rhs.as_ref() else { panic!() };
        assert!(matches!(mul.as_ref(), Expr::Binary(BinOp::Mul, _, call) if matches!(call.as_ref(), Expr::Call(_, args) if args.len() == 2)));
    }

    #[test]
    fn arrows_and_functions() {
        let prog = p("(x => y)(1); ((a, b) => a); (() => 0); (function(a, b) { return a; });").unwrap();
        assert!(matches!(&prog[0], Stmt::Expr(Expr::Call(callee, _)) if matches!(callee.as_ref(), Expr::Arrow(ps, _) if ps.len() == 1)));
        assert!(matches!(&prog[1], Stmt::Expr(Expr::Arrow(ps, _)) if ps.len() == 2));
        assert!(matches!(&prog[2], Stmt::Expr(Expr::Arrow(ps, _)) if ps.is_empty()));
        assert!(matches!(&prog[3], Stmt::Expr(Expr::Function(ps, body)) if ps.len() == 2 && body.len() == 1));
    }

    #[test]
    fn rejections() {
        assert!(p("var ;").is_err());
        assert!(p("while (a { }").is_err());
        assert!(p("\"open").is_err());
        assert!(p("a #").is_err());
        assert!(p("else {}").is_err());
        let deep = "(".repeat(200) + "1" + &")".repeat(200) + ";";
        assert!(p(&deep).is_err());
        let deep_blocks = "{".repeat(200) + &"}".repeat(200);
        assert!(p(&deep_blocks).is_err());
        let deep_unary = "!".repeat(500) + "1;";
        assert!(p(&deep_unary).is_err());
    }

    #[test]
    fn empty_program() {
        assert!(p("").unwrap().is_empty());
        assert!(p("  // comment only\n").unwrap().is_empty());
    }
}
