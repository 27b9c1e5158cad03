use super::{gen_string, pooled_or, Alphabet, GeneratedInput, Generator, GeneratorConfig};
use crate::param::{GenError, ParametricSource};

pub const DEFAULT_IDENTIFIERS: &[&str] = &["l_0", "l_1", "l_2", "l_3", "x", "y"];

pub const DEFAULT_PROPERTIES: &[&str] = &["length", "call", "value", "next"];

const BINARY_OPS: &[&str] = &[
    "+", "-", "*", "/", "%", "<", ">", "<=", ">=", "==", "!=", "&&", "||",
];
const UNARY_OPS: &[&str] = &["!", "-", "typeof "];

#[derive(Clone, Copy)]
enum Stmt {
    Expr,
    Var,
    If,
    While,
    Break,
    Continue,
    Return,
    Block,
    Empty,
}

const STMTS: &[Stmt] = &[
    Stmt::Expr,
    Stmt::Var,
    Stmt::If,
    Stmt::While,
    Stmt::Break,
    Stmt::Continue,
    Stmt::Return,
    Stmt::Block,
    Stmt::Empty,
];
const LEAF_STMTS: &[Stmt] = &[
    Stmt::Expr,
    Stmt::Var,
    Stmt::Break,
    Stmt::Continue,
    Stmt::Return,
    Stmt::Empty,
];

#[derive(Clone, Copy)]
enum Expr {
    Literal,
    Ident,
    Binary,
    Unary,
    Call,
    Index,
    Member,
    Assign,
    Function,
    Arrow,
}

const EXPRS: &[Expr] = &[
    Expr::Literal,
    Expr::Ident,
    Expr::Binary,
    Expr::Unary,
    Expr::Call,
    Expr::Index,
    Expr::Member,
    Expr::Assign,
    Expr::Function,
    Expr::Arrow,
];
const LEAF_EXPRS: &[Expr] = &[Expr::Literal, Expr::Ident];

/// Generator for a small JavaScript-like language.
///
/// Statements: expression, `var`, `if`/`else`, `while`, `break`, `continue`,
/// `return`, blocks and empty statements. Expressions: number/string/keyword
/// literals, identifiers from the pool, fully parenthesized unary and binary
/// operators, calls, indexing, member access, assignment, `function`
/// literals and arrow functions. Nesting is bounded by `max_depth`.
pub struct ScriptGenerator {
    config: GeneratorConfig,
    string_chars: Alphabet,
}

impl Default for ScriptGenerator {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self::new(GeneratorConfig {
            max_depth: 4,
            max_children: 4,
            max_str_len: 6,
            max_attributes: 0,
            name_pool: owned(DEFAULT_IDENTIFIERS),
            attribute_pool: owned(DEFAULT_PROPERTIES),
            value_pool: Vec::new(),
            keep_structure: false,
        })
        .expect("default config is valid")
    }
}

impl ScriptGenerator {
    pub fn new(config: GeneratorConfig) -> Result<Self, GenError> {
        config.validate()?;
        if config.name_pool.is_empty() {
            return Err(GenError::Config("script generator needs identifiers".into()));
        }
        Ok(Self {
            config,
            string_chars: Alphabet::new(('a'..='z').chain('A'..='Z').chain('0'..='9').chain([' '])),
        })
    }

    fn ident(&self, src: &mut ParametricSource<'_>) -> Result<String, GenError> {
        Ok(src.choose_from(&self.config.name_pool)?.clone())
    }

    fn block(&self, src: &mut ParametricSource<'_>, depth: u32, out: &mut String) -> Result<(), GenError> {
        let n = src.next_int(self.config.max_children as usize)?;
        out.push('{');
        for _ in 0..n {
            self.stmt(src, depth + 1, out)?;
        }
        out.push('}');
        Ok(())
    }

    fn stmt(&self, src: &mut ParametricSource<'_>, depth: u32, out: &mut String) -> Result<(), GenError> {
        let kinds = if depth < self.config.max_depth { STMTS } else { LEAF_STMTS };
        match *src.choose_from(kinds)? {
            Stmt::Expr => {
                self.expr(src, depth + 1, out)?;
                out.push(';');
            }
            Stmt::Var => {
                out.push_str("var ");
                out.push_str(&self.ident(src)?);
                if src.next_bool()? {
                    out.push_str(" = ");
                    self.expr(src, depth + 1, out)?;
                }
                out.push(';');
            }
            Stmt::If => {
                out.push_str("if (");
                self.expr(src, depth + 1, out)?;
                out.push_str(") ");
                self.block(src, depth, out)?;
                if src.next_bool()? {
                    out.push_str(" else ");
                    self.block(src, depth, out)?;
                }
            }
            Stmt::While => {
                out.push_str("while (");
                self.expr(src, depth + 1, out)?;
                out.push_str(") ");
                self.block(src, depth, out)?;
            }
            Stmt::Break => out.push_str("break;"),
            Stmt::Continue => out.push_str("continue;"),
            Stmt::Return => {
                out.push_str("return");
                if src.next_bool()? {
                    out.push(' ');
                    self.expr(src, depth + 1, out)?;
                }
                out.push(';');
            }
            Stmt::Block => self.block(src, depth, out)?,
            Stmt::Empty => out.push(';'),
        }
        Ok(())
    }

    fn literal(&self, src: &mut ParametricSource<'_>, out: &mut String) -> Result<(), GenError> {
        match src.next_int(6)? {
            0 => out.push_str(&src.next_int(256)?.to_string()),
            1 => {
                let s = pooled_or(src, &self.config.value_pool, |src| {
                    gen_string(src, self.config.max_str_len, &self.string_chars)
                })?;
                out.push('"');
                out.push_str(&s);
                out.push('"');
            }
            2 => out.push_str("true"),
            3 => out.push_str("false"),
            4 => out.push_str("null"),
            _ => out.push_str("undefined"),
        }
        Ok(())
    }

    /// An expression safe to follow with `(`, `[` or `.`.
    fn primary(&self, src: &mut ParametricSource<'_>, depth: u32, out: &mut String) -> Result<(), GenError> {
        let mut inner = String::new();
        let simple = self.expr_kind(src, depth, &mut inner)?;
        if simple {
            out.push_str(&inner);
        } else {
            out.push('(');
            out.push_str(&inner);
            out.push(')');
        }
        Ok(())
    }

    fn expr(&self, src: &mut ParametricSource<'_>, depth: u32, out: &mut String) -> Result<(), GenError> {
        self.expr_kind(src, depth, out).map(|_| ())
    }

    /// Writes one expression; returns whether it is a bare identifier.
    fn expr_kind(&self, src: &mut ParametricSource<'_>, depth: u32, out: &mut String) -> Result<bool, GenError> {
        let kinds = if depth < self.config.max_depth { EXPRS } else { LEAF_EXPRS };
        match *src.choose_from(kinds)? {
            Expr::Literal => self.literal(src, out)?,
            Expr::Ident => {
                out.push_str(&self.ident(src)?);
                return Ok(true);
            }
            Expr::Binary => {
                out.push('(');
                self.expr(src, depth + 1, out)?;
                out.push(' ');
                out.push_str(src.choose_from(BINARY_OPS)?);
                out.push(' ');
                self.expr(src, depth + 1, out)?;
                out.push(')');
            }
            Expr::Unary => {
                out.push('(');
                out.push_str(src.choose_from(UNARY_OPS)?);
                self.expr(src, depth + 1, out)?;
                out.push(')');
            }
            Expr::Call => {
                self.primary(src, depth + 1, out)?;
                out.push('(');
                let n = src.next_int(3)?;
                for i in 0..n {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.expr(src, depth + 1, out)?;
                }
                out.push(')');
            }
            Expr::Index => {
                self.primary(src, depth + 1, out)?;
                out.push('[');
                self.expr(src, depth + 1, out)?;
                out.push(']');
            }
            Expr::Member => {
                self.primary(src, depth + 1, out)?;
                out.push('.');
                out.push_str(src.choose_from(&self.config.attribute_pool)?);
            }
            Expr::Assign => {
                out.push('(');
                out.push_str(&self.ident(src)?);
                out.push_str(" = ");
                self.expr(src, depth + 1, out)?;
                out.push(')');
            }
            Expr::Function => {
                out.push_str("(function(");
                let n = src.next_int(3)?;
                for i in 0..n {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&self.ident(src)?);
                }
                out.push_str(") ");
                self.block(src, depth, out)?;
                out.push(')');
            }
            Expr::Arrow => {
                out.push('(');
                let n = src.next_int(3)?;
                if n == 1 {
                    out.push_str(&self.ident(src)?);
                } else {
                    out.push('(');
                    for i in 0..n {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(&self.ident(src)?);
                    }
                    out.push(')');
                }
                out.push_str(" => ");
                self.expr(src, depth + 1, out)?;
                out.push(')');
            }
        }
        Ok(false)
    }
}

impl Generator for ScriptGenerator {
    fn name(&self) -> &'static str {
        "script"
    }

    fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    fn generate(&self, source: &mut ParametricSource<'_>) -> Result<GeneratedInput, GenError> {
        let n = source.next_int_in_range(1, self.config.max_children as i64 + 1)?;
        let mut out = String::new();
        for _ in 0..n {
            self.stmt(source, 1, &mut out)?;
        }
        Ok(GeneratedInput {
            structure: self.config.keep_structure.then(|| out.clone()),
            text: out.into_bytes(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ParameterSequence;

    fn run(bytes: &[u8]) -> String {
        let mut s = ParameterSequence::new(0, bytes.to_vec());
        let mut src = ParametricSource::replaying(&mut s);
        ScriptGenerator::default().generate(&mut src).unwrap().text_lossy()
    }

    #[test]
    fn all_zero_trace_is_a_single_literal_statement() {
        assert_eq!(run(&[0u8; 8]), "0;");
    }

    #[test]
    fn hand_traced_loop_with_break_and_declaration() {
        // 2 statements: while(l_0){ break; ; var l_0; }  l_0;
        let seq = [
            1, // statement count 2
            3, 1, 0, // while, condition ident l_0
            3, // three body statements
            4, // break
            8, // empty
            1, 0, 0, // var l_0 (no init)
            0, 1, 0, // expression statement: l_0
        ];
        assert_eq!(run(&seq), "while (l_0) {break;;var l_0;}l_0;");
    }
}
