// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser producing an unresolved syntax tree.

use super::lexer::{tokenize, Tok, Token};
use super::{BinaryOp, HdlError, Pos, Radix, UnaryOp};

#[derive(Debug, Clone)]
pub struct Module {
    pub name: String,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    Input,
    Output,
    OutputReg,
    Reg,
    Wire,
}

#[derive(Debug, Clone)]
pub struct Decl {
    pub kind: DeclKind,
    pub name: String,
    pub width: u32,
    pub init: Option<SynExpr>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub enum Item {
    Decl(Decl),
    LocalParam {
        name: String,
        value: SynExpr,
        pos: Pos,
    },
    Assign {
        target: String,
        expr: SynExpr,
        pos: Pos,
    },
    Always {
        body: Vec<SynStmt>,
    },
}

#[derive(Debug, Clone)]
pub enum SynExprKind {
    Number {
        value: u64,
        size: Option<u32>,
        radix: Radix,
    },
    Ident(String),
    Bit(String, Box<SynExpr>),
    Unary(UnaryOp, Box<SynExpr>),
    Binary(BinaryOp, Box<SynExpr>, Box<SynExpr>),
}

#[derive(Debug, Clone)]
pub struct SynExpr {
    pub kind: SynExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct SynLValue {
    pub name: String,
    pub bit: Option<SynExpr>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub enum SynStmt {
    Assign {
        target: SynLValue,
        expr: SynExpr,
        blocking: bool,
        pos: Pos,
    },
    If {
        cond: SynExpr,
        then_body: Vec<SynStmt>,
        /// Position of the `else` keyword and its body.
        else_branch: Option<(Pos, Vec<SynStmt>)>,
        pos: Pos,
    },
    Case {
        subject: SynExpr,
        arms: Vec<SynCaseArm>,
        default: Option<(Pos, Vec<SynStmt>)>,
    },
}

#[derive(Debug, Clone)]
pub struct SynCaseArm {
    pub labels: Vec<SynExpr>,
    pub body: Vec<SynStmt>,
    pub pos: Pos,
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "initial", "integer", "for", "while", "repeat", "forever", "function", "task", "generate",
    "genvar", "casez", "casex", "inout", "signed", "always_ff", "always_comb", "fork", "module",
    "include", "define", "real", "time",
];

pub fn parse(src: &str) -> Result<Module, HdlError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, at: 0 };
    p.module()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.at + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number { value, .. } => format!("number {value}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn syntax<T>(&self, expected: &str) -> Result<T, HdlError> {
        Err(HdlError::Syntax {
            pos: self.pos(),
            message: format!("expected {expected}, found {}", self.describe()),
        })
    }

    fn unsupported<T>(&self, construct: &str) -> Result<T, HdlError> {
        Err(HdlError::Unsupported {
            pos: self.pos(),
            construct: construct.to_string(),
        })
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), HdlError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.syntax(&format!("`{p}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), HdlError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.syntax(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), HdlError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => self.syntax("identifier"),
        }
    }

    fn module(&mut self) -> Result<Module, HdlError> {
        self.expect_kw("module")?;
        let (name, _) = self.ident()?;
        if self.is_punct("#") {
            return self.unsupported("module parameter list");
        }
        let mut items = Vec::new();
        self.expect_punct("(")?;
        if !self.is_punct(")") {
            loop {
                items.push(Item::Decl(self.port()?));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        while !self.is_kw("endmodule") {
            if matches!(self.peek(), Tok::Eof) {
                return self.syntax("`endmodule`");
            }
            self.item(&mut items)?;
        }
        self.bump();
        if !matches!(self.peek(), Tok::Eof) {
            return self.unsupported("multiple modules");
        }
        Ok(Module { name, items })
    }

    fn port(&mut self) -> Result<Decl, HdlError> {
        let pos = self.pos();
        let kind = if self.eat_kw("input") {
            self.eat_kw("wire");
            DeclKind::Input
        } else if self.eat_kw("output") {
            if self.eat_kw("reg") {
                DeclKind::OutputReg
            } else {
                self.eat_kw("wire");
                DeclKind::Output
            }
        } else if self.is_kw("inout") {
            return self.unsupported("inout port");
        } else {
            return self.syntax("ANSI port declaration (`input` or `output`)");
        };
        if self.is_kw("signed") {
            return self.unsupported("signed types");
        }
        let width = self.range()?;
        let (name, _) = self.ident()?;
        let init = if kind == DeclKind::OutputReg && self.eat_punct("=") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(Decl {
            kind,
            name,
            width,
            init,
            pos,
        })
    }

    /// Optional `[msb:0]`; returns the width.
    fn range(&mut self) -> Result<u32, HdlError> {
        if !self.eat_punct("[") {
            return Ok(1);
        }
        let pos = self.pos();
        let msb = self.const_number()?;
        self.expect_punct(":")?;
        let lsb = self.const_number()?;
        self.expect_punct("]")?;
        if lsb != 0 {
            return Err(HdlError::Unsupported {
                pos,
                construct: "vector range with nonzero lsb".into(),
            });
        }
        if msb >= 64 {
            return Err(HdlError::WidthMismatch {
                pos,
                message: format!("width {} exceeds 64 bits", msb + 1),
            });
        }
        Ok(msb as u32 + 1)
    }

    fn const_number(&mut self) -> Result<u64, HdlError> {
        match self.peek().clone() {
            Tok::Number { value, .. } => {
                self.bump();
                Ok(value)
            }
            _ => self.syntax("constant"),
        }
    }

    fn item(&mut self, items: &mut Vec<Item>) -> Result<(), HdlError> {
        let pos = self.pos();
        let word = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.syntax("module item"),
        };
        match word.as_str() {
            "reg" | "wire" => {
                self.bump();
                if self.is_kw("signed") {
                    return self.unsupported("signed types");
                }
                let kind = if word == "reg" { DeclKind::Reg } else { DeclKind::Wire };
                let width = self.range()?;
                loop {
                    let (name, npos) = self.ident()?;
                    if self.is_punct("[") {
                        return self.unsupported("memory array");
                    }
                    let init = if self.eat_punct("=") {
                        if kind == DeclKind::Wire {
                            return Err(HdlError::Unsupported {
                                pos: npos,
                                construct: "wire declaration assignment (use `assign`)".into(),
                            });
                        }
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    items.push(Item::Decl(Decl {
                        kind,
                        name,
                        width,
                        init,
                        pos: npos,
                    }));
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")
            }
            "localparam" | "parameter" => {
                self.bump();
                self.range()?;
                loop {
                    let (name, npos) = self.ident()?;
                    self.expect_punct("=")?;
                    let value = self.expr()?;
                    items.push(Item::LocalParam {
                        name,
                        value,
                        pos: npos,
                    });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")
            }
            "input" | "output" => self.unsupported("non-ANSI port declaration"),
            "assign" => {
                self.bump();
                let (target, tpos) = self.ident()?;
                if self.is_punct("[") {
                    return self.unsupported("bit-select target in continuous assign");
                }
                self.expect_punct("=")?;
                let expr = self.expr()?;
                self.expect_punct(";")?;
                items.push(Item::Assign {
                    target,
                    expr,
                    pos: tpos,
                });
                Ok(())
            }
            "always" => {
                self.bump();
                self.expect_punct("@")?;
                self.expect_punct("(")?;
                if self.is_punct("*") {
                    return self.unsupported("combinational always block");
                }
                if self.is_kw("negedge") {
                    return self.unsupported("negedge");
                }
                if !self.eat_kw("posedge") {
                    return self.unsupported("level-sensitive event control");
                }
                let (clk, cpos) = self.ident()?;
                if clk != "clk" {
                    return Err(HdlError::Unsupported {
                        pos: cpos,
                        construct: format!("clock `{clk}` (only `clk` is supported)"),
                    });
                }
                if self.is_kw("or") || self.is_punct(",") {
                    return self.unsupported("multiple clock/reset events");
                }
                self.expect_punct(")")?;
                let body = self.stmt_body()?;
                items.push(Item::Always { body });
                Ok(())
            }
            w if UNSUPPORTED_KEYWORDS.contains(&w) => Err(HdlError::Unsupported {
                pos,
                construct: format!("`{w}`"),
            }),
            _ => Err(HdlError::Syntax {
                pos,
                message: format!("expected module item, found `{word}`"),
            }),
        }
    }

    /// A statement or `begin ... end` block, flattened into a list.
    fn stmt_body(&mut self) -> Result<Vec<SynStmt>, HdlError> {
        if self.eat_kw("begin") {
            if self.eat_punct(":") {
                self.ident()?;
            }
            let mut body = Vec::new();
            while !self.eat_kw("end") {
                if matches!(self.peek(), Tok::Eof) {
                    return self.syntax("`end`");
                }
                body.extend(self.stmt_body()?);
            }
            Ok(body)
        } else if self.eat_punct(";") {
            Ok(Vec::new())
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn stmt(&mut self) -> Result<SynStmt, HdlError> {
        let pos = self.pos();
        if self.eat_kw("if") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_body = self.stmt_body()?;
            let else_branch = if self.is_kw("else") {
                let epos = self.pos();
                self.bump();
                Some((epos, self.stmt_body()?))
            } else {
                None
            };
            return Ok(SynStmt::If {
                cond,
                then_body,
                else_branch,
                pos,
            });
        }
        if self.eat_kw("case") {
            self.expect_punct("(")?;
            let subject = self.expr()?;
            self.expect_punct(")")?;
            let mut arms = Vec::new();
            let mut default = None;
            while !self.eat_kw("endcase") {
                if matches!(self.peek(), Tok::Eof) {
                    return self.syntax("`endcase`");
                }
                let apos = self.pos();
                if self.eat_kw("default") {
                    if default.is_some() {
                        return Err(HdlError::Syntax {
                            pos: apos,
                            message: "duplicate default arm".into(),
                        });
                    }
                    self.eat_punct(":");
                    default = Some((apos, self.stmt_body()?));
                    continue;
                }
                let mut labels = vec![self.expr()?];
                while self.eat_punct(",") {
                    labels.push(self.expr()?);
                }
                self.expect_punct(":")?;
                let body = self.stmt_body()?;
                arms.push(SynCaseArm {
                    labels,
                    body,
                    pos: apos,
                });
            }
            return Ok(SynStmt::Case {
                subject,
                arms,
                default,
            });
        }
        if let Tok::Ident(w) = self.peek() {
            if UNSUPPORTED_KEYWORDS.contains(&w.as_str()) || w.starts_with('$') {
                let w = w.clone();
                return self.unsupported(&format!("`{w}`"));
            }
        }
        let (name, lpos) = self.ident()?;
        let bit = if self.eat_punct("[") {
            let e = self.expr()?;
            if self.is_punct(":") {
                return self.unsupported("part-select");
            }
            self.expect_punct("]")?;
            Some(e)
        } else {
            None
        };
        let blocking = if self.eat_punct("=") {
            true
        } else if self.eat_punct("<=") {
            false
        } else {
            return self.syntax("`=` or `<=`");
        };
        let expr = self.expr()?;
        self.expect_punct(";")?;
        Ok(SynStmt::Assign {
            target: SynLValue {
                name,
                bit,
                pos: lpos,
            },
            expr,
            blocking,
            pos,
        })
    }

    fn expr(&mut self) -> Result<SynExpr, HdlError> {
        let e = self.binary(1)?;
        if self.is_punct("?") {
            return self.unsupported("conditional operator `?:`");
        }
        Ok(e)
    }

    fn peek_binop(&self) -> Option<BinaryOp> {
        let Tok::Punct(p) = self.peek() else {
            return None;
        };
        Some(match *p {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "&" => BinaryOp::And,
            "|" => BinaryOp::Or,
            "^" => BinaryOp::Xor,
            "&&" => BinaryOp::LogicalAnd,
            "||" => BinaryOp::LogicalOr,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            _ => return None,
        })
    }

    /// Precedence climbing over left-associative binary operators.
    fn binary(&mut self, min_prec: u8) -> Result<SynExpr, HdlError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() < min_prec {
                break;
            }
            let pos = self.pos();
            self.bump();
            if matches!(self.peek(), Tok::Punct("/" | "%")) {
                return self.unsupported("division");
            }
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = SynExpr {
                kind: SynExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        if matches!(self.peek(), Tok::Punct("/" | "%")) {
            return self.unsupported("division/modulo");
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<SynExpr, HdlError> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Punct("~") => Some(UnaryOp::Not),
            Tok::Punct("!") => Some(UnaryOp::LogicalNot),
            Tok::Punct("-" | "&" | "|" | "^") => {
                return self.unsupported("unary minus or reduction operator");
            }
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.unary()?;
            return Ok(SynExpr {
                kind: SynExprKind::Unary(op, Box::new(operand)),
                pos,
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<SynExpr, HdlError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number { value, size, radix } => {
                self.bump();
                Ok(SynExpr {
                    kind: SynExprKind::Number { value, size, radix },
                    pos,
                })
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("{") => self.unsupported("concatenation"),
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                if self.is_punct("(") {
                    return self.unsupported("function call");
                }
                if self.eat_punct("[") {
                    let idx = self.expr()?;
                    if self.is_punct(":") || self.is_punct("+") && matches!(self.peek_at(1), Tok::Punct(":")) {
                        return self.unsupported("part-select");
                    }
                    self.expect_punct("]")?;
                    if self.is_punct("[") {
                        return self.unsupported("memory indexing");
                    }
                    return Ok(SynExpr {
                        kind: SynExprKind::Bit(name, Box::new(idx)),
                        pos,
                    });
                }
                Ok(SynExpr {
                    kind: SynExprKind::Ident(name),
                    pos,
                })
            }
            _ => self.syntax("expression"),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "module"
            | "endmodule"
            | "input"
            | "output"
            | "reg"
            | "wire"
            | "assign"
            | "always"
            | "posedge"
            | "negedge"
            | "begin"
            | "end"
            | "if"
            | "else"
            | "case"
            | "endcase"
            | "default"
            | "localparam"
            | "parameter"
    ) || UNSUPPORTED_KEYWORDS.contains(&s)
}
