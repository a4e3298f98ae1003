//! Recursive-descent parser producing the IMPX AST.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::LangError;

const MAX_NESTING: usize = 200;

pub fn parse(source: &str, source_path: &str) -> Result<Program, LangError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let mut functions = Vec::new();
    while !parser.at(&Tok::Eof) {
        functions.push(parser.function()?);
    }
    Ok(Program {
        functions,
        source_path: source_path.to_string(),
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, LangError> {
        if self.at(&tok) {
            Ok(self.advance())
        } else {
            let found = self.peek();
            Err(LangError::Syntax {
                line: found.line,
                col: found.col,
                msg: format!(
                    "expected {}, found {}",
                    tok.describe(),
                    found.tok.describe()
                ),
            })
        }
    }

    fn ident(&mut self) -> Result<(String, u32, u32), LangError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(name) => {
                self.advance();
                Ok((name, t.line, t.col))
            }
            other => Err(LangError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected identifier, found {}", other.describe()),
            }),
        }
    }

    fn enter(&mut self, line: u32, col: u32) -> Result<(), LangError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(LangError::Syntax {
                line,
                col,
                msg: "nesting too deep".into(),
            });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn function(&mut self) -> Result<Function, LangError> {
        let sig = self.expect(Tok::KwInt)?;
        let (name, ..) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                self.expect(Tok::KwInt)?;
                let ty = if self.at(&Tok::LBracket) {
                    self.advance();
                    self.expect(Tok::RBracket)?;
                    Type::IntArray
                } else {
                    Type::Int
                };
                let (pname, ..) = self.ident()?;
                params.push(Param { name: pname, ty });
                if self.at(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = self.block()?;
        Ok(Function {
            name,
            params,
            body,
            signature_line: sig.line,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        let open = self.expect(Tok::LBrace)?;
        self.enter(open.line, open.col)?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(LangError::Syntax {
                    line: open.line,
                    col: open.col,
                    msg: "unbalanced `{`: no matching `}` before end of input".into(),
                });
            }
            let stmt = self.statement()?;
            if matches!(stmt.kind, StmtKind::Return { .. })
                && !self.at(&Tok::RBrace)
                && !self.at(&Tok::Eof)
            {
                let t = self.peek().clone();
                return Err(LangError::Syntax {
                    line: t.line,
                    col: t.col,
                    msg: "unreachable statement after `return`".into(),
                });
            }
            stmts.push(stmt);
        }
        self.advance();
        self.leave();
        Ok(stmts)
    }

    /// An if/while body: either a braced block or a single statement.
    fn body(&mut self) -> Result<Vec<Stmt>, LangError> {
        if self.at(&Tok::LBrace) {
            self.block()
        } else {
            Ok(vec![self.statement()?])
        }
    }

    fn statement(&mut self) -> Result<Stmt, LangError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::KwInt => self.decl(),
            Tok::KwIf => {
                self.advance();
                self.enter(t.line, t.col)?;
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_body = self.body()?;
                let else_body = if self.at(&Tok::KwElse) {
                    self.advance();
                    Some(self.body()?)
                } else {
                    None
                };
                self.leave();
                Ok(Stmt {
                    kind: StmtKind::If {
                        cond,
                        then_body,
                        else_body,
                    },
                    line: t.line,
                })
            }
            Tok::KwWhile => {
                self.advance();
                self.enter(t.line, t.col)?;
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.body()?;
                self.leave();
                Ok(Stmt {
                    kind: StmtKind::While { cond, body },
                    line: t.line,
                })
            }
            Tok::KwReturn => {
                self.advance();
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt {
                    kind: StmtKind::Return { value },
                    line: t.line,
                })
            }
            _ => {
                let expr = self.expr()?;
                if self.at(&Tok::Assign) {
                    self.advance();
                    let value = self.expr()?;
                    self.expect(Tok::Semi)?;
                    let kind = match expr {
                        Expr::Var(name) => StmtKind::Assign { name, value },
                        Expr::Index { array, index } => match *array {
                            Expr::Var(name) => StmtKind::ArrayStore {
                                array: name,
                                index: *index,
                                value,
                            },
                            _ => {
                                return Err(LangError::Syntax {
                                    line: t.line,
                                    col: t.col,
                                    msg: "assignment target must be a variable or array element"
                                        .into(),
                                })
                            }
                        },
                        _ => {
                            return Err(LangError::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: "assignment target must be a variable or array element".into(),
                            })
                        }
                    };
                    Ok(Stmt { kind, line: t.line })
                } else {
                    self.expect(Tok::Semi)?;
                    Ok(Stmt {
                        kind: StmtKind::ExprStmt { expr },
                        line: t.line,
                    })
                }
            }
        }
    }

    fn decl(&mut self) -> Result<Stmt, LangError> {
        let t = self.expect(Tok::KwInt)?;
        let ty = if self.at(&Tok::LBracket) {
            self.advance();
            self.expect(Tok::RBracket)?;
            Type::IntArray
        } else {
            Type::Int
        };
        let (name, ..) = self.ident()?;
        self.expect(Tok::Assign)?;
        let init = self.expr()?;
        self.expect(Tok::Semi)?;
        Ok(Stmt {
            kind: StmtKind::DeclAssign { ty, name, init },
            line: t.line,
        })
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.and_expr()?;
        while self.at(&Tok::OrOr) {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary {
                op: BinaryOp::Or,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.equality()?;
        while self.at(&Tok::AndAnd) {
            self.advance();
            let rhs = self.equality()?;
            lhs = Expr::Binary {
                op: BinaryOp::And,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn equality(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.relational()?;
        loop {
            let op = match self.peek().tok {
                Tok::EqEq => BinaryOp::Eq,
                Tok::NotEq => BinaryOp::Ne,
                _ => break,
            };
            self.advance();
            let rhs = self.relational()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek().tok {
                Tok::Lt => BinaryOp::Lt,
                Tok::Le => BinaryOp::Le,
                Tok::Gt => BinaryOp::Gt,
                Tok::Ge => BinaryOp::Ge,
                _ => break,
            };
            self.advance();
            let rhs = self.additive()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                Tok::Percent => BinaryOp::Rem,
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Minus => {
                self.advance();
                let operand = self.unary()?;
                Ok(Expr::Unary {
                    op: UnaryOp::Neg,
                    operand: Box::new(operand),
                })
            }
            Tok::Bang => {
                self.advance();
                let operand = self.unary()?;
                Ok(Expr::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                })
            }
            Tok::PlusPlus | Tok::MinusMinus => {
                let op = if t.tok == Tok::PlusPlus {
                    IncDecOp::PreInc
                } else {
                    IncDecOp::PreDec
                };
                self.advance();
                let (var, ..) = self.ident().map_err(|_| LangError::Syntax {
                    line: t.line,
                    col: t.col,
                    msg: "`++`/`--` applies only to scalar variables".into(),
                })?;
                Ok(Expr::IncDec { op, var })
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, LangError> {
        let mut expr = self.primary()?;
        loop {
            let t = self.peek().clone();
            match t.tok {
                Tok::LBracket => {
                    self.advance();
                    let index = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    expr = Expr::Index {
                        array: Box::new(expr),
                        index: Box::new(index),
                    };
                }
                Tok::PlusPlus | Tok::MinusMinus => {
                    let op = if t.tok == Tok::PlusPlus {
                        IncDecOp::PostInc
                    } else {
                        IncDecOp::PostDec
                    };
                    match expr {
                        Expr::Var(name) => {
                            self.advance();
                            expr = Expr::IncDec { op, var: name };
                        }
                        _ => {
                            return Err(LangError::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: "`++`/`--` applies only to scalar variables".into(),
                            })
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(value) => {
                self.advance();
                Ok(Expr::IntLit(value))
            }
            Tok::Ident(name) => {
                self.advance();
                if self.at(&Tok::LParen) {
                    self.advance();
                    let mut args = Vec::new();
                    if !self.at(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.at(&Tok::Comma) {
                                self.advance();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Call { callee: name, args })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                self.advance();
                self.enter(t.line, t.col)?;
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                self.leave();
                Ok(inner)
            }
            Tok::LBracket => {
                self.advance();
                let mut items = Vec::new();
                if !self.at(&Tok::RBracket) {
                    loop {
                        items.push(self.expr()?);
                        if self.at(&Tok::Comma) {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
                Ok(Expr::ArrayLit(items))
            }
            Tok::KwNew => {
                self.advance();
                self.expect(Tok::KwInt)?;
                self.expect(Tok::LBracket)?;
                let len = self.expr()?;
                self.expect(Tok::RBracket)?;
                Ok(Expr::NewArray(Box::new(len)))
            }
            other => Err(LangError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected expression, found {}", other.describe()),
            }),
        }
    }
}
