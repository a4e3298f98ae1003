//! Static checks: name resolution, types, and the structural rules that
//! keep the line/statement mapping a bijection.
//!
//! Variable names are unique per function (shadowing is rejected), so a
//! name identifies one variable throughout the def/use analyses.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::LangError;

pub fn check_program(program: &Program) -> Result<(), LangError> {
    let mut signatures: HashMap<&str, &Function> = HashMap::new();
    for func in &program.functions {
        if signatures.insert(&func.name, func).is_some() {
            return Err(LangError::Static {
                line: func.signature_line,
                msg: format!("duplicate function name `{}`", func.name),
            });
        }
    }
    for func in &program.functions {
        check_function(func, &signatures)?;
    }
    Ok(())
}

struct Checker<'a> {
    signatures: &'a HashMap<&'a str, &'a Function>,
    /// Visible bindings, innermost scope last.
    scopes: Vec<HashMap<String, Type>>,
    /// Every name declared anywhere in the function, for the uniqueness rule.
    declared: HashSet<String>,
    /// Lines already carrying an executable statement.
    used_lines: HashMap<u32, &'static str>,
    last_line: u32,
}

fn check_function(func: &Function, signatures: &HashMap<&str, &Function>) -> Result<(), LangError> {
    let mut checker = Checker {
        signatures,
        scopes: vec![HashMap::new()],
        declared: HashSet::new(),
        used_lines: HashMap::new(),
        last_line: func.signature_line,
    };
    for param in &func.params {
        if !checker.declared.insert(param.name.clone()) {
            return Err(LangError::Static {
                line: func.signature_line,
                msg: format!(
                    "duplicate parameter `{}` in function `{}`",
                    param.name, func.name
                ),
            });
        }
        checker.scopes[0].insert(param.name.clone(), param.ty);
    }
    checker.check_block(&func.body)?;
    Ok(())
}

impl<'a> Checker<'a> {
    fn lookup(&self, name: &str) -> Option<Type> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn note_line(&mut self, stmt: &Stmt) -> Result<(), LangError> {
        if let Some(prev) = self.used_lines.insert(stmt.line, stmt.kind.kind_name()) {
            return Err(LangError::Static {
                line: stmt.line,
                msg: format!(
                    "line {} carries two executable statements ({} and {})",
                    stmt.line,
                    prev,
                    stmt.kind.kind_name()
                ),
            });
        }
        if stmt.line < self.last_line {
            return Err(LangError::Static {
                line: stmt.line,
                msg: "statement lines must be nondecreasing in source order".into(),
            });
        }
        self.last_line = stmt.line;
        Ok(())
    }

    fn check_block(&mut self, stmts: &[Stmt]) -> Result<(), LangError> {
        self.scopes.push(HashMap::new());
        for stmt in stmts {
            self.check_stmt(stmt)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn check_stmt(&mut self, stmt: &Stmt) -> Result<(), LangError> {
        self.note_line(stmt)?;
        let line = stmt.line;
        match &stmt.kind {
            StmtKind::DeclAssign { ty, name, init } => {
                let init_ty = self.check_expr(init, line)?;
                if init_ty != *ty {
                    return Err(LangError::Static {
                        line,
                        msg: format!("initializer of `{name}` has type {init_ty}, expected {ty}"),
                    });
                }
                if !self.declared.insert(name.clone()) {
                    return Err(LangError::Static {
                        line,
                        msg: format!("duplicate declaration of `{name}`"),
                    });
                }
                self.scopes.last_mut().unwrap().insert(name.clone(), *ty);
            }
            StmtKind::Assign { name, value } => {
                let target_ty = self.var_type(name, line)?;
                let value_ty = self.check_expr(value, line)?;
                if target_ty != value_ty {
                    return Err(LangError::Static {
                        line,
                        msg: format!("cannot assign {value_ty} to `{name}` of type {target_ty}"),
                    });
                }
            }
            StmtKind::ArrayStore {
                array,
                index,
                value,
            } => {
                let arr_ty = self.var_type(array, line)?;
                if arr_ty != Type::IntArray {
                    return Err(LangError::Static {
                        line,
                        msg: format!("`{array}` is not an array"),
                    });
                }
                self.expect_int(index, line)?;
                self.expect_int(value, line)?;
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.check_predicate(cond, line)?;
                if then_body.is_empty() || else_body.as_ref().is_some_and(|eb| eb.is_empty()) {
                    return Err(LangError::Static {
                        line,
                        msg: "if branches must contain at least one statement".into(),
                    });
                }
                self.check_block(then_body)?;
                if let Some(eb) = else_body {
                    self.check_block(eb)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.check_predicate(cond, line)?;
                self.check_block(body)?;
            }
            StmtKind::Return { value } => {
                self.expect_int(value, line)?;
            }
            StmtKind::ExprStmt { expr } => {
                self.check_expr(expr, line)?;
            }
        }
        Ok(())
    }

    fn check_predicate(&mut self, cond: &Expr, line: u32) -> Result<(), LangError> {
        if contains_inc_dec(cond) {
            return Err(LangError::Static {
                line,
                msg: "`++`/`--` is not allowed inside if/while predicates".into(),
            });
        }
        self.expect_int(cond, line)
    }

    fn var_type(&self, name: &str, line: u32) -> Result<Type, LangError> {
        self.lookup(name).ok_or_else(|| LangError::Static {
            line,
            msg: format!("use of undeclared variable `{name}`"),
        })
    }

    fn expect_int(&mut self, expr: &Expr, line: u32) -> Result<(), LangError> {
        let ty = self.check_expr(expr, line)?;
        if ty != Type::Int {
            return Err(LangError::Static {
                line,
                msg: format!("expected int expression, found {ty}"),
            });
        }
        Ok(())
    }

    fn check_expr(&mut self, expr: &Expr, line: u32) -> Result<Type, LangError> {
        match expr {
            Expr::IntLit(_) => Ok(Type::Int),
            Expr::Var(name) => self.var_type(name, line),
            Expr::ArrayLit(items) => {
                for item in items {
                    self.expect_int(item, line)?;
                }
                Ok(Type::IntArray)
            }
            Expr::NewArray(len) => {
                self.expect_int(len, line)?;
                Ok(Type::IntArray)
            }
            Expr::Index { array, index } => {
                self.expect_int(index, line)?;
                let arr_ty = self.check_expr(array, line)?;
                if arr_ty != Type::IntArray {
                    return Err(LangError::Static {
                        line,
                        msg: "indexing requires an array operand".into(),
                    });
                }
                Ok(Type::Int)
            }
            Expr::Unary { operand, .. } => {
                self.expect_int(operand, line)?;
                Ok(Type::Int)
            }
            Expr::IncDec { var, .. } => {
                let ty = self.var_type(var, line)?;
                if ty != Type::Int {
                    return Err(LangError::Static {
                        line,
                        msg: format!("`++`/`--` applies only to scalar variables, `{var}` is {ty}"),
                    });
                }
                Ok(Type::Int)
            }
            Expr::Binary { op, lhs, rhs } => {
                self.expect_int(lhs, line)?;
                self.expect_int(rhs, line)?;
                // A def in a short-circuited operand may or may not execute,
                // which would make block-level kill sets wrong.
                if matches!(op, BinaryOp::And | BinaryOp::Or) && contains_inc_dec(rhs) {
                    return Err(LangError::Static {
                        line,
                        msg: "`++`/`--` is not allowed in the right operand of `&&`/`||`".into(),
                    });
                }
                Ok(Type::Int)
            }
            Expr::Call { callee, args } => {
                let func =
                    self.signatures
                        .get(callee.as_str())
                        .ok_or_else(|| LangError::Static {
                            line,
                            msg: format!("call to unknown function `{callee}`"),
                        })?;
                if func.params.len() != args.len() {
                    return Err(LangError::Static {
                        line,
                        msg: format!(
                            "`{callee}` takes {} argument(s), {} given",
                            func.params.len(),
                            args.len()
                        ),
                    });
                }
                for (param, arg) in func.params.iter().zip(args) {
                    let arg_ty = self.check_expr(arg, line)?;
                    if arg_ty != param.ty {
                        return Err(LangError::Static {
                            line,
                            msg: format!(
                                "argument `{}` of `{callee}` expects {}, found {arg_ty}",
                                param.name, param.ty
                            ),
                        });
                    }
                }
                Ok(Type::Int)
            }
        }
    }
}

fn contains_inc_dec(expr: &Expr) -> bool {
    match expr {
        Expr::IncDec { .. } => true,
        Expr::IntLit(_) | Expr::Var(_) => false,
        Expr::ArrayLit(items) => items.iter().any(contains_inc_dec),
        Expr::NewArray(len) => contains_inc_dec(len),
        Expr::Index { array, index } => contains_inc_dec(array) || contains_inc_dec(index),
        Expr::Unary { operand, .. } => contains_inc_dec(operand),
        Expr::Binary { lhs, rhs, .. } => contains_inc_dec(lhs) || contains_inc_dec(rhs),
        Expr::Call { args, .. } => args.iter().any(contains_inc_dec),
    }
}
