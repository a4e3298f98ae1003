//! Abstract syntax for IMPX programs.
//!
//! Every statement carries the 1-based source line it starts on. The
//! checker enforces one executable statement per line, so within a
//! function a line identifies a statement and vice versa.

use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    IntArray,
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::IntArray => write!(f, "int[]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub functions: Vec<Function>,
    pub source_path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub signature_line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `int x = e;` or `int[] a = e;`
    DeclAssign {
        ty: Type,
        name: String,
        init: Expr,
    },
    /// `x = e;`
    Assign {
        name: String,
        value: Expr,
    },
    /// `a[i] = e;`
    ArrayStore {
        array: String,
        index: Expr,
        value: Expr,
    },
    /// `if (c) body` with optional `else`; the line is the predicate line.
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
    },
    /// `while (c) body`; the line is the predicate line.
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Return {
        value: Expr,
    },
    ExprStmt {
        expr: Expr,
    },
}

impl StmtKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            StmtKind::DeclAssign { .. } => "decl-assign",
            StmtKind::Assign { .. } => "assign",
            StmtKind::ArrayStore { .. } => "array-store",
            StmtKind::If {
                else_body: None, ..
            } => "if",
            StmtKind::If {
                else_body: Some(_), ..
            } => "if-else",
            StmtKind::While { .. } => "while",
            StmtKind::Return { .. } => "return",
            StmtKind::ExprStmt { .. } => "expr-stmt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncDecOp {
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

impl IncDecOp {
    pub fn is_prefix(self) -> bool {
        matches!(self, IncDecOp::PreInc | IncDecOp::PreDec)
    }

    pub fn delta(self) -> i64 {
        match self {
            IncDecOp::PreInc | IncDecOp::PostInc => 1,
            IncDecOp::PreDec | IncDecOp::PostDec => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    IntLit(i64),
    Var(String),
    ArrayLit(Vec<Expr>),
    NewArray(Box<Expr>),
    Index {
        array: Box<Expr>,
        index: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    /// `++x`, `--x`, `x++`, `x--`; restricted to scalar variables.
    IncDec {
        op: IncDecOp,
        var: String,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }
}

impl Function {
    /// All statements of the body in source order, flattening nested
    /// if/while bodies.
    pub fn all_statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        collect_stmts(&self.body, &mut out);
        out
    }

    /// Lines carrying executable statements, ascending.
    pub fn executable_lines(&self) -> BTreeSet<u32> {
        self.all_statements().iter().map(|s| s.line).collect()
    }
}

fn collect_stmts<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
    for stmt in stmts {
        out.push(stmt);
        match &stmt.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                collect_stmts(then_body, out);
                if let Some(eb) = else_body {
                    collect_stmts(eb, out);
                }
            }
            StmtKind::While { body, .. } => collect_stmts(body, out),
            _ => {}
        }
    }
}

/// Variable reads of an expression in evaluation order. For `a[e]` the
/// index is evaluated before the array reference, so `array[++i]` yields
/// the read of `i` before the read of `array`.
pub fn expr_reads(expr: &Expr, out: &mut Vec<String>) {
    match expr {
        Expr::IntLit(_) => {}
        Expr::Var(name) => out.push(name.clone()),
        Expr::ArrayLit(items) => {
            for item in items {
                expr_reads(item, out);
            }
        }
        Expr::NewArray(len) => expr_reads(len, out),
        Expr::Index { array, index } => {
            expr_reads(index, out);
            expr_reads(array, out);
        }
        Expr::Unary { operand, .. } => expr_reads(operand, out),
        Expr::IncDec { var, .. } => out.push(var.clone()),
        Expr::Binary { lhs, rhs, .. } => {
            expr_reads(lhs, out);
            expr_reads(rhs, out);
        }
        Expr::Call { args, .. } => {
            for arg in args {
                expr_reads(arg, out);
            }
        }
    }
}

/// Variable writes of an expression in evaluation order (from `++`/`--`).
pub fn expr_writes(expr: &Expr, out: &mut Vec<String>) {
    match expr {
        Expr::IntLit(_) | Expr::Var(_) => {}
        Expr::ArrayLit(items) => {
            for item in items {
                expr_writes(item, out);
            }
        }
        Expr::NewArray(len) => expr_writes(len, out),
        Expr::Index { array, index } => {
            expr_writes(index, out);
            expr_writes(array, out);
        }
        Expr::Unary { operand, .. } => expr_writes(operand, out),
        Expr::IncDec { var, .. } => out.push(var.clone()),
        Expr::Binary { lhs, rhs, .. } => {
            expr_writes(lhs, out);
            expr_writes(rhs, out);
        }
        Expr::Call { args, .. } => {
            for arg in args {
                expr_writes(arg, out);
            }
        }
    }
}

/// Interleaved variable accesses of an expression in evaluation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarAccess {
    Read(String),
    Write(String),
}

pub fn expr_accesses(expr: &Expr, out: &mut Vec<VarAccess>) {
    match expr {
        Expr::IntLit(_) => {}
        Expr::Var(name) => out.push(VarAccess::Read(name.clone())),
        Expr::ArrayLit(items) => {
            for item in items {
                expr_accesses(item, out);
            }
        }
        Expr::NewArray(len) => expr_accesses(len, out),
        Expr::Index { array, index } => {
            expr_accesses(index, out);
            expr_accesses(array, out);
        }
        Expr::Unary { operand, .. } => expr_accesses(operand, out),
        Expr::IncDec { var, .. } => {
            out.push(VarAccess::Read(var.clone()));
            out.push(VarAccess::Write(var.clone()));
        }
        Expr::Binary { lhs, rhs, .. } => {
            expr_accesses(lhs, out);
            expr_accesses(rhs, out);
        }
        Expr::Call { args, .. } => {
            for arg in args {
                expr_accesses(arg, out);
            }
        }
    }
}

/// Accesses performed by one statement, excluding nested bodies. For
/// predicates this is empty: predicate reads are p-uses, handled by the
/// CFG annotation.
pub fn stmt_accesses(stmt: &Stmt) -> Vec<VarAccess> {
    let mut out = Vec::new();
    match &stmt.kind {
        StmtKind::DeclAssign { name, init, .. } => {
            expr_accesses(init, &mut out);
            out.push(VarAccess::Write(name.clone()));
        }
        StmtKind::Assign { name, value } => {
            expr_accesses(value, &mut out);
            out.push(VarAccess::Write(name.clone()));
        }
        StmtKind::ArrayStore {
            array,
            index,
            value,
        } => {
            expr_accesses(index, &mut out);
            expr_accesses(value, &mut out);
            // Element stores read prior array state before redefining it.
            out.push(VarAccess::Read(array.clone()));
            out.push(VarAccess::Write(array.clone()));
        }
        StmtKind::Return { value } => expr_accesses(value, &mut out),
        StmtKind::ExprStmt { expr } => expr_accesses(expr, &mut out),
        StmtKind::If { .. } | StmtKind::While { .. } => {}
    }
    out
}
