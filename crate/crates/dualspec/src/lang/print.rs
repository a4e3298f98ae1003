//! Pretty-printer that preserves the original line layout, so parsing the
//! printed text yields the same AST (including line numbers).
//!
//! Statements are emitted at their recorded lines; braces and `else`
//! glue onto whatever line is current. Bodies are always braced, which
//! keeps the dangling-else reading unambiguous.

use super::ast::*;

pub fn pretty_print(program: &Program) -> String {
    let mut printer = Printer {
        lines: vec![String::new()],
    };
    for func in &program.functions {
        printer.function(func);
    }
    let mut out = printer.lines.join("\n");
    while out.ends_with('\n') {
        out.pop();
    }
    out.push('\n');
    out
}

struct Printer {
    lines: Vec<String>,
}

impl Printer {
    fn cur_line(&self) -> u32 {
        self.lines.len() as u32
    }

    fn emit(&mut self, text: &str) {
        let last = self.lines.last_mut().unwrap();
        if !last.is_empty() {
            last.push(' ');
        }
        last.push_str(text);
    }

    fn pad_to(&mut self, line: u32) {
        debug_assert!(line >= self.cur_line(), "line numbers went backwards");
        while self.cur_line() < line {
            self.lines.push(String::new());
        }
    }

    fn function(&mut self, func: &Function) {
        let params = func
            .params
            .iter()
            .map(|p| match p.ty {
                Type::Int => format!("int {}", p.name),
                Type::IntArray => format!("int[] {}", p.name),
            })
            .collect::<Vec<_>>()
            .join(", ");
        self.pad_to(func.signature_line);
        self.emit(&format!("int {}({})", func.name, params));
        self.body(&func.body);
    }

    fn body(&mut self, stmts: &[Stmt]) {
        self.emit("{");
        for stmt in stmts {
            self.stmt(stmt);
        }
        self.emit("}");
    }

    fn stmt(&mut self, stmt: &Stmt) {
        self.pad_to(stmt.line);
        match &stmt.kind {
            StmtKind::DeclAssign { ty, name, init } => {
                let ty_text = match ty {
                    Type::Int => "int",
                    Type::IntArray => "int[]",
                };
                self.emit(&format!("{ty_text} {name} = {};", expr(init)));
            }
            StmtKind::Assign { name, value } => {
                self.emit(&format!("{name} = {};", expr(value)));
            }
            StmtKind::ArrayStore {
                array,
                index,
                value,
            } => {
                self.emit(&format!("{array}[{}] = {};", expr(index), expr(value)));
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.emit(&format!("if ({})", expr(cond)));
                self.body(then_body);
                if let Some(eb) = else_body {
                    self.emit("else");
                    self.body(eb);
                }
            }
            StmtKind::While { cond, body } => {
                self.emit(&format!("while ({})", expr(cond)));
                self.body(body);
            }
            StmtKind::Return { value } => {
                self.emit(&format!("return {};", expr(value)));
            }
            StmtKind::ExprStmt { expr: e } => {
                self.emit(&format!("{};", expr(e)));
            }
        }
    }
}

/// Fully parenthesized rendering; re-parsing strips the parentheses.
fn expr(e: &Expr) -> String {
    match e {
        Expr::IntLit(v) => v.to_string(),
        Expr::Var(name) => name.clone(),
        Expr::ArrayLit(items) => {
            format!(
                "[{}]",
                items.iter().map(expr).collect::<Vec<_>>().join(", ")
            )
        }
        Expr::NewArray(len) => format!("new int[{}]", expr(len)),
        Expr::Index { array, index } => format!("{}[{}]", expr(array), expr(index)),
        Expr::Unary { op, operand } => {
            let sym = match op {
                UnaryOp::Neg => "-",
                UnaryOp::Not => "!",
            };
            format!("{sym}({})", expr(operand))
        }
        Expr::IncDec { op, var } => match op {
            IncDecOp::PreInc => format!("++{var}"),
            IncDecOp::PreDec => format!("--{var}"),
            IncDecOp::PostInc => format!("{var}++"),
            IncDecOp::PostDec => format!("{var}--"),
        },
        Expr::Binary { op, lhs, rhs } => {
            let sym = match op {
                BinaryOp::Add => "+",
                BinaryOp::Sub => "-",
                BinaryOp::Mul => "*",
                BinaryOp::Div => "/",
                BinaryOp::Rem => "%",
                BinaryOp::Eq => "==",
                BinaryOp::Ne => "!=",
                BinaryOp::Lt => "<",
                BinaryOp::Le => "<=",
                BinaryOp::Gt => ">",
                BinaryOp::Ge => ">=",
                BinaryOp::And => "&&",
                BinaryOp::Or => "||",
            };
            format!("({} {sym} {})", expr(lhs), expr(rhs))
        }
        Expr::Call { callee, args } => {
            format!(
                "{callee}({})",
                args.iter().map(expr).collect::<Vec<_>>().join(", ")
            )
        }
    }
}
