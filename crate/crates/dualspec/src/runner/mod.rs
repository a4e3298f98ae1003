//! Instrumented tree-walking interpreter. Executes a test case, produces
//! a pass/fail verdict, and records line, node, edge, and DUA coverage.
//!
//! DUAs are marked at the moment of use from a last-definition map, so a
//! test that faults after N statements keeps the coverage of those N
//! statements; an aborted execution cannot lose data-flow coverage.

mod suite;

pub use suite::{parse_suite, ArgValue, Expected, TestCase};

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use rayon::prelude::*;
use thiserror::Error;

use crate::cfg::{annotate_def_use, build_cfg, Cfg, NodeId};
use crate::dataflow::{DuaKey, DuaKind, RequirementSet};
use crate::lang::{BinaryOp, Expr, Function, Program, Stmt, StmtKind, Type, UnaryOp};
use crate::spectra::{ElementId, SpectrumMatrix, Verdict};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
const CALL_DEPTH_LIMIT: usize = 128;
const ARRAY_SIZE_LIMIT: i64 = 1 << 24;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RunnerError {
    #[error("suite line {line}: {msg}")]
    SuiteFormat { line: usize, msg: String },
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FaultKind {
    IndexOutOfBounds,
    DivisionByZero,
    Overflow,
    BadArraySize,
    StepBudget,
    CallDepth,
    MissingReturn,
}

impl std::fmt::Display for FaultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            FaultKind::IndexOutOfBounds => "index-out-of-bounds",
            FaultKind::DivisionByZero => "division-by-zero",
            FaultKind::Overflow => "overflow",
            FaultKind::BadArraySize => "bad-array-size",
            FaultKind::StepBudget => "step-budget-exceeded",
            FaultKind::CallDepth => "call-depth-exceeded",
            FaultKind::MissingReturn => "missing-return",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault {
    pub kind: FaultKind,
    pub line: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Value(i64),
    RuntimeError(Fault),
}

/// What the interpreter records while running.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectMode {
    /// No instrumentation: the plain-execution baseline.
    Plain,
    /// Lines, nodes, and edges.
    ControlFlow,
    /// DUAs only.
    DataFlow,
    /// Everything.
    Full,
}

impl CollectMode {
    fn control(self) -> bool {
        matches!(self, CollectMode::ControlFlow | CollectMode::Full)
    }

    fn data(self) -> bool {
        matches!(self, CollectMode::DataFlow | CollectMode::Full)
    }

    fn any(self) -> bool {
        !matches!(self, CollectMode::Plain)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestExecution {
    pub test: String,
    pub verdict: Verdict,
    pub outcome: Outcome,
    pub covered_lines: BTreeSet<u32>,
    pub covered_nodes: BTreeSet<NodeId>,
    pub covered_edges: BTreeSet<(NodeId, NodeId)>,
    pub covered_duas: BTreeSet<DuaKey>,
    pub steps: u64,
}

/// Raw def/use event stream of one execution, target-function frames only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Def {
        var: String,
        node: NodeId,
        line: u32,
    },
    CUse {
        var: String,
        node: NodeId,
        line: u32,
    },
    Predicate {
        node: NodeId,
        vars: Vec<String>,
    },
    Branch {
        from: NodeId,
        to: NodeId,
    },
}

/// Prepared execution context for one target function.
pub struct TestRunner<'p> {
    program: &'p Program,
    reqs: &'p RequirementSet,
    target: &'p Function,
    cfg: Cfg,
    dua_index: HashSet<DuaKey>,
    pub step_budget: u64,
    pub mode: CollectMode,
}

impl<'p> TestRunner<'p> {
    pub fn new(program: &'p Program, reqs: &'p RequirementSet) -> Result<Self, RunnerError> {
        let target = program
            .function(&reqs.function)
            .ok_or_else(|| RunnerError::Config(format!("unknown function `{}`", reqs.function)))?;
        let cfg = annotate_def_use(build_cfg(target), target);
        let dua_index = reqs.duas.iter().map(|d| d.key()).collect();
        Ok(TestRunner {
            program,
            reqs,
            target,
            cfg,
            dua_index,
            step_budget: DEFAULT_STEP_BUDGET,
            mode: CollectMode::Full,
        })
    }

    pub fn with_mode(mut self, mode: CollectMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_step_budget(mut self, budget: u64) -> Self {
        self.step_budget = budget;
        self
    }

    pub fn execute_test(&self, test: &TestCase) -> Result<TestExecution, RunnerError> {
        self.execute_inner(test, false).map(|(exec, _)| exec)
    }

    /// Like `execute_test` but also returns the raw def/use event trace.
    pub fn execute_test_traced(
        &self,
        test: &TestCase,
    ) -> Result<(TestExecution, Vec<TraceEvent>), RunnerError> {
        self.execute_inner(test, true)
    }

    fn execute_inner(
        &self,
        test: &TestCase,
        traced: bool,
    ) -> Result<(TestExecution, Vec<TraceEvent>), RunnerError> {
        if test.function != self.target.name {
            return Err(RunnerError::Config(format!(
                "test `{}` targets `{}`, runner is set up for `{}`",
                test.name, test.function, self.target.name
            )));
        }
        if test.args.len() != self.target.params.len() {
            return Err(RunnerError::Config(format!(
                "test `{}`: `{}` takes {} argument(s), {} given",
                test.name,
                self.target.name,
                self.target.params.len(),
                test.args.len()
            )));
        }
        let mut args = Vec::with_capacity(test.args.len());
        for (param, arg) in self.target.params.iter().zip(&test.args) {
            let value = match (param.ty, arg) {
                (Type::Int, ArgValue::Int(v)) => Value::Int(*v),
                (Type::IntArray, ArgValue::Array(items)) => {
                    Value::Array(Rc::new(RefCell::new(items.clone())))
                }
                (expected, _) => {
                    return Err(RunnerError::Config(format!(
                        "test `{}`: parameter `{}` expects {}, argument does not match",
                        test.name, param.name, expected
                    )))
                }
            };
            args.push(value);
        }

        let mut state = State {
            steps: 0,
            depth: 0,
            coverage: Coverage::default(),
            trace: if traced { Some(Vec::new()) } else { None },
        };
        let outcome = match self.call(&mut state, self.target, args, self.target.signature_line) {
            Ok(value) => Outcome::Value(value),
            Err(fault) => Outcome::RuntimeError(fault),
        };
        let verdict = match (test.expected, outcome) {
            (Expected::Value(want), Outcome::Value(got)) if want == got => Verdict::Pass,
            (Expected::Error, Outcome::RuntimeError(_)) => Verdict::Pass,
            _ => Verdict::Fail,
        };
        let execution = TestExecution {
            test: test.name.clone(),
            verdict,
            outcome,
            covered_lines: state.coverage.lines,
            covered_nodes: state.coverage.nodes,
            covered_edges: state.coverage.edges,
            covered_duas: state.coverage.duas,
            steps: state.steps,
        };
        Ok((execution, state.trace.unwrap_or_default()))
    }

    /// Runs every test (in parallel) and assembles the spectrum matrix in
    /// suite order over the canonical element universe.
    pub fn run_suite(&self, suite: &[TestCase]) -> Result<SpectrumMatrix, RunnerError> {
        let executions = self.run_suite_executions(suite)?;
        Ok(self.matrix_from_executions(&executions))
    }

    pub fn run_suite_executions(
        &self,
        suite: &[TestCase],
    ) -> Result<Vec<TestExecution>, RunnerError> {
        suite
            .par_iter()
            .map(|test| self.execute_test(test))
            .collect()
    }

    pub fn matrix_from_executions(&self, executions: &[TestExecution]) -> SpectrumMatrix {
        let elements = SpectrumMatrix::element_universe(self.reqs);
        let rows: Vec<Vec<bool>> = executions
            .iter()
            .map(|exec| {
                elements
                    .iter()
                    .map(|element| match element {
                        ElementId::Line(l) => exec.covered_lines.contains(l),
                        ElementId::Node(n) => exec.covered_nodes.contains(n),
                        ElementId::Edge(a, b) => exec.covered_edges.contains(&(*a, *b)),
                        dua => exec
                            .covered_duas
                            .contains(&dua.to_dua_key().expect("dua element")),
                    })
                    .collect()
            })
            .collect();
        SpectrumMatrix::new(
            elements,
            executions.iter().map(|e| e.test.clone()).collect(),
            rows,
            executions.iter().map(|e| e.verdict).collect(),
        )
    }

    fn call(
        &self,
        state: &mut State,
        func: &Function,
        args: Vec<Value>,
        call_line: u32,
    ) -> Result<i64, Fault> {
        state.depth += 1;
        if state.depth > CALL_DEPTH_LIMIT {
            state.depth -= 1;
            return Err(Fault {
                kind: FaultKind::CallDepth,
                line: call_line,
            });
        }
        let is_target = self.mode.any() && func.name == self.target.name;
        let mut frame = Frame {
            locals: HashMap::new(),
            lastdef: HashMap::new(),
            cur_node: if is_target { self.cfg.entry } else { 0 },
            cur_line: func.signature_line,
            pending_puse: None,
            in_predicate: false,
            is_target,
        };
        for (param, value) in func.params.iter().zip(args) {
            frame.locals.insert(param.name.clone(), value);
        }
        if is_target {
            if self.mode.control() {
                state.coverage.nodes.insert(self.cfg.entry);
            }
            if self.mode.data() {
                for param in &func.params {
                    frame.lastdef.insert(param.name.clone(), self.cfg.entry);
                    state.emit(|| TraceEvent::Def {
                        var: param.name.clone(),
                        node: self.cfg.entry,
                        line: func.signature_line,
                    });
                }
            }
        }
        let result = match self.exec_stmts(state, &mut frame, &func.body)? {
            Flow::Return(value) => Ok(value),
            Flow::Normal => Err(Fault {
                kind: FaultKind::MissingReturn,
                line: frame.cur_line,
            }),
        };
        state.depth -= 1;
        result
    }

    fn exec_stmts(
        &self,
        state: &mut State,
        frame: &mut Frame,
        stmts: &[Stmt],
    ) -> Result<Flow, Fault> {
        for stmt in stmts {
            if let Flow::Return(v) = self.exec_stmt(state, frame, stmt)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&self, state: &mut State, frame: &mut Frame, stmt: &Stmt) -> Result<Flow, Fault> {
        if let StmtKind::While { cond, body } = &stmt.kind {
            loop {
                self.enter_stmt(state, frame, stmt)?;
                if !self.eval_predicate(state, frame, cond)? {
                    return Ok(Flow::Normal);
                }
                if let Flow::Return(v) = self.exec_stmts(state, frame, body)? {
                    return Ok(Flow::Return(v));
                }
            }
        }

        self.enter_stmt(state, frame, stmt)?;
        match &stmt.kind {
            StmtKind::DeclAssign { name, init, .. } => {
                let value = self.eval(state, frame, init)?;
                self.write_var(state, frame, name, value);
                Ok(Flow::Normal)
            }
            StmtKind::Assign { name, value } => {
                let value = self.eval(state, frame, value)?;
                self.write_var(state, frame, name, value);
                Ok(Flow::Normal)
            }
            StmtKind::ArrayStore {
                array,
                index,
                value,
            } => {
                let index = self.eval_int(state, frame, index)?;
                let value = self.eval_int(state, frame, value)?;
                // The store reads the array reference before redefining it.
                let current = self.read_var(state, frame, array);
                let array_rc = match current {
                    Value::Array(rc) => rc,
                    Value::Int(_) => unreachable!("checked: array-store target is an array"),
                };
                {
                    let mut items = array_rc.borrow_mut();
                    let len = items.len() as i64;
                    if index < 0 || index >= len {
                        return Err(Fault {
                            kind: FaultKind::IndexOutOfBounds,
                            line: frame.cur_line,
                        });
                    }
                    items[index as usize] = value;
                }
                self.write_var(state, frame, array, Value::Array(array_rc));
                Ok(Flow::Normal)
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.eval_predicate(state, frame, cond)? {
                    self.exec_stmts(state, frame, then_body)
                } else if let Some(eb) = else_body {
                    self.exec_stmts(state, frame, eb)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::Return { value } => {
                let value = self.eval_int(state, frame, value)?;
                Ok(Flow::Return(value))
            }
            StmtKind::ExprStmt { expr } => {
                self.eval(state, frame, expr)?;
                Ok(Flow::Normal)
            }
            StmtKind::While { .. } => unreachable!("handled above"),
        }
    }

    /// Per-statement bookkeeping: step budget, line/node/edge marking, and
    /// flushing a taken branch's p-use snapshot.
    fn enter_stmt(&self, state: &mut State, frame: &mut Frame, stmt: &Stmt) -> Result<(), Fault> {
        frame.cur_line = stmt.line;
        if frame.is_target {
            let node = self
                .cfg
                .node_of_line(stmt.line)
                .expect("executable line has a node");
            if let Some((pred, snapshot)) = frame.pending_puse.take() {
                if self.mode.control() {
                    state.coverage.edges.insert((pred, node));
                }
                state.emit(|| TraceEvent::Branch {
                    from: pred,
                    to: node,
                });
                if self.mode.data() {
                    for (var, def_node) in snapshot {
                        self.mark_dua(
                            state,
                            DuaKey {
                                kind: DuaKind::PUse,
                                var,
                                def_node,
                                use_node: pred,
                                target_node: Some(node),
                            },
                        );
                    }
                }
            } else if node != frame.cur_node && self.mode.control() {
                state.coverage.edges.insert((frame.cur_node, node));
            }
            frame.cur_node = node;
            if self.mode.control() {
                state.coverage.lines.insert(stmt.line);
                state.coverage.nodes.insert(node);
            }
        }
        state.steps += 1;
        if state.steps > self.step_budget {
            return Err(Fault {
                kind: FaultKind::StepBudget,
                line: stmt.line,
            });
        }
        Ok(())
    }

    fn eval_predicate(
        &self,
        state: &mut State,
        frame: &mut Frame,
        cond: &Expr,
    ) -> Result<bool, Fault> {
        frame.in_predicate = true;
        let result = self.eval_int(state, frame, cond);
        frame.in_predicate = false;
        let value = result?;
        if frame.is_target && self.mode.data() {
            let node = frame.cur_node;
            let vars: Vec<(String, NodeId)> = self
                .cfg
                .block(node)
                .pred_puse
                .as_deref()
                .unwrap_or(&[])
                .iter()
                .map(|(var, _)| {
                    let def_node = *frame
                        .lastdef
                        .get(var)
                        .expect("predicate variable has a definition");
                    (var.clone(), def_node)
                })
                .collect();
            state.emit(|| TraceEvent::Predicate {
                node,
                vars: vars.iter().map(|(v, _)| v.clone()).collect(),
            });
            frame.pending_puse = Some((node, vars));
        } else if frame.is_target {
            // Control-flow-only runs still need the branch edge.
            frame.pending_puse = Some((frame.cur_node, Vec::new()));
        }
        Ok(value != 0)
    }

    fn mark_dua(&self, state: &mut State, key: DuaKey) {
        // Same-block keys are legitimately absent when the requirement set
        // was built with the compat flag; anything else missing would mean
        // the static set is unsound.
        debug_assert!(
            self.dua_index.contains(&key) || key.def_node == key.use_node,
            "dynamically covered DUA {key:?} missing from the static all-uses set"
        );
        if self.dua_index.contains(&key) {
            state.coverage.duas.insert(key);
        }
    }

    fn read_var(&self, state: &mut State, frame: &mut Frame, name: &str) -> Value {
        if frame.is_target && !frame.in_predicate && self.mode.data() {
            let def_node = *frame
                .lastdef
                .get(name)
                .expect("read variable has a definition");
            state.emit(|| TraceEvent::CUse {
                var: name.to_string(),
                node: frame.cur_node,
                line: frame.cur_line,
            });
            self.mark_dua(
                state,
                DuaKey {
                    kind: DuaKind::CUse,
                    var: name.to_string(),
                    def_node,
                    use_node: frame.cur_node,
                    target_node: None,
                },
            );
        }
        frame
            .locals
            .get(name)
            .expect("checked: variable is declared")
            .clone()
    }

    fn write_var(&self, state: &mut State, frame: &mut Frame, name: &str, value: Value) {
        if frame.is_target && self.mode.data() {
            frame.lastdef.insert(name.to_string(), frame.cur_node);
            state.emit(|| TraceEvent::Def {
                var: name.to_string(),
                node: frame.cur_node,
                line: frame.cur_line,
            });
        }
        frame.locals.insert(name.to_string(), value);
    }

    fn eval_int(&self, state: &mut State, frame: &mut Frame, expr: &Expr) -> Result<i64, Fault> {
        match self.eval(state, frame, expr)? {
            Value::Int(v) => Ok(v),
            Value::Array(_) => unreachable!("checked: expression has int type"),
        }
    }

    fn eval(&self, state: &mut State, frame: &mut Frame, expr: &Expr) -> Result<Value, Fault> {
        let line = frame.cur_line;
        let fault = |kind| Fault { kind, line };
        match expr {
            Expr::IntLit(v) => Ok(Value::Int(*v)),
            Expr::Var(name) => Ok(self.read_var(state, frame, name)),
            Expr::ArrayLit(items) => {
                let mut values = Vec::with_capacity(items.len());
                for item in items {
                    values.push(self.eval_int(state, frame, item)?);
                }
                Ok(Value::Array(Rc::new(RefCell::new(values))))
            }
            Expr::NewArray(len) => {
                let len = self.eval_int(state, frame, len)?;
                if !(0..=ARRAY_SIZE_LIMIT).contains(&len) {
                    return Err(fault(FaultKind::BadArraySize));
                }
                Ok(Value::Array(Rc::new(RefCell::new(vec![0; len as usize]))))
            }
            Expr::Index { array, index } => {
                let index = self.eval_int(state, frame, index)?;
                let array = match self.eval(state, frame, array)? {
                    Value::Array(rc) => rc,
                    Value::Int(_) => unreachable!("checked: indexed expression is an array"),
                };
                let items = array.borrow();
                if index < 0 || index >= items.len() as i64 {
                    return Err(fault(FaultKind::IndexOutOfBounds));
                }
                Ok(Value::Int(items[index as usize]))
            }
            Expr::Unary { op, operand } => {
                let v = self.eval_int(state, frame, operand)?;
                let result = match op {
                    UnaryOp::Neg => v.checked_neg().ok_or(fault(FaultKind::Overflow))?,
                    UnaryOp::Not => i64::from(v == 0),
                };
                Ok(Value::Int(result))
            }
            Expr::IncDec { op, var } => {
                let old = match self.read_var(state, frame, var) {
                    Value::Int(v) => v,
                    Value::Array(_) => unreachable!("checked: ++/-- target is scalar"),
                };
                let new = old
                    .checked_add(op.delta())
                    .ok_or(fault(FaultKind::Overflow))?;
                self.write_var(state, frame, var, Value::Int(new));
                Ok(Value::Int(if op.is_prefix() { new } else { old }))
            }
            Expr::Binary { op, lhs, rhs } => {
                let left = self.eval_int(state, frame, lhs)?;
                match op {
                    BinaryOp::And => {
                        if left == 0 {
                            return Ok(Value::Int(0));
                        }
                        let right = self.eval_int(state, frame, rhs)?;
                        return Ok(Value::Int(i64::from(right != 0)));
                    }
                    BinaryOp::Or => {
                        if left != 0 {
                            return Ok(Value::Int(1));
                        }
                        let right = self.eval_int(state, frame, rhs)?;
                        return Ok(Value::Int(i64::from(right != 0)));
                    }
                    _ => {}
                }
                let right = self.eval_int(state, frame, rhs)?;
                let result = match op {
                    BinaryOp::Add => left.checked_add(right).ok_or(fault(FaultKind::Overflow))?,
                    BinaryOp::Sub => left.checked_sub(right).ok_or(fault(FaultKind::Overflow))?,
                    BinaryOp::Mul => left.checked_mul(right).ok_or(fault(FaultKind::Overflow))?,
                    BinaryOp::Div => {
                        if right == 0 {
                            return Err(fault(FaultKind::DivisionByZero));
                        }
                        left.checked_div(right).ok_or(fault(FaultKind::Overflow))?
                    }
                    BinaryOp::Rem => {
                        if right == 0 {
                            return Err(fault(FaultKind::DivisionByZero));
                        }
                        left.checked_rem(right).ok_or(fault(FaultKind::Overflow))?
                    }
                    BinaryOp::Eq => i64::from(left == right),
                    BinaryOp::Ne => i64::from(left != right),
                    BinaryOp::Lt => i64::from(left < right),
                    BinaryOp::Le => i64::from(left <= right),
                    BinaryOp::Gt => i64::from(left > right),
                    BinaryOp::Ge => i64::from(left >= right),
                    BinaryOp::And | BinaryOp::Or => unreachable!("handled above"),
                };
                Ok(Value::Int(result))
            }
            Expr::Call { callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for arg in args {
                    values.push(self.eval(state, frame, arg)?);
                }
                let callee_fn = self
                    .program
                    .function(callee)
                    .expect("checked: call target exists");
                let value = self.call(state, callee_fn, values, line)?;
                Ok(Value::Int(value))
            }
        }
    }
}

/// Convenience wrappers matching the operation signatures.
pub fn execute_test(
    program: &Program,
    reqs: &RequirementSet,
    test: &TestCase,
) -> Result<TestExecution, RunnerError> {
    TestRunner::new(program, reqs)?.execute_test(test)
}

pub fn run_suite(
    program: &Program,
    reqs: &RequirementSet,
    suite: &[TestCase],
) -> Result<SpectrumMatrix, RunnerError> {
    TestRunner::new(program, reqs)?.run_suite(suite)
}

#[derive(Debug, Clone)]
enum Value {
    Int(i64),
    Array(Rc<RefCell<Vec<i64>>>),
}

enum Flow {
    Normal,
    Return(i64),
}

#[derive(Debug, Default)]
struct Coverage {
    lines: BTreeSet<u32>,
    nodes: BTreeSet<NodeId>,
    edges: BTreeSet<(NodeId, NodeId)>,
    duas: BTreeSet<DuaKey>,
}

struct State {
    steps: u64,
    depth: usize,
    coverage: Coverage,
    trace: Option<Vec<TraceEvent>>,
}

impl State {
    fn emit(&mut self, event: impl FnOnce() -> TraceEvent) {
        if let Some(trace) = &mut self.trace {
            trace.push(event());
        }
    }
}

struct Frame {
    locals: HashMap<String, Value>,
    /// Node of the most recent definition per variable; target frames only.
    lastdef: HashMap<String, NodeId>,
    cur_node: NodeId,
    cur_line: u32,
    /// Set after a predicate evaluates; consumed when the branch target's
    /// first statement executes.
    pending_puse: Option<(NodeId, Vec<(String, NodeId)>)>,
    in_predicate: bool,
    is_target: bool,
}
