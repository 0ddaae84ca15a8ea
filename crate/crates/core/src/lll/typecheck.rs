//! Catalog-driven checks for programs.
//!
//! Calls are typed against the robot-object catalog; placement rules
//! (`BREAK` needs an enclosing loop, `°…°` needs an enclosing parallel
//! branch) are lexical. A parallel branch is a fresh scope: a `BREAK` inside
//! a branch must have its loop inside the same branch.

use crate::catalog::{Catalog, ParamKind, ResolveError, ReturnType};
use crate::diag::{DiagCode, Diagnostic};

use super::ast::*;

pub fn typecheck(program: &Program, catalog: &Catalog) -> Vec<Diagnostic> {
    let mut checker = Checker::new(catalog);
    checker.block(&program.body, Scope::default());
    let mut diags = checker.diags;
    diags.sort_by_key(|d| d.span.map_or(0, |s| s.start));
    diags
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Scope {
    pub in_loop: bool,
    pub in_branch: bool,
}

impl Scope {
    pub fn looping(self) -> Scope {
        Scope { in_loop: true, ..self }
    }

    pub fn branch() -> Scope {
        Scope {
            in_loop: false,
            in_branch: true,
        }
    }
}

pub(crate) struct Checker<'c> {
    catalog: &'c Catalog,
    pub diags: Vec<Diagnostic>,
}

impl<'c> Checker<'c> {
    pub fn new(catalog: &'c Catalog) -> Self {
        Checker {
            catalog,
            diags: Vec::new(),
        }
    }

    fn block(&mut self, block: &[Instr], scope: Scope) {
        for instr in block {
            self.instr(instr, scope);
        }
    }

    fn instr(&mut self, instr: &Instr, scope: Scope) {
        match &instr.kind {
            InstrKind::Action(call) => self.action(call),
            InstrKind::Interrupt(call) => {
                if !scope.in_branch {
                    self.interrupt_outside_parallel(instr);
                }
                self.action(call);
            }
            InstrKind::Repeat { body, .. } => self.block(body, scope.looping()),
            InstrKind::While { cond, body } => {
                self.condition(cond);
                self.block(body, scope.looping());
            }
            InstrKind::If { cond, then, otherwise } => {
                self.condition(cond);
                self.block(then, scope);
                if let Some(otherwise) = otherwise {
                    self.block(otherwise, scope);
                }
            }
            InstrKind::Event { cond, body } => {
                self.condition(cond);
                self.block(body, scope);
            }
            InstrKind::Parallel(branches) => {
                for branch in branches {
                    self.block(branch, Scope::branch());
                }
            }
            InstrKind::Wait(_) => {}
            InstrKind::Break => {
                if !scope.in_loop {
                    self.break_outside_loop(instr);
                }
            }
        }
    }

    fn break_outside_loop(&mut self, instr: &Instr) {
        self.diags.push(
            Diagnostic::new(DiagCode::BreakOutsideLoop, "BREAK outside of a repeat or while loop").at(instr.span),
        );
    }

    fn interrupt_outside_parallel(&mut self, instr: &Instr) {
        self.diags.push(
            Diagnostic::new(
                DiagCode::InterruptOutsideParallel,
                "interrupt action outside of a parallel branch",
            )
            .at(instr.span),
        );
    }

    /// Placement diagnostics for callers that walk a structure other than
    /// the AST.
    pub fn placement(&mut self, code: DiagCode) -> &mut Diagnostic {
        let message = match code {
            DiagCode::BreakOutsideLoop => "BREAK outside of a repeat or while loop",
            _ => "interrupt action outside of a parallel branch",
        };
        self.diags.push(Diagnostic::new(code, message));
        self.diags.last_mut().expect("just pushed")
    }

    /// A call in statement position: must resolve and return void.
    pub fn action(&mut self, call: &Call) {
        if let Some(ret) = self.call_type(call) {
            if ret != ReturnType::Void {
                self.diags.push(
                    Diagnostic::new(
                        DiagCode::ActionNotVoid,
                        format!(
                            "{}.{} returns {ret} and cannot be used as an action",
                            call.object, call.method
                        ),
                    )
                    .at(call.span),
                );
            }
        }
    }

    /// An expression in condition position: must be boolean.
    pub fn condition(&mut self, expr: &Expr) {
        self.expect_bool(expr, "condition");
    }

    fn expect_bool(&mut self, expr: &Expr, what: &str) {
        if self.expr_type(expr) == Some(ReturnType::Int) {
            self.diags.push(
                Diagnostic::new(DiagCode::ExpectedBool, format!("{what} must be boolean, found int")).at(expr.span()),
            );
        }
    }

    /// `Some(Int | Bool)` for well-typed value expressions, `None` when an
    /// error was reported.
    fn expr_type(&mut self, expr: &Expr) -> Option<ReturnType> {
        match expr {
            Expr::Int(..) => Some(ReturnType::Int),
            Expr::Call(call) => match self.call_type(call)? {
                ReturnType::Void => {
                    self.diags.push(
                        Diagnostic::new(
                            DiagCode::VoidValue,
                            format!(
                                "{}.{} returns nothing and cannot be used as a value",
                                call.object, call.method
                            ),
                        )
                        .at(call.span),
                    );
                    None
                }
                ty => Some(ty),
            },
            Expr::Not(inner) => {
                self.expect_bool(inner, "operand of '!'");
                Some(ReturnType::Bool)
            }
            Expr::And(l, r) => {
                self.expect_bool(l, "operand of '&'");
                self.expect_bool(r, "operand of '&'");
                Some(ReturnType::Bool)
            }
            Expr::Or(l, r) => {
                self.expect_bool(l, "operand of '|'");
                self.expect_bool(r, "operand of '|'");
                Some(ReturnType::Bool)
            }
        }
    }

    fn call_type(&mut self, call: &Call) -> Option<ReturnType> {
        let arg_types: Vec<Option<ReturnType>> = call.args.iter().map(|a| self.expr_type(a)).collect();
        let declared = self
            .catalog
            .object(&call.object)
            .and_then(|o| o.method(&call.method))
            .map(|m| m.returns);

        let kinds: Option<Vec<ParamKind>> = arg_types
            .iter()
            .map(|t| {
                t.map(|t| match t {
                    ReturnType::Int => ParamKind::Int,
                    _ => ParamKind::BoolExpr,
                })
            })
            .collect();
        let Some(kinds) = kinds else {
            // an argument is already in error; only report a bad target
            if declared.is_none() {
                self.resolve_failure(call, &[]);
            }
            return declared;
        };

        match self.catalog.resolve_call(&call.object, &call.method, &kinds) {
            Ok(spec) => {
                for (arg, param) in call.args.iter().zip(&spec.params) {
                    if let (Expr::Int(v, span), Some(range)) = (arg, param.range) {
                        if !range.contains(*v) {
                            self.diags.push(
                                Diagnostic::new(
                                    DiagCode::RangeViolation,
                                    format!(
                                        "argument {} of {}.{} must be between {} and {}, got {v}",
                                        param.name, call.object, call.method, range.min, range.max
                                    ),
                                )
                                .at(*span),
                            );
                        }
                    }
                }
                Some(spec.returns)
            }
            Err(_) => {
                self.resolve_failure(call, &kinds);
                declared
            }
        }
    }

    fn resolve_failure(&mut self, call: &Call, kinds: &[ParamKind]) {
        let err = match self.catalog.resolve_call(&call.object, &call.method, kinds) {
            Err(e) => e,
            Ok(_) => return,
        };
        let code = match err {
            ResolveError::UnknownObject { .. } => DiagCode::UnknownObject,
            ResolveError::UnknownMethod { .. } => DiagCode::UnknownMethod,
            ResolveError::ArityMismatch { .. } => DiagCode::ArityMismatch,
            ResolveError::KindMismatch { .. } => DiagCode::KindMismatch,
        };
        self.diags.push(Diagnostic::new(code, err.to_string()).at(call.span));
    }
}
