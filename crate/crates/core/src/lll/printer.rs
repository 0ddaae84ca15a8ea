//! Canonical printer: every instruction is followed by `;`, `&` and `|`
//! get one space on each side, and nothing else is spaced.

use super::ast::*;

pub fn print_canonical(program: &Program) -> String {
    let mut out = String::new();
    print_block(&program.body, &mut out);
    out
}

pub fn print_block(block: &[Instr], out: &mut String) {
    for instr in block {
        print_instr(instr, out);
        out.push(';');
    }
}

fn print_instr(instr: &Instr, out: &mut String) {
    match &instr.kind {
        InstrKind::Action(call) => print_call(call, out),
        InstrKind::Interrupt(call) => {
            out.push('°');
            print_call(call, out);
            out.push('°');
        }
        InstrKind::Repeat { count, body } => {
            out.push_str(&count.to_string());
            out.push_str("*(");
            print_block(body, out);
            out.push(')');
        }
        InstrKind::While { cond, body } => {
            out.push_str("*[");
            print_expr(cond, out);
            out.push_str("](");
            print_block(body, out);
            out.push(')');
        }
        InstrKind::If { cond, then, otherwise } => {
            out.push('[');
            print_expr(cond, out);
            out.push_str("](");
            print_block(then, out);
            out.push(')');
            if let Some(otherwise) = otherwise {
                out.push_str("!(");
                print_block(otherwise, out);
                out.push(')');
            }
        }
        InstrKind::Event { cond, body } => {
            out.push('<');
            print_expr(cond, out);
            out.push_str(">(");
            print_block(body, out);
            out.push(')');
        }
        InstrKind::Parallel(branches) => {
            out.push_str("//(");
            for (i, branch) in branches.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                print_block(branch, out);
            }
            out.push(')');
        }
        InstrKind::Wait(ticks) => {
            out.push_str("WAIT(");
            out.push_str(&ticks.to_string());
            out.push(')');
        }
        InstrKind::Break => out.push_str("BREAK"),
    }
}

pub fn print_call(call: &Call, out: &mut String) {
    out.push_str(&call.object);
    out.push('.');
    out.push_str(&call.method);
    out.push('(');
    for (i, arg) in call.args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        print_expr(arg, out);
    }
    out.push(')');
}

#[derive(PartialEq, PartialOrd, Clone, Copy)]
enum Prec {
    Or,
    And,
    Unary,
}

pub fn print_expr(expr: &Expr, out: &mut String) {
    print_prec(expr, Prec::Or, out);
}

pub fn expr_to_string(expr: &Expr) -> String {
    let mut out = String::new();
    print_expr(expr, &mut out);
    out
}

fn print_prec(expr: &Expr, ctx: Prec, out: &mut String) {
    let own = match expr {
        Expr::Or(..) => Prec::Or,
        Expr::And(..) => Prec::And,
        _ => Prec::Unary,
    };
    let paren = own < ctx;
    if paren {
        out.push('(');
    }
    match expr {
        Expr::Int(v, _) => out.push_str(&v.to_string()),
        Expr::Call(call) => print_call(call, out),
        Expr::Not(inner) => {
            out.push_str("!(");
            print_prec(inner, Prec::Or, out);
            out.push(')');
        }
        Expr::And(l, r) => {
            print_prec(l, Prec::And, out);
            out.push_str(" & ");
            print_prec(r, Prec::Unary, out);
        }
        Expr::Or(l, r) => {
            print_prec(l, Prec::Or, out);
            out.push_str(" | ");
            print_prec(r, Prec::And, out);
        }
    }
    if paren {
        out.push(')');
    }
}
