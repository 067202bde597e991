use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::ast::{
    Behaviour, Choreography, Com, Expr, Label, Network, ProcName, Sel, State, Theta, Value,
};

const UNARY_PREC: u8 = 6;

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Str(s) => write_str_lit(out, s),
        Expr::Var(x) => out.push_str(x.as_str()),
        Expr::Not(inner) => {
            let paren = min_prec > UNARY_PREC;
            if paren {
                out.push('(');
            }
            out.push_str("not ");
            write_expr(out, inner, UNARY_PREC);
            if paren {
                out.push(')');
            }
        }
        Expr::Ctor(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
        Expr::BinOp(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, l, prec);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, r, prec + 1);
            if paren {
                out.push(')');
            }
        }
    }
}

fn write_str_lit(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

pub fn print_value(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v);
    out
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Str(s) => write_str_lit(out, s),
        Value::Unit => out.push_str("()"),
        Value::Tagged(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, a);
            }
            out.push(')');
        }
    }
}

pub fn print_com(c: &Com) -> String {
    format!(
        "{}.{} -> {}.{}",
        c.sender,
        print_expr(&c.expr),
        c.receiver,
        c.var
    )
}

pub fn print_sel(s: &Sel) -> String {
    format!("{} -> {}[{}]", s.sender, s.receiver, s.label)
}

fn group<I: IntoIterator<Item = String>>(items: I) -> String {
    let items: Vec<String> = items.into_iter().collect();
    if items.len() == 1 {
        items.into_iter().next().unwrap()
    } else {
        format!("{{{}}}", items.join(", "))
    }
}

fn annotation(procs: &BTreeSet<ProcName>) -> String {
    if procs.is_empty() {
        String::new()
    } else {
        let names: Vec<&str> = procs.iter().map(ProcName::as_str).collect();
        format!("^{{{}}}", names.join(", "))
    }
}

/// Canonical multi-line rendering; parses back to an equal term.
pub fn print_chor(c: &Choreography) -> String {
    let mut out = String::new();
    write_chor(&mut out, c, 0);
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_seq(out: &mut String, head: String, cont: &Choreography, level: usize) {
    out.push_str(&head);
    if *cont != Choreography::End {
        out.push_str(";\n");
        indent(out, level);
        write_chor(out, cont, level);
    }
}

fn write_block(out: &mut String, c: &Choreography, level: usize) {
    out.push_str("{\n");
    indent(out, level + 1);
    write_chor(out, c, level + 1);
    out.push('\n');
    indent(out, level);
    out.push('}');
}

fn write_chor(out: &mut String, c: &Choreography, level: usize) {
    match c {
        Choreography::End => out.push('0'),
        Choreography::MCom(h, k) => write_seq(out, group(h.iter().map(print_com)), k, level),
        Choreography::MSel(phi, k) => write_seq(out, group(phi.iter().map(print_sel)), k, level),
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => {
            let _ = write!(out, "if {}.{} then ", proc, print_expr(guard));
            write_block(out, then, level);
            out.push_str(" else ");
            write_block(out, els, level);
        }
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => {
            let _ = write!(out, "def {}{} = ", name, annotation(procs));
            write_block(out, body, level);
            out.push_str(" in ");
            write_block(out, cont, level);
        }
        Choreography::Call { name, procs } => {
            let _ = write!(out, "{}{}", name, annotation(procs));
        }
    }
}

fn print_theta(t: &Theta) -> String {
    match t {
        Theta::Send { to, expr } => format!("{}!{}", to, print_expr(expr)),
        Theta::Recv { from, var } => format!("{from}?{var}"),
    }
}

fn print_selects(sels: &BTreeMap<ProcName, Label>) -> String {
    group(sels.iter().map(|(q, l)| format!("{q}(+)[{l}]")))
}

/// Single-line rendering of a behaviour.
pub fn print_behaviour(b: &Behaviour) -> String {
    match b {
        Behaviour::End => "0".to_string(),
        Behaviour::Actions(thetas, k) => seq(group(thetas.iter().map(print_theta)), k),
        Behaviour::Selects(sels, k) => seq(print_selects(sels), k),
        Behaviour::Branch { from, branches } => {
            let arms: Vec<String> = branches
                .iter()
                .map(|(l, b)| format!("{l}: {}", print_behaviour(b)))
                .collect();
            format!("{from}&{{{}}}", arms.join(", "))
        }
        Behaviour::If { guard, then, els } => format!(
            "if {} then {{{}}} else {{{}}}",
            print_expr(guard),
            print_behaviour(then),
            print_behaviour(els)
        ),
        Behaviour::Def { name, body, cont } => format!(
            "def {name} = {{{}}} in {{{}}}",
            print_behaviour(body),
            print_behaviour(cont)
        ),
        Behaviour::Call(x) => x.to_string(),
    }
}

fn seq(head: String, cont: &Behaviour) -> String {
    if *cont == Behaviour::End {
        head
    } else {
        format!("{head}; {}", print_behaviour(cont))
    }
}

/// One `p |> B` clause per line, continuation lines starting with `| `.
pub fn print_network(n: &Network) -> String {
    if n.is_empty() {
        return "0".to_string();
    }
    let clauses: Vec<String> = n
        .iter()
        .map(|(p, b)| format!("{p} |> {}", print_behaviour(b)))
        .collect();
    clauses.join("\n| ")
}

/// One `p.x = v` line per cell, sorted.
pub fn print_state(s: &State) -> String {
    let mut out = String::new();
    for (p, x, v) in s.iter() {
        let _ = writeln!(out, "{p}.{x} = {}", print_value(v));
    }
    out
}
