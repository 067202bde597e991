//! ASCII surface syntax for choreographies (`.chor`), networks (`.net`) and
//! memory states (`.state`).
//!
//! Printing is canonical: group elements are emitted in sorted order,
//! singleton groups drop their braces, and a trailing `; 0` is omitted.
//! Every printed term parses back to a structurally equal one.

mod lexer;
mod parser;
mod printer;

use thiserror::Error;

use crate::ast::{Behaviour, Choreography, Expr, Network, State, Value};
use parser::Parser;

pub use printer::{
    print_behaviour, print_chor, print_com, print_expr, print_network, print_sel, print_state,
    print_value,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

pub fn parse_chor(text: &str) -> Result<Choreography, ParseError> {
    let mut p = Parser::new(text)?;
    let c = p.chor()?;
    p.finish()?;
    Ok(c)
}

pub fn parse_network(text: &str) -> Result<Network, ParseError> {
    let mut p = Parser::new(text)?;
    let n = p.network()?;
    p.finish()?;
    Ok(n)
}

pub fn parse_behaviour(text: &str) -> Result<Behaviour, ParseError> {
    let mut p = Parser::new(text)?;
    let b = p.behaviour()?;
    p.finish()?;
    Ok(b)
}

pub fn parse_state(text: &str) -> Result<State, ParseError> {
    let mut p = Parser::new(text)?;
    let s = p.state()?;
    p.finish()?;
    Ok(s)
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_value(text: &str) -> Result<Value, ParseError> {
    let mut p = Parser::new(text)?;
    let v = p.value()?;
    p.finish()?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::*;

    #[test]
    fn exchange_multicom() {
        let c = parse_chor("{p.x -> q.u, q.y -> p.v}; 0").unwrap();
        let expected = Choreography::mcom(
            [
                Com::new("p", Expr::var("x"), "q", "u"),
                Com::new("q", Expr::var("y"), "p", "v"),
            ],
            Choreography::End,
        );
        assert_eq!(c, expected);
    }

    #[test]
    fn selection_then_communication() {
        let c = parse_chor("p -> q[L]; p.x -> q.x; 0").unwrap();
        let expected = Choreography::msel(
            [Sel::new("p", "q", "L")],
            Choreography::mcom(
                [Com::new("p", Expr::var("x"), "q", "x")],
                Choreography::End,
            ),
        );
        assert_eq!(c, expected);
    }

    #[test]
    fn end_prints_and_parses() {
        assert_eq!(parse_chor("0").unwrap(), Choreography::End);
        assert_eq!(print_chor(&Choreography::End), "0");
    }

    #[test]
    fn singleton_brace_elision() {
        let c = Choreography::mcom(
            [Com::new("p", Expr::var("x"), "q", "u")],
            Choreography::End,
        );
        assert_eq!(print_chor(&c), "p.x -> q.u");
    }

    #[test]
    fn duplicate_group_element_is_an_error() {
        let e = parse_chor("{p.x -> q.y, p.x -> q.y}").unwrap_err();
        assert_eq!((e.line, e.col), (1, 14));
        assert!(parse_chor("{p -> q[L], p -> q[L]}").is_err());
    }

    #[test]
    fn mixed_group_is_an_error() {
        assert!(parse_chor("{p.x -> q.y, p -> q[L]}").is_err());
    }

    #[test]
    fn syntax_error_reports_position() {
        let e = parse_chor("p.x -> q.y;\n  if p then").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(e.col, 8);
    }

    #[test]
    fn conditional_with_parenthesised_guard() {
        let c = parse_chor("if p.(1<2) then { p.x -> q.y } else { 0 }").unwrap();
        let Choreography::If { guard, .. } = &c else {
            panic!("expected conditional")
        };
        assert_eq!(*guard, Expr::bin(BinOp::Lt, Expr::Int(1), Expr::Int(2)));
    }

    #[test]
    fn annotations_round_trip() {
        let src = "def X^{p, q} = {\n  p.x -> q.y;\n  X^{p, q}\n} in {\n  X^{p, q}\n}";
        let c = parse_chor(src).unwrap();
        assert_eq!(print_chor(&c), src);
    }

    #[test]
    fn expression_precedence() {
        let e = parse_expr("not a and b or c = 1 + 2 * 3").unwrap();
        assert_eq!(print_expr(&e), "not a and b or c = 1 + 2 * 3");
        let e = parse_expr("(a or b) and c").unwrap();
        assert_eq!(print_expr(&e), "(a or b) and c");
        let e = parse_expr("x - (y - z)").unwrap();
        assert_eq!(print_expr(&e), "x - (y - z)");
        let e = parse_expr("x - -5").unwrap();
        assert_eq!(e, Expr::bin(BinOp::Sub, Expr::var("x"), Expr::Int(-5)));
        assert_eq!(parse_expr("c()").unwrap(), Expr::ctor("c", vec![]));
        assert_eq!(parse_expr("c").unwrap(), Expr::var("c"));
        assert_eq!(
            parse_expr("-9223372036854775808").unwrap(),
            Expr::Int(i64::MIN)
        );
    }

    #[test]
    fn network_examples() {
        let n = parse_network("p |> {q!x, q?y}; 0 | q |> {p!x, p?y}; 0").unwrap();
        assert_eq!(n.len(), 2);
        let n = parse_network("q |> p&{L: p?x, R: p!y}").unwrap();
        let expected = Behaviour::branch(
            "p",
            [
                (
                    "L",
                    Behaviour::Actions(
                        [Theta::recv("p", "x")].into_iter().collect(),
                        Box::new(Behaviour::End),
                    ),
                ),
                (
                    "R",
                    Behaviour::Actions(
                        [Theta::send("p", Expr::var("y"))].into_iter().collect(),
                        Box::new(Behaviour::End),
                    ),
                ),
            ],
        );
        assert_eq!(n[&ProcName::new("q")], expected);
        assert!(parse_network("0").unwrap().is_empty());
        assert!(parse_network("p |> 0 | p |> 0").is_err());
    }

    #[test]
    fn selection_groups_need_distinct_targets() {
        assert!(parse_behaviour("{q(+)[L], q(+)[R]}").is_err());
        let b = parse_behaviour("{q(+)[L], r(+)[R]}; 0").unwrap();
        assert_eq!(print_behaviour(&b), "{q(+)[L], r(+)[R]}");
    }

    #[test]
    fn state_files() {
        let s = parse_state("p.x = 1\nq.x = 2").unwrap();
        assert_eq!(s.len(), 2);
        assert!(parse_state("").unwrap().is_empty());
        let s = parse_state("p.t = \"item\"").unwrap();
        assert_eq!(
            s.get(&ProcName::new("p"), &VarName::new("t")),
            Value::Str("item".into())
        );
        assert!(parse_state("p.x = 1\np.x = 2").is_err());
        let s = parse_state("p.v = tag(1, -2, (), true)\n").unwrap();
        assert_eq!(print_state(&s), "p.v = tag(1, -2, (), true)\n");
    }

    #[test]
    fn keywords_are_not_names() {
        assert!(parse_chor("if.x -> q.y").is_err());
        assert!(parse_chor("p.then -> q.y").is_err());
    }
}
