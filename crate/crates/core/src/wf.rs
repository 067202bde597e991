//! Well-formedness of multicoms, multisels and whole choreographies.
//!
//! Violations are collected exhaustively over all pairs of group elements so
//! that a single run reports every clash.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::ast::{free_vars, Choreography, Com, Multicom, Multisel, RecVar, Sel};
use crate::syntax::{print_com, print_sel};

/// Step from a choreography node to one of its children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    /// Continuation of a group.
    Next,
    Then,
    Else,
    /// Body of a procedure definition.
    Body,
    /// Scope of a procedure definition (`in { ... }`).
    In,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<Step>);

impl Path {
    pub fn root() -> Path {
        Path::default()
    }

    pub fn child(&self, step: Step) -> Path {
        let mut steps = self.0.clone();
        steps.push(step);
        Path(steps)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for s in &self.0 {
            let name = match s {
                Step::Next => "next",
                Step::Then => "then",
                Step::Else => "else",
                Step::Body => "body",
                Step::In => "in",
            };
            write!(f, "/{name}")?;
        }
        Ok(())
    }
}

impl Serialize for Path {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ViolationKind {
    /// Two communications towards the same receiver from the same sender.
    SameChannelClash,
    /// Two communications writing the same receiver cell.
    SameCellClash,
    /// A cell received into is read by a send of the same process.
    ReadWriteClash,
    /// A selection target is also sender or target of another selection.
    SelTargetClash,
    SelfInteraction,
    UnboundCall,
    EmptyGroup,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Offender {
    Com(Com),
    Sel(Sel),
    Call(RecVar),
}

impl fmt::Display for Offender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offender::Com(c) => f.write_str(&print_com(c)),
            Offender::Sel(s) => f.write_str(&print_sel(s)),
            Offender::Call(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Offender {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub offenders: Vec<Offender>,
    pub location: Path,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.offenders.iter().map(|o| o.to_string()).collect();
        write!(f, "{}: {}: {}", self.location, self.kind, terms.join(" | "))
    }
}

fn com_pair(kind: ViolationKind, a: &Com, b: &Com) -> Violation {
    Violation {
        kind,
        offenders: vec![Offender::Com(a.clone()), Offender::Com(b.clone())],
        location: Path::root(),
    }
}

/// Checks the two multicom conditions over every pair, plus self-interactions.
pub fn check_multicom(h: &Multicom) -> Vec<Violation> {
    let coms: Vec<&Com> = h.iter().collect();
    let mut out = Vec::new();
    for c in &coms {
        if c.sender == c.receiver {
            out.push(Violation {
                kind: ViolationKind::SelfInteraction,
                offenders: vec![Offender::Com((*c).clone())],
                location: Path::root(),
            });
        }
    }
    for (i, a) in coms.iter().enumerate() {
        for b in &coms[i + 1..] {
            if a.receiver == b.receiver {
                if a.sender == b.sender {
                    out.push(com_pair(ViolationKind::SameChannelClash, a, b));
                }
                if a.var == b.var {
                    out.push(com_pair(ViolationKind::SameCellClash, a, b));
                }
            }
            let reads = |writer: &Com, reader: &Com| {
                writer.receiver == reader.sender && free_vars(&reader.expr).contains(&writer.var)
            };
            if reads(a, b) || reads(b, a) {
                out.push(com_pair(ViolationKind::ReadWriteClash, a, b));
            }
        }
    }
    out
}

/// Checks that no selection target is also sender or target of another
/// selection, plus self-interactions.
pub fn check_multisel(phi: &Multisel) -> Vec<Violation> {
    let sels: Vec<&Sel> = phi.iter().collect();
    let mut out = Vec::new();
    for s in &sels {
        if s.sender == s.receiver {
            out.push(Violation {
                kind: ViolationKind::SelfInteraction,
                offenders: vec![Offender::Sel((*s).clone())],
                location: Path::root(),
            });
        }
    }
    for (i, a) in sels.iter().enumerate() {
        for b in &sels[i + 1..] {
            let clash = |x: &Sel, y: &Sel| x.receiver == y.sender || x.receiver == y.receiver;
            if clash(a, b) || clash(b, a) {
                out.push(Violation {
                    kind: ViolationKind::SelTargetClash,
                    offenders: vec![Offender::Sel((*a).clone()), Offender::Sel((*b).clone())],
                    location: Path::root(),
                });
            }
        }
    }
    out
}

pub fn is_wf_multicom(h: &Multicom) -> bool {
    check_multicom(h).is_empty()
}

pub fn is_wf_multisel(phi: &Multisel) -> bool {
    check_multisel(phi).is_empty()
}

/// Checks every group in `c`, flags empty groups and calls outside the scope
/// of a matching definition.
pub fn check_chor(c: &Choreography) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut scope = Vec::new();
    walk(c, &Path::root(), &mut scope, &mut out);
    out
}

pub fn is_well_formed(c: &Choreography) -> bool {
    check_chor(c).is_empty()
}

fn at(mut vs: Vec<Violation>, path: &Path) -> Vec<Violation> {
    for v in &mut vs {
        v.location = path.clone();
    }
    vs
}

fn walk(c: &Choreography, path: &Path, scope: &mut Vec<RecVar>, out: &mut Vec<Violation>) {
    match c {
        Choreography::MCom(h, k) => {
            if h.is_empty() {
                out.push(Violation {
                    kind: ViolationKind::EmptyGroup,
                    offenders: vec![],
                    location: path.clone(),
                });
            }
            out.extend(at(check_multicom(h), path));
            walk(k, &path.child(Step::Next), scope, out);
        }
        Choreography::MSel(phi, k) => {
            if phi.is_empty() {
                out.push(Violation {
                    kind: ViolationKind::EmptyGroup,
                    offenders: vec![],
                    location: path.clone(),
                });
            }
            out.extend(at(check_multisel(phi), path));
            walk(k, &path.child(Step::Next), scope, out);
        }
        Choreography::If { then, els, .. } => {
            walk(then, &path.child(Step::Then), scope, out);
            walk(els, &path.child(Step::Else), scope, out);
        }
        Choreography::Def {
            name, body, cont, ..
        } => {
            scope.push(name.clone());
            walk(body, &path.child(Step::Body), scope, out);
            walk(cont, &path.child(Step::In), scope, out);
            scope.pop();
        }
        Choreography::Call { name, .. } => {
            if !scope.contains(name) {
                out.push(Violation {
                    kind: ViolationKind::UnboundCall,
                    offenders: vec![Offender::Call(name.clone())],
                    location: path.clone(),
                });
            }
        }
        Choreography::End => {}
    }
}

/// Well-formedness as a set of `(kind, offenders)` with offenders sorted,
/// for order-insensitive comparisons.
pub fn violation_set(vs: &[Violation]) -> BTreeSet<(ViolationKind, Vec<Offender>)> {
    vs.iter()
        .map(|v| {
            let mut o = v.offenders.clone();
            o.sort();
            (v.kind, o)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Expr;
    use crate::syntax::parse_chor;

    fn com(s: &str, e: &str, r: &str, y: &str) -> Com {
        Com::new(s, Expr::var(e), r, y)
    }

    #[test]
    fn interfering_multicom() {
        let c1 = com("p", "x", "q", "x");
        let c2 = com("p", "y", "q", "y");
        let c3 = com("r", "x", "q", "y");
        let c4 = com("q", "y", "s", "x");
        let h: Multicom = [c1.clone(), c2.clone(), c3.clone(), c4.clone()]
            .into_iter()
            .collect();
        let vs = violation_set(&check_multicom(&h));
        let pair = |k, a: &Com, b: &Com| {
            let mut o = vec![Offender::Com(a.clone()), Offender::Com(b.clone())];
            o.sort();
            (k, o)
        };
        assert!(vs.contains(&pair(ViolationKind::SameChannelClash, &c1, &c2)));
        assert!(vs.contains(&pair(ViolationKind::SameCellClash, &c2, &c3)));
        assert!(vs.contains(&pair(ViolationKind::ReadWriteClash, &c3, &c4)));
        // The second condition also relates the 2nd and 4th communications:
        // q receives y from p and sends y to s.
        assert!(vs.contains(&pair(ViolationKind::ReadWriteClash, &c2, &c4)));
        assert_eq!(vs.len(), 4);
        let kinds: BTreeSet<_> = vs.iter().map(|(k, _)| *k).collect();
        assert_eq!(kinds.len(), 3);
    }

    #[test]
    fn exchange_is_well_formed() {
        let h: Multicom = [
            com("p1", "myoffer", "p2", "x"),
            com("p2", "myoffer", "p1", "x"),
        ]
        .into_iter()
        .collect();
        assert!(check_multicom(&h).is_empty());
        let single: Multicom = [com("p", "x", "q", "y")].into_iter().collect();
        assert!(check_multicom(&single).is_empty());
    }

    #[test]
    fn interfering_multisel() {
        let phi: Multisel = [
            Sel::new("p", "q", "l"),
            Sel::new("r", "q", "l2"),
            Sel::new("q", "s", "l"),
        ]
        .into_iter()
        .collect();
        let vs = check_multisel(&phi);
        assert!(vs.len() >= 2);
        assert!(vs.iter().all(|v| v.kind == ViolationKind::SelTargetClash));
        assert!(check_multisel(&[Sel::new("p", "q", "L")].into_iter().collect()).is_empty());
        let fanout: Multisel = [Sel::new("p", "q", "L"), Sel::new("p", "r", "L")]
            .into_iter()
            .collect();
        assert!(check_multisel(&fanout).is_empty());
    }

    #[test]
    fn self_interactions() {
        let h: Multicom = [com("p", "x", "p", "y")].into_iter().collect();
        assert_eq!(check_multicom(&h)[0].kind, ViolationKind::SelfInteraction);
        let phi: Multisel = [Sel::new("p", "p", "L")].into_iter().collect();
        assert_eq!(check_multisel(&phi)[0].kind, ViolationKind::SelfInteraction);
    }

    #[test]
    fn unbound_call() {
        let vs = check_chor(&Choreography::call("X"));
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].kind, ViolationKind::UnboundCall);
        assert!(check_chor(&parse_chor("def X = { p.x -> q.y; X } in { X }").unwrap()).is_empty());
        let vs = check_chor(&parse_chor("def X = { p.x -> q.y; Y } in { X }").unwrap());
        assert_eq!(vs[0].kind, ViolationKind::UnboundCall);
        assert_eq!(vs[0].location.to_string(), "root/body/next");
    }

    #[test]
    fn violations_under_conditional_carry_the_path() {
        let c = parse_chor(
            "if p.b then { {p.x -> q.x, p.y -> q.y, r.x -> q.y, q.y -> s.x} } else { 0 }",
        )
        .unwrap();
        let vs = check_chor(&c);
        assert_eq!(vs.len(), 4);
        assert!(vs.iter().all(|v| v.location.to_string() == "root/then"));
    }

    #[test]
    fn empty_group() {
        let vs = check_chor(&parse_chor("{}; p.x -> q.y").unwrap());
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].kind, ViolationKind::EmptyGroup);
        assert_eq!(vs[0].to_string(), "root: EmptyGroup: ");
    }

    #[test]
    fn diagnostics_render() {
        let h: Multicom = [com("p", "x", "q", "y"), com("r", "x", "q", "y")]
            .into_iter()
            .collect();
        let v = &check_multicom(&h)[0];
        assert_eq!(v.to_string(), "root: SameCellClash: p.x -> q.y | r.x -> q.y");
    }
}
