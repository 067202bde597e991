//! Endpoint projection: from a choreography to one behaviour per process.
//!
//! Procedures are first annotated with the processes they involve, so that
//! a process outside a procedure does not carry its code. Conditionals are
//! projected on processes other than the decider by merging the two branch
//! projections, which fails when the process cannot tell the branches apart.
//!
//! Merge and pruning are reconstructions: merge unions the labels of
//! branchings on the same sender and otherwise requires identical shapes;
//! pruning relates a network to one with extra, unreachable branch labels.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{pn_chor, Behaviour, Choreography, Network, ProcName, RecVar, Theta};
use crate::net::normalize_net;
use crate::syntax::print_behaviour;
use crate::wf::{Path, Step};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ProjectionErrorKind {
    MergeConflict,
    SelfProjection,
}

impl fmt::Display for ProjectionErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("{location}: {kind} projecting {process}: `{left}` vs `{right}`")]
pub struct ProjectionError {
    pub kind: ProjectionErrorKind,
    pub process: ProcName,
    pub location: Path,
    pub left: String,
    pub right: String,
}

/// Two behaviours with no common merge; carries the heads that disagree.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("cannot merge `{left}` with `{right}`")]
pub struct MergeConflict {
    pub left: String,
    pub right: String,
}

fn head(b: &Behaviour) -> String {
    match b {
        Behaviour::Actions(t, _) => print_behaviour(&Behaviour::Actions(t.clone(), Box::new(Behaviour::End))),
        Behaviour::Selects(s, _) => print_behaviour(&Behaviour::Selects(s.clone(), Box::new(Behaviour::End))),
        Behaviour::Branch { from, branches } => {
            let labels: Vec<&str> = branches.keys().map(|l| l.as_str()).collect();
            format!("{from}&{{{}}}", labels.join(", "))
        }
        Behaviour::If { guard, .. } => format!("if {} then ...", crate::syntax::print_expr(guard)),
        Behaviour::Def { name, .. } => format!("def {name} = ..."),
        Behaviour::Call(x) => x.to_string(),
        Behaviour::End => "0".to_string(),
    }
}

fn conflict(a: &Behaviour, b: &Behaviour) -> MergeConflict {
    MergeConflict {
        left: head(a),
        right: head(b),
    }
}

/// Partial merge of two behaviours of the same process.
pub fn merge(a: &Behaviour, b: &Behaviour) -> Result<Behaviour, MergeConflict> {
    if a == b {
        return Ok(a.clone());
    }
    match (a, b) {
        (Behaviour::Actions(t1, k1), Behaviour::Actions(t2, k2)) if t1 == t2 => {
            Ok(Behaviour::Actions(t1.clone(), Box::new(merge(k1, k2)?)))
        }
        (Behaviour::Selects(s1, k1), Behaviour::Selects(s2, k2)) if s1 == s2 => {
            Ok(Behaviour::Selects(s1.clone(), Box::new(merge(k1, k2)?)))
        }
        (
            Behaviour::Branch {
                from: f1,
                branches: m1,
            },
            Behaviour::Branch {
                from: f2,
                branches: m2,
            },
        ) if f1 == f2 => {
            let mut out = m1.clone();
            for (l, b2) in m2 {
                let merged = match m1.get(l) {
                    Some(b1) => merge(b1, b2)?,
                    None => b2.clone(),
                };
                out.insert(l.clone(), merged);
            }
            Ok(Behaviour::Branch {
                from: f1.clone(),
                branches: out,
            })
        }
        (
            Behaviour::If {
                guard: g1,
                then: t1,
                els: e1,
            },
            Behaviour::If {
                guard: g2,
                then: t2,
                els: e2,
            },
        ) if g1 == g2 => Ok(Behaviour::If {
            guard: g1.clone(),
            then: Box::new(merge(t1, t2)?),
            els: Box::new(merge(e1, e2)?),
        }),
        (
            Behaviour::Def {
                name: n1,
                body: b1,
                cont: k1,
            },
            Behaviour::Def {
                name: n2,
                body: b2,
                cont: k2,
            },
        ) if n1 == n2 => Ok(Behaviour::Def {
            name: n1.clone(),
            body: Box::new(merge(b1, b2)?),
            cont: Box::new(merge(k1, k2)?),
        }),
        _ => Err(conflict(a, b)),
    }
}

/// Fills every definition and call annotation with the least set of
/// processes closed under the procedure bodies and the calls they make.
pub fn annotate(c: &Choreography) -> Choreography {
    let mut ann = vec![BTreeSet::new(); count_defs(c)];
    loop {
        let mut changed = false;
        grow(c, &mut ann, &mut 0, &mut Vec::new(), &mut changed);
        if !changed {
            break;
        }
    }
    write_annotations(c, &ann, &mut 0, &mut Vec::new())
}

fn count_defs(c: &Choreography) -> usize {
    match c {
        Choreography::MCom(_, k) | Choreography::MSel(_, k) => count_defs(k),
        Choreography::If { then, els, .. } => count_defs(then) + count_defs(els),
        Choreography::Def { body, cont, .. } => 1 + count_defs(body) + count_defs(cont),
        Choreography::Call { .. } | Choreography::End => 0,
    }
}

/// Processes of `c`, where a call contributes the current annotation of its
/// definition. Definitions are numbered in pre-order; each one's annotation
/// grows to cover its body.
fn grow(
    c: &Choreography,
    ann: &mut [BTreeSet<ProcName>],
    counter: &mut usize,
    scope: &mut Vec<(RecVar, usize)>,
    changed: &mut bool,
) -> BTreeSet<ProcName> {
    match c {
        Choreography::MCom(h, k) => {
            let mut out = grow(k, ann, counter, scope, changed);
            for com in h {
                out.insert(com.sender.clone());
                out.insert(com.receiver.clone());
            }
            out
        }
        Choreography::MSel(phi, k) => {
            let mut out = grow(k, ann, counter, scope, changed);
            for s in phi {
                out.insert(s.sender.clone());
                out.insert(s.receiver.clone());
            }
            out
        }
        Choreography::If {
            proc, then, els, ..
        } => {
            let mut out = grow(then, ann, counter, scope, changed);
            out.extend(grow(els, ann, counter, scope, changed));
            out.insert(proc.clone());
            out
        }
        Choreography::Def {
            name, body, cont, ..
        } => {
            let idx = *counter;
            *counter += 1;
            scope.push((name.clone(), idx));
            let mut out = grow(body, ann, counter, scope, changed);
            if !out.is_subset(&ann[idx]) {
                ann[idx].extend(out.iter().cloned());
                *changed = true;
            }
            out.extend(grow(cont, ann, counter, scope, changed));
            scope.pop();
            out
        }
        Choreography::Call { name, .. } => scope
            .iter()
            .rev()
            .find(|(x, _)| x == name)
            .map(|(_, i)| ann[*i].clone())
            .unwrap_or_default(),
        Choreography::End => BTreeSet::new(),
    }
}

fn write_annotations(
    c: &Choreography,
    ann: &[BTreeSet<ProcName>],
    counter: &mut usize,
    scope: &mut Vec<(RecVar, usize)>,
) -> Choreography {
    match c {
        Choreography::MCom(h, k) => {
            Choreography::MCom(h.clone(), Box::new(write_annotations(k, ann, counter, scope)))
        }
        Choreography::MSel(phi, k) => {
            Choreography::MSel(phi.clone(), Box::new(write_annotations(k, ann, counter, scope)))
        }
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => Choreography::If {
            proc: proc.clone(),
            guard: guard.clone(),
            then: Box::new(write_annotations(then, ann, counter, scope)),
            els: Box::new(write_annotations(els, ann, counter, scope)),
        },
        Choreography::Def {
            name, body, cont, ..
        } => {
            let idx = *counter;
            *counter += 1;
            scope.push((name.clone(), idx));
            let body = write_annotations(body, ann, counter, scope);
            let cont = write_annotations(cont, ann, counter, scope);
            scope.pop();
            Choreography::Def {
                name: name.clone(),
                procs: ann[idx].clone(),
                body: Box::new(body),
                cont: Box::new(cont),
            }
        }
        Choreography::Call { name, procs } => {
            let procs = scope
                .iter()
                .rev()
                .find(|(x, _)| x == name)
                .map(|(_, i)| ann[*i].clone())
                .unwrap_or_else(|| procs.clone());
            Choreography::Call {
                name: name.clone(),
                procs,
            }
        }
        Choreography::End => Choreography::End,
    }
}

/// Behaviour of `r` in an annotated choreography.
pub fn project_behaviour(c: &Choreography, r: &ProcName) -> Result<Behaviour, ProjectionError> {
    proj(c, r, &Path::root())
}

fn proj(c: &Choreography, r: &ProcName, path: &Path) -> Result<Behaviour, ProjectionError> {
    let next = || path.child(Step::Next);
    match c {
        Choreography::End => Ok(Behaviour::End),
        Choreography::MCom(h, k) => {
            let mut thetas = BTreeSet::new();
            for com in h {
                if com.sender == *r && com.receiver == *r {
                    return Err(ProjectionError {
                        kind: ProjectionErrorKind::SelfProjection,
                        process: r.clone(),
                        location: path.clone(),
                        left: crate::syntax::print_com(com),
                        right: String::new(),
                    });
                }
                if com.sender == *r {
                    thetas.insert(Theta::Send {
                        to: com.receiver.clone(),
                        expr: com.expr.clone(),
                    });
                }
                if com.receiver == *r {
                    thetas.insert(Theta::Recv {
                        from: com.sender.clone(),
                        var: com.var.clone(),
                    });
                }
            }
            Ok(Behaviour::actions(thetas, proj(k, r, &next())?))
        }
        Choreography::MSel(phi, k) => {
            if let Some(s) = phi.iter().find(|s| s.sender == *r && s.receiver == *r) {
                return Err(ProjectionError {
                    kind: ProjectionErrorKind::SelfProjection,
                    process: r.clone(),
                    location: path.clone(),
                    left: crate::syntax::print_sel(s),
                    right: String::new(),
                });
            }
            let incoming: Vec<_> = phi.iter().filter(|s| s.receiver == *r).collect();
            assert!(
                incoming.len() <= 1,
                "well-formed multisels select each target at most once"
            );
            let cont = proj(k, r, &next())?;
            if let Some(s) = incoming.first() {
                let mut branches = BTreeMap::new();
                branches.insert(s.label.clone(), cont);
                return Ok(Behaviour::Branch {
                    from: s.sender.clone(),
                    branches,
                });
            }
            let sels: BTreeMap<_, _> = phi
                .iter()
                .filter(|s| s.sender == *r)
                .map(|s| (s.receiver.clone(), s.label.clone()))
                .collect();
            Ok(Behaviour::selects(sels, cont))
        }
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => {
            let t = proj(then, r, &path.child(Step::Then))?;
            let e = proj(els, r, &path.child(Step::Else))?;
            if proc == r {
                Ok(Behaviour::If {
                    guard: guard.clone(),
                    then: Box::new(t),
                    els: Box::new(e),
                })
            } else {
                merge(&t, &e).map_err(|m| ProjectionError {
                    kind: ProjectionErrorKind::MergeConflict,
                    process: r.clone(),
                    location: path.clone(),
                    left: m.left,
                    right: m.right,
                })
            }
        }
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => {
            let k = proj(cont, r, &path.child(Step::In))?;
            if procs.contains(r) {
                let b = proj(body, r, &path.child(Step::Body))?;
                Ok(Behaviour::def(name.clone(), b, k))
            } else {
                Ok(k)
            }
        }
        Choreography::Call { name, procs } => {
            if procs.contains(r) {
                Ok(Behaviour::Call(name.clone()))
            } else {
                Ok(Behaviour::End)
            }
        }
    }
}

/// Annotates `c` and projects every process named in it.
pub fn project(c: &Choreography) -> Result<Network, ProjectionError> {
    let c = annotate(c);
    pn_chor(&c)
        .into_iter()
        .map(|r| project_behaviour(&c, &r).map(|b| (r, b)))
        .collect()
}

pub fn is_projectable(c: &Choreography) -> bool {
    project(c).is_ok()
}

type BEnv = Vec<(RecVar, Behaviour)>;

struct Pruning {
    visited: HashSet<(Behaviour, Behaviour)>,
}

impl Pruning {
    fn lookup(env: &BEnv, x: &RecVar) -> Option<(usize, Behaviour)> {
        env.iter()
            .rposition(|(y, _)| y == x)
            .map(|i| (i, env[i].1.clone()))
    }

    fn rel(&mut self, s: &Behaviour, senv: &BEnv, b: &Behaviour, benv: &BEnv) -> bool {
        match (s, b) {
            (Behaviour::Def { name, body, cont }, _) => {
                let mut env = senv.clone();
                env.push((name.clone(), (**body).clone()));
                self.rel(cont, &env, b, benv)
            }
            (_, Behaviour::Def { name, body, cont }) => {
                let mut env = benv.clone();
                env.push((name.clone(), (**body).clone()));
                self.rel(s, senv, cont, &env)
            }
            (Behaviour::Call(x), Behaviour::Call(y)) if x == y => true,
            (Behaviour::Call(x), _) => {
                if !self.visited.insert((s.clone(), b.clone())) {
                    return true;
                }
                let Some((i, body)) = Self::lookup(senv, x) else {
                    return false;
                };
                self.rel(&body, &senv[..=i].to_vec(), b, benv)
            }
            (_, Behaviour::Call(y)) => {
                if !self.visited.insert((s.clone(), b.clone())) {
                    return true;
                }
                let Some((i, body)) = Self::lookup(benv, y) else {
                    return false;
                };
                self.rel(s, senv, &body, &benv[..=i].to_vec())
            }
            (Behaviour::End, Behaviour::End) => true,
            (Behaviour::Actions(t1, k1), Behaviour::Actions(t2, k2)) => {
                t1 == t2 && self.rel(k1, senv, k2, benv)
            }
            (Behaviour::Selects(s1, k1), Behaviour::Selects(s2, k2)) => {
                s1 == s2 && self.rel(k1, senv, k2, benv)
            }
            (
                Behaviour::Branch {
                    from: f1,
                    branches: m1,
                },
                Behaviour::Branch {
                    from: f2,
                    branches: m2,
                },
            ) => {
                f1 == f2
                    && m1.iter().all(|(l, b1)| match m2.get(l) {
                        Some(b2) => self.rel(b1, senv, b2, benv),
                        None => false,
                    })
            }
            (
                Behaviour::If {
                    guard: g1,
                    then: t1,
                    els: e1,
                },
                Behaviour::If {
                    guard: g2,
                    then: t2,
                    els: e2,
                },
            ) => g1 == g2 && self.rel(t1, senv, t2, benv) && self.rel(e1, senv, e2, benv),
            _ => false,
        }
    }
}

/// `small ⊑ big`: equal shapes, except that branchings in `big` may offer
/// more labels; definitions are transparent and calls unfold on demand.
pub fn prunes_behaviour(small: &Behaviour, big: &Behaviour) -> bool {
    Pruning {
        visited: HashSet::new(),
    }
    .rel(small, &Vec::new(), big, &Vec::new())
}

/// Pointwise pruning after dropping terminated processes on both sides.
pub fn prunes(small: &Network, big: &Network) -> bool {
    let small = normalize_net(small);
    let big = normalize_net(big);
    small.len() == big.len()
        && small.iter().all(|(p, bs)| match big.get(p) {
            Some(bb) => prunes_behaviour(bs, bb),
            None => false,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_behaviour, parse_chor, parse_network};

    fn b(s: &str) -> Behaviour {
        parse_behaviour(s).unwrap()
    }

    fn pn(s: &str) -> ProcName {
        ProcName::new(s)
    }

    #[test]
    fn exchange_projection() {
        let c = parse_chor("{p.x -> q.y, q.x -> p.y}; {r.z -> p.x}").unwrap();
        let n = project(&c).unwrap();
        assert_eq!(n[&pn("p")], b("{q!x, q?y}; r?x"));
        assert_eq!(n[&pn("q")], b("{p!x, p?y}"));
        assert_eq!(n[&pn("r")], b("p!z"));
    }

    #[test]
    fn branching_projection_merges_receivers() {
        let c = parse_chor(
            "if p.e then { p -> q[L]; p.x -> q.x } else { p -> q[R]; q.y -> p.y }",
        )
        .unwrap();
        let n = project(&c).unwrap();
        assert_eq!(n[&pn("q")], b("p&{L: p?x, R: p!y}"));
        assert_eq!(
            n[&pn("p")],
            b("if e then {q(+)[L]; q!x} else {q(+)[R]; q?y}")
        );
    }

    #[test]
    fn unprojectable_conditional_names_q() {
        let c = parse_chor("if p.e then { p.e2 -> q.x } else { 0 }").unwrap();
        let err = project(&c).unwrap_err();
        assert_eq!(err.kind, ProjectionErrorKind::MergeConflict);
        assert_eq!(err.process, pn("q"));
        assert_eq!(err.location, Path::root());
    }

    #[test]
    fn crawler_projection() {
        let c = parse_chor(
            "{p.item -> s1.t, p.item -> s2.t}; {s1.priceof(t) -> p.x1, s2.priceof(t) -> p.x2}",
        )
        .unwrap();
        let n = project(&c).unwrap();
        assert_eq!(n.len(), 3);
        assert_eq!(n[&pn("s1")], b("p?t; p!priceof(t)"));
        assert_eq!(n[&pn("p")], b("{s1!item, s2!item}; {s1?x1, s2?x2}"));
    }

    #[test]
    fn merge_examples() {
        assert_eq!(
            merge(&b("p&{L: p?x}"), &b("p&{R: p!y}")).unwrap(),
            b("p&{L: p?x, R: p!y}")
        );
        let x = b("{q!x, q?y}; r?x");
        assert_eq!(merge(&x, &x).unwrap(), x);
        assert!(merge(&b("q!e"), &b("0")).is_err());
        assert!(merge(&b("q!e"), &b("q!f")).is_err());
        assert!(merge(&b("p&{L: p?x}"), &b("p&{L: p?y}")).is_err());
    }

    #[test]
    fn annotation_fixpoint() {
        let c = annotate(&parse_chor("def X = { p.x -> q.y; X } in { X }").unwrap());
        assert_eq!(
            c,
            parse_chor("def X^{p, q} = { p.x -> q.y; X^{p, q} } in { X^{p, q} }").unwrap()
        );
        let c = annotate(&parse_chor("def X = { 0 } in { p.x -> q.y }").unwrap());
        let Choreography::Def { procs, .. } = &c else {
            panic!()
        };
        assert!(procs.is_empty());
        let n = project(&c).unwrap();
        assert_eq!(n[&pn("q")], b("p?y"));
    }

    #[test]
    fn annotation_through_mutual_calls() {
        // Y's body calls X, which is defined outside and whose body calls Y
        // only in its own scope.
        let src = "def X = { p.x -> q.y; def Y = { r.z -> s.w; X } in { Y } } in { X }";
        let c = annotate(&parse_chor(src).unwrap());
        let expected = "def X^{p, q, r, s} = { p.x -> q.y; def Y^{p, q, r, s} = { r.z -> s.w; X^{p, q, r, s} } in { Y^{p, q, r, s} } } in { X^{p, q, r, s} }";
        assert_eq!(c, parse_chor(expected).unwrap());
    }

    #[test]
    fn projection_outside_procedure() {
        let c = parse_chor("def X = { p.x -> q.y; X } in { r.a -> s.b; X }").unwrap();
        let n = project(&c).unwrap();
        assert_eq!(n[&pn("r")], b("s!a"));
        assert_eq!(n[&pn("p")], b("def X = {q!x; X} in {X}"));
    }

    #[test]
    fn end_projects_to_empty_network() {
        assert!(project(&Choreography::End).unwrap().is_empty());
    }

    #[test]
    fn pruning() {
        assert!(prunes_behaviour(&b("p&{L: p?x}"), &b("p&{L: p?x, R: p!y}")));
        assert!(!prunes_behaviour(&b("p&{L: p?x, R: p!y}"), &b("p&{L: p?x}")));
        let n = parse_network("p |> q!x | q |> p&{L: p?x, R: p!y}").unwrap();
        assert!(prunes(&n, &n));
        let unrolled = b("def X = {q!x; X} in {q!x; X}");
        let folded = b("def X = {q!x; X} in {X}");
        assert!(prunes_behaviour(&unrolled, &folded));
        assert!(prunes_behaviour(&folded, &unrolled));
        assert!(!prunes_behaviour(&b("def X = {q!x; X} in {q!y; X}"), &folded));
    }
}
