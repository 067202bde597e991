//! Brute-force structural rewriting, used to validate the spine-lifting
//! enumerator of [`crate::conc`] on small terms.
//!
//! Every equivalence rule is applied in both directions at every position;
//! unfolding, empty-group removal and definition collection are applied
//! left to right only. Search is breadth-first and bounded both in depth
//! and in the number of distinct terms visited.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::ast::{
    eval, free_vars, pn_multicom, tn_multisel, Choreography, Multicom, Multisel, ProcName,
    RecVar, State,
};
use crate::seq::{guard_holds, normalize, SeqConfig};
use crate::trace::TransitionLabel;
use crate::wf::{is_wf_multicom, is_wf_multisel};

/// Distinct terms explored before a search gives up.
pub const VISIT_CAP: usize = 200_000;

fn mcom(h: Multicom, k: Choreography) -> Choreography {
    Choreography::MCom(h, Box::new(k))
}

fn msel(phi: Multisel, k: Choreography) -> Choreography {
    Choreography::MSel(phi, Box::new(k))
}

fn cond(proc: &ProcName, guard: &crate::ast::Expr, t: Choreography, e: Choreography) -> Choreography {
    Choreography::If {
        proc: proc.clone(),
        guard: guard.clone(),
        then: Box::new(t),
        els: Box::new(e),
    }
}

/// Nonempty proper subsets, with their complements.
fn splits<T: Ord + Clone>(set: &BTreeSet<T>) -> Vec<(BTreeSet<T>, BTreeSet<T>)> {
    let elems: Vec<&T> = set.iter().collect();
    let n = elems.len();
    if !(2..=12).contains(&n) {
        return Vec::new();
    }
    (1..(1u32 << n) - 1)
        .map(|mask| {
            let mut a = BTreeSet::new();
            let mut b = BTreeSet::new();
            for (i, e) in elems.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    a.insert((*e).clone());
                } else {
                    b.insert((*e).clone());
                }
            }
            (a, b)
        })
        .collect()
}

fn com_if_ok(h: &Multicom, p: &ProcName, guard: &crate::ast::Expr) -> bool {
    let fv = free_vars(guard);
    h.iter().all(|c| c.receiver != *p || !fv.contains(&c.var))
}

fn sel_if_ok(phi: &Multisel, p: &ProcName) -> bool {
    phi.iter().all(|s| s.receiver != *p)
}

fn com_sel_ok(h: &Multicom, phi: &Multisel) -> bool {
    tn_multisel(phi).is_disjoint(&pn_multicom(h))
}

/// Copies of `c` with one free occurrence of `x` replaced by `body`.
fn unfold_one(c: &Choreography, x: &RecVar, body: &Choreography) -> Vec<Choreography> {
    match c {
        Choreography::Call { name, .. } if name == x => vec![body.clone()],
        Choreography::Call { .. } | Choreography::End => Vec::new(),
        Choreography::MCom(h, k) => unfold_one(k, x, body)
            .into_iter()
            .map(|k| mcom(h.clone(), k))
            .collect(),
        Choreography::MSel(phi, k) => unfold_one(k, x, body)
            .into_iter()
            .map(|k| msel(phi.clone(), k))
            .collect(),
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => {
            let mut out: Vec<_> = unfold_one(then, x, body)
                .into_iter()
                .map(|t| cond(proc, guard, t, (**els).clone()))
                .collect();
            out.extend(
                unfold_one(els, x, body)
                    .into_iter()
                    .map(|e| cond(proc, guard, (**then).clone(), e)),
            );
            out
        }
        Choreography::Def {
            name,
            procs,
            body: inner,
            cont,
        } => {
            if name == x {
                return Vec::new();
            }
            let wrap = |b: Choreography, k: Choreography| Choreography::Def {
                name: name.clone(),
                procs: procs.clone(),
                body: Box::new(b),
                cont: Box::new(k),
            };
            let mut out: Vec<_> = unfold_one(inner, x, body)
                .into_iter()
                .map(|b| wrap(b, (**cont).clone()))
                .collect();
            out.extend(
                unfold_one(cont, x, body)
                    .into_iter()
                    .map(|k| wrap((**inner).clone(), k)),
            );
            out
        }
    }
}

fn root_rewrites(c: &Choreography, out: &mut Vec<Choreography>) {
    match c {
        Choreography::MCom(h0, k) => {
            if h0.is_empty() {
                out.push((**k).clone());
            }
            for (a, b) in splits(h0) {
                out.push(mcom(a, mcom(b, (**k).clone())));
            }
            match &**k {
                Choreography::MCom(h2, k2) if !h0.is_empty() && !h2.is_empty() => {
                    if h0.is_disjoint(h2) {
                        let union: Multicom = h0.union(h2).cloned().collect();
                        if is_wf_multicom(&union) {
                            out.push(mcom(union, (**k2).clone()));
                        }
                    }
                }
                Choreography::MSel(phi, k2) if com_sel_ok(h0, phi) => {
                    out.push(msel(phi.clone(), mcom(h0.clone(), (**k2).clone())));
                }
                Choreography::If {
                    proc,
                    guard,
                    then,
                    els,
                } if com_if_ok(h0, proc, guard) => {
                    out.push(cond(
                        proc,
                        guard,
                        mcom(h0.clone(), (**then).clone()),
                        mcom(h0.clone(), (**els).clone()),
                    ));
                }
                Choreography::Def {
                    name,
                    procs,
                    body,
                    cont,
                } => out.push(Choreography::Def {
                    name: name.clone(),
                    procs: procs.clone(),
                    body: body.clone(),
                    cont: Box::new(mcom(h0.clone(), (**cont).clone())),
                }),
                _ => {}
            }
        }
        Choreography::MSel(phi0, k) => {
            if phi0.is_empty() {
                out.push((**k).clone());
            }
            for (a, b) in splits(phi0) {
                out.push(msel(a, msel(b, (**k).clone())));
            }
            match &**k {
                Choreography::MSel(phi2, k2) if !phi0.is_empty() && !phi2.is_empty() => {
                    if phi0.is_disjoint(phi2) {
                        let union: Multisel = phi0.union(phi2).cloned().collect();
                        if is_wf_multisel(&union) {
                            out.push(msel(union, (**k2).clone()));
                        }
                    }
                }
                Choreography::MCom(h, k2) if com_sel_ok(h, phi0) => {
                    out.push(mcom(h.clone(), msel(phi0.clone(), (**k2).clone())));
                }
                Choreography::If {
                    proc,
                    guard,
                    then,
                    els,
                } if sel_if_ok(phi0, proc) => {
                    out.push(cond(
                        proc,
                        guard,
                        msel(phi0.clone(), (**then).clone()),
                        msel(phi0.clone(), (**els).clone()),
                    ));
                }
                Choreography::Def {
                    name,
                    procs,
                    body,
                    cont,
                } => out.push(Choreography::Def {
                    name: name.clone(),
                    procs: procs.clone(),
                    body: body.clone(),
                    cont: Box::new(msel(phi0.clone(), (**cont).clone())),
                }),
                _ => {}
            }
        }
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => match (&**then, &**els) {
            (Choreography::MCom(h1, k1), Choreography::MCom(h2, k2))
                if h1 == h2 && com_if_ok(h1, proc, guard) =>
            {
                out.push(mcom(
                    h1.clone(),
                    cond(proc, guard, (**k1).clone(), (**k2).clone()),
                ));
            }
            (Choreography::MSel(p1, k1), Choreography::MSel(p2, k2))
                if p1 == p2 && sel_if_ok(p1, proc) =>
            {
                out.push(msel(
                    p1.clone(),
                    cond(proc, guard, (**k1).clone(), (**k2).clone()),
                ));
            }
            (
                Choreography::If {
                    proc: q,
                    guard: g,
                    then: a,
                    els: b,
                },
                Choreography::If {
                    proc: q2,
                    guard: g2,
                    then: c2,
                    els: d,
                },
            ) if q == q2 && g == g2 => {
                out.push(cond(
                    q,
                    g,
                    cond(proc, guard, (**a).clone(), (**c2).clone()),
                    cond(proc, guard, (**b).clone(), (**d).clone()),
                ));
            }
            _ => {}
        },
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => {
            let wrap = |k: Choreography| Choreography::Def {
                name: name.clone(),
                procs: procs.clone(),
                body: body.clone(),
                cont: Box::new(k),
            };
            match &**cont {
                Choreography::End => out.push(Choreography::End),
                Choreography::MCom(h, k) => out.push(mcom(h.clone(), wrap((**k).clone()))),
                Choreography::MSel(phi, k) => out.push(msel(phi.clone(), wrap((**k).clone()))),
                _ => {}
            }
            for k in unfold_one(cont, name, body) {
                out.push(wrap(k));
            }
        }
        Choreography::Call { .. } | Choreography::End => {}
    }
}

/// All terms reachable from `c` by one rule application at any position.
pub fn rewrites(c: &Choreography) -> Vec<Choreography> {
    let mut out = Vec::new();
    root_rewrites(c, &mut out);
    match c {
        Choreography::MCom(h, k) => {
            out.extend(rewrites(k).into_iter().map(|k| mcom(h.clone(), k)));
        }
        Choreography::MSel(phi, k) => {
            out.extend(rewrites(k).into_iter().map(|k| msel(phi.clone(), k)));
        }
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => {
            out.extend(
                rewrites(then)
                    .into_iter()
                    .map(|t| cond(proc, guard, t, (**els).clone())),
            );
            out.extend(
                rewrites(els)
                    .into_iter()
                    .map(|e| cond(proc, guard, (**then).clone(), e)),
            );
        }
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => {
            let wrap = |b: Choreography, k: Choreography| Choreography::Def {
                name: name.clone(),
                procs: procs.clone(),
                body: Box::new(b),
                cont: Box::new(k),
            };
            out.extend(
                rewrites(body)
                    .into_iter()
                    .map(|b| wrap(b, (**cont).clone())),
            );
            out.extend(
                rewrites(cont)
                    .into_iter()
                    .map(|k| wrap((**body).clone(), k)),
            );
        }
        Choreography::Call { .. } | Choreography::End => {}
    }
    out
}

/// Breadth-first search from `start`; `visit` is called on every reached
/// term with its depth and stops the search by returning true.
fn search(start: &Choreography, bound: usize, mut visit: impl FnMut(&Choreography) -> bool) -> bool {
    let size_cap = 2 * start.size() + 8;
    let mut seen: HashSet<Choreography> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back((start.clone(), 0usize));
    while let Some((c, depth)) = queue.pop_front() {
        if visit(&c) {
            return true;
        }
        if depth == bound {
            continue;
        }
        for next in rewrites(&c) {
            if next.size() > size_cap || seen.len() >= VISIT_CAP {
                continue;
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, depth + 1));
            }
        }
    }
    false
}

/// Whether `c2` is reachable from `c1` in at most `bound` rewrites. A false
/// answer only means "not found within the bound".
pub fn equiv_oracle(c1: &Choreography, c2: &Choreography, bound: usize) -> bool {
    search(c1, bound, |c| c == c2)
}

/// Reductions of the head interaction without any reordering: singleton
/// groups, conditionals, and reduction under a definition.
pub fn head_reductions(c: &Choreography, state: &State) -> Vec<(TransitionLabel, Choreography, State)> {
    match c {
        Choreography::MCom(h, k) if h.len() == 1 => {
            let com = h.iter().next().expect("singleton");
            let v = eval(&com.expr, state.local(&com.sender));
            let label = TransitionLabel::Com {
                from: com.sender.clone(),
                value: v.clone(),
                to: com.receiver.clone(),
                var: com.var.clone(),
            };
            vec![(
                label,
                (**k).clone(),
                state.with(com.receiver.clone(), com.var.clone(), v),
            )]
        }
        Choreography::MSel(phi, k) if phi.len() == 1 => {
            let sel = phi.iter().next().expect("singleton");
            let label = TransitionLabel::Sel {
                from: sel.sender.clone(),
                to: sel.receiver.clone(),
                label: sel.label.clone(),
            };
            vec![(label, (**k).clone(), state.clone())]
        }
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => {
            if guard_holds(&eval(guard, state.local(proc))) {
                vec![(TransitionLabel::Then(proc.clone()), (**then).clone(), state.clone())]
            } else {
                vec![(TransitionLabel::Else(proc.clone()), (**els).clone(), state.clone())]
            }
        }
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => head_reductions(cont, state)
            .into_iter()
            .map(|(l, k, s)| {
                (
                    l,
                    Choreography::Def {
                        name: name.clone(),
                        procs: procs.clone(),
                        body: body.clone(),
                        cont: Box::new(k),
                    },
                    s,
                )
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// Whether some term reachable from `cfg` within `bound` rewrites has a head
/// reduction with exactly this label, ending (after normalization) in
/// `after`.
pub fn confirm_step(cfg: &SeqConfig, label: &TransitionLabel, after: &SeqConfig, bound: usize) -> bool {
    let after_chor = normalize(&after.chor);
    search(&cfg.chor, bound, |c| {
        head_reductions(c, &cfg.state)
            .into_iter()
            .any(|(l, k, s)| l == *label && s == after.state && normalize(&k) == after_chor)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conc::{apply_redex, enabled_conc};
    use crate::syntax::{parse_chor, parse_state};

    fn c(s: &str) -> Choreography {
        parse_chor(s).unwrap()
    }

    #[test]
    fn multicom_splits_both_ways() {
        let g = c("{p.x -> q.y, r.x -> s.y}");
        assert!(equiv_oracle(&g, &c("p.x -> q.y; r.x -> s.y"), 1));
        assert!(equiv_oracle(&g, &c("r.x -> s.y; p.x -> q.y"), 1));
        assert!(equiv_oracle(&c("r.x -> s.y; p.x -> q.y"), &g, 1));
    }

    #[test]
    fn com_sel_swap() {
        assert!(equiv_oracle(&c("p.x -> q.y; r -> s[L]"), &c("r -> s[L]; p.x -> q.y"), 1));
        assert!(!equiv_oracle(&c("p.x -> q.y; r -> q[L]"), &c("r -> q[L]; p.x -> q.y"), 4));
    }

    #[test]
    fn if_if_commutes() {
        let a = c("if p.x then { if q.y then { p.x -> r.a } else { 0 } } else { if q.y then { 0 } else { q.y -> r.b } }");
        let b = c("if q.y then { if p.x then { p.x -> r.a } else { 0 } } else { if p.x then { 0 } else { q.y -> r.b } }");
        assert!(equiv_oracle(&a, &b, 1));
        assert!(equiv_oracle(&b, &a, 1));
    }

    #[test]
    fn com_if_needs_fresh_guard() {
        let a = c("q.v -> p.z; if p.x then { 0 } else { r.x -> s.y }");
        let b = c("if p.x then { q.v -> p.z } else { q.v -> p.z; r.x -> s.y }");
        assert!(equiv_oracle(&a, &b, 1));
        let a = c("q.v -> p.x; if p.x then { 0 } else { r.x -> s.y }");
        let b = c("if p.x then { q.v -> p.x } else { q.v -> p.x; r.x -> s.y }");
        assert!(!equiv_oracle(&a, &b, 3));
    }

    #[test]
    fn unfolding_is_oriented() {
        let a = c("def X = { p.x -> q.y; X } in { X }");
        let b = c("def X = { p.x -> q.y; X } in { p.x -> q.y; X }");
        assert!(equiv_oracle(&a, &b, 1));
        assert!(!equiv_oracle(&b, &a, 3));
    }

    #[test]
    fn production_redexes_confirmed() {
        let st = parse_state("p.x = 1\nr.x = 2").unwrap();
        for src in [
            "{p.x -> q.y, r.x -> s.y}; q.y -> p.z",
            "def X = { p.x -> q.y; r.x -> s.y; X } in { X }",
            "p.x -> q.y; if r.x then { r -> s[L]; 0 } else { r -> s[R]; 0 }",
            "p -> q[L]; def X = { r.x -> s.y } in { p.x -> s.z; X }",
        ] {
            let cfg = SeqConfig::new(c(src), st.clone());
            for r in enabled_conc(&cfg) {
                let (l, after) = apply_redex(&cfg, &r).unwrap();
                assert!(confirm_step(&cfg, &l, &after, 6), "{src}: {r}");
            }
        }
    }
}
