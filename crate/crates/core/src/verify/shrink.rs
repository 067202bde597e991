//! Counterexample minimization by deleting subterms.

use crate::ast::Choreography;
use crate::wf::is_well_formed;

const MAX_ROUNDS: usize = 200;

/// Terms obtained from `c` by one deletion: dropping a group or one of its
/// elements, collapsing a conditional to a branch, dropping a definition,
/// or cutting a subterm to `0`.
pub fn candidates(c: &Choreography) -> Vec<Choreography> {
    let mut out = Vec::new();
    if *c != Choreography::End {
        out.push(Choreography::End);
    }
    match c {
        Choreography::MCom(h, k) => {
            out.push((**k).clone());
            if h.len() > 1 {
                for com in h {
                    let mut h2 = h.clone();
                    h2.remove(com);
                    out.push(Choreography::MCom(h2, k.clone()));
                }
            }
            for k2 in candidates(k) {
                out.push(Choreography::MCom(h.clone(), Box::new(k2)));
            }
        }
        Choreography::MSel(phi, k) => {
            out.push((**k).clone());
            if phi.len() > 1 {
                for s in phi {
                    let mut p2 = phi.clone();
                    p2.remove(s);
                    out.push(Choreography::MSel(p2, k.clone()));
                }
            }
            for k2 in candidates(k) {
                out.push(Choreography::MSel(phi.clone(), Box::new(k2)));
            }
        }
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => {
            out.push((**then).clone());
            out.push((**els).clone());
            for t in candidates(then) {
                out.push(Choreography::If {
                    proc: proc.clone(),
                    guard: guard.clone(),
                    then: Box::new(t),
                    els: els.clone(),
                });
            }
            for e in candidates(els) {
                out.push(Choreography::If {
                    proc: proc.clone(),
                    guard: guard.clone(),
                    then: then.clone(),
                    els: Box::new(e),
                });
            }
        }
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => {
            out.push((**cont).clone());
            for b in candidates(body) {
                out.push(Choreography::Def {
                    name: name.clone(),
                    procs: procs.clone(),
                    body: Box::new(b),
                    cont: cont.clone(),
                });
            }
            for k in candidates(cont) {
                out.push(Choreography::Def {
                    name: name.clone(),
                    procs: procs.clone(),
                    body: body.clone(),
                    cont: Box::new(k),
                });
            }
        }
        Choreography::Call { .. } | Choreography::End => {}
    }
    out
}

/// Greedily replaces `c` by a smaller well-formed term on which `fails`
/// still holds, until no single deletion keeps the failure.
pub fn shrink(c: &Choreography, fails: impl Fn(&Choreography) -> bool) -> Choreography {
    let mut cur = c.clone();
    for _ in 0..MAX_ROUNDS {
        let mut cands = candidates(&cur);
        cands.sort_by_key(Choreography::size);
        let next = cands
            .into_iter()
            .filter(|d| d.size() < cur.size())
            .find(|d| is_well_formed(d) && fails(d));
        match next {
            Some(d) => cur = d,
            None => break,
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::pn_chor;
    use crate::syntax::parse_chor;

    #[test]
    fn shrinks_to_minimal_witness() {
        let c = parse_chor("{p.x -> q.y, r.x -> s.y}; if p.x then { t.x -> u.y } else { 0 }").unwrap();
        // "Mentions u" is preserved by keeping only the one communication.
        let small = shrink(&c, |d| pn_chor(d).contains(&"u".into()));
        assert_eq!(small, parse_chor("t.x -> u.y").unwrap());
    }

    #[test]
    fn keeps_well_formedness() {
        let c = parse_chor("def X = { p.x -> q.y; X } in { X }").unwrap();
        let small = shrink(&c, |d| d.size() >= 1 && *d != Choreography::End);
        assert!(is_well_formed(&small));
    }
}
