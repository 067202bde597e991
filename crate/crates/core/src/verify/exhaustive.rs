//! Exhaustive enumeration of small choreographies, used to validate the
//! concurrent engine against the rewrite oracle.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::ast::{Choreography, Com, Expr, Multicom, Multisel, RecVar, Sel, State, Value, VarName};
use crate::conc::{apply_redex, enabled_conc};
use crate::equiv::confirm_step;
use crate::seq::SeqConfig;
use crate::syntax::print_chor;
use crate::verify::gen::proc_name;
use crate::wf::{is_well_formed, is_wf_multicom, is_wf_multisel};

/// The finite alphabet the enumeration draws from.
struct Alphabet {
    multicoms: Vec<Multicom>,
    multisels: Vec<Multisel>,
    procs: Vec<String>,
}

fn subsets<T: Ord + Clone>(items: &[T], max: usize) -> Vec<BTreeSet<T>> {
    let mut out = vec![BTreeSet::new()];
    for it in items {
        let mut more = Vec::new();
        for s in &out {
            if s.len() < max {
                let mut t = s.clone();
                t.insert(it.clone());
                more.push(t);
            }
        }
        out.extend(more);
    }
    out
}

impl Alphabet {
    fn new(procs: usize, max_group: usize) -> Alphabet {
        let names: Vec<String> = (0..procs).map(|i| proc_name(i).to_string()).collect();
        let mut coms = Vec::new();
        let mut sels = Vec::new();
        for p in &names {
            for q in names.iter().filter(|q| *q != p) {
                coms.push(Com::new(p, Expr::Var(VarName::new("x")), q, "x"));
                for l in ["L", "R"] {
                    sels.push(Sel::new(p, q, l));
                }
            }
        }
        Alphabet {
            multicoms: subsets(&coms, max_group).into_iter().filter(is_wf_multicom).collect(),
            multisels: subsets(&sels, max_group).into_iter().filter(is_wf_multisel).collect(),
            procs: names,
        }
    }

    /// All terms of exactly `n` nodes whose free calls are bound in `scope`.
    fn terms(&self, n: usize, scope: &[String]) -> Vec<Choreography> {
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        if n == 1 {
            out.push(Choreography::End);
            out.extend(scope.iter().map(|x| Choreography::call(x)));
            return out;
        }
        for h in &self.multicoms {
            if 1 + h.len() < n {
                for k in self.terms(n - 1 - h.len(), scope) {
                    out.push(Choreography::MCom(h.clone(), Box::new(k)));
                }
            }
        }
        for phi in &self.multisels {
            if 1 + phi.len() < n {
                for k in self.terms(n - 1 - phi.len(), scope) {
                    out.push(Choreography::MSel(phi.clone(), Box::new(k)));
                }
            }
        }
        for a in 1..n - 1 {
            let thens = self.terms(a, scope);
            let elses = self.terms(n - 1 - a, scope);
            for p in &self.procs {
                for t in &thens {
                    for e in &elses {
                        out.push(Choreography::cond(p, Expr::Var(VarName::new("x")), t.clone(), e.clone()));
                    }
                }
            }
        }
        let mut inner = scope.to_vec();
        inner.push(format!("X{}", scope.len()));
        let name = inner.last().expect("just pushed");
        for a in 1..n - 1 {
            let bodies = self.terms(a, &inner);
            let conts = self.terms(n - 1 - a, &inner);
            for b in &bodies {
                for k in &conts {
                    out.push(Choreography::Def {
                        name: RecVar::new(name.as_str()),
                        procs: BTreeSet::new(),
                        body: Box::new(b.clone()),
                        cont: Box::new(k.clone()),
                    });
                }
            }
        }
        out
    }
}

/// Every well-formed choreography with at most `max_size` nodes over
/// `procs` processes, one expression `x`, labels `L` and `R`, and groups
/// of at most `max_group` elements.
pub fn enumerate(max_size: usize, procs: usize, max_group: usize) -> Vec<Choreography> {
    let alpha = Alphabet::new(procs, max_group);
    (1..=max_size)
        .flat_map(|n| alpha.terms(n, &[]))
        .filter(is_well_formed)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub terms: usize,
    pub redexes: usize,
    pub unconfirmed: Vec<String>,
    pub elapsed_ms: u128,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.unconfirmed.is_empty()
    }
}

fn uniform_state(procs: usize, v: bool) -> State {
    let mut s = State::new();
    for i in 0..procs {
        s.set(proc_name(i), VarName::new("x"), Value::Bool(v));
    }
    s
}

/// Confirms every concurrent redex of every enumerated term, under a state
/// where all guards hold and one where none does.
pub fn validate_oracle(max_size: usize, procs: usize, bound: usize) -> OracleReport {
    let start = Instant::now();
    let terms = enumerate(max_size, procs, procs);
    let states = [uniform_state(procs, true), uniform_state(procs, false)];
    let results: Vec<(usize, Vec<String>)> = terms
        .par_iter()
        .map(|c| {
            let mut count = 0;
            let mut bad = Vec::new();
            for st in &states {
                let cfg = SeqConfig::new(c.clone(), st.clone());
                for r in enabled_conc(&cfg) {
                    count += 1;
                    let (label, after) = apply_redex(&cfg, &r).expect("enumerated redex applies");
                    if !confirm_step(&cfg, &label, &after, bound) {
                        bad.push(format!("{r} in {}", print_chor(c)));
                    }
                }
            }
            (count, bad)
        })
        .collect();
    OracleReport {
        terms: terms.len(),
        redexes: results.iter().map(|r| r.0).sum(),
        unconfirmed: results.into_iter().flat_map(|r| r.1).collect(),
        elapsed_ms: start.elapsed().as_millis(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_of_smallest_sizes() {
        // Size 3: coms, selections, nested empty groups, conditionals and
        // definitions with body and continuation in {0, X0}.
        let alpha = Alphabet::new(3, 3);
        assert_eq!(alpha.terms(1, &[]).len(), 1);
        assert_eq!(alpha.terms(2, &[]).len(), 2);
        assert_eq!(alpha.terms(3, &[]).len(), 6 + 12 + 4 + 3 + 4);
    }

    #[test]
    fn enumeration_is_well_formed_and_distinct() {
        let all = enumerate(5, 3, 3);
        let set: BTreeSet<_> = all.iter().collect();
        assert_eq!(set.len(), all.len());
        assert!(all.iter().all(is_well_formed));
    }

    #[test]
    fn small_sizes_confirmed() {
        let r = validate_oracle(4, 3, 6);
        assert!(r.passed(), "{:?}", r.unconfirmed);
        assert!(r.redexes > 0);
    }
}
