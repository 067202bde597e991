//! Sequential semantics: the whole head multicom or multisel reduces in one
//! atomic step, and execution is deterministic.

use crate::ast::{eval, Choreography, RecVar, State, Value};
use crate::trace::{Status, Trace, TransitionLabel};

/// Upper bound on procedure unfoldings needed to expose one redex. Only
/// unguarded recursion (`def X = { X } in { X }`) can hit it.
pub(crate) const MAX_UNFOLDS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeqConfig {
    pub chor: Choreography,
    pub state: State,
}

impl SeqConfig {
    pub fn new(chor: Choreography, state: State) -> SeqConfig {
        SeqConfig {
            chor: normalize(&chor),
            state,
        }
    }
}

/// Removes empty groups and definitions whose scope has terminated,
/// everywhere in the term. Never unfolds recursion. Idempotent.
pub fn normalize(c: &Choreography) -> Choreography {
    match c {
        Choreography::MCom(h, k) => {
            let k = normalize(k);
            if h.is_empty() {
                k
            } else {
                Choreography::MCom(h.clone(), Box::new(k))
            }
        }
        Choreography::MSel(phi, k) => {
            let k = normalize(k);
            if phi.is_empty() {
                k
            } else {
                Choreography::MSel(phi.clone(), Box::new(k))
            }
        }
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => Choreography::If {
            proc: proc.clone(),
            guard: guard.clone(),
            then: Box::new(normalize(then)),
            els: Box::new(normalize(els)),
        },
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => {
            let cont = normalize(cont);
            if cont == Choreography::End {
                Choreography::End
            } else {
                Choreography::Def {
                    name: name.clone(),
                    procs: procs.clone(),
                    body: Box::new(normalize(body)),
                    cont: Box::new(cont),
                }
            }
        }
        Choreography::Call { .. } | Choreography::End => c.clone(),
    }
}

/// True when the term is structurally the terminated program: after
/// normalization, the head is `0` possibly behind definitions and calls
/// whose bodies are themselves terminated.
pub fn is_terminated(c: &Choreography) -> bool {
    let c = normalize(c);
    let mut env = Vec::new();
    head_is_end(&c, &mut env, &mut 0)
}

fn head_is_end<'a>(c: &'a Choreography, env: &mut Env<'a>, unfolds: &mut usize) -> bool {
    match c {
        Choreography::End => true,
        Choreography::Def { name, body, cont, .. } => {
            env.push((name, body));
            let r = head_is_end(cont, env, unfolds);
            env.pop();
            r
        }
        Choreography::Call { name, .. } => {
            *unfolds += 1;
            if *unfolds > MAX_UNFOLDS {
                return false;
            }
            let Some(idx) = env.iter().rposition(|(x, _)| *x == name) else {
                return false;
            };
            let body = env[idx].1;
            let inner = env.split_off(idx + 1);
            let r = head_is_end(body, env, unfolds);
            env.extend(inner);
            r
        }
        _ => false,
    }
}

pub(crate) fn guard_holds(v: &Value) -> bool {
    *v == Value::Bool(true)
}

type Env<'a> = Vec<(&'a RecVar, &'a Choreography)>;

fn head_step<'a>(
    c: &'a Choreography,
    env: &mut Env<'a>,
    state: &State,
    unfolds: &mut usize,
) -> Option<(TransitionLabel, Choreography, State)> {
    match c {
        Choreography::End => None,
        Choreography::MCom(h, k) => {
            // Every expression reads the pre-state.
            let sent: Vec<_> = h
                .iter()
                .map(|com| (com, eval(&com.expr, state.local(&com.sender))))
                .collect();
            let mut next = state.clone();
            let mut labels = Vec::with_capacity(sent.len());
            for (com, v) in sent {
                next.set(com.receiver.clone(), com.var.clone(), v.clone());
                labels.push(TransitionLabel::Com {
                    from: com.sender.clone(),
                    value: v,
                    to: com.receiver.clone(),
                    var: com.var.clone(),
                });
            }
            Some((TransitionLabel::Group(labels), (**k).clone(), next))
        }
        Choreography::MSel(phi, k) => {
            let labels = phi
                .iter()
                .map(|s| TransitionLabel::Sel {
                    from: s.sender.clone(),
                    to: s.receiver.clone(),
                    label: s.label.clone(),
                })
                .collect();
            Some((TransitionLabel::Group(labels), (**k).clone(), state.clone()))
        }
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => {
            if guard_holds(&eval(guard, state.local(proc))) {
                Some((TransitionLabel::Then(proc.clone()), (**then).clone(), state.clone()))
            } else {
                Some((TransitionLabel::Else(proc.clone()), (**els).clone(), state.clone()))
            }
        }
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => {
            env.push((name, body));
            let r = head_step(cont, env, state, unfolds);
            env.pop();
            r.map(|(l, k, s)| {
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
        }
        Choreography::Call { name, .. } => {
            *unfolds += 1;
            if *unfolds > MAX_UNFOLDS {
                return None;
            }
            let idx = env.iter().rposition(|(x, _)| *x == name)?;
            let body = env[idx].1;
            // The body only sees definitions up to its own.
            let inner = env.split_off(idx + 1);
            let r = head_step(body, env, state, unfolds);
            env.extend(inner);
            r
        }
    }
}

/// One sequential step, or `None` when the configuration cannot reduce
/// (terminated, or stuck on unguarded recursion).
pub fn step_seq(cfg: &SeqConfig) -> Option<(TransitionLabel, SeqConfig)> {
    let c = normalize(&cfg.chor);
    let mut env = Vec::new();
    let mut unfolds = 0;
    head_step(&c, &mut env, &cfg.state, &mut unfolds).map(|(l, k, s)| {
        (
            l,
            SeqConfig {
                chor: normalize(&k),
                state: s,
            },
        )
    })
}

pub fn run_seq(cfg: &SeqConfig, fuel: usize) -> (Trace, SeqConfig) {
    let mut cur = cfg.clone();
    let mut steps = Vec::new();
    loop {
        if is_terminated(&cur.chor) {
            return (
                Trace {
                    steps,
                    status: Status::Terminated,
                },
                cur,
            );
        }
        if steps.len() >= fuel {
            return (
                Trace {
                    steps,
                    status: Status::OutOfFuel,
                },
                cur,
            );
        }
        match step_seq(&cur) {
            Some((l, next)) => {
                steps.push(l);
                cur = next;
            }
            None => {
                return (
                    Trace {
                        steps,
                        status: Status::Deadlocked,
                    },
                    cur,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Com, Expr, ProcName, VarName};
    use crate::syntax::{parse_chor, parse_state};

    fn cfg(src: &str, st: &str) -> SeqConfig {
        SeqConfig::new(parse_chor(src).unwrap(), parse_state(st).unwrap())
    }

    fn get(s: &State, p: &str, x: &str) -> Value {
        s.get(&ProcName::new(p), &VarName::new(x))
    }

    #[test]
    fn normalize_rules() {
        let c = parse_chor("def X = { p.x -> q.y } in { 0 }").unwrap();
        assert_eq!(normalize(&c), Choreography::End);
        let k = Choreography::mcom([Com::new("p", Expr::var("x"), "q", "y")], Choreography::End);
        let c = Choreography::MCom(Default::default(), Box::new(k.clone()));
        assert_eq!(normalize(&c), k);
        assert_eq!(normalize(&k), k);
    }

    #[test]
    fn termination() {
        assert!(is_terminated(&Choreography::End));
        assert!(is_terminated(&parse_chor("def X = { p.x -> q.y; X } in { 0 }").unwrap()));
        assert!(!is_terminated(&parse_chor("p.x -> q.y").unwrap()));
        assert!(is_terminated(&parse_chor("def X = { 0 } in { X }").unwrap()));
        assert!(!is_terminated(&parse_chor("def X = { X } in { X }").unwrap()));
    }

    #[test]
    fn multicom_is_atomic() {
        let c = cfg("{p.x -> q.u, q.x -> p.v}; 0", "p.x = 1\nq.x = 2");
        let (l, next) = step_seq(&c).unwrap();
        assert!(matches!(l, TransitionLabel::Group(ref ls) if ls.len() == 2));
        assert_eq!(get(&next.state, "q", "u"), Value::Int(1));
        assert_eq!(get(&next.state, "p", "v"), Value::Int(2));
        assert_eq!(next.chor, Choreography::End);
    }

    #[test]
    fn exchange_reads_pre_state() {
        // Both sides read and write x; the pre-state is what gets swapped.
        let c = cfg("{p.x -> q.u, q.x -> p.x}", "p.x = 1\nq.x = 2");
        let (_, next) = step_seq(&c).unwrap();
        assert_eq!(get(&next.state, "q", "u"), Value::Int(1));
        assert_eq!(get(&next.state, "p", "x"), Value::Int(2));
    }

    #[test]
    fn conditional() {
        let c = cfg("if p.(1<2) then { p.x -> q.y } else { 0 }", "");
        let (l, next) = step_seq(&c).unwrap();
        assert_eq!(l, TransitionLabel::Then(ProcName::new("p")));
        assert_eq!(next.chor, parse_chor("p.x -> q.y").unwrap());
        let c = cfg("if p.(1 + 1) then { p.x -> q.y } else { 0 }", "");
        let (l, _) = step_seq(&c).unwrap();
        assert_eq!(l, TransitionLabel::Else(ProcName::new("p")));
    }

    #[test]
    fn selections_leave_state_alone() {
        let c = cfg("{p -> q[L], p -> r[L]}; p.x -> q.x", "p.x = 3");
        let (_, next) = step_seq(&c).unwrap();
        assert_eq!(next.state, c.state);
    }

    #[test]
    fn single_unfold_per_step() {
        let c = cfg("def X = { p.x -> q.y; X } in { X }", "p.x = 7");
        let (l, next) = step_seq(&c).unwrap();
        assert_eq!(l.atoms().len(), 1);
        assert_eq!(next.chor, c.chor);
        assert_eq!(get(&next.state, "q", "y"), Value::Int(7));
    }

    #[test]
    fn run_examples() {
        let (t, _) = run_seq(&cfg("0", ""), 10);
        assert_eq!(t.status, Status::Terminated);
        assert!(t.steps.is_empty());

        let (t, _) = run_seq(&cfg("def X = { p.x -> q.y; X } in { X }", ""), 5);
        assert_eq!(t.status, Status::OutOfFuel);
        assert_eq!(t.steps.len(), 5);

        let (t, _) = run_seq(&cfg("def X = { X } in { X }", ""), 5);
        assert_eq!(t.status, Status::Deadlocked);
    }
}
