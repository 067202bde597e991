//! Process networks: synchronous rendezvous between a send and a matching
//! receive, or a selection and a matching branching, plus local
//! conditionals.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ast::{eval, Behaviour, Expr, Label, Network, ProcName, RecVar, State, Theta, VarName};
use crate::conc::ConcError;
use crate::seq::{guard_holds, MAX_UNFOLDS};
use crate::syntax::print_expr;
use crate::trace::{Status, Trace, TransitionLabel};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NetConfig {
    pub net: Network,
    pub state: State,
}

impl NetConfig {
    pub fn new(net: Network, state: State) -> NetConfig {
        NetConfig {
            net: normalize_net(&net),
            state,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetRedex {
    SyncCom {
        from: ProcName,
        to: ProcName,
        expr: Expr,
        var: VarName,
    },
    SyncSel {
        from: ProcName,
        to: ProcName,
        label: Label,
    },
    LocalIf(ProcName),
}

impl fmt::Display for NetRedex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetRedex::SyncCom {
                from,
                to,
                expr,
                var,
            } => write!(f, "{from}!{} / {to}?{var}", print_expr(expr)),
            NetRedex::SyncSel { from, to, label } => write!(f, "{from} -> {to}[{label}]"),
            NetRedex::LocalIf(p) => write!(f, "if at {p}"),
        }
    }
}

/// Drops empty groups and definitions whose scope has ended, everywhere.
pub fn normalize_behaviour(b: &Behaviour) -> Behaviour {
    match b {
        Behaviour::Actions(t, k) => Behaviour::actions(t.clone(), normalize_behaviour(k)),
        Behaviour::Selects(s, k) => Behaviour::selects(s.clone(), normalize_behaviour(k)),
        Behaviour::Branch { from, branches } => Behaviour::Branch {
            from: from.clone(),
            branches: branches
                .iter()
                .map(|(l, b)| (l.clone(), normalize_behaviour(b)))
                .collect(),
        },
        Behaviour::If { guard, then, els } => Behaviour::If {
            guard: guard.clone(),
            then: Box::new(normalize_behaviour(then)),
            els: Box::new(normalize_behaviour(els)),
        },
        Behaviour::Def { name, body, cont } => Behaviour::def(
            name.clone(),
            normalize_behaviour(body),
            normalize_behaviour(cont),
        ),
        Behaviour::Call(_) | Behaviour::End => b.clone(),
    }
}

/// A behaviour with its head exposed: the definitions wrapping it, and the
/// first non-definition, non-call term after unfolding calls.
struct Exposed {
    wrappers: Vec<(RecVar, Behaviour)>,
    head: Behaviour,
}

/// `None` on unguarded recursion.
fn expose(b: &Behaviour) -> Option<Exposed> {
    let mut wrappers = Vec::new();
    let mut env: Vec<(RecVar, Behaviour)> = Vec::new();
    let mut cur = b.clone();
    let mut unfolds = 0;
    loop {
        match cur {
            Behaviour::Def { name, body, cont } => {
                wrappers.push((name.clone(), (*body).clone()));
                env.push((name, *body));
                cur = *cont;
            }
            Behaviour::Call(x) => {
                unfolds += 1;
                if unfolds > MAX_UNFOLDS {
                    return None;
                }
                let i = env.iter().rposition(|(y, _)| *y == x)?;
                let body = env[i].1.clone();
                env.truncate(i + 1);
                cur = body;
            }
            head => return Some(Exposed { wrappers, head }),
        }
    }
}

impl Exposed {
    fn rebuild(self, head: Behaviour) -> Behaviour {
        let b = self
            .wrappers
            .into_iter()
            .rev()
            .fold(head, |acc, (name, body)| Behaviour::def(name, body, acc));
        normalize_behaviour(&b)
    }
}

fn behaviour_terminated(b: &Behaviour) -> bool {
    matches!(expose(&normalize_behaviour(b)), Some(Exposed { head: Behaviour::End, .. }))
}

/// Normalizes every process and drops the terminated ones.
pub fn normalize_net(n: &Network) -> Network {
    n.iter()
        .map(|(p, b)| (p.clone(), normalize_behaviour(b)))
        .filter(|(_, b)| !behaviour_terminated(b))
        .collect()
}

pub fn is_terminated_net(n: &Network) -> bool {
    normalize_net(n).is_empty()
}

fn heads(n: &Network) -> BTreeMap<&ProcName, Behaviour> {
    n.iter()
        .filter_map(|(p, b)| expose(b).map(|e| (p, e.head)))
        .collect()
}

pub fn enabled_net(cfg: &NetConfig) -> Vec<NetRedex> {
    let hs = heads(&cfg.net);
    let mut out = Vec::new();
    for (p, h) in &hs {
        match h {
            Behaviour::Actions(thetas, _) => {
                for t in thetas {
                    let Theta::Send { to, expr } = t else { continue };
                    if to == *p {
                        continue;
                    }
                    if let Some(Behaviour::Actions(theirs, _)) = hs.get(to) {
                        for u in theirs {
                            if let Theta::Recv { from, var } = u {
                                if from == *p {
                                    out.push(NetRedex::SyncCom {
                                        from: (*p).clone(),
                                        to: to.clone(),
                                        expr: expr.clone(),
                                        var: var.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
            }
            Behaviour::Selects(sels, _) => {
                for (q, l) in sels {
                    if q == *p {
                        continue;
                    }
                    if let Some(Behaviour::Branch { from, branches }) = hs.get(q) {
                        if from == *p && branches.contains_key(l) {
                            out.push(NetRedex::SyncSel {
                                from: (*p).clone(),
                                to: q.clone(),
                                label: l.clone(),
                            });
                        }
                    }
                }
            }
            Behaviour::If { .. } => out.push(NetRedex::LocalIf((*p).clone())),
            _ => {}
        }
    }
    out
}

fn exposed(net: &Network, p: &ProcName) -> Exposed {
    expose(&net[p]).expect("enabled redex has an exposed head")
}

pub fn apply_net(cfg: &NetConfig, r: &NetRedex) -> Result<(TransitionLabel, NetConfig), ConcError> {
    if !enabled_net(cfg).contains(r) {
        return Err(ConcError::Stale(r.to_string()));
    }
    let mut net = cfg.net.clone();
    let mut state = cfg.state.clone();
    let label = match r {
        NetRedex::SyncCom {
            from,
            to,
            expr,
            var,
        } => {
            let v = eval(expr, cfg.state.local(from));
            for (p, theta) in [
                (from, Theta::Send { to: to.clone(), expr: expr.clone() }),
                (to, Theta::Recv { from: from.clone(), var: var.clone() }),
            ] {
                let e = exposed(&net, p);
                let Behaviour::Actions(mut thetas, k) = e.head.clone() else {
                    unreachable!()
                };
                thetas.remove(&theta);
                let b = e.rebuild(Behaviour::actions(thetas, *k));
                net.insert(p.clone(), b);
            }
            state.set(to.clone(), var.clone(), v.clone());
            TransitionLabel::Com {
                from: from.clone(),
                value: v,
                to: to.clone(),
                var: var.clone(),
            }
        }
        NetRedex::SyncSel { from, to, label } => {
            let e = exposed(&net, from);
            let Behaviour::Selects(mut sels, k) = e.head.clone() else {
                unreachable!()
            };
            sels.remove(to);
            let b = e.rebuild(Behaviour::selects(sels, *k));
            net.insert(from.clone(), b);
            let e = exposed(&net, to);
            let Behaviour::Branch { mut branches, .. } = e.head.clone() else {
                unreachable!()
            };
            let chosen = branches.remove(label).expect("offered label");
            let b = e.rebuild(chosen);
            net.insert(to.clone(), b);
            TransitionLabel::Sel {
                from: from.clone(),
                to: to.clone(),
                label: label.clone(),
            }
        }
        NetRedex::LocalIf(p) => {
            let e = exposed(&net, p);
            let Behaviour::If { guard, then, els } = e.head.clone() else {
                unreachable!()
            };
            let (label, next) = if guard_holds(&eval(&guard, cfg.state.local(p))) {
                (TransitionLabel::Then(p.clone()), *then)
            } else {
                (TransitionLabel::Else(p.clone()), *els)
            };
            let b = e.rebuild(next);
            net.insert(p.clone(), b);
            label
        }
    };
    Ok((
        label,
        NetConfig {
            net: normalize_net(&net),
            state,
        },
    ))
}

/// Seeded uniform scheduling among enabled redexes.
pub fn run_net(cfg: &NetConfig, seed: u64, fuel: usize) -> (Trace, NetConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = cfg.clone();
    let mut steps = Vec::new();
    loop {
        if is_terminated_net(&cur.net) {
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
        let redexes = enabled_net(&cur);
        let Some(r) = redexes.choose(&mut rng) else {
            return (
                Trace {
                    steps,
                    status: Status::Deadlocked,
                },
                cur,
            );
        };
        let (l, next) = apply_net(&cur, r).expect("enumerated redex applies");
        steps.push(l);
        cur = next;
    }
}

/// Every schedule of at most `max_steps` steps, with its final
/// configuration.
pub fn all_net_runs(cfg: &NetConfig, max_steps: usize) -> Vec<(Trace, NetConfig)> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    net_dfs(cfg, max_steps, &mut prefix, &mut out);
    out
}

fn net_dfs(
    cfg: &NetConfig,
    max_steps: usize,
    prefix: &mut Vec<TransitionLabel>,
    out: &mut Vec<(Trace, NetConfig)>,
) {
    let status = if is_terminated_net(&cfg.net) {
        Some(Status::Terminated)
    } else if prefix.len() >= max_steps {
        Some(Status::Truncated)
    } else {
        None
    };
    let redexes = if status.is_none() { enabled_net(cfg) } else { Vec::new() };
    if let Some(status) = status.or(redexes.is_empty().then_some(Status::Deadlocked)) {
        out.push((
            Trace {
                steps: prefix.clone(),
                status,
            },
            cfg.clone(),
        ));
        return;
    }
    for r in &redexes {
        let (l, next) = apply_net(cfg, r).expect("enumerated redex applies");
        prefix.push(l);
        net_dfs(&next, max_steps, prefix, out);
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Value;
    use crate::syntax::{parse_behaviour, parse_network, parse_state};

    fn cfg(n: &str, s: &str) -> NetConfig {
        NetConfig::new(parse_network(n).unwrap(), parse_state(s).unwrap())
    }

    fn pn(s: &str) -> ProcName {
        ProcName::new(s)
    }

    #[test]
    fn normalization() {
        let n: Network = [(pn("p"), Behaviour::Actions(Default::default(), Box::new(Behaviour::End)))]
            .into_iter()
            .collect();
        assert!(normalize_net(&n).is_empty());
        let n = parse_network("p |> def X = {q!x} in {0}").unwrap();
        assert!(normalize_net(&n).is_empty());
        let n = parse_network("p |> q!x | q |> p?y").unwrap();
        assert_eq!(normalize_net(&n), n);
        assert!(is_terminated_net(&parse_network("p |> 0").unwrap()));
        assert!(!is_terminated_net(&parse_network("p |> q!x").unwrap()));
    }

    #[test]
    fn exchange_both_orders() {
        let c = cfg("p |> {q!x, q?y} | q |> {p!x, p?y}", "p.x = 1\nq.x = 2");
        let rs = enabled_net(&c);
        assert_eq!(rs.len(), 2);
        let runs = all_net_runs(&c, 10);
        assert_eq!(runs.len(), 2);
        for (t, end) in &runs {
            assert_eq!(t.status, Status::Terminated);
            assert_eq!(end.state.get(&pn("q"), &VarName::new("y")), Value::Int(1));
            assert_eq!(end.state.get(&pn("p"), &VarName::new("y")), Value::Int(2));
        }
    }

    #[test]
    fn selection_commits_branch() {
        let c = cfg("p |> q(+)[L] | q |> p&{L: p?x, R: p!y}", "");
        let rs = enabled_net(&c);
        assert_eq!(
            rs,
            vec![NetRedex::SyncSel {
                from: pn("p"),
                to: pn("q"),
                label: Label::new("L")
            }]
        );
        let (_, next) = apply_net(&c, &rs[0]).unwrap();
        assert_eq!(next.net[&pn("q")], parse_behaviour("p?x").unwrap());
        assert!(!next.net.contains_key(&pn("p")));
    }

    #[test]
    fn local_conditional() {
        let c = cfg("p |> if 1 < 2 then {q!x} else {0} | q |> p?y", "");
        let rs = enabled_net(&c);
        assert_eq!(rs, vec![NetRedex::LocalIf(pn("p"))]);
        let (l, _) = apply_net(&c, &rs[0]).unwrap();
        assert_eq!(l, TransitionLabel::Then(pn("p")));
    }

    #[test]
    fn deadlock_is_detected() {
        let c = cfg("p |> q?x | q |> p?y", "");
        assert!(enabled_net(&c).is_empty());
        let (t, _) = run_net(&c, 0, 10);
        assert_eq!(t.status, Status::Deadlocked);
    }

    #[test]
    fn recursion_unfolds() {
        let c = cfg("p |> def X = {q!x; X} in {X} | q |> def Y = {p?y; Y} in {Y}", "p.x = 3");
        let (t, end) = run_net(&c, 1, 4);
        assert_eq!(t.status, Status::OutOfFuel);
        assert_eq!(t.steps.len(), 4);
        assert_eq!(end.net, c.net);
    }

    #[test]
    fn empty_network() {
        assert!(enabled_net(&cfg("0", "")).is_empty());
    }
}
