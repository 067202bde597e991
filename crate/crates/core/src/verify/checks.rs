//! Executable checks of the correctness properties, one instance at a time.
//!
//! Each check explores a bounded prefix of the reachable configurations.
//! A miss in a bounded closure search is reported as inconclusive rather
//! than as a failure.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::ast::{Choreography, Network, State};
use crate::conc::{apply_redex, enabled_conc, run_conc};
use crate::epp::{project, prunes};
use crate::net::{apply_net, enabled_net, is_terminated_net, NetConfig};
use crate::seq::{is_terminated, run_seq, step_seq, SeqConfig};
use crate::syntax::{print_chor, print_network};
use crate::trace::{Status, TransitionLabel};

/// A choreography with the memory it starts from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub seed: u64,
    pub chor: Choreography,
    pub state: State,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// Reachable configurations examined per instance and semantics.
    pub max_configs: usize,
    /// Steps of each driven execution.
    pub fuel: usize,
    /// Join depth for diverging pairs; defaults to twice the largest group.
    pub join_depth: Option<usize>,
    /// Sequential steps allowed to close a concurrent step; same default.
    pub closure_depth: Option<usize>,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_configs: 48,
            fuel: 40,
            join_depth: None,
            closure_depth: None,
        }
    }
}

fn default_depth(c: &Choreography) -> usize {
    (2 * c.max_group_size()).max(2)
}

impl Bounds {
    pub fn join(&self, c: &Choreography) -> usize {
        self.join_depth.unwrap_or_else(|| default_depth(c))
    }

    pub fn closure(&self, c: &Choreography) -> usize {
        self.closure_depth.unwrap_or_else(|| default_depth(c))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// The property does not apply (e.g. an unprojectable instance).
    Skip,
    Fail(String),
    Inconclusive(String),
}

/// Ceiling on configurations held by one join or closure search.
const SEARCH_CAP: usize = 20_000;

pub fn successors(c: &SeqConfig) -> Vec<(TransitionLabel, SeqConfig)> {
    enabled_conc(c)
        .iter()
        .map(|r| apply_redex(c, r).expect("enumerated redex applies"))
        .collect()
}

pub fn net_successors(c: &NetConfig) -> Vec<(TransitionLabel, NetConfig)> {
    enabled_net(c)
        .iter()
        .map(|r| apply_net(c, r).expect("enumerated redex applies"))
        .collect()
}

/// Breadth-first prefix of the configurations reachable under `next`.
fn reachable<C: Clone + Eq + std::hash::Hash>(
    start: &C,
    cap: usize,
    next: impl Fn(&C) -> Vec<C>,
) -> Vec<C> {
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start.clone());
    while let Some(c) = queue.pop_front() {
        if order.len() >= cap {
            break;
        }
        for n in next(&c) {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
        order.push(c);
    }
    order
}

pub fn reachable_conc(start: &SeqConfig, cap: usize) -> Vec<SeqConfig> {
    reachable(start, cap, |c| successors(c).into_iter().map(|(_, n)| n).collect())
}

pub fn reachable_net(start: &NetConfig, cap: usize) -> Vec<NetConfig> {
    reachable(start, cap, |c| net_successors(c).into_iter().map(|(_, n)| n).collect())
}

/// Configurations reachable in at most `depth` concurrent steps.
fn within(start: &SeqConfig, depth: usize) -> HashSet<SeqConfig> {
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for c in &frontier {
            for (_, n) in successors(c) {
                if seen.len() >= SEARCH_CAP {
                    return seen;
                }
                if seen.insert(n.clone()) {
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    seen
}

fn start(inst: &Instance) -> SeqConfig {
    SeqConfig::new(inst.chor.clone(), inst.state.clone())
}

/// Terminated or reducible, under all three semantics.
pub fn progress(inst: &Instance, b: &Bounds) -> Outcome {
    let cfg = start(inst);
    let (t, end) = run_seq(&cfg, b.fuel);
    if t.status == Status::Deadlocked {
        return Outcome::Fail(format!(
            "sequential run stuck after {} steps at\n{}",
            t.steps.len(),
            print_chor(&end.chor)
        ));
    }
    for c in reachable_conc(&cfg, b.max_configs) {
        if !is_terminated(&c.chor) && enabled_conc(&c).is_empty() {
            return Outcome::Fail(format!("concurrent configuration stuck:\n{}", print_chor(&c.chor)));
        }
    }
    for seed in 0..3 {
        let (t, end) = run_conc(&cfg, seed, b.fuel);
        if t.status == Status::Deadlocked {
            return Outcome::Fail(format!(
                "concurrent run (seed {seed}) stuck at\n{}",
                print_chor(&end.chor)
            ));
        }
    }
    if let Ok(net) = project(&inst.chor) {
        if let Some(stuck) = stuck_network(&NetConfig::new(net, inst.state.clone()), b.max_configs) {
            return Outcome::Fail(format!("projected network stuck:\n{}", print_network(&stuck)));
        }
    }
    Outcome::Pass
}

/// A reachable, non-terminated network configuration with no redex.
pub fn stuck_network(cfg: &NetConfig, cap: usize) -> Option<Network> {
    reachable_net(cfg, cap)
        .into_iter()
        .find(|c| !is_terminated_net(&c.net) && enabled_net(c).is_empty())
        .map(|c| c.net)
}

fn joins(a: &(TransitionLabel, SeqConfig), b: &(TransitionLabel, SeqConfig), depth: usize) -> bool {
    if a.1 == b.1 {
        return true;
    }
    let after = |c: &SeqConfig, l: &TransitionLabel| {
        successors(c)
            .into_iter()
            .find(|(m, _)| m == l)
            .map(|(_, n)| n)
    };
    if let (Some(x), Some(y)) = (after(&a.1, &b.0), after(&b.1, &a.0)) {
        if x == y {
            return true;
        }
    }
    let from_a = within(&a.1, depth);
    within(&b.1, depth).iter().any(|c| from_a.contains(c))
}

/// Every pair of one-step successors rejoins.
pub fn confluence(inst: &Instance, b: &Bounds) -> Outcome {
    let depth = b.join(&inst.chor);
    for c in reachable_conc(&start(inst), b.max_configs) {
        let succ = successors(&c);
        for i in 0..succ.len() {
            for j in i + 1..succ.len() {
                if !joins(&succ[i], &succ[j], depth) {
                    return Outcome::Fail(format!(
                        "steps `{}` and `{}` from\n{}\ndo not rejoin within {depth} steps",
                        succ[i].0,
                        succ[j].0,
                        print_chor(&c.chor)
                    ));
                }
            }
        }
    }
    Outcome::Pass
}

/// Fires the atoms of one sequential step one at a time, in some order,
/// and checks that the result is `target`.
fn replay(c: &SeqConfig, remaining: &mut Vec<TransitionLabel>, target: &SeqConfig) -> bool {
    if remaining.is_empty() {
        return c == target;
    }
    for (l, n) in successors(c) {
        if let Some(i) = remaining.iter().position(|a| *a == l) {
            let a = remaining.remove(i);
            if replay(&n, remaining, target) {
                return true;
            }
            remaining.insert(i, a);
        }
    }
    false
}

/// Whether `c1` (one concurrent step from `c`) reaches, by concurrent
/// steps, a configuration that `c` reaches by one to `depth` sequential
/// steps. The concurrent side may take as many steps as those sequential
/// steps contain interactions.
fn closes(c: &SeqConfig, c1: &SeqConfig, depth: usize) -> bool {
    let mut chain = HashSet::new();
    let mut budget = 0;
    let mut s = c.clone();
    for _ in 0..depth {
        match step_seq(&s) {
            Some((l, n)) => {
                budget += l.atoms().len();
                chain.insert(n.clone());
                s = n;
            }
            None => break,
        }
    }
    // Completing the earliest pending interactions first is almost always
    // the shortest way back to a sequential configuration.
    let mut cur = c1.clone();
    for _ in 0..=budget {
        if chain.contains(&cur) {
            return true;
        }
        match enabled_conc(&cur).first() {
            Some(r) => cur = apply_redex(&cur, r).expect("enumerated redex applies").1,
            None => break,
        }
    }
    within(c1, budget).iter().any(|x| chain.contains(x))
}

/// Both directions of the correspondence between the two choreography
/// semantics.
pub fn seq_conc(inst: &Instance, b: &Bounds) -> Outcome {
    let cfg = start(inst);
    let mut c = cfg.clone();
    for _ in 0..b.fuel {
        let Some((l, n)) = step_seq(&c) else { break };
        if !replay(&c, &mut l.atoms(), &n) {
            return Outcome::Fail(format!(
                "sequential step `{l}` from\n{}\nhas no concurrent replay",
                print_chor(&c.chor)
            ));
        }
        c = n;
    }
    let depth = b.closure(&inst.chor);
    for c in reachable_conc(&cfg, b.max_configs) {
        for (l, c1) in successors(&c) {
            if !closes(&c, &c1, depth) && !closes(&c, &c1, 2 * depth) {
                return Outcome::Inconclusive(format!(
                    "concurrent step `{l}` from\n{}\nnot closed within {} sequential steps",
                    print_chor(&c.chor),
                    2 * depth
                ));
            }
        }
    }
    Outcome::Pass
}

/// Drives `n` through the atoms of one choreography step and returns a
/// resulting configuration that `projected` prunes, with state `state`.
fn schedule(
    n: &NetConfig,
    remaining: &mut Vec<TransitionLabel>,
    projected: &Network,
    state: &State,
) -> Option<NetConfig> {
    if remaining.is_empty() {
        return (n.state == *state && prunes(projected, &n.net)).then(|| n.clone());
    }
    for (l, m) in net_successors(n) {
        if let Some(i) = remaining.iter().position(|a| *a == l) {
            let a = remaining.remove(i);
            if let Some(found) = schedule(&m, remaining, projected, state) {
                return Some(found);
            }
            remaining.insert(i, a);
        }
    }
    None
}

/// Lockstep simulation of a choreography and its projection.
pub fn epp(inst: &Instance, b: &Bounds) -> Outcome {
    let Ok(net) = project(&inst.chor) else {
        return Outcome::Skip;
    };
    let mut c = start(inst);
    let mut n = NetConfig::new(net, inst.state.clone());
    if let Some(stuck) = stuck_network(&n, b.max_configs) {
        return Outcome::Fail(format!("projected network stuck:\n{}", print_network(&stuck)));
    }
    for _ in 0..b.fuel {
        if is_terminated(&c.chor) {
            if !is_terminated_net(&n.net) {
                return Outcome::Fail(format!(
                    "choreography terminated but the network has\n{}",
                    print_network(&n.net)
                ));
            }
            if n.state != c.state {
                return Outcome::Fail("final states differ".to_string());
            }
            return Outcome::Pass;
        }
        let net_steps = net_successors(&n);
        if net_steps.is_empty() {
            return Outcome::Fail(format!("network stuck:\n{}", print_network(&n.net)));
        }
        let chor_steps = successors(&c);
        for (l, n2) in &net_steps {
            let matched = chor_steps.iter().any(|(m, c2)| {
                m == l
                    && c2.state == n2.state
                    && project(&c2.chor).is_ok_and(|p| prunes(&p, &n2.net))
            });
            if !matched {
                return Outcome::Fail(format!(
                    "network step `{l}` from\n{}\nhas no matching choreography step from\n{}",
                    print_network(&n.net),
                    print_chor(&c.chor)
                ));
            }
        }
        let Some((l, c2)) = step_seq(&c) else {
            return Outcome::Fail(format!("choreography stuck:\n{}", print_chor(&c.chor)));
        };
        let projected = match project(&c2.chor) {
            Ok(p) => p,
            Err(e) => return Outcome::Fail(format!("reduct does not project: {e}")),
        };
        match schedule(&n, &mut l.atoms(), &projected, &c2.state) {
            Some(next) => n = next,
            None => {
                return Outcome::Fail(format!(
                    "choreography step `{l}` from\n{}\ncannot be matched by\n{}",
                    print_chor(&c.chor),
                    print_network(&n.net)
                ))
            }
        }
        c = c2;
    }
    Outcome::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_chor, parse_network, parse_state};

    fn inst(src: &str, st: &str) -> Instance {
        Instance {
            seed: 0,
            chor: parse_chor(src).unwrap(),
            state: parse_state(st).unwrap(),
        }
    }

    const SAMPLES: [&str; 5] = [
        "{p.x -> q.u, q.x -> p.v}",
        "{p.e0 -> s0.y0, p.e1 -> s1.y1}; {s0.y0 + 1 -> p.x0, s1.y1 + 1 -> p.x1}",
        "if p.x < 2 then { p -> q[L]; p.x -> q.x } else { p -> q[R]; q.y -> p.y }",
        "def X = { p.x -> q.y; {q -> r[L]}; r.z -> p.x; X } in { X }",
        "{p -> q[L], p -> r[L]}; {q.a -> r.b, p.c -> s.d}; if r.b then { r -> s[L]; s.d -> p.e } else { r -> s[R]; s.d -> p.e }",
    ];

    #[test]
    fn properties_hold_on_samples() {
        let b = Bounds::default();
        for src in SAMPLES {
            let i = inst(src, "p.x = 1\nq.x = 2\nr.b = true");
            assert_eq!(progress(&i, &b), Outcome::Pass, "{src}");
            assert_eq!(confluence(&i, &b), Outcome::Pass, "{src}");
            assert_eq!(seq_conc(&i, &b), Outcome::Pass, "{src}");
            assert_eq!(epp(&i, &b), Outcome::Pass, "{src}");
        }
    }

    #[test]
    fn unprojectable_is_skipped() {
        let i = inst("if p.e then { p.e2 -> q.x } else { 0 }", "");
        assert_eq!(epp(&i, &Bounds::default()), Outcome::Skip);
    }

    #[test]
    fn hand_written_deadlock_is_flagged() {
        let n = NetConfig::new(parse_network("p |> q?x | q |> p?y").unwrap(), State::new());
        assert!(stuck_network(&n, 10).is_some());
    }
}
