//! Seeded random choreographies and memory states.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ast::{
    pn_chor, BinOp, Choreography, Com, Expr, Label, Multicom, Multisel, ProcName, RecVar, Sel,
    State, Value, VarName,
};
use crate::epp::{annotate, project};
use crate::wf::{is_wf_multicom, is_wf_multisel};

const ATTEMPTS: usize = 64;
const NAMES: [&str; 8] = ["p", "q", "r", "s", "t", "u", "v", "w"];
const VARS: [&str; 3] = ["x", "y", "z"];

/// Relative weights of the constructs picked at each position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Weights {
    pub com: u32,
    pub sel: u32,
    pub cond: u32,
    pub def: u32,
    pub call: u32,
    pub end: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            com: 6,
            sel: 2,
            cond: 2,
            def: 1,
            call: 1,
            end: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: usize,
    pub max_group_size: usize,
    /// Number of distinct processes to draw from.
    pub procs: usize,
    pub weights: Weights,
    /// Insert selections after every conditional and resample until the
    /// result projects.
    pub require_projectable: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_depth: 4,
            max_group_size: 4,
            procs: 5,
            weights: Weights::default(),
            require_projectable: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no projectable choreography after {0} attempts")]
    Exhausted(usize),
}

pub fn proc_name(i: usize) -> ProcName {
    match NAMES.get(i) {
        Some(n) => ProcName::new(*n),
        None => ProcName::new(format!("p{i}")),
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    cfg: &'a GenConfig,
    next_name: usize,
}

#[derive(Clone, Copy)]
enum Pick {
    Com,
    Sel,
    Cond,
    Def,
    Call,
    End,
}

impl Gen<'_> {
    fn proc(&mut self) -> ProcName {
        proc_name(self.rng.gen_range(0..self.cfg.procs))
    }

    fn two_procs(&mut self) -> (ProcName, ProcName) {
        let a = self.rng.gen_range(0..self.cfg.procs);
        let mut b = self.rng.gen_range(0..self.cfg.procs - 1);
        if b >= a {
            b += 1;
        }
        (proc_name(a), proc_name(b))
    }

    fn var(&mut self) -> VarName {
        VarName::new(*VARS.choose(self.rng).expect("nonempty"))
    }

    fn expr(&mut self) -> Expr {
        match self.rng.gen_range(0..5) {
            0 | 1 => Expr::Var(self.var()),
            2 => Expr::Int(self.rng.gen_range(0..5)),
            3 => Expr::bin(BinOp::Add, Expr::Var(self.var()), Expr::Int(1)),
            _ => Expr::bin(BinOp::Lt, Expr::Var(self.var()), Expr::Var(self.var())),
        }
    }

    fn guard(&mut self) -> Expr {
        match self.rng.gen_range(0..3) {
            0 => Expr::bin(BinOp::Lt, Expr::Var(self.var()), Expr::Int(2)),
            1 => Expr::bin(BinOp::Eq, Expr::Var(self.var()), Expr::Var(self.var())),
            _ => Expr::Not(Box::new(Expr::bin(
                BinOp::Lt,
                Expr::Var(self.var()),
                Expr::Int(1),
            ))),
        }
    }

    fn size(&mut self) -> usize {
        self.rng.gen_range(1..=self.cfg.max_group_size.max(1))
    }

    fn multicom(&mut self) -> Multicom {
        let want = self.size();
        let mut h = Multicom::new();
        for _ in 0..want * 6 {
            if h.len() == want {
                break;
            }
            let (s, r) = self.two_procs();
            let com = Com {
                sender: s,
                expr: self.expr(),
                receiver: r,
                var: self.var(),
            };
            let mut next = h.clone();
            if next.insert(com) && is_wf_multicom(&next) {
                h = next;
            }
        }
        h
    }

    fn multisel(&mut self) -> Multisel {
        let want = self.size();
        let mut phi = Multisel::new();
        for _ in 0..want * 6 {
            if phi.len() == want {
                break;
            }
            let (s, r) = self.two_procs();
            let label = Label::new(if self.rng.gen_bool(0.5) { "L" } else { "R" });
            let mut next = phi.clone();
            if next.insert(Sel {
                sender: s,
                receiver: r,
                label,
            }) && is_wf_multisel(&next)
            {
                phi = next;
            }
        }
        phi
    }

    fn leaf(&mut self, scope: &[RecVar]) -> Choreography {
        match scope.choose(self.rng) {
            Some(x) if self.rng.gen_bool(0.5) => Choreography::Call {
                name: x.clone(),
                procs: BTreeSet::new(),
            },
            _ => Choreography::End,
        }
    }

    fn pick(&mut self, scope: &[RecVar]) -> Pick {
        let w = &self.cfg.weights;
        let call = if scope.is_empty() { 0 } else { w.call };
        let options = [
            (Pick::Com, w.com),
            (Pick::Sel, w.sel),
            (Pick::Cond, w.cond),
            (Pick::Def, w.def),
            (Pick::Call, call),
            (Pick::End, w.end),
        ];
        let total: u32 = options.iter().map(|(_, w)| w).sum();
        if total == 0 {
            return Pick::End;
        }
        let mut n = self.rng.gen_range(0..total);
        for (p, w) in options {
            if n < w {
                return p;
            }
            n -= w;
        }
        Pick::End
    }

    fn chor(&mut self, depth: usize, scope: &mut Vec<RecVar>) -> Choreography {
        if depth == 0 {
            return self.leaf(scope);
        }
        match self.pick(scope) {
            Pick::Com => Choreography::MCom(self.multicom(), Box::new(self.chor(depth - 1, scope))),
            Pick::Sel => Choreography::MSel(self.multisel(), Box::new(self.chor(depth - 1, scope))),
            Pick::Cond => Choreography::If {
                proc: self.proc(),
                guard: self.guard(),
                then: Box::new(self.chor(depth - 1, scope)),
                els: Box::new(self.chor(depth - 1, scope)),
            },
            Pick::Def => {
                let name = RecVar::new(format!("X{}", self.next_name));
                self.next_name += 1;
                scope.push(name.clone());
                // Bodies start with a communication, so recursion is guarded.
                let h = self.multicom();
                let body = Choreography::MCom(h, Box::new(self.chor(depth.saturating_sub(2), scope)));
                let cont = self.chor(depth - 1, scope);
                scope.pop();
                Choreography::Def {
                    name,
                    procs: BTreeSet::new(),
                    body: Box::new(body),
                    cont: Box::new(cont),
                }
            }
            Pick::Call => self.leaf(scope),
            Pick::End => Choreography::End,
        }
    }
}

/// Prefixes both branches of every conditional with a selection from the
/// decider to every other process involved in either branch. Expects
/// annotations to be filled in, so that calls count their processes.
pub fn broadcast_selections(c: &Choreography) -> Choreography {
    match c {
        Choreography::MCom(h, k) => Choreography::MCom(h.clone(), Box::new(broadcast_selections(k))),
        Choreography::MSel(phi, k) => Choreography::MSel(phi.clone(), Box::new(broadcast_selections(k))),
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => {
            let then = broadcast_selections(then);
            let els = broadcast_selections(els);
            let mut involved = pn_chor(&then);
            involved.extend(pn_chor(&els));
            involved.remove(proc);
            let wrap = |label: &str, k: Choreography| {
                if involved.is_empty() {
                    return k;
                }
                let phi = involved
                    .iter()
                    .map(|q| Sel {
                        sender: proc.clone(),
                        receiver: q.clone(),
                        label: Label::new(label),
                    })
                    .collect();
                Choreography::MSel(phi, Box::new(k))
            };
            Choreography::If {
                proc: proc.clone(),
                guard: guard.clone(),
                then: Box::new(wrap("L", then)),
                els: Box::new(wrap("R", els)),
            }
        }
        Choreography::Def {
            name,
            procs,
            body,
            cont,
        } => Choreography::Def {
            name: name.clone(),
            procs: procs.clone(),
            body: Box::new(broadcast_selections(body)),
            cont: Box::new(broadcast_selections(cont)),
        },
        Choreography::Call { .. } | Choreography::End => c.clone(),
    }
}

pub fn strip_annotations(c: &Choreography) -> Choreography {
    match c {
        Choreography::MCom(h, k) => Choreography::MCom(h.clone(), Box::new(strip_annotations(k))),
        Choreography::MSel(phi, k) => Choreography::MSel(phi.clone(), Box::new(strip_annotations(k))),
        Choreography::If {
            proc,
            guard,
            then,
            els,
        } => Choreography::If {
            proc: proc.clone(),
            guard: guard.clone(),
            then: Box::new(strip_annotations(then)),
            els: Box::new(strip_annotations(els)),
        },
        Choreography::Def {
            name, body, cont, ..
        } => Choreography::Def {
            name: name.clone(),
            procs: BTreeSet::new(),
            body: Box::new(strip_annotations(body)),
            cont: Box::new(strip_annotations(cont)),
        },
        Choreography::Call { name, .. } => Choreography::Call {
            name: name.clone(),
            procs: BTreeSet::new(),
        },
        Choreography::End => Choreography::End,
    }
}

/// A well-formed choreography; projectable when the configuration asks for
/// it.
pub fn gen_chor(cfg: &GenConfig) -> Result<Choreography, GenError> {
    if cfg.procs < 2 {
        return Err(GenError::InvalidConfig("at least two processes are needed"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..ATTEMPTS {
        let mut g = Gen {
            rng: &mut rng,
            cfg,
            next_name: 0,
        };
        let c = g.chor(cfg.max_depth, &mut Vec::new());
        if !cfg.require_projectable {
            return Ok(c);
        }
        let c = strip_annotations(&broadcast_selections(&annotate(&c)));
        if project(&c).is_ok() {
            return Ok(c);
        }
    }
    Err(GenError::Exhausted(ATTEMPTS))
}

/// Small integers in `x`, `y`, `z` of every process in `c`.
pub fn gen_state(c: &Choreography, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut s = State::new();
    for p in pn_chor(c) {
        for x in VARS {
            s.set(p.clone(), VarName::new(x), Value::Int(rng.gen_range(0..4)));
        }
    }
    s
}
