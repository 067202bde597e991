//! Term languages: expressions, choreographies, process behaviours, networks,
//! and the memory state shared by all of them.
//!
//! Grouped interactions (multicoms and multisels) have set semantics. They are
//! stored as ordered sets so that equality, hashing and printing do not depend
//! on the order in which elements were written.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

macro_rules! identifier {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            /// Panics if `s` is not a valid identifier. Use [`is_identifier`]
            /// to validate untrusted input first.
            pub fn new(s: impl Into<String>) -> Self {
                let s = s.into();
                assert!(is_identifier(&s), "invalid identifier {s:?}");
                $name(s)
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name::new(s)
            }
        }
    };
}

identifier!(
    /// Name of a process (`p`, `q`, `s1`, ...).
    ProcName
);
identifier!(
    /// Name of a memory cell local to a process.
    VarName
);
identifier!(
    /// Selection label.
    Label
);
identifier!(
    /// Name of a recursive procedure.
    RecVar
);

/// Letters, digits and underscores, not starting with a digit.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Eq,
    And,
    Or,
    Concat,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Eq => "=",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Concat => "++",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Eq => 3,
            BinOp::Add | BinOp::Sub | BinOp::Concat => 4,
            BinOp::Mul => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Var(VarName),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    /// Uninterpreted constructor, e.g. `priceof(t)`. Arity zero is written `c()`.
    Ctor(String, Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(VarName::new(name))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::BinOp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn ctor(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Ctor(name.to_string(), args)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    Tagged(String, Vec<Value>),
    #[default]
    Unit,
}

/// Local store of a single process.
pub type Store = BTreeMap<VarName, Value>;

/// Evaluates `e` against a process-local store. Total: type mismatches and
/// unbound variables yield `Unit`, and integer arithmetic wraps.
pub fn eval(e: &Expr, local: &Store) -> Value {
    match e {
        Expr::Int(n) => Value::Int(*n),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Str(s) => Value::Str(s.clone()),
        Expr::Var(x) => local.get(x).cloned().unwrap_or_default(),
        Expr::Not(inner) => match eval(inner, local) {
            Value::Bool(b) => Value::Bool(!b),
            _ => Value::Unit,
        },
        Expr::Ctor(name, args) => {
            Value::Tagged(name.clone(), args.iter().map(|a| eval(a, local)).collect())
        }
        Expr::BinOp(op, lhs, rhs) => {
            let l = eval(lhs, local);
            let r = eval(rhs, local);
            match (op, l, r) {
                (BinOp::Eq, l, r) => Value::Bool(l == r),
                (BinOp::Add, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_add(b)),
                (BinOp::Sub, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_sub(b)),
                (BinOp::Mul, Value::Int(a), Value::Int(b)) => Value::Int(a.wrapping_mul(b)),
                (BinOp::Lt, Value::Int(a), Value::Int(b)) => Value::Bool(a < b),
                (BinOp::Lt, Value::Str(a), Value::Str(b)) => Value::Bool(a < b),
                (BinOp::And, Value::Bool(a), Value::Bool(b)) => Value::Bool(a && b),
                (BinOp::Or, Value::Bool(a), Value::Bool(b)) => Value::Bool(a || b),
                (BinOp::Concat, Value::Str(a), Value::Str(b)) => Value::Str(a + &b),
                _ => Value::Unit,
            }
        }
    }
}

/// Variables read by `e`. Constructor names are not variables.
pub fn free_vars(e: &Expr) -> BTreeSet<VarName> {
    let mut out = BTreeSet::new();
    collect_vars(e, &mut out);
    out
}

fn collect_vars(e: &Expr, out: &mut BTreeSet<VarName>) {
    match e {
        Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) => {}
        Expr::Var(x) => {
            out.insert(x.clone());
        }
        Expr::BinOp(_, l, r) => {
            collect_vars(l, out);
            collect_vars(r, out);
        }
        Expr::Not(inner) => collect_vars(inner, out),
        Expr::Ctor(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

/// `sender.expr -> receiver.var`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Com {
    pub sender: ProcName,
    pub expr: Expr,
    pub receiver: ProcName,
    pub var: VarName,
}

impl Com {
    pub fn new(sender: &str, expr: Expr, receiver: &str, var: &str) -> Com {
        Com {
            sender: ProcName::new(sender),
            expr,
            receiver: ProcName::new(receiver),
            var: VarName::new(var),
        }
    }
}

/// `sender -> receiver[label]`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sel {
    pub sender: ProcName,
    pub receiver: ProcName,
    pub label: Label,
}

impl Sel {
    pub fn new(sender: &str, receiver: &str, label: &str) -> Sel {
        Sel {
            sender: ProcName::new(sender),
            receiver: ProcName::new(receiver),
            label: Label::new(label),
        }
    }
}

pub type Multicom = BTreeSet<Com>;
pub type Multisel = BTreeSet<Sel>;

/// Processes occurring in a communication of `h`.
pub fn pn_multicom(h: &Multicom) -> BTreeSet<ProcName> {
    h.iter()
        .flat_map(|c| [c.sender.clone(), c.receiver.clone()])
        .collect()
}

/// Processes occurring as selection targets in `phi`.
pub fn tn_multisel(phi: &Multisel) -> BTreeSet<ProcName> {
    phi.iter().map(|s| s.receiver.clone()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choreography {
    MCom(Multicom, Box<Choreography>),
    MSel(Multisel, Box<Choreography>),
    If {
        proc: ProcName,
        guard: Expr,
        then: Box<Choreography>,
        els: Box<Choreography>,
    },
    /// `def name = body in cont`. `procs` is the annotation filled by
    /// [`crate::epp::annotate`]; empty means "not annotated yet".
    Def {
        name: RecVar,
        procs: BTreeSet<ProcName>,
        body: Box<Choreography>,
        cont: Box<Choreography>,
    },
    Call {
        name: RecVar,
        procs: BTreeSet<ProcName>,
    },
    End,
}

impl Choreography {
    pub fn mcom(coms: impl IntoIterator<Item = Com>, cont: Choreography) -> Choreography {
        Choreography::MCom(coms.into_iter().collect(), Box::new(cont))
    }

    pub fn msel(sels: impl IntoIterator<Item = Sel>, cont: Choreography) -> Choreography {
        Choreography::MSel(sels.into_iter().collect(), Box::new(cont))
    }

    pub fn cond(proc: &str, guard: Expr, then: Choreography, els: Choreography) -> Choreography {
        Choreography::If {
            proc: ProcName::new(proc),
            guard,
            then: Box::new(then),
            els: Box::new(els),
        }
    }

    pub fn def(name: &str, body: Choreography, cont: Choreography) -> Choreography {
        Choreography::Def {
            name: RecVar::new(name),
            procs: BTreeSet::new(),
            body: Box::new(body),
            cont: Box::new(cont),
        }
    }

    pub fn call(name: &str) -> Choreography {
        Choreography::Call {
            name: RecVar::new(name),
            procs: BTreeSet::new(),
        }
    }

    /// Number of AST nodes: every constructor, every group element, and End.
    pub fn size(&self) -> usize {
        match self {
            Choreography::MCom(h, k) => 1 + h.len() + k.size(),
            Choreography::MSel(phi, k) => 1 + phi.len() + k.size(),
            Choreography::If { then, els, .. } => 1 + then.size() + els.size(),
            Choreography::Def { body, cont, .. } => 1 + body.size() + cont.size(),
            Choreography::Call { .. } | Choreography::End => 1,
        }
    }

    /// Largest multicom or multisel anywhere in the term.
    pub fn max_group_size(&self) -> usize {
        match self {
            Choreography::MCom(h, k) => h.len().max(k.max_group_size()),
            Choreography::MSel(phi, k) => phi.len().max(k.max_group_size()),
            Choreography::If { then, els, .. } => then.max_group_size().max(els.max_group_size()),
            Choreography::Def { body, cont, .. } => {
                body.max_group_size().max(cont.max_group_size())
            }
            Choreography::Call { .. } | Choreography::End => 0,
        }
    }
}

/// Processes occurring in interactions, conditionals and procedure annotations.
pub fn pn_chor(c: &Choreography) -> BTreeSet<ProcName> {
    let mut out = BTreeSet::new();
    collect_pn(c, &mut out);
    out
}

fn collect_pn(c: &Choreography, out: &mut BTreeSet<ProcName>) {
    match c {
        Choreography::MCom(h, k) => {
            out.extend(pn_multicom(h));
            collect_pn(k, out);
        }
        Choreography::MSel(phi, k) => {
            for s in phi {
                out.insert(s.sender.clone());
                out.insert(s.receiver.clone());
            }
            collect_pn(k, out);
        }
        Choreography::If {
            proc, then, els, ..
        } => {
            out.insert(proc.clone());
            collect_pn(then, out);
            collect_pn(els, out);
        }
        Choreography::Def {
            procs, body, cont, ..
        } => {
            out.extend(procs.iter().cloned());
            collect_pn(body, out);
            collect_pn(cont, out);
        }
        Choreography::Call { procs, .. } => out.extend(procs.iter().cloned()),
        Choreography::End => {}
    }
}

/// A single send or receive inside a behaviour group.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Theta {
    Send { to: ProcName, expr: Expr },
    Recv { from: ProcName, var: VarName },
}

impl Theta {
    pub fn send(to: &str, expr: Expr) -> Theta {
        Theta::Send {
            to: ProcName::new(to),
            expr,
        }
    }

    pub fn recv(from: &str, var: &str) -> Theta {
        Theta::Recv {
            from: ProcName::new(from),
            var: VarName::new(var),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Behaviour {
    Actions(BTreeSet<Theta>, Box<Behaviour>),
    /// Outgoing selections, keyed by target; targets are distinct by construction.
    Selects(BTreeMap<ProcName, Label>, Box<Behaviour>),
    Branch {
        from: ProcName,
        branches: BTreeMap<Label, Behaviour>,
    },
    If {
        guard: Expr,
        then: Box<Behaviour>,
        els: Box<Behaviour>,
    },
    Def {
        name: RecVar,
        body: Box<Behaviour>,
        cont: Box<Behaviour>,
    },
    Call(RecVar),
    End,
}

impl Behaviour {
    /// Builds an action group, dropping it when empty.
    pub fn actions(thetas: BTreeSet<Theta>, cont: Behaviour) -> Behaviour {
        if thetas.is_empty() {
            cont
        } else {
            Behaviour::Actions(thetas, Box::new(cont))
        }
    }

    /// Builds a selection group, dropping it when empty.
    pub fn selects(sels: BTreeMap<ProcName, Label>, cont: Behaviour) -> Behaviour {
        if sels.is_empty() {
            cont
        } else {
            Behaviour::Selects(sels, Box::new(cont))
        }
    }

    /// Builds a definition, collapsing it when the continuation has ended.
    pub fn def(name: RecVar, body: Behaviour, cont: Behaviour) -> Behaviour {
        if cont == Behaviour::End {
            Behaviour::End
        } else {
            Behaviour::Def {
                name,
                body: Box::new(body),
                cont: Box::new(cont),
            }
        }
    }

    pub fn branch(from: &str, branches: impl IntoIterator<Item = (&'static str, Behaviour)>) -> Behaviour {
        Behaviour::Branch {
            from: ProcName::new(from),
            branches: branches
                .into_iter()
                .map(|(l, b)| (Label::new(l), b))
                .collect(),
        }
    }

    /// Whether `X` occurs free (not shadowed by an inner definition).
    pub fn calls(&self, x: &RecVar) -> bool {
        match self {
            Behaviour::Actions(_, k) | Behaviour::Selects(_, k) => k.calls(x),
            Behaviour::Branch { branches, .. } => branches.values().any(|b| b.calls(x)),
            Behaviour::If { then, els, .. } => then.calls(x) || els.calls(x),
            Behaviour::Def { name, body, cont } => {
                name != x && (body.calls(x) || cont.calls(x))
            }
            Behaviour::Call(y) => y == x,
            Behaviour::End => false,
        }
    }
}

/// Parallel composition of named processes; the empty map is the inactive network.
pub type Network = BTreeMap<ProcName, Behaviour>;

/// Memory of all processes. Absent cells read as `Unit`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    cells: BTreeMap<ProcName, Store>,
}

impl State {
    pub fn new() -> State {
        State::default()
    }

    pub fn get(&self, p: &ProcName, x: &VarName) -> Value {
        self.cells
            .get(p)
            .and_then(|s| s.get(x))
            .cloned()
            .unwrap_or_default()
    }

    /// Local store of `p`; empty if `p` has no cells.
    pub fn local(&self, p: &ProcName) -> &Store {
        static EMPTY: Store = BTreeMap::new();
        self.cells.get(p).unwrap_or(&EMPTY)
    }

    pub fn set(&mut self, p: ProcName, x: VarName, v: Value) {
        self.cells.entry(p).or_default().insert(x, v);
    }

    /// Functional update.
    pub fn with(&self, p: ProcName, x: VarName, v: Value) -> State {
        let mut next = self.clone();
        next.set(p, x, v);
        next
    }

    pub fn contains(&self, p: &ProcName, x: &VarName) -> bool {
        self.cells.get(p).is_some_and(|s| s.contains_key(x))
    }

    pub fn len(&self) -> usize {
        self.cells.values().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProcName, &VarName, &Value)> {
        self.cells
            .iter()
            .flat_map(|(p, s)| s.iter().map(move |(x, v)| (p, x, v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(entries: &[(&str, Value)]) -> Store {
        entries
            .iter()
            .map(|(x, v)| (VarName::new(*x), v.clone()))
            .collect()
    }

    #[test]
    fn eval_arithmetic_and_lookup() {
        let e = Expr::bin(BinOp::Add, Expr::Int(1), Expr::Int(2));
        assert_eq!(eval(&e, &Store::new()), Value::Int(3));
        assert_eq!(
            eval(&Expr::var("x"), &store(&[("x", Value::Int(5))])),
            Value::Int(5)
        );
    }

    #[test]
    fn eval_ctor_is_symbolic() {
        let e = Expr::ctor("priceof", vec![Expr::var("t")]);
        let v = eval(&e, &store(&[("t", Value::Str("item".into()))]));
        assert_eq!(v, Value::Tagged("priceof".into(), vec![Value::Str("item".into())]));
    }

    #[test]
    fn eval_is_total() {
        assert_eq!(eval(&Expr::var("nope"), &Store::new()), Value::Unit);
        let mixed = Expr::bin(BinOp::Add, Expr::Int(1), Expr::Bool(true));
        assert_eq!(eval(&mixed, &Store::new()), Value::Unit);
        let overflow = Expr::bin(BinOp::Add, Expr::Int(i64::MAX), Expr::Int(1));
        assert_eq!(eval(&overflow, &Store::new()), Value::Int(i64::MIN));
        let eq = Expr::bin(BinOp::Eq, Expr::ctor("a", vec![]), Expr::ctor("a", vec![]));
        assert_eq!(eval(&eq, &Store::new()), Value::Bool(true));
    }

    #[test]
    fn free_vars_examples() {
        let e = Expr::bin(
            BinOp::Add,
            Expr::var("x"),
            Expr::ctor("priceof", vec![Expr::var("y")]),
        );
        let fv: Vec<_> = free_vars(&e).into_iter().map(|v| v.to_string()).collect();
        assert_eq!(fv, ["x", "y"]);
        assert!(free_vars(&Expr::bin(BinOp::Add, Expr::Int(1), Expr::Int(2))).is_empty());
        let xx = Expr::bin(BinOp::Concat, Expr::var("x"), Expr::var("x"));
        assert_eq!(free_vars(&xx).len(), 1);
    }

    #[test]
    fn pn_and_tn() {
        let h: Multicom = [
            Com::new("p", Expr::var("x"), "q", "y"),
            Com::new("r", Expr::var("z"), "p", "w"),
        ]
        .into_iter()
        .collect();
        let names: Vec<_> = pn_multicom(&h).into_iter().map(|p| p.to_string()).collect();
        assert_eq!(names, ["p", "q", "r"]);
        assert!(pn_multicom(&Multicom::new()).is_empty());

        let phi: Multisel = [Sel::new("p", "q", "L"), Sel::new("r", "s", "R")]
            .into_iter()
            .collect();
        let targets: Vec<_> = tn_multisel(&phi).into_iter().map(|p| p.to_string()).collect();
        assert_eq!(targets, ["q", "s"]);
        assert!(tn_multisel(&Multisel::new()).is_empty());
    }

    #[test]
    fn pn_chor_examples() {
        assert!(pn_chor(&Choreography::End).is_empty());
        let c = Choreography::cond("p", Expr::Bool(true), Choreography::End, Choreography::End);
        assert_eq!(pn_chor(&c).len(), 1);
    }

    #[test]
    fn group_equality_ignores_insertion_order() {
        let a = Com::new("p", Expr::var("x"), "q", "u");
        let b = Com::new("q", Expr::var("x"), "p", "v");
        let c1 = Choreography::mcom([a.clone(), b.clone()], Choreography::End);
        let c2 = Choreography::mcom([b, a], Choreography::End);
        assert_eq!(c1, c2);
    }

    #[test]
    fn state_defaults_to_unit() {
        let s = State::new().with(ProcName::new("p"), VarName::new("x"), Value::Int(1));
        assert_eq!(s.get(&ProcName::new("p"), &VarName::new("x")), Value::Int(1));
        assert_eq!(s.get(&ProcName::new("q"), &VarName::new("x")), Value::Unit);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("s1"));
        assert!(is_identifier("_x"));
        assert!(!is_identifier("1s"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a-b"));
    }
}
