use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Spanned, Tok};
use super::ParseError;
use crate::ast::{
    BinOp, Behaviour, Choreography, Com, Expr, Label, Network, ProcName, RecVar, Sel, State,
    Theta, Value, VarName,
};

const KEYWORDS: &[&str] = &[
    "if", "then", "else", "def", "in", "true", "false", "and", "or", "not",
];

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

enum GroupElem {
    Com(Com),
    Sel(Sel),
}

enum Action {
    Theta(Theta),
    Select(ProcName, Label),
}

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, msg: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError::new(s.line, s.col, msg)
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected `{kw}`, found {}",
                self.peek().describe()
            )))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error_here(format!(
                "expected {what}, found {}",
                other.describe()
            ))),
        }
    }

    fn proc_name(&mut self) -> PResult<ProcName> {
        self.ident("process name").map(ProcName::new)
    }

    fn var_name(&mut self) -> PResult<VarName> {
        self.ident("variable name").map(VarName::new)
    }

    pub(crate) fn finish(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error_here(format!(
                "unexpected {} after end of term",
                self.peek().describe()
            )))
        }
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Lt => BinOp::Lt,
            Tok::Eq => BinOp::Eq,
            Tok::Concat => BinOp::Concat,
            Tok::Ident(s) if s == "and" => BinOp::And,
            Tok::Ident(s) if s == "or" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_keyword("not") {
            self.bump();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn int_literal(&mut self, negative: bool) -> PResult<i64> {
        let Tok::Int(n) = self.peek().clone() else {
            return Err(self.error_here("expected integer literal"));
        };
        let value = if negative {
            -(n as i128)
        } else {
            n as i128
        };
        let value =
            i64::try_from(value).map_err(|_| self.error_here("integer literal out of range"))?;
        self.bump();
        Ok(value)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(_) => Ok(Expr::Int(self.int_literal(false)?)),
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                Ok(Expr::Int(self.int_literal(true)?))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => {
                let name = self.ident("expression")?;
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.expr()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.expr()?);
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Ctor(name, args))
                } else {
                    Ok(Expr::Var(VarName::new(name)))
                }
            }
            other => Err(self.error_here(format!(
                "expected expression, found {}",
                other.describe()
            ))),
        }
    }

    pub(crate) fn value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Int(_) => Ok(Value::Int(self.int_literal(false)?)),
            Tok::Minus => {
                self.bump();
                Ok(Value::Int(self.int_literal(true)?))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s))
            }
            Tok::LParen => {
                self.bump();
                self.expect(Tok::RParen)?;
                Ok(Value::Unit)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Value::Bool(s == "true"))
            }
            Tok::Ident(_) => {
                let name = self.ident("constructor")?;
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    args.push(self.value()?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.value()?);
                    }
                }
                self.expect(Tok::RParen)?;
                Ok(Value::Tagged(name, args))
            }
            other => Err(self.error_here(format!(
                "expected value literal, found {}",
                other.describe()
            ))),
        }
    }

    // ---- choreographies ----

    fn annotation(&mut self) -> PResult<BTreeSet<ProcName>> {
        let mut procs = BTreeSet::new();
        if *self.peek() != Tok::Caret {
            return Ok(procs);
        }
        self.bump();
        self.expect(Tok::LBrace)?;
        if *self.peek() != Tok::RBrace {
            loop {
                let p = self.proc_name()?;
                if !procs.insert(p.clone()) {
                    return Err(self.error_here(format!("duplicate process {p} in annotation")));
                }
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.bump();
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(procs)
    }

    fn braced<T>(&mut self, inner: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.expect(Tok::LBrace)?;
        let v = inner(self)?;
        self.expect(Tok::RBrace)?;
        Ok(v)
    }

    pub(crate) fn chor(&mut self) -> PResult<Choreography> {
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(Choreography::End)
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let proc = self.proc_name()?;
                self.expect(Tok::Dot)?;
                let guard = self.expr()?;
                self.expect_keyword("then")?;
                let then = self.braced(Self::chor)?;
                self.expect_keyword("else")?;
                let els = self.braced(Self::chor)?;
                Ok(Choreography::If {
                    proc,
                    guard,
                    then: Box::new(then),
                    els: Box::new(els),
                })
            }
            Tok::Ident(kw) if kw == "def" => {
                self.bump();
                let name = RecVar::new(self.ident("procedure name")?);
                let procs = self.annotation()?;
                self.expect(Tok::Eq)?;
                let body = self.braced(Self::chor)?;
                self.expect_keyword("in")?;
                let cont = self.braced(Self::chor)?;
                Ok(Choreography::Def {
                    name,
                    procs,
                    body: Box::new(body),
                    cont: Box::new(cont),
                })
            }
            Tok::LBrace => self.chor_group(),
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Dot | Tok::Arrow) => {
                self.chor_group()
            }
            Tok::Ident(_) => {
                let name = RecVar::new(self.ident("procedure call")?);
                let procs = self.annotation()?;
                Ok(Choreography::Call { name, procs })
            }
            other => Err(self.error_here(format!(
                "expected choreography, found {}",
                other.describe()
            ))),
        }
    }

    fn group_elem(&mut self) -> PResult<GroupElem> {
        let sender = self.proc_name()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let receiver = self.proc_name()?;
            self.expect(Tok::LBracket)?;
            let label = Label::new(self.ident("label")?);
            self.expect(Tok::RBracket)?;
            Ok(GroupElem::Sel(Sel {
                sender,
                receiver,
                label,
            }))
        } else {
            self.expect(Tok::Dot)?;
            let expr = self.expr()?;
            self.expect(Tok::Arrow)?;
            let receiver = self.proc_name()?;
            self.expect(Tok::Dot)?;
            let var = self.var_name()?;
            Ok(GroupElem::Com(Com {
                sender,
                expr,
                receiver,
                var,
            }))
        }
    }

    fn chor_group(&mut self) -> PResult<Choreography> {
        let mut elems = Vec::new();
        if *self.peek() == Tok::LBrace {
            self.bump();
            if *self.peek() != Tok::RBrace {
                loop {
                    let at = self.pos;
                    elems.push((at, self.group_elem()?));
                    if *self.peek() != Tok::Comma {
                        break;
                    }
                    self.bump();
                }
            }
            self.expect(Tok::RBrace)?;
        } else {
            let at = self.pos;
            elems.push((at, self.group_elem()?));
        }

        let cont = if *self.peek() == Tok::Semi {
            self.bump();
            self.chor()?
        } else {
            Choreography::End
        };

        let pos_err = |p: &Parser, at: usize, msg: String| {
            let s = &p.toks[at];
            ParseError::new(s.line, s.col, msg)
        };
        match elems.first() {
            None | Some((_, GroupElem::Com(_))) => {
                let mut h = BTreeSet::new();
                for (at, e) in elems {
                    match e {
                        GroupElem::Com(c) => {
                            if !h.insert(c) {
                                return Err(pos_err(self, at, "duplicate communication in group".into()));
                            }
                        }
                        GroupElem::Sel(_) => {
                            return Err(pos_err(self, at, "selection inside a communication group".into()));
                        }
                    }
                }
                Ok(Choreography::MCom(h, Box::new(cont)))
            }
            Some((_, GroupElem::Sel(_))) => {
                let mut phi = BTreeSet::new();
                for (at, e) in elems {
                    match e {
                        GroupElem::Sel(s) => {
                            if !phi.insert(s) {
                                return Err(pos_err(self, at, "duplicate selection in group".into()));
                            }
                        }
                        GroupElem::Com(_) => {
                            return Err(pos_err(self, at, "communication inside a selection group".into()));
                        }
                    }
                }
                Ok(Choreography::MSel(phi, Box::new(cont)))
            }
        }
    }

    // ---- behaviours and networks ----

    pub(crate) fn behaviour(&mut self) -> PResult<Behaviour> {
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(Behaviour::End)
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let guard = self.expr()?;
                self.expect_keyword("then")?;
                let then = self.braced(Self::behaviour)?;
                self.expect_keyword("else")?;
                let els = self.braced(Self::behaviour)?;
                Ok(Behaviour::If {
                    guard,
                    then: Box::new(then),
                    els: Box::new(els),
                })
            }
            Tok::Ident(kw) if kw == "def" => {
                self.bump();
                let name = RecVar::new(self.ident("procedure name")?);
                self.expect(Tok::Eq)?;
                let body = self.braced(Self::behaviour)?;
                self.expect_keyword("in")?;
                let cont = self.braced(Self::behaviour)?;
                Ok(Behaviour::Def {
                    name,
                    body: Box::new(body),
                    cont: Box::new(cont),
                })
            }
            Tok::Ident(_) if *self.peek_at(1) == Tok::Amp => self.branch(),
            Tok::LBrace => self.action_group(),
            Tok::Ident(_)
                if matches!(self.peek_at(1), Tok::Bang | Tok::Question | Tok::LParen) =>
            {
                self.action_group()
            }
            Tok::Ident(_) => Ok(Behaviour::Call(RecVar::new(self.ident("procedure call")?))),
            other => Err(self.error_here(format!(
                "expected behaviour, found {}",
                other.describe()
            ))),
        }
    }

    fn branch(&mut self) -> PResult<Behaviour> {
        let from = self.proc_name()?;
        self.expect(Tok::Amp)?;
        self.expect(Tok::LBrace)?;
        let mut branches = BTreeMap::new();
        loop {
            let label = Label::new(self.ident("label")?);
            if branches.contains_key(&label) {
                return Err(self.error_here(format!("duplicate branch label {label}")));
            }
            self.expect(Tok::Colon)?;
            let b = self.behaviour()?;
            branches.insert(label, b);
            if *self.peek() != Tok::Comma {
                break;
            }
            self.bump();
        }
        self.expect(Tok::RBrace)?;
        Ok(Behaviour::Branch { from, branches })
    }

    fn action(&mut self) -> PResult<Action> {
        let peer = self.proc_name()?;
        match self.bump() {
            Tok::Bang => Ok(Action::Theta(Theta::Send {
                to: peer,
                expr: self.expr()?,
            })),
            Tok::Question => Ok(Action::Theta(Theta::Recv {
                from: peer,
                var: self.var_name()?,
            })),
            Tok::LParen => {
                self.expect(Tok::Plus)?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::LBracket)?;
                let label = Label::new(self.ident("label")?);
                self.expect(Tok::RBracket)?;
                Ok(Action::Select(peer, label))
            }
            _ => {
                self.pos -= 1;
                Err(self.error_here("expected `!`, `?` or `(+)` after process name"))
            }
        }
    }

    fn action_group(&mut self) -> PResult<Behaviour> {
        let mut acts = Vec::new();
        if *self.peek() == Tok::LBrace {
            self.bump();
            if *self.peek() != Tok::RBrace {
                loop {
                    let at = self.pos;
                    acts.push((at, self.action()?));
                    if *self.peek() != Tok::Comma {
                        break;
                    }
                    self.bump();
                }
            }
            self.expect(Tok::RBrace)?;
        } else {
            let at = self.pos;
            acts.push((at, self.action()?));
        }
        let cont = if *self.peek() == Tok::Semi {
            self.bump();
            self.behaviour()?
        } else {
            Behaviour::End
        };

        let pos_err = |p: &Parser, at: usize, msg: &str| {
            let s = &p.toks[at];
            ParseError::new(s.line, s.col, msg)
        };
        match acts.first() {
            None | Some((_, Action::Theta(_))) => {
                let mut thetas = BTreeSet::new();
                for (at, a) in acts {
                    match a {
                        Action::Theta(t) => {
                            if !thetas.insert(t) {
                                return Err(pos_err(self, at, "duplicate action in group"));
                            }
                        }
                        Action::Select(..) => {
                            return Err(pos_err(self, at, "selection inside a send/receive group"));
                        }
                    }
                }
                Ok(Behaviour::Actions(thetas, Box::new(cont)))
            }
            Some((_, Action::Select(..))) => {
                let mut sels = BTreeMap::new();
                for (at, a) in acts {
                    match a {
                        Action::Select(q, l) => {
                            if sels.insert(q, l).is_some() {
                                return Err(pos_err(self, at, "two selections towards the same process"));
                            }
                        }
                        Action::Theta(_) => {
                            return Err(pos_err(self, at, "send/receive inside a selection group"));
                        }
                    }
                }
                Ok(Behaviour::Selects(sels, Box::new(cont)))
            }
        }
    }

    pub(crate) fn network(&mut self) -> PResult<Network> {
        let mut net = Network::new();
        if *self.peek() == Tok::Int(0) && *self.peek_at(1) == Tok::Eof {
            self.bump();
            return Ok(net);
        }
        loop {
            let at = self.pos;
            let p = self.proc_name()?;
            self.expect(Tok::PipeGt)?;
            let b = self.behaviour()?;
            if net.insert(p.clone(), b).is_some() {
                let s = &self.toks[at];
                return Err(ParseError::new(
                    s.line,
                    s.col,
                    format!("duplicate process {p} in network"),
                ));
            }
            if *self.peek() != Tok::Pipe {
                break;
            }
            self.bump();
        }
        Ok(net)
    }

    pub(crate) fn state(&mut self) -> PResult<State> {
        let mut state = State::new();
        while *self.peek() != Tok::Eof {
            let at = self.pos;
            let p = self.proc_name()?;
            self.expect(Tok::Dot)?;
            let x = self.var_name()?;
            self.expect(Tok::Eq)?;
            let v = self.value()?;
            if state.contains(&p, &x) {
                let s = &self.toks[at];
                return Err(ParseError::new(
                    s.line,
                    s.col,
                    format!("duplicate entry for {p}.{x}"),
                ));
            }
            state.set(p, x, v);
        }
        Ok(state)
    }
}
