//! The model and adversary mini-language.
//!
//! ```text
//! robust(bernoulli(1/3@1,2/3@T/2+1),alpha=1,U=match)
//! alg2(debruijn(L=8),L=8,Lp=72,mode=full)
//! vswitch(bernoulli,eps=auto,delta=auto,c=2)
//! env(drift(phi=T/5))
//! ```
//!
//! Numeric arguments are arithmetic expressions over numbers and the
//! horizon `T`. Every spec has a canonical text form that parses back to
//! the same spec.

use std::fmt;
use std::sync::Arc;

use lowregret::models::{DeBruijnModel, FixedModel, PeriodicDrift, PiecewiseBernoulli, PolyaUrn, Windowed};
use lowregret::{
    AdversaryKind, BoundedRobustModel, ContextMode, RobustModel, SharedModel, StateDist, UtilityMatrix, VScoreParams,
    VSwitchModel,
};

use crate::error::{CliError, ParseError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Horizon,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(x: f64) -> Self {
        Expr::Num(x)
    }

    pub fn eval(&self, horizon: usize) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::Horizon => horizon as f64,
            Expr::Neg(e) => -e.eval(horizon),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(horizon), b.eval(horizon));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8, right: bool) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Horizon => f.write_str("T"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_prec(f, 3, false)
            }
            Expr::Bin(op, a, b) => {
                let p = op.prec();
                let paren = p < min || (right && p == min);
                if paren {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, p, false)?;
                write!(f, "{}", op.symbol())?;
                b.fmt_prec(f, p, true)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0, false)
    }
}

/// Untyped parse tree shared by model and adversary specs.
#[derive(Debug, Clone, PartialEq)]
enum Value {
    Expr(Expr),
    At(Expr, Expr),
    Node(Node),
    Matrix(Vec<Vec<Expr>>),
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    name: String,
    col: usize,
    args: Vec<Arg>,
}

#[derive(Debug, Clone, PartialEq)]
struct Arg {
    key: Option<String>,
    col: usize,
    value: Value,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0 }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.col(), msg))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(got) => self.err(format!("expected '{}', found '{}'", c as char, got as char)),
                None => self.err(format!("expected '{}', found end of input", c as char)),
            }
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if !self.src.get(self.pos).copied().is_some_and(is_ident_start) {
            return self.err("expected a name");
        }
        while self.src.get(self.pos).copied().is_some_and(is_ident) {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    /// Name of the identifier at the cursor without consuming it.
    fn peek_ident(&mut self) -> Option<String> {
        let save = self.pos;
        let id = self.ident().ok();
        self.pos = save;
        id
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.err(format!("unexpected '{}'", c as char)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.factor()?));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'T') if !self.src.get(self.pos + 1).copied().is_some_and(is_ident) => {
                self.pos += 1;
                Ok(Expr::Horizon)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) => self.err(format!("expected a number or T, found '{}'", c as char)),
            None => self.err("expected a number or T, found end of input"),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let col = self.col();
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| ParseError::new(col, format!("bad number '{text}'")))
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(b'[') => self.matrix(),
            Some(c) if is_ident_start(c) => {
                let id = self.peek_ident().expect("identifier start");
                if id == "T" {
                    return self.expr_or_at();
                }
                Ok(Value::Node(self.node()?))
            }
            _ => self.expr_or_at(),
        }
    }

    fn expr_or_at(&mut self) -> Result<Value, ParseError> {
        let e = self.expr()?;
        if self.eat(b'@') {
            return Ok(Value::At(e, self.expr()?));
        }
        Ok(Value::Expr(e))
    }

    fn matrix(&mut self) -> Result<Value, ParseError> {
        self.expect(b'[')?;
        let mut rows = vec![vec![self.expr()?]];
        loop {
            if self.eat(b',') {
                rows.last_mut().expect("non-empty").push(self.expr()?);
            } else if self.eat(b';') {
                rows.push(vec![self.expr()?]);
            } else {
                self.expect(b']')?;
                return Ok(Value::Matrix(rows));
            }
        }
    }

    fn node(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        let col = self.col();
        let name = self.ident()?;
        let mut args = Vec::new();
        if self.eat(b'(') && !self.eat(b')') {
            loop {
                args.push(self.arg()?);
                if self.eat(b')') {
                    break;
                }
                self.expect(b',')?;
            }
        }
        Ok(Node { name, col, args })
    }

    fn arg(&mut self) -> Result<Arg, ParseError> {
        self.skip_ws();
        let col = self.col();
        let save = self.pos;
        if let Ok(key) = self.ident() {
            if self.eat(b'=') {
                return Ok(Arg { key: Some(key), col, value: self.value()? });
            }
        }
        self.pos = save;
        Ok(Arg { key: None, col, value: self.value()? })
    }
}

fn parse_node(src: &str) -> Result<Node, ParseError> {
    let mut p = Parser::new(src);
    if p.peek().is_none() {
        return p.err("empty spec");
    }
    let node = p.node()?;
    p.finish()?;
    Ok(node)
}

/// Typed view of a node's arguments: positional values first, then
/// `key=value` pairs, each consumed at most once.
struct Args {
    name: String,
    col: usize,
    positional: Vec<(usize, Value)>,
    keyed: Vec<(String, usize, Value)>,
}

impl Args {
    fn new(node: Node) -> Result<Self, ParseError> {
        let mut positional = Vec::new();
        let mut keyed: Vec<(String, usize, Value)> = Vec::new();
        for a in node.args {
            match a.key {
                Some(k) => {
                    if keyed.iter().any(|(x, _, _)| *x == k) {
                        return Err(ParseError::new(a.col, format!("duplicate argument '{k}'")));
                    }
                    keyed.push((k, a.col, a.value));
                }
                None => {
                    if !keyed.is_empty() {
                        return Err(ParseError::new(a.col, "positional argument after keyword argument"));
                    }
                    positional.push((a.col, a.value));
                }
            }
        }
        Ok(Self { name: node.name, col: node.col, positional, keyed })
    }

    fn take(&mut self, key: &str) -> Option<(usize, Value)> {
        let i = self.keyed.iter().position(|(k, _, _)| k == key)?;
        let (_, col, v) = self.keyed.remove(i);
        Some((col, v))
    }

    fn take_positional(&mut self) -> Option<(usize, Value)> {
        if self.positional.is_empty() {
            None
        } else {
            Some(self.positional.remove(0))
        }
    }

    /// Next positional argument, or the keyed one.
    fn take_either(&mut self, key: &str) -> Option<(usize, Value)> {
        self.take_positional().or_else(|| self.take(key))
    }

    fn expr(&mut self, key: &str) -> Result<Option<Expr>, ParseError> {
        match self.take(key) {
            None => Ok(None),
            Some((_, Value::Expr(e))) => Ok(Some(e)),
            Some((col, _)) => Err(ParseError::new(col, format!("'{key}' expects a number"))),
        }
    }

    fn required_expr(&mut self, key: &str) -> Result<Expr, ParseError> {
        self.expr(key)?.ok_or_else(|| ParseError::new(self.col, format!("{} needs '{key}='", self.name)))
    }

    fn word(&mut self, key: &str) -> Result<Option<(usize, String)>, ParseError> {
        match self.take(key) {
            None => Ok(None),
            Some((col, Value::Node(n))) if n.args.is_empty() => Ok(Some((col, n.name))),
            Some((col, Value::Expr(Expr::Num(x)))) => Ok(Some((col, format!("{x}")))),
            Some((col, _)) => Err(ParseError::new(col, format!("'{key}' expects a word"))),
        }
    }

    fn model(&mut self) -> Result<ModelSpec, ParseError> {
        match self.take_positional() {
            Some((_, Value::Node(n))) => ModelSpec::from_node(n),
            Some((col, _)) => Err(ParseError::new(col, "expected a model spec")),
            None => Err(ParseError::new(self.col, format!("{} needs a base model", self.name))),
        }
    }

    fn done(self) -> Result<(), ParseError> {
        if let Some((col, _)) = self.positional.first() {
            return Err(ParseError::new(*col, format!("unexpected argument to {}", self.name)));
        }
        if let Some((k, col, _)) = self.keyed.first() {
            return Err(ParseError::new(*col, format!("unknown argument '{k}' for {}", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySpec {
    Match,
    Matrix(Vec<Vec<Expr>>),
}

impl UtilitySpec {
    fn parse(args: &mut Args) -> Result<Self, ParseError> {
        match args.take("U") {
            None => Ok(UtilitySpec::Match),
            Some((_, Value::Node(n))) if n.name == "match" && n.args.is_empty() => Ok(UtilitySpec::Match),
            Some((_, Value::Matrix(rows))) => Ok(UtilitySpec::Matrix(rows)),
            Some((col, _)) => Err(ParseError::new(col, "U expects 'match' or a matrix like [1,0;0,1]")),
        }
    }

    pub fn build(&self, num_states: usize, horizon: usize) -> Result<UtilityMatrix> {
        match self {
            UtilitySpec::Match => Ok(UtilityMatrix::matching(num_states)),
            UtilitySpec::Matrix(rows) => {
                Ok(UtilityMatrix::new(rows.iter().map(|r| r.iter().map(|e| e.eval(horizon)).collect()).collect())?)
            }
        }
    }
}

impl fmt::Display for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilitySpec::Match => f.write_str("match"),
            UtilitySpec::Matrix(rows) => {
                f.write_str("[")?;
                for (i, r) in rows.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    for (j, e) in r.iter().enumerate() {
                        if j > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{e}")?;
                    }
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Polya,
    /// `None` is Ber(1/3) for the first half of the horizon and Ber(2/3) after.
    Bernoulli(Option<Vec<(Expr, Expr)>>),
    Fixed(Expr),
    DeBruijn {
        order: Expr,
        flip: bool,
        eps: Expr,
    },
    Drift {
        phi: Expr,
    },
    Windowed {
        inner: Box<ModelSpec>,
        w: Expr,
    },
    Robust {
        base: Box<ModelSpec>,
        alpha: Option<Expr>,
        u: UtilitySpec,
    },
    Alg2 {
        base: Box<ModelSpec>,
        l: Expr,
        lp: Expr,
        alpha: Option<Expr>,
        mode: ContextMode,
        u: UtilitySpec,
    },
    VSwitch {
        base: Box<ModelSpec>,
        eps: Option<Expr>,
        delta: Option<Expr>,
        c: Expr,
    },
}

impl ModelSpec {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Self::from_node(parse_node(src)?)
    }

    fn from_node(node: Node) -> Result<Self, ParseError> {
        let mut a = Args::new(node)?;
        let spec = match a.name.as_str() {
            "polya" => ModelSpec::Polya,
            "bernoulli" => {
                let mut entries = Vec::new();
                let mut constant = None;
                while let Some((col, v)) = a.take_positional() {
                    match v {
                        Value::At(p, start) => entries.push((p, start)),
                        Value::Expr(p) if entries.is_empty() && constant.is_none() => constant = Some(p),
                        _ => return Err(ParseError::new(col, "bernoulli expects p or p@start entries")),
                    }
                }
                if let Some(p) = a.expr("p")? {
                    constant = Some(p);
                }
                match (constant, entries.is_empty()) {
                    (Some(p), true) => ModelSpec::Bernoulli(Some(vec![(p, Expr::num(1.0))])),
                    (Some(_), false) => return Err(ParseError::new(a.col, "mixed constant and schedule")),
                    (None, true) => ModelSpec::Bernoulli(None),
                    (None, false) => ModelSpec::Bernoulli(Some(entries)),
                }
            }
            "fixed" => match a.take_either("p") {
                Some((_, Value::Expr(p))) => ModelSpec::Fixed(p),
                Some((col, _)) => return Err(ParseError::new(col, "fixed expects a probability")),
                None => return Err(ParseError::new(a.col, "fixed needs p")),
            },
            "debruijn" => {
                let order = a.required_expr("L")?;
                let flip = match a.word("flip")? {
                    None => false,
                    Some((_, w)) => match w.as_str() {
                        "0" | "false" => false,
                        "1" | "true" => true,
                        _ => return Err(ParseError::new(a.col, "flip expects 0 or 1")),
                    },
                };
                let eps = a.expr("eps")?.unwrap_or(Expr::num(0.0));
                ModelSpec::DeBruijn { order, flip, eps }
            }
            "drift" => ModelSpec::Drift { phi: a.required_expr("phi")? },
            "windowed" => {
                let inner = Box::new(a.model()?);
                ModelSpec::Windowed { inner, w: a.required_expr("w")? }
            }
            "robust" => {
                let base = Box::new(a.model()?);
                let alpha = a.expr("alpha")?;
                let u = UtilitySpec::parse(&mut a)?;
                ModelSpec::Robust { base, alpha, u }
            }
            "alg2" => {
                let base = Box::new(a.model()?);
                let l = a.required_expr("L")?;
                let lp = a.required_expr("Lp")?;
                let alpha = a.expr("alpha")?;
                let mode = match a.word("mode")? {
                    None => ContextMode::FullContext,
                    Some((col, w)) => match w.as_str() {
                        "full" => ContextMode::FullContext,
                        "suffix" => ContextMode::SuffixOnly,
                        _ => return Err(ParseError::new(col, "mode expects 'full' or 'suffix'")),
                    },
                };
                let u = UtilitySpec::parse(&mut a)?;
                ModelSpec::Alg2 { base, l, lp, alpha, mode, u }
            }
            "vswitch" => {
                let base = Box::new(a.model()?);
                let mut auto_or = |key: &str| -> Result<Option<Expr>, ParseError> {
                    match a.take(key) {
                        None => Ok(None),
                        Some((_, Value::Node(n))) if n.name == "auto" && n.args.is_empty() => Ok(None),
                        Some((_, Value::Expr(e))) => Ok(Some(e)),
                        Some((col, _)) => Err(ParseError::new(col, format!("'{key}' expects 'auto' or a number"))),
                    }
                };
                let eps = auto_or("eps")?;
                let delta = auto_or("delta")?;
                let c = a.expr("c")?.unwrap_or(Expr::num(1.0));
                ModelSpec::VSwitch { base, eps, delta, c }
            }
            other => return Err(ParseError::new(a.col, format!("unknown model '{other}'"))),
        };
        a.done()?;
        Ok(spec)
    }

    /// Builds the model for horizon `T`; `alpha` fills in wrappers that do
    /// not set their own.
    pub fn build(&self, horizon: usize, alpha: f64) -> Result<SharedModel> {
        let t = horizon;
        Ok(match self {
            ModelSpec::Polya => Arc::new(PolyaUrn::binary()),
            ModelSpec::Bernoulli(None) => Arc::new(PiecewiseBernoulli::third_to_two_thirds(t)),
            ModelSpec::Bernoulli(Some(entries)) => {
                let schedule = entries
                    .iter()
                    .map(|(p, start)| Ok((as_count(start, t, "schedule start")?, p.eval(t))))
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(PiecewiseBernoulli::new(schedule)?)
            }
            ModelSpec::Fixed(p) => Arc::new(FixedModel::new(StateDist::bernoulli(p.eval(t))?)),
            ModelSpec::DeBruijn { order, flip, eps } => {
                Arc::new(DeBruijnModel::new(as_count(order, t, "L")?, *flip, eps.eval(t))?)
            }
            ModelSpec::Drift { phi } => Arc::new(PeriodicDrift::new(phi.eval(t))?),
            ModelSpec::Windowed { inner, w } => Arc::new(Windowed::new(inner.build(t, alpha)?, as_count(w, t, "w")?)?),
            ModelSpec::Robust { base, alpha: a, u } => {
                let base = base.build(t, alpha)?;
                let u = u.build(base.num_states(), t)?;
                Arc::new(RobustModel::new(base, u, t, a.as_ref().map_or(alpha, |a| a.eval(t)))?)
            }
            ModelSpec::Alg2 { base, l, lp, alpha: a, mode, u } => {
                let base = base.build(t, alpha)?;
                let u = u.build(base.num_states(), t)?;
                Arc::new(BoundedRobustModel::new(
                    base,
                    u,
                    as_count(l, t, "L")?,
                    as_count(lp, t, "Lp")?,
                    a.as_ref().map_or(alpha, |a| a.eval(t)),
                    *mode,
                    t,
                )?)
            }
            ModelSpec::VSwitch { base, eps, delta, c } => {
                let auto = VScoreParams::auto(t, alpha)?;
                let params = VScoreParams::new(
                    eps.as_ref().map_or(auto.eps, |e| e.eval(t)),
                    delta.as_ref().map_or(auto.delta, |e| e.eval(t)),
                    c.eval(t),
                )?;
                Arc::new(VSwitchModel::new(base.build(t, alpha)?, params, t)?)
            }
        })
    }
}

/// Non-negative integer value of an expression.
pub fn as_count(e: &Expr, horizon: usize, what: &str) -> Result<usize> {
    let x = e.eval(horizon);
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(CliError::Invalid(format!("{what} = {e} evaluates to {x}, not a non-negative integer")))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Polya => f.write_str("polya"),
            ModelSpec::Bernoulli(None) => f.write_str("bernoulli"),
            ModelSpec::Bernoulli(Some(entries)) => {
                if let [(p, Expr::Num(start))] = entries.as_slice() {
                    if *start == 1.0 {
                        return write!(f, "bernoulli({p})");
                    }
                }
                f.write_str("bernoulli(")?;
                for (i, (p, s)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}@{s}")?;
                }
                f.write_str(")")
            }
            ModelSpec::Fixed(p) => write!(f, "fixed({p})"),
            ModelSpec::DeBruijn { order, flip, eps } => {
                write!(f, "debruijn(L={order},flip={},eps={eps})", *flip as u8)
            }
            ModelSpec::Drift { phi } => write!(f, "drift(phi={phi})"),
            ModelSpec::Windowed { inner, w } => write!(f, "windowed({inner},w={w})"),
            ModelSpec::Robust { base, alpha, u } => {
                write!(f, "robust({base}")?;
                if let Some(a) = alpha {
                    write!(f, ",alpha={a}")?;
                }
                write!(f, ",U={u})")
            }
            ModelSpec::Alg2 { base, l, lp, alpha, mode, u } => {
                write!(f, "alg2({base},L={l},Lp={lp}")?;
                if let Some(a) = alpha {
                    write!(f, ",alpha={a}")?;
                }
                let mode = match mode {
                    ContextMode::FullContext => "full",
                    ContextMode::SuffixOnly => "suffix",
                };
                write!(f, ",mode={mode},U={u})")
            }
            ModelSpec::VSwitch { base, eps, delta, c } => {
                let show = |e: &Option<Expr>| e.as_ref().map_or("auto".to_string(), |e| e.to_string());
                write!(f, "vswitch({base},eps={},delta={},c={c})", show(eps), show(delta))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversarySpec {
    Flip,
    Const(Expr),
    Drift(Expr),
    Env(ModelSpec),
}

impl AdversarySpec {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut a = Args::new(parse_node(src)?)?;
        let spec = match a.name.as_str() {
            "flip" => AdversarySpec::Flip,
            "const" => match a.take_either("state") {
                Some((_, Value::Expr(e))) => AdversarySpec::Const(e),
                Some((col, _)) => return Err(ParseError::new(col, "const expects a state index")),
                None => AdversarySpec::Const(Expr::num(0.0)),
            },
            "drift" => AdversarySpec::Drift(a.required_expr("phi")?),
            "env" => AdversarySpec::Env(a.model()?),
            other => return Err(ParseError::new(a.col, format!("unknown adversary '{other}'"))),
        };
        a.done()?;
        Ok(spec)
    }

    pub fn build(&self, horizon: usize, alpha: f64) -> Result<AdversaryKind> {
        Ok(match self {
            AdversarySpec::Flip => AdversaryKind::Flip,
            AdversarySpec::Const(e) => AdversaryKind::Const(as_count(e, horizon, "state")?),
            AdversarySpec::Drift(phi) => AdversaryKind::Env(Arc::new(PeriodicDrift::new(phi.eval(horizon))?)),
            AdversarySpec::Env(m) => AdversaryKind::Env(m.build(horizon, alpha)?),
        })
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::Flip => f.write_str("flip"),
            AdversarySpec::Const(e) => write!(f, "const({e})"),
            AdversarySpec::Drift(phi) => write!(f, "drift(phi={phi})"),
            AdversarySpec::Env(m) => write!(f, "env({m})"),
        }
    }
}
