//! Surface syntax tree.

use std::fmt;

use serde::Serialize;

use crate::diag::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ScalarType {
    Bit(u32),
    Float,
    Bool,
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarType::Bit(n) => write!(f, "bit<{n}>"),
            ScalarType::Float => f.write_str("float"),
            ScalarType::Bool => f.write_str("bool"),
        }
    }
}

/// One dimension of a memory: `size` elements striped across `banks` banks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BankSpec {
    pub size: u64,
    pub banks: u64,
}

impl BankSpec {
    pub fn new(size: u64, banks: u64) -> Self {
        BankSpec { size, banks }
    }
}

/// Static shape of a physical memory.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MemType {
    pub elem: ScalarType,
    pub ports: u64,
    pub dims: Vec<BankSpec>,
}

impl MemType {
    pub fn flat_banks(&self) -> u64 {
        self.dims.iter().map(|d| d.banks).product()
    }

    pub fn len(&self) -> u64 {
        self.dims.iter().map(|d| d.size).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for MemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.elem)?;
        if self.ports != 1 {
            write!(f, "{{{}}}", self.ports)?;
        }
        for d in &self.dims {
            if d.banks == 1 {
                write!(f, "[{}]", d.size)?;
            } else {
                write!(f, "[{} bank {}]", d.size, d.banks)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// C precedence; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_arith(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem
        )
    }

    pub fn is_compare(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_logic(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Var(String),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Access(Access),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn int(v: i64) -> Self {
        Expr::new(ExprKind::Int(v), Span::default())
    }

    pub fn var(name: &str) -> Self {
        Expr::new(ExprKind::Var(name.to_string()), Span::default())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        let span = lhs.span.to(rhs.span);
        Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
    }

    /// Visits every memory access in evaluation order.
    pub fn for_each_access<'a>(&'a self, f: &mut impl FnMut(&'a Access)) {
        match &self.kind {
            ExprKind::Binary(_, l, r) => {
                l.for_each_access(f);
                r.for_each_access(f);
            }
            ExprKind::Access(a) => {
                for ix in &a.indices {
                    ix.for_each_access(f);
                }
                f(a);
            }
            _ => {}
        }
    }

    pub fn free_vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            ExprKind::Var(v) => out.push(v.clone()),
            ExprKind::Binary(_, l, r) => {
                l.free_vars(out);
                r.free_vars(out);
            }
            ExprKind::Access(a) => {
                for ix in &a.indices {
                    ix.free_vars(out);
                }
            }
            _ => {}
        }
    }
}

/// `M[i][j]` (logical) or `M{b1}{b2}[i][j]` (physical: bank then offset).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Access {
    pub mem: String,
    pub banks: Option<Vec<u64>>,
    pub indices: Vec<Expr>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ViewKind {
    Shrink,
    Suffix,
    Shift,
    Split,
}

impl ViewKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ViewKind::Shrink => "shrink",
            ViewKind::Suffix => "suffix",
            ViewKind::Shift => "shift",
            ViewKind::Split => "split",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ReduceOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ReduceOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ReduceOp::Add => "+=",
            ReduceOp::Sub => "-=",
            ReduceOp::Mul => "*=",
            ReduceOp::Div => "/=",
        }
    }

    pub fn binop(self) -> BinOp {
        match self {
            ReduceOp::Add => BinOp::Add,
            ReduceOp::Sub => BinOp::Sub,
            ReduceOp::Mul => BinOp::Mul,
            ReduceOp::Div => BinOp::Div,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ReduceTarget {
    Var(String),
    Access(Access),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cmd {
    pub kind: CmdKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CmdKind {
    Skip,
    Let {
        name: String,
        ty: Option<ScalarType>,
        init: Expr,
    },
    MemDecl {
        name: String,
        ty: MemType,
    },
    View {
        name: String,
        kind: ViewKind,
        target: String,
        args: Vec<Expr>,
    },
    /// Commands joined by `;`. Never nested directly in another `Unordered`.
    Unordered(Vec<Cmd>),
    /// Commands joined by `---`. Only appears at block or program level.
    Ordered(Vec<Cmd>),
    /// `{ ... }`: a lexical scope.
    Block(Box<Cmd>),
    For {
        iter: String,
        lo: i64,
        hi: i64,
        unroll: u64,
        body: Box<Cmd>,
        combine: Option<Box<Cmd>>,
    },
    While {
        cond: Expr,
        body: Box<Cmd>,
    },
    If {
        cond: Expr,
        then: Box<Cmd>,
        els: Option<Box<Cmd>>,
    },
    Assign {
        name: String,
        value: Expr,
    },
    Store {
        target: Access,
        value: Expr,
    },
    Reduce {
        op: ReduceOp,
        target: ReduceTarget,
        value: Expr,
    },
    Expr(Expr),
}

impl Cmd {
    pub fn new(kind: CmdKind, span: Span) -> Self {
        Cmd { kind, span }
    }

    pub fn skip() -> Self {
        Cmd::new(CmdKind::Skip, Span::default())
    }

    pub fn is_skip(&self) -> bool {
        matches!(self.kind, CmdKind::Skip)
    }

    /// Builds an unordered sequence, flattening nested sequences and dropping skips.
    pub fn unordered(cmds: Vec<Cmd>, span: Span) -> Cmd {
        let mut flat = Vec::new();
        for c in cmds {
            match c.kind {
                CmdKind::Unordered(inner) => flat.extend(inner),
                CmdKind::Skip => {}
                _ => flat.push(c),
            }
        }
        match flat.len() {
            0 => Cmd::new(CmdKind::Skip, span),
            1 => flat.pop().unwrap(),
            _ => Cmd::new(CmdKind::Unordered(flat), span),
        }
    }

    /// Every variable assigned (`:=` or a reducer) anywhere inside this command.
    pub fn assigned_vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            CmdKind::Assign { name, .. } => out.push(name.clone()),
            CmdKind::Reduce {
                target: ReduceTarget::Var(name),
                ..
            } => out.push(name.clone()),
            CmdKind::Unordered(cs) | CmdKind::Ordered(cs) => {
                for c in cs {
                    c.assigned_vars(out);
                }
            }
            CmdKind::Block(c) => c.assigned_vars(out),
            CmdKind::For { body, combine, .. } => {
                body.assigned_vars(out);
                if let Some(c) = combine {
                    c.assigned_vars(out);
                }
            }
            CmdKind::While { body, .. } => body.assigned_vars(out),
            CmdKind::If { then, els, .. } => {
                then.assigned_vars(out);
                if let Some(e) = els {
                    e.assigned_vars(out);
                }
            }
            _ => {}
        }
    }

    pub fn for_each_child<'a>(&'a self, f: &mut impl FnMut(&'a Cmd)) {
        match &self.kind {
            CmdKind::Unordered(cs) | CmdKind::Ordered(cs) => cs.iter().for_each(f),
            CmdKind::Block(c) => f(c),
            CmdKind::For { body, combine, .. } => {
                f(body);
                if let Some(c) = combine {
                    f(c);
                }
            }
            CmdKind::While { body, .. } => f(body),
            CmdKind::If { then, els, .. } => {
                f(then);
                if let Some(e) = els {
                    f(e);
                }
            }
            _ => {}
        }
    }
}

/// A parsed source file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Program {
    pub body: Cmd,
}

impl Program {
    /// All memory declarations in source order, wherever they appear.
    pub fn memories(&self) -> Vec<(&str, &MemType, Span)> {
        fn walk<'a>(c: &'a Cmd, out: &mut Vec<(&'a str, &'a MemType, Span)>) {
            if let CmdKind::MemDecl { name, ty } = &c.kind {
                out.push((name, ty, c.span));
            }
            c.for_each_child(&mut |ch| walk(ch, out));
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }
}
