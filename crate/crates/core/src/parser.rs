//! Recursive-descent parser for the surface language.
//!
//! `;` joins statements into an unordered group and `---` joins groups in
//! order, so `a; b --- c` parses as `{a; b} --- c`. A `;` may be omitted
//! after a statement ending in `}` and before `---`, `}` or end of input.

use crate::ast::*;
use crate::diag::{Code, Diagnostic, Span};
use crate::lexer::{tokenize, Tok, Token};

pub fn parse_program(src: &str) -> Result<Program, Diagnostic> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let body = p.ordered()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("a statement"));
    }
    Ok(Program { body })
}

/// Parses a single expression (used by tests and the DSE front end).
pub fn parse_expr(src: &str) -> Result<Expr, Diagnostic> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn ends_with_brace(c: &Cmd) -> bool {
    match &c.kind {
        CmdKind::Block(_) => true,
        CmdKind::For { body, combine, .. } => combine.is_some() || ends_with_brace(body),
        CmdKind::While { body, .. } => ends_with_brace(body),
        CmdKind::If { then, els, .. } => match els {
            Some(e) => ends_with_brace(e),
            None => ends_with_brace(then),
        },
        CmdKind::Unordered(cs) => cs.last().is_some_and(ends_with_brace),
        _ => false,
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn close(&self, start: Span) -> Span {
        let mut s = start;
        s.end = self.prev_end().max(start.start);
        s
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::error(
            Code::Parse,
            self.span(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, t: Tok) -> Result<Token, Diagnostic> {
        if self.peek() == &t {
            Ok(self.bump())
        } else {
            let d = t.describe();
            Err(self.unexpected(&d))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().span;
                Ok((s, sp))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn int(&mut self) -> Result<i64, Diagnostic> {
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected("an integer literal")),
        }
    }

    fn nat(&mut self, what: &str) -> Result<u64, Diagnostic> {
        let sp = self.span();
        let v = self.int()?;
        if v <= 0 {
            return Err(Diagnostic::error(
                Code::Parse,
                sp,
                format!("{what} must be positive"),
            ));
        }
        Ok(v as u64)
    }

    fn at_group_end(&self) -> bool {
        matches!(self.peek(), Tok::Dashes | Tok::RBrace | Tok::Eof)
    }

    fn ordered(&mut self) -> Result<Cmd, Diagnostic> {
        let start = self.span();
        let mut parts = vec![self.unordered()?];
        while self.eat(&Tok::Dashes) {
            parts.push(self.unordered()?);
        }
        if parts.len() == 1 {
            return Ok(parts.pop().unwrap());
        }
        Ok(Cmd::new(CmdKind::Ordered(parts), self.close(start)))
    }

    fn unordered(&mut self) -> Result<Cmd, Diagnostic> {
        let start = self.span();
        let mut stmts = Vec::new();
        while !self.at_group_end() {
            let s = self.stmt()?;
            let braced = ends_with_brace(&s);
            stmts.push(s);
            if !self.eat(&Tok::Semi) && !braced && !self.at_group_end() {
                return Err(self.unexpected("`;`"));
            }
        }
        Ok(Cmd::unordered(stmts, self.close(start)))
    }

    fn block(&mut self) -> Result<Cmd, Diagnostic> {
        let start = self.span();
        self.expect(Tok::LBrace)?;
        let inner = self.ordered()?;
        self.expect(Tok::RBrace)?;
        Ok(Cmd::new(CmdKind::Block(Box::new(inner)), self.close(start)))
    }

    fn body(&mut self) -> Result<Cmd, Diagnostic> {
        if self.peek() == &Tok::LBrace {
            self.block()
        } else {
            self.stmt()
        }
    }

    fn stmt(&mut self) -> Result<Cmd, Diagnostic> {
        let start = self.span();
        match self.peek() {
            Tok::Let => self.let_stmt(),
            Tok::View => self.view_stmt(),
            Tok::For => self.for_stmt(),
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.body()?;
                Ok(Cmd::new(
                    CmdKind::While {
                        cond,
                        body: Box::new(body),
                    },
                    self.close(start),
                ))
            }
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then = self.body()?;
                let els = if self.eat(&Tok::Else) {
                    Some(Box::new(self.body()?))
                } else {
                    None
                };
                Ok(Cmd::new(
                    CmdKind::If {
                        cond,
                        then: Box::new(then),
                        els,
                    },
                    self.close(start),
                ))
            }
            Tok::LBrace => self.block(),
            _ => self.expr_stmt(),
        }
    }

    fn names(&mut self) -> Result<Vec<(String, Span)>, Diagnostic> {
        let mut names = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            names.push(self.ident()?);
        }
        Ok(names)
    }

    fn let_stmt(&mut self) -> Result<Cmd, Diagnostic> {
        let start = self.span();
        self.expect(Tok::Let)?;
        let names = self.names()?;
        let ty = if self.eat(&Tok::Colon) {
            Some(self.type_ann()?)
        } else {
            None
        };
        match ty {
            Some(Ok(mem)) => {
                let span = self.close(start);
                let decls = names
                    .into_iter()
                    .map(|(name, _)| {
                        Cmd::new(
                            CmdKind::MemDecl {
                                name,
                                ty: mem.clone(),
                            },
                            span,
                        )
                    })
                    .collect();
                Ok(Cmd::unordered(decls, span))
            }
            scalar => {
                if names.len() > 1 {
                    return Err(Diagnostic::error(
                        Code::Parse,
                        names[1].1,
                        "only memory declarations may bind several names",
                    ));
                }
                let ty = scalar.map(|t| t.unwrap_err());
                self.expect(Tok::Eq)?;
                let init = self.expr()?;
                Ok(Cmd::new(
                    CmdKind::Let {
                        name: names.into_iter().next().unwrap().0,
                        ty,
                        init,
                    },
                    self.close(start),
                ))
            }
        }
    }

    /// `Ok` for a memory type, `Err` for a scalar type.
    fn type_ann(&mut self) -> Result<Result<MemType, ScalarType>, Diagnostic> {
        let elem = match self.peek() {
            Tok::FloatTy => {
                self.bump();
                ScalarType::Float
            }
            Tok::BoolTy => {
                self.bump();
                ScalarType::Bool
            }
            Tok::Bit => {
                self.bump();
                self.expect(Tok::Lt)?;
                let sp = self.span();
                let w = self.nat("bit width")?;
                if w > 64 {
                    return Err(Diagnostic::error(
                        Code::Parse,
                        sp,
                        "bit widths above 64 are not supported",
                    ));
                }
                self.expect(Tok::Gt)?;
                ScalarType::Bit(w as u32)
            }
            _ => return Err(self.unexpected("a type")),
        };
        let mut ports = None;
        if self.peek() == &Tok::LBrace {
            self.bump();
            ports = Some(self.nat("port count")?);
            self.expect(Tok::RBrace)?;
        }
        let mut dims = Vec::new();
        while self.eat(&Tok::LBracket) {
            let size = self.nat("memory size")?;
            let banks = if self.eat(&Tok::Bank) {
                self.nat("banking factor")?
            } else {
                1
            };
            self.expect(Tok::RBracket)?;
            dims.push(BankSpec::new(size, banks));
        }
        if dims.is_empty() {
            if ports.is_some() {
                return Err(self.unexpected("`[` after port count"));
            }
            return Ok(Err(elem));
        }
        Ok(Ok(MemType {
            elem,
            ports: ports.unwrap_or(1),
            dims,
        }))
    }

    fn view_stmt(&mut self) -> Result<Cmd, Diagnostic> {
        let start = self.span();
        self.expect(Tok::View)?;
        let names = self.names()?;
        self.expect(Tok::Eq)?;
        let kind = match self.peek() {
            Tok::Shrink => ViewKind::Shrink,
            Tok::Suffix => ViewKind::Suffix,
            Tok::Shift => ViewKind::Shift,
            Tok::Split => ViewKind::Split,
            _ => return Err(self.unexpected("a view kind")),
        };
        self.bump();
        let mut targets = Vec::new();
        loop {
            let (target, _) = self.ident()?;
            let mut args = Vec::new();
            while self.eat(&Tok::LBracket) {
                self.expect(Tok::By)?;
                args.push(self.expr()?);
                self.expect(Tok::RBracket)?;
            }
            if args.is_empty() {
                return Err(self.unexpected("`[by ...]`"));
            }
            targets.push((target, args));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        if targets.len() != names.len() {
            return Err(Diagnostic::error(
                Code::Parse,
                self.close(start),
                format!(
                    "{} view names but {} underlying memories",
                    names.len(),
                    targets.len()
                ),
            ));
        }
        let span = self.close(start);
        let views = names
            .into_iter()
            .zip(targets)
            .map(|((name, _), (target, args))| {
                Cmd::new(
                    CmdKind::View {
                        name,
                        kind,
                        target,
                        args,
                    },
                    span,
                )
            })
            .collect();
        Ok(Cmd::unordered(views, span))
    }

    fn for_stmt(&mut self) -> Result<Cmd, Diagnostic> {
        let start = self.span();
        self.expect(Tok::For)?;
        self.expect(Tok::LParen)?;
        self.expect(Tok::Let)?;
        let (iter, _) = self.ident()?;
        self.expect(Tok::Eq)?;
        let lo = self.int()?;
        self.expect(Tok::DotDot)?;
        let hi = self.int()?;
        self.expect(Tok::RParen)?;
        let unroll = if self.eat(&Tok::Unroll) {
            match *self.peek() {
                Tok::Int(v) if v >= 0 => {
                    self.bump();
                    v as u64
                }
                _ => return Err(self.unexpected("an unroll factor")),
            }
        } else {
            1
        };
        let body = self.body()?;
        let combine = if self.peek() == &Tok::Combine {
            self.bump();
            Some(Box::new(self.block()?))
        } else {
            None
        };
        Ok(Cmd::new(
            CmdKind::For {
                iter,
                lo,
                hi,
                unroll,
                body: Box::new(body),
                combine,
            },
            self.close(start),
        ))
    }

    fn expr_stmt(&mut self) -> Result<Cmd, Diagnostic> {
        let start = self.span();
        let e = self.expr()?;
        let reduce = match self.peek() {
            Tok::PlusEq => Some(ReduceOp::Add),
            Tok::MinusEq => Some(ReduceOp::Sub),
            Tok::StarEq => Some(ReduceOp::Mul),
            Tok::SlashEq => Some(ReduceOp::Div),
            _ => None,
        };
        if self.peek() == &Tok::ColonEq {
            let op_span = self.bump().span;
            let value = self.expr()?;
            let kind = match e.kind {
                ExprKind::Var(name) => CmdKind::Assign { name, value },
                ExprKind::Access(target) => CmdKind::Store { target, value },
                _ => {
                    return Err(Diagnostic::error(
                        Code::Parse,
                        op_span,
                        "left side of `:=` must be a variable or memory access",
                    ))
                }
            };
            return Ok(Cmd::new(kind, self.close(start)));
        }
        if let Some(op) = reduce {
            let op_span = self.bump().span;
            let value = self.expr()?;
            let target = match e.kind {
                ExprKind::Var(name) => ReduceTarget::Var(name),
                ExprKind::Access(a) => ReduceTarget::Access(a),
                _ => {
                    return Err(Diagnostic::error(
                        Code::Parse,
                        op_span,
                        "left side of a reducer must be a variable or memory access",
                    ))
                }
            };
            return Ok(Cmd::new(
                CmdKind::Reduce { op, target, value },
                self.close(start),
            ));
        }
        Ok(Cmd::new(CmdKind::Expr(e), self.close(start)))
    }

    pub fn expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::AndAnd => BinOp::And,
            Tok::OrOr => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, Diagnostic> {
        let mut lhs = self.primary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::Float(v) => {
                self.bump();
                ExprKind::Float(v)
            }
            Tok::True => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(e);
            }
            Tok::Ident(name) => {
                self.bump();
                let mut banks = None;
                while self.peek() == &Tok::LBrace
                    && matches!(self.peek_at(1), Tok::Int(_))
                    && self.peek_at(2) == &Tok::RBrace
                {
                    self.bump();
                    let b = self.int()?;
                    if b < 0 {
                        return Err(self.unexpected("a bank number"));
                    }
                    self.bump();
                    banks.get_or_insert_with(Vec::new).push(b as u64);
                }
                let mut indices = Vec::new();
                while self.eat(&Tok::LBracket) {
                    indices.push(self.expr()?);
                    self.expect(Tok::RBracket)?;
                }
                if banks.is_some() && indices.is_empty() {
                    return Err(self.unexpected("`[` after a bank selector"));
                }
                if indices.is_empty() {
                    ExprKind::Var(name)
                } else {
                    ExprKind::Access(Access {
                        mem: name,
                        banks,
                        indices,
                        span: self.close(start),
                    })
                }
            }
            _ => return Err(self.unexpected("an expression")),
        };
        Ok(Expr::new(kind, self.close(start)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(src: &str) -> CmdKind {
        parse_program(src).unwrap().body.kind
    }

    #[test]
    fn memory_decl() {
        match body("let A: float[10];") {
            CmdKind::MemDecl { name, ty } => {
                assert_eq!(name, "A");
                assert_eq!(
                    ty,
                    MemType {
                        elem: ScalarType::Float,
                        ports: 1,
                        dims: vec![BankSpec::new(10, 1)]
                    }
                );
            }
            k => panic!("{k:?}"),
        }
        match body("let A: float{2}[8 bank 4][10 bank 5];") {
            CmdKind::MemDecl { ty, .. } => {
                assert_eq!(ty.ports, 2);
                assert_eq!(ty.dims, vec![BankSpec::new(8, 4), BankSpec::new(10, 5)]);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn empty_is_skip() {
        assert_eq!(body(""), CmdKind::Skip);
        assert_eq!(body("  // nothing\n"), CmdKind::Skip);
    }

    #[test]
    fn dashes_bind_looser() {
        match body("let x = A[0]; let y = 1 --- A[1] := 1") {
            CmdKind::Ordered(parts) => {
                assert_eq!(parts.len(), 2);
                assert!(matches!(parts[0].kind, CmdKind::Unordered(ref v) if v.len() == 2));
                assert!(matches!(parts[1].kind, CmdKind::Store { .. }));
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn multi_decl_sugar() {
        match body("let A, B: float[12 bank 4]; view shA, shB = shrink A[by 2], B[by 2];") {
            CmdKind::Unordered(cs) => {
                assert_eq!(cs.len(), 4);
                assert!(matches!(&cs[3].kind, CmdKind::View { name, target, .. } if name == "shB" && target == "B"));
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn semicolon_optional_after_brace() {
        parse_program("for (let i = 0..4) { A[i] := 1 } let x = 1").unwrap();
        parse_program("if (b) { x := 1 } else { x := 2 } x := 3").unwrap();
        let e = parse_program("let x = 1 let y = 2").unwrap_err();
        assert_eq!(e.code, Code::Parse);
    }

    #[test]
    fn precedence_is_c_like() {
        let e = parse_expr("1 + 2 * 3 < 4 && x == y || z").unwrap();
        match e.kind {
            ExprKind::Binary(BinOp::Or, l, _) => match l.kind {
                ExprKind::Binary(BinOp::And, l2, _) => {
                    assert!(matches!(l2.kind, ExprKind::Binary(BinOp::Lt, _, _)))
                }
                k => panic!("{k:?}"),
            },
            k => panic!("{k:?}"),
        }
        let e = parse_expr("a - b - c").unwrap();
        match e.kind {
            ExprKind::Binary(BinOp::Sub, l, r) => {
                assert!(matches!(l.kind, ExprKind::Binary(BinOp::Sub, _, _)));
                assert!(matches!(r.kind, ExprKind::Var(_)));
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn physical_access_and_reducers() {
        match body("A{1}[0] := 2") {
            CmdKind::Store { target, .. } => assert_eq!(target.banks, Some(vec![1])),
            k => panic!("{k:?}"),
        }
        assert!(matches!(
            body("dot += v"),
            CmdKind::Reduce {
                op: ReduceOp::Add,
                target: ReduceTarget::Var(_),
                ..
            }
        ));
    }

    #[test]
    fn for_with_combine_and_single_statement_body() {
        match body("for (let i = 0..8) unroll 2\n  sh[i];") {
            CmdKind::For { unroll, body, .. } => {
                assert_eq!(unroll, 2);
                assert!(matches!(body.kind, CmdKind::Expr(_)));
            }
            k => panic!("{k:?}"),
        }
        match body("for (let i = 0..10) unroll 2 { let v = A[i] * B[i]; } combine { dot += v; }") {
            CmdKind::For { combine, .. } => assert!(combine.is_some()),
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn errors_carry_spans() {
        let src = "let x = ;";
        let e = parse_program(src).unwrap_err();
        assert_eq!(e.code, Code::Parse);
        assert!(e.span.start <= src.len());
        assert_eq!((e.span.line, e.span.col), (1, 9));
    }
}
