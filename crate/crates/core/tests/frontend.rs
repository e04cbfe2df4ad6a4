use fuse_core::ast::*;
use fuse_core::diag::{Code, Span};
use fuse_core::{parse_program, pretty_print};
use proptest::prelude::*;

const NAMES: &[&str] = &["a", "b", "x", "acc", "A", "B", "m1", "v_0", "sum"];

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(NAMES).prop_map(str::to_string)
}

fn sp() -> Span {
    Span::default()
}

fn scalar() -> impl Strategy<Value = ScalarType> {
    prop_oneof![
        (1u32..=64).prop_map(ScalarType::Bit),
        Just(ScalarType::Float),
        Just(ScalarType::Bool),
    ]
}

fn access(e: BoxedStrategy<Expr>) -> impl Strategy<Value = Access> {
    (
        name(),
        prop::option::of(prop::collection::vec(0u64..8, 1..3)),
        prop::collection::vec(e, 1..3),
    )
        .prop_map(|(mem, banks, indices)| Access {
            mem,
            banks,
            indices,
            span: sp(),
        })
}

fn expr() -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        (0i64..=i64::MAX).prop_map(ExprKind::Int),
        any::<f64>()
            .prop_filter("finite", |f| f.is_finite())
            .prop_map(|f| ExprKind::Float(f.abs())),
        any::<bool>().prop_map(ExprKind::Bool),
        name().prop_map(ExprKind::Var),
    ]
    .prop_map(|k| Expr::new(k, sp()));
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (prop::sample::select(BinOp::ALL.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            access(inner).prop_map(|a| Expr::new(ExprKind::Access(a), sp())),
        ]
    })
    .boxed()
}

fn mem_type() -> impl Strategy<Value = MemType> {
    (
        scalar(),
        1u64..4,
        prop::collection::vec((1u64..64, 1u64..9), 1..4),
    )
        .prop_map(|(elem, ports, dims)| MemType {
            elem,
            ports,
            dims: dims.into_iter().map(|(s, b)| BankSpec::new(s, b)).collect(),
        })
}

fn view_kind() -> impl Strategy<Value = ViewKind> {
    prop::sample::select(vec![ViewKind::Shrink, ViewKind::Suffix, ViewKind::Shift, ViewKind::Split])
}

fn reduce_op() -> impl Strategy<Value = ReduceOp> {
    prop::sample::select(vec![ReduceOp::Add, ReduceOp::Sub, ReduceOp::Mul, ReduceOp::Div])
}

fn c(kind: CmdKind) -> Cmd {
    Cmd::new(kind, sp())
}

/// Whether `c` ends in an `if` without `else` (`els`) or a `for` without
/// `combine` that a following keyword would attach to.
fn ends_open(c: &Cmd, els: bool) -> bool {
    match &c.kind {
        CmdKind::If { els: None, then, .. } => els || ends_open(then, els),
        CmdKind::If { els: Some(e), .. } => ends_open(e, els),
        CmdKind::For { combine: None, body, .. } => !els || ends_open(body, els),
        CmdKind::While { body, .. } => ends_open(body, els),
        _ => false,
    }
}

fn braced(c: Cmd) -> Cmd {
    Cmd::new(CmdKind::Block(Box::new(c)), sp())
}

/// A statement that is not a sequence.
fn simple() -> BoxedStrategy<Cmd> {
    prop_oneof![
        (name(), prop::option::of(scalar()), expr())
            .prop_map(|(name, ty, init)| c(CmdKind::Let { name, ty, init })),
        (name(), mem_type()).prop_map(|(name, ty)| c(CmdKind::MemDecl { name, ty })),
        (name(), view_kind(), name(), prop::collection::vec(expr(), 1..3)).prop_map(
            |(name, kind, target, args)| c(CmdKind::View {
                name,
                kind,
                target,
                args
            })
        ),
        (name(), expr()).prop_map(|(name, value)| c(CmdKind::Assign { name, value })),
        (access(expr().boxed()), expr()).prop_map(|(target, value)| c(CmdKind::Store { target, value })),
        (reduce_op(), prop_oneof![
            name().prop_map(ReduceTarget::Var),
            access(expr()).prop_map(ReduceTarget::Access)
        ], expr())
            .prop_map(|(op, target, value)| c(CmdKind::Reduce { op, target, value })),
        expr().prop_map(|e| c(CmdKind::Expr(e))),
    ]
    .boxed()
}

fn stmt() -> BoxedStrategy<Cmd> {
    simple()
        .prop_recursive(4, 32, 4, |inner| {
            let group = group(inner.clone());
            let block = group.clone().prop_map(|g| c(CmdKind::Block(Box::new(g))));
            let body = prop_oneof![inner.clone(), block.clone()];
            prop_oneof![
                block.clone(),
                (
                    name(),
                    0i64..20,
                    0i64..40,
                    1u64..9,
                    body.clone(),
                    prop::option::of(block.clone())
                )
                    .prop_map(|(iter, lo, hi, unroll, mut body, combine)| {
                        if combine.is_some() && ends_open(&body, false) {
                            body = braced(body);
                        }
                        c(CmdKind::For {
                            iter,
                            lo,
                            hi,
                            unroll,
                            body: Box::new(body),
                            combine: combine.map(Box::new),
                        })
                    }),
                (expr(), body.clone()).prop_map(|(cond, body)| c(CmdKind::While {
                    cond,
                    body: Box::new(body)
                })),
                (expr(), body.clone(), prop::option::of(body)).prop_map(|(cond, mut then, els)| {
                    if els.is_some() && ends_open(&then, true) {
                        then = braced(then);
                    }
                    c(CmdKind::If {
                        cond,
                        then: Box::new(then),
                        els: els.map(Box::new),
                    })
                }),
            ]
        })
        .boxed()
}

/// Unordered groups joined by `---`, as the parser builds them.
fn group(s: BoxedStrategy<Cmd>) -> BoxedStrategy<Cmd> {
    prop::collection::vec(prop::collection::vec(s, 0..4), 1..4)
        .prop_map(|parts| {
            let mut parts: Vec<Cmd> = parts.into_iter().map(|p| Cmd::unordered(p, sp())).collect();
            if parts.len() == 1 {
                parts.pop().unwrap()
            } else {
                c(CmdKind::Ordered(parts))
            }
        })
        .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pretty_then_parse_is_identity(body in group(stmt())) {
        let p = Program { body };
        let text = pretty_print(&p);
        let q = parse_program(&text).map_err(|d| TestCaseError::fail(format!("{d}\n{text}")))?;
        prop_assert_eq!(&p, &q, "{}", text);
        prop_assert_eq!(pretty_print(&q), text);
    }

    #[test]
    fn diagnostics_point_into_the_source(src in "[a-z0-9 ;:=+*(){}\\[\\]<>.-]{0,40}") {
        if let Err(d) = parse_program(&src) {
            prop_assert!(d.span.start <= src.len() && d.span.end <= src.len());
            prop_assert!(d.code.is_syntax());
        }
    }
}

#[test]
fn memory_declaration() {
    let p = parse_program("let A: float[10];").unwrap();
    assert_eq!(
        p.body.kind,
        CmdKind::MemDecl {
            name: "A".into(),
            ty: MemType {
                elem: ScalarType::Float,
                ports: 1,
                dims: vec![BankSpec::new(10, 1)],
            },
        }
    );
}

#[test]
fn empty_program_is_skip() {
    assert!(parse_program("").unwrap().body.is_skip());
    assert!(parse_program("  \n ").unwrap().body.is_skip());
}

#[test]
fn non_dividing_banks_parse_then_fail_to_check() {
    let p = parse_program("let A: float[10 bank 3];").unwrap();
    let err = fuse_core::typecheck::check_program(&p).unwrap_err();
    assert_eq!(err[0].code, Code::Divides);
}

#[test]
fn dashes_bind_looser_than_semicolons() {
    let p = parse_program("a := 1; b := 2 --- c := 3").unwrap();
    let CmdKind::Ordered(parts) = &p.body.kind else {
        panic!("{:?}", p.body.kind)
    };
    assert_eq!(parts.len(), 2);
    assert!(matches!(&parts[0].kind, CmdKind::Unordered(cs) if cs.len() == 2));
}

#[test]
fn multi_view_sugar_expands() {
    let p = parse_program("view a, b = shrink A[by 2], B[by 2];").unwrap();
    let CmdKind::Unordered(cs) = &p.body.kind else {
        panic!()
    };
    assert_eq!(cs.len(), 2);
    assert!(matches!(&cs[1].kind, CmdKind::View { name, target, .. } if name == "b" && target == "B"));
}

#[test]
fn literal_kinds() {
    let e = fuse_core::parser::parse_expr("1 + 2.5").unwrap();
    let ExprKind::Binary(BinOp::Add, l, r) = e.kind else {
        panic!()
    };
    assert_eq!(l.kind, ExprKind::Int(1));
    assert_eq!(r.kind, ExprKind::Float(2.5));
}

#[test]
fn syntax_errors_carry_codes_and_positions() {
    let d = parse_program("let x = ;").unwrap_err();
    assert_eq!(d.code, Code::Parse);
    assert_eq!((d.span.line, d.span.col), (1, 9));
    let d = parse_program("let x = 1 $").unwrap_err();
    assert_eq!(d.code, Code::Lex);
    assert_eq!(d.render("f.fuse"), format!("f.fuse:1:11: error[E-LEX]: {}", d.message));
}
