//! Small accept/reject programs covering each rule of the type system.

use fuse_core::diag::Code;

pub struct Golden {
    pub name: &'static str,
    pub source: &'static str,
    /// `None` when the program must be accepted.
    pub expect: Option<Code>,
}

pub const GOLDENS: [Golden; 14] = [
    Golden {
        name: "read_then_write_consumes",
        source: "let A: float[10];\nlet x = A[0];\nA[1] := 1;\n",
        expect: Some(Code::Consumed),
    },
    Golden {
        name: "same_address_double_read",
        source: "let A: float[10];\nlet x = A[0];\nlet y = A[0];\n",
        expect: None,
    },
    Golden {
        name: "ordered_restores",
        source: "let A: float[10];\nlet x = A[0]\n---\nA[1] := 1;\n",
        expect: None,
    },
    Golden {
        name: "ordered_scope_does_not_leak",
        source: "let A: float[10];\nlet B: float[10];\n{\n  let x = A[0] + 1\n  ---\n  B[1] := A[1] + x\n};\nlet y = B[0];\n",
        expect: Some(Code::Consumed),
    },
    Golden {
        name: "physical_bank_writes",
        source: "let A: float[10 bank 2];\nA{0}[0] := 1;\nA{1}[0] := 2;\n",
        expect: None,
    },
    Golden {
        name: "two_ports_read_write",
        source: "let A: float{2}[10];\nlet x = A[0];\nA[1] := x + 1;\n",
        expect: None,
    },
    Golden {
        name: "unroll_without_banks",
        source: "let A: float[10];\nfor (let i = 0..10) unroll 2 {\n  A[i] := 1;\n}\n",
        expect: Some(Code::Banks),
    },
    Golden {
        name: "lockstep_two_steps",
        source: "let A: float[10 bank 2];\nfor (let i = 0..10) unroll 2 {\n  let x = A[i]\n  ---\n  let y = x + A[0];\n}\n",
        expect: None,
    },
    Golden {
        name: "nested_write_capability",
        source: "let A: bit<32>[8 bank 4][10 bank 5];\nfor (let i = 0..8) {\n  for (let j = 0..10) unroll 5 {\n    let x = A[i][0]\n    ---\n    A[i][0] := j;\n  }\n}\n",
        expect: Some(Code::WriteCap),
    },
    Golden {
        name: "combine_dot_product",
        source: "let A: float[10 bank 2];\nlet B: float[10 bank 2];\nlet dot = 0.0;\nfor (let i = 0..10) unroll 2 {\n  let v = A[i] * B[i];\n} combine {\n  dot += v;\n}\n",
        expect: None,
    },
    Golden {
        name: "shrink_view",
        source: "let A: float[8 bank 4];\nview sh = shrink A[by 2];\nfor (let i = 0..8) unroll 2 {\n  sh[i];\n}\n",
        expect: None,
    },
    Golden {
        name: "suffix_view",
        source: "let A: float[8 bank 2];\nfor (let i = 0..4) {\n  view s = suffix A[by 2 * i];\n  let x = s[1];\n}\n",
        expect: None,
    },
    Golden {
        name: "shift_view_inner_unroll",
        source: "let A: float[12 bank 4];\nfor (let i = 0..3) {\n  view r = shift A[by i * i];\n  for (let j = 0..4) unroll 4 {\n    let x = r[j];\n  }\n}\n",
        expect: None,
    },
    Golden {
        name: "strided_index",
        source: "let A: float[10 bank 2];\nfor (let i = 0..5) unroll 5 {\n  A[2 * i] := 1;\n}\n",
        expect: Some(Code::Index),
    },
];

/// The verdict the checker gives `src`: `Ok` when accepted, otherwise the
/// first error code.
pub fn verdict(src: &str) -> Result<(), Code> {
    let p = fuse_core::parse_program(src).map_err(|d| d.code)?;
    fuse_core::typecheck::check_program(&p)
        .map(|_| ())
        .map_err(|ds| ds[0].code)
}
