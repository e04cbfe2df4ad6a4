//! Elaboration against the reference evaluator.

use std::collections::BTreeMap;

use fuse_core::calculus::{run_to_completion, Env, Outcome, Rho, Value};
use fuse_core::elaborate::elaborate;
use fuse_core::parse_program;
use serde::Serialize;

use crate::reference::{run_reference, RefError};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SurfaceVerdict {
    /// The checker (or parser) refused the program; carries the error code.
    Rejected { code: String },
    /// Every memory ends with the same contents.
    Equal,
    Mismatch { detail: String },
    /// Both sides failed at run time.
    BothFailed { detail: String },
}

/// Elaborates `src`, runs the core program with `inputs` under the checked
/// small-step semantics and compares every memory with the reference.
pub fn compare_with_reference(
    src: &str,
    inputs: &BTreeMap<String, Vec<Value>>,
    fuel: u64,
) -> SurfaceVerdict {
    let p = match parse_program(src) {
        Ok(p) => p,
        Err(d) => {
            return SurfaceVerdict::Rejected {
                code: d.code.as_str().to_string(),
            }
        }
    };
    let e = match elaborate(&p) {
        Ok(e) => e,
        Err(ds) => {
            return SurfaceVerdict::Rejected {
                code: ds[0].code.as_str().to_string(),
            }
        }
    };
    let mut env = Env::new(&e.core);
    for r in &e.memmap.roots {
        if let Some(d) = inputs.get(&r.name) {
            e.memmap.scatter(&mut env, &r.name, d);
        }
    }
    let reference = run_reference(&p, inputs, fuel);
    let core = run_to_completion(env, Rho::new(), e.core.body.clone(), fuel);
    match (core, reference) {
        (Outcome::Completed { env, .. }, Ok(r)) => {
            for root in &e.memmap.roots {
                let got = e.memmap.gather(&env, &root.name);
                let want = &r.mems[&root.name];
                if &got != want {
                    let at = got.iter().zip(want).position(|(a, b)| a != b).unwrap_or(0);
                    return SurfaceVerdict::Mismatch {
                        detail: format!(
                            "`{}` differs at element {at}: core {} vs reference {}",
                            root.name, got[at], want[at]
                        ),
                    };
                }
            }
            SurfaceVerdict::Equal
        }
        (Outcome::RuntimeError { message, .. }, Err(RefError::Runtime(m))) => {
            SurfaceVerdict::BothFailed {
                detail: format!("{message} / {m}"),
            }
        }
        (Outcome::FuelExhausted { .. }, _) | (_, Err(RefError::Fuel)) => SurfaceVerdict::BothFailed {
            detail: "fuel exhausted".into(),
        },
        (c, r) => SurfaceVerdict::Mismatch {
            detail: format!("core {}, reference {:?}", c.label(), r.err()),
        },
    }
}
