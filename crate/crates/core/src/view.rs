//! Memory views: how a view's logical shape and index map derive from its
//! parent.

use serde::Serialize;

use crate::ast::{BankSpec, ViewKind};
use crate::linear::LinearForm;

/// A view argument after constant folding and iterator substitution.
#[derive(Clone, Debug, PartialEq)]
pub enum ViewArg {
    Const(i64),
    /// `k * e`
    Scaled(i64, LinearForm),
    /// Any other affine offset.
    Form(LinearForm),
}

impl ViewArg {
    pub fn form(&self) -> LinearForm {
        match self {
            ViewArg::Const(c) => LinearForm::constant(*c),
            ViewArg::Scaled(k, f) => f.scale(*k),
            ViewArg::Form(f) => f.clone(),
        }
    }
}

/// Index map from view coordinates to parent coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Xform {
    Shrink,
    /// Suffix and shift: `parent_d = off_d + idx_d`.
    Offset(Vec<LinearForm>),
    /// One parent dimension becomes `(w bank w) x (n/w bank B/w)`;
    /// `parent_d = w * idx[2d+1] + idx[2d]`.
    Split(Vec<u64>),
}

impl Xform {
    pub fn to_parent(&self, idx: &[LinearForm]) -> Vec<LinearForm> {
        match self {
            Xform::Shrink => idx.to_vec(),
            Xform::Offset(offs) => offs.iter().zip(idx).map(|(o, i)| o.add(i)).collect(),
            Xform::Split(ws) => ws
                .iter()
                .enumerate()
                .map(|(d, &w)| idx[2 * d + 1].scale(w as i64).add(&idx[2 * d]))
                .collect(),
        }
    }

    /// Same as [`Xform::to_parent`] on concrete indices.
    pub fn eval_parent(&self, idx: &[i64], off: &dyn Fn(&LinearForm) -> i64) -> Vec<i64> {
        match self {
            Xform::Shrink => idx.to_vec(),
            Xform::Offset(offs) => offs.iter().zip(idx).map(|(o, i)| off(o) + i).collect(),
            Xform::Split(ws) => ws
                .iter()
                .enumerate()
                .map(|(d, &w)| w as i64 * idx[2 * d + 1] + idx[2 * d])
                .collect(),
        }
    }
}

/// Shape and index map of `kind parent[by args...]`, or the violated side
/// condition.
pub fn derive(
    kind: ViewKind,
    parent: &[BankSpec],
    args: &[ViewArg],
) -> Result<(Vec<BankSpec>, Xform), String> {
    if args.len() != parent.len() {
        return Err(format!(
            "{} view needs {} argument(s), one per dimension, got {}",
            kind.keyword(),
            parent.len(),
            args.len()
        ));
    }
    match kind {
        ViewKind::Shrink => {
            let mut dims = Vec::new();
            for (d, (p, a)) in parent.iter().zip(args).enumerate() {
                let ViewArg::Const(f) = a else {
                    return Err(format!("shrink factor for dimension {d} must be a constant"));
                };
                let f = *f;
                if f < 1 {
                    return Err(format!("shrink factor {f} must be at least 1"));
                }
                if p.banks % f as u64 != 0 {
                    return Err(format!(
                        "shrink factor {f} does not divide banking factor {}",
                        p.banks
                    ));
                }
                dims.push(BankSpec::new(p.size, p.banks / f as u64));
            }
            Ok((dims, Xform::Shrink))
        }
        ViewKind::Suffix => {
            let mut offs = Vec::new();
            for (d, (p, a)) in parent.iter().zip(args).enumerate() {
                let b = p.banks as i64;
                match a {
                    ViewArg::Const(c) if c.rem_euclid(b) == 0 => {}
                    ViewArg::Const(c) => {
                        return Err(format!(
                            "suffix offset {c} in dimension {d} is not a multiple of banking factor {b}"
                        ))
                    }
                    ViewArg::Scaled(k, _) if *k == b => {}
                    ViewArg::Scaled(k, _) => {
                        return Err(format!(
                            "suffix scale {k} in dimension {d} must equal banking factor {b}"
                        ))
                    }
                    ViewArg::Form(_) if b == 1 => {}
                    ViewArg::Form(_) => {
                        return Err(format!(
                            "suffix offset in dimension {d} must have the form {b} * e"
                        ))
                    }
                }
                offs.push(a.form());
            }
            Ok((parent.to_vec(), Xform::Offset(offs)))
        }
        ViewKind::Shift => Ok((
            parent.to_vec(),
            Xform::Offset(args.iter().map(ViewArg::form).collect()),
        )),
        ViewKind::Split => {
            let mut dims = Vec::new();
            let mut ws = Vec::new();
            for (d, (p, a)) in parent.iter().zip(args).enumerate() {
                let ViewArg::Const(w) = a else {
                    return Err(format!("split factor for dimension {d} must be a constant"));
                };
                let w = *w;
                if w < 1 {
                    return Err(format!("split factor {w} must be at least 1"));
                }
                let w = w as u64;
                if p.banks % w != 0 {
                    return Err(format!(
                        "split factor {w} does not divide banking factor {}",
                        p.banks
                    ));
                }
                if p.size % w != 0 {
                    return Err(format!("split factor {w} does not divide size {}", p.size));
                }
                dims.push(BankSpec::new(w, w));
                dims.push(BankSpec::new(p.size / w, p.banks / w));
                ws.push(w);
            }
            Ok((dims, Xform::Split(ws)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let a = [BankSpec::new(8, 4)];
        let (d, _) = derive(ViewKind::Shrink, &a, &[ViewArg::Const(2)]).unwrap();
        assert_eq!(d, vec![BankSpec::new(8, 2)]);
        let b = [BankSpec::new(12, 4)];
        let (d, x) = derive(ViewKind::Split, &b, &[ViewArg::Const(2)]).unwrap();
        assert_eq!(d, vec![BankSpec::new(2, 2), BankSpec::new(6, 2)]);
        // element (j, i) of the split view is 2i + j
        assert_eq!(x.eval_parent(&[1, 3], &|_| 0), vec![7]);
        let c = [BankSpec::new(8, 2)];
        let i = LinearForm::var("i");
        assert!(derive(ViewKind::Suffix, &c, &[ViewArg::Scaled(3, i.clone())]).is_err());
        let (_, x) = derive(ViewKind::Suffix, &c, &[ViewArg::Scaled(2, i)]).unwrap();
        assert_eq!(
            x.to_parent(&[LinearForm::constant(1)]),
            vec![LinearForm::term("i", 2).add_const(1)]
        );
        assert!(derive(ViewKind::Shrink, &a, &[ViewArg::Const(3)]).is_err());
        assert!(derive(ViewKind::Shrink, &a, &[]).is_err());
    }
}
