use std::collections::BTreeSet;

use fuse_core::ast::BankSpec;
use fuse_core::layout::BankLayout;

fn check_bijection(l: &BankLayout) {
    let mut seen = BTreeSet::new();
    for i in 0..l.len() {
        let logical = l.unflatten_logical(i);
        assert_eq!(l.flatten_logical(&logical), i);
        let (b, offs) = l.bank_and_offset(&logical).unwrap();
        assert!(b < l.flat_banks());
        let o = l.flatten_offset(&offs);
        assert!(o < l.bank_len());
        assert!(seen.insert((b, o)), "{logical:?} collides");
        assert_eq!(l.logical_of(b, &offs), logical);
        assert_eq!(l.unflatten_offset(o), offs);
        assert_eq!(l.flatten_bank(&l.unflatten_bank(b)), b);
    }
    assert_eq!(seen.len() as u64, l.flat_banks() * l.bank_len());
}

#[test]
fn one_dimensional_exhaustive() {
    for size in 1..=16 {
        for banks in [1, 2, 4, 8].into_iter().filter(|b| size % b == 0) {
            let l = BankLayout::new(vec![BankSpec::new(size, banks)]);
            check_bijection(&l);
            for i in 0..size {
                assert_eq!(l.bank_and_offset(&[i]).unwrap(), (i % banks, vec![i / banks]));
            }
            assert!(l.bank_and_offset(&[size]).is_err());
        }
    }
}

#[test]
fn two_dimensional_exhaustive() {
    for rows in 1..=16u64 {
        for cols in (1..=16u64).filter(|c| rows * c <= 64) {
            for br in [1, 2, 4, 8].into_iter().filter(|b| rows % b == 0) {
                for bc in [1, 2, 4, 8].into_iter().filter(|b| cols % b == 0) {
                    check_bijection(&BankLayout::new(vec![
                        BankSpec::new(rows, br),
                        BankSpec::new(cols, bc),
                    ]));
                }
            }
        }
    }
}

#[test]
fn round_robin() {
    let l = BankLayout::new(vec![BankSpec::new(16, 8)]);
    assert_eq!(l.bank_and_offset(&[0]).unwrap(), (0, vec![0]));
    assert_eq!(l.bank_and_offset(&[8]).unwrap(), (0, vec![1]));
    let m = BankLayout::new(vec![BankSpec::new(4, 2), BankSpec::new(4, 2)]);
    assert_eq!(m.bank_and_offset(&[1, 1]).unwrap(), (3, vec![0, 0]));
}
