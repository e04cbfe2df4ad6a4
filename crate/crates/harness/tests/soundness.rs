use std::collections::BTreeMap;

use fuse_harness::soundness::{negative_control, ControlReport};
use fuse_harness::*;

#[test]
fn generated_programs_type_check() {
    for seed in 0..300 {
        let p = generate_well_typed(&GenConfig::with_seed(seed));
        let r = fuse_core::calculus::core_check(&p.delta_star(), &p.body);
        assert!(r.is_ok(), "seed {seed}: {r:?}\n{}", fuse_core::calculus::print_program(&p));
    }
}

#[test]
fn progress_and_preservation_hold() {
    let mut labels: BTreeMap<&str, u32> = BTreeMap::new();
    for seed in 0..1000 {
        let p = generate_well_typed(&GenConfig::with_seed(seed));
        let v = assert_progress_preservation(&p, &random_inputs(&p, seed), 20_000);
        assert!(!v.is_failure(), "seed {seed}: {v:?}\n{}", fuse_core::calculus::print_program(&p));
        *labels.entry(v.label()).or_default() += 1;
    }
    assert!(labels["completed"] > 900, "{labels:?}");
}

#[test]
fn semantics_agree() {
    for seed in 0..500 {
        let p = generate_well_typed(&GenConfig::with_seed(seed));
        let a = compare_semantics(&p, &random_inputs(&p, seed), 20_000);
        assert!(!matches!(a, Agreement::Disagree(_)), "seed {seed}: {a:?}");
    }
}

#[test]
fn erasing_ordering_is_caught() {
    let mut rep = ControlReport::default();
    for seed in 0..500 {
        let p = generate_well_typed(&GenConfig::with_seed(seed));
        negative_control(&p, &random_inputs(&p, seed), 20_000, &mut rep);
    }
    assert!(rep.rejected > 0 && rep.rejected_and_stuck > 0, "{rep:?}");
    assert_eq!(rep.accepted_and_stuck, 0);
}

#[test]
fn shrinking_keeps_the_property() {
    let p = generate_well_typed(&GenConfig::with_seed(7));
    let has_store = |q: &fuse_core::calculus::CoreProgram| {
        fuse_core::calculus::print_program(q).contains(":=")
    };
    if has_store(&p) {
        let s = shrink(&p, has_store);
        assert!(has_store(&s));
        assert!(s.body.size() <= p.body.size());
    }
}
