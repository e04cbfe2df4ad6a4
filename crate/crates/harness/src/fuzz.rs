//! Batch fuzzing over generated core and surface programs.

use std::collections::BTreeMap;

use fuse_core::calculus::{print_program, CoreProgram};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::gen::{generate_well_typed, random_inputs, GenConfig};
use crate::preservation::{compare_with_reference, SurfaceVerdict};
use crate::soundness::{
    assert_progress_preservation, compare_semantics, negative_control, shrink, Agreement,
    ControlReport, Verdict,
};
use crate::surface_gen::{generate_surface, surface_inputs};

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub count: u64,
    pub seed: u64,
    pub fuel: u64,
    /// Number of surface programs; they are reported separately.
    pub surface: u64,
    pub jobs: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            count: 1000,
            seed: 0,
            fuel: 1_000_000,
            surface: 0,
            jobs: 0,
        }
    }
}

/// Verdict for one generated core program.
#[derive(Clone, Debug, Serialize)]
pub struct ProgramRecord {
    pub seed: u64,
    pub digest: String,
    pub verdict: Verdict,
    pub agreement: Agreement,
    /// Minimized program text, present only for failures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

impl ProgramRecord {
    pub fn failed(&self) -> bool {
        self.verdict.is_failure() || matches!(self.agreement, Agreement::Disagree(_))
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CoreSummary {
    pub programs: u64,
    pub outcomes: BTreeMap<String, u64>,
    pub agreements: u64,
    pub disagreements: u64,
    pub stuck: u64,
    pub preservation_violations: u64,
    pub controls: ControlReport,
    pub failures: Vec<ProgramRecord>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SurfaceSummary {
    pub programs: u64,
    pub outcomes: BTreeMap<String, u64>,
    pub mismatches: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FuzzReport {
    pub core: CoreSummary,
    pub surface: SurfaceSummary,
}

impl FuzzReport {
    pub fn violations(&self) -> u64 {
        self.core.stuck
            + self.core.preservation_violations
            + self.core.disagreements
            + self.core.controls.accepted_and_stuck
            + self.surface.mismatches.len() as u64
    }
}

pub fn digest(p: &CoreProgram) -> String {
    let h = Sha256::digest(print_program(p).as_bytes());
    h.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Generates, runs and checks the program for one seed.
pub fn check_seed(seed: u64, fuel: u64) -> (ProgramRecord, ControlReport) {
    let p = generate_well_typed(&GenConfig::with_seed(seed));
    let inputs = random_inputs(&p, seed);
    let verdict = assert_progress_preservation(&p, &inputs, fuel);
    let agreement = compare_semantics(&p, &inputs, fuel);
    let mut controls = ControlReport::default();
    negative_control(&p, &inputs, fuel, &mut controls);
    let mut rec = ProgramRecord {
        seed,
        digest: digest(&p),
        verdict,
        agreement,
        counterexample: None,
    };
    if rec.failed() {
        let small = shrink(&p, |q| {
            assert_progress_preservation(q, &inputs, fuel).is_failure()
                || matches!(compare_semantics(q, &inputs, fuel), Agreement::Disagree(_))
        });
        rec.counterexample = Some(print_program(&small));
    }
    (rec, controls)
}

fn surface_label(v: &SurfaceVerdict) -> String {
    match v {
        SurfaceVerdict::Rejected { code } => format!("rejected {code}"),
        SurfaceVerdict::Equal => "equal".into(),
        SurfaceVerdict::Mismatch { .. } => "mismatch".into(),
        SurfaceVerdict::BothFailed { .. } => "both_failed".into(),
    }
}

/// Runs one surface seed; the verdict and the source.
pub fn check_surface_seed(seed: u64, fuel: u64) -> (SurfaceVerdict, String) {
    let case = generate_surface(seed);
    let inputs = fuse_core::parse_program(&case.source)
        .map(|p| surface_inputs(&p, seed))
        .unwrap_or_default();
    (compare_with_reference(&case.source, &inputs, fuel), case.source)
}

pub fn run_fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .expect("thread pool");
    pool.install(|| {
        let results: Vec<(ProgramRecord, ControlReport)> = (0..cfg.count)
            .into_par_iter()
            .map(|i| check_seed(cfg.seed.wrapping_add(i), cfg.fuel))
            .collect();
        let mut rep = FuzzReport::default();
        for (rec, c) in results {
            let core = &mut rep.core;
            core.programs += 1;
            *core.outcomes.entry(rec.verdict.label().into()).or_default() += 1;
            match &rec.agreement {
                Agreement::Disagree(_) => core.disagreements += 1,
                _ => core.agreements += 1,
            }
            match rec.verdict {
                Verdict::Stuck { .. } => core.stuck += 1,
                Verdict::PreservationViolation { .. } => core.preservation_violations += 1,
                _ => {}
            }
            core.controls.mutants += c.mutants;
            core.controls.rejected += c.rejected;
            core.controls.rejected_and_stuck += c.rejected_and_stuck;
            core.controls.accepted_and_stuck += c.accepted_and_stuck;
            if rec.failed() {
                core.failures.push(rec);
            }
        }
        let surface: Vec<(SurfaceVerdict, String)> = (0..cfg.surface)
            .into_par_iter()
            .map(|i| check_surface_seed(cfg.seed.wrapping_add(i), cfg.fuel))
            .collect();
        for (v, src) in surface {
            rep.surface.programs += 1;
            *rep.surface.outcomes.entry(surface_label(&v)).or_default() += 1;
            if let SurfaceVerdict::Mismatch { detail } = v {
                rep.surface.mismatches.push(format!("{detail}\n{src}"));
            }
        }
        rep
    })
}
