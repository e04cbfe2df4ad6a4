//! Design-space sweeps: instantiate a template at every point of a
//! parameter domain and record the checker's verdict.

use std::collections::BTreeMap;
use std::io;
use std::time::Instant;

use fuse_core::diag::Code;
use fuse_core::parse_program;
use fuse_core::typecheck::check_program;
use rayon::prelude::*;
use serde::Serialize;

/// Source text with `@{NAME}` holes.
#[derive(Clone, Debug)]
pub struct Template {
    pub text: String,
    pub holes: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum DseError {
    #[error("unterminated hole at byte {0}")]
    Unterminated(usize),
    #[error("no value for hole `{0}`")]
    Missing(String),
    #[error("domain for `{0}` is empty")]
    EmptyDomain(String),
    #[error("invalid domain file: {0}")]
    Domain(#[from] serde_json::Error),
}

impl Template {
    pub fn parse(text: &str) -> Result<Template, DseError> {
        let mut holes = Vec::new();
        let mut rest = text;
        let mut at = 0;
        while let Some(p) = rest.find("@{") {
            let end = rest[p..].find('}').ok_or(DseError::Unterminated(at + p))?;
            let name = rest[p + 2..p + end].trim().to_string();
            if !holes.contains(&name) {
                holes.push(name);
            }
            at += p + end + 1;
            rest = &rest[p + end + 1..];
        }
        Ok(Template {
            text: text.to_string(),
            holes,
        })
    }

    /// Textual substitution of every hole.
    pub fn instantiate(&self, point: &BTreeMap<String, u64>) -> Result<String, DseError> {
        let mut out = String::with_capacity(self.text.len());
        let mut rest = self.text.as_str();
        while let Some(p) = rest.find("@{") {
            out.push_str(&rest[..p]);
            let end = rest[p..].find('}').unwrap();
            let name = rest[p + 2..p + end].trim();
            let v = point
                .get(name)
                .ok_or_else(|| DseError::Missing(name.to_string()))?;
            out.push_str(&v.to_string());
            rest = &rest[p + end + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// Hole name to candidate values. Points are enumerated in lexicographic
/// order of the names, the last name varying fastest.
#[derive(Clone, Debug)]
pub struct ParamDomain {
    pub params: BTreeMap<String, Vec<u64>>,
}

impl ParamDomain {
    pub fn from_json(text: &str) -> Result<ParamDomain, DseError> {
        let params: BTreeMap<String, Vec<u64>> = serde_json::from_str(text)?;
        if let Some((k, _)) = params.iter().find(|(_, v)| v.is_empty()) {
            return Err(DseError::EmptyDomain(k.clone()));
        }
        Ok(ParamDomain { params })
    }

    pub fn size(&self) -> usize {
        self.params.values().map(Vec::len).product()
    }

    pub fn names(&self) -> Vec<String> {
        self.params.keys().cloned().collect()
    }

    /// The `n`th point in sweep order.
    pub fn point(&self, mut n: usize) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for (k, vs) in self.params.iter().rev() {
            out.insert(k.clone(), vs[n % vs.len()]);
            n /= vs.len();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointVerdict {
    Accepted,
    Rejected,
    ParseError,
}

impl PointVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointVerdict::Accepted => "accepted",
            PointVerdict::Rejected => "rejected",
            PointVerdict::ParseError => "parse_error",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub point: BTreeMap<String, u64>,
    pub verdict: PointVerdict,
    pub code: Option<Code>,
    pub micros: u64,
}

/// Checks one instantiated source.
pub fn verdict_of(src: &str) -> (PointVerdict, Option<Code>) {
    match parse_program(src) {
        Err(d) => (PointVerdict::ParseError, Some(d.code)),
        Ok(p) => match check_program(&p) {
            Ok(_) => (PointVerdict::Accepted, None),
            Err(ds) => (PointVerdict::Rejected, Some(ds[0].code)),
        },
    }
}

fn run_point(t: &Template, d: &ParamDomain, n: usize) -> Result<SweepRow, DseError> {
    let point = d.point(n);
    let src = t.instantiate(&point)?;
    let start = Instant::now();
    let (verdict, code) = verdict_of(&src);
    Ok(SweepRow {
        point,
        verdict,
        code,
        micros: start.elapsed().as_micros() as u64,
    })
}

/// Checks every point of `d`. Rows come back in sweep order whatever the
/// number of worker threads; `jobs == 0` uses all cores.
pub fn sweep(t: &Template, d: &ParamDomain, jobs: usize) -> Result<Vec<SweepRow>, DseError> {
    if let Some(h) = t.holes.iter().find(|h| !d.params.contains_key(*h)) {
        return Err(DseError::Missing(h.clone()));
    }
    if jobs == 1 {
        return (0..d.size()).map(|n| run_point(t, d, n)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..d.size())
            .into_par_iter()
            .map(|n| run_point(t, d, n))
            .collect()
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub accepted: usize,
    pub ratio: f64,
    pub by_verdict: BTreeMap<String, usize>,
    pub by_code: BTreeMap<String, usize>,
}

pub fn summarize(rows: &[SweepRow]) -> Summary {
    let mut s = Summary {
        total: rows.len(),
        ..Summary::default()
    };
    for r in rows {
        *s.by_verdict.entry(r.verdict.as_str().into()).or_default() += 1;
        if let Some(c) = r.code {
            *s.by_code.entry(c.as_str().into()).or_default() += 1;
        }
        if r.verdict == PointVerdict::Accepted {
            s.accepted += 1;
        }
    }
    s.ratio = if s.total == 0 {
        0.0
    } else {
        s.accepted as f64 / s.total as f64
    };
    s
}

/// One CSV row per point: the parameters, then `verdict,error_code,micros`.
pub fn write_csv<W: io::Write>(rows: &[SweepRow], names: &[String], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.extend(["verdict", "error_code", "micros"]);
    out.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = names.iter().map(|n| r.point[n].to_string()).collect();
        rec.push(r.verdict.as_str().into());
        rec.push(r.code.map(|c| c.as_str().to_string()).unwrap_or_default());
        rec.push(r.micros.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Recounts verdicts and codes from CSV text written by [`write_csv`].
pub fn recount_csv(text: &str) -> csv::Result<Summary> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers()?.clone();
    let vi = headers.iter().position(|h| h == "verdict").unwrap_or(0);
    let ci = headers.iter().position(|h| h == "error_code").unwrap_or(0);
    let mut s = Summary::default();
    for rec in rd.records() {
        let rec = rec?;
        s.total += 1;
        let v = &rec[vi];
        *s.by_verdict.entry(v.to_string()).or_default() += 1;
        if v == "accepted" {
            s.accepted += 1;
        }
        if !rec[ci].is_empty() {
            *s.by_code.entry(rec[ci].to_string()).or_default() += 1;
        }
    }
    s.ratio = if s.total == 0 {
        0.0
    } else {
        s.accepted as f64 / s.total as f64
    };
    Ok(s)
}

pub const GEMM_TEMPLATE: &str = include_str!("../templates/gemm.fuse.tpl");
pub const GEMM_DOMAINS: &str = include_str!("../templates/gemm.domains.json");

/// Closed-form legality of a blocked-gemm point, stated directly in terms
/// of the parameters: every banking factor divides the 128-element
/// dimensions, every unroll factor divides its loop's trip count, and every
/// access sees exactly as many banks as copies once the shrink views have
/// divided the banking by the unroll factor.
pub fn gemm_oracle(p: &BTreeMap<String, u64>) -> bool {
    let g = |k: &str| p[k];
    let (b11, b12, b21, b22) = (g("BANK11"), g("BANK12"), g("BANK21"), g("BANK22"));
    let (u1, u2, u3) = (g("UNROLL1"), g("UNROLL2"), g("UNROLL3"));
    let banks_ok = [b11, b12, b21, b22].iter().all(|b| 128 % b == 0);
    let unroll_ok = 128 % u1 == 0 && 8 % u2 == 0 && 8 % u3 == 0;
    // (banking, unroll) for each shrunk dimension: m1 rows/cols, m2 rows/cols,
    // prod rows/cols
    let views = [(b11, u1), (b12, u3), (b11, u3), (b12, u2), (b21, u1), (b22, u2)];
    banks_ok && unroll_ok && views.iter().all(|(b, u)| b % u == 0)
}

/// Number of gemm configurations the original evaluation reports as accepted.
pub const PUBLISHED_GEMM_ACCEPTED: usize = 354;

/// The individual conditions checked by [`gemm_oracle`], by name.
pub fn gemm_conditions(p: &BTreeMap<String, u64>) -> Vec<(&'static str, bool)> {
    let g = |k: &str| p[k];
    let (b11, b12, b21, b22) = (g("BANK11"), g("BANK12"), g("BANK21"), g("BANK22"));
    let (u1, u2, u3) = (g("UNROLL1"), g("UNROLL2"), g("UNROLL3"));
    vec![
        ("banks divide 128", [b11, b12, b21, b22].iter().all(|b| 128 % b == 0)),
        ("UNROLL1 divides 128", 128 % u1 == 0),
        ("UNROLL2 divides 8", 8 % u2 == 0),
        ("UNROLL3 divides 8", 8 % u3 == 0),
        ("UNROLL1 divides BANK11", b11 % u1 == 0),
        ("UNROLL3 divides BANK12", b12 % u3 == 0),
        ("UNROLL3 divides BANK11", b11 % u3 == 0),
        ("UNROLL2 divides BANK12", b12 % u2 == 0),
        ("UNROLL1 divides BANK21", b21 % u1 == 0),
        ("UNROLL2 divides BANK22", b22 % u2 == 0),
    ]
}

/// Rejected points that fail exactly one oracle condition, counted by that
/// condition.
pub fn gemm_near_misses(rows: &[SweepRow]) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for r in rows.iter().filter(|r| r.verdict != PointVerdict::Accepted) {
        let failed: Vec<_> = gemm_conditions(&r.point)
            .into_iter()
            .filter(|(_, ok)| !ok)
            .collect();
        if let [(name, _)] = failed.as_slice() {
            *out.entry(*name).or_default() += 1;
        }
    }
    out
}
