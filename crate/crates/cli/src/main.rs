use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fuse_core::ast::{Program, ScalarType};
use fuse_core::backend::{emit_cxx, emit_plan};
use fuse_core::calculus::{print_program, run_to_completion, Env, Outcome, Rho, Value};
use fuse_core::elaborate::{elaborate, elaborate_forced, Elaborated};
use fuse_core::typecheck::check_program;
use fuse_core::{parse_program, Diagnostic};
use fuse_harness::dse::{summarize, sweep, write_csv, ParamDomain, Template};
use fuse_harness::fuzz::{run_fuzz, FuzzConfig};
use serde_json::{json, Map};

const OK: u8 = 0;
const TYPE_ERROR: u8 = 1;
const PARSE_ERROR: u8 = 2;
const STUCK: u8 = 3;
const USAGE: u8 = 4;
const RUNTIME: u8 = 5;

#[derive(Parser)]
#[command(name = "fuse", version, about = "Type checker and compiler for banked-memory accelerator programs")]
struct Cli {
    /// Print extra progress information on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Type-check a program.
    Check {
        file: PathBuf,
        /// Print the acceptance report.
        #[arg(long, value_enum)]
        report: Option<Format>,
    },
    /// Print the elaborated core program.
    Desugar { file: PathBuf },
    /// Run a program under the checked semantics.
    Interp {
        file: PathBuf,
        /// Run even when the checker rejects the program.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
        /// JSON object mapping memories to arrays and variables to scalars.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Emit HLS C++ as `<stem>.cpp`.
    Emit {
        file: PathBuf,
        /// Output path; defaults to `<stem>.cpp` in the current directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Print the emission plan instead of writing C++.
        #[arg(long, value_enum)]
        plan: Option<Format>,
    },
    /// Generate random well-typed programs and check soundness properties.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
        /// Surface programs compared against the reference evaluator.
        #[arg(long, default_value_t = 0)]
        surface: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Check every point of a parameterized program.
    Dse {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        domains: PathBuf,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

struct Failure(u8);

type Res = Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    eprintln!("fuse: {msg}");
    Failure(USAGE)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Res {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn report(file: &Path, ds: &[Diagnostic]) {
    let name = file.display().to_string();
    for d in ds {
        eprintln!("{}", d.render(&name));
    }
}

fn parse(file: &Path) -> Result<Program, Failure> {
    let src = read(file)?;
    parse_program(&src).map_err(|d| {
        report(file, &[d]);
        Failure(PARSE_ERROR)
    })
}

fn rejected(file: &Path, ds: &[Diagnostic]) -> Failure {
    report(file, ds);
    Failure(if ds.iter().any(|d| d.code.is_syntax()) {
        PARSE_ERROR
    } else {
        TYPE_ERROR
    })
}

/// Data goes to standard output; a closed pipe is not an error.
fn emit_out(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}

fn json_out(v: &impl serde::Serialize) {
    emit_out(&(serde_json::to_string_pretty(v).expect("serializable") + "\n"));
}

fn check(file: &Path, fmt: Option<Format>) -> Res {
    let p = parse(file)?;
    let rep = check_program(&p).map_err(|ds| rejected(file, &ds))?;
    match fmt {
        Some(Format::Json) => json_out(&rep),
        None => emit_out(&format!("{}: ok\n", file.display())),
    }
    Ok(())
}

fn desugar(file: &Path) -> Res {
    let p = parse(file)?;
    let e = elaborate(&p).map_err(|ds| rejected(file, &ds))?;
    emit_out(&print_program(&e.core));
    Ok(())
}

fn scalar(ty: ScalarType, v: &serde_json::Value) -> Option<Value> {
    match v {
        serde_json::Value::Bool(b) if ty == ScalarType::Bool => Some(Value::Bool(*b)),
        serde_json::Value::Number(n) if ty != ScalarType::Bool => Some(Value::from_f64(ty, n.as_f64()?)),
        _ => None,
    }
}

fn load_init(path: &Path, e: &Elaborated, env: &mut Env) -> Res {
    let text = read(path)?;
    let obj: Map<String, serde_json::Value> = serde_json::from_str(&text)
        .map_err(|err| usage(format!("{}: expected a JSON object: {err}", path.display())))?;
    for (name, v) in &obj {
        if let Some(root) = e.memmap.get(name) {
            let arr = v
                .as_array()
                .ok_or_else(|| usage(format!("`{name}` must be an array")))?;
            if arr.len() as u64 != root.layout.len() {
                return Err(usage(format!(
                    "`{name}` has {} elements but {} values were given",
                    root.layout.len(),
                    arr.len()
                )));
            }
            let data = arr
                .iter()
                .map(|x| scalar(root.elem, x))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| usage(format!("`{name}` holds {} values", root.elem)))?;
            e.memmap.scatter(env, name, &data);
        } else {
            let val = match v {
                serde_json::Value::Bool(b) => Value::Bool(*b),
                serde_json::Value::Number(n) => match n.as_i64() {
                    Some(i) => Value::b32(i),
                    None => Value::Float(n.as_f64().unwrap_or_default()),
                },
                _ => return Err(usage(format!("`{name}` must be a number or bool"))),
            };
            env.vars.insert(name.clone(), val);
        }
    }
    Ok(())
}

fn interp(file: &Path, force: bool, fuel: u64, init: Option<&Path>, verbose: u8) -> Res {
    let p = parse(file)?;
    let e = if force {
        let (e, soft) = elaborate_forced(&p).map_err(|d| rejected(file, &[d]))?;
        let name = file.display().to_string();
        for d in soft {
            eprintln!("{} (ignored by --force)", d.render(&name));
        }
        e
    } else {
        elaborate(&p).map_err(|ds| rejected(file, &ds))?
    };
    let mut env = Env::new(&e.core);
    if let Some(path) = init {
        load_init(path, &e, &mut env)?;
    }
    match run_to_completion(env, Rho::new(), e.core.body.clone(), fuel) {
        Outcome::Completed { env, rho, steps } => {
            if verbose > 0 {
                eprintln!("completed in {steps} steps");
            }
            let mems: Map<String, serde_json::Value> = e
                .memmap
                .roots
                .iter()
                .map(|r| {
                    let vals = e.memmap.gather(&env, &r.name);
                    (r.name.clone(), vals.iter().map(Value::to_json).collect())
                })
                .collect();
            let vars: Map<String, serde_json::Value> =
                env.vars.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
            json_out(&json!({
                "memories": mems,
                "vars": vars,
                "rho": rho.iter().collect::<Vec<_>>(),
                "steps": steps,
            }));
            Ok(())
        }
        Outcome::Stuck { reason, steps } => {
            eprintln!("{}: stuck after {steps} steps: {reason}", file.display());
            Err(Failure(STUCK))
        }
        Outcome::RuntimeError { message, steps } => {
            eprintln!("{}: runtime error after {steps} steps: {message}", file.display());
            Err(Failure(RUNTIME))
        }
        Outcome::FuelExhausted { steps } => {
            eprintln!("{}: out of fuel after {steps} steps", file.display());
            Err(Failure(RUNTIME))
        }
    }
}

fn emit(file: &Path, out: Option<&Path>, plan: Option<Format>) -> Res {
    let p = parse(file)?;
    if let Some(Format::Json) = plan {
        let plan = emit_plan(&p).map_err(|ds| rejected(file, &ds))?;
        json_out(&plan);
        return Ok(());
    }
    let text = emit_cxx(&p).map_err(|ds| rejected(file, &ds))?;
    let dest = match out {
        Some(o) => o.to_path_buf(),
        None => {
            let stem = file
                .file_stem()
                .ok_or_else(|| usage(format!("{} has no file name", file.display())))?;
            PathBuf::from(stem).with_extension("cpp")
        }
    };
    write(&dest, &text)?;
    emit_out(&format!("{}\n", dest.display()));
    Ok(())
}

fn fuzz(cfg: FuzzConfig, report_path: Option<&Path>, verbose: u8) -> Res {
    let rep = run_fuzz(&cfg);
    if let Some(path) = report_path {
        let text = serde_json::to_string_pretty(&rep).expect("serializable");
        write(path, &text)?;
    }
    let outcomes: Vec<String> = rep
        .core
        .outcomes
        .iter()
        .map(|(k, v)| format!("{k} {v}"))
        .collect();
    emit_out(&format!(
        "{} core programs ({}), {} stuck, {} preservation violations, {} disagreements\n",
        rep.core.programs,
        outcomes.join(", "),
        rep.core.stuck,
        rep.core.preservation_violations,
        rep.core.disagreements
    ));
    if cfg.surface > 0 {
        emit_out(&format!(
            "{} surface programs, {} mismatches\n",
            rep.surface.programs,
            rep.surface.mismatches.len()
        ));
    }
    if verbose > 0 {
        for f in &rep.core.failures {
            eprintln!("seed {}: {}", f.seed, f.verdict.label());
            if let Some(c) = &f.counterexample {
                eprintln!("{c}");
            }
        }
    }
    if rep.violations() > 0 {
        return Err(Failure(STUCK));
    }
    Ok(())
}

fn dse(template: &Path, domains: &Path, out: Option<&Path>, jobs: usize, verbose: u8) -> Res {
    let t = Template::parse(&read(template)?).map_err(usage)?;
    let d = ParamDomain::from_json(&read(domains)?).map_err(usage)?;
    if verbose > 0 {
        eprintln!("{} points", d.size());
    }
    let rows = sweep(&t, &d, jobs).map_err(usage)?;
    let mut buf = Vec::new();
    write_csv(&rows, &d.names(), &mut buf).map_err(usage)?;
    let csv = String::from_utf8(buf).expect("utf-8");
    match out {
        Some(path) => {
            write(path, &csv)?;
            json_out(&summarize(&rows));
        }
        None => emit_out(&csv),
    }
    Ok(())
}

fn run(cli: Cli) -> Res {
    let v = cli.verbose;
    match cli.cmd {
        Cmd::Check { file, report } => check(&file, report),
        Cmd::Desugar { file } => desugar(&file),
        Cmd::Interp {
            file,
            force,
            fuel,
            init,
        } => interp(&file, force, fuel, init.as_deref(), v),
        Cmd::Emit { file, out, plan } => emit(&file, out.as_deref(), plan),
        Cmd::Fuzz {
            count,
            seed,
            fuel,
            surface,
            report,
            jobs,
        } => fuzz(
            FuzzConfig {
                count,
                seed,
                fuel,
                surface,
                jobs,
            },
            report.as_deref(),
            v,
        ),
        Cmd::Dse {
            template,
            domains,
            out,
            jobs,
        } => dse(&template, &domains, out.as_deref(), jobs, v),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(OK),
        Err(Failure(code)) => ExitCode::from(code),
    }
}
