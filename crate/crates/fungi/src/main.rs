//! Command-line toolchain: `check`, `run`, `audit`, `solve`.

use std::io::{BufRead, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fungi::ast::Program;
use fungi::audit::{self, Status};
use fungi::dynamics::{self, EvalOpts, HashMode};
use fungi::parse;
use fungi::relations::{self, Budget, Verdict};
use fungi::typecheck::Checker;

#[derive(Parser)]
#[command(
    name = "fungi",
    version,
    about = "Typed incremental computation with names: core calculus toolchain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Rule-application budget for the decision procedures.
    #[arg(long, default_value_t = 64)]
    search_depth: u32,
    /// Kleene unfolding budget for membership and the oracle.
    #[arg(long, default_value_t = 3)]
    star_depth: u32,
    /// Name tree depth enumerated by the semantic oracle.
    #[arg(long, default_value_t = 3)]
    oracle_depth: u32,
}

impl CommonOpts {
    fn budget(&self) -> Budget {
        Budget {
            search_depth: self.search_depth,
            star_depth: self.star_depth,
            oracle_depth: self.oracle_depth,
            ..Budget::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Type-and-effect check a program.
    Check {
        file: String,
        #[command(flatten)]
        common: CommonOpts,
        /// Dump the typing derivation as JSON.
        #[arg(long)]
        emit_derivation: Option<String>,
    },
    /// Evaluate a program: print the result, the store in first-write
    /// order, and the extend/overwrite log.
    Run {
        file: String,
        #[command(flatten)]
        common: CommonOpts,
        /// Use the documented fixture hash instead of the
        /// multiplicative one.
        #[arg(long)]
        documented_hash: bool,
        /// Dump the evaluation derivation as JSON.
        #[arg(long)]
        emit_derivation: Option<String>,
    },
    /// Check, run, and audit: print PRECISE/IMPRECISE, the static and
    /// dynamic effect sets, and their difference.
    Audit {
        file: String,
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        documented_hash: bool,
        /// Seed for input randomization (reserved for fuzz drivers).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Read one obligation per line from stdin; print one verdict per
    /// line.
    Solve {
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check {
            file,
            common,
            emit_derivation,
        } => cmd_check(&file, &common, emit_derivation.as_deref()),
        Command::Run {
            file,
            common,
            documented_hash,
            emit_derivation,
        } => cmd_run(&file, &common, documented_hash, emit_derivation.as_deref()),
        Command::Audit {
            file,
            common,
            documented_hash,
            seed,
        } => cmd_audit(&file, &common, documented_hash, seed),
        Command::Solve { common } => cmd_solve(&common),
    }
}

fn load(file: &str) -> Result<Program, ExitCode> {
    let src = match std::fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {}", file, e);
            return Err(ExitCode::from(2));
        }
    };
    match parse::parse_program(&src) {
        Ok(p) => Ok(p),
        Err(e) => {
            eprintln!("{}:{}: parse error: {}", file, e.span, e.msg);
            Err(ExitCode::from(1))
        }
    }
}

fn cmd_check(file: &str, common: &CommonOpts, emit: Option<&str>) -> ExitCode {
    let prog = match load(file) {
        Ok(p) => p,
        Err(c) => return c,
    };
    let ck = Checker::new(&prog, common.budget());
    match ck.check_program() {
        Ok(derivs) => {
            if let Some(path) = emit {
                let json = serde_json::json!({
                    "schema_version": 1,
                    "derivations": derivs.iter().map(|d| d.to_json()).collect::<Vec<_>>(),
                });
                if let Err(e) = std::fs::write(path, serde_json::to_string_pretty(&json).unwrap())
                {
                    eprintln!("{}: {}", path, e);
                    return ExitCode::from(2);
                }
            }
            println!("check ok");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}:{}: {}", file, e.span, e.msg);
            ExitCode::from(1)
        }
    }
}

fn eval_opts(documented: bool) -> EvalOpts {
    EvalOpts {
        hash: if documented {
            HashMode::Documented
        } else {
            HashMode::Multiplicative
        },
        ..EvalOpts::default()
    }
}

fn deriv_json(d: &dynamics::Derivation) -> serde_json::Value {
    serde_json::json!({
        "rule": d.rule,
        "input": {
            "namespace": d.namespace.to_string(),
            "node": d.node.to_string(),
            "expr": parse::print_expr(&d.expr),
            "store_pointers": d.store_in.pointers().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        },
        "output": {
            "result": parse::print_expr(&d.result),
            "store_pointers": d.store_out.pointers().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        },
        "children": d.children.iter().map(deriv_json).collect::<Vec<_>>(),
    })
}

fn cmd_run(file: &str, _common: &CommonOpts, documented: bool, emit: Option<&str>) -> ExitCode {
    let prog = match load(file) {
        Ok(p) => p,
        Err(c) => return c,
    };
    match dynamics::run_program(&prog, &eval_opts(documented)) {
        Ok((store, terminal, deriv)) => {
            if let Some(path) = emit {
                let json = serde_json::json!({
                    "schema_version": 1,
                    "derivation": deriv_json(&deriv),
                });
                if let Err(e) = std::fs::write(path, serde_json::to_string_pretty(&json).unwrap())
                {
                    eprintln!("{}: {}", path, e);
                    return ExitCode::from(2);
                }
            }
            println!("result: {}", parse::print_expr(&terminal));
            print!("{}", dynamics::dump_store(&store));
            for ev in &store.log {
                println!("log: {}", ev);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}: runtime error: {}", file, e);
            ExitCode::from(1)
        }
    }
}

fn cmd_audit(file: &str, common: &CommonOpts, documented: bool, _seed: u64) -> ExitCode {
    let prog = match load(file) {
        Ok(p) => p,
        Err(c) => return c,
    };
    let budget = common.budget();
    let ck = Checker::new(&prog, budget.clone());
    if let Err(e) = ck.check_program() {
        eprintln!("{}:{}: static rejection: {}", file, e.span, e.msg);
        return ExitCode::from(1);
    }
    let (store, terminal, deriv) = match dynamics::run_program(&prog, &eval_opts(documented)) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("{}: runtime error: {}", file, e);
            return ExitCode::from(1);
        }
    };
    let static_eff = prog
        .main
        .as_ref()
        .map(|(_, t)| t.clone())
        .expect("checked programs have a main");
    let report = audit::precise_effects(&deriv);
    let dyn_writes: Vec<String> = report.writes.iter().map(|n| n.to_string()).collect();
    let dyn_reads: Vec<String> = report.reads.iter().map(|n| n.to_string()).collect();
    match &report.status {
        Status::Precise => println!("PRECISE"),
        Status::Imprecise(c) => {
            println!("IMPRECISE at {} ({} vs {})", c.location, c.path1, c.path2)
        }
    }
    println!("dynamic writes: {{{}}}", dyn_writes.join(", "));
    println!("dynamic reads: {{{}}}", dyn_reads.join(", "));
    match audit::subject_reduction_check(&prog, &static_eff, &store, &terminal, &deriv, &budget) {
        Ok(_) => {
            println!("audit ok: dynamic effects bounded by the static annotation");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("audit failure: {}", e);
            ExitCode::from(1)
        }
    }
}

fn cmd_solve(common: &CommonOpts) -> ExitCode {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let budget = common.budget();
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                eprintln!("stdin: {}", e);
                return ExitCode::from(2);
            }
        };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        match parse::parse_obligation(trimmed) {
            Ok(ob) => {
                let verdict = relations::decide(&ob, &budget);
                let lineout = match verdict {
                    Verdict::Proven(trace) => format!("proven\t{}", trace.join(",")),
                    Verdict::Refuted(w) => format!("refuted\t{}", w),
                    Verdict::Unknown => "unknown\t".to_string(),
                };
                let _ = writeln!(out, "{}", lineout);
            }
            Err(e) => {
                let _ = writeln!(out, "error\t{}: {}", e.span, e.msg);
            }
        }
    }
    ExitCode::SUCCESS
}
