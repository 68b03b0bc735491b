//! `rbases`: solve, verify, generate and self-test rainbow basis packings.
//!
//! Exit codes: 0 success, 1 verification failure or invariant violation,
//! 2 input error.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use rainbow_bases::io::{
    generate_instance, parse_decomposition, parse_instance, serialize_decomposition,
    serialize_instance, GenKind, Metadata,
};
use rainbow_bases::oracle::{
    brute_force_addable, check_matroid_axioms, exact_max_decomposition, OracleBudget,
};
use rainbow_bases::selftest::{run_all, run_suite, SelftestConfig};
use rainbow_bases::solver::{is_input_error, solve, verify, Mode, SolverConfig};
use rainbow_bases::{Colour, Coloured, ElementId, Error, Family, Ris};

#[derive(Parser)]
#[command(name = "rbases", version, about = "Disjoint rainbow bases in matroids")]
struct Cli {
    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pack disjoint rainbow bases into an instance.
    Solve(SolveArgs),
    /// Check a decomposition file; exit 0 iff it is valid.
    Verify {
        /// Decomposition file; stdin when omitted.
        input: Option<PathBuf>,
    },
    /// Write a seeded random instance.
    Gen(GenArgs),
    /// Run a brute-force reference computation.
    Oracle {
        #[command(subcommand)]
        op: OracleOp,
    },
    /// Run the randomized consistency suites.
    Selftest(SelftestArgs),
    /// Time the solver over a seeded suite and tabulate k.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file; stdin when omitted.
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// Number of members; defaults to floor((1 - epsilon) n / 2).
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value = "hybrid")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_rounds: Option<usize>,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Write one JSON object per solver round to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// uniform-identical, linear-random or graphic-random.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Field size for linear-random.
    #[arg(long, default_value_t = 5)]
    p: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleOp {
    /// Largest number of disjoint transversal bases, by exhaustive search.
    Exact { input: Option<PathBuf> },
    /// Exhaustive independence-axiom check of the instance's matroid.
    Axioms { input: Option<PathBuf> },
    /// Every (S, b)-addable element, by definition.
    Addable {
        input: Option<PathBuf>,
        /// The set S as JSON `[[element, colour], ...]`, colours 1-based.
        #[arg(long)]
        set: String,
        /// The missing colour b, 1-based.
        #[arg(long)]
        colour: usize,
    },
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run one suite only.
    #[arg(long)]
    suite: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated generator kinds.
    #[arg(long, default_value = "uniform-identical,linear-random(5)")]
    kinds: String,
    /// Comma-separated values of n.
    #[arg(long, default_value = "10,20,40")]
    sizes: String,
    /// Instances per (kind, n).
    #[arg(long, default_value_t = 5)]
    instances: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value = "hybrid")]
    mode: String,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Failure {
    Input(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_input_error(&e) {
            Failure::Input(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn read_input(path: Option<&Path>) -> std::result::Result<String, Failure> {
    match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::Input(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Invalid(format!("cannot write stdout: {e}"))),
    }
}

fn cmd_solve(a: SolveArgs) -> CliResult {
    let inst = parse_instance(&read_input(a.input.as_deref())?)?;
    let cfg = SolverConfig {
        epsilon: a.epsilon,
        f: a.f,
        mode: a.mode.parse()?,
        max_rounds: a.max_rounds,
        seed: a.seed,
        restarts: a.restarts,
        ..Default::default()
    };
    let start = Instant::now();
    let dec = solve(&inst, &cfg)?;
    info!(
        "n = {}, k = {}, volume = {}, {:.2?}",
        inst.n(),
        dec.k,
        dec.volume,
        start.elapsed()
    );
    if let Some(path) = &a.trace {
        let mut lines = String::new();
        for rec in &dec.trace {
            lines.push_str(&serde_json::to_string(rec).expect("trace records serialize"));
            lines.push('\n');
        }
        write_output(Some(path), &lines)?;
    }
    write_output(
        a.out.as_deref(),
        &serialize_decomposition(&inst, &dec, &cfg),
    )
}

fn cmd_verify(input: Option<PathBuf>) -> CliResult {
    let (inst, dec) = parse_decomposition(&read_input(input.as_deref())?)?;
    let report = verify(&inst, &dec);
    if report.is_clean() {
        println!(
            "ok: k = {}, volume = {}, {} members",
            dec.k,
            dec.volume,
            dec.complete.len() + dec.partial.len()
        );
        Ok(())
    } else {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        Err(Failure::Invalid(format!(
            "{} violations",
            report.violations.len()
        )))
    }
}

fn gen_kind(kind: &str, p: u64) -> std::result::Result<GenKind, Failure> {
    Ok(match kind.parse::<GenKind>()? {
        GenKind::LinearRandom { .. } if kind == "linear-random" => GenKind::LinearRandom { p },
        k => k,
    })
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let kind = gen_kind(&a.kind, a.p)?;
    let inst = generate_instance(kind, a.n, a.seed)?;
    let meta = Metadata {
        generator: kind.to_string(),
        seed: a.seed,
    };
    write_output(a.out.as_deref(), &serialize_instance(&inst, Some(meta)))
}

fn parse_set(text: &str, n: usize) -> std::result::Result<Ris, Failure> {
    let pairs: Vec<[usize; 2]> = serde_json::from_str(text)
        .map_err(|e| Failure::Input(format!("--set is not a list of pairs: {e}")))?;
    let mut members = Vec::new();
    for [x, c] in pairs {
        if c == 0 || c > n {
            return Err(Failure::Input(format!("colour {c} outside 1..={n}")));
        }
        members.push(Coloured::new(ElementId(x), Colour::from_one_based(c)));
    }
    Ok(Ris::from_members(n, &members)?)
}

fn cmd_oracle(op: OracleOp) -> CliResult {
    let budget = OracleBudget::default();
    match op {
        OracleOp::Exact { input } => {
            let inst = parse_instance(&read_input(input.as_deref())?)?;
            let (k, bases) = exact_max_decomposition(&inst, &budget)?;
            let out: Vec<Vec<[usize; 2]>> = bases
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|e| [e.element.0, e.colour.one_based()])
                        .collect()
                })
                .collect();
            let doc = serde_json::json!({ "k": k, "bases": out });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
            Ok(())
        }
        OracleOp::Axioms { input } => {
            let inst = parse_instance(&read_input(input.as_deref())?)?;
            let report = check_matroid_axioms(inst.matroid(), &budget)?;
            if report.passes() {
                println!("ok: all independence axioms hold");
                Ok(())
            } else {
                Err(Failure::Invalid(format!("axiom violation: {report:?}")))
            }
        }
        OracleOp::Addable { input, set, colour } => {
            let inst = parse_instance(&read_input(input.as_deref())?)?;
            let n = inst.n();
            if colour == 0 || colour > n {
                return Err(Failure::Input(format!("colour {colour} outside 1..={n}")));
            }
            let s = parse_set(&set, n)?;
            if !inst.check_ris(&s)? {
                return Err(Failure::Input(
                    "--set is not a rainbow independent set".into(),
                ));
            }
            let fam = Family::from_members(vec![s.clone()]);
            let found = brute_force_addable(&inst, &fam, &s, Colour::from_one_based(colour));
            let out: Vec<[usize; 2]> = found
                .iter()
                .map(|e| [e.element.0, e.colour.one_based()])
                .collect();
            println!("{}", serde_json::to_string(&out).expect("json"));
            Ok(())
        }
    }
}

fn cmd_selftest(a: SelftestArgs) -> CliResult {
    let cfg = SelftestConfig {
        n: a.n,
        trials: a.trials,
        seed: a.seed,
    };
    let reports = match &a.suite {
        Some(name) => vec![run_suite(name, &cfg)?],
        None => run_all(&cfg)?,
    };
    let mut failed = 0;
    for r in &reports {
        println!("{r}");
        for msg in &r.failures {
            eprintln!("  {}: {msg}", r.name);
        }
        failed += r.failed;
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{failed} failed trials")))
    }
}

struct BenchRow {
    kind: GenKind,
    n: usize,
    seed: u64,
    k: usize,
    f: usize,
    secs: f64,
    clean: bool,
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let mode: Mode = a.mode.parse()?;
    let kinds = a
        .kinds
        .split(',')
        .map(|k| gen_kind(k.trim(), 5))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let sizes = a
        .sizes
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Input(format!("bad size {s:?}")))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut jobs = Vec::new();
    for &kind in &kinds {
        for &n in &sizes {
            for i in 0..a.instances {
                jobs.push((kind, n, a.seed.wrapping_add(i)));
            }
        }
    }
    let run = |&(kind, n, seed): &(GenKind, usize, u64)| -> Result<BenchRow, Error> {
        let inst = generate_instance(kind, n, seed)?;
        let cfg = SolverConfig {
            epsilon: a.epsilon,
            mode,
            seed,
            restarts: a.restarts,
            ..Default::default()
        };
        let start = Instant::now();
        let dec = solve(&inst, &cfg)?;
        Ok(BenchRow {
            kind,
            n,
            seed,
            k: dec.k,
            f: cfg.target_f(n),
            secs: start.elapsed().as_secs_f64(),
            clean: verify(&inst, &dec).is_clean(),
        })
    };
    let workers = a.jobs.max(1);
    let mut results: Vec<Option<Result<BenchRow, Error>>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let jobs = &jobs;
                let run = &run;
                scope.spawn(move || {
                    (w..jobs.len())
                        .step_by(workers)
                        .map(|i| (i, run(&jobs[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("bench worker panicked") {
                results[i] = Some(r);
            }
        }
    });

    println!(
        "{:<20} {:>4} {:>6} {:>4} {:>4} {:>9}",
        "kind", "n", "seed", "f", "k", "seconds"
    );
    let mut rows = Vec::new();
    for r in results.into_iter().map(|r| r.expect("every job ran")) {
        let row = r?;
        println!(
            "{:<20} {:>4} {:>6} {:>4} {:>4} {:>9.3}",
            row.kind.to_string(),
            row.n,
            row.seed,
            row.f,
            row.k,
            row.secs
        );
        rows.push(row);
    }
    println!();
    println!(
        "{:<20} {:>4} {:>6} {:>6} {:>6} {:>6} {:>9}",
        "kind", "n", "count", "min k", "mean k", "max k", "max secs"
    );
    for &kind in &kinds {
        for &n in &sizes {
            let group: Vec<&BenchRow> =
                rows.iter().filter(|r| r.kind == kind && r.n == n).collect();
            if group.is_empty() {
                continue;
            }
            let ks: Vec<usize> = group.iter().map(|r| r.k).collect();
            let mean = ks.iter().sum::<usize>() as f64 / ks.len() as f64;
            let max_secs = group.iter().map(|r| r.secs).fold(0.0, f64::max);
            println!(
                "{:<20} {:>4} {:>6} {:>6} {:>6.2} {:>6} {:>9.3}",
                kind.to_string(),
                n,
                group.len(),
                ks.iter().min().expect("nonempty"),
                mean,
                ks.iter().max().expect("nonempty"),
                max_secs
            );
        }
    }
    if rows.iter().all(|r| r.clean) {
        Ok(())
    } else {
        Err(Failure::Invalid(
            "a solver output failed verification".into(),
        ))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify { input } => cmd_verify(input),
        Command::Gen(a) => cmd_gen(a),
        Command::Oracle { op } => cmd_oracle(op),
        Command::Selftest(a) => cmd_selftest(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
