// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ceqv::bench::{bench_circuit, chain_circuit, BenchRow};
use ceqv::circuit::{eval_circuit, parse_circuit, Circuit};
use ceqv::compile::{compile_outputs, CanonicalForm};
use ceqv::eqcheck::{check_with, CheckOptions, PairSchedule, Verdict};
use ceqv::format::{format_pair, parse_algebra, parse_assignment};
use ceqv::oracle::{fuzz, oracle_equivalent, validate_weight_bound, FuzzConfig};
use ceqv::{AlgebraSpec, Mode};

#[derive(Parser)]
#[command(
    name = "ceqv",
    version,
    about = "Circuit equivalence for finite 2-nilpotent algebras"
)]
struct Cli {
    /// Worker threads for independent sub-problems.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Coprime,
    General,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Auto => Mode::Auto,
            ModeArg::Coprime => Mode::Coprime,
            ModeArg::General => Mode::General,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(clap::Args)]
struct Inputs {
    /// Algebra file, or the name of a bundled algebra (e.g. `a1`, `z4z3`).
    #[arg(long)]
    algebra: String,
    /// Circuit file.
    #[arg(long)]
    circuit: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the two outputs of a circuit agree everywhere.
    Check {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Search for a separating assignment on refutation.
        #[arg(long)]
        witness: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Compare only hyperplane pairs (c, 0).
        #[arg(long)]
        anchored: bool,
    },
    /// Print the canonical forms of both outputs (coprime algebras only).
    Compile {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Evaluate both outputs on an assignment.
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        /// Comma-separated pairs, e.g. `((1)|(0)),((0)|(1))`.
        #[arg(long)]
        assign: String,
    },
    /// Decide equivalence by exhaustive enumeration.
    Oracle {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare the checker with the oracle on random circuits.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances per algebra.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Algebra files or bundled names; all bundled algebras when omitted.
        #[arg(long)]
        algebra: Vec<String>,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 10)]
        max_gates: usize,
    },
    /// Cross-check declared weight bounds against exhaustive evaluation.
    ValidateWeightBound {
        #[arg(long)]
        algebra: String,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        /// Random circuits per n, besides all single-operation circuits.
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the checker on gate chains; CSV on standard output.
    Bench {
        #[arg(long, default_value = "z4z3")]
        algebra: String,
        /// Binary operation folded along the chains.
        #[arg(long, default_value = "m")]
        op: String,
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 50])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 200, 400])]
        gates: Vec<usize>,
    },
}

fn load_algebra(arg: &str) -> Result<Arc<AlgebraSpec>> {
    let path = Path::new(arg);
    if path.exists() {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let alg = parse_algebra(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(Arc::new(alg));
    }
    match ceqv::corpus::by_name(arg) {
        Some(alg) => Ok(Arc::new(alg)),
        None => bail!("no algebra file or bundled algebra named `{arg}`"),
    }
}

fn load(inputs: &Inputs) -> Result<Circuit> {
    let alg = load_algebra(&inputs.algebra)?;
    let text = std::fs::read_to_string(&inputs.circuit)
        .with_context(|| format!("reading {}", inputs.circuit.display()))?;
    parse_circuit(&text, alg).with_context(|| format!("parsing {}", inputs.circuit.display()))
}

fn verdict_code(v: &Verdict) -> ExitCode {
    if v.is_equivalent() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_verdict(c: &Circuit, v: &Verdict, format: Format) {
    if format == Format::Machine {
        println!("{}", v.machine_line());
        return;
    }
    match v {
        Verdict::Equivalent => println!("{}: outputs are equivalent", c.name),
        Verdict::NotEquivalent {
            witness,
            reason,
            trace,
        } => {
            println!(
                "{}: outputs differ (reason: {reason}, trace: {trace})",
                c.name
            );
            if let Some(w) = witness {
                println!("witness: {}", ceqv::format::format_assignment(w));
                if let Ok((a, b)) = eval_circuit(c, w) {
                    println!("outputs: {} vs {}", format_pair(&a), format_pair(&b));
                }
            }
        }
    }
}

fn print_form(label: &str, f: &CanonicalForm) {
    println!("{label}:");
    for (i, (l, a)) in f.lambda.iter().zip(&f.alpha).enumerate() {
        println!("  x{}: lambda={l} alpha={a}", i + 1);
    }
    println!("  u0={}", f.u_const);
    println!("  hat:");
    for line in f.hat.to_string().lines() {
        println!("    {line}");
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Check {
            inputs,
            mode,
            witness,
            format,
            anchored,
        } => {
            let c = load(&inputs)?;
            let opts = CheckOptions {
                witness,
                schedule: if anchored {
                    PairSchedule::Anchored
                } else {
                    PairSchedule::All
                },
            };
            let report = check_with(&c, mode.into(), &opts)?;
            print_verdict(&c, &report.verdict, format);
            if format == Format::Text {
                println!(
                    "mode: {:?}, instances: {}, max depth: {}",
                    report.mode, report.stats.instances, report.stats.max_depth
                );
            }
            Ok(verdict_code(&report.verdict))
        }
        Command::Compile { inputs } => {
            let c = load(&inputs)?;
            let (a, b) = compile_outputs(&c)?;
            print_form(&c.names[c.outputs.0], &a);
            print_form(&c.names[c.outputs.1], &b);
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { inputs, assign } => {
            let c = load(&inputs)?;
            let asg = parse_assignment(&assign, &c.algebra)?;
            let (a, b) = eval_circuit(&c, &asg)?;
            println!("{} {}", format_pair(&a), format_pair(&b));
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { inputs, format } => {
            let c = load(&inputs)?;
            let v = oracle_equivalent(&c)?;
            print_verdict(&c, &v, format);
            Ok(verdict_code(&v))
        }
        Command::Fuzz {
            seed,
            count,
            algebra,
            max_n,
            max_gates,
        } => {
            let algebras = if algebra.is_empty() {
                ceqv::corpus::all().into_iter().map(Arc::new).collect()
            } else {
                algebra
                    .iter()
                    .map(|a| load_algebra(a))
                    .collect::<Result<Vec<_>>>()?
            };
            let mut cfg = FuzzConfig::new(seed, count, algebras);
            cfg.max_n = max_n;
            cfg.max_gates = max_gates;
            let report = fuzz(&cfg);
            print!("{report}");
            Ok(
                if report.disagree() == 0 && report.invalid_witnesses() == 0 {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                },
            )
        }
        Command::ValidateWeightBound {
            algebra,
            max_n,
            count,
            seed,
        } => {
            let alg = load_algebra(&algebra)?;
            let report = validate_weight_bound(&alg, max_n, count, seed)?;
            if report.primes.is_empty() {
                println!("{}: no shared primes, nothing to validate", alg.name);
            }
            print!("{report}");
            Ok(if report.is_valid() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Bench {
            algebra,
            op,
            n,
            gates,
        } => {
            let alg = load_algebra(&algebra)?;
            println!("{}", BenchRow::HEADER);
            for &nv in &n {
                for &g in &gates {
                    let c = chain_circuit(&alg, &op, nv, g)?;
                    println!("{}", bench_circuit(&c, Mode::Auto, true)?);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build_global()
    {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
