//! Command-line front end. Every invocation prints a single JSON document on
//! standard output. Exit codes: 0 when the queried property holds (satisfied,
//! exists, certified, success), 1 when it does not, 2 on usage, input, or
//! guard errors, with a structured error JSON on standard error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use fairalloc::dp_few::{dp_exists_ef1_init, dp_exists_ef_init, DpConfig};
use fairalloc::dp_identical::decide_ef_init_identical;
use fairalloc::fairness::{check_allocation, Notion};
use fairalloc::instances::{mms_harmonic_instance, preset, random_instance, Flavor};
use fairalloc::mms::{check_mms_init, compute_mms, mms_impossibility_certificate};
use fairalloc::model::{Allocation, Instance};
use fairalloc::oracle::{exists_complete, exists_partial, OracleConfig};
use fairalloc::ratio::Ratio;
use fairalloc::reduction::{build_ef1_instance, certify_reduction, pad_to_equitable, Graph};
use fairalloc::round_robin::run_round_robin;

#[derive(Parser)]
#[command(name = "fairalloc", version, about = "Fair allocation with initial utilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report structural violations of an instance file.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        /// Treat violations as warnings (exit 0 anyway).
        #[arg(long)]
        lenient: bool,
    },
    /// Check an allocation against a fairness notion.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long)]
        notion: String,
        /// Approximation factor p/q for mms-init.
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Decide whether a complete allocation satisfying the notion exists.
    Exists {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        notion: String,
        #[arg(long)]
        alpha: Option<String>,
        /// oracle | dp-few | dp-identical
        #[arg(long, default_value = "oracle")]
        method: String,
        /// Allow resources to stay unallocated (oracle only).
        #[arg(long)]
        partial: bool,
    },
    /// Compute an allocation.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "round-robin")]
        algorithm: String,
        /// Write the pick/activation trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Max-min shares, optionally certifying impossibility by counting.
    Mms {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        agent: Option<usize>,
        /// Certify that no alpha-MMS-init allocation exists (identical
        /// resources; requires --alpha).
        #[arg(long)]
        certify_impossible: bool,
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Build the coloring gadget instance from a graph.
    Reduce {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        colors: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pad a graph with isolated vertices for the equitable-coloring step.
    Pad {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        colors: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively certify the reduction equivalence on one input.
    Certify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        colors: usize,
    },
    /// Emit instances: presets, the harmonic construction, or seeded random.
    Gen(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    /// obs1 | ex1 | ex2
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    kind: Option<GenCommand>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Identical-resource instance admitting no alpha-MMS-init allocation.
    MmsHarmonic {
        #[arg(long)]
        alpha: String,
    },
    /// Seeded reproducible instance.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        max_u: u64,
        #[arg(long, default_value_t = 10)]
        max_b: u64,
        /// general | identical | diminishing
        #[arg(long, default_value = "general")]
        flavor: String,
    },
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<fairalloc::Error> for Failure {
    fn from(e: fairalloc::Error) -> Self {
        use fairalloc::Error::*;
        let kind = match e {
            GuardExceeded { .. } => "guard",
            Json(_) => "parse",
            Shape(_) | Index(_) => "input",
            Precondition(_) | InvalidInstance(_) => "precondition",
            Arithmetic(_) => "arithmetic",
            UnknownPreset(_) | InvalidRatio(_) => "usage",
        };
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        kind: "io",
        message: format!("{}: {e}", path.display()),
    })
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, format!("{body}\n")).map_err(|e| Failure {
        kind: "io",
        message: format!("{}: {e}", path.display()),
    })
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Ok(Instance::from_json(&read_file(path)?)?)
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    Ok(Graph::from_json(&read_file(path)?)?)
}

fn parse_alpha(alpha: &Option<String>) -> Result<Option<Ratio>, Failure> {
    alpha
        .as_deref()
        .map(Ratio::from_str)
        .transpose()
        .map_err(Failure::from)
}

/// Enumeration guards, overridable through FAIRALLOC_GUARD.
fn oracle_config() -> Result<OracleConfig, Failure> {
    let mut cfg = OracleConfig::default();
    if let Ok(raw) = std::env::var("FAIRALLOC_GUARD") {
        cfg.max_assignments = raw
            .parse::<u128>()
            .map_err(|_| Failure::usage(format!("FAIRALLOC_GUARD is not an integer: {raw}")))?;
    }
    Ok(cfg)
}

fn emit(document: &serde_json::Value) {
    println!("{document}");
}

/// Returns the exit code for a completed invocation.
fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate { instance, lenient } => {
            let inst = load_instance(&instance)?;
            let report = inst.validate();
            let valid = report.is_strict_valid();
            emit(&json!({
                "valid": valid,
                "mode": if lenient { "lenient" } else { "strict" },
                "violations": report.violations,
            }));
            Ok(if valid || lenient { 0 } else { 1 })
        }
        Command::Check {
            instance,
            allocation,
            notion,
            alpha,
        } => {
            let inst = load_instance(&instance)?;
            let alloc = Allocation::from_json(&read_file(&allocation)?, inst.resources())?;
            let notion = Notion::parse(&notion, parse_alpha(&alpha)?)?;
            match notion {
                Notion::MmsInit(alpha) => {
                    let report = check_mms_init(&inst, &alloc, alpha, &oracle_config()?)?;
                    println!("{}", serde_json::to_string(&report).expect("report serializes"));
                    Ok(if report.satisfied { 0 } else { 1 })
                }
                pairwise => {
                    let report = check_allocation(&inst, &alloc, pairwise)?;
                    println!("{}", serde_json::to_string(&report).expect("report serializes"));
                    Ok(if report.satisfied { 0 } else { 1 })
                }
            }
        }
        Command::Exists {
            instance,
            notion,
            alpha,
            method,
            partial,
        } => {
            let inst = load_instance(&instance)?;
            let parsed = Notion::parse(&notion, parse_alpha(&alpha)?)?;
            let witness_json = |w: &Option<Allocation>| match w {
                Some(a) => serde_json::to_value(a).expect("allocation serializes"),
                None => serde_json::Value::Null,
            };
            let document = match method.as_str() {
                "oracle" => {
                    let cfg = oracle_config()?;
                    let witness = if partial {
                        exists_partial(&inst, parsed, &cfg)?
                    } else {
                        exists_complete(&inst, parsed, &cfg)?
                    };
                    json!({
                        "exists": witness.is_some(),
                        "notion": parsed.as_str(),
                        "method": "oracle",
                        "partial": partial,
                        "witness": witness_json(&witness),
                    })
                }
                "dp-few" => {
                    if partial {
                        return Err(Failure::usage("--partial applies to the oracle only"));
                    }
                    let out = match parsed {
                        Notion::EfInit => dp_exists_ef_init(&inst, &DpConfig::default())?,
                        Notion::Ef1Init => dp_exists_ef1_init(&inst, &DpConfig::default())?,
                        _ => {
                            return Err(Failure::usage(
                                "dp-few decides ef-init or ef1-init",
                            ))
                        }
                    };
                    json!({
                        "exists": out.witness.is_some(),
                        "notion": parsed.as_str(),
                        "method": "dp-few",
                        "states_visited": out.states_visited,
                        "witness": witness_json(&out.witness),
                    })
                }
                "dp-identical" => {
                    if partial {
                        return Err(Failure::usage("--partial applies to the oracle only"));
                    }
                    if !matches!(parsed, Notion::EfInit) {
                        return Err(Failure::usage(
                            "dp-identical decides ef-init; use the oracle for other notions",
                        ));
                    }
                    let out = decide_ef_init_identical(&inst)?;
                    json!({
                        "exists": out.witness.is_some(),
                        "notion": parsed.as_str(),
                        "method": "dp-identical",
                        "h_star": out.analysis.h_star,
                        "t_star": out.analysis.t_star,
                        "caps": out.analysis.caps,
                        "witness": witness_json(&out.witness),
                    })
                }
                other => return Err(Failure::usage(format!("unknown method `{other}`"))),
            };
            let exists = document["exists"].as_bool().unwrap_or(false);
            emit(&document);
            Ok(if exists { 0 } else { 1 })
        }
        Command::Solve {
            instance,
            algorithm,
            trace,
        } => {
            if algorithm != "round-robin" {
                return Err(Failure::usage(format!("unknown algorithm `{algorithm}`")));
            }
            let inst = load_instance(&instance)?;
            let (alloc, pick_trace) = run_round_robin(&inst)?;
            if let Some(path) = trace {
                write_file(&path, &pick_trace.to_canonical_json())?;
            }
            println!("{}", alloc.to_canonical_json());
            Ok(0)
        }
        Command::Mms {
            instance,
            agent,
            certify_impossible,
            alpha,
        } => {
            let inst = load_instance(&instance)?;
            if certify_impossible {
                let alpha = parse_alpha(&alpha)?
                    .ok_or_else(|| Failure::usage("--certify-impossible requires --alpha"))?;
                let cert = mms_impossibility_certificate(&inst, alpha)?;
                println!("{}", serde_json::to_string(&cert).expect("certificate serializes"));
                return Ok(if cert.certified { 0 } else { 1 });
            }
            if alpha.is_some() {
                return Err(Failure::usage(
                    "--alpha here requires --certify-impossible; to check an allocation use `check --notion mms-init`",
                ));
            }
            let cfg = oracle_config()?;
            match agent {
                Some(i) => {
                    let mu = compute_mms(&inst, i, &cfg)?;
                    emit(&json!({ "agent": i, "mu": mu }));
                }
                None => {
                    let mu = fairalloc::mms::all_shares(&inst, &cfg)?;
                    emit(&json!({ "mu": mu }));
                }
            }
            Ok(0)
        }
        Command::Reduce { graph, colors, out } => {
            let g = load_graph(&graph)?;
            let inst = build_ef1_instance(&g, colors)?;
            let body = inst.to_canonical_json();
            if let Some(path) = out {
                write_file(&path, &body)?;
            }
            println!("{body}");
            Ok(0)
        }
        Command::Pad { graph, colors, out } => {
            let g = load_graph(&graph)?;
            let padded = pad_to_equitable(&g, colors)?;
            let body = padded.to_canonical_json();
            if let Some(path) = out {
                write_file(&path, &body)?;
            }
            println!("{body}");
            Ok(0)
        }
        Command::Certify { graph, colors } => {
            let g = load_graph(&graph)?;
            let report = certify_reduction(&g, colors, &oracle_config()?)?;
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
            Ok(if report.certified { 0 } else { 1 })
        }
        Command::Gen(args) => {
            let inst = match (&args.preset, args.kind) {
                (Some(name), None) => preset(name)?,
                (None, Some(GenCommand::MmsHarmonic { alpha })) => {
                    mms_harmonic_instance(Ratio::from_str(&alpha)?)?
                }
                (None, Some(GenCommand::Random {
                    seed,
                    n,
                    m,
                    max_u,
                    max_b,
                    flavor,
                })) => random_instance(seed, n, m, max_u, max_b, Flavor::from_str(&flavor)?)?,
                _ => {
                    return Err(Failure::usage(
                        "gen needs exactly one of --preset, mms-harmonic, random",
                    ))
                }
            };
            let body = inst.to_canonical_json();
            if let Some(path) = &args.out {
                write_file(path, &body)?;
            }
            println!("{body}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!(
                "{}",
                json!({ "error": failure.message, "kind": failure.kind })
            );
            ExitCode::from(2)
        }
    }
}
