//! Command-line front end for the qudit graph-state toolkit.
//!
//! Three commands: `verify` runs a cross-validation suite and prints its
//! report; `run` executes one secret-sharing protocol end to end and
//! emits a transcript plus a one-line summary; `graph` applies a single
//! symbolic operation to a labelled-graph file and prints the result.
//!
//! All flags are long-form. Exit codes: 0 success, 1 assertion failure
//! (a failed suite check or audit), 2 usage error, 3 I/O or parse error.
//! Every error path prints exactly one line, `error: <code>: <message>`,
//! to stderr. Same arguments + same seed reproduce byte-identical output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use num_complex::Complex64;

use qgs::field::Field;
use qgs::graphstate::{parse_graph, EncodedGraph, LabelledGraph, VertexId};
use qgs::pauli::MeasurementBasis;
use qgs::protocols::cc::{cc_encode, cc_recover, CcOutcome, RecoveryMode};
use qgs::protocols::cq::{cq_run, Eavesdropper};
use qgs::protocols::qq::{qq_run, QuantumSecret};
use qgs::protocols::transcript::Transcript;
use qgs::protocols::SchemeSpec;
use qgs::verify::{run_suite, Suite};

#[derive(Parser)]
#[command(
    name = "qgs",
    version,
    about = "Qudit graph states: verification suites, threshold secret-sharing runs, symbolic graph operations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cross-validation suite and print its check-by-check report.
    Verify {
        /// all | field | pauli | graph | oracle | protocols
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Execute one protocol end to end and print transcript + summary.
    #[command(subcommand)]
    Run(RunKind),
    /// Apply one symbolic operation to a labelled-graph file.
    #[command(subcommand)]
    Graph(GraphOp),
}

#[derive(Subcommand)]
enum RunKind {
    /// Share a classical dit and let a subset attempt recovery.
    Cc {
        /// tree | twothree | ring34 | ring35
        #[arg(long, default_value = "tree")]
        scheme: String,
        /// Field modulus (an odd prime).
        #[arg(long, default_value_t = 3)]
        d: u64,
        /// Player count for the tree scheme.
        #[arg(long)]
        n: Option<u32>,
        /// The dit to share (integer below d).
        #[arg(long)]
        secret: Option<String>,
        /// Comma-separated player ids; defaults to a smallest authorized set.
        #[arg(long)]
        subset: Option<String>,
        /// symbolic | oracle
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the transcript here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Multi-round key distribution between dealer and an authorized subset.
    Cq {
        /// tree | twothree | ring35
        #[arg(long, default_value = "tree")]
        scheme: String,
        #[arg(long, default_value_t = 3)]
        d: u64,
        /// Player count for the tree scheme.
        #[arg(long)]
        n: Option<u32>,
        /// Comma-separated player ids; defaults to a smallest authorized set.
        #[arg(long)]
        subset: Option<String>,
        #[arg(long, default_value_t = 1000)]
        rounds: u64,
        /// Insert an intercept-resend eavesdropper on every share qudit.
        #[arg(long)]
        eavesdrop: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the transcript here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Teleport a qudit secret into the share graph; decode or audit denial.
    Qq {
        /// tree | twothree | ring35
        #[arg(long, default_value = "tree")]
        scheme: String,
        #[arg(long, default_value_t = 3)]
        d: u64,
        /// Player count for the tree scheme.
        #[arg(long)]
        n: Option<u32>,
        /// Basis dit, or d comma-separated real amplitudes (normalized).
        #[arg(long)]
        secret: Option<String>,
        /// Comma-separated player ids; defaults to a smallest authorized set.
        #[arg(long)]
        subset: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the transcript here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GraphOp {
    /// Parse a graph file and print its canonical text form.
    Show { file: PathBuf },
    /// Measure one vertex symbolically and print the reduced graph.
    Measure {
        file: PathBuf,
        /// Vertex id to measure.
        vertex: u32,
        /// Z, XZ, or X<m>Z (e.g. X2Z).
        #[arg(long)]
        basis: String,
        /// Outcome exponent s (the measured eigenvalue is w^s).
        #[arg(long)]
        outcome: u64,
    },
    /// Shuffle a z-label along an edge and print the relabelled graph.
    Shuffle {
        file: PathBuf,
        /// Vertex whose z-label is cleared.
        from: u32,
        /// Neighbour receiving the compensating labels.
        to: u32,
    },
}

enum CliError {
    Usage(String),
    Io(String),
    Parse(String),
    Assertion(String),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Assertion(_) => "assertion",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Parse(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Io(m)
            | CliError::Parse(m)
            | CliError::Assertion(m) => m,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.code(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Verify { suite, seed } => cmd_verify(&suite, seed),
        Command::Run(kind) => match kind {
            RunKind::Cc {
                scheme,
                d,
                n,
                secret,
                subset,
                mode,
                seed,
                output,
            } => cmd_run_cc(&scheme, d, n, secret, subset, mode, seed, output),
            RunKind::Cq {
                scheme,
                d,
                n,
                subset,
                rounds,
                eavesdrop,
                seed,
                output,
            } => cmd_run_cq(&scheme, d, n, subset, rounds, eavesdrop, seed, output),
            RunKind::Qq {
                scheme,
                d,
                n,
                secret,
                subset,
                seed,
                output,
            } => cmd_run_qq(&scheme, d, n, secret, subset, seed, output),
        },
        Command::Graph(op) => match op {
            GraphOp::Show { file } => {
                let g = load_graph(&file)?;
                print!("{}", g.to_text());
                Ok(())
            }
            GraphOp::Measure {
                file,
                vertex,
                basis,
                outcome,
            } => cmd_graph_measure(&file, vertex, &basis, outcome),
            GraphOp::Shuffle { file, from, to } => {
                let g = load_graph(&file)?;
                let shuffled = g
                    .shuffle(VertexId(from), VertexId(to))
                    .map_err(|e| usage(e.to_string()))?;
                print!("{}", shuffled.to_text());
                Ok(())
            }
        },
    }
}

fn cmd_verify(suite: &str, seed: u64) -> Result<(), CliError> {
    let suite: Suite = suite
        .parse()
        .map_err(|_| usage(format!("unknown suite {suite:?} (all, field, pauli, graph, oracle, protocols)")))?;
    let report = run_suite(suite, seed);
    print!("{}", report.render());
    if report.passed() {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        Err(CliError::Assertion(format!(
            "suite {} failed {failed} check(s)",
            report.suite
        )))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Cc,
    Cq,
    Qq,
}

fn scheme_for(kind: Kind, name: &str, d: u64, n: Option<u32>) -> Result<SchemeSpec, CliError> {
    if n.is_some() && name != "tree" {
        return Err(usage(format!("--n applies to the tree scheme only, not {name}")));
    }
    let players = n.unwrap_or(3);
    if name == "tree" && players < 2 {
        return Err(usage("tree scheme needs at least 2 players"));
    }
    let built = match (kind, name) {
        (Kind::Cc, "tree") => SchemeSpec::cc_tree(d, players),
        (Kind::Cc, "twothree") => SchemeSpec::cc_twothree(d),
        (Kind::Cc, "ring34") => SchemeSpec::cc_ring34(d),
        (Kind::Cc, "ring35") => SchemeSpec::cc_ring35(d),
        (Kind::Cq, "tree") => SchemeSpec::cq_tree(d, players),
        (Kind::Cq, "twothree") => SchemeSpec::cq_twothree(d),
        (Kind::Cq, "ring35") => SchemeSpec::cq_ring35(d),
        (Kind::Qq, "tree") => SchemeSpec::qq_tree(d, players),
        (Kind::Qq, "twothree") => SchemeSpec::qq_twothree(d),
        (Kind::Qq, "ring35") => SchemeSpec::qq_ring35(d),
        (Kind::Cq | Kind::Qq, "ring34") => {
            return Err(usage("scheme ring34 is classical-only; use it with `run cc`"));
        }
        _ => {
            return Err(usage(format!(
                "unknown scheme {name:?} (tree, twothree, ring34, ring35)"
            )));
        }
    };
    built.map_err(|e| usage(e.to_string()))
}

fn parse_subset(raw: &str) -> Result<Vec<VertexId>, CliError> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<u32>()
                .map(VertexId)
                .map_err(|_| usage(format!("invalid vertex id {part:?} in --subset")))
        })
        .collect()
}

fn chosen_subset(scheme: &SchemeSpec, subset: Option<&str>) -> Result<Vec<VertexId>, CliError> {
    match subset {
        Some(raw) => parse_subset(raw),
        None => Ok(scheme.default_subset()),
    }
}

fn parse_dit(field: Field, raw: &str) -> Result<qgs::field::FieldElement, CliError> {
    let value: u64 = raw
        .trim()
        .parse()
        .map_err(|_| usage(format!("invalid dit {raw:?} (expected an integer below d)")))?;
    field.checked_elem(value).map_err(|e| usage(e.to_string()))
}

/// Transcript destination: a file when `--output` is given, stdout otherwise.
fn emit(transcript: &Transcript, output: Option<&Path>) -> Result<(), CliError> {
    let text = transcript.render();
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Exit-1 gate shared by all `run` commands: a protocol run whose
/// transcript carries a failed audit is an assertion failure.
fn audit_gate(transcript: &Transcript) -> Result<(), CliError> {
    match transcript.audits().iter().find(|a| !a.pass) {
        None => Ok(()),
        Some(a) => Err(CliError::Assertion(format!(
            "audit {} failed with value {}",
            a.name, a.value
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run_cc(
    scheme: &str,
    d: u64,
    n: Option<u32>,
    secret: Option<String>,
    subset: Option<String>,
    mode: Option<String>,
    seed: u64,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let scheme = scheme_for(Kind::Cc, scheme, d, n)?;
    let raw = secret.unwrap_or_else(|| "1".to_string());
    if raw.contains(',') {
        return Err(usage("cc shares a classical dit; amplitude lists are for `run qq`"));
    }
    let s = parse_dit(scheme.field(), &raw)?;
    let subset = chosen_subset(&scheme, subset.as_deref())?;
    let mode = match mode.as_deref() {
        None | Some("oracle") => RecoveryMode::Oracle,
        Some("symbolic") => RecoveryMode::Symbolic,
        Some(other) => return Err(usage(format!("unknown --mode {other:?} (symbolic, oracle)"))),
    };
    let encoded = cc_encode(&scheme, s);
    let outcome =
        cc_recover(&scheme, &encoded, &subset, mode, seed).map_err(|e| usage(e.to_string()))?;
    let (transcript, summary) = match outcome {
        CcOutcome::Recovered {
            secret, transcript, ..
        } => {
            let line = format!("recovered {}", secret.value());
            (transcript, line)
        }
        CcOutcome::Denied {
            certificate,
            transcript,
        } => {
            let line = match &certificate {
                Some(moves) => format!("denied, certificate {} move(s)", moves.len()),
                None => "denied, no certificate found".to_string(),
            };
            (transcript, line)
        }
    };
    emit(&transcript, output.as_deref())?;
    println!("{summary}");
    audit_gate(&transcript)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run_cq(
    scheme: &str,
    d: u64,
    n: Option<u32>,
    subset: Option<String>,
    rounds: u64,
    eavesdrop: bool,
    seed: u64,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let scheme = scheme_for(Kind::Cq, scheme, d, n)?;
    let subset = chosen_subset(&scheme, subset.as_deref())?;
    let eve = if eavesdrop {
        Eavesdropper::InterceptResend
    } else {
        Eavesdropper::None
    };
    let result =
        cq_run(&scheme, Some(&subset), rounds, eve, seed).map_err(|e| usage(e.to_string()))?;
    emit(&result.transcript, output.as_deref())?;
    println!(
        "kept {} of {} rounds, key length {}, violations {} of {} sacrificed",
        result.kept,
        result.rounds,
        result.key.len(),
        result.violations,
        result.sacrificed
    );
    audit_gate(&result.transcript)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run_qq(
    scheme: &str,
    d: u64,
    n: Option<u32>,
    secret: Option<String>,
    subset: Option<String>,
    seed: u64,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let scheme = scheme_for(Kind::Qq, scheme, d, n)?;
    let field = scheme.field();
    let secret = parse_qq_secret(field, secret.as_deref())?;
    let subset = chosen_subset(&scheme, subset.as_deref())?;
    let (summary, transcript) =
        qq_run(&scheme, &secret, Some(&subset), seed).map_err(|e| usage(e.to_string()))?;
    emit(&transcript, output.as_deref())?;
    if summary.authorized {
        let site = summary.output_site.map(|v| v.0).unwrap_or_default();
        let fidelity = summary.fidelity.unwrap_or_default();
        println!("decoded at player {site}, fidelity {fidelity:.6}");
    } else {
        let td = summary.max_trace_distance.unwrap_or_default();
        println!("denied, max trace distance {td:.3}");
    }
    audit_gate(&transcript)
}

/// `--secret` for qq: a bare integer selects a basis state; d
/// comma-separated reals give the amplitude vector (normalized here).
fn parse_qq_secret(field: Field, raw: Option<&str>) -> Result<QuantumSecret, CliError> {
    let Some(raw) = raw else {
        return Ok(QuantumSecret::basis(field, field.one()));
    };
    if !raw.contains(',') {
        let dit = parse_dit(field, raw)?;
        return Ok(QuantumSecret::basis(field, dit));
    }
    let mut amps = Vec::new();
    for part in raw.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| usage(format!("invalid amplitude {part:?} in --secret")))?;
        amps.push(Complex64::new(v, 0.0));
    }
    if amps.len() != field.modulus() as usize {
        return Err(usage(format!(
            "expected {} amplitudes, got {}",
            field.modulus(),
            amps.len()
        )));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-9 {
        return Err(usage("amplitude vector is numerically zero"));
    }
    for a in &mut amps {
        *a /= norm;
    }
    QuantumSecret::from_amplitudes(field, amps).map_err(|e| usage(e.to_string()))
}

fn load_graph(path: &Path) -> Result<LabelledGraph, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_graph(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn cmd_graph_measure(file: &Path, vertex: u32, basis: &str, outcome: u64) -> Result<(), CliError> {
    let g = load_graph(file)?;
    let field = g.field();
    let encoded = EncodedGraph::new(g).map_err(|e| usage(e.to_string()))?;
    let basis = MeasurementBasis::parse(basis, field).map_err(|e| usage(e.to_string()))?;
    let outcome = field
        .checked_elem(outcome)
        .map_err(|e| usage(e.to_string()))?;
    let result = encoded
        .measure_symbolic(VertexId(vertex), basis, outcome)
        .map_err(|e| usage(e.to_string()))?;
    print!("{}", result.reduced.to_text());
    Ok(())
}
