//! Argument parsing and the subcommands behind the `epass` binary.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use epass_core::group::{BackendKind, Bls12Backend, PairingBackend, ToyBackend};
use epass_core::ledger::{Scenario, DEFAULT_DIFFICULTY};
use epass_core::protocol::{self, export::TestSecrets, export::UserPublicJson};
use epass_core::Exec;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use crate::compare::{compare_local, compare_redaction, Comparison};
use crate::measure::Sampler;
use crate::report::{MachineInfo, Report, ReportHeader};
use crate::suite::{run_grid, GridConfig};
use crate::vectors;

/// Exit status for unreadable or malformed input files.
pub const EXIT_BAD_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "epass",
    version,
    about = "Deferred-payment protocol driver and benchmark harness"
)]
pub struct Cli {
    /// Group backend. Scenarios default to their own setting; measurements
    /// default to production.
    #[arg(long, global = true)]
    pub backend: Option<BackendKind>,

    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Directory for reports.
    #[arg(long, global = true, env = "EPASS_OUT_DIR", default_value = "results")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Repetitions {
    /// Timed repetitions per measurement; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Untimed runs before the first measurement.
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
}

impl Repetitions {
    pub fn sampler(self) -> Sampler {
        Sampler::new(self.reps, self.warmup)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a JSON scenario on the ledger simulator and print its trace.
    Demo {
        scenario: PathBuf,
        /// Also write the final chain dump here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Time every protocol phase over a grid of user and bundle sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 24, 32])]
        users: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 24])]
        deferred: Vec<usize>,
        #[command(flatten)]
        reps: Repetitions,
    },
    /// Subset verification with auxiliary information against verifying
    /// each signature on its own.
    CompareLocal {
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 12, 16, 20, 24, 28, 32])]
        deferred: Vec<usize>,
        #[command(flatten)]
        reps: Repetitions,
    },
    /// In-place redaction against issuing and re-mining replacement
    /// transactions.
    CompareRedaction {
        #[arg(long, value_delimiter = ',', default_values_t = [250, 500, 1000, 1500, 2000])]
        txs_per_block: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_DIFFICULTY)]
        difficulty: u64,
        #[command(flatten)]
        reps: Repetitions,
    },
    /// Generate one user's keys and print the public half as JSON.
    Keygen {
        #[arg(long, default_value = "alice")]
        id: String,
        /// Signing-key bound (largest bundle the key can aggregate).
        #[arg(long, default_value_t = 8)]
        bound: usize,
        /// Include the secret scalars, marked test-only.
        #[arg(long)]
        with_secrets: bool,
    },
    /// Print hand-checkable vectors in the 101-element toy group.
    Vectors,
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let measure_backend = cli.backend.unwrap_or(BackendKind::Production);
    match &cli.command {
        Command::Demo { scenario, dump } => demo(scenario, cli.backend, dump.as_deref()),
        Command::Bench {
            users,
            deferred,
            reps,
        } => {
            let cfg = GridConfig {
                users: users.clone(),
                deferred: deferred.clone(),
                sampler: reps.sampler(),
                seed: cli.seed,
            };
            let report = match measure_backend {
                BackendKind::Toy => bench(&ToyBackend::large(), &cfg)?,
                BackendKind::Production => bench(&Bls12Backend, &cfg)?,
            };
            report.save(&cli.out, "bench")?;
            print_rows(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::CompareLocal { deferred, reps } => {
            let sampler = reps.sampler();
            let report = match measure_backend {
                BackendKind::Toy => {
                    local_report(&ToyBackend::large(), deferred, sampler, cli.seed)?
                }
                BackendKind::Production => {
                    local_report(&Bls12Backend, deferred, sampler, cli.seed)?
                }
            };
            report.save(&cli.out, "compare_local")?;
            print_summary(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::CompareRedaction {
            txs_per_block,
            difficulty,
            reps,
        } => {
            let sampler = reps.sampler();
            let report = match measure_backend {
                BackendKind::Toy => redaction_report(
                    &ToyBackend::large(),
                    txs_per_block,
                    *difficulty,
                    sampler,
                    cli.seed,
                )?,
                BackendKind::Production => {
                    redaction_report(&Bls12Backend, txs_per_block, *difficulty, sampler, cli.seed)?
                }
            };
            report.save(&cli.out, "compare_redaction")?;
            print_summary(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Keygen {
            id,
            bound,
            with_secrets,
        } => {
            let value = match cli.backend.unwrap_or(BackendKind::Production) {
                BackendKind::Toy => {
                    keygen_json(ToyBackend::large(), id, *bound, *with_secrets, cli.seed)?
                }
                BackendKind::Production => {
                    keygen_json(Bls12Backend, id, *bound, *with_secrets, cli.seed)?
                }
            };
            println!("{}", serde_json::to_string_pretty(&value)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Vectors => {
            if cli.backend == Some(BackendKind::Production) {
                log::warn!("vectors are defined on the toy group only; ignoring --backend");
            }
            println!("{}", serde_json::to_string_pretty(&vectors::golden())?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn demo(
    path: &Path,
    backend: Option<BackendKind>,
    dump: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Ok(ExitCode::from(EXIT_BAD_INPUT));
        }
    };
    let mut scenario = match Scenario::from_json(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {} is not a valid scenario: {e}", path.display());
            return Ok(ExitCode::from(EXIT_BAD_INPUT));
        }
    };
    if let Some(kind) = backend {
        scenario.backend = kind;
    }
    let outcome = scenario
        .run()
        .with_context(|| format!("running {}", path.display()))?;
    for line in &outcome.trace {
        println!("{line}");
    }
    if let Some(dump_path) = dump {
        std::fs::write(dump_path, serde_json::to_string_pretty(&outcome.dump)?)
            .with_context(|| format!("writing {}", dump_path.display()))?;
    }
    println!("chain valid: {}", outcome.chain_valid);
    if outcome.passed() {
        println!("scenario passed");
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &outcome.failures {
            eprintln!("unexpected outcome: {f}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn header<B: PairingBackend>(b: &B, command: &str, seed: u64, sampler: Sampler) -> ReportHeader {
    ReportHeader {
        command: command.into(),
        backend: b.params(),
        machine: MachineInfo::detect(Exec::default()),
        seed,
        reps: sampler.reps,
        warmup: sampler.warmup,
        smoothed: sampler.smoothed(),
        notes: Vec::new(),
    }
}

pub fn bench<B: PairingBackend>(b: &B, cfg: &GridConfig) -> anyhow::Result<Report> {
    let rows = run_grid(b, cfg)?;
    let mut header = header(b, "bench", cfg.seed, cfg.sampler);
    header.notes.push(
        "warm-up runs precede the first cell only; measured regions are single threaded".into(),
    );
    header.notes.push(
        "bytes on aggregate rows: all ciphertexts plus the aggregate signature, summed over users"
            .into(),
    );
    Ok(Report {
        header,
        rows,
        summary: serde_json::Value::Null,
    })
}

fn comparison_report<B: PairingBackend>(
    b: &B,
    command: &str,
    seed: u64,
    sampler: Sampler,
    cmp: Comparison,
) -> Report {
    let mut header = header(b, command, seed, sampler);
    header
        .notes
        .push("u is always 1; k holds the swept size".into());
    Report {
        header,
        rows: cmp.rows(&b.kind().to_string()),
        summary: json!({
            "candidate": cmp.candidate,
            "baseline": cmp.baseline,
            "points": cmp.points,
            "candidate_fit": cmp.candidate_fit,
            "baseline_fit": cmp.baseline_fit,
            "baseline_monotone": cmp.baseline_monotone(),
        }),
    }
}

pub fn local_report<B: PairingBackend>(
    b: &B,
    ks: &[usize],
    sampler: Sampler,
    seed: u64,
) -> anyhow::Result<Report> {
    let cmp = compare_local(b, ks, sampler, seed)?;
    Ok(comparison_report(b, "compare-local", seed, sampler, cmp))
}

pub fn redaction_report<B: PairingBackend>(
    b: &B,
    sizes: &[usize],
    difficulty: u64,
    sampler: Sampler,
    seed: u64,
) -> anyhow::Result<Report> {
    let cmp = compare_redaction(b, sizes, difficulty, sampler, seed)?;
    let mut report = comparison_report(b, "compare-redaction", seed, sampler, cmp);
    report.header.notes.push(format!("difficulty {difficulty}"));
    Ok(report)
}

fn keygen_json<B: PairingBackend>(
    b: B,
    id: &str,
    bound: usize,
    with_secrets: bool,
    seed: u64,
) -> anyhow::Result<serde_json::Value> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = protocol::setup(b.clone(), bound, &mut rng)?;
    let server = protocol::server_keygen(&params, &mut rng);
    let user = protocol::user_keygen(&params, server.public(), id, &mut rng)?;
    let mut value = json!({
        "backend": b.params(),
        "server_pk": hex::encode(b.encode_g(server.public())),
        "user": UserPublicJson::from_public(&b, &user.public()),
    });
    if with_secrets {
        value["secrets"] = serde_json::to_value(TestSecrets::from_keys(&b, &user))?;
    }
    Ok(value)
}

fn print_rows(report: &Report) {
    println!(
        "{:<16} {:>4} {:>4} {:>12} {:>10}",
        "phase", "u", "k", "ms", "bytes"
    );
    for r in &report.rows {
        println!(
            "{:<16} {:>4} {:>4} {:>12.3} {:>10}",
            r.phase.as_str(),
            r.u,
            r.k,
            r.ms,
            r.bytes.map_or_else(String::new, |b| b.to_string())
        );
    }
}

fn print_summary(report: &Report) {
    print_rows(report);
    if let Some(points) = report.summary.get("points").and_then(|p| p.as_array()) {
        for p in points {
            println!(
                "x={} ratio={:.2}",
                p["x"],
                p["ratio"].as_f64().unwrap_or(f64::NAN)
            );
        }
    }
}
