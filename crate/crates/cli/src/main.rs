//! `liftlab`: signatures, games and reductions from the command line.

mod error;
mod keyfile;
mod params;
mod registry;
mod schemes;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use liftlab::estimate::exact_value;
use liftlab::reduction::{lift_check, LiftConfig};
use liftlab::report::Report;
use liftlab::{estimate_value, Seed};

use crate::error::{CliError, CliResult};
use crate::keyfile::{write_atomic, KeyFile, Role};
use crate::params::Params;
use crate::registry::Target;
use crate::schemes::parse_seed;

/// Largest total randomness for which `game` also reports the exact value.
const EXACT_BUDGET: u32 = 16;

#[derive(Parser)]
#[command(
    name = "liftlab",
    version,
    about = "Executable security reductions for hash-based and FDH signatures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key generation, signing and verification.
    #[command(subcommand)]
    Sig(SigCommand),
    /// Estimate a game's value against an adversary fixture.
    Game(GameArgs),
    /// Check a reduction's lifting conditions and effectiveness.
    Reduction(ReductionArgs),
    /// List schemes, games, reductions and fixtures.
    List,
}

#[derive(Subcommand)]
enum SigCommand {
    /// Write `<out>.pub` and `<out>.key`.
    Keygen {
        #[arg(long)]
        scheme: String,
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        seed: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sign a hex message; stateful keys are advanced in place.
    Sign {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        msg: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print ACCEPT (exit 0) or REJECT (exit 1).
    Verify {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        msg: String,
        #[arg(long)]
        sig: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long)]
    seed: String,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GameArgs {
    #[arg(long)]
    game: String,
    #[arg(long)]
    adversary: String,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ReductionArgs {
    #[arg(long)]
    id: String,
    #[arg(long)]
    adversary: Option<String>,
    /// Seeds for the straight-line and dominance checks.
    #[arg(long, default_value_t = 20)]
    checks: u64,
    #[command(flatten)]
    run: RunArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match cli.command {
        Command::Sig(c) => sig(c),
        Command::Game(a) => game(&a),
        Command::Reduction(a) => reduction(&a),
        Command::List => {
            print!("{}", list());
            Ok(())
        }
    };
    match result {
        Ok(()) => {
            eprintln!("elapsed: {:.3?}", started.elapsed());
            ExitCode::SUCCESS
        }
        Err(CliError::Reject) => {
            println!("REJECT");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("liftlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn parse_message(text: &str, bits: usize) -> CliResult<Vec<u8>> {
    let m = hex::decode(text.trim())
        .map_err(|e| CliError::Usage(format!("message is not hex: {e}")))?;
    liftlab::ots::check_message(&m, bits)
        .map_err(|e| CliError::Usage(format!("message must be a {bits}-bit value: {e}")))?;
    Ok(m)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn rebuild(kf: &KeyFile) -> CliResult<schemes::Built> {
    let p = Params::parse(&kf.params).map_err(|e| CliError::Integrity(e.to_string()))?;
    schemes::build(&kf.scheme, &p, None)
}

fn sig(c: SigCommand) -> CliResult<()> {
    match c {
        SigCommand::Keygen {
            scheme,
            params,
            seed,
            out,
        } => {
            let seed = parse_seed(&seed)?;
            let built = schemes::build(&scheme, &Params::parse(&params)?, Some(seed))?;
            let kp = built
                .scheme
                .keygen(&mut liftlab::Tape::seeded(seed.derive("keygen", 0)))?;
            let file = |role, material| KeyFile {
                role,
                scheme: scheme.clone(),
                params: built.canonical.clone(),
                material,
            };
            let (pub_path, key_path) = (with_suffix(&out, ".pub"), with_suffix(&out, ".key"));
            write_atomic(&pub_path, &file(Role::Public, kp.pk).encode())?;
            write_atomic(&key_path, &file(Role::Secret, kp.sk).encode())?;
            println!("{}", pub_path.display());
            println!("{}", key_path.display());
            Ok(())
        }
        SigCommand::Sign { state, msg, out } => {
            let mut kf = KeyFile::load(&state, Role::Secret)?;
            let built = rebuild(&kf)?;
            let m = parse_message(&msg, built.scheme.message_bits())?;
            let sig = built
                .scheme
                .sign(&mut kf.material, &m)
                .map_err(|e| match e {
                    liftlab::Error::Exhausted(n) => {
                        CliError::Exhausted(format!("signer exhausted: all {n} leaves used"))
                    }
                    other => other.into(),
                })?;
            // the advanced state is durable before the signature is released
            if built.scheme.is_stateful() {
                write_atomic(&state, &kf.encode())?;
            }
            write_atomic(&out, &sig)?;
            println!("{}", out.display());
            Ok(())
        }
        SigCommand::Verify { key, msg, sig } => {
            let kf = KeyFile::load(&key, Role::Public)?;
            let built = rebuild(&kf)?;
            let m = parse_message(&msg, built.scheme.message_bits())?;
            let s = fs::read(&sig).map_err(|e| CliError::io(&sig, e))?;
            if built.scheme.verify(&kf.material, &m, &s) {
                println!("ACCEPT");
                Ok(())
            } else {
                Err(CliError::Reject)
            }
        }
    }
}

fn command_echo() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn emit(report: &Report, path: Option<&PathBuf>) -> CliResult<()> {
    match path {
        Some(p) => {
            write_atomic(p, report.to_string().as_bytes())?;
            println!("{}", p.display());
        }
        None => print!("{report}"),
    }
    Ok(())
}

fn check_run(run: &RunArgs) -> CliResult<Seed> {
    if run.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    if !(run.confidence > 0.0 && run.confidence < 1.0) {
        return Err(CliError::Usage("--confidence must lie in (0,1)".into()));
    }
    parse_seed(&run.seed)
}

fn game(a: &GameArgs) -> CliResult<()> {
    let seed = check_run(&a.run)?;
    let (g, adv) = registry::game(&a.game, &a.adversary, &Params::parse(&a.run.params)?)?;
    let est = estimate_value(&g, &adv, a.run.trials, a.run.confidence, seed)?;
    let mut r = Report::new(&command_echo());
    r.section("parameters")
        .field("game", &g.name)
        .field("adversary", &adv.name)
        .field("seed", seed.to_hex())
        .field("trials", a.run.trials)
        .float("confidence", a.run.confidence);
    r.section("estimate").estimate("value", &est);
    r.section("exact");
    match exact_value(&g, &adv, EXACT_BUDGET) {
        Ok(v) => r.field("value", v),
        Err(e) => r.field("value", format!("unavailable ({e})")),
    };
    emit(&r, a.run.report.as_ref())
}

fn reduction(a: &ReductionArgs) -> CliResult<()> {
    let seed = check_run(&a.run)?;
    let target = registry::reduction(
        &a.id,
        a.adversary.as_deref(),
        &Params::parse(&a.run.params)?,
    )?;
    let mut r = Report::new(&command_echo());
    match target {
        Target::Abstract(red) => {
            r.section("parameters")
                .field("reduction", &red.name)
                .field("external", &red.external.name)
                .field("internal", &red.internal.name);
            r.section("beta").beta("claimed_beta", &red.claimed_beta);
        }
        Target::Runnable {
            reduction: red,
            adversaries,
            pairs,
            lambda,
        } => {
            if a.checks == 0 {
                return Err(CliError::Usage("--checks must be positive".into()));
            }
            r.section("parameters")
                .field("reduction", &red.name)
                .field("external", &red.external.name)
                .field("internal", &red.internal.name)
                .field("adversary", &adversaries[0].name)
                .field("seed", seed.to_hex())
                .field("trials", a.run.trials)
                .float("confidence", a.run.confidence)
                .field("checks", a.checks)
                .beta("claimed_beta", &red.claimed_beta);
            if let Some(l) = &lambda {
                r.section("lambda").lambda(l);
            }
            let seeds: Vec<Seed> = (0..a.checks).map(|i| seed.derive("check", i)).collect();
            let verdict = lift_check(
                &red,
                &adversaries,
                &pairs,
                LiftConfig {
                    seeds: &seeds,
                    trials: a.run.trials,
                    confidence: a.run.confidence,
                    master_seed: seed,
                },
            )?;
            r.section("lift").lift(&verdict);
            if let (Some(l), Some(e)) = (&lambda, verdict.effectiveness.first()) {
                let ext = &e.external_estimate;
                let int = &e.internal_estimate;
                r.section("abort")
                    .field("predicted_no_abort_lower_bound", &l.no_abort_lower_bound)
                    .float("abort_rate", ext.aborts as f64 / ext.trials as f64);
                if int.point > 0.0 {
                    r.float("measured_ratio", ext.point / (int.point * int.point));
                }
            }
        }
    }
    emit(&r, a.run.report.as_ref())
}

fn list() -> String {
    let mut out = String::from("schemes (sig --scheme ID --params ...):\n");
    for (id, p) in schemes::SCHEMES {
        out.push_str(&format!("  {id:<20} {p}\n"));
    }
    out.push_str("\ngames (game --game ID --adversary FIXTURE):\n");
    for (id, p, f) in registry::GAMES {
        out.push_str(&format!(
            "  {id:<20} params: {p}\n  {:<20} fixtures: {f}\n",
            ""
        ));
    }
    out.push_str("\nreductions (reduction --id ID [--adversary FIXTURE]):\n");
    for (id, p, f) in registry::REDUCTIONS {
        out.push_str(&format!(
            "  {id:<20} params: {p}\n  {:<20} fixtures: {f}\n",
            ""
        ));
    }
    out
}
