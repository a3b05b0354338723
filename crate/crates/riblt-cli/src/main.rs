//! `riblt`: sketch sets to files, reconcile them offline or over TCP, and
//! run the overhead simulations and threshold analysis.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 protocol or integrity failure.

mod setfile;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use riblt::analysis::{de_fixed_point_curve, solve_eta_star, ThresholdQuery};
use riblt::encoder::{Encoder, EncoderMode};
use riblt::session::{self, SessionConfig, TcpResponder};
use riblt::symbol::{HashKey, Item};
use riblt::{mapping::MappingProfile, sim, wire, Error};

#[derive(Parser)]
#[command(name = "riblt", version, about = "Rateless set reconciliation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Regular,
    Irregular,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMode {
    Overhead,
    Progress,
    Irregular,
    Baseline,
}

#[derive(Subcommand)]
enum Command {
    /// Write a wire-format coded-symbol prefix for a set to a file.
    Sketch {
        /// Set file to encode.
        #[arg(long)]
        set: PathBuf,
        /// Number of coded symbols to emit.
        #[arg(long)]
        cells: u64,
        #[arg(long, value_enum, default_value = "regular")]
        profile: ProfileArg,
        /// Mapping parameter for the regular profile.
        #[arg(long)]
        alpha: Option<f64>,
        /// 128-bit hash key as 32 hex digits (default: all zero).
        #[arg(long)]
        key: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Read the set file as newline-delimited hex.
        #[arg(long)]
        hex: bool,
    },
    /// Decode a sketch file against a local set and print the difference.
    Reconcile {
        #[arg(long)]
        local: PathBuf,
        #[arg(long)]
        remote_sketch: PathBuf,
        #[arg(long, value_enum, default_value = "regular")]
        profile: ProfileArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        key: Option<String>,
        #[arg(long)]
        hex: bool,
    },
    /// Stream coded symbols to anyone who connects.
    Serve {
        #[arg(long)]
        listen: String,
        #[arg(long)]
        set: PathBuf,
        #[arg(long, value_enum, default_value = "regular")]
        profile: ProfileArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        key: Option<String>,
        #[arg(long)]
        hex: bool,
    },
    /// Connect to a server, reconcile, and write the items we are missing.
    Sync {
        #[arg(long)]
        connect: String,
        #[arg(long)]
        set: PathBuf,
        /// Where to write the remote-only items (set-file format).
        #[arg(long)]
        out_diff: PathBuf,
        #[arg(long, value_enum, default_value = "regular")]
        profile: ProfileArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        key: Option<String>,
        #[arg(long)]
        hex: bool,
    },
    /// Monte Carlo overhead, decode-progress, and baseline runs (CSV).
    Simulate {
        #[arg(long, value_enum)]
        mode: SimMode,
        /// Difference sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        d: Vec<u64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mapping parameter (overhead/progress modes).
        #[arg(long)]
        alpha: Option<f64>,
        /// Table size (baseline mode).
        #[arg(long, default_value_t = 128)]
        m: usize,
        /// Cells per item (baseline mode).
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Density-evolution thresholds and fixed-point curves (CSV).
    Analyze {
        /// Alphas to solve the threshold for, comma separated.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        /// Emit the recovered-fraction curve instead of thresholds.
        #[arg(long)]
        fixed_point: bool,
        /// Overheads to evaluate the fixed point at, comma separated.
        #[arg(long, value_delimiter = ',')]
        eta: Vec<f64>,
    },
}

struct CliFailure {
    code: u8,
    message: String,
}

impl CliFailure {
    fn usage(message: impl Into<String>) -> Self {
        CliFailure { code: 1, message: message.into() }
    }
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => 2,
            Error::Malformed(_)
            | Error::HeaderMismatch(_)
            | Error::Incomplete
            | Error::IntegrityFailure
            | Error::NotComplete => 3,
            _ => 1,
        };
        CliFailure { code, message: e.to_string() }
    }
}

impl From<io::Error> for CliFailure {
    fn from(e: io::Error) -> Self {
        CliFailure { code: 2, message: e.to_string() }
    }
}

fn parse_key(key: Option<&str>) -> Result<HashKey, CliFailure> {
    match key {
        None => Ok(HashKey::default()),
        Some(s) => {
            let bytes = setfile::from_hex(s)
                .filter(|b| b.len() == 16)
                .ok_or_else(|| CliFailure::usage("--key must be 32 hex digits"))?;
            Ok(HashKey::new(bytes.try_into().unwrap()))
        }
    }
}

fn build_profile(profile: ProfileArg, alpha: Option<f64>) -> Result<MappingProfile, CliFailure> {
    match (profile, alpha) {
        (ProfileArg::Regular, None) => Ok(MappingProfile::regular()),
        (ProfileArg::Regular, Some(a)) => {
            MappingProfile::regular_with_alpha(a).map_err(CliFailure::from)
        }
        (ProfileArg::Irregular, None) => Ok(MappingProfile::irregular_default()),
        (ProfileArg::Irregular, Some(_)) => Err(CliFailure::usage(
            "--alpha applies to the regular profile only",
        )),
    }
}

fn session_config(
    item_len: usize,
    profile: ProfileArg,
    alpha: Option<f64>,
    key: Option<&str>,
) -> Result<SessionConfig, CliFailure> {
    Ok(SessionConfig::new(item_len)
        .with_profile(build_profile(profile, alpha)?)
        .with_key(parse_key(key)?))
}

fn sorted(mut items: Vec<Item>) -> Vec<Item> {
    items.sort();
    items
}

fn print_difference(remote_only: Vec<Item>, local_only: Vec<Item>) {
    let remote_only = sorted(remote_only);
    let local_only = sorted(local_only);
    println!("remote-only {}", remote_only.len());
    for item in &remote_only {
        println!("{}", setfile::to_hex(item.as_bytes()));
    }
    println!("local-only {}", local_only.len());
    for item in &local_only {
        println!("{}", setfile::to_hex(item.as_bytes()));
    }
}

fn cmd_sketch(
    set: PathBuf,
    cells: u64,
    profile: ProfileArg,
    alpha: Option<f64>,
    key: Option<String>,
    out: PathBuf,
    hex: bool,
) -> Result<(), CliFailure> {
    let (item_len, items) = setfile::read_set_file(&set, hex)?;
    let config = session_config(item_len, profile, alpha, key.as_deref())?;
    let set_size = items.len() as u64;
    let mut encoder = Encoder::with_items(
        item_len,
        config.profile.clone(),
        config.key,
        EncoderMode::Streaming,
        items,
    )?;

    let mut w = BufWriter::new(File::create(&out)?);
    wire::write_header(
        &mut w,
        &wire::StreamHeader {
            item_len,
            set_size,
            irregular: config.profile.is_irregular(),
        },
    )?;
    for i in 0..cells {
        let cell = encoder.emit_next();
        wire::write_cell(&mut w, &cell, i, set_size, &config.profile)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_reconcile(
    local: PathBuf,
    remote_sketch: PathBuf,
    profile: ProfileArg,
    alpha: Option<f64>,
    key: Option<String>,
    hex: bool,
) -> Result<(), CliFailure> {
    let (local_len, local_items) = setfile::read_set_file(&local, hex)?;
    let mut sketch = File::open(&remote_sketch)?;
    let header = wire::read_header(&mut BufReader::new(&mut sketch))?;
    if !local_items.is_empty() && local_len != header.item_len {
        return Err(Error::HeaderMismatch(format!(
            "local items are {local_len} bytes, sketch carries {}-byte items",
            header.item_len
        ))
        .into());
    }
    sketch.seek(SeekFrom::Start(0))?;

    let config = session_config(header.item_len, profile, alpha, key.as_deref())?;
    let (rec, cells) = session::request(&config, local_items, BufReader::new(sketch))?;
    eprintln!("decoded after {cells} cells");
    print_difference(rec.remote_only, rec.local_only);
    Ok(())
}

fn cmd_serve(
    listen: String,
    set: PathBuf,
    profile: ProfileArg,
    alpha: Option<f64>,
    key: Option<String>,
    hex: bool,
) -> Result<(), CliFailure> {
    let (item_len, items) = setfile::read_set_file(&set, hex)?;
    let config = session_config(item_len, profile, alpha, key.as_deref())?;
    let responder = TcpResponder::bind(listen.as_str(), &config, items)?;
    println!("listening on {}", responder.local_addr()?);
    io::stdout().flush()?;
    responder.serve_forever()?;
    Ok(())
}

fn cmd_sync(
    connect: String,
    set: PathBuf,
    out_diff: PathBuf,
    profile: ProfileArg,
    alpha: Option<f64>,
    key: Option<String>,
    hex: bool,
) -> Result<(), CliFailure> {
    let (item_len, items) = setfile::read_set_file(&set, hex)?;
    let config = session_config(item_len, profile, alpha, key.as_deref())?;
    let (rec, cells) = session::sync_tcp(connect.as_str(), &config, items)?;
    eprintln!("decoded after {cells} cells");
    let remote_only = sorted(rec.remote_only);
    setfile::write_set_file(&out_diff, item_len, &remote_only, hex)?;
    println!("remote-only {} (written to {})", remote_only.len(), out_diff.display());
    let local_only = sorted(rec.local_only);
    println!("local-only {}", local_only.len());
    for item in &local_only {
        println!("{}", setfile::to_hex(item.as_bytes()));
    }
    Ok(())
}

fn cmd_simulate(
    mode: SimMode,
    d: Vec<u64>,
    trials: usize,
    seed: u64,
    alpha: Option<f64>,
    m: usize,
    k: usize,
) -> Result<(), CliFailure> {
    if d.is_empty() {
        return Err(CliFailure::usage("--d requires at least one difference size"));
    }
    let csv = match mode {
        SimMode::Overhead => {
            let profile = build_profile(ProfileArg::Regular, alpha)?;
            sim::overhead_csv(&sim::run_overhead(&profile, &d, trials, seed)?)
        }
        SimMode::Progress => {
            if d.len() != 1 {
                return Err(CliFailure::usage("progress mode takes exactly one --d value"));
            }
            let profile = build_profile(ProfileArg::Regular, alpha)?;
            sim::progress_csv(&sim::run_progress(&profile, d[0], trials, seed)?)
        }
        SimMode::Irregular => {
            if alpha.is_some() {
                return Err(CliFailure::usage("--alpha applies to the regular profile only"));
            }
            sim::overhead_csv(&sim::run_irregular(&d, trials, seed)?)
        }
        SimMode::Baseline => sim::baseline_csv(&sim::run_baseline(m, k, &d, trials, seed)?),
    };
    print!("{csv}");
    Ok(())
}

fn cmd_analyze(alpha: Vec<f64>, fixed_point: bool, eta: Vec<f64>) -> Result<(), CliFailure> {
    if fixed_point {
        if alpha.len() != 1 || eta.is_empty() {
            return Err(CliFailure::usage(
                "--fixed-point needs exactly one --alpha and at least one --eta",
            ));
        }
        println!("eta,recovered_fraction");
        for (eta, recovered) in de_fixed_point_curve(alpha[0], &eta)? {
            println!("{eta:.6},{recovered:.6}");
        }
    } else {
        if alpha.is_empty() {
            return Err(CliFailure::usage("--alpha requires at least one value"));
        }
        if !eta.is_empty() {
            return Err(CliFailure::usage("--eta only applies with --fixed-point"));
        }
        println!("alpha,eta_star");
        for a in alpha {
            let eta_star = solve_eta_star(&ThresholdQuery::new(a))?;
            println!("{a:.6},{eta_star:.6}");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliFailure> {
    match cli.command {
        Command::Sketch { set, cells, profile, alpha, key, out, hex } => {
            cmd_sketch(set, cells, profile, alpha, key, out, hex)
        }
        Command::Reconcile { local, remote_sketch, profile, alpha, key, hex } => {
            cmd_reconcile(local, remote_sketch, profile, alpha, key, hex)
        }
        Command::Serve { listen, set, profile, alpha, key, hex } => {
            cmd_serve(listen, set, profile, alpha, key, hex)
        }
        Command::Sync { connect, set, out_diff, profile, alpha, key, hex } => {
            cmd_sync(connect, set, out_diff, profile, alpha, key, hex)
        }
        Command::Simulate { mode, d, trials, seed, alpha, m, k } => {
            cmd_simulate(mode, d, trials, seed, alpha, m, k)
        }
        Command::Analyze { alpha, fixed_point, eta } => cmd_analyze(alpha, fixed_point, eta),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
