//! `qmac`: capacity regions, channel conversions and inequality fuzzing.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 input error, 3 resource limit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmac::capacity::{optimize_cq_region, optimize_qq_region, RegionOptions, RegionResult};
use qmac::channels::{action_distance, complement, isometry_to_kraus, kraus_to_isometry, Channel};
use qmac::fuzz::{run_suite, Suite};
use qmac::io::{
    parse_json, read_channel_file, region_csv, to_json, ChannelFile, IsometryFile, RegionFile,
    RegionMeta,
};
use qmac::optimize::Budget;
use qmac::region::hausdorff;
use qmac::zoo::{parse_channel_id, NamedChannel};
use qmac::Error;

#[derive(Parser)]
#[command(
    name = "qmac",
    version,
    about = "Capacity regions of quantum multiple access channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace a capacity region numerically.
    Region {
        #[arg(value_enum)]
        kind: RegionKind,
        #[command(flatten)]
        run: RegionArgs,
    },
    /// Inspect or convert a channel.
    Channel {
        #[command(subcommand)]
        action: ChannelAction,
    },
    /// Run a randomized inequality suite.
    Fuzz {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Report file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionKind {
    /// Classical rate for Alice, quantum rate for Bob.
    Cq,
    /// Quantum rates for both senders.
    Qq,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Ssa,
    Dataproc,
    Holevo,
    Jointsub,
    Superadd,
    Metrics,
    Degradable,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Ssa => Suite::Ssa,
            SuiteArg::Dataproc => Suite::Dataproc,
            SuiteArg::Holevo => Suite::Holevo,
            SuiteArg::Jointsub => Suite::Jointsub,
            SuiteArg::Superadd => Suite::Superadd,
            SuiteArg::Metrics => Suite::Metrics,
            SuiteArg::Degradable => Suite::Degradable,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RegionArgs {
    /// Named channel (`erasure:d=2`, `phaseflip:p=0.1`, `identity:da=2,db=2`,
    /// `dephasing:file=...`) or a channel JSON file.
    #[arg(long)]
    channel: String,
    /// Number of channel uses per letter; the optimizer is single-letter.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    seed: u64,
    /// Scalarization weights in the sweep.
    #[arg(long, default_value_t = 33)]
    samples: usize,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    /// Objective evaluations per restart.
    #[arg(long, default_value_t = 2000)]
    evals: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Write only this format; both are written when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum ChannelAction {
    /// Print dimensions, Kraus count, CPTP margin and the commuting-Kraus flag.
    Inspect {
        #[arg(long)]
        channel: String,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Convert between Kraus, Stinespring and complementary forms.
    Convert {
        /// Named channel, channel JSON, or Stinespring JSON (with `--to kraus`).
        #[arg(long)]
        channel: String,
        #[arg(long, value_enum)]
        to: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Stinespring,
    Kraus,
    Complement,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionOverflow { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// `family:key=value` ids name a zoo channel; anything else is a file path.
fn is_file_spec(spec: &str) -> bool {
    match spec.split_once(':') {
        Some((family, _)) => !(family.len() > 1 && family.chars().all(|c| c.is_ascii_alphabetic())),
        None => spec.ends_with(".json"),
    }
}

fn load_channel(spec: &str) -> Result<NamedChannel, Failure> {
    if is_file_spec(spec) {
        let path = Path::new(spec);
        let channel = read_channel_file(path)?;
        let id = path
            .file_stem()
            .map_or(spec.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok(NamedChannel {
            id,
            channel,
            closed_form: None,
            degrading_candidate: None,
        });
    }
    Ok(parse_channel_id(spec)?)
}

/// `QMAC_NUM_WORKERS` caps the worker pool; 1 runs everything on the calling thread.
fn workers() -> Result<Option<usize>, Failure> {
    match std::env::var("QMAC_NUM_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .map(Some)
            .ok_or_else(|| {
                input_error(format!("QMAC_NUM_WORKERS='{v}' is not a positive integer"))
            }),
        Err(_) => Ok(None),
    }
}

fn with_pool<T: Send>(f: impl FnOnce(bool) -> T + Send) -> Result<T, Failure> {
    match workers()? {
        Some(1) => Ok(f(false)),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| input_error(e.to_string()))?;
            Ok(pool.install(|| f(true)))
        }
        None => Ok(f(true)),
    }
}

fn cmd_region(kind: RegionKind, a: &RegionArgs) -> Result<(), Failure> {
    if a.k != 1 {
        return Err(input_error(
            "region optimization is single-letter: --k must be 1 (use the library's tensor_power_rates for k = 2 inputs)",
        ));
    }
    if a.samples < 2 || a.restarts == 0 || a.evals == 0 {
        return Err(input_error(
            "--samples must be at least 2, --restarts and --evals at least 1",
        ));
    }
    let nc = load_channel(&a.channel)?;
    let result: RegionResult = with_pool(|parallel| {
        let opts = RegionOptions {
            samples: a.samples,
            budget: Budget {
                restarts: a.restarts,
                evals: a.evals,
            },
            seed: a.seed,
            parallel,
        };
        match kind {
            RegionKind::Cq => optimize_cq_region(&nc.channel, &opts),
            RegionKind::Qq => optimize_qq_region(&nc.channel, &opts),
        }
    })??;

    let tag = match kind {
        RegionKind::Cq => "cq",
        RegionKind::Qq => "qq",
    };
    let oracle = nc
        .oracle_region(2001)
        .filter(|o| o.axes == result.region.axes);
    let distance = oracle.as_ref().map(|o| hausdorff(&result.region, o));
    let meta = RegionMeta {
        channel: nc.id.clone(),
        k: a.k,
        seed: Some(a.seed),
        samples: Some(a.samples),
        restarts: Some(a.restarts),
        evals: Some(a.evals),
        hausdorff: distance,
    };
    let json = a.format != Some(Format::Csv);
    let csv = a.format != Some(Format::Json);
    if json {
        let file = RegionFile::new(&result.region, meta.clone());
        write_file(&a.out.join(format!("region_{tag}.json")), &to_json(&file))?;
    }
    if csv {
        write_file(
            &a.out.join(format!("region_{tag}.csv")),
            &region_csv(&result.region),
        )?;
    }
    if let Some(o) = &oracle {
        let meta = RegionMeta {
            seed: None,
            samples: None,
            restarts: None,
            evals: None,
            hausdorff: None,
            ..meta
        };
        if json {
            write_file(
                &a.out.join(format!("oracle_{tag}.json")),
                &to_json(&RegionFile::new(o, meta)),
            )?;
        }
        if csv {
            write_file(&a.out.join(format!("oracle_{tag}.csv")), &region_csv(o))?;
        }
    }
    println!(
        "channel={} kind={tag} hull_vertices={} area={:.6}",
        nc.id,
        result.region.hull.len(),
        result.region.area()
    );
    if let Some(d) = distance {
        println!("hausdorff_to_closed_form={d:.3e}");
    }
    Ok(())
}

fn cmd_inspect(spec: &str, format: Option<Format>) -> Result<(), Failure> {
    let nc = load_channel(spec)?;
    let ch = &nc.channel;
    let comm = ch.kraus_commutator_norm();
    let arity = match ch.arity() {
        qmac::channels::Arity::Single => "single",
        qmac::channels::Arity::Mac2 { .. } => "mac2",
    };
    let margin = ch.cptp_margin();
    if format == Some(Format::Json) {
        let v = serde_json::json!({
            "name": nc.id,
            "arity": arity,
            "in_shape": qmac::io::shape_to_json(ch.in_shape()),
            "out_shape": qmac::io::shape_to_json(ch.out_shape()),
            "kraus": ch.kraus().len(),
            "cptp_margin": margin,
            "kraus_commutator_norm": if comm.is_finite() { Some(comm) } else { None },
            "commuting_kraus": comm <= 1e-12,
        });
        print!("{}", to_json(&v));
    } else {
        println!("name={}", nc.id);
        println!("arity={arity}");
        println!("in={} out={}", ch.in_shape(), ch.out_shape());
        println!("kraus={}, cptp_margin={margin:.3e}", ch.kraus().len());
        println!("commuting_kraus={}", comm <= 1e-12);
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_convert(spec: &str, to: Target, out: &Option<PathBuf>) -> Result<(), Failure> {
    // a Stinespring file is recognised by its `matrix` field
    if is_file_spec(spec) {
        let text = fs::read_to_string(spec).map_err(|e| input_error(format!("{spec}: {e}")))?;
        let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
            Failure::from(Error::Format {
                field: "file".into(),
                message: e.to_string(),
            })
        })?;
        if raw.get("matrix").is_some() {
            let iso = parse_json::<IsometryFile>(&text, "isometry")?;
            let v = iso.load()?;
            let ch = isometry_to_kraus(&v)?;
            return match to {
                Target::Kraus => emit(out, &to_json(&ChannelFile::from_channel(&iso.name, &ch))),
                Target::Stinespring => {
                    emit(out, &to_json(&IsometryFile::from_isometry(&iso.name, &v)))
                }
                Target::Complement => emit(
                    out,
                    &to_json(&ChannelFile::from_channel(
                        &format!("{}^c", iso.name),
                        &complement(&ch).single(),
                    )),
                ),
            };
        }
    }
    let nc = load_channel(spec)?;
    let ch: &Channel = &nc.channel;
    match to {
        Target::Kraus => emit(out, &to_json(&ChannelFile::from_channel(&nc.id, ch))),
        Target::Stinespring => {
            let v = kraus_to_isometry(ch)?;
            let back = isometry_to_kraus(&v)?;
            let dist = action_distance(ch, &back)?;
            eprintln!("roundtrip_action_distance={dist:.3e}");
            emit(out, &to_json(&IsometryFile::from_isometry(&nc.id, &v)))
        }
        Target::Complement => emit(
            out,
            &to_json(&ChannelFile::from_channel(
                &format!("{}^c", nc.id),
                &complement(ch).single(),
            )),
        ),
    }
}

fn cmd_fuzz(suite: Suite, trials: usize, seed: u64, out: &Option<PathBuf>) -> Result<(), Failure> {
    if trials == 0 {
        return Err(input_error("--trials must be at least 1"));
    }
    let report = with_pool(|parallel| run_suite(suite, trials, seed, parallel))??;
    emit(out, &to_json(&report))?;
    eprintln!(
        "suite={} trials={} worst_margin={:.3e} ({}) failures={}",
        report.suite,
        report.trials,
        report.worst_margin,
        report.worst_check,
        report.failures.len()
    );
    if report.passed() {
        Ok(())
    } else {
        for f in &report.failures {
            eprintln!(
                "FAIL trial={} seed={} check=\"{}\" margin={:.3e}",
                f.trial, f.seed, f.check, f.margin
            );
        }
        Err(Failure {
            code: 1,
            message: format!("{} invariant failures", report.failures.len()),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Region { kind, run } => cmd_region(*kind, run),
        Command::Channel { action } => match action {
            ChannelAction::Inspect { channel, format } => cmd_inspect(channel, *format),
            ChannelAction::Convert { channel, to, out } => cmd_convert(channel, *to, out),
        },
        Command::Fuzz {
            suite,
            trials,
            seed,
            out,
        } => cmd_fuzz((*suite).into(), *trials, *seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
