//! `abpasd`: CER curves, first-success histograms, single-word decoding
//! and the acceptance self-test.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use abpasd::abp::{run_abp_list, AbpConfig, Decoder, FinalMetric, GlobalList};
use abpasd::asd::CostMode;
use abpasd::channel::noise_variance;
use abpasd::selftest::{self, Scale, CRITERIA};
use abpasd::sim::{self, Cancel, CodeSpec, DecoderChain};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::SimArgs;

const WORKERS_ENV: &str = "ABPASD_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "abpasd",
    version,
    about = "Adaptive belief propagation with algebraic soft-decision list decoding of Reed-Solomon codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate codeword error rates and write them as CSV.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Output CSV path (stdout if absent).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Histogram of the iteration at which the transmitted word is first listed.
    Histogram {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Decode one received vector read from a file.
    Decode(DecodeArgs),
    /// Run the acceptance criteria.
    Selftest {
        /// Reduced Monte Carlo budgets; verdicts are indicative only.
        #[arg(long)]
        quick: bool,
        /// Run only these criteria (1-based, repeatable).
        #[arg(long = "criterion", value_parser = clap::value_parser!(u64).range(1..=CRITERIA as u64))]
        criteria: Vec<u64>,
    },
}

#[derive(Debug, clap::Args)]
struct DecodeArgs {
    #[arg(long)]
    code: CodeSpec,
    #[arg(long, default_value = "abp-asd")]
    decoder: DecoderChain,
    /// Whitespace- or comma-separated BPSK samples (bit 0 sent as +1), one
    /// per code bit; `#` starts a comment.
    #[arg(long)]
    input: PathBuf,
    /// Treat the input as LLRs rather than channel samples.
    #[arg(long)]
    llr: bool,
    /// Eb/N0 in dB used to scale samples into AWGN LLRs.
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    snr: f64,
    /// Interpolation cost for ASD decoders.
    #[arg(long, default_value = "1000")]
    cost: CostMode,
    #[arg(long, default_value_t = 5)]
    n1: usize,
    #[arg(long, default_value_t = 1)]
    n2: usize,
    #[arg(long, default_value_t = 1)]
    ith: usize,
    #[arg(long, default_value_t = abpasd::abp::DEFAULT_ALPHA1)]
    alpha1: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_workers() -> Result<()> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Simulate { sim, output } => simulate(&sim, output.as_deref()),
        Command::Histogram { sim, output } => histogram(&sim, output.as_deref()),
        Command::Decode(args) => decode(&args),
        Command::Selftest { quick, criteria } => run_selftest(quick, &criteria),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn install_cancel() -> Result<Arc<Cancel>> {
    let cancel = Arc::new(Cancel::new());
    let handle = Arc::clone(&cancel);
    ctrlc::set_handler(move || handle.cancel()).context("installing interrupt handler")?;
    Ok(cancel)
}

fn interrupted(cancel: &Cancel) -> ExitCode {
    if cancel.is_cancelled() {
        eprintln!("interrupted; partial results written");
        ExitCode::from(130)
    } else {
        ExitCode::SUCCESS
    }
}

fn simulate(args: &SimArgs, output: Option<&Path>) -> Result<ExitCode> {
    let cfg = args.build()?;
    let mut out = open_output(output)?;
    let cancel = install_cancel()?;
    writeln!(out, "{}", sim::CSV_HEADER)?;
    out.flush()?;
    let mut write_err = None;
    sim::estimate_cer(&cfg, Some(&cancel), |p| {
        eprintln!(
            "{} dB: {} errors in {} trials, CER {:.3e} ({:.1} s)",
            p.snr_db, p.errors, p.trials, p.cer, p.wall_time_s
        );
        let res = sim::write_csv_row(&mut out, p).and_then(|_| out.flush());
        if let Err(e) = res {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e).context("writing CSV");
    }
    Ok(interrupted(&cancel))
}

fn histogram(args: &SimArgs, output: Option<&Path>) -> Result<ExitCode> {
    let cfg = args.build()?;
    if cfg.snr_db.len() > 1 {
        bail!("histograms take a single SNR point");
    }
    let mut out = open_output(output)?;
    let cancel = install_cancel()?;
    let h = sim::first_success_histogram(&cfg, Some(&cancel))?;
    h.write_csv(&mut out)?;
    out.flush()?;
    Ok(interrupted(&cancel))
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("bad number {t:?}"))
        })
        .collect()
}

fn decode(args: &DecodeArgs) -> Result<ExitCode> {
    let code = args.code.build()?;
    let values = read_samples(&args.input)?;
    if values.len() != code.n_bits() {
        bail!(
            "{} has {} values, the code needs {}",
            args.input.display(),
            values.len(),
            code.n_bits()
        );
    }
    let (y, llr) = if args.llr {
        // No samples to measure distance against; ranking uses the LLRs.
        let y = values.iter().map(|l| l.signum()).collect();
        (y, values)
    } else {
        let var = noise_variance(args.snr, code.rate());
        let llr = values.iter().map(|v| 2.0 * v / var).collect();
        (values, llr)
    };
    let abp = AbpConfig {
        n1: args.n1,
        n2: args.n2,
        it_h: args.ith,
        alpha1: args.alpha1,
        final_metric: if args.llr {
            FinalMetric::LogLikelihood
        } else {
            FinalMetric::Euclidean
        },
        ..AbpConfig::default()
    };
    let inner = args.decoder.inner(args.cost);
    if matches!(args.decoder, DecoderChain::Kv | DecoderChain::AbpAsd)
        && args.cost == CostMode::Infinite
    {
        bail!("decoding needs a finite interpolation cost");
    }
    let (list, decoded) = if args.decoder.uses_abp() {
        let out = run_abp_list(&code, &y, &llr, &abp, &inner)?;
        (out.list, out.decoded)
    } else {
        let mut list = GlobalList::new();
        for w in inner.decode(&code, &llr)? {
            list.insert(&code, &w, &y, &llr, 0);
        }
        let best = list.best(abp.final_metric).map(|e| e.codeword.clone());
        (list, best)
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let join = |w: &[abpasd::gf::Elem]| {
        w.iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    match &decoded {
        Some(w) => writeln!(out, "decoded: {}", join(w))?,
        None => writeln!(out, "decoding failed: empty list")?,
    }
    let mut entries: Vec<_> = list.entries().iter().collect();
    entries.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    for e in entries {
        writeln!(
            out,
            "candidate: {} distance={:.4} iteration={}",
            join(&e.codeword),
            e.distance,
            e.first_iteration
        )?;
    }
    Ok(if decoded.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_selftest(quick: bool, criteria: &[u64]) -> Result<ExitCode> {
    let scale = if quick { Scale::Quick } else { Scale::Full };
    let ids: Vec<usize> = if criteria.is_empty() {
        (1..=CRITERIA).collect()
    } else {
        criteria.iter().map(|&c| c as usize).collect()
    };
    let mut failed = 0;
    for id in ids {
        let report = selftest::run(id, scale)?;
        println!("{report}");
        failed += !report.passed as usize;
    }
    if quick {
        println!("(quick budgets; run without --quick for the stated tolerances)");
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
