//! Monte Carlo harness: trial orchestration, codeword error rate curves
//! and first-success histograms.
//!
//! Trials are split into fixed-size chunks, each with its own ChaCha
//! stream derived from `(seed, snr index, chunk index)`. Chunks run in
//! fixed-size rounds and the error-count stop is only checked between
//! rounds, so results do not depend on the number of worker threads.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abp::{first_success, run_abp_list, AbpConfig, Decoder, GlobalList, InnerDecoder};
use crate::asd::CostMode;
use crate::channel::{bit_llrs, ChannelModel};
use crate::error::{Error, Result};
use crate::gf::Elem;
use crate::rscode::RsCode;

/// Trials per RNG stream.
pub const CHUNK: u64 = 256;
/// Chunks per round between stopping checks.
pub const ROUND_CHUNKS: u64 = 16;

/// `n,k,m=<bits>[,poly=<hex>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CodeSpec {
    pub n: usize,
    pub k: usize,
    pub m: u32,
    pub poly: Option<u32>,
}

impl CodeSpec {
    pub fn new(n: usize, k: usize, m: u32) -> Self {
        CodeSpec {
            n,
            k,
            m,
            poly: None,
        }
    }

    pub fn build(&self) -> Result<RsCode> {
        RsCode::from_params(self.n, self.k, self.m, self.poly)
    }
}

impl FromStr for CodeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "code must look like \"15,11,m=4[,poly=0x13]\", got {s:?}"
            ))
        };
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let n = parts[0].parse().map_err(|_| bad())?;
        let k = parts[1].parse().map_err(|_| bad())?;
        let mut m = None;
        let mut poly = None;
        for p in &parts[2..] {
            let (key, val) = p.split_once('=').ok_or_else(bad)?;
            match key.trim() {
                "m" => m = Some(val.trim().parse().map_err(|_| bad())?),
                "poly" => {
                    let v = val.trim();
                    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
                        Some(hex) => u32::from_str_radix(hex, 16),
                        None => v.parse(),
                    };
                    poly = Some(parsed.map_err(|_| bad())?);
                }
                _ => return Err(bad()),
            }
        }
        Ok(CodeSpec {
            n,
            k,
            m: m.ok_or_else(bad)?,
            poly,
        })
    }
}

impl TryFrom<String> for CodeSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CodeSpec> for String {
    fn from(c: CodeSpec) -> String {
        c.to_string()
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},m={}", self.n, self.k, self.m)?;
        if let Some(p) = self.poly {
            write!(f, ",poly={p:#x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderChain {
    /// Berlekamp-Massey on the channel hard decisions.
    HdBm,
    /// Koetter-Vardy on the channel posteriors.
    Kv,
    AbpHd,
    AbpBm,
    AbpAsd,
}

impl DecoderChain {
    pub const ALL: [DecoderChain; 5] = [
        DecoderChain::HdBm,
        DecoderChain::Kv,
        DecoderChain::AbpHd,
        DecoderChain::AbpBm,
        DecoderChain::AbpAsd,
    ];

    pub fn uses_abp(&self) -> bool {
        matches!(
            self,
            DecoderChain::AbpHd | DecoderChain::AbpBm | DecoderChain::AbpAsd
        )
    }

    pub fn inner(&self, cost: CostMode) -> InnerDecoder {
        match self {
            DecoderChain::HdBm | DecoderChain::AbpBm => InnerDecoder::Bm,
            DecoderChain::AbpHd => InnerDecoder::Hd,
            DecoderChain::Kv | DecoderChain::AbpAsd => InnerDecoder::Asd(cost),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DecoderChain::HdBm => "hd-bm",
            DecoderChain::Kv => "kv",
            DecoderChain::AbpHd => "abp-hd",
            DecoderChain::AbpBm => "abp-bm",
            DecoderChain::AbpAsd => "abp-asd",
        }
    }
}

impl FromStr for DecoderChain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown decoder {s:?}")))
    }
}

impl fmt::Display for DecoderChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    /// Success means the transmitted word passes the decoder's list
    /// condition at some iteration.
    #[default]
    FastSim,
    /// Full list decoding; success means the final answer is correct.
    RealDecode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub code: CodeSpec,
    #[serde(default)]
    pub channel: ChannelModel,
    pub decoder: DecoderChain,
    #[serde(default)]
    pub abp: AbpConfig,
    #[serde(default = "default_cost")]
    pub cost: CostMode,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    /// Stop a point after this many errors; `None` runs every trial.
    #[serde(default = "default_max_errors")]
    pub max_errors: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: SimMode,
}

fn default_cost() -> CostMode {
    CostMode::Infinite
}

fn default_max_errors() -> Option<u64> {
    Some(100)
}

impl SimConfig {
    pub fn new(code: CodeSpec, decoder: DecoderChain, snr_db: Vec<f64>, trials: u64) -> Self {
        SimConfig {
            code,
            channel: ChannelModel::Awgn,
            decoder,
            abp: AbpConfig::default(),
            cost: CostMode::Infinite,
            snr_db,
            trials,
            max_errors: Some(100),
            seed: 0,
            mode: SimMode::FastSim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("SNR list is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        if self.decoder.uses_abp() {
            self.abp.validate()?;
        }
        let asd = matches!(self.decoder, DecoderChain::Kv | DecoderChain::AbpAsd);
        if asd && self.mode == SimMode::RealDecode && self.cost == CostMode::Infinite {
            return Err(Error::Config(
                "real decoding needs a finite interpolation cost".into(),
            ));
        }
        if let ChannelModel::Rayleigh {
            doppler_hz,
            codeword_sec,
            ..
        } = self.channel
        {
            let valid = |v: f64| v.is_finite() && v >= 0.0;
            if !valid(doppler_hz) || !valid(codeword_sec) || codeword_sec == 0.0 {
                return Err(Error::Config(
                    "fading needs doppler >= 0 and duration > 0".into(),
                ));
            }
        }
        self.code.build().map(|_| ())
    }
}

/// Outcome of one transmitted codeword.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialRecord {
    pub success: bool,
    /// Global iteration of the first success (fast simulation only).
    pub first_success: Option<usize>,
    pub iterations: usize,
    pub delta_sum: f64,
    pub delta_count: usize,
}

/// One point of a CER curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub trials: u64,
    pub errors: u64,
    pub cer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_iters: f64,
    /// Mean carried-over identity fraction, NaN without ABP.
    pub mean_delta: f64,
    pub wall_time_s: f64,
}

/// 95% normal-approximation interval for a Bernoulli rate, clipped to
/// `[0, 1]`.
pub fn normal_ci(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let p = errors as f64 / trials as f64;
    let half = 1.96 * (p * (1.0 - p) / trials as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Cooperative cancellation shared with signal handlers.
#[derive(Debug, Default)]
pub struct Cancel(AtomicBool);

impl Cancel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

fn random_message(code: &RsCode, rng: &mut impl Rng) -> Vec<Elem> {
    let q = code.field().size();
    (0..code.k())
        .map(|_| rng.random_range(0..q) as Elem)
        .collect()
}

/// Encodes random data, transmits it, and runs the configured decoder.
pub fn run_trial(
    code: &RsCode,
    cfg: &SimConfig,
    snr_db: f64,
    rng: &mut impl Rng,
) -> Result<TrialRecord> {
    let tx = code.encode(&random_message(code, rng))?;
    let obs = cfg
        .channel
        .transmit(&code.binary_image(&tx), snr_db, code.rate(), rng);
    let llr = bit_llrs(&obs, cfg.channel.csi_known())?;
    decode_trial(code, cfg, &tx, &obs.y, &llr)
}

/// The decoding half of [`run_trial`], for externally supplied LLRs.
pub fn decode_trial(
    code: &RsCode,
    cfg: &SimConfig,
    tx: &[Elem],
    y: &[f64],
    llr: &[f64],
) -> Result<TrialRecord> {
    let inner = cfg.decoder.inner(cfg.cost);
    let mut rec = TrialRecord::default();
    match (cfg.mode, cfg.decoder.uses_abp()) {
        (SimMode::FastSim, false) => {
            rec.success = inner.would_list(code, llr, tx);
            rec.first_success = rec.success.then_some(0);
        }
        (SimMode::FastSim, true) => {
            let (hit, tel) = first_success(code, llr, tx, &cfg.abp, &inner)?;
            rec.success = hit.is_some();
            rec.first_success = hit;
            rec.iterations = tel.iterations;
            rec.delta_sum = tel.delta_sum;
            rec.delta_count = tel.delta_count;
        }
        (SimMode::RealDecode, false) => {
            let mut list = GlobalList::new();
            for w in inner.decode(code, llr)? {
                list.insert(code, &w, y, llr, 0);
            }
            rec.success = list
                .best(cfg.abp.final_metric)
                .is_some_and(|e| e.codeword == tx);
        }
        (SimMode::RealDecode, true) => {
            let out = run_abp_list(code, y, llr, &cfg.abp, &inner)?;
            rec.success = out.decoded.as_deref() == Some(tx);
            rec.iterations = out.telemetry.iterations;
            rec.delta_sum = out.telemetry.delta_sum;
            rec.delta_count = out.telemetry.delta_count;
        }
    }
    Ok(rec)
}

/// RNG for chunk `chunk` of SNR point `snr_idx`.
pub fn chunk_rng(seed: u64, snr_idx: usize, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_idx as u64) << 32) | chunk);
    rng
}

/// Runs the trials of one SNR point and hands every record to `sink` in
/// trial order. Returns the number of trials run.
fn run_point<S>(
    code: &RsCode,
    cfg: &SimConfig,
    snr_idx: usize,
    cancel: Option<&Cancel>,
    mut sink: S,
) -> Result<u64>
where
    S: FnMut(&TrialRecord) -> bool,
{
    let snr = cfg.snr_db[snr_idx];
    let chunks = cfg.trials.div_ceil(CHUNK);
    let mut done = 0;
    let mut chunk = 0;
    while chunk < chunks {
        if cancel.is_some_and(Cancel::is_cancelled) {
            break;
        }
        let end = (chunk + ROUND_CHUNKS).min(chunks);
        let results: Vec<Result<Vec<TrialRecord>>> = (chunk..end)
            .into_par_iter()
            .map(|c| {
                let mut rng = chunk_rng(cfg.seed, snr_idx, c);
                let count = CHUNK.min(cfg.trials - c * CHUNK);
                (0..count)
                    .map(|_| run_trial(code, cfg, snr, &mut rng))
                    .collect()
            })
            .collect();
        let mut stop = false;
        for r in results {
            for rec in r? {
                done += 1;
                stop |= !sink(&rec);
            }
        }
        chunk = end;
        if stop {
            break;
        }
    }
    Ok(done)
}

/// CER estimate at one SNR point.
pub fn estimate_point(
    code: &RsCode,
    cfg: &SimConfig,
    snr_idx: usize,
    cancel: Option<&Cancel>,
) -> Result<CurvePoint> {
    let start = Instant::now();
    let mut errors = 0u64;
    let mut iters = 0u64;
    let mut dsum = 0.0;
    let mut dcount = 0usize;
    let trials = run_point(code, cfg, snr_idx, cancel, |rec| {
        errors += !rec.success as u64;
        iters += rec.iterations as u64;
        dsum += rec.delta_sum;
        dcount += rec.delta_count;
        cfg.max_errors.is_none_or(|m| errors < m)
    })?;
    let cer = if trials == 0 {
        0.0
    } else {
        errors as f64 / trials as f64
    };
    let (ci_lo, ci_hi) = normal_ci(errors, trials);
    Ok(CurvePoint {
        snr_db: cfg.snr_db[snr_idx],
        trials,
        errors,
        cer,
        ci_lo,
        ci_hi,
        mean_iters: if trials == 0 {
            0.0
        } else {
            iters as f64 / trials as f64
        },
        mean_delta: if dcount == 0 {
            f64::NAN
        } else {
            dsum / dcount as f64
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// CER curve over every configured SNR; `on_point` sees each point as soon
/// as it is finished.
pub fn estimate_cer<F>(
    cfg: &SimConfig,
    cancel: Option<&Cancel>,
    mut on_point: F,
) -> Result<Vec<CurvePoint>>
where
    F: FnMut(&CurvePoint),
{
    cfg.validate()?;
    let code = cfg.code.build()?;
    let mut out = Vec::with_capacity(cfg.snr_db.len());
    for idx in 0..cfg.snr_db.len() {
        if cancel.is_some_and(Cancel::is_cancelled) {
            break;
        }
        let p = estimate_point(&code, cfg, idx, cancel)?;
        on_point(&p);
        out.push(p);
    }
    Ok(out)
}

/// First-success iteration counts over `0..=N1·N2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub snr_db: f64,
    pub n1: usize,
    pub counts: Vec<u64>,
    pub failures: u64,
    pub trials: u64,
}

impl Histogram {
    /// Share of all trials whose first success came at `iteration`, in
    /// percent.
    pub fn percent(&self, iteration: usize) -> f64 {
        100.0 * self.counts[iteration] as f64 / self.trials.max(1) as f64
    }

    pub fn failure_percent(&self) -> f64 {
        100.0 * self.failures as f64 / self.trials.max(1) as f64
    }

    /// Iterations at which a restart begins: `1, N1+1, 2N1+1, ...`.
    pub fn restart_starts(&self) -> Vec<usize> {
        (0..(self.counts.len() - 1) / self.n1)
            .map(|r| r * self.n1 + 1)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "iteration,count,percent,restart_start")?;
        let starts = self.restart_starts();
        for (i, &c) in self.counts.iter().enumerate() {
            writeln!(
                w,
                "{i},{c},{:.6},{}",
                self.percent(i),
                starts.contains(&i) as u8
            )?;
        }
        writeln!(
            w,
            "failure,{},{:.6},0",
            self.failures,
            self.failure_percent()
        )
    }
}

/// Fast-simulation histogram of first-success iterations at the first
/// configured SNR point. Every trial runs (no error-count stop).
pub fn first_success_histogram(cfg: &SimConfig, cancel: Option<&Cancel>) -> Result<Histogram> {
    cfg.validate()?;
    if cfg.mode != SimMode::FastSim {
        return Err(Error::Config(
            "histograms need the fast simulation mode".into(),
        ));
    }
    let code = cfg.code.build()?;
    let bins = if cfg.decoder.uses_abp() {
        cfg.abp.total_iterations() + 1
    } else {
        1
    };
    let mut counts = vec![0u64; bins];
    let mut failures = 0;
    let trials = run_point(&code, cfg, 0, cancel, |rec| {
        match rec.first_success {
            Some(i) => counts[i] += 1,
            None => failures += 1,
        }
        true
    })?;
    Ok(Histogram {
        snr_db: cfg.snr_db[0],
        n1: cfg.abp.n1,
        counts,
        failures,
        trials,
    })
}

pub const CSV_HEADER: &str = "snr_db,trials,errors,cer,ci_lo,ci_hi,mean_iters,mean_delta";

pub fn write_csv_row<W: Write>(mut w: W, p: &CurvePoint) -> io::Result<()> {
    let delta = if p.mean_delta.is_nan() {
        String::new()
    } else {
        format!("{:.6}", p.mean_delta)
    };
    writeln!(
        w,
        "{},{},{},{:.6e},{:.6e},{:.6e},{:.4},{}",
        p.snr_db, p.trials, p.errors, p.cer, p.ci_lo, p.ci_hi, p.mean_iters, delta
    )
}

pub fn write_csv<W: Write>(mut w: W, points: &[CurvePoint]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for p in points {
        write_csv_row(&mut w, p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(decoder: DecoderChain, snr: f64, trials: u64) -> SimConfig {
        SimConfig {
            seed: 7,
            ..SimConfig::new(CodeSpec::new(15, 11, 4), decoder, vec![snr], trials)
        }
    }

    #[test]
    fn code_spec_parsing() {
        let c: CodeSpec = "15,11,m=4".parse().unwrap();
        assert_eq!(c, CodeSpec::new(15, 11, 4));
        let c: CodeSpec = "31, 25, m=5, poly=0x25".parse().unwrap();
        assert_eq!(c.poly, Some(0x25));
        assert_eq!(c.to_string(), "31,25,m=5,poly=0x25");
        assert!("15,11".parse::<CodeSpec>().is_err());
        assert!("15,11,q=4".parse::<CodeSpec>().is_err());
    }

    #[test]
    fn decoder_names_round_trip() {
        for d in DecoderChain::ALL {
            assert_eq!(d.to_string().parse::<DecoderChain>().unwrap(), d);
        }
    }

    #[test]
    fn ci_properties() {
        assert_eq!(normal_ci(0, 100), (0.0, 0.0));
        let (lo, hi) = normal_ci(50, 100);
        assert!(lo > 0.39 && hi < 0.61);
        let w1 = normal_ci(100, 10_000);
        let w2 = normal_ci(50, 5_000);
        let ratio = (w2.1 - w2.0) / (w1.1 - w1.0);
        assert!((ratio - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn high_snr_always_succeeds_at_iteration_zero() {
        for d in DecoderChain::ALL {
            let mut c = cfg(d, 20.0, 100);
            c.max_errors = None;
            let h = first_success_histogram(&c, None).unwrap();
            assert_eq!(h.counts[0], 100, "{d}");
        }
    }

    #[test]
    fn very_low_snr_bm_fails() {
        let c = cfg(DecoderChain::HdBm, -10.0, 2000);
        let p = estimate_cer(&c, None, |_| {}).unwrap();
        assert!(p[0].cer > 0.95);
        // stops shortly after 100 errors, at a round boundary
        assert!(p[0].errors >= 100 && p[0].trials <= 2000);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut c = cfg(DecoderChain::AbpBm, 3.0, 700);
        c.max_errors = Some(40);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_cer(&c, None, |_| {}).unwrap())
        };
        let (a, b) = (run(1), run(4));
        let strip = |v: Vec<CurvePoint>| {
            v.into_iter()
                .map(|p| {
                    (
                        p.trials,
                        p.errors,
                        p.mean_iters.to_bits(),
                        p.mean_delta.to_bits(),
                    )
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn histogram_mass_sums_to_trials() {
        let mut c = cfg(DecoderChain::AbpBm, 2.0, 300);
        c.abp.n1 = 3;
        c.abp.n2 = 2;
        let h = first_success_histogram(&c, None).unwrap();
        assert_eq!(h.counts.len(), 7);
        assert_eq!(h.counts.iter().sum::<u64>() + h.failures, 300);
        let total: f64 = (0..7).map(|i| h.percent(i)).sum::<f64>() + h.failure_percent();
        assert!((total - 100.0).abs() < 1e-9);
        assert_eq!(h.restart_starts(), vec![1, 4]);
    }

    #[test]
    fn validation() {
        let mut c = cfg(DecoderChain::Kv, 3.0, 10);
        c.mode = SimMode::RealDecode;
        assert!(c.validate().is_err());
        c.cost = CostMode::Finite(100.0);
        assert!(c.validate().is_ok());
        c.snr_db.clear();
        assert!(c.validate().is_err());
        let mut c = cfg(DecoderChain::HdBm, 3.0, 0);
        assert!(c.validate().is_err());
        c.trials = 1;
        c.code = CodeSpec::new(14, 10, 4);
        assert!(c.validate().is_err());
    }

    #[test]
    fn cancelled_run_stops_early() {
        let c = cfg(DecoderChain::HdBm, 3.0, 100_000);
        let cancel = Cancel::new();
        cancel.cancel();
        let p = estimate_cer(&c, Some(&cancel), |_| {}).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn csv_layout() {
        let p = CurvePoint {
            snr_db: 4.5,
            trials: 1000,
            errors: 3,
            cer: 0.003,
            ci_lo: 0.0,
            ci_hi: 0.0064,
            mean_iters: 0.5,
            mean_delta: f64::NAN,
            wall_time_s: 1.0,
        };
        let mut out = Vec::new();
        write_csv(&mut out, &[p]).unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), 8);
        assert!(lines[1].starts_with("4.5,1000,3,"));
    }
}
