//! Simulation settings from a TOML file, overridden by flags.

use std::path::PathBuf;

use abpasd::abp::{FinalMetric, GeMode};
use abpasd::asd::CostMode;
use abpasd::channel::ChannelModel;
use abpasd::sim::{CodeSpec, DecoderChain, SimConfig, SimMode};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeArg {
    Full,
    Incremental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    LogLikelihood,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimArgs {
    /// TOML file with simulation settings; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Code as `n,k,m=<bits>[,poly=<hex>]`.
    #[arg(long)]
    pub code: Option<CodeSpec>,
    /// hd-bm, kv, abp-hd, abp-bm or abp-asd.
    #[arg(long)]
    pub decoder: Option<DecoderChain>,
    /// SNR points in dB: `start:step:stop`, a comma list, or one value.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Stop a point after this many errors, or `none`.
    #[arg(long)]
    pub max_errors: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interpolation cost: a positive number or `inf`.
    #[arg(long)]
    pub cost: Option<CostMode>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    /// BP sweeps per adapted matrix.
    #[arg(long)]
    pub ith: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub ge: Option<GeArg>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Leave a restart as soon as the decoder succeeds.
    #[arg(long)]
    pub jn_stop: bool,
    #[arg(long, value_enum)]
    pub channel: Option<ChannelKind>,
    /// Rayleigh Doppler frequency in Hz.
    #[arg(long)]
    pub doppler: Option<f64>,
    /// Rayleigh codeword duration in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Give the decoder the fading amplitudes.
    #[arg(long)]
    pub csi: bool,
    /// Run the full list decoder instead of the fast simulation.
    #[arg(long)]
    pub real_decode: bool,
}

/// `2:0.5:6` (inclusive), `3,4,5`, or `4.5`.
pub fn parse_snr(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        let v: f64 = t
            .trim()
            .parse()
            .with_context(|| format!("bad SNR value {t:?}"))?;
        if !v.is_finite() {
            bail!("SNR values must be finite");
        }
        Ok(v)
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, step, stop] = parts[..] else {
            bail!("SNR range must be start:step:stop, got {s:?}");
        };
        let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
        if step <= 0.0 || stop < start {
            bail!("SNR range needs step > 0 and stop >= start");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        s.split(',').map(num).collect()
    }
}

fn parse_max_errors(s: &str) -> Result<Option<u64>> {
    match s {
        "none" | "all" => Ok(None),
        _ => Ok(Some(
            s.parse()
                .with_context(|| format!("bad error count {s:?}"))?,
        )),
    }
}

impl SimArgs {
    pub fn build(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<SimConfig>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => {
                let (Some(code), Some(decoder), Some(_)) = (self.code, self.decoder, &self.snr)
                else {
                    bail!("without --config, --code, --decoder and --snr are required");
                };
                SimConfig::new(code, decoder, Vec::new(), DEFAULT_TRIALS)
            }
        };
        if let Some(c) = self.code {
            cfg.code = c;
        }
        if let Some(d) = self.decoder {
            cfg.decoder = d;
        }
        if let Some(s) = &self.snr {
            cfg.snr_db = parse_snr(s)?;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(m) = &self.max_errors {
            cfg.max_errors = parse_max_errors(m)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = self.cost {
            cfg.cost = c;
        }
        let abp = &mut cfg.abp;
        if let Some(v) = self.n1 {
            abp.n1 = v;
        }
        if let Some(v) = self.n2 {
            abp.n2 = v;
        }
        if let Some(v) = self.alpha1 {
            abp.alpha1 = v;
        }
        if let Some(v) = self.ith {
            abp.it_h = v;
        }
        if let Some(v) = self.theta {
            abp.theta = v;
        }
        if let Some(g) = self.ge {
            abp.mode = match g {
                GeArg::Full => GeMode::Full,
                GeArg::Incremental => GeMode::Incremental,
            };
        }
        if let Some(m) = self.metric {
            abp.final_metric = match m {
                MetricArg::Euclidean => FinalMetric::Euclidean,
                MetricArg::LogLikelihood => FinalMetric::LogLikelihood,
            };
        }
        abp.jn_stop |= self.jn_stop;
        if self.real_decode {
            cfg.mode = SimMode::RealDecode;
        }
        self.apply_channel(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_channel(&self, cfg: &mut SimConfig) -> Result<()> {
        let fading_flags = self.doppler.is_some() || self.duration.is_some() || self.csi;
        let kind = match (self.channel, cfg.channel) {
            (Some(k), _) => k,
            (None, ChannelModel::Awgn) => ChannelKind::Awgn,
            (None, ChannelModel::Rayleigh { .. }) => ChannelKind::Rayleigh,
        };
        match kind {
            ChannelKind::Awgn if fading_flags => {
                bail!("--doppler, --duration and --csi need --channel rayleigh")
            }
            ChannelKind::Awgn => cfg.channel = ChannelModel::Awgn,
            ChannelKind::Rayleigh => {
                if cfg.channel == ChannelModel::Awgn {
                    cfg.channel = ChannelModel::rayleigh_default();
                }
                if let ChannelModel::Rayleigh {
                    doppler_hz,
                    codeword_sec,
                    csi_known,
                } = &mut cfg.channel
                {
                    *doppler_hz = self.doppler.unwrap_or(*doppler_hz);
                    *codeword_sec = self.duration.unwrap_or(*codeword_sec);
                    *csi_known |= self.csi;
                }
            }
        }
        Ok(())
    }
}
