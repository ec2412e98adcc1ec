//! BPSK over AWGN and correlated Rayleigh fading, bit LLRs, and symbol
//! posterior matrices.
//!
//! LLR sign convention: `Λ = log P(b=0)/P(b=1)`, so `Λ > 0` favors bit 0,
//! which BPSK maps to `+1`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::gf::Elem;
use crate::rscode::RsCode;

/// Oscillators per quadrature branch of the sum-of-sinusoids fader.
pub const JAKES_OSCILLATORS: usize = 16;

/// Gauss-Legendre nodes used for the unknown-CSI Rayleigh LLR.
pub const QUADRATURE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelModel {
    #[default]
    Awgn,
    Rayleigh {
        doppler_hz: f64,
        codeword_sec: f64,
        csi_known: bool,
    },
}

impl ChannelModel {
    /// The fading setup used for the (31,25) experiments: 50 Hz Doppler,
    /// 20 ms codewords, no channel state at the receiver.
    pub fn rayleigh_default() -> Self {
        ChannelModel::Rayleigh {
            doppler_hz: 50.0,
            codeword_sec: 0.02,
            csi_known: false,
        }
    }

    pub fn transmit(
        &self,
        bits: &[u8],
        snr_db: f64,
        rate: f64,
        rng: &mut impl Rng,
    ) -> ChannelObservation {
        match *self {
            ChannelModel::Awgn => bpsk_awgn(bits, snr_db, rate, rng),
            ChannelModel::Rayleigh {
                doppler_hz,
                codeword_sec,
                ..
            } => bpsk_rayleigh(bits, snr_db, rate, doppler_hz, codeword_sec, rng),
        }
    }

    pub fn csi_known(&self) -> bool {
        matches!(
            self,
            ChannelModel::Rayleigh {
                csi_known: true,
                ..
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservation {
    pub y: Vec<f64>,
    /// Per-bit fading amplitudes, when the channel fades.
    pub fade: Option<Vec<f64>>,
    /// Noise variance per real dimension.
    pub noise_var: f64,
    pub snr_db: f64,
}

/// `σ² = 1 / (2·R·Eb/N0)` for unit-energy BPSK symbols.
pub fn noise_variance(snr_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

#[inline]
pub fn bpsk(bit: u8) -> f64 {
    1.0 - 2.0 * (bit & 1) as f64
}

pub fn bpsk_awgn(bits: &[u8], snr_db: f64, rate: f64, rng: &mut impl Rng) -> ChannelObservation {
    let noise_var = noise_variance(snr_db, rate);
    let sigma = noise_var.sqrt();
    let y = bits
        .iter()
        .map(|&b| bpsk(b) + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ChannelObservation {
        y,
        fade: None,
        noise_var,
        snr_db,
    }
}

pub fn bpsk_rayleigh(
    bits: &[u8],
    snr_db: f64,
    rate: f64,
    doppler_hz: f64,
    codeword_sec: f64,
    rng: &mut impl Rng,
) -> ChannelObservation {
    let noise_var = noise_variance(snr_db, rate);
    let sigma = noise_var.sqrt();
    let fader = JakesFader::new(doppler_hz, rng);
    let dt = codeword_sec / bits.len() as f64;
    let fade: Vec<f64> = (0..bits.len())
        .map(|i| fader.amplitude(i as f64 * dt))
        .collect();
    let y = bits
        .iter()
        .zip(&fade)
        .map(|(&b, &a)| a * bpsk(b) + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ChannelObservation {
        y,
        fade: Some(fade),
        noise_var,
        snr_db,
    }
}

/// One realization of a sum-of-sinusoids Rayleigh process with the
/// Clarke/Jakes spectrum (Zheng-Xiao construction), unit mean-square gain.
#[derive(Debug, Clone)]
pub struct JakesFader {
    omega_d: f64,
    cos_angles: [f64; JAKES_OSCILLATORS],
    sin_angles: [f64; JAKES_OSCILLATORS],
    phase_i: [f64; JAKES_OSCILLATORS],
    phase_q: [f64; JAKES_OSCILLATORS],
}

impl JakesFader {
    pub fn new(doppler_hz: f64, rng: &mut impl Rng) -> Self {
        let m = JAKES_OSCILLATORS;
        let theta = rng.random_range(-PI..PI);
        let mut f = JakesFader {
            omega_d: 2.0 * PI * doppler_hz,
            cos_angles: [0.0; JAKES_OSCILLATORS],
            sin_angles: [0.0; JAKES_OSCILLATORS],
            phase_i: [0.0; JAKES_OSCILLATORS],
            phase_q: [0.0; JAKES_OSCILLATORS],
        };
        for n in 0..m {
            let alpha = (2.0 * PI * (n + 1) as f64 - PI + theta) / (4 * m) as f64;
            f.cos_angles[n] = alpha.cos();
            f.sin_angles[n] = alpha.sin();
            f.phase_i[n] = rng.random_range(-PI..PI);
            f.phase_q[n] = rng.random_range(-PI..PI);
        }
        f
    }

    /// Complex gain `(g_i, g_q)` at time `t` with `E[g_i² + g_q²] = 1`.
    pub fn gain(&self, t: f64) -> (f64, f64) {
        let m = JAKES_OSCILLATORS as f64;
        let mut xc = 0.0;
        let mut xs = 0.0;
        for n in 0..JAKES_OSCILLATORS {
            xc += (self.omega_d * t * self.cos_angles[n] + self.phase_i[n]).cos();
            xs += (self.omega_d * t * self.sin_angles[n] + self.phase_q[n]).cos();
        }
        // sqrt(2/M) per branch, then 1/sqrt(2) for unit total power
        let scale = (1.0 / m).sqrt();
        (xc * scale, xs * scale)
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        let (i, q) = self.gain(t);
        i.hypot(q)
    }
}

/// Bit LLRs for a received block.
///
/// With fading and `csi_known = false` the amplitude is integrated out
/// against the unit-power Rayleigh density.
pub fn bit_llrs(obs: &ChannelObservation, csi_known: bool) -> Result<Vec<f64>> {
    if obs.noise_var <= 0.0 || !obs.noise_var.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {}",
            obs.noise_var
        )));
    }
    let s2 = obs.noise_var;
    Ok(match &obs.fade {
        None => obs.y.iter().map(|&y| 2.0 * y / s2).collect(),
        Some(fade) if csi_known => obs
            .y
            .iter()
            .zip(fade)
            .map(|(&y, &a)| 2.0 * a * y / s2)
            .collect(),
        Some(_) => {
            let r = RayleighLlr::new(s2);
            obs.y.iter().map(|&y| r.llr(y)).collect()
        }
    })
}

/// Unknown-CSI Rayleigh LLR evaluated by Gauss-Legendre quadrature.
///
/// With `p(a) = 2a·exp(-a²)` and `c = 1 + 1/(2σ²)`, both likelihoods share
/// the factor `exp(b²/4c - y²/2σ²)` (`b = y/σ²`), leaving
/// `Λ = ln J(μ) - ln J(-μ)` with `μ = b/2c` and
/// `J(μ) = ∫₀^∞ 2a·exp(-c(a-μ)²) da`.
#[derive(Debug, Clone)]
pub struct RayleighLlr {
    noise_var: f64,
    c: f64,
}

impl RayleighLlr {
    pub fn new(noise_var: f64) -> Self {
        RayleighLlr {
            noise_var,
            c: 1.0 + 1.0 / (2.0 * noise_var),
        }
    }

    pub fn llr(&self, y: f64) -> f64 {
        let mu = y / self.noise_var / (2.0 * self.c);
        self.ln_j(mu) - self.ln_j(-mu)
    }

    fn ln_j(&self, mu: f64) -> f64 {
        let c = self.c;
        let sd = (0.5 / c).sqrt();
        if mu >= 0.0 {
            let lo = (mu - 12.0 * sd).max(0.0);
            let hi = mu + 12.0 * sd;
            integrate(lo, hi, |a| 2.0 * a * (-c * (a - mu) * (a - mu)).exp()).ln()
        } else {
            // Peak sits at the a = 0 boundary; pull out exp(-cμ²).
            let rate = -2.0 * c * mu;
            let hi = (12.0 * sd).min(40.0 / rate);
            -c * mu * mu + integrate(0.0, hi, |a| 2.0 * a * (-c * a * a - rate * a).exp()).ln()
        }
    }
}

fn gauss_legendre() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| legendre_nodes(QUADRATURE_NODES))
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn integrate(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    half * gauss_legendre()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// `q × n` matrix of symbol posteriors `Π_i(β)`, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityMatrix {
    q: usize,
    n: usize,
    data: Vec<f64>,
}

impl ReliabilityMatrix {
    pub fn from_columns(q: usize, columns: Vec<Vec<f64>>) -> Self {
        let n = columns.len();
        let mut data = Vec::with_capacity(q * n);
        for col in columns {
            assert_eq!(col.len(), q);
            data.extend(col);
        }
        ReliabilityMatrix { q, n, data }
    }

    /// Every column puts all its mass on the given symbol.
    pub fn indicator(q: usize, word: &[Elem]) -> Self {
        let mut data = vec![0.0; q * word.len()];
        for (i, &s) in word.iter().enumerate() {
            data[i * q + s as usize] = 1.0;
        }
        ReliabilityMatrix {
            q,
            n: word.len(),
            data,
        }
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, beta: Elem) -> f64 {
        self.data[i * self.q + beta as usize]
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.q..(i + 1) * self.q]
    }

    pub fn scaled(&self, s: f64) -> Self {
        ReliabilityMatrix {
            q: self.q,
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Symbol-wise argmax, lowest symbol on ties.
    pub fn hard_decision(&self) -> Vec<Elem> {
        (0..self.n)
            .map(|i| {
                let col = self.column(i);
                let mut best = 0;
                for (b, &p) in col.iter().enumerate() {
                    if p > col[best] {
                        best = b;
                    }
                }
                best as Elem
            })
            .collect()
    }
}

/// `ln P(bit = 0)` and `ln P(bit = 1)` from an LLR, stable for large `|Λ|`.
#[inline]
pub fn bit_log_probs(llr: f64) -> (f64, f64) {
    // ln σ(Λ) = -softplus(-Λ)
    let softplus = |x: f64| {
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    };
    (-softplus(-llr), -softplus(llr))
}

/// `P(bit = 0)` and `P(bit = 1)`.
#[inline]
pub fn bit_probs(llr: f64) -> (f64, f64) {
    let (l0, l1) = bit_log_probs(llr);
    (l0.exp(), l1.exp())
}

/// `Π_i(β) ∝ Π_l P(b_{i,l} = β_l)` from bit LLRs, columns normalized.
pub fn symbol_posteriors(llr: &[f64], code: &RsCode) -> Result<ReliabilityMatrix> {
    check_len(code.n_bits(), llr.len())?;
    Ok(posteriors_from_bits(llr, code.m(), code.field().size()))
}

pub(crate) fn posteriors_from_bits(llr: &[f64], m: usize, q: usize) -> ReliabilityMatrix {
    let n = llr.len() / m;
    let mut data = vec![0.0; q * n];
    let mut lp = vec![(0.0, 0.0); m];
    for i in 0..n {
        for l in 0..m {
            lp[l] = bit_log_probs(llr[i * m + l]);
        }
        let col = &mut data[i * q..(i + 1) * q];
        for (beta, p) in col.iter_mut().enumerate() {
            let mut s = 0.0;
            for (l, &(l0, l1)) in lp.iter().enumerate() {
                s += if (beta >> l) & 1 == 1 { l1 } else { l0 };
            }
            *p = s.exp();
        }
        let total: f64 = col.iter().sum();
        for p in col.iter_mut() {
            *p /= total;
        }
    }
    ReliabilityMatrix { q, n, data }
}
