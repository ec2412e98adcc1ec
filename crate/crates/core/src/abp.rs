//! Adaptive belief propagation with list-decoding stopping, systematic
//! restarts, and an incremental Gaussian elimination that reuses the
//! previous identity submatrix.
//!
//! Everything is kept in original column coordinates. A "permutation" is
//! an order vector: `order[t]` is the original bit index placed at sorted
//! position `t`. Running BP on `Ĥ` in original coordinates is the same as
//! running it on the column-permuted matrix, so `Λp` is updated in place
//! and no inverse permutation is ever materialized.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::asd::{asd_decode, asd_would_list, CostMode};
use crate::bits::{BitMatrix, Elimination};
use crate::bp::{BpWorkspace, DEFAULT_THETA};
use crate::channel::{bit_log_probs, bpsk};
use crate::error::{Error, Result};
use crate::gf::Elem;
use crate::harddec::{bm_decode, hard_symbols, hd_decode};
use crate::rscode::{hamming_distance, RsCode};

pub const DEFAULT_ALPHA1: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeMode {
    /// Eliminate the original matrix from scratch every iteration.
    Full,
    /// Start from the previous reduced matrix.
    #[default]
    Incremental,
}

/// Rule for picking the decoder output from the global list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalMetric {
    /// Minimum Euclidean distance between the BPSK image and `y`.
    #[default]
    Euclidean,
    /// Maximum log-likelihood under the channel LLRs.
    LogLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbpConfig {
    /// Inner iterations per restart.
    pub n1: usize,
    /// Restarts (outer iterations).
    pub n2: usize,
    /// ABP damping `α1`: `Λq = Λin + α1·Λx`.
    pub alpha1: f64,
    /// BP sweeps per adapted matrix.
    pub it_h: usize,
    /// Vertical-step damping.
    pub theta: f64,
    pub mode: GeMode,
    /// Leave a restart as soon as the decoder succeeds (real decoding only).
    pub jn_stop: bool,
    pub final_metric: FinalMetric,
}

impl Default for AbpConfig {
    fn default() -> Self {
        AbpConfig {
            n1: 5,
            n2: 1,
            alpha1: DEFAULT_ALPHA1,
            it_h: 1,
            theta: DEFAULT_THETA,
            mode: GeMode::Incremental,
            jn_stop: false,
            final_metric: FinalMetric::Euclidean,
        }
    }
}

impl AbpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.it_h == 0 {
            return Err(Error::Config(
                "n1, n2 and itH must all be at least 1".into(),
            ));
        }
        if !(self.alpha1 > 0.0 && self.alpha1 <= 1.0) {
            return Err(Error::Config(format!(
                "alpha1={} outside (0, 1]",
                self.alpha1
            )));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!(
                "theta={} outside (0, 1]",
                self.theta
            )));
        }
        Ok(())
    }

    /// Total ABP iterations, not counting iteration 0.
    pub fn total_iterations(&self) -> usize {
        self.n1 * self.n2
    }
}

/// Stable magnitude sort. Returns the sorted values and the order vector.
pub fn sort_llrs(llr: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let order = sort_order(llr);
    (order.iter().map(|&j| llr[j]).collect(), order)
}

/// Indices sorted by `|Λ|` ascending, ties by index.
pub fn sort_order(llr: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..llr.len()).collect();
    order.sort_by(|&a, &b| {
        llr[a]
            .abs()
            .partial_cmp(&llr[b].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Positions taken from a sorted vector at restart `j`: with
/// `z = ⌊n/n2⌋`, blocks `[jz, (j+1)z)`, `[0, jz)`, `[(j+1)z, n)` in turn.
pub fn restart_permutation(j: usize, n: usize, n2: usize) -> Vec<usize> {
    let z = n / n2.max(1);
    if j == 0 || z == 0 {
        return (0..n).collect();
    }
    let lo = (j * z).min(n);
    let hi = ((j + 1) * z).min(n);
    (lo..hi).chain(0..lo).chain(hi..n).collect()
}

/// Column order for the first inner iteration of restart `j`.
pub fn restart_order(j: usize, sorted_order: &[usize], n2: usize) -> Vec<usize> {
    restart_permutation(j, sorted_order.len(), n2)
        .into_iter()
        .map(|p| sorted_order[p])
        .collect()
}

/// Full Gauss-Jordan on `h` with columns visited in `order`; the result is
/// in original column coordinates with rows sorted by pivot.
pub fn gaussian_eliminate(h: &BitMatrix, order: &[usize]) -> Result<(BitMatrix, Elimination)> {
    let mut out = h.clone();
    let e = out.eliminate_full_rank(order, None)?;
    Ok((out, e))
}

/// Modeled relative GE saving when a fraction `δ` of the identity columns
/// carries over: `2δ - δ²`.
pub fn ge_cost_model(delta: f64) -> f64 {
    2.0 * delta - delta * delta
}

/// Statistics of one adaptation step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdaptStats {
    pub row_xors: u64,
    /// Pivot columns that needed at least one row xor.
    pub reduced_columns: usize,
    /// `|R_{j-1} ∩ R_j| / r̃`, when a previous matrix exists.
    pub delta: Option<f64>,
}

/// The adapted parity-check matrix and its pivot set.
#[derive(Debug, Clone)]
pub struct AdaptedParityState {
    h: BitMatrix,
    mode: GeMode,
    reduced: Option<BitMatrix>,
    pivots: Vec<usize>,
    order: Vec<usize>,
    iteration: usize,
}

impl AdaptedParityState {
    pub fn new(h: &BitMatrix, mode: GeMode) -> Self {
        AdaptedParityState {
            h: h.clone(),
            mode,
            reduced: None,
            pivots: vec![],
            order: vec![],
            iteration: 0,
        }
    }

    /// Reduces the columns listed in `order` to unit weight, left to right,
    /// skipping dependent ones.
    ///
    /// In incremental mode the previous reduced matrix is the starting
    /// point and each old pivot keeps first claim on its row, so columns
    /// that are already unit weight cost nothing. Independence is
    /// invariant under row operations and the reduced form for a given
    /// pivot set is unique, so both modes produce the same matrix.
    pub fn adapt(&mut self, order: &[usize]) -> Result<AdaptStats> {
        let rows = self.h.rows();
        let (mut m, reserved) = match (&self.reduced, self.mode) {
            (Some(prev), GeMode::Incremental) => {
                let mut res = vec![None; rows];
                for (r, &c) in self.pivots.iter().enumerate() {
                    res[r] = Some(c);
                }
                (prev.clone(), Some(res))
            }
            _ => (self.h.clone(), None),
        };
        let e = m.eliminate_full_rank(order, reserved.as_deref())?;
        let delta = (!self.pivots.is_empty()).then(|| {
            let mut prev = vec![false; self.h.cols()];
            for &c in &self.pivots {
                prev[c] = true;
            }
            e.pivots.iter().filter(|&&c| prev[c]).count() as f64 / rows as f64
        });
        // rows are sorted by pivot column after elimination
        let mut piv = e.pivots.clone();
        piv.sort_unstable();
        self.pivots = piv;
        self.reduced = Some(m);
        self.order = order.to_vec();
        self.iteration += 1;
        Ok(AdaptStats {
            row_xors: e.row_xors,
            reduced_columns: e.reduced_columns,
            delta,
        })
    }

    pub fn reduced(&self) -> Option<&BitMatrix> {
        self.reduced.as_ref()
    }

    /// Pivot columns (original indices), ascending; row `r` holds the pivot
    /// `pivots()[r]`.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }
}

/// A component decoder `D` run on updated LLRs.
pub trait Decoder {
    /// Real decoding: candidate codewords, possibly none.
    fn decode(&self, code: &RsCode, llr: &[f64]) -> Result<Vec<Vec<Elem>>>;

    /// Fast simulation: whether `tx` would be on the decoder's list.
    fn would_list(&self, code: &RsCode, llr: &[f64], tx: &[Elem]) -> bool;
}

/// The built-in component decoders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerDecoder {
    Hd,
    Bm,
    Asd(CostMode),
}

impl Decoder for InnerDecoder {
    fn decode(&self, code: &RsCode, llr: &[f64]) -> Result<Vec<Vec<Elem>>> {
        Ok(match self {
            InnerDecoder::Hd => hd_decode(code, llr).into_iter().collect(),
            InnerDecoder::Bm => bm_decode(code, llr).into_iter().collect(),
            InnerDecoder::Asd(cost) => asd_decode(code, llr, *cost)?,
        })
    }

    fn would_list(&self, code: &RsCode, llr: &[f64], tx: &[Elem]) -> bool {
        match self {
            InnerDecoder::Hd => hard_symbols(code, llr) == tx,
            InnerDecoder::Bm => hamming_distance(&hard_symbols(code, llr), tx) <= code.t(),
            InnerDecoder::Asd(cost) => asd_would_list(code, llr, tx, *cost),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListEntry {
    pub codeword: Vec<Elem>,
    /// Squared Euclidean distance between the BPSK image and `y`.
    pub distance: f64,
    /// `Σ log P(b_j | Λch_j)`.
    pub log_likelihood: f64,
    /// Global iteration at which the word was first found.
    pub first_iteration: usize,
}

/// Deduplicated candidates collected over all iterations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlobalList {
    entries: Vec<ListEntry>,
}

impl GlobalList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `word` unless already present. Returns whether it was new.
    pub fn insert(
        &mut self,
        code: &RsCode,
        word: &[Elem],
        y: &[f64],
        llr_ch: &[f64],
        iteration: usize,
    ) -> bool {
        if self.contains(word) {
            return false;
        }
        let bits = code.binary_image(word);
        let distance = bits
            .iter()
            .zip(y)
            .map(|(&b, &v)| (v - bpsk(b)).powi(2))
            .sum();
        let log_likelihood = bits
            .iter()
            .zip(llr_ch)
            .map(|(&b, &l)| {
                let (l0, l1) = bit_log_probs(l);
                if b == 0 {
                    l0
                } else {
                    l1
                }
            })
            .sum();
        self.entries.push(ListEntry {
            codeword: word.to_vec(),
            distance,
            log_likelihood,
            first_iteration: iteration,
        });
        true
    }

    pub fn contains(&self, word: &[Elem]) -> bool {
        self.entries.iter().any(|e| e.codeword == word)
    }

    pub fn entries(&self) -> &[ListEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The decoder output under `metric`; ties go to the earlier entry.
    pub fn best(&self, metric: FinalMetric) -> Option<&ListEntry> {
        let key = |e: &ListEntry| match metric {
            FinalMetric::Euclidean => e.distance,
            FinalMetric::LogLikelihood => -e.log_likelihood,
        };
        self.entries
            .iter()
            .fold(None, |best: Option<&ListEntry>, e| match best {
                Some(b) if key(b) <= key(e) => Some(b),
                _ => Some(e),
            })
    }
}

/// What the visitor wants after seeing an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    /// Abandon the current restart.
    NextRestart,
    Stop,
}

/// One decoder invocation point.
#[derive(Debug, Clone, Copy)]
pub struct IterationEvent<'a> {
    /// 0 for the channel LLRs, then `restart·N1 + inner`.
    pub global: usize,
    pub restart: usize,
    /// 1-based inner iteration, 0 for the channel LLRs.
    pub inner: usize,
    /// `Λp` after this iteration.
    pub llr: &'a [f64],
}

/// Aggregate statistics of one ABP run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AbpTelemetry {
    pub iterations: usize,
    pub row_xors: u64,
    /// Row xors spent in adaptations that had a previous matrix.
    pub reuse_row_xors: u64,
    pub reduced_columns: usize,
    pub delta_sum: f64,
    pub delta_count: usize,
}

impl AbpTelemetry {
    pub fn mean_delta(&self) -> Option<f64> {
        (self.delta_count > 0).then(|| self.delta_sum / self.delta_count as f64)
    }

    fn record(&mut self, s: &AdaptStats) {
        self.row_xors += s.row_xors;
        self.reduced_columns += s.reduced_columns;
        if let Some(d) = s.delta {
            self.reuse_row_xors += s.row_xors;
            self.delta_sum += d;
            self.delta_count += 1;
        }
    }
}

/// The ABP iteration schedule. `visit` sees the channel LLRs first, then
/// `Λp` after each of the `N1·N2` iterations. Each restart begins again
/// from `Λch`; its first iteration uses the shifted sorted channel order.
pub fn run_abp<F>(
    code: &RsCode,
    llr_ch: &[f64],
    cfg: &AbpConfig,
    mut visit: F,
) -> Result<AbpTelemetry>
where
    F: FnMut(&IterationEvent<'_>) -> Flow,
{
    cfg.validate()?;
    crate::error::check_len(code.n_bits(), llr_ch.len())?;
    let mut tel = AbpTelemetry::default();
    let first = IterationEvent {
        global: 0,
        restart: 0,
        inner: 0,
        llr: llr_ch,
    };
    if visit(&first) == Flow::Stop {
        return Ok(tel);
    }
    let h = code.binary_parity_matrix();
    let mut state = AdaptedParityState::new(h, cfg.mode);
    let mut ws = BpWorkspace::new();
    let mut llr = llr_ch.to_vec();
    let mut ext = vec![0.0; llr.len()];
    let sorted_ch = sort_order(llr_ch);

    for restart in 0..cfg.n2 {
        llr.copy_from_slice(llr_ch);
        for inner in 1..=cfg.n1 {
            let order = if inner == 1 {
                restart_order(restart, &sorted_ch, cfg.n2)
            } else {
                sort_order(&llr)
            };
            let stats = state.adapt(&order)?;
            tel.record(&stats);
            ws.load(state.reduced().expect("just adapted"))?;
            ws.run(&llr, cfg.it_h, cfg.theta, &mut ext)?;
            for (l, &x) in llr.iter_mut().zip(&ext) {
                *l += cfg.alpha1 * x;
            }
            tel.iterations += 1;
            let ev = IterationEvent {
                global: restart * cfg.n1 + inner,
                restart,
                inner,
                llr: &llr,
            };
            match visit(&ev) {
                Flow::Continue => {}
                Flow::NextRestart => break,
                Flow::Stop => return Ok(tel),
            }
        }
    }
    Ok(tel)
}

/// Result of real list decoding.
#[derive(Debug, Clone)]
pub struct AbpOutcome {
    pub list: GlobalList,
    pub decoded: Option<Vec<Elem>>,
    pub telemetry: AbpTelemetry,
}

/// Real list decoding: `D` runs at every iteration and all candidates are
/// merged into the global list; the answer is the best member under
/// `cfg.final_metric`.
pub fn run_abp_list<D: Decoder + ?Sized>(
    code: &RsCode,
    y: &[f64],
    llr_ch: &[f64],
    cfg: &AbpConfig,
    decoder: &D,
) -> Result<AbpOutcome> {
    crate::error::check_len(llr_ch.len(), y.len())?;
    let mut list = GlobalList::new();
    let mut failure = None;
    let telemetry = run_abp(code, llr_ch, cfg, |ev| {
        let words = match decoder.decode(code, ev.llr) {
            Ok(w) => w,
            Err(e) => {
                failure = Some(e);
                return Flow::Stop;
            }
        };
        let found = !words.is_empty();
        for w in words {
            list.insert(code, &w, y, llr_ch, ev.global);
        }
        match (cfg.jn_stop && found, ev.inner) {
            (true, 0) => Flow::Stop,
            (true, _) => Flow::NextRestart,
            _ => Flow::Continue,
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let decoded = list.best(cfg.final_metric).map(|e| e.codeword.clone());
    Ok(AbpOutcome {
        list,
        decoded,
        telemetry,
    })
}

/// Fast simulation: the first global iteration at which `tx` would be
/// listed, or `None`.
pub fn first_success<D: Decoder + ?Sized>(
    code: &RsCode,
    llr_ch: &[f64],
    tx: &[Elem],
    cfg: &AbpConfig,
    decoder: &D,
) -> Result<(Option<usize>, AbpTelemetry)> {
    let mut hit = None;
    let tel = run_abp(code, llr_ch, cfg, |ev| {
        if decoder.would_list(code, ev.llr, tx) {
            hit = Some(ev.global);
            Flow::Stop
        } else {
            Flow::Continue
        }
    })?;
    Ok((hit, tel))
}
