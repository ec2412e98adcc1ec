//! Algebraic soft-decision front-end: Koetter-Vardy multiplicity
//! assignment, interpolation cost and score, the weighted-degree bound
//! `Δ_v(γ)`, and the sufficient conditions for a codeword to be on the
//! GS list.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{bit_probs, posteriors_from_bits, ReliabilityMatrix};
use crate::error::{Error, Result};
use crate::gf::Elem;
use crate::rscode::RsCode;

/// Interpolation cost budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostRepr", into = "String")]
pub enum CostMode {
    /// Target cost `γ` for KV assignment.
    Finite(f64),
    /// The `γ → ∞` limit, usable only as a success predicate.
    Infinite,
}

impl FromStr for CostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinite") {
            return Ok(CostMode::Infinite);
        }
        let g: f64 = t
            .parse()
            .map_err(|_| Error::Config(format!("cost must be a number or \"inf\", got {s:?}")))?;
        if g <= 0.0 || !g.is_finite() {
            return Err(Error::Config(format!("cost must be positive, got {s}")));
        }
        Ok(CostMode::Finite(g))
    }
}

/// Config files may write the cost as a bare number or as `"inf"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum CostRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<CostRepr> for CostMode {
    type Error = Error;

    fn try_from(r: CostRepr) -> Result<Self> {
        match r {
            CostRepr::Number(g) => g.to_string().parse(),
            CostRepr::Text(s) => s.parse(),
        }
    }
}

impl From<CostMode> for String {
    fn from(c: CostMode) -> String {
        c.to_string()
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostMode::Finite(g) => write!(f, "{g}"),
            CostMode::Infinite => f.write_str("inf"),
        }
    }
}

/// `λ = (-1 + sqrt(1 + 8γ/n)) / 2`, the scale at which a uniform
/// multiplicity `λ` on one point per column costs exactly `γ`.
pub fn kv_lambda(gamma: f64, n: usize) -> f64 {
    (-1.0 + (1.0 + 8.0 * gamma / n as f64).sqrt()) / 2.0
}

/// `Δ_v(γ) = ⌊γ/m + v(m-1)/2⌋` with `m = ⌊sqrt(2γ/v + 1/4) + 1/2⌋`.
///
/// Evaluated in integers: `m` is the largest integer with
/// `v·m(m-1) ≤ 2γ`, and the floor becomes `⌊(2γ + v·m(m-1)) / 2m⌋`.
pub fn delta_weighted(v: u64, gamma: u64) -> u64 {
    assert!(v >= 1, "weighted degree needs v >= 1");
    let target = 2 * gamma;
    let mut m = ((2.0 * gamma as f64 / v as f64 + 0.25).sqrt() + 0.5).floor() as u64;
    m = m.max(1);
    while v * m * (m - 1) > target {
        m -= 1;
    }
    while v * (m + 1) * m <= target {
        m += 1;
    }
    (target + v * m * (m - 1)) / (2 * m)
}

/// Number of monomials `x^a y^b` with `a + v·b ≤ d`.
pub fn monomial_count(v: u64, d: u64) -> u64 {
    (0..=d / v).map(|b| d - v * b + 1).sum()
}

/// Integer multiplicities, stored column by column like
/// [`ReliabilityMatrix`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityMatrix {
    q: usize,
    n: usize,
    data: Vec<u32>,
}

impl MultiplicityMatrix {
    pub fn zeros(q: usize, n: usize) -> Self {
        MultiplicityMatrix {
            q,
            n,
            data: vec![0; q * n],
        }
    }

    /// `mult` on each symbol of `word`, zero elsewhere.
    pub fn indicator(q: usize, word: &[Elem], mult: u32) -> Self {
        let mut m = Self::zeros(q, word.len());
        for (i, &s) in word.iter().enumerate() {
            m.set(i, s, mult);
        }
        m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, beta: Elem) -> u32 {
        self.data[i * self.q + beta as usize]
    }

    pub fn set(&mut self, i: usize, beta: Elem, v: u32) {
        self.data[i * self.q + beta as usize] = v;
    }

    /// `|M| = ½ Σ M(M+1)`: the number of linear interpolation constraints.
    pub fn cost(&self) -> u64 {
        self.data
            .iter()
            .map(|&m| m as u64 * (m as u64 + 1) / 2)
            .sum()
    }

    pub fn score(&self, word: &[Elem]) -> u64 {
        word.iter()
            .enumerate()
            .map(|(i, &s)| self.get(i, s) as u64)
            .sum()
    }

    /// Nonzero entries as `(position, symbol, multiplicity)`.
    pub fn points(&self) -> impl Iterator<Item = (usize, Elem, u32)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(move |(idx, &m)| (idx / self.q, (idx % self.q) as Elem, m))
    }
}

/// `M_i(β) = ⌊λ·Π_i(β)⌋`.
pub fn kv_multiplicities(pi: &ReliabilityMatrix, lambda: f64) -> MultiplicityMatrix {
    let mut m = MultiplicityMatrix::zeros(pi.q(), pi.n());
    for i in 0..pi.n() {
        for (b, &p) in pi.column(i).iter().enumerate() {
            m.data[i * pi.q() + b] = (lambda * p).floor() as u32;
        }
    }
    m
}

/// KV assignment at target cost `γ`.
pub fn kv_assign(pi: &ReliabilityMatrix, gamma: f64) -> MultiplicityMatrix {
    kv_multiplicities(pi, kv_lambda(gamma, pi.n()))
}

/// `S_M(u) > Δ_{k-1}(|M|)`.
pub fn suff_finite(word: &[Elem], m: &MultiplicityMatrix, k: usize) -> bool {
    let cost = m.cost();
    if cost == 0 {
        return false;
    }
    m.score(word) > delta_weighted(k as u64 - 1, cost)
}

/// `Σ Π_i(u_i) / ‖Π‖₂ > sqrt(k-1)`.
pub fn suff_infinite(word: &[Elem], pi: &ReliabilityMatrix, k: usize) -> bool {
    let score: f64 = word.iter().enumerate().map(|(i, &s)| pi.get(i, s)).sum();
    let norm2: f64 = (0..pi.n())
        .map(|i| pi.column(i).iter().map(|p| p * p).sum::<f64>())
        .sum();
    infinite_ratio_holds(score, norm2, k)
}

fn infinite_ratio_holds(score: f64, norm2: f64, k: usize) -> bool {
    // score / sqrt(norm2) > sqrt(k-1), both sides nonnegative
    norm2 > 0.0 && score * score > (k as f64 - 1.0) * norm2
}

/// [`suff_infinite`] straight from bit LLRs.
///
/// Symbol posteriors factor over bits, so `Π_i(u_i) = Π_l P(b_l)` and
/// `Σ_β Π_i(β)² = Π_l (p0² + p1²)`, avoiding the `q`-wide columns.
pub fn suff_infinite_bits(code: &RsCode, llr: &[f64], word: &[Elem]) -> bool {
    let m = code.m();
    let mut score = 0.0;
    let mut norm2 = 0.0;
    for (i, &s) in word.iter().enumerate() {
        let mut p_sym = 1.0;
        let mut col2 = 1.0;
        for l in 0..m {
            let (p0, p1) = bit_probs(llr[i * m + l]);
            p_sym *= if (s >> l) & 1 == 1 { p1 } else { p0 };
            col2 *= p0 * p0 + p1 * p1;
        }
        score += p_sym;
        norm2 += col2;
    }
    infinite_ratio_holds(score, norm2, code.k())
}

/// [`suff_finite`] from bit LLRs with KV assignment at cost `γ`.
pub fn suff_finite_bits(code: &RsCode, llr: &[f64], word: &[Elem], gamma: f64) -> bool {
    let pi = posteriors_from_bits(llr, code.m(), code.field().size());
    suff_finite(word, &kv_assign(&pi, gamma), code.k())
}

/// Fast-sim success predicate for either cost mode.
pub fn asd_would_list(code: &RsCode, llr: &[f64], word: &[Elem], cost: CostMode) -> bool {
    match cost {
        CostMode::Finite(g) => suff_finite_bits(code, llr, word, g),
        CostMode::Infinite => suff_infinite_bits(code, llr, word),
    }
}

/// Full ASD decoding: posteriors, KV multiplicities at cost `γ`, then GS.
pub fn asd_decode(code: &RsCode, llr: &[f64], cost: CostMode) -> Result<Vec<Vec<Elem>>> {
    let CostMode::Finite(gamma) = cost else {
        return Err(Error::Config(
            "infinite interpolation cost has no decoder; use the fast simulation mode".into(),
        ));
    };
    let pi = crate::channel::symbol_posteriors(llr, code)?;
    crate::gs::gs_decode(&kv_assign(&pi, gamma), code)
}
