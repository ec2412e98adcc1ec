//! Guruswami-Sudan list decoding with arbitrary multiplicities: Koetter
//! interpolation followed by Roth-Ruckenstein root extraction.

use crate::asd::{delta_weighted, MultiplicityMatrix};
use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::rscode::RsCode;

/// Univariate polynomial over GF(2^m), constant term first.
pub type Poly = Vec<Elem>;

/// `Q(x, y) = Σ_b Q_b(x) y^b`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BivariatePoly {
    /// `coeffs[b][a]` is the coefficient of `x^a y^b`.
    coeffs: Vec<Poly>,
}

fn trim(p: &mut Poly) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

/// `C(n, r) mod 2` by Lucas: odd iff the bits of `r` are a subset of `n`.
#[inline]
fn binom_odd(n: usize, r: usize) -> bool {
    n & r == r
}

pub fn poly_eval(f: &Field, p: &[Elem], x: Elem) -> Elem {
    p.iter().rev().fold(0, |acc, &c| f.mul(acc, x) ^ c)
}

fn poly_mul(f: &Field, a: &[Elem], b: &[Elem]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] ^= f.mul(x, y);
        }
    }
    trim(&mut out);
    out
}

fn poly_add_assign(a: &mut Poly, b: &[Elem]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, &y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
    trim(a);
}

impl BivariatePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds from `coeffs[b][a]`, trimming trailing zeros.
    pub fn from_coeffs(mut coeffs: Vec<Poly>) -> Self {
        for c in coeffs.iter_mut() {
            trim(c);
        }
        while coeffs.last().is_some_and(|c| c.is_empty()) {
            coeffs.pop();
        }
        BivariatePoly { coeffs }
    }

    /// `Π (y - G_t(x))`.
    pub fn from_y_roots(f: &Field, roots: &[Poly]) -> Self {
        let mut acc = vec![vec![1]];
        for g in roots {
            // acc · (y + g)
            let mut next = vec![vec![]; acc.len() + 1];
            for (b, c) in acc.iter().enumerate() {
                poly_add_assign(&mut next[b + 1], c);
                poly_add_assign(&mut next[b], &poly_mul(f, c, g));
            }
            acc = next;
        }
        Self::from_coeffs(acc)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn y_degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of `x^a y^b`.
    pub fn coeff(&self, a: usize, b: usize) -> Elem {
        self.coeffs
            .get(b)
            .and_then(|c| c.get(a))
            .copied()
            .unwrap_or(0)
    }

    pub fn y_coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    /// `max{a + w·b : q_{a,b} ≠ 0}`, `None` for the zero polynomial.
    pub fn weighted_degree(&self, w: usize) -> Option<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(b, c)| c.len() - 1 + w * b)
            .max()
    }

    pub fn eval(&self, f: &Field, x: Elem, y: Elem) -> Elem {
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, c| f.mul(acc, y) ^ poly_eval(f, c, x))
    }

    /// Hasse derivative `D_{r,s} Q` evaluated at `(x0, y0)`:
    /// `Σ_{a≥r, b≥s} C(a,r) C(b,s) q_{a,b} x0^{a-r} y0^{b-s}`.
    pub fn hasse(&self, f: &Field, r: usize, s: usize, x0: Elem, y0: Elem) -> Elem {
        let mut acc = 0;
        let mut ypow = 1;
        for b in s..self.coeffs.len() {
            if binom_odd(b, s) {
                let c = &self.coeffs[b];
                let mut inner = 0;
                let mut xpow = 1;
                for (a, &ca) in c.iter().enumerate().skip(r) {
                    if binom_odd(a, r) {
                        inner ^= f.mul(ca, xpow);
                    }
                    xpow = f.mul(xpow, x0);
                }
                acc ^= f.mul(inner, ypow);
            }
            ypow = f.mul(ypow, y0);
        }
        acc
    }

    /// `Q(x, G(x))`.
    pub fn substitute(&self, f: &Field, g: &[Elem]) -> Poly {
        let mut acc: Poly = vec![];
        for c in self.coeffs.iter().rev() {
            acc = poly_mul(f, &acc, g);
            poly_add_assign(&mut acc, c);
        }
        acc
    }

    /// `Q(x, x·y + γ)`.
    fn shift(&self, f: &Field, gamma: Elem) -> Self {
        let l = self.coeffs.len();
        let mut out = vec![vec![]; l];
        // (xy + γ)^b = Σ_t C(b,t) γ^{b-t} x^t y^t
        for (b, c) in self.coeffs.iter().enumerate() {
            if c.is_empty() {
                continue;
            }
            for t in 0..=b {
                if !binom_odd(b, t) {
                    continue;
                }
                let g = f.pow(gamma, (b - t) as u64);
                if g == 0 {
                    continue;
                }
                let mut term = vec![0; t + c.len()];
                for (a, &v) in c.iter().enumerate() {
                    term[a + t] = f.mul(v, g);
                }
                poly_add_assign(&mut out[t], &term);
            }
        }
        Self::from_coeffs(out)
    }

    /// Divides by the largest power of `x` dividing every coefficient.
    fn strip_x(&mut self) {
        let h = self
            .coeffs
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| c.iter().position(|&v| v != 0).unwrap_or(c.len()))
            .min()
            .unwrap_or(0);
        if h > 0 {
            for c in self.coeffs.iter_mut() {
                if !c.is_empty() {
                    c.drain(..h);
                }
            }
        }
    }
}

/// An interpolation point `(x, y)` with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Point {
    pub x: Elem,
    pub y: Elem,
    pub mult: u32,
}

/// Points of a multiplicity matrix on the code's support.
pub fn points_from_multiplicities(m: &MultiplicityMatrix, code: &RsCode) -> Vec<Point> {
    m.points()
        .map(|(i, y, mult)| Point {
            x: code.support()[i],
            y,
            mult,
        })
        .collect()
}

/// Minimal `(1, k-1)`-weighted-degree `Q ≠ 0` through every point with its
/// multiplicity, by Koetter's basis update.
///
/// Monomials are ordered by weighted degree, ties broken by lower
/// `y`-degree first. The basis `g_0..g_L` keeps leading `y`-degree `j` in
/// `g_j`; `L = ⌊Δ_{k-1}(C)/(k-1)⌋` for `C` constraints.
pub fn interpolate(f: &Field, points: &[Point], k: usize) -> Result<BivariatePoly> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "interpolation needs k >= 2, got {k}"
        )));
    }
    let w = k - 1;
    let cost: u64 = points
        .iter()
        .map(|p| p.mult as u64 * (p.mult as u64 + 1) / 2)
        .sum();
    if cost == 0 {
        return Err(Error::InvalidParameter(
            "no interpolation constraints".into(),
        ));
    }
    let l = delta_weighted(w as u64, cost) as usize / w;
    let mut basis: Vec<BivariatePoly> = (0..=l)
        .map(|j| {
            let mut c = vec![vec![]; j + 1];
            c[j] = vec![1];
            BivariatePoly::from_coeffs(c)
        })
        .collect();
    let mut wdeg: Vec<usize> = (0..=l).map(|j| j * w).collect();
    let mut discrepancy = vec![0 as Elem; l + 1];

    for p in points {
        let mult = p.mult as usize;
        // s outer, r inner: each prefix is closed under r → r-1, which
        // keeps (x - x0)·g inside the solution module.
        for s in 0..mult {
            for r in 0..mult - s {
                let mut pivot: Option<usize> = None;
                for j in 0..=l {
                    discrepancy[j] = basis[j].hasse(f, r, s, p.x, p.y);
                    if discrepancy[j] != 0 && pivot.is_none_or(|pj| wdeg[j] < wdeg[pj]) {
                        pivot = Some(j);
                    }
                }
                let Some(js) = pivot else { continue };
                let dstar = discrepancy[js];
                let gstar = basis[js].clone();
                for j in 0..=l {
                    if j == js || discrepancy[j] == 0 {
                        continue;
                    }
                    // g_j ← Δ*·g_j + Δ_j·g*
                    let dj = discrepancy[j];
                    let mut coeffs = basis[j].coeffs.clone();
                    if coeffs.len() < gstar.coeffs.len() {
                        coeffs.resize(gstar.coeffs.len(), vec![]);
                    }
                    for (b, c) in coeffs.iter_mut().enumerate() {
                        for v in c.iter_mut() {
                            *v = f.mul(*v, dstar);
                        }
                        if let Some(gc) = gstar.coeffs.get(b) {
                            let scaled: Poly = gc.iter().map(|&v| f.mul(v, dj)).collect();
                            poly_add_assign(c, &scaled);
                        }
                    }
                    basis[j] = BivariatePoly::from_coeffs(coeffs);
                    wdeg[j] = basis[j].weighted_degree(w).unwrap_or(0);
                }
                // g* ← (x + x0)·g*
                let shifted: Vec<Poly> = gstar
                    .coeffs
                    .iter()
                    .map(|c| poly_mul(f, c, &[p.x, 1]))
                    .collect();
                basis[js] = BivariatePoly::from_coeffs(shifted);
                wdeg[js] += 1;
            }
        }
    }
    let best = (0..=l)
        .filter(|&j| !basis[j].is_zero())
        .min_by_key(|&j| (wdeg[j], j))
        .expect("basis never vanishes");
    Ok(basis.swap_remove(best))
}

/// All `G(x)` with `deg G < k` and `(y - G(x)) | Q(x, y)`.
pub fn factorize(f: &Field, q: &BivariatePoly, k: usize) -> Vec<Poly> {
    let mut out = Vec::new();
    if q.is_zero() || q.y_degree() == Some(0) {
        return out;
    }
    let mut prefix = Vec::with_capacity(k);
    rr_search(f, q.clone(), k, &mut prefix, &mut out);
    // Every candidate is re-verified against the original polynomial.
    out.retain(|g| q.substitute(f, g).is_empty());
    out.sort();
    out.dedup();
    out
}

fn rr_search(f: &Field, mut q: BivariatePoly, k: usize, prefix: &mut Poly, out: &mut Vec<Poly>) {
    q.strip_x();
    // Q(0, y)
    let q0: Poly = q
        .coeffs
        .iter()
        .map(|c| c.first().copied().unwrap_or(0))
        .collect();
    if q0.iter().skip(1).all(|&c| c == 0) {
        return;
    }
    for gamma in f.elements() {
        if poly_eval(f, &q0, gamma) != 0 {
            continue;
        }
        prefix.push(gamma);
        if prefix.len() == k {
            let mut g = prefix.clone();
            trim(&mut g);
            out.push(g);
        } else {
            rr_search(f, q.shift(f, gamma), k, prefix, out);
        }
        prefix.pop();
    }
}

/// Interpolate, factor, and re-encode: every codeword whose message
/// polynomial is a `y`-root of the interpolation polynomial.
pub fn gs_decode(m: &MultiplicityMatrix, code: &RsCode) -> Result<Vec<Vec<Elem>>> {
    let points = points_from_multiplicities(m, code);
    if points.is_empty() {
        return Ok(vec![]);
    }
    let f = code.field();
    let q = interpolate(f, &points, code.k())?;
    let mut words: Vec<Vec<Elem>> = factorize(f, &q, code.k())
        .iter()
        .map(|g| code.evaluate(g))
        .filter(|u| code.is_codeword(u))
        .collect();
    words.sort();
    words.dedup();
    Ok(words)
}
