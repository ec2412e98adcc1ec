//! Hard-decision decoders: plain syndrome check (HD) and errors-only
//! Berlekamp-Massey bounded-distance decoding (BM).

use crate::gf::{Elem, Field};
use crate::rscode::RsCode;

/// `b = (1 - sign Λ) / 2`, with `Λ = 0` mapped to bit 0.
pub fn hard_bits(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&l| (l < 0.0) as u8).collect()
}

/// Symbols of the hard-decided binary image.
pub fn hard_symbols(code: &RsCode, llr: &[f64]) -> Vec<Elem> {
    code.symbols_from_bits(&hard_bits(llr))
}

/// Succeeds iff the hard decisions already form a codeword.
pub fn hd_decode(code: &RsCode, llr: &[f64]) -> Option<Vec<Elem>> {
    if llr.len() != code.n_bits() {
        return None;
    }
    let bits = hard_bits(llr);
    code.syndrome_check(&bits)
        .then(|| code.symbols_from_bits(&bits))
}

/// Berlekamp-Massey on the hard decisions of `llr`.
pub fn bm_decode(code: &RsCode, llr: &[f64]) -> Option<Vec<Elem>> {
    if llr.len() != code.n_bits() {
        return None;
    }
    bm_decode_symbols(code, &hard_symbols(code, llr))
}

/// Corrects up to `t` symbol errors. Returns `None` when the locator is
/// inconsistent (too many errors detected) or the corrected word fails the
/// syndrome check.
pub fn bm_decode_symbols(code: &RsCode, word: &[Elem]) -> Option<Vec<Elem>> {
    if word.len() != code.n() {
        return None;
    }
    let f = code.field();
    let syn = code.symbol_syndromes(word);
    if syn.iter().all(|&s| s == 0) {
        return Some(word.to_vec());
    }
    let lambda = berlekamp_massey(f, &syn);
    let nu = degree(&lambda);
    if nu == 0 || nu > code.t() {
        return None;
    }
    let omega = syndrome_times_locator(f, &syn, &lambda);
    let dlambda = formal_derivative(&lambda);

    let mut out = word.to_vec();
    let mut found = 0;
    for (i, o) in out.iter_mut().enumerate() {
        let xinv = f.alpha_pow(-(i as i64));
        if poly_eval(f, &lambda, xinv) != 0 {
            continue;
        }
        let den = poly_eval(f, &dlambda, xinv);
        if den == 0 {
            return None;
        }
        *o ^= f.div(poly_eval(f, &omega, xinv), den);
        found += 1;
    }
    if found != nu {
        return None;
    }
    code.is_codeword(&out).then_some(out)
}

/// Shortest LFSR generating `syn`; returns the connection polynomial
/// `Λ(x)` with `Λ(0) = 1`, low-order coefficient first.
pub fn berlekamp_massey(f: &Field, syn: &[Elem]) -> Vec<Elem> {
    let mut c = vec![0; syn.len() + 1];
    let mut b = vec![0; syn.len() + 1];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut shift = 1usize;
    let mut bscale: Elem = 1;
    for r in 0..syn.len() {
        let mut d = syn[r];
        for i in 1..=l {
            d ^= f.mul(c[i], syn[r - i]);
        }
        if d == 0 {
            shift += 1;
            continue;
        }
        let coef = f.div(d, bscale);
        let prev = c.clone();
        for i in 0..b.len() - shift {
            c[i + shift] ^= f.mul(coef, b[i]);
        }
        if 2 * l <= r {
            l = r + 1 - l;
            b = prev;
            bscale = d;
            shift = 1;
        } else {
            shift += 1;
        }
    }
    c.truncate(l + 1);
    c
}

fn degree(p: &[Elem]) -> usize {
    p.iter().rposition(|&c| c != 0).unwrap_or(0)
}

fn poly_eval(f: &Field, p: &[Elem], x: Elem) -> Elem {
    p.iter().rev().fold(0, |acc, &c| f.mul(acc, x) ^ c)
}

/// `Ω(x) = S(x)·Λ(x) mod x^{len(S)}` with `S(x) = Σ S_{j+1} x^j`.
fn syndrome_times_locator(f: &Field, syn: &[Elem], lambda: &[Elem]) -> Vec<Elem> {
    let n = syn.len();
    let mut out = vec![0; n];
    for (i, &a) in syn.iter().enumerate() {
        for (j, &b) in lambda.iter().enumerate() {
            if i + j < n {
                out[i + j] ^= f.mul(a, b);
            }
        }
    }
    out
}

/// Formal derivative in characteristic 2: only odd powers survive.
fn formal_derivative(p: &[Elem]) -> Vec<Elem> {
    (1..p.len())
        .map(|i| if i % 2 == 1 { p[i] } else { 0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rscode::hamming_distance;
    use rand::{seq::index::sample, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_codeword(code: &RsCode, rng: &mut impl Rng) -> Vec<Elem> {
        let q = code.field().size();
        let d: Vec<Elem> = (0..code.k())
            .map(|_| rng.random_range(0..q) as Elem)
            .collect();
        code.encode(&d).unwrap()
    }

    fn corrupt(code: &RsCode, u: &[Elem], errors: usize, rng: &mut impl Rng) -> Vec<Elem> {
        let q = code.field().size();
        let mut w = u.to_vec();
        for p in sample(rng, code.n(), errors) {
            w[p] ^= rng.random_range(1..q) as Elem;
        }
        w
    }

    fn llrs_for(code: &RsCode, word: &[Elem]) -> Vec<f64> {
        code.binary_image(word)
            .iter()
            .map(|&b| if b == 0 { 5.0 } else { -5.0 })
            .collect()
    }

    #[test]
    fn hard_bits_tie_is_zero() {
        assert_eq!(hard_bits(&[0.0, -0.0, -1e-300, 2.0]), vec![0, 0, 1, 0]);
    }

    #[test]
    fn hd_cases() {
        let code = RsCode::from_params(15, 11, 4, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_codeword(&code, &mut rng);
        let mut l = llrs_for(&code, &u);
        assert_eq!(hd_decode(&code, &l), Some(u.clone()));
        l[17] = -l[17];
        assert_eq!(hd_decode(&code, &l), None);
        assert_eq!(hd_decode(&code, &[0.0; 60]), Some(vec![0; 15]));
        assert_eq!(hd_decode(&code, &[0.0; 59]), None);
    }

    #[test]
    fn bm_corrects_up_to_t() {
        for (n, k, m) in [(15, 11, 4), (31, 25, 5), (7, 5, 3), (31, 15, 5), (7, 2, 3)] {
            let code = RsCode::from_params(n, k, m, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64 + k as u64);
            for _ in 0..300 {
                let u = random_codeword(&code, &mut rng);
                let e = rng.random_range(0..=code.t());
                let w = corrupt(&code, &u, e, &mut rng);
                assert_eq!(
                    bm_decode_symbols(&code, &w),
                    Some(u.clone()),
                    "({n},{k}) e={e}"
                );
                assert_eq!(bm_decode(&code, &llrs_for(&code, &w)), Some(u));
            }
        }
    }

    #[test]
    fn bm_beyond_t_never_outputs_noncodeword() {
        let code = RsCode::from_params(15, 11, 4, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut miscorrections = 0;
        for _ in 0..2000 {
            let u = random_codeword(&code, &mut rng);
            let e = rng.random_range(3..=6);
            let w = corrupt(&code, &u, e, &mut rng);
            if let Some(c) = bm_decode_symbols(&code, &w) {
                assert!(code.is_codeword(&c));
                assert!(hamming_distance(&c, &w) <= code.t());
                miscorrections += 1;
            }
        }
        // the (15,11) code miscorrects a sizable share of heavy patterns
        assert!(miscorrections > 0);
    }

    #[test]
    fn bm_matches_nearest_codeword_on_7_5() {
        let code = RsCode::from_params(7, 5, 3, None).unwrap();
        // all 8^5 codewords
        let mut all = Vec::new();
        for d in 0..(1u32 << 15) {
            let data: Vec<Elem> = (0..5).map(|i| ((d >> (3 * i)) & 7) as Elem).collect();
            all.push(code.encode(&data).unwrap());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let u = &all[rng.random_range(0..all.len())];
            let w = corrupt(&code, u, rng.random_range(0..=2), &mut rng);
            let nearest: Vec<&Vec<Elem>> = all
                .iter()
                .filter(|c| hamming_distance(c, &w) <= 1)
                .collect();
            match bm_decode_symbols(&code, &w) {
                Some(c) => {
                    assert_eq!(nearest.len(), 1);
                    assert_eq!(&c, nearest[0]);
                }
                None => assert!(nearest.is_empty()),
            }
        }
    }

    #[test]
    fn locator_of_known_pattern() {
        let code = RsCode::from_params(15, 11, 4, None).unwrap();
        let f = code.field();
        let mut w = vec![0; 15];
        w[3] = 9;
        w[10] = 4;
        let lambda = berlekamp_massey(f, &code.symbol_syndromes(&w));
        // Λ(x) = (1 + α^3 x)(1 + α^10 x)
        let a3 = f.alpha_pow(3);
        let a10 = f.alpha_pow(10);
        assert_eq!(lambda, vec![1, a3 ^ a10, f.mul(a3, a10)]);
    }
}
