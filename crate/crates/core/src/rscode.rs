//! Full-length Reed-Solomon codes over GF(2^m): evaluation-map encoder,
//! symbol parity-check matrix and its binary image.

use crate::bits::BitMatrix;
use crate::error::{check_len, Error, Result};
use crate::gf::{CompanionMatrix, Elem, Field};

/// An `(n, k)` Reed-Solomon code with support `(α^0, α^1, ..., α^{n-1})`,
/// `n = q - 1`.
#[derive(Debug, Clone)]
pub struct RsCode {
    n: usize,
    k: usize,
    field: Field,
    support: Vec<Elem>,
    h_bin: BitMatrix,
}

impl RsCode {
    pub fn new(field: Field, n: usize, k: usize) -> Result<Self> {
        if n != field.order() {
            return Err(Error::InvalidParameter(format!(
                "only full-length codes are supported: n={n} but q-1={}",
                field.order()
            )));
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!(
                "dimension k={k} must satisfy 0 < k < n={n}"
            )));
        }
        let support = (0..n).map(|i| field.alpha_pow(i as i64)).collect();
        let h_bin = build_binary_parity(&field, n, k);
        Ok(RsCode {
            n,
            k,
            field,
            support,
            h_bin,
        })
    }

    /// Convenience constructor; `poly = None` picks the default primitive
    /// polynomial for `m`.
    pub fn from_params(n: usize, k: usize, m: u32, poly: Option<u32>) -> Result<Self> {
        let field = match poly {
            Some(p) => Field::new(m, p)?,
            None => Field::with_default_poly(m)?,
        };
        Self::new(field, n, k)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Bits per symbol.
    #[inline]
    pub fn m(&self) -> usize {
        self.field.m() as usize
    }

    pub fn support(&self) -> &[Elem] {
        &self.support
    }

    /// Length of the binary image, `m·n`.
    #[inline]
    pub fn n_bits(&self) -> usize {
        self.m() * self.n
    }

    #[inline]
    pub fn k_bits(&self) -> usize {
        self.m() * self.k
    }

    /// Redundancy of the binary image, `m·(n-k)`.
    #[inline]
    pub fn r_bits(&self) -> usize {
        self.m() * (self.n - self.k)
    }

    /// Symbol error-correction radius `⌊(n-k)/2⌋`.
    #[inline]
    pub fn t(&self) -> usize {
        (self.n - self.k) / 2
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Evaluates `D(x) = Σ d_i x^i` on the support set.
    pub fn encode(&self, data: &[Elem]) -> Result<Vec<Elem>> {
        check_len(self.k, data.len())?;
        Ok(self.evaluate(data))
    }

    /// Evaluates a message polynomial of degree `< k` (shorter coefficient
    /// slices are allowed) on the support set.
    pub fn evaluate(&self, coeffs: &[Elem]) -> Vec<Elem> {
        let f = &self.field;
        self.support
            .iter()
            .map(|&x| {
                coeffs
                    .iter()
                    .rev()
                    .fold(0, |acc, &c| f.add(f.mul(acc, x), c))
            })
            .collect()
    }

    /// The `(n-k) × n` matrix with entry `(i, j) = α^{(i+1)·j}`.
    pub fn symbol_parity_matrix(&self) -> Vec<Vec<Elem>> {
        (1..=self.n - self.k)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.field.alpha_pow((i * j) as i64))
                    .collect()
            })
            .collect()
    }

    /// Symbol syndromes `S_i = Σ_j u_j α^{i·j}` for `i = 1..=n-k`.
    pub fn symbol_syndromes(&self, word: &[Elem]) -> Vec<Elem> {
        let f = &self.field;
        (1..=self.n - self.k)
            .map(|i| {
                let x = f.alpha_pow(i as i64);
                word.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c))
            })
            .collect()
    }

    pub fn is_codeword(&self, word: &[Elem]) -> bool {
        word.len() == self.n && self.symbol_syndromes(word).iter().all(|&s| s == 0)
    }

    /// Binary parity-check matrix, `r̃ × ñ`.
    pub fn binary_parity_matrix(&self) -> &BitMatrix {
        &self.h_bin
    }

    /// Concatenated basis coordinates of each symbol, symbol 0 first.
    pub fn binary_image(&self, word: &[Elem]) -> Vec<u8> {
        let m = self.m();
        let mut out = Vec::with_capacity(word.len() * m);
        for &s in word {
            out.extend((0..m).map(|l| ((s >> l) & 1) as u8));
        }
        out
    }

    pub fn symbols_from_bits(&self, bits: &[u8]) -> Vec<Elem> {
        bits.chunks(self.m())
            .map(|c| self.field.from_bits(c))
            .collect()
    }

    /// True iff the bit vector satisfies every binary parity check.
    pub fn syndrome_check(&self, bits: &[u8]) -> bool {
        bits.len() == self.n_bits() && self.h_bin.annihilates(bits)
    }
}

fn build_binary_parity(field: &Field, n: usize, k: usize) -> BitMatrix {
    let m = field.m() as usize;
    let c = CompanionMatrix::new(field);
    let order = field.order();
    let mut h = BitMatrix::zeros(m * (n - k), m * n);
    for i in 0..n - k {
        for j in 0..n {
            let e = ((i + 1) * j) % order;
            for r in 0..m {
                for col in 0..m {
                    if c.entry(e, r, col) == 1 {
                        h.set(i * m + r, j * m + col, true);
                    }
                }
            }
        }
    }
    h
}

/// Number of positions in which two words differ.
pub fn hamming_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rs1511() -> RsCode {
        RsCode::from_params(15, 11, 4, None).unwrap()
    }

    fn random_data(code: &RsCode, rng: &mut impl Rng) -> Vec<Elem> {
        (0..code.k())
            .map(|_| rng.random_range(0..code.field().size()) as Elem)
            .collect()
    }

    #[test]
    fn encode_edge_cases() {
        let code = rs1511();
        assert_eq!(code.encode(&[0; 11]).unwrap(), vec![0; 15]);
        let mut d = vec![0; 11];
        d[0] = 7;
        assert_eq!(code.encode(&d).unwrap(), vec![7; 15]);
        assert!(matches!(
            code.encode(&[1; 10]),
            Err(Error::LengthMismatch {
                expected: 11,
                actual: 10
            })
        ));
    }

    #[test]
    fn codeword_polynomial_has_consecutive_roots() {
        let code = rs1511();
        let f = code.field();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u = code.encode(&random_data(&code, &mut rng)).unwrap();
            for j in 1..=4 {
                let x = f.alpha_pow(j);
                let val = u.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c));
                assert_eq!(val, 0);
            }
        }
    }

    #[test]
    fn symbol_parity_entries() {
        let code = rs1511();
        let h = code.symbol_parity_matrix();
        assert_eq!(h.len(), 4);
        assert_eq!(h[0][0], 1);
        assert_eq!(h[1][1], code.field().alpha_pow(2));
        assert_eq!(h[3][14], code.field().alpha_pow(4 * 14));
    }

    #[test]
    fn binary_parity_shape_and_identity_block() {
        let code = rs1511();
        let h = code.binary_parity_matrix();
        assert_eq!((h.rows(), h.cols()), (16, 60));
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(h.get(r, c), r == c);
            }
        }
        assert_eq!(h.rank(), 16);
    }

    #[test]
    fn encoder_parity_duality() {
        for (n, k, m) in [(15, 11, 4), (31, 25, 5), (7, 5, 3), (31, 15, 5)] {
            let code = RsCode::from_params(n, k, m, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64 * 100 + k as u64);
            for _ in 0..1000 {
                let u = code.encode(&random_data(&code, &mut rng)).unwrap();
                assert!(code.is_codeword(&u));
                let b = code.binary_image(&u);
                assert!(code.syndrome_check(&b));
            }
        }
    }

    #[test]
    fn binary_and_symbol_checks_agree_on_noncodewords() {
        let code = rs1511();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let w: Vec<Elem> = (0..15).map(|_| rng.random_range(0..16)).collect();
            assert_eq!(
                code.is_codeword(&w),
                code.syndrome_check(&code.binary_image(&w))
            );
        }
    }

    #[test]
    fn binary_image_layout() {
        let code = rs1511();
        let mut u = vec![0; 15];
        u[0] = code.field().alpha_pow(1);
        let b = code.binary_image(&u);
        assert_eq!(&b[..4], &[0, 1, 0, 0]);
        assert!(b[4..].iter().all(|&x| x == 0));
        assert_eq!(b.len(), 60);
        assert_eq!(code.symbols_from_bits(&b), u);
        assert!(code.binary_image(&[0; 15]).iter().all(|&x| x == 0));
    }

    #[test]
    fn syndrome_check_cases() {
        let code = rs1511();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(code.syndrome_check(&[0; 60]));
        for _ in 0..100 {
            let u = code.encode(&random_data(&code, &mut rng)).unwrap();
            let mut b = code.binary_image(&u);
            assert!(code.syndrome_check(&b));
            let i = rng.random_range(0..60);
            b[i] ^= 1;
            assert!(!code.syndrome_check(&b));
        }
    }

    #[test]
    fn minimum_distance_smoke() {
        let code = rs1511();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let d = random_data(&code, &mut rng);
            if d.iter().all(|&x| x == 0) {
                continue;
            }
            let u = code.encode(&d).unwrap();
            let w = u.iter().filter(|&&x| x != 0).count();
            assert!(w >= 5, "weight {w}");
        }
    }

    #[test]
    fn rejects_shortened_codes() {
        assert!(RsCode::from_params(14, 10, 4, None).is_err());
        assert!(RsCode::from_params(15, 15, 4, None).is_err());
    }
}
