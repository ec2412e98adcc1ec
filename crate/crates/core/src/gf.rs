//! Arithmetic in GF(2^m) with log/antilog tables.
//!
//! Elements are stored as their bit pattern in the polynomial basis
//! `(1, α, α², ..., α^{m-1})`: bit `l` holds the coefficient of `α^l`.

use crate::error::{Error, Result};

/// A field element in polynomial-basis bit representation.
pub type Elem = u16;

/// Conventional primitive polynomial for the given extension degree, as a
/// bit mask including the leading `x^m` term.
pub fn default_primitive_poly(m: u32) -> Option<u32> {
    let p = match m {
        2 => 0x7,
        3 => 0xb,
        4 => 0x13, // x^4 + x + 1
        5 => 0x25, // x^5 + x^2 + 1
        6 => 0x43,
        7 => 0x89,
        8 => 0x11d, // x^8 + x^4 + x^3 + x^2 + 1
        9 => 0x211,
        10 => 0x409,
        11 => 0x805,
        12 => 0x1053,
        13 => 0x201b,
        14 => 0x4443,
        15 => 0x8003,
        16 => 0x1100b,
        _ => return None,
    };
    Some(p)
}

/// GF(2^m) with precomputed log and antilog tables.
#[derive(Debug, Clone)]
pub struct Field {
    m: u32,
    poly: u32,
    /// `exp[i] = α^i`, doubled in length so products need no reduction.
    exp: Vec<Elem>,
    /// `log[β]` for β ≠ 0; `log[0]` is unused.
    log: Vec<u32>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.poly == other.poly
    }
}

impl Eq for Field {}

impl Field {
    /// Builds GF(2^m) from a primitive polynomial given as a bit mask that
    /// includes the `x^m` term.
    pub fn new(m: u32, poly: u32) -> Result<Self> {
        if !(2..=16).contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "extension degree m={m} outside 2..=16"
            )));
        }
        if poly >> m != 1 {
            return Err(Error::InvalidParameter(format!(
                "polynomial {poly:#x} does not have degree {m}"
            )));
        }
        let q = 1usize << m;
        let order = q - 1;
        let mut exp = vec![0 as Elem; 2 * order];
        let mut log = vec![0u32; q];
        let mut seen = vec![false; q];
        let mut x: u32 = 1;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            if seen[x as usize] {
                return Err(Error::InvalidParameter(format!(
                    "polynomial {poly:#x} is not primitive (α has order {i})"
                )));
            }
            seen[x as usize] = true;
            *e = x as Elem;
            log[x as usize] = i as u32;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        if x != 1 {
            return Err(Error::InvalidParameter(format!(
                "polynomial {poly:#x} is not primitive"
            )));
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(Field { m, poly, exp, log })
    }

    /// Builds the field using [`default_primitive_poly`].
    pub fn with_default_poly(m: u32) -> Result<Self> {
        let poly = default_primitive_poly(m).ok_or_else(|| {
            Error::InvalidParameter(format!("no default primitive polynomial for m={m}"))
        })?;
        Self::new(m, poly)
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Field size `q = 2^m`.
    #[inline]
    pub fn size(&self) -> usize {
        1 << self.m
    }

    /// Multiplicative group order `q - 1`.
    #[inline]
    pub fn order(&self) -> usize {
        (1 << self.m) - 1
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
        }
    }

    /// Multiplicative inverse. Panics on zero.
    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        assert!(a != 0, "inverse of zero");
        let l = self.log[a as usize] as usize;
        self.exp[(self.order() - l) % self.order()]
    }

    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Elem {
        assert!(b != 0, "division by zero");
        if a == 0 {
            return 0;
        }
        let order = self.order();
        let la = self.log[a as usize] as usize;
        let lb = self.log[b as usize] as usize;
        self.exp[(la + order - lb) % order]
    }

    /// `α^i` for any integer exponent (reduced mod `q - 1`).
    #[inline]
    pub fn alpha_pow(&self, i: i64) -> Elem {
        let order = self.order() as i64;
        self.exp[i.rem_euclid(order) as usize]
    }

    /// Discrete log base α. Panics on zero.
    #[inline]
    pub fn log(&self, a: Elem) -> u32 {
        assert!(a != 0, "log of zero");
        self.log[a as usize]
    }

    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let l = self.log[a as usize] as u64 * e % self.order() as u64;
        self.exp[l as usize]
    }

    /// Coordinates of `a` in the basis `(1, α, ..., α^{m-1})`, coefficient of
    /// `1` first.
    pub fn to_bits(&self, a: Elem) -> Vec<u8> {
        (0..self.m).map(|l| ((a >> l) & 1) as u8).collect()
    }

    pub fn from_bits(&self, bits: &[u8]) -> Elem {
        debug_assert_eq!(bits.len(), self.m as usize);
        bits.iter()
            .enumerate()
            .fold(0, |acc, (l, &b)| acc | (((b & 1) as Elem) << l))
    }

    /// Iterator over every element, zero first.
    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..(self.size() as Elem)
    }
}

/// The companion matrix of the primitive polynomial together with its
/// powers `C^0 .. C^{q-2}`.
///
/// Column `l` of `C^i` holds the bit pattern of `α^{i+l}`, so `C^i` is the
/// matrix of multiplication by `α^i` acting on basis coordinates.
#[derive(Debug, Clone)]
pub struct CompanionMatrix {
    m: usize,
    /// Each power stored as `m` column bit masks.
    powers: Vec<Vec<u32>>,
}

impl CompanionMatrix {
    pub fn new(field: &Field) -> Self {
        let m = field.m() as usize;
        let powers = (0..field.order())
            .map(|i| {
                (0..m)
                    .map(|l| field.alpha_pow((i + l) as i64) as u32)
                    .collect()
            })
            .collect();
        CompanionMatrix { m, powers }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Entry `(row, col)` of `C^i`, exponent taken mod `q - 1`.
    pub fn entry(&self, i: usize, row: usize, col: usize) -> u8 {
        let p = &self.powers[i % self.powers.len()];
        ((p[col] >> row) & 1) as u8
    }

    /// `C^i` as a dense row-major 0/1 matrix.
    pub fn power(&self, i: usize) -> Vec<Vec<u8>> {
        (0..self.m)
            .map(|r| (0..self.m).map(|c| self.entry(i, r, c)).collect())
            .collect()
    }

    /// `C^i · v` for a coordinate vector packed as a bit mask.
    pub fn apply(&self, i: usize, v: u32) -> u32 {
        let p = &self.powers[i % self.powers.len()];
        (0..self.m)
            .filter(|&l| (v >> l) & 1 == 1)
            .fold(0, |acc, l| acc ^ p[l])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf16() -> Field {
        Field::new(4, 0b10011).unwrap()
    }

    fn mat_mul(a: &[Vec<u8>], b: &[Vec<u8>]) -> Vec<Vec<u8>> {
        let n = a.len();
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| (0..n).fold(0, |acc, t| acc ^ (a[r][t] & b[t][c])))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn alpha_to_the_fourth_is_alpha_plus_one() {
        let f = gf16();
        // Walk the table by repeated multiplication by x and reduction.
        let mut x = 1u32;
        for _ in 0..4 {
            x <<= 1;
            if x & 0x10 != 0 {
                x ^= 0b10011;
            }
        }
        assert_eq!(x, 0b0011);
        assert_eq!(f.alpha_pow(4), 0b0011);
    }

    #[test]
    fn characteristic_two_and_inverse() {
        let f = gf16();
        for b in f.elements() {
            assert_eq!(f.add(b, b), 0);
        }
        let b = f.alpha_pow(5);
        assert_eq!(f.mul(b, f.inv(b)), 1);
    }

    #[test]
    fn rejects_non_primitive() {
        // x^4 + x^3 + x^2 + x + 1 is irreducible but α has order 5.
        assert!(Field::new(4, 0b11111).is_err());
        // wrong degree
        assert!(Field::new(4, 0b1011).is_err());
        assert!(Field::new(1, 0b11).is_err());
    }

    #[test]
    fn log_antilog_consistent_and_alpha_generates() {
        for m in 2..=10 {
            let f = Field::with_default_poly(m).unwrap();
            let mut seen = vec![false; f.size()];
            for i in 0..f.order() {
                let b = f.alpha_pow(i as i64);
                assert!(!seen[b as usize]);
                seen[b as usize] = true;
                assert_eq!(f.log(b) as usize, i);
            }
            for b in 1..f.size() as Elem {
                assert_eq!(f.alpha_pow(f.log(b) as i64), b);
            }
        }
    }

    #[test]
    fn primitive_poly_vanishes_at_alpha() {
        for m in 2..=16 {
            let f = Field::with_default_poly(m).unwrap();
            let p = f.poly();
            let mut acc = 0;
            for l in 0..=m {
                if (p >> l) & 1 == 1 {
                    acc ^= f.alpha_pow(l as i64);
                }
            }
            assert_eq!(acc, 0, "m={m}");
        }
    }

    fn check_axioms(f: &Field) {
        for a in f.elements() {
            for b in f.elements() {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for c in f.elements() {
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }

    #[test]
    fn field_axioms_gf16_gf32() {
        check_axioms(&gf16());
        check_axioms(&Field::with_default_poly(5).unwrap());
    }

    #[test]
    fn companion_powers() {
        let f = gf16();
        let c = CompanionMatrix::new(&f);
        let id: Vec<Vec<u8>> = (0..4)
            .map(|r| (0..4).map(|cc| (r == cc) as u8).collect())
            .collect();
        assert_eq!(c.power(15), id);
        assert_eq!(c.power(0), id);
        // C · e_0 = bits of α
        assert_eq!(c.apply(1, 0b0001), 0b0010);
        for i in 0..15 {
            for j in 0..15 {
                assert_eq!(mat_mul(&c.power(i), &c.power(j)), c.power((i + j) % 15));
            }
        }
        // multiplication map agrees with field multiplication
        for i in 0..15 {
            for b in f.elements() {
                assert_eq!(
                    c.apply(i, b as u32) as Elem,
                    f.mul(f.alpha_pow(i as i64), b)
                );
            }
        }
    }

    #[test]
    fn symbol_bits_round_trip() {
        let f = gf16();
        assert_eq!(f.to_bits(0), vec![0, 0, 0, 0]);
        assert_eq!(f.to_bits(f.alpha_pow(1)), vec![0, 1, 0, 0]);
        for b in f.elements() {
            assert_eq!(f.from_bits(&f.to_bits(b)), b);
        }
    }
}
